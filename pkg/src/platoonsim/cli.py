"""Command-line front end: runs, sweeps, analysis tables, trajectories.

Four subcommands, one JSON config schema, CSV/JSONL artifacts written
atomically into an output directory. Exit codes: 0 success, 1 internal
scheduling error, 2 configuration or usage error, 3 unstable load without
--transient.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from typing import Dict, List, Optional, Sequence

from .core import (
    ConfigError,
    PlatoonError,
    RunConfig,
    SimParams,
    UnstableLoad,
    Vehicle,
    load_config,
)
from .polling import (
    DISCIPLINES,
    PollingInput,
    UnsupportedDiscipline,
    approx_coefficients,
    approx_mean_delay,
)
from . import sim
from . import spa

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_UNSTABLE = 3

PFA_KINDS = ("exhaustive", "gated", "batch")

APPROX_CSV_HEADER = ("rho", "lane", "discipline", "K1", "K2", "omega", "approx_delay")


# ===================== small helpers =====================

def _fmt(x: object) -> str:
    """One CSV cell: fixed 10-significant-digit floats, blanks for missing."""
    if x is None:
        return ""
    if isinstance(x, float):
        if x != x:  # NaN: undersampled statistic
            return ""
        return f"{x:.10g}"
    return str(x)


def _atomic_write_text(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_csv(path: str, header: Sequence[str], rows: Sequence[Dict[str, object]]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(row[k]) for k in header])
    _atomic_write_text(path, buf.getvalue())


def _parse_rho_grid(text: str) -> List[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--rho must be A:B:STEP, got {text!r}")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"--rho must be numeric A:B:STEP: {exc}") from exc
    if step <= 0 or hi < lo:
        raise ConfigError(f"--rho needs STEP > 0 and B >= A, got {text!r}")
    count = int((hi - lo) / step + 1e-9) + 1
    return [round(lo + i * step, 10) for i in range(count)]


def _parse_pfa_list(text: str) -> List[str]:
    out = []
    for item in text.split(","):
        name = item.strip()
        if not name:
            continue
        if name not in PFA_KINDS:
            raise ConfigError(f"unknown discipline {name!r}; choose from {PFA_KINDS}")
        if name not in out:
            out.append(name)
    if not out:
        raise ConfigError("--pfa selected no disciplines")
    return out


def _apply_asymmetric(params: SimParams) -> SimParams:
    """Rescale arrival rates to the 3:1 load split, keeping the total load."""
    if params.n != 2:
        raise ConfigError(f"--asymmetric needs a 2-lane config, got n={params.n}")
    total = params.rho
    lam1 = 3.0 * total / (4.0 * params.B[0])
    lam2 = total / (4.0 * params.B[1])
    return SimParams(
        n=params.n,
        lam=(lam1, lam2),
        B=params.B,
        S=params.S,
        v_max=params.v_max,
        a_max=params.a_max,
        l_min=params.l_min,
        region_pfa_m=params.region_pfa_m,
        region_spa_m=params.region_spa_m,
    )


def _load(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if getattr(args, "asymmetric", False):
        cfg.params = _apply_asymmetric(cfg.params)
    os.makedirs(args.out, exist_ok=True)
    return cfg


# ===================== subcommands =====================

def cmd_run(args: argparse.Namespace) -> int:
    cfg = _load(args)
    if args.pfa is not None:
        kinds = _parse_pfa_list(args.pfa)
        if len(kinds) != 1:
            raise ConfigError("run takes exactly one --pfa discipline")
        cfg.pfa = kinds[0]
    res = sim.run(cfg, steady_state=not args.transient)
    params = cfg.params
    rho = params.rho
    inp = PollingInput.from_sim_params(params) if rho < 1.0 else None

    def approx_for(lane: Optional[int]) -> Optional[float]:
        if cfg.pfa not in DISCIPLINES or inp is None:
            return None
        if lane is None:
            lam_total = sum(params.lam)
            return sum(
                params.lam[i] * approx_mean_delay(inp, cfg.pfa, i + 1)
                for i in range(params.n)
            ) / lam_total
        return approx_mean_delay(inp, cfg.pfa, lane)

    post_n = res.a.size - res.warmup
    rows: List[Dict[str, object]] = [
        {
            "rho": rho,
            "discipline": cfg.pfa,
            "lane": "all",
            "sim_delay_mean": res.mean,
            "ci95": res.ci95,
            "approx_delay": approx_for(None),
            "fairness": res.fairness,
            "n_vehicles": post_n,
            "seed": cfg.seed,
        }
    ]
    for ls in res.lanes:
        rows.append(
            {
                "rho": rho,
                "discipline": cfg.pfa,
                "lane": ls.lane,
                "sim_delay_mean": ls.mean,
                "ci95": ls.ci95,
                "approx_delay": approx_for(ls.lane),
                "fairness": None,
                "n_vehicles": ls.n,
                "seed": cfg.seed,
            }
        )
    _write_csv(os.path.join(args.out, "results.csv"), sim.RUN_CSV_HEADER, rows)

    log_lines = [json.dumps(rec) for rec in res.vehicle_records()]
    _atomic_write_text(
        os.path.join(args.out, "vehicles.jsonl"), "\n".join(log_lines) + "\n"
    )
    print(
        f"run: {cfg.pfa} rho={rho:.6g} mean_delay={res.mean:.6g} "
        f"fairness={res.fairness:.6g} -> {args.out}/results.csv, vehicles.jsonl"
    )
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _load(args)
    rhos = _parse_rho_grid(args.rho)
    kinds = _parse_pfa_list(args.pfa) if args.pfa is not None else list(PFA_KINDS)
    if not args.transient:
        for rho in rhos:
            if rho >= 1.0:
                raise UnstableLoad(f"sweep point rho={rho} >= 1 (use --transient to allow)")
    rows = sim.sweep_rows(
        cfg.params,
        rhos,
        kinds,
        horizon=cfg.horizon_vehicles,
        base_seed=cfg.seed,
        batch_cap=cfg.batch_cap,
        steady_state=not args.transient,
    )
    path = os.path.join(args.out, "delay_sweep.csv")
    _write_csv(path, sim.RUN_CSV_HEADER, rows)
    print(f"sweep: {len(rhos)} points x {len(kinds)} disciplines -> {path}")
    return EXIT_OK


def cmd_approx(args: argparse.Namespace) -> int:
    cfg = _load(args)
    rhos = _parse_rho_grid(args.rho)
    kinds = _parse_pfa_list(args.pfa) if args.pfa is not None else list(DISCIPLINES)
    for kind in kinds:
        if kind not in DISCIPLINES:
            raise UnsupportedDiscipline(
                f"no analytic delay form for {kind!r}; choose from {DISCIPLINES}"
            )
    for rho in rhos:
        if rho >= 1.0:
            raise UnstableLoad(f"approximation undefined at rho={rho} >= 1")
    rows: List[Dict[str, object]] = []
    for rho in rhos:
        params = cfg.params.with_rho(rho)
        inp = PollingInput.from_sim_params(params)
        for kind in kinds:
            for lane in range(1, params.n + 1):
                coef = approx_coefficients(inp, kind, lane)
                rows.append(
                    {
                        "rho": rho,
                        "lane": lane,
                        "discipline": kind,
                        "K1": coef.k1,
                        "K2": coef.k2,
                        "omega": coef.omega,
                        "approx_delay": approx_mean_delay(inp, kind, lane),
                    }
                )
    rows.sort(key=lambda r: (r["rho"], r["discipline"], r["lane"]))
    path = os.path.join(args.out, "approx.csv")
    _write_csv(path, APPROX_CSV_HEADER, rows)
    print(f"approx: {len(rhos)} points x {len(kinds)} disciplines -> {path}")
    return EXIT_OK


def cmd_traj(args: argparse.Namespace) -> int:
    cfg = _load(args)
    if cfg.arrivals is None:
        raise ConfigError("traj needs a config with a scripted 'arrivals' list")
    if args.pfa is not None:
        kinds = _parse_pfa_list(args.pfa)
        if len(kinds) != 1:
            raise ConfigError("traj takes exactly one --pfa discipline")
        cfg.pfa = kinds[0]
    res = sim.run_reference(cfg, check=True, steady_state=not args.transient)
    vehicles = [
        Vehicle(id=i, lane=int(res.lane0[i]) + 1, a=float(res.a[i]), c=float(res.c[i]))
        for i in range(res.a.size)
    ]
    planned = spa.plan_schedule(vehicles, cfg.params, kind=args.spa, best_effort=True)
    for vid, err in planned.failures:
        print(f"vehicle {vid}: {err}", file=sys.stderr)

    seg_path = os.path.join(args.out, "traj_segments.csv")
    spa.write_segments_csv(planned.trajectories, seg_path + ".tmp")
    os.replace(seg_path + ".tmp", seg_path)
    sam_path = os.path.join(args.out, "traj_sampled.csv")
    spa.write_sampled_csv(planned.trajectories, sam_path + ".tmp")
    os.replace(sam_path + ".tmp", sam_path)
    print(
        f"traj: {len(planned.trajectories)} trajectories ({len(planned.failures)} failed)"
        f" -> {seg_path}, {sam_path}"
    )
    return EXIT_OK


# ===================== entry point =====================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="platoonsim",
        description="Intersection platoon scheduling: simulation, analysis, trajectories.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, rho_default: Optional[str] = None) -> None:
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--pfa", default=None, help="comma-separated disciplines")
        p.add_argument(
            "--transient",
            action="store_true",
            help="allow rho >= 1 (no steady state; statistics are transient)",
        )
        if rho_default is not None:
            p.add_argument(
                "--rho",
                default=rho_default,
                help=f"load grid A:B:STEP (default {rho_default})",
            )

    p_run = sub.add_parser("run", help="one simulation: results.csv + vehicles.jsonl")
    common(p_run)
    p_run.set_defaults(fn=cmd_run)

    p_sweep = sub.add_parser("sweep", help="load sweep: delay_sweep.csv")
    common(p_sweep, rho_default="0.1:0.9:0.1")
    p_sweep.add_argument(
        "--asymmetric",
        action="store_true",
        help="rescale arrival rates to the 3:1 load split (2 lanes)",
    )
    p_sweep.set_defaults(fn=cmd_sweep)

    p_approx = sub.add_parser("approx", help="analysis table: approx.csv")
    common(p_approx, rho_default="0.1:0.9:0.1")
    p_approx.add_argument(
        "--asymmetric",
        action="store_true",
        help="rescale arrival rates to the 3:1 load split (2 lanes)",
    )
    p_approx.set_defaults(fn=cmd_approx)

    p_traj = sub.add_parser(
        "traj", help="trajectories for a scripted scenario: traj_segments.csv + traj_sampled.csv"
    )
    common(p_traj)
    p_traj.add_argument(
        "--spa",
        choices=("min-distance", "min-accel"),
        default="min-distance",
        help="speed-profile objective (default min-distance)",
    )
    p_traj.set_defaults(fn=cmd_traj)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UnstableLoad as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except (ConfigError, UnsupportedDiscipline) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PlatoonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
