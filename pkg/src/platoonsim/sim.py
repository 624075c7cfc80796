"""Discrete-event simulation of the scheduling disciplines.

Vertical-queue model: a vehicle entering the control region at entry time e
can reach the stop line no earlier than a = e + free_flow_offset, and every
vehicle shares the same offset, so delays (c - a) are unaffected by it. The
simulator therefore works directly on the earliest-crossing times a.

Two execution paths produce bit-identical results: the array kernel in
_kernels (numba-compiled unless PLATOONSIM_NO_NUMBA=1) and the object-level
reference runner built on the pfa module. The kernel is the fast path for
sweeps; the reference is the semantic anchor the tests compare against.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .core import (
    GateBook,
    InconsistentGateBook,
    PlatoonError,
    RunConfig,
    Schedule,
    SimParams,
    Vehicle,
    validate_params,
)
from .pfa import depart, gap_violations, schedule_batch, schedule_exhaustive, schedule_gated
from .polling import DISCIPLINES, PollingInput, approx_mean_delay

__all__ = [
    "N_BATCHES",
    "T_95_19DF",
    "LaneStats",
    "RunResult",
    "make_arrivals",
    "batch_means_ci",
    "run",
    "run_reference",
    "sweep",
    "sweep_rows",
    "RUN_CSV_HEADER",
]

N_BATCHES = 20
T_95_19DF = 2.093  # Student-t 0.975 quantile at 19 dof, for 20 batch means

RUN_CSV_HEADER = (
    "rho",
    "discipline",
    "lane",
    "sim_delay_mean",
    "ci95",
    "approx_delay",
    "fairness",
    "n_vehicles",
    "seed",
)

_KIND_CODE = {
    "exhaustive": _kernels.KIND_EXHAUSTIVE,
    "gated": _kernels.KIND_GATED,
    "batch": _kernels.KIND_BATCH,
}


# ===================== arrival streams =====================

def make_arrivals(params: SimParams, n_total: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """First n_total merged Poisson arrivals, one RNG stream per lane.

    Returns (entry_times float64[n_total], lanes int64[n_total] 0-based),
    merged in time order. Lane streams come from SeedSequence(seed).spawn,
    so the same seed and parameters reproduce the same arrivals exactly,
    independently of the discipline they are later scheduled under. Streams
    are extended until the merged prefix is provably uncensored (every lane
    generated past the n_total-th merged arrival).
    """
    if n_total <= 0:
        return np.empty(0, np.float64), np.empty(0, np.int64)
    children = np.random.SeedSequence(seed).spawn(params.n)
    gens = [np.random.Generator(np.random.PCG64(c)) for c in children]
    lam_total = sum(params.lam)
    times: List[np.ndarray] = []
    for lane0, gen in enumerate(gens):
        lam = params.lam[lane0]
        size = int(n_total * (lam / lam_total) * 1.2) + 64
        times.append(np.cumsum(gen.exponential(1.0 / lam, size)))
    while True:
        merged_len = sum(t.size for t in times)
        if merged_len >= n_total:
            horizon = np.partition(np.concatenate(times), n_total - 1)[n_total - 1]
            short = [i for i, t in enumerate(times) if t[-1] < horizon]
            if not short:
                break
        else:
            short = list(range(params.n))
        for lane0 in short:
            lam = params.lam[lane0]
            grow = max(64, times[lane0].size // 2)
            more = times[lane0][-1] + np.cumsum(gens[lane0].exponential(1.0 / lam, grow))
            times[lane0] = np.concatenate([times[lane0], more])
    entry = np.concatenate(times)
    lanes = np.concatenate(
        [np.full(t.size, lane0, np.int64) for lane0, t in enumerate(times)]
    )
    order = np.argsort(entry, kind="stable")
    return entry[order][:n_total], lanes[order][:n_total]


def _scripted_arrays(config: RunConfig) -> Tuple[np.ndarray, np.ndarray]:
    arr = config.arrivals or []
    entry = np.array([t for _, t in arr], np.float64)
    lanes = np.array([lane - 1 for lane, _ in arr], np.int64)
    return entry, lanes


# ===================== results =====================

@dataclass
class LaneStats:
    lane: int           # 1-based lane index
    mean: float         # mean delay over the lane's post-warmup arrivals (s)
    ci95: float         # batch-means 95% half-width (s); NaN if undersampled
    n: int              # post-warmup arrivals on the lane


@dataclass
class RunResult:
    """One simulation run: per-vehicle schedule plus summary statistics."""

    discipline: str
    seed: int
    warmup: int
    entry: np.ndarray       # control-region entry time per vehicle (s)
    a: np.ndarray           # earliest feasible crossing time (s)
    lane0: np.ndarray       # 0-based lane per vehicle
    c: np.ndarray           # scheduled (final) crossing time per vehicle (s)
    mean: float             # mean delay, post-warmup (s)
    ci95: float             # batch-means 95% half-width (s)
    fairness: float         # sum(ahead) / sum(present) over post-warmup arrivals
    lanes: List[LaneStats]
    max_queue: int
    fallback_count: int

    @property
    def delay(self) -> np.ndarray:
        return self.c - self.a

    def vehicle_records(self) -> List[dict]:
        """Per-vehicle log records: {id, lane, entry_t, a, c, delay}."""
        d = self.delay
        return [
            {
                "id": int(i),
                "lane": int(self.lane0[i]) + 1,
                "entry_t": float(self.entry[i]),
                "a": float(self.a[i]),
                "c": float(self.c[i]),
                "delay": float(d[i]),
            }
            for i in range(self.a.size)
        ]


def batch_means_ci(x: np.ndarray, n_batches: int = N_BATCHES) -> float:
    """95% half-width from contiguous batch means; NaN when undersampled."""
    if x.size < n_batches * 2:
        return float("nan")
    means = np.array([b.mean() for b in np.array_split(x, n_batches)])
    s = means.std(ddof=1)
    return float(T_95_19DF * s / np.sqrt(n_batches))


def _summarize(
    discipline: str,
    seed: int,
    warmup: int,
    entry: np.ndarray,
    a: np.ndarray,
    lane0: np.ndarray,
    c: np.ndarray,
    sum_ahead: int,
    sum_total: int,
    max_queue: int,
    fallback_count: int,
    n_lanes: int,
) -> RunResult:
    if not np.isfinite(c).all():
        raise PlatoonError("internal error: some vehicles were never scheduled")
    delay = c - a
    post = delay[warmup:]
    mean = float(post.mean()) if post.size else float("nan")
    ci = batch_means_ci(post)
    fairness = (sum_ahead / sum_total) if sum_total > 0 else float("nan")
    lanes = []
    post_lane = lane0[warmup:]
    for i in range(n_lanes):
        sel = post[post_lane == i]
        lanes.append(
            LaneStats(
                lane=i + 1,
                mean=float(sel.mean()) if sel.size else float("nan"),
                ci95=batch_means_ci(sel),
                n=int(sel.size),
            )
        )
    return RunResult(
        discipline=discipline,
        seed=seed,
        warmup=warmup,
        entry=entry,
        a=a,
        lane0=lane0,
        c=c,
        mean=mean,
        ci95=ci,
        fairness=fairness,
        lanes=lanes,
        max_queue=max_queue,
        fallback_count=fallback_count,
    )


def _prepare(config: RunConfig, steady_state: bool) -> Tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Arrival arrays (entry, a, lane0) and the resolved warmup count."""
    validate_params(config.params, steady_state=steady_state)
    if config.pfa not in _KIND_CODE:
        raise PlatoonError(f"unknown discipline {config.pfa!r}")
    if config.arrivals is not None:
        entry, lane0 = _scripted_arrays(config)
        warmup = config.warmup_vehicles or 0
    else:
        entry, lane0 = make_arrivals(config.params, config.horizon_vehicles, config.seed)
        warmup = config.resolved_warmup()
    a = entry + config.params.free_flow_offset
    if warmup >= entry.size and entry.size:
        raise PlatoonError(
            f"warmup {warmup} leaves no post-warmup arrivals out of {entry.size}"
        )
    return entry, a, lane0, warmup


# ===================== kernel path =====================

def run(config: RunConfig, check: bool = False, steady_state: bool = True) -> RunResult:
    """Simulate one run through the array kernel.

    check=True re-verifies every scheduling invariant after each arrival
    inside the kernel (slow; used by tests and the invariant sweep).
    """
    entry, a, lane0, warmup = _prepare(config, steady_state)
    params = config.params
    b = np.asarray(params.B, np.float64)
    s = np.asarray(params.S, np.float64)
    final_c, sum_ahead, sum_total, max_queue, fallback_count, _departed, status, status_arrival = (
        _kernels.simulate_arrivals(
            a,
            lane0,
            params.n,
            b,
            s,
            _KIND_CODE[config.pfa],
            config.batch_cap,
            warmup,
            check,
        )
    )
    if status == _kernels.ERR_GATE_OVERFLOW:
        raise InconsistentGateBook(
            f"live platoon ring overflow at arrival {status_arrival}"
        )
    if status == _kernels.ERR_GATE_BOOKKEEPING:
        raise InconsistentGateBook(
            f"platoon bookkeeping diverged from the schedule at arrival {status_arrival}"
        )
    if status == _kernels.ERR_INVARIANT:
        raise PlatoonError(
            f"scheduling invariant violated at arrival {status_arrival}"
        )
    return _summarize(
        config.pfa,
        config.seed,
        warmup,
        entry,
        a,
        lane0,
        final_c,
        sum_ahead,
        sum_total,
        max_queue,
        fallback_count,
        params.n,
    )


# ===================== reference path =====================

def run_reference(config: RunConfig, check: bool = False, steady_state: bool = True) -> RunResult:
    """Simulate one run through the object-level scheduler (pfa module).

    Bit-identical to run() by construction; the tests assert it. check=True
    validates the gap invariant and the platoon book after every arrival.
    """
    entry, a, lane0, warmup = _prepare(config, steady_state)
    params = config.params
    kind = config.pfa
    sched = Schedule(params.n)
    gates: Optional[GateBook] = None if kind == "exhaustive" else GateBook(params.n)

    n = a.size
    final_c = np.full(n, np.nan)
    sum_ahead = 0
    sum_total = 0
    max_queue = 0
    for k in range(n):
        now = float(a[k])
        while sched.ordering:
            head = sched.ordering[0]
            due = head.c + params.B_of(head.lane)
            if due <= now:
                gone = depart(sched, gates, due, params)
                final_c[gone.id] = gone.c
            else:
                break
        v0 = Vehicle(id=k, lane=int(lane0[k]) + 1, a=now)
        n_before = len(sched)
        if kind == "exhaustive":
            schedule_exhaustive(sched, v0, params)
        elif kind == "gated":
            schedule_gated(sched, gates, v0, params)
        else:
            schedule_batch(sched, gates, v0, params, config.batch_cap)
        if k >= warmup:
            sum_ahead += sched.ordering.index(v0)
            sum_total += n_before
        if len(sched) > max_queue:
            max_queue = len(sched)
        if check:
            problems = gap_violations(sched, params)
            if problems:
                raise PlatoonError(f"after arrival {k}: {problems[0]}")
            if gates is not None:
                gates.validate()
    for v in sched.ordering:
        final_c[v.id] = v.c
    return _summarize(
        kind,
        config.seed,
        warmup,
        entry,
        a,
        lane0,
        final_c,
        sum_ahead,
        sum_total,
        max_queue,
        sched.fallback_count,
        params.n,
    )


# ===================== sweeps =====================

def _thread_count(requested: Optional[int], n_tasks: int) -> int:
    if requested is not None:
        return max(1, requested)
    env = os.environ.get("PLATOONSIM_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return max(1, min(n_tasks, os.cpu_count() or 1))


def _overall_approx(params: SimParams, discipline: str) -> Optional[float]:
    """Arrival-weighted mean of the per-lane interpolated delays."""
    if discipline not in DISCIPLINES or params.rho >= 1.0:
        return None
    inp = PollingInput.from_sim_params(params)
    lam_total = sum(params.lam)
    return sum(
        params.lam[i] * approx_mean_delay(inp, discipline, i + 1) for i in range(params.n)
    ) / lam_total


def _point_rows(
    base: SimParams,
    rho: float,
    disciplines: Sequence[str],
    horizon: int,
    seed: int,
    batch_cap: int,
    steady_state: bool,
) -> List[Dict[str, object]]:
    params = base.with_rho(rho)
    stable = params.rho < 1.0
    inp = PollingInput.from_sim_params(params) if stable else None
    rows: List[Dict[str, object]] = []
    for disc in disciplines:
        config = RunConfig(
            params=params,
            pfa=disc,
            batch_cap=batch_cap,
            horizon_vehicles=horizon,
            seed=seed,
        )
        res = run(config, steady_state=steady_state)
        post_n = res.a.size - res.warmup
        rows.append(
            {
                "rho": rho,
                "discipline": disc,
                "lane": "all",
                "sim_delay_mean": res.mean,
                "ci95": res.ci95,
                "approx_delay": _overall_approx(params, disc),
                "fairness": res.fairness,
                "n_vehicles": post_n,
                "seed": seed,
            }
        )
        for ls in res.lanes:
            approx = (
                approx_mean_delay(inp, disc, ls.lane)
                if disc in DISCIPLINES and inp is not None
                else None
            )
            rows.append(
                {
                    "rho": rho,
                    "discipline": disc,
                    "lane": ls.lane,
                    "sim_delay_mean": ls.mean,
                    "ci95": ls.ci95,
                    "approx_delay": approx,
                    "fairness": None,
                    "n_vehicles": ls.n,
                    "seed": seed,
                }
            )
    return rows


def _lane_sort_key(value: object) -> int:
    return -1 if value == "all" else int(value)  # aggregate row leads its group


def sweep_rows(
    base: SimParams,
    rhos: Sequence[float],
    disciplines: Sequence[str],
    horizon: int,
    base_seed: int,
    batch_cap: int = 100,
    threads: Optional[int] = None,
    steady_state: bool = True,
) -> List[Dict[str, object]]:
    """Run a load sweep; returns run-CSV rows sorted by (rho, discipline, lane).

    Grid point i uses seed base_seed + i, and all disciplines at a point see
    exactly the same arrivals. Points run in a thread pool (the compiled
    kernel releases the GIL); row order is fixed by sorting, independent of
    scheduling.
    """
    for d in disciplines:
        if d not in _KIND_CODE:
            raise PlatoonError(f"unknown discipline {d!r}")
    tasks = [(rho, base_seed + i) for i, rho in enumerate(rhos)]
    workers = _thread_count(threads, len(tasks))
    if workers == 1:
        results = [
            _point_rows(base, rho, disciplines, horizon, seed, batch_cap, steady_state)
            for rho, seed in tasks
        ]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(
                    _point_rows, base, rho, disciplines, horizon, seed, batch_cap, steady_state
                )
                for rho, seed in tasks
            ]
            results = [f.result() for f in futures]
    rows = [row for chunk in results for row in chunk]
    rows.sort(key=lambda r: (r["rho"], r["discipline"], _lane_sort_key(r["lane"])))
    return rows


def sweep(
    base: SimParams,
    rhos: Sequence[float],
    disciplines: Sequence[str] = ("exhaustive", "gated", "batch"),
    horizon: int = 100_000,
    base_seed: int = 1,
    batch_cap: int = 100,
    threads: Optional[int] = None,
) -> List[Dict[str, object]]:
    """Alias of sweep_rows with the shipped experiment defaults."""
    return sweep_rows(base, rhos, disciplines, horizon, base_seed, batch_cap, threads)
