"""Domain types, configuration, and validation shared by the whole package.

The central objects are Vehicle (lane, earliest crossing time, scheduled
crossing time), SimParams (intersection geometry and traffic parameters),
Schedule (the crossing-time ordering maintained by the scheduling
algorithms) and GateBook (per-lane platoon start/end bookkeeping used by
the gated and batch disciplines).
"""
from __future__ import annotations

import bisect
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

__all__ = [
    "PlatoonError",
    "NonPositiveParameter",
    "SClearanceBelowB",
    "UnstableLoad",
    "ConfigError",
    "InconsistentGateBook",
    "DepartureOutOfOrder",
    "NoInsertionPoint",
    "Vehicle",
    "SimParams",
    "Schedule",
    "PlatoonEntry",
    "GateBook",
    "RunConfig",
    "validate_params",
    "load_config",
    "parse_config",
]


# ===================== errors =====================

class PlatoonError(Exception):
    """Base class for all domain errors raised by this package."""


class NonPositiveParameter(PlatoonError):
    """A parameter that must be strictly positive is zero or negative."""


class SClearanceBelowB(PlatoonError):
    """Cross-lane clearance S must be at least the same-lane headway B."""


class UnstableLoad(PlatoonError):
    """Total load rho >= 1; steady-state statistics are undefined."""


class ConfigError(PlatoonError):
    """Configuration file is missing, malformed, or has unknown keys."""


class InconsistentGateBook(PlatoonError):
    """Internal platoon bookkeeping violated an invariant (implementation bug)."""


class DepartureOutOfOrder(PlatoonError):
    """depart() was called at a time that does not match the head vehicle."""


class NoInsertionPoint(PlatoonError):
    """No scheduling branch applied (resolved internally by the fallback)."""


# ===================== vehicles and parameters =====================

@dataclass
class Vehicle:
    id: int                 # unique integer, assigned in arrival order
    lane: int               # lane index, 1..n
    a: float                # earliest feasible crossing time (s)
    c: float = math.nan     # scheduled crossing time (s); NaN until scheduled

    @property
    def delay(self) -> float:
        """Scheduled minus earliest crossing time (s)."""
        return self.c - self.a


PerLane = Union[float, Sequence[float]]


def _per_lane(value: PerLane, n: int, name: str) -> Tuple[float, ...]:
    """Normalize a scalar-or-sequence parameter to an n-tuple of floats."""
    if isinstance(value, (int, float)):
        return (float(value),) * n
    vals = tuple(float(v) for v in value)
    if len(vals) != n:
        raise ConfigError(f"{name} must be a scalar or a sequence of length n={n}, got {len(vals)} values")
    return vals


@dataclass
class SimParams:
    n: int = 2                                  # number of lanes
    lam: Tuple[float, ...] = (0.25, 0.25)       # Poisson arrival rate per lane (veh/s)
    B: PerLane = 1.0                            # same-lane crossing headway (s)
    S: PerLane = 2.375                          # clearance before a crossing from a different lane (s)
    v_max: float = 15.0                         # full speed (m/s)
    a_max: float = 4.0                          # maximum acceleration magnitude (m/s^2)
    l_min: float = 5.0                          # minimum front-to-front spacing (m)
    region_pfa_m: float = 100.0                 # length of the scheduling sub-region (m)
    region_spa_m: float = 300.0                 # length of the speed-profiling sub-region (m)

    def __post_init__(self) -> None:
        self.lam = tuple(float(x) for x in self.lam)
        self.B = _per_lane(self.B, self.n, "B")
        self.S = _per_lane(self.S, self.n, "S")

    # Per-lane accessors take 1-based lane indices, like Vehicle.lane.
    def B_of(self, lane: int) -> float:
        return self.B[lane - 1]

    def S_of(self, lane: int) -> float:
        return self.S[lane - 1]

    @property
    def rho(self) -> float:
        """Total load: sum of lambda_i * B_i (volume-to-capacity ratio)."""
        return sum(l * b for l, b in zip(self.lam, self.B))

    @property
    def free_flow_offset(self) -> float:
        """Control-region traversal time at full speed (s)."""
        return (self.region_pfa_m + self.region_spa_m) / self.v_max

    def with_rho(self, rho: float) -> "SimParams":
        """Copy with all arrival rates scaled so the total load equals rho."""
        cur = self.rho
        if cur <= 0.0:
            raise NonPositiveParameter("cannot rescale arrival rates from zero load")
        scale = rho / cur
        return SimParams(
            n=self.n,
            lam=tuple(l * scale for l in self.lam),
            B=self.B,
            S=self.S,
            v_max=self.v_max,
            a_max=self.a_max,
            l_min=self.l_min,
            region_pfa_m=self.region_pfa_m,
            region_spa_m=self.region_spa_m,
        )


def validate_params(params: SimParams, steady_state: bool = True) -> SimParams:
    """Check SimParams invariants; return the params unchanged if they hold.

    Raises NonPositiveParameter or SClearanceBelowB on hard violations.
    A load rho >= 1 raises UnstableLoad when steady_state is True and only
    warns otherwise (transient runs are allowed to be overloaded).
    """
    if params.n < 1:
        raise NonPositiveParameter(f"n must be >= 1, got {params.n}")
    if len(params.lam) != params.n:
        raise ConfigError(f"lambda must have n={params.n} entries, got {len(params.lam)}")
    scalars = [
        ("v_max", params.v_max),
        ("a_max", params.a_max),
        ("l_min", params.l_min),
        ("region_pfa_m", params.region_pfa_m),
        ("region_spa_m", params.region_spa_m),
    ]
    for name, val in scalars:
        if not val > 0.0:
            raise NonPositiveParameter(f"{name} must be > 0, got {val}")
    for i, lam in enumerate(params.lam, start=1):
        if not lam > 0.0:
            raise NonPositiveParameter(f"lambda[{i}] must be > 0, got {lam}")
    for i, b in enumerate(params.B, start=1):
        if not b > 0.0:
            raise NonPositiveParameter(f"B[{i}] must be > 0, got {b}")
    for i, s in enumerate(params.S, start=1):
        if not s > 0.0:
            raise NonPositiveParameter(f"S[{i}] must be > 0, got {s}")
    # The scheduling fallback needs every clearance to cover every headway.
    if min(params.S) < max(params.B):
        raise SClearanceBelowB(f"min(S)={min(params.S)} < max(B)={max(params.B)}")
    rho = params.rho
    if rho >= 1.0:
        if steady_state:
            raise UnstableLoad(f"rho={rho:.4f} >= 1")
        warnings.warn(f"rho={rho:.4f} >= 1: transient run, no steady state exists", stacklevel=2)
    return params


# ===================== schedule =====================

class Schedule:
    """Crossing plan: vehicles sorted by scheduled time, plus departure history.

    The ordering is kept sorted by (c, id); ties in c are impossible by
    construction (consecutive gaps are at least B > 0) but the id tiebreak
    keeps sorting deterministic anyway.
    """

    def __init__(self, n: int):
        self.n = n
        self.ordering: List[Vehicle] = []
        self.last_departed: Optional[Vehicle] = None
        self.fallback_count = 0  # times the schedulers hit the tie-only fallback branch

    def last(self) -> Optional[Vehicle]:
        """Last vehicle in the ordering, or the last departed one if empty."""
        if self.ordering:
            return self.ordering[-1]
        return self.last_departed

    def t_lane(self, lane: int) -> Optional[float]:
        """Crossing time of the last scheduled vehicle in a lane, or None."""
        for v in reversed(self.ordering):
            if v.lane == lane:
                return v.c
        return None

    def insert(self, vehicle: Vehicle) -> int:
        """Insert a scheduled vehicle; returns its position in the ordering."""
        pos = bisect.bisect_right(self.ordering, (vehicle.c, vehicle.id), key=lambda w: (w.c, w.id))
        self.ordering.insert(pos, vehicle)
        return pos

    def shift_after(self, anchor: float, delta: float) -> None:
        """Add delta to the crossing time of every vehicle with c > anchor."""
        start = bisect.bisect_right(self.ordering, anchor, key=lambda w: w.c)
        for v in self.ordering[start:]:
            v.c += delta

    def pop_head(self) -> Vehicle:
        head = self.ordering.pop(0)
        self.last_departed = head
        return head

    def __len__(self) -> int:
        return len(self.ordering)


# ===================== gate book =====================

@dataclass
class PlatoonEntry:
    f: float        # platoon start: crossing time of its first vehicle (s)
    t: float        # platoon end: crossing time of its last vehicle (s)
    count: int = 1  # number of vehicles assigned to the platoon

    def __post_init__(self) -> None:
        if self.count < 1:
            raise InconsistentGateBook(f"platoon count must be >= 1, got {self.count}")


class GateBook:
    """Per-lane lists of live platoons (start, end, size), ascending in time."""

    def __init__(self, n: int):
        self.n = n
        self._lanes: List[List[PlatoonEntry]] = [[] for _ in range(n)]

    def entries(self, lane: int) -> List[PlatoonEntry]:
        return self._lanes[lane - 1]

    def register(self, lane: int, entry: PlatoonEntry) -> None:
        """Append a new platoon; entries must stay ascending by start time."""
        lst = self._lanes[lane - 1]
        if lst and entry.f <= lst[-1].t:
            raise InconsistentGateBook(
                f"new platoon start {entry.f} not after lane {lane} last end {lst[-1].t}"
            )
        lst.append(entry)

    def shift_after(self, anchor: float, delta: float) -> None:
        """Shift every platoon whose start is strictly after the anchor."""
        for lst in self._lanes:
            for e in lst:
                if e.f > anchor:
                    e.f += delta
                    e.t += delta

    def prune_front(self, lane: int) -> PlatoonEntry:
        return self._lanes[lane - 1].pop(0)

    def validate(self) -> None:
        """Raise InconsistentGateBook unless all structural invariants hold."""
        for lane0, lst in enumerate(self._lanes):
            prev_t = -math.inf
            for e in lst:
                if e.f > e.t:
                    raise InconsistentGateBook(f"lane {lane0 + 1}: start {e.f} > end {e.t}")
                if e.f <= prev_t:
                    raise InconsistentGateBook(f"lane {lane0 + 1}: platoons overlap or are out of order")
                if e.count < 1:
                    raise InconsistentGateBook(f"lane {lane0 + 1}: count {e.count} < 1")
                prev_t = e.t

    def total_platoons(self) -> int:
        return sum(len(lst) for lst in self._lanes)


# ===================== run configuration =====================

@dataclass
class RunConfig:
    params: SimParams = field(default_factory=SimParams)
    pfa: str = "exhaustive"                     # exhaustive | gated | batch
    batch_cap: int = 100                        # max vehicles per platoon (batch only)
    horizon_vehicles: int = 100_000             # total arrivals to simulate
    warmup_vehicles: Optional[int] = None       # discarded arrivals; default 10% of horizon
    seed: int = 1
    arrivals: Optional[List[Tuple[int, float]]] = None  # scripted (lane, entry time) list

    def resolved_warmup(self) -> int:
        if self.warmup_vehicles is not None:
            return self.warmup_vehicles
        return self.horizon_vehicles // 10


_PFA_KINDS = ("exhaustive", "gated", "batch")

_CONFIG_KEYS = {
    "n", "lambda", "B", "S", "v_max", "a_max", "l_min",
    "region_pfa_m", "region_spa_m", "pfa", "batch_cap",
    "horizon_vehicles", "warmup_vehicles", "seed", "arrivals",
}


def parse_config(data: dict) -> RunConfig:
    """Build a RunConfig from a decoded JSON object (strict about keys)."""
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    params_kwargs = {}
    if "n" in data:
        params_kwargs["n"] = int(data["n"])
    if "lambda" in data:
        params_kwargs["lam"] = tuple(float(x) for x in data["lambda"])
    for key in ("B", "S"):
        if key in data:
            params_kwargs[key] = data[key]
    for key in ("v_max", "a_max", "l_min", "region_pfa_m", "region_spa_m"):
        if key in data:
            params_kwargs[key] = float(data[key])
    try:
        params = SimParams(**params_kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad parameter value: {exc}") from exc

    cfg = RunConfig(params=params)
    if "pfa" in data:
        if data["pfa"] not in _PFA_KINDS:
            raise ConfigError(f"pfa must be one of {_PFA_KINDS}, got {data['pfa']!r}")
        cfg.pfa = data["pfa"]
    if "batch_cap" in data:
        cap = int(data["batch_cap"])
        if cap < 1:
            raise ConfigError(f"batch_cap must be >= 1, got {cap}")
        cfg.batch_cap = cap
    if "horizon_vehicles" in data:
        cfg.horizon_vehicles = int(data["horizon_vehicles"])
    if "warmup_vehicles" in data:
        cfg.warmup_vehicles = int(data["warmup_vehicles"])
    if "seed" in data:
        cfg.seed = int(data["seed"])
    if "arrivals" in data:
        arr = []
        for item in data["arrivals"]:
            lane, entry_t = int(item[0]), float(item[1])
            if not 1 <= lane <= params.n:
                raise ConfigError(f"arrival lane {lane} outside 1..{params.n}")
            arr.append((lane, entry_t))
        if arr != sorted(arr, key=lambda x: x[1]):
            raise ConfigError("scripted arrivals must be sorted by entry time")
        cfg.arrivals = arr
    return cfg


def load_config(path: str) -> RunConfig:
    """Load and parse a JSON run configuration file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must contain a JSON object")
    return parse_config(data)
