"""Speed-profile planners: exact piecewise-constant-acceleration trajectories.

Given a frozen crossing schedule, each vehicle gets a profile on the
approach segment that starts at distance |x0| upstream and reaches the
stop line (x = 0) exactly at its scheduled crossing time, at full speed.
Two closed-form planners are provided:

* plan_min_distance: stays as far ahead as possible (minimum area between
  the stop line and the path); cruise, one deceleration to a possible
  full stop, then one acceleration back to full speed.
* plan_min_accel: minimizes the total applied |acceleration|; one shallow
  dip to an intermediate cruise speed, then back to full speed.

Platoon members crossing exactly B apart share the instant they regain
full speed, which makes their profiles time-shifted copies and keeps the
spacing constant; plan_* link a trajectory to its predecessor's when the
crossing gap matches B.

oracle_min is a brute-force discretized search over the same profile
family, used by the tests to confirm the closed forms are optimal.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import PlatoonError, SimParams, Vehicle

__all__ = [
    "Trajectory",
    "Segment",
    "PlannedSchedule",
    "TrajectoryError",
    "InfeasibleCrossingTime",
    "NegativeDiscriminant",
    "OvercrowdingViolation",
    "SeparationViolation",
    "SingleDipViolation",
    "InfeasibleInstance",
    "OutOfDomain",
    "plan_min_distance",
    "plan_min_accel",
    "evaluate",
    "area",
    "accel_cost",
    "check_overcrowding",
    "oracle_min",
    "plan_schedule",
    "verify_separation",
    "write_segments_csv",
    "write_sampled_csv",
]

# Crossing gaps within B_LINK_TOL of B count as same-platoon spacing and
# link the follower's full-speed instant to its predecessor's.
B_LINK_TOL = 1e-6
# Separation slack (m) and the fixed grid step (s) for pairwise checks.
SEP_TOL = 1e-6
SEP_GRID_DT = 0.01
# Feasibility slack for breakpoint times and speeds.
FEAS_TOL = 1e-9
# Segments shorter than this are dropped as degenerate.
DROP_TOL = 1e-12


# ===================== errors =====================

class TrajectoryError(PlatoonError):
    """Base class for speed-profile planning failures."""


class InfeasibleCrossingTime(TrajectoryError):
    """The crossing time cannot be met by the planner's profile family."""


class NegativeDiscriminant(TrajectoryError):
    """No single-dip profile closes the distance (entry spacing violated)."""


class OvercrowdingViolation(TrajectoryError):
    """The approach segment is too short to absorb the required delay."""


class SeparationViolation(TrajectoryError):
    """Planned trajectory gets closer than l_min to its predecessor."""


class SingleDipViolation(TrajectoryError):
    """Schedule requires a profile outside the single-dip family."""


class InfeasibleInstance(TrajectoryError):
    """The discretized oracle found no feasible candidate."""


class OutOfDomain(TrajectoryError):
    """Trajectory evaluated outside its [t0, t_f] domain."""


# ===================== trajectory =====================

@dataclass
class Segment:
    t_start: float       # absolute start time (s)
    duration: float      # segment length (s)
    accel: float         # constant acceleration (m/s^2)
    x_start: float       # position at t_start (m, negative upstream)
    v_start: float       # speed at t_start (m/s)


@dataclass
class Trajectory:
    t0: float            # segment entry time (s)
    t_f: float           # scheduled crossing time (s)
    x0: float            # entry position (m, negative)
    v0: float            # entry speed (m/s)
    segments: List[Segment]
    t_full: float        # instant full speed is regained for good (s)
    kind: str = "free_flow"          # min_distance | min_accel | oracle | free_flow
    vehicle_id: int = -1
    breakpoints: Dict[str, float] = field(default_factory=dict)
    diagnostics: Dict[str, float] = field(default_factory=dict)


def _build_segments(t0: float, x0: float, v0: float,
                    pieces: Sequence[Tuple[float, float]]) -> List[Segment]:
    """Chain (duration, accel) pieces into segments with exact kinematics.

    Degenerate pieces (duration below DROP_TOL) are dropped; slightly
    negative durations from floating-point cancellation are treated as
    zero. A genuinely negative duration is a planner bug.
    """
    segs: List[Segment] = []
    t, x, v = t0, x0, v0
    for duration, accel in pieces:
        if duration < -FEAS_TOL:
            raise TrajectoryError(f"negative segment duration {duration}")
        if duration > DROP_TOL:
            segs.append(Segment(t, duration, accel, x, v))
            t += duration
            x += v * duration + 0.5 * accel * duration * duration
            v += accel * duration
    if not segs:
        segs.append(Segment(t0, 0.0, 0.0, x0, v0))
    return segs


def evaluate(traj: Trajectory, t: float) -> Tuple[float, float, float]:
    """Exact (position, speed, acceleration) at time t."""
    if t < traj.t0 - FEAS_TOL or t > traj.t_f + FEAS_TOL:
        raise OutOfDomain(f"t={t} outside [{traj.t0}, {traj.t_f}]")
    seg = traj.segments[0]
    for s in traj.segments:
        if s.t_start > t:
            break
        seg = s
    dt = min(max(t - seg.t_start, 0.0), seg.duration)
    x = seg.x_start + seg.v_start * dt + 0.5 * seg.accel * dt * dt
    v = seg.v_start + seg.accel * dt
    return x, v, seg.accel


def area(traj: Trajectory) -> float:
    """Integral of |x(t)| over [t0, t_f], exact per segment.

    Positions are nonpositive on the approach (the vehicle never passes
    the stop line before t_f), so |x| = -x and each segment contributes a
    cubic antiderivative evaluated in closed form.
    """
    total = 0.0
    for s in traj.segments:
        d = s.duration
        total -= s.x_start * d + 0.5 * s.v_start * d * d + s.accel * d * d * d / 6.0
    return total


def accel_cost(traj: Trajectory) -> float:
    """Integral of |a(t)| over [t0, t_f]: sum of |accel| * duration."""
    return sum(abs(s.accel) * s.duration for s in traj.segments)


def check_overcrowding(x0: float, t_f: float, t_full: float, params: SimParams) -> bool:
    """True iff a full-speed entry can stop and still regain full speed.

    The quantified condition: (t_f - t_full) * v_max + v_max^2 / a_max
    must not exceed the entry distance |x0|.
    """
    return (t_f - t_full) * params.v_max + params.v_max ** 2 / params.a_max <= abs(x0)


# ===================== predecessor linkage and separation =====================

def _linked_t_full(t_f: float, pred: Optional[Trajectory], link_gap: float) -> float:
    """Full-speed instant: inherited from the predecessor on a B-spaced join."""
    if pred is not None and abs((t_f - pred.t_f) - link_gap) <= B_LINK_TOL:
        return pred.t_full
    return t_f


def _sample_x(traj: Trajectory, ts: np.ndarray) -> np.ndarray:
    """Positions at the given times (ascending, within the domain)."""
    x = np.empty_like(ts)
    filled = np.zeros(ts.shape, dtype=bool)
    for seg in traj.segments:
        t_end = seg.t_start + seg.duration
        m = ~filled & (ts <= t_end + 1e-12)
        if m.any():
            d = np.clip(ts[m] - seg.t_start, 0.0, seg.duration)
            x[m] = seg.x_start + seg.v_start * d + 0.5 * seg.accel * d * d
            filled |= m
    if not filled.all():
        seg = traj.segments[-1]
        d = seg.duration
        x[~filled] = seg.x_start + seg.v_start * d + 0.5 * seg.accel * d * d
    return x


def verify_separation(leader: Trajectory, follower: Trajectory, l_min: float,
                      tol: float = SEP_TOL, grid_dt: float = SEP_GRID_DT) -> List[str]:
    """Spacing violations between two same-lane trajectories (empty if clean).

    Checks leader.x - follower.x >= l_min on a fixed grid plus at every
    segment breakpoint of both trajectories, from the later entry until
    the leader crosses.
    """
    t_lo = max(leader.t0, follower.t0)
    t_hi = leader.t_f
    if t_hi <= t_lo:
        return []
    extra = [t_hi]
    for traj in (leader, follower):
        for s in traj.segments:
            for t in (s.t_start, s.t_start + s.duration):
                if t_lo <= t <= t_hi:
                    extra.append(t)
    ts = np.unique(np.concatenate([np.arange(t_lo, t_hi, grid_dt), np.asarray(extra)]))
    gap = _sample_x(leader, ts) - _sample_x(follower, ts)
    bad = np.nonzero(gap < l_min - tol)[0]
    return [
        f"separation {gap[i]:.9f} m < {l_min} m at t={ts[i]:.6f}" for i in bad
    ]


def _check_pred(traj: Trajectory, pred: Optional[Trajectory], params: SimParams) -> Trajectory:
    if pred is not None:
        violations = verify_separation(pred, traj, params.l_min)
        if violations:
            raise SeparationViolation(
                f"vehicle {traj.vehicle_id}: {violations[0]}"
                + (f" (+{len(violations) - 1} more)" if len(violations) > 1 else "")
            )
    return traj


# ===================== minimum-distance planner =====================

def plan_min_distance(
    x0: float,
    t_f: float,
    params: SimParams,
    pred: Optional[Trajectory] = None,
    link_gap: Optional[float] = None,
    t0: float = 0.0,
    vehicle_id: int = -1,
) -> Trajectory:
    """Plan the profile that stays closest to the stop line (entry at full speed).

    Cruise at full speed as long as possible, brake once, possibly dwell
    at a standstill, then accelerate back to full speed at t_full. The
    full-stop form applies when the distance coverable around a stop,
    L = v_max * (t_f - t0 - v_max / a_max), reaches |x0|; otherwise the
    dip bottoms out early with deceleration time
    sqrt(((t_f - t0) * v_max - |x0|) / a_max).
    """
    if x0 >= 0.0:
        raise ValueError(f"x0 must be negative (upstream), got {x0}")
    v_m, a_m = params.v_max, params.a_max
    dist = -x0
    T = t_f - t0
    if T < dist / v_m - FEAS_TOL:
        raise InfeasibleCrossingTime(
            f"vehicle {vehicle_id}: t_f - t0 = {T} < free-flow time {dist / v_m}"
        )
    if link_gap is None:
        link_gap = params.B_of(1)
    t_full = _linked_t_full(t_f, pred, link_gap)
    tf_rel = t_full - t0
    brake = v_m / a_m

    L = v_m * (T - brake)
    if L >= dist:
        # Full stop: cruise, brake to standstill, dwell, accelerate.
        t_acc = tf_rel - brake
        t_stop = t_acc - (T - brake - dist / v_m)
        t_dec = t_stop - brake
        if t_dec < -FEAS_TOL:
            raise OvercrowdingViolation(
                f"vehicle {vehicle_id}: required dwell starts {-t_dec:.6f} s before entry"
            )
        t_dec = max(t_dec, 0.0)
        pieces = [
            (t_dec, 0.0),
            (t_stop - t_dec, -a_m),
            (t_acc - t_stop, 0.0),
            (tf_rel - t_acc, a_m),
            (T - tf_rel, 0.0),
        ]
        bp = {"t_dec": t0 + t_dec, "t_stop": t0 + t_stop, "t_acc": t0 + t_acc}
        diag = {"L": L}
    else:
        # No stop: symmetric dip, deceleration time t_tilde on each side.
        t_tilde = math.sqrt((T * v_m - dist) / a_m)
        t_acc = tf_rel - t_tilde
        t_dec = t_acc - t_tilde
        if t_dec < -FEAS_TOL:
            raise OvercrowdingViolation(
                f"vehicle {vehicle_id}: dip of {t_tilde:.6f} s starts before entry"
            )
        t_dec = max(t_dec, 0.0)
        pieces = [
            (t_dec, 0.0),
            (t_acc - t_dec, -a_m),
            (tf_rel - t_acc, a_m),
            (T - tf_rel, 0.0),
        ]
        bp = {"t_dec": t0 + t_dec, "t_stop": t0 + t_acc, "t_acc": t0 + t_acc}
        diag = {"L": L, "t_tilde": t_tilde}

    traj = Trajectory(
        t0=t0, t_f=t_f, x0=x0, v0=v_m,
        segments=_build_segments(t0, x0, v_m, pieces),
        t_full=t_full, kind="min_distance", vehicle_id=vehicle_id,
        breakpoints=dict(bp, t_full=t_full), diagnostics=diag,
    )
    return _check_pred(traj, pred, params)


# ===================== minimum-acceleration planner =====================

def plan_min_accel(
    x0: float,
    v0: float,
    t_f: float,
    params: SimParams,
    pred: Optional[Trajectory] = None,
    link_gap: Optional[float] = None,
    t0: float = 0.0,
    vehicle_id: int = -1,
) -> Trajectory:
    """Plan the single-dip profile minimizing total applied |acceleration|.

    Decelerate immediately for t1, cruise at the dip speed v1, then
    accelerate so full speed is regained exactly at t_full. With
    w = (v_max - v0) / a_max and M = (t_full - t0) - w, the dip times
    solve a quadratic: t1 = (M - sqrt(disc)) / 2, t2 = M - t1, where
    disc = M^2 - (4 / a_max) * (v_max (t_f - t0)
           - (v_max - v0) (t_full - t0) + (v_max - v0)^2 / (2 a_max) - |x0|).
    """
    if x0 >= 0.0:
        raise ValueError(f"x0 must be negative (upstream), got {x0}")
    v_m, a_m = params.v_max, params.a_max
    if not 0.0 <= v0 <= v_m + FEAS_TOL:
        raise ValueError(f"v0 must lie in [0, v_max], got {v0}")
    v0 = min(v0, v_m)
    dist = -x0
    T = t_f - t0
    if T < dist / v_m - FEAS_TOL:
        raise InfeasibleCrossingTime(
            f"vehicle {vehicle_id}: t_f - t0 = {T} < free-flow time {dist / v_m}"
        )
    if link_gap is None:
        link_gap = params.B_of(1)
    t_full = _linked_t_full(t_f, pred, link_gap)
    tf_rel = t_full - t0

    w = (v_m - v0) / a_m
    M = tf_rel - w
    disc = M * M - (4.0 / a_m) * (
        v_m * T - (v_m - v0) * tf_rel + (v_m - v0) ** 2 / (2.0 * a_m) - dist
    )
    if disc < -FEAS_TOL:
        raise NegativeDiscriminant(
            f"vehicle {vehicle_id}: no single-dip profile (discriminant {disc:.3e})"
        )
    root = math.sqrt(max(disc, 0.0))
    t1 = 0.5 * (M - root)
    t2 = M - t1
    if t1 < -FEAS_TOL:
        raise InfeasibleCrossingTime(
            f"vehicle {vehicle_id}: dip start t1 = {t1:.6f} s before entry"
            " (profile would need to speed up first)"
        )
    t1 = max(t1, 0.0)
    v1 = v0 - a_m * t1
    if v1 < -FEAS_TOL:
        raise NegativeDiscriminant(
            f"vehicle {vehicle_id}: dip speed {v1:.6f} m/s below zero (stop required)"
        )
    v1 = max(v1, 0.0)

    pieces = [
        (t1, -a_m),
        (t2 - t1, 0.0),
        (tf_rel - t2, a_m),
        (T - tf_rel, 0.0),
    ]
    traj = Trajectory(
        t0=t0, t_f=t_f, x0=x0, v0=v0,
        segments=_build_segments(t0, x0, v0, pieces),
        t_full=t_full, kind="min_accel", vehicle_id=vehicle_id,
        breakpoints={"t_cruise": t0 + t1, "t_acc": t0 + t2, "t_full": t_full},
        diagnostics={"t1": t1, "t2": t2, "v1": v1, "disc": disc},
    )
    return _check_pred(traj, pred, params)


# ===================== discretized oracle (test-only) =====================

def oracle_min(
    objective: str,
    x0: float,
    v0: float,
    t_f: float,
    params: SimParams,
    pred: Optional[Trajectory] = None,
    link_gap: Optional[float] = None,
    dt: float = 0.01,
    t0: float = 0.0,
) -> Trajectory:
    """Brute-force best single-dip profile on a dt grid of breakpoints.

    Candidates cruise at v0 for p, brake for delta, cruise at the dip
    speed, then accelerate to full speed; the two cruise lengths are
    solved exactly from the time and distance closures, so every kept
    candidate is an exact trajectory. (p, delta) range over the dt grid;
    exact full-stop candidates (dip speed zero, dwell solved) and the
    exact no-dip candidate are added separately. When the predecessor
    linkage pins t_full < t_f, the final full-speed stretch is fixed and
    the search runs on the shortened horizon.

    Search is restricted to the single-dip family; optimality claims
    against the closed forms hold within that family.
    """
    if objective not in ("distance", "acceleration"):
        raise ValueError(f"objective must be distance or acceleration, got {objective!r}")
    if x0 >= 0.0:
        raise ValueError(f"x0 must be negative (upstream), got {x0}")
    v_m, a_m = params.v_max, params.a_max
    dist = -x0
    T = t_f - t0
    if link_gap is None:
        link_gap = params.B_of(1)
    t_full = _linked_t_full(t_f, pred, link_gap)
    # Pin the tail cruise; search on the shortened instance.
    Tp = t_full - t0
    distp = dist - v_m * (T - Tp)
    if Tp <= 0.0 or distp <= 0.0 or Tp < distp / v_m - FEAS_TOL:
        raise InfeasibleInstance(f"no room before t_full: T'={Tp}, |x0|'={distp}")

    grid_p = np.arange(0.0, Tp + dt / 2.0, dt)
    grid_d = np.arange(dt, v0 / a_m + dt / 2.0, dt) if v0 > 0 else np.empty(0)

    best_val = np.inf
    best: Optional[Tuple[float, float, float, float, float]] = None  # p, delta, q, r, v1

    def consider(p: float, delta: float, q: float, r: float, v1: float, val: float) -> None:
        nonlocal best_val, best
        if val < best_val - 1e-15:
            best_val = val
            best = (p, delta, q, r, v1)

    # Exact no-dip candidate: cruise v0 for p, accelerate to v_m, cruise.
    w0 = (v_m - v0) / a_m
    if Tp >= w0:
        # p * v0 + (v0 * w0 + a_m * w0^2 / 2) + r * v_m = distp, p + w0 + r = Tp
        denom = v_m - v0
        if denom > FEAS_TOL:
            rhs = distp - (v0 * w0 + 0.5 * a_m * w0 * w0) - v_m * (Tp - w0)
            p0 = rhs / (v0 - v_m)
        else:
            p0 = 0.0  # v0 == v_m: any split works only if distances match
        r0 = Tp - w0 - p0
        if p0 >= -FEAS_TOL and r0 >= -FEAS_TOL:
            p0, r0 = max(p0, 0.0), max(r0, 0.0)
            d_chk = p0 * v0 + v0 * w0 + 0.5 * a_m * w0 * w0 + r0 * v_m
            if abs(d_chk - distp) <= 1e-6:
                val = _candidate_value(objective, x0, v0, v_m, a_m, p0, 0.0, 0.0, r0, v0)
                consider(p0, 0.0, 0.0, r0, v0, val)

    # Vectorized (p, delta) sweep with q, r solved from the closures.
    if grid_d.size and grid_p.size:
        for lo in range(0, grid_p.size, 512):
            p = grid_p[lo:lo + 512, None]
            d = grid_d[None, :]
            v1 = v0 - a_m * d
            w1 = (v_m - v1) / a_m
            t_rem = Tp - p - d - w1
            d_rem = (
                distp
                - p * v0
                - (v0 * d - 0.5 * a_m * d * d)
                - (v1 * w1 + 0.5 * a_m * w1 * w1)
            )
            denom = v_m - v1
            with np.errstate(divide="ignore", invalid="ignore"):
                q = (v_m * t_rem - d_rem) / denom
            r = t_rem - q
            feas = (v1 >= -FEAS_TOL) & (q >= 0.0) & (r >= 0.0) & (denom > FEAS_TOL)
            if not feas.any():
                continue
            val = _candidate_value_arr(objective, x0, v0, v_m, a_m, p, d, q, r, v1)
            val = np.where(feas, val, np.inf)
            ij = int(np.argmin(val))
            i, j = divmod(ij, val.shape[1])
            if val[i, j] < best_val - 1e-15:
                best_val = float(val[i, j])
                best = (float(p[i, 0]), float(d[0, j]), float(q[i, j]),
                        float(r[i, j]), float(v1[0, j]))

    # Exact full-stop candidates: delta fixed at v0/a_m, dwell solved.
    if v0 > 0.0:
        d_stop = v0 / a_m
        w1 = v_m / a_m
        for p in grid_p:
            t_rem = Tp - p - d_stop - w1
            d_rem = distp - p * v0 - 0.5 * v0 * v0 / a_m - 0.5 * v_m * v_m / a_m
            r = d_rem / v_m
            q = t_rem - r
            if q >= -FEAS_TOL and r >= -FEAS_TOL:
                q, r = max(q, 0.0), max(r, 0.0)
                val = _candidate_value(objective, x0, v0, v_m, a_m, float(p), d_stop, q, r, 0.0)
                consider(float(p), d_stop, q, r, 0.0, val)

    if best is None:
        raise InfeasibleInstance(
            f"no feasible single-dip candidate (x0={x0}, v0={v0}, t_f={t_f}, dt={dt})"
        )
    p, delta, q, r, v1 = best
    w1 = (v_m - v1) / a_m
    pieces = [
        (p, 0.0),
        (delta, -a_m),
        (q, 0.0),
        (w1, a_m),
        (r, 0.0),
        (T - Tp, 0.0),  # pinned tail cruise at full speed
    ]
    return Trajectory(
        t0=t0, t_f=t_f, x0=x0, v0=v0,
        segments=_build_segments(t0, x0, v0, pieces),
        t_full=t_full, kind="oracle",
        breakpoints={"t_full": t_full},
        diagnostics={"p": p, "delta": delta, "q": q, "r": r, "v1": v1},
    )


def _segment_area_terms(x0, v0, a_m, p, d, q, w1, r, v1, v_m):
    """Exact -integral of x over the five-piece dip profile (array-safe)."""
    total = 0.0
    x = x0
    # cruise v0
    total = total - (x * p + 0.5 * v0 * p * p)
    x = x + v0 * p
    # decel
    total = total - (x * d + 0.5 * v0 * d * d - a_m * d * d * d / 6.0)
    x = x + v0 * d - 0.5 * a_m * d * d
    # cruise v1
    total = total - (x * q + 0.5 * v1 * q * q)
    x = x + v1 * q
    # accel
    total = total - (x * w1 + 0.5 * v1 * w1 * w1 + a_m * w1 * w1 * w1 / 6.0)
    x = x + v1 * w1 + 0.5 * a_m * w1 * w1
    # cruise v_m
    total = total - (x * r + 0.5 * v_m * r * r)
    return total


def _candidate_value(objective, x0, v0, v_m, a_m, p, d, q, r, v1):
    if objective == "acceleration":
        return (v0 - v1) + (v_m - v1)
    w1 = (v_m - v1) / a_m
    return _segment_area_terms(x0, v0, a_m, p, d, q, w1, r, v1, v_m)


def _candidate_value_arr(objective, x0, v0, v_m, a_m, p, d, q, r, v1):
    if objective == "acceleration":
        return (v0 - v1) + (v_m - v1) + 0.0 * (p + q + r)
    w1 = (v_m - v1) / a_m
    return _segment_area_terms(x0, v0, a_m, p, d, q, w1, r, v1, v_m)


# ===================== whole-schedule planning =====================

@dataclass
class PlannedSchedule:
    trajectories: List[Trajectory]
    failures: List[Tuple[int, TrajectoryError]]  # (vehicle id, error)


def plan_schedule(
    vehicles: Sequence[Vehicle],
    params: SimParams,
    kind: str = "min-distance",
    best_effort: bool = False,
) -> PlannedSchedule:
    """Plan one trajectory per scheduled vehicle, chained per lane.

    Vehicles enter the profiling segment at full speed, one segment
    length upstream, timed so a free-flow run reaches the stop line at
    their earliest crossing time a. Within each lane, every trajectory is
    planned against its predecessor (full-speed linkage on B-spaced
    crossings, spacing verified on a grid).

    Planner errors are re-raised tagged with the vehicle id; with
    best_effort=True they are collected in .failures instead (expected
    for capped-platoon schedules, where long platoons can force profiles
    outside the single-dip family; such failures surface as
    SingleDipViolation) and the failed vehicle drops out of its chain.
    """
    if kind not in ("min-distance", "min-accel"):
        raise ValueError(f"kind must be min-distance or min-accel, got {kind!r}")
    v_m = params.v_max
    x0 = -params.region_spa_m
    entry_lead = params.region_spa_m / v_m

    ordered = sorted(vehicles, key=lambda v: (v.c, v.id))
    last_in_lane: Dict[int, Trajectory] = {}
    out: List[Trajectory] = []
    failures: List[Tuple[int, TrajectoryError]] = []
    for v in ordered:
        pred = last_in_lane.get(v.lane)
        t0 = v.a - entry_lead
        try:
            if kind == "min-distance":
                traj = plan_min_distance(
                    x0, v.c, params, pred=pred,
                    link_gap=params.B_of(v.lane), t0=t0, vehicle_id=v.id,
                )
            else:
                traj = plan_min_accel(
                    x0, v_m, v.c, params, pred=pred,
                    link_gap=params.B_of(v.lane), t0=t0, vehicle_id=v.id,
                )
        except TrajectoryError as exc:
            if not best_effort:
                raise
            if isinstance(exc, (NegativeDiscriminant, OvercrowdingViolation)):
                exc = SingleDipViolation(f"vehicle {v.id}: {exc}")
            failures.append((v.id, exc))
            continue
        out.append(traj)
        last_in_lane[v.lane] = traj
    return PlannedSchedule(trajectories=out, failures=failures)


# ===================== CSV export =====================

def write_segments_csv(trajectories: Sequence[Trajectory], path: str) -> None:
    """Exact segment table: vehicle_id, segment_index, t_start, duration, accel, x_start, v_start."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["vehicle_id", "segment_index", "t_start", "duration",
                    "accel", "x_start", "v_start"])
        for traj in trajectories:
            for i, s in enumerate(traj.segments):
                w.writerow([traj.vehicle_id, i,
                            f"{s.t_start:.10g}", f"{s.duration:.10g}", f"{s.accel:.10g}",
                            f"{s.x_start:.10g}", f"{s.v_start:.10g}"])


def write_sampled_csv(trajectories: Sequence[Trajectory], path: str, dt: float = 0.1) -> None:
    """Sampled table for plotting: vehicle_id, t, x, v, a at a fixed step."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["vehicle_id", "t", "x", "v", "a"])
        for traj in trajectories:
            t = traj.t0
            while t < traj.t_f - 1e-12:
                x, v, a = evaluate(traj, t)
                w.writerow([traj.vehicle_id, f"{t:.10g}", f"{x:.10g}", f"{v:.10g}", f"{a:.10g}"])
                t += dt
            x, v, a = evaluate(traj, traj.t_f)
            w.writerow([traj.vehicle_id, f"{traj.t_f:.10g}", f"{x:.10g}", f"{v:.10g}", f"{a:.10g}"])
