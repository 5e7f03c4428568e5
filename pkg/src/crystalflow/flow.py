"""Crystalline elastic flow: height ODE integration with restarts.

Heights h_i(t) measure the normal offset of each segment line from the
epoch's reference curve; the system

    h_i'(t) = -phi_dual(nu_i) * g_i(h(t)),    h_i(0) = 0,

(g the first variation) is integrated with an embedded Fehlberg 4(5) pair on
the raw height vector.  Segment lengths are affine in h, so event detection
(a zero-transition segment shrinking to the vanish threshold) watches the
length transformation, refines the event time by bisection on the step, and
hands over to a restart: the vanished segments are removed, collinear
neighbors are merged, and a fresh epoch starts from the merged curve with
h = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curve import (
    AdmissibleCurve,
    build_curve,
    curve_index,
    lengths_from_heights,
    reconstruct_parallel,
)
from .energy import FlowParams, elastic_energy, first_variation, segment_supports
from .errors import (
    InsufficientSamples,
    NonzeroCurvatureCollapse,
    NotAdmissible,
    NotAdmissibleAfterMerge,
    DegenerateSegment,
    ParamOutOfRange,
    SegmentCollapse,
    StepUnderflow,
    ZeroLengthSegment,
)

__all__ = [
    "IntegratorOptions",
    "FlowState",
    "Sample",
    "RestartRecord",
    "Trajectory",
    "rhs",
    "step",
    "apriori_bounds",
    "detect_vanishing",
    "restart",
    "evolve",
    "dissipation_residual",
    "STATUS_RUNNING",
    "STATUS_CONVERGED",
    "STATUS_MAX_TIME",
    "STATUS_TRANSLATING",
]

STATUS_RUNNING = "Running"
STATUS_CONVERGED = "Converged"
STATUS_MAX_TIME = "MaxTime"
STATUS_TRANSLATING = "TranslatingDivergence"

_DIVERGENCE_FACTOR = 1e3  # |h| threshold, in units of the initial diameter


@dataclass(frozen=True)
class IntegratorOptions:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    vanish_fraction: float = 1e-6
    max_step: float = 0.1
    min_step: float = 1e-14
    max_time: float = 10.0
    stationarity_tol: float = 1e-8
    sample_stride: int = 1
    substeps: int = 1

    def __post_init__(self):
        if self.rel_tol <= 0.0 or self.abs_tol <= 0.0:
            raise ParamOutOfRange("tolerances must be positive")
        if not (0.0 < self.vanish_fraction < 1.0):
            raise ParamOutOfRange("vanish_fraction must lie in (0, 1)")
        if not (0.0 < self.min_step < self.max_step):
            raise ParamOutOfRange("need 0 < min_step < max_step")
        if self.max_time <= 0.0:
            raise ParamOutOfRange("max_time must be positive")
        if self.stationarity_tol <= 0.0:
            raise ParamOutOfRange("stationarity_tol must be positive")
        if self.sample_stride < 1:
            raise ParamOutOfRange("sample_stride must be >= 1")
        if self.substeps < 1:
            raise ParamOutOfRange("substeps must be >= 1")


@dataclass
class FlowState:
    """Reference curve of the current epoch plus the height vector at time t."""

    reference: AdmissibleCurve
    h: np.ndarray
    t: float
    epoch: int
    initial_total_length: float | None = None

    def __post_init__(self):
        self.h = self.reference.check_heights(self.h)
        if self.initial_total_length is None:
            self.initial_total_length = max(self.reference.total_bounded_length, 1.0)


@dataclass
class Sample:
    t: float
    epoch: int
    h: np.ndarray
    lengths: np.ndarray
    energy: float
    h_rates: np.ndarray


@dataclass
class RestartRecord:
    t: float
    epoch_before: int
    vanished: tuple
    merge_map: tuple  # new index per old segment index, -1 for removed
    index_before: int | None
    index_after: int | None


@dataclass
class Trajectory:
    params: FlowParams
    options: IntegratorOptions
    epochs: list = field(default_factory=list)  # reference curve per epoch
    samples: list = field(default_factory=list)
    restarts: list = field(default_factory=list)
    status: str = STATUS_RUNNING
    final_state: FlowState | None = None

    def samples_in_epoch(self, k: int):
        return [s for s in self.samples if s.epoch == k]

    @property
    def n_epochs(self) -> int:
        return len(self.epochs)


# ---------------------------------------------------------------------- ODE

def rhs(state: FlowState, p: FlowParams) -> np.ndarray:
    """Height rates h' = -phi_dual(nu) * g at the state's heights."""
    g = first_variation(state.reference, p, h=state.h)
    return -segment_supports(state.reference) * g


# Fehlberg 4(5) tableau
_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)
_B4 = (25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0)
_B5 = (16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55)


def _rk_pair(ref: AdmissibleCurve, h: np.ndarray, p: FlowParams, dt: float):
    """One Fehlberg step of size dt.  Returns (h5, err_vector) or None when a
    stage leaves the admissible length region."""
    try:
        k = []
        for row in _A:
            hs = h if not row else h + dt * sum(a * ki for a, ki in zip(row, k))
            g = first_variation(ref, p, h=hs)
            k.append(-segment_supports(ref) * g)
    except ZeroLengthSegment:
        return None
    h4 = h + dt * sum(b * ki for b, ki in zip(_B4, k))
    h5 = h + dt * sum(b * ki for b, ki in zip(_B5, k))
    if not np.all(np.isfinite(h5)):
        return None
    return h5, np.abs(h5 - h4)


def _attempt_step(state: FlowState, p: FlowParams, opts: IntegratorOptions,
                  dt: float):
    """Advance one accepted step.  Returns (h_new, dt_used, dt_next, err)."""
    ref = state.reference
    b = ref.bounded
    while True:
        if dt < opts.min_step:
            raise StepUnderflow(
                f"step size {dt:.3e} fell below min_step at t={state.t:.6g}")
        res = _rk_pair(ref, state.h, p, dt)
        if res is not None:
            h5, errv = res
            lens = lengths_from_heights(ref, h5)
            if np.all(lens[b] > 0.0):
                scale = opts.abs_tol + opts.rel_tol * np.maximum(
                    np.abs(state.h), np.abs(h5))
                ratio = float(np.max(errv / scale)) if len(errv) else 0.0
                if ratio <= 1.0:
                    grow = 5.0 if ratio == 0.0 else min(5.0, 0.9 * ratio**-0.2)
                    dt_next = min(opts.max_step, dt * max(0.2, grow))
                    return h5, dt, dt_next, float(np.max(errv))
                dt *= max(0.2, 0.9 * ratio**-0.2)
                continue
        dt *= 0.5


def step(state: FlowState, p: FlowParams, opts: IntegratorOptions,
         dt: float | None = None):
    """Public single accepted adaptive step: returns (state', err)."""
    if dt is None:
        dt = _initial_dt(state, p, opts)
    h_new, dt_used, _, err = _attempt_step(state, p, opts, dt)
    new = FlowState(state.reference, h_new, state.t + dt_used, state.epoch,
                    state.initial_total_length)
    return new, err


def _initial_dt(state: FlowState, p: FlowParams, opts: IntegratorOptions) -> float:
    r = rhs(state, p)
    r_mag = float(np.max(np.abs(r))) if len(r) else 0.0
    dt = opts.max_step if r_mag == 0.0 else min(opts.max_step, 0.01 / r_mag)
    return max(dt, opts.min_step * 10.0)


# ------------------------------------------------------------------- bounds

def apriori_bounds(curve: AdmissibleCurve, p: FlowParams):
    """Constants (D1, D2, T) with T = D1/D2: no segment can halve its length
    before time T (T = +inf when nothing moves)."""
    n = curve.n
    b = curve.bounded
    L = curve.lengths
    th_lo, th_hi = curve.thetas[:n], curve.thetas[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        geo = (1.0 / np.abs(np.sin(th_lo))
               + np.abs(np.cos(th_lo) / np.sin(th_lo)
                        + np.cos(th_hi) / np.sin(th_hi))
               + 1.0 / np.abs(np.sin(th_hi)))
    d1 = 0.5 * float(np.min(L[b] / geo[b]))

    a = curve.anisotropy
    f = curve.facet_index
    HF, dseg = a.facet_lengths[f], a.delta[f]
    sup = a.supports[f]
    c = curve.transitions.astype(float)
    cp, cn = curve.shift_prev(c, 0.0), curve.shift_next(c, 0.0)
    dp, dn = curve.shift_prev(dseg, 0.0), curve.shift_next(dseg, 0.0)
    Lp, Ln = curve.shift_prev(L, np.inf), curve.shift_next(L, np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_prev = np.where(cp != 0.0, 4.0 * cp**2 * dp / (Lp**2 * np.abs(np.sin(th_lo))), 0.0)
        t_self = np.where(c != 0.0, 4.0 * c**2 * dseg * np.abs(
            np.cos(th_lo) / np.sin(th_lo) + np.cos(th_hi) / np.sin(th_hi)) / L**2, 0.0)
        t_next = np.where(cn != 0.0, 4.0 * cn**2 * dn / (Ln**2 * np.abs(np.sin(th_hi))), 0.0)
        val = sup * (2.0 * HF / L + (2.0 * p.alpha / L) * (t_prev + t_self + t_next))
    d2 = float(np.max(val[b])) if np.any(b) else 0.0
    t_guard = np.inf if d2 == 0.0 else d1 / d2
    return d1, d2, t_guard


# ------------------------------------------------------------------- events

def _vanish_thresholds(state: FlowState, opts: IntegratorOptions) -> np.ndarray:
    ref = state.reference
    t = np.where(ref.bounded,
                 np.maximum(opts.vanish_fraction * ref.lengths,
                            1e-10 * state.initial_total_length),
                 -np.inf)  # half-lines never vanish
    return t


def detect_vanishing(state: FlowState, opts: IntegratorOptions) -> np.ndarray:
    """Indices of bounded segments at or below the vanish threshold."""
    lens = lengths_from_heights(state.reference, state.h)
    thr = _vanish_thresholds(state, opts)
    return np.nonzero(state.reference.bounded & (lens <= thr))[0]


def restart(state: FlowState, vanished) -> FlowState:
    """Remove vanished zero-transition segments, merge the collinear
    neighbors, and open a new epoch with h = 0 at the same time."""
    new_state, _ = _restart_with_record(state, vanished)
    return new_state


def _restart_with_record(state: FlowState, vanished):
    ref = state.reference
    van = sorted({int(i) for i in np.asarray(vanished, dtype=int).ravel()})
    if not van:
        return state, None
    n = ref.n
    for i in van:
        if not (0 <= i < n) or ref.is_halfline(i):
            raise NotAdmissibleAfterMerge(f"cannot remove segment {i}")
        if ref.transitions[i] != 0:
            raise NonzeroCurvatureCollapse(
                f"segment {i} has transition {int(ref.transitions[i])} != 0")

    index_before = curve_index(ref) if ref.closed else None
    lens = lengths_from_heights(ref, state.h)
    # line offsets of every segment after height displacement
    offsets = np.array([float(ref.base_point(i) @ ref.normals[i]) for i in range(n)])
    offsets = offsets + state.h

    keep = [i for i in range(n) if i not in van]
    if ref.closed and len(keep) < 3:
        raise NotAdmissibleAfterMerge("fewer than 3 segments would remain")

    # group surviving segments into maximal same-facet runs (cyclic if closed)
    facets = ref.facet_index
    if ref.closed:
        m = len(keep)
        start = next((j for j in range(m)
                      if facets[keep[j]] != facets[keep[j - 1]]), None)
        if start is None:
            raise NotAdmissibleAfterMerge("all surviving segments are collinear")
        order = keep[start:] + keep[:start]
    else:
        order = keep
    groups = []
    for i in order:
        if groups and facets[groups[-1][-1]] == facets[i]:
            groups[-1].append(i)
        else:
            groups.append([i])

    # one line per group: half-line lines win, otherwise length-weighted mean
    g_facet, g_offset = [], []
    for grp in groups:
        g_facet.append(int(facets[grp[0]]))
        half = [i for i in grp if ref.is_halfline(i)]
        if len(half) > 1:
            raise NotAdmissibleAfterMerge("both half-lines merged into one line")
        if half:
            g_offset.append(offsets[half[0]])
        else:
            w = lens[grp]
            g_offset.append(float(np.sum(w * offsets[grp]) / np.sum(w)))

    a = ref.anisotropy
    normals = a.normals[g_facet]
    tangents = a.tangents[g_facet]
    points = np.asarray(g_offset)[:, None] * normals

    def junction(i, j):
        d = float(tangents[i, 0] * tangents[j, 1] - tangents[i, 1] * tangents[j, 0])
        if abs(d) < 1e-14:
            raise NotAdmissibleAfterMerge("parallel lines meet at a junction")
        q = points[j] - points[i]
        t = (q[0] * tangents[j, 1] - q[1] * tangents[j, 0]) / d
        return points[i] + t * tangents[i]

    ng = len(groups)
    try:
        if ref.closed:
            verts = np.array([junction((k - 1) % ng, k) for k in range(ng)])
            rebuilt = build_curve(a, verts, "closed")
        else:
            if not ref.is_halfline(groups[0][0]) or not ref.is_halfline(groups[-1][-1]):
                raise NotAdmissibleAfterMerge("half-lines lost during merge")
            verts = np.array([junction(k, k + 1) for k in range(ng - 1)])
            rebuilt = build_curve(a, verts, "unbounded", ray_directions=ref.rays)
    except (NotAdmissible, DegenerateSegment, SegmentCollapse) as exc:
        raise NotAdmissibleAfterMerge(str(exc)) from exc

    index_after = curve_index(rebuilt) if rebuilt.closed else None
    if ref.closed and index_after != index_before:
        raise NotAdmissibleAfterMerge(
            f"index changed across restart: {index_before} -> {index_after}")

    # merge_map: old segment index -> new segment index (-1 when removed).
    # build_curve never re-orders a clockwise input, and the group lines are
    # already traversed clockwise, so group position == new segment index.
    merge_map = np.full(n, -1, dtype=int)
    for k, grp in enumerate(groups):
        for i in grp:
            merge_map[i] = k
    record = RestartRecord(t=state.t, epoch_before=state.epoch,
                           vanished=tuple(van), merge_map=tuple(int(x) for x in merge_map),
                           index_before=index_before, index_after=index_after)
    new_state = FlowState(rebuilt, np.zeros(rebuilt.n), state.t,
                          state.epoch + 1, state.initial_total_length)
    return new_state, record


# ------------------------------------------------------------------- evolve

def _record(traj: Trajectory, state: FlowState, p: FlowParams):
    lens = lengths_from_heights(state.reference, state.h)
    traj.samples.append(Sample(
        t=state.t, epoch=state.epoch, h=state.h.copy(), lengths=lens,
        energy=elastic_energy(state.reference, p, h=state.h),
        h_rates=rhs(state, p)))


def _trailing_window(traj: Trajectory, state: FlowState, span: float):
    """Samples of the current epoch inside [t - span, t], or None if the
    window is not yet well populated."""
    out = []
    for s in reversed(traj.samples):
        if s.epoch != state.epoch:
            break
        if s.t < state.t - span:
            break
        out.append(s)
    if len(out) < 10:
        return None
    out.reverse()
    if state.t - out[0].t < 0.9 * span:
        return None
    return out

def _rates_settled(window) -> float:
    """Largest height-rate drift across the window (for divergence tests)."""
    first = window[0].h_rates
    return max(float(np.max(np.abs(s.h_rates - first))) for s in window)


def evolve(curve: AdmissibleCurve, p: FlowParams,
           opts: IntegratorOptions | None = None) -> Trajectory:
    """Run the flow from ``curve`` until max_time, convergence (settled
    heights and rates), or the translating-divergence heuristic."""
    if opts is None:
        opts = IntegratorOptions()
    state = FlowState(curve, np.zeros(curve.n), 0.0, 0)
    traj = Trajectory(params=p, options=opts, epochs=[curve])
    _record(traj, state, p)

    diam0 = max(curve.diameter, 1.0)
    span = 0.05 * opts.max_time
    dt = _initial_dt(state, p, opts)
    since_sample = 0
    guard = 0
    max_restarts = max(curve.n, 4)

    while state.t < opts.max_time * (1.0 - 1e-15):
        dt = min(dt, opts.max_time - state.t)
        h_new, dt_used, dt_next, _ = _attempt_step(state, p, opts, dt)
        cand = FlowState(state.reference, h_new, state.t + dt_used,
                         state.epoch, state.initial_total_length)
        pieces = _substates(state, cand, p, dt_used, opts.substeps)

        event = None
        advanced = []
        prev = state
        for piece in pieces:
            if len(detect_vanishing(piece, opts)):
                event = _bisect_event(prev, piece, p, opts, piece.t - prev.t)
                break
            advanced.append(piece)
            prev = piece

        if event is not None:
            for piece in advanced:
                _record(traj, piece, p)
            _record(traj, event, p)
            guard += 1
            if guard > max_restarts:
                raise NotAdmissibleAfterMerge("restart count exceeded segment count")
            state, rec = _restart_with_record(event, detect_vanishing(event, opts))
            traj.restarts.append(rec)
            traj.epochs.append(state.reference)
            _record(traj, state, p)
            dt = _initial_dt(state, p, opts)
            since_sample = 0
            continue

        for piece in advanced[:-1]:
            since_sample += 1
            if since_sample >= opts.sample_stride:
                _record(traj, piece, p)
                since_sample = 0
        state = advanced[-1]
        since_sample += 1
        if since_sample >= opts.sample_stride or state.t >= opts.max_time * (1.0 - 1e-15):
            _record(traj, state, p)
            since_sample = 0

            window = _trailing_window(traj, state, span)
            if window is not None:
                peak_rate = max(float(np.max(np.abs(s.h_rates))) for s in window)
                if peak_rate <= opts.stationarity_tol:
                    traj.status = STATUS_CONVERGED
                    break
                if (float(np.max(np.abs(state.h))) > _DIVERGENCE_FACTOR * diam0
                        and _rates_settled(window) <= opts.stationarity_tol):
                    traj.status = STATUS_TRANSLATING
                    break
        dt = dt_next

    if traj.status == STATUS_RUNNING:
        traj.status = STATUS_MAX_TIME
    if traj.samples[-1].t != state.t or traj.samples[-1].epoch != state.epoch:
        _record(traj, state, p)
    traj.final_state = state
    return traj


def _substates(state: FlowState, cand: FlowState, p: FlowParams,
               dt_used: float, substeps: int):
    """Realize an accepted step as equal sub-steps so the recorded samples
    resolve the dissipation integrand; error per sub-step only shrinks
    relative to the accepted full step.  Falls back to the plain endpoint if
    a sub-step leaves the admissible region (the event scan handles that)."""
    if substeps <= 1:
        return [cand]
    ref = state.reference
    dt_sub = dt_used / substeps
    pieces = []
    cur = state.h
    for i in range(substeps):
        res = _rk_pair(ref, cur, p, dt_sub)
        if res is None:
            return [cand]
        cur = res[0]
        pieces.append(FlowState(ref, cur, state.t + (i + 1) * dt_sub,
                                state.epoch, state.initial_total_length))
    return pieces


def _bisect_event(state: FlowState, cand: FlowState, p: FlowParams,
                  opts: IntegratorOptions, dt_hi: float) -> FlowState:
    """Refine the first threshold crossing inside (t, t + dt_hi]."""
    ref = state.reference
    lo, hi = 0.0, dt_hi
    h_hi = cand.h
    tol = max(opts.abs_tol, 1e-14 * max(1.0, abs(state.t)))
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        res = _rk_pair(ref, state.h, p, mid)
        if res is None:
            hi = mid  # overshoot past admissibility: event is earlier
            continue
        h_mid, _ = res
        probe = FlowState(ref, h_mid, state.t + mid, state.epoch,
                          state.initial_total_length)
        if len(detect_vanishing(probe, opts)):
            hi, h_hi = mid, h_mid
        else:
            lo = mid
    return FlowState(ref, h_hi, state.t + hi, state.epoch,
                     state.initial_total_length)


# -------------------------------------------------------------- dissipation

def _cumulative_quadrature(t: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Cumulative integral of samples (t, w) via composite Simpson on the
    nonuniform grid (quadratic through consecutive triples; trapezoid only
    when just two samples exist)."""
    m = len(t)
    out = np.zeros(m)
    if m == 2:
        out[1] = 0.5 * (w[0] + w[1]) * (t[1] - t[0])
        return out
    k = 0
    while k + 2 < m:
        h0, h1 = t[k + 1] - t[k], t[k + 2] - t[k + 1]
        i1, i2 = _quad_pair(h0, h1, w[k], w[k + 1], w[k + 2])
        out[k + 1] = out[k] + i1
        out[k + 2] = out[k + 1] + i2
        k += 2
    if k + 1 < m:  # odd leftover: quadratic through the last three points
        h0, h1 = t[-2] - t[-3], t[-1] - t[-2]
        _, i2 = _quad_pair(h0, h1, w[-3], w[-2], w[-1])
        out[-1] = out[-2] + i2
    return out


def _quad_pair(h0, h1, f0, f1, f2):
    """Integrals of the interpolating quadratic over [-h0, 0] and [0, h1]."""
    denom = h0 * h1 * (h0 + h1)
    A = (f0 * h1 + f2 * h0 - f1 * (h0 + h1)) / denom
    B = (f2 * h0**2 - f0 * h1**2 + f1 * (h1**2 - h0**2)) / denom
    i_left = A * h0**3 / 3.0 - B * h0**2 / 2.0 + f1 * h0
    i_right = A * h1**3 / 3.0 + B * h1**2 / 2.0 + f1 * h1
    return i_left, i_right


def dissipation_residual(traj: Trajectory, p: FlowParams | None = None) -> float:
    """Worst violation of the energy-dissipation identity across epochs:

        F(t_b) - F(t_a) + int_a^b sum_i |h_i'|^2 len_i / phi_dual(nu_i) dt = 0

    evaluated on the stored samples with Simpson quadrature."""
    if p is None:
        p = traj.params
    worst = 0.0
    seen = False
    for k in range(traj.n_epochs):
        samples = traj.samples_in_epoch(k)
        if len(samples) < 2:
            continue
        seen = True
        ref = traj.epochs[k]
        sup = segment_supports(ref)
        b = ref.bounded
        t = np.array([s.t for s in samples])
        F = np.array([s.energy for s in samples])
        W = np.array([float(np.sum(s.h_rates[b] ** 2 * s.lengths[b] / sup[b]))
                      for s in samples])
        # drop duplicate time stamps (event + post-restart samples share t)
        keep = np.concatenate([[True], np.diff(t) > 0.0])
        t, F, W = t[keep], F[keep], W[keep]
        if len(t) < 2:
            continue
        D = F + _cumulative_quadrature(t, W)
        worst = max(worst, float(D.max() - D.min()))
    if not seen:
        raise InsufficientSamples("no epoch holds two or more samples")
    return worst
