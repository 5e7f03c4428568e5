"""Stationary and translating solutions for the square anisotropy, plus
post-hoc trajectory diagnostics.

The generators build exact members of each known stationary family (square
Wulff shape [-1, 1]^2):

* staircase           -- all transition numbers zero, arbitrary lengths;
* right-angle-chain   -- blocks of two sqrt(2*alpha) sides with alternating
                         sign, joined by straight connectors (open n = 3m+1,
                         closed n = 6m with two closure constraints);
* double-right-angle-chain -- blocks of three curved segments a, sqrt(2*alpha),
                         b with 1/a^2 + 1/b^2 = 1/(2*alpha) (open n = 4m+1;
                         closed n = 8m forces a = b = sqrt(4*alpha) and one
                         closure constraint);
* wulff-square        -- the square of side sqrt(4*alpha).

The classifier inverts the construction from the transition-number pattern
(up to index rotation and orientation reversal) after checking the
stationarity residual.  Translating-profile generators follow the known
one-parameter families; translation_check fits a single velocity lambda to
the height rates and reports the worst deviation from lambda * <eta, nu_i>.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .anisotropy import Anisotropy, square_anisotropy
from .curve import (
    AdmissibleCurve,
    build_curve,
    lengths_from_heights,
    reconstruct_parallel,
)
from .energy import FlowParams, first_variation
from .errors import (
    HalfLinesNotParallel,
    InvalidClassParams,
    NotStationary,
    ParamOutOfRange,
    SegmentCollapse,
)
from .flow import FlowState, IntegratorOptions, Trajectory, rhs

__all__ = [
    "StationaryClass",
    "TranslationReport",
    "ConvergenceReport",
    "KIND_STAIRCASE",
    "KIND_RIGHT_ANGLE_CHAIN",
    "KIND_DOUBLE_CHAIN",
    "KIND_WULFF_SQUARE",
    "KIND_UNCLASSIFIED",
    "stationarity_residual",
    "make_stationary_square_aniso",
    "classify_stationary_square",
    "translation_check",
    "make_translating_square_aniso",
    "make_nontranslating_two_rectangles",
    "convergence_monitor",
]

KIND_STAIRCASE = "staircase"
KIND_RIGHT_ANGLE_CHAIN = "right-angle-chain"
KIND_DOUBLE_CHAIN = "double-right-angle-chain"
KIND_WULFF_SQUARE = "wulff-square"
KIND_UNCLASSIFIED = "unclassified"

TRANSLATING_KINDS = ("single-step", "convex-rectangle", "pocket", "convex-chain")


@dataclass(frozen=True)
class StationaryClass:
    kind: str
    closed: bool = False
    m: int | None = None
    a: float | None = None
    b: float | None = None


@dataclass(frozen=True)
class TranslationReport:
    eta: tuple
    velocity: float
    residual: float
    accepted: bool


@dataclass(frozen=True)
class ConvergenceReport:
    converged: bool
    status: str
    limit: AdmissibleCurve | None
    residual: float | None
    stationary: bool
    generalized: bool
    classification: StationaryClass | None


# -------------------------------------------------------------- stationarity

def stationarity_residual(curve: AdmissibleCurve, p: FlowParams) -> float:
    """max_i |c_i H^1(F_i) + alpha * (neighbor curvature terms)| over bounded
    segments, i.e. the per-segment defect of the stationarity system."""
    g = first_variation(curve, p)
    b = curve.bounded
    if not np.any(b):
        return 0.0
    return float(np.max(np.abs(g[b] * curve.lengths[b])))


def _require_square(a: Anisotropy):
    ok = (a.K == 4
          and np.allclose(np.abs(a.normals), np.eye(2)[[0, 1, 0, 1]], atol=1e-9)
          and np.allclose(a.supports, 1.0, atol=1e-9))
    if not ok:
        raise InvalidClassParams(
            "this operation requires the square anisotropy [-1, 1]^2")


# square facet order produced by square_anisotropy():
#   0: +e1 (right), 1: -e2 (bottom), 2: -e1 (left), 3: +e2 (top)
def _steps_to_facets(s, f0=3):
    f = [f0]
    for sk in s:
        f.append((f[-1] + sk) % 4)
    return f


def _assemble(a, facets, lens, closed, start=(0.0, 0.0)):
    """Build a curve from per-segment facets and lengths (inf on half-lines)."""
    taus = a.tangents[np.asarray(facets, dtype=int)]
    n = len(facets)
    if closed:
        pts = np.zeros((n, 2))
        pts[0] = start
        for k in range(1, n):
            pts[k] = pts[k - 1] + lens[k - 1] * taus[k - 1]
        defect = (pts[n - 1] + lens[n - 1] * taus[n - 1]) - pts[0]
        if np.linalg.norm(defect) > 1e-9 * max(np.sum(lens), 1.0):
            raise InvalidClassParams(f"chain does not close (defect {defect})")
        return build_curve(a, pts, "closed")
    pts = np.zeros((n - 1, 2))
    pts[0] = start
    for k in range(1, n - 1):
        pts[k] = pts[k - 1] + lens[k] * taus[k]
    rays = np.array([-taus[0], taus[-1]])
    return build_curve(a, pts, "unbounded", ray_directions=rays)


def _default_free(count, scale, m):
    return [scale * (1.0 + (i + 1) / (4.0 * max(m, 1))) for i in range(count)]


def _fill_closing_connectors(lens, taus, groups, connectors, m):
    """Assign connector lengths for a closed chain.

    Connectors within a direction group share the same tangent, so closure
    fixes each group's total; all but the last connector of each group are
    free.  ``connectors`` lists the free values in segment order; defaults
    spread each group total with a mild variation so no two are equal.
    """
    fixed = sum(lens[i] * taus[i] for i in range(len(lens)))
    totals = {}
    for group in groups:
        t = taus[group[0]]
        for i in group[1:]:
            if not np.allclose(taus[i], t):  # pragma: no cover - by pattern
                raise InvalidClassParams("connector group mixes directions")
        total = -float(fixed @ t)
        if total <= 0.0:  # pragma: no cover - sides always leave room
            raise InvalidClassParams("sides leave no room for connectors")
        totals[group[0]] = total
    free_slots = sorted(i for group in groups for i in group[:-1])
    defaults = {}
    for group in groups:
        mean = totals[group[0]] / len(group)
        for pos, slot in enumerate(group[:-1]):
            defaults[slot] = mean * (1.0 + 0.1 * ((pos + 1.0) / len(group) - 0.5))
    free = ([defaults[slot] for slot in free_slots]
            if connectors is None else list(connectors))
    if len(free) != len(free_slots):
        raise InvalidClassParams(
            f"closed chain m={m} takes {len(free_slots)} free connectors")
    for slot, v in zip(free_slots, free):
        if v <= 0.0:
            raise InvalidClassParams("connector lengths must be positive")
        lens[slot] = v
    for group in groups:
        solved = group[-1]
        val = totals[group[0]] - float(np.sum(lens[list(group[:-1])]))
        if val <= 0.0:
            raise InvalidClassParams(
                "free connectors leave no room to close the chain")
        lens[solved] = val


def make_stationary_square_aniso(klass: StationaryClass, alpha: float,
                                 connectors=None) -> AdmissibleCurve:
    """Construct an exact member of a stationary family (square anisotropy).

    ``connectors`` overrides the free connector lengths where the family has
    them; closed chains solve their closure constraints for the last
    connector of each direction group.
    """
    if alpha <= 0.0:
        raise InvalidClassParams("alpha must be positive")
    a = square_anisotropy()
    q = np.sqrt(2.0 * alpha)
    kind = klass.kind

    if kind == KIND_WULFF_SQUARE:
        r = np.sqrt(alpha)
        return build_curve(a, [(-r, r), (r, r), (r, -r), (-r, -r)], "closed")

    if kind == KIND_STAIRCASE:
        if klass.closed:
            raise InvalidClassParams("a staircase cannot close up")
        n = klass.m if klass.m is not None else 7
        if n < 2:
            raise InvalidClassParams("staircase needs at least 2 segments")
        lens = np.full(n, np.inf)
        if connectors is not None:
            if len(connectors) != n - 2:
                raise InvalidClassParams(
                    f"staircase with {n} segments takes {n - 2} lengths")
            lens[1:-1] = connectors
        else:
            lens[1:-1] = _default_free(n - 2, 1.5 * q, n)
        if np.any(lens[1:-1] <= 0.0):
            raise InvalidClassParams("staircase lengths must be positive")
        s = [(-1) ** k for k in range(1, n)]  # alternating turns, all c = 0
        return _assemble(a, _steps_to_facets(s), lens, closed=False)

    if kind == KIND_RIGHT_ANGLE_CHAIN:
        m = klass.m
        if m is None or m < 1:
            raise InvalidClassParams("right-angle chain needs m >= 1")
        if not klass.closed:
            n = 3 * m + 1
            sigma = [1 if j % 2 == 0 else -1 for j in range(m)]
            s = [sigma[(k - 1) // 3] for k in range(1, n)]
            lens = np.full(n, np.inf)
            for j in range(m):
                lens[3 * j + 1] = lens[3 * j + 2] = q
            free = (_default_free(m - 1, 2.5 * q, m)
                    if connectors is None else list(connectors))
            if len(free) != m - 1:
                raise InvalidClassParams(f"open chain m={m} takes {m - 1} connectors")
            if any(v <= 0.0 for v in free):
                raise InvalidClassParams("connector lengths must be positive")
            for j, v in enumerate(free):
                lens[3 * (j + 1)] = v
            return _assemble(a, _steps_to_facets(s), lens, closed=False)
        # closed: n = 6m, 2m blocks of alternating sign, 2m connectors.
        n = 6 * m
        blocks = 2 * m
        sigma = [1 if j % 2 == 0 else -1 for j in range(blocks)]
        s = [sigma[((k - 1) % n) // 3] for k in range(n)]  # corner k slot
        facets = _steps_to_facets(s[1:], f0=3)
        if (facets[-1] + s[0]) % 4 != facets[0]:  # pragma: no cover
            raise InvalidClassParams("inconsistent closed-chain steps")
        taus = a.tangents[np.asarray(facets)]
        lens = np.full(n, 0.0)
        side_idx, conn_idx = [], []
        for j in range(blocks):
            conn_idx.append(3 * j)
            side_idx += [3 * j + 1, 3 * j + 2]
        for i in side_idx:
            lens[i] = q
        horiz = [i for i in conn_idx if abs(taus[i][0]) > 0.5]
        vert = [i for i in conn_idx if abs(taus[i][1]) > 0.5]
        _fill_closing_connectors(lens, taus, (horiz, vert), connectors, m)
        return _assemble(a, facets, lens, closed=True)

    if kind == KIND_DOUBLE_CHAIN:
        m = klass.m
        if m is None or m < 1:
            raise InvalidClassParams("double chain needs m >= 1")
        if not klass.closed:
            aa, bb = klass.a, klass.b
            if aa is None and bb is None:
                aa = 1.35 * q
            if aa is not None:
                if aa <= q:
                    raise InvalidClassParams("need a > sqrt(2*alpha)")
                bb_solved = 1.0 / np.sqrt(1.0 / (2.0 * alpha) - 1.0 / aa**2)
                if bb is not None and abs(bb - bb_solved) > 1e-9 * bb_solved:
                    raise InvalidClassParams(
                        "lengths a, b must satisfy 1/a^2 + 1/b^2 = 1/(2*alpha)")
                bb = bb_solved
            else:
                if bb <= q:
                    raise InvalidClassParams("need b > sqrt(2*alpha)")
                aa = 1.0 / np.sqrt(1.0 / (2.0 * alpha) - 1.0 / bb**2)
            n = 4 * m + 1
            sigma = [1 if j % 2 == 0 else -1 for j in range(m)]
            s = [sigma[(k - 1) // 4] for k in range(1, n)]
            lens = np.full(n, np.inf)
            for j in range(m):
                first, second = (aa, bb) if j % 2 == 0 else (bb, aa)
                lens[4 * j + 1] = first
                lens[4 * j + 2] = q
                lens[4 * j + 3] = second
            free = (_default_free(m - 1, 2.0 * q, m)
                    if connectors is None else list(connectors))
            if len(free) != m - 1:
                raise InvalidClassParams(f"open double chain m={m} takes {m - 1} connectors")
            for j, v in enumerate(free):
                if v <= 0.0:
                    raise InvalidClassParams("connector lengths must be positive")
                lens[4 * (j + 1)] = v
            return _assemble(a, _steps_to_facets(s), lens, closed=False)
        # closed: n = 8m, horizontals forced to sqrt(4*alpha)
        side = np.sqrt(4.0 * alpha)
        for val, name in ((klass.a, "a"), (klass.b, "b")):
            if val is not None and abs(val - side) > 1e-9 * side:
                raise InvalidClassParams(
                    f"closed double chain forces {name} = sqrt(4*alpha)")
        n = 8 * m
        blocks = 2 * m
        sigma = [1 if j % 2 == 0 else -1 for j in range(blocks)]
        s = [sigma[((k - 1) % n) // 4] for k in range(n)]
        facets = _steps_to_facets(s[1:], f0=3)
        taus = a.tangents[np.asarray(facets)]
        lens = np.zeros(n)
        conn_idx = [4 * j for j in range(blocks)]
        for j in range(blocks):
            lens[4 * j + 1] = side
            lens[4 * j + 2] = q
            lens[4 * j + 3] = side
        _fill_closing_connectors(lens, taus, (conn_idx,), connectors, m)
        return _assemble(a, facets, lens, closed=True)

    raise InvalidClassParams(f"unknown stationary kind {kind!r}")


# --------------------------------------------------------------- classifier

def _orientation_variants(c, lens, closed):
    """(c, lengths) under index rotation (closed) and orientation reversal."""
    out = [(c, lens), (-c[::-1], lens[::-1])]
    if closed:
        n = len(c)
        rotated = []
        for base_c, base_l in out:
            for r in range(1, n):
                rotated.append((np.roll(base_c, -r), np.roll(base_l, -r)))
        out.extend(rotated)
    return out


def classify_stationary_square(curve: AdmissibleCurve, alpha: float,
                               tol: float = 1e-8) -> StationaryClass:
    """Match a stationary curve against the known square-anisotropy families."""
    _require_square(curve.anisotropy)
    p = FlowParams(alpha=alpha)
    res = stationarity_residual(curve, p)
    if res > tol:
        raise NotStationary(
            f"stationarity residual {res:.3e} exceeds tolerance {tol:.1e}")

    c = curve.transitions.astype(int)
    L = np.array(curve.lengths)
    n = curve.n

    if curve.closed:
        if np.all(c == 1) or np.all(c == -1):
            return StationaryClass(KIND_WULFF_SQUARE, closed=True)
        for cc, _ in _orientation_variants(c, L, closed=True):
            if n % 6 == 0:
                m = n // 6
                if np.array_equal(cc, _closed_chain_pattern(m, period=3)):
                    return StationaryClass(KIND_RIGHT_ANGLE_CHAIN, closed=True, m=m)
            if n % 8 == 0:
                m = n // 8
                if np.array_equal(cc, _closed_chain_pattern(m, period=4)):
                    side = float(np.sqrt(4.0 * alpha))
                    return StationaryClass(KIND_DOUBLE_CHAIN, closed=True,
                                           m=m, a=side, b=side)
        return StationaryClass(KIND_UNCLASSIFIED, closed=True)

    if np.all(c == 0):
        return StationaryClass(KIND_STAIRCASE, closed=False, m=n)
    for cc, ll in _orientation_variants(c, L, closed=False):
        if n >= 4 and (n - 1) % 3 == 0:
            m = (n - 1) // 3
            if np.array_equal(cc, _open_chain_pattern(m, period=3)):
                return StationaryClass(KIND_RIGHT_ANGLE_CHAIN, closed=False, m=m)
        if n >= 5 and (n - 1) % 4 == 0:
            m = (n - 1) // 4
            if np.array_equal(cc, _open_chain_pattern(m, period=4)):
                return StationaryClass(KIND_DOUBLE_CHAIN, closed=False, m=m,
                                       a=float(ll[1]), b=float(ll[3]))
    return StationaryClass(KIND_UNCLASSIFIED, closed=False)


def _open_chain_pattern(m, period):
    sigma = [1 if j % 2 == 0 else -1 for j in range(m)]
    c = [0]
    for j in range(m):
        c += [sigma[j]] * (period - 1)
        c.append(0)
    return np.array(c, dtype=int)


def _closed_chain_pattern(m, period):
    sigma = [1 if j % 2 == 0 else -1 for j in range(2 * m)]
    c = []
    for j in range(2 * m):
        c.append(0)
        c += [sigma[j]] * (period - 1)
    return np.array(c, dtype=int)


# -------------------------------------------------------------- translating

def translation_check(curve: AdmissibleCurve, p: FlowParams, eta,
                      tol: float = 1e-8) -> TranslationReport | None:
    """Fit a translation velocity to the initial height rates.

    Returns None for closed curves (bounded curves never translate).  For an
    unbounded curve whose half-lines are parallel to eta, returns a report
    with the best-fit lambda and the residual max_i |h_i' - lambda <eta, nu_i>|;
    ``accepted`` requires residual <= tol and lambda > 0.
    """
    if curve.closed:
        return None
    eta = np.asarray(eta, dtype=float)
    nrm = float(np.linalg.norm(eta))
    if nrm == 0.0:
        raise HalfLinesNotParallel("direction eta must be nonzero")
    eta = eta / nrm
    for ray in curve.rays:
        if abs(ray[0] * eta[1] - ray[1] * eta[0]) > 1e-9:
            raise HalfLinesNotParallel(
                "half-lines are not parallel to the requested direction")

    state = FlowState(curve, np.zeros(curve.n), 0.0, 0)
    r = rhs(state, p)
    b = curve.bounded
    d = curve.normals @ eta
    denom = float(np.sum(d[b] ** 2))
    lam = float(np.sum(r[b] * d[b]) / denom) if denom > 0.0 else 0.0
    residual = float(np.max(np.abs(r[b] - lam * d[b]))) if np.any(b) else 0.0
    accepted = bool(residual <= tol and lam > 0.0)
    return TranslationReport(eta=(float(eta[0]), float(eta[1])),
                             velocity=lam, residual=residual, accepted=accepted)


def make_translating_square_aniso(kind: str, alpha: float, **params):
    """Build a translating profile (square anisotropy, direction e2).

    Returns (curve, lambda).  Kinds and parameters:

    * "single-step":       lam in (0, 2/sqrt(2*alpha))
    * "convex-rectangle":  a in (sqrt(2*alpha), sqrt(4*alpha))
    * "pocket":            a > 0 and lam in (0, 2/(a + sqrt(2*alpha)))
    * "convex-chain":      m >= 1 and 1/(2*alpha) < a < (m+1)/(2*m*alpha),
                           where a is the shared sum 1/l_i^2 + 1/l_{i+2}^2
                           over consecutive leg pairs
    """
    if alpha <= 0.0:
        raise ParamOutOfRange("alpha must be positive")
    a4 = square_anisotropy()
    q = np.sqrt(2.0 * alpha)

    if kind == "single-step":
        lam = params.pop("lam", None)
        _no_extra(params)
        if lam is None or not (0.0 < lam < 2.0 / q):
            raise ParamOutOfRange(f"single-step needs 0 < lam < {2.0 / q:.6g}")
        l3 = np.sqrt(2.0 * alpha / (1.0 - lam * q / 2.0))
        l4 = (2.0 - lam * q) / lam
        lens = np.array([np.inf, q, l3, l4, np.inf])
        facets = [0, 3, 2, 1, 2]
        return _assemble(a4, facets, lens, closed=False), float(lam)

    if kind == "convex-rectangle":
        aa = params.pop("a", None)
        _no_extra(params)
        if aa is None or not (q < aa < np.sqrt(4.0 * alpha)):
            raise ParamOutOfRange(
                "convex-rectangle needs sqrt(2*alpha) < a < sqrt(4*alpha)")
        P = 1.0 - 2.0 * alpha / aa**2
        Q = 4.0 * alpha / aa**2 - 1.0
        lam = np.sqrt((1.0 / (2.0 * alpha))
                      / (1.0 / (4.0 * P**2) + 1.0 / (4.0 * Q**2)))
        l2 = 2.0 * P / lam
        l4 = 2.0 * Q / lam
        lens = np.array([np.inf, l2, aa, l4, aa, l2, np.inf])
        facets = [0, 3, 2, 1, 0, 3, 2]
        return _assemble(a4, facets, lens, closed=False), float(lam)

    if kind == "pocket":
        aa = params.pop("a", None)
        lam = params.pop("lam", None)
        _no_extra(params)
        if aa is None or aa <= 0.0:
            raise ParamOutOfRange("pocket needs a > 0")
        if lam is None or not (0.0 < lam < 2.0 / (aa + q)):
            raise ParamOutOfRange(f"pocket needs 0 < lam < {2.0 / (aa + q):.6g}")
        l3 = np.sqrt(4.0 * alpha / (lam * aa))
        rest = 2.0 - lam * q - lam * aa
        l5 = np.sqrt(4.0 * alpha / rest)
        l6 = rest / lam
        lens = np.array([np.inf, aa, l3, q, l5, l6, np.inf])
        facets = [0, 3, 0, 1, 2, 3, 2]
        return _assemble(a4, facets, lens, closed=False), float(lam)

    if kind == "convex-chain":
        m = params.pop("m", None)
        aa = params.pop("a", None)
        _no_extra(params)
        if m is None or m < 1:
            raise ParamOutOfRange("convex-chain needs m >= 1")
        lo, hi = 1.0 / (2.0 * alpha), (m + 1.0) / (2.0 * m * alpha)
        if aa is None or not (lo < aa < hi):
            raise ParamOutOfRange(
                f"convex-chain m={m} needs a in ({lo:.6g}, {hi:.6g})")
        bb = m * aa / (m + 1.0)
        x = _convex_chain_inverse_squares(m, aa, bb)
        if np.any(x <= 0.0):
            raise ParamOutOfRange("leg lengths degenerate for this (m, a)")
        lam = np.sqrt(2.0 / (alpha * (1.0 / (2.0 * aa * alpha - 1.0) ** 2
                                      + 1.0 / (1.0 - 2.0 * bb * alpha) ** 2)))
        l_out = 2.0 * (1.0 - 2.0 * bb * alpha) / lam   # horizontals, j % 4 == 1
        l_in = 2.0 * (2.0 * aa * alpha - 1.0) / lam    # horizontals, j % 4 == 3
        n = 4 * m + 3
        lens = np.full(n, np.inf)
        for j in range(1, n - 1):
            if j % 2 == 0:
                lens[j] = 1.0 / np.sqrt(x[(j + 1 - 3) // 2])  # legs
            else:
                lens[j] = l_out if j % 4 == 1 else l_in
        facets = [(-k) % 4 for k in range(n)]
        return _assemble(a4, facets, lens, closed=False), float(lam)

    raise ParamOutOfRange(f"unknown translating kind {kind!r}; "
                          f"expected one of {TRANSLATING_KINDS}")


def _no_extra(params):
    if params:
        raise ParamOutOfRange(f"unexpected parameters: {sorted(params)}")


def _convex_chain_inverse_squares(m: int, a: float, b: float) -> np.ndarray:
    """Inverse squared leg lengths x_j = 1/l^2 for the 2m legs of the
    convex chain, in traversal order."""
    x = np.zeros(2 * m)  # slot j holds the leg that is (2j + 2) segments in

    def put(pos, val):
        # pos is the odd 1-based position of the leg along the chain
        x[(pos - 3) // 2] = val

    if m % 2 == 0:
        k = m // 2
        for i in range(0, k + 1):
            val = (k - i) * a - (2 * k - 2 * i - 1) / 2.0 * b
            put(3 + 4 * i, val)
            put(8 * k - 4 * i + 1, val)
        for i in range(1, k + 1):
            val = (2 * k - 2 * i + 1) / 2.0 * b - (k - i) * a
            put(1 + 4 * i, val)
            put(8 * k - 4 * i + 3, val)
    else:
        k = (m - 1) // 2
        for i in range(0, k + 1):
            val = (2 * k - 2 * i + 1) / 2.0 * a - (k - i) * b
            put(3 + 4 * i, val)
            put(8 * k - 4 * i + 5, val)
        for i in range(0, k + 1):
            val = (k - i) * b - (2 * k - 2 * i - 1) / 2.0 * a
            put(5 + 4 * i, val)
            put(8 * k - 4 * i + 3, val)
    return x


def make_nontranslating_two_rectangles(alpha: float) -> AdmissibleCurve:
    """Admissible two-rectangle profile with vertical half-lines that looks
    like a translating candidate but is rejected for every velocity (one of
    its perpendicular segments cannot have zero rate)."""
    if alpha <= 0.0:
        raise ParamOutOfRange("alpha must be positive")
    a4 = square_anisotropy()
    q = np.sqrt(2.0 * alpha)
    s = [-1, 1, 1, 1, 1, -1, -1, -1, -1, -1]
    facets = _steps_to_facets(s, f0=0)
    lens = np.full(11, np.inf)
    lens[1:-1] = [1.3 * q, q, 1.1 * q, q, 1.6 * q, 1.2 * q, q, 1.4 * q, q]
    return _assemble(a4, facets, lens, closed=False)


# -------------------------------------------------------------- convergence

def convergence_monitor(traj: Trajectory,
                        opts: IntegratorOptions | None = None) -> ConvergenceReport:
    """Post-hoc convergence diagnosis of a finished trajectory: materialize
    the final curve, measure its stationarity residual, and classify it when
    the anisotropy is the square."""
    if opts is None:
        opts = traj.options
    converged = traj.status == "Converged"
    state = traj.final_state
    if state is None:
        return ConvergenceReport(False, traj.status, None, None, False, False, None)

    limit = None
    residual = None
    stationary = False
    generalized = False
    try:
        limit = reconstruct_parallel(state.reference, state.h)
    except SegmentCollapse:
        # heights settled onto a curve with a (numerically) vanished segment
        generalized = converged
    if limit is not None:
        residual = stationarity_residual(limit, traj.params)
        lens = lengths_from_heights(state.reference, state.h)
        b = state.reference.bounded
        thr = max(float(opts.vanish_fraction), 1e-6)
        tiny = bool(np.any(lens[b] <= thr * np.max(lens[b]))) if np.any(b) else False
        stationary = converged and residual <= 10.0 * opts.stationarity_tol
        generalized = converged and not stationary and tiny

    classification = None
    if limit is not None and stationary:
        try:
            classification = classify_stationary_square(
                limit, traj.params.alpha, tol=max(100.0 * opts.stationarity_tol, 1e-6))
        except (InvalidClassParams, NotStationary):
            classification = None
    return ConvergenceReport(converged, traj.status, limit, residual,
                             stationary, generalized, classification)
