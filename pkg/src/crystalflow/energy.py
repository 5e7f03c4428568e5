"""Anisotropic elastic energy and its first variation.

For a curve with segment lengths L_i, facet data H^1(F_i), phi_dual(nu_i) and
transition numbers c_i, the energy is

    F_alpha = sum_i phi_dual(nu_i) * ( len_i + alpha * c_i^2 H^1(F_i)^2 / L_i )

where len_i is the full segment length for bounded segments and the windowed
(disc-clipped) length for half-lines; half-lines carry no curvature term
(c = 0).  Heights enter every quantity affinely through the length
transformation, so energies along a flow are evaluated without materializing
intermediate curves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .anisotropy import Anisotropy, facets_adjacent
from .curve import AdmissibleCurve, lengths_from_heights, measure_heights, _cot
from .errors import (
    InvalidTriple,
    NotParallel,
    NotStationary,
    ParamOutOfRange,
    WindowTooSmall,
    ZeroLengthSegment,
)

__all__ = [
    "FlowParams",
    "elastic_energy",
    "first_variation",
    "facet_identity_residual",
    "stationary_energy_gap",
    "windowed_lengths",
]


@dataclass(frozen=True)
class FlowParams:
    """Elastic flow parameters: bending weight alpha and, for unbounded
    curves, the radius of the origin-centered observation disc."""

    alpha: float
    window_radius: float | None = None

    def __post_init__(self):
        if not (self.alpha > 0.0):
            raise ParamOutOfRange(f"alpha must be > 0, got {self.alpha}")
        if self.window_radius is not None and not (self.window_radius > 0.0):
            raise ParamOutOfRange("window_radius must be > 0 when given")


def segment_supports(curve: AdmissibleCurve) -> np.ndarray:
    """phi_dual(nu_i) per segment."""
    return curve.anisotropy.supports[curve.facet_index]


# ------------------------------------------------------------------- window

def _halfline_chord(curve: AdmissibleCurve, which: int, radius: float) -> float:
    """Length of the reference half-line inside the window disc."""
    if which == 0:
        b, d = curve.vertices[0], curve.rays[0]
    else:
        b, d = curve.vertices[-1], curve.rays[1]
    disc = radius * radius - float(b @ b) + float(b @ d) ** 2
    if radius * radius <= float(b @ b) or disc <= 0.0:
        raise WindowTooSmall("half-line junction lies outside the window disc")
    return float(-(b @ d) + np.sqrt(disc))


def _line_chord(curve: AdmissibleCurve, which: int, radius: float) -> float:
    """Full chord of the half-line's supporting line across the disc."""
    b, d = ((curve.vertices[0], curve.rays[0]) if which == 0
            else (curve.vertices[-1], curve.rays[1]))
    dist2 = float((d[0] * b[1] - d[1] * b[0]) ** 2)
    return 2.0 * np.sqrt(max(radius * radius - dist2, 0.0))


def windowed_lengths(curve: AdmissibleCurve, p: FlowParams, h=None) -> np.ndarray:
    """Per-segment lengths entering the windowed energy.

    Bounded segments: the (possibly height-shifted) true length.  Half-lines:
    the clip of the segment to the window disc, evaluated affinely in the
    interior neighbor's height.  Raises WindowTooSmall when the window fails
    to contain the bounded part of the curve or a clip degenerates.
    """
    if h is None:
        lengths = np.array(curve.lengths)
    else:
        lengths = lengths_from_heights(curve, h)
    if curve.closed:
        return lengths

    if p.window_radius is None:
        raise WindowTooSmall("window_radius is required for unbounded curves")
    R = float(p.window_radius)
    if np.any(np.linalg.norm(curve.vertices, axis=1) >= R):
        raise WindowTooSmall("window disc must strictly contain every junction")

    n = curve.n
    th = curve.thetas
    for which, i, h_adj, th_adj in ((0, 0, None, th[1]), (1, n - 1, None, th[n - 1])):
        chord = _halfline_chord(curve, which, R)
        if h is not None:
            h_adj = h[1] if which == 0 else h[n - 2]
            chord = chord - h_adj / np.sin(th_adj)
        cap = _line_chord(curve, which, R)
        if not (0.0 < chord <= cap * (1.0 + 1e-12)):
            raise WindowTooSmall(
                "half-line clip left the window (junction drifted too far)")
        lengths[i] = chord
    return lengths


# ------------------------------------------------------------------- energy

def elastic_energy(curve: AdmissibleCurve, p: FlowParams, h=None) -> float:
    """Windowed anisotropic elastic energy, optionally at height vector h."""
    lens = windowed_lengths(curve, p, h)
    b = curve.bounded
    if np.any(lens[b] <= 0.0):
        raise ZeroLengthSegment("nonpositive segment length in energy evaluation")
    sup = segment_supports(curve)
    dseg = curve.anisotropy.delta[curve.facet_index]
    c2 = curve.transitions.astype(float) ** 2
    length_part = float(np.sum(sup * lens))
    with np.errstate(divide="ignore"):
        curv = np.where(b & (c2 > 0.0), c2 * dseg / lens, 0.0)
    return length_part + p.alpha * float(curv.sum())


def first_variation(curve: AdmissibleCurve, p: FlowParams, h=None,
                    lengths=None) -> np.ndarray:
    """Gradient g of the energy w.r.t. normal displacement, per segment.

    g_i = c_i H^1(F_i)/L_i + (alpha/L_i) * (
            c_{i-1}^2 d_{i-1} / (L_{i-1}^2 sin th_i)
          + c_i^2 d_i (cot th_i + cot th_{i+1}) / L_i^2
          + c_{i+1}^2 d_{i+1} / (L_{i+1}^2 sin th_{i+1}) ),

    with d_j = H^1(F_j)^2 phi_dual(nu_j); zero on half-lines.  The flow moves
    each segment with normal velocity h_i' = -phi_dual(nu_i) * g_i.
    """
    if lengths is None:
        lengths = curve.lengths if h is None else lengths_from_heights(curve, h)
    L = np.asarray(lengths, dtype=float)
    bmask = curve.bounded
    if np.any(L[bmask] <= 0.0):
        raise ZeroLengthSegment("nonpositive segment length in first variation")

    n = curve.n
    a = curve.anisotropy
    f = curve.facet_index
    HF = a.facet_lengths[f]
    dseg = a.delta[f]
    c = curve.transitions.astype(float)
    th_lo = curve.thetas[:n]
    th_hi = curve.thetas[1:]

    cp = curve.shift_prev(c, 0.0)
    cn = curve.shift_next(c, 0.0)
    dp = curve.shift_prev(dseg, 0.0)
    dn = curve.shift_next(dseg, 0.0)
    Lp = curve.shift_prev(L, np.inf)
    Ln = curve.shift_next(L, np.inf)

    with np.errstate(divide="ignore", invalid="ignore"):
        t_prev = np.where(cp != 0.0, cp**2 * dp / (Lp**2 * np.sin(th_lo)), 0.0)
        t_self = np.where(c != 0.0, c**2 * dseg * (_cot(th_lo) + _cot(th_hi)) / L**2, 0.0)
        t_next = np.where(cn != 0.0, cn**2 * dn / (Ln**2 * np.sin(th_hi)), 0.0)
        g = c * HF / L + (p.alpha / L) * (t_prev + t_self + t_next)
    g = np.where(bmask, g, 0.0)
    return g


# --------------------------------------------------------------- identities

def facet_identity_residual(a: Anisotropy, f_prev: int, f_mid: int,
                            f_next: int) -> float:
    """Residual of the support/angle identity for one admissible triple:

        phi_dual(nu_prev)/sin th1 + phi_dual(nu_mid)(cot th1 + cot th2)
        + phi_dual(nu_next)/sin th2 + c * H^1(F_mid)  =  0.
    """
    if not facets_adjacent(a, f_prev, f_mid) or not facets_adjacent(a, f_mid, f_next):
        raise InvalidTriple(
            f"facets ({f_prev}, {f_mid}, {f_next}) are not consecutive-adjacent")

    def corner(fa, fb):
        na, nb = a.normals[fa], a.normals[fb]
        dpsi = float(np.arctan2(na[0] * nb[1] - na[1] * nb[0], na @ nb))
        return np.pi - dpsi, (1 if dpsi < 0.0 else -1)

    th1, s1 = corner(f_prev, f_mid)
    th2, s2 = corner(f_mid, f_next)
    c = 1 if (s1 == 1 and s2 == 1) else (-1 if (s1 == -1 and s2 == -1) else 0)
    r = (a.supports[f_prev] / np.sin(th1)
         + a.supports[f_mid] * (_cot(th1) + _cot(th2))
         + a.supports[f_next] / np.sin(th2)
         + c * a.facet_lengths[f_mid])
    return abs(float(r))


def stationary_energy_gap(stationary: AdmissibleCurve, other: AdmissibleCurve,
                          p: FlowParams, tol: float = 1e-8) -> float:
    """Exact energy excess of a parallel curve over a stationary one:

        gap = alpha * sum_i c_i^2 d_i (Lbar_i - L_i)^2 / (L_i^2 Lbar_i).

    Requires ``stationary`` to satisfy the stationarity system to ``tol``
    and ``other`` to be parallel to it (same lines family, half-lines
    coinciding)."""
    h = measure_heights(stationary, other)  # raises NotParallel on mismatch
    if not stationary.closed:
        scale = max(stationary.total_bounded_length, 1.0)
        if abs(h[0]) > 1e-9 * scale or abs(h[-1]) > 1e-9 * scale:
            raise NotParallel("half-lines of a parallel pair must coincide")

    g = first_variation(stationary, p)
    res = float(np.max(np.abs(g * np.where(stationary.bounded,
                                           stationary.lengths, 0.0))))
    if res > tol:
        raise NotStationary(f"stationarity residual {res:.3e} exceeds {tol:.1e}")

    c2 = stationary.transitions.astype(float) ** 2
    mask = stationary.bounded & (c2 > 0.0)
    L = stationary.lengths[mask]
    Lbar = other.lengths[mask]
    dseg = stationary.anisotropy.delta[stationary.facet_index[mask]]
    terms = c2[mask] * dseg * (Lbar - L) ** 2 / (L**2 * Lbar)
    return p.alpha * float(np.sum(terms))
