"""Exact Kronig-Penney reference model: unit-lattice delta comb of strength v0.

The transfer-matrix half-trace h(E) = cos(sqrt E) + v0 sin(sqrt E)/(2 sqrt E)
characterizes the spectrum (|h| <= 1), yields band edges as roots of
h = +-1, and gives the exact filled-band decay constant through the complex
band structure: at the in-gap stationary point E* of h, the imaginary Bloch
momentum arccosh|h(E*)| is the asymptotic decay rate of the density matrix.
Lattice constant and hbar^2/2m are fixed at 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .decay import qbar_and_ebar
from .errors import BracketFailureError, BranchPointNotFoundError
from .schrodinger import GapSpectrum

__all__ = [
    "KPModel",
    "BandEdges",
    "Fig1Row",
    "dispersion",
    "dispersion_derivative",
    "band_edges",
    "exact_decay",
    "fig1_sweep",
    "FIG1_COLUMNS",
]

PI_SQ = math.pi * math.pi


@dataclass(frozen=True)
class KPModel:
    """Delta comb H = -d^2/dx^2 + v0 sum_n delta(x - n) with v0 > 0."""

    v0: float

    def __post_init__(self):
        if self.v0 <= 0:
            raise ValueError("delta strength v0 must be positive")


@dataclass(frozen=True)
class BandEdges:
    """First-band edges, bottom of the second band, and derived gap data."""

    e_bottom: float
    e_minus: float
    e_plus: float

    @property
    def gap(self) -> float:
        return self.e_plus - self.e_minus

    @property
    def width(self) -> float:
        return self.e_minus - self.e_bottom

    @property
    def g_over_w(self) -> float:
        return self.gap / self.width

    def as_gap_spectrum(self) -> GapSpectrum:
        return GapSpectrum(e_minus=self.e_minus, e_plus=self.e_plus, e_bottom=self.e_bottom)


def _half_trace(v0: float, s: float) -> float:
    """h as a function of s = sqrt(E); even continuation handles s -> 0."""
    if abs(s) < 1e-8:
        # cos s + (v0/2) sin(s)/s = 1 + v0/2 + O(s^2)
        return 1.0 + 0.5 * v0 - (0.5 + v0 / 12.0) * s * s
    return math.cos(s) + 0.5 * v0 * math.sin(s) / s


def dispersion(model: KPModel, energy):
    """Transfer-matrix half-trace h(E); E is in the spectrum iff |h(E)| <= 1.

    Negative E goes through the analytic continuation cos(i k) = cosh(k)
    via the complex square root.  Accepts scalars or arrays.
    """
    e = np.asarray(energy, dtype=complex)
    s = np.sqrt(e)
    small = np.abs(s) < 1e-8
    s_safe = np.where(small, 1.0, s)
    ratio = np.where(small, 1.0 - e / 6.0, np.sin(s_safe) / s_safe)
    h = np.real(np.cos(s) + 0.5 * model.v0 * ratio)
    return float(h) if np.ndim(energy) == 0 else h


def _dh_ds(v0: float, s: float) -> float:
    """d h / d s for s > 0."""
    return -math.sin(s) + 0.5 * v0 * (s * math.cos(s) - math.sin(s)) / (s * s)


def dispersion_derivative(model: KPModel, energy: float) -> float:
    """dh/dE = (dh/ds) / (2 s) with s = sqrt(E), for E > 0."""
    if energy <= 0:
        raise ValueError("dispersion derivative implemented for E > 0")
    s = math.sqrt(energy)
    return _dh_ds(model.v0, s) / (2.0 * s)


def _bisect(f, lo: float, hi: float, *, tol: float = 1e-12) -> float:
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise BracketFailureError(
            f"no sign change on [{lo:.12g}, {hi:.12g}] (f = {flo:.3g}, {fhi:.3g})"
        )
    while hi - lo > tol * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if flo * fm < 0.0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def band_edges(model: KPModel, *, tol: float = 1e-12) -> BandEdges:
    """Edges of band 1 and the bottom of band 2 by bisection in s = sqrt(E).

    h is strictly decreasing on s in (0, pi): the bottom edge solves
    h = +1 there, the top of band 1 sits at the sign change of h + 1 around
    s = pi (exactly pi^2 for the delta comb), and the bottom of band 2
    solves h = -1 on (pi, 2 pi).
    """
    v0 = model.v0

    s_bottom = _bisect(lambda s: _half_trace(v0, s) - 1.0, 1e-9, math.pi, tol=tol)

    # just above pi the comb term pulls h below -1; shrink delta until it does
    delta = min(1.0, max(1e-3, 0.1 * v0))
    while _half_trace(v0, math.pi + delta) >= -1.0:
        delta *= 0.5
        if delta < 1e-13:
            raise BracketFailureError("could not bracket the top edge of band 1")
    s_minus = _bisect(lambda s: _half_trace(v0, s) + 1.0, s_bottom, math.pi + delta, tol=tol)

    s_plus = _bisect(lambda s: _half_trace(v0, s) + 1.0, math.pi + delta, 2.0 * math.pi, tol=tol)

    return BandEdges(e_bottom=s_bottom**2, e_minus=s_minus**2, e_plus=s_plus**2)


def exact_decay(model: KPModel, edges: BandEdges | None = None) -> tuple[float, float]:
    """Branch point E* and exact density-matrix decay rate arccosh|h(E*)|.

    E* is the root of dh/dE inside the first gap (the real branch point of
    the complex band structure, where the in-gap imaginary Bloch momentum
    arccosh|h(E)| is maximal).
    """
    if edges is None:
        edges = band_edges(model)
    v0 = model.v0
    s_lo, s_hi = math.sqrt(edges.e_minus), math.sqrt(edges.e_plus)
    f_lo, f_hi = _dh_ds(v0, s_lo), _dh_ds(v0, s_hi)
    if f_lo * f_hi > 0.0:
        raise BranchPointNotFoundError(
            "dh/dE has no sign change inside the first gap"
        )
    s_star = _bisect(lambda s: _dh_ds(v0, s), s_lo, s_hi)
    e_star = s_star**2
    h_star = _half_trace(v0, s_star)
    if abs(h_star) <= 1.0:
        raise BranchPointNotFoundError(
            f"|h(E*)| = {abs(h_star):.6g} <= 1; stationary point not in a gap"
        )
    return e_star, math.acosh(abs(h_star))


FIG1_COLUMNS = ("v0", "G", "W", "G_over_W", "q_exact", "q_bound", "rel_diff")


@dataclass(frozen=True)
class Fig1Row:
    v0: float
    gap: float
    width: float
    g_over_w: float
    q_exact: float
    q_bound: float
    rel_diff: float

    def as_tuple(self) -> tuple:
        return (self.v0, self.gap, self.width, self.g_over_w,
                self.q_exact, self.q_bound, self.rel_diff)


def fig1_sweep(v0_values) -> list[Fig1Row]:
    """Exact decay rate vs the spectral bound across comb strengths.

    Per row: band edges -> gap data -> qbar bound; branch point -> exact
    rate; rel_diff = (q_exact - q_bound) / q_exact.
    """
    rows = []
    for v0 in v0_values:
        model = KPModel(v0=float(v0))
        edges = band_edges(model)
        qbar, _, _ = qbar_and_ebar(edges.as_gap_spectrum())
        _, q_exact = exact_decay(model, edges)
        rows.append(
            Fig1Row(
                v0=float(v0),
                gap=edges.gap,
                width=edges.width,
                g_over_w=edges.g_over_w,
                q_exact=q_exact,
                q_bound=qbar,
                rel_diff=(q_exact - qbar) / q_exact,
            )
        )
    return rows
