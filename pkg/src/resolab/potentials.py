"""Compactly supported potentials and their autocorrelations.

A :class:`Potential` bundles a vectorized evaluator with its support
interval and quadrature breakpoints.  Factories cover the four config
kinds (``box``, ``mollified_box``, ``gaussian_bump``, ``table``); the
:class:`Autocorrelation` of V and the derived density g(x) feed the
blow-up experiment.
"""

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, List, Sequence

import numpy as np
from scipy.special import roots_legendre

__all__ = [
    "Potential",
    "Autocorrelation",
    "box",
    "mollified_box",
    "gaussian_bump",
    "table_potential",
    "zero_potential",
    "eval_potential",
    "autocorrelation",
    "box_autocorrelation",
    "counterexample_density",
    "density_breakpoints",
]

_FD_STEP = 1e-5  # finite-difference step for d/dx of the autocorrelation


@dataclass(frozen=True)
class Potential:
    """Real potential supported in [support_lo, support_hi]."""

    support_lo: float
    support_hi: float
    evaluator: Callable[[np.ndarray], np.ndarray]
    smoothness_class: str = "smooth"  # piecewise-constant | mollified | smooth
    discontinuities: List[float] = field(default_factory=list)
    label: str = "custom"

    def __post_init__(self):
        if not self.support_lo < self.support_hi:
            raise ValueError("support_lo must be < support_hi")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        inside = (x >= self.support_lo) & (x <= self.support_hi)
        out = np.zeros_like(x)
        if np.any(inside):
            out[inside] = self.evaluator(x[inside])
        return float(out[0]) if scalar else out

    @property
    def half_width(self) -> float:
        return self.support_hi - self.support_lo

    def breakpoints(self) -> np.ndarray:
        """Sorted panel breakpoints including the support endpoints."""
        pts = {self.support_lo, self.support_hi}
        pts.update(d for d in self.discontinuities
                   if self.support_lo < d < self.support_hi)
        return np.array(sorted(pts))

    def cell_average(self, centers: np.ndarray, step: float,
                     order: int = 6) -> np.ndarray:
        """Averages of V over cells [c - step/2, c + step/2].

        Grid discretizations use this instead of point values so that a
        jump of V falling inside a cell costs O(step^2), not O(step).
        """
        t, w = roots_legendre(order)
        lo = centers - step / 2
        y = lo[:, None] + (step / 2) * (t[None, :] + 1.0)
        vals = self(y.ravel()).reshape(y.shape)
        return vals @ (w / 2.0)


@dataclass
class Autocorrelation:
    """Vtilde(y) = integral V(x) V(x-y) dx, supported in [-half_width, half_width]."""

    potential: Potential
    quad_order: int = 40

    def __post_init__(self):
        self.half_width = self.potential.half_width

    def breakpoints(self) -> np.ndarray:
        """Kink locations of Vtilde: pairwise differences of V's breakpoints."""
        b = self.potential.breakpoints()
        diffs = sorted({round(float(x - y), 12) for x in b for y in b})
        return np.array(diffs)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        scalar = y.ndim == 0
        out = np.array([self._single(float(v)) for v in np.atleast_1d(y)])
        return float(out[0]) if scalar else out

    def _single(self, y: float) -> float:
        return autocorrelation(self.potential, y, self.quad_order)


def autocorrelation(p: Potential, y: float, quad_order: int = 40) -> float:
    """Composite Gauss-Legendre value of integral V(x) V(x-y) dx.

    Breakpoints of both factors (the second shifted by y) delimit the
    panels, so each panel integrand is smooth.
    """
    if quad_order < 8:
        raise ValueError("quad_order must be >= 8")
    lo = max(p.support_lo, p.support_lo + y)
    hi = min(p.support_hi, p.support_hi + y)
    if hi <= lo:
        return 0.0
    cuts = {lo, hi}
    for d in p.breakpoints():
        if lo < d < hi:
            cuts.add(float(d))
        if lo < d + y < hi:
            cuts.add(float(d + y))
    edges = sorted(cuts)
    t, w = roots_legendre(quad_order)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        x = mid + half * t
        total += half * np.sum(w * p(x) * p(x - y))
    return float(total)


def box_autocorrelation(a: float, y: float) -> float:
    """Closed form (2a - |y|)_+ for the unit-height box of half width a."""
    if a <= 0:
        raise ValueError("a must be positive")
    return max(2.0 * a - abs(y), 0.0)


def eval_potential(p: Potential, x: float) -> float:
    """V(x); exactly zero outside the support."""
    return p(x)


# ---------------------------------------------------------------------------
# factories
# ---------------------------------------------------------------------------

def box(a: float, depth: float = 1.0) -> Potential:
    """depth * indicator of [-a, a]."""
    if a <= 0:
        raise ValueError("a must be positive")

    def ev(x):
        return np.full_like(x, depth, dtype=float)

    return Potential(-a, a, ev, "piecewise-constant", [-a, a],
                     label=f"box(a={a},depth={depth})")


def mollified_box(a: float, depth: float = 1.0,
                  width: float = 0.1) -> Potential:
    """Box of half width a convolved with a C-infinity bump of width ``width``."""
    if a <= 0 or width <= 0 or width >= a:
        raise ValueError("need 0 < width < a")
    t, w = roots_legendre(64)
    # normalize with the same rule the evaluator uses, so the plateau is
    # exactly the nominal depth
    norm_vals = np.exp(-1.0 / np.clip(1.0 - t ** 2, 1e-300, None))
    norm = float(width * np.sum(w * norm_vals))

    def ev(x):
        lo = np.maximum(-width, x - a)
        hi = np.minimum(width, x + a)
        half = np.clip(hi - lo, 0.0, None) / 2.0
        mid = (lo + hi) / 2.0
        y = mid[:, None] + half[:, None] * t[None, :]
        u = np.clip(1.0 - (y / width) ** 2, 1e-300, None)
        psi = np.exp(-1.0 / u)
        return depth * (half * (psi @ w)) / norm

    # C-infinity everywhere; listed points only guide panel placement where
    # high derivatives concentrate.
    hints = [-a - width, -a + width, a - width, a + width]
    return Potential(-a - width, a + width, ev, "mollified", hints,
                     label=f"mollified_box(a={a},depth={depth},w={width})")


def gaussian_bump(a: float, depth: float = 1.0) -> Potential:
    """Compactly supported bump depth * exp(1 - 1/(1-(x/a)^2)) on (-a, a)."""
    if a <= 0:
        raise ValueError("a must be positive")

    def ev(x):
        u = 1.0 - (x / a) ** 2
        out = np.zeros_like(x)
        pos = u > 1e-12
        out[pos] = depth * np.exp(1.0 - 1.0 / u[pos])
        return out

    return Potential(-a, a, ev, "smooth", [],
                     label=f"gaussian_bump(a={a},depth={depth})")


def table_potential(path: str) -> Potential:
    """Two-column CSV (x, V(x)) with linear interpolation between samples."""
    xs, vs = [], []
    with open(path, newline="") as f:
        for row in csv.reader(f):
            if not row or row[0].lstrip().startswith("#"):
                continue
            xs.append(float(row[0]))
            vs.append(float(row[1]))
    if len(xs) < 2:
        raise ValueError(f"table potential {path!r} needs >= 2 rows")
    xs = np.asarray(xs)
    vs = np.asarray(vs)
    order = np.argsort(xs)
    xs, vs = xs[order], vs[order]

    def ev(x):
        return np.interp(x, xs, vs, left=0.0, right=0.0)

    return Potential(float(xs[0]), float(xs[-1]), ev, "piecewise-constant",
                     list(map(float, xs)), label=f"table({path})")


def zero_potential(a: float = 1.0) -> Potential:
    """Identically zero potential (useful for trivial-limit tests)."""
    return Potential(-a, a, lambda x: np.zeros_like(x),
                     "piecewise-constant", [], label="zero")


# ---------------------------------------------------------------------------
# counterexample density
# ---------------------------------------------------------------------------

def _sym_autocorr(ac: Autocorrelation, x: float) -> float:
    return ac._single(x) + ac._single(-x)


def density_breakpoints(p: Potential) -> np.ndarray:
    """Kink candidates of g on [0, half_width]."""
    ac = Autocorrelation(p)
    pts = sorted({abs(float(d)) for d in ac.breakpoints()})
    return np.array(pts)


def counterexample_density(p: Potential, x, ac: Autocorrelation = None):
    """g(x) = 1_{[0,inf)}(x) (3/2 S(x) + x/2 S'(x)) with S = Vtilde(x)+Vtilde(-x).

    S' uses a centered difference of step 1e-5, switching to the matching
    one-sided difference next to a kink of Vtilde.
    """
    if ac is None:
        ac = Autocorrelation(p)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    scalar = np.asarray(x).ndim == 0
    b = p.half_width
    kinks = density_breakpoints(p)
    out = np.zeros_like(xs)
    for i, xi in enumerate(xs):
        if xi < 0.0 or xi > b + 1e-12:
            continue
        s0 = _sym_autocorr(ac, xi)
        near = kinks[np.abs(kinks - xi) < 2 * _FD_STEP]
        if near.size == 0:
            sp = (_sym_autocorr(ac, xi + _FD_STEP)
                  - _sym_autocorr(ac, xi - _FD_STEP)) / (2 * _FD_STEP)
        elif near[0] <= xi:
            sp = (_sym_autocorr(ac, xi + 2 * _FD_STEP) - s0) / (2 * _FD_STEP)
        else:
            sp = (s0 - _sym_autocorr(ac, xi - 2 * _FD_STEP)) / (2 * _FD_STEP)
        out[i] = 1.5 * s0 + 0.5 * xi * sp
    return float(out[0]) if scalar else out
