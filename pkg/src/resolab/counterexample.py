"""The explicit correction factor phi(z, h) = tr(V R0 V R0), its box
closed form, the density g driving d/dz phi, and the weighted blow-up scan.

phi has three independent routes that must agree: the autocorrelation
integral, the box closed form, and the Nystrom trace of (V R0)^2.  The
blow-up scan combines the p = 2 background (bounded like 1/h) with
d/dz phi / 2, whose weighted sup grows as h -> 0 — that contrast is the
point of the experiment.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.special import roots_legendre

from . import kernels
from .errors import BranchError
from .freefield import SpectralRegion, SqrtBranch, sqrt_branch
from .potentials import (Autocorrelation, Potential, counterexample_density,
                         density_breakpoints)
from .resonances import (ResonanceSet, SearchConfig, WindowGrid,
                         factor_background, locate_resonances)

log = logging.getLogger("resolab")

__all__ = [
    "GDensity",
    "BlowupScan",
    "phi_via_autocorr",
    "phi_box_closed_form",
    "g_density",
    "inverse_fourier",
    "dz_phi",
    "paley_wiener_sup",
    "blowup_scan",
]


# ---------------------------------------------------------------------------
# cached quadratures over the autocorrelation and the density g
# ---------------------------------------------------------------------------

def _panels_for(length: float, max_abs_phase: float, base: int = 8) -> int:
    need = int(math.ceil(max_abs_phase * length / 4.0))
    n = base
    while n < need:
        n *= 2
    return min(n, 4096)


_AC_CACHE: Dict[Tuple[str, int], Tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def _autocorr_nodes(pot: Potential, panels: int, order: int = 16):
    """GL nodes over [-hw, hw] split at 0 and the kinks of Vtilde."""
    key = (pot.label, panels)
    hit = _AC_CACHE.get(key)
    if hit is not None:
        return hit
    ac = Autocorrelation(pot)
    hw = pot.half_width
    cuts = sorted({-hw, 0.0, hw}
                  | {float(b) for b in ac.breakpoints() if -hw < b < hw})
    t, w = roots_legendre(order)
    xs, ws = [], []
    total_len = 2 * hw
    for a, b in zip(cuts[:-1], cuts[1:]):
        sub = max(1, int(round(panels * (b - a) / total_len)))
        edges = np.linspace(a, b, sub + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
            xs.append(mid + half * t)
            ws.append(half * w)
    xs = np.concatenate(xs)
    ws = np.concatenate(ws)
    vals = ac(xs)
    _AC_CACHE[key] = (xs, ws, vals)
    return _AC_CACHE[key]


def phi_via_autocorr(pot: Potential, k: complex, h: float) -> complex:
    """phi(k^2, h) = -1/(2hk)^2 * integral Vtilde(y) exp(2ik|y|/h) dy.

    The integrand has finite support, so direct evaluation continues the
    defining Im k > 0 formula to the whole k != 0 plane.
    """
    if abs(k) < 1e-300:
        raise ZeroDivisionError("phi needs k != 0")
    hw = pot.half_width
    panels = _panels_for(2 * hw, 2 * abs(k) / h)
    xs, ws, vals = _autocorr_nodes(pot, panels)
    integral = np.sum(ws * vals * np.exp(2j * k * np.abs(xs) / h))
    return complex(-integral / (2 * h * k) ** 2)


def phi_box_closed_form(a: float, k: complex, h: float) -> complex:
    """-i a / (2 k^3 h) + (exp(4 i a k / h) - 1) / (8 k^4)."""
    if abs(k) < 1e-300:
        raise ZeroDivisionError("closed form needs k != 0")
    return complex(-1j * a / (2 * k ** 3 * h)
                   + (np.exp(4j * a * k / h) - 1.0) / (8 * k ** 4))


@dataclass
class GDensity:
    """The density g on [0, b] sampled at quadrature nodes."""

    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    b: float

    @property
    def weighted(self) -> np.ndarray:
        return self.weights * self.values


_G_CACHE: Dict[Tuple[str, int], GDensity] = {}


def g_density(pot: Potential, panels: int = 64, order: int = 12) -> GDensity:
    """Quadrature-sampled g(x) on [0, b], panels split at the kinks."""
    key = (pot.label, panels)
    hit = _G_CACHE.get(key)
    if hit is not None:
        return hit
    b = pot.half_width
    cuts = sorted({0.0, b} | {float(d) for d in density_breakpoints(pot)
                              if 0.0 < d < b})
    t, w = roots_legendre(order)
    xs, ws = [], []
    for a_, b_ in zip(cuts[:-1], cuts[1:]):
        sub = max(1, int(round(panels * (b_ - a_) / b)))
        edges = np.linspace(a_, b_, sub + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
            xs.append(mid + half * t)
            ws.append(half * w)
    xs = np.concatenate(xs)
    ws = np.concatenate(ws)
    ac = Autocorrelation(pot)
    gv = counterexample_density(pot, xs, ac)
    out = GDensity(nodes=xs, weights=ws, values=gv, b=b)
    _G_CACHE[key] = out
    return out


def inverse_fourier(gd: GDensity, xi) -> np.ndarray:
    """(F_inv g)(xi) = (1/2pi) integral_0^b exp(i x xi) g(x) dx, batched."""
    xi = np.atleast_1d(np.asarray(xi, dtype=complex))
    return kernels.fourier_sum(gd.nodes, gd.weighted, xi)


def _g_panels_for(pot: Potential, max_abs_xi: float) -> GDensity:
    b = pot.half_width
    return g_density(pot, panels=_panels_for(b, max_abs_xi, base=64))


def dz_phi(pot: Potential, z, h: float, b: SqrtBranch):
    """d/dz phi = (pi / (2 z^2 h^2)) (F_inv g)(2 sqrt(z) / h), batched in z."""
    zs = np.atleast_1d(np.asarray(z, dtype=complex))
    scalar = np.asarray(z).ndim == 0
    roots = np.array([sqrt_branch(zz, b) for zz in zs])
    xi = 2.0 * roots / h
    gd = _g_panels_for(pot, float(np.max(np.abs(xi))))
    vals = (math.pi / (2.0 * zs ** 2 * h ** 2)) * inverse_fourier(gd, xi)
    return complex(vals[0]) if scalar else vals


def paley_wiener_sup(gd: GDensity, b_prime: float, h: float,
                     n_r: int = 200, n_phi: int = 200) -> float:
    """sup over the quarter annulus {1 <= |xi| <= 2, Im xi < 0, Re xi >= 0}
    of |exp(b' Im(xi)/h) (F_inv g)(xi/h)|."""
    if not 0 < b_prime < gd.b:
        raise ValueError("need 0 < b_prime < b")
    r = np.linspace(1.0, 2.0, n_r)
    phi = np.linspace(-math.pi / 2, 0.0, n_phi, endpoint=False)
    xi = (r[:, None] * np.exp(1j * phi[None, :])).ravel()
    vals = inverse_fourier(gd, xi / h)
    weighted = np.abs(np.exp(b_prime * xi.imag / h) * vals)
    return float(weighted.max())


@dataclass
class BlowupScan:
    h_values: List[float]
    weighted_sups: List[float]
    delta: float
    window: WindowGrid
    unweighted_p2_sups: List[float] = field(default_factory=list)

    def __post_init__(self):
        if any(b >= a for a, b in zip(self.h_values, self.h_values[1:])):
            raise ValueError("h_values must be strictly decreasing")


def blowup_scan(pot: Potential, h_values: Sequence[float], delta: float,
                region: SpectralRegion, window: WindowGrid = None,
                cfg: SearchConfig = None,
                resonance_sets: dict = None) -> BlowupScan:
    """Weighted sup of |h e^{delta Im sqrt(z)/h} dz phi_3| over the window.

    dz phi_3 = dz phi_2 + dz phi / 2: the p = 2 part comes from factoring
    the located resonances out of D_2, the explicit part from the density
    route.  The unweighted p = 2 sup |h dz phi_2| rides along as the
    contrast quantity.
    """
    b = pot.half_width
    if not 0 < delta <= b / 4 + 1e-12:
        raise ValueError(f"delta must lie in (0, b/4] = (0, {b / 4}]")
    window = window or WindowGrid(1.0, 4.0, -math.pi + 0.01, -0.01,
                                  nr=40, nphi=40)
    cfg = cfg or SearchConfig()
    hs = sorted((float(v) for v in h_values), reverse=True)
    weighted, unweighted = [], []
    for h in hs:
        rs = None if resonance_sets is None else resonance_sets.get(h)
        if rs is None:
            rs = locate_resonances(pot, region, h, cfg)
            if resonance_sets is not None:
                resonance_sets[h] = rs
        pts = window.points()
        bg2 = factor_background(2, pot, rs, pts, cfg)
        zs = bg2.z_values
        dz2 = bg2.dz_phi_values
        dz3 = dz2 + 0.5 * dz_phi(pot, zs, h, region.branch)
        roots = np.array([sqrt_branch(z, region.branch) for z in zs])
        wgt = np.exp(delta * roots.imag / h)
        weighted.append(float(np.max(np.abs(h * wgt * dz3))))
        unweighted.append(float(np.max(np.abs(h * dz2))))
        log.info("blowup scan h=%g: weighted sup %.4e, p2 sup %.4e",
                 h, weighted[-1], unweighted[-1])
    return BlowupScan(h_values=hs, weighted_sups=weighted, delta=delta,
                      window=window, unweighted_p2_sups=unweighted)
