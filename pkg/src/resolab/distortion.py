"""Exterior complex scaling: the distorted operator and its spectrum.

The deformation x -> exp(i theta phi(|x|)) x is the identity inside R1
and the full rotation beyond t_inf; a C^2 quintic smoothstep bridges the
two (second-order finite differences cannot see more smoothness).  The
distorted spectrum consists of the rotated continuum plus eigenvalues
that stay put as theta varies -- those are the resonances, and matching
them against determinant zeros is the headline cross-check.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from .errors import EigenFailure, ProfileTooSteep
from .freefield import SpectralRegion
from .potentials import Potential

log = logging.getLogger("resolab")

__all__ = [
    "ScalingProfile",
    "DistortedOperator",
    "EigCluster",
    "ThetaIndependenceReport",
    "scaling_map",
    "build_distorted",
    "distorted_spectrum",
    "theta_independence_check",
]


def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u ** 3 * (10.0 - 15.0 * u + 6.0 * u ** 2)


def _smoothstep_d(u):
    out = np.zeros_like(u)
    inside = (u > 0.0) & (u < 1.0)
    ui = u[inside]
    out[inside] = 30.0 * ui ** 2 * (1.0 - ui) ** 2
    return out


@dataclass
class ScalingProfile:
    """Radial profile phi: 0 on [0, R1], 1 beyond t_inf, C^2 in between.

    ``eps1`` records the measured sector bound max arg(1 + i t theta phi')
    over a dense radial grid at this profile's own theta.  Construction
    fails with ProfileTooSteep when that exceeds ``eps1_max``.
    """

    R1: float
    theta: float
    t_inf: float = None
    eps1_max: float = 1.2
    eps1: float = field(init=False)

    def __post_init__(self):
        if self.t_inf is None:
            self.t_inf = 2.0 * self.R1
        if not 0 < self.R1 < self.t_inf:
            raise ValueError("need 0 < R1 < t_inf")
        if not 0 <= self.theta < math.pi:
            raise ValueError("theta must lie in [0, pi)")
        t = np.linspace(0.0, 4.0 * self.t_inf, 4001)
        args = np.angle(1.0 + 1j * self.theta * t * self.phi_derivative(t))
        if np.any(args < -1e-15):
            raise ProfileTooSteep("negative sector argument")
        self.eps1 = float(args.max())
        if self.eps1 > self.eps1_max:
            raise ProfileTooSteep(
                f"max arg(1 + i t theta phi') = {self.eps1:.3f} "
                f"> {self.eps1_max}")

    def phi_fn(self, t):
        return _smoothstep((np.asarray(t, dtype=float) - self.R1)
                           / (self.t_inf - self.R1))

    def phi_derivative(self, t):
        u = (np.asarray(t, dtype=float) - self.R1) / (self.t_inf - self.R1)
        return _smoothstep_d(u) / (self.t_inf - self.R1)

    def kappa_prime(self, x):
        """d/dx of exp(i theta phi(|x|)) x, same expression for both signs."""
        t = np.abs(np.asarray(x, dtype=float))
        return (np.exp(1j * self.theta * self.phi_fn(t))
                * (1.0 + 1j * self.theta * t * self.phi_derivative(t)))


def scaling_map(sp: ScalingProfile, x):
    """exp(i theta phi(|x|)) x, preserving the sign of x."""
    x = np.asarray(x, dtype=float)
    val = np.exp(1j * sp.theta * sp.phi_fn(np.abs(x))) * x
    return complex(val) if val.ndim == 0 else val


@dataclass
class DistortedOperator:
    grid: np.ndarray
    step: float
    matrix: np.ndarray
    theta: float
    h: float
    profile: ScalingProfile


def build_distorted(p: Potential, sp: ScalingProfile, h: float, L: float,
                    n_grid: int) -> DistortedOperator:
    """Second-order discretization of -h^2 (1/k') d/dx ((1/k') d/dx) + V.

    Dirichlet ends at +-L; the symmetric splitting keeps rows exactly real
    wherever both the node and its half-step neighbors sit inside R1.  The
    potential enters through cell averages so a jump inside a cell costs
    O(step^2) rather than O(step).
    """
    supp = max(abs(p.support_lo), abs(p.support_hi))
    if sp.R1 <= supp:
        raise ValueError(f"R1={sp.R1} must exceed the support radius {supp}")
    if L < 4.0 * sp.t_inf:
        raise ValueError(f"L={L} must be >= 4*t_inf={4.0 * sp.t_inf}")
    if n_grid < 800:
        raise ValueError("n_grid must be >= 800")
    x = np.linspace(-L, L, n_grid + 2)[1:-1]
    step = x[1] - x[0]
    c = 1.0 / sp.kappa_prime(x)
    cm = 1.0 / sp.kappa_prime(0.5 * (x[:-1] + x[1:]))
    v = p.cell_average(x, step)
    cp_right = np.concatenate([cm, [c[-1]]])
    cp_left = np.concatenate([[c[0]], cm])
    n = n_grid
    mat = np.zeros((n, n), dtype=complex)
    idx = np.arange(n)
    mat[idx, idx] = h * h * c * (cp_right + cp_left) / step ** 2 + v
    mat[idx[:-1], idx[:-1] + 1] = -h * h * c[:-1] * cm / step ** 2
    mat[idx[1:], idx[1:] - 1] = -h * h * c[1:] * cm / step ** 2
    return DistortedOperator(grid=x, step=step, matrix=mat,
                             theta=sp.theta, h=h, profile=sp)


@dataclass(frozen=True)
class EigCluster:
    lam: complex
    cluster_size: int
    interior_mass: float
    isolated: bool


def distorted_spectrum(op: DistortedOperator, region: SpectralRegion,
                       mass_radius: float = None,
                       isolation_mass: float = 0.5) -> List[EigCluster]:
    """Eigenvalues of the distorted operator inside the region.

    Eigenvalues are clustered with radius 10*step^2 (cluster size doubles
    as numerical multiplicity).  ``isolated`` marks clusters whose
    eigenvector mass inside ``mass_radius`` (default R1 + 1) exceeds
    ``isolation_mass``: resonant states localize near the potential while
    rotated-continuum states live outside.
    """
    try:
        lam, vec = np.linalg.eig(op.matrix)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    if mass_radius is None:
        mass_radius = op.profile.R1 + 1.0
    inside_idx = [i for i in range(len(lam)) if region.contains(lam[i])]
    radius = 10.0 * op.step ** 2
    clusters: List[List[int]] = []
    for i in sorted(inside_idx, key=lambda j: (lam[j].real, lam[j].imag)):
        for cl in clusters:
            if abs(lam[cl[0]] - lam[i]) <= radius:
                cl.append(i)
                break
        else:
            clusters.append([i])
    interior = np.abs(op.grid) <= mass_radius
    out = []
    for cl in clusters:
        masses = []
        for i in cl:
            prob = np.abs(vec[:, i]) ** 2
            masses.append(float(prob[interior].sum() / prob.sum()))
        mass = max(masses)
        center = complex(np.mean([lam[i] for i in cl]))
        out.append(EigCluster(lam=center, cluster_size=len(cl),
                              interior_mass=mass,
                              isolated=mass >= isolation_mass))
    out.sort(key=lambda c: (c.lam.real, c.lam.imag))
    return out


@dataclass
class ThetaIndependenceReport:
    pairs: List[tuple]
    max_distance: float
    counts_match: bool
    cluster_sizes_match: bool


def theta_independence_check(p: Potential, sp_list: Sequence[ScalingProfile],
                             region: SpectralRegion, h: float, L: float,
                             n_grid: int) -> ThetaIndependenceReport:
    """Match isolated eigenvalues across two distortion angles."""
    if len(sp_list) != 2 or not sp_list[0].theta < sp_list[1].theta:
        raise ValueError("need two profiles with theta1 < theta2")
    spectra = []
    for sp in sp_list:
        op = build_distorted(p, sp, h, L, n_grid)
        spectra.append([c for c in distorted_spectrum(op, region)
                        if c.isolated])
    a, b = spectra
    pairs = []
    used = set()
    max_d = 0.0
    sizes_ok = True
    for ca in a:
        best, best_d = None, np.inf
        for j, cb in enumerate(b):
            if j in used:
                continue
            d = abs(ca.lam - cb.lam)
            if d < best_d:
                best, best_d = j, d
        if best is not None:
            used.add(best)
            pairs.append((ca.lam, b[best].lam, best_d))
            max_d = max(max_d, best_d)
            sizes_ok &= ca.cluster_size == b[best].cluster_size
    counts_match = len(a) == len(b) == len(pairs)
    log.info("theta independence: %d/%d matched, max distance %.3e",
             len(pairs), max(len(a), len(b)), max_d)
    return ThetaIndependenceReport(pairs=pairs, max_distance=max_d,
                                   counts_match=counts_match,
                                   cluster_sizes_match=sizes_ok)
