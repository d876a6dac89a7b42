"""Nystrom discretization of K(z) = V (H0 - z)^{-1} on supp V.

Panels are aligned with the potential's breakpoints; within each panel a
Gauss-Legendre rule is used.  Because the free kernel has a |x - y| kink
on the diagonal, plain node weights would cap determinant accuracy near
1e-5; ``assemble`` therefore rewrites each row's self-panel entries with
kink-split weights (see :func:`resolab.kernels.panel_kink_corrections`),
restoring spectral accuracy.  ``kink_correction=False`` recovers the
plain V(x_i) G0(x_i, x_j) w_j entries.
"""

from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np
from scipy.special import roots_legendre

from . import kernels
from .freefield import SqrtBranch, sqrt_branch
from .potentials import Potential

__all__ = [
    "Quadrature",
    "KernelMatrix",
    "build_quadrature",
    "assemble",
    "trace_power",
    "singular_values",
    "converged_nodes",
]


def _bary_weights(nodes: np.ndarray) -> np.ndarray:
    n = len(nodes)
    w = np.ones(n)
    for j in range(n):
        w[j] = 1.0 / np.prod(nodes[j] - np.delete(nodes, j))
    return w / np.max(np.abs(w))


@dataclass
class Quadrature:
    """Composite Gauss-Legendre rule aligned with potential breakpoints."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int                      # nodes per smooth piece
    panel_of: np.ndarray            # panel index per node
    panel_starts: np.ndarray
    panel_ends: np.ndarray
    panel_lows: np.ndarray
    panel_highs: np.ndarray
    bary: np.ndarray                # barycentric weights, flat per panel
    _vcache: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def __len__(self):
        return len(self.nodes)

    def potential_values(self, p: Potential) -> np.ndarray:
        vals = self._vcache.get(p.label)
        if vals is None:
            vals = p(self.nodes)
            self._vcache[p.label] = vals
        return vals


@dataclass
class KernelMatrix:
    """Discretized V (H0 - z)^{-1} with its assembly metadata."""

    matrix: np.ndarray
    quadrature: Quadrature
    z: complex
    k: complex
    h: float

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def build_quadrature(p: Potential, n_per_piece: int,
                     panel_size: int = 16) -> Quadrature:
    """Gauss-Legendre nodes per smooth piece of the potential.

    Pieces longer than one panel are split into near-equal panels of at
    most ``panel_size`` nodes, preserving the total node count per piece.
    """
    if n_per_piece < 4:
        raise ValueError("n_per_piece must be >= 4")
    edges = p.breakpoints()
    nodes: List[np.ndarray] = []
    weights: List[np.ndarray] = []
    panel_of: List[int] = []
    starts: List[int] = []
    ends: List[int] = []
    lows: List[float] = []
    highs: List[float] = []
    bary: List[np.ndarray] = []
    pidx = 0
    offset = 0
    for a, b in zip(edges[:-1], edges[1:]):
        npanels = max(1, int(np.ceil(n_per_piece / panel_size)))
        base = n_per_piece // npanels
        extras = n_per_piece - base * npanels
        sub_edges = np.linspace(a, b, npanels + 1)
        for q in range(npanels):
            nn = base + (1 if q < extras else 0)
            t, w = roots_legendre(nn)
            mid = 0.5 * (sub_edges[q] + sub_edges[q + 1])
            half = 0.5 * (sub_edges[q + 1] - sub_edges[q])
            xs = mid + half * t
            nodes.append(xs)
            weights.append(half * w)
            panel_of.extend([pidx] * nn)
            starts.append(offset)
            ends.append(offset + nn)
            lows.append(sub_edges[q])
            highs.append(sub_edges[q + 1])
            bary.append(_bary_weights(xs))
            offset += nn
            pidx += 1
    return Quadrature(
        nodes=np.concatenate(nodes),
        weights=np.concatenate(weights),
        order=n_per_piece,
        panel_of=np.asarray(panel_of, dtype=np.int64),
        panel_starts=np.asarray(starts, dtype=np.int64),
        panel_ends=np.asarray(ends, dtype=np.int64),
        panel_lows=np.asarray(lows),
        panel_highs=np.asarray(highs),
        bary=np.concatenate(bary),
    )


def assemble(p: Potential, z: complex, h: float, q: Quadrature,
             b: SqrtBranch, kink_correction: bool = True) -> KernelMatrix:
    """KernelMatrix at z with k = sqrt_branch(z, b)."""
    if h <= 0:
        raise ValueError("h must be positive")
    k = sqrt_branch(z, b)
    vvals = q.potential_values(p)
    mat = kernels.fill_kernel_matrix(q.nodes, q.weights, vvals, k, h)
    if kink_correction:
        nsub = max(24, int(np.max(q.panel_ends - q.panel_starts)) + 8)
        sub_t, sub_w = roots_legendre(nsub)
        kernels.panel_kink_corrections(
            mat, q.nodes, vvals, q.bary, q.panel_of,
            q.panel_starts, q.panel_ends, q.panel_lows, q.panel_highs,
            k, h, sub_t, sub_w)
    if not np.all(np.isfinite(mat.view(float))):
        raise FloatingPointError(f"kernel matrix not finite at z={z}, h={h}")
    return KernelMatrix(matrix=mat, quadrature=q, z=complex(z), k=k, h=h)


def trace_power(M: KernelMatrix, j: int) -> complex:
    """Trace of the j-th power of the kernel matrix."""
    if j < 1:
        raise ValueError("j must be >= 1")
    a = M.matrix
    if j == 1:
        return complex(np.trace(a))
    pw = a
    for _ in range(j - 1):
        pw = pw @ a
    return complex(np.trace(pw))


def singular_values(M: KernelMatrix) -> np.ndarray:
    """Descending singular values of the kernel matrix."""
    return np.linalg.svd(M.matrix, compute_uv=False)


def converged_nodes(p: Potential, z_probe: complex, h: float, b: SqrtBranch,
                    start: int = 128, tol: float = 1e-7,
                    cap: int = 1024) -> int:
    """Double n_per_piece until the relative det1 drift falls below tol."""
    n = start
    q = build_quadrature(p, n)
    d_prev = np.linalg.det(np.eye(len(q)) + assemble(p, z_probe, h, q, b).matrix)
    while n < cap:
        q2 = build_quadrature(p, 2 * n)
        d_next = np.linalg.det(
            np.eye(len(q2)) + assemble(p, z_probe, h, q2, b).matrix)
        if abs(d_next - d_prev) <= tol * max(abs(d_next), 1e-300):
            return n
        n *= 2
        d_prev = d_next
    return cap
