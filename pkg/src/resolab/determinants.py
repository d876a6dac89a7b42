"""Fredholm determinants det_p, perturbation determinants D_p(z, h),
branch-tracked log determinants along paths, and regularized traces.

det_p enters through two independent routes that agree for matrices:
the Weierstrass eigenvalue product and det_1 times the trace-correction
exponential.  The production path for D_p uses the correction route (no
eigendecomposition in the hot loop).
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, List, Sequence

import numpy as np

from .errors import EigenFailure, SingularShift, ZeroOnPath
from .freefield import SqrtBranch
from .nystrom import KernelMatrix, Quadrature, assemble, build_quadrature, trace_power
from .potentials import Potential

__all__ = [
    "DetValue",
    "LogDetPath",
    "det1",
    "detp_weierstrass",
    "detp_via_correction",
    "perturbation_determinant",
    "DeterminantCache",
    "log_det_along_path",
    "track_function_log",
    "t_pk_trace",
    "taylor_derivative_resolvent",
]

DET_FLOOR = 1e-12        # |det| below this on a path is treated as a zero
MAX_REFINE_DEPTH = 30


@dataclass(frozen=True)
class DetValue:
    value: complex
    p_order: int
    z: complex
    h: float

    def __post_init__(self):
        if self.p_order < 1:
            raise ValueError("p_order must be >= 1")
        if not (np.isfinite(self.value.real) and np.isfinite(self.value.imag)):
            raise FloatingPointError(f"determinant not finite at z={self.z}")


@dataclass
class LogDetPath:
    """Continuously tracked log of a nonvanishing function along a path."""

    path: List[complex]
    log_values: List[complex]
    winding_basepoint: complex

    @property
    def total_imag_increment(self) -> float:
        return self.log_values[-1].imag - self.log_values[0].imag


def det1(M: KernelMatrix) -> complex:
    """Determinant of (I + M) via pivoted LU."""
    return complex(np.linalg.det(np.eye(M.n) + M.matrix))


def logdet1(M: KernelMatrix) -> complex:
    """log det(I + M): log magnitude plus principal argument.

    Determinants on the continued sheet reach e^{+-hundreds} at small h,
    so all path tracking works on logs.
    """
    sign, logabs = np.linalg.slogdet(np.eye(M.n) + M.matrix)
    if logabs == -np.inf:
        return complex(-np.inf, 0.0)
    return complex(logabs, np.angle(sign))


def logdetp_via_correction(M: KernelMatrix, p: int) -> complex:
    """log of detp_via_correction, assembled in log space."""
    if p < 1:
        raise ValueError("p must be >= 1")
    corr = 0.0 + 0.0j
    if p > 1:
        a = M.matrix
        pw = None
        for j in range(1, p):
            pw = a if pw is None else pw @ a
            corr += ((-1) ** j) * np.trace(pw) / j
    return logdet1(M) + corr


def _weierstrass_exponent(lam: np.ndarray, p: int) -> np.ndarray:
    out = np.zeros_like(lam)
    term = np.ones_like(lam)
    for j in range(1, p):
        term = term * lam
        out = out + ((-1) ** j) * term / j
    return out


def detp_weierstrass(M: KernelMatrix, p: int) -> complex:
    """prod_k (1 + lam_k) exp(sum_{j<p} (-1)^j lam_k^j / j) over eig(M)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    try:
        lam = np.linalg.eigvals(M.matrix)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    return complex(np.prod((1.0 + lam) * np.exp(_weierstrass_exponent(lam, p))))


def detp_via_correction(M: KernelMatrix, p: int) -> complex:
    """det1(I+M) * exp(sum_{j=1}^{p-1} (-1)^j tr(M^j) / j)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    corr = 0.0 + 0.0j
    if p > 1:
        a = M.matrix
        pw = None
        for j in range(1, p):
            pw = a if pw is None else pw @ a
            corr += ((-1) ** j) * np.trace(pw) / j
    return det1(M) * complex(np.exp(corr))


class DeterminantCache:
    """Memoized D_p evaluations for one (potential, h, branch, quadrature).

    Resonance search and background factoring evaluate the determinant at
    thousands of z points, many shared between adjacent contour boxes.
    """

    def __init__(self, pot: Potential, h: float, branch: SqrtBranch,
                 n_per_piece: int = 128, kink_correction: bool = True):
        self.pot = pot
        self.h = h
        self.branch = branch
        self.quadrature = build_quadrature(pot, n_per_piece)
        self.kink_correction = kink_correction
        self._cache = {}
        self.evaluations = 0

    def matrix(self, z: complex) -> KernelMatrix:
        return assemble(self.pot, z, self.h, self.quadrature, self.branch,
                        self.kink_correction)

    def logdet(self, z: complex, p_order: int = 1) -> complex:
        """Principal-branch log of D_p at z (cached)."""
        key = (complex(z), p_order)
        val = self._cache.get(key)
        if val is None:
            self.evaluations += 1
            val = logdetp_via_correction(self.matrix(z), p_order)
            self._cache[key] = val
        return val

    def det(self, z: complex, p_order: int = 1) -> complex:
        """D_p at z; overflows to inf where |log D_p| exceeds float range."""
        return complex(np.exp(self.logdet(z, p_order)))


def perturbation_determinant(p_order: int, pot: Potential, z: complex,
                             h: float, cfg) -> DetValue:
    """D_p(z, h) = det_p of I + V (H0 - z)^{-1} via the correction route.

    ``cfg`` provides ``branch``/``n_per_piece``/``kink_correction`` (any
    object with those attributes; see :class:`resolab.config.NumericsConfig`).
    """
    q = cfg.quadrature_for(pot) if hasattr(cfg, "quadrature_for") else None
    if q is None:
        q = build_quadrature(pot, getattr(cfg, "n_per_piece", 128))
    M = assemble(pot, z, h, q, cfg.branch,
                 getattr(cfg, "kink_correction", True))
    return DetValue(value=detp_via_correction(M, p_order),
                    p_order=p_order, z=complex(z), h=h)


# ---------------------------------------------------------------------------
# branch-tracked logs along paths
# ---------------------------------------------------------------------------

LOG_FLOOR = math.log(DET_FLOOR)
_LN4 = math.log(4.0)


def _wrap_imag(delta: complex) -> complex:
    turns = round(delta.imag / (2.0 * math.pi))
    return complex(delta.real, delta.imag - 2.0 * math.pi * turns)


def track_log_along_path(logf: Callable[[complex], complex],
                         path: Sequence,
                         refine: bool = True,
                         to_point: Callable = None,
                         midpoint: Callable = None,
                         floor: float = LOG_FLOOR) -> LogDetPath:
    """Continuous determination of a log function along a path.

    A segment is accepted when the wrapped step has |Im| < pi/2 and
    |Re| < ln 4; otherwise it is bisected.  The magnitude criterion
    catches zeros lying near the path whose phase swing would otherwise
    alias below the pi/2 threshold.

    ``path`` holds parameters mapped to complex points by ``to_point``
    (identity by default); refinement inserts ``midpoint(p0, p1)`` (chord
    midpoint by default -- polar paths pass (r, phi) averaging so refined
    points stay on arcs).
    """
    if to_point is None:
        to_point = lambda p: complex(p)
    if midpoint is None:
        midpoint = lambda p0, p1: 0.5 * (complex(p0) + complex(p1))

    def safe_logf(z):
        v = complex(logf(z))
        if not np.isfinite(v.real) or v.real < floor:
            raise ZeroOnPath(f"log magnitude {v.real:.2f} at {z} below floor")
        return v

    params = list(path)
    pts = [to_point(p) for p in params]
    vals = [safe_logf(z) for z in pts]

    out_pts = [pts[0]]
    out_logs = [vals[0]]

    def extend(p0, v0, p1, v1, depth):
        step = _wrap_imag(v1 - v0)
        if (abs(step.imag) < math.pi / 2 and abs(step.real) < _LN4) \
                or not refine:
            out_pts.append(to_point(p1))
            out_logs.append(out_logs[-1] + step)
            return
        if depth >= MAX_REFINE_DEPTH:
            raise ZeroOnPath(
                f"argument refinement stalled between {to_point(p0)} "
                f"and {to_point(p1)}")
        pm = midpoint(p0, p1)
        vm = safe_logf(to_point(pm))
        extend(p0, v0, pm, vm, depth + 1)
        extend(pm, vm, p1, v1, depth + 1)

    for idx in range(len(params) - 1):
        extend(params[idx], vals[idx], params[idx + 1], vals[idx + 1], 0)

    return LogDetPath(path=out_pts, log_values=out_logs,
                      winding_basepoint=out_pts[0])


def track_function_log(f: Callable[[complex], complex],
                       path: Sequence,
                       refine: bool = True,
                       to_point: Callable = None,
                       midpoint: Callable = None) -> LogDetPath:
    """track_log_along_path for a raw function: takes principal logs of f."""

    def logf(z):
        v = complex(f(z))
        if abs(v) < DET_FLOOR:
            raise ZeroOnPath(f"|f({z})| = {abs(v):.3e} below floor")
        return complex(math.log(abs(v)), np.angle(v))

    return track_log_along_path(logf, path, refine=refine,
                                to_point=to_point, midpoint=midpoint)


def log_det_along_path(p_order: int, pot: Potential,
                       path: Sequence[complex], h: float, cfg) -> LogDetPath:
    """Continuous log of D_p along a path of z points."""
    cache = cfg if isinstance(cfg, DeterminantCache) else DeterminantCache(
        pot, h, cfg.branch, getattr(cfg, "n_per_piece", 128),
        getattr(cfg, "kink_correction", True))
    return track_log_along_path(lambda z: cache.logdet(z, p_order), path)


# ---------------------------------------------------------------------------
# regularized traces at matrix level
# ---------------------------------------------------------------------------

def _inverse_of_shift(A: np.ndarray, z: complex) -> np.ndarray:
    n = A.shape[0]
    try:
        return np.linalg.solve(A - z * np.eye(n), np.eye(n, dtype=complex))
    except np.linalg.LinAlgError as exc:
        raise SingularShift(f"shift by z={z} is singular") from exc


def taylor_derivative_resolvent(A: np.ndarray, B: np.ndarray, z: complex,
                                j: int) -> np.ndarray:
    """d^j/d eps^j (A + eps B - z)^{-1} at eps = 0: (-1)^j j! R (B R)^j."""
    if j < 0:
        raise ValueError("j must be >= 0")
    R = _inverse_of_shift(A, z)
    out = R.copy()
    for _ in range(j):
        out = out @ (B @ R)
    return ((-1) ** j) * math.factorial(j) * out


def _compositions(total: int, parts: int):
    """Nonnegative integer tuples of length ``parts`` summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def t_pk_trace(A: np.ndarray, B: np.ndarray, z: complex,
               p: int, k: int) -> complex:
    """tr( f_z^k(A+B) - f_z^k(A) - sum_{j=1}^{p-1} (1/j!) d^j_eps f_z^k |_0 )
    with f_z^k(lambda) = (lambda - z)^{-k}.

    The eps-derivatives expand into products R (B R)^{j_1} ... over integer
    compositions, so everything reduces to linear solves and traces.
    """
    if k < 1 or p < 1:
        raise ValueError("need k >= 1 and p >= 1")
    R = _inverse_of_shift(A, z)
    RB = _inverse_of_shift(A + B, z)

    def mat_pow_trace(mat, power):
        out = mat
        for _ in range(power - 1):
            out = out @ mat
        return complex(np.trace(out))

    total = mat_pow_trace(RB, k) - mat_pow_trace(R, k)
    if p == 1:
        return total
    BR = B @ R
    # powers of (B R) up to p-1
    br_pows = [np.eye(A.shape[0], dtype=complex)]
    for _ in range(p - 1):
        br_pows.append(br_pows[-1] @ BR)
    for j in range(1, p):
        acc = 0.0 + 0.0j
        for comp in _compositions(j, k):
            prod = R @ br_pows[comp[0]]
            for part in comp[1:]:
                prod = prod @ (R @ br_pows[part])
            acc += np.trace(prod)
        total -= ((-1) ** j) * acc
    return complex(total)
