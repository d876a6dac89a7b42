"""Free resolvent kernel of -h^2 d^2/dx^2 and the square-root branch.

The continuation onto the resonance sheet crosses the positive real axis,
where the principal square root jumps, so the branch window is explicit:
a :class:`SqrtBranch` fixes the admissible range of arg(z) and the root is
always |z|^{1/2} exp(i arg(z)/2) with arg measured inside that window.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BranchError

__all__ = [
    "SqrtBranch",
    "SpectralRegion",
    "sqrt_branch",
    "free_resolvent_kernel",
]

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SqrtBranch:
    """Admissible window (arg_lo, arg_hi) for arg(z), with arg_lo < 0 < arg_hi."""

    arg_lo: float
    arg_hi: float

    def __post_init__(self):
        if not (self.arg_lo < 0.0 < self.arg_hi):
            raise ValueError("branch window must contain 0 strictly inside")
        if self.arg_hi - self.arg_lo >= _TWO_PI:
            raise ValueError("branch window must span less than 2*pi")

    def arg(self, z: complex) -> float:
        """Continuous argument of z inside the window.

        Raises BranchError when no representative of arg(z) mod 2*pi lies
        strictly inside (arg_lo, arg_hi).
        """
        if z == 0:
            raise BranchError("arg(0) undefined")
        a = math.atan2(z.imag, z.real)
        for cand in (a, a - _TWO_PI, a + _TWO_PI):
            if self.arg_lo < cand < self.arg_hi:
                return cand
        raise BranchError(
            f"arg({z}) = {a:.6f} not representable in "
            f"({self.arg_lo:.6f}, {self.arg_hi:.6f})")

    def contains(self, z: complex) -> bool:
        try:
            self.arg(z)
            return True
        except BranchError:
            return False


def sqrt_branch(z: complex, b: SqrtBranch) -> complex:
    """k with k^2 = z and arg(k) = arg(z)/2 taken inside the branch window."""
    a = b.arg(z)
    return math.sqrt(abs(z)) * complex(math.cos(a / 2), math.sin(a / 2))


@dataclass(frozen=True)
class SpectralRegion:
    """Sector-shaped region {r e^{i phi}: r_min <= r <= r_max, -2 theta0 < phi < eps}."""

    r_min: float
    r_max: float
    theta0: float
    eps: float
    branch: SqrtBranch = None

    def __post_init__(self):
        if not 0 < self.theta0 < math.pi:
            raise ValueError("theta0 must lie in (0, pi)")
        if not 0 < self.eps < _TWO_PI - 2 * self.theta0:
            raise ValueError("eps must lie in (0, 2*pi - 2*theta0)")
        if not 0 < self.r_min < self.r_max:
            raise ValueError("need 0 < r_min < r_max")
        if self.branch is None:
            object.__setattr__(
                self, "branch", SqrtBranch(-2 * self.theta0, self.eps))

    @property
    def phi_lo(self) -> float:
        return -2.0 * self.theta0

    @property
    def phi_hi(self) -> float:
        return self.eps

    def contains(self, z: complex) -> bool:
        r = abs(z)
        if not (self.r_min <= r <= self.r_max):
            return False
        try:
            a = self.branch.arg(z)
        except BranchError:
            return False
        return self.phi_lo < a < self.phi_hi

    def sqrt(self, z: complex) -> complex:
        return sqrt_branch(z, self.branch)

    def positive_interval(self):
        """The nonempty interval region ∩ (0, +inf)."""
        return (self.r_min, self.r_max)


def free_resolvent_kernel(x, y, k: complex, h: float):
    """i exp(i k |x-y| / h) / (2 h k); entire in k != 0 for fixed x != y."""
    if h <= 0:
        raise ValueError("h must be positive")
    if abs(k) < 1e-300:
        raise ZeroDivisionError("free resolvent kernel needs |k| > 0")
    d = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    val = 0.5j * np.exp(1j * k * d / h) / (h * k)
    return complex(val) if np.ndim(val) == 0 else val
