import math

import numpy as np
import pytest

from resolab.errors import BranchError
from resolab.freefield import (SpectralRegion, SqrtBranch,
                               free_resolvent_kernel, sqrt_branch)

WIDE = SqrtBranch(-1.2 * math.pi, 0.3)   # covers the seam at -pi
NARROW = SqrtBranch(-0.75 * math.pi, 0.3)


class TestSqrtBranch:
    def test_positive_real(self):
        assert sqrt_branch(4.0 + 0j, NARROW) == pytest.approx(2.0)

    def test_seam_value(self):
        # z = -4 approached with arg -pi: 2 exp(-i pi/2) = -2i
        k = sqrt_branch(-4.0 + 0j, WIDE)
        assert k == pytest.approx(-2.0j, abs=1e-12)

    def test_upper_half(self):
        b = SqrtBranch(-0.5, 0.6 * math.pi)
        k = sqrt_branch(4.0j, b)
        assert k == pytest.approx(2.0 * np.exp(1j * math.pi / 4), abs=1e-12)

    def test_square_recovers(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            r = rng.uniform(0.3, 5.0)
            p = rng.uniform(WIDE.arg_lo + 1e-3, WIDE.arg_hi - 1e-3)
            z = r * np.exp(1j * p)
            k = sqrt_branch(complex(z), WIDE)
            assert k * k == pytest.approx(z, rel=1e-12)

    def test_imag_sign_matches_arg_sign(self):
        k_minus = sqrt_branch(np.exp(-0.3j), NARROW)
        k_plus = sqrt_branch(np.exp(0.2j), NARROW)
        assert k_minus.imag < 0 < k_plus.imag

    def test_outside_window(self):
        with pytest.raises(BranchError):
            sqrt_branch(-4.0 + 0j, NARROW)  # arg -pi not representable

    def test_zero_rejected(self):
        with pytest.raises(BranchError):
            sqrt_branch(0.0 + 0j, NARROW)

    def test_window_must_straddle_zero(self):
        with pytest.raises(ValueError):
            SqrtBranch(0.1, 0.5)

    def test_continuity_along_sector_path(self):
        # no branch jumps: successive roots differ by < 2|dz|/|k|
        ts = np.linspace(0, 1, 400)
        path = 2.0 * np.exp(1j * (-0.9 * math.pi * ts))
        ks = [sqrt_branch(complex(z), WIDE) for z in path]
        for (z0, z1, k0, k1) in zip(path[:-1], path[1:], ks[:-1], ks[1:]):
            assert abs(k1 - k0) < 2 * abs(z1 - z0) / abs(k0)


class TestSpectralRegion:
    def test_default_branch_window(self):
        reg = SpectralRegion(r_min=0.25, r_max=4.0, theta0=3 * math.pi / 8,
                             eps=0.3)
        assert reg.branch.arg_lo == pytest.approx(-2 * reg.theta0)
        assert reg.branch.arg_hi == pytest.approx(reg.eps)

    def test_contains(self):
        reg = SpectralRegion(r_min=0.5, r_max=4.0, theta0=0.75, eps=0.3)
        assert reg.contains(1.0 * np.exp(-0.5j))
        assert not reg.contains(5.0 * np.exp(-0.5j))
        assert not reg.contains(1.0 * np.exp(-2.0j))

    def test_positive_interval_nonempty(self):
        reg = SpectralRegion(r_min=0.5, r_max=4.0, theta0=0.75, eps=0.3)
        lo, hi = reg.positive_interval()
        assert lo < hi

    def test_eps_bound(self):
        with pytest.raises(ValueError):
            SpectralRegion(r_min=0.5, r_max=4.0, theta0=3.0, eps=1.0)


class TestFreeKernel:
    def test_diagonal_value(self):
        assert free_resolvent_kernel(0.0, 0.0, 1j, 1.0) == pytest.approx(0.5)

    def test_decay_value(self):
        val = free_resolvent_kernel(0.0, 1.0, 1j, 1.0)
        assert val == pytest.approx(math.exp(-1.0) / 2, abs=1e-15)

    def test_oscillatory_value(self):
        assert free_resolvent_kernel(0.0, 0.0, 1.0, 1.0) == pytest.approx(0.5j)

    def test_zero_k_rejected(self):
        with pytest.raises(ZeroDivisionError):
            free_resolvent_kernel(0.0, 1.0, 0.0, 1.0)

    def test_conjugation_symmetry(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            x, y = rng.uniform(-2, 2, 2)
            k = complex(rng.uniform(0.2, 2), rng.uniform(-1, 1))
            h = rng.uniform(0.3, 1.5)
            lhs = free_resolvent_kernel(x, y, -np.conj(k), h)
            rhs = np.conj(free_resolvent_kernel(x, y, k, h))
            assert lhs == pytest.approx(rhs, rel=1e-13)

    def test_resolvent_identity_spot_check(self):
        # u = G0 * f solves (-h^2 u'' - k^2 u) = f; away from supp f the
        # residual of second differences must vanish to 1e-4
        h, k = 1.0, 1j * 1.3
        xs = np.linspace(-3, 3, 6001)
        step = xs[1] - xs[0]
        fc, fw = 0.0, 0.15

        def f(y):
            u = 1 - ((y - fc) / fw) ** 2
            return np.where(u > 0, np.exp(-1.0 / np.maximum(u, 1e-12)), 0.0)

        yq = np.linspace(fc - fw, fc + fw, 2001)
        fq = f(yq)
        u = np.array([np.trapezoid(
            free_resolvent_kernel(x, yq, k, h) * fq, yq) for x in xs])
        upp = (u[2:] - 2 * u[1:-1] + u[:-2]) / step ** 2
        resid = -h * h * upp - k * k * u[1:-1] - f(xs[1:-1])
        away = np.abs(xs[1:-1] - fc) > fw + 0.2
        assert np.max(np.abs(resid[away])) < 1e-4
