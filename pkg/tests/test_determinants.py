import math

import numpy as np
import pytest

from resolab.config import NumericsConfig
from resolab.determinants import (DeterminantCache, det1, detp_via_correction,
                                  detp_weierstrass, log_det_along_path,
                                  perturbation_determinant, t_pk_trace,
                                  taylor_derivative_resolvent,
                                  track_function_log)
from resolab.errors import SingularShift, ZeroOnPath
from resolab.freefield import SqrtBranch
from resolab.nystrom import KernelMatrix, assemble, build_quadrature
from resolab.potentials import box, zero_potential

SHEET = SqrtBranch(-1.5 * math.pi, 0.4)
PHYS = SqrtBranch(-0.5, 1.05 * math.pi)
WELL = box(1.0, depth=-1.0)


def matrix_of(arr) -> KernelMatrix:
    arr = np.asarray(arr, dtype=complex)
    q = build_quadrature(box(1.0), max(4, arr.shape[0]))
    return KernelMatrix(matrix=arr, quadrature=q, z=0j, k=1j, h=1.0)


class TestDet1:
    def test_zero_matrix(self):
        assert det1(matrix_of(np.zeros((5, 5)))) == pytest.approx(1.0)

    def test_rank_one(self):
        m = np.zeros((4, 4), dtype=complex)
        m[0, 0] = 0.5
        assert det1(matrix_of(m)) == pytest.approx(1.5)

    def test_two_by_two(self):
        m = np.array([[0.1, 0.2], [0.3, 0.4]])
        assert det1(matrix_of(m)) == pytest.approx(1.48)


class TestDetP:
    def test_rank_one_p2(self):
        m = np.zeros((3, 3), dtype=complex)
        m[1, 1] = 0.5
        want = 1.5 * math.exp(-0.5)
        assert detp_weierstrass(matrix_of(m), 2) == pytest.approx(want, rel=1e-12)

    def test_rank_one_p3(self):
        m = np.zeros((3, 3), dtype=complex)
        m[1, 1] = 0.5
        want = 1.5 * math.exp(-0.5 + 0.125)
        assert detp_weierstrass(matrix_of(m), 3) == pytest.approx(want, rel=1e-12)

    def test_p1_equals_det1(self):
        rng = np.random.default_rng(5)
        m = 0.2 * (rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6)))
        M = matrix_of(m)
        assert detp_weierstrass(M, 1) == pytest.approx(det1(M), rel=1e-10)

    def test_correction_p1_is_det1(self):
        rng = np.random.default_rng(6)
        m = 0.3 * rng.standard_normal((5, 5))
        M = matrix_of(m)
        assert detp_via_correction(M, 1) == pytest.approx(det1(M), rel=1e-13)

    def test_correction_matches_weierstrass_rank_one_p3(self):
        m = np.zeros((3, 3), dtype=complex)
        m[0, 0] = 0.5
        M = matrix_of(m)
        assert detp_via_correction(M, 3) == pytest.approx(
            1.5 * math.exp(-0.375), rel=1e-12)

    @pytest.mark.parametrize("p", [1, 2, 3, 4])
    def test_routes_agree_random(self, p):
        rng = np.random.default_rng(100 + p)
        for _ in range(25):
            m = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
            m *= 0.5 / max(np.abs(np.linalg.eigvals(m)))
            M = matrix_of(m)
            a = detp_weierstrass(M, p)
            b = detp_via_correction(M, p)
            assert abs(a - b) <= 1e-9 * abs(b)

    def test_p1_multiplicative(self):
        rng = np.random.default_rng(11)
        a = 0.3 * rng.standard_normal((6, 6))
        b = 0.3 * rng.standard_normal((6, 6))
        prod = (np.eye(6) + a) @ (np.eye(6) + b) - np.eye(6)
        lhs = det1(matrix_of(prod))
        rhs = det1(matrix_of(a)) * det1(matrix_of(b))
        assert lhs == pytest.approx(rhs, rel=1e-10)


class TestPerturbationDeterminant:
    CFG = NumericsConfig(branch=PHYS, n_per_piece=96)

    def test_zero_potential(self):
        d = perturbation_determinant(2, zero_potential(), 1.0 - 0.5j, 1.0,
                                     NumericsConfig(branch=SHEET))
        assert d.value == pytest.approx(1.0)

    def test_real_below_spectrum(self):
        d = perturbation_determinant(1, WELL, -1.0 + 0j, 1.0, self.CFG)
        assert abs(d.value.imag) < 1e-10
        assert d.value.real > 0

    @pytest.mark.parametrize("p", [1, 2, 3])
    def test_real_nonvanishing_on_negative_axis(self, p):
        for r in np.linspace(0.5, 3.0, 7):
            d = perturbation_determinant(p, WELL, -r + 0j, 1.0, self.CFG)
            assert abs(d.value.imag) < 1e-9
            assert abs(d.value) > 1e-6


class TestLogTracking:
    def test_zero_potential_log_zero(self):
        cfg = NumericsConfig(branch=SHEET, n_per_piece=32)
        path = [1.0 - 0.1j, 1.5 - 0.5j, 2.0 - 0.2j]
        out = log_det_along_path(1, zero_potential(), path, 1.0, cfg)
        assert np.allclose(out.log_values, 0.0)

    def test_function_winding_zero(self):
        circle = np.exp(2j * math.pi * np.linspace(0, 1, 33))
        out = track_function_log(lambda z: 1.0 + 0j, circle)
        assert out.total_imag_increment == pytest.approx(0.0, abs=1e-12)

    def test_function_winding_one(self):
        circle = np.exp(2j * math.pi * np.linspace(0, 1, 65))
        out = track_function_log(lambda z: z - 0.3 + 0.1j, circle)
        assert out.total_imag_increment == pytest.approx(2 * math.pi, abs=1e-6)

    def test_function_winding_two(self):
        c = 0.2 - 0.1j
        circle = c + 0.5 * np.exp(2j * math.pi * np.linspace(0, 1, 65))
        out = track_function_log(lambda z: (z - c) ** 2, circle)
        assert out.total_imag_increment == pytest.approx(4 * math.pi, abs=1e-6)

    def test_open_path_no_winding(self):
        path = np.linspace(1.0, 2.0, 11) - 0.5j
        out = track_function_log(lambda z: z, path)
        assert abs(out.total_imag_increment) < 1.0

    def test_zero_on_path_raises(self):
        path = np.linspace(-1, 1, 21) + 0j
        with pytest.raises(ZeroOnPath):
            track_function_log(lambda z: z, path)

    def test_refinement_inserts_points(self):
        # crossing a fast phase region forces bisection
        circle = np.exp(2j * math.pi * np.linspace(0, 1, 9))
        out = track_function_log(lambda z: z ** 3, circle)
        assert len(out.path) > 9
        assert out.total_imag_increment == pytest.approx(6 * math.pi, abs=1e-6)

    def test_exp_consistency(self):
        cfg = NumericsConfig(branch=SHEET, n_per_piece=96)
        path = [2.0 - 1.0j, 2.5 - 1.5j, 3.0 - 1.0j]
        cache = DeterminantCache(WELL, 1.0, SHEET, 96)
        out = log_det_along_path(1, WELL, path, 1.0, cache)
        for z, lv in zip(out.path, out.log_values):
            assert np.exp(lv) == pytest.approx(cache.det(z, 1), rel=1e-8)


class TestTaylorResolvent:
    def test_j0_is_resolvent(self):
        rng = np.random.default_rng(2)
        a = rng.standard_normal((5, 5))
        out = taylor_derivative_resolvent(a, np.zeros((5, 5)), 1.0 + 1j, 0)
        want = np.linalg.inv(a - (1. + 1j) * np.eye(5))
        np.testing.assert_allclose(out, want, rtol=1e-12)

    def test_zero_b_vanishes(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((5, 5))
        out = taylor_derivative_resolvent(a, np.zeros((5, 5)), 2j, 2)
        assert np.max(np.abs(out)) == 0

    def test_finite_difference_oracle_j2(self):
        rng = np.random.default_rng(4)
        a = rng.standard_normal((5, 5))
        b = 0.2 * rng.standard_normal((5, 5))
        z = 0.7 + 2.0j
        got = taylor_derivative_resolvent(a, b, z, 2)
        eps = 1e-3

        def res(t):
            return np.linalg.inv(a + t * b - z * np.eye(5))

        fd = (res(eps) - 2 * res(0.0) + res(-eps)) / eps ** 2
        rel = np.max(np.abs(got - fd)) / np.max(np.abs(fd))
        assert rel < 1e-6

    def test_singular_shift_raises(self):
        a = np.diag([1.0, 2.0, 3.0])
        with pytest.raises(SingularShift):
            taylor_derivative_resolvent(a, np.eye(3), 2.0 + 0j, 1)


class TestTpkTrace:
    def test_zero_b(self):
        rng = np.random.default_rng(8)
        a = rng.standard_normal((6, 6))
        assert t_pk_trace(a, np.zeros((6, 6)), 1j, 2, 2) == pytest.approx(0.0)

    def test_p1_k1_definition(self):
        rng = np.random.default_rng(9)
        a = rng.standard_normal((6, 6))
        b = 0.1 * rng.standard_normal((6, 6))
        z = 0.3 + 0.9j
        got = t_pk_trace(a, b, z, 1, 1)
        eye = np.eye(6)
        want = np.trace(np.linalg.inv(a + b - z * eye)
                        - np.linalg.inv(a - z * eye))
        assert got == pytest.approx(want, rel=1e-12)

    def test_finite_difference_oracle_p2_k2(self):
        rng = np.random.default_rng(10)
        a = rng.standard_normal((6, 6))
        a = (a + a.T) / 2
        b = 0.05 * rng.standard_normal((6, 6))
        z = 0.4 + 1.1j
        got = t_pk_trace(a, b, z, 2, 2)
        eye = np.eye(6)

        def f(mat):
            return np.trace(np.linalg.matrix_power(
                np.linalg.inv(mat - z * eye), 2))

        eps = 1e-4
        deriv = (f(a + eps * b) - f(a - eps * b)) / (2 * eps)
        want = f(a + b) - f(a) - deriv
        assert abs(got - want) <= 1e-5 * max(abs(want), 1e-12)

    def test_remainder_order_p(self):
        # |T_p^k| = O(||B||^p): slope on log-log across ||B|| decades
        rng = np.random.default_rng(12)
        a = rng.standard_normal((6, 6))
        a = (a + a.T) / 2
        b0 = rng.standard_normal((6, 6))
        b0 /= np.linalg.norm(b0)
        z = 0.5 + 1.0j
        for p in (2, 3):
            scales = np.array([1e-1, 1e-2, 1e-3, 1e-4])
            vals = np.array([abs(t_pk_trace(a, s * b0, z, p, 1))
                             for s in scales])
            slope = np.polyfit(np.log(scales), np.log(vals), 1)[0]
            assert slope == pytest.approx(p, abs=0.15)

    def test_singular_shift(self):
        a = np.diag([1.0, 2.0])
        with pytest.raises(SingularShift):
            t_pk_trace(a, 0.1 * np.eye(2), 1.0 + 0j, 2, 1)
