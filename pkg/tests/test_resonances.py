import math

import numpy as np
import pytest

from _oracles import square_well_resonances
from resolab.determinants import DeterminantCache, track_function_log
from resolab.errors import (BoundaryZero, NonIntegerWinding,
                            PathTooCloseToResonance)
from resolab.freefield import SpectralRegion
from resolab.potentials import box, zero_potential
from resolab.resonances import (ResonanceSet, SearchConfig, WindowGrid,
                                factor_background, locate_resonances,
                                scaling_study, winding_number)

WELL = box(1.0, depth=-1.0)
DEEP = box(1.0, depth=-8.0)
REGION_025 = SpectralRegion(r_min=0.12, r_max=2.0, theta0=0.75, eps=0.3)
REGION_BIG = SpectralRegion(r_min=0.5, r_max=30.0, theta0=1.2, eps=0.3)
REGION_DEEP = SpectralRegion(r_min=0.3, r_max=16.0, theta0=0.45, eps=0.3)


@pytest.fixture(scope="module")
def well_set_h025():
    return locate_resonances(WELL, REGION_025, 0.25, SearchConfig())


class TestWinding:
    def test_constant_function(self):
        circle = np.exp(2j * math.pi * np.linspace(0, 1, 33))
        assert winding_number(track_function_log(lambda z: 1.0, circle)) == 0

    def test_simple_zero(self):
        circle = np.exp(2j * math.pi * np.linspace(0, 1, 65))
        out = track_function_log(lambda z: z - 0.3 + 0.1j, circle)
        assert winding_number(out) == 1

    def test_double_zero(self):
        c = 0.1 - 0.2j
        circle = c + 0.4 * np.exp(2j * math.pi * np.linspace(0, 1, 65))
        out = track_function_log(lambda z: (z - c) ** 2, circle)
        assert winding_number(out) == 2

    def test_open_path_rejected(self):
        path = np.linspace(1.0, 2.0, 9) + 0j
        out = track_function_log(lambda z: z, path)
        with pytest.raises(ValueError):
            winding_number(out)

    def test_winding_refinement_stable(self, well_set_h025):
        # doubling boundary sampling leaves the total winding unchanged
        rs_dense = locate_resonances(WELL, REGION_025, 0.25,
                                     SearchConfig(edge_points=20))
        assert rs_dense.boundary_winding == well_set_h025.boundary_winding


class TestLocate:
    def test_zero_potential_empty(self):
        rs = locate_resonances(zero_potential(), REGION_025, 1.0,
                               SearchConfig())
        assert len(rs) == 0
        assert rs.boundary_winding == 0

    def test_square_well_oracle_h025(self, well_set_h025):
        oracle = square_well_resonances(-1.0, 1.0, 0.25, 0.12, 2.0,
                                        -1.5, -0.02)
        assert len(well_set_h025) == len(oracle) == 2
        for r in well_set_h025:
            assert min(abs(r.w - w) for w in oracle) < 1e-8
            assert r.multiplicity == 1

    def test_all_located_inside_region(self, well_set_h025):
        for r in well_set_h025:
            assert well_set_h025.region.contains(r.w)

    def test_winding_sum_consistency(self, well_set_h025):
        assert well_set_h025.total_multiplicity == \
            well_set_h025.boundary_winding

    def test_newton_residuals_small(self, well_set_h025):
        bound = 1e-9 * math.exp(well_set_h025.boundary_logdet_max)
        for r in well_set_h025:
            assert r.newton_residual < bound

    def test_count_grows_as_h_drops(self):
        counts = {}
        for h in (1.0, 0.5):
            counts[h] = len(locate_resonances(DEEP, REGION_DEEP, h,
                                              SearchConfig()))
        assert counts[0.5] > counts[1.0]
        # Weyl-type: linear in 1/h, so halving h at most triples the count
        assert counts[0.5] <= 3 * max(counts[1.0], 1)

    def test_boundary_zero_detected(self, well_set_h025):
        # run with r_max exactly through a located resonance
        w0 = well_set_h025.resonances[0].w
        bad = SpectralRegion(r_min=0.12, r_max=abs(w0), theta0=0.75, eps=0.3)
        with pytest.raises((BoundaryZero, NonIntegerWinding)):
            locate_resonances(WELL, bad, 0.25, SearchConfig())

    def test_reflection_symmetry(self):
        # zeros come in pairs k <-> -conj(k); with theta0 past pi the
        # mirror of w appears at conj(w) approached through the deep sheet
        reg = SpectralRegion(r_min=6.0, r_max=26.0, theta0=2.68, eps=0.8)
        rs = locate_resonances(WELL, reg, 1.0, SearchConfig())
        ws = rs.positions
        shallow = [w for w in ws if -2.0 < np.angle(w) < 0]
        assert len(shallow) >= 1
        for w in shallow:
            assert min(abs(np.conj(w) - x) for x in ws) < 1e-8


class TestFactorBackground:
    def test_zero_potential_phi_zero(self):
        rs = ResonanceSet(resonances=[], region=REGION_025, h=1.0)
        path = [0.5 * np.exp(-0.3j), 0.8 * np.exp(-0.4j), 1.2 * np.exp(-0.2j)]
        bg = factor_background(1, zero_potential(), rs, path, SearchConfig())
        assert np.max(np.abs(bg.phi_values)) < 1e-12
        assert np.max(np.abs(bg.dz_phi_values)) < 1e-10

    def test_factorization_residual(self, well_set_h025):
        # |D_p - exp(phi) prod (z-w)^m| / |D_p| in log space: D_3 reaches
        # e^{-134} here, far below float underflow
        cache = DeterminantCache(WELL, 0.25, REGION_025.branch, 128)
        grid = WindowGrid(0.3, 1.8, -1.3, -0.1, nr=8, nphi=8)
        pts = grid.points()
        for p in (1, 2, 3):
            bg = factor_background(p, WELL, well_set_h025, pts,
                                   SearchConfig(), cache=None)
            for z, phi, _ in bg.samples:
                log_prod = sum(r.multiplicity * np.log(z - r.w)
                               for r in well_set_h025)
                delta = phi + log_prod - cache.logdet(z, p)
                delta -= 2j * math.pi * round(delta.imag / (2 * math.pi))
                assert abs(np.expm1(delta)) < 1e-7

    def test_dz_phi_finite_on_grid(self, well_set_h025):
        grid = WindowGrid(0.3, 1.8, -1.3, -0.1, nr=10, nphi=10)
        bg = factor_background(1, WELL, well_set_h025, grid.points(),
                               SearchConfig())
        assert np.all(np.isfinite(bg.dz_phi_values.view(float)))

    def test_background_loop_winds_zero(self, well_set_h025):
        # exp(phi_p) is holomorphic and nonvanishing: zero winding
        ts = np.linspace(0, 2 * math.pi, 41)
        loop = 0.9 * np.exp(-0.6j) + 0.12 * np.exp(1j * ts)
        bg = factor_background(1, WELL, well_set_h025, loop, SearchConfig())
        dphi = bg.phi_values[-1] - bg.phi_values[0]
        assert abs(dphi.imag) < 1e-6

    def test_too_close_to_resonance_rejected(self, well_set_h025):
        w0 = well_set_h025.resonances[0].w
        with pytest.raises(PathTooCloseToResonance):
            factor_background(1, WELL, well_set_h025, [w0 + 1e-6],
                              SearchConfig())

    def test_phi_derivative_matches_secant(self, well_set_h025):
        # dz_phi from the 5-point stencil agrees with a coarse secant of
        # the tracked phi along a short straight path
        z0 = 0.9 * np.exp(-0.5j)
        dz = 5e-3
        path = [z0 - dz, z0, z0 + dz]
        bg = factor_background(1, WELL, well_set_h025, path, SearchConfig())
        secant = (bg.phi_values[2] - bg.phi_values[0]) / (2 * dz)
        assert abs(secant - bg.dz_phi_values[1]) < 5e-4 * max(
            1.0, abs(bg.dz_phi_values[1]))


class TestScalingStudy:
    def test_zero_potential_all_zero(self):
        W = WindowGrid(0.3, 1.8, -1.2, -0.1, nr=5, nphi=5)
        rows = scaling_study(1, zero_potential(), REGION_025, [1.0, 0.5], W,
                             SearchConfig())
        assert all(row["sup"] == 0.0 for row in rows)

    def test_well_sup_finite_and_positive(self, well_set_h025):
        W = WindowGrid(0.3, 1.8, -1.2, -0.1, nr=6, nphi=6)
        rows = scaling_study(1, WELL, REGION_025, [0.25], W, SearchConfig(),
                             resonance_sets={0.25: well_set_h025})
        assert rows[0]["sup"] > 0
        assert np.isfinite(rows[0]["sup"])

    def test_weighted_column_present_for_delta(self, well_set_h025):
        W = WindowGrid(0.3, 1.8, -1.2, -0.1, nr=4, nphi=4)
        rows = scaling_study(3, WELL, REGION_025, [0.25], W, SearchConfig(),
                             delta=0.5,
                             resonance_sets={0.25: well_set_h025})
        assert "weighted_sup" in rows[0]
        assert rows[0]["weighted_sup"] > 0
