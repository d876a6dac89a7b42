import numpy as np
import pytest

from resolab.potentials import (Autocorrelation, autocorrelation, box,
                                box_autocorrelation, counterexample_density,
                                eval_potential, gaussian_bump, mollified_box,
                                table_potential, zero_potential)


class TestEval:
    def test_box_inside(self):
        assert eval_potential(box(1.0), 0.0) == 1.0

    def test_box_outside(self):
        assert eval_potential(box(1.0), 2.0) == 0.0

    def test_mollified_plateau(self):
        p = mollified_box(1.0, depth=1.0, width=0.1)
        assert eval_potential(p, 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_outside_support_is_exact_zero(self):
        p = mollified_box(1.0, width=0.1)
        assert p(1.2) == 0.0
        assert p(-5.0) == 0.0

    def test_well_depth(self):
        p = box(1.0, depth=-1.0)
        assert p(0.3) == -1.0


class TestAutocorrelation:
    def test_box_at_zero(self):
        assert autocorrelation(box(1.0), 0.0, 24) == pytest.approx(2.0, abs=1e-12)

    def test_box_at_one(self):
        # closed form (2a - y)_+ at a=1, y=1
        assert autocorrelation(box(1.0), 1.0, 24) == pytest.approx(1.0, abs=1e-12)

    def test_disjoint_supports(self):
        assert autocorrelation(box(1.0), 3.0, 24) == 0.0

    def test_quad_order_validated(self):
        with pytest.raises(ValueError):
            autocorrelation(box(1.0), 0.5, 4)

    @pytest.mark.parametrize("pot", [box(1.0), box(0.7, depth=-2.0),
                                     mollified_box(1.0, width=0.1),
                                     gaussian_bump(1.0)])
    def test_even_in_y(self, pot):
        hw = pot.half_width
        ys = np.linspace(0.01, 0.95 * hw, 17)
        for y in ys:
            a1 = autocorrelation(pot, float(y), 32)
            a2 = autocorrelation(pot, float(-y), 32)
            assert a1 == pytest.approx(a2, abs=1e-10)

    def test_support_bound(self):
        pot = mollified_box(1.0, width=0.1)
        hw = pot.half_width
        for y in (hw + 1e-9, -hw - 1e-9, hw + 0.5):
            assert abs(autocorrelation(pot, y, 24)) < 1e-12

    def test_zero_value_is_l2_norm(self):
        pot = gaussian_bump(1.0, depth=0.5)
        val = autocorrelation(pot, 0.0, 48)
        assert val > 0
        # independent trapezoid check of integral V^2
        x = np.linspace(-1, 1, 20001)
        ref = np.trapezoid(pot(x) ** 2, x)
        assert val == pytest.approx(ref, rel=1e-6)

    def test_matches_box_closed_form_on_grid(self):
        a = 1.0
        ys = np.linspace(-2.5, 2.5, 100)
        for y in ys:
            assert autocorrelation(box(a), float(y), 24) == pytest.approx(
                box_autocorrelation(a, float(y)), abs=1e-10)


class TestBoxClosedForm:
    def test_at_zero(self):
        assert box_autocorrelation(1.0, 0.0) == 2.0

    def test_even(self):
        assert box_autocorrelation(1.0, -1.5) == pytest.approx(0.5)

    def test_outside(self):
        assert box_autocorrelation(0.5, 2.0) == 0.0

    def test_positive_a_required(self):
        with pytest.raises(ValueError):
            box_autocorrelation(-1.0, 0.0)


class TestCounterexampleDensity:
    def test_negative_axis(self):
        assert counterexample_density(box(1.0), -0.5) == 0.0

    def test_box_interior_value(self):
        # S(x) = 2(2 - x) on (0, 2), S' = -2: g(1) = 3*1 + (1/2)(-2) = 2
        assert counterexample_density(box(1.0), 1.0) == pytest.approx(2.0, rel=1e-6)

    def test_outside_twice_halfwidth(self):
        assert counterexample_density(box(1.0), 3.0) == 0.0

    def test_support_window(self):
        pot = box(1.0)
        xs = np.array([-1.0, -0.1, 2.2, 5.0])
        assert np.all(counterexample_density(pot, xs) == 0.0)

    def test_box_closed_form_on_grid(self):
        # g(x) = 3(2 - x) - x on (0, 2) for the unit box
        pot = box(1.0)
        ac = Autocorrelation(pot)
        xs = np.linspace(0.05, 1.95, 21)
        got = counterexample_density(pot, xs, ac)
        want = 3.0 * (2.0 - xs) - xs
        np.testing.assert_allclose(got, want, rtol=1e-6, atol=1e-8)


class TestTableAndZero:
    def test_table_round_trip(self, tmp_path):
        path = tmp_path / "pot.csv"
        xs = np.linspace(-1, 1, 41)
        vs = np.cos(xs * np.pi / 2) ** 2
        path.write_text("\n".join(f"{x},{v}" for x, v in zip(xs, vs)))
        p = table_potential(str(path))
        assert p(0.0) == pytest.approx(1.0)
        assert p(5.0) == 0.0
        assert p(float(xs[7])) == pytest.approx(vs[7])

    def test_zero_potential(self):
        p = zero_potential()
        assert p(0.0) == 0.0

    def test_bad_support_rejected(self):
        from resolab.potentials import Potential
        with pytest.raises(ValueError):
            Potential(1.0, -1.0, lambda x: x)
