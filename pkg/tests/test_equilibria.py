import numpy as np
import pytest

from tippetop import (BodyParams, ExistenceError, Family, ValidationError, Verdict, critical_C,
                      hurwitz_vertical, linearize_full, rhs_decoupled, rhs_reduced,
                      sigma0_characteristic, sigma0_family)
from tippetop.equilibria import (classify_level, family_threshold, sigma0_C, sigma0_distance,
                                 sigma0_min_distance, sigma0_parameters_for_C, vertical_coefficients,
                                 vertical_family, vertical_minors)


class TestCriticalC:
    def test_values(self, fig2a):
        assert critical_C(fig2a) == pytest.approx(1.37322, abs=1e-5)
        assert critical_C(fig2a) == pytest.approx(0.51 * np.sqrt(0.29) / 0.2, rel=1e-15)
        assert critical_C(BodyParams.scaled(a=1.0, i1=0.6, i3=0.5)) == pytest.approx(1.58114, abs=1e-5)

    def test_no_family(self, fig2c):
        assert critical_C(fig2c) is None
        assert family_threshold(fig2c) is None

    def test_needs_offset(self):
        with pytest.raises(ValidationError):
            critical_C(BodyParams.scaled(a=0.0, i1=0.55, i3=0.51))


class TestFamilies:
    def test_vertical(self, fig2a):
        up = vertical_family("sigma_u", 1.5, fig2a)
        low = vertical_family(Family.SIGMA_L, 1.5, fig2a)
        assert (up.gamma3, up.K1, up.K2) == (1.0, 1.5, 0.0)
        assert (low.gamma3, low.K1, low.K2) == (-1.0, -1.5, 0.0)
        for fam in (up, low):
            assert fam.C == pytest.approx((fig2a.inertia_diag * fam.omega) @ fam.gamma)

    def test_sigma0_example(self, fig2a):
        fam = sigma0_family(3.0, fig2a)
        assert fam.gamma3 == pytest.approx(-0.805556, abs=1e-6)
        assert fam.K1 == pytest.approx(1.232500, abs=1e-6)
        assert fam.C == pytest.approx(-1.572130, abs=1e-6)
        assert fam.branch == 1 and sigma0_family(-3.0, fig2a).branch == -1
        assert fam.C == pytest.approx((fig2a.inertia_diag * fam.omega) @ fam.gamma, abs=1e-14)

    @pytest.mark.parametrize("params", [BodyParams.scaled(a=0.29, i1=0.55, i3=0.51, mu_r=1.0),
                                        BodyParams.scaled(a=0.29, i1=0.46, i3=0.51, mu_r=1.0)])
    def test_limits(self, params):
        c0 = family_threshold(params)
        sign = np.sign(params.i1 - params.i3)
        for s in (1, -1):
            fam = sigma0_family(s * c0 * (1 + 1e-10), params)
            assert fam.gamma3 == pytest.approx(-sign, abs=1e-9)
            assert abs(fam.C) == pytest.approx(critical_C(params), abs=1e-9)

    def test_existence(self, fig2a, fig2c):
        with pytest.raises(ExistenceError):
            sigma0_family(2.0, fig2a)
        with pytest.raises(ExistenceError):
            sigma0_family(3.0, fig2c)

    def test_boundary_never_crossed(self, fig2a, fig2b):
        for p in (fig2a, fig2b):
            c0 = family_threshold(p)
            mags = c0 * np.exp(np.linspace(1e-6, 5, 500))
            for c1 in np.concatenate([mags, -mags]):
                assert abs(sigma0_C(c1, p)) >= critical_C(p)

    def test_residuals(self, fig2a, fig2b, rng):
        for p in (fig2a, fig2b):
            c0 = family_threshold(p)
            for c1 in c0 * np.exp(rng.uniform(1e-3, 3, 25)) * rng.choice([-1, 1], 25):
                fam = sigma0_family(c1, p)
                assert np.abs(rhs_reduced(fam.reduced, p)).max() < 1e-10
            for kind in ("sigma_u", "sigma_l"):
                fam = vertical_family(kind, rng.uniform(-3, 3), p)
                w_dot, g_dot = rhs_decoupled(fam.omega, fam.gamma, p)
                assert max(np.abs(w_dot).max(), np.abs(g_dot).max()) < 1e-12

    def test_parameters_for_C(self, fig2a):
        for C in (-1.572130, 2.0, -4.5):
            roots = sigma0_parameters_for_C(C, fig2a)
            assert roots
            for c1 in roots:
                assert sigma0_C(c1, fig2a) == pytest.approx(C, abs=1e-12)
        assert sigma0_parameters_for_C(1.0, fig2a) == []


class TestHurwitzVertical:
    def test_lower_rest_stable(self, fig2a):
        rep = hurwitz_vertical("lower", 0.0, fig2a)
        assert rep.verdict is Verdict.STABLE
        assert all(m > 0 for m in rep.minors)

    def test_lower_fast_unstable(self, fig2a):
        rep = hurwitz_vertical("lower", 2.0, fig2a)
        assert rep.verdict is Verdict.UNSTABLE
        assert rep.minors[2] < 0
        assert rep.max_real > 0

    def test_lower_marginal_at_critical(self, fig2a):
        rep = hurwitz_vertical("lower", critical_C(fig2a), fig2a)
        assert rep.verdict is Verdict.MARGINAL
        scale = max(abs(m) for m in rep.minors)
        assert abs(rep.minors[2]) < 1e-12 * scale and abs(rep.minors[3]) < 1e-12 * scale

    def test_no_friction_is_marginal(self, fig2a):
        rep = hurwitz_vertical("upper", 2.0, fig2a.with_(mu_r=0.0))
        assert rep.verdict is Verdict.MARGINAL

    def test_bad_which(self, fig2a):
        with pytest.raises(ValidationError):
            hurwitz_vertical("middle", 1.0, fig2a)

    def test_minors_match_hurwitz_matrix(self, fig2a, fig2b, rng):
        for p in (fig2a, fig2b):
            for which in ("upper", "lower"):
                C = rng.uniform(-3, 3)
                a0, a1, a2, a3, a4 = vertical_coefficients(which, C, p)
                H = np.array([[a1, a3, 0, 0], [a0, a2, a4, 0], [0, a1, a3, 0], [0, a0, a2, a4]])
                direct = [np.linalg.det(H[:k, :k]) for k in range(1, 5)]
                closed = vertical_minors(which, C, p)
                # closed forms are the minors of the monic polynomial times positive factors
                for d, c in zip(direct, closed):
                    assert np.sign(d) == np.sign(c) or abs(d) < 1e-10

    @pytest.mark.parametrize("params", ["fig2a", "fig2b", "fig2c"])
    def test_linearization_structure(self, params, request):
        p = request.getfixturevalue(params)
        for which, kind in (("upper", "sigma_u"), ("lower", "sigma_l")):
            for C in (0.0, 0.7, 2.5):
                lin = linearize_full(vertical_family(kind, C, p), p)
                assert lin.zero_eigenvalues == 2
                closed = np.array(vertical_coefficients(which, C, p))
                np.testing.assert_allclose(lin.quartic, closed, rtol=1e-5, atol=1e-5 * np.abs(closed).max())

    def test_sign_flip_across_critical(self, fig2a):
        C_star = critical_C(fig2a)
        below = hurwitz_vertical("lower", C_star * 0.99, fig2a).max_real
        above = hurwitz_vertical("lower", C_star * 1.01, fig2a).max_real
        assert below < 0 < above

    def test_rejects_sigma0(self, fig2a):
        with pytest.raises(ValidationError):
            linearize_full(sigma0_family(3.0, fig2a), fig2a)


class TestSigma0Characteristic:
    def test_stable_when_i1_exceeds_i3(self, fig2a):
        rep = sigma0_characteristic(3.0, fig2a)
        assert rep.verdict is Verdict.STABLE
        assert all(c > 0 for c in rep.minors)
        assert rep.max_real < 0

    def test_unstable_when_i3_exceeds_i1(self, fig2b):
        c0 = family_threshold(fig2b)
        for c1 in (1.2 * c0, -1.2 * c0, 4 * c0):
            rep = sigma0_characteristic(c1, fig2b)
            assert rep.verdict is Verdict.UNSTABLE
            assert rep.max_real > 0

    def test_coefficients_match_jacobian(self, fig2a, fig2b):
        for p in (fig2a, fig2b):
            c0 = family_threshold(p)
            for c1 in (1.1 * c0, -2 * c0, 5 * c0):
                rep = sigma0_characteristic(c1, p)
                poly = np.real(np.poly(rep.extra["jacobian"]))
                closed = np.array(rep.coefficients)
                np.testing.assert_allclose(poly * closed[0], closed, rtol=1e-5,
                                           atol=1e-5 * np.abs(closed).max())

    def test_family_end_point_uses_closed_form_roots(self, fig2a):
        c1 = family_threshold(fig2a) * (1 + 1e-12)
        rep = sigma0_characteristic(c1, fig2a)
        assert rep.extra["jacobian"] is None
        np.testing.assert_allclose(np.sort_complex(rep.eigenvalues),
                                   np.sort_complex(np.roots(rep.coefficients)))


class TestClassifyLevel:
    def test_case_a(self, fig2a):
        kinds = [(r.family, r.verdict) for r in classify_level(2.0, fig2a)]
        assert (Family.SIGMA_U, Verdict.UNSTABLE) in kinds
        assert (Family.SIGMA_L, Verdict.UNSTABLE) in kinds
        assert all(v is Verdict.STABLE for f, v in kinds if f is Family.SIGMA_0)
        assert sum(f is Family.SIGMA_0 for f, _ in kinds) >= 1

    def test_case_c_has_no_sigma0(self, fig2c):
        assert [r.family for r in classify_level(2.0, fig2c)] == [Family.SIGMA_U, Family.SIGMA_L]


class TestSigma0Distance:
    def test_on_curve(self, fig2a):
        fam = sigma0_family(3.0, fig2a)
        assert sigma0_distance(fam.K1, fam.C, fig2a) < 1e-9

    def test_off_curve(self, fig2a):
        fam = sigma0_family(3.0, fig2a)
        d = sigma0_distance(fam.K1, fam.C + 0.01, fig2a)
        assert 0 < d <= 0.01 + 1e-12

    def test_no_family(self, fig2c):
        assert sigma0_distance(1.0, 2.0, fig2c) == float("inf")

    def test_min_distance(self, fig2a):
        fam = sigma0_family(-4.0, fig2a)
        K1 = np.array([0.0, fam.K1 + 1e-3, 3.0])
        C = np.array([0.0, fam.C, 3.0])
        assert sigma0_min_distance(K1, C, fig2a) == pytest.approx(
            sigma0_distance(fam.K1 + 1e-3, fam.C, fig2a), abs=1e-12)
        assert sigma0_min_distance([], [], fig2a) == float("inf")
