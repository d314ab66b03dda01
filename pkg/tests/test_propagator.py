import numpy as np
import pytest

from oqsim.domain import ElementaryComponent, Grid, PhysicalParams, validate_params
from oqsim.errors import DomainEscape, PositivityViolation, ZeroFriction
from oqsim.integrator import IntegratorConfig, evolve_chi_numeric
from oqsim.profiles import GaussPolyProfile, SampledProfile
from oqsim.propagator import (
    PAPER_PRINTED_FORMULA,
    REDERIVED_FORMULA,
    characteristic_argument,
    closed_to_open_basis,
    coeff_a,
    coeff_k,
    coefficient_table,
    coefficients,
    equilibrium_force,
    evolve_component,
    gaussian_width,
    longtime_weight_rate,
    open_to_closed_basis,
    write_coefficient_csv,
)

STANDARD = PhysicalParams(m=1, hbar=1, nu=1, xi=0, d0=2, d2=1, f=0)
GENERIC = PhysicalParams(m=1.3, hbar=0.8, nu=0.7, xi=0.1, d0=2.1, d2=1.4, f=0.6)
SPECTRAL = IntegratorConfig(stencil="spectral", boundary="periodic", safety=0.3)


def random_strict_params(rng) -> PhysicalParams:
    """Random parameter set satisfying the strict positivity bound."""
    while True:
        p = PhysicalParams(
            m=rng.uniform(0.5, 2.0),
            hbar=rng.uniform(0.5, 2.0),
            nu=rng.uniform(0.05, 1.5),
            xi=rng.uniform(-0.3, 0.3),
            d0=rng.uniform(0.1, 3.0),
            d2=rng.uniform(0.1, 3.0),
            f=rng.uniform(-1.0, 1.0),
        )
        try:
            return validate_params(p, strict=True)
        except PositivityViolation:
            continue


class TestInitialConditionConsistency:
    def test_exact_zero_at_t0(self):
        co = coefficients(GENERIC, 1.3 + 0.4j, 0.0)
        assert co.a == 0.0
        assert co.k == 0.0
        assert co.width == 0.0
        assert co.shift == 0.0

    def test_random_draws(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            p = random_strict_params(rng)
            q = complex(rng.normal(), rng.normal())
            co = coefficients(p, q, 0.0)
            for value in (co.a, co.k, co.width, co.shift):
                assert abs(complex(value)) <= 1e-12


class TestGaussianWidth:
    def test_zero_at_t0(self):
        assert gaussian_width(STANDARD, 0.0) == 0.0

    def test_saturation(self):
        # d = (2 + 1)/2 = 1.5, saturated width d/2 = 0.75
        assert gaussian_width(STANDARD, 50.0) == pytest.approx(0.75, abs=1e-12)

    def test_half_life_point(self):
        # e^{-2 nu t} = 1/4 at nu t = ln 2: width = (d/2)(3/4) = 0.5625
        assert gaussian_width(STANDARD, np.log(2.0)) == pytest.approx(0.5625, rel=1e-12)

    def test_monotone_for_valid_params(self):
        rng = np.random.default_rng(3)
        ts = np.linspace(0.0, 8.0, 60)
        for _ in range(20):
            p = random_strict_params(rng)
            widths = np.array([gaussian_width(p, t) for t in ts])
            assert np.all(np.diff(widths) >= -1e-15)

    def test_frictionless_limit_linear(self):
        p = STANDARD.replace(nu=0.0)
        # width -> C t = (d0/2 hbar) t for nu = 0
        assert gaussian_width(p, 2.0) == pytest.approx(2.0 * 2.0 / 2.0, rel=1e-12)


class TestCharacteristicArgument:
    def test_identity_at_t0(self):
        x = np.linspace(-3, 3, 7)
        out = characteristic_argument(GENERIC, 0.9, 0.0, x)
        np.testing.assert_allclose(out, x, atol=1e-15)

    def test_pure_contraction_at_q0(self):
        x = np.linspace(-3, 3, 7)
        out = characteristic_argument(GENERIC, 0.0, 1.3, x)
        np.testing.assert_allclose(out, x * np.exp(-GENERIC.nu * 1.3), rtol=1e-14)

    def test_longtime_memory_point(self):
        # the argument contracts to a single point of magnitude hbar|q|/(m nu)
        q = 0.8
        arg = characteristic_argument(STANDARD, q, 60.0, 0.0)
        assert abs(arg) == pytest.approx(STANDARD.hbar * q / (STANDARD.m * STANDARD.nu), rel=1e-12)

    def test_shift_scales_with_q(self):
        a1 = characteristic_argument(GENERIC, 0.5, 0.9, 0.0)
        a2 = characteristic_argument(GENERIC, 1.0, 0.9, 0.0)
        assert complex(a2) == pytest.approx(2.0 * complex(a1), rel=1e-13)


class TestCoeffA:
    def test_zero_at_t0_any_q(self):
        assert coeff_a(GENERIC, 2.2 - 0.7j, 0.0) == 0.0

    def test_zero_at_q0_all_times(self):
        # every source term carries q once the x_d structures are in k and width
        p = GENERIC.replace(f=0.9)
        for t in (0.3, 1.7, 8.0):
            assert abs(coeff_a(p, 0.0, t)) == 0.0

    def test_q0_profile_value_time_invariant_against_oracle(self):
        # independent check: evolve chi numerically at q = 0, f = 0 and
        # confirm the x_d = 0 value never moves
        p = STANDARD
        grid = Grid(256, 32.0)
        chi = np.exp(-0.25 * grid.coords**2).astype(complex)
        i0 = grid.index_of_zero()
        for t in (0.5, 2.0):
            out = evolve_chi_numeric(chi, p, 0.0, t, grid, SPECTRAL)
            assert out[i0] == pytest.approx(chi[i0], rel=1e-12)

    def test_longtime_rate(self):
        q = 0.8
        ts = np.linspace(20.0, 30.0, 21)
        a = np.array([coeff_a(STANDARD, q, t) for t in ts])
        slope = np.polyfit(ts, a.real, 1)[0]
        expected = -STANDARD.hbar * q**2 * STANDARD.d0 / (2 * STANDARD.m**2 * STANDARD.nu**2)
        assert slope == pytest.approx(expected, rel=1e-2)


class TestCoeffK:
    def test_zero_at_t0(self):
        assert coeff_k(GENERIC, 1.1, 0.0) == 0.0

    def test_force_only_reduces_to_drift(self):
        p = PhysicalParams(m=1, hbar=1, nu=1, xi=0, d0=0, d2=0, f=1)
        assert complex(coeff_k(p, 0.7, 40.0)) == pytest.approx(1.0, rel=1e-12)
        t = 0.9
        assert complex(coeff_k(p, 0.7, t)) == pytest.approx(
            (p.f / (p.hbar * p.nu)) * (1 - np.exp(-p.nu * t)), rel=1e-12
        )

    def test_decoherence_term_saturates_imaginary(self):
        p = PhysicalParams(m=1, hbar=1, nu=1, xi=0, d0=1, d2=0, f=0)
        assert complex(coeff_k(p, 1.0, 40.0)) == pytest.approx(-0.5j, abs=1e-12)


class TestPaperPrintedVariant:
    def test_matches_rederived_when_xi_vanishes(self):
        p = GENERIC.replace(xi=0.0)
        for q in (0.7, 1.0 + 0.5j):
            for t in (0.4, 1.9):
                assert complex(
                    coeff_a(p, q, t, formula=PAPER_PRINTED_FORMULA)
                ) == pytest.approx(complex(coeff_a(p, q, t)), rel=1e-12)

    def test_xi_variant_fails_t0_consistency(self):
        # the printed xi bracket (1 + 2i e^{-z} + e^{-2z}) does not vanish at
        # t = 0; the correct bracket (1 - e^{-z})^2 does
        p = GENERIC
        a0 = complex(coeff_a(p, 1.0, 0.0, formula=PAPER_PRINTED_FORMULA))
        expected = -p.hbar * p.xi * (2 + 2j) / (2 * p.m * p.nu**2)
        assert a0 == pytest.approx(expected, rel=1e-12)
        assert abs(a0) > 0.05
        assert coeff_a(p, 1.0, 0.0) == 0.0

    def test_printed_k_matches_rederived_everywhere(self):
        # the printed linear coefficient is the characteristics result
        for q in (0.7, 1.3 - 0.2j):
            for t in (0.5, 2.5):
                assert complex(
                    coeff_k(GENERIC, q, t, formula=PAPER_PRINTED_FORMULA)
                ) == pytest.approx(complex(coeff_k(GENERIC, q, t)), rel=1e-12)

    def test_printed_needs_friction(self):
        with pytest.raises(ZeroFriction):
            coeff_a(GENERIC.replace(nu=0.0), 1.0, 1.0, formula=PAPER_PRINTED_FORMULA)


class TestEvolveComponent:
    grid = Grid(512, 32.0)

    def _gaussian(self, q):
        return ElementaryComponent(
            q=q, profile=GaussPolyProfile.gaussian(0.25), grid=self.grid
        )

    def test_identity_at_t0(self):
        comp = self._gaussian(1.0)
        out = evolve_component(comp, GENERIC, 0.0)
        np.testing.assert_allclose(out.chi, comp.chi, atol=1e-15)
        assert out.q == comp.q

    def test_q_label_unchanged(self):
        out = evolve_component(self._gaussian(0.8), GENERIC, 1.2)
        assert out.q == 0.8

    def test_homogeneous_center_value_constant(self):
        comp = self._gaussian(0.0)
        i0 = self.grid.index_of_zero()
        for t in (0.5, 3.0):
            out = evolve_component(comp, STANDARD, t)
            assert out.chi[i0] == pytest.approx(comp.chi[i0], rel=1e-14)

    def test_matches_numerical_oracle_generic_params(self):
        for q in (0.0, 1.0, -0.6):
            comp = self._gaussian(q)
            chi0 = comp.chi
            for t in (0.7, 1.8):
                analytic = evolve_component(comp, GENERIC, t).chi
                numeric = evolve_chi_numeric(chi0, GENERIC, q, t, self.grid, SPECTRAL)
                rel = np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric)
                assert rel < 1e-8

    def test_matches_oracle_complex_q(self):
        grid = Grid(128, 32.0)
        comp = ElementaryComponent(q=1j, profile=GaussPolyProfile.gaussian(0.25), grid=grid)
        chi0 = comp.chi
        analytic = evolve_component(comp, STANDARD, 1.0).chi
        numeric = evolve_chi_numeric(chi0, STANDARD, 1j, 1.0, grid, SPECTRAL)
        assert np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric) < 1e-8

    def test_matches_oracle_frictionless(self):
        p = PhysicalParams(m=1, hbar=1, nu=0, xi=0, d0=1, d2=0.5, f=0.3)
        comp = self._gaussian(0.9)
        analytic = evolve_component(comp, p, 1.1).chi
        numeric = evolve_chi_numeric(comp.chi, p, 0.9, 1.1, self.grid, SPECTRAL)
        assert np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric) < 1e-8

    def test_semigroup_on_analytic_family(self):
        comp = ElementaryComponent(
            q=0.8,
            profile=GaussPolyProfile(poly=(1.0, 0.2j, 0.05), c2=-0.3, c1=0.1j),
            grid=self.grid,
        )
        one_shot = evolve_component(comp, GENERIC, 2.1).chi
        two_step = evolve_component(
            evolve_component(comp, GENERIC, 0.9), GENERIC, 1.2
        ).chi
        assert np.linalg.norm(one_shot - two_step) / np.linalg.norm(one_shot) < 1e-10

    def test_gaussian_closure_width_composition(self):
        alpha = 0.3
        t = 1.4
        comp = ElementaryComponent(
            q=0.0, profile=GaussPolyProfile.gaussian(alpha), grid=self.grid
        )
        out = evolve_component(comp, STANDARD, t)
        # evolved profile is exactly Gaussian with quadratic coefficient
        # alpha e^{-2 nu t} + width(t)
        expected = alpha * np.exp(-2 * STANDARD.nu * t) + gaussian_width(STANDARD, t)
        assert isinstance(out.profile, GaussPolyProfile)
        assert complex(out.profile.c2) == pytest.approx(-expected, rel=1e-12)

    def test_sampled_profile_matches_analytic(self):
        analytic = GaussPolyProfile.gaussian(0.25)
        sampled = SampledProfile(grid=self.grid, values=analytic(self.grid.coords))
        ca = ElementaryComponent(q=0.8, profile=analytic, grid=self.grid)
        cs = ElementaryComponent(q=0.8, profile=sampled, grid=self.grid)
        out_a = evolve_component(ca, GENERIC, 1.0).chi
        out_s = evolve_component(cs, GENERIC, 1.0).chi
        # limited by cubic-spline interpolation of the shifted argument
        assert np.max(np.abs(out_a - out_s)) / np.max(np.abs(out_a)) < 1e-7

    def test_sampled_profile_rejects_complex_q(self):
        sampled = SampledProfile(
            grid=self.grid, values=GaussPolyProfile.gaussian(0.25)(self.grid.coords)
        )
        comp = ElementaryComponent(q=1j, profile=sampled, grid=self.grid)
        with pytest.raises(DomainEscape):
            evolve_component(comp, STANDARD, 1.0)

    def test_sampled_profile_domain_escape(self):
        small = Grid(64, 4.0)
        sampled = SampledProfile(
            grid=small, values=GaussPolyProfile.gaussian(0.25)(small.coords)
        )
        comp = ElementaryComponent(q=5.0, profile=sampled, grid=small)
        # drift shift hbar q/(m nu) = 5 pushes the argument outside [-2, 2)
        with pytest.raises(DomainEscape):
            evolve_component(comp, STANDARD, 3.0)

    def test_rejects_negative_time(self):
        with pytest.raises(ValueError):
            evolve_component(self._gaussian(0.0), STANDARD, -0.1)


class TestLongtimeBehavior:
    def test_rate_zero_at_q0(self):
        assert longtime_weight_rate(STANDARD, 0.0) == 0.0

    def test_pure_suppression_real_q(self):
        q = 1.3
        rate = longtime_weight_rate(STANDARD, q)
        assert rate.imag == 0.0
        assert rate.real == pytest.approx(
            -STANDARD.hbar * q**2 * STANDARD.d0 / (2 * STANDARD.m**2 * STANDARD.nu**2)
        )
        assert rate.real < 0

    def test_any_inhomogeneity_depopulated(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            p = random_strict_params(rng).replace(f=0.0)
            if p.d0 == 0.0:
                continue
            q = rng.uniform(0.05, 3.0) * rng.choice([-1.0, 1.0])
            assert longtime_weight_rate(p, q).real < 0

    def test_finite_difference_slope_converges_to_rate(self):
        q = 0.9 + 0.3j
        p = GENERIC
        rate = longtime_weight_rate(p, q)
        delta = 0.5
        for t in (25.0, 35.0):
            fd = (coeff_a(p, q, t) - coeff_a(p, q, t - delta)) / delta
            assert complex(fd).real == pytest.approx(rate.real, rel=1e-6)

    def test_equilibrium_force_zeroes_rate(self):
        q_i = 1.0
        f = equilibrium_force(STANDARD, q_i)
        p = STANDARD.replace(f=f)
        assert abs(f) == pytest.approx(1.0)  # |v_f| = q_i d0/(2 m nu^2) = 1, f = m nu v_f
        assert abs(longtime_weight_rate(p, 1j * q_i).real) < 1e-14

    def test_equilibrium_force_trivial_and_linear(self):
        assert equilibrium_force(STANDARD, 0.0) == 0.0
        assert equilibrium_force(STANDARD, 2.0) == pytest.approx(
            2.0 * equilibrium_force(STANDARD, 1.0)
        )

    def test_friction_required(self):
        p = STANDARD.replace(nu=0.0)
        with pytest.raises(ZeroFriction):
            longtime_weight_rate(p, 1.0)
        with pytest.raises(ZeroFriction):
            equilibrium_force(p, 1.0)


class TestBasisChange:
    def test_origin(self):
        assert open_to_closed_basis(0.0, 0.0) == (0.0, 0.0)

    def test_round_trip_random(self):
        rng = np.random.default_rng(2)
        for _ in range(1000):
            q, k = rng.normal(size=2)
            assert closed_to_open_basis(*open_to_closed_basis(q, k)) == pytest.approx((q, k))

    def test_pointwise_identity(self):
        q, k = 1.0, 2.0
        kp, km = open_to_closed_basis(q, k)
        x = np.linspace(-3, 3, 41)
        xd = np.linspace(-2, 2, 31)
        X, XD = np.meshgrid(x, xd, indexing="ij")
        xp, xm = X + XD / 2.0, X - XD / 2.0
        closed = np.exp(1j * kp * xp - 1j * km * xm)
        open_form = np.exp(1j * q * X + 1j * k * XD)
        assert np.max(np.abs(closed - open_form)) < 1e-12


class TestCoefficientTable:
    def test_csv_columns_and_rows(self, tmp_path):
        rows = coefficient_table(STANDARD, 1.0, [0.0, 0.5, 1.0])
        assert len(rows) == 3 and len(rows[0]) == 8
        assert rows[0][1:] == (0.0,) * 7
        path = tmp_path / "coeff.csv"
        write_coefficient_csv(path, rows)
        header = path.read_text().splitlines()[0]
        assert header == "t,re_a,im_a,re_k,im_k,width,re_shift,im_shift"
