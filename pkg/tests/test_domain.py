import numpy as np
import pytest

from oqsim.domain import (
    FIRST_CLASS,
    SECOND_CLASS,
    DensityOperatorGrid,
    ElementaryComponent,
    Grid,
    PhysicalParams,
    classify_component,
    decoherence_coefficient,
    drift_velocity,
    drift_wavevector,
    validate_params,
)
from oqsim.errors import (
    GridMismatch,
    NegativeRate,
    NonPositiveHbar,
    NonPositiveMass,
    PositivityViolation,
    ValidationError,
    ZeroFriction,
)
from oqsim.profiles import GaussPolyProfile


class TestValidateParams:
    def test_accepts_on_bound(self):
        p = PhysicalParams(m=1, hbar=1, nu=1, xi=0, d0=1, d2=1)
        assert validate_params(p, strict=True) is p  # 1*(1+0) = 1 <= 2

    def test_rejects_beyond_bound(self):
        p = PhysicalParams(m=1, hbar=1, nu=2, xi=0, d0=1, d2=1)
        with pytest.raises(PositivityViolation) as err:
            validate_params(p, strict=True)
        assert err.value.lhs == 4.0
        assert err.value.rhs == 2.0

    def test_closed_dynamics_boundary(self):
        p = PhysicalParams(m=1, hbar=1, nu=0, xi=0, d0=0, d2=0)
        assert validate_params(p, strict=True) is p  # 0 <= 0

    def test_exact_boundary_accepted_epsilon_rejected(self):
        p = PhysicalParams(m=1.0, hbar=1.0, nu=1.0, xi=0.0, d0=1.0, d2=0.5)
        assert validate_params(p, strict=True) is p
        with pytest.raises(PositivityViolation):
            validate_params(p.replace(d2=0.5 - 1e-9), strict=True)

    def test_basic_invariants(self):
        with pytest.raises(NonPositiveMass):
            validate_params(PhysicalParams(m=0))
        with pytest.raises(NonPositiveHbar):
            validate_params(PhysicalParams(hbar=-1))
        with pytest.raises(NegativeRate):
            validate_params(PhysicalParams(nu=-0.1))
        with pytest.raises(NegativeRate):
            validate_params(PhysicalParams(d0=-1))
        with pytest.raises(NegativeRate):
            validate_params(PhysicalParams(d2=-1))
        with pytest.raises(ValidationError):
            validate_params(PhysicalParams(f=float("nan")))

    def test_idempotent(self):
        p = PhysicalParams(m=2, hbar=0.5, nu=0.3, xi=0.01, d0=1, d2=1, f=0.2)
        assert validate_params(validate_params(p, strict=True), strict=True) is p

    def test_strict_region_convex_in_d0_d2(self):
        rng = np.random.default_rng(7)
        base = PhysicalParams(m=1.2, hbar=1, nu=0.8, xi=0.1)
        accepted = []
        while len(accepted) < 40:
            d0, d2 = rng.uniform(0.01, 5, size=2)
            try:
                validate_params(base.replace(d0=d0, d2=d2), strict=True)
                accepted.append((d0, d2))
            except PositivityViolation:
                pass
        for (a0, a2), (b0, b2) in zip(accepted[::2], accepted[1::2]):
            lam = rng.uniform()
            mid = base.replace(d0=lam * a0 + (1 - lam) * b0, d2=lam * a2 + (1 - lam) * b2)
            validate_params(mid, strict=True)

    def test_from_mapping(self):
        p = PhysicalParams.from_mapping(
            {"m": "2", "hbar": "1", "nu": "0.5", "xi": "0", "d0": "1", "d2": "3", "f": "-1"}
        )
        assert p == PhysicalParams(m=2, hbar=1, nu=0.5, xi=0, d0=1, d2=3, f=-1)


class TestDerivedConstants:
    def test_drift_wavevector_zero_force(self):
        assert drift_wavevector(PhysicalParams(nu=0.7)) == 0.0

    def test_drift_wavevector_definition(self):
        p = PhysicalParams(m=3, hbar=1, nu=1, f=2)
        assert drift_wavevector(p) == pytest.approx(2.0)
        assert drift_velocity(p) == pytest.approx(2.0 / 3.0)

    def test_drift_wavevector_arithmetic(self):
        assert drift_wavevector(PhysicalParams(hbar=2, nu=4, f=1)) == pytest.approx(0.125)

    def test_drift_requires_friction(self):
        with pytest.raises(ZeroFriction):
            drift_wavevector(PhysicalParams(nu=0, f=1))

    def test_decoherence_coefficient_values(self):
        assert decoherence_coefficient(
            PhysicalParams(m=1, hbar=1, nu=1, xi=0, d0=2, d2=1)
        ) == pytest.approx(1.5)
        assert decoherence_coefficient(
            PhysicalParams(m=1, hbar=1, nu=1, xi=0, d0=0, d2=0)
        ) == 0.0
        assert decoherence_coefficient(
            PhysicalParams(m=1, hbar=1, nu=1, xi=0.5, d0=1, d2=1)
        ) == pytest.approx(0.5)

    def test_decoherence_coefficient_linear_in_each(self):
        base = PhysicalParams(m=1.3, hbar=0.7, nu=0.9, xi=0.05, d0=1.1, d2=0.4)
        for name in ("d0", "d2", "xi"):
            v0 = getattr(base, name)
            d_lo = decoherence_coefficient(base.replace(**{name: v0 - 0.1}))
            d_mid = decoherence_coefficient(base)
            d_hi = decoherence_coefficient(base.replace(**{name: v0 + 0.1}))
            assert d_hi - d_mid == pytest.approx(d_mid - d_lo, rel=1e-12)

    def test_decoherence_requires_friction(self):
        with pytest.raises(ZeroFriction):
            decoherence_coefficient(PhysicalParams(nu=0, d0=1))


class TestGrid:
    def test_coords_centered_increasing(self):
        g = Grid(16, 8.0)
        assert g.spacing == 0.5
        assert g.coords[g.index_of_zero()] == 0.0
        assert np.all(np.diff(g.coords) > 0)
        assert g.coords[0] == -4.0

    def test_minimum_size(self):
        with pytest.raises(ValidationError):
            Grid(4, 1.0)
        with pytest.raises(ValidationError):
            Grid(16, -1.0)

    def test_wavenumbers_conjugate(self):
        g = Grid(32, 16.0)
        assert g.wavenumbers[0] == 0.0
        assert g.wavenumbers[1] == pytest.approx(2 * np.pi / 16.0)


class TestClassifyComponent:
    box = Grid(256, 20.0)
    xd = Grid(64, 16.0)

    def _component(self, q, value=1.0):
        return ElementaryComponent(
            q=q, profile=GaussPolyProfile.constant(value), grid=self.xd
        )

    def test_homogeneous_is_first_class(self):
        assert classify_component(self._component(0.0), self.box) == FIRST_CLASS

    def test_full_period_mode_is_second_class(self):
        q = 2 * np.pi / self.box.length
        assert classify_component(self._component(q), self.box) == SECOND_CLASS

    def test_vanishing_center_is_second_class(self):
        assert classify_component(self._component(0.0, value=0.0), self.box) == SECOND_CLASS

    def test_all_nonzero_grid_modes_second_class(self):
        for j in (1, 2, 5, 31):
            q = 2 * np.pi * j / self.box.length
            assert classify_component(self._component(q), self.box) == SECOND_CLASS


class TestElementaryComponent:
    def test_hermitian_profile_flagged(self):
        grid = Grid(64, 16.0)
        comp = ElementaryComponent(q=0.0, profile=GaussPolyProfile.gaussian(0.3), grid=grid)
        assert comp.is_hermitian_profile()

    def test_nonhermitian_profile_flagged(self):
        grid = Grid(64, 16.0)
        # odd real part breaks chi(-x) = conj(chi(x))
        comp = ElementaryComponent(
            q=0.0, profile=GaussPolyProfile(poly=(1.0, 1.0), c2=-0.3), grid=grid
        )
        assert not comp.is_hermitian_profile()
        assert comp.hermiticity_defect() > 0.1

    def test_complex_q_never_hermitian_alone(self):
        grid = Grid(64, 16.0)
        comp = ElementaryComponent(q=1j, profile=GaussPolyProfile.gaussian(0.3), grid=grid)
        assert not comp.is_hermitian_profile()


class TestDensityOperatorGrid:
    def test_shape_check(self):
        with pytest.raises(GridMismatch):
            DensityOperatorGrid(
                values=np.zeros((8, 9)), x_grid=Grid(8, 4.0), xd_grid=Grid(8, 4.0)
            )

    def test_hermiticity_defect(self):
        g = Grid(32, 16.0)
        x, xd = g.coords[:, None], g.coords[None, :]
        herm = np.exp(-x**2 - xd**2) * np.exp(1j * xd)
        rho = DensityOperatorGrid(values=herm, x_grid=g, xd_grid=g)
        assert rho.hermiticity_defect() < 1e-12
        rho_bad = rho.with_values(herm + 0.1j * np.exp(-x**2 - xd**2))
        assert rho_bad.hermiticity_defect() > 0.05
