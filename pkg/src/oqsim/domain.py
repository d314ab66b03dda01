"""Physical parameters, grids, and elementary translation components.

The dynamics is the most general harmonic translation-invariant Lindblad
master equation in one dimension, written for the density matrix in
center-of-mass / relative coordinates x = (x_+ + x_-)/2, x_d = x_+ - x_-:

    d_t rho = [ (i hbar / m) dx dxd
                + (i / hbar) f x_d
                - (d0 + d2 nu^2 - 2 m nu xi) / (2 hbar) x_d^2
                + i (d2 nu / m - xi) x_d dx
                - nu x_d dxd
                + (hbar d2 / (2 m^2)) dx^2 ] rho

with mass m, friction rate nu, decoherence coefficients d0 (coordinate)
and d2 (momentum diffusion), total-derivative coefficient xi, and dragging
force f.  Complete positivity is preserved for weak friction,
m^2 (nu^2 + 4 xi^2) <= 2 d0 d2.

Because no coefficient depends on x, the subspace of operators of the form
rho(x, x_d) = e^{iqx} chi(x_d) is closed under the evolution for every wave
vector q, which may be complex.  Such single-q operators are the elementary
components handled by the propagator and integrator modules; generic states
are superpositions of them (states module).

Conventions used throughout the package:

* one spatial dimension; the master equation separates across Cartesian
  axes, so d-dimensional states are products of 1-D kernels
  (see states.ProductState),
* no unit system is enforced; hbar = m = 1 scaling is recommended,
* grids are uniform, centered on zero, periodic-natural (the left endpoint
  -L/2 is included, +L/2 is the wrap-around image).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Protocol

import numpy as np

from .errors import (
    GridMismatch,
    NegativeRate,
    NonPositiveHbar,
    NonPositiveMass,
    PositivityViolation,
    ValidationError,
    ZeroFriction,
)

#: Wave vectors are plain complex scalars; a nonzero imaginary part encodes
#: an exponential (instead of oscillatory) coordinate profile e^{iqx}.
WaveVector = complex


@dataclass(frozen=True)
class PhysicalParams:
    """The seven master-equation parameters.

    Value-semantic and immutable; safe to share between workers.
    """

    m: float = 1.0
    hbar: float = 1.0
    nu: float = 0.0
    xi: float = 0.0
    d0: float = 0.0
    d2: float = 0.0
    f: float = 0.0

    def replace(self, **kw) -> "PhysicalParams":
        return dataclasses.replace(self, **kw)

    @classmethod
    def from_mapping(cls, section: Mapping[str, str]) -> "PhysicalParams":
        """Build from a flat key-value config section.

        Recognized keys: m, hbar, nu, xi, d0, d2, f.  The optional key
        strict_positivity is consumed by the caller, not here.
        """
        kw = {}
        for key in ("m", "hbar", "nu", "xi", "d0", "d2", "f"):
            if key in section:
                kw[key] = float(section[key])
        return cls(**kw)

    def positivity_sides(self) -> tuple[float, float]:
        """Return (m^2 (nu^2 + 4 xi^2), 2 d0 d2), the two sides of the
        complete-positivity inequality."""
        return self.m**2 * (self.nu**2 + 4.0 * self.xi**2), 2.0 * self.d0 * self.d2


def validate_params(p: PhysicalParams, strict: bool = False) -> PhysicalParams:
    """Check the structural invariants of a parameter set.

    Always enforced: m > 0, hbar > 0, nu >= 0, d0 >= 0, d2 >= 0 and all
    values finite.  With strict=True the complete-positivity bound
    m^2 (nu^2 + 4 xi^2) <= 2 d0 d2 is enforced in addition; sets exactly on
    the boundary are accepted.

    Returns p unchanged on success, raises a ValidationError subclass
    otherwise.  Idempotent.
    """
    for name in ("m", "hbar", "nu", "xi", "d0", "d2", "f"):
        if not math.isfinite(getattr(p, name)):
            raise ValidationError(f"parameter {name} is not finite")
    if p.m <= 0:
        raise NonPositiveMass(f"m = {p.m} must be > 0")
    if p.hbar <= 0:
        raise NonPositiveHbar(f"hbar = {p.hbar} must be > 0")
    if p.nu < 0:
        raise NegativeRate(f"nu = {p.nu} must be >= 0")
    if p.d0 < 0:
        raise NegativeRate(f"d0 = {p.d0} must be >= 0")
    if p.d2 < 0:
        raise NegativeRate(f"d2 = {p.d2} must be >= 0")
    if strict:
        lhs, rhs = p.positivity_sides()
        if lhs > rhs:
            raise PositivityViolation(lhs, rhs)
    return p


def drift_wavevector(p: PhysicalParams) -> float:
    """Wave vector k_f = f / (hbar nu) of the drift that balances the
    dragging force against friction.  Requires nu > 0."""
    if p.nu == 0:
        raise ZeroFriction("k_f = f / (hbar nu) is singular at nu = 0")
    return p.f / (p.hbar * p.nu)


def drift_velocity(p: PhysicalParams) -> float:
    """Companion velocity v_f = hbar k_f / m = f / (m nu)."""
    return p.hbar * drift_wavevector(p) / p.m


def decoherence_coefficient(p: PhysicalParams) -> float:
    """Saturated decoherence strength d = (d0 + d2 nu^2 - 2 m nu xi) / (2 hbar nu).

    The relative-coordinate Gaussian suppression built up by the evolution
    saturates at exponent (d/2) x_d^2.  Requires nu > 0.
    """
    if p.nu == 0:
        raise ZeroFriction("d = (d0 + d2 nu^2 - 2 m nu xi)/(2 hbar nu) is singular at nu = 0")
    return (p.d0 + p.d2 * p.nu**2 - 2.0 * p.m * p.nu * p.xi) / (2.0 * p.hbar * p.nu)


@dataclass(frozen=True)
class Grid:
    """Uniform 1-D grid of n samples over [-length/2, length/2), centered on zero.

    n must be >= 8; powers of two keep the FFT paths fast.  coords[n // 2]
    is exactly 0.
    """

    n: int
    length: float

    def __post_init__(self):
        if self.n < 8:
            raise ValidationError(f"grid needs n >= 8 samples, got {self.n}")
        if not (self.length > 0 and math.isfinite(self.length)):
            raise ValidationError(f"grid length must be positive and finite, got {self.length}")

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @cached_property
    def coords(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.spacing

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """FFT-conjugate wave numbers 2*pi*j/length in numpy fft order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)

    def index_of_zero(self) -> int:
        return self.n // 2

    def __eq__(self, other) -> bool:
        return isinstance(other, Grid) and self.n == other.n and self.length == other.length

    def __hash__(self):
        return hash((self.n, self.length))


def require_same_grid(a: Grid, b: Grid, what: str = "grids") -> None:
    if a != b:
        raise GridMismatch(f"{what} differ: ({a.n}, {a.length}) vs ({b.n}, {b.length})")


class ChiProfileLike(Protocol):
    """Anything evaluable on an array of relative coordinates."""

    def __call__(self, z: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class ElementaryComponent:
    """A single translation mode e^{iqx} chi(x_d).

    The relative-coordinate profile is carried as a ChiProfile (analytic
    Gaussian-polynomial family or grid samples, see oqsim.profiles); the
    sampled values on ``grid`` are available through :attr:`chi`.

    A component with real q is the x_d profile of a Hermitian operator only
    when chi(-x_d) = conj(chi(x_d)); this is reported, not enforced, because
    traceless components enter physical states in conjugate pairs and need
    not be Hermitian individually.
    """

    q: complex
    profile: "ChiProfileLike"
    grid: Grid

    @cached_property
    def chi(self) -> np.ndarray:
        """Profile sampled on grid.coords (complex ndarray)."""
        return np.asarray(self.profile(self.grid.coords), dtype=complex)

    def hermiticity_defect(self) -> float:
        """max |chi(-x_d) - conj(chi(x_d))| over the grid, normalized by max |chi|.

        Meaningful for real q only; the -x_d sample is the index-reflected
        array on the periodic grid.
        """
        chi = self.chi
        reflected = np.roll(chi[::-1], 1)
        scale = float(np.max(np.abs(chi)))
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(reflected - np.conj(chi))) / scale)

    def is_hermitian_profile(self, tol: float = 1e-10) -> bool:
        return self.q.imag == 0.0 and self.hermiticity_defect() <= tol


@dataclass(frozen=True)
class DensityOperatorGrid:
    """rho(x, x_d) sampled on x_grid (rows) x xd_grid (columns).

    Physical states satisfy rho(x, -x_d) = conj(rho(x, x_d)) up to grid
    tolerance and have finite norm int dx rho(x, 0).
    """

    values: np.ndarray
    x_grid: Grid
    xd_grid: Grid
    time: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.x_grid.n, self.xd_grid.n):
            raise GridMismatch(
                f"values shape {v.shape} does not match grids "
                f"({self.x_grid.n}, {self.xd_grid.n})"
            )
        object.__setattr__(self, "values", v)

    def hermiticity_defect(self) -> float:
        """max |rho(x, -x_d) - conj(rho(x, x_d))| / max |rho|."""
        v = self.values
        reflected = np.roll(v[:, ::-1], 1, axis=1)
        scale = float(np.max(np.abs(v)))
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(reflected - np.conj(v))) / scale)

    def with_values(self, values: np.ndarray, time: float | None = None) -> "DensityOperatorGrid":
        return DensityOperatorGrid(
            values=values,
            x_grid=self.x_grid,
            xd_grid=self.xd_grid,
            time=self.time if time is None else time,
        )


@dataclass(frozen=True)
class PropagatorCoefficients:
    """Closed-form propagator data at one (params, q, t).

    chi(t, x_d) = chi_i(x_d e^{-nu t} + shift) * exp(a + i k x_d - width x_d^2)

    At t = 0 all four entries vanish; width is nondecreasing in t for
    positivity-valid parameters.
    """

    a: complex
    k: complex
    width: float
    shift: complex


# trace classification ------------------------------------------------------

FIRST_CLASS = "first"
SECOND_CLASS = "second"


def classify_component(
    c: ElementaryComponent, box: Grid, tol: float = 1e-9
) -> str:
    """Classify a component by its trace over the box.

    The trace of e^{iqx} chi(x_d) is chi(0) * int_box e^{iqx} dx.  Components
    with nonvanishing trace are "first" class (they carry probability weight);
    traceless ones are "second" class.  On a periodic box a real q equal to a
    nonzero grid wavenumber integrates to zero exactly, so only the q = 0 mode
    with chi(0) != 0 is first class there.

    |trace| is compared against tol * length * max(|chi(0)|, machine floor).
    """
    chi0 = complex(c.profile(np.array([0.0]))[0])
    phase = np.exp(1j * complex(c.q) * box.coords)
    trace = chi0 * np.sum(phase) * box.spacing
    scale = box.length * max(abs(chi0), np.finfo(float).tiny)
    return FIRST_CLASS if abs(trace) > tol * scale else SECOND_CLASS
