"""Closed-form time evolution of a single translation mode.

For rho = e^{iqx} chi(x_d) the master equation reduces to a first-order
linear PDE for the profile,

    d_t chi = (c - nu x_d) d_xd chi + (A + B x_d - C x_d^2) chi

with

    c = -hbar q / m
    A = -hbar q^2 d2 / (2 m^2)
    B = i f / hbar + q (xi - d2 nu / m)
    C = (d0 + d2 nu^2 - 2 m nu xi) / (2 hbar)

(substitute e^{iqx} into the master equation; every x-derivative becomes a
factor iq).  Solving along the characteristics d x_d / dt = nu x_d - c gives

    chi(t, x_d) = chi_i(x_d e^{-nu t} + shift(t))
                  * exp(a_q(t) + i k_q(t) x_d - width(t) x_d^2)

    shift = c F1                      width = C F2
    k_q   = -i (B F1 - C c F1^2)      a_q   = A t + B c F3 - C c^2 F4

where F1..F4 are the friction shape functions

    F1 = (1 - e^{-z}) / nu                              -> t
    F2 = (1 - e^{-2z}) / (2 nu)                         -> t
    F3 = (z - 1 + e^{-z}) / nu^2                        -> t^2 / 2
    F4 = (2z - 3 + 4 e^{-z} - e^{-2z}) / (2 nu^3)       -> t^3 / 3

with z = nu t; the arrows give the frictionless nu -> 0 limits, evaluated
here by series below a crossover in z so every coefficient is finite and
accurate for all nu >= 0.

These expressions are locked in by three independent checks in the test
suite: exact vanishing at t = 0, pointwise agreement with the numerical
integrator of the same PDE, and the long-time weight rate
-(hbar q / m)(i k_f + d0 q / (2 m nu^2)).

A historical variant of a_q (provenance "paper-printed") whose xi-dependent
term reads (1 + 2i e^{-z} + e^{-2z}) instead of (1 - e^{-z})^2 is kept for
negative-control tests; it violates chi(0) = chi_i whenever xi != 0.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .domain import (
    ElementaryComponent,
    Grid,
    PhysicalParams,
    PropagatorCoefficients,
    drift_wavevector,
)
from .errors import DomainEscape, ZeroFriction
from .profiles import GaussPolyProfile, SampledProfile

# -- shape functions --------------------------------------------------------

_SERIES_CROSSOVER = 0.25
_SERIES_TERMS = 24


def _series(z, coeff_k):
    """sum_k coeff_k(k) z^k for k = 0 .. _SERIES_TERMS (Horner, vectorized)."""
    acc = np.zeros_like(z)
    for k in range(_SERIES_TERMS, -1, -1):
        acc = acc * z + coeff_k(k)
    return acc


def _factorials(n):
    out = [1.0]
    for k in range(1, n + 1):
        out.append(out[-1] * k)
    return out


_FACT = _factorials(_SERIES_TERMS + 4)


def _shape_functions(nu: float, t) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Return (F1, F2, F3, F4) at the given times, stable for all nu >= 0.

    The closed forms lose precision to cancellation for small z = nu t
    (F4 worst, relative error ~ eps / z^2), so below z = 0.25 the Taylor
    series in z are used instead; both branches agree to ~1e-14 at the
    crossover.  At t = 0 all four are exactly zero.
    """
    t = np.asarray(t, dtype=float)
    z = nu * t
    small = z < _SERIES_CROSSOVER

    # series branch (covers nu == 0)
    f1_s = t * _series(z, lambda k: (-1.0) ** k / _FACT[k + 1])
    f2_s = t * _series(z, lambda k: (-2.0) ** k / _FACT[k + 1])
    f3_s = t * t * _series(z, lambda k: (-1.0) ** k / _FACT[k + 2])
    f4_s = (t**3 / 2.0) * _series(
        z, lambda k: (4.0 * (-1.0) ** (k + 3) - (-2.0) ** (k + 3)) / _FACT[k + 3]
    )

    nu_safe = nu if nu > 0 else 1.0
    with np.errstate(all="ignore"):
        em1 = np.expm1(-z)
        em2 = np.expm1(-2.0 * z)
        f1_c = -em1 / nu_safe
        f2_c = -em2 / (2.0 * nu_safe)
        f3_c = (z + em1) / nu_safe**2
        f4_c = (2.0 * (z + em1) - em1 * em1) / (2.0 * nu_safe**3)

    f1 = np.where(small, f1_s, f1_c)
    f2 = np.where(small, f2_s, f2_c)
    f3 = np.where(small, f3_s, f3_c)
    f4 = np.where(small, f4_s, f4_c)
    return f1, f2, f3, f4


# -- source-term coefficients of the mode PDE -------------------------------


def advection_constant(p: PhysicalParams, q: complex) -> complex:
    """c = -hbar q / m, the x_d-independent part of the characteristic speed."""
    return -p.hbar * q / p.m


def source_coefficients(p: PhysicalParams, q: complex) -> tuple[complex, complex, float]:
    """(A, B, C) of the mode PDE source A + B x_d - C x_d^2."""
    A = -p.hbar * q * q * p.d2 / (2.0 * p.m**2)
    B = 1j * p.f / p.hbar + q * (p.xi - p.d2 * p.nu / p.m)
    C = (p.d0 + p.d2 * p.nu**2 - 2.0 * p.m * p.nu * p.xi) / (2.0 * p.hbar)
    return A, B, C


# -- coefficient formulas ----------------------------------------------------

REDERIVED = "rederived"
PAPER_PRINTED = "paper-printed"


@dataclass(frozen=True)
class CoefficientFormula:
    """Closed-form evaluators for (a_q, k_q, shift, width) under one provenance.

    "rederived" is the characteristics solution above and is the default
    everywhere.  "paper-printed" differs only in the xi-term of a_q and is
    retained for documentation and negative-control tests; it requires
    nu > 0 and fails a_q(0) = 0 when xi != 0.
    """

    provenance: str = REDERIVED

    def coefficients(self, p: PhysicalParams, q: complex, t) -> PropagatorCoefficients:
        a = self.a(p, q, t)
        k = self.k(p, q, t)
        return PropagatorCoefficients(
            a=a, k=k, width=self.width(p, t), shift=self.shift(p, q, t)
        )

    def shift(self, p: PhysicalParams, q: complex, t):
        f1, _, _, _ = _shape_functions(p.nu, t)
        return _maybe_scalar(advection_constant(p, q) * f1)

    def width(self, p: PhysicalParams, t):
        _, f2, _, _ = _shape_functions(p.nu, t)
        _, _, C = source_coefficients(p, 0.0)
        return _maybe_scalar(C * f2)

    def k(self, p: PhysicalParams, q: complex, t):
        f1, _, _, _ = _shape_functions(p.nu, t)
        _, B, C = source_coefficients(p, q)
        c = advection_constant(p, q)
        return _maybe_scalar(-1j * (B * f1 - C * c * f1 * f1))

    def a(self, p: PhysicalParams, q: complex, t):
        if self.provenance == PAPER_PRINTED:
            return self._a_printed(p, q, t)
        f1, f2, f3, f4 = _shape_functions(p.nu, t)
        A, B, C = source_coefficients(p, q)
        c = advection_constant(p, q)
        return _maybe_scalar(A * np.asarray(t, dtype=float) + B * c * f3 - C * c * c * f4)

    @staticmethod
    def _a_printed(p: PhysicalParams, q: complex, t):
        if p.nu == 0:
            raise ZeroFriction("the printed a_q carries explicit 1/nu factors")
        t = np.asarray(t, dtype=float)
        e1 = np.exp(-p.nu * t)
        e2 = np.exp(-2.0 * p.nu * t)
        m, hbar, nu, xi, d0, d2, f = p.m, p.hbar, p.nu, p.xi, p.d0, p.d2, p.f
        first = -(2j * q * f * (nu * t - 1.0 + e1) + hbar * q * q * xi * (1.0 + 2j * e1 + e2)) / (
            2.0 * m * nu**2
        )
        second = -(hbar * q * q / (4.0 * m**2 * nu**3)) * (
            d0 * (-e2 + 4.0 * e1 - 3.0 + 2.0 * nu * t) + d2 * nu**2 * (1.0 - e2)
        )
        return _maybe_scalar(first + second)


def _maybe_scalar(x):
    x = np.asarray(x)
    return x[()] if x.ndim == 0 else x


REDERIVED_FORMULA = CoefficientFormula(REDERIVED)
PAPER_PRINTED_FORMULA = CoefficientFormula(PAPER_PRINTED)


# -- spec-level operations ---------------------------------------------------


def gaussian_width(p: PhysicalParams, t) -> float:
    """Decoherence exponent coefficient  C (1 - e^{-2 nu t}) / (2 nu).

    Equals (d/2)(1 - e^{-2 nu t}) with d the saturated decoherence strength;
    the nu = 0 limit C t is returned for frictionless parameters.
    """
    _require_nonnegative_time(t)
    return REDERIVED_FORMULA.width(p, t)


def characteristic_argument(p: PhysicalParams, q: complex, t, x_d):
    """Initial coordinate of the characteristic through (t, x_d):

        x_d e^{-nu t} - (hbar q / (m nu)) (1 - e^{-nu t})

    For real q the argument stays real; complex q (exponential coordinate
    profiles) move it off the real axis, which requires an analytically
    continuable profile.  As t -> infinity the argument contracts to the
    single point -hbar q / (m nu): the only memory the profile keeps of its
    initial condition.
    """
    _require_nonnegative_time(t)
    t = np.asarray(t, dtype=float)
    decay = np.exp(-p.nu * t)
    return _maybe_scalar(np.asarray(x_d) * decay + REDERIVED_FORMULA.shift(p, q, t))


def coeff_a(p: PhysicalParams, q: complex, t, formula: CoefficientFormula = REDERIVED_FORMULA):
    """Exponent weight a_q(t) accumulated along the characteristic; a_q(0) = 0."""
    _require_nonnegative_time(t)
    return formula.a(p, q, t)


def coeff_k(p: PhysicalParams, q: complex, t, formula: CoefficientFormula = REDERIVED_FORMULA):
    """Linear exponent coefficient k_q(t); contributes hbar k_q to the momentum."""
    _require_nonnegative_time(t)
    return formula.k(p, q, t)


def coefficients(
    p: PhysicalParams, q: complex, t, formula: CoefficientFormula = REDERIVED_FORMULA
) -> PropagatorCoefficients:
    _require_nonnegative_time(t)
    return formula.coefficients(p, q, t)


def evolve_component(
    c: ElementaryComponent,
    p: PhysicalParams,
    t: float,
    formula: CoefficientFormula = REDERIVED_FORMULA,
) -> ElementaryComponent:
    """Propagate one mode for time t with the closed-form solution.

    The wave vector label never changes (mode subspaces are closed).  For a
    GaussPolyProfile the returned component carries the exactly transported
    profile (the family is closed under the flow); for a SampledProfile the
    transported samples are interpolated, which requires a real q and
    characteristic arguments inside the sampled range (DomainEscape
    otherwise).
    """
    _require_nonnegative_time(t)
    co = formula.coefficients(p, complex(c.q), float(t))
    decay = float(np.exp(-p.nu * float(t)))

    if isinstance(c.profile, GaussPolyProfile):
        transported = c.profile.compose_affine(decay, co.shift)
        evolved = transported.scaled_exponent(-co.width + 0j, 1j * co.k, co.a)
        return ElementaryComponent(q=c.q, profile=evolved, grid=c.grid)

    if isinstance(c.profile, SampledProfile):
        if abs(complex(co.shift).imag) > 0.0:
            raise DomainEscape(
                "complex characteristic shift: sampled profiles support real q only"
            )
        x = c.grid.coords
        args = x * decay + complex(co.shift).real
        values = c.profile(args) * np.exp(co.a + 1j * co.k * x - co.width * x * x)
        return ElementaryComponent(
            q=c.q, profile=SampledProfile(grid=c.grid, values=values), grid=c.grid
        )

    raise TypeError(f"unsupported profile type {type(c.profile).__name__}")


def longtime_weight_rate(p: PhysicalParams, q: complex) -> complex:
    """Asymptotic exponential rate of the weight e^{a_q}:

        -(hbar q / m) (i k_f + d0 q / (2 m nu^2))

    Real q with f = 0 gives the pure suppression -hbar q^2 d0 / (2 m^2 nu^2);
    every inhomogeneous (real q != 0) component is depopulated.  This is the
    exact secular part of a_q, independent of d2 and xi.
    """
    if p.nu == 0:
        raise ZeroFriction("the long-time rate carries 1/nu^2")
    k_f = drift_wavevector(p)
    return -(p.hbar * q / p.m) * (1j * k_f + p.d0 * q / (2.0 * p.m * p.nu**2))


def equilibrium_force(p: PhysicalParams, q_i: float) -> float:
    """Force making the exponential-profile component q = i q_i stationary.

    Setting longtime_weight_rate(p, i q_i) = 0 gives f = -hbar q_i d0 / (2 m nu);
    the matching drift speed magnitude is |v_f| = hbar |q_i| d0 / (2 m^2 nu^2).
    The sign pushes against the outflux feeding the e^{-q_i x} density tail.
    """
    if p.nu == 0:
        raise ZeroFriction("equilibrium force balances friction; needs nu > 0")
    return -p.hbar * q_i * p.d0 / (2.0 * p.m * p.nu)


def open_to_closed_basis(q: float, k: float) -> tuple[float, float]:
    """Dyad labels (k_plus, k_minus) with e^{i k_+ x_+ - i k_- x_-} = e^{iqx + ikx_d}.

    Under x_pm = x +- x_d/2 the identity fixes k_+ = k + q/2, k_- = k - q/2.
    """
    return k + q / 2.0, k - q / 2.0


def closed_to_open_basis(k_plus: float, k_minus: float) -> tuple[float, float]:
    """Inverse of open_to_closed_basis: (q, k) = (k_+ - k_-, (k_+ + k_-)/2)."""
    return k_plus - k_minus, (k_plus + k_minus) / 2.0


# -- coefficient trajectories ------------------------------------------------

COEFFICIENT_COLUMNS = ("t", "re_a", "im_a", "re_k", "im_k", "width", "re_shift", "im_shift")


def coefficient_table(
    p: PhysicalParams,
    q: complex,
    times: Sequence[float],
    formula: CoefficientFormula = REDERIVED_FORMULA,
) -> list[tuple[float, ...]]:
    rows = []
    for t in times:
        co = formula.coefficients(p, q, float(t))
        a, k, s = complex(co.a), complex(co.k), complex(co.shift)
        rows.append((float(t), a.real, a.imag, k.real, k.imag, float(co.width), s.real, s.imag))
    return rows


def write_coefficient_csv(path, rows: Iterable[tuple[float, ...]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COEFFICIENT_COLUMNS)
        for row in rows:
            writer.writerow([f"{v:.17g}" for v in row])


def _require_nonnegative_time(t) -> None:
    if np.any(np.asarray(t) < 0):
        raise ValueError("time must be >= 0")
