"""Generic mixed states as superpositions of elementary translation modes.

A spectral state stores one relative-coordinate profile chi_q(x_d) per wave
number q of the FFT-conjugate q grid and represents

    rho(x, x_d) = (1/L) sum_q e^{iqx} chi_q(x_d)

(the discrete transcription of the integral over dq/2pi).  Synthesis and
decomposition are exact mutual inverses on the grid; evolution applies the
closed-form mode propagator to every q, and the long-time behavior collapses
to a slowly spreading homogeneous profile whose amplitude falls like
t^{-1/2}.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .domain import (
    DensityOperatorGrid,
    ElementaryComponent,
    Grid,
    PhysicalParams,
    decoherence_coefficient,
    drift_wavevector,
)
from .errors import DomainEscape, FitFailure, GridMismatch, ZeroDecoherence, ZeroNorm
from .profiles import GaussPolyProfile
from .propagator import REDERIVED_FORMULA, CoefficientFormula, evolve_component


@dataclass(frozen=True)
class SpectralState:
    """Per-mode profiles chi[j, :] on xd_grid for q = x_grid.wavenumbers[j].

    ``profiles`` optionally carries the same modes as analytic
    GaussPolyProfile objects (one per q, same ordering); evolution requires
    them because the characteristic argument of a complex-q free state or
    the exact Gaussian closure cannot be reproduced from bare samples.
    """

    x_grid: Grid
    xd_grid: Grid
    chi: np.ndarray
    profiles: tuple[GaussPolyProfile, ...] | None = None

    def __post_init__(self):
        c = np.asarray(self.chi, dtype=complex)
        if c.shape != (self.x_grid.n, self.xd_grid.n):
            raise GridMismatch(
                f"chi shape {c.shape} does not match (n_q, n_xd) = "
                f"({self.x_grid.n}, {self.xd_grid.n})"
            )
        object.__setattr__(self, "chi", c)

    @property
    def q_values(self) -> np.ndarray:
        return self.x_grid.wavenumbers

    @classmethod
    def from_profile_family(
        cls,
        x_grid: Grid,
        xd_grid: Grid,
        family: Callable[[float], GaussPolyProfile],
    ) -> "SpectralState":
        """Build a state from a map q -> analytic profile."""
        profiles = tuple(family(float(q)) for q in x_grid.wavenumbers)
        chi = np.array([prof(xd_grid.coords) for prof in profiles])
        return cls(x_grid=x_grid, xd_grid=xd_grid, chi=chi, profiles=profiles)

    def hermiticity_pairing_defect(self) -> float:
        """max |chi_{-q}(-x_d) - conj(chi_q(x_d))| / max |chi|.

        Zero exactly when the synthesized rho is Hermitian.
        """
        c = self.chi
        paired = np.roll(np.roll(c[::-1, :], 1, axis=0)[:, ::-1], 1, axis=1)
        scale = float(np.max(np.abs(c)))
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(paired - np.conj(c))) / scale)


def synthesize(s: SpectralState) -> DensityOperatorGrid:
    """Inverse transform rho(x_i, x_d) = (1/L) sum_j e^{i q_j x_i} chi_j(x_d).

    With the centered x grid the FFT index phase is (-1)^j; a single distinct
    occupied bin chi_{q0} therefore synthesizes to e^{i q0 x} chi(x_d) / L.
    """
    n = s.x_grid.n
    signs = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)[:, None]
    values = np.fft.ifft(signs * s.chi, axis=0) * (n / s.x_grid.length)
    return DensityOperatorGrid(values=values, x_grid=s.x_grid, xd_grid=s.xd_grid)


def decompose(rho: DensityOperatorGrid) -> SpectralState:
    """Forward transform chi_j(x_d) = h sum_i rho(x_i, x_d) e^{-i q_j x_i};
    exact inverse of synthesize on the grid."""
    n = rho.x_grid.n
    signs = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)[:, None]
    chi = signs * np.fft.fft(rho.values, axis=0) * rho.x_grid.spacing
    return SpectralState(x_grid=rho.x_grid, xd_grid=rho.xd_grid, chi=chi)


def evolve_state(
    s: SpectralState,
    p: PhysicalParams,
    t: float,
    formula: CoefficientFormula = REDERIVED_FORMULA,
    threads: int = 1,
) -> SpectralState:
    """Apply the closed-form propagator to every mode.

    Requires analytic per-mode profiles; modes are independent, so the work
    is mapped over a thread pool when threads > 1.
    """
    if s.profiles is None:
        raise DomainEscape(
            "evolve_state needs analytic per-mode profiles; route sampled "
            "states through the numerical oracle instead"
        )

    qs = s.q_values

    def one(j: int) -> GaussPolyProfile:
        comp = ElementaryComponent(q=complex(qs[j]), profile=s.profiles[j], grid=s.xd_grid)
        return evolve_component(comp, p, t, formula=formula).profile

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            evolved = tuple(pool.map(one, range(len(qs))))
    else:
        evolved = tuple(one(j) for j in range(len(qs)))

    chi = np.array([prof(s.xd_grid.coords) for prof in evolved])
    return SpectralState(x_grid=s.x_grid, xd_grid=s.xd_grid, chi=chi, profiles=evolved)


def longtime_asymptote(s: SpectralState, p: PhysicalParams, t: float) -> DensityOperatorGrid:
    """Saddle-point form of the evolved state for nu t >> 1:

        rho(t, x, x_d) ~ (m nu / sqrt(2 pi d0 hbar t)) chi_{i,0}(0)
                         * exp(-t f^2 / (2 d0 hbar) + i k_f x_d - (d/2) x_d^2)

    x-independent: every inhomogeneous mode has been suppressed.  The
    amplitude of the f = 0 asymptote falls exactly like t^{-1/2}; the x_d
    width saturates at d/2.  Singular as d0 -> 0 (the force instability is
    no longer regularized).
    """
    if p.d0 == 0:
        raise ZeroDecoherence("the long-time asymptote diverges as d0 -> 0")
    if p.nu * t < 5.0:
        warnings.warn(
            f"nu t = {p.nu * t:.3g} < 5; the saddle-point asymptote is unreliable",
            stacklevel=2,
        )
    d = decoherence_coefficient(p)
    k_f = drift_wavevector(p)
    j0 = int(np.argmin(np.abs(s.q_values)))
    if s.profiles is not None:
        chi00 = complex(s.profiles[j0](np.array([0.0]))[0])
    else:
        chi00 = complex(s.chi[j0, s.xd_grid.index_of_zero()])
    prefactor = p.m * p.nu / np.sqrt(2.0 * np.pi * p.d0 * p.hbar * t)
    x_d = s.xd_grid.coords[None, :]
    row = prefactor * chi00 * np.exp(
        -t * p.f**2 / (2.0 * p.d0 * p.hbar) + 1j * k_f * x_d - 0.5 * d * x_d * x_d
    )
    values = np.broadcast_to(row, (s.x_grid.n, s.xd_grid.n)).copy()
    return DensityOperatorGrid(values=values, x_grid=s.x_grid, xd_grid=s.xd_grid, time=t)


# -- observables ---------------------------------------------------------------


def norm(rho: DensityOperatorGrid) -> complex:
    """Trace transcription int dx rho(x, 0) (periodic rectangle rule).

    Real up to grid tolerance for physical states, and exactly conserved by
    the dynamics for normalizable states; the weight of individual
    inhomogeneous components is tracked by component_weight instead.
    """
    i0 = rho.xd_grid.index_of_zero()
    return complex(np.sum(rho.values[:, i0]) * rho.x_grid.spacing)


def component_weight(rho: DensityOperatorGrid) -> float:
    """max_x |rho(x, 0)|: the amplitude of the position-density profile.

    The natural suppression measure for inhomogeneous content: the exact
    trace is blind to it (only the homogeneous mode contributes), while the
    peak amplitude decays with every depopulated mode.
    """
    i0 = rho.xd_grid.index_of_zero()
    return float(np.max(np.abs(rho.values[:, i0])))


def position_density(rho: DensityOperatorGrid, tol: float = 1e-8) -> np.ndarray:
    """Re rho(x, 0); warns when the imaginary part or negativity exceeds
    tol * max |rho(x, 0)|."""
    i0 = rho.xd_grid.index_of_zero()
    row = rho.values[:, i0]
    scale = float(np.max(np.abs(row))) or 1.0
    if float(np.max(np.abs(row.imag))) > tol * scale:
        warnings.warn("position density has a non-negligible imaginary part", stacklevel=2)
    dens = row.real.copy()
    if float(dens.min()) < -tol * scale:
        warnings.warn("position density has negative values beyond tolerance", stacklevel=2)
    return dens


def momentum_expectation(rho: DensityOperatorGrid, hbar: float = 1.0,
                         tol: float = 1e-12) -> float:
    """<p> = (1/norm) int dx [(hbar/i) d_xd rho](x, 0).

    Uses the q-independent reduced momentum operator -i hbar d_xd, valid for
    normalizable states (the center-of-mass gradient term integrates to
    zero).  The x_d derivative at zero is a 4th-order central stencil.
    Raises ZeroNorm when |norm| is below tol times the amplitude scale.
    """
    n = norm(rho)
    i0 = rho.xd_grid.index_of_zero()
    scale = float(np.max(np.abs(rho.values[:, i0]))) * rho.x_grid.length
    if abs(n) <= tol * max(scale, np.finfo(float).tiny):
        raise ZeroNorm(f"norm {n:.3e} too small to normalize an expectation value")
    h = rho.xd_grid.spacing
    v = rho.values
    deriv = (v[:, i0 - 2] - 8.0 * v[:, i0 - 1] + 8.0 * v[:, i0 + 1] - v[:, i0 + 2]) / (12.0 * h)
    total = np.sum(deriv) * rho.x_grid.spacing
    return float((-1j * hbar * total / n).real)


def purity(rho: DensityOperatorGrid) -> float:
    """Grid transcription of Tr rho^2 = int dx dx_d rho(x, x_d) rho(x, -x_d)."""
    v = rho.values
    reflected = np.roll(v[:, ::-1], 1, axis=1)
    val = np.sum(v * reflected) * rho.x_grid.spacing * rho.xd_grid.spacing
    return float(val.real)


def coherence_width(
    rho: DensityOperatorGrid,
    x: float,
    rel_floor: float = 1e-12,
    max_misfit: float = 1e-3,
) -> float:
    """Quadratic coefficient of -log |rho(x, x_d) / rho(x, 0)| in x_d.

    Least-squares fit of c1 x_d + c2 x_d^2 over the window where the
    envelope is above rel_floor of its center value; returns c2.  For the
    analytic evolution of a constant profile this equals the propagator
    width exactly; a Gaussian initial profile adds its mapped initial width
    alpha e^{-2 nu t}.  FitFailure when the residual exceeds max_misfit
    (envelope not Gaussian-dominated).
    """
    ix = int(np.argmin(np.abs(rho.x_grid.coords - x)))
    row = rho.values[ix, :]
    i0 = rho.xd_grid.index_of_zero()
    center = row[i0]
    if abs(center) == 0.0:
        raise FitFailure("rho(x, 0) vanishes; envelope undefined")
    ratio = np.abs(row / center)
    mask = ratio > rel_floor
    mask[i0] = False  # log(1) carries no information and the point is exact
    x_d = rho.xd_grid.coords[mask]
    target = -np.log(ratio[mask])
    if x_d.size < 4:
        raise FitFailure("too few usable samples inside the envelope window")
    design = np.stack([x_d, x_d * x_d], axis=1)
    coeffs, *_ = np.linalg.lstsq(design, target, rcond=None)
    fitted = design @ coeffs
    denom = float(np.max(np.abs(target))) or 1.0
    misfit = float(np.max(np.abs(fitted - target))) / denom
    if misfit > max_misfit:
        raise FitFailure(f"quadratic fit misfit {misfit:.3e} exceeds {max_misfit:.3e}")
    return float(coeffs[1])


# -- separable multi-axis composition ------------------------------------------


@dataclass(frozen=True)
class ProductState:
    """d-dimensional state as a product of per-axis 1-D kernels.

    The master equation is a sum of identical one-axis generators, so a
    product initial state stays a product and every axis evolves
    independently; observables compose multiplicatively (norm, purity) or
    additively per axis (momentum components).
    """

    axes: tuple[DensityOperatorGrid, ...]

    def norm(self) -> complex:
        out = 1.0 + 0.0j
        for rho in self.axes:
            out *= norm(rho)
        return out

    def purity(self) -> float:
        out = 1.0
        for rho in self.axes:
            out *= purity(rho)
        return out

    def momentum_expectation(self) -> tuple[float, ...]:
        return tuple(momentum_expectation(rho) for rho in self.axes)

    def evolve_numeric(self, p: PhysicalParams, t: float, cfg=None) -> "ProductState":
        from .integrator import DEFAULT_CONFIG, evolve_rho_numeric

        cfg = cfg or DEFAULT_CONFIG
        return ProductState(axes=tuple(evolve_rho_numeric(rho, p, t, cfg) for rho in self.axes))


# -- convenience builders -------------------------------------------------------


def gaussian_packet_state(
    x_grid: Grid, xd_grid: Grid, sigma: float, k0: float = 0.0
) -> SpectralState:
    """Pure Gaussian wave packet psi(x) ~ e^{ik0 x} e^{-x^2/(4 sigma^2)} as a
    spectral state (normalized to unit trace).

    The carrier enters as the relative-coordinate phase e^{i k0 x_d}; the
    wave-number spread of the density stays centered at q = 0:

        chi_q(x_d) = e^{-q^2 sigma^2 / 2} e^{-x_d^2 / (8 sigma^2)} e^{i k0 x_d}
    """

    def family(q: float) -> GaussPolyProfile:
        amp = np.exp(-(q**2) * sigma**2 / 2.0)
        return GaussPolyProfile(
            poly=(complex(amp),), c2=-1.0 / (8.0 * sigma**2), c1=1j * k0
        )

    return SpectralState.from_profile_family(x_grid, xd_grid, family)


def gaussian_spread_state(
    x_grid: Grid,
    xd_grid: Grid,
    dq: float,
    q0: float = 0.0,
    alpha: float = 0.25,
    amplitude: float = 1.0,
) -> SpectralState:
    """Gaussian q spread around q0 with a shared Gaussian x_d profile:

        chi_q(x_d) = amplitude e^{-(q - q0)^2 / (2 dq^2)} e^{-alpha x_d^2}

    q0 = 0 gives a homogeneous packet; q0 != 0 an inhomogeneous density-wave
    family whose every mode is depopulated by decoherence.
    """

    def family(q: float) -> GaussPolyProfile:
        amp = amplitude * np.exp(-((q - q0) ** 2) / (2.0 * dq**2))
        return GaussPolyProfile.gaussian(alpha, amplitude=amp)

    return SpectralState.from_profile_family(x_grid, xd_grid, family)
