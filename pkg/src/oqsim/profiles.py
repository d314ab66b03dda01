"""Relative-coordinate profiles chi(x_d) for elementary components.

Two families:

* GaussPolyProfile: P(z) * exp(c2 z^2 + c1 z + c0) with polynomial P.
  Entire in z, so it can be evaluated at the complex characteristic
  arguments produced by complex wave vectors, and it is exactly closed
  under the propagator flow (a Gaussian stays a Gaussian).
* SampledProfile: cubic-spline interpolation of grid samples.  Restricted
  to real arguments inside the sampled range; complex wave vectors need an
  analytic family instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.interpolate import CubicSpline

from .domain import Grid
from .errors import DomainEscape


@dataclass(frozen=True)
class GaussPolyProfile:
    """chi(z) = P(z) * exp(c2 z^2 + c1 z + c0), P given by ascending coefficients."""

    poly: tuple[complex, ...] = (1.0 + 0.0j,)
    c2: complex = 0.0
    c1: complex = 0.0
    c0: complex = 0.0

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return np.polynomial.polynomial.polyval(z, np.asarray(self.poly)) * np.exp(
            self.c2 * z * z + self.c1 * z + self.c0
        )

    @classmethod
    def gaussian(cls, alpha: complex, amplitude: complex = 1.0) -> "GaussPolyProfile":
        """exp(-alpha z^2), scaled; alpha = 0 gives a constant profile."""
        return cls(poly=(complex(amplitude),), c2=-complex(alpha))

    @classmethod
    def constant(cls, value: complex = 1.0) -> "GaussPolyProfile":
        return cls(poly=(complex(value),))

    def compose_affine(self, scale: complex, offset: complex) -> "GaussPolyProfile":
        """Profile z -> chi(scale * z + offset), still in the family."""
        coeffs = np.asarray(self.poly)
        # P(scale z + offset) via binomial re-expansion
        n = len(coeffs)
        new = np.zeros(n, dtype=complex)
        for k, ck in enumerate(coeffs):
            for j in range(k + 1):
                new[j] += ck * comb(k, j) * (scale**j) * (offset ** (k - j))
        return GaussPolyProfile(
            poly=tuple(new),
            c2=self.c2 * scale * scale,
            c1=2.0 * self.c2 * scale * offset + self.c1 * scale,
            c0=self.c2 * offset * offset + self.c1 * offset + self.c0,
        )

    def scaled_exponent(self, d2: complex, d1: complex, d0: complex) -> "GaussPolyProfile":
        """Multiply by exp(d2 z^2 + d1 z + d0)."""
        return GaussPolyProfile(
            poly=self.poly, c2=self.c2 + d2, c1=self.c1 + d1, c0=self.c0 + d0
        )


@dataclass(frozen=True)
class SampledProfile:
    """Grid samples with cubic-spline evaluation on the real axis."""

    grid: Grid
    values: np.ndarray
    _re: CubicSpline = field(init=False, repr=False, compare=False)
    _im: CubicSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.n,):
            raise DomainEscape(
                f"samples shape {v.shape} does not match grid ({self.grid.n},)"
            )
        object.__setattr__(self, "values", v)
        x = self.grid.coords
        object.__setattr__(self, "_re", CubicSpline(x, v.real))
        object.__setattr__(self, "_im", CubicSpline(x, v.imag))

    def __call__(self, z):
        z = np.asarray(z)
        if np.iscomplexobj(z) and np.max(np.abs(z.imag)) > 0.0:
            raise DomainEscape(
                "sampled profiles cannot be continued to complex arguments; "
                "use a GaussPolyProfile"
            )
        zr = z.real.astype(float)
        lo, hi = self.grid.coords[0], self.grid.coords[-1]
        if zr.size and (zr.min() < lo or zr.max() > hi):
            raise DomainEscape(
                f"argument range [{zr.min():.6g}, {zr.max():.6g}] escapes the "
                f"sampled domain [{lo:.6g}, {hi:.6g}]"
            )
        return self._re(zr) + 1j * self._im(zr)


ChiProfileLike = GaussPolyProfile | SampledProfile
