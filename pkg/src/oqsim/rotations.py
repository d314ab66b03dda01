"""Tensor-operator algebra for rotationally invariant open dynamics.

The operator block between two angular-momentum multiplets l_minus, l_plus
is spanned by tensor operators T^(l)_m, l = |l_- - l_+| .. l_- + l_+, whose
matrix elements are Clebsch-Gordan coefficients,

    <l_- m_- | T^(l)_m | l_+ m_+>  =  N_l  C(l_+, l, m_+, m | l_-, m_-),

with N_l fixing unit Hilbert-Schmidt norm, Tr[T^dagger T] = 1.  These
multiplets transform irreducibly under simultaneous (diagonal) rotation of
bra and ket, which is exactly why they stay closed under a rotationally
invariant open evolution, and the change of basis between the dyads
|l_- m_-><l_+ m_+| and the T^(l)_m is an isometry.

Conventions: Condon-Shortley phases throughout; Clebsch-Gordan values are
evaluated in exact rational arithmetic (squared rationals, rooted at the
end), so no factorial cancellation occurs in the supported label range.
Half-integer labels are carried as doubled integers internally.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import InvalidLabel, ShapeMismatch


# -- labels -------------------------------------------------------------------


def _two_j(value) -> int:
    """Doubled angular momentum as an exact integer; accepts 1, 0.5, etc."""
    two = 2.0 * float(value)
    rounded = int(round(two))
    if abs(two - rounded) > 1e-9 or rounded < 0:
        raise InvalidLabel(f"{value} is not a nonnegative (half-)integer label")
    return rounded


@dataclass(frozen=True)
class AngularMomentumLabel:
    """(l, m) with 2l, 2m stored exactly; |m| <= l and l + m integer."""

    two_l: int
    two_m: int

    def __post_init__(self):
        if self.two_l < 0 or abs(self.two_m) > self.two_l:
            raise InvalidLabel(f"|m| <= l violated: 2l = {self.two_l}, 2m = {self.two_m}")
        if (self.two_l + self.two_m) % 2 != 0:
            raise InvalidLabel(f"l + m must be integer: 2l = {self.two_l}, 2m = {self.two_m}")

    @classmethod
    def of(cls, l, m) -> "AngularMomentumLabel":
        return cls(_two_j(l), _two_m(m))


def _two_m(value) -> int:
    two = 2.0 * float(value)
    rounded = int(round(two))
    if abs(two - rounded) > 1e-9:
        raise InvalidLabel(f"{value} is not a (half-)integer projection")
    return rounded


def _m_range(two_l: int) -> list[int]:
    return list(range(-two_l, two_l + 1, 2))


def multiplet_dim(l) -> int:
    return _two_j(l) + 1


# -- Clebsch-Gordan -----------------------------------------------------------


@lru_cache(maxsize=None)
def _cg_exact(tj1: int, tm1: int, tj2: int, tm2: int, tj: int, tm: int) -> tuple[int, Fraction]:
    """(sign, value^2) of C(j1 m1 j2 m2 | j m) as an exact rational."""
    if tm1 + tm2 != tm:
        return 0, Fraction(0)
    if tj < abs(tj1 - tj2) or tj > tj1 + tj2 or (tj1 + tj2 + tj) % 2 != 0:
        return 0, Fraction(0)
    if abs(tm) > tj:
        return 0, Fraction(0)

    def fact(two_n: int) -> int:
        if two_n % 2 != 0 or two_n < 0:
            raise InvalidLabel("factorial argument must be a nonnegative integer")
        return math.factorial(two_n // 2)

    # Racah's closed form; every factorial argument below is an integer.
    pref = Fraction(
        (tj + 1)
        * fact(tj1 + tj2 - tj)
        * fact(tj1 - tj2 + tj)
        * fact(-tj1 + tj2 + tj),
        fact(tj1 + tj2 + tj + 2),
    ) * Fraction(
        fact(tj + tm) * fact(tj - tm) * fact(tj1 - tm1) * fact(tj1 + tm1)
        * fact(tj2 - tm2) * fact(tj2 + tm2),
        1,
    )

    k_min = max(0, (tj2 - tj - tm1) // 2, (tj1 + tm2 - tj) // 2)
    k_max = min((tj1 + tj2 - tj) // 2, (tj1 - tm1) // 2, (tj2 + tm2) // 2)
    total = Fraction(0)
    for k in range(k_min, k_max + 1):
        denom = (
            math.factorial(k)
            * fact(tj1 + tj2 - tj - 2 * k)
            * fact(tj1 - tm1 - 2 * k)
            * fact(tj2 + tm2 - 2 * k)
            * fact(tj - tj2 + tm1 + 2 * k)
            * fact(tj - tj1 - tm2 + 2 * k)
        )
        total += Fraction((-1) ** k, denom)
    if total == 0:
        return 0, Fraction(0)
    sign = 1 if total > 0 else -1
    return sign, pref * total * total


def clebsch_gordan(l1, m1, l2, m2, l, m) -> float:
    """Condon-Shortley coefficient C(l1 m1 l2 m2 | l m).

    Zero when m1 + m2 != m or the triangle rule fails; InvalidLabel for
    malformed labels.  Exact rational arithmetic under the square root keeps
    full double precision over the whole supported range.
    """
    a = AngularMomentumLabel.of(l1, m1)
    b = AngularMomentumLabel.of(l2, m2)
    c = AngularMomentumLabel.of(l, m)
    sign, square = _cg_exact(a.two_l, a.two_m, b.two_l, b.two_m, c.two_l, c.two_m)
    return sign * math.sqrt(float(square))


def cg_table_rows(lmax: int) -> list[tuple[float, float, float, float, float, float, float]]:
    """All nonzero C(l1 m1 l2 m2 | l m) for integer l1, l2 <= lmax, as rows
    (l1, m1, l2, m2, l, m, value)."""
    rows = []
    for tl1 in range(0, 2 * lmax + 1, 2):
        for tl2 in range(0, 2 * lmax + 1, 2):
            for tl in range(abs(tl1 - tl2), tl1 + tl2 + 2, 2):
                for tm1 in _m_range(tl1):
                    for tm2 in _m_range(tl2):
                        tm = tm1 + tm2
                        if abs(tm) > tl:
                            continue
                        val = clebsch_gordan(tl1 / 2, tm1 / 2, tl2 / 2, tm2 / 2, tl / 2, tm / 2)
                        if val != 0.0:
                            rows.append(
                                (tl1 / 2, tm1 / 2, tl2 / 2, tm2 / 2, tl / 2, tm / 2, val)
                            )
    return rows


# -- Wigner rotation matrices ---------------------------------------------------


def wigner_d(l, beta: float) -> np.ndarray:
    """Small Wigner matrix d^l_{m' m}(beta) = <l m'| e^{-i beta J_y} |l m>.

    Explicit factorial sum; rows and columns are ordered m = -l .. +l.
    """
    tl = _two_j(l)
    ms = _m_range(tl)
    dim = tl + 1
    out = np.zeros((dim, dim))
    cos_b = math.cos(beta / 2.0)
    sin_b = math.sin(beta / 2.0)
    for i, tmp in enumerate(ms):       # m' (row)
        for j, tm in enumerate(ms):    # m  (column)
            pref = math.sqrt(
                math.factorial((tl + tmp) // 2)
                * math.factorial((tl - tmp) // 2)
                * math.factorial((tl + tm) // 2)
                * math.factorial((tl - tm) // 2)
            )
            k_min = max(0, (tm - tmp) // 2)
            k_max = min((tl + tm) // 2, (tl - tmp) // 2)
            total = 0.0
            for k in range(k_min, k_max + 1):
                denom = (
                    math.factorial((tl + tm) // 2 - k)
                    * math.factorial(k)
                    * math.factorial((tl - tmp) // 2 - k)
                    * math.factorial(k - (tm - tmp) // 2)
                )
                power_c = (tl + tm) // 2 + (tl - tmp) // 2 - 2 * k
                power_s = 2 * k + (tmp - tm) // 2
                total += ((-1) ** (k - (tm - tmp) // 2) / denom) * cos_b**power_c * sin_b**power_s
            out[i, j] = pref * total
    return out


def wigner_D(l, alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Full rotation matrix D^l_{m' m} = e^{-i m' alpha} d^l_{m' m}(beta) e^{-i m gamma}."""
    tl = _two_j(l)
    ms = np.array(_m_range(tl)) / 2.0
    d = wigner_d(l, beta)
    return np.exp(-1j * ms[:, None] * alpha) * d * np.exp(-1j * ms[None, :] * gamma)


# -- tensor operator bases ------------------------------------------------------


@dataclass(frozen=True)
class TensorOperatorBasis:
    """Complete orthonormal set {T^(l)_m} for the block l_minus x l_plus.

    operators maps (two_l, two_m) to a (2 l_- + 1) x (2 l_+ + 1) complex
    matrix with rows m_- ascending and columns m_+ ascending.  The optional
    n_labels carry non-rotational quantum numbers as opaque metadata.
    """

    two_l_minus: int
    two_l_plus: int
    operators: dict[tuple[int, int], np.ndarray]
    n_labels: tuple = ()

    @property
    def ranks(self) -> list[int]:
        return sorted({tl for tl, _ in self.operators})

    def operator(self, l, m) -> np.ndarray:
        return self.operators[(_two_j(l), _two_m(m))]

    def block_shape(self) -> tuple[int, int]:
        return (self.two_l_minus + 1, self.two_l_plus + 1)

    def gram_defect(self) -> float:
        """max |Tr[T_a^dagger T_b] - delta_ab| over all pairs."""
        keys = sorted(self.operators)
        worst = 0.0
        for i, ka in enumerate(keys):
            for kb in keys[i:]:
                val = np.trace(self.operators[ka].conj().T @ self.operators[kb])
                target = 1.0 if ka == kb else 0.0
                worst = max(worst, abs(val - target))
        return worst


def tensor_operator_basis(l_minus, l_plus, n_labels: tuple = ()) -> TensorOperatorBasis:
    """Build the CG tensor basis for the block; completeness
    sum_l (2l + 1) = (2 l_- + 1)(2 l_+ + 1) holds by the triangle rule."""
    tlm = _two_j(l_minus)
    tlp = _two_j(l_plus)
    ops: dict[tuple[int, int], np.ndarray] = {}
    count = 0
    for tl in range(abs(tlm - tlp), tlm + tlp + 2, 2):
        # unnormalized elements, then one norm per rank (m independent)
        per_rank: dict[int, np.ndarray] = {}
        for tm in _m_range(tl):
            mat = np.zeros((tlm + 1, tlp + 1), dtype=complex)
            for i, tmm in enumerate(_m_range(tlm)):
                for j, tmp_ in enumerate(_m_range(tlp)):
                    if tmp_ + tm != tmm:
                        continue
                    mat[i, j] = clebsch_gordan(
                        tlp / 2, tmp_ / 2, tl / 2, tm / 2, tlm / 2, tmm / 2
                    )
            per_rank[tm] = mat
        # the Hilbert-Schmidt norm is the same for every m within a rank
        # (different-weight operators are trace-orthogonal and the diagonal
        # rotations mix the rank unitarily); normalize once per rank
        scale = np.linalg.norm(next(iter(per_rank.values())))
        for tm, mat in per_rank.items():
            ops[(tl, tm)] = mat / scale
            count += 1
    assert count == (tlm + 1) * (tlp + 1)
    return TensorOperatorBasis(two_l_minus=tlm, two_l_plus=tlp, operators=ops, n_labels=n_labels)


@dataclass(frozen=True)
class RankProjection:
    """Rank-l content of an operator: trace-pairing coefficients per m, the
    dominant (reduced) element, and the off-pattern mass within the rank."""

    coefficients: dict[int, complex]
    reduced: complex
    residual: float


def decompose_wigner_eckart(
    M: np.ndarray, basis: TensorOperatorBasis
) -> dict[int, RankProjection]:
    """Project an operator block onto the tensor basis, rank by rank.

    coefficients[tm] = Tr[T^(l)_m^dagger M].  For an operator of sharp
    rotation weight (a dyad, a ladder operator, any single tensor component)
    each rank has at most one nonvanishing coefficient; it is returned as
    the reduced element and the rms of the remaining components as the
    deviation from the single-reduced-element pattern.  Completeness makes
    reconstruct() exact for arbitrary M.
    """
    M = np.asarray(M, dtype=complex)
    if M.shape != basis.block_shape():
        raise ShapeMismatch(f"operator shape {M.shape} != block {basis.block_shape()}")
    out: dict[int, RankProjection] = {}
    for tl in basis.ranks:
        coeffs = {
            tm: complex(np.trace(basis.operators[(tl, tm)].conj().T @ M))
            for tm in _m_range(tl)
        }
        dominant = max(coeffs, key=lambda tm: abs(coeffs[tm]))
        rest = [abs(c) ** 2 for tm, c in coeffs.items() if tm != dominant]
        out[tl] = RankProjection(
            coefficients=coeffs,
            reduced=coeffs[dominant],
            residual=math.sqrt(sum(rest)),
        )
    return out


def reconstruct(basis: TensorOperatorBasis, projections: dict[int, RankProjection]) -> np.ndarray:
    out = np.zeros(basis.block_shape(), dtype=complex)
    for tl, proj in projections.items():
        for tm, c in proj.coefficients.items():
            out += c * basis.operators[(tl, tm)]
    return out


def dyad_expansion(l_minus, m_minus, l_plus, m_plus, basis: TensorOperatorBasis
                   ) -> dict[tuple[int, int], complex]:
    """Expansion of the dyad |l_- m_-><l_+ m_+| over the tensor basis.

    The coefficient of T^(l)_m is conj(<l_- m_-|T^(l)_m|l_+ m_+>), real with
    Condon-Shortley phases, and vanishes unless m = m_- - m_+; together with
    decompose_wigner_eckart this is the (isometric) closed <-> open basis
    change.
    """
    tlm, tm_m = _two_j(l_minus), _two_m(m_minus)
    tlp, tm_p = _two_j(l_plus), _two_m(m_plus)
    if (tlm, tlp) != (basis.two_l_minus, basis.two_l_plus):
        raise ShapeMismatch("dyad labels do not match the basis block")
    AngularMomentumLabel(tlm, tm_m)
    AngularMomentumLabel(tlp, tm_p)
    i = _m_range(tlm).index(tm_m)
    j = _m_range(tlp).index(tm_p)
    out: dict[tuple[int, int], complex] = {}
    for key, op in basis.operators.items():
        coeff = np.conj(op[i, j])
        if coeff != 0.0:
            out[key] = complex(coeff)
    return out


def dyad_matrix(l_minus, m_minus, l_plus, m_plus) -> np.ndarray:
    tlm, tm_m = _two_j(l_minus), _two_m(m_minus)
    tlp, tm_p = _two_j(l_plus), _two_m(m_plus)
    mat = np.zeros((tlm + 1, tlp + 1), dtype=complex)
    mat[_m_range(tlm).index(tm_m), _m_range(tlp).index(tm_p)] = 1.0
    return mat


def covariance_defect(basis: TensorOperatorBasis, angles: tuple[float, float, float]) -> float:
    """max_l,m || U(R) T^(l)_m U(R)^dagger - sum_m' D^(l)_{m' m}(R) T^(l)_{m'} ||_F.

    U(R) rotates bra and ket multiplets simultaneously (the diagonal
    subgroup); zero for a correctly covariant basis.
    """
    alpha, beta, gamma = angles
    d_minus = wigner_D(basis.two_l_minus / 2, alpha, beta, gamma)
    d_plus = wigner_D(basis.two_l_plus / 2, alpha, beta, gamma)
    worst = 0.0
    for tl in basis.ranks:
        d_l = wigner_D(tl / 2, alpha, beta, gamma)
        ms = _m_range(tl)
        for j, tm in enumerate(ms):
            rotated = d_minus @ basis.operators[(tl, tm)] @ d_plus.conj().T
            target = sum(d_l[i, j] * basis.operators[(tl, ms[i])] for i in range(len(ms)))
            worst = max(worst, float(np.linalg.norm(rotated - target)))
    return worst


# -- export helpers -------------------------------------------------------------


def basis_to_json(basis: TensorOperatorBasis) -> str:
    payload = {
        "two_l_minus": basis.two_l_minus,
        "two_l_plus": basis.two_l_plus,
        "operators": [
            {
                "two_l": tl,
                "two_m": tm,
                "re": np.real(op).tolist(),
                "im": np.imag(op).tolist(),
            }
            for (tl, tm), op in sorted(basis.operators.items())
        ],
    }
    return json.dumps(payload, sort_keys=True)


def angular_momentum_matrices(l) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Jx, Jy, Jz) in the m = -l .. +l basis, hbar = 1; test oracle for the
    rotation matrices via expm(-i beta Jy)."""
    tl = _two_j(l)
    ms = np.array(_m_range(tl)) / 2.0
    dim = tl + 1
    jz = np.diag(ms)
    jp = np.zeros((dim, dim))
    for idx in range(dim - 1):
        m = ms[idx]
        jp[idx + 1, idx] = math.sqrt((tl / 2 - m) * (tl / 2 + m + 1))
    jm = jp.T
    jx = (jp + jm) / 2.0
    jy = (jp - jm) / 2.0j
    return jx, jy, jz
