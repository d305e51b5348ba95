"""Translation polynomials of the symmetric sech member.

The shift operator of the mean-zero sech distribution expands in its
orthonormal polynomials through the polynomials tau_hat_k defined by

    sum_{k>=0} t^k tau_hat_k(y) = exp(y * arctan(t)),

so that ``[y^l] tau_hat_k = [t^k]((arctan t)^l) / l!``.  Only monomials with
l == k (mod 2) and l >= 1 appear for k >= 1, and the coefficients obey

    |[y^l] tau_hat_k| <= (2 log(e k))^(l-1) / (k * l!),

which integrates to the pointwise bound implemented by
:func:`tau_value_bound`.  The table is built once in exact rational
arithmetic (the arctan series has coefficients +-1/odd, so float
cancellation in the alternating sums never enters) and converted to floats
only for evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import DomainError

MAX_TABLE_DEGREE = 200  # documented cap for build_translation_table
DEFAULT_TABLE_DEGREE = 64


@dataclass(frozen=True)
class TranslationPolyTable:
    """Exact coefficients of tau_hat_0 .. tau_hat_K, plus float views."""

    max_degree: int
    coeffs: tuple  # coeffs[k][l] = Fraction coefficient of y^l in tau_hat_k
    _np: tuple = field(repr=False, default=())

    def eval(self, k: int, x):
        """tau_hat_k(x); accepts scalars or arrays."""
        if not 0 <= k <= self.max_degree:
            raise DomainError(f"k={k} outside table range 0..{self.max_degree}")
        return npoly.polyval(x, self._np[k])

    def coefficient(self, k: int, l: int) -> Fraction:
        if not 0 <= k <= self.max_degree:
            raise DomainError(f"k={k} outside table range 0..{self.max_degree}")
        if not 0 <= l <= k:
            return Fraction(0)
        return self.coeffs[k][l]


def build_translation_table(K: int = DEFAULT_TABLE_DEGREE) -> TranslationPolyTable:
    """Exact table of tau_hat_0 .. tau_hat_K via powers of the arctan series."""
    if not 0 <= K <= MAX_TABLE_DEGREE:
        raise DomainError(f"K must be in 0..{MAX_TABLE_DEGREE}, got {K}")
    # arctan t = sum_{j odd} (-1)^((j-1)/2) t^j / j, truncated at order K
    atan = [Fraction(0)] * (K + 1)
    for j in range(1, K + 1, 2):
        atan[j] = Fraction((-1) ** ((j - 1) // 2), j)

    # power[l][k] = [t^k]((arctan t)^l)
    power = [Fraction(0)] * (K + 1)
    power[0] = Fraction(1)
    coeffs = [[Fraction(0)] * (k + 1) for k in range(K + 1)]
    for k in range(K + 1):
        coeffs[k][0] = power[k]  # l = 0 contributes only to k = 0
    fact = Fraction(1)
    for l in range(1, K + 1):
        fact *= l
        nxt = [Fraction(0)] * (K + 1)
        for i in range(l - 1, K + 1):  # (arctan)^(l-1) has order >= l-1
            if power[i] == 0:
                continue
            for j in range(1, K - i + 1, 2):
                nxt[i + j] += power[i] * atan[j]
        power = nxt
        for k in range(l, K + 1):
            coeffs[k][l] = power[k] / fact

    arrays = tuple(np.array([float(c) for c in row]) for row in coeffs)
    return TranslationPolyTable(
        max_degree=K,
        coeffs=tuple(tuple(row) for row in coeffs),
        _np=arrays,
    )


def tau_hat_eval(table: TranslationPolyTable, k: int, x):
    return table.eval(k, x)


def tau_value_bound(k: int, x: float) -> float:
    """Upper bound on |tau_hat_k(x)| for k >= 1 and x > 0."""
    if k < 1:
        raise DomainError(f"bound requires k >= 1, got {k}")
    if x <= 0:
        raise DomainError(f"bound requires x > 0, got {x}")
    growth = (math.e * k) ** (2 * x)
    if k % 2 == 1:
        return x * growth / k
    return x * x * (2 * math.log(math.e * k) / k) * growth


def table_rows(table: TranslationPolyTable) -> list[tuple[int, int, int, int]]:
    """Rows (k, l, numerator, denominator) of the non-zero coefficients."""
    rows = []
    for k in range(table.max_degree + 1):
        for l, c in enumerate(table.coeffs[k]):
            if c != 0:
                rows.append((k, l, c.numerator, c.denominator))
    return rows
