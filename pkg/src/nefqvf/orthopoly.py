"""Monic orthogonal polynomials for the quadratic-variance families.

For a family with variance coefficients (v0, v1, v2) and a null mean mu0,
the monic orthogonal polynomials p_0, ..., p_K of the member with mean mu0
satisfy

    E[p_k(y) p_l(y)] = delta_{kl} * a_k(v2) * V(mu0)**k,

where ``a_k(v) = k! * prod_{j<k}(1 + v*j)``.  This closed-form norm is used
as a built-in correctness check: construction is by Gram-Schmidt on the
monomial basis against exact moments, and any disagreement with the norm
identity signals numeric trouble.

Moments are generated from cumulants.  Under the mean parametrization the
cumulants obey kappa_1 = mu and kappa_{j+1}(mu) = V(mu) * d kappa_j / d mu,
so every cumulant is a polynomial in mu with coefficients built from
(v0, v1, v2); raw moments then follow from the standard recursion

    m_n = sum_{j=1..n} C(n-1, j-1) kappa_j m_{n-j}.

Because all six families have rational variance coefficients (at the exact
binary values of their parameters), the whole construction can run in exact
rational arithmetic; this is the default and is immune to the notorious
ill-conditioning of moment matrices.  A float mode is available for larger
degrees and verifies the norm identity to a relative 1e-6, raising
``NumericInstabilityError`` past that.

The module also hosts the scalar generating function

    f(t; v) = e^t (v = 0),  (1 - v t)^(-1/v) (v != 0),

whose Taylor coefficients are ``a_hat_k(v)/k!``; for v < 0 (= -1/m) the
series is the polynomial (1 + t/m)^m and is evaluated as such for all t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import DegenerateDegreeError, DomainError, NumericInstabilityError
from .families import Family

MAX_BASIS_DEGREE = 40  # documented cap for build_basis


# ---------------------------------------------------------------------------
# the v-class and the a-constants
# ---------------------------------------------------------------------------

def check_v(v: float) -> None:
    """Validate membership in [0, inf) union {-1/m : m >= 1}."""
    if v >= 0:
        return
    m = -1.0 / float(v)
    if abs(m - round(m)) > 1e-9 * max(1.0, abs(m)) or round(m) < 1:
        raise DomainError(f"v={v} is not in [0,inf) nor of the form -1/m")


def neg_v_order(v: float) -> int | None:
    """For v = -1/m return m, else None."""
    if v >= 0:
        return None
    return int(round(-1.0 / float(v)))


def a_hat(k: int, v):
    """prod_{j=0}^{k-1} (1 + v j); exact if v is a Fraction."""
    if k < 0:
        raise DomainError(f"degree k must be >= 0, got {k}")
    check_v(float(v))
    out = v - v + 1  # one, in the arithmetic of v
    for j in range(k):
        out *= 1 + v * j
    return out


def a_const(k: int, v):
    """k! * a_hat(k, v), the squared-norm constant."""
    return math.factorial(k) * a_hat(k, v)


# ---------------------------------------------------------------------------
# the generating function f and its truncations
# ---------------------------------------------------------------------------

def f_eval(t: float, v: float) -> float:
    """f(t; v); returns math.inf past the positive-v singularity."""
    check_v(v)
    if v == 0:
        return math.exp(t)
    if v > 0:
        if t >= 1.0 / v:
            return math.inf
        return (1.0 - v * t) ** (-1.0 / v)
    # v = -1/m: the series is the polynomial (1 + t/m)^m, defined everywhere
    m = neg_v_order(v)
    return float((1.0 + t / m) ** m)


@dataclass(frozen=True)
class TruncSeries:
    """Coefficients c_0..c_D of a univariate polynomial, low order first."""

    coeffs: tuple

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, t):
        out = 0.0
        for c in reversed(self.coeffs):
            out = out * t + c
        return out


def f_trunc(D: int, v: float) -> TruncSeries:
    """Order-D Taylor expansion of f(.; v): coefficients a_hat_k(v)/k!."""
    if D < 0:
        raise DomainError(f"degree bound D must be >= 0, got {D}")
    check_v(v)
    coeffs, c = [], 1.0
    for k in range(D + 1):
        coeffs.append(c)
        c *= (1.0 + v * k) / (k + 1)
    return TruncSeries(tuple(coeffs))


def exp_trunc(D: int) -> TruncSeries:
    """Truncated exponential series, f_trunc(D, 0)."""
    return f_trunc(D, 0.0)


# ---------------------------------------------------------------------------
# moments from cumulants
# ---------------------------------------------------------------------------

def _poly_mul(a: list, b: list) -> list:
    out = [a[0] * 0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out


def _poly_deriv(a: list) -> list:
    if len(a) <= 1:
        return [a[0] * 0]
    return [i * a[i] for i in range(1, len(a))]


def _poly_eval(a: list, x):
    out = a[0] * 0
    for c in reversed(a):
        out = out * x + c
    return out


def cumulants_at(family: Family, mu0, order: int) -> list:
    """kappa_1 .. kappa_order of the member with mean mu0.

    Exact when mu0 is a Fraction (family parameters are rational at their
    binary values), floats otherwise.
    """
    exact = isinstance(mu0, Fraction)
    if exact:
        v0, v1, v2 = family.variance_coeffs_exact()
    else:
        v0, v1, v2 = family.variance_coeffs()
    vpoly = [v0, v1, v2]
    zero = v0 * 0
    kappa_poly = [zero, zero + 1]  # kappa_1(mu) = mu
    out = []
    for _ in range(order):
        out.append(_poly_eval(kappa_poly, mu0))
        kappa_poly = _poly_mul(vpoly, _poly_deriv(kappa_poly))
    return out


def moments_at(family: Family, mu0, order: int) -> list:
    """Raw moments m_0 .. m_order of the member with mean mu0."""
    kappas = cumulants_at(family, mu0, order)
    one = kappas[0] * 0 + 1 if order >= 1 else 1
    moments = [one]
    for n in range(1, order + 1):
        m = kappas[0] * 0
        for j in range(1, n + 1):
            m += math.comb(n - 1, j - 1) * kappas[j - 1] * moments[n - j]
        moments.append(m)
    return moments


# ---------------------------------------------------------------------------
# orthogonal polynomial basis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OrthoPolyBasis:
    """Monic orthogonal polynomials of one family member, plus norms.

    ``monic[k]`` holds ascending coefficients of the degree-k monic
    polynomial; ``norm_sq[k]`` its squared L2 norm, which equals
    a_k(v2) * V(mu0)**k.  ``max_degree`` may be smaller than requested for
    binomial families, whose basis stops at degree m.
    """

    family: Family
    mu0: float
    max_degree: int
    monic: tuple
    norm_sq: tuple
    exact: bool
    _monic_np: tuple = field(repr=False, default=())
    _normalized_np: tuple = field(repr=False, default=())

    def monic_eval(self, k: int, y):
        self._check_degree(k)
        return npoly.polyval(y, self._monic_np[k])

    def normalized_eval(self, k: int, y):
        """Orthonormal polynomial value: p_k / sqrt(a_k(v2) V(mu0)^k)."""
        self._check_degree(k)
        return npoly.polyval(y, self._normalized_np[k])

    def normalized_coeffs(self, k: int) -> np.ndarray:
        self._check_degree(k)
        return self._normalized_np[k]

    def _check_degree(self, k: int) -> None:
        if not 0 <= k <= self.max_degree:
            m = neg_v_order(self.family.v2)
            if m is not None and k > m:
                raise DegenerateDegreeError(
                    f"degree {k} is degenerate for {self.family.tag()}: "
                    f"the basis stops at degree {m}"
                )
            raise DomainError(
                f"degree {k} outside built range 0..{self.max_degree}"
            )


def build_basis(family: Family, mu0: float, K: int,
                exact: bool = True) -> OrthoPolyBasis:
    """Gram-Schmidt construction of the orthonormal basis up to degree K.

    ``exact=True`` (default) runs in rational arithmetic and checks the
    closed-form norms exactly; float mode checks them to relative 1e-6 and
    raises ``NumericInstabilityError`` on failure (K too large for floats).
    """
    if not 0 <= K <= MAX_BASIS_DEGREE:
        raise DomainError(f"K must be in 0..{MAX_BASIS_DEGREE}, got {K}")
    if mu0 not in family.mean_domain:
        raise DomainError(f"mu0={mu0} outside {family.mean_domain} for {family.tag()}")

    m_stop = neg_v_order(family.v2)
    k_max = min(K, m_stop) if m_stop is not None else K

    if exact:
        mu = mu0 if isinstance(mu0, Fraction) else Fraction(mu0)
        v2 = family.variance_coeffs_exact()[2]
    else:
        mu = float(mu0)
        v2 = family.v2
    moments = moments_at(family, mu, 2 * k_max)
    vmu = family.variance(mu)

    def inner(f, g):
        s = moments[0] * 0
        for i, fi in enumerate(f):
            if fi == 0:
                continue
            for j, gj in enumerate(g):
                if gj == 0:
                    continue
                s += fi * gj * moments[i + j]
        return s

    one = moments[0] * 0 + 1
    monic: list[list] = []
    norm_sq: list = []
    for k in range(k_max + 1):
        p = [moments[0] * 0] * k + [one]  # y^k
        for j in range(k):
            c = inner(p, monic[j]) / norm_sq[j]
            for i, cji in enumerate(monic[j]):
                p[i] -= c * cji
        monic.append(p)
        norm_sq.append(inner(p, p))

    # verify against the closed-form norm a_k(v2) V(mu0)^k
    for k in range(k_max + 1):
        target = a_const(k, v2) * vmu**k
        if exact:
            if norm_sq[k] != target:
                raise NumericInstabilityError(
                    f"exact norm mismatch at degree {k} for {family.tag()}"
                )
        else:
            if abs(norm_sq[k] - target) > 1e-6 * abs(target):
                raise NumericInstabilityError(
                    f"norm of degree-{k} polynomial deviates from closed form "
                    f"by more than 1e-6 relative; K={K} too large for float "
                    f"mode on {family.tag()}"
                )

    monic_np = tuple(np.array([float(c) for c in p]) for p in monic)
    normalized_np = tuple(
        monic_np[k] / math.sqrt(float(norm_sq[k])) for k in range(k_max + 1)
    )
    return OrthoPolyBasis(
        family=family,
        mu0=float(mu0),
        max_degree=k_max,
        monic=tuple(tuple(p) for p in monic),
        norm_sq=tuple(norm_sq),
        exact=exact,
        _monic_np=monic_np,
        _normalized_np=normalized_np,
    )


def basis_rows(basis: OrthoPolyBasis) -> list[tuple]:
    """Rows (k, c_0, ..., c_k, norm_sq) for the CSV dump."""
    rows = []
    for k in range(basis.max_degree + 1):
        rows.append((k, *[float(c) for c in basis.monic[k]], float(basis.norm_sq[k])))
    return rows
