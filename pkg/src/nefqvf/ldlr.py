"""Low-degree likelihood-ratio norms for spiked product models.

A testing instance observes N independent coordinates; under the null,
coordinate i follows the family member with mean mu_i, and under the
alternative a hidden vector x is drawn from a prior and either replaces the
means ("kin" spiking) or is added to null noise ("additive" spiking).

The squared norm of the likelihood ratio projected onto polynomials of
total degree at most D decomposes over the orthonormal product basis.  For
kin spiking the component at multi-index k is

    sqrt(prod_i a_hat_{k_i}(v2) / prod_i k_i!) * E_x[ prod_i z_{mu_i}(x_i)^{k_i} ],

computable exactly for finitely-supported priors; the degree-D norm is the
sum of squared components over |k| <= D.  The same sum is controlled by the
scalar overlap r = <z(x^1), z(x^2)> of two independent prior draws through
E[f_trunc(D, v2)(r)] — an equality when v2 = 0, an upper bound when
v2 > 0, and a lower bound (with E[exp_trunc(r)] as the matching upper
bound) when v2 < 0.  Both routes are implemented and cross-checked in the
test suite.

Exact enumeration is restricted to atom priors; sampler-backed priors feed
only the Monte Carlo overlap estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import binom

from .errors import CapExceededError, DegenerateDegreeError, DomainError, NumericInstabilityError
from .families import Family
from .orthopoly import a_hat, exp_trunc, f_eval, f_trunc, neg_v_order
from .translation import TranslationPolyTable, build_translation_table

ENUM_CAP = 10**7  # documented cap on exact multi-index enumeration


# ---------------------------------------------------------------------------
# instance types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpikePrior:
    """Finitely-supported or sampler-backed distribution of the hidden vector.

    ``kind`` is "kin" (vectors are mean vectors) or "additive" (shifts).
    Exactly one of ``atoms`` / ``sampler`` is set; atom probabilities must
    sum to one within 1e-12.
    """

    kind: str
    atoms: tuple | None = None
    sampler: Callable[[np.random.Generator], np.ndarray] | None = None

    def __post_init__(self):
        if self.kind not in ("kin", "additive"):
            raise DomainError(f"prior kind must be kin or additive, got {self.kind!r}")
        if (self.atoms is None) == (self.sampler is None):
            raise DomainError("exactly one of atoms/sampler must be given")
        if self.atoms is not None:
            total = sum(p for _, p in self.atoms)
            if abs(total - 1.0) > 1e-12:
                raise DomainError(f"atom probabilities sum to {total}, not 1")
            if any(p < 0 for _, p in self.atoms):
                raise DomainError("atom probabilities must be non-negative")

    @classmethod
    def from_atoms(cls, kind: str, atoms) -> "SpikePrior":
        frozen = tuple((tuple(float(c) for c in vec), float(p)) for vec, p in atoms)
        return cls(kind=kind, atoms=frozen)

    @classmethod
    def from_sampler(cls, kind: str, sampler) -> "SpikePrior":
        return cls(kind=kind, sampler=sampler)

    @property
    def is_atomic(self) -> bool:
        return self.atoms is not None

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        if self.atoms is not None:
            probs = [p for _, p in self.atoms]
            idx = rng.choice(len(self.atoms), p=probs)
            return np.array(self.atoms[idx][0])
        return np.asarray(self.sampler(rng), dtype=float)


@dataclass(frozen=True)
class KinSpikedModel:
    family: Family
    null_means: tuple
    prior: SpikePrior

    def __post_init__(self):
        object.__setattr__(self, "null_means", tuple(float(m) for m in self.null_means))
        if self.prior.kind != "kin":
            raise DomainError("KinSpikedModel requires a kin prior")
        dom = self.family.mean_domain
        for mu in self.null_means:
            if mu not in dom:
                raise DomainError(f"null mean {mu} outside {dom} for {self.family.tag()}")
        if self.prior.atoms is not None:
            for vec, _ in self.prior.atoms:
                if len(vec) != self.N:
                    raise DomainError("prior atom dimension differs from N")
                for c in vec:
                    if c not in dom:
                        raise DomainError(
                            f"kin atom coordinate {c} outside {dom} for {self.family.tag()}"
                        )

    @property
    def N(self) -> int:
        return len(self.null_means)

    def z_matrix(self) -> np.ndarray:
        """Row a = z-score vector of atom a against the null means."""
        if self.prior.atoms is None:
            raise DomainError("z_matrix requires an atom prior")
        return np.array([
            [self.family.z_score(mu, x) for mu, x in zip(self.null_means, vec)]
            for vec, _ in self.prior.atoms
        ])

    def z_vector(self, x: np.ndarray) -> np.ndarray:
        return np.array([self.family.z_score(mu, xi) for mu, xi in zip(self.null_means, x)])


@dataclass(frozen=True)
class AdditiveSpikedModel:
    family: Family
    null_means: tuple
    prior: SpikePrior

    def __post_init__(self):
        object.__setattr__(self, "null_means", tuple(float(m) for m in self.null_means))
        if self.prior.kind != "additive":
            raise DomainError("AdditiveSpikedModel requires an additive prior")
        dom = self.family.mean_domain
        for mu in self.null_means:
            if mu not in dom:
                raise DomainError(f"null mean {mu} outside {dom} for {self.family.tag()}")
        if self.prior.atoms is not None:
            for vec, _ in self.prior.atoms:
                if len(vec) != self.N:
                    raise DomainError("prior atom dimension differs from N")

    @property
    def N(self) -> int:
        return len(self.null_means)


@dataclass(frozen=True)
class LdlrResult:
    """A computed norm (or bound) of the degree-D likelihood-ratio projection.

    ``degree`` None means no truncation; ``upper_value`` carries the
    exp-series upper bound reported alongside Monte Carlo estimates for
    negative v2.
    """

    value: float
    mode: str  # "exact" | "monte-carlo"
    degree: int | None
    stderr: float | None = None
    samples: int | None = None
    upper_value: float | None = None
    upper_stderr: float | None = None


# ---------------------------------------------------------------------------
# multi-index enumeration
# ---------------------------------------------------------------------------

def count_multi_indices(N: int, D: int) -> int:
    """Number of k in N^N with |k| <= D."""
    return math.comb(N + D, D)


def iter_multi_indices(N: int, D: int, max_coord: int | None = None):
    """Multi-indices with |k| <= D in graded lexicographic order."""

    def compositions(total, parts):
        if parts == 1:
            if max_coord is None or total <= max_coord:
                yield (total,)
            return
        hi = total if max_coord is None else min(total, max_coord)
        for first in range(hi, -1, -1):
            for rest in compositions(total - first, parts - 1):
                yield (first,) + rest

    for d in range(D + 1):
        yield from compositions(d, N)


# ---------------------------------------------------------------------------
# exact component sums (kin)
# ---------------------------------------------------------------------------

def component(model: KinSpikedModel, k) -> float:
    """Projection of the likelihood ratio on the product basis element k."""
    if not model.prior.is_atomic:
        raise DomainError("component requires an atom-mode prior")
    k = tuple(int(v) for v in k)
    if len(k) != model.N:
        raise DomainError(f"multi-index length {len(k)} != N={model.N}")
    v2 = model.family.v2
    m_stop = neg_v_order(v2)
    coef = 1.0
    for ki in k:
        # exact-zero test on the rational form: float a_hat(k, -1/m) for
        # k > m can be a tiny nonzero of either sign
        if m_stop is not None and ki > m_stop:
            raise DegenerateDegreeError(
                f"degree {ki} is degenerate for {model.family.tag()}"
            )
        coef *= a_hat(ki, v2) / math.factorial(ki)
    Z = model.z_matrix()
    expect = sum(
        p * math.prod(Z[a, i] ** ki for i, ki in enumerate(k))
        for a, (_, p) in enumerate(model.prior.atoms)
    )
    return math.sqrt(coef) * expect


def ldlr_exact(model: KinSpikedModel, D: int) -> LdlrResult:
    """Exact squared norm of the degree-D projection, by component sums."""
    if not model.prior.is_atomic:
        raise DomainError("ldlr_exact requires an atom-mode prior")
    if D < 0:
        raise DomainError(f"D must be >= 0, got {D}")
    if count_multi_indices(model.N, D) > ENUM_CAP:
        raise CapExceededError(
            f"{count_multi_indices(model.N, D)} multi-indices exceeds cap {ENUM_CAP}"
        )
    v2 = model.family.v2
    max_coord = neg_v_order(v2)  # prune degenerate degrees for v2 = -1/m
    Z = model.z_matrix()
    probs = np.array([p for _, p in model.prior.atoms])
    ahat = [float(a_hat(k, v2)) for k in range(D + 1)]
    total = 0.0
    for k in iter_multi_indices(model.N, D, max_coord=max_coord):
        coef = math.prod(ahat[ki] / math.factorial(ki) for ki in k)
        expect = float(np.dot(probs, np.prod(Z ** np.array(k), axis=1)))
        total += coef * expect * expect
    return LdlrResult(value=total, mode="exact", degree=D)


def full_norm_exact(model: KinSpikedModel) -> LdlrResult:
    """Untruncated squared norm: E over prior pairs of prod_i f(z_i^1 z_i^2; v2).

    May be +inf for v2 > 0 when an overlap reaches the singularity."""
    if not model.prior.is_atomic:
        raise DomainError("full_norm_exact requires an atom-mode prior")
    v2 = model.family.v2
    Z = model.z_matrix()
    probs = [p for _, p in model.prior.atoms]
    total = 0.0
    for a, pa in enumerate(probs):
        for b, pb in enumerate(probs):
            prod = 1.0
            for i in range(model.N):
                prod *= f_eval(Z[a, i] * Z[b, i], v2)
            total += pa * pb * prod
    return LdlrResult(value=total, mode="exact", degree=None)


def overlap_bound_exact(model: KinSpikedModel, D: int | None, v: float | None = None) -> float:
    """E over prior pairs of f_trunc(D, v)(r), r the z-score overlap.

    ``v`` defaults to the model's v2; D None uses the untruncated f.  This
    is the overlap route to the same quantity as :func:`ldlr_exact` (equal
    at v2 = 0) and is kept algorithmically independent of it.
    """
    if not model.prior.is_atomic:
        raise DomainError("overlap_bound_exact requires an atom-mode prior")
    if v is None:
        v = model.family.v2
    Z = model.z_matrix()
    probs = [p for _, p in model.prior.atoms]
    series = None if D is None else f_trunc(D, v)
    total = 0.0
    for a, pa in enumerate(probs):
        for b, pb in enumerate(probs):
            r = float(np.dot(Z[a], Z[b]))
            total += pa * pb * (f_eval(r, v) if series is None else series(r))
    return total


# ---------------------------------------------------------------------------
# exact component sums (additive, sech at mean zero)
# ---------------------------------------------------------------------------

def ldlr_exact_additive(model: AdditiveSpikedModel, D: int,
                        table: TranslationPolyTable | None = None) -> LdlrResult:
    """Exact degree-D squared norm for additive spiking of mean-zero sech noise."""
    if model.family.kind != "sech":
        raise DomainError("additive exact norms require the sech family")
    if any(mu != 0.0 for mu in model.null_means):
        raise DomainError("additive exact norms require all null means zero")
    if not model.prior.is_atomic:
        raise DomainError("ldlr_exact_additive requires an atom-mode prior")
    if D < 0:
        raise DomainError(f"D must be >= 0, got {D}")
    if count_multi_indices(model.N, D) > ENUM_CAP:
        raise CapExceededError(
            f"{count_multi_indices(model.N, D)} multi-indices exceeds cap {ENUM_CAP}"
        )
    if table is None or table.max_degree < D:
        table = build_translation_table(D)
    atoms = model.prior.atoms
    probs = [p for _, p in atoms]
    # tau_vals[a][i][k] = tau_hat_k at coordinate i of atom a
    tau_vals = [
        [[float(table.eval(k, x)) for k in range(D + 1)] for x in vec]
        for vec, _ in atoms
    ]
    total = 0.0
    for k in iter_multi_indices(model.N, D):
        comp = sum(
            p * math.prod(tau_vals[a][i][ki] for i, ki in enumerate(k))
            for a, p in enumerate(probs)
        )
        total += comp * comp
    return LdlrResult(value=total, mode="exact", degree=D)


# ---------------------------------------------------------------------------
# Monte Carlo overlap bounds
# ---------------------------------------------------------------------------

def _f_eval_vec(t: np.ndarray, v: float) -> np.ndarray:
    if v == 0:
        return np.exp(t)
    if v > 0:
        out = np.full_like(t, np.inf)
        ok = t < 1.0 / v
        out[ok] = (1.0 - v * t[ok]) ** (-1.0 / v)
        return out
    m = neg_v_order(v)
    return (1.0 + t / m) ** m


def overlap_bound_mc(model: KinSpikedModel, D: int | None, samples: int,
                     rng: np.random.Generator) -> LdlrResult:
    """Monte Carlo estimate of E[f_trunc(D, v2)(r)] over prior pairs.

    For v2 < 0 the result also carries the exp-series value (the matching
    upper bound on the norm); for v2 > 0 with D None, +inf draws propagate
    into an infinite estimate (the singular regime).
    """
    if samples < 1:
        raise DomainError(f"samples must be >= 1, got {samples}")
    v2 = model.family.v2
    if model.prior.is_atomic:
        Z = model.z_matrix()
        probs = [p for _, p in model.prior.atoms]
        i1 = rng.choice(len(probs), p=probs, size=samples)
        i2 = rng.choice(len(probs), p=probs, size=samples)
        r = np.einsum("ij,ij->i", Z[i1], Z[i2])
    else:
        r = np.empty(samples)
        for s in range(samples):
            z1 = model.z_vector(model.prior.draw(rng))
            z2 = model.z_vector(model.prior.draw(rng))
            r[s] = float(np.dot(z1, z2))
    if D is None:
        vals = _f_eval_vec(r, v2)
    else:
        vals = f_trunc(D, v2)(r)
    value = float(vals.mean())
    stderr = float(vals.std() / math.sqrt(samples)) if np.isfinite(value) else math.inf
    upper_value = upper_stderr = None
    if v2 < 0:
        uv = np.exp(r) if D is None else exp_trunc(D)(r)
        upper_value = float(uv.mean())
        upper_stderr = float(uv.std() / math.sqrt(samples))
    return LdlrResult(
        value=value, mode="monte-carlo", degree=D, stderr=stderr,
        samples=samples, upper_value=upper_value, upper_stderr=upper_stderr,
    )


# ---------------------------------------------------------------------------
# channel comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChannelNorm:
    family: Family
    v2: float
    result: LdlrResult


def kin_model_from_z(family: Family, null_means, z_prior: SpikePrior) -> KinSpikedModel:
    """Realize a standardized spike prior in a family's own mean scale.

    ``z_prior`` atoms hold offsets in z-score units; coordinate j of an atom
    maps to the mean mu_j + delta_j * sqrt(V(mu_j)).  The resulting raw
    atoms must land inside the family's mean domain.
    """
    if not z_prior.is_atomic or z_prior.kind != "kin":
        raise DomainError("kin_model_from_z requires an atom-mode kin prior")
    sds = [math.sqrt(family.variance(mu)) for mu in null_means]
    atoms = [
        (tuple(mu + d * sd for mu, sd, d in zip(null_means, sds, vec)), p)
        for vec, p in z_prior.atoms
    ]
    return KinSpikedModel(family, tuple(null_means), SpikePrior.from_atoms("kin", atoms))


def channel_compare(families: list[Family], null_means, z_prior: SpikePrior,
                    D: int) -> list[ChannelNorm]:
    """Exact degree-D norms across observation channels, sorted by v2.

    All channels share the null means and the spike prior expressed in
    z-score units (the same standardized signal passed through different
    families); only then do the norms depend on the family through the
    constants a_hat_k(v2) alone, which makes them non-decreasing in v2.  A
    violation beyond float tolerance raises NumericInstabilityError.
    """
    if not families:
        raise DomainError("channel_compare needs at least one family")
    rows = sorted(
        (
            ChannelNorm(f, f.v2, ldlr_exact(kin_model_from_z(f, null_means, z_prior), D))
            for f in families
        ),
        key=lambda row: row.v2,
    )
    for lo, hi in zip(rows, rows[1:]):
        if hi.result.value < lo.result.value - 1e-9 * max(1.0, abs(lo.result.value)):
            raise NumericInstabilityError(
                f"channel norms not monotone: v2={lo.v2} gives {lo.result.value}, "
                f"v2={hi.v2} gives {hi.result.value}"
            )
    return rows


# ---------------------------------------------------------------------------
# two-community block model overlap and threshold scan
# ---------------------------------------------------------------------------

def sbm_overlap(n: int, a: float, b: float, sigma1, sigma2) -> float:
    """Closed-form z-score overlap of two community labelings.

    Edge means (a+b)/2n null vs (a +- (a-b) sign)/2n planted give
    r = ((a-b)^2 / (4(a+b))) * (<s1, s2>^2 - n) / n.
    """
    s1 = np.asarray(sigma1, dtype=float)
    s2 = np.asarray(sigma2, dtype=float)
    if s1.shape != (n,) or s2.shape != (n,):
        raise DomainError(f"labelings must have shape ({n},)")
    if not (np.all(np.abs(s1) == 1.0) and np.all(np.abs(s2) == 1.0)):
        raise DomainError("labelings must be +-1 valued")
    dot = float(np.dot(s1, s2))
    return (a - b) ** 2 / (4.0 * (a + b)) * (dot * dot - n) / n


@dataclass(frozen=True)
class SbmScanRow:
    a: float
    b: float
    n: int
    degree: int
    estimate: float
    stderr: float
    samples: int
    ks_lhs: float  # (a-b)^2
    ks_rhs: float  # 2(a+b)

    @property
    def above_threshold(self) -> bool:
        return self.ks_lhs > self.ks_rhs


def sbm_ks_scan(n: int, D: int, grid, samples: int,
                rng: np.random.Generator) -> list[SbmScanRow]:
    """Monte Carlo of E[exp_trunc(D)(r)] over uniform labelings, per (a, b).

    The overlap depends on the labelings only through <s1, s2>, whose exact
    law is 2*Binomial(n, 1/2) - n; it is drawn by inverse CDF so that scans
    sharing a generator state across different n reuse the same underlying
    uniforms (common random numbers).  Rows carry both sides of the
    detectability comparison (a-b)^2 vs 2(a+b).
    """
    if n < 1 or D < 0 or samples < 1:
        raise DomainError("need n >= 1, D >= 0, samples >= 1")
    series = exp_trunc(D)
    rows = []
    for a, b in grid:
        if a <= 0 or b <= 0:
            raise DomainError(f"rates must be positive, got a={a}, b={b}")
        u = rng.random(samples)
        dot = 2.0 * binom.ppf(u, n, 0.5) - n
        r = (a - b) ** 2 / (4.0 * (a + b)) * (dot * dot - n) / n
        vals = series(r)
        rows.append(SbmScanRow(
            a=float(a), b=float(b), n=n, degree=D,
            estimate=float(vals.mean()),
            stderr=float(vals.std() / math.sqrt(samples)),
            samples=samples,
            ks_lhs=float((a - b) ** 2),
            ks_rhs=float(2.0 * (a + b)),
        ))
    return rows
