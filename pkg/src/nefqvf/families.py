"""The six basic mean-parametrized exponential families with quadratic variance.

Each family is a natural exponential family whose variance, written as a
function of the mean, is a quadratic ``V(mu) = v0 + v1*mu + v2*mu**2``:

====================  =====================  ==================  ==========
family                base measure           V(mu)               v2
====================  =====================  ==================  ==========
gaussian (sigma2)     N(0, sigma2)           sigma2              0
poisson               Poisson(1)             mu                  0
gamma (shape alpha)   Gamma(alpha, 1)        mu^2 / alpha        1/alpha
binomial (m trials)   Binomial(m, 1/2)       -mu^2/m + mu        -1/m
negbinomial (m)       NegBinomial(m, 1/2)    mu^2/m + mu         1/m
sech                  (1/2) sech(pi x / 2)   mu^2 + 1            1
====================  =====================  ==================  ==========

The "sech" family is the generalized hyperbolic secant family at shape 1;
other shapes are not supported.  Every family exposes its cumulant function
``psi``, the mean map ``psi'`` with closed-form inverse, z-scores, densities,
and an exact sampler for the measure with a given mean.  Exact draws for the
tilted sech law use the representation ``x = log(S / (1 - S)) / pi`` with
``S ~ Beta(1/2 + theta/pi, 1/2 - theta/pi)``; at ``theta = 0`` the sampler
reduces to the closed-form inverse CDF ``(2/pi) * log(tan(pi*u/2))``.

All operations are pure; ``sample`` mutates only the generator passed in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConfigError, DomainError

_KINDS = ("gaussian", "poisson", "gamma", "binomial", "negbinomial", "sech")


@dataclass(frozen=True)
class Interval:
    """Open interval, endpoints possibly infinite."""

    lo: float
    hi: float

    def __contains__(self, x: float) -> bool:
        return self.lo < x < self.hi

    def __str__(self) -> str:
        return f"({self.lo}, {self.hi})"


@dataclass(frozen=True)
class Family:
    """One of the six families, with its shape/size parameter.

    Use the classmethod constructors; ``param`` holds sigma2 for gaussian,
    alpha for gamma, m for binomial / negbinomial, and is None otherwise.
    """

    kind: str
    param: float | int | None = None

    # -- constructors -------------------------------------------------

    @classmethod
    def gaussian(cls, sigma2: float = 1.0) -> "Family":
        if sigma2 <= 0:
            raise DomainError(f"gaussian needs sigma2 > 0, got {sigma2}")
        return cls("gaussian", sigma2)

    @classmethod
    def poisson(cls) -> "Family":
        return cls("poisson")

    @classmethod
    def gamma(cls, alpha: float) -> "Family":
        if alpha <= 0:
            raise DomainError(f"gamma needs shape alpha > 0, got {alpha}")
        return cls("gamma", alpha)

    @classmethod
    def binomial(cls, m: int) -> "Family":
        if not (isinstance(m, int) and m >= 1):
            raise DomainError(f"binomial needs integer m >= 1, got {m}")
        return cls("binomial", m)

    @classmethod
    def negbinomial(cls, m: int) -> "Family":
        if not (isinstance(m, int) and m >= 1):
            raise DomainError(f"negbinomial needs integer m >= 1, got {m}")
        return cls("negbinomial", m)

    @classmethod
    def sech(cls) -> "Family":
        return cls("sech")

    # -- structure -----------------------------------------------------

    @property
    def is_discrete(self) -> bool:
        return self.kind in ("poisson", "binomial", "negbinomial")

    @property
    def mean_domain(self) -> Interval:
        if self.kind == "gaussian" or self.kind == "sech":
            return Interval(-math.inf, math.inf)
        if self.kind == "binomial":
            return Interval(0.0, float(self.param))
        # poisson, gamma, negbinomial
        return Interval(0.0, math.inf)

    @property
    def natural_domain(self) -> Interval:
        if self.kind in ("gaussian", "poisson", "binomial"):
            return Interval(-math.inf, math.inf)
        if self.kind == "gamma":
            return Interval(-math.inf, 1.0)
        if self.kind == "negbinomial":
            return Interval(-math.inf, math.log(2.0))
        return Interval(-math.pi / 2, math.pi / 2)  # sech

    def variance_coeffs(self) -> tuple[float, float, float]:
        """(v0, v1, v2) of V(mu) = v0 + v1 mu + v2 mu^2, as floats."""
        v0, v1, v2 = self.variance_coeffs_exact()
        return float(v0), float(v1), float(v2)

    def variance_coeffs_exact(self) -> tuple[Fraction, Fraction, Fraction]:
        """(v0, v1, v2) as exact rationals (params are taken at their
        exact binary-float values, which are themselves rational)."""
        one, zero = Fraction(1), Fraction(0)
        if self.kind == "gaussian":
            return Fraction(self.param), zero, zero
        if self.kind == "poisson":
            return zero, one, zero
        if self.kind == "gamma":
            return zero, zero, 1 / Fraction(self.param)
        if self.kind == "binomial":
            return zero, one, Fraction(-1, self.param)
        if self.kind == "negbinomial":
            return zero, one, Fraction(1, self.param)
        return one, zero, one  # sech

    @property
    def v2(self) -> float:
        return self.variance_coeffs()[2]

    # -- core scalar operations ----------------------------------------

    def _check_mean(self, mu: float) -> None:
        if mu not in self.mean_domain:
            raise DomainError(
                f"mean {mu} outside {self.mean_domain} for {self.tag()}"
            )

    def variance(self, mu: float):
        """V(mu); exact if mu is a Fraction, float otherwise."""
        self._check_mean(float(mu))
        if isinstance(mu, Fraction):
            v0, v1, v2 = self.variance_coeffs_exact()
        else:
            v0, v1, v2 = self.variance_coeffs()
        return v0 + v1 * mu + v2 * mu * mu

    def z_score(self, mu: float, x: float) -> float:
        """Standardized deviation (x - mu) / sqrt(V(mu))."""
        self._check_mean(mu)
        return (float(x) - mu) / math.sqrt(self.variance(mu))

    def mean_to_natural(self, mu: float) -> float:
        """Inverse of psi': the natural parameter theta with mean mu."""
        self._check_mean(mu)
        if self.kind == "gaussian":
            return mu / self.param
        if self.kind == "poisson":
            return math.log(mu)
        if self.kind == "gamma":
            return 1.0 - self.param / mu
        if self.kind == "binomial":
            return math.log(mu / (self.param - mu))
        if self.kind == "negbinomial":
            return math.log(2.0 * mu / (self.param + mu))
        return math.atan(mu)  # sech

    def natural_to_mean(self, theta: float) -> float:
        """psi'(theta)."""
        self._check_theta(theta)
        if self.kind == "gaussian":
            return theta * self.param
        if self.kind == "poisson":
            return math.exp(theta)
        if self.kind == "gamma":
            return self.param / (1.0 - theta)
        if self.kind == "binomial":
            return self.param / (1.0 + math.exp(-theta))
        if self.kind == "negbinomial":
            e = math.exp(theta)
            return self.param * e / (2.0 - e)
        return math.tan(theta)  # sech

    def _check_theta(self, theta: float) -> None:
        if theta not in self.natural_domain:
            raise DomainError(
                f"natural parameter {theta} outside {self.natural_domain} "
                f"for {self.tag()}"
            )

    def cumulant(self, theta: float) -> float:
        """psi(theta) = log E exp(theta x) under the base measure."""
        self._check_theta(theta)
        if self.kind == "gaussian":
            return 0.5 * theta * theta * self.param
        if self.kind == "poisson":
            return math.expm1(theta)
        if self.kind == "gamma":
            return -self.param * math.log1p(-theta)
        if self.kind == "binomial":
            # m * log((1 + e^theta)/2), stable for large |theta|
            return self.param * (np.logaddexp(0.0, theta) - math.log(2.0))
        if self.kind == "negbinomial":
            return -self.param * math.log(2.0 - math.exp(theta))
        return -math.log(math.cos(theta))  # sech

    # -- densities ------------------------------------------------------

    def log_pdf(self, mu: float, x: float) -> float:
        """Log density (or log pmf) of the member with mean mu, at x."""
        self._check_mean(mu)
        k = self.kind
        if k == "gaussian":
            s2 = self.param
            return -0.5 * math.log(2 * math.pi * s2) - (x - mu) ** 2 / (2 * s2)
        if k == "poisson":
            if x < 0 or x != int(x):
                return -math.inf
            return x * math.log(mu) - mu - math.lgamma(x + 1)
        if k == "gamma":
            a = self.param
            if x <= 0:
                return -math.inf
            rate = a / mu
            return a * math.log(rate) + (a - 1) * math.log(x) - rate * x - math.lgamma(a)
        if k == "binomial":
            m = self.param
            if x < 0 or x > m or x != int(x):
                return -math.inf
            p = mu / m
            return (
                math.lgamma(m + 1) - math.lgamma(x + 1) - math.lgamma(m - x + 1)
                + x * math.log(p) + (m - x) * math.log1p(-p)
            )
        if k == "negbinomial":
            m = self.param
            if x < 0 or x != int(x):
                return -math.inf
            q = mu / (m + mu)  # per-trial failure probability
            return (
                math.lgamma(x + m) - math.lgamma(x + 1) - math.lgamma(m)
                + x * math.log(q) + m * math.log1p(-q)
            )
        # sech: tilt of (1/2) sech(pi x / 2) by theta = atan(mu),
        # normalizer exp(-psi(theta)) = cos(theta) = 1/sqrt(1 + mu^2)
        theta = math.atan(mu)
        return (
            math.log(0.5) - _log_cosh(math.pi * x / 2)
            + theta * x - 0.5 * math.log1p(mu * mu)
        )

    def pdf(self, mu: float, x: float) -> float:
        return math.exp(self.log_pdf(mu, x))

    # -- sampling ---------------------------------------------------------

    def sample(self, mu: float, rng: np.random.Generator, count: int) -> np.ndarray:
        """``count`` i.i.d. draws from the member with mean mu."""
        self._check_mean(mu)
        if count < 0:
            raise DomainError(f"count must be >= 0, got {count}")
        k = self.kind
        if k == "gaussian":
            return rng.normal(mu, math.sqrt(self.param), size=count)
        if k == "poisson":
            return rng.poisson(mu, size=count).astype(float)
        if k == "gamma":
            return rng.gamma(self.param, mu / self.param, size=count)
        if k == "binomial":
            return rng.binomial(self.param, mu / self.param, size=count).astype(float)
        if k == "negbinomial":
            m = self.param
            return rng.negative_binomial(m, m / (m + mu), size=count).astype(float)
        # sech
        if mu == 0.0:
            u = rng.random(count)
            return (2.0 / math.pi) * np.log(np.tan(math.pi * u / 2.0))
        # logit(S)/pi with S ~ Beta(1/2 + theta/pi, 1/2 - theta/pi); drawing
        # the logit as a log-ratio of Gammas keeps the extreme tails finite
        theta = math.atan(mu)
        ga = rng.gamma(0.5 + theta / math.pi, size=count)
        gb = rng.gamma(0.5 - theta / math.pi, size=count)
        return (np.log(ga) - np.log(gb)) / math.pi

    # -- serialization ------------------------------------------------------

    def tag(self) -> str:
        """Short string form, e.g. ``gamma{alpha=2}``; see :func:`parse_family`."""
        if self.kind == "gaussian":
            return f"gaussian{{sigma2={_fmt(self.param)}}}"
        if self.kind == "gamma":
            return f"gamma{{alpha={_fmt(self.param)}}}"
        if self.kind == "binomial":
            return f"binomial{{m={self.param}}}"
        if self.kind == "negbinomial":
            return f"negbinomial{{m={self.param}}}"
        return self.kind


def _fmt(x) -> str:
    return repr(int(x)) if float(x) == int(x) else repr(float(x))


def _log_cosh(t: float) -> float:
    t = abs(t)
    return t + math.log1p(math.exp(-2.0 * t)) - math.log(2.0)


def parse_family(tag: str) -> Family:
    """Parse a family tag.

    Grammar: ``name`` or ``name{key=value}`` with names gaussian, poisson,
    gamma, binomial, negbinomial, sech and keys sigma2 (gaussian), alpha
    (gamma), m (binomial, negbinomial).  Examples: ``poisson``,
    ``gamma{alpha=2}``, ``binomial{m=1}``, ``gaussian{sigma2=0.5}``.
    """
    tag = tag.strip()
    name, params = tag, {}
    if "{" in tag:
        if not tag.endswith("}"):
            raise ConfigError(f"family: malformed tag {tag!r}")
        name, body = tag[:-1].split("{", 1)
        for item in body.split(","):
            if "=" not in item:
                raise ConfigError(f"family: malformed parameter {item!r} in {tag!r}")
            key, val = (s.strip() for s in item.split("=", 1))
            params[key] = val
    name = name.strip()
    if name not in _KINDS:
        raise ConfigError(f"family: unknown name {name!r} (expected one of {_KINDS})")

    def _num(key, cast):
        if key not in params:
            raise ConfigError(f"family: {name} requires parameter {key!r}")
        extra = set(params) - {key}
        if extra:
            raise ConfigError(f"family: unexpected parameter(s) {sorted(extra)} for {name}")
        try:
            return cast(params[key])
        except ValueError as exc:
            raise ConfigError(f"family: bad value for {key!r}: {params[key]!r}") from exc

    if name == "gaussian":
        return Family.gaussian(_num("sigma2", float))
    if name == "gamma":
        return Family.gamma(_num("alpha", float))
    if name == "binomial":
        return Family.binomial(_num("m", int))
    if name == "negbinomial":
        return Family.negbinomial(_num("m", int))
    if params:
        raise ConfigError(f"family: {name} takes no parameters, got {sorted(params)}")
    return Family.poisson() if name == "poisson" else Family.sech()


@dataclass(frozen=True)
class MeanParamMeasure:
    """A single member of a family, pinned at mean ``mu``."""

    family: Family
    mu: float

    def __post_init__(self):
        if self.mu not in self.family.mean_domain:
            raise DomainError(
                f"mean {self.mu} outside {self.family.mean_domain} "
                f"for {self.family.tag()}"
            )

    @property
    def variance(self) -> float:
        return self.family.variance(self.mu)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return self.family.sample(self.mu, rng, count)

    def pdf(self, x: float) -> float:
        return self.family.pdf(self.mu, x)


ALL_KINDS = _KINDS
