"""Shared oracle utilities for the test suite.

Expectations under a family member are computed here independently of the
library's own algebra: exact probability-weighted summation for the discrete
families (tails truncated below 1e-16 mass), adaptive quadrature for the
continuous ones (split at the mean so the peak is always resolved).
"""

import numpy as np
from scipy.integrate import quad

from nefqvf.families import Family


def random_shared_instance(rng, n_coords=None, n_atoms=None):
    """Random (null_means, atoms) usable by every family at once.

    Means in (0.3, 0.7), atom coordinates in (0.15, 0.85): inside the mean
    domain of all six families (including Bernoulli), with z-scores of
    order one so exact float comparisons stay well-conditioned.
    """
    N = int(n_coords if n_coords is not None else rng.integers(1, 4))
    A = int(n_atoms if n_atoms is not None else rng.integers(1, 5))
    means = tuple(rng.uniform(0.3, 0.7, N))
    vecs = rng.uniform(0.15, 0.85, size=(A, N))
    probs = rng.dirichlet(np.ones(A))
    atoms = [(tuple(vecs[a]), float(probs[a])) for a in range(A)]
    return means, atoms


def random_z_instance(rng, n_coords=None, n_atoms=None):
    """Random null means plus a prior in z-score units.

    Mean range (0.3, 0.7) and offsets within +-0.35 standard deviations keep
    the realized atoms inside every family's mean domain (including
    Bernoulli) for all six canonical families.
    """
    N = int(n_coords if n_coords is not None else rng.integers(1, 4))
    A = int(n_atoms if n_atoms is not None else rng.integers(1, 5))
    means = tuple(rng.uniform(0.3, 0.7, N))
    vecs = rng.uniform(-0.35, 0.35, size=(A, N))
    probs = rng.dirichlet(np.ones(A))
    atoms = [(tuple(vecs[a]), float(probs[a])) for a in range(A)]
    return means, atoms


def direct_l2_norm_discrete(family: Family, mu0: float, atoms) -> float:
    """E_null[L^2] for a one-coordinate discrete model, by direct summation.

    L(y) = sum_a p_a * pdf(x_a, y) / pdf(mu0, y); expectation under the
    null member truncated once 1 - 1e-16 of the mass is covered.
    """
    hi = family.param + 1 if family.kind == "binomial" else 100_000
    total, acc = 0.0, 0.0
    for y in range(hi):
        q = family.pdf(mu0, float(y))
        if q == 0.0:
            continue
        ell = sum(p * family.pdf(x[0], float(y)) for x, p in atoms) / q
        acc += q * ell * ell
        total += q
        if family.kind != "binomial" and total >= 1.0 - 1e-16 and y > 4 * mu0 + 40:
            break
    return acc


def expectation_under(family: Family, mu: float, fn):
    """E[fn(y)] for y drawn from the family member with mean mu."""
    if family.is_discrete:
        if family.kind == "binomial":
            xs = range(0, family.param + 1)
            return sum(family.pdf(mu, float(x)) * fn(float(x)) for x in xs)
        total, acc, x, tiny = 0.0, 0.0, 0, 0
        while True:
            w = family.pdf(mu, float(x))
            term = w * fn(float(x))
            total += w
            acc += term
            x += 1
            # close the tail only once both the remaining mass and the
            # summands themselves (which carry polynomial growth) are dust
            if total >= 1.0 - 1e-16 and abs(term) <= 1e-16 * (1.0 + abs(acc)):
                tiny += 1
                if tiny >= 8:
                    return acc
            else:
                tiny = 0
            if x > 100_000:
                raise RuntimeError("discrete tail did not close")
    lo, hi = (0.0, np.inf) if family.kind == "gamma" else (-np.inf, np.inf)
    opts = dict(limit=400, epsabs=1e-13, epsrel=1e-12)
    integrand = lambda x: family.pdf(mu, x) * fn(x)
    left, _ = quad(integrand, lo, mu, **opts)
    right, _ = quad(integrand, mu, hi, **opts)
    return left + right
