"""Simulation designs: Gaussian-copula AR predictors and three test models.

Predictors are marginally Uniform[0, 1].  Latent Gaussian rows follow the AR(1)
recursion ``z_1 = e_1``, ``z_j = rho z_{j-1} + sqrt(1 - rho^2) e_j`` (so that
``corr(z_j, z_k) = rho ** |j - k|`` exactly) and are mapped through the
standard normal CDF.

Randomness is drawn in fixed row blocks, each from its own stream seeded by
``(seed, stream, block)``.  The output therefore does not depend on how (or
whether) blocks are generated in parallel.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import InvalidDimension, InvalidRho, UsageError
from .screening import Dataset

__all__ = [
    "ROW_BLOCK",
    "SimSpec",
    "TRUTH",
    "g1",
    "g2",
    "g3",
    "gen_correlated_uniforms",
    "gen_example",
    "latent_ar_gaussians",
    "response_mean",
]

ROW_BLOCK = 4096

_X_STREAM = 0
_NOISE_STREAM = 1

TRUTH = {1: (0, 1, 2), 2: (0, 1, 2, 3), 3: (0, 1, 2)}

_TWO_PI = 2.0 * np.pi


def g1(x):
    return (2.0 * np.asarray(x) - 1.0) ** 2


def g2(x):
    s = np.sin(_TWO_PI * np.asarray(x))
    return s / (2.0 - s)


def g3(x):
    s = np.sin(_TWO_PI * np.asarray(x))
    c = np.cos(_TWO_PI * np.asarray(x))
    return 0.1 * s + 0.2 * c + 0.3 * s**2 + 0.4 * c**3 + 0.5 * s**3


def _rng(seed, stream, block):
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, stream, block])


def _check_rho(rho):
    if not 0 <= rho < 1:
        raise InvalidRho(f"rho must lie in [0, 1), got {rho}")


def latent_ar_gaussians(n, p, rho, seed):
    """Latent ``(n, p)`` Gaussian matrix with AR(1) correlation across columns."""
    _check_rho(rho)
    if n < 1 or p < 1:
        raise InvalidDimension(f"need n >= 1 and p >= 1, got n={n}, p={p}")
    out = np.empty((n, p))
    innov = np.sqrt(1.0 - rho * rho)
    for b, start in enumerate(range(0, n, ROW_BLOCK)):
        stop = min(n, start + ROW_BLOCK)
        e = _rng(seed, _X_STREAM, b).standard_normal((stop - start, p))
        z = out[start:stop]
        z[:, 0] = e[:, 0]
        for j in range(1, p):
            z[:, j] = rho * z[:, j - 1] + innov * e[:, j]
    return out


def gen_correlated_uniforms(n, p, rho, seed):
    """Uniform[0, 1] predictors with a Gaussian-copula AR(1) dependence."""
    return ndtr(latent_ar_gaussians(n, p, rho, seed))


def response_mean(example, X):
    """Noise-free regression function of example 1, 2 or 3 at rows of ``X``."""
    X = np.asarray(X, dtype=float)
    if example == 1:
        return 4.0 * g1(X[:, 0]) + 3.0 * g2(X[:, 1]) + 3.0 * g3(X[:, 2])
    if example == 2:
        return g1(X[:, 0] + X[:, 1] - X[:, 2] - X[:, 3])
    if example == 3:
        s1, s2, s3 = (np.sin(_TWO_PI * X[:, j]) for j in range(3))
        return 4.0 * X[:, 0] + 2.0 * s1 * s2 + 3.0 * s2 * s3
    raise UsageError(f"unknown example {example!r}; expected 1, 2 or 3")


@dataclass(frozen=True)
class SimSpec:
    example: int
    n: int = 400
    p: int = 1000
    rho: float = 0.0
    sigma2: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.example not in TRUTH:
            raise UsageError(f"unknown example {self.example!r}; expected 1, 2 or 3")
        if self.p < 4:
            raise InvalidDimension(f"p must be at least 4, got {self.p}")
        if self.n < 2:
            raise InvalidDimension(f"n must be at least 2, got {self.n}")
        _check_rho(self.rho)
        if self.sigma2 < 0:
            raise UsageError(f"sigma2 must be non-negative, got {self.sigma2}")


def gen_example(spec):
    """Draw a :class:`~fbis.screening.Dataset` from a simulation spec.

    ``sigma2 = 0`` gives noise-free responses (useful for checks).
    """
    X = gen_correlated_uniforms(spec.n, spec.p, spec.rho, spec.seed)
    y = response_mean(spec.example, X)
    if spec.sigma2 > 0:
        noise = np.empty(spec.n)
        for b, start in enumerate(range(0, spec.n, ROW_BLOCK)):
            stop = min(spec.n, start + ROW_BLOCK)
            noise[start:stop] = _rng(spec.seed, _NOISE_STREAM, b).standard_normal(stop - start)
        y = y + np.sqrt(spec.sigma2) * noise
    return Dataset(y=y, X=X, truth=TRUTH[spec.example])
