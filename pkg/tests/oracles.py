"""Generative Monte Carlo oracles.

Everything here simulates the model directly (gamma frailty, then Poisson
counts per sub-window, then an explicit screen) and never calls the
closed forms under test.  Conditional quantities use per-subject rejection:
a subject's baseline length is drawn once, then frailty and counts are
redrawn until the screen accepts, which matches the convention that
reported ages describe enrolled subjects.
"""

from typing import NamedTuple

import numpy as np
from scipy import integrate
from scipy.stats import truncnorm

DELTA_SIM = 1e-3
CHUNK = 2_000_000


class Estimate(NamedTuple):
    mean: float
    se: float
    n: int

    def agrees(self, value, k=3.0):
        """Within k standard errors."""
        return abs(value - self.mean) <= k * self.se + 1e-12

    def agrees_rel(self, value, rel):
        """Within a relative tolerance (used for small-delta conditionals)."""
        return abs(value - self.mean) <= rel * abs(value)


def estimate(values):
    values = np.asarray(values, dtype=float)
    n = len(values)
    return Estimate(float(values.mean()), float(values.std(ddof=1) / np.sqrt(n)), n)


def frailty(rng, alpha, size):
    return rng.gamma(alpha, 1.0 / alpha, size)


def unconditional(rng, n, draw):
    """Estimate E[draw(rng, size)] from n draws in chunks."""
    out, done = [], 0
    while done < n:
        size = min(CHUNK, n - done)
        out.append(np.asarray(draw(rng, size), dtype=float))
        done += size
    return estimate(np.concatenate(out))


def conditional(rng, n, t_sampler, draw, max_rounds=100_000):
    """Per-subject rejection sampling.

    ``draw(rng, R, t)`` returns (accepted mask, value); ``t_sampler(rng, size)``
    gives baseline lengths, drawn once per subject.  Returns the estimate of
    E[value | accepted] over ``n`` enrolled subjects.
    """
    t = t_sampler(rng, n)
    value = np.empty(n)
    pending = np.arange(n)
    rounds = 0
    while pending.size and rounds < max_rounds:
        k = max(1, min(CHUNK // pending.size, 4096))
        who = np.repeat(pending, k)
        R = rng.gamma(draw.alpha, 1.0 / draw.alpha, who.size)
        acc, val = draw(rng, R, t[who])
        acc = acc.reshape(pending.size, k)
        first = np.argmax(acc, axis=1)
        hit = acc[np.arange(pending.size), first]
        rows = np.flatnonzero(hit)
        value[pending[rows]] = np.asarray(val, dtype=float)[rows * k + first[rows]]
        pending = pending[~hit]
        rounds += 1
    if pending.size:
        raise RuntimeError("rejection sampler did not finish")
    return estimate(value)


class Draw:
    """A screen-and-measure rule with its frailty shape attached."""

    def __init__(self, alpha, fn):
        self.alpha = alpha
        self.fn = fn

    def __call__(self, rng, R, t):
        return self.fn(rng, R, t)


def fixed(t):
    return lambda rng, size: np.full(size, float(t))


def window_sampler(lo, hi, mu, sigma):
    """Truncated-normal lengths with *Gaussian* parameters (mu, sigma) on (lo, hi)."""
    a, b = (lo - mu) / sigma, (hi - mu) / sigma
    return lambda rng, size: truncnorm.rvs(a, b, loc=mu, scale=sigma, size=size,
                                           random_state=rng)


def _entropy(x, p):
    with np.errstate(divide="ignore", invalid="ignore"):
        h = np.where(p > 0, -p * np.log(p), 0.0)
    return integrate.simpson(h, x=x)


def entropy_dominance(target_mean, target_sd, lower, upper, n_perturb=6, seed=13):
    """Spot check that the fitted truncated Gaussian maximises entropy.

    Random smooth perturbations are projected onto the complement of
    {1, x, (x - mean)^2}, so total mass, mean and variance are unchanged;
    entropy must not rise for steps t in {+-0.05, +-0.1}.
    """
    from frailtymeta.exposure import invert_moments

    fit = invert_moments(target_mean, target_sd, lower, upper)
    x = np.linspace(lower, upper, 20_001)
    a, b = (lower - fit.mu) / fit.sigma, (upper - fit.mu) / fit.sigma
    f = truncnorm.pdf(x, a, b, loc=fit.mu, scale=fit.sigma)
    mean = integrate.simpson(x * f, x=x)
    basis = np.stack([np.ones_like(x), x - mean, (x - mean) ** 2])
    w = np.full_like(x, x[1] - x[0])
    q, _ = np.linalg.qr((basis * np.sqrt(w)).T)
    h0 = _entropy(x, f)
    rng = np.random.default_rng(seed)
    u = (x - lower) / (upper - lower)
    for _ in range(n_perturb):
        coef = rng.normal(size=6)
        g = sum(c * np.cos((k + 1) * np.pi * u + rng.uniform(0, 2 * np.pi))
                for k, c in enumerate(coef))
        gs = g * np.sqrt(w)
        rho = (gs - q @ (q.T @ gs)) / np.sqrt(w)
        rho *= 0.9 * f.min() / np.abs(rho).max()  # keeps f + t rho positive for |t| <= 1
        for t in (-0.1, -0.05, 0.05, 0.1):
            p = f + t * rho
            if p.min() < 0 or _entropy(x, p) > h0 + 1e-6:
                return False
    return True


# -- ideation ---------------------------------------------------------------------

def lognormal_scores(rng, params, size):
    z = rng.normal(0.0, params.sigma, size)
    pre = np.exp(z + rng.normal(params.mu_pre, params.tau_pre, size))
    con = np.exp(z + rng.normal(params.mu_con, params.tau_con, size))
    exp = np.exp(z + rng.normal(params.mu_exp, params.tau_exp, size))
    return pre, con, exp
