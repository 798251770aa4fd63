"""Baseline observation windows.

A baseline window is either a fixed period or "lifetime since the age of
risk onset", whose length varies across subjects.  For the lifetime case
the enrolment age is modelled as a Gaussian truncated to the study's age
range with the reported mean and SD, which is the maximum-entropy density
under those constraints.  Expectations over the window use Gauss-Legendre
quadrature.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Union
import math

import numpy as np
from scipy import optimize

from .exceptions import FrailtyDomainError
from .validation import check_finite, check_nonnegative, check_positive

QUAD_NODES = 64
SD_CLAMP_FRACTION = 0.995
_LOG_DENSITY_SPAN = 40.0  # integrate where the log-density is within this of its maximum
_UNIFORM_SD_RTOL = 1e-9


def _legendre(n):
    return np.polynomial.legendre.leggauss(n)


_LEG_CACHE = {}


def _leggauss(n):
    if n not in _LEG_CACHE:
        _LEG_CACHE[n] = _legendre(n)
    return _LEG_CACHE[n]


def truncated_nodes(mu, sigma, lower, upper, order=QUAD_NODES):
    """Quadrature nodes and normalised weights for Normal(mu, sigma) on (lower, upper).

    Nodes are placed on the part of the interval that carries non-negligible
    mass, so narrow or far-off-centre densities are still resolved.
    """
    check_finite("mu", mu)
    check_positive("sigma", sigma)
    if not lower < upper:
        raise FrailtyDomainError(f"need lower < upper, got ({lower}, {upper})")
    peak = min(max(mu, lower), upper)
    reach = math.sqrt((peak - mu) ** 2 + 2 * _LOG_DENSITY_SPAN * sigma**2)
    a, b = max(lower, mu - reach), min(upper, mu + reach)
    if not a < b:  # mass sits on a sliver next to one end
        a, b = lower, upper
    x, w = _leggauss(order)
    nodes = 0.5 * (b - a) * x + 0.5 * (b + a)
    logd = -0.5 * ((nodes - mu) / sigma) ** 2
    dens = w * np.exp(logd - logd.max())
    return nodes, dens / dens.sum()


def truncated_moments(mu, sigma, lower, upper, order=QUAD_NODES):
    """Mean and SD of Normal(mu, sigma**2) conditioned on (lower, upper)."""
    nodes, weights = truncated_nodes(mu, sigma, lower, upper, order)
    mean = float(weights @ nodes)
    var = float(weights @ (nodes - mean) ** 2)
    return mean, math.sqrt(max(var, 0.0))


def uniform_sd(lower, upper):
    return (upper - lower) / math.sqrt(12.0)


class MomentFit(NamedTuple):
    mu: float
    sigma: float
    discrepancy: float  # squared distance between achieved and target moments
    clamped: bool  # target SD exceeded the uniform bound and was reduced
    target_sd: float  # SD actually fitted (after any clamp)


def invert_moments(target_mean, target_sd, lower, upper, maxiter=500):
    """Find (mu, sigma) whose truncation to (lower, upper) has the target moments.

    Minimises the squared moment discrepancy with Nelder-Mead over
    (mu, log sigma) from the start (target_mean, target_sd), then polishes
    with least squares.  A target SD above the uniform bound
    (upper - lower) / sqrt(12) is infeasible for any truncated Gaussian and
    is clamped to 0.995 of that bound.  A target equal to the uniform
    moments returns the flat member of the family.
    """
    check_finite("target_mean", target_mean)
    check_positive("target_sd", target_sd)
    if not lower < target_mean < upper:
        raise FrailtyDomainError(
            f"target mean {target_mean} outside the support ({lower}, {upper})")
    width = upper - lower
    bound = uniform_sd(lower, upper)
    center = 0.5 * (lower + upper)
    clamped = False
    if target_sd >= bound * (1 - _UNIFORM_SD_RTOL):
        if (target_sd <= bound * (1 + _UNIFORM_SD_RTOL)
                and abs(target_mean - center) <= _UNIFORM_SD_RTOL * width):
            sigma = 1e6 * width
            m, s = truncated_moments(center, sigma, lower, upper)
            disc = (m - target_mean) ** 2 + (s - target_sd) ** 2
            return MomentFit(center, sigma, disc, False, target_sd)
        target_sd = SD_CLAMP_FRACTION * bound
        clamped = True

    def resid(p):
        m, s = truncated_moments(p[0], math.exp(p[1]), lower, upper)
        return np.array([(m - target_mean) / width, (s - target_sd) / width])

    def objective(p):
        r = resid(p)
        return float(r @ r)

    start = np.array([target_mean, math.log(target_sd)])
    nm = optimize.minimize(objective, start, method="Nelder-Mead",
                           options={"maxiter": maxiter, "xatol": 1e-10, "fatol": 1e-16})
    best = nm.x
    if nm.fun > 1e-24:
        ls = optimize.least_squares(resid, best, method="lm", xtol=1e-15, ftol=1e-15,
                                    gtol=1e-15, max_nfev=2000)
        if objective(ls.x) < nm.fun:
            best = ls.x
    mu, sigma = float(best[0]), float(math.exp(best[1]))
    m, s = truncated_moments(mu, sigma, lower, upper)
    disc = (m - target_mean) ** 2 + (s - target_sd) ** 2
    return MomentFit(mu, sigma, disc, clamped, target_sd)


@dataclass(frozen=True)
class FixedWindow:
    """A baseline or follow-up period of fixed length (years)."""

    length: float

    def __post_init__(self):
        check_nonnegative("length", self.length)

    @property
    def min_length(self):
        return self.length

    @property
    def mean_length(self):
        return self.length

    def nodes(self, order=QUAD_NODES):
        return np.array([float(self.length)]), np.array([1.0])

    def sample(self, rng, size):
        return np.full(size, float(self.length))

    def to_dict(self):
        return {"type": "fixed", "length": self.length}


@dataclass(frozen=True)
class LifetimeWindow:
    """Lifetime since risk onset, for subjects enrolled at ages in (min_age, max_age).

    The window length T = age - risk_onset_age has a truncated-Gaussian
    law fitted to the reported mean and SD of enrolment ages.
    """

    min_age: float
    max_age: float
    mean_age: float
    sd_age: float
    risk_onset_age: float = 10.0

    def __post_init__(self):
        for name in ("min_age", "max_age", "mean_age", "sd_age", "risk_onset_age"):
            check_finite(name, getattr(self, name))
        if not self.risk_onset_age <= self.min_age < self.max_age:
            raise FrailtyDomainError(
                "need risk_onset_age <= min_age < max_age, got "
                f"{self.risk_onset_age}, {self.min_age}, {self.max_age}")
        if not self.min_age <= self.mean_age <= self.max_age:
            raise FrailtyDomainError(f"mean_age {self.mean_age} outside age range")
        check_positive("sd_age", self.sd_age)

    @property
    def lower(self):
        return self.min_age - self.risk_onset_age

    @property
    def upper(self):
        return self.max_age - self.risk_onset_age

    @property
    def min_length(self):
        return self.lower

    @cached_property
    def fit(self) -> MomentFit:
        """Truncated-Gaussian parameters on the window-length scale."""
        mean = self.mean_age - self.risk_onset_age
        # a reported mean exactly on the boundary is nudged inside the support
        eps = 1e-6 * (self.upper - self.lower)
        mean = min(max(mean, self.lower + eps), self.upper - eps)
        return invert_moments(mean, self.sd_age, self.lower, self.upper)

    @property
    def mean_length(self):
        return truncated_moments(self.fit.mu, self.fit.sigma, self.lower, self.upper)[0]

    @cached_property
    def _default_nodes(self):
        return truncated_nodes(self.fit.mu, self.fit.sigma, self.lower, self.upper)

    def nodes(self, order=QUAD_NODES):
        if order == QUAD_NODES:
            return self._default_nodes
        return truncated_nodes(self.fit.mu, self.fit.sigma, self.lower, self.upper, order)

    def density(self, t):
        """Truncated-Gaussian density of the window length at ``t``."""
        from scipy.stats import truncnorm

        mu, sigma = self.fit.mu, self.fit.sigma
        a, b = (self.lower - mu) / sigma, (self.upper - mu) / sigma
        return truncnorm.pdf(t, a, b, loc=mu, scale=sigma)

    def sample(self, rng, size):
        from scipy.stats import truncnorm

        mu, sigma = self.fit.mu, self.fit.sigma
        a, b = (self.lower - mu) / sigma, (self.upper - mu) / sigma
        return truncnorm.rvs(a, b, loc=mu, scale=sigma, size=size, random_state=rng)

    def to_dict(self):
        return {"type": "lifetime", "min_age": self.min_age, "max_age": self.max_age,
                "mean_age": self.mean_age, "sd_age": self.sd_age,
                "risk_onset_age": self.risk_onset_age}


Window = Union[FixedWindow, LifetimeWindow]


def expect_over_window(f, window, order=QUAD_NODES):
    """E f(T) over the window length T.

    ``f`` should accept a numpy array of lengths; scalar-only callables are
    applied node by node.
    """
    nodes, weights = window.nodes(order)
    try:
        values = np.asarray(f(nodes), dtype=float)
        if values.shape != nodes.shape:
            raise ValueError
    except (TypeError, ValueError):
        values = np.array([float(f(t)) for t in nodes])
    if not np.all(np.isfinite(values)):
        raise FloatingPointError(
            f"integrand not finite on the window support; nodes={nodes}, values={values}")
    return float(weights @ values)


def window_from_dict(d):
    kind = d.get("type")
    if kind == "fixed":
        return FixedWindow(float(d["length"]))
    if kind == "lifetime":
        return LifetimeWindow(float(d["min_age"]), float(d["max_age"]), float(d["mean_age"]),
                              float(d["sd_age"]), float(d.get("risk_onset_age", 10.0)))
    raise FrailtyDomainError(f"unknown window type {kind!r}")
