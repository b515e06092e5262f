"""
Distribution Primitives
Exact Exponential, Erlang and XGamma densities, distribution functions,
transforms, moments and seeded sampling.

Every function taking a time argument accepts a float or a numpy array and
returns the same kind of value.
"""

import math
import logging
from dataclasses import dataclass
from typing import Tuple, Union, Optional

import numpy as np

from .errors import NumericError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# e^{-x} underflows before the polynomial prefactor overflows past this point
UNDERFLOW_EXPONENT = 700.0

# Below this argument the distribution function is summed from its series tail
SMALL_ARGUMENT = 1.0
SERIES_TERMS = 40


@dataclass(frozen=True)
class ErlangParams:
    shape: int
    rate: float

    def __post_init__(self):
        if int(self.shape) != self.shape or self.shape < 1:
            raise NumericError(f"Erlang shape must be a positive integer, got {self.shape!r}")
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise NumericError(f"Erlang rate must be positive and finite, got {self.rate!r}")


@dataclass(frozen=True)
class XGammaParams:
    rate: float

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise NumericError(f"XGamma rate must be positive and finite, got {self.rate!r}")

    @property
    def mixing(self) -> Tuple[float, float]:
        """Weights of the exponential and the Erlang(3) parts."""
        pi_1 = self.rate / (1.0 + self.rate)
        return pi_1, 1.0 - pi_1


def _as_array(t: ArrayLike) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(t, dtype=float)
    return arr, arr.ndim == 0


def _finish(values: np.ndarray, scalar: bool) -> ArrayLike:
    return float(values) if scalar else values


def _poisson_head(x: np.ndarray, shape: int) -> np.ndarray:
    """Sum_{j<shape} x^j / j! by the term recurrence."""
    term = np.ones_like(x)
    total = np.ones_like(x)
    for j in range(1, shape):
        term = term * x / j
        total = total + term
    return total


def _poisson_tail(x: np.ndarray, shape: int) -> np.ndarray:
    """Sum_{j>=shape} x^j / j!, accurate for small x."""
    term = np.ones_like(x)
    for j in range(1, shape + 1):
        term = term * x / j
    total = term.copy()
    for j in range(shape + 1, shape + SERIES_TERMS):
        term = term * x / j
        total = total + term
    return total


# ---------------------------------------------------------------- Erlang

def erlang_pdf(p: ErlangParams, t: ArrayLike) -> ArrayLike:
    """Density (theta t)^(n-1) theta e^(-theta t) / (n-1)!, zero for t < 0."""
    t_arr, scalar = _as_array(t)
    x = p.rate * t_arr
    inside = (t_arr >= 0) & (x <= UNDERFLOW_EXPONENT)
    xs = np.where(inside, x, 0.0)
    values = xs ** (p.shape - 1) * p.rate * np.exp(-xs) / math.factorial(p.shape - 1)
    return _finish(np.where(inside, values, 0.0), scalar)


def erlang_cdf(p: ErlangParams, t: ArrayLike) -> ArrayLike:
    """Distribution function 1 - e^(-theta t) sum_{j<n} (theta t)^j / j!."""
    t_arr, scalar = _as_array(t)
    x = np.clip(p.rate * np.where(t_arr > 0, t_arr, 0.0), 0.0, UNDERFLOW_EXPONENT)
    small = x < SMALL_ARGUMENT
    head = 1.0 - np.exp(-x) * _poisson_head(x, p.shape)
    tail = np.exp(-x) * _poisson_tail(np.where(small, x, 0.0), p.shape)
    values = np.where(small, tail, head)
    values = np.where(p.rate * t_arr > UNDERFLOW_EXPONENT, 1.0, values)
    values = np.where(t_arr > 0, values, 0.0)
    return _finish(np.clip(values, 0.0, 1.0), scalar)


def erlang_sf(p: ErlangParams, t: ArrayLike) -> ArrayLike:
    """Survival function e^(-theta t) sum_{j<n} (theta t)^j / j!, free of tail cancellation."""
    t_arr, scalar = _as_array(t)
    x = np.clip(p.rate * np.where(t_arr > 0, t_arr, 0.0), 0.0, UNDERFLOW_EXPONENT)
    values = np.exp(-x) * _poisson_head(x, p.shape)
    values = np.where(p.rate * t_arr > UNDERFLOW_EXPONENT, 0.0, values)
    values = np.where(t_arr > 0, values, 1.0)
    return _finish(values, scalar)


def erlang_mgf(p: ErlangParams, t: ArrayLike) -> ArrayLike:
    """Moment generating function theta^n / (theta - t)^n, defined for t < theta."""
    t_arr, scalar = _as_array(t)
    if np.any(t_arr >= p.rate):
        raise NumericError(
            f"Erlang MGF diverges for t >= rate ({p.rate}); got t={np.max(t_arr)}"
        )
    return _finish((p.rate / (p.rate - t_arr)) ** p.shape, scalar)


def erlang_laplace(p: ErlangParams, s: ArrayLike) -> ArrayLike:
    """Laplace transform of the density, theta^n / (theta + s)^n, defined for s > -theta."""
    s_arr, scalar = _as_array(s)
    if np.any(s_arr <= -p.rate):
        raise NumericError(
            f"Erlang Laplace transform diverges for s <= -rate ({-p.rate}); got s={np.min(s_arr)}"
        )
    return _finish((p.rate / (p.rate + s_arr)) ** p.shape, scalar)


def erlang_moment(p: ErlangParams, k: int) -> float:
    """k-th raw moment (n+k-1)! / ((n-1)! theta^k)."""
    if int(k) != k or k < 1:
        raise NumericError(f"Moment order must be a positive integer, got {k!r}")
    rising = math.prod(range(p.shape, p.shape + int(k)))
    return rising / p.rate ** k


# ---------------------------------------------------------------- XGamma

def xgamma_pdf(p: XGammaParams, t: ArrayLike) -> ArrayLike:
    """Density theta^2/(1+theta) (1 + theta t^2 / 2) e^(-theta t), zero for t < 0."""
    t_arr, scalar = _as_array(t)
    theta = p.rate
    x = theta * t_arr
    inside = (t_arr >= 0) & (x <= UNDERFLOW_EXPONENT)
    ts = np.where(inside, t_arr, 0.0)
    values = theta ** 2 / (1.0 + theta) * (1.0 + theta * ts ** 2 / 2.0) * np.exp(-theta * ts)
    return _finish(np.where(inside, values, 0.0), scalar)


def xgamma_cdf(p: XGammaParams, t: ArrayLike) -> ArrayLike:
    """Distribution function, mixed from the exponential and Erlang(3) parts."""
    pi_1, pi_2 = p.mixing
    values = (pi_1 * np.asarray(erlang_cdf(ErlangParams(1, p.rate), t))
              + pi_2 * np.asarray(erlang_cdf(ErlangParams(3, p.rate), t)))
    return _finish(np.clip(values, 0.0, 1.0), np.ndim(t) == 0)


def xgamma_sf(p: XGammaParams, t: ArrayLike) -> ArrayLike:
    pi_1, pi_2 = p.mixing
    values = (pi_1 * np.asarray(erlang_sf(ErlangParams(1, p.rate), t))
              + pi_2 * np.asarray(erlang_sf(ErlangParams(3, p.rate), t)))
    return _finish(values, np.ndim(t) == 0)


def xgamma_mgf(p: XGammaParams, t: ArrayLike) -> ArrayLike:
    """Moment generating function theta^2((theta-t)^2+theta) / ((1+theta)(theta-t)^3), t < theta."""
    t_arr, scalar = _as_array(t)
    theta = p.rate
    if np.any(t_arr >= theta):
        raise NumericError(
            f"XGamma MGF diverges for t >= rate ({theta}); got t={np.max(t_arr)}"
        )
    gap = theta - t_arr
    values = theta ** 2 * (gap ** 2 + theta) / ((1.0 + theta) * gap ** 3)
    return _finish(values, scalar)


def xgamma_laplace(p: XGammaParams, s: ArrayLike) -> ArrayLike:
    s_arr, scalar = _as_array(s)
    if np.any(s_arr <= -p.rate):
        raise NumericError(
            f"XGamma Laplace transform diverges for s <= -rate ({-p.rate}); got s={np.min(s_arr)}"
        )
    return _finish(np.asarray(xgamma_mgf(p, -s_arr)), scalar)


def xgamma_mean(p: XGammaParams) -> float:
    theta = p.rate
    return (theta + 3.0) / (theta * (1.0 + theta))


def xgamma_variance(p: XGammaParams) -> float:
    theta = p.rate
    second = (2.0 * theta + 12.0) / (theta ** 2 * (1.0 + theta))
    return second - xgamma_mean(p) ** 2


def xgamma_rate_for_mean(mean: float) -> float:
    """Rate whose XGamma mean equals ``mean`` (positive root of c t^2 + (c-1) t - 3)."""
    if not (math.isfinite(mean) and mean > 0):
        raise NumericError(f"Target mean must be positive and finite, got {mean!r}")
    c = mean
    return (-(c - 1.0) + math.sqrt((c - 1.0) ** 2 + 12.0 * c)) / (2.0 * c)


# ---------------------------------------------------------------- Sampling

def make_rng(seed: Union[int, np.random.Generator, None]) -> np.random.Generator:
    """PCG64 generator for a seed; generators pass through untouched."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def exponential_sample(rate: float, rng: np.random.Generator,
                       size: Optional[Union[int, Tuple[int, ...]]] = None) -> ArrayLike:
    """Inverse-transform exponential draws -ln(1-u)/rate."""
    u = rng.random(size)
    return -np.log1p(-u) / rate


def xgamma_sample(p: XGammaParams, rng: np.random.Generator,
                  size: Optional[int] = None) -> ArrayLike:
    """
    XGamma draws as a two-part mixture.

    Each draw consumes four uniforms from the stream in a fixed order: the
    mixture selector, then three exponential stages. Draws with selector
    u < theta/(1+theta) keep only the first stage.
    """
    count = 1 if size is None else int(size)
    selector = rng.random(count)
    stages = exponential_sample(p.rate, rng, (count, 3))
    pi_1, _ = p.mixing
    values = np.where(selector < pi_1, stages[:, 0], stages.sum(axis=1))
    return float(values[0]) if size is None else values
