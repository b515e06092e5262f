"""
Convolution Engine
Closed form of the sum of independent XGamma variables with distinct rates
as a signed mixture of Erlang distributions, and every statistical function
derived from it.
"""

import math
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, List, Tuple

import mpmath
import numpy as np

from .config.settings import SEPARATION
from .distributions import (
    ArrayLike, ErlangParams, XGammaParams, erlang_pdf, erlang_cdf, erlang_sf,
    erlang_moment, xgamma_mgf, xgamma_laplace,
)
from .errors import NumericError, SeparationError

logger = logging.getLogger(__name__)

# Relative size below which a negative density is treated as round-off
CLAMP_TOLERANCE = 1e-12

# Probability left in the tail by the truncation point
TAIL_PROBABILITY = 1e-12

# Largest drift of the weight sum from 1 a mixture may carry
WEIGHT_SUM_TOLERANCE = 1e-9

# Largest round-off sum |R_ik| x eps a mixture may carry
CONDITION_TOLERANCE = 1e-8

# Decimal digits for the transform sums; their signed terms cancel far below the result
TRANSFORM_DPS = 40


@dataclass(frozen=True)
class ParamVector:
    """Ordered, pairwise distinct positive rates theta_1..theta_n."""

    rates: Tuple[float, ...]

    def __post_init__(self):
        rates = tuple(float(r) for r in self.rates)
        object.__setattr__(self, 'rates', rates)

        if not rates:
            raise NumericError("A parameter vector needs at least one rate")
        for rate in rates:
            if not (math.isfinite(rate) and rate > 0):
                raise NumericError(f"Rates must be positive and finite, got {rate!r}")

        if len(rates) > 1 and self.separation < SEPARATION * max(rates):
            raise SeparationError(
                f"Rates {rates} are not distinct enough: minimum gap {self.separation:.3g} "
                f"is below {SEPARATION:g} x max rate"
            )

    @classmethod
    def of(cls, rates: Iterable[float]) -> 'ParamVector':
        return cls(tuple(rates))

    @property
    def n(self) -> int:
        return len(self.rates)

    @property
    def separation(self) -> float:
        """Minimum pairwise gap |theta_i - theta_j| (infinite for a single rate)."""
        ordered = sorted(self.rates)
        if len(ordered) < 2:
            return math.inf
        return min(b - a for a, b in zip(ordered, ordered[1:]))

    @property
    def min_rate(self) -> float:
        return min(self.rates)

    def __iter__(self):
        return iter(self.rates)

    def __len__(self) -> int:
        return len(self.rates)


@dataclass(frozen=True)
class ResidueTriple:
    """Heaviside residues A_i1, A_i2, A_i3 at the order-3 pole -theta_i."""

    a1: float
    a2: float
    a3: float


@dataclass(frozen=True)
class ErlangComponent:
    weight: float
    erlang: ErlangParams


@dataclass(frozen=True)
class MixtureRepresentation:
    """Signed Erlang mixture of a HypoXG law: three components per rate, shapes 3, 2, 1."""

    params: ParamVector
    components: Tuple[ErlangComponent, ...]
    normalizer: float
    residues: Tuple[ResidueTriple, ...] = field(repr=False, default=())

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])

    @property
    def weight_sum(self) -> float:
        return math.fsum(c.weight for c in self.components)

    def weight(self, i: int, k: int) -> float:
        """R_ik for rate index i (0-based) and mixture index k in {1, 2, 3}."""
        return self.components[3 * i + k - 1].weight


def _pole_terms(rates: Tuple[float, ...], i: int) -> Tuple[float, float, float]:
    """Product of the deflated factors at -theta_i and the two log-derivative sums."""
    theta_i = rates[i]
    product = 1.0
    first = 0.0
    second = 2.0 / theta_i
    for j, theta_j in enumerate(rates):
        if j == i:
            continue
        gap = theta_j - theta_i
        quad = gap * gap + theta_j
        product *= quad / gap ** 3
        first += 2.0 * gap / quad - 3.0 / gap
        second += -2.0 * (gap * gap - theta_j) / quad ** 2 + 3.0 / gap ** 2
    return product, first, second


def compute_residues(theta: ParamVector, i: int) -> ResidueTriple:
    """
    Residues of prod_l ((theta_l+s)^2+theta_l)/(theta_l+s)^3 at the pole s = -theta_i.

    ``i`` is a 0-based rate index. For a single rate the empty products and
    sums give (theta_1, 0, 1).
    """
    if not 0 <= i < theta.n:
        raise IndexError(f"Rate index {i} outside 0..{theta.n - 1}")
    product, first, second = _pole_terms(theta.rates, i)
    a1 = theta.rates[i] * product
    a2 = a1 * first
    a3 = a1 / 2.0 * first ** 2 + a1 / 2.0 * second
    return ResidueTriple(a1, a2, a3)


def _weight_triple(rates, i: int):
    """R_i1, R_i2, R_i3 in the arithmetic of ``rates`` (floats or mpmath numbers)."""
    theta_i = rates[i]
    # K * prod_{j != i} g_j(-theta_i) is evaluated factor by factor to keep
    # huge and tiny rates from overflowing the plain product
    scale = theta_i * theta_i / (1 + theta_i)
    for j, theta_j in enumerate(rates):
        if j != i:
            gap = theta_j - theta_i
            scale *= theta_j * theta_j / (1 + theta_j) * (gap * gap + theta_j) / gap ** 3
    _, first, second = _pole_terms(rates, i)

    r1 = scale / (theta_i * theta_i)
    r2 = r1 * first * theta_i
    r3 = r1 * (first * first + second) / 2 * theta_i * theta_i
    return r1, r2, r3


def build_mixture(theta: ParamVector) -> MixtureRepresentation:
    """
    Weights R_ik = K A_ik / theta_i^(4-k) on Erlang(4-k, theta_i), K = prod theta_l^2/(1+theta_l).

    The weights grow like gap^-5 as two rates close in. Vectors whose weights
    no longer sum to 1 within WEIGHT_SUM_TOLERANCE, or whose round-off
    sum |R_ik| x eps exceeds CONDITION_TOLERANCE, raise SeparationError.
    """
    rates = theta.rates
    normalizer = math.prod(r * r / (1.0 + r) for r in rates)

    components: List[ErlangComponent] = []
    residues: List[ResidueTriple] = []
    for i, theta_i in enumerate(rates):
        residues.append(compute_residues(theta, i))
        for k, weight in enumerate(_weight_triple(rates, i), start=1):
            components.append(ErlangComponent(weight, ErlangParams(4 - k, theta_i)))

    mixture = MixtureRepresentation(theta, tuple(components), normalizer, tuple(residues))
    magnitude = math.fsum(abs(c.weight) for c in components)
    drift = abs(mixture.weight_sum - 1.0)
    if drift > WEIGHT_SUM_TOLERANCE or magnitude * np.finfo(float).eps > CONDITION_TOLERANCE:
        raise SeparationError(
            f"Rates {rates} are too close for the closed form: weights reach {magnitude:.3g} "
            f"in magnitude and their sum is off by {drift:.3g}"
        )
    logger.debug(f"Built mixture for rates {rates}: weight sum {mixture.weight_sum:.17g}")
    return mixture


@lru_cache(maxsize=256)
def _precise_weights(rates: Tuple[float, ...]):
    """(R_ik, theta_i, 4-k) at TRANSFORM_DPS digits, from the exact binary rates."""
    with mpmath.workdps(TRANSFORM_DPS):
        exact = tuple(mpmath.mpf(r) for r in rates)
        return tuple(
            (weight, theta_i, 4 - k)
            for i, theta_i in enumerate(exact)
            for k, weight in enumerate(_weight_triple(exact, i), start=1)
        )


def _transform_sum(mix: MixtureRepresentation, points: np.ndarray) -> np.ndarray:
    """sum_ik R_ik (theta_i / (theta_i - t))^(4-k) at each point."""
    weights = _precise_weights(mix.params.rates)
    values = np.empty(len(points))
    with mpmath.workdps(TRANSFORM_DPS):
        for index, t in enumerate(points):
            x = mpmath.mpf(float(t))
            values[index] = float(mpmath.fsum(w * (theta / (theta - x)) ** shape for w, theta, shape in weights))
    return values


def compensated_sum(terms: np.ndarray) -> np.ndarray:
    """Neumaier summation over the first axis."""
    terms = np.asarray(terms, dtype=float)
    total = np.zeros(terms.shape[1:])
    correction = np.zeros(terms.shape[1:])
    for term in terms:
        updated = total + term
        correction += np.where(np.abs(total) >= np.abs(term),
                               (total - updated) + term,
                               (term - updated) + total)
        total = updated
    return total + correction


def _component_terms(mix: MixtureRepresentation, t: np.ndarray, fn) -> np.ndarray:
    return np.stack([c.weight * np.asarray(fn(c.erlang, t)) for c in mix.components])


def _finish(values: np.ndarray, scalar: bool) -> ArrayLike:
    return float(values) if scalar else values


def hypoxg_pdf(mix: MixtureRepresentation, t: ArrayLike, clamp: bool = True) -> ArrayLike:
    """
    Density sum_ik R_ik f_Erl(4-k, theta_i)(t).

    With ``clamp`` negative round-off is reported as 0; pass ``clamp=False``
    to inspect the raw cancellation residue.
    """
    t_arr = np.asarray(t, dtype=float)
    scalar = t_arr.ndim == 0
    terms = _component_terms(mix, np.atleast_1d(t_arr), erlang_pdf)
    values = compensated_sum(terms)
    values = np.where(np.atleast_1d(t_arr) < 0, 0.0, values)
    if clamp:
        scale = np.abs(terms).sum(axis=0)
        significant = values < -CLAMP_TOLERANCE * scale
        if np.any(significant):
            logger.warning(
                f"Density for rates {mix.params.rates} is negative beyond round-off "
                f"at {np.count_nonzero(significant)} point(s); clamped to 0"
            )
        values = np.maximum(values, 0.0)
    return _finish(values.reshape(t_arr.shape), scalar)


def hypoxg_cdf(mix: MixtureRepresentation, t: ArrayLike) -> ArrayLike:
    t_arr = np.asarray(t, dtype=float)
    flat = np.atleast_1d(t_arr)
    values = compensated_sum(_component_terms(mix, flat, erlang_cdf))
    values = np.where(flat <= 0, 0.0, np.clip(values, 0.0, 1.0))
    return _finish(values.reshape(t_arr.shape), t_arr.ndim == 0)


def hypoxg_reliability(mix: MixtureRepresentation, t: ArrayLike) -> ArrayLike:
    """Survival sum_ik R_ik (1 - F_Erl(4-k, theta_i)(t)), evaluated through the tail-accurate sf."""
    t_arr = np.asarray(t, dtype=float)
    flat = np.atleast_1d(t_arr)
    values = compensated_sum(_component_terms(mix, flat, erlang_sf))
    values = np.where(flat <= 0, 1.0, np.clip(values, 0.0, 1.0))
    return _finish(values.reshape(t_arr.shape), t_arr.ndim == 0)


hypoxg_sf = hypoxg_reliability


def hypoxg_hazard(mix: MixtureRepresentation, t: ArrayLike) -> ArrayLike:
    """Hazard sum R_ik h_Y R_Y / sum R_ik R_Y, i.e. pdf / reliability."""
    t_arr = np.asarray(t, dtype=float)
    reliability = np.atleast_1d(hypoxg_reliability(mix, t_arr))
    if np.any(reliability <= 0):
        bad = np.atleast_1d(t_arr)[reliability <= 0]
        raise NumericError(
            f"Reliability underflows to 0 at t={bad.min():.6g}; hazard is undefined that deep in the tail"
        )
    density = np.atleast_1d(hypoxg_pdf(mix, t_arr))
    return _finish((density / reliability).reshape(t_arr.shape), t_arr.ndim == 0)


def hypoxg_cumulative_hazard(mix: MixtureRepresentation, t: ArrayLike) -> ArrayLike:
    t_arr = np.asarray(t, dtype=float)
    reliability = np.atleast_1d(hypoxg_reliability(mix, t_arr))
    if np.any(reliability <= 0):
        raise NumericError("Reliability underflows to 0; cumulative hazard is infinite")
    return _finish((-np.log(reliability)).reshape(t_arr.shape), t_arr.ndim == 0)


def hypoxg_mgf(mix: MixtureRepresentation, t: ArrayLike) -> ArrayLike:
    """MGF sum_ik R_ik theta_i^(4-k)/(theta_i - t)^(4-k), defined for t < min theta."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr >= mix.params.min_rate):
        raise NumericError(
            f"HypoXG MGF diverges for t >= min rate ({mix.params.min_rate}); got t={np.max(t_arr)}"
        )
    values = _transform_sum(mix, np.atleast_1d(t_arr).ravel())
    return _finish(values.reshape(t_arr.shape), t_arr.ndim == 0)


def hypoxg_laplace(mix: MixtureRepresentation, s: ArrayLike) -> ArrayLike:
    """Laplace transform of the density, defined for s > -min theta."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr <= -mix.params.min_rate):
        raise NumericError(
            f"HypoXG Laplace transform diverges for s <= -min rate ({-mix.params.min_rate})"
        )
    values = _transform_sum(mix, -np.atleast_1d(s_arr).ravel())
    return _finish(values.reshape(s_arr.shape), s_arr.ndim == 0)


def product_mgf(theta: ParamVector, t: ArrayLike) -> ArrayLike:
    """MGF as the product of the independent XGamma factors."""
    t_arr = np.asarray(t, dtype=float)
    values = np.ones_like(t_arr)
    for rate in theta:
        values = values * np.asarray(xgamma_mgf(XGammaParams(rate), t_arr))
    return _finish(values, t_arr.ndim == 0)


def product_laplace(theta: ParamVector, s: ArrayLike) -> ArrayLike:
    s_arr = np.asarray(s, dtype=float)
    values = np.ones_like(s_arr)
    for rate in theta:
        values = values * np.asarray(xgamma_laplace(XGammaParams(rate), s_arr))
    return _finish(values, s_arr.ndim == 0)


def hypoxg_moment(mix: MixtureRepresentation, r: int) -> float:
    """Raw moment of order r: sum_ik R_ik E[Y_ik^r]."""
    if int(r) != r or r < 1:
        raise NumericError(f"Moment order must be a positive integer, got {r!r}")
    return math.fsum(c.weight * erlang_moment(c.erlang, int(r)) for c in mix.components)


def hypoxg_mean(mix: MixtureRepresentation) -> float:
    return hypoxg_moment(mix, 1)


def hypoxg_variance(mix: MixtureRepresentation) -> float:
    mean = hypoxg_moment(mix, 1)
    return hypoxg_moment(mix, 2) - mean * mean


def upper_quantile(mix: MixtureRepresentation, tail: float = TAIL_PROBABILITY) -> float:
    """Point beyond which at most ``tail`` probability remains, by bisection on the survival function."""
    lower, upper = 0.0, 1.0 / mix.params.min_rate
    while hypoxg_reliability(mix, upper) > tail:
        lower, upper = upper, upper * 2.0
    for _ in range(200):
        middle = 0.5 * (lower + upper)
        if hypoxg_reliability(mix, middle) > tail:
            lower = middle
        else:
            upper = middle
        if upper - lower <= 1e-12 * upper:
            break
    return upper
