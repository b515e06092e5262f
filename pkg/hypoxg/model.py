"""HypoXG distribution object: one parameter vector, its mixture and every derived function."""

from functools import cached_property
from typing import Iterable, Union

import numpy as np

from . import convolution as conv
from .convolution import MixtureRepresentation, ParamVector
from .distributions import ArrayLike
from .oracle import SampleBatch, mc_sample_sum, quantile


class HypoXG:
    """Sum of independent XGamma variables with distinct rates."""

    def __init__(self, rates: Union[ParamVector, Iterable[float]]):
        self.params = rates if isinstance(rates, ParamVector) else ParamVector.of(rates)

    def __repr__(self) -> str:
        return f"HypoXG{self.params.rates}"

    @cached_property
    def mixture(self) -> MixtureRepresentation:
        return conv.build_mixture(self.params)

    @property
    def rates(self):
        return self.params.rates

    def pdf(self, t: ArrayLike) -> ArrayLike:
        return conv.hypoxg_pdf(self.mixture, t)

    def cdf(self, t: ArrayLike) -> ArrayLike:
        return conv.hypoxg_cdf(self.mixture, t)

    def sf(self, t: ArrayLike) -> ArrayLike:
        return conv.hypoxg_reliability(self.mixture, t)

    reliability = sf

    def hazard(self, t: ArrayLike) -> ArrayLike:
        return conv.hypoxg_hazard(self.mixture, t)

    def cumulative_hazard(self, t: ArrayLike) -> ArrayLike:
        return conv.hypoxg_cumulative_hazard(self.mixture, t)

    def mgf(self, t: ArrayLike) -> ArrayLike:
        return conv.hypoxg_mgf(self.mixture, t)

    def laplace(self, s: ArrayLike) -> ArrayLike:
        return conv.hypoxg_laplace(self.mixture, s)

    def moment(self, r: int) -> float:
        return conv.hypoxg_moment(self.mixture, r)

    @property
    def mean(self) -> float:
        return conv.hypoxg_mean(self.mixture)

    @property
    def variance(self) -> float:
        return conv.hypoxg_variance(self.mixture)

    def quantile(self, p: float) -> float:
        return quantile(self.cdf, p)

    def upper_quantile(self, tail: float = conv.TAIL_PROBABILITY) -> float:
        return conv.upper_quantile(self.mixture, tail)

    def sample(self, n_samples: int, seed: int = 0, streams: int = 1, workers: int = 1) -> SampleBatch:
        return mc_sample_sum(self.params, n_samples, seed, streams=streams, workers=workers)

    def log_pdf(self, t: ArrayLike) -> ArrayLike:
        with np.errstate(divide='ignore'):
            return np.log(self.pdf(t))
