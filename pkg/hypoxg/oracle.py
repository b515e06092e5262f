"""
Validation Oracles
Independent realizations of the HypoXG law used to check the closed form:
Monte Carlo sampling, numerical convolution, empirical CDF distances,
adaptive quadrature and quantile root-finding.
"""

import math
import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
from scipy import integrate, optimize

from .convolution import ParamVector, build_mixture
from .distributions import XGammaParams, make_rng, xgamma_pdf, xgamma_sample
from .errors import BudgetError, NumericError, SeparationError

logger = logging.getLogger(__name__)

QUADRATURE_LIMIT = 200
QUADRATURE_SPLITS = 16
MAX_DOUBLINGS = 200


@dataclass(frozen=True)
class SampleBatch:
    """Draws of S_n = sum_j X_j together with the seed and rates that produced them."""

    values: np.ndarray = field(repr=False)
    seed: int
    n_params: ParamVector

    def __len__(self) -> int:
        return len(self.values)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))


@dataclass(frozen=True)
class EcdfReport:
    ks_distance: float
    n_samples: int
    max_deviation_location: float


def _draw_sum(theta: ParamVector, count: int, rng: np.random.Generator) -> np.ndarray:
    total = np.zeros(count)
    for rate in theta:
        total += xgamma_sample(XGammaParams(rate), rng, size=count)
    return total


def mc_sample_sum(theta: ParamVector, n_samples: int, seed: int,
                  streams: int = 1, workers: int = 1) -> SampleBatch:
    """
    Simulate n_samples draws of the sum of independent XGamma(theta_j).

    With one stream the draws come from a single PCG64 generator seeded with
    ``seed``. With several streams the seed is spawned into independent
    child sequences, each stream fills a contiguous slice and the slices are
    concatenated in stream order, so the batch depends on (seed, streams) but
    never on ``workers``.
    """
    if n_samples < 1:
        raise NumericError(f"n_samples must be at least 1, got {n_samples}")

    if streams <= 1:
        values = _draw_sum(theta, n_samples, make_rng(seed))
        return SampleBatch(values, seed, theta)

    children = np.random.SeedSequence(seed).spawn(streams)
    sizes = [n_samples // streams + (1 if k < n_samples % streams else 0) for k in range(streams)]

    def run_stream(k: int) -> np.ndarray:
        return _draw_sum(theta, sizes[k], np.random.Generator(np.random.PCG64(children[k])))

    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        parts = list(executor.map(run_stream, range(streams)))

    logger.debug(f"Drew {n_samples} sums for rates {theta.rates} across {streams} streams")
    return SampleBatch(np.concatenate(parts), seed, theta)


def ecdf(values: Sequence[float]):
    """Sorted sample points and the empirical CDF just after each."""
    ordered = np.sort(np.asarray(values, dtype=float))
    heights = np.arange(1, len(ordered) + 1) / len(ordered)
    return ordered, heights


def _evaluate(cdf: Callable, points: np.ndarray) -> np.ndarray:
    try:
        values = np.asarray(cdf(points), dtype=float)
        if values.shape == points.shape:
            return values
    except (TypeError, ValueError):
        pass
    return np.array([float(cdf(x)) for x in points])


def ks_distance(batch: Union[SampleBatch, Sequence[float]], cdf: Callable) -> EcdfReport:
    """sup_t |ECDF(t) - F(t)|, checked at every sample point and its left limit."""
    values = batch.values if isinstance(batch, SampleBatch) else np.asarray(batch, dtype=float)
    if len(values) == 0:
        raise NumericError("KS distance needs a nonempty sample")

    ordered, heights = ecdf(values)
    model = _evaluate(cdf, ordered)
    count = len(ordered)
    upper = np.abs(heights - model)
    lower = np.abs(heights - 1.0 / count - model)
    gaps = np.maximum(upper, lower)
    worst = int(np.argmax(gaps))
    return EcdfReport(float(gaps[worst]), count, float(ordered[worst]))


def adaptive_quadrature(f: Callable[[float], float], a: float, b: float,
                        tol: float = 1e-10, limit: int = QUADRATURE_LIMIT) -> float:
    """
    Integral of f over [a, b] with estimated absolute error at most tol.

    Uses adaptive Gauss-Kronrod; when a single pass reports too large an
    error the interval is cut into equal pieces and each piece gets its
    share of the tolerance.
    """
    if b < a:
        raise NumericError(f"Quadrature bounds out of order: [{a}, {b}]")
    if tol <= 0:
        raise NumericError(f"Quadrature tolerance must be positive, got {tol}")
    if a == b:
        return 0.0

    with warnings.catch_warnings():
        warnings.simplefilter('ignore', integrate.IntegrationWarning)
        value, error = integrate.quad(f, a, b, epsabs=tol, epsrel=0.0, limit=limit)
        if error <= tol:
            return value

        edges = np.linspace(a, b, QUADRATURE_SPLITS + 1)
        pieces = [integrate.quad(f, lo, hi, epsabs=tol / QUADRATURE_SPLITS, epsrel=0.0, limit=limit)
                  for lo, hi in zip(edges, edges[1:])]

    value = math.fsum(piece[0] for piece in pieces)
    error = math.fsum(piece[1] for piece in pieces)
    if error > tol:
        raise BudgetError(
            f"Quadrature on [{a:.6g}, {b:.6g}] stopped at estimated error {error:.3g} > {tol:.3g}"
        )
    return value


def _rest_density(rates: Sequence[float], tol: float) -> Callable[[float], float]:
    if len(rates) == 1:
        params = XGammaParams(rates[0])
        return lambda t: xgamma_pdf(params, t)
    return lambda t: _convolve(rates, t, tol)


def _convolve(rates: Sequence[float], t: float, tol: float) -> float:
    if t <= 0:
        return 0.0
    head = XGammaParams(rates[0])
    rest = _rest_density(rates[1:], tol / 10.0)
    return adaptive_quadrature(lambda x: xgamma_pdf(head, x) * rest(t - x), 0.0, t, tol)


def convolve_pdf_quadrature(theta: ParamVector, t: float, tol: float = 1e-10) -> float:
    """Density of the sum at t by iterated 1-D convolution of XGamma densities."""
    if theta.n < 2:
        raise NumericError("Numerical convolution needs at least two rates")
    if t < 0:
        raise NumericError(f"Convolution density is evaluated at t >= 0, got {t}")
    return max(0.0, _convolve(theta.rates, float(t), tol))


def quantile(cdf: Callable[[float], float], p: float, tol: float = 1e-12) -> float:
    """
    Point t with F(t) = p for a continuous nondecreasing F on [0, inf).

    The bracket grows geometrically from [0, 1]; Brent's bisection/secant
    iteration then refines the root.
    """
    if not 0.0 < p < 1.0:
        raise NumericError(f"Quantile probability must lie in (0, 1), got {p}")

    lower, upper = 0.0, 1.0
    for _ in range(MAX_DOUBLINGS):
        if float(cdf(upper)) >= p:
            break
        lower, upper = upper, upper * 2.0
    else:
        raise NumericError(f"Could not bracket the {p} quantile: F({upper:.3g}) < {p}")

    root = optimize.brentq(lambda x: float(cdf(x)) - p, lower, upper,
                           xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(float(cdf(root)) - p) > tol:
        logger.debug(f"Quantile residual {abs(float(cdf(root)) - p):.3g} exceeds {tol:g} at p={p}")
    return root


def random_param_vectors(count: int, seed: int, sizes: Sequence[int] = (1, 2, 3, 4, 5),
                         low: float = 0.1, high: float = 10.0,
                         min_log_gap: float = 0.25) -> List[ParamVector]:
    """
    Seeded rate vectors with log-uniform rates, for randomized suites.

    Draws are redrawn until neighbouring rates differ by at least
    ``min_log_gap`` in log scale and the mixture passes its conditioning check.
    """
    rng = make_rng(seed)
    vectors = []
    while len(vectors) < count:
        n = int(rng.choice(sizes))
        rates = np.exp(rng.uniform(math.log(low), math.log(high), n))
        ordered = np.sort(np.log(rates))
        if n > 1 and np.min(np.diff(ordered)) < min_log_gap:
            continue
        theta = ParamVector.of(rates)
        try:
            build_mixture(theta)
        except SeparationError:
            continue
        vectors.append(theta)
    return vectors
