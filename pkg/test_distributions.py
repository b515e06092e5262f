"""
Tests for the Exponential, Erlang and XGamma primitives
"""
import math
import unittest

import numpy as np
from scipy import integrate

from hypoxg.distributions import (
    ErlangParams, XGammaParams, erlang_pdf, erlang_cdf, erlang_sf, erlang_mgf,
    erlang_laplace, erlang_moment, xgamma_pdf, xgamma_cdf, xgamma_sf, xgamma_mgf,
    xgamma_laplace, xgamma_mean, xgamma_variance, xgamma_rate_for_mean,
    xgamma_sample, exponential_sample, make_rng,
)
from hypoxg.errors import NumericError
from hypoxg.oracle import adaptive_quadrature, ks_distance


def quad(f, a, b):
    return integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-13, limit=200)[0]


class TestParams(unittest.TestCase):
    def test_erlang_params_validation(self):
        """Shape must be a positive integer and rate positive and finite"""
        ErlangParams(3, 0.5)
        for shape, rate in [(0, 1.0), (1.5, 1.0), (2, 0.0), (2, -1.0), (2, math.inf), (2, math.nan)]:
            with self.assertRaises(NumericError):
                ErlangParams(shape, rate)

    def test_xgamma_params_validation(self):
        """XGamma rate must be positive and finite"""
        with self.assertRaises(NumericError):
            XGammaParams(0.0)
        with self.assertRaises(ValueError):
            XGammaParams(-2.0)

    def test_mixing_proportions(self):
        """pi_1 = theta / (1 + theta) and the two weights add to one"""
        pi_1, pi_2 = XGammaParams(3.0).mixing
        self.assertAlmostEqual(pi_1, 0.75, places=15)
        self.assertAlmostEqual(pi_2, 0.25, places=15)


class TestErlang(unittest.TestCase):
    def test_pdf_values(self):
        """Density at the origin, on the negative axis and at a hand-computed point"""
        self.assertEqual(erlang_pdf(ErlangParams(1, 1.0), 0.0), 1.0)
        self.assertEqual(erlang_pdf(ErlangParams(3, 2.0), -0.5), 0.0)
        self.assertAlmostEqual(erlang_pdf(ErlangParams(2, 1.0), 1.0), math.exp(-1.0), places=15)

    def test_pdf_shape_two_is_self_convolution(self):
        """Erlang(2) density equals the exponential density convolved with itself"""
        expo = ErlangParams(1, 1.0)
        convolved = quad(lambda x: erlang_pdf(expo, x) * erlang_pdf(expo, 1.0 - x), 0.0, 1.0)
        self.assertAlmostEqual(erlang_pdf(ErlangParams(2, 1.0), 1.0), convolved, places=12)

    def test_pdf_underflow_floor(self):
        """Beyond theta t = 700 the density is reported as exactly zero"""
        self.assertEqual(erlang_pdf(ErlangParams(3, 1.0), 701.0), 0.0)
        self.assertEqual(erlang_cdf(ErlangParams(3, 1.0), 701.0), 1.0)
        self.assertEqual(erlang_sf(ErlangParams(3, 1.0), 701.0), 0.0)

    def test_pdf_accepts_arrays(self):
        """Array input gives elementwise values"""
        t = np.array([-1.0, 0.0, 1.0, 2.0])
        values = erlang_pdf(ErlangParams(1, 2.0), t)
        np.testing.assert_allclose(values, [0.0, 2.0, 2.0 * math.exp(-2.0), 2.0 * math.exp(-4.0)], rtol=1e-15)

    def test_cdf_values(self):
        """Distribution function at zero and at the exponential median"""
        for shape in (1, 2, 3):
            self.assertEqual(erlang_cdf(ErlangParams(shape, 1.7), 0.0), 0.0)
        self.assertAlmostEqual(erlang_cdf(ErlangParams(1, 1.0), math.log(2.0)), 0.5, places=15)

    def test_cdf_matches_quadrature(self):
        """Poisson-sum recurrence agrees with integrating the density"""
        p = ErlangParams(3, 1.0)
        expected = adaptive_quadrature(lambda x: erlang_pdf(p, x), 0.0, 10.0, 1e-12)
        self.assertAlmostEqual(erlang_cdf(p, 10.0), expected, delta=1e-10)

    def test_cdf_grid_against_quadrature(self):
        """Shapes 1-3, rates 0.1-10 and t from 0.1 to 20"""
        for shape in (1, 2, 3):
            for rate in (0.1, 1.0, 10.0):
                p = ErlangParams(shape, rate)
                for t in (0.1, 1.0, 5.0, 20.0):
                    expected = quad(lambda x: erlang_pdf(p, x), 0.0, t)
                    self.assertAlmostEqual(erlang_cdf(p, t), expected, delta=1e-9,
                                           msg=f"shape={shape} rate={rate} t={t}")

    def test_sf_complements_cdf(self):
        """Survival function is 1 - cdf and stays accurate in the tail"""
        p = ErlangParams(3, 2.0)
        t = np.linspace(0.0, 30.0, 61)
        np.testing.assert_allclose(erlang_sf(p, t), 1.0 - erlang_cdf(p, t), atol=1e-15)
        self.assertAlmostEqual(erlang_sf(p, 100.0) / (math.exp(-200.0) * (1 + 200 + 200 ** 2 / 2)), 1.0, places=12)

    def test_density_integrates_to_one(self):
        """Normalization for rates across four orders of magnitude"""
        for shape in (1, 2, 3):
            for rate in (0.01, 0.3, 1.0, 7.0, 100.0):
                p = ErlangParams(shape, rate)
                total = adaptive_quadrature(lambda x: erlang_pdf(p, x), 0.0, 80.0 / rate, 1e-10)
                self.assertAlmostEqual(total, 1.0, delta=1e-8)

    def test_mgf(self):
        """MGF at zero, two closed-form points and the divergence boundary"""
        self.assertEqual(erlang_mgf(ErlangParams(4, 3.0), 0.0), 1.0)
        self.assertAlmostEqual(erlang_mgf(ErlangParams(1, 2.0), 1.0), 2.0, places=15)
        self.assertAlmostEqual(erlang_mgf(ErlangParams(2, 1.0), -1.0), 0.25, places=15)
        with self.assertRaises(NumericError):
            erlang_mgf(ErlangParams(2, 1.0), 1.0)
        with self.assertRaises(NumericError):
            erlang_mgf(ErlangParams(2, 1.0), np.array([0.0, 1.5]))

    def test_mgf_monte_carlo(self):
        """E[e^(-X)] for Erlang(2, 1) estimated from seeded exponential draws"""
        rng = make_rng(11)
        draws = exponential_sample(1.0, rng, (200000, 2)).sum(axis=1)
        estimate = np.exp(-draws)
        tolerance = 4 * estimate.std() / math.sqrt(len(estimate))
        self.assertAlmostEqual(estimate.mean(), erlang_mgf(ErlangParams(2, 1.0), -1.0), delta=tolerance)

    def test_laplace(self):
        """Laplace transform is the MGF at -s and diverges at s = -theta"""
        p = ErlangParams(3, 2.0)
        self.assertEqual(erlang_laplace(p, 0.0), 1.0)
        self.assertAlmostEqual(erlang_laplace(p, 0.5), erlang_mgf(p, -0.5), places=15)
        with self.assertRaises(NumericError):
            erlang_laplace(p, -2.0)

    def test_moments(self):
        """Raw moments (n+k-1)! / ((n-1)! theta^k)"""
        self.assertAlmostEqual(erlang_moment(ErlangParams(1, 2.0), 1), 0.5, places=15)
        self.assertAlmostEqual(erlang_moment(ErlangParams(3, 1.0), 1), 3.0, places=15)
        self.assertAlmostEqual(erlang_moment(ErlangParams(2, 1.0), 2), 6.0, places=15)
        with self.assertRaises(NumericError):
            erlang_moment(ErlangParams(2, 1.0), 0)

    def test_moment_matches_mgf_derivative(self):
        """Second moment from a central difference of the MGF at zero"""
        p = ErlangParams(2, 1.0)
        h = 1e-3
        second = (erlang_mgf(p, h) - 2 * erlang_mgf(p, 0.0) + erlang_mgf(p, -h)) / h ** 2
        self.assertAlmostEqual(second, erlang_moment(p, 2), delta=1e-4)


class TestXGamma(unittest.TestCase):
    def test_pdf_values(self):
        """Density at the origin and on the negative axis"""
        self.assertAlmostEqual(xgamma_pdf(XGammaParams(1.0), 0.0), 0.5, places=15)
        self.assertEqual(xgamma_pdf(XGammaParams(2.0), -0.1), 0.0)

    def test_pdf_is_exponential_erlang_mixture(self):
        """Density equals pi_1 Exp(theta) + pi_2 Erlang(3, theta) to round-off"""
        for rate in (0.05, 0.5, 1.0, 3.0, 40.0):
            p = XGammaParams(rate)
            pi_1, pi_2 = p.mixing
            t = np.linspace(0.0, 30.0 / rate, 301)
            mixture = pi_1 * erlang_pdf(ErlangParams(1, rate), t) + pi_2 * erlang_pdf(ErlangParams(3, rate), t)
            np.testing.assert_allclose(xgamma_pdf(p, t), mixture, rtol=1e-14, atol=0.0)

    def test_pdf_integrates_to_one(self):
        """Normalization over [0, inf) for rates 0.01 to 100"""
        for rate in (0.01, 1.0, 100.0):
            p = XGammaParams(rate)
            total = adaptive_quadrature(lambda x: xgamma_pdf(p, x), 0.0, 80.0 / rate, 1e-11)
            self.assertAlmostEqual(total, 1.0, delta=1e-10 if rate == 1.0 else 1e-8)

    def test_cdf(self):
        """Distribution function at zero, in the far tail and against quadrature"""
        p = XGammaParams(1.0)
        self.assertEqual(xgamma_cdf(p, 0.0), 0.0)
        self.assertAlmostEqual(xgamma_cdf(p, 1e4), 1.0, places=15)
        expected = adaptive_quadrature(lambda x: xgamma_pdf(p, x), 0.0, 2.0, 1e-13)
        self.assertAlmostEqual(xgamma_cdf(p, 2.0), expected, delta=1e-10)

    def test_cdf_closed_form(self):
        """1 - e^(-theta t)(1 + theta + theta t + (theta t)^2 / 2) / (1 + theta)"""
        theta = 0.7
        for t in (0.5, 2.0, 9.0):
            x = theta * t
            expected = 1 - math.exp(-x) * (1 + theta + x + x * x / 2) / (1 + theta)
            self.assertAlmostEqual(xgamma_cdf(XGammaParams(theta), t), expected, places=14)

    def test_cdf_nondecreasing(self):
        """CDF never decreases along a fine grid"""
        values = xgamma_cdf(XGammaParams(0.4), np.linspace(0.0, 60.0, 5001))
        self.assertTrue(np.all(np.diff(values) >= 0))
        np.testing.assert_allclose(xgamma_sf(XGammaParams(0.4), 3.0), 1 - xgamma_cdf(XGammaParams(0.4), 3.0))

    def test_mgf(self):
        """MGF equals one at zero and diverges at t = theta"""
        self.assertAlmostEqual(xgamma_mgf(XGammaParams(1.0), 0.0), 1.0, places=15)
        self.assertAlmostEqual(xgamma_mgf(XGammaParams(2.0), 0.0), 1.0, places=15)
        self.assertAlmostEqual(xgamma_mgf(XGammaParams(1.0), -1.0), 5.0 / 16.0, places=15)
        with self.assertRaises(NumericError):
            xgamma_mgf(XGammaParams(1.0), 1.0)
        self.assertAlmostEqual(xgamma_laplace(XGammaParams(1.0), 1.0), 5.0 / 16.0, places=15)

    def test_mgf_monte_carlo(self):
        """E[e^(-X)] for X ~ XG(1) from one million seeded draws"""
        draws = xgamma_sample(XGammaParams(1.0), make_rng(2024), size=1_000_000)
        estimate = np.exp(-draws)
        tolerance = 3 * estimate.std() / math.sqrt(len(estimate))
        self.assertAlmostEqual(estimate.mean(), xgamma_mgf(XGammaParams(1.0), -1.0), delta=tolerance)

    def test_mean_and_variance(self):
        """Mean (theta+3)/(theta(1+theta)) and variance against quadrature"""
        self.assertAlmostEqual(xgamma_mean(XGammaParams(1.0)), 2.0, places=15)
        self.assertAlmostEqual(xgamma_mean(XGammaParams(3.0)), 0.5, places=15)
        p = XGammaParams(3.0)
        first = quad(lambda x: x * xgamma_pdf(p, x), 0.0, 40.0)
        second = quad(lambda x: x * x * xgamma_pdf(p, x), 0.0, 40.0)
        self.assertAlmostEqual(first, 0.5, places=10)
        self.assertAlmostEqual(xgamma_variance(p), second - first ** 2, places=10)

    def test_mean_from_mgf_derivative(self):
        """Mean equals the derivative of the MGF at zero"""
        p = XGammaParams(1.0)
        h = 1e-5
        derivative = (xgamma_mgf(p, h) - xgamma_mgf(p, -h)) / (2 * h)
        self.assertAlmostEqual(derivative, xgamma_mean(p), delta=1e-8)

    def test_mean_decreases_with_rate(self):
        """Mean falls towards zero as the rate grows"""
        means = [xgamma_mean(XGammaParams(r)) for r in (1.0, 2.0, 10.0, 1e3, 1e6)]
        self.assertTrue(all(a > b for a, b in zip(means, means[1:])))
        self.assertLess(means[-1], 1e-5)

    def test_rate_for_mean_round_trip(self):
        """Moment matching inverts the mean formula"""
        for mean in (0.01, 0.5, 2.0, 36.1, 1e3):
            self.assertAlmostEqual(xgamma_mean(XGammaParams(xgamma_rate_for_mean(mean))) / mean, 1.0, places=12)


class TestSampling(unittest.TestCase):
    def test_sampling_is_deterministic(self):
        """Same seed reproduces the same draws"""
        first = xgamma_sample(XGammaParams(1.0), make_rng(5), size=100)
        second = xgamma_sample(XGammaParams(1.0), make_rng(5), size=100)
        np.testing.assert_array_equal(first, second)

    def test_scalar_draw_matches_batch_of_one(self):
        """A scalar draw consumes the stream like a batch of size one"""
        scalar = xgamma_sample(XGammaParams(1.0), make_rng(9))
        batch = xgamma_sample(XGammaParams(1.0), make_rng(9), size=1)
        self.assertEqual(scalar, batch[0])

    def test_inverse_transform_exponential(self):
        """Exponential draws are -ln(1-u)/theta of the uniform stream"""
        u = make_rng(3).random(5)
        draws = exponential_sample(2.0, make_rng(3), 5)
        np.testing.assert_allclose(draws, -np.log1p(-u) / 2.0, rtol=1e-15)

    def test_sample_mean(self):
        """Mean of a million XG(1) draws lies within 3 sigma of 2"""
        draws = xgamma_sample(XGammaParams(1.0), make_rng(42), size=1_000_000)
        sigma = math.sqrt(xgamma_variance(XGammaParams(1.0)))
        self.assertAlmostEqual(draws.mean(), 2.0, delta=3 * sigma / math.sqrt(len(draws)))
        self.assertTrue(np.all(draws >= 0))

    def test_sample_ks_distance(self):
        """ECDF of a million XG(0.5) draws is within 0.005 of the closed-form CDF"""
        p = XGammaParams(0.5)
        draws = xgamma_sample(p, make_rng(7), size=1_000_000)
        report = ks_distance(draws, lambda t: xgamma_cdf(p, t))
        self.assertLess(report.ks_distance, 0.005)
        self.assertLess(report.ks_distance, 1.63 / math.sqrt(len(draws)))


if __name__ == '__main__':
    unittest.main()
