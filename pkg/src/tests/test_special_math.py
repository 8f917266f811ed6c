import json
import math

import numpy as np

from ldagan.errors import LdaganException, ResultCode
from ldagan.special_math import (
    RngStream,
    as_simplex,
    digamma,
    log_gamma,
    normalize_log_weights,
    sample_categorical,
    sample_dirichlet
)
from tests.utils import TestUtils

EULER_GAMMA = 0.5772156649015329

# Chi-square critical value at p = 0.001, 3 degrees of freedom
CHI2_DF3_P001 = 16.266


class TestSpecialMath(TestUtils):
    def test_digamma_known_values(self):
        assert abs(digamma(1.0) - (-EULER_GAMMA)) <= 1e-10
        assert abs(digamma(2.0) - (1.0 - EULER_GAMMA)) <= 1e-10
        assert abs(digamma(0.5) - (-EULER_GAMMA - 2.0 * math.log(2.0))) <= 1e-10
        assert abs(digamma(3.0) - (1.5 - EULER_GAMMA)) <= 1e-10

    def test_digamma_recurrence(self):
        # psi(x + 1) = psi(x) + 1/x
        for x in np.linspace(0.1, 20.0, 50):
            assert abs(digamma(x + 1.0) - digamma(x) - 1.0 / x) <= 1e-10

    def test_digamma_derivative_of_log_gamma(self):
        h = 1e-5
        for x in [0.3, 1.0, 2.5, 7.0, 15.0]:
            numeric = (math.lgamma(x + h) - math.lgamma(x - h)) / (2.0 * h)
            assert abs(digamma(x) - numeric) <= 1e-6

    def test_digamma_array(self):
        values = digamma(np.array([1.0, 2.0, 3.0]))
        assert isinstance(values, np.ndarray)
        assert np.allclose(values, [-EULER_GAMMA, 1.0 - EULER_GAMMA, 1.5 - EULER_GAMMA], atol=1e-10, rtol=0)
        assert isinstance(digamma(1.0), float)

    def test_log_gamma_known_values(self):
        assert abs(log_gamma(0.5) - 0.5 * math.log(math.pi)) <= 1e-10
        assert abs(log_gamma(1.0)) <= 1e-10
        assert abs(log_gamma(2.0)) <= 1e-10
        assert abs(log_gamma(5.0) - math.log(24.0)) <= 1e-10

    def test_log_gamma_grid(self):
        for x in np.linspace(0.05, 100.0, 50):
            assert abs(log_gamma(x) - math.lgamma(x)) <= 1e-10 * max(1.0, abs(math.lgamma(x)))

    def test_log_gamma_large(self):
        # Absolute precision is limited by the value magnitude
        for x in [1e3, 1e6, 1e9]:
            assert abs(log_gamma(x) - math.lgamma(x)) <= 1e-12 * abs(math.lgamma(x))

    def test_domain_errors(self):
        for f in [digamma, log_gamma]:
            for x in [0.0, -1.0, float("nan"), float("inf")]:
                try:
                    f(x)
                    raise AssertionError("Shouldn't get here")
                except LdaganException as e:
                    assert e.rc == ResultCode.ERROR_DOMAIN

    def test_normalize_log_weights(self):
        w = normalize_log_weights([0.0, math.log(3.0)])
        assert np.allclose(w, [0.25, 0.75], atol=1e-15)

        # Shift invariance, and large values
        assert np.allclose(normalize_log_weights([1000.0, 1000.0 + math.log(3.0)]), w, atol=1e-12)
        assert np.allclose(normalize_log_weights([-1000.0, -1000.0 + math.log(3.0)]), w, atol=1e-12)

        # -inf entries get a zero weight
        assert np.array_equal(normalize_log_weights([-np.inf, 0.0]), [0.0, 1.0])

        # Stacked rows
        rows = normalize_log_weights([[0.0, 0.0], [0.0, math.log(3.0)]])
        assert rows.shape == (2, 2)
        assert np.allclose(rows[0], [0.5, 0.5])

    def test_normalize_log_weights_errors(self):
        for logw in [[-np.inf, -np.inf], [np.nan, 0.0], [np.inf, 0.0]]:
            try:
                normalize_log_weights(logw)
                raise AssertionError("Shouldn't get here")
            except LdaganException as e:
                assert e.rc == ResultCode.ERROR_DOMAIN

    def test_as_simplex(self):
        assert np.array_equal(as_simplex([0.25, 0.75]), [0.25, 0.75])
        for p, rc in [([0.5, 0.6], ResultCode.ERROR_DOMAIN), ([-0.5, 1.5], ResultCode.ERROR_DOMAIN), (1.0, ResultCode.ERROR_SHAPE)]:
            try:
                as_simplex(p)
                raise AssertionError("Shouldn't get here")
            except LdaganException as e:
                assert e.rc == rc

    def test_rng_determinism(self):
        a = RngStream(123)
        b = RngStream(123)
        assert np.array_equal(a.normal(10), b.normal(10))
        assert np.array_equal(a.uniform(-1.0, 1.0, (3, 2)), b.uniform(-1.0, 1.0, (3, 2)))

        # Other seed, or other sub-stream key: other draws
        assert not np.array_equal(RngStream(123).normal(10), RngStream(124).normal(10))
        assert not np.array_equal(RngStream(123).normal(10), RngStream(123, 1).normal(10))
        assert np.array_equal(RngStream(123, 1).normal(10), RngStream(123, 1).normal(10))

    def test_rng_state(self):
        a = RngStream(7, 3)
        a.normal(5)
        state = json.loads(json.dumps(a.state))
        b = RngStream.from_state(state)
        assert b.seed == 7
        assert b.keys == (3,)
        assert np.array_equal(a.normal(20), b.normal(20))
        assert np.array_equal(a.standard_gamma(np.full(4, 0.5)), b.standard_gamma(np.full(4, 0.5)))

    def test_dirichlet_moments(self):
        alpha = np.array([2.0, 3.0, 5.0])
        a0 = np.sum(alpha)
        n = 100000
        pi = sample_dirichlet(alpha, RngStream(42), size=n)
        assert pi.shape == (n, 3)
        assert np.allclose(np.sum(pi, axis=1), 1.0, atol=1e-12)

        mean = alpha / a0
        var = alpha * (a0 - alpha) / (a0 * a0 * (a0 + 1.0))
        se = np.sqrt(var / n)
        assert np.all(np.abs(np.mean(pi, axis=0) - mean) <= 5 * se)
        assert np.all(np.abs(np.var(pi, axis=0) / var - 1.0) <= 0.03)

    def test_dirichlet_small_alpha(self):
        # Tiny concentrations: rows stay on the simplex (mostly one-hot)
        pi = sample_dirichlet(np.full(4, 0.01), RngStream(3), size=1000)
        assert np.all(np.isfinite(pi))
        assert np.allclose(np.sum(pi, axis=1), 1.0, atol=1e-12)
        assert np.mean(np.max(pi, axis=1) > 0.99) > 0.8

    def test_dirichlet_single(self):
        pi = sample_dirichlet([1.0, 1.0], RngStream(0))
        assert pi.shape == (2,)
        assert abs(np.sum(pi) - 1.0) <= 1e-12

    def test_dirichlet_errors(self):
        for alpha, rc in [([1.0, 0.0], ResultCode.ERROR_DOMAIN), ([[1.0, 1.0]], ResultCode.ERROR_SHAPE)]:
            try:
                sample_dirichlet(alpha, RngStream(0))
                raise AssertionError("Shouldn't get here")
            except LdaganException as e:
                assert e.rc == rc

    def test_categorical_frequencies(self):
        p = np.array([0.1, 0.2, 0.3, 0.4])
        n = 100000
        ids = sample_categorical(p, RngStream(5), size=n)
        counts = np.bincount(ids, minlength=4)
        chi2 = float(np.sum((counts - n * p) ** 2 / (n * p)))
        assert chi2 < CHI2_DF3_P001

    def test_categorical_zero_mass(self):
        ids = sample_categorical([0.5, 0.0, 0.5, 0.0], RngStream(1), size=10000)
        assert set(np.unique(ids).tolist()) == {0, 2}
        assert sample_categorical([0.0, 1.0], RngStream(1)) == 1

    def test_categorical_rows(self):
        # One draw per simplex row
        p = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
        assert sample_categorical(p, RngStream(0)).tolist() == [0, 2, 1]
