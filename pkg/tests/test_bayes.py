import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from designreg import BayesModel, posterior_causal_n, posterior_descriptive_n, posterior_super_causal

from oracles import simulate_finite_population_posteriors


def model(**kw):
    base = dict(sigma1=1.0, sigma0=1.0, kappa=0.0, n=16, n1=8, n0=8, N1=4, N0=4, ybar1=3.0, ybar0=1.0)
    base.update(kw)
    return BayesModel(**base)


class TestSuperPopulation:
    def test_plug_in(self):
        p = posterior_super_causal(model())
        assert (p.mean, p.variance) == (2.0, 0.5)

    def test_large_samples(self):
        assert posterior_super_causal(model(n=2 * 10**9, n1=10**9, n0=10**9, N1=10**8, N0=10**8)).variance < 1e-7

    def test_degenerate(self):
        assert posterior_super_causal(model(sigma1=0.0, sigma0=0.0)).variance == 0.0


class TestDescriptive:
    def test_census(self):
        assert posterior_descriptive_n(model(n=8, n1=4, n0=4)).variance == 0.0

    def test_plug_in(self):
        assert posterior_descriptive_n(model()).variance == pytest.approx(0.25)

    def test_large_population_limit(self):
        big = model(n=2 * 10**9, n1=10**9, n0=10**9)
        assert posterior_descriptive_n(big).variance == pytest.approx(posterior_super_causal(big).variance, rel=1e-8)

    @given(st.integers(1, 20), st.integers(1, 20), st.floats(0, 5), st.floats(0, 5))
    def test_dominated_and_monotone(self, N1, N0, s1, s0):
        m = model(sigma1=s1, sigma0=s0, N1=N1, N0=N0, n=50, n1=25, n0=25)
        v = posterior_descriptive_n(m).variance
        assert v <= posterior_super_causal(m).variance + 1e-12
        if N1 < 20:
            assert posterior_descriptive_n(model(sigma1=s1, sigma0=s0, N1=N1 + 1, N0=N0, n=50, n1=25, n0=25)).variance <= v + 1e-12


class TestCausal:
    def test_constant_effects_special_case(self):
        for n in (8, 9, 50, 1000):
            m = model(kappa=1.0, n=n, n1=n - 4, n0=4)
            assert posterior_causal_n(m).variance == pytest.approx(0.5, abs=1e-12)

    def test_census_kappa_zero(self):
        m = model(n=8, n1=4, n0=4)
        N1 = N0 = 4
        n = 8
        expected = (N0 + N1) / n**2 + (1 - N1 / n) ** 2 / N1 + (1 - N0 / n) ** 2 / N0
        assert posterior_causal_n(m).variance == pytest.approx(expected, abs=1e-15)

    def test_large_population_limit(self):
        m = model(kappa=0.3, sigma1=2.0, n=10**9, n1=5 * 10**8, n0=5 * 10**8)
        assert posterior_causal_n(m).variance == pytest.approx(4 / 4 + 1 / 4, abs=1e-6)

    def test_means_coincide(self):
        m = model(ybar1=1.25, ybar0=-0.5, kappa=-0.4)
        means = {f(m).mean for f in (posterior_super_causal, posterior_descriptive_n, posterior_causal_n)}
        assert means == {1.75}

    def test_zero_sigma_is_finite(self):
        v = posterior_causal_n(model(sigma1=0.0, sigma0=1.0, kappa=0.5)).variance
        assert np.isfinite(v) and v >= 0

    @pytest.mark.parametrize(
        "kw",
        [
            dict(kappa=0.0),
            dict(kappa=0.6, sigma1=2.0, sigma0=0.5, n=30, n1=12, n0=18, N1=5, N0=7),
            dict(kappa=-0.8, sigma1=1.0, sigma0=3.0, n=12, n1=6, n0=6, N1=6, N0=6),
        ],
    )
    def test_against_simulation(self, kw):
        m = model(**kw)
        causal, descr = simulate_finite_population_posteriors(m, 10**6, np.random.default_rng(7))
        for draws, post in ((causal, posterior_causal_n(m)), (descr, posterior_descriptive_n(m))):
            M = len(draws)
            se_mean = np.sqrt(post.variance / M)
            se_var = post.variance * np.sqrt(2.0 / (M - 1))
            assert abs(draws.mean() - post.mean) <= 3 * se_mean + 1e-12
            assert abs(draws.var(ddof=1) - post.variance) <= 3 * se_var + 1e-12


class TestModelValidation:
    @pytest.mark.parametrize(
        "kw",
        [dict(sigma1=-1.0), dict(kappa=1.5), dict(N1=0), dict(N1=9), dict(n=17)],
    )
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            model(**kw)
