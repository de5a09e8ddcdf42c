import math

import numpy as np
import pytest
from scipy import integrate, special

from nonsensecorr import theory
from nonsensecorr.errors import NoPredictionError, OutOfRegimeError, ParameterError
from nonsensecorr.gaussian import build_covariance, Equicorrelation, FromEigenSpec, \
    sigma_squared_construction, spike_construction, summarize_tilde, tilde_spectrum
from nonsensecorr.theory import ab_cdf, ols_condition, predict_curie_weiss, predict_lattice

M_BETA2 = 0.957504024077181  # brentq root of m = tanh(2m)


def test_curie_weiss_examples():
    cov, corr = predict_curie_weiss(0.5, 0.9)
    assert cov.variance == 1.0 and corr.variance == 1.0
    cov, _ = predict_curie_weiss(2, 0.3)
    assert cov.variance == pytest.approx(1 - M_BETA2**2, abs=1e-12)
    assert cov.variance == pytest.approx(0.08318, abs=1e-5)
    cov, corr = predict_curie_weiss(2, 2)
    assert cov.variance == pytest.approx((1 - M_BETA2**2) ** 2, abs=1e-12)
    assert cov.variance == pytest.approx(0.006919, abs=1e-6)
    assert corr.variance == 1.0


def test_curie_weiss_variance_monotone():
    grid = np.linspace(0, 4, 41)
    v = np.array([[predict_curie_weiss(a, b)[0].variance for b in grid] for a in grid])
    assert np.all(np.diff(v, axis=0) <= 1e-15) and np.all(np.diff(v, axis=1) <= 1e-15)
    inside = grid <= 1
    assert np.all(v[np.ix_(inside, inside)] == 1.0)
    assert np.all(v[~inside, :] < 1) and np.all(v[:, ~inside] < 1)


def test_lattice_examples():
    cov, corr = predict_lattice(0, 0, 2)
    assert cov.variance == 1.0 and corr.variance == 1.0
    cov, corr = predict_lattice(0.5, 0.5, 2)
    assert cov.law == "unknown" and cov.direction == "inflated"
    cov, _ = predict_lattice(1.7, 0.2, 2)
    assert cov.direction == "inflated"
    assert theory.beta_critical(2) == pytest.approx(2 * math.log(1 + math.sqrt(2)), abs=1e-12)
    with pytest.raises(OutOfRegimeError):
        predict_lattice(1.8, 0.2, 2)
    with pytest.raises(OutOfRegimeError):
        predict_lattice(0.5, 0.5, 3)


def test_gaussian_predictions():
    cov, corr = theory.predict_gaussian(tilde_spectrum(build_covariance(Equicorrelation(0.5, 1000))))
    assert cov.variance == pytest.approx(0.25, rel=2e-3)
    assert corr.variance == pytest.approx(1.0, rel=2e-3)
    summ = tilde_spectrum(build_covariance(FromEigenSpec(sigma_squared_construction(1000, 4))))
    assert theory.predict_gaussian(summ)[1].variance == pytest.approx(4.0, rel=1e-9)
    summ = summarize_tilde(np.r_[200.0**2, np.full(199, 1e-6)])
    cov, corr = theory.predict_gaussian(summ)
    assert corr.law == "rademacher" and cov.law == "normal_times_chi"
    with pytest.raises(NoPredictionError):
        theory.predict_gaussian(summarize_tilde(np.r_[30.0, np.ones(99)]))


def test_spike_scale():
    summ = tilde_spectrum(build_covariance(FromEigenSpec(spike_construction(200))))
    cov, _ = theory.predict_gaussian(summ)
    assert cov.scale == pytest.approx(summ.tilde_eigs[0] / math.sqrt(200))


def test_ols_condition_constant():
    rep = ols_condition(lambda x: np.full_like(x, 3.0), lambda x: np.exp(x), 200)
    assert rep.verdict == "exact"
    assert rep.direction == "nominal"


def test_ols_condition_closed_forms():
    rep = ols_condition(lambda x: x**2, np.exp, 200)
    assert rep.int_fg == pytest.approx(math.e - 2, abs=1e-10)
    assert rep.int_f * rep.int_g == pytest.approx((math.e - 1) / 3, abs=1e-10)
    assert rep.verdict == "anticonservative"
    rep = ols_condition(lambda x: x**2, lambda x: np.exp(-x), 200)
    assert rep.int_fg == pytest.approx(2 - 5 / math.e, abs=1e-10)
    assert rep.int_f * rep.int_g == pytest.approx((1 - 1 / math.e) / 3, abs=1e-10)
    assert rep.verdict == "valid"


def test_ols_condition_against_adaptive_quadrature():
    f, g = (lambda x: np.sqrt(x)), (lambda x: np.cos(x))
    rep = ols_condition(f, g, 50)
    assert rep.int_fg == pytest.approx(integrate.quad(lambda x: f(x) * g(x), 0, 1)[0], abs=1e-8)


MONOTONE = [lambda x: x, lambda x: x**3, np.exp, lambda x: np.log1p(x), lambda x: np.sqrt(x)]


@pytest.mark.parametrize("i", range(len(MONOTONE)))
@pytest.mark.parametrize("j", range(len(MONOTONE)))
def test_ols_condition_monotone_pairs(i, j):
    f, g = MONOTONE[i], MONOTONE[j]
    a = ols_condition(f, g, 100)
    b = ols_condition(g, f, 100)
    assert a.verdict == b.verdict == "anticonservative"
    assert a.int_fg == pytest.approx(b.int_fg, rel=1e-14)
    scaled = ols_condition(lambda x: 7.5 * f(x), g, 100)
    assert scaled.verdict == a.verdict


def test_ols_condition_negative_rejected():
    with pytest.raises(ParameterError):
        ols_condition(lambda x: x - 0.5, np.exp, 10)


def test_predicted_coverage():
    rep = ols_condition(lambda x: np.ones_like(x), np.exp, 200)
    assert rep.predicted_coverage() == pytest.approx(0.95, abs=1e-9)


def bessel_ab_cdf(t):
    # P(AB <= t) = 1/2 + sign(t) * int_0^|t| K0(s) ds / pi
    t = np.asarray(t, dtype=float)
    return 0.5 + np.sign(t) * special.iti0k0(np.abs(t))[1] / math.pi


def test_ab_cdf_matches_bessel_oracle():
    t = np.r_[-8.0, np.linspace(-3, 3, 61), 8.0, 1e-4]
    np.testing.assert_allclose(ab_cdf(t), bessel_ab_cdf(t), atol=1e-9)
    assert ab_cdf(0.0) == pytest.approx(0.5, abs=1e-12)


def test_ab_cdf_monte_carlo():
    rng = np.random.default_rng(0)
    s = rng.standard_normal(200_000) * np.abs(rng.standard_normal(200_000))
    for t in (-1.0, 0.3, 2.0):
        assert np.mean(s <= t) == pytest.approx(ab_cdf(t), abs=0.005)


def test_type1_rate():
    assert theory.normal("s", 1.0, "x").type1_rate() == pytest.approx(0.05, abs=1e-12)
    assert theory.normal("s", 4.0, "x").type1_rate() > 0.3
