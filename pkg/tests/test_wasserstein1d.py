import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from ewb.exceptions import DegenerateMeasureError, DomainError
from ewb.wasserstein1d import (
    MetaMeasure,
    QuantileMeasure,
    barycentric_variance,
    hoeffding_check,
    max_beta,
    potential_strong_convexity,
    random_meta_measure,
    random_quantile_measure,
    variance_inequality_check,
    variance_stability_check,
    w2,
    w2_barycenter,
    w2_sq,
)


def _normal(m, s, K=1024):
    return QuantileMeasure.from_ppf(lambda u: stats.norm.ppf(u, m, s), K)


def test_w2_dirac_to_uniform():
    K = 10_000
    d = w2(QuantileMeasure.dirac(0.0, K), QuantileMeasure.from_ppf(lambda u: u, K))
    assert d == pytest.approx(0.5773502691896258, abs=1e-3)
    # exact on the midpoint grid
    assert d == pytest.approx(math.sqrt(1 / 3 - 1 / (12 * K * K)), rel=1e-12)


def test_w2_diracs_and_translations(rng):
    assert w2(QuantileMeasure.dirac(1.0), QuantileMeasure.dirac(3.5)) == pytest.approx(2.5)
    mu = random_quantile_measure(rng)
    assert w2(mu, mu.shifted(0.7)) == pytest.approx(0.7, rel=1e-12)


def test_w2_gaussians():
    d = w2(_normal(0.0, 1.0, 10_000), _normal(1.0, 2.0, 10_000))
    assert d == pytest.approx(math.sqrt(1.0 + 1.0), abs=1e-2)


def test_w2_length_mismatch():
    with pytest.raises(ValueError):
        w2(QuantileMeasure.dirac(0.0, 10), QuantileMeasure.dirac(0.0, 11))


def test_quantile_validation():
    with pytest.raises(DomainError):
        QuantileMeasure(np.array([0.0, 1.0, 0.5]))
    with pytest.raises(DomainError):
        QuantileMeasure(np.array([0.0, np.inf]))


def test_barycenter_examples():
    P = MetaMeasure.from_measures([QuantileMeasure.dirac(0.0, 8), QuantileMeasure.dirac(2.0, 8)])
    assert np.allclose(w2_barycenter(P).q, 1.0)
    assert barycentric_variance(P) == pytest.approx(1.0)
    G = MetaMeasure.from_measures([_normal(0, 1), _normal(2, 3)])
    assert np.allclose(w2_barycenter(G).q, _normal(1, 2).q, atol=1e-12)


def test_barycenter_beats_probes(rng):
    P = random_meta_measure(rng, m=5, K=256)
    v = barycentric_variance(P)
    for _ in range(200):
        probe = random_quantile_measure(rng, K=256)
        assert v <= float(P.weights @ w2_sq(P.quantiles, probe)) + 1e-12


def test_barycenter_commutes_with_translation(rng):
    P = random_meta_measure(rng, m=4, K=128)
    Q = MetaMeasure(P.quantiles + 1.25, P.weights)
    assert np.allclose(w2_barycenter(Q).q, w2_barycenter(P).q + 1.25, atol=1e-12)


def test_strong_convexity_examples():
    u = QuantileMeasure.from_ppf(lambda t: t, 64)
    assert potential_strong_convexity(u, u) == pytest.approx(1.0)
    assert potential_strong_convexity(u, QuantileMeasure.from_ppf(lambda t: 2 * t, 64)) == pytest.approx(2.0)
    assert potential_strong_convexity(u, QuantileMeasure.dirac(0.3, 64)) == 0.0
    with pytest.raises(DegenerateMeasureError):
        potential_strong_convexity(QuantileMeasure.dirac(0.0, 64), u)


def test_flat_identity(rng):
    # sum_i w_i W2^2(mu, mu_i) = V* + W2^2(mu*, mu) in quantile coordinates
    P = random_meta_measure(rng, m=6, K=256)
    mu = random_quantile_measure(rng, K=256)
    lhs = float(P.weights @ w2_sq(P.quantiles, mu))
    rhs = barycentric_variance(P) + float(w2_sq(w2_barycenter(P), mu))
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_translation_family_is_tight(rng):
    base = random_quantile_measure(rng, K=128)
    P = MetaMeasure.from_measures([base.shifted(c) for c in (-1.0, 0.5, 2.0)], [0.2, 0.5, 0.3])
    viol, ok = variance_stability_check(P, random_quantile_measure(rng, K=128))
    assert ok and abs(viol) <= 1e-10


def test_two_atom_variance_inequality():
    u = QuantileMeasure.from_ppf(lambda t: t, 256)
    P = MetaMeasure.from_measures([u, u.shifted(1.0)])
    # V* = 1/4, Delta = 1, so beta ranges up to 2
    assert max_beta(P) == pytest.approx(2.0)
    for beta in (0.1, 1.0, 2.0):
        rep = variance_inequality_check(P, P.atom(0), beta)
        assert rep.passed and rep.in_support and rep.C_var == pytest.approx(1.0)
        # lhs = 1/4, rhs = -(1/beta) ln((1 + e^{-beta}) / 2)
        assert rep.lhs == pytest.approx(0.25)
        assert rep.rhs == pytest.approx(-math.log((1 + math.exp(-beta)) / 2) / beta, rel=1e-12)
    with pytest.raises(DomainError):
        variance_inequality_check(P, P.atom(0), 2.5)


def test_inconclusive_with_degenerate_atoms():
    # each atom is flat on half the cells, their average is strictly increasing
    t = np.arange(16.0)
    a = np.maximum(t - 7.0, 0.0)
    b = np.minimum(t, 8.0)
    P = MetaMeasure.from_measures([QuantileMeasure(a), QuantileMeasure(b)])
    rep = variance_inequality_check(P, P.atom(1), 0.5 * max_beta(P))
    assert not rep.conclusive and not rep.passed


def test_hoeffding_two_atoms():
    u = QuantileMeasure.from_ppf(lambda t: t, 64)
    P = MetaMeasure.from_measures([u, u.shifted(1.0)])
    lhs, rhs, ok = hoeffding_check(P, P.atom(0), 1.5)
    # energies 0 and 1, centered at 1/2
    assert lhs == pytest.approx(math.log(math.cosh(0.75)) / 1.5, rel=1e-12)
    assert rhs == pytest.approx(1.5 / 8) and ok


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.05, 1.0))
def test_variance_inequality_random_support(seed, frac):
    rng = np.random.default_rng(seed)
    P = random_meta_measure(rng, K=128)
    i = int(rng.integers(len(P)))
    rep = variance_inequality_check(P, P.atom(i), frac * max_beta(P))
    assert rep.conclusive and rep.passed


def test_meta_measure_validation():
    with pytest.raises(DegenerateMeasureError):
        MetaMeasure(np.zeros((2, 4)), np.zeros(2))
    with pytest.raises(DomainError):
        MetaMeasure(np.array([[0.0, -1.0]]), np.ones(1))
    assert np.allclose(MetaMeasure(np.zeros((2, 4)), [1.0, 3.0]).weights, [0.25, 0.75])


def test_csv_and_directory_round_trip(tmp_path, rng):
    mu = random_quantile_measure(rng, K=50)
    mu.to_csv(tmp_path / "mu.csv")
    assert np.array_equal(QuantileMeasure.from_csv(tmp_path / "mu.csv").q, mu.q)
    P = random_meta_measure(rng, m=3, K=50)
    P.save(tmp_path / "P")
    back = MetaMeasure.load(tmp_path / "P")
    assert np.array_equal(back.quantiles, P.quantiles)
    assert np.allclose(back.weights, P.weights, atol=1e-15)


def test_from_samples():
    x = np.random.default_rng(0).normal(size=200_000)
    mu = QuantileMeasure.from_samples(x, 200)
    assert w2(mu, _normal(0, 1, 200)) <= 0.02
