import math

import mpmath
import numpy as np
import pytest
from scipy import stats
from scipy.special import ndtr

from fbis.datagen import (
    ROW_BLOCK,
    TRUTH,
    SimSpec,
    g1,
    g2,
    g3,
    gen_correlated_uniforms,
    gen_example,
    latent_ar_gaussians,
    response_mean,
)
from fbis.errors import InvalidDimension, InvalidRho


def test_component_functions():
    assert g1(0.5) == 0 and g1(0) == 1 and g1(1) == 1
    assert g2(0.25) == pytest.approx(1.0, abs=1e-15)
    assert g2(0) == 0
    assert g3(0) == pytest.approx(0.6, abs=1e-15)


def test_example_formulas_by_hand():
    row = np.zeros((1, 6))
    row[0, :3] = (0.5, 0.25, 0.0)
    assert response_mean(1, row)[0] == pytest.approx(4.8, abs=1e-14)
    row = np.array([[0.5, 0.25, 0.25, 0.0, 0.9]])
    assert response_mean(2, row)[0] == pytest.approx(0.0, abs=1e-15)
    row = np.array([[0.25, 0.25, 0.75, 0.1]])
    # 4 * 0.25 + 2 * 1 * 1 + 3 * 1 * (-1)
    assert response_mean(3, row)[0] == pytest.approx(0.0, abs=1e-14)


def test_noise_free_dataset_matches_formula():
    data = gen_example(SimSpec(1, n=50, p=10, sigma2=0, seed=1))
    np.testing.assert_array_equal(data.y, response_mean(1, data.X))


def test_truth_arity():
    assert [len(TRUTH[e]) for e in (1, 2, 3)] == [3, 4, 3]
    assert gen_example(SimSpec(2, n=20, p=6)).truth == (0, 1, 2, 3)


def test_noise_variance():
    spec = SimSpec(2, n=100_000, p=4, sigma2=2.0, seed=3)
    data = gen_example(spec)
    eps = data.y - response_mean(2, data.X)
    assert np.var(eps) == pytest.approx(2.0, rel=0.03)


def test_uniform_marginals_ks():
    X = gen_correlated_uniforms(10_000, 100, 0.0, seed=4)
    pvals = [stats.kstest(X[:, j], "uniform").pvalue for j in range(100)]
    assert np.mean(np.array(pvals) >= 0.01) >= 0.95


def test_uniform_marginals_ks_correlated():
    X = gen_correlated_uniforms(10_000, 100, 0.5, seed=5)
    pvals = [stats.kstest(X[:, j], "uniform").pvalue for j in range(100)]
    assert np.mean(np.array(pvals) >= 0.01) >= 0.95


def test_latent_ar_correlation():
    Z = latent_ar_gaussians(50_000, 6, 0.5, seed=6)
    C = np.corrcoef(Z, rowvar=False)
    lag = np.abs(np.subtract.outer(np.arange(6), np.arange(6)))
    np.testing.assert_allclose(C, 0.5**lag, atol=0.02)


def test_copula_correlation_against_independent_construction():
    # oracle: Cholesky of the full AR covariance, scipy.stats.norm.cdf
    rho, n = 0.5, 50_000
    Sigma = rho ** np.abs(np.subtract.outer(np.arange(3), np.arange(3)))
    L = np.linalg.cholesky(Sigma)
    G = np.random.default_rng(99).standard_normal((n, 3)) @ L.T
    U = stats.norm.cdf(G)
    want = np.corrcoef(U[:, 0], U[:, 1])[0, 1]
    X = gen_correlated_uniforms(n, 3, rho, seed=7)
    got = np.corrcoef(X[:, 0], X[:, 1])[0, 1]
    assert got == pytest.approx(want, abs=0.02)
    assert got == pytest.approx(6 / math.pi * math.asin(rho / 2), abs=0.02)


def test_phi_accuracy():
    mpmath.mp.dps = 40
    for x in np.linspace(-8, 8, 81):
        exact = float(mpmath.ncdf(x))
        assert abs(ndtr(x) - exact) <= 1e-12


def test_determinism_and_seed_sensitivity():
    a = gen_correlated_uniforms(300, 20, 0.5, seed=8)
    assert np.array_equal(a, gen_correlated_uniforms(300, 20, 0.5, seed=8))
    assert not np.array_equal(a, gen_correlated_uniforms(300, 20, 0.5, seed=9))


def test_row_blocks_are_independent_of_total_size():
    small = gen_correlated_uniforms(ROW_BLOCK, 5, 0.3, seed=10)
    large = gen_correlated_uniforms(ROW_BLOCK + 100, 5, 0.3, seed=10)
    np.testing.assert_array_equal(large[:ROW_BLOCK], small)


def test_spec_validation():
    with pytest.raises(InvalidRho):
        SimSpec(1, rho=1.0)
    with pytest.raises(InvalidRho):
        SimSpec(1, rho=-0.1)
    with pytest.raises(InvalidDimension):
        SimSpec(2, p=3)
    with pytest.raises(InvalidDimension):
        SimSpec(2, n=1)
    with pytest.raises(ValueError):
        SimSpec(4)
