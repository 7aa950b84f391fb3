import functools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SIGMA, dense_word
from ctwa.algebra import build_basis
from ctwa.clustering import make_clustering, naive_clusters
from ctwa.sampling import (GaussianParams, ProductState, gaussian_params, neel_state,
                           rotation_to, sample_discrete, sample_discrete_spins,
                           sample_gaussian)


def bases_for(cl):
    return {s: build_basis(s) for s in set(cl.sizes)}


def dense_product_rho(bloch):
    mats = [0.5 * (SIGMA["I"] + b[0] * SIGMA["X"] + b[1] * SIGMA["Y"] + b[2] * SIGMA["Z"])
            for b in bloch]
    return functools.reduce(np.kron, mats)


def test_single_spin_up():
    cl = make_clustering([[0]])
    g = gaussian_params(ProductState([[0, 0, 1]]), cl, bases_for(cl))
    np.testing.assert_array_equal(g.mean, [0, 0, 1])
    np.testing.assert_allclose(g.covariances[0], np.diag([1.0, 1.0, 0.0]), atol=1e-15)
    rng = np.random.default_rng(0)
    assert all(sample_gaussian(g, rng)[2] == 1.0 for _ in range(200))


def test_single_spin_along_x():
    cl = make_clustering([[0]])
    g = gaussian_params(ProductState([[1, 0, 0]]), cl, bases_for(cl))
    np.testing.assert_array_equal(g.mean, [1, 0, 0])
    np.testing.assert_allclose(g.covariances[0], np.diag([0.0, 1.0, 1.0]), atol=1e-15)


def test_neel_pair_means():
    cl = make_clustering([[0, 1]])
    b = build_basis(2)
    g = gaussian_params(neel_state(2), cl, bases_for(cl))
    nz = {b.labels[p]: v for p, v in enumerate(g.mean) if v}
    assert nz == {"ZI": 1.0, "IZ": -1.0, "ZZ": -1.0}


def test_degenerate_gaussian_is_deterministic():
    mu = np.array([0.3, -0.2, 0.5])
    g = GaussianParams((mu,), (np.zeros((3, 3)),), (np.zeros((3, 3)),))
    np.testing.assert_array_equal(sample_gaussian(g, np.random.default_rng(1)), mu)


unit = st.tuples(st.floats(0, np.pi), st.floats(0, 2 * np.pi)).map(
    lambda a: [np.sin(a[0]) * np.cos(a[1]), np.sin(a[0]) * np.sin(a[1]), np.cos(a[0])])


@settings(max_examples=30, deadline=None)
@given(st.lists(unit, min_size=1, max_size=3))
def test_gaussian_moments_match_density_matrix(bloch):
    bloch = np.array(bloch)
    bloch /= np.linalg.norm(bloch, axis=1, keepdims=True)
    n = len(bloch)
    cl = make_clustering([list(range(n))])
    basis = build_basis(n)
    g = gaussian_params(ProductState(bloch), cl, {n: basis})
    rho = dense_product_rho(bloch)
    mats = [dense_word(w) for w in basis.labels]
    mu = np.array([np.trace(rho @ m).real for m in mats])
    m2 = np.array([[0.5 * np.trace(rho @ (a @ b + b @ a)).real for b in mats] for a in mats])
    np.testing.assert_allclose(g.mean, mu, atol=1e-12)
    np.testing.assert_allclose(g.covariances[0], m2 - np.outer(mu, mu), atol=1e-12)


def test_gaussian_empirical_moments():
    cl = naive_clusters(4, 2)
    bases = bases_for(cl)
    g = gaussian_params(neel_state(4), cl, bases)
    rng = np.random.default_rng(7)
    M = 100_000
    X = np.array([sample_gaussian(g, rng) for _ in range(M)])
    P = bases[2].size
    for c in range(2):
        x = X[:, c * P:(c + 1) * P]
        mu, cov = g.means[c], g.covariances[c]
        se_mu = np.sqrt(np.diag(cov) / M)
        assert np.all(np.abs(x.mean(0) - mu) <= 5 * se_mu + 1e-12)
        d = x - x.mean(0)
        prods = d[:, :, None] * d[:, None, :]
        se_cov = prods.std(0) / np.sqrt(M)
        assert np.all(np.abs(prods.mean(0) - cov) <= 5 * se_cov + 1e-12)


def test_discrete_neel_draws_are_exact():
    cl = naive_clusters(2, 2)
    b = build_basis(2)
    rng = np.random.default_rng(11)
    seen = False
    for _ in range(200):
        s = sample_discrete_spins(neel_state(2), rng)
        assert s[0, 2] == 1.0 and s[1, 2] == -1.0
        assert set(np.abs(s[:, :2]).ravel()) == {1.0}
        x = sample_discrete(neel_state(2), cl, {2: b}, np.random.default_rng(rng.integers(2**32)))
        v = dict(zip(b.labels, x))
        # product rule on every draw
        for w, val in v.items():
            f1 = 1.0 if w[0] == "I" else v[w[0] + "I"]
            f2 = 1.0 if w[1] == "I" else v["I" + w[1]]
            assert val == f1 * f2
        if [v["XI"], v["YI"], v["ZI"], v["IX"], v["IY"], v["IZ"]] == [1, 1, 1, 1, 1, -1]:
            seen = True
            assert v["XZ"] == -1 and v["ZZ"] == -1 and v["XX"] == 1
    assert seen


def test_single_spin_up_phase_points_equally_likely():
    rng = np.random.default_rng(5)
    M = 40_000
    s = np.array([sample_discrete_spins(ProductState([[0, 0, 1]]), rng)[0] for _ in range(M)])
    assert np.all(s[:, 2] == 1.0)
    keys, counts = np.unique(s[:, :2], axis=0, return_counts=True)
    assert len(keys) == 4
    assert np.all(np.abs(counts - M / 4) < 5 * np.sqrt(M * 3 / 16))


def test_discrete_first_moments_neel():
    n = 4
    cl = naive_clusters(n, 2)
    bases = bases_for(cl)
    g = gaussian_params(neel_state(n), cl, bases)
    rng = np.random.default_rng(21)
    M = 100_000
    X = np.array([sample_discrete(neel_state(n), cl, bases, rng) for _ in range(M)])
    mu = g.mean
    se = X.std(0) / np.sqrt(M)
    assert np.all(np.abs(X.mean(0) - mu) <= np.maximum(5 * se, 1e-15))
    # transverse single-site components: per-sample variance exactly 1
    P = bases[2].size
    for c in range(2):
        for k in ("XI", "YI", "IX", "IY"):
            col = X[:, c * P + bases[2].index(k)]
            assert np.all(col ** 2 == 1.0)


@settings(max_examples=20, deadline=None)
@given(unit)
def test_rotated_discrete_sampler_mean(b):
    b = np.array(b) / np.linalg.norm(b)
    R = rotation_to(b)
    np.testing.assert_allclose(R @ [0, 0, 1], b, atol=1e-12)
    np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-12)
    rng = np.random.default_rng(0)
    s = np.array([sample_discrete_spins(ProductState([b]), rng)[0] for _ in range(4000)])
    se = s.std(0) / np.sqrt(len(s)) + 1e-12
    assert np.all(np.abs(s.mean(0) - b) < 5 * se + 1e-9)


def test_invalid_state():
    with pytest.raises(ValueError):
        ProductState([[0, 0, 2]])
