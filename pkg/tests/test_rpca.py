import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beltrami_decomp.errors import DegenerateInputError, InadmissibleError, NumericalFailureError
from beltrami_decomp.rpca import (
    AdmmParams,
    alpha_floor,
    beta_schedule,
    calibrate_rate,
    complex_shrink,
    complex_svt,
    decompose,
    default_alpha,
    numerical_rank,
    spectral_norm,
)


def crandn(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


# ---------------------------------------------------------------- norms/rank

def test_spectral_norm_examples(rng):
    assert spectral_norm(np.eye(3)) == pytest.approx(1)
    u = crandn(rng, 6)
    v = crandn(rng, 4)
    M = np.outer(2 * u / np.linalg.norm(u), np.conj(3 * v / np.linalg.norm(v)))
    assert spectral_norm(M) == pytest.approx(6, rel=1e-12)
    assert spectral_norm(np.zeros((3, 2))) == 0


def test_spectral_norm_matches_svd(rng):
    M = crandn(rng, 50, 20)
    s = np.linalg.svd(M, compute_uv=False)
    assert abs(spectral_norm(M) - s[0]) / s[0] < 1e-10


def test_numerical_rank():
    assert numerical_rank(np.eye(5), 1e-8) == 5
    assert numerical_rank(np.zeros((4, 3)), 1e-8) == 0
    assert numerical_rank(np.diag([1.0, 1e-12]), 1e-8) == 1
    with pytest.raises(ValueError):
        numerical_rank(np.eye(2), 0)


# ------------------------------------------------------------- proximal maps

def test_svt_examples():
    X, r = complex_svt(np.diag([3.0, 1.0]), 2)
    np.testing.assert_allclose(X, np.diag([1.0, 0.0]), atol=1e-14)
    assert r == 1


def test_svt_zero_threshold(rng):
    M = crandn(rng, 7, 4)
    X, r = complex_svt(M, 0)
    np.testing.assert_allclose(X, M, atol=1e-12)
    assert r == 4


def test_svt_against_explicit_svd(rng):
    M = crandn(rng, 8, 5)
    tau = 0.3 * np.linalg.svd(M, compute_uv=False)[2]
    U, s, Vh = np.linalg.svd(M, full_matrices=False)
    oracle = U @ np.diag(np.maximum(s - tau, 0)) @ Vh
    X, r = complex_svt(M, tau)
    np.testing.assert_allclose(X, oracle, atol=1e-12)
    assert r == int((s > tau).sum())


def test_svt_optimal_against_competitors(rng):
    M = crandn(rng, 9, 6)
    tau = 1.5

    def objective(X):
        return tau * np.linalg.svd(X, compute_uv=False).sum() + 0.5 * np.linalg.norm(M - X) ** 2

    X, _ = complex_svt(M, tau)
    best = objective(X)
    for _ in range(200):
        Y = X + 10 ** rng.uniform(-4, 0) * crandn(rng, *M.shape)
        assert best <= objective(Y) + 1e-12


def test_shrink_examples(rng):
    assert complex_shrink(np.array([3 + 4j]), 2.5)[0] == pytest.approx(1.5 + 2j)
    M = crandn(rng, 5, 3)
    np.testing.assert_array_equal(complex_shrink(M, 0), M)
    assert np.all(complex_shrink(np.array([0j, 0.1, 0.2j]), 0.2) == 0)


def test_shrink_matches_row_norm_formulation(rng):
    M = crandn(rng, 6, 4)
    tau = 0.8
    # each complex entry becomes a row (Re, Im) of a real two-column matrix
    rows = np.column_stack([M.real.ravel(order="F"), M.imag.ravel(order="F")])
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    shrunk = np.where(norms > tau, (1 - tau / np.where(norms > 0, norms, 1)) * rows, 0)
    oracle = (shrunk[:, 0] + 1j * shrunk[:, 1]).reshape(M.shape, order="F")
    np.testing.assert_allclose(complex_shrink(M, tau), oracle, atol=1e-15)


def test_shrink_equals_residual_of_disk_projection(rng):
    M = crandn(rng, 5, 5)
    tau = 0.7
    proj = np.where(np.abs(M) > tau, tau * M / np.abs(M), M)
    np.testing.assert_allclose(complex_shrink(M, tau), M - proj, atol=1e-15)


def test_shrink_optimal_against_competitors(rng):
    M = crandn(rng, 7, 4)
    tau = 0.9

    def objective(X):
        return tau * np.abs(X).sum() + 0.5 * np.linalg.norm(M - X) ** 2

    X = complex_shrink(M, tau)
    best = objective(X)
    for _ in range(500):
        Y = X + 10 ** rng.uniform(-4, 0) * crandn(rng, *M.shape)
        assert best <= objective(Y) + 1e-12


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0, 5))
def test_shrink_scalar_property(re, im, tau):
    z = complex(re, im)
    out = complex_shrink(np.array([z]), tau)[0]
    assert abs(out) == pytest.approx(max(abs(z) - tau, 0), abs=1e-12)
    if out != 0:
        assert abs(np.angle(out) - np.angle(z)) < 1e-9


# ------------------------------------------------------------ schedule/floor

def test_beta_schedule_examples():
    assert beta_schedule(0, 5, 1.25) == pytest.approx(1)
    assert beta_schedule(2, 10, 1.25) == pytest.approx(2.25)
    assert beta_schedule(12, 10, 2.0) == beta_schedule(10, 10, 2.0) == beta_schedule(40, 10, 2.0)
    with pytest.raises(DegenerateInputError):
        beta_schedule(0, 5, 0.0)


def test_alpha_floor_without_rate_terms():
    L = np.diag([0.5, 0.2])
    assert alpha_floor(L, 0.0, 0.5, 3) == pytest.approx(1.0)


def test_alpha_floor_hand_value():
    # ||L||_max = 0.5, ||L||_2 = 0.5, p = 1, q = 0.5, N = 3:
    # 1 + 2.5 * (1 - 0.75^3) / 0.25 + (1.5^3 * 2.5) * 0.125 / 0.5 = 1 + 5.78125 + 2.109375
    assert alpha_floor(np.diag([0.5, 0.2]), 1.0, 0.5, 3) == pytest.approx(8.890625, rel=1e-14)


def test_alpha_floor_limit_case():
    L = np.diag([0.5, 0.2])
    q = 2 / 3
    expected = 1 + 2.5 * 3 + 1.5**3 * 2.5 * q**3 / (1 - q)
    assert alpha_floor(L, 1.0, q, 3) == pytest.approx(expected)
    assert alpha_floor(L, 1.0, q * (1 + 1e-9), 3) == pytest.approx(expected, rel=1e-6)


def test_alpha_floor_rejections():
    with pytest.raises(DegenerateInputError):
        alpha_floor(np.zeros((2, 2)), 1, 0.5, 3)
    with pytest.raises(InadmissibleError):
        alpha_floor(np.diag([1.0, 0.1]), 1, 0.5, 3)
    with pytest.raises(ValueError):
        alpha_floor(np.diag([0.5]), 1, 1.0, 3)


def test_params_validation():
    with pytest.raises(ValueError):
        AdmmParams(alpha=-1)
    with pytest.raises(ValueError):
        AdmmParams(beta_cap=0)
    with pytest.raises(ValueError):
        AdmmParams(tol=0)
    assert AdmmParams().alpha_for((400, 30)) == pytest.approx(default_alpha((400, 30))) == pytest.approx(0.05)


# ----------------------------------------------------------------- decompose

def low_rank(rng, m, n, r):
    return crandn(rng, m, r) @ crandn(rng, r, n).conj() / np.sqrt(m * n)


def test_exact_low_rank_input(rng):
    L = low_rank(rng, 200, 50, 3)
    res = decompose(L)
    assert res.converged
    assert np.linalg.norm(res.low_rank - L) / np.linalg.norm(L) < 1e-6
    assert np.linalg.norm(res.sparse) / np.linalg.norm(L) < 1e-6


def test_sparse_only_input(rng):
    L = np.zeros((100, 40), complex)
    idx = rng.choice(L.size, 100, replace=False)
    L.flat[idx] = 0.5 * np.exp(2j * np.pi * rng.uniform(size=100))
    res = decompose(L)
    assert res.converged
    assert np.linalg.norm(res.sparse - L) / np.linalg.norm(L) < 1e-5
    assert np.linalg.norm(res.low_rank) / np.linalg.norm(L) < 1e-5


def test_single_entry_feasible():
    L = np.zeros((4, 3), complex)
    L[1, 2] = 0.5
    res = decompose(L)
    assert res.converged
    assert np.linalg.norm(L - res.low_rank - res.sparse) <= res.residual * np.linalg.norm(L) * (1 + 1e-9)
    assert res.residual < 1e-7


def test_history_and_rank_bookkeeping(rng):
    L = low_rank(rng, 60, 20, 2)
    L[3, 4] += 0.3
    res = decompose(L)
    assert len(res.history) == res.iterations
    assert [h.iter for h in res.history] == list(range(res.iterations))
    last = res.history[-1]
    assert last.rank == res.rank == np.linalg.matrix_rank(res.low_rank)
    assert last.nnz == np.count_nonzero(res.sparse)
    assert last.amax == pytest.approx(np.abs(res.sparse).max())
    assert np.linalg.norm(L - res.low_rank - res.sparse) / np.linalg.norm(L) == pytest.approx(last.residual)


def test_not_converged_is_not_an_error(rng):
    res = decompose(low_rank(rng, 30, 10, 2) + 0.1 * crandn(rng, 30, 10), AdmmParams(max_iter=2, tol=1e-14))
    assert not res.converged and res.iterations == 2


def test_rejects_zero_and_nan():
    with pytest.raises(DegenerateInputError):
        decompose(np.zeros((3, 3)))
    bad = np.eye(3, dtype=complex)
    bad[0, 1] = np.nan
    with pytest.raises(NumericalFailureError):
        decompose(bad)


def test_deterministic(rng):
    L = low_rank(rng, 80, 15, 2)
    L[::7, 3] += 0.4j
    a, b = decompose(L), decompose(L)
    assert [h.row() for h in a.history] == [h.row() for h in b.history]
    assert np.array_equal(a.low_rank, b.low_rank) and np.array_equal(a.sparse, b.sparse)


def test_calibrate_rate_bounds_history(rng):
    L = low_rank(rng, 80, 15, 2)
    L[::9, 5] += 0.3
    res = decompose(L)
    q = calibrate_rate(res.history)
    assert 0 < q < 1
    for h in res.history:
        assert h.rmax <= q ** (h.iter + 1) * (1 + 1e-9)
