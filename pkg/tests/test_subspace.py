import numpy as np
import pytest

from bftt3d import (
    IdentityAlignment,
    KernelSpec,
    TransferComponentAnalysis,
    centering_matrix,
    mmd_distance,
    mmd_scaling_matrix,
)


def _oracle_eigenpairs(K, L, H, mu, m):
    """Independent dense route: explicit inverse product + nonsymmetric eig."""
    n = len(K)
    A = K @ H @ K
    B = K @ L @ K + mu * np.eye(n)
    C = np.linalg.solve(B, A)
    vals, vecs = np.linalg.eig(C)
    assert np.abs(vals.imag).max() < 1e-8
    vals, vecs = vals.real, vecs.real
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    W = np.empty((n, m))
    for i in range(m):
        v = vecs[:, i]
        v = v / np.sqrt(v @ A @ v)
        if v[np.abs(v).argmax()] < 0:
            v = -v
        W[:, i] = v
    return vals[:m], W


def _shifted_gaussians(seed, n=40, shift=5.0):
    rng = np.random.default_rng(seed)
    Xs = rng.normal(size=(n, 2))
    Xt = rng.normal(size=(n, 2)) + np.array([shift, 0.0])
    return Xs, Xt


# ---------------------------------------------------------------------- MMD

def test_mmd_identical_sets_is_zero(rng):
    A = rng.normal(size=(20, 4))
    assert mmd_distance(A, A) == pytest.approx(0.0, abs=1e-12)


def test_mmd_singleton_means():
    assert mmd_distance([[0.0, 0.0]], [[3.0, 4.0]]) == pytest.approx(25.0, abs=1e-12)


def test_mmd_matches_double_sum_oracle(rng):
    # Brute-force double-sum estimator of the squared mean-embedding
    # distance under the linear kernel.
    A = rng.normal(size=(15, 3))
    B = rng.normal(loc=1.0, size=(11, 3))
    total = 0.0
    for a in A:
        for a2 in A:
            total += a @ a2 / len(A) ** 2
    for b in B:
        for b2 in B:
            total += b @ b2 / len(B) ** 2
    for a in A:
        for b in B:
            total -= 2.0 * (a @ b) / (len(A) * len(B))
    assert mmd_distance(A, B) == pytest.approx(total, abs=1e-8)


def test_mmd_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        mmd_distance(np.ones((3, 2)), np.ones((3, 3)))


def test_mmd_rbf_nonnegative(rng):
    A = rng.normal(size=(10, 3))
    B = rng.normal(loc=2.0, size=(12, 3))
    spec = KernelSpec("rbf", 1.0)
    assert mmd_distance(A, B, spec) > 0
    assert mmd_distance(A, A, spec) == pytest.approx(0.0, abs=1e-10)


# ------------------------------------------------------------ matrix pieces

def test_centering_matrix_properties():
    H = centering_matrix(17)
    assert np.abs(H @ H - H).max() < 1e-10
    assert np.abs(H @ np.ones(17)).max() < 1e-12


def test_scaling_matrix_blocks_and_row_sums():
    L = mmd_scaling_matrix(4, 6)
    assert np.allclose(L[:4, :4], 1.0 / 16.0)
    assert np.allclose(L[4:, 4:], 1.0 / 36.0)
    assert np.allclose(L[:4, 4:], -1.0 / 24.0)
    assert np.abs(L.sum(axis=1)).max() < 1e-12


# ---------------------------------------------------------------------- TCA

def test_identical_domains_project_identically(rng):
    X = rng.normal(size=(12, 5))
    tca = TransferComponentAnalysis(n_components=3, mu=1.0)
    s_proj, t_proj = tca.fit_transform(X, X)
    assert np.allclose(s_proj, t_proj, atol=1e-9)


def test_constraint_satisfied(rng):
    Xs, Xt = _shifted_gaussians(0, n=25)
    tca = TransferComponentAnalysis(n_components=5, mu=1.0).fit(Xs, Xt)
    gram = tca.W_.T @ tca.K_ @ tca.H_ @ tca.K_ @ tca.W_
    assert np.abs(gram - np.eye(tca.effective_components_)).max() < 1e-6


def test_eigenpairs_match_dense_oracle():
    # 6-sample toy instance, checked against the explicit-inverse route.
    rng = np.random.default_rng(3)
    Xs = rng.normal(size=(3, 4))
    Xt = rng.normal(loc=0.5, size=(3, 4))
    tca = TransferComponentAnalysis(n_components=2, mu=1.0).fit(Xs, Xt)
    vals, W = _oracle_eigenpairs(tca.K_, tca.L_, tca.H_, 1.0, tca.effective_components_)
    assert np.abs(tca.eigenvalues_ - vals).max() < 1e-8
    assert np.abs(tca.W_ - W).max() < 1e-8


def test_projection_matches_naive_matmul(rng):
    Xs, Xt = _shifted_gaussians(1, n=10)
    tca = TransferComponentAnalysis(n_components=3, mu=1.0).fit(Xs, Xt)
    s_proj, t_proj = tca.transform_fitted()
    naive = np.empty((len(tca.K_), tca.effective_components_))
    for i in range(len(tca.K_)):
        for j in range(tca.effective_components_):
            naive[i, j] = sum(tca.W_[r, j] * tca.K_[r, i] for r in range(len(tca.K_)))
    assert np.abs(np.vstack([s_proj, t_proj]) - naive).max() < 1e-10


def test_project_deterministic(rng):
    Xs, Xt = _shifted_gaussians(2, n=15)
    tca = TransferComponentAnalysis(n_components=4, mu=1.0).fit(Xs, Xt)
    a = tca.transform_fitted()
    b = tca.transform_fitted()
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_projected_mmd_below_raw(rng):
    # Raw features normalized to unit variance vs. the projected pair.
    Xs, Xt = _shifted_gaussians(7)
    scale = np.vstack([Xs, Xt]).std()
    raw = mmd_distance(Xs / scale, Xt / scale)
    s_proj, t_proj = TransferComponentAnalysis(n_components=1, mu=1.0).fit_transform(Xs, Xt)
    pscale = np.vstack([s_proj, t_proj]).std()
    projected = mmd_distance(s_proj / pscale, t_proj / pscale)
    assert projected < raw


def test_tca_beats_random_orthogonal_projection():
    wins = 0
    for seed in range(100):
        Xs, Xt = _shifted_gaussians(seed)
        s_proj, t_proj = TransferComponentAnalysis(n_components=1, mu=1.0).fit_transform(Xs, Xt)
        pscale = np.vstack([s_proj, t_proj]).std()
        tca_mmd = mmd_distance(s_proj / pscale, t_proj / pscale)
        q, _ = np.linalg.qr(np.random.default_rng(seed + 10_000).normal(size=(2, 1)))
        s_r, t_r = Xs @ q, Xt @ q
        rscale = np.vstack([s_r, t_r]).std()
        rand_mmd = mmd_distance(s_r / rscale, t_r / rscale)
        wins += tca_mmd < rand_mmd
    assert wins >= 95


def test_objective_ordering_vs_random_feasible(rng):
    # The fitted W minimizes tr(W^T K L K W) among constraint-satisfying
    # projections of the same rank.
    Xs, Xt = _shifted_gaussians(11, n=15)
    tca = TransferComponentAnalysis(n_components=3, mu=1.0).fit(Xs, Xt)
    A = tca.K_ @ tca.H_ @ tca.K_
    KLK = tca.K_ @ tca.L_ @ tca.K_
    m = tca.effective_components_
    fitted_obj = np.trace(tca.W_.T @ KLK @ tca.W_)
    better = 0
    for trial in range(100):
        local = np.random.default_rng(trial)
        C = local.normal(size=(len(A), m))
        M = C.T @ A @ C
        vals, vecs = np.linalg.eigh(M)
        if vals.min() < 1e-10:
            continue
        W_rand = C @ vecs @ np.diag(1.0 / np.sqrt(vals)) @ vecs.T
        assert np.abs(W_rand.T @ A @ W_rand - np.eye(m)).max() < 1e-6
        if np.trace(W_rand.T @ KLK @ W_rand) < fitted_obj - 1e-12:
            better += 1
    assert better <= 1


def test_rank_shrink_warns():
    # Duplicated rows collapse the kernel rank below the requested m.
    X = np.ones((6, 2))
    Y = np.ones((6, 2)) * 2.0
    with pytest.warns(RuntimeWarning, match="shrunk"):
        tca = TransferComponentAnalysis(n_components=5, mu=1.0).fit(X, Y)
    assert tca.effective_components_ < 5


def test_m_clamped_to_n_minus_one(rng):
    Xs = rng.normal(size=(4, 3))
    Xt = rng.normal(size=(4, 3))
    tca = TransferComponentAnalysis(n_components=999, mu=1e-6).fit(Xs, Xt)
    assert tca.effective_components_ <= 7
    proj = np.vstack(tca.transform_fitted())
    assert np.linalg.matrix_rank(proj) == tca.effective_components_


def test_identity_alignment_passthrough(rng):
    Xs = rng.normal(size=(5, 4))
    Xt = rng.normal(size=(6, 4))
    s, t = IdentityAlignment().fit_transform(Xs, Xt)
    assert np.array_equal(s, Xs) and np.array_equal(t, Xt)


def test_kernel_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec("poly")
    with pytest.raises(ValueError):
        KernelSpec("rbf", -1.0)
