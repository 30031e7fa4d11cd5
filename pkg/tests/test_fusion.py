import math

import numpy as np
import pytest

from bftt3d import FusionConfig, NumericError, adaptive_weight, bf_logits, fuse, fuse_batch, similarity, softmax, softmax_entropy


# --------------------------------------------------------------- similarity

def test_similarity_identical_vector_is_one(rng):
    v = rng.normal(size=(1, 6))
    assert similarity(v, v)[0, 0] == pytest.approx(1.0, abs=1e-12)


def test_similarity_orthogonal_is_zero():
    a = np.array([[1.0, 0.0, 0.0]])
    b = np.array([[0.0, 1.0, 0.0]])
    assert similarity(a, b)[0, 0] == pytest.approx(0.0, abs=1e-12)


def test_similarity_scale_invariant(rng):
    T = rng.normal(size=(4, 8))
    P = rng.normal(size=(6, 8))
    J = similarity(T, P)
    J_scaled = similarity(T * 5.0, P)
    assert np.abs(J - J_scaled).max() < 1e-9
    assert (np.abs(J) <= 1.0 + 1e-9).all()


def test_similarity_zero_norm_identifies_sample(rng):
    T = rng.normal(size=(3, 4))
    T[1] = 0.0
    with pytest.raises(NumericError, match="sample 1"):
        similarity(T, rng.normal(size=(2, 4)))


# ---------------------------------------------------------------- bf logits

def test_bf_logits_perfect_match_contributes_one():
    J = np.array([[1.0]])
    L = np.array([[1.0]])
    assert bf_logits(J, L, gamma=7.0)[0, 0] == pytest.approx(1.0, abs=1e-15)


def test_bf_logits_single_prototype_per_class():
    # J row (1, -1) with gamma=1 gives logits (1, e^-2).
    J = np.array([[1.0, -1.0]])
    L = np.eye(2)
    out = bf_logits(J, L, gamma=1.0)
    assert out[0, 0] == pytest.approx(1.0, abs=1e-15)
    assert out[0, 1] == pytest.approx(math.exp(-2.0), abs=1e-15)


def test_bf_logits_matches_scalar_double_loop(rng):
    # Naive oracle: per class, average exp(-gamma (1 - J)) over its
    # prototypes with explicit python loops.
    n_t, n_s, n_c, gamma = 5, 4 * 3, 3, 55.0
    J = rng.uniform(-1, 1, size=(n_t, n_s))
    labels = np.zeros((n_s, n_c))
    for i in range(n_s):
        labels[i, i % n_c] = 1.0
    out = bf_logits(J, labels, gamma=gamma)
    for t in range(n_t):
        for c in range(n_c):
            members = [j for j in range(n_s) if labels[j, c] == 1.0]
            expected = sum(math.exp(-gamma * (1.0 - J[t, j])) for j in members) / len(members)
            assert out[t, c] == pytest.approx(expected, abs=1e-10)


def test_bf_logits_invariant_to_prototype_reordering(rng):
    J = rng.uniform(-1, 1, size=(3, 8))
    labels = np.zeros((8, 2))
    labels[:4, 0] = 1.0
    labels[4:, 1] = 1.0
    perm = np.concatenate([np.random.default_rng(0).permutation(4), 4 + np.random.default_rng(1).permutation(4)])
    assert np.allclose(bf_logits(J, labels, 10.0), bf_logits(J[:, perm], labels[perm], 10.0), atol=1e-12)


def test_bf_logits_summed_form(rng):
    J = rng.uniform(-1, 1, size=(2, 4))
    labels = np.zeros((4, 2))
    labels[:2, 0] = 1.0
    labels[2:, 1] = 1.0
    out = bf_logits(J, labels, gamma=2.0, activation="summed")
    expected = np.exp(-2.0 * (1.0 - J @ labels))
    assert np.allclose(out, expected, atol=1e-12)


# ------------------------------------------------------------------ entropy

def test_entropy_uniform_is_log_c():
    assert softmax_entropy(np.zeros(4)) == pytest.approx(math.log(4.0), abs=1e-12)


def test_entropy_delta_is_zero():
    assert softmax_entropy(np.array([1000.0, 0.0, 0.0])) == pytest.approx(0.0, abs=1e-9)


def test_entropy_matches_scalar_formula():
    logits = np.array([1.0, 2.0, 3.0])
    exps = [math.exp(v) for v in logits]
    z = sum(exps)
    probs = [e / z for e in exps]
    expected = -sum(p * math.log(p) for p in probs)
    assert softmax_entropy(logits) == pytest.approx(expected, abs=1e-12)


def test_entropy_range(rng):
    for _ in range(50):
        l = rng.normal(scale=5.0, size=6)
        e = softmax_entropy(l)
        assert 0.0 <= e <= math.log(6.0) + 1e-12


# -------------------------------------------------------------------- fuse

def test_equal_entropies_give_half():
    l = np.array([2.0, 1.0, 0.0])
    fused, p = fuse(l, l[::-1].copy())
    assert p == 0.5


def test_confident_adaptation_dominates():
    l_bf = np.array([500.0, 0.0, 0.0])  # entropy ~ 0
    l_s = np.array([0.1, 0.0, -0.1])  # near-uniform
    _, p = fuse(l_bf, l_s)
    assert p > 0.99


def test_shared_argmax_survives_any_p():
    l_bf = np.array([5.0, 1.0, 0.0])
    l_s = np.array([3.0, 2.5, 2.4])
    for fp in np.linspace(0.0, 1.0, 11):
        fused, p = fuse(l_bf, l_s, FusionConfig(mode="fixed", fixed_p=float(fp)))
        assert fused.argmax() == 0
        assert p == fp


def test_fuse_matches_hand_computation(rng):
    l_bf = rng.normal(size=5)
    l_s = rng.normal(size=5)
    fused, p = fuse(l_bf, l_s)
    e_bf, e_s = softmax_entropy(l_bf), softmax_entropy(l_s)
    expected_p = e_s / (e_s + e_bf)
    assert p == pytest.approx(expected_p, abs=1e-15)
    expected = expected_p * softmax(l_bf) + (1.0 - expected_p) * softmax(l_s)
    assert np.abs(fused - expected).max() < 1e-12


def test_fuse_raw_space(rng):
    l_bf = rng.normal(size=4)
    l_s = rng.normal(size=4)
    cfg = FusionConfig(mode="fixed", fixed_p=0.25, fuse_space="raw")
    fused, _ = fuse(l_bf, l_s, cfg)
    assert np.abs(fused - (0.25 * l_bf + 0.75 * l_s)).max() < 1e-12


def test_fused_probability_simplex(rng):
    for _ in range(20):
        fused, _ = fuse(rng.normal(size=6), rng.normal(size=6))
        assert fused.sum() == pytest.approx(1.0, abs=1e-9)
        assert (fused >= 0).all()


def test_p_in_unit_interval(rng):
    for _ in range(1000):
        _, p = fuse(rng.normal(scale=10.0, size=4), rng.normal(scale=10.0, size=4))
        assert 0.0 <= p <= 1.0


def test_p_monotone_in_adaptation_entropy():
    l_s = np.array([1.0, 0.0, 0.0])
    previous = 1.1
    # sweep l_bf from confident to uniform: entropy rises, p must fall
    for scale in (10.0, 3.0, 1.0, 0.3, 0.0):
        _, p = fuse(np.array([scale, 0.0, 0.0]), l_s)
        assert p < previous or (scale == 0.0 and p <= previous)
        previous = p


def test_degenerate_entropies_fall_back_to_half():
    l = np.array([1e4, 0.0, 0.0])
    _, p = fuse(l, l + np.array([0.0, 1.0, 2.0]))
    assert p == 0.5


def test_class_count_mismatch():
    with pytest.raises(ValueError, match="mismatch"):
        fuse(np.zeros(3), np.zeros(4))


def test_fuse_batch_consistent(rng):
    A = rng.normal(size=(6, 4))
    B = rng.normal(size=(6, 4))
    fused, ps = fuse_batch(A, B)
    for i in range(6):
        f, p = fuse(A[i], B[i])
        assert np.array_equal(fused[i], f)
        assert ps[i] == p


def test_adaptive_weight_epsilon():
    assert adaptive_weight(np.array([9e9, 0.0]), np.array([8e9, 0.0]), 1e-8) == 0.5


def test_fusion_config_validation():
    with pytest.raises(ValueError):
        FusionConfig(gamma=0.0)
    with pytest.raises(ValueError):
        FusionConfig(mode="mixed")
    with pytest.raises(ValueError):
        FusionConfig(fixed_p=1.5)
    with pytest.raises(ValueError):
        FusionConfig(fuse_space="logit")
