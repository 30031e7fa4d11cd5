import numpy as np
import pytest

from bftt3d import FusionConfig, SubspaceConfig, TestTimeAdapter, build_memory


@pytest.fixture()
def toy_memory(rng):
    feats = np.vstack([
        rng.normal(loc=0.0, size=(20, 12)),
        rng.normal(loc=3.0, size=(20, 12)),
        rng.normal(loc=-3.0, size=(20, 12)),
    ])
    labels = np.repeat([0, 1, 2], 20)
    return build_memory(feats, labels, ratio=0.5)


def _targets(rng, n=30):
    return np.vstack([
        rng.normal(loc=0.2, size=(n // 3, 12)),
        rng.normal(loc=3.2, size=(n // 3, 12)),
        rng.normal(loc=-2.8, size=(n // 3, 12)),
    ])


def test_adaptation_logit_shape(toy_memory, rng):
    adapter = TestTimeAdapter(toy_memory, SubspaceConfig(n_components=4, batch_size=16))
    logits = adapter.adaptation_logits(_targets(rng))
    assert logits.shape == (30, 3)
    assert np.isfinite(logits).all()
    assert (logits > 0).all()  # phi outputs are positive


def test_identity_subspace_matches_direct_similarity(toy_memory, rng):
    from bftt3d.fusion import bf_logits, similarity

    targets = _targets(rng)
    adapter = TestTimeAdapter(
        toy_memory, SubspaceConfig(method="none"), FusionConfig(gamma=5.0)
    )
    logits = adapter.adaptation_logits(targets)
    expected = bf_logits(similarity(targets, toy_memory.features), toy_memory.labels, 5.0)
    assert np.allclose(logits, expected, atol=1e-12)


def test_fixed_p_zero_reproduces_source(toy_memory, rng):
    targets = _targets(rng)
    source_logits = rng.normal(size=(30, 3))
    adapter = TestTimeAdapter(
        toy_memory,
        SubspaceConfig(n_components=4, batch_size=16),
        FusionConfig(mode="fixed", fixed_p=0.0),
    )
    preds = adapter.predict(targets, source_logits)
    assert np.array_equal(preds, source_logits.argmax(axis=1))


def test_fixed_p_one_reproduces_adaptation_branch(toy_memory, rng):
    targets = _targets(rng)
    source_logits = rng.normal(size=(30, 3))
    adapter = TestTimeAdapter(
        toy_memory,
        SubspaceConfig(n_components=4, batch_size=16),
        FusionConfig(mode="fixed", fixed_p=1.0, gamma=5.0),
    )
    fused, p, l_bf = adapter.predict_logits(targets, source_logits)
    assert np.array_equal(fused.argmax(axis=1), l_bf.argmax(axis=1))
    assert (p == 1.0).all()


def test_batch_size_does_not_change_identity_arm(toy_memory, rng):
    targets = _targets(rng)
    base = TestTimeAdapter(toy_memory, SubspaceConfig(method="none", batch_size=7))
    full = TestTimeAdapter(toy_memory, SubspaceConfig(method="none", batch_size=64))
    assert np.allclose(base.adaptation_logits(targets), full.adaptation_logits(targets), atol=1e-12)


def test_source_logit_alignment_checked(toy_memory, rng):
    adapter = TestTimeAdapter(toy_memory, SubspaceConfig(n_components=4))
    with pytest.raises(ValueError, match="align"):
        adapter.predict_logits(_targets(rng), np.zeros((5, 3)))
    with pytest.raises(ValueError, match="classes"):
        adapter.predict_logits(_targets(rng), np.zeros((30, 7)))


def test_dimension_mismatch_rejected(toy_memory, rng):
    adapter = TestTimeAdapter(toy_memory, SubspaceConfig(n_components=4))
    with pytest.raises(ValueError, match="dim"):
        adapter.adaptation_logits(rng.normal(size=(5, 9)))


def test_subspace_config_validation():
    with pytest.raises(ValueError):
        SubspaceConfig(method="jda")
    with pytest.raises(ValueError):
        SubspaceConfig(batch_size=0)
    with pytest.raises(ValueError):
        SubspaceConfig(mu=-1.0)
