import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roadmap.core import (
    DomainError,
    RankingInstance,
    build_instance,
    cosine_similarity,
    cosine_similarity_backward,
    cosine_similarity_matrix,
    cosine_similarity_matrix_backward,
)


def test_cosine_axes():
    s = cosine_similarity([1.0, 0.0], [[1, 0], [0, 1], [-1, 0]])
    np.testing.assert_allclose(s.ravel(), [1, 0, -1])


def test_cosine_self_and_rotated():
    assert cosine_similarity([1, 1], [[1, 1]]).item() == pytest.approx(1.0)
    assert cosine_similarity([3, 4], [[4, 3]]).item() == pytest.approx(0.96)


def test_zero_norm_names_row():
    with pytest.raises(DomainError, match="1"):
        cosine_similarity([1, 0], [[1, 0], [0, 0]])


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 50), st.integers(0, 10_000))
def test_cosine_scale_invariant(c, seed):
    rng = np.random.default_rng(seed)
    q, g = rng.standard_normal(4), rng.standard_normal((3, 4))
    np.testing.assert_allclose(cosine_similarity(c * q, g), cosine_similarity(q, g), atol=1e-12)


def test_backward_zero_upstream():
    gq, gg = cosine_similarity_backward([1.0, 2.0], [[0.5, 1.0]], np.zeros((1, 1)))
    assert not gq.any() and not gg.any()


def test_backward_orthogonal_unit():
    gq, _ = cosine_similarity_backward([1.0, 0.0], [[0.0, 1.0]], np.ones((1, 1)))
    np.testing.assert_allclose(np.ravel(gq), [0.0, 1.0], atol=1e-15)


def _num_grad(f, x, h=1e-6):
    out = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        e = np.zeros_like(x)
        e[idx] = h
        out[idx] = (f(x + e) - f(x - e)) / (2 * h)
    return out


@pytest.mark.parametrize("seed", range(100))
def test_backward_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    q, g = rng.standard_normal(5), rng.standard_normal((3, 5))
    up = rng.standard_normal((1, 3))
    gq, gg = cosine_similarity_backward(q, g, up)
    nq = _num_grad(lambda x: float((cosine_similarity(x, g) * up).sum()), q)
    ng = _num_grad(lambda x: float((cosine_similarity(q, x) * up).sum()), g)
    np.testing.assert_allclose(np.ravel(gq), nq, rtol=1e-4, atol=1e-8)
    np.testing.assert_allclose(gg, ng, rtol=1e-4, atol=1e-8)


def test_matrix_backward_matches_finite_differences():
    rng = np.random.default_rng(3)
    emb, up = rng.standard_normal((6, 4)), rng.standard_normal((6, 6))
    g = cosine_similarity_matrix_backward(emb, up)
    n = _num_grad(lambda x: float((cosine_similarity_matrix(x) * up).sum()), emb)
    np.testing.assert_allclose(g, n, rtol=1e-4, atol=1e-8)


def test_instances_from_labels():
    a = build_instance([0, 0, 1], 0)
    assert a.positives.tolist() == [1] and a.negatives.tolist() == [2]
    assert build_instance([0, 1, 2], 0).flagged
    c = build_instance([3, 3, 3, 7], 2)
    assert c.positives.tolist() == [0, 1] and c.negatives.tolist() == [3]
    assert not c.flagged and c.size == 3


def test_from_masks():
    inst = RankingInstance.from_masks([True, False, True])
    assert inst.positives.tolist() == [0, 2] and inst.negatives.tolist() == [1]
