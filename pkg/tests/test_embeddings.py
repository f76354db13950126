import json

import numpy as np
import pytest

from memlab import embeddings as em


@pytest.mark.parametrize("kind,k", [("identity", 5), ("coupled_rotation", 9), ("random_orthonormal", 12)])
def test_orthonormal(kind, k):
    pair = em.make_embeddings(kind, k, seed=3)
    assert pair.k == k
    assert pair.orthonormality_error() < 1e-12


def test_random_orthonormal_large_k():
    assert em.random_orthonormal(300, 1).orthonormality_error() < 1e-11


def test_rotation_block_is_rotation():
    r = em.rotation_block(*em.OBJECT_ANGLES)
    assert np.allclose(r.T @ r, np.eye(3), atol=1e-14)
    assert np.isclose(np.linalg.det(r), 1.0)


def test_coupled_is_block_diagonal():
    pair = em.coupled_embeddings(6)
    assert not pair.e[:3, 3:].any() and not pair.e_til[3:, :3].any()
    assert np.allclose(pair.e[:3, :3], em.rotation_block(*em.KEY_ANGLES))
    assert np.allclose(pair.e_til[3:, 3:], em.rotation_block(*em.OBJECT_ANGLES))


def test_coupled_needs_multiple_of_three():
    with pytest.raises(ValueError, match="k mod 3"):
        em.coupled_embeddings(10)


def test_seed_determinism_and_isolation():
    a = em.random_orthonormal(8, 42)
    b = em.random_orthonormal(8, 42)
    c = em.random_orthonormal(8, 43)
    assert np.array_equal(a.e, b.e) and np.array_equal(a.e_til, b.e_til)
    assert not np.allclose(a.e, c.e)


@pytest.mark.parametrize("k", [0, 1, 2.5])
def test_bad_k(k):
    with pytest.raises(ValueError):
        em.identity_embeddings(k)


def test_unknown_kind():
    with pytest.raises(ValueError, match="unknown embedding kind"):
        em.make_embeddings("sparse", 4)


def test_aliases():
    assert em.make_embeddings("coupled", 3).kind == "coupled_rotation"
    assert em.make_embeddings("random", 3, 1).kind == "random_orthonormal"


def test_json_round_trip():
    pair = em.random_orthonormal(5, 7)
    back = em.EmbeddingPair.from_json(json.loads(json.dumps(pair.to_json())))
    assert np.array_equal(back.e, pair.e) and np.array_equal(back.e_til, pair.e_til)
    assert back.seed == 7 and back.kind == pair.kind


def test_matrix_json_rejects_bad_length():
    with pytest.raises(ValueError, match="expected 2x2"):
        em.matrix_from_json({"rows": 2, "cols": 2, "values": [1.0, 2.0, 3.0]})


def test_gram_schmidt_rejects_dependent_columns():
    with pytest.raises(ValueError, match="column 1"):
        em.gram_schmidt(np.array([[1.0, 2.0], [1.0, 2.0]]))


def test_smallest_identity():
    pair = em.identity_embeddings(2)
    assert np.array_equal(pair.e, np.eye(2)) and pair.orthonormality_error() == 0.0


def test_rotation_block_zero_angles():
    assert np.allclose(em.rotation_block(0.0, 0.0, 0.0), np.eye(3))


def test_rotation_blocks_random_angles():
    rng = np.random.default_rng(0)
    for a, b, c in rng.uniform(-np.pi, 2 * np.pi, size=(100, 3)):
        r = em.rotation_block(a, b, c)
        assert np.abs(r.T @ r - np.eye(3)).max() < 1e-12


def test_coupled_k999():
    assert em.coupled_embeddings(999).orthonormality_error() < 1e-10


def test_random_seeds_differ_clearly():
    a, b = em.random_orthonormal(5, 0), em.random_orthonormal(5, 1)
    assert np.linalg.norm(a.e - b.e) > 0.1
    assert np.array_equal(a.e, em.random_orthonormal(5, 0).e)
