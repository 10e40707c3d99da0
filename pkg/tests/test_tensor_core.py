import numpy as np
import pytest

from qutrit_annealer.tensor_core import (
    UnitaryCache,
    apply,
    apply_site,
    basis_state,
    embed_single_site,
    expm_hermitian,
    hilbert_dim,
    index_of_projections,
    max_hermiticity_defect,
    max_unitarity_defect,
    projection_diagonal,
    projections_of_index,
    quantize,
)
from qutrit_annealer.spin_ops import spin1_matrices

RNG = np.random.default_rng(20240512)


def random_hermitian(dim, rng=RNG):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (a + a.conj().T) / 2


def test_index_round_trip():
    for idx in range(hilbert_dim(3)):
        assert index_of_projections(projections_of_index(idx, 3)) == idx


def test_index_ordering_site1_most_significant():
    # |m1=1,...> occupies the first 3^(n-1) indices
    assert index_of_projections((1, 1, 1)) == 0
    assert index_of_projections((1, 0, -1)) == 5
    assert index_of_projections((-1, -1, -1)) == 26
    with pytest.raises(ValueError):
        index_of_projections((2, 0, 0))


def test_projection_diagonal_matches_embedding():
    _, _, sz = spin1_matrices()
    for site in (1, 2, 3):
        full = embed_single_site(sz, site, 3)
        assert np.allclose(np.diag(full).real, projection_diagonal(site, 3))


def test_embed_identity_is_identity():
    out = embed_single_site(np.eye(3), 2, 5)
    assert out.shape == (243, 243)
    assert np.array_equal(out, np.eye(243, dtype=complex))


def test_embed_sz_eigenvalue():
    _, _, sz = spin1_matrices()
    state = basis_state((1, 0))
    out = embed_single_site(sz, 1, 2) @ state
    assert np.allclose(out, 1.0 * state)
    out2 = embed_single_site(sz, 2, 2) @ state
    assert np.allclose(out2, 0.0 * state)


def test_disjoint_sites_commute():
    sx, _, sz = spin1_matrices()
    a = embed_single_site(sz, 1, 2) @ embed_single_site(sx, 2, 2)
    b = embed_single_site(sx, 2, 2) @ embed_single_site(sz, 1, 2)
    assert np.allclose(a, b, atol=1e-14)


def test_embed_site_out_of_range():
    with pytest.raises(ValueError):
        embed_single_site(np.eye(3), 0, 2)
    with pytest.raises(ValueError):
        embed_single_site(np.eye(3), 3, 2)


def test_apply_site_matches_embedding():
    rng = np.random.default_rng(7)
    op = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    vec = rng.normal(size=27) + 1j * rng.normal(size=27)
    mat = rng.normal(size=(27, 27)) + 1j * rng.normal(size=(27, 27))
    for site in (1, 2, 3):
        dense = embed_single_site(op, site, 3)
        assert np.allclose(apply_site(op, site, 3, vec), dense @ vec)
        assert np.allclose(apply_site(op, site, 3, mat), dense @ mat)


def test_expm_zero_time_is_identity():
    h = random_hermitian(9)
    assert np.allclose(expm_hermitian(h, 0.0), np.eye(9), atol=1e-14)


def test_expm_diagonal_case():
    d = np.array([1.5, -0.25, 3.0])
    u = expm_hermitian(np.diag(d).astype(complex), 0.7)
    assert np.allclose(u, np.diag(np.exp(-1j * d * 0.7)), atol=1e-14)


def test_expm_resonant_block_pi_rotation():
    # drive amplitude h on the upper transition only; sqrt(2)*h*t = pi gives
    # the selective pi rotation with -i off-diagonal entries
    h = 0.37
    block = np.zeros((3, 3), dtype=complex)
    block[0, 1] = block[1, 0] = h / np.sqrt(2.0)
    t = np.pi / (np.sqrt(2.0) * h)
    u = expm_hermitian(embed_single_site(block, 1, 1), t)
    expected = np.array([[0, -1j, 0], [-1j, 0, 0], [0, 0, 1]], dtype=complex)
    assert np.max(np.abs(u - expected)) < 1e-12


def test_expm_additivity():
    h = random_hermitian(27)
    u = expm_hermitian(h, 0.3) @ expm_hermitian(h, 1.1)
    assert np.max(np.abs(u - expm_hermitian(h, 1.4))) < 1e-10


def test_expm_unitarity():
    for dim in (3, 9, 243):
        u = expm_hermitian(random_hermitian(dim), 2.1)
        assert max_unitarity_defect(u) < 1e-9


def test_expm_rejects_non_hermitian():
    bad = np.array([[0, 1], [0, 0]], dtype=complex)
    with pytest.raises(ValueError):
        expm_hermitian(bad, 1.0)


def test_apply_identity_and_inverse():
    rng = np.random.default_rng(11)
    state = rng.normal(size=27) + 1j * rng.normal(size=27)
    state /= np.linalg.norm(state)
    assert np.allclose(apply(state, np.eye(27)), state)
    u = expm_hermitian(random_hermitian(27), 0.9)
    there = apply(state, u)
    assert abs(np.linalg.norm(there) - 1.0) < 1e-12
    back = apply(there, u.conj().T)
    assert np.max(np.abs(back - state)) < 1e-10


def test_apply_dimension_mismatch():
    with pytest.raises(ValueError):
        apply(np.zeros(9), np.eye(27))


def test_norm_drift_over_many_applications():
    u = expm_hermitian(random_hermitian(243), 1.3)
    state = np.zeros(243, dtype=complex)
    state[0] = 1.0
    for _ in range(10_000):
        state = u @ state
    assert abs(np.linalg.norm(state) - 1.0) < 1e-9


def test_hermiticity_defect():
    h = random_hermitian(9)
    assert max_hermiticity_defect(h) < 1e-15
    assert max_hermiticity_defect(np.zeros((3, 3))) == 0.0


def test_quantize_twelve_significant_digits():
    assert quantize(1.0) == quantize(1.0 + 1e-14)
    assert quantize(1.0) != quantize(1.0 + 1e-11)


def test_cache_hit_returns_identical_object():
    cache = UnitaryCache()
    key = UnitaryCache.key("single", -42000.0, 0.5124, 4.3354, 0.0)
    built = cache.get_or_build(key, lambda: np.eye(3, dtype=complex))
    again = cache.get_or_build(key, lambda: pytest.fail("builder must not rerun"))
    assert built is again
    assert cache.hits == 1 and cache.misses == 1
    assert cache.stats()["entries"] == 1


def test_cache_distinguishes_quantized_parameters():
    cache = UnitaryCache()
    k1 = UnitaryCache.key("single", 1.0)
    k2 = UnitaryCache.key("single", 1.0 + 5e-15)  # below quantization
    k3 = UnitaryCache.key("single", 1.001)
    assert k1 == k2
    assert k1 != k3
