import itertools

import numpy as np
import pytest

from qutrit_annealer import clustering
from qutrit_annealer.clustering import (
    ClusteringInstance,
    assignment_index,
    brute_force_min,
    build_initial_hamiltonian,
    build_target_hamiltonian,
    ddi_constants,
    ddi_diagonal,
    distance,
    distance_matrix,
    field_distances,
    initial_state,
    load_instance,
    paper_instance,
    partition_of,
    save_instance,
    weight,
)
from qutrit_annealer.tensor_core import hilbert_dim, index_of_projections

INSTANCE = paper_instance()

# squared pair distances of the bundled example, keyed by active spin pair
SQUARED_PAIR = {(1, 2): 425, (1, 3): 2, (1, 4): 194, (1, 5): 8, (2, 3): 433,
                (2, 4): 73, (2, 5): 421, (3, 4): 212, (3, 5): 18, (4, 5): 170}
SQUARED_FIELD = {1: 202, 2: 53, 3: 200, 4: 52, 5: 218}

MIN_WEIGHT = np.sqrt(52) + np.sqrt(2) + np.sqrt(8) + np.sqrt(18)  # 15.6963839...
MINIMIZERS = {(-1, 0, -1, 1, -1), (0, -1, 0, 1, 0)}


def test_distance_examples():
    assert distance((4, -2), (6, -9)) == pytest.approx(np.sqrt(53))
    assert distance((-7, 7), (6, -9)) == pytest.approx(np.sqrt(425))
    assert distance((1.5, -2.5), (1.5, -2.5)) == 0.0


def test_distance_matrix_properties():
    r = distance_matrix(INSTANCE)
    assert np.allclose(r, r.T)
    assert np.allclose(np.diag(r), 0.0)
    n = len(INSTANCE.points)
    for i, j, k in itertools.permutations(range(n), 3):
        assert r[i, j] <= r[i, k] + r[k, j] + 1e-12


def test_pair_distances_match_reference_constants():
    r = clustering.active_pair_distances(INSTANCE)
    for (i, j), squared in SQUARED_PAIR.items():
        assert r[i - 1, j - 1] == pytest.approx(np.sqrt(squared), abs=1e-12)
    r0 = field_distances(INSTANCE)
    for spin, squared in SQUARED_FIELD.items():
        assert r0[spin - 1] == pytest.approx(np.sqrt(squared), abs=1e-12)


def test_weight_all_in_one_cluster_sums_every_pair():
    r = distance_matrix(INSTANCE)
    total = sum(r[i, j] for i in range(6) for j in range(i + 1, 6))
    assert weight((1, 1, 1, 1, 1), INSTANCE) == pytest.approx(total)


def test_weight_of_reference_minimizer():
    assert weight((-1, 0, -1, 1, -1), INSTANCE) == pytest.approx(MIN_WEIGHT)
    assert weight((-1, 0, -1, 1, -1), INSTANCE) == pytest.approx(15.696, abs=5e-4)


def test_weight_singletons_contribute_zero():
    lone = ClusteringInstance(((0, 0), (10, 0), (0, 10)))
    assert weight((0, -1), lone) == 0.0


def test_brute_force_minimizers():
    found = set(brute_force_min(INSTANCE))
    assert found == MINIMIZERS


def test_brute_force_identical_points_share_cluster():
    inst = ClusteringInstance(((0, 0), (5, 5), (5, 5), (50, 50), (-60, 20)))
    for assignment in brute_force_min(inst):
        assert assignment[0] == assignment[1]  # the two identical points


def test_brute_force_returns_all_ties():
    # equilateral triangle: every all-singleton split ties at weight zero,
    # which leaves both assignments of the two free labels to the two spins
    inst = ClusteringInstance(((0, 0), (1, 0), (0.5, np.sqrt(3) / 2)))
    ties = brute_force_min(inst)
    assert set(ties) == {(0, -1), (-1, 0)}
    assert all(weight(a, inst) == pytest.approx(0.0) for a in ties)


def test_brute_force_refuses_large_instances():
    points = tuple((float(i), 0.0) for i in range(13))
    with pytest.raises(ValueError):
        brute_force_min(ClusteringInstance(points))


def test_target_hamiltonian_pair_values():
    # two active spins far from the excluded point isolate a single pair term
    inst = ClusteringInstance(((1000.0, 1000.0), (0.0, 0.0), (3.0, 4.0)))
    diag = build_target_hamiltonian(inst)
    r = 5.0
    r0 = field_distances(inst)
    base = -(r0[0] + r0[1])  # both spins away from the excluded cluster
    same = diag[index_of_projections((0, 0))]
    diff = diag[index_of_projections((0, -1))]
    assert same - base == pytest.approx(r, abs=1e-9)
    assert diff - base == pytest.approx(-r, abs=1e-9)


def test_energy_is_affine_image_of_weight():
    diag = build_target_hamiltonian(INSTANCE)
    r = distance_matrix(INSTANCE)
    total = sum(r[i, j] for i in range(6) for j in range(i + 1, 6))
    for assignment in itertools.product((1, 0, -1), repeat=5):
        e = diag[assignment_index(assignment)]
        w = weight(assignment, INSTANCE)
        assert e == pytest.approx(2.0 * w - total, abs=1e-9)


def test_energy_minimizers_match_weight_minimizers():
    diag = build_target_hamiltonian(INSTANCE)
    best = np.min(diag)
    argmins = {tuple(clustering.tensor_core.projections_of_index(int(i), 5))
               for i in np.where(diag < best + 1e-9)[0]}
    assert argmins == MINIMIZERS


def test_target_invariant_under_global_label_swap():
    diag = build_target_hamiltonian(INSTANCE)
    swap = {1: 1, 0: -1, -1: 0}
    for assignment in itertools.product((1, 0, -1), repeat=5):
        swapped = tuple(swap[m] for m in assignment)
        assert diag[assignment_index(assignment)] == pytest.approx(
            diag[assignment_index(swapped)], abs=1e-9
        )


def test_initial_hamiltonian_ground_state():
    h0 = build_initial_hamiltonian(6.5, 5)
    psi = initial_state(5)
    assert np.max(np.abs(h0 @ psi - (-5 * 6.5) * psi)) < 1e-10
    eigvals = np.linalg.eigvalsh(h0)
    assert eigvals[0] == pytest.approx(-5 * 6.5, abs=1e-10)


def test_initial_hamiltonian_rejects_nonpositive_field():
    with pytest.raises(ValueError):
        build_initial_hamiltonian(0.0, 5)


def test_initial_state_amplitudes():
    psi = initial_state(5)
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-15)
    all_zero = index_of_projections((0, 0, 0, 0, 0))
    assert psi[all_zero] == pytest.approx((np.sqrt(2) / 2) ** 5)
    assert abs(np.vdot(psi, psi)) == pytest.approx(1.0, abs=1e-15)


def test_ddi_constants_scale_with_distance():
    j = ddi_constants(INSTANCE, 1e-6)
    assert j[0, 1] == pytest.approx(1e-6 * np.sqrt(425) / 24)
    assert j[3, 4] == pytest.approx(1e-6 * np.sqrt(170) / 24)
    assert np.allclose(ddi_constants(INSTANCE, 0.0), 0.0)
    r = clustering.active_pair_distances(INSTANCE)
    assert np.allclose(np.abs(j), 1e-6 * r / 24)


def test_ddi_diagonal_matches_pairwise_sum():
    diag = ddi_diagonal(INSTANCE, 1e-6)
    assert diag.shape == (hilbert_dim(5),)
    # spot check one basis state: all projections +1 -> sum of all J
    j = ddi_constants(INSTANCE, 1e-6)
    total = sum(j[a, b] for a in range(5) for b in range(a + 1, 5))
    assert diag[index_of_projections((1, 1, 1, 1, 1))] == pytest.approx(total)


def test_partition_of_reference_minimizer():
    clusters = partition_of((-1, 0, -1, 1, -1), INSTANCE)
    assert set(clusters[0]) == {(4.0, -2.0), (-2.0, -6.0)}
    assert set(clusters[1]) == {(6.0, -9.0)}
    assert set(clusters[2]) == {(-7.0, 7.0), (-6.0, 8.0), (-9.0, 5.0)}


def test_instance_file_round_trip(tmp_path):
    path = tmp_path / "points.txt"
    save_instance(INSTANCE, path)
    loaded = load_instance(path)
    assert loaded == INSTANCE


def test_instance_file_parsing(tmp_path):
    path = tmp_path / "inst.txt"
    path.write_text("# demo\n0 0\n1.5 -2\n3 4\nexcluded = 1\nclusters = 3\n")
    inst = load_instance(path)
    assert inst.points == ((0.0, 0.0), (1.5, -2.0), (3.0, 4.0))
    assert inst.excluded_index == 1
    bad = tmp_path / "bad.txt"
    bad.write_text("1 2 3\n")
    with pytest.raises(ValueError):
        load_instance(bad)


def test_instance_validation():
    with pytest.raises(ValueError):
        ClusteringInstance(((0, 0), (1, 1)), excluded_index=5)
    with pytest.raises(ValueError):
        ClusteringInstance(((0, 0), (1, 1)), n_clusters=2)
