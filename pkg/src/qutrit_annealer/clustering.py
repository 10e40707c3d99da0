"""Clustering instance encoding: distances, weights, oracle, Hamiltonians.

Six 2-D points are partitioned into three clusters.  One point is excluded
and its spin pinned to projection +1; each remaining point gets one active
spin whose projection (1, 0, -1) names its cluster.  The diagonal target
Hamiltonian rewards far-apart points in different clusters and penalizes
them in the same cluster, so its ground states are the weight minimizers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .tensor_core import hilbert_dim, index_of_projections, projection_diagonal
from .spin_ops import spin1_matrices
from . import tensor_core

PAPER_POINTS = ((4.0, -2.0), (-7.0, 7.0), (6.0, -9.0), (-6.0, 8.0), (-2.0, -6.0), (-9.0, 5.0))

# Scale between dipolar coupling constants and pair distances: |J| = eps * R / 24.
DDI_DISTANCE_DIVISOR = 24.0


@dataclass(frozen=True)
class ClusteringInstance:
    """Data points, excluded point index (0-based), and cluster count."""

    points: tuple
    excluded_index: int = 0
    n_clusters: int = 3

    def __post_init__(self):
        object.__setattr__(self, "points", tuple((float(x), float(y)) for x, y in self.points))
        if not 0 <= self.excluded_index < len(self.points):
            raise ValueError(f"excluded_index {self.excluded_index} out of range")
        if self.n_clusters != 3:
            raise ValueError("only three clusters are supported (one spin-1 per point)")
        if len(self.points) < 2:
            raise ValueError("need at least two points")

    @property
    def n_active(self) -> int:
        return len(self.points) - 1

    @property
    def active_order(self):
        """Original point indices of the active spins, in spin order 1..n."""
        return tuple(i for i in range(len(self.points)) if i != self.excluded_index)

    def full_assignment(self, assignment):
        """Per-point projections including the pinned +1 at the excluded point."""
        assignment = tuple(assignment)
        if len(assignment) != self.n_active:
            raise ValueError(f"expected {self.n_active} projections, got {len(assignment)}")
        full = {self.excluded_index: 1}
        for spin, point in enumerate(self.active_order):
            full[point] = assignment[spin]
        return tuple(full[i] for i in range(len(self.points)))


def paper_instance() -> ClusteringInstance:
    """The bundled six-point example with (4, -2) excluded."""
    return ClusteringInstance(PAPER_POINTS)


def distance(p, q) -> float:
    """Euclidean distance between two 2-D points."""
    return float(np.hypot(p[0] - q[0], p[1] - q[1]))


def distance_matrix(instance: ClusteringInstance) -> np.ndarray:
    """Symmetric point-to-point distance matrix with zero diagonal."""
    pts = instance.points
    return np.array([[distance(p, q) for q in pts] for p in pts])


def active_pair_distances(instance: ClusteringInstance) -> np.ndarray:
    """Distances between active spins, indexed by spin order (0-based)."""
    order = instance.active_order
    r = distance_matrix(instance)
    return r[np.ix_(order, order)]


def field_distances(instance: ClusteringInstance) -> np.ndarray:
    """Distances from the excluded point to each active spin."""
    r = distance_matrix(instance)
    return r[instance.excluded_index, list(instance.active_order)]


def weight(assignment, instance: ClusteringInstance) -> float:
    """Sum over clusters of intra-cluster pairwise distances.

    The excluded point participates with its pinned projection +1.  Clusters
    are the level sets of the projection values; singletons contribute zero.
    """
    full = instance.full_assignment(assignment)
    r = distance_matrix(instance)
    total = 0.0
    for label in (1, 0, -1):
        members = [i for i, m in enumerate(full) if m == label]
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                total += r[members[a], members[b]]
    return total


def brute_force_min(instance: ClusteringInstance):
    """All weight-minimizing assignments, by exhaustive search over 3**n.

    Returns the full list of ties (the encoding leaves a residual twofold
    degeneracy under a global swap of the 0 and -1 labels whenever neither
    label is pinned).
    """
    n = instance.n_active
    if n > 10:
        raise ValueError(f"exhaustive search over 3**{n} assignments refused")
    best = None
    minimizers = []
    for assignment in itertools.product((1, 0, -1), repeat=n):
        w = weight(assignment, instance)
        if best is None or w < best - 1e-9:
            best = w
            minimizers = [assignment]
        elif abs(w - best) <= 1e-9:
            minimizers.append(assignment)
    return minimizers


def assignment_index(assignment) -> int:
    """Register basis index of an active-spin assignment."""
    return index_of_projections(assignment)


def build_target_hamiltonian(instance: ClusteringInstance) -> np.ndarray:
    """Diagonal of the target Hamiltonian over the 3**n product basis.

    Per active pair (i, j):  R_ij * [m_i m_j + 3 m_i^2 m_j^2 - 2 m_i^2
    - 2 m_j^2 + 1]  (equal to +R_ij when the projections agree and -R_ij
    otherwise).  Per active spin j:  R_0j * [m_j + m_j^2 - 1], the pair term
    with the excluded spin evaluated at its pinned projection +1.  The
    constant offsets are kept so exponentials carry the exact phases.
    """
    n = instance.n_active
    r = active_pair_distances(instance)
    r0 = field_distances(instance)
    m = [projection_diagonal(site, n) for site in range(1, n + 1)]
    diag = np.zeros(hilbert_dim(n))
    for i in range(n):
        mi2 = m[i] * m[i]
        for j in range(i + 1, n):
            mj2 = m[j] * m[j]
            diag += r[i, j] * (m[i] * m[j] + 3.0 * mi2 * mj2 - 2.0 * mi2 - 2.0 * mj2 + 1.0)
    for j in range(n):
        diag += r0[j] * (m[j] + m[j] * m[j] - 1.0)
    return diag


def build_initial_hamiltonian(h: float, n: int) -> np.ndarray:
    """Transverse-field Hamiltonian -h * sum_j S_j^x as a dense matrix."""
    if h <= 0:
        raise ValueError(f"field strength must be positive, got {h}")
    sx, _, _ = spin1_matrices()
    dim = hilbert_dim(n)
    out = np.zeros((dim, dim), dtype=complex)
    for site in range(1, n + 1):
        out -= h * tensor_core.embed_single_site(sx, site, n)
    return out


def initial_state(n: int) -> np.ndarray:
    """Ground state of the transverse-field Hamiltonian.

    Product of (|1> + sqrt(2)|0> + |-1>)/2 per site, the S^x = +1 eigenvector.
    """
    site = np.array([0.5, np.sqrt(2.0) / 2.0, 0.5], dtype=complex)
    state = site
    for _ in range(n - 1):
        state = np.kron(state, site)
    return state


def ddi_constants(instance: ClusteringInstance, epsilon: float) -> np.ndarray:
    """Dipolar coupling constants J_ij = epsilon * R_ij / 24 for active pairs.

    Stored with positive sign; a sign flip only reverses the direction of the
    free-evolution intervals, which the refocusing algebra absorbs.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    return epsilon * active_pair_distances(instance) / DDI_DISTANCE_DIVISOR


def ddi_diagonal(instance: ClusteringInstance, epsilon: float) -> np.ndarray:
    """Diagonal of sum_{i<j} J_ij S_i^z S_j^z over the product basis."""
    n = instance.n_active
    j = ddi_constants(instance, epsilon)
    m = [projection_diagonal(site, n) for site in range(1, n + 1)]
    diag = np.zeros(hilbert_dim(n))
    for a in range(n):
        for b in range(a + 1, n):
            diag += j[a, b] * m[a] * m[b]
    return diag


def partition_of(assignment, instance: ClusteringInstance):
    """Clusters as tuples of point coordinates, ordered +1, 0, -1."""
    full = instance.full_assignment(assignment)
    clusters = []
    for label in (1, 0, -1):
        clusters.append(tuple(instance.points[i] for i, v in enumerate(full) if v == label))
    return tuple(clusters)


def load_instance(path) -> ClusteringInstance:
    """Read an instance file.

    Format: one ``x y`` pair per line for the points, plus ``excluded = <i>``
    (0-based point index) and ``clusters = <k>`` lines.  ``#`` starts a
    comment.  Missing keys default to excluded = 0, clusters = 3.
    """
    points = []
    excluded = 0
    clusters = 3
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, _, value = line.partition("=")
            key = key.strip().lower()
            if key == "excluded":
                excluded = int(value)
            elif key in ("clusters", "k"):
                clusters = int(value)
            else:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'x y', got {raw!r}")
        points.append((float(parts[0]), float(parts[1])))
    if not points:
        raise ValueError(f"{path}: no points found")
    return ClusteringInstance(tuple(points), excluded_index=excluded, n_clusters=clusters)


def save_instance(instance: ClusteringInstance, path) -> None:
    lines = [f"{x:.17g} {y:.17g}" for x, y in instance.points]
    lines.append(f"excluded = {instance.excluded_index}")
    lines.append(f"clusters = {instance.n_clusters}")
    Path(path).write_text("\n".join(lines) + "\n")
