"""Gate-level intermediate representation of the annealing pulse sequence.

Each annealing step expands into transition-selective rotations, two-tone
drive placeholders, dipolar free-evolution intervals with refocusing
inversions, and explicit global phases.  Composing the ideal matrices of one
step's instructions reproduces the step unitary of the operator-level
annealer exactly; that equivalence is this module's master property.

Instruction lists are ordered by application time: element 0 acts first.
Sequences quoted in operator (right-to-left) notation elsewhere are reversed
here once, at construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import clustering
from .annealer import AnnealSchedule
from .spin_ops import (
    TRANSITION_12,
    TRANSITION_23,
    SelectiveRotation,
    composite_z,
    inversion_pair,
    rotation_matrix,
    spin1_matrices,
)
from .tensor_core import apply_site, hilbert_dim

_SX_EIGVALS, _SX_EIGVECS = np.linalg.eigh(spin1_matrices()[0])


@dataclass(frozen=True)
class TwoToneDrive:
    """Drive of both transitions of one site, realizing exp(+i angle * S^x).

    The positive-angle convention matches the transverse-field half step of
    the annealer (whose Hamiltonian is -h * sum S^x); the compiler maps it
    to a two-tone pulse with phase pi.
    """

    site: int
    angle: float


@dataclass(frozen=True)
class FreeEvolution:
    """Evolution under the full dipolar coupling for ``duration``."""

    duration: float


@dataclass(frozen=True)
class GlobalPhase:
    """Multiply the register state by exp(-i * angle)."""

    angle: float


@dataclass(frozen=True)
class ProgramStep:
    l: int
    instructions: tuple

    def counts(self) -> dict:
        c = {"rotations": 0, "drives": 0, "free_intervals": 0, "phases": 0}
        for instr in self.instructions:
            if isinstance(instr, SelectiveRotation):
                c["rotations"] += 1
            elif isinstance(instr, TwoToneDrive):
                c["drives"] += 1
            elif isinstance(instr, FreeEvolution):
                c["free_intervals"] += 1
            else:
                c["phases"] += 1
        return c


@dataclass(frozen=True)
class Program:
    """Ordered program steps plus the context needed to interpret them."""

    steps: tuple
    n_sites: int
    epsilon: float

    def counts(self) -> dict:
        total = {"rotations": 0, "drives": 0, "free_intervals": 0, "phases": 0}
        for step in self.steps:
            for key, value in step.counts().items():
                total[key] += value
        total["pulses"] = total["rotations"] + total["drives"]
        total["instructions"] = sum(len(s.instructions) for s in self.steps)
        return total

    def per_step_counts(self):
        return [s.counts() for s in self.steps]


def expand_linear_term(site: int, omega: float):
    """Instructions for exp(-i omega S^z): two composite-z blocks of angle 2*omega."""
    return composite_z(2.0 * omega, site, TRANSITION_12) + composite_z(2.0 * omega, site, TRANSITION_23)


def expand_quadratic_term(site: int, phi: float):
    """Instructions for exp(-i 3 phi (S^z)^2).

    Two opposite-angle composite-z blocks plus the explicit residual phase
    exp(-i 2 phi).
    """
    out = composite_z(2.0 * phi, site, TRANSITION_12)
    out += composite_z(-2.0 * phi, site, TRANSITION_23)
    out.append(GlobalPhase(2.0 * phi))
    return out


def refocusing_block(pair, interval: float, n_sites: int = 5):
    """Eight equal free-evolution intervals isolating one dipolar pair.

    Spin inversions on the three spectator spins toggle with periods 1, 2
    and 4 intervals (in ascending site order), so every coupling involving a
    spectator changes sign in exactly half of the intervals and averages to
    zero, while the target pair accumulates exp(-i 8 * interval * J_ab
    S_a^z S_b^z) exactly.
    """
    a, b = pair
    if a == b or not (1 <= a <= n_sites and 1 <= b <= n_sites):
        raise ValueError(f"invalid pair {pair} for {n_sites} sites")
    spectators = [s for s in range(1, n_sites + 1) if s not in (a, b)]
    if len(spectators) != 3:
        raise ValueError("refocusing pattern requires exactly three spectator spins")
    s1, s2, s3 = spectators
    p1, p1_inv = inversion_pair(s1)
    p2, p2_inv = inversion_pair(s2)
    p3, p3_inv = inversion_pair(s3)
    free = [FreeEvolution(interval)]
    quarter = free + p1 + free + p1_inv
    out = []
    out += p3 + p2
    out += quarter + p2_inv
    out += quarter + p3_inv + p2
    out += quarter + p2_inv
    out += quarter
    return out


def expand_pair_term(i: int, j: int, dt_l: float, r_ij: float, epsilon: float, n_sites: int = 5):
    """Instructions for the two-spin quartic factor exp(-i 3 dt_l R (S_i^z)^2 (S_j^z)^2).

    The four embedded pair-evolution factors exp(-i dt_l R S_i^z S_j^z / 3)
    are each a refocusing block whose total dipolar exposure is 8 * t_d with
    t_d = dt_l * R / (24 J) = dt_l / epsilon.  The surrounding z blocks and
    y-pi pulses cancel the single-spin and bilinear content exactly, and the
    explicit phase cancels the constant, so the composition needs no
    phase alignment.
    """
    if i == j:
        raise ValueError("pair term needs two distinct sites")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    a = dt_l * r_ij
    t_d = dt_l / epsilon  # the pair distance cancels against J = eps R / 24
    pair_block = refocusing_block((i, j), t_d, n_sites)

    # Operator (matrix) order; reversed into time order below.
    matrix_order = []
    matrix_order.append(("cz", 4.0 * a / 3.0, i, TRANSITION_12))
    matrix_order.append(("cz", -4.0 * a / 3.0, i, TRANSITION_23))
    matrix_order.append(("gp", 4.0 * a / 3.0))
    matrix_order.append(("y", -np.pi, j, TRANSITION_23))
    matrix_order.append(("cz", 4.0 * a / 3.0, j, TRANSITION_12))
    matrix_order.append(("cz", 4.0 * a / 3.0, j, TRANSITION_23))
    matrix_order.append(("y", -np.pi, i, TRANSITION_23))
    matrix_order.append(("block",))
    matrix_order.append(("y", -np.pi, i, TRANSITION_12))
    matrix_order.append(("block",))
    matrix_order.append(("y", np.pi, i, TRANSITION_12))
    matrix_order.append(("y", np.pi, i, TRANSITION_23))
    matrix_order.append(("y", -np.pi, j, TRANSITION_12))
    matrix_order.append(("cz", 4.0 * a / 3.0, j, TRANSITION_12))
    matrix_order.append(("cz", 4.0 * a / 3.0, j, TRANSITION_23))
    matrix_order.append(("y", -np.pi, i, TRANSITION_23))
    matrix_order.append(("block",))
    matrix_order.append(("y", -np.pi, i, TRANSITION_12))
    matrix_order.append(("block",))
    matrix_order.append(("y", np.pi, i, TRANSITION_12))
    matrix_order.append(("y", np.pi, i, TRANSITION_23))
    matrix_order.append(("y", np.pi, j, TRANSITION_12))
    matrix_order.append(("y", np.pi, j, TRANSITION_23))

    out = []
    for token in reversed(matrix_order):
        kind = token[0]
        if kind == "cz":
            out += composite_z(token[1], token[2], token[3])
        elif kind == "gp":
            out.append(GlobalPhase(token[1]))
        elif kind == "block":
            out += pair_block
        else:
            out.append(SelectiveRotation("y", token[1], token[2], token[3]))
    return out


def expand_transverse_half(l: int, schedule: AnnealSchedule, n_sites: int = 5):
    """One two-tone drive per site for half of the transverse-field step.

    Each drive carries the angle (1 - l/N) * h * dt / 2; the five drives
    commute (disjoint sites) and compose to the half-step exponential of the
    transverse-field Hamiltonian.
    """
    if not 0 <= l <= schedule.n_steps:
        raise ValueError(f"step index {l} out of range 0..{schedule.n_steps}")
    angle = (1.0 - l / schedule.n_steps) * schedule.h * schedule.dt / 2.0
    return [TwoToneDrive(site, angle) for site in range(1, n_sites + 1)]


def build_program(instance: clustering.ClusteringInstance, schedule: AnnealSchedule,
                  epsilon: float) -> Program:
    """Expand the whole annealing run into the gate-level program.

    Per step: the transverse half, then per active site the linear field
    term, the collected quadratic term, and the field constant, then per
    active pair (lexicographic) the bilinear dipolar factor, the quartic
    block, and the pair constant, then the second transverse half.  All
    target-Hamiltonian factors commute, so the ordering inside the step is a
    fixed reproducibility choice.

    The per-site quadratic coefficient collects the field term and the
    -2 R (S^z)^2 contributions of every pair containing the site, matching
    the step-dependent x-rotation angles the pulse tables are built for.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    n = instance.n_active
    r = clustering.active_pair_distances(instance)
    r0 = clustering.field_distances(instance)
    # quadratic coefficients per site: field distance minus twice the pair sum
    c = [r0[s] - 2.0 * sum(r[s, t] for t in range(n) if t != s) for s in range(n)]

    steps = []
    for l in range(schedule.n_steps + 1):
        dt_l = schedule.dt_l(l)
        instrs = []
        instrs += expand_transverse_half(l, schedule, n)
        for s in range(n):
            site = s + 1
            instrs += expand_linear_term(site, dt_l * r0[s])
            instrs += expand_quadratic_term(site, dt_l * c[s] / 3.0)
            instrs.append(GlobalPhase(-dt_l * r0[s]))
        for a in range(n):
            for b in range(a + 1, n):
                t_d = dt_l / epsilon
                instrs += refocusing_block((a + 1, b + 1), 3.0 * t_d, n)
                instrs += expand_pair_term(a + 1, b + 1, dt_l, r[a, b], epsilon, n)
                instrs.append(GlobalPhase(dt_l * r[a, b]))
        instrs += expand_transverse_half(l, schedule, n)
        steps.append(ProgramStep(l, tuple(instrs)))
    return Program(tuple(steps), n_sites=n, epsilon=epsilon)


# ---------------------------------------------------------------------------
# ideal-matrix evaluation


def instruction_matrix(instr, n_sites: int, ddi_diag: np.ndarray) -> np.ndarray:
    """Dense ideal matrix of one instruction on the full register."""
    dim = hilbert_dim(n_sites)
    if isinstance(instr, SelectiveRotation):
        from .tensor_core import embed_single_site

        return embed_single_site(rotation_matrix(instr), instr.site, n_sites)
    if isinstance(instr, TwoToneDrive):
        from .tensor_core import embed_single_site

        return embed_single_site(_sx_rotation(instr.angle), instr.site, n_sites)
    if isinstance(instr, FreeEvolution):
        return np.diag(np.exp(-1j * instr.duration * ddi_diag))
    if isinstance(instr, GlobalPhase):
        return np.exp(-1j * instr.angle) * np.eye(dim, dtype=complex)
    raise TypeError(f"unknown instruction {instr!r}")


def _sx_rotation(angle: float) -> np.ndarray:
    """exp(+i angle S^x) on one site."""
    phases = np.exp(1j * angle * _SX_EIGVALS)
    return (_SX_EIGVECS * phases) @ _SX_EIGVECS.conj().T


def apply_instructions(instructions, target: np.ndarray, n_sites: int,
                       ddi_diag: np.ndarray) -> np.ndarray:
    """Apply instructions in time order to a state vector or operator matrix.

    Single-site factors are contracted in place instead of via dense
    products, which keeps full-step composition cheap.
    """
    out = target.astype(complex, copy=True)
    for instr in instructions:
        if isinstance(instr, SelectiveRotation):
            out = apply_site(rotation_matrix(instr), instr.site, n_sites, out)
        elif isinstance(instr, TwoToneDrive):
            out = apply_site(_sx_rotation(instr.angle), instr.site, n_sites, out)
        elif isinstance(instr, FreeEvolution):
            phases = np.exp(-1j * instr.duration * ddi_diag)
            out = phases[:, None] * out if out.ndim == 2 else phases * out
        elif isinstance(instr, GlobalPhase):
            out = np.exp(-1j * instr.angle) * out
        else:
            raise TypeError(f"unknown instruction {instr!r}")
    return out


def step_matrix(step: ProgramStep, n_sites: int, ddi_diag: np.ndarray) -> np.ndarray:
    """Ideal unitary of one program step."""
    identity = np.eye(hilbert_dim(n_sites), dtype=complex)
    return apply_instructions(step.instructions, identity, n_sites, ddi_diag)


def phase_aligned_distance(a: np.ndarray, b: np.ndarray) -> float:
    """max-norm distance between two operators after optimal global phase."""
    overlap = np.vdot(b, a)
    phase = overlap / abs(overlap) if overlap != 0 else 1.0
    return float(np.max(np.abs(a - phase * b)))


def verify_step_equivalence(program: Program, instance: clustering.ClusteringInstance,
                            schedule: AnnealSchedule):
    """Per-step max-norm distance between the program and the annealer steps.

    Distances are measured up to a global phase, although the construction
    keeps even the raw phases aligned.
    """
    from .annealer import IdealAnnealer

    ann = IdealAnnealer(instance)
    ddi_diag = clustering.ddi_diagonal(instance, program.epsilon)
    v, lam = ann._x_eigvecs, ann._x_eigvals
    distances = []
    for step in program.steps:
        beta = 0.5 * schedule.dt * (1.0 - step.l / schedule.n_steps)
        half = (v * np.exp(1j * beta * schedule.h * lam)) @ v.conj().T
        middle = np.exp(-1j * schedule.dt_l(step.l) * ann.hf_diag)
        ideal = half @ (middle[:, None] * half)
        composed = step_matrix(step, program.n_sites, ddi_diag)
        distances.append(phase_aligned_distance(composed, ideal))
    return np.array(distances)


# ---------------------------------------------------------------------------
# serialization

_AXIS_TOKENS = {"x", "y", "z"}


def serialize_program(program: Program) -> str:
    """Line-oriented text form, one instruction per line, in time order.

    ``STEP l`` separates steps; instruction lines are ``ROT axis angle site
    transition``, ``DRIVE site angle``, ``FREE duration`` and ``PHASE angle``
    with 17-significant-digit decimals.
    """
    lines = [f"# qutrit-annealer gate program v1",
             f"# n_sites = {program.n_sites}",
             f"# epsilon = {program.epsilon:.17g}"]
    for step in program.steps:
        lines.append(f"STEP {step.l}")
        for instr in step.instructions:
            if isinstance(instr, SelectiveRotation):
                lines.append(f"ROT {instr.axis} {instr.angle:.17g} {instr.site} {instr.transition}")
            elif isinstance(instr, TwoToneDrive):
                lines.append(f"DRIVE {instr.site} {instr.angle:.17g}")
            elif isinstance(instr, FreeEvolution):
                lines.append(f"FREE {instr.duration:.17g}")
            elif isinstance(instr, GlobalPhase):
                lines.append(f"PHASE {instr.angle:.17g}")
            else:
                raise TypeError(f"unknown instruction {instr!r}")
    return "\n".join(lines) + "\n"


def parse_program(text: str) -> Program:
    """Inverse of :func:`serialize_program`."""
    n_sites = None
    epsilon = None
    steps = []
    current_l = None
    current = []

    def flush():
        if current_l is not None:
            steps.append(ProgramStep(current_l, tuple(current)))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if body.startswith("n_sites"):
                n_sites = int(body.split("=", 1)[1])
            elif body.startswith("epsilon"):
                epsilon = float(body.split("=", 1)[1])
            continue
        if not line:
            continue
        tokens = line.split()
        tag = tokens[0].upper()
        if tag == "STEP":
            flush()
            current_l = int(tokens[1])
            current = []
        elif tag == "ROT":
            if tokens[1] not in _AXIS_TOKENS:
                raise ValueError(f"line {lineno}: bad axis {tokens[1]!r}")
            current.append(SelectiveRotation(tokens[1], float(tokens[2]), int(tokens[3]), tokens[4]))
        elif tag == "DRIVE":
            current.append(TwoToneDrive(int(tokens[1]), float(tokens[2])))
        elif tag == "FREE":
            current.append(FreeEvolution(float(tokens[1])))
        elif tag == "PHASE":
            current.append(GlobalPhase(float(tokens[1])))
        else:
            raise ValueError(f"line {lineno}: unknown record {tag!r}")
    flush()
    if n_sites is None or epsilon is None or not steps:
        raise ValueError("missing program header or steps")
    return Program(tuple(steps), n_sites=n_sites, epsilon=epsilon)
