import numpy as np
import pytest

from qutrit_annealer.annealer import AnnealSchedule
from qutrit_annealer.clustering import (
    active_pair_distances,
    ddi_constants,
    ddi_diagonal,
    field_distances,
    paper_instance,
)
from qutrit_annealer.sequencer import (
    FreeEvolution,
    GlobalPhase,
    Program,
    ProgramStep,
    SelectiveRotation,
    TwoToneDrive,
    apply_instructions,
    build_program,
    expand_linear_term,
    expand_pair_term,
    expand_quadratic_term,
    expand_transverse_half,
    instruction_matrix,
    parse_program,
    phase_aligned_distance,
    refocusing_block,
    serialize_program,
    step_matrix,
    verify_step_equivalence,
)
from qutrit_annealer.spin_ops import spin1_matrices
from qutrit_annealer.tensor_core import embed_single_site, expm_hermitian, projection_diagonal

INSTANCE = paper_instance()
EPS = 1e-6
DDI = ddi_diagonal(INSTANCE, EPS)
M = [projection_diagonal(site, 5) for site in range(1, 6)]


def compose(instructions, ddi=DDI):
    return apply_instructions(instructions, np.eye(243, dtype=complex), 5, ddi)


def test_expand_linear_term_identity_at_zero():
    u = compose(expand_linear_term(2, 0.0))
    assert np.max(np.abs(u - np.eye(243))) < 1e-12


def test_expand_linear_term_matches_exponential():
    omega = 0.83
    u = compose(expand_linear_term(2, omega))
    expected = np.diag(np.exp(-1j * omega * M[1]))
    assert np.max(np.abs(u - expected)) < 1e-12


def test_expand_linear_term_full_turn():
    u = compose(expand_linear_term(4, 2 * np.pi))
    assert phase_aligned_distance(u, np.eye(243, dtype=complex)) < 1e-12


def test_expand_quadratic_term_matches_exponential():
    phi = -0.41
    u = compose(expand_quadratic_term(3, phi))
    expected = np.diag(np.exp(-3j * phi * M[2] ** 2))
    assert np.max(np.abs(u - expected)) < 1e-12
    assert np.max(np.abs(compose(expand_quadratic_term(3, 0.0)) - np.eye(243))) < 1e-12


def test_linear_and_quadratic_commute():
    omega, phi = 0.31, 0.77
    u1 = compose(expand_linear_term(1, omega) + expand_quadratic_term(1, phi))
    u2 = compose(expand_quadratic_term(1, phi) + expand_linear_term(1, omega))
    expected = np.diag(np.exp(-1j * (omega * M[0] + 3 * phi * M[0] ** 2)))
    assert np.max(np.abs(u1 - u2)) < 1e-12
    assert np.max(np.abs(u1 - expected)) < 1e-12


@pytest.mark.parametrize("pair", [(a, b) for a in range(1, 6) for b in range(a + 1, 6)])
def test_refocusing_block_isolates_each_pair(pair):
    j = ddi_constants(INSTANCE, EPS)
    interval = 1234.5
    u = compose(refocusing_block(pair, interval))
    a, b = pair
    expected = np.diag(np.exp(-1j * 8 * interval * j[a - 1, b - 1] * M[a - 1] * M[b - 1]))
    assert phase_aligned_distance(u, expected) < 1e-12
    # the construction leaves no global phase either
    assert np.max(np.abs(u - expected)) < 1e-12


def test_refocusing_block_trivial_without_coupling():
    u = compose(refocusing_block((1, 2), 7.7), ddi=np.zeros(243))
    assert np.max(np.abs(u - np.eye(243))) < 1e-12


def test_refocusing_block_interval_durations_equal():
    block = refocusing_block((2, 5), 3.25)
    frees = [i for i in block if isinstance(i, FreeEvolution)]
    assert len(frees) == 8
    assert all(f.duration == 3.25 for f in frees)


def test_refocusing_block_rejects_bad_pairs():
    with pytest.raises(ValueError):
        refocusing_block((2, 2), 1.0)
    with pytest.raises(ValueError):
        refocusing_block((0, 3), 1.0)


def test_expand_pair_term_matches_quartic_exponential():
    dt_l = 0.0391
    r = active_pair_distances(INSTANCE)
    for (i, j) in ((1, 2), (2, 4), (4, 5)):
        seq = expand_pair_term(i, j, dt_l, r[i - 1, j - 1], EPS)
        u = compose(seq)
        expected = np.diag(
            np.exp(-3j * dt_l * r[i - 1, j - 1] * M[i - 1] ** 2 * M[j - 1] ** 2)
        )
        assert phase_aligned_distance(u, expected) < 1e-12
        assert np.max(np.abs(u - expected)) < 1e-12  # phase cancels exactly


def test_expand_pair_term_identity_at_zero():
    u = compose(expand_pair_term(1, 3, 0.0, 1.41, EPS))
    assert np.max(np.abs(u - np.eye(243))) < 1e-12


def test_expand_pair_term_y_rotations_are_pi_only():
    seq = expand_pair_term(2, 3, 0.05, 20.8, EPS)
    for instr in seq:
        if isinstance(instr, SelectiveRotation) and instr.axis == "y":
            assert abs(instr.angle) in (pytest.approx(np.pi), pytest.approx(np.pi / 2))
    # outside the composite-z blocks only pi pulses appear
    bare_y = [i for i in seq if isinstance(i, SelectiveRotation)
              and i.axis == "y" and abs(abs(i.angle) - np.pi) < 1e-12]
    assert len(bare_y) >= 12


def test_expand_pair_term_validation():
    with pytest.raises(ValueError):
        expand_pair_term(2, 2, 0.1, 1.0, EPS)
    with pytest.raises(ValueError):
        expand_pair_term(1, 2, 0.1, 1.0, 0.0)


def test_expand_transverse_half_product():
    sched = AnnealSchedule(10, 0.05252, 6.5)
    sx, _, _ = spin1_matrices()
    for l in (0, 4, 10):
        drives = expand_transverse_half(l, sched)
        assert len(drives) == 5
        angle = (1 - l / 10) * 6.5 * 0.05252 / 2
        assert all(d.angle == pytest.approx(angle) for d in drives)
        u = compose(drives)
        x_total = sum(embed_single_site(sx, s, 5) for s in range(1, 6))
        # half the transverse-field step: exp(+i angle * sum_j Sx_j)
        expected = expm_hermitian(x_total, -angle)
        assert np.max(np.abs(u - expected)) < 1e-12
    assert expand_transverse_half(10, sched)[0].angle == 0.0


def test_build_program_structure():
    sched = AnnealSchedule(4, 0.05252, 6.5)
    program = build_program(INSTANCE, sched, EPS)
    assert len(program.steps) == 5
    counts = program.per_step_counts()
    assert all(c == counts[0] for c in counts[1:])  # structure constant in l
    assert counts[1] == {"rotations": 2460, "drives": 10, "free_intervals": 400, "phases": 30}
    for step in program.steps:
        for instr in step.instructions:
            if isinstance(instr, SelectiveRotation):
                assert instr.axis in ("x", "y")  # z only via composites
                assert 1 <= instr.site <= 5  # never the excluded spin
            if isinstance(instr, FreeEvolution):
                assert instr.duration >= 0.0
                if step.l > 0:
                    assert instr.duration > 0.0
    totals = program.counts()
    assert totals["pulses"] == 5 * (2460 + 10)
    assert totals["instructions"] == sum(len(s.instructions) for s in program.steps)


def test_step_equivalence_small_schedule():
    sched = AnnealSchedule(3, 0.05252, 6.5)
    program = build_program(INSTANCE, sched, EPS)
    distances = verify_step_equivalence(program, INSTANCE, sched)
    assert distances.shape == (4,)
    assert np.max(distances) < 1e-10


def test_step_equivalence_insensitive_to_epsilon():
    # the dipolar scale cancels between interval durations and couplings
    sched = AnnealSchedule(2, 0.06, 5.0)
    for eps in (1e-6, 1e-5):
        program = build_program(INSTANCE, sched, eps)
        assert np.max(verify_step_equivalence(program, INSTANCE, sched)) < 1e-10


def test_instruction_matrix_agrees_with_apply():
    rng = np.random.default_rng(3)
    instructions = [
        SelectiveRotation("y", 1.1, 2, "1-2"),
        TwoToneDrive(3, 0.4),
        FreeEvolution(515.0),
        GlobalPhase(0.33),
    ]
    for instr in instructions:
        dense = instruction_matrix(instr, 5, DDI)
        vec = rng.normal(size=243) + 1j * rng.normal(size=243)
        assert np.allclose(apply_instructions([instr], vec, 5, DDI), dense @ vec)


def test_two_tone_drive_realizes_positive_x_exponential():
    sx, _, _ = spin1_matrices()
    u = instruction_matrix(TwoToneDrive(1, 0.37), 5, DDI)
    expected = expm_hermitian(embed_single_site(sx, 1, 5), -0.37)  # exp(+i 0.37 Sx)
    assert np.max(np.abs(u - expected)) < 1e-12


def test_serialization_round_trip():
    sched = AnnealSchedule(2, 0.05252, 6.5)
    program = build_program(INSTANCE, sched, EPS)
    text = serialize_program(program)
    parsed = parse_program(text)
    assert parsed == program
    assert text.count("STEP ") == 3
    first_lines = text.splitlines()[:4]
    assert first_lines[0].startswith("#")
    assert "STEP 0" in first_lines


def test_serialization_grammar(tmp_path):
    program = Program(
        (ProgramStep(0, (SelectiveRotation("x", 0.5, 1, "1-2"), TwoToneDrive(2, 0.25),
                         FreeEvolution(10.0), GlobalPhase(-0.125))),),
        n_sites=5,
        epsilon=1e-6,
    )
    text = serialize_program(program)
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    assert lines[0] == "STEP 0"
    assert lines[1] == "ROT x 0.5 1 1-2"
    assert lines[2] == "DRIVE 2 0.25"
    assert lines[3] == "FREE 10"
    assert lines[4] == "PHASE -0.125"
    assert parse_program(text) == program
    with pytest.raises(ValueError):
        parse_program("STEP 0\nBOGUS 1\n")
