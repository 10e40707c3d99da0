"""Experiment orchestration: configuration, runs, sweeps, persistence.

Verbs: ``oracle`` (exhaustive clustering solution), ``ideal`` (operator-level
anneal), ``ir-verify`` (gate program vs. step unitaries), ``compile`` (pulse
program emission), ``simulate`` (full pulse-level run) and ``sweep``
(parameter grids in ideal or pulse mode, CSV output).

All outputs embed the configuration hash and tool version.  Every run is
deterministic: rerunning a mode with the same configuration reproduces every
output byte except the wall-time fields.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__, annealer, clustering, compiler, sequencer, simulator

MODES = ("oracle", "ideal", "ir-verify", "compile", "pulse")
SWEEP_AXES = ("dt", "h", "n", "epsilon")


@dataclass(frozen=True)
class ExperimentConfig:
    instance: clustering.ClusteringInstance
    spins: compiler.SpinSystemConfig
    schedule: annealer.AnnealSchedule
    epsilon: float
    mode: str = "ideal"
    target: tuple | None = None  # active-spin projections; None = automatic
    sweep_axis: str | None = None
    sweep_grid: tuple = ()
    sweep_mode: str = "ideal"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.sweep_axis is not None:
            if self.sweep_axis not in SWEEP_AXES:
                raise ValueError(f"sweep axis must be one of {SWEEP_AXES}")
            if not self.sweep_grid:
                raise ValueError("sweep grid must be nonempty")
            if self.sweep_mode not in ("ideal", "pulse"):
                raise ValueError("sweep mode must be 'ideal' or 'pulse'")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")

    def digest(self) -> str:
        parts = [
            f"points={self.instance.points!r}",
            f"excluded={self.instance.excluded_index}",
            f"spins={self.spins.digest()}",
            f"n_steps={self.schedule.n_steps}",
            f"dt={self.schedule.dt!r}",
            f"h={self.schedule.h!r}",
            f"epsilon={self.epsilon!r}",
            f"mode={self.mode}",
            f"target={self.target!r}",
            f"sweep={self.sweep_axis!r}:{self.sweep_grid!r}:{self.sweep_mode}",
        ]
        return hashlib.sha256(";".join(parts).encode()).hexdigest()[:12]


def default_config(mode: str = "ideal") -> ExperimentConfig:
    """The bundled six-point example at the reference operating point."""
    return ExperimentConfig(
        instance=clustering.paper_instance(),
        spins=compiler.DEFAULT_CONFIG,
        schedule=annealer.AnnealSchedule(n_steps=201, dt=0.05252, h=6.5),
        epsilon=1e-6,
        mode=mode,
        target=(-1, 0, -1, 1, -1),
    )


def load_config(path, mode: str | None = None) -> ExperimentConfig:
    """Read an INI-style configuration file.

    Sections: ``[instance]`` (``file`` pointing at an instance listing),
    ``[spins]``, ``[schedule]``, ``[run]`` and ``[sweep]``.  Missing entries
    fall back to the bundled defaults.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"config file not found: {path}")
    base = default_config()

    instance = base.instance
    if parser.has_option("instance", "file"):
        instance_path = Path(parser.get("instance", "file"))
        if not instance_path.is_absolute():
            instance_path = Path(path).parent / instance_path
        instance = clustering.load_instance(instance_path)

    def floats(section, option, fallback):
        if parser.has_option(section, option):
            return tuple(float(tok) for tok in parser.get(section, option).split())
        return fallback

    def ints(section, option, fallback):
        if parser.has_option(section, option):
            return tuple(int(tok) for tok in parser.get(section, option).split())
        return fallback

    spins = compiler.SpinSystemConfig(
        larmor=floats("spins", "larmor", base.spins.larmor),
        quadrupole=floats("spins", "quadrupole", base.spins.quadrupole),
        divisor=parser.getfloat("spins", "divisor", fallback=base.spins.divisor),
        c_y_pi=ints("spins", "c_y_pi", base.spins.c_y_pi),
        c_y_half_pi=ints("spins", "c_y_half_pi", base.spins.c_y_half_pi),
        c_x=ints("spins", "c_x", base.spins.c_x),
        c_two_tone=parser.getint("spins", "c_two_tone", fallback=base.spins.c_two_tone),
        selectivity_factor=parser.getfloat("spins", "selectivity_factor",
                                           fallback=base.spins.selectivity_factor),
        two_tone_angle_convention=parser.get("spins", "two_tone_convention",
                                             fallback=base.spins.two_tone_angle_convention),
    )
    schedule = annealer.AnnealSchedule(
        n_steps=parser.getint("schedule", "n_steps", fallback=base.schedule.n_steps),
        dt=parser.getfloat("schedule", "dt", fallback=base.schedule.dt),
        h=parser.getfloat("schedule", "h", fallback=base.schedule.h),
    )
    epsilon = parser.getfloat("schedule", "epsilon", fallback=base.epsilon)

    target = base.target
    if parser.has_option("run", "target"):
        raw = parser.get("run", "target").strip()
        target = None if raw.lower() == "auto" else tuple(int(t) for t in raw.split())
    if target is not None and len(target) != instance.n_active:
        target = None  # custom instance without a matching explicit target

    sweep_axis = None
    sweep_grid = ()
    sweep_mode = "ideal"
    if parser.has_section("sweep") and parser.has_option("sweep", "axis"):
        sweep_axis = parser.get("sweep", "axis").strip()
        sweep_grid = floats("sweep", "grid", ())
        sweep_mode = parser.get("sweep", "mode", fallback="ideal").strip()

    return ExperimentConfig(
        instance=instance,
        spins=spins,
        schedule=schedule,
        epsilon=epsilon,
        mode=mode or parser.get("run", "mode", fallback=base.mode).strip(),
        target=target,
        sweep_axis=sweep_axis,
        sweep_grid=sweep_grid,
        sweep_mode=sweep_mode,
    )


# ---------------------------------------------------------------------------
# shared helpers


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def resolve_targets(config: ExperimentConfig):
    """(target assignment, other minimizing assignments) for fidelity columns.

    With an explicit target the remaining weight minimizers provide the
    second-state column; in automatic mode the highest-probability minimizer
    is chosen per run.
    """
    minimizers = clustering.brute_force_min(config.instance)
    if config.target is not None:
        others = [m for m in minimizers if tuple(m) != tuple(config.target)]
        return tuple(config.target), others
    return None, minimizers


def fidelity_columns(state: np.ndarray, config: ExperimentConfig):
    """(fidelity, second_state_probability, target_used)."""
    target, others = resolve_targets(config)
    probs = annealer.outcome_distribution(state)
    if target is None:
        ranked = sorted(
            others,
            key=lambda m: (-probs[clustering.assignment_index(m)], clustering.assignment_index(m)),
        )
        target = ranked[0]
        others = ranked[1:]
    fid = float(probs[clustering.assignment_index(target)])
    second = max((float(probs[clustering.assignment_index(m)]) for m in others), default=0.0)
    return fid, second, tuple(target)


def top_outcomes(state: np.ndarray, n_sites: int, k: int = 8):
    probs = annealer.outcome_distribution(state)
    order = np.argsort(probs)[::-1][:k]
    from .tensor_core import projections_of_index

    return [(projections_of_index(int(i), n_sites), float(probs[i])) for i in order]


def write_report(path: Path, title: str, config: ExperimentConfig, body: list) -> None:
    lines = [f"# qutrit-annealer {title} v1",
             f"tool_version = {__version__}",
             f"config_hash = {config.digest()}"]
    lines += [f"{key} = {_fmt(value)}" for key, value in body]
    path.write_text("\n".join(lines) + "\n")


def _apply_axis(config: ExperimentConfig, axis: str, value: float) -> ExperimentConfig:
    if axis == "dt":
        return replace(config, schedule=replace(config.schedule, dt=value))
    if axis == "h":
        return replace(config, schedule=replace(config.schedule, h=value))
    if axis == "n":
        return replace(config, schedule=replace(config.schedule, n_steps=int(round(value))))
    return replace(config, epsilon=value)


def _cap_steps(config: ExperimentConfig, max_steps: int | None) -> ExperimentConfig:
    if max_steps is None or config.schedule.n_steps <= max_steps:
        return config
    return replace(config, schedule=replace(config.schedule, n_steps=max_steps))


# ---------------------------------------------------------------------------
# mode runners


def run_oracle(config: ExperimentConfig, out_dir: Path) -> Path:
    started = time.perf_counter()
    instance = config.instance
    minimizers = clustering.brute_force_min(instance)
    hf = clustering.build_target_hamiltonian(instance)
    weights = {m: clustering.weight(m, instance) for m in minimizers}

    # energy ordering must be a strictly monotone image of the weight ordering
    import itertools

    all_assignments = list(itertools.product((1, 0, -1), repeat=instance.n_active))
    pairs = [(clustering.weight(a, instance), hf[clustering.assignment_index(a)])
             for a in all_assignments]
    pairs.sort()
    monotone = all(
        (pairs[i + 1][0] - pairs[i][0] > 1e-9) == (pairs[i + 1][1] - pairs[i][1] > 1e-9)
        or abs(pairs[i + 1][0] - pairs[i][0]) <= 1e-9
        and abs(pairs[i + 1][1] - pairs[i][1]) <= 1e-9
        for i in range(len(pairs) - 1)
    )

    body = [("mode", "oracle"), ("n_points", len(instance.points)),
            ("excluded_index", instance.excluded_index),
            ("minimizer_count", len(minimizers)),
            ("min_weight", min(weights.values())),
            ("energy_matches_weight_ordering", monotone)]
    for rank, m in enumerate(minimizers):
        body.append((f"minimizer_{rank}", " ".join(str(v) for v in m)))
        body.append((f"minimizer_{rank}_index", clustering.assignment_index(m)))
        body.append((f"minimizer_{rank}_weight", weights[m]))
    clusters = clustering.partition_of(minimizers[0], instance)
    for label, cluster in zip(("plus", "zero", "minus"), clusters):
        body.append((f"cluster_{label}", " ; ".join(f"({x:g}, {y:g})" for x, y in cluster)))
    body.append(("wall_time_s", time.perf_counter() - started))
    path = out_dir / "oracle_report.txt"
    write_report(path, "oracle report", config, body)
    return path


def _ideal_state(config: ExperimentConfig) -> np.ndarray:
    return annealer.anneal(config.schedule, config.instance)


def run_ideal(config: ExperimentConfig, out_dir: Path) -> Path:
    started = time.perf_counter()
    state = _ideal_state(config)
    fid, second, target = fidelity_columns(state, config)
    body = [("mode", "ideal"),
            ("n_steps", config.schedule.n_steps),
            ("dt", config.schedule.dt),
            ("h", config.schedule.h),
            ("epsilon", config.epsilon),
            ("target", " ".join(str(v) for v in target)),
            ("fidelity", fid),
            ("second_state_probability", second),
            ("norm_drift", abs(float(np.linalg.norm(state)) - 1.0))]
    for rank, (projections, prob) in enumerate(top_outcomes(state, config.instance.n_active)):
        body.append((f"top_{rank}", " ".join(str(v) for v in projections) + f" : {prob:.17g}"))
    body.append(("wall_time_s", time.perf_counter() - started))
    path = out_dir / "ideal_report.txt"
    write_report(path, "ideal run report", config, body)
    return path


def run_ir_verify(config: ExperimentConfig, out_dir: Path) -> Path:
    started = time.perf_counter()
    program = sequencer.build_program(config.instance, config.schedule, config.epsilon)
    distances = sequencer.verify_step_equivalence(program, config.instance, config.schedule)
    body = [("mode", "ir-verify"),
            ("n_steps", config.schedule.n_steps),
            ("threshold", 1e-10),
            ("max_distance", float(np.max(distances))),
            ("all_within_threshold", bool(np.max(distances) < 1e-10))]
    body += [(f"step_{l}_distance", float(d)) for l, d in enumerate(distances)]
    body.append(("wall_time_s", time.perf_counter() - started))
    path = out_dir / "ir_verify_report.txt"
    write_report(path, "ir verification report", config, body)
    return path


def run_compile(config: ExperimentConfig, out_dir: Path) -> Path:
    started = time.perf_counter()
    program = sequencer.build_program(config.instance, config.schedule, config.epsilon)
    pulses = compiler.compile_program(program, config.spins, config.schedule)
    program_path = out_dir / "pulse_program.txt"
    program_path.write_text(compiler.serialize_pulse_program(pulses))
    gate_counts = program.counts()
    pulse_counts = pulses.counts()
    interior = pulses.per_step_counts()[1:-1]
    selectivity = compiler.selectivity_report(pulses, config.spins)
    body = [("mode", "compile"),
            ("n_steps", config.schedule.n_steps),
            ("pulse_program", program_path.name),
            ("gate_rotations", gate_counts["rotations"]),
            ("gate_drives", gate_counts["drives"]),
            ("gate_free_intervals", gate_counts["free_intervals"]),
            ("gate_phases", gate_counts["phases"]),
            ("pulses_total", pulse_counts["pulses"]),
            ("single_tone_total", pulse_counts["single"]),
            ("two_tone_total", pulse_counts["two_tone"]),
            ("free_intervals_total", pulse_counts["free"])]
    if interior:
        body.append(("pulses_per_interior_step", interior[0]["single"] + interior[0]["two_tone"]))
        body.append(("free_intervals_per_interior_step", interior[0]["free"]))
    body.append(("reference_pulses_per_step", 2369))
    body.append(("reference_free_intervals_per_step", 320))
    for key, value in selectivity.items():
        body.append((f"selectivity_{key}", value))
    body.append(("wall_time_s", time.perf_counter() - started))
    path = out_dir / "compile_report.txt"
    write_report(path, "compile report", config, body)
    return path


def _pulse_state(config: ExperimentConfig, pulse_program=None):
    if pulse_program is None:
        program = sequencer.build_program(config.instance, config.schedule, config.epsilon)
        pulse_program = compiler.compile_program(program, config.spins, config.schedule)
    ddi = clustering.ddi_diagonal(config.instance, config.epsilon)
    state = clustering.initial_state(config.instance.n_active)
    return simulator.evolve(state, pulse_program, config.spins, ddi)


def run_simulate(config: ExperimentConfig, out_dir: Path, program_path=None) -> Path:
    started = time.perf_counter()
    pulse_program = None
    if program_path is not None:
        pulse_program = compiler.parse_pulse_program(Path(program_path).read_text())
    result = _pulse_state(config, pulse_program)
    fid, second, target = fidelity_columns(result.state, config)
    stats = result.cache_stats()
    body = [("mode", "pulse"),
            ("n_steps", config.schedule.n_steps),
            ("dt", config.schedule.dt),
            ("h", config.schedule.h),
            ("epsilon", config.epsilon),
            ("target", " ".join(str(v) for v in target)),
            ("fidelity", fid),
            ("second_state_probability", second),
            ("norm_drift", result.norm_drift),
            ("cache_hits", stats["hits"]),
            ("cache_misses", stats["misses"]),
            ("cache_hit_ratio", stats["hit_ratio"])]
    for rank, (projections, prob) in enumerate(top_outcomes(result.state, config.instance.n_active)):
        body.append((f"top_{rank}", " ".join(str(v) for v in projections) + f" : {prob:.17g}"))
    body.append(("wall_time_s", time.perf_counter() - started))
    path = out_dir / "simulate_report.txt"
    write_report(path, "pulse run report", config, body)
    return path


# ---------------------------------------------------------------------------
# sweeps


def _sweep_point(args):
    config, axis, value, mode = args
    point = _apply_axis(config, axis, value)
    started = time.perf_counter()
    if mode == "ideal":
        state = _ideal_state(point)
        drift = abs(float(np.linalg.norm(state)) - 1.0)
    else:
        result = _pulse_state(point)
        state, drift = result.state, result.norm_drift
    fid, second, _ = fidelity_columns(state, point)
    return {
        "value": value,
        "fidelity": fid,
        "second_state_probability": second,
        "norm_drift": drift,
        "wall_time_s": time.perf_counter() - started,
    }


def run_sweep(config: ExperimentConfig, out_dir: Path, workers: int = 1) -> Path:
    """Grid sweep with per-point checkpointing and deterministic row order.

    Each grid point is an independent run; finished points are stored as
    JSON and reloaded on resume, so interrupting a long pulse-mode sweep
    loses at most one point.
    """
    if config.sweep_axis is None:
        raise ValueError("config has no [sweep] section")
    points_dir = out_dir / "sweep_points"
    points_dir.mkdir(parents=True, exist_ok=True)
    rows = {}
    pending = []
    for idx, value in enumerate(config.sweep_grid):
        checkpoint = points_dir / f"point_{idx:04d}.json"
        if checkpoint.exists():
            rows[idx] = json.loads(checkpoint.read_text())
        else:
            pending.append((idx, checkpoint, (config, config.sweep_axis, value, config.sweep_mode)))

    if pending:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_sweep_point, [args for _, _, args in pending]))
        else:
            results = [_sweep_point(args) for _, _, args in pending]
        for (idx, checkpoint, _), row in zip(pending, results):
            checkpoint.write_text(json.dumps(row))
            rows[idx] = row

    columns = ("value", "fidelity", "second_state_probability", "norm_drift", "wall_time_s")
    lines = [f"# qutrit-annealer sweep v1, config_hash = {config.digest()}, "
             f"tool_version = {__version__}, axis = {config.sweep_axis}, mode = {config.sweep_mode}",
             ",".join(columns)]
    for idx in range(len(config.sweep_grid)):
        row = rows[idx]
        lines.append(",".join(_fmt(float(row[c])) for c in columns))
    path = out_dir / f"sweep_{config.sweep_axis}.csv"
    path.write_text("\n".join(lines) + "\n")
    return path


# ---------------------------------------------------------------------------
# entry point


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qutrit-anneal",
        description="Five-qutrit annealing simulator and pulse compiler",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in ("oracle", "ideal", "ir-verify", "compile", "simulate", "sweep"):
        p = sub.add_parser(verb)
        p.add_argument("--config", type=Path, default=None, help="INI configuration file")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--workers", type=int, default=1, help="parallel sweep workers")
        p.add_argument("--max-steps", type=int, default=None,
                       help="cap the schedule step count")
        if verb == "simulate":
            p.add_argument("--program", type=Path, default=None,
                           help="run a previously compiled pulse program file")
    args = parser.parse_args(argv)

    verb_to_mode = {"simulate": "pulse", "sweep": "ideal"}
    mode = verb_to_mode.get(args.verb, args.verb)
    try:
        if args.config is not None:
            config = load_config(args.config, mode=mode)
        else:
            config = default_config(mode=mode)
        config = _cap_steps(config, args.max_steps)
        args.out.mkdir(parents=True, exist_ok=True)
        if args.verb == "oracle":
            path = run_oracle(config, args.out)
        elif args.verb == "ideal":
            path = run_ideal(config, args.out)
        elif args.verb == "ir-verify":
            path = run_ir_verify(config, args.out)
        elif args.verb == "compile":
            path = run_compile(config, args.out)
        elif args.verb == "simulate":
            path = run_simulate(config, args.out, program_path=args.program)
        else:
            path = run_sweep(config, args.out, workers=args.workers)
    except (ValueError, FileNotFoundError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
