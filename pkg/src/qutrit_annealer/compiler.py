"""Mapping from gate-level instructions to physical rectangular RF pulses.

Pulse frequencies address one transition of one spin; durations are integer
multiples of 2*pi/D where D divides every Larmor and quadrupole constant,
which winds all static-Hamiltonian phases by whole turns and removes frame
bookkeeping between pulses.  Amplitudes follow from the requested rotation
angle and the quantized duration.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, fields

import numpy as np

from .annealer import AnnealSchedule
from .sequencer import FreeEvolution, GlobalPhase, Program, SelectiveRotation, TwoToneDrive
from .spin_ops import TRANSITION_12, TRANSITION_23

TWO_TONE_ANGLE_CONVENTIONS = ("th", "sqrt2th")


@dataclass(frozen=True)
class SpinSystemConfig:
    """Spin frequencies, duration quantization, and pulse-number tables.

    ``larmor`` and ``quadrupole`` are per-spin constants in angular-frequency
    units; ``divisor`` must divide all of them exactly.  The duration
    numbers C are fixed per spin: one table for y rotations by pi, one for y
    rotations by pi/2, and one for the step-dependent x rotations of
    arbitrary angle.  ``two_tone_angle_convention`` selects whether a
    two-tone drive's rotation angle is amplitude*duration ("th", both
    transitions driven) or carries the single-tone sqrt(2) ("sqrt2th").
    """

    larmor: tuple = (3000.0, 2500.0, 2800.0, 3200.0, 3800.0)
    quadrupole: tuple = (15000.0, 10000.0, 12000.0, 18000.0, 30000.0)
    divisor: float = 100.0
    c_y_pi: tuple = (69, 69, 69, 67, 67)
    c_y_half_pi: tuple = (70, 79, 68, 70, 59)
    c_x: tuple = (112, 80, 68, 1, 1)
    c_two_tone: int = 1
    selectivity_factor: float = 1e-3
    two_tone_angle_convention: str = "th"

    def __post_init__(self):
        object.__setattr__(self, "larmor", tuple(float(w) for w in self.larmor))
        object.__setattr__(self, "quadrupole", tuple(float(q) for q in self.quadrupole))
        n = len(self.larmor)
        if len(self.quadrupole) != n:
            raise ValueError("larmor and quadrupole tables must have equal length")
        for name in ("c_y_pi", "c_y_half_pi", "c_x"):
            table = getattr(self, name)
            if len(table) != n or any(int(c) <= 0 for c in table):
                raise ValueError(f"{name} must hold {n} positive integers")
            object.__setattr__(self, name, tuple(int(c) for c in table))
        if self.c_two_tone <= 0:
            raise ValueError("c_two_tone must be a positive integer")
        if self.two_tone_angle_convention not in TWO_TONE_ANGLE_CONVENTIONS:
            raise ValueError(f"two_tone_angle_convention must be in {TWO_TONE_ANGLE_CONVENTIONS}")
        for value in self.larmor + self.quadrupole:
            ratio = value / self.divisor
            if abs(ratio - round(ratio)) > 1e-9:
                raise ValueError(f"divisor {self.divisor} does not divide constant {value}")

    @property
    def n_spins(self) -> int:
        return len(self.larmor)

    def digest(self) -> str:
        """Short stable hash of all configuration fields."""
        parts = []
        for f in fields(self):
            parts.append(f"{f.name}={getattr(self, f.name)!r}")
        return hashlib.sha256(";".join(parts).encode()).hexdigest()[:12]


DEFAULT_CONFIG = SpinSystemConfig()


def transition_frequency(config: SpinSystemConfig, site: int, transition: str) -> float:
    """Resonance frequency of one adjacent-level transition.

    The upper pair (m = 1 <-> 0) sits at larmor - 3*quadrupole, the lower
    pair (m = 0 <-> -1) at larmor + 3*quadrupole.
    """
    if not 1 <= site <= config.n_spins:
        raise ValueError(f"site {site} out of range 1..{config.n_spins}")
    w = config.larmor[site - 1]
    q = config.quadrupole[site - 1]
    if transition == TRANSITION_12:
        return -3.0 * q + w
    if transition == TRANSITION_23:
        return 3.0 * q + w
    raise ValueError(f"unknown transition {transition!r}")


def all_transition_frequencies(config: SpinSystemConfig) -> np.ndarray:
    freqs = []
    for site in range(1, config.n_spins + 1):
        freqs.append(transition_frequency(config, site, TRANSITION_12))
        freqs.append(transition_frequency(config, site, TRANSITION_23))
    return np.array(freqs)


def min_transition_gap(config: SpinSystemConfig) -> float:
    """Smallest spacing between any two distinct transition frequencies."""
    freqs = np.sort(all_transition_frequencies(config))
    gaps = np.diff(freqs)
    gaps = gaps[gaps > 1e-12]
    if gaps.size == 0:
        raise ValueError("all transition frequencies coincide")
    return float(np.min(gaps))


@dataclass(frozen=True)
class PulseEvent:
    """One physical event: a rectangular pulse or a free-evolution interval.

    ``frequencies`` holds one entry for a single-tone pulse and two for a
    two-tone pulse; free intervals carry no frequency, amplitude or phase.
    Durations of non-free events are integer multiples of 2*pi/divisor.
    """

    kind: str  # "single", "two_tone", "free"
    frequencies: tuple
    amplitude: float
    duration: float
    phase: float

    @staticmethod
    def free(duration: float) -> "PulseEvent":
        return PulseEvent("free", (), 0.0, duration, 0.0)


@dataclass(frozen=True)
class PulseStep:
    l: int
    events: tuple  # PulseEvent and GlobalPhase entries, in time order

    def counts(self) -> dict:
        c = {"single": 0, "two_tone": 0, "free": 0, "phases": 0}
        for e in self.events:
            if isinstance(e, GlobalPhase):
                c["phases"] += 1
            else:
                c[e.kind] += 1
        return c


@dataclass(frozen=True)
class PulseProgram:
    steps: tuple
    header: dict

    def counts(self) -> dict:
        total = {"single": 0, "two_tone": 0, "free": 0, "phases": 0}
        for step in self.steps:
            for key, value in step.counts().items():
                total[key] += value
        total["pulses"] = total["single"] + total["two_tone"]
        return total

    def per_step_counts(self):
        return [s.counts() for s in self.steps]


def _phase_for(axis: str, positive: bool) -> float:
    # x rotations: phase 0 for positive angles, pi for negative;
    # y rotations: 3*pi/2 and pi/2 respectively.
    if axis == "x":
        return 0.0 if positive else math.pi
    return 1.5 * math.pi if positive else 0.5 * math.pi


def compile_rotation(rotation: SelectiveRotation, config: SpinSystemConfig):
    """Single-tone pulse for an x or y selective rotation.

    Returns None for a zero angle.  z rotations never reach the compiler:
    the sequencer expands every z as a composite block.
    """
    if rotation.axis == "z":
        raise ValueError("z rotations must be expanded into composites before compilation")
    angle = rotation.angle
    if angle == 0.0:
        return None
    site = rotation.site
    if rotation.axis == "y":
        if abs(abs(angle) - math.pi) < 1e-9:
            c = config.c_y_pi[site - 1]
        elif abs(abs(angle) - math.pi / 2) < 1e-9:
            c = config.c_y_half_pi[site - 1]
        else:
            raise ValueError(f"no duration-number table for y rotation by {angle!r}")
    else:
        c = config.c_x[site - 1]
    duration = 2.0 * math.pi * c / config.divisor
    amplitude = abs(angle) / (math.sqrt(2.0) * duration)
    return PulseEvent(
        kind="single",
        frequencies=(transition_frequency(config, site, rotation.transition),),
        amplitude=amplitude,
        duration=duration,
        phase=_phase_for(rotation.axis, angle > 0),
    )


def compile_two_tone(drive: TwoToneDrive, config: SpinSystemConfig):
    """Two-tone pulse driving both transitions of one site.

    The drive realizes exp(+i angle S^x), so the emitted phase is pi (the
    negative-x drive direction).  The amplitude follows the configured angle
    convention; exceeding the selectivity cap is an error rather than a
    silent duration increase.
    """
    if drive.angle < 0:
        raise ValueError(f"two-tone drive angle must be nonnegative, got {drive.angle}")
    if drive.angle == 0.0:
        return None
    duration = 2.0 * math.pi * config.c_two_tone / config.divisor
    if config.two_tone_angle_convention == "th":
        amplitude = drive.angle / duration
    else:
        amplitude = drive.angle / (math.sqrt(2.0) * duration)
    cap = config.selectivity_factor * min_transition_gap(config)
    if amplitude > cap:
        raise ValueError(
            f"two-tone amplitude {amplitude:.6g} exceeds the selectivity cap {cap:.6g} "
            f"at the fixed duration number {config.c_two_tone}"
        )
    return PulseEvent(
        kind="two_tone",
        frequencies=(
            transition_frequency(config, drive.site, TRANSITION_12),
            transition_frequency(config, drive.site, TRANSITION_23),
        ),
        amplitude=amplitude,
        duration=duration,
        phase=math.pi,
    )


def closest_integer(x: float) -> int:
    """Round half away from zero (deterministic, no banker's rounding)."""
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def free_interval_number(dt: float, n_steps: int, epsilon: float, divisor: float = 100.0) -> int:
    """Integer C0 such that 2*pi*C0*l/divisor best matches the dipolar
    interval (l/N)*dt/epsilon at every step l."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return closest_integer(dt * divisor / (2.0 * math.pi * n_steps * epsilon))


def compile_free(interval: FreeEvolution, l: int, config: SpinSystemConfig):
    """Free-evolution interval quantized to a whole number of base periods.

    The requested duration grows linearly with the step index, so the
    quantization picks one integer per unit step and scales it by l; step 0
    requests zero and compiles to nothing.
    """
    if interval.duration < 0:
        raise ValueError(f"free-evolution duration must be nonnegative, got {interval.duration}")
    if l == 0 or interval.duration == 0.0:
        return None
    c = closest_integer(interval.duration * config.divisor / (2.0 * math.pi * l))
    if c == 0:
        return None
    return PulseEvent.free(2.0 * math.pi * c * l / config.divisor)


def compile_program(program: Program, config: SpinSystemConfig, schedule: AnnealSchedule) -> PulseProgram:
    """Instruction-by-instruction mapping of a gate program to pulses.

    Order is preserved; global phases are carried through as metadata (they
    produce no physical pulse).  Per-instruction errors are re-raised with
    the step and instruction index.
    """
    steps = []
    for step in program.steps:
        events = []
        for idx, instr in enumerate(step.instructions):
            try:
                if isinstance(instr, SelectiveRotation):
                    event = compile_rotation(instr, config)
                elif isinstance(instr, TwoToneDrive):
                    event = compile_two_tone(instr, config)
                elif isinstance(instr, FreeEvolution):
                    event = compile_free(instr, step.l, config)
                elif isinstance(instr, GlobalPhase):
                    event = instr
                else:
                    raise TypeError(f"unknown instruction {instr!r}")
            except (ValueError, TypeError) as err:
                raise type(err)(f"step {step.l}, instruction {idx}: {err}") from err
            if event is not None:
                events.append(event)
        steps.append(PulseStep(step.l, tuple(events)))
    header = {
        "config_hash": config.digest(),
        "n_steps": schedule.n_steps,
        "dt": schedule.dt,
        "h": schedule.h,
        "epsilon": program.epsilon,
    }
    return PulseProgram(tuple(steps), header)


def selectivity_report(pulse_program: PulseProgram, config: SpinSystemConfig) -> dict:
    """Amplitude-selectivity diagnostic for every compiled pulse.

    The reference cap is selectivity_factor times the minimum spacing of the
    transition-frequency comb.  The fixed-angle pulse tables respect it; the
    step-dependent x pulses on the fast spins (duration number 1) can exceed
    it by design, so this is reported rather than asserted.
    """
    cap = config.selectivity_factor * min_transition_gap(config)
    worst = 0.0
    over = 0
    total = 0
    for step in pulse_program.steps:
        for event in step.events:
            if isinstance(event, GlobalPhase) or event.kind == "free":
                continue
            total += 1
            worst = max(worst, event.amplitude)
            if event.amplitude > cap:
                over += 1
    return {
        "min_gap": min_transition_gap(config),
        "cap": cap,
        "max_amplitude": worst,
        "pulses": total,
        "pulses_over_cap": over,
    }


# ---------------------------------------------------------------------------
# serialization

def serialize_pulse_program(pulse_program: PulseProgram) -> str:
    """Text form: header comments, ``STEP l`` markers, one event per line.

    ``PULSE f1 [f2] amplitude duration phase`` for pulses (two-tone pulses
    carry two frequencies), ``FREE duration`` for intervals, and ``# phase
    angle`` metadata lines for global phases.
    """
    h = pulse_program.header
    lines = [
        "# qutrit-annealer pulse program v1",
        f"# config_hash = {h['config_hash']}",
        f"# n_steps = {h['n_steps']}",
        f"# dt = {h['dt']:.17g}",
        f"# h = {h['h']:.17g}",
        f"# epsilon = {h['epsilon']:.17g}",
    ]
    for step in pulse_program.steps:
        lines.append(f"STEP {step.l}")
        for event in step.events:
            if isinstance(event, GlobalPhase):
                lines.append(f"# phase {event.angle:.17g}")
            elif event.kind == "free":
                lines.append(f"FREE {event.duration:.17g}")
            else:
                freqs = " ".join(f"{f:.17g}" for f in event.frequencies)
                lines.append(
                    f"PULSE {freqs} {event.amplitude:.17g} {event.duration:.17g} {event.phase:.17g}"
                )
    return "\n".join(lines) + "\n"


def parse_pulse_program(text: str) -> PulseProgram:
    header = {}
    steps = []
    current_l = None
    current = []

    def flush():
        if current_l is not None:
            steps.append(PulseStep(current_l, tuple(current)))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if body.startswith("phase "):
                current.append(GlobalPhase(float(body.split()[1])))
            elif "=" in body:
                key, _, value = body.partition("=")
                key = key.strip()
                value = value.strip()
                if key in ("n_steps",):
                    header[key] = int(value)
                elif key in ("dt", "h", "epsilon"):
                    header[key] = float(value)
                elif key:
                    header[key] = value
            continue
        tokens = line.split()
        tag = tokens[0].upper()
        if tag == "STEP":
            flush()
            current_l = int(tokens[1])
            current = []
        elif tag == "FREE":
            current.append(PulseEvent.free(float(tokens[1])))
        elif tag == "PULSE":
            values = [float(t) for t in tokens[1:]]
            if len(values) == 4:
                freqs, rest = (values[0],), values[1:]
                kind = "single"
            elif len(values) == 5:
                freqs, rest = (values[0], values[1]), values[2:]
                kind = "two_tone"
            else:
                raise ValueError(f"line {lineno}: PULSE expects 4 or 5 numbers")
            current.append(PulseEvent(kind, freqs, rest[0], rest[1], rest[2]))
        else:
            raise ValueError(f"line {lineno}: unknown record {tag!r}")
    flush()
    if not steps:
        raise ValueError("pulse program has no steps")
    return PulseProgram(tuple(steps), header)
