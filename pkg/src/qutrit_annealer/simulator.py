"""Physical evolution of the register through a compiled pulse program.

Every pulse is propagated in its own rotating frame with the full static
Hamiltonian (frame-shifted Zeeman terms, quadrupole splittings, dipolar
couplings) plus the transverse drive; free intervals evolve under the full
static Hamiltonian.  Commensurate durations wind all static phases by whole
turns, so no explicit frame-change operators appear between events.  This
layer exhibits the finite-selectivity and dipolar error sources that the
ideal gate picture hides.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compiler import PulseEvent, PulseProgram, SpinSystemConfig
from .sequencer import GlobalPhase
from .spin_ops import spin1_matrices
from .tensor_core import (
    UnitaryCache,
    embed_single_site,
    expm_hermitian,
    hilbert_dim,
    projection_diagonal,
)

_COMMENSURATE_TOL = 1e-6


def _site_diagonals(n: int):
    return [projection_diagonal(site, n) for site in range(1, n + 1)]


_drive_cache: dict = {}


def _drive_operators(n: int):
    """Dense sum_j S_j^x and sum_j S_j^y over the register (built once)."""
    ops = _drive_cache.get(n)
    if ops is None:
        sx, sy, _ = spin1_matrices()
        dim = hilbert_dim(n)
        total_x = np.zeros((dim, dim), dtype=complex)
        total_y = np.zeros((dim, dim), dtype=complex)
        for site in range(1, n + 1):
            total_x += embed_single_site(sx, site, n)
            total_y += embed_single_site(sy, site, n)
        ops = (total_x, total_y)
        _drive_cache[n] = ops
    return ops


def static_diagonal(config: SpinSystemConfig, ddi_diag: np.ndarray) -> np.ndarray:
    """Diagonal of the lab-frame static Hamiltonian.

    -sum_j w_j S_j^z + sum_j Q_j [3 (S_j^z)^2 - 2] + dipolar couplings.
    """
    n = config.n_spins
    m = _site_diagonals(n)
    diag = ddi_diag.astype(float).copy()
    for j in range(n):
        diag += -config.larmor[j] * m[j] + config.quadrupole[j] * (3.0 * m[j] ** 2 - 2.0)
    return diag


def free_hamiltonian(config: SpinSystemConfig, ddi_diag: np.ndarray) -> np.ndarray:
    """The full static Hamiltonian as a dense (diagonal) matrix."""
    return np.diag(static_diagonal(config, ddi_diag)).astype(complex)


def _frame_diagonal_single(frequency: float, config: SpinSystemConfig,
                           ddi_diag: np.ndarray) -> np.ndarray:
    """Rotating-frame diagonal for a single-tone pulse at ``frequency``."""
    n = config.n_spins
    m = _site_diagonals(n)
    diag = ddi_diag.astype(float).copy()
    for j in range(n):
        diag += (-(config.larmor[j] - frequency) * m[j]
                 + config.quadrupole[j] * (3.0 * m[j] ** 2 - 2.0))
    return diag


def _frame_diagonal_two_tone(f1: float, f2: float, config: SpinSystemConfig,
                             ddi_diag: np.ndarray) -> np.ndarray:
    """Generalized-rotating-frame diagonal for a two-tone pulse.

    Each spin's upper transition is referenced to the first tone and the
    lower one to the second; on the driven site both detunings vanish and
    the residual diagonal is a multiple of the identity.
    """
    n = config.n_spins
    m = _site_diagonals(n)
    diag = ddi_diag.astype(float).copy()
    for j in range(n):
        w, q = config.larmor[j], config.quadrupole[j]
        upper = -(w - f1)  # value at m = +1
        lower = w - f2     # value at m = -1
        diag += np.where(m[j] > 0.5, upper, np.where(m[j] < -0.5, lower, 0.0))
        diag += q * (3.0 * m[j] ** 2 - 2.0)
    return diag


def _drive_term(amplitude: float, phase: float, n: int) -> np.ndarray:
    total_x, total_y = _drive_operators(n)
    return amplitude * (np.cos(phase) * total_x - np.sin(phase) * total_y)


def pulse_hamiltonian(event: PulseEvent, config: SpinSystemConfig,
                      ddi_diag: np.ndarray) -> np.ndarray:
    """Rotating-frame Hamiltonian of a single-tone pulse.

    The drive sums over every spin: the RF field is spatially global and
    addressing is purely spectral.
    """
    if event.kind != "single":
        raise ValueError(f"expected a single-tone event, got kind={event.kind!r}")
    diag = _frame_diagonal_single(event.frequencies[0], config, ddi_diag)
    h = np.diag(diag).astype(complex)
    h += _drive_term(event.amplitude, event.phase, config.n_spins)
    return h


def two_tone_hamiltonian(event: PulseEvent, config: SpinSystemConfig,
                         ddi_diag: np.ndarray) -> np.ndarray:
    """Effective Hamiltonian of a two-tone pulse in the two-frequency frame."""
    if event.kind != "two_tone":
        raise ValueError(f"expected a two-tone event, got kind={event.kind!r}")
    f1, f2 = event.frequencies
    diag = _frame_diagonal_two_tone(f1, f2, config, ddi_diag)
    h = np.diag(diag).astype(complex)
    h += _drive_term(event.amplitude, event.phase, config.n_spins)
    return h


def _is_commensurate(duration: float, divisor: float) -> bool:
    periods = duration * divisor / (2.0 * np.pi)
    return abs(periods - round(periods)) < _COMMENSURATE_TOL


@dataclass
class EvolveResult:
    state: np.ndarray
    norm_drift: float
    cache: UnitaryCache
    snapshots: list

    def cache_stats(self) -> dict:
        return self.cache.stats()


def evolve(state: np.ndarray, pulse_program: PulseProgram, config: SpinSystemConfig,
           ddi_diag: np.ndarray, cache: UnitaryCache | None = None,
           keep_snapshots: bool = False, verify_cache: bool = False) -> EvolveResult:
    """Apply every event of the program, in order, to the register state.

    Event unitaries are cached on their quantized physical parameters.  Free
    intervals are diagonal; at commensurate durations the static Zeeman and
    quadrupole windings are exact whole turns, so only the dipolar phases
    are applied (evaluating the multi-million-radian static phases in
    floating point would otherwise break the exact identity).  With
    ``verify_cache`` every hit is rebuilt and compared; a mismatch is a hard
    failure.
    """
    if cache is None:
        cache = UnitaryCache()
    n = config.n_spins
    if state.shape[0] != hilbert_dim(n):
        raise ValueError(
            f"state dimension {state.shape[0]} does not match {n} spins"
        )
    static_diag = None  # built lazily for non-commensurate free intervals
    psi = state.astype(complex).copy()
    snapshots = []

    def build(event: PulseEvent):
        if event.kind == "free":
            if _is_commensurate(event.duration, config.divisor):
                return ("diag", np.exp(-1j * event.duration * ddi_diag))
            nonlocal static_diag
            if static_diag is None:
                static_diag = static_diagonal(config, ddi_diag)
            return ("diag", np.exp(-1j * event.duration * static_diag))
        if event.kind == "single":
            h = pulse_hamiltonian(event, config, ddi_diag)
        else:
            h = two_tone_hamiltonian(event, config, ddi_diag)
        return ("dense", expm_hermitian(h, event.duration))

    for step in pulse_program.steps:
        for event in step.events:
            if isinstance(event, GlobalPhase):
                psi = np.exp(-1j * event.angle) * psi
                continue
            key = UnitaryCache.key(event.kind, *event.frequencies, event.amplitude,
                                   event.duration, event.phase)
            entry = cache.get_or_build(key, lambda: build(event))
            if verify_cache:
                kind, payload = entry
                rebuilt_kind, rebuilt = build(event)
                if rebuilt_kind != kind or not np.array_equal(rebuilt, payload):
                    raise RuntimeError(f"cache corruption detected for key {key}")
            kind, payload = entry
            psi = payload * psi if kind == "diag" else payload @ psi
        if keep_snapshots:
            snapshots.append(psi.copy())
    drift = abs(float(np.linalg.norm(psi)) - 1.0)
    return EvolveResult(state=psi, norm_drift=drift, cache=cache, snapshots=snapshots)
