"""Discrete-time adiabatic evolution at the operator level.

The schedule ramps linearly from the transverse-field Hamiltonian to the
diagonal target Hamiltonian over N+1 symmetric-split steps; this layer is
the gate- and pulse-independent reference for everything downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import clustering
from .spin_ops import spin1_matrices
from .tensor_core import embed_single_site, hilbert_dim


@dataclass(frozen=True)
class AnnealSchedule:
    """Step count N, step duration dt, and transverse field strength h.

    Total annealing time is N * dt; step l in 0..N uses the interpolation
    weight l / N.
    """

    n_steps: int
    dt: float
    h: float

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.h <= 0:
            raise ValueError(f"h must be positive, got {self.h}")

    @property
    def total_time(self) -> float:
        return self.n_steps * self.dt

    def dt_l(self, l: int) -> float:
        """Target-Hamiltonian exposure (l / N) * dt at step l."""
        return (l / self.n_steps) * self.dt


def step_unitary(l: int, schedule: AnnealSchedule, h0: np.ndarray, hf_diag: np.ndarray) -> np.ndarray:
    """Symmetric-split step: exp(-i b H0) exp(-i dt_l Hf) exp(-i b H0).

    with b = (dt/2) * (1 - l/N).  The l = 0 step has no target content and
    the l = N step no transverse content.
    """
    if not 0 <= l <= schedule.n_steps:
        raise ValueError(f"step index {l} out of range 0..{schedule.n_steps}")
    beta = 0.5 * schedule.dt * (1.0 - l / schedule.n_steps)
    eigvals, eigvecs = np.linalg.eigh(h0)
    half = (eigvecs * np.exp(-1j * beta * eigvals)) @ eigvecs.conj().T
    middle = np.exp(-1j * schedule.dt_l(l) * hf_diag)
    return half @ (middle[:, None] * half)


class IdealAnnealer:
    """Precomputed spectral data for fast repeated runs on one instance."""

    def __init__(self, instance: clustering.ClusteringInstance):
        self.instance = instance
        self.n = instance.n_active
        self.hf_diag = clustering.build_target_hamiltonian(instance)
        sx, _, _ = spin1_matrices()
        x_total = np.zeros((hilbert_dim(self.n),) * 2, dtype=complex)
        for site in range(1, self.n + 1):
            x_total += embed_single_site(sx, site, self.n)
        # h0 = -h * x_total; exp(-i b h0) = V exp(+i b h lam) V^dag
        self._x_eigvals, self._x_eigvecs = np.linalg.eigh(x_total)

    def run(self, schedule: AnnealSchedule, keep_trace: bool = False):
        """Apply all N+1 step unitaries, in increasing step order, to the
        transverse-field ground state.  Returns the final state, or
        (state, trace) where trace[l] is the state after step l."""
        v = self._x_eigvecs
        vh = v.conj().T
        lam = self._x_eigvals
        psi = clustering.initial_state(self.n)
        trace = []
        n_steps = schedule.n_steps
        for l in range(n_steps + 1):
            beta = 0.5 * schedule.dt * (1.0 - l / n_steps)
            half = np.exp(1j * beta * schedule.h * lam)
            target = np.exp(-1j * schedule.dt_l(l) * self.hf_diag)
            psi = v @ (half * (vh @ psi))
            psi = target * psi
            psi = v @ (half * (vh @ psi))
            if keep_trace:
                trace.append(psi.copy())
        if keep_trace:
            return psi, trace
        return psi


def anneal(schedule: AnnealSchedule, instance: clustering.ClusteringInstance) -> np.ndarray:
    """One-shot ideal annealing run; returns the final register state."""
    return IdealAnnealer(instance).run(schedule)


def fidelity(state: np.ndarray, target_index: int) -> float:
    """Probability of the target basis state, |amplitude|^2."""
    return float(np.abs(state[target_index]) ** 2)


def outcome_distribution(state: np.ndarray) -> np.ndarray:
    """Probabilities of all basis states."""
    return np.abs(state) ** 2
