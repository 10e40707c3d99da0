"""Spin-1 operator algebra and transition-selective rotations.

A selective rotation acts on one adjacent-level pair (transition) of one
site: either the m = 1 <-> 0 pair or the m = 0 <-> -1 pair.  Rotations are
what a resonant rectangular RF pulse implements; z rotations are realized as
a composite of two y pulses and one x pulse.

Every function that returns a rotation sequence returns it in application
(time) order: the first list element is the first pulse applied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TRANSITION_12 = "1-2"  # levels m = 1 and m = 0
TRANSITION_23 = "2-3"  # levels m = 0 and m = -1
TRANSITIONS = (TRANSITION_12, TRANSITION_23)
AXES = ("x", "y", "z")

_SQRT2_INV = 1.0 / np.sqrt(2.0)


def spin1_matrices():
    """(S^x, S^y, S^z) in the basis ordered m = 1, 0, -1."""
    sx = _SQRT2_INV * np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex)
    sy = _SQRT2_INV * np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex)
    sz = np.diag([1.0, 0.0, -1.0]).astype(complex)
    return sx, sy, sz


@dataclass(frozen=True)
class SelectiveRotation:
    """One transition-selective rotation pulse at the gate level."""

    axis: str
    angle: float
    site: int
    transition: str

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        if self.transition not in TRANSITIONS:
            raise ValueError(f"transition must be one of {TRANSITIONS}, got {self.transition!r}")
        if not np.isfinite(self.angle):
            raise ValueError(f"angle must be finite, got {self.angle!r}")


def rotation_matrix(rotation: SelectiveRotation) -> np.ndarray:
    """The 3x3 unitary of a selective rotation.

    z rotations are diagonal phase pairs; y rotations are real Givens blocks;
    x rotations carry -i in front of both sine entries.
    """
    half = 0.5 * rotation.angle
    if rotation.axis == "z":
        a, b = np.exp(-1j * half), np.exp(1j * half)
        if rotation.transition == TRANSITION_12:
            return np.diag([a, b, 1.0 + 0j])
        return np.diag([1.0 + 0j, a, b])
    c, s = np.cos(half), np.sin(half)
    if rotation.axis == "y":
        block = np.array([[c, -s], [s, c]], dtype=complex)
    else:
        block = np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    out = np.eye(3, dtype=complex)
    if rotation.transition == TRANSITION_12:
        out[0:2, 0:2] = block
    else:
        out[1:3, 1:3] = block
    return out


def compose_rotations(rotations) -> np.ndarray:
    """Compose a time-ordered rotation sequence on one site into a 3x3 matrix."""
    out = np.eye(3, dtype=complex)
    for r in rotations:
        out = rotation_matrix(r) @ out
    return out


def composite_z(theta: float, site: int, transition: str):
    """z rotation by ``theta`` built from two y pulses around an x pulse.

    The composition equals the direct z rotation matrix exactly (the global
    phase works out to one), so downstream equivalence checks may compare
    without phase alignment.
    """
    return [
        SelectiveRotation("y", np.pi / 2, site, transition),
        SelectiveRotation("x", theta, site, transition),
        SelectiveRotation("y", -np.pi / 2, site, transition),
    ]


def inversion_pair(site: int):
    """Spin-inversion sequence P and its inverse, each three y-pi pulses.

    P maps S^z to -S^z under conjugation and leaves (S^z)^2 invariant; as a
    matrix P equals its own inverse, so P and the negative-angle sequence
    differ only in pulse phases at the physical level.
    """
    plus = [
        SelectiveRotation("y", np.pi, site, TRANSITION_12),
        SelectiveRotation("y", np.pi, site, TRANSITION_23),
        SelectiveRotation("y", np.pi, site, TRANSITION_12),
    ]
    minus = [
        SelectiveRotation("y", -np.pi, site, TRANSITION_12),
        SelectiveRotation("y", -np.pi, site, TRANSITION_23),
        SelectiveRotation("y", -np.pi, site, TRANSITION_12),
    ]
    return plus, minus
