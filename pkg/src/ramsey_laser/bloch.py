"""Exact pulse / drift / pulse propagation of a single two-level atom.

Amplitudes are ordered (upper a, lower b). The coherence reported is
<-i sigma_minus> = -i conj(c_b) c_a, the single-atom piece of the
macroscopic dipole M that drives the cavity field.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

Epoch = Literal["after_pulse_1", "after_drift", "after_pulse_2"]

NORM_TOL = 1e-9


@dataclass(frozen=True)
class TwoLevelState:
    c_a: complex
    c_b: complex

    @classmethod
    def excited(cls) -> "TwoLevelState":
        return cls(1.0 + 0j, 0j)

    @classmethod
    def ground(cls) -> "TwoLevelState":
        return cls(0j, 1.0 + 0j)

    @property
    def norm(self) -> float:
        return abs(self.c_a) ** 2 + abs(self.c_b) ** 2

    @property
    def sigma_a(self) -> float:
        return abs(self.c_a) ** 2

    @property
    def sigma_b(self) -> float:
        return abs(self.c_b) ** 2

    @property
    def coherence(self) -> complex:
        """<-i sigma_minus> for this state."""
        return -1j * self.c_b.conjugate() * self.c_a

    def as_vector(self) -> np.ndarray:
        return np.array([self.c_a, self.c_b], dtype=complex)


@dataclass(frozen=True)
class ExitExpectations:
    sigma_a: float
    sigma_b: float
    coherence: complex
    epoch: Epoch

    @classmethod
    def of(cls, state: TwoLevelState, epoch: Epoch) -> "ExitExpectations":
        return cls(state.sigma_a, state.sigma_b, state.coherence, epoch)


def _check_norm(state: TwoLevelState) -> None:
    if abs(state.norm - 1.0) > NORM_TOL:
        raise ValueError(f"state is not normalized (norm = {state.norm!r})")


def rabi_pulse(state: TwoLevelState, theta: float) -> TwoLevelState:
    """Resonant rotation of area ``theta``: exp(-i theta sigma_x / 2)."""
    _check_norm(state)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return TwoLevelState(c * state.c_a - 1j * s * state.c_b, -1j * s * state.c_a + c * state.c_b)


def free_drift(state: TwoLevelState, phi: float) -> TwoLevelState:
    """Accumulate the relative phase ``phi`` between the levels.

    Populations are unchanged and the coherence picks up exp(i phi).
    """
    _check_norm(state)
    half = cmath.exp(0.5j * phi)
    return TwoLevelState(state.c_a * half, state.c_b / half)


def ramsey_expectations(theta: float, phi: float) -> tuple[ExitExpectations, ExitExpectations, ExitExpectations]:
    """Expectation values at the three exit epochs for an atom entering excited.

    The second zone uses the same field phase as the first.
    """
    psi = TwoLevelState.excited()
    psi = rabi_pulse(psi, theta)
    first = ExitExpectations.of(psi, "after_pulse_1")
    psi = free_drift(psi, phi)
    second = ExitExpectations.of(psi, "after_drift")
    psi = rabi_pulse(psi, theta)
    third = ExitExpectations.of(psi, "after_pulse_2")
    return first, second, third
