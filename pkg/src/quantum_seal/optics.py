"""Measurement statistics for single qubits and Franson two-photon interference.

Everything here is a pure function of its arguments. The two-photon model is
parameterised by a single source visibility ``V``; the coincidence rate in the
central (indistinguishable short-short / long-long) peak follows
``(1/8) * (1 + V cos(phi_a + phi_b))`` for receivers that monitor one output
port of each unbalanced Mach-Zehnder interferometer.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, UnsupportedStateError

TWO_PI = 2.0 * math.pi

# Joint path outcomes, (active path, reference path).
SS, SL, LS, LL = 0, 1, 2, 3
PATH_LABELS = ("SS", "SL", "LS", "LL")


@dataclass(frozen=True)
class QubitAngles:
    """Bloch-sphere angles of a single qubit."""

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise DomainError(f"theta={self.theta!r} outside [0, pi]")
        if not 0.0 <= self.phi < TWO_PI:
            raise DomainError(f"phi={self.phi!r} outside [0, 2pi)")


def qubit_measure_probs(angles: QubitAngles) -> tuple[float, float]:
    """Return ``(p0, p1)`` for a measurement in the computational basis."""
    c0 = math.cos(angles.theta)
    p0 = c0 * c0
    return p0, 1.0 - p0


class StateKind(enum.Enum):
    ENTANGLED_PAIR = "entangled_pair"
    CLASSICAL_REPLICA = "classical_replica"
    VACUUM = "vacuum"


@dataclass(frozen=True)
class JointPhotonState:
    """Two-photon content of one emission window.

    ``active_photon`` is False once the active-fiber photon has been removed
    (a cut fiber); the reference photon then travels alone.
    """

    kind: StateKind
    source_visibility: float | None = None
    pump_frequency: float = 0.0
    active_photon: bool = True

    def __post_init__(self):
        if self.kind is StateKind.ENTANGLED_PAIR:
            v = self.source_visibility
            if v is None or not 0.0 <= v <= 1.0:
                raise DomainError(f"source visibility {v!r} outside [0, 1]")
        elif self.source_visibility is not None:
            raise DomainError(f"{self.kind.value} state carries no visibility")

    @classmethod
    def entangled(cls, visibility: float, pump_frequency: float = 0.0) -> JointPhotonState:
        return cls(StateKind.ENTANGLED_PAIR, visibility, pump_frequency)

    @classmethod
    def vacuum(cls) -> JointPhotonState:
        return cls(StateKind.VACUUM)

    @classmethod
    def classical_replica(cls) -> JointPhotonState:
        return cls(StateKind.CLASSICAL_REPLICA)


@dataclass(frozen=True)
class PhasePair:
    """Modulator phases applied in the active and reference interferometers."""

    phi_a: float
    phi_b: float

    @property
    def total(self) -> float:
        return (self.phi_a + self.phi_b) % TWO_PI


@dataclass(frozen=True)
class JointOutcomeDistribution:
    """Path probabilities conditional on both photons reaching the detectors."""

    ss: float
    sl: float
    ls: float
    ll: float

    def as_array(self) -> np.ndarray:
        return np.array([self.ss, self.sl, self.ls, self.ll])

    @property
    def central(self) -> float:
        return self.ss + self.ll


def _entangled_visibility(state: JointPhotonState) -> float:
    if state.kind is not StateKind.ENTANGLED_PAIR:
        raise UnsupportedStateError(f"{state.kind.value} state has no interference statistics")
    return state.source_visibility


def joint_path_distribution(state: JointPhotonState, phases: PhasePair) -> JointOutcomeDistribution:
    v = _entangled_visibility(state)
    modulation = v * math.cos(phases.phi_a + phases.phi_b)
    # raw weights: same-path pair (1/4)(1 + V cos), each mixed path 1/8
    norm = 0.25 * (2.0 + modulation)
    same = 0.25 * (1.0 + modulation) / norm
    mixed = 0.125 / norm
    return JointOutcomeDistribution(ss=same / 2, sl=mixed, ls=mixed, ll=same / 2)


def central_peak_probability(state: JointPhotonState, phases: PhasePair) -> float:
    """Probability that both photons leave through the monitored ports in the central peak."""
    v = _entangled_visibility(state)
    return 0.125 * (1.0 + v * math.cos(phases.phi_a + phases.phi_b))


def apply_decoherence(state: JointPhotonState, factor: float) -> JointPhotonState:
    """Scale the visibility of an entangled pair; other kinds pass through."""
    if not 0.0 <= factor <= 1.0:
        raise DomainError(f"decoherence factor {factor!r} outside [0, 1]")
    if state.kind is not StateKind.ENTANGLED_PAIR:
        return state
    return replace(state, source_visibility=state.source_visibility * factor)


def fringe_visibility(c_max: float, c_min: float) -> float:
    """Fringe depth ``(c_max - c_min) / (c_max + c_min)``."""
    if c_min < 0 or c_max < 0:
        raise DomainError("counts must be non-negative")
    if c_min > c_max:
        raise DomainError(f"c_min={c_min} exceeds c_max={c_max}")
    total = c_max + c_min
    if total == 0:
        raise DomainError("visibility undefined when both counts are zero")
    return (c_max - c_min) / total


def port_outcome_table(visibility, phase_sum) -> np.ndarray:
    """Vectorised joint detector-port outcome probabilities for surviving pairs.

    Columns are (both monitored, active only, reference only, neither). Each
    photon individually reaches its monitored port with probability 1/2; the
    split between the columns carries the interference.
    """
    m = np.asarray(visibility, dtype=float) * np.cos(np.asarray(phase_sum, dtype=float))
    both = 0.125 * (2.0 + m)
    one = 0.125 * (2.0 - m)
    return np.stack(np.broadcast_arrays(both, one, one, both), axis=-1)


def path_table(visibility, phase_sum) -> np.ndarray:
    """Vectorised :func:`joint_path_distribution`, columns SS, SL, LS, LL."""
    m = np.asarray(visibility, dtype=float) * np.cos(np.asarray(phase_sum, dtype=float))
    same = 0.5 * (1.0 + m) / (2.0 + m)
    mixed = 0.5 / (2.0 + m)
    return np.stack(np.broadcast_arrays(same, mixed, mixed, same), axis=-1)
