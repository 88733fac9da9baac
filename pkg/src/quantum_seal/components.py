"""Physical components of the seal: sources, fibers, interferometric receivers, detectors.

Times inside the simulator are integer picoseconds; configuration values are
given in seconds and converted once.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ConfigError
from .optics import TWO_PI, JointPhotonState

PS_PER_SECOND = 10**12
DEFAULT_PHASE_SET = (0.0, math.pi / 2, math.pi, 3 * math.pi / 2)


def to_ps(seconds: float) -> int:
    return int(round(seconds * PS_PER_SECOND))


@dataclass(frozen=True)
class SpdcSource:
    """Entangled-pair source; at most one pair per window.

    A single pump photon down-converts with probability around 1e-15, so
    ``mean_pairs_per_window`` is the aggregate over the ~1e13-1e14 pump
    photons of one pulse rather than a per-photon quantity.
    """

    mean_pairs_per_window: float = 0.05
    source_visibility: float = 0.98
    pump_frequency: float = 2.44e15

    def __post_init__(self):
        if not 0.0 < self.mean_pairs_per_window <= 0.2:
            raise ConfigError(
                f"mean_pairs_per_window={self.mean_pairs_per_window} must lie in (0, 0.2]"
            )
        if not 0.0 <= self.source_visibility <= 1.0:
            raise ConfigError(f"source_visibility={self.source_visibility} outside [0, 1]")


@dataclass(frozen=True)
class WeakPulseSource:
    """Heavily attenuated laser; Poisson photon number per pulse."""

    mean_photons_per_pulse: float

    def __post_init__(self):
        if not 0.0 < self.mean_photons_per_pulse < 1.0:
            raise ConfigError(
                f"mean_photons_per_pulse={self.mean_photons_per_pulse} must lie in (0, 1)"
            )


@dataclass(frozen=True)
class FiberChannel:
    loss_db: float = 0.0
    propagation_delay: float = 100e-9
    decoherence_factor: float = 1.0

    def __post_init__(self):
        if not self.loss_db >= 0.0 or math.isinf(self.loss_db):
            raise ConfigError(f"loss_db={self.loss_db} must be finite and >= 0")
        if not self.propagation_delay >= 0.0:
            raise ConfigError(f"propagation_delay={self.propagation_delay} must be >= 0")
        if not 0.0 <= self.decoherence_factor <= 1.0:
            raise ConfigError(f"decoherence_factor={self.decoherence_factor} outside [0, 1]")

    @property
    def transmission(self) -> float:
        return 10.0 ** (-self.loss_db / 10.0)


@dataclass(frozen=True)
class DetectorModel:
    efficiency: float = 0.8
    dark_rate: float = 100.0
    jitter_sigma: float = 30e-12

    def __post_init__(self):
        if not 0.0 < self.efficiency <= 1.0:
            raise ConfigError(f"efficiency={self.efficiency} outside (0, 1]")
        if not self.dark_rate >= 0.0:
            raise ConfigError(f"dark_rate={self.dark_rate} must be >= 0")
        if not self.jitter_sigma >= 0.0:
            raise ConfigError(f"jitter_sigma={self.jitter_sigma} must be >= 0")


@dataclass(frozen=True)
class MziReceiver:
    """Unbalanced Mach-Zehnder receiver with a phase modulator in the long arm."""

    path_delay: float = 1e-9
    phase_set: tuple[float, ...] = DEFAULT_PHASE_SET
    detector: DetectorModel = field(default_factory=DetectorModel)

    def __post_init__(self):
        object.__setattr__(self, "phase_set", tuple(float(p) for p in self.phase_set))
        if not self.phase_set:
            raise ConfigError("phase_set must not be empty")
        for p in self.phase_set:
            if not 0.0 <= p < TWO_PI:
                raise ConfigError(f"phase {p} outside [0, 2pi)")
        if not self.path_delay > 0.0:
            raise ConfigError(f"path_delay={self.path_delay} must be positive")


@dataclass(frozen=True)
class SealSetup:
    """Everything needed to simulate the physical layer of one seal."""

    source: SpdcSource = field(default_factory=SpdcSource)
    active_channel: FiberChannel = field(default_factory=lambda: FiberChannel(loss_db=3.0))
    reference_channel: FiberChannel = field(default_factory=lambda: FiberChannel(loss_db=1.0))
    active_rx: MziReceiver = field(default_factory=MziReceiver)
    reference_rx: MziReceiver = field(default_factory=MziReceiver)
    window_duration: float = 1e-6
    coincidence_window: float = 100e-12

    def __post_init__(self):
        if not self.window_duration > 0.0:
            raise ConfigError("window_duration must be positive")
        if not self.coincidence_window > 0.0:
            raise ConfigError("coincidence_window must be positive")
        for name, rx, ch in (
            ("active", self.active_rx, self.active_channel),
            ("reference", self.reference_rx, self.reference_channel),
        ):
            if rx.path_delay <= 3 * self.coincidence_window:
                raise ConfigError(
                    f"{name} path_delay {rx.path_delay} must exceed 3 x coincidence window"
                )
            if ch.propagation_delay + rx.path_delay >= self.window_duration:
                raise ConfigError(f"{name} arrivals would fall outside the emission window")
        if self.active_rx.path_delay != self.reference_rx.path_delay:
            raise ConfigError("receivers must share one path delay for the side peaks to align")

    @property
    def window_ps(self) -> int:
        return to_ps(self.window_duration)

    @property
    def path_delay(self) -> float:
        return self.active_rx.path_delay

    @property
    def delay_offset(self) -> float:
        """Expected active-minus-reference arrival offset from the fibers alone."""
        return self.active_channel.propagation_delay - self.reference_channel.propagation_delay


class Receiver(enum.IntEnum):
    ACTIVE = 0
    REFERENCE = 1


class Origin(enum.IntEnum):
    PHOTON = 0
    DARK_COUNT = 1
    REPLICA = 2


@dataclass(frozen=True)
class DetectionEvent:
    receiver: Receiver
    time_tag_ps: int
    window_index: int
    phase_applied: float
    origin: Origin = Origin.PHOTON

    @property
    def time_tag(self) -> float:
        return self.time_tag_ps / PS_PER_SECOND


@dataclass
class ReceiverEvents:
    """Column-oriented detection events of one receiver, sorted by time tag."""

    window: np.ndarray
    time_ps: np.ndarray
    phase_index: np.ndarray
    origin: np.ndarray
    phase_set: tuple[float, ...] = DEFAULT_PHASE_SET

    def __post_init__(self):
        self.window = np.asarray(self.window, dtype=np.int64)
        self.time_ps = np.asarray(self.time_ps, dtype=np.int64)
        self.phase_index = np.asarray(self.phase_index, dtype=np.int16)
        self.origin = np.asarray(self.origin, dtype=np.int8)

    def __len__(self) -> int:
        return len(self.time_ps)

    @classmethod
    def empty(cls, phase_set: Sequence[float] = DEFAULT_PHASE_SET) -> ReceiverEvents:
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z, z, z, tuple(phase_set))

    @classmethod
    def from_events(
        cls, events: Iterable[DetectionEvent], phase_set: Sequence[float] = DEFAULT_PHASE_SET
    ) -> ReceiverEvents:
        events = list(events)
        lookup = np.asarray(phase_set)
        return cls(
            window=[e.window_index for e in events],
            time_ps=[e.time_tag_ps for e in events],
            phase_index=[int(np.argmin(np.abs(lookup - e.phase_applied))) for e in events],
            origin=[int(e.origin) for e in events],
            phase_set=tuple(phase_set),
        )

    @property
    def phase(self) -> np.ndarray:
        return np.asarray(self.phase_set)[self.phase_index]

    def is_sorted(self) -> bool:
        return bool(np.all(np.diff(self.time_ps) >= 0))

    def select(self, mask) -> ReceiverEvents:
        return ReceiverEvents(
            self.window[mask], self.time_ps[mask], self.phase_index[mask], self.origin[mask],
            self.phase_set,
        )

    def in_windows(self, start: int, stop: int) -> ReceiverEvents:
        lo, hi = np.searchsorted(self.window, [start, stop])
        return self.select(slice(lo, hi))

    def events(self, receiver: Receiver) -> Iterator[DetectionEvent]:
        phases = self.phase
        for i in range(len(self)):
            yield DetectionEvent(
                receiver, int(self.time_ps[i]), int(self.window[i]), float(phases[i]),
                Origin(int(self.origin[i])),
            )

    @staticmethod
    def concat(parts: Sequence[ReceiverEvents]) -> ReceiverEvents:
        if not parts:
            return ReceiverEvents.empty()
        return ReceiverEvents(
            np.concatenate([p.window for p in parts]),
            np.concatenate([p.time_ps for p in parts]),
            np.concatenate([p.phase_index for p in parts]),
            np.concatenate([p.origin for p in parts]),
            parts[0].phase_set,
        )


@dataclass
class EventStream:
    """Both receivers' events for the windows ``[start, stop)``."""

    active: ReceiverEvents
    reference: ReceiverEvents
    start: int
    stop: int

    @property
    def n_windows(self) -> int:
        return self.stop - self.start

    def in_windows(self, start: int, stop: int) -> EventStream:
        return EventStream(
            self.active.in_windows(start, stop), self.reference.in_windows(start, stop),
            max(start, self.start), min(stop, self.stop),
        )


def draw_phase(receiver: MziReceiver, rng: np.random.Generator) -> float:
    return receiver.phase_set[int(rng.integers(len(receiver.phase_set)))]


def emit_window(source: SpdcSource, rng: np.random.Generator) -> JointPhotonState:
    if rng.random() < source.mean_pairs_per_window:
        return JointPhotonState.entangled(source.source_visibility, source.pump_frequency)
    return JointPhotonState.vacuum()


def emit_weak_pulse(source: WeakPulseSource, rng: np.random.Generator, size=None):
    """Photon number of one pulse (or ``size`` pulses)."""
    return rng.poisson(source.mean_photons_per_pulse, size)
