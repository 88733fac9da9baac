"""Attacks on the active fiber."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .components import FiberChannel
from .errors import ConfigError
from .optics import JointPhotonState, StateKind, apply_decoherence


class AttackKind(enum.Enum):
    INTERCEPT_RESEND = "intercept_resend"
    PASSIVE_TAP = "passive_tap"
    CUT_FIBER = "cut_fiber"
    CLASSICAL_SPOOF = "classical_spoof"


@dataclass(frozen=True)
class AttackPlan:
    """An attack in force over the inclusive window range ``[start_window, end_window]``."""

    kind: AttackKind
    start_window: int
    end_window: int
    added_loss_db: float = 0.0
    pulse_rate: float = 0.0
    timing_error_sigma: float = 0.0

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", AttackKind(self.kind))
        if self.start_window < 0 or self.start_window > self.end_window:
            raise ConfigError(f"bad attack window range [{self.start_window}, {self.end_window}]")
        if self.kind is AttackKind.PASSIVE_TAP and not self.added_loss_db > 0:
            raise ConfigError("passive tap needs added_loss_db > 0")
        if self.pulse_rate < 0:
            raise ConfigError("pulse_rate must be >= 0")
        if self.timing_error_sigma < 0:
            raise ConfigError("timing_error_sigma must be >= 0")

    def covers(self, window_index: int) -> bool:
        return self.start_window <= window_index <= self.end_window


def validate_plans(plans: Sequence[AttackPlan]) -> tuple[AttackPlan, ...]:
    """Sort plans by start window and reject overlapping ranges."""
    ordered = tuple(sorted(plans, key=lambda p: p.start_window))
    for prev, nxt in zip(ordered, ordered[1:]):
        if nxt.start_window <= prev.end_window:
            raise ConfigError(
                f"attack plans overlap: [{prev.start_window}, {prev.end_window}] and "
                f"[{nxt.start_window}, {nxt.end_window}]"
            )
    return ordered


def attack_in_force(plans: Sequence[AttackPlan], window_index: int) -> AttackPlan | None:
    hits = [p for p in plans if p.covers(window_index)]
    if len(hits) > 1:
        raise ConfigError(f"{len(hits)} attack plans cover window {window_index}")
    return hits[0] if hits else None


def plan_index_per_window(plans: Sequence[AttackPlan], windows: np.ndarray) -> np.ndarray:
    """Vectorised lookup: index into ``plans`` (which must be validated) or -1."""
    if not plans:
        return np.full(len(windows), -1, dtype=np.int64)
    starts = np.array([p.start_window for p in plans])
    ends = np.array([p.end_window for p in plans])
    idx = np.searchsorted(starts, windows, side="right") - 1
    safe = np.clip(idx, 0, None)
    hit = (idx >= 0) & (windows <= ends[safe])
    return np.where(hit, idx, -1)


def transform_state(kind: AttackKind, state: JointPhotonState) -> JointPhotonState:
    if state.kind is StateKind.VACUUM:
        return state
    if kind is AttackKind.INTERCEPT_RESEND:
        # resent photon keeps its timing but carries no phase coherence with the reference
        return apply_decoherence(state, 0.0)
    if kind is AttackKind.CUT_FIBER:
        return replace(state, active_photon=False)
    if kind is AttackKind.CLASSICAL_SPOOF:
        return JointPhotonState(StateKind.CLASSICAL_REPLICA, pump_frequency=state.pump_frequency)
    return state


def transform_channel(kind: AttackKind, channel: FiberChannel, added_loss_db: float = 0.0) -> FiberChannel:
    if kind is AttackKind.PASSIVE_TAP:
        return replace(channel, loss_db=channel.loss_db + added_loss_db)
    return channel


def apply_plan_to_channel(plan: AttackPlan, channel: FiberChannel) -> FiberChannel:
    return transform_channel(plan.kind, channel, plan.added_loss_db)
