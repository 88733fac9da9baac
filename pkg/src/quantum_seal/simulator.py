"""Window-level Monte Carlo of the seal's physical layer.

Windows are grouped into fixed blocks of ``BLOCK_WINDOWS``; each block draws
from its own generator seeded by ``(master_seed, block_index)``. Simulating a
window range therefore gives identical events however the range is split, and
blocks may be evaluated in any order.

Per block the draw order is fixed: pair emission and both phase choices for
every window, then per-pair photon variables, then dark counts, then spoof
replicas. Attack plans only change how the draws are interpreted (except for
the replicas, which come last), so attacked and clean runs with the same seed
share their random numbers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .adversary import (
    AttackKind,
    AttackPlan,
    apply_plan_to_channel,
    plan_index_per_window,
    transform_state,
    validate_plans,
)
from .components import (
    DetectionEvent,
    EventStream,
    Origin,
    Receiver,
    ReceiverEvents,
    SealSetup,
    WeakPulseSource,
    emit_weak_pulse,
    to_ps,
)
from .errors import ConfigError
from .optics import LL, LS, SL, JointPhotonState, StateKind, apply_decoherence, path_table, port_outcome_table

BLOCK_WINDOWS = 1 << 16


def block_rng(master_seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=(block,))))


@dataclass(frozen=True)
class Regime:
    """How pair windows behave under one attack plan (or none)."""

    visibility: float
    active_photon: bool
    active_transmission: float
    spoof: AttackPlan | None = None


def regime_for(setup: SealSetup, plan: AttackPlan | None) -> Regime:
    state = JointPhotonState.entangled(setup.source.source_visibility, setup.source.pump_frequency)
    channel = setup.active_channel
    if plan is not None:
        state = transform_state(plan.kind, state)
        channel = apply_plan_to_channel(plan, channel)
    state = apply_decoherence(state, channel.decoherence_factor)
    state = apply_decoherence(state, setup.reference_channel.decoherence_factor)
    entangled = state.kind is StateKind.ENTANGLED_PAIR
    spoof = plan if plan is not None and plan.kind is AttackKind.CLASSICAL_SPOOF else None
    return Regime(
        visibility=state.source_visibility if entangled else 0.0,
        active_photon=entangled and state.active_photon,
        active_transmission=channel.transmission,
        spoof=spoof,
    )


def check_plans(setup: SealSetup, plans: Sequence[AttackPlan]) -> tuple[AttackPlan, ...]:
    plans = validate_plans(plans)
    for p in plans:
        if p.kind is AttackKind.CLASSICAL_SPOOF and p.pulse_rate * setup.window_duration >= 1.0:
            raise ConfigError("spoof pulse_rate must give fewer than one photon per window")
    return plans


def _place(window_ps: int, windows: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    epoch = windows * window_ps
    return np.clip(epoch + offsets, epoch, epoch + window_ps - 1)


def _simulate_block(
    setup: SealSetup,
    regimes: Sequence[Regime],
    regime_of_window: np.ndarray,
    first_window: int,
    n: int,
    rng: np.random.Generator,
) -> tuple[ReceiverEvents, ReceiverEvents]:
    src, rx_a, rx_r = setup.source, setup.active_rx, setup.reference_rx
    ch_r = setup.reference_channel
    window_ps = setup.window_ps
    dt_ps = to_ps(setup.path_delay)
    set_a = np.asarray(rx_a.phase_set)
    set_r = np.asarray(rx_r.phase_set)

    u_pair = rng.random(n)
    ph_a = rng.integers(0, len(set_a), n).astype(np.int16)
    ph_r = rng.integers(0, len(set_r), n).astype(np.int16)

    pairs = np.flatnonzero(u_pair < src.mean_pairs_per_window)
    k = len(pairs)
    u = rng.random((k, 6))
    jit = rng.standard_normal((k, 2))

    reg = regime_of_window[pairs]
    vis = np.array([r.visibility for r in regimes])[reg]
    t_a = np.array([r.active_transmission for r in regimes])[reg]
    a_present = np.array([r.active_photon for r in regimes], dtype=bool)[reg]

    surv_a = a_present & (u[:, 0] < t_a)
    surv_r = u[:, 1] < ch_r.transmission
    port_a = u[:, 2] < 0.5
    port_r = port_a.copy()
    long_a = u[:, 3] >= 0.5
    long_r = long_a.copy()

    both = surv_a & surv_r
    if both.any():
        phase_sum = set_a[ph_a[pairs[both]]] + set_r[ph_r[pairs[both]]]
        v = vis[both]
        cat_cum = np.cumsum(port_outcome_table(v, phase_sum), axis=1)[:, :3]
        cat = (u[both, 2, None] >= cat_cum).sum(axis=1)
        path_cum = np.cumsum(path_table(v, phase_sum), axis=1)[:, :3]
        path = (u[both, 3, None] >= path_cum).sum(axis=1)
        half = long_a[both]
        port_a[both] = (cat == 0) | (cat == 1)
        port_r[both] = (cat == 0) | (cat == 2)
        long_a[both] = np.where(cat == 0, (path == LS) | (path == LL), half)
        long_r[both] = np.where(cat == 0, (path == SL) | (path == LL), half)

    det_a = surv_a & port_a & (u[:, 4] < rx_a.detector.efficiency)
    det_r = surv_r & port_r & (u[:, 5] < rx_r.detector.efficiency)

    def photon_times(mask, long, delay, sigma, col):
        offs = to_ps(delay) + long[mask].astype(np.int64) * dt_ps
        offs = offs + np.rint(jit[mask, col] * sigma * 1e12).astype(np.int64)
        return _place(window_ps, first_window + pairs[mask], offs)

    parts_a = [(first_window + pairs[det_a],
                photon_times(det_a, long_a, setup.active_channel.propagation_delay, rx_a.detector.jitter_sigma, 0),
                Origin.PHOTON)]
    parts_r = [(first_window + pairs[det_r],
                photon_times(det_r, long_r, ch_r.propagation_delay, rx_r.detector.jitter_sigma, 1),
                Origin.PHOTON)]

    for rx, parts in ((rx_a, parts_a), (rx_r, parts_r)):
        total = rng.poisson(rx.detector.dark_rate * setup.window_duration * n)
        w = first_window + rng.integers(0, n, total)
        offs = rng.integers(0, window_ps, total)
        parts.append((w, _place(window_ps, w, offs), Origin.DARK_COUNT))

    for ri, regime in enumerate(regimes):
        plan = regime.spoof
        if plan is None or plan.pulse_rate == 0.0:
            continue
        host = np.flatnonzero(regime_of_window == ri)
        if len(host) == 0:
            continue
        pulse = WeakPulseSource(plan.pulse_rate * setup.window_duration)
        counts = emit_weak_pulse(pulse, rng, size=len(host))
        w_local = np.repeat(host, counts)
        m = len(w_local)
        us = rng.random((m, 3))
        gs = rng.standard_normal((m, 2))
        hit = (us[:, 0] < 0.5) & (us[:, 2] < rx_a.detector.efficiency)
        offs = (
            to_ps(setup.active_channel.propagation_delay)
            + (us[:, 1] >= 0.5).astype(np.int64) * dt_ps
            + np.rint(gs[:, 0] * plan.timing_error_sigma * 1e12).astype(np.int64)
            + np.rint(gs[:, 1] * rx_a.detector.jitter_sigma * 1e12).astype(np.int64)
        )
        w = first_window + w_local[hit]
        parts_a.append((w, _place(window_ps, w, offs[hit]), Origin.REPLICA))

    return _assemble(parts_a, ph_a, first_window, rx_a.phase_set), _assemble(parts_r, ph_r, first_window, rx_r.phase_set)


def _assemble(parts, phase_idx, first_window, phase_set) -> ReceiverEvents:
    window = np.concatenate([p[0] for p in parts]).astype(np.int64)
    time_ps = np.concatenate([p[1] for p in parts]).astype(np.int64)
    origin = np.concatenate([np.full(len(p[0]), int(p[2]), dtype=np.int8) for p in parts])
    order = np.argsort(time_ps, kind="stable")
    window = window[order]
    return ReceiverEvents(window, time_ps[order], phase_idx[window - first_window], origin[order], phase_set)


def simulate(
    setup: SealSetup,
    seed: int,
    start: int,
    stop: int,
    plans: Sequence[AttackPlan] = (),
) -> EventStream:
    """Simulate windows ``[start, stop)``."""
    if stop <= start:
        return EventStream(
            ReceiverEvents.empty(setup.active_rx.phase_set),
            ReceiverEvents.empty(setup.reference_rx.phase_set), start, start,
        )
    plans = check_plans(setup, plans)
    regimes = [regime_for(setup, None)] + [regime_for(setup, p) for p in plans]
    parts_a, parts_r = [], []
    for block in range(start // BLOCK_WINDOWS, (stop - 1) // BLOCK_WINDOWS + 1):
        first = block * BLOCK_WINDOWS
        windows = first + np.arange(BLOCK_WINDOWS)
        reg = plan_index_per_window(plans, windows) + 1
        a, r = _simulate_block(setup, regimes, reg, first, BLOCK_WINDOWS, block_rng(seed, block))
        lo, hi = max(start, first), min(stop, first + BLOCK_WINDOWS)
        parts_a.append(a.in_windows(lo, hi))
        parts_r.append(r.in_windows(lo, hi))
    return EventStream(ReceiverEvents.concat(parts_a), ReceiverEvents.concat(parts_r), start, stop)


def simulate_window(
    setup: SealSetup,
    attack: AttackPlan | None,
    window_index: int,
    rng: np.random.Generator,
) -> list[DetectionEvent]:
    """Events of a single window, both receivers merged in time order."""
    plans = check_plans(setup, [attack] if attack is not None else [])
    regimes = [regime_for(setup, p) for p in plans] or [regime_for(setup, None)]
    a, r = _simulate_block(setup, regimes, np.zeros(1, dtype=np.int64), window_index, 1, rng)
    events = list(a.events(Receiver.ACTIVE)) + list(r.events(Receiver.REFERENCE))
    return sorted(events, key=lambda e: (e.time_tag_ps, e.receiver))
