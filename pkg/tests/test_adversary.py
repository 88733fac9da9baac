import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quantum_seal.adversary import (
    AttackKind,
    AttackPlan,
    attack_in_force,
    plan_index_per_window,
    transform_channel,
    transform_state,
    validate_plans,
)
from quantum_seal.analytics import central_counts_by_phase, estimate_visibility
from quantum_seal.components import FiberChannel, Origin, SealSetup
from quantum_seal.errors import ConfigError
from quantum_seal.optics import JointPhotonState, StateKind
from quantum_seal.scenario import match_stream
from quantum_seal.simulator import simulate


def plan(kind, start=0, end=10**9, **kw):
    return AttackPlan(AttackKind(kind), start, end, **kw)


def test_attack_in_force_lookup():
    assert attack_in_force([], 5) is None
    p = plan("intercept_resend", 100, 200)
    assert attack_in_force([p], 150) is p
    assert attack_in_force([p], 201) is None
    with pytest.raises(ConfigError):
        validate_plans([p, plan("cut_fiber", 150, 300)])
    with pytest.raises(ConfigError):
        attack_in_force([p, plan("cut_fiber", 150, 300)], 150)


@given(st.lists(st.tuples(st.integers(0, 50), st.integers(0, 10)), max_size=5), st.integers(-5, 120))
def test_vectorised_lookup_matches_scalar(spans, window):
    plans, cursor = [], 0
    for gap, length in spans:
        start = cursor + gap
        plans.append(plan("intercept_resend", start, start + length))
        cursor = start + length + 1
    plans = validate_plans(plans)
    idx = plan_index_per_window(plans, np.array([window]))[0]
    expected = attack_in_force(plans, window)
    assert (plans[idx] if idx >= 0 else None) is expected


def test_plan_invariants():
    with pytest.raises(ConfigError):
        plan("intercept_resend", 10, 5)
    with pytest.raises(ConfigError):
        plan("passive_tap")
    with pytest.raises(ConfigError):
        plan("classical_spoof", pulse_rate=-1.0)


def test_transform_state_examples():
    pair = JointPhotonState.entangled(0.98)
    assert transform_state(AttackKind.INTERCEPT_RESEND, pair).source_visibility == 0.0
    assert transform_state(AttackKind.PASSIVE_TAP, pair) == pair
    cut = transform_state(AttackKind.CUT_FIBER, pair)
    assert not cut.active_photon and cut.source_visibility == 0.98
    assert transform_state(AttackKind.CLASSICAL_SPOOF, pair).kind is StateKind.CLASSICAL_REPLICA
    vac = JointPhotonState.vacuum()
    for kind in AttackKind:
        assert transform_state(kind, vac) is vac


def test_transform_channel_examples():
    ch = FiberChannel(3.0)
    assert transform_channel(AttackKind.PASSIVE_TAP, ch, 1.0).loss_db == pytest.approx(4.0)
    assert transform_channel(AttackKind.INTERCEPT_RESEND, ch) == ch
    tapped = transform_channel(AttackKind.PASSIVE_TAP, ch, 0.5)
    assert tapped.transmission / ch.transmission == pytest.approx(10 ** -0.05)
    assert 10 ** -0.05 == pytest.approx(0.891, abs=5e-4)


N = 1_500_000


@pytest.fixture(scope="module")
def clean():
    return simulate(SealSetup(), 31, 0, N)


def test_cut_fiber_removes_active_photons(clean):
    setup = SealSetup()
    cut = simulate(setup, 31, 0, N, [plan("cut_fiber")])
    assert np.all(cut.active.origin == Origin.DARK_COUNT)
    # reference stream untouched by the attack, to within statistical error
    n_ref = len(clean.reference)
    assert abs(len(cut.reference) - n_ref) <= 4 * math.sqrt(n_ref)
    c = match_stream(cut, setup)
    assert c.in_peaks() <= 2  # accidental floor is ~1e-3 counts here


def test_intercept_resend_is_rate_stealthy(clean):
    setup = SealSetup()
    ir = simulate(setup, 31, 0, N, [plan("intercept_resend")])
    for a, b in ((clean.active, ir.active), (clean.reference, ir.reference)):
        assert abs(len(a) - len(b)) <= 4 * math.sqrt(len(a) + len(b))
    est_clean = estimate_visibility(central_counts_by_phase(match_stream(clean, setup)))
    est_ir = estimate_visibility(central_counts_by_phase(match_stream(ir, setup)))
    assert est_clean.v_hat > 0.9
    assert abs(est_ir.v_hat) <= 4 * est_ir.std_err


def test_spoof_adds_uncorrelated_replicas(clean):
    setup = SealSetup()
    spoof = plan("classical_spoof", pulse_rate=2e4, timing_error_sigma=50e-12)
    ev = simulate(setup, 31, 0, N, [spoof])
    replicas = np.count_nonzero(ev.active.origin == Origin.REPLICA)
    expected = 2e4 * setup.window_duration * N * 0.5 * 0.8
    assert abs(replicas - expected) <= 4 * math.sqrt(expected)
    assert not np.any(ev.active.origin == Origin.PHOTON)
    c = match_stream(ev, setup)
    counts = central_counts_by_phase(c)
    if counts[0] + counts[2] >= 20:
        est = estimate_visibility(counts, min_counts=20)
        assert est.v_hat < 0.5


@pytest.mark.parametrize("kind, extra", [
    ("intercept_resend", {}), ("passive_tap", {"added_loss_db": 1.0}),
    ("cut_fiber", {}), ("classical_spoof", {"pulse_rate": 2e4, "timing_error_sigma": 30e-12}),
])
def test_no_attack_raises_visibility(clean, kind, extra):
    setup = SealSetup()
    base = estimate_visibility(central_counts_by_phase(match_stream(clean, setup)))
    ev = simulate(setup, 32, 0, N, [plan(kind, **extra)])
    counts = central_counts_by_phase(match_stream(ev, setup))
    if counts[0] + counts[2] < 10:
        return  # nothing left to estimate, so nothing can rise
    att = estimate_visibility(counts, min_counts=10)
    assert att.v_hat <= base.v_hat + 3 * math.hypot(att.std_err, base.std_err)
