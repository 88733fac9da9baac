import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from oracles import conditional_paths, franson_outcomes, port_table
from quantum_seal.errors import DomainError, UnsupportedStateError
from quantum_seal.optics import (
    JointPhotonState,
    PhasePair,
    QubitAngles,
    apply_decoherence,
    central_peak_probability,
    fringe_visibility,
    joint_path_distribution,
    path_table,
    port_outcome_table,
    qubit_measure_probs,
)

visibilities = st.floats(0.0, 1.0)
phases = st.floats(0.0, 2 * math.pi, exclude_max=True)


@pytest.mark.parametrize(
    "theta, phi, expected",
    [(0.0, 0.0, (1.0, 0.0)), (math.pi / 4, 1.3, (0.5, 0.5)), (math.pi / 3, 0.0, (0.25, 0.75))],
)
def test_qubit_measure_probs_examples(theta, phi, expected):
    assert qubit_measure_probs(QubitAngles(theta, phi)) == pytest.approx(expected, abs=1e-12)


@given(st.floats(0.0, math.pi), phases, phases)
def test_qubit_probs_normalised_and_phi_independent(theta, phi1, phi2):
    p0, p1 = qubit_measure_probs(QubitAngles(theta, phi1))
    assert abs(p0 + p1 - 1.0) <= 1e-12
    assert (p0, p1) == qubit_measure_probs(QubitAngles(theta, phi2))


@pytest.mark.parametrize("theta, phi", [(-0.1, 0.0), (math.pi + 1e-9, 0.0), (1.0, 2 * math.pi), (1.0, -0.5)])
def test_qubit_angles_out_of_range(theta, phi):
    with pytest.raises(DomainError):
        QubitAngles(theta, phi)


@pytest.mark.parametrize(
    "v, total, expected",
    [
        (1.0, 0.0, (1 / 3, 1 / 6, 1 / 6, 1 / 3)),
        (0.0, 0.0, (0.25,) * 4),
        (0.0, 2.1, (0.25,) * 4),
        (1.0, math.pi, (0.0, 0.5, 0.5, 0.0)),
    ],
)
def test_joint_path_distribution_examples(v, total, expected):
    dist = joint_path_distribution(JointPhotonState.entangled(v), PhasePair(total, 0.0))
    assert dist.as_array() == pytest.approx(expected, abs=1e-12)


@given(visibilities, phases, phases)
def test_joint_path_distribution_matches_amplitude_oracle(v, phi_a, phi_b):
    dist = joint_path_distribution(JointPhotonState.entangled(v), PhasePair(phi_a, phi_b))
    arr = dist.as_array()
    assert np.all(arr >= 0)
    assert abs(arr.sum() - 1.0) <= 1e-12
    assert arr == pytest.approx(conditional_paths(v, phi_a, phi_b), abs=1e-12)
    assert path_table(v, phi_a + phi_b) == pytest.approx(arr, abs=1e-12)


@given(visibilities, phases)
def test_port_table_matches_amplitude_oracle(v, total):
    table = port_outcome_table(v, total)
    assert table == pytest.approx(port_table(v, total, 0.0), abs=1e-12)
    # each photon alone reaches its monitored port half the time
    assert table[0] + table[1] == pytest.approx(0.5, abs=1e-12)
    assert table[0] + table[2] == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("v, total, expected", [(1.0, 0.0, 0.25), (0.0, 1.0, 0.125), (0.0, 0.0, 0.125), (1.0, math.pi, 0.0)])
def test_central_peak_probability_examples(v, total, expected):
    p = central_peak_probability(JointPhotonState.entangled(v), PhasePair(0.0, total))
    assert p == pytest.approx(expected, abs=1e-15)


@given(visibilities, phases)
def test_central_peak_matches_oracle_and_conditional_table(v, total):
    state = JointPhotonState.entangled(v)
    p = central_peak_probability(state, PhasePair(total, 0.0))
    assert p == pytest.approx(franson_outcomes(v, total, 0.0)[("+", "+", 0)], abs=1e-12)
    both = port_outcome_table(v, total)[0]
    assert p == pytest.approx(both * joint_path_distribution(state, PhasePair(total, 0.0)).central, abs=1e-12)


@given(visibilities, phases)
def test_central_peak_periodic_and_extremal(v, total):
    state = JointPhotonState.entangled(v)
    p = central_peak_probability(state, PhasePair(total, 0.0))
    assert p == pytest.approx(central_peak_probability(state, PhasePair(total + 2 * math.pi, 0.0)), abs=1e-14)
    hi = central_peak_probability(state, PhasePair(0.0, 0.0))
    lo = central_peak_probability(state, PhasePair(math.pi, 0.0))
    assert lo - 1e-15 <= p <= hi + 1e-15
    if v == 0:
        assert hi == lo


@given(visibilities)
def test_fringe_visibility_round_trip(v):
    state = JointPhotonState.entangled(v)
    c_max = central_peak_probability(state, PhasePair(0.0, 0.0))
    c_min = central_peak_probability(state, PhasePair(math.pi, 0.0))
    assert fringe_visibility(c_max, c_min) == pytest.approx(v, abs=1e-12)


def test_unsupported_states():
    for state in (JointPhotonState.vacuum(), JointPhotonState.classical_replica()):
        with pytest.raises(UnsupportedStateError):
            joint_path_distribution(state, PhasePair(0.0, 0.0))
        with pytest.raises(UnsupportedStateError):
            central_peak_probability(state, PhasePair(0.0, 0.0))


def test_apply_decoherence_examples():
    assert apply_decoherence(JointPhotonState.entangled(1.0), 0.95).source_visibility == pytest.approx(0.95)
    assert apply_decoherence(JointPhotonState.entangled(0.9), 1.0).source_visibility == 0.9
    replica = JointPhotonState.classical_replica()
    assert apply_decoherence(replica, 0.5) is replica
    with pytest.raises(DomainError):
        apply_decoherence(JointPhotonState.entangled(0.9), 1.5)


def test_state_invariants():
    with pytest.raises(DomainError):
        JointPhotonState.entangled(1.2)
    with pytest.raises(DomainError):
        JointPhotonState(JointPhotonState.vacuum().kind, source_visibility=0.5)


@pytest.mark.parametrize("c_max, c_min, expected", [(100, 0, 1.0), (90, 10, 0.8), (50, 50, 0.0)])
def test_fringe_visibility_examples(c_max, c_min, expected):
    assert fringe_visibility(c_max, c_min) == pytest.approx(expected)


def test_fringe_visibility_errors():
    with pytest.raises(DomainError):
        fringe_visibility(0, 0)
    with pytest.raises(DomainError):
        fringe_visibility(10, 20)


@pytest.mark.parametrize("v", [0.0, 0.5, 1.0])
@pytest.mark.parametrize("total", [0.0, math.pi / 2, math.pi])
def test_sampled_paths_match_table(v, total):
    """Inverse-CDF sampling as done by the simulator reproduces the table (chi-square)."""
    rng = np.random.default_rng(1234)
    n = 100_000
    cum = np.cumsum(path_table(np.full(n, v), np.full(n, total)), axis=1)[:, :3]
    paths = (rng.random(n)[:, None] >= cum).sum(axis=1)
    observed = np.bincount(paths, minlength=4)
    expected = np.array(conditional_paths(v, total, 0.0)) * n
    live = expected > 0
    assert observed[~live].sum() == 0
    assert stats.chisquare(observed[live], expected[live] * observed[live].sum() / expected[live].sum()).pvalue > 0.001
