"""Monte Carlo simulation and monitoring of entanglement-based quantum seals."""

from .adversary import AttackKind, AttackPlan, attack_in_force, transform_channel, transform_state
from .analytics import (
    BELL_THRESHOLD,
    PeakClass,
    RateBaseline,
    RateFlag,
    SealState,
    SealStatus,
    Verdict,
    VisibilityEstimate,
    bell_threshold_test,
    classify_peak,
    estimate_visibility,
    match_coincidences,
    rate_monitor,
    update_seal_state,
)
from .components import (
    DetectionEvent,
    DetectorModel,
    FiberChannel,
    MziReceiver,
    SealSetup,
    SpdcSource,
    WeakPulseSource,
    draw_phase,
    emit_weak_pulse,
    emit_window,
)
from .network import (
    LinkHealthReport,
    NetworkGraph,
    NoRoute,
    RoutingPolicy,
    escalate_policy,
    gate_transmission,
    ingest_report,
    route,
)
from .optics import (
    JointPhotonState,
    PhasePair,
    QubitAngles,
    apply_decoherence,
    central_peak_probability,
    fringe_visibility,
    joint_path_distribution,
    qubit_measure_probs,
)
from .scenario import ScenarioConfig, load_config, run_scenario
from .simulator import simulate, simulate_window

__version__ = "0.1.0"

__all__ = [
    "AttackKind",
    "AttackPlan",
    "BELL_THRESHOLD",
    "DetectionEvent",
    "DetectorModel",
    "FiberChannel",
    "JointPhotonState",
    "LinkHealthReport",
    "MziReceiver",
    "NetworkGraph",
    "NoRoute",
    "PeakClass",
    "PhasePair",
    "QubitAngles",
    "RateBaseline",
    "RateFlag",
    "RoutingPolicy",
    "ScenarioConfig",
    "SealSetup",
    "SealState",
    "SealStatus",
    "SpdcSource",
    "Verdict",
    "VisibilityEstimate",
    "WeakPulseSource",
    "apply_decoherence",
    "attack_in_force",
    "bell_threshold_test",
    "central_peak_probability",
    "classify_peak",
    "draw_phase",
    "emit_weak_pulse",
    "emit_window",
    "escalate_policy",
    "estimate_visibility",
    "fringe_visibility",
    "gate_transmission",
    "ingest_report",
    "joint_path_distribution",
    "load_config",
    "match_coincidences",
    "qubit_measure_probs",
    "rate_monitor",
    "route",
    "run_scenario",
    "simulate",
    "simulate_window",
    "transform_channel",
    "transform_state",
    "update_seal_state",
]

