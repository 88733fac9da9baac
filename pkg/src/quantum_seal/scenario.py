"""Scenario configuration, the end-to-end pipeline and its file formats.

A scenario is one TOML file. Omitted keys take the component defaults;
unknown keys anywhere are rejected.

Output files, all written to one directory:

``events.jsonl``
    One detection per line: ``window``, ``receiver`` ("active"/"reference"),
    ``time_tag_ps``, ``phase_milliradians`` and, with ``--debug-origins``,
    ``origin``.
``reports.jsonl``
    One :class:`~quantum_seal.network.LinkHealthReport` per analysis batch.
``report.json``
    Baseline, per-batch analytics and the seal state trajectory.
``histogram.csv``
    ``bin_center_ps,count`` rows of the coincidence time-difference histogram.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .adversary import AttackPlan
from .analytics import (
    BELL_THRESHOLD,
    BatchRates,
    Coincidences,
    RateBaseline,
    RateFlag,
    SealState,
    SealStatus,
    VisibilityEstimate,
    Verdict,
    bell_threshold_test,
    central_counts_by_phase,
    estimate_visibility,
    match_coincidences,
    observe_rates,
    rate_monitor,
    update_seal_state,
)
from .components import (
    DetectorModel,
    EventStream,
    FiberChannel,
    MziReceiver,
    Origin,
    ReceiverEvents,
    SealSetup,
    SpdcSource,
)
from .errors import ConfigError, InsufficientDataError, PreconditionError
from .network import LinkHealthReport, Link, NetworkGraph, RoutingPolicy, ingest_report, route
from .simulator import check_plans, simulate


@dataclass(frozen=True)
class AnalyticsConfig:
    batch_size: int = 10_000
    alpha: float = 0.001
    threshold: float = BELL_THRESHOLD
    hysteresis: int = 3
    min_counts: int = 100
    rate_tolerance: float = 0.2
    calibration_fraction: float = 0.1
    coincidence_window: float = 100e-12

    def __post_init__(self):
        if self.batch_size <= 0:
            raise ConfigError("batch_size must be positive")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if not 0 < self.threshold <= 1:
            raise ConfigError("threshold must lie in (0, 1]")
        if self.hysteresis < 1:
            raise ConfigError("hysteresis must be >= 1")
        if self.min_counts < 1:
            raise ConfigError("min_counts must be >= 1")
        if not self.rate_tolerance > 0:
            raise ConfigError("rate_tolerance must be positive")
        if not 0 < self.calibration_fraction < 1:
            raise ConfigError("calibration_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class NetworkConfig:
    nodes: tuple[str, ...]
    links: tuple[Link, ...]
    policy: RoutingPolicy = RoutingPolicy()
    seal_link: str | None = None
    route: tuple[str, str] | None = None

    def graph(self) -> NetworkGraph:
        return NetworkGraph.build(self.nodes, self.links)


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"
    event_log: bool = True
    histogram_bin_width_ps: int = 20


@dataclass(frozen=True)
class ScenarioConfig:
    master_seed: int = 0
    total_windows: int = 100_000
    setup: SealSetup = field(default_factory=SealSetup)
    attacks: tuple[AttackPlan, ...] = ()
    analytics: AnalyticsConfig = field(default_factory=AnalyticsConfig)
    network: NetworkConfig | None = None
    output: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self):
        if self.total_windows <= 0:
            raise ConfigError("total_windows must be positive")
        object.__setattr__(self, "attacks", check_plans(self.setup, self.attacks))
        warm = self.warmup_windows
        if warm < 1:
            raise ConfigError("calibration warm-up is empty; raise total_windows")
        for p in self.attacks:
            if p.start_window < warm:
                raise ConfigError(
                    f"attack starting at window {p.start_window} overlaps the calibration warm-up "
                    f"[0, {warm})"
                )
        if self.network is not None and self.network.seal_link is not None:
            graph = self.network.graph()
            link = graph.links.get(self.network.seal_link)
            if link is None or not link.sealed:
                raise ConfigError(f"seal_link {self.network.seal_link!r} is not a sealed link")

    @property
    def warmup_windows(self) -> int:
        return int(round(self.analytics.calibration_fraction * self.total_windows))

    @property
    def link_name(self) -> str:
        if self.network is not None and self.network.seal_link is not None:
            return self.network.seal_link
        return "seal"

    def with_seed(self, seed: int) -> ScenarioConfig:
        return dataclasses.replace(self, master_seed=seed)


# --- loading ---------------------------------------------------------------

def _build(cls, data: Any, where: str, **overrides):
    if not isinstance(data, Mapping):
        raise ConfigError(f"{where}: expected a table")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kwargs = {k: v for k, v in data.items() if k not in overrides}
    kwargs.update(overrides)
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _section(data: Mapping, key: str) -> Mapping:
    value = data.get(key, {})
    if not isinstance(value, Mapping):
        raise ConfigError(f"{key}: expected a table")
    return value


def _receiver(data: Mapping, where: str) -> MziReceiver:
    detector = _build(DetectorModel, _section(data, "detector"), f"{where}.detector")
    return _build(MziReceiver, data, where, detector=detector)


_TOP_KEYS = {
    "master_seed", "total_windows", "window_duration", "source", "channels",
    "receivers", "attacks", "analytics", "network", "output",
}


def config_from_dict(data: Mapping) -> ScenarioConfig:
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    channels = _section(data, "channels")
    receivers = _section(data, "receivers")
    for where, block in (("channels", channels), ("receivers", receivers)):
        extra = set(block) - {"active", "reference"}
        if extra:
            raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
    analytics = _build(AnalyticsConfig, _section(data, "analytics"), "analytics")
    try:
        setup = SealSetup(
            source=_build(SpdcSource, _section(data, "source"), "source"),
            active_channel=_build(FiberChannel, {"loss_db": 3.0, **_section(channels, "active")}, "channels.active"),
            reference_channel=_build(FiberChannel, {"loss_db": 1.0, **_section(channels, "reference")}, "channels.reference"),
            active_rx=_receiver(_section(receivers, "active"), "receivers.active"),
            reference_rx=_receiver(_section(receivers, "reference"), "receivers.reference"),
            window_duration=float(data.get("window_duration", 1e-6)),
            coincidence_window=analytics.coincidence_window,
        )
    except ConfigError as exc:
        raise ConfigError(f"setup: {exc}") from None
    attacks = data.get("attacks", [])
    if not isinstance(attacks, list):
        raise ConfigError("attacks: expected an array of tables")
    plans = tuple(_build(AttackPlan, a, f"attacks[{i}]") for i, a in enumerate(attacks))
    network = None
    if "network" in data:
        network = _network(data["network"])
    output = _build(OutputConfig, _section(data, "output"), "output")
    seed = data.get("master_seed", 0)
    total = data.get("total_windows", 100_000)
    if not isinstance(seed, int) or not isinstance(total, int):
        raise ConfigError("master_seed and total_windows must be integers")
    try:
        return ScenarioConfig(seed, total, setup, plans, analytics, network, output)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _network(data: Any) -> NetworkConfig:
    if not isinstance(data, Mapping):
        raise ConfigError("network: expected a table")
    allowed = {"nodes", "links", "policy", "penalty_factor", "seal_link", "route"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"network: unknown keys {sorted(unknown)}")
    links = []
    for i, raw in enumerate(data.get("links", [])):
        raw = dict(raw)
        state = raw.pop("status", None)
        try:
            status = SealState(state) if state is not None else None
        except ValueError:
            raise ConfigError(f"network.links[{i}]: unknown status {state!r}") from None
        links.append(_build(Link, raw, f"network.links[{i}]", status=status))
    nodes = data.get("nodes") or sorted({n for l in links for n in (l.a, l.b)})
    policy = _build(
        RoutingPolicy,
        {"mode": data.get("policy", "avoid_compromised"), "penalty_factor": data.get("penalty_factor", 10.0)},
        "network.policy",
    )
    route_pair = data.get("route")
    if route_pair is not None:
        if len(route_pair) != 2:
            raise ConfigError("network.route must be [src, dst]")
        route_pair = tuple(route_pair)
    cfg = NetworkConfig(tuple(nodes), tuple(links), policy, data.get("seal_link"), route_pair)
    cfg.graph()
    return cfg


def load_config(path: str | Path) -> ScenarioConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(data)


# --- pipeline --------------------------------------------------------------

@dataclass(frozen=True)
class BatchResult:
    index: int
    start: int
    stop: int
    rates: BatchRates
    estimate: VisibilityEstimate | None
    verdict: Verdict | None
    rate_flag: RateFlag
    status: SealStatus
    ambiguous_windows: int = 0


def match_stream(stream: EventStream, setup: SealSetup) -> Coincidences:
    return match_coincidences(
        stream.active, stream.reference, setup.coincidence_window, setup.path_delay, setup.delay_offset
    )


def _slice_coincidences(c: Coincidences, start: int, stop: int) -> Coincidences:
    lo, hi = np.searchsorted(c.window, [start, stop])
    return Coincidences(c.window[lo:hi], c.delta_ps[lo:hi], c.peak[lo:hi], c.phase_sum[lo:hi])


def learn_baseline(stream: EventStream, setup: SealSetup, tolerance: float, coinc: Coincidences | None = None) -> RateBaseline:
    coinc = match_stream(stream, setup) if coinc is None else coinc
    rates = observe_rates(
        stream.active, stream.reference, coinc, stream.n_windows,
        setup.coincidence_window, setup.window_duration,
    )
    try:
        return RateBaseline.learn(rates, tolerance)
    except PreconditionError as exc:
        raise PreconditionError(f"calibration failed: {exc}") from None


def evaluate_batch(
    stream: EventStream,
    coinc: Coincidences,
    setup: SealSetup,
    analytics: AnalyticsConfig,
    baseline: RateBaseline,
    status: SealStatus,
    index: int = 0,
) -> BatchResult:
    rates = observe_rates(
        stream.active, stream.reference, coinc, stream.n_windows,
        setup.coincidence_window, setup.window_duration,
    )
    flag = rate_monitor(rates, baseline)
    try:
        estimate = estimate_visibility(
            central_counts_by_phase(coinc), (stream.start, stream.stop - 1), analytics.min_counts
        )
        verdict = bell_threshold_test(estimate, analytics.threshold, analytics.alpha)
    except InsufficientDataError:
        estimate, verdict = None, None
    status = update_seal_state(status, verdict, flag, stream.stop - 1, analytics.hysteresis, estimate)
    return BatchResult(index, stream.start, stream.stop, rates, estimate, verdict, flag, status,
                       coinc.ambiguous_windows)


@dataclass
class RunResult:
    config: ScenarioConfig
    stream: EventStream
    coincidences: Coincidences
    baseline: RateBaseline
    batches: list[BatchResult]

    @property
    def final_state(self) -> SealState:
        return self.batches[-1].status.state if self.batches else SealState.OFFLINE

    def transitions(self) -> list[tuple[int, SealState, SealState]]:
        out, prev = [], SealState.OFFLINE
        for b in self.batches:
            if b.status.state is not prev:
                out.append((b.stop - 1, prev, b.status.state))
                prev = b.status.state
        return out

    def overall_estimate(self) -> VisibilityEstimate | None:
        warm = self.config.warmup_windows
        c = _slice_coincidences(self.coincidences, warm, self.stream.stop)
        try:
            return estimate_visibility(central_counts_by_phase(c), (warm, self.stream.stop - 1), 1)
        except InsufficientDataError:
            return None

    def reports(self) -> list[LinkHealthReport]:
        wd = self.config.setup.window_duration
        return [
            LinkHealthReport(
                link_id=self.config.link_name,
                state=b.status.state,
                v_hat=b.estimate.v_hat if b.estimate else None,
                std_err=b.estimate.std_err if b.estimate else None,
                window_span=(b.start, b.stop - 1),
                timestamp=b.stop * wd,
                n_central=b.estimate.n_central if b.estimate else 0,
            )
            for b in self.batches
        ]


def analyze(config: ScenarioConfig, stream: EventStream) -> RunResult:
    """Calibrate on the warm-up windows, then evaluate the rest batch by batch."""
    setup, analytics = config.setup, config.analytics
    coinc = match_stream(stream, setup)
    warm = config.warmup_windows
    baseline = learn_baseline(
        stream.in_windows(0, warm), setup, analytics.rate_tolerance, _slice_coincidences(coinc, 0, warm)
    )
    status = SealStatus()
    batches = []
    for i, start in enumerate(range(warm, config.total_windows, analytics.batch_size)):
        stop = min(start + analytics.batch_size, config.total_windows)
        result = evaluate_batch(
            stream.in_windows(start, stop), _slice_coincidences(coinc, start, stop),
            setup, analytics, baseline, status, i,
        )
        status = result.status
        batches.append(result)
    return RunResult(config, stream, coinc, baseline, batches)


def run_scenario(config: ScenarioConfig) -> RunResult:
    stream = simulate(config.setup, config.master_seed, 0, config.total_windows, config.attacks)
    return analyze(config, stream)


# --- histogram -------------------------------------------------------------

def histogram(coinc: Coincidences, bin_width_ps: int, half_range_ps: int) -> list[tuple[int, int]]:
    """Counts of coincidence time differences in bins centred on multiples of ``bin_width_ps``."""
    if not bin_width_ps > 0:
        raise ValueError("bin_width must be positive")
    n_half = int(math.ceil(half_range_ps / bin_width_ps))
    centers = np.arange(-n_half, n_half + 1) * bin_width_ps
    idx = np.floor(coinc.delta_ps / bin_width_ps + 0.5).astype(np.int64) + n_half
    ok = (idx >= 0) & (idx < len(centers))
    counts = np.bincount(idx[ok], minlength=len(centers))
    return [(int(c), int(n)) for c, n in zip(centers, counts)]


def histogram_range_ps(setup: SealSetup) -> int:
    return int(round((setup.path_delay + 3 * setup.coincidence_window) * 1e12))


# --- file formats ----------------------------------------------------------

_RECEIVERS = ("active", "reference")


def write_event_log(path: Path, stream: EventStream, debug_origins: bool = False) -> None:
    rows = []
    for name, ev in zip(_RECEIVERS, (stream.active, stream.reference)):
        mrad = np.rint(ev.phase * 1000).astype(np.int64)
        for i in range(len(ev)):
            rec = {
                "window": int(ev.window[i]),
                "receiver": name,
                "time_tag_ps": int(ev.time_ps[i]),
                "phase_milliradians": int(mrad[i]),
            }
            if debug_origins:
                rec["origin"] = Origin(int(ev.origin[i])).name.lower()
            rows.append((rec["time_tag_ps"], name, json.dumps(rec, sort_keys=True)))
    rows.sort(key=lambda r: (r[0], r[1]))
    with open(path, "w") as fh:
        for _, _, line in rows:
            fh.write(line + "\n")


def read_event_log(path: Path, setup: SealSetup, start: int, stop: int) -> EventStream:
    cols = {name: ([], [], [], []) for name in _RECEIVERS}
    with open(path) as fh:
        for line in fh:
            rec = json.loads(line)
            w, t, ph, org = cols[rec["receiver"]]
            w.append(rec["window"])
            t.append(rec["time_tag_ps"])
            ph.append(rec["phase_milliradians"])
            org.append(Origin[rec["origin"].upper()] if "origin" in rec else Origin.PHOTON)
    out = []
    for name, rx in zip(_RECEIVERS, (setup.active_rx, setup.reference_rx)):
        w, t, ph, org = cols[name]
        table = np.rint(np.asarray(rx.phase_set) * 1000)
        ph = np.asarray(ph, dtype=float)
        idx = np.argmin(np.abs(ph[:, None] - table[None, :]), axis=1) if len(ph) else ph.astype(int)
        out.append(ReceiverEvents(w, t, idx, org, rx.phase_set))
    return EventStream(out[0], out[1], start, stop)


def _estimate_dict(e: VisibilityEstimate | None):
    if e is None:
        return None
    return {
        "v_hat": e.v_hat, "std_err": e.std_err, "n_central": e.n_central,
        "counts": list(e.counts), "consistent": e.consistent, "window_span": list(e.window_span),
    }


def report_dict(result: RunResult) -> dict:
    cfg = result.config
    b = result.baseline
    return {
        "master_seed": cfg.master_seed,
        "total_windows": cfg.total_windows,
        "warmup_windows": cfg.warmup_windows,
        "link_id": cfg.link_name,
        "baseline": {
            "active_rate": b.active_rate, "reference_rate": b.reference_rate,
            "coincidence_rate": b.coincidence_rate, "n_windows": b.n_windows, "tolerance": b.tolerance,
        },
        "overall": _estimate_dict(result.overall_estimate()),
        "final_state": result.final_state.value,
        "transitions": [
            {"window": w, "from": a.value, "to": z.value} for w, a, z in result.transitions()
        ],
        "batches": [
            {
                "index": r.index,
                "start": r.start,
                "stop": r.stop,
                "estimate": _estimate_dict(r.estimate),
                "verdict": r.verdict.value if r.verdict else "insufficient_data",
                "rate_flag": r.rate_flag.value,
                "state": r.status.state.value,
                "active_singles": r.rates.active_singles,
                "reference_singles": r.rates.reference_singles,
                "coincidences": r.rates.coincidences,
                "accidental_floor": r.rates.accidental_floor,
                "ambiguous_windows": r.ambiguous_windows,
            }
            for r in result.batches
        ],
    }


def write_outputs(result: RunResult, out_dir: Path, debug_origins: bool = False) -> dict[str, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    paths = {
        "report": out_dir / "report.json",
        "reports": out_dir / "reports.jsonl",
        "histogram": out_dir / "histogram.csv",
    }
    with open(paths["report"], "w") as fh:
        json.dump(report_dict(result), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(paths["reports"], "w") as fh:
        for rep in result.reports():
            fh.write(rep.to_json() + "\n")
    write_histogram(paths["histogram"], histogram(
        result.coincidences, cfg.output.histogram_bin_width_ps, histogram_range_ps(cfg.setup)
    ))
    if cfg.output.event_log:
        paths["events"] = out_dir / "events.jsonl"
        write_event_log(paths["events"], result.stream, debug_origins)
    return paths


def write_histogram(path: Path, rows: Sequence[tuple[int, int]]) -> None:
    with open(path, "w") as fh:
        fh.write("bin_center_ps,count\n")
        for center, count in rows:
            fh.write(f"{center},{count}\n")


def read_reports(path: Path) -> list[LinkHealthReport]:
    with open(path) as fh:
        return [LinkHealthReport.from_json(line) for line in fh if line.strip()]


# --- routing demo ----------------------------------------------------------

def route_demo(config: ScenarioConfig, src: str, dst: str, reports: Sequence[LinkHealthReport]):
    """Return ``(path_before, path_after, final_graph)`` around ingesting ``reports``."""
    if config.network is None:
        raise ConfigError("scenario has no [network] block")
    graph = config.network.graph()
    policy = config.network.policy
    before = route(graph, src, dst, policy)
    for rep in sorted(reports, key=lambda r: r.timestamp):
        graph = ingest_report(graph, rep)
    return before, route(graph, src, dst, policy), graph
