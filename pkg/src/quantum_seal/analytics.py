"""Coincidence counting, visibility estimation and the seal state machine."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from statistics import NormalDist
from typing import Iterator, Sequence

import numpy as np

from .components import PS_PER_SECOND, ReceiverEvents, to_ps
from .errors import InsufficientDataError, PreconditionError
from .optics import TWO_PI

BELL_THRESHOLD = 1.0 / math.sqrt(2.0)
QUARTER_TURNS = (0.0, math.pi / 2, math.pi, 3 * math.pi / 2)


class PeakClass(enum.IntEnum):
    CENTRAL = 0
    EARLY_SIDE = 1
    LATE_SIDE = 2
    OUTSIDE = 3


def classify_peak(delta_t, path_delay: float, tau_c: float):
    """Peak class for a time difference (active minus reference).

    Works on scalars (returns a :class:`PeakClass`) or arrays (returns int8
    class codes). Units only need to agree between the three arguments.
    """
    d = np.asarray(delta_t)
    out = np.full(d.shape, PeakClass.OUTSIDE, dtype=np.int8)
    out[np.abs(d - path_delay) <= tau_c] = PeakClass.LATE_SIDE
    out[np.abs(d + path_delay) <= tau_c] = PeakClass.EARLY_SIDE
    out[np.abs(d) <= tau_c] = PeakClass.CENTRAL
    if out.ndim == 0:
        return PeakClass(int(out))
    return out


@dataclass(frozen=True)
class CoincidenceRecord:
    window_index: int
    delta_t: float
    peak_class: PeakClass
    phase_sum_class: float


@dataclass
class Coincidences:
    """Matched click pairs, column-oriented."""

    window: np.ndarray
    delta_ps: np.ndarray
    peak: np.ndarray
    phase_sum: np.ndarray
    ambiguous_windows: int = 0

    def __len__(self) -> int:
        return len(self.window)

    def __iter__(self) -> Iterator[CoincidenceRecord]:
        for i in range(len(self)):
            yield CoincidenceRecord(
                int(self.window[i]), self.delta_ps[i] / PS_PER_SECOND,
                PeakClass(int(self.peak[i])), float(self.phase_sum[i]),
            )

    def in_peaks(self) -> int:
        return int(np.count_nonzero(self.peak != PeakClass.OUTSIDE))


def _greedy_pairs(ta: np.ndarray, tr: np.ndarray, offset_ps: int) -> list[tuple[int, int]]:
    d = np.abs((ta[:, None] - tr[None, :]) - offset_ps)
    ii, jj = np.unravel_index(np.lexsort((np.indices(d.shape)[1].ravel(),
                                          np.indices(d.shape)[0].ravel(), d.ravel())), d.shape)
    used_a, used_r, out = set(), set(), []
    for i, j in zip(ii.tolist(), jj.tolist()):
        if i not in used_a and j not in used_r:
            used_a.add(i)
            used_r.add(j)
            out.append((i, j))
    return out


def match_coincidences(
    active: ReceiverEvents,
    reference: ReceiverEvents,
    tau_c: float,
    path_delay: float,
    offset: float = 0.0,
) -> Coincidences:
    """Greedy nearest-neighbour pairing of clicks that share an emission window.

    ``offset`` is the calibrated active-minus-reference fiber delay, removed
    from every time difference before classification.
    """
    if not tau_c > 0:
        raise PreconditionError("tau_c must be positive")
    if not (active.is_sorted() and reference.is_sorted()):
        raise PreconditionError("event streams must be sorted by time tag")
    offset_ps = to_ps(offset)

    ua, first_a, count_a = np.unique(active.window, return_index=True, return_counts=True)
    ur, first_r, count_r = np.unique(reference.window, return_index=True, return_counts=True)
    _, ia, ir = np.intersect1d(ua, ur, assume_unique=True, return_indices=True)
    sa, sr, ca, cr = first_a[ia], first_r[ir], count_a[ia], count_r[ir]

    simple = (ca == 1) & (cr == 1)
    idx_a = [sa[simple]]
    idx_r = [sr[simple]]
    crowded = np.flatnonzero(~simple)
    for c in crowded.tolist():
        a0, r0 = sa[c], sr[c]
        pairs = _greedy_pairs(active.time_ps[a0:a0 + ca[c]], reference.time_ps[r0:r0 + cr[c]], offset_ps)
        idx_a.append(np.array([a0 + i for i, _ in pairs], dtype=np.int64))
        idx_r.append(np.array([r0 + j for _, j in pairs], dtype=np.int64))
    pa = np.concatenate(idx_a).astype(np.int64)
    pr = np.concatenate(idx_r).astype(np.int64)
    order = np.argsort(active.time_ps[pa], kind="stable")
    pa, pr = pa[order], pr[order]

    delta = active.time_ps[pa] - reference.time_ps[pr] - offset_ps
    phase_sum = np.mod(active.phase[pa] + reference.phase[pr], TWO_PI)
    phase_sum[np.isclose(phase_sum, TWO_PI, rtol=0, atol=1e-9)] = 0.0
    return Coincidences(
        window=active.window[pa],
        delta_ps=delta,
        peak=classify_peak(delta, to_ps(path_delay), to_ps(tau_c)),
        phase_sum=phase_sum,
        ambiguous_windows=len(crowded),
    )


def central_counts_by_phase(coinc: Coincidences) -> np.ndarray:
    """Central-peak counts at phase sums 0, pi/2, pi, 3pi/2."""
    central = coinc.peak == PeakClass.CENTRAL
    q = coinc.phase_sum[central] / (math.pi / 2)
    nearest = np.rint(q)
    on_grid = np.abs(q - nearest) < 1e-6
    return np.bincount(nearest[on_grid].astype(np.int64) % 4, minlength=4)


@dataclass(frozen=True)
class VisibilityEstimate:
    v_hat: float
    std_err: float
    n_central: int
    window_span: tuple[int, int] = (0, 0)
    counts: tuple[int, int, int, int] = (0, 0, 0, 0)
    consistent: bool = True


def visibility_std_err(c0: float, c_pi: float) -> float:
    if c0 == 0:
        c0 = 1
    if c_pi == 0:
        c_pi = 1
    return 2.0 * math.sqrt(c0 * c_pi) / (c0 + c_pi) ** 1.5


def estimate_visibility(
    counts: Sequence[int],
    window_span: tuple[int, int] = (0, 0),
    min_counts: int = 100,
) -> VisibilityEstimate:
    """Estimate fringe visibility from central counts at phase sums 0, pi/2, pi, 3pi/2.

    The quadrature classes are not used for the estimate; they only have to sit
    within 4 sigma of the fringe midpoint ``(C0 + Cpi) / 2``.
    """
    c0, c90, c180, c270 = (int(c) for c in counts)
    total = c0 + c180
    if total < min_counts:
        raise InsufficientDataError(f"{total} central counts below floor {min_counts}")
    mid = total / 2
    sigma = math.sqrt(mid)
    consistent = abs(c90 - mid) <= 4 * sigma and abs(c270 - mid) <= 4 * sigma
    return VisibilityEstimate(
        v_hat=(c0 - c180) / total,
        std_err=visibility_std_err(c0, c180),
        n_central=total,
        window_span=tuple(window_span),
        counts=(c0, c90, c180, c270),
        consistent=consistent,
    )


class Verdict(enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


def bell_threshold_test(
    estimate: VisibilityEstimate,
    threshold: float = BELL_THRESHOLD,
    alpha: float = 0.001,
) -> Verdict:
    z = NormalDist().inv_cdf(1.0 - alpha)
    if estimate.v_hat + z * estimate.std_err < threshold:
        return Verdict.FAIL
    if estimate.v_hat - z * estimate.std_err > threshold:
        return Verdict.PASS
    return Verdict.INCONCLUSIVE


@dataclass(frozen=True)
class BatchRates:
    """Raw counts of one batch. ``accidental_floor`` is the expected number of
    chance coincidences inside the three peaks given the observed singles."""

    n_windows: int
    active_singles: int
    reference_singles: int
    coincidences: int
    accidental_floor: float = 0.0


def observe_rates(
    active: ReceiverEvents,
    reference: ReceiverEvents,
    coinc: Coincidences,
    n_windows: int,
    tau_c: float,
    window_duration: float,
) -> BatchRates:
    n_a, n_r = len(active), len(reference)
    floor = n_a * n_r / max(n_windows, 1) * (6.0 * tau_c / window_duration)
    return BatchRates(n_windows, n_a, n_r, coinc.in_peaks(), floor)


@dataclass(frozen=True)
class RateBaseline:
    """Per-window rates learned from an attack-free calibration run."""

    active_rate: float
    reference_rate: float
    coincidence_rate: float
    n_windows: int
    tolerance: float = 0.2

    def __post_init__(self):
        if min(self.active_rate, self.reference_rate, self.coincidence_rate) <= 0:
            raise PreconditionError("baseline rates must all be positive")

    @classmethod
    def learn(cls, rates: BatchRates, tolerance: float = 0.2) -> RateBaseline:
        n = rates.n_windows
        return cls(
            rates.active_singles / n, rates.reference_singles / n, rates.coincidences / n, n, tolerance
        )


class RateFlag(enum.Enum):
    NOMINAL = "nominal"
    LOSS_ANOMALY = "loss_anomaly"
    NO_SIGNAL = "no_signal"


def rate_monitor(observed: BatchRates, baseline: RateBaseline | None) -> RateFlag:
    if baseline is None:
        raise PreconditionError("rate monitor needs a calibrated baseline")
    floor = observed.accidental_floor
    if observed.coincidences <= floor + 4 * math.sqrt(floor):
        return RateFlag.NO_SIGNAL
    n = observed.n_windows
    inflation = 1.0 + n / baseline.n_windows  # baseline is itself a Poisson estimate
    for seen, rate in (
        (observed.active_singles, baseline.active_rate),
        (observed.reference_singles, baseline.reference_rate),
        (observed.coincidences, baseline.coincidence_rate),
    ):
        expected = rate * n
        dev = abs(seen - expected)
        if dev > baseline.tolerance * expected and dev > 4 * math.sqrt(expected * inflation):
            return RateFlag.LOSS_ANOMALY
    return RateFlag.NOMINAL


class SealState(enum.Enum):
    NORMAL = "normal"
    DEGRADED = "degraded"
    COMPROMISED = "compromised"
    OFFLINE = "offline"


@dataclass(frozen=True)
class SealStatus:
    state: SealState = SealState.OFFLINE
    since_window: int = 0
    evidence: VisibilityEstimate | None = None
    rate_flag: RateFlag | None = None
    candidate: SealState | None = None
    streak: int = 0


def target_state(verdict: Verdict | None, rate: RateFlag) -> SealState:
    """Map one batch's evidence to the state it argues for; ``verdict=None`` means too little data."""
    if verdict is Verdict.FAIL:
        return SealState.COMPROMISED
    if verdict is None or rate is RateFlag.NO_SIGNAL:
        return SealState.OFFLINE
    if verdict is Verdict.INCONCLUSIVE or rate is RateFlag.LOSS_ANOMALY:
        return SealState.DEGRADED
    return SealState.NORMAL


def update_seal_state(
    current: SealStatus,
    verdict: Verdict | None,
    rate: RateFlag,
    batch_end: int,
    k: int = 3,
    evidence: VisibilityEstimate | None = None,
) -> SealStatus:
    """Advance the state machine by one batch.

    Entering COMPROMISED is immediate. Every other change needs ``k``
    consecutive batches agreeing on the new state, and leaving COMPROMISED
    additionally needs those batches to pass the Bell test.
    """
    target = target_state(verdict, rate)
    status = replace(current, evidence=evidence, rate_flag=rate)
    if target is current.state:
        return replace(status, candidate=None, streak=0)
    if target is SealState.COMPROMISED:
        return replace(status, state=target, since_window=batch_end, candidate=None, streak=0)
    if current.state is SealState.COMPROMISED and verdict is not Verdict.PASS:
        return replace(status, candidate=None, streak=0)
    streak = current.streak + 1 if current.candidate is target else 1
    if streak >= k:
        return replace(status, state=target, since_window=batch_end, candidate=None, streak=0)
    return replace(status, candidate=target, streak=streak)
