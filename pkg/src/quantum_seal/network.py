"""Seal-aware network control: report ingestion, gating, routing, crypto policy."""

from __future__ import annotations

import enum
import heapq
import json
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .analytics import SealState
from .errors import ConfigError, UnknownLinkError


def link_id(a: str, b: str) -> str:
    a, b = sorted((a, b))
    return f"{a}-{b}"


@dataclass(frozen=True)
class Link:
    a: str
    b: str
    cost: float
    sealed: bool = False
    status: SealState | None = None
    last_timestamp: float | None = None

    @property
    def id(self) -> str:
        return link_id(self.a, self.b)


@dataclass(frozen=True)
class LinkHealthReport:
    link_id: str
    state: SealState
    v_hat: float | None
    std_err: float | None
    window_span: tuple[int, int]
    timestamp: float
    n_central: int = 0

    def to_json(self) -> str:
        return json.dumps({
            "timestamp": self.timestamp,
            "link_id": self.link_id,
            "state": self.state.value,
            "v_hat": self.v_hat,
            "std_err": self.std_err,
            "n_central": self.n_central,
            "window_span": list(self.window_span),
        }, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> LinkHealthReport:
        d = json.loads(line)
        return cls(
            link_id=d["link_id"], state=SealState(d["state"]), v_hat=d["v_hat"],
            std_err=d["std_err"], window_span=tuple(d.get("window_span", (0, 0))),
            timestamp=d["timestamp"], n_central=d["n_central"],
        )


@dataclass(frozen=True)
class AuditEntry:
    timestamp: float
    link_id: str
    action: str
    detail: str = ""


@dataclass(frozen=True)
class NetworkGraph:
    """Undirected simple graph. Sealed links always carry a seal state."""

    nodes: tuple[str, ...]
    links: dict[str, Link]
    audit: tuple[AuditEntry, ...] = ()

    @classmethod
    def build(cls, nodes: Iterable[str], links: Iterable[Link]) -> NetworkGraph:
        nodes = tuple(sorted(set(nodes)))
        table: dict[str, Link] = {}
        for link in links:
            if link.a == link.b:
                raise ConfigError(f"self-loop at {link.a}")
            if link.a not in nodes or link.b not in nodes:
                raise ConfigError(f"link {link.id} references an unknown node")
            if not link.cost > 0:
                raise ConfigError(f"link {link.id} cost must be positive")
            if link.id in table:
                raise ConfigError(f"duplicate link {link.id}")
            if link.sealed and link.status is None:
                link = replace(link, status=SealState.NORMAL)
            if not link.sealed and link.status is not None:
                raise ConfigError(f"unmonitored link {link.id} cannot carry a seal state")
            table[link.id] = link
        return cls(nodes, table)

    def neighbours(self, node: str) -> list[tuple[str, Link]]:
        out = []
        for link in self.links.values():
            if link.a == node:
                out.append((link.b, link))
            elif link.b == node:
                out.append((link.a, link))
        return sorted(out, key=lambda t: t[0])

    def status(self, a: str, b: str) -> SealState | None:
        return self.links[link_id(a, b)].status


def ingest_report(graph: NetworkGraph, report: LinkHealthReport) -> NetworkGraph:
    link = graph.links.get(report.link_id)
    if link is None:
        raise UnknownLinkError(f"no link {report.link_id!r}")
    if not link.sealed:
        raise UnknownLinkError(f"link {report.link_id!r} is not sealed")
    last = link.last_timestamp
    if last is not None and report.timestamp <= last:
        if report.timestamp == last and report.state is link.status:
            return graph
        entry = AuditEntry(report.timestamp, report.link_id, "rejected-stale",
                           f"last accepted {last}")
        return replace(graph, audit=graph.audit + (entry,))
    links = dict(graph.links)
    links[link.id] = replace(link, status=report.state, last_timestamp=report.timestamp)
    entry = AuditEntry(report.timestamp, report.link_id, "accepted", report.state.value)
    return replace(graph, links=links, audit=graph.audit + (entry,))


class Gate(enum.Enum):
    ALLOW = "allow"
    BLOCK = "block"


def gate_transmission(status: SealState) -> Gate:
    return Gate.ALLOW if status is SealState.NORMAL else Gate.BLOCK


class CryptoRequirement(enum.Enum):
    STANDARD = "standard"
    ENHANCED_ENCRYPTION_REQUIRED = "enhanced_encryption_required"
    SUSPEND_TRAFFIC = "suspend_traffic"


def escalate_policy(status: SealState) -> CryptoRequirement:
    if status is SealState.NORMAL:
        return CryptoRequirement.STANDARD
    if status is SealState.DEGRADED:
        return CryptoRequirement.ENHANCED_ENCRYPTION_REQUIRED
    return CryptoRequirement.SUSPEND_TRAFFIC


class PolicyMode(enum.Enum):
    REQUIRE_NORMAL_SEALS = "require_normal_seals"
    AVOID_COMPROMISED = "avoid_compromised"
    COST_PENALTY = "cost_penalty"


@dataclass(frozen=True)
class RoutingPolicy:
    mode: PolicyMode = PolicyMode.AVOID_COMPROMISED
    penalty_factor: float = 10.0

    def __post_init__(self):
        if isinstance(self.mode, str):
            object.__setattr__(self, "mode", PolicyMode(self.mode))
        if self.mode is PolicyMode.COST_PENALTY and not self.penalty_factor > 1:
            raise ConfigError("penalty_factor must exceed 1")

    def effective_cost(self, link: Link) -> float | None:
        """Cost of traversing ``link`` under this policy, or None if forbidden."""
        normal = link.status is SealState.NORMAL
        if self.mode is PolicyMode.REQUIRE_NORMAL_SEALS:
            return link.cost if link.sealed and normal else None
        if self.mode is PolicyMode.AVOID_COMPROMISED:
            return None if link.status is SealState.COMPROMISED else link.cost
        if link.sealed and not normal:
            return link.cost * self.penalty_factor
        return link.cost


class _NoRoute:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NoRoute"

    def __bool__(self):
        return False


NoRoute = _NoRoute()


def route(graph: NetworkGraph, src: str, dst: str, policy: RoutingPolicy = RoutingPolicy()):
    """Cheapest admissible path as a tuple of nodes, or ``NoRoute``.

    Equal-cost paths are broken by comparing node sequences lexicographically.
    """
    for n in (src, dst):
        if n not in graph.nodes:
            raise KeyError(f"unknown node {n!r}")
    heap: list[tuple[float, tuple[str, ...]]] = [(0.0, (src,))]
    settled: set[str] = set()
    while heap:
        cost, path = heapq.heappop(heap)
        node = path[-1]
        if node in settled:
            continue
        settled.add(node)
        if node == dst:
            return path
        for nxt, link in graph.neighbours(node):
            if nxt in settled:
                continue
            step = policy.effective_cost(link)
            if step is not None:
                heapq.heappush(heap, (cost + step, path + (nxt,)))
    return NoRoute


def path_cost(graph: NetworkGraph, path: Sequence[str], policy: RoutingPolicy) -> float | None:
    total = 0.0
    for a, b in zip(path, path[1:]):
        step = policy.effective_cost(graph.links[link_id(a, b)])
        if step is None:
            return None
        total += step
    return total
