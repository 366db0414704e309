"""Continuous-time channel engine for unslotted, carrier-sense-free access.

Time is measured in packet durations (one packet occupies the air for
exactly 1.0) and offered loads are in Erlang. Every node owns an
independent PCG64 stream; run_epoch draws arrivals first and then one
uniform gate value per arrival, so the number of draws never depends on
the transmit probability.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

PACKET_DURATION = 1.0


class ConfigurationError(ValueError):
    """Raised for invalid engine or scenario parameters."""


@dataclass(frozen=True)
class Topology:
    """Who hears whom.

    ``adjacency[i, j]`` marks 1-hop neighbours. ``receiver_audible[i]`` is
    the set of nodes whose transmissions reach node i's base station.
    """

    adjacency: np.ndarray
    receiver_audible: tuple[frozenset[int], ...]
    kind: str = "explicit"

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1] or adj.shape[0] < 1:
            raise ConfigurationError("adjacency must be a non-empty square matrix")
        if adj.diagonal().any():
            raise ConfigurationError("adjacency must be irreflexive")
        if not np.array_equal(adj, adj.T):
            raise ConfigurationError("adjacency must be symmetric")
        if len(self.receiver_audible) != adj.shape[0]:
            raise ConfigurationError("receiver_audible needs one entry per node")
        for i, heard in enumerate(self.receiver_audible):
            if i not in heard:
                raise ConfigurationError(f"receiver_audible({i}) must contain {i}")
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)

    @classmethod
    def fully_connected(cls, n: int) -> "Topology":
        if n < 1:
            raise ConfigurationError("node count must be positive")
        adj = ~np.eye(n, dtype=bool)
        everyone = frozenset(range(n))
        return cls(adj, tuple(everyone for _ in range(n)), kind="full")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Topology":
        """Partial mesh; each base station hears its node and that node's neighbours."""
        if n < 1:
            raise ConfigurationError("node count must be positive")
        adj = np.zeros((n, n), dtype=bool)
        for a, b in edges:
            if not (0 <= a < n and 0 <= b < n):
                raise ConfigurationError(f"edge ({a}, {b}) references an unknown node")
            if a == b:
                raise ConfigurationError(f"self-loop on node {a}")
            adj[a, b] = adj[b, a] = True
        audible = tuple(frozenset({i, *np.flatnonzero(adj[i]).tolist()}) for i in range(n))
        return cls(adj, audible, kind="explicit")

    @classmethod
    def chain(cls, n: int) -> "Topology":
        return cls.from_edges(n, [(i, i + 1) for i in range(n - 1)])

    @property
    def node_count(self) -> int:
        return self.adjacency.shape[0]

    def neighbors(self, i: int) -> list[int]:
        return np.flatnonzero(self.adjacency[i]).tolist()

    @property
    def is_complete(self) -> bool:
        n = self.node_count
        return bool(self.adjacency.sum() == n * (n - 1))


@dataclass(frozen=True)
class TransmissionRecord:
    node: int
    start: float
    self_collided: bool = False
    inter_collided: bool = False

    @property
    def end(self) -> float:
        return self.start + PACKET_DURATION

    @property
    def success(self) -> bool:
        return not (self.self_collided or self.inter_collided)


@dataclass(frozen=True)
class ArrivalEvent:
    node: int
    time: float
    gated_in: bool


@dataclass
class EpochStats:
    """Per-node counters for one epoch; all arrays are indexed by node."""

    duration: float
    arrivals: np.ndarray
    transmitted: np.ndarray
    self_coll: np.ndarray
    inter_coll: np.ndarray
    success: np.ndarray
    discarded: np.ndarray
    # observed_nonoverlap[i, j]: node-j transmissions heard by i that overlap no node-i transmission
    observed_nonoverlap: np.ndarray = field(repr=False)

    @property
    def node_count(self) -> int:
        return len(self.transmitted)

    @property
    def throughput(self) -> np.ndarray:
        return self.success / self.duration

    @property
    def network_throughput(self) -> float:
        return float(self.throughput.sum())

    @property
    def effective_load(self) -> np.ndarray:
        return self.transmitted / self.duration

    def observed_throughput(self, i: int, j: int) -> float:
        return float(self.observed_nonoverlap[i, j]) / self.duration


def _rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.Generator(np.random.PCG64(seed_or_rng))


def generate_arrivals(rate: float, window: tuple[float, float], rng) -> np.ndarray:
    """Poisson arrival instants in ``[t0, t1)``, sorted ascending.

    Draws a Poisson count and places the points uniformly, which is the
    same law as summing exponential gaps of mean ``1/rate``.
    """
    t0, t1 = window
    if rate < 0 or not np.isfinite(rate):
        raise ConfigurationError(f"arrival rate must be a finite non-negative number, got {rate}")
    if not t1 > t0:
        raise ConfigurationError(f"degenerate window {window}")
    rng = _rng(rng)
    length = t1 - t0
    count = rng.poisson(rate * length) if rate > 0 else 0
    times = t0 + np.sort(rng.random(count)) * length
    return times


def _count_in_open_interval(sorted_starts: np.ndarray, t: np.ndarray) -> np.ndarray:
    """How many packets in ``sorted_starts`` overlap a packet starting at t.

    Compares computed end points (start + 1) rather than ``t - 1`` so the
    result agrees exactly with the record-level interval test.
    """
    hi = np.searchsorted(sorted_starts, t + PACKET_DURATION, side="left")
    lo = np.searchsorted(sorted_starts + PACKET_DURATION, t, side="right")
    return hi - lo


def _classify_arrays(starts: Sequence[np.ndarray], topology: Topology):
    """Fates for per-node sorted start arrays.

    Returns per-node boolean arrays ``(self_collided, inter_collided)`` and
    the observed non-overlap count matrix.
    """
    n = topology.node_count
    self_flags, inter_flags = [], []
    nonoverlap = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        own = starts[i]
        self_flags.append(_count_in_open_interval(own, own) > 1)
        hit = np.zeros(len(own), dtype=bool)
        for j in topology.receiver_audible[i]:
            if j != i and len(own):
                hit |= _count_in_open_interval(starts[j], own) > 0
        inter_flags.append(hit)
        for j in topology.neighbors(i):
            if len(starts[j]):
                nonoverlap[i, j] = int(np.count_nonzero(_count_in_open_interval(own, starts[j]) == 0))
    return self_flags, inter_flags, nonoverlap


def classify_transmissions(
    records: Sequence[TransmissionRecord], topology: Topology
) -> list[TransmissionRecord]:
    """Set collision flags on every record.

    Two transmissions collide when their open intervals intersect, so
    packets that merely touch at an endpoint are both fine.
    """
    n = topology.node_count
    per_node: list[list[int]] = [[] for _ in range(n)]
    for idx, rec in enumerate(records):
        per_node[rec.node].append(idx)
    starts = []
    orders = []
    for i in range(n):
        s = np.array([records[k].start for k in per_node[i]], dtype=float)
        order = np.argsort(s, kind="stable")
        starts.append(s[order])
        orders.append([per_node[i][k] for k in order])
    self_flags, inter_flags, _ = _classify_arrays(starts, topology)
    out = list(records)
    for i in range(n):
        for pos, idx in enumerate(orders[i]):
            out[idx] = dataclasses.replace(
                records[idx],
                self_collided=bool(self_flags[i][pos]),
                inter_collided=bool(inter_flags[i][pos]),
            )
    return out


def _draw_gated(rates, probs, window, rngs):
    for i in range(len(rates)):
        rng = _rng(rngs[i])
        times = generate_arrivals(rates[i], window, rng)
        gate = rng.random(len(times))
        yield times, gate < probs[i]


def _check_epoch_args(topology, rates, probs, duration, rngs):
    n = topology.node_count
    if not (len(rates) == len(probs) == len(rngs) == n):
        raise ConfigurationError("rates, probs and rngs need one entry per node")
    if not duration > 0:
        raise ConfigurationError(f"epoch duration must be positive, got {duration}")
    for i, p in enumerate(probs):
        if not 0.0 <= p <= 1.0:
            raise ConfigurationError(f"transmit probability of node {i} outside [0, 1]: {p}")


def epoch_trace(topology: Topology, rates, probs, duration: float, rngs, start: float = 0.0):
    """Arrival events and classified records of one epoch.

    Consumes the streams exactly as run_epoch does, so the same seeds
    describe the same epoch. Meant for inspection and tests.
    """
    _check_epoch_args(topology, rates, probs, duration, rngs)
    events: list[ArrivalEvent] = []
    records: list[TransmissionRecord] = []
    for i, (times, gated) in enumerate(_draw_gated(rates, probs, (start, start + duration), rngs)):
        events.extend(ArrivalEvent(i, float(t), bool(g)) for t, g in zip(times, gated))
        records.extend(TransmissionRecord(i, float(t)) for t in times[gated])
    events.sort(key=lambda e: (e.time, e.node))
    records.sort(key=lambda r: (r.start, r.node))
    return events, classify_transmissions(records, topology)


def run_epoch(
    topology: Topology,
    rates: Sequence[float],
    probs: Sequence[float],
    duration: float,
    rngs: Sequence,
    start: float = 0.0,
) -> EpochStats:
    """Simulate one epoch of pure ALOHA with per-arrival Bernoulli gating.

    Gated-in packets go on air at once, even on top of the node's own
    ongoing transmission. The epoch is an independent window: packets
    from neighbouring epochs do not interfere.
    """
    _check_epoch_args(topology, rates, probs, duration, rngs)
    n = topology.node_count
    window = (start, start + duration)
    arrivals = np.zeros(n, dtype=np.int64)
    starts = []
    for i, (times, gated) in enumerate(_draw_gated(rates, probs, window, rngs)):
        arrivals[i] = len(times)
        starts.append(times[gated])

    self_flags, inter_flags, nonoverlap = _classify_arrays(starts, topology)
    transmitted = np.array([len(s) for s in starts], dtype=np.int64)
    self_coll = np.array([f.sum() for f in self_flags], dtype=np.int64)
    inter_coll = np.array([f.sum() for f in inter_flags], dtype=np.int64)
    success = np.array(
        [np.count_nonzero(~(a | b)) for a, b in zip(self_flags, inter_flags)], dtype=np.int64
    )
    return EpochStats(
        duration=float(duration),
        arrivals=arrivals,
        transmitted=transmitted,
        self_coll=self_coll,
        inter_coll=inter_coll,
        success=success,
        discarded=arrivals - transmitted,
        observed_nonoverlap=nonoverlap,
    )


def collision_probabilities(stats: EpochStats, node: int) -> tuple[float, float]:
    """Self- and inter-collision ratios of ``node``; (0, 0) when it sent nothing."""
    sent = int(stats.transmitted[node])
    if sent == 0:
        return 0.0, 0.0
    return float(stats.self_coll[node]) / sent, float(stats.inter_coll[node]) / sent
