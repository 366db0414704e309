"""Scenario driver, convergence detection and load sweeps."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .config import ScenarioConfig
from .engine import collision_probabilities, run_epoch
from .learning import ActionStrategy, Agent, reward_full, reward_partial

log = logging.getLogger(__name__)

FINAL_WINDOW = 100


@dataclass
class EpochRecord:
    epoch: int
    p: tuple[float, ...]
    g: tuple[float, ...]
    gstar: tuple[float, ...]
    s: tuple[float, ...]
    psc: tuple[float, ...]
    pic: tuple[float, ...]
    reward: tuple[float, ...]

    @property
    def S(self) -> float:
        return float(sum(self.s))

    @property
    def spread(self) -> float:
        return float(max(self.s) - min(self.s))


def streams(seed: int, replicate: int, n: int) -> tuple[list[np.random.Generator], list[np.random.Generator]]:
    """Independent PCG64 streams: one channel stream and one agent stream per node."""
    children = np.random.SeedSequence(entropy=seed, spawn_key=(replicate,)).spawn(2 * n)
    gens = [np.random.Generator(np.random.PCG64(c)) for c in children]
    return gens[:n], gens[n:]


def build_agents(config: ScenarioConfig, agent_rngs) -> list[Agent | None]:
    agents: list[Agent | None] = []
    for i, policy in enumerate(config.policies):
        if policy == "aloha":
            agents.append(None)
            continue
        strategy = ActionStrategy(kind=config.strategy, current_p=config.initial_p, step=config.step)
        agents.append(Agent(i, policy, strategy, config.params, config.weights, agent_rngs[i]))
    return agents


def run_scenario(config: ScenarioConfig, replicate: int = 0, agents_out: list | None = None) -> Iterator[EpochRecord]:
    """Yield one record per epoch.

    Agents see the stats of the epoch just finished and choose the
    transmit probability for the next one. ALOHA nodes stay at p = 1.
    Pass a list as ``agents_out`` to receive the agent objects.
    """
    topo = config.topology
    n = topo.node_count
    chan_rngs, agent_rngs = streams(config.seed, replicate, n)
    agents = build_agents(config, agent_rngs)
    if agents_out is not None:
        agents_out.extend(agents)
    probs = [1.0 if a is None else a.p for a in agents]
    for epoch in range(config.epochs):
        loads = config.loads_at(epoch)
        stats = run_epoch(topo, loads, probs, config.epoch_duration, chan_rngs,
                          start=epoch * config.epoch_duration)
        used = list(probs)
        rewards = []
        for i, agent in enumerate(agents):
            if agent is None:
                if config.policies[i] == "aloha" and config.weights.mode == "partial":
                    rewards.append(reward_partial(stats, config.weights, i, topo))
                else:
                    rewards.append(reward_full(stats, config.weights, i))
            else:
                probs[i] = agent.step(stats, epoch, topo)
                rewards.append(agent.last_reward)
        coll = [collision_probabilities(stats, i) for i in range(n)]
        yield EpochRecord(
            epoch=epoch,
            p=tuple(used),
            g=tuple(loads),
            gstar=tuple(stats.effective_load.tolist()),
            s=tuple(stats.throughput.tolist()),
            psc=tuple(c[0] for c in coll),
            pic=tuple(c[1] for c in coll),
            reward=tuple(rewards),
        )


def detect_convergence(series: Sequence[float], window: int = 50, tol: float = 0.05) -> int | None:
    """First epoch e where S over [e, e + window) has std below tol times its mean.

    Returns None if no such window exists.
    """
    x = np.asarray(series, dtype=float)
    if window < 1:
        raise ValueError("window must be positive")
    if x.size < window:
        raise ValueError(f"series of length {x.size} is shorter than the window {window}")
    views = np.lib.stride_tricks.sliding_window_view(x, window)
    mean = views.mean(axis=1)
    std = views.std(axis=1)
    ok = np.flatnonzero((std < tol * mean) | (std == 0))
    return int(ok[0]) if ok.size else None


@dataclass
class RunSummary:
    """Outcome of one replicate."""

    loads: tuple[float, ...]
    replicate: int
    s: tuple[float, ...]
    S: float
    p: tuple[float, ...]
    convergence_epoch: int | None
    series: np.ndarray = field(repr=False)


def summarize(records: list[EpochRecord], loads, replicate: int, window: int = 50, tol: float = 0.05) -> RunSummary:
    tail = records[-FINAL_WINDOW:]
    s = np.mean([r.s for r in tail], axis=0)
    series = np.array([r.S for r in records])
    return RunSummary(
        loads=tuple(loads),
        replicate=replicate,
        s=tuple(s.tolist()),
        S=float(s.sum()),
        p=tuple(records[-1].p),
        convergence_epoch=detect_convergence(series, window, tol) if len(series) >= window else None,
        series=series,
    )


def run_replicate(config: ScenarioConfig, replicate: int) -> RunSummary:
    records = list(run_scenario(config, replicate))
    return summarize(records, config.loads_at(config.epochs - 1), replicate)


def run_replicates(config: ScenarioConfig, replicates: int | None = None, jobs: int = 1) -> list[RunSummary]:
    reps = range(config.replicates if replicates is None else replicates)
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            return list(pool.map(run_replicate, [config] * len(reps), reps))
    return [run_replicate(config, r) for r in reps]


@dataclass
class SweepRow:
    loads: tuple[float, ...]
    s: tuple[float, ...]
    S: float
    convergence_epoch: float | None
    converged: int
    replicates: int

    @property
    def flagged(self) -> bool:
        """True when fewer than half of the replicates converged."""
        return 2 * self.converged < self.replicates


@dataclass
class SweepResult:
    rows: list[SweepRow]

    def column(self, name: str, node: int | None = None) -> np.ndarray:
        if node is None:
            return np.array([getattr(r, name) for r in self.rows], dtype=float)
        return np.array([getattr(r, name)[node] for r in self.rows], dtype=float)


def aggregate(loads, runs: list[RunSummary]) -> SweepRow:
    s = np.median([r.s for r in runs], axis=0)
    epochs = [r.convergence_epoch for r in runs if r.convergence_epoch is not None]
    return SweepRow(
        loads=tuple(float(g) for g in loads),
        s=tuple(s.tolist()),
        S=float(np.median([r.S for r in runs])),
        convergence_epoch=float(np.median(epochs)) if epochs else None,
        converged=len(epochs),
        replicates=len(runs),
    )


def load_sweep(base: ScenarioConfig, grid: Sequence[Sequence[float]], replicates: int | None = None,
               jobs: int = 1) -> SweepResult:
    """Run every grid point for each replicate seed; report medians over replicates."""
    if not len(grid):
        raise ValueError("empty load grid")
    reps = base.replicates if replicates is None else replicates
    tasks = []
    for loads in grid:
        if len(loads) != base.node_count:
            raise ValueError(f"grid point {loads} does not match {base.node_count} nodes")
        cfg = base.with_loads(loads)
        tasks.extend((cfg, r) for r in range(reps))
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            runs = list(pool.map(run_replicate, *zip(*tasks)))
    else:
        runs = [run_replicate(c, r) for c, r in tasks]
    rows = []
    for k, loads in enumerate(grid):
        rows.append(aggregate(loads, runs[k * reps:(k + 1) * reps]))
        log.info("grid point %s: S=%.4f", loads, rows[-1].S)
    return SweepResult(rows)


def aloha_config(base: ScenarioConfig, epochs: int | None = None) -> ScenarioConfig:
    return base.replace(policies=["aloha"] * base.node_count,
                        epochs=base.epochs if epochs is None else epochs)


def baseline_sweep(base: ScenarioConfig, grid, replicates: int | None = None, epochs: int | None = None,
                   jobs: int = 1) -> SweepResult:
    """Pure-ALOHA sweep (learning disabled, p = 1) used to locate the optimal load."""
    return load_sweep(aloha_config(base, epochs), grid, replicates, jobs)


def homogeneous_grid(loads: Sequence[float], n: int) -> list[tuple[float, ...]]:
    return [tuple([float(g)] * n) for g in loads]


@dataclass(frozen=True)
class EqualShareBenchmark:
    loads: tuple[float, ...]
    s: tuple[float, ...]
    S: float


def equal_share_benchmark(base: ScenarioConfig, grid: Sequence[Sequence[float]], replicates: int | None = None,
                          epochs: int | None = None) -> EqualShareBenchmark:
    """Best pure-ALOHA operating point under an equal-throughput constraint.

    The constrained network throughput of a grid point is N times its
    smallest per-node throughput; the benchmark is the grid point that
    maximizes it.
    """
    sweep = baseline_sweep(base, grid, replicates, epochs)
    n = base.node_count
    fair = [n * min(r.s) for r in sweep.rows]
    best = sweep.rows[int(np.argmax(fair))]
    return EqualShareBenchmark(best.loads, best.s, float(max(fair)))


def adaptation_epochs(series: Sequence[float], change_points: Sequence[int], target: float, tol: float,
                      window: int = 50) -> list[int | None]:
    """Epochs after each load change until the rolling mean of S is back within tol of target."""
    x = np.asarray(series, dtype=float)
    out = []
    bounds = list(change_points) + [x.size]
    for cp, nxt in zip(change_points, bounds[1:]):
        seg = x[cp:nxt]
        if seg.size < window:
            out.append(None)
            continue
        means = np.lib.stride_tricks.sliding_window_view(seg, window).mean(axis=1)
        hit = np.flatnonzero(np.abs(means - target) <= tol)
        out.append(int(hit[0]) + window if hit.size else None)
    return out
