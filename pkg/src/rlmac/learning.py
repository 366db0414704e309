"""Tabular Q-learning agents that pick per-epoch transmit probabilities."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .engine import EpochStats, Topology, collision_probabilities

SC_LEVELS = 6
IC_LEVELS = 4
FIXED_PROBABILITIES = (0.0, 0.25, 0.5, 0.75, 1.0)
INCREMENTAL_STEP = 0.1
PENALTY = 0.8


class CongestionState(NamedTuple):
    sc_level: int
    ic_level: int
    mode: str

    @property
    def index(self) -> int:
        if self.mode == "single":
            return self.sc_level
        return self.sc_level * IC_LEVELS + self.ic_level


def state_count(mode: str) -> int:
    return SC_LEVELS if mode == "single" else SC_LEVELS * IC_LEVELS


def _level(p: float, levels: int) -> int:
    return min(int(math.floor(p * levels)), levels - 1)


def discretize(p_sc: float, p_ic: float = 0.0, mode: str = "multi") -> CongestionState:
    if not (0.0 <= p_sc <= 1.0 and 0.0 <= p_ic <= 1.0):
        raise ValueError(f"collision probabilities must lie in [0, 1], got ({p_sc}, {p_ic})")
    if mode not in ("single", "multi"):
        raise ValueError(f"unknown state mode {mode!r}")
    ic = 0 if mode == "single" else _level(p_ic, IC_LEVELS)
    return CongestionState(_level(p_sc, SC_LEVELS), ic, mode)


def epsilon(epoch_id: int, eps0: float = 0.5, tau: float = 200.0) -> float:
    return eps0 * math.exp(-epoch_id / tau)


def select_action(qrow: Sequence[float], eps: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy with uniform tie-breaking among maximal entries."""
    qrow = np.asarray(qrow, dtype=float)
    if qrow.size == 0:
        raise ValueError("empty Q-row")
    if rng.random() < eps:
        return int(rng.integers(qrow.size))
    best = np.flatnonzero(qrow == qrow.max())
    if best.size == 1:
        return int(best[0])
    return int(best[rng.integers(best.size)])


def q_update(q: np.ndarray, s: int, a: int, r: float, s_next: int, alpha: float, gamma: float) -> np.ndarray:
    q[s, a] += alpha * (r + gamma * q[s_next].max() - q[s, a])
    return q


def hysteretic_update(
    q: np.ndarray, s: int, a: int, r: float, s_next: int, alpha: float, beta: float, gamma: float
) -> np.ndarray:
    """Q-update with a large rate for good news and a small one for bad news."""
    delta = r + gamma * q[s_next].max() - q[s, a]
    q[s, a] += (alpha if delta >= 0 else beta) * delta
    return q


@dataclass
class LearnerParams:
    alpha: float = 0.1
    beta: float = 0.01
    gamma: float = 0.95
    eps0: float = 0.5
    eps_tau: float = 200.0

    def __post_init__(self):
        if not 0 < self.beta < self.alpha <= 1:
            raise ValueError(f"need 0 < beta < alpha <= 1, got alpha={self.alpha}, beta={self.beta}")
        if not 0 <= self.gamma < 1:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        if not 0 <= self.eps0 <= 1 or self.eps_tau <= 0:
            raise ValueError("eps0 must lie in [0, 1] and eps_tau must be positive")


@dataclass
class RewardWeights:
    """Reward coefficients.

    In ``full`` mode ``rho`` and ``sigma`` are scalars shared by all agents.
    In ``partial`` mode they may be per-node sequences.
    """

    rho: float | Sequence[float] = 1.0
    sigma: float | Sequence[float] = 0.0
    mu: Sequence[float] = ()
    penalty: float = PENALTY
    mode: str = "full"

    def rho_for(self, i: int) -> float:
        return _pick(self.rho, i)

    def sigma_for(self, i: int) -> float:
        return _pick(self.sigma, i)

    def mu_for(self, i: int) -> float:
        return float(self.mu[i]) if i < len(self.mu) else 0.0


def _pick(value, i: int) -> float:
    if isinstance(value, (int, float)):
        return float(value)
    return float(value[i])


def fairness(own: float, others: Sequence[float]) -> float:
    return -float(sum(abs(own - x) for x in others))


def reward_full(stats: EpochStats, weights: RewardWeights, i: int) -> float:
    s = stats.throughput
    total = float(s.sum())
    if total == 0:
        return -weights.penalty
    priority = sum(weights.mu_for(j) * float(s[j]) for j in range(len(s)))
    f_i = fairness(float(s[i]), [float(s[j]) for j in range(len(s)) if j != i])
    return weights.rho_for(i) * total + priority + weights.sigma_for(i) * f_i


def reward_partial(stats: EpochStats, weights: RewardWeights, i: int, topology: Topology) -> float:
    """Neighbourhood reward built only from what node i can overhear."""
    s_i = float(stats.throughput[i])
    if s_i == 0:
        return -weights.penalty
    heard = [stats.observed_throughput(i, j) for j in topology.neighbors(i)]
    return weights.rho_for(i) * (sum(heard) + s_i) + weights.sigma_for(i) * fairness(s_i, heard)


def hyperparams_for_n(n: int) -> tuple[float, float]:
    """Empirical (rho, sigma) for an n-node fully connected network."""
    if n < 2:
        raise ValueError(f"need at least 2 nodes, got {n}")
    rho = 0.33 - 0.05 * n
    if rho <= 0:
        warnings.warn(
            f"rho = {rho:.2f} for N = {n}; learning is not expected to converge at this size",
            RuntimeWarning,
            stacklevel=2,
        )
    return rho, 1.0 / (n - 1)


@dataclass
class ActionStrategy:
    kind: str = "fixed"
    current_p: float = 1.0
    step: float = INCREMENTAL_STEP
    fixed_set: tuple[float, ...] = FIXED_PROBABILITIES

    def __post_init__(self):
        if self.kind not in ("fixed", "incremental"):
            raise ValueError(f"unknown action strategy {self.kind!r}")
        if not 0.0 <= self.current_p <= 1.0:
            raise ValueError(f"initial transmit probability outside [0, 1]: {self.current_p}")

    @property
    def action_count(self) -> int:
        return len(self.fixed_set) if self.kind == "fixed" else 3

    @property
    def deltas(self) -> tuple[float, float, float]:
        return (-self.step, 0.0, self.step)


def apply_action(strategy: ActionStrategy, index: int) -> float:
    if not 0 <= index < strategy.action_count:
        raise IndexError(f"action {index} out of range for {strategy.kind} strategy")
    if strategy.kind == "fixed":
        p = strategy.fixed_set[index]
    else:
        # rounding keeps repeated +/- steps on the 0.1 grid
        p = round(strategy.current_p + strategy.deltas[index], 10)
        p = min(1.0, max(0.0, p))
    strategy.current_p = p
    return p


@dataclass
class Agent:
    """One node's learner.

    ``kind`` is ``q_single`` (self-collision state, classical update) or
    ``hql_full`` / ``hql_partial`` (two-dimensional state, hysteretic update).
    """

    node: int
    kind: str
    strategy: ActionStrategy
    params: LearnerParams
    weights: RewardWeights
    rng: np.random.Generator
    q: np.ndarray = field(init=False)
    prev_state: int | None = None
    prev_action: int | None = None
    last_reward: float = float("nan")

    def __post_init__(self):
        if self.kind not in ("q_single", "hql_full", "hql_partial"):
            raise ValueError(f"unknown agent kind {self.kind!r}")
        self.q = np.zeros((state_count(self.mode), self.strategy.action_count))

    @property
    def mode(self) -> str:
        return "single" if self.kind == "q_single" else "multi"

    @property
    def p(self) -> float:
        return self.strategy.current_p

    def reward(self, stats: EpochStats, topology: Topology | None = None) -> float:
        if self.kind == "hql_partial":
            return reward_partial(stats, self.weights, self.node, topology)
        return reward_full(stats, self.weights, self.node)

    def step(self, stats: EpochStats, epoch_id: int, topology: Topology | None = None) -> float:
        return agent_step(self, stats, epoch_id, topology)


def agent_step(agent: Agent, stats: EpochStats, epoch_id: int, topology: Topology | None = None) -> float:
    """Learn from one finished epoch and return the next transmit probability."""
    p_sc, p_ic = collision_probabilities(stats, agent.node)
    state = discretize(p_sc, p_ic, agent.mode).index
    r = agent.reward(stats, topology)
    agent.last_reward = r
    prm = agent.params
    if agent.prev_state is not None:
        if agent.kind == "q_single":
            q_update(agent.q, agent.prev_state, agent.prev_action, r, state, prm.alpha, prm.gamma)
        else:
            hysteretic_update(
                agent.q, agent.prev_state, agent.prev_action, r, state, prm.alpha, prm.beta, prm.gamma
            )
    action = select_action(agent.q[state], epsilon(epoch_id, prm.eps0, prm.eps_tau), agent.rng)
    agent.prev_state, agent.prev_action = state, action
    return apply_action(agent.strategy, action)
