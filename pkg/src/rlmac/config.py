"""Scenario configuration: JSON schema, defaults and validation.

Schema (node ids are 1-based in config files and CSV columns)::

    {
      "topology": {"kind": "full", "nodes": 2}
                | {"kind": "explicit", "nodes": 3, "edges": [[1, 2], [2, 3]]},
      "loads": [2.0, [[0, 2.4], [1000, 4.8]]],   # per node: constant or [[epoch, g], ...]
      "policy": "hql_full",                      # or one of aloha|q_single|hql_full|hql_partial per node
      "strategy": "fixed",                       # fixed | incremental
      "weights": "auto_n" | {"rho": 1.0, "sigma": 0.0, "mu": [0, 0], "penalty": 0.8},
      "params": {"alpha": 0.1, "beta": 0.01, "gamma": 0.95, "eps0": 0.5, "eps_tau": 200,
                 "initial_p": 1.0, "step": 0.1},
      "epochs": 2000,
      "epoch_duration": 1000,
      "seed": 0,
      "replicates": 5
    }

A single load (number or schedule) given instead of a per-node list
applies to every node.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Any

from .engine import Topology
from .learning import LearnerParams, RewardWeights, hyperparams_for_n

POLICIES = ("aloha", "q_single", "hql_full", "hql_partial")
TOP_KEYS = {
    "topology", "loads", "policy", "strategy", "weights", "params",
    "epochs", "epoch_duration", "seed", "replicates",
}
PARAM_KEYS = {"alpha", "beta", "gamma", "eps0", "eps_tau", "initial_p", "step"}
WEIGHT_KEYS = {"rho", "sigma", "mu", "penalty"}
SEED_MAX = 2**64 - 1


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class ScenarioConfig:
    topology: Topology
    schedules: list[list[tuple[int, float]]]
    policies: list[str]
    strategy: str = "fixed"
    weights: RewardWeights = field(default_factory=RewardWeights)
    params: LearnerParams = field(default_factory=LearnerParams)
    epochs: int = 2000
    epoch_duration: float = 1000.0
    seed: int = 0
    replicates: int = 1
    initial_p: float = 1.0
    step: float = 0.1
    auto_weights: bool = False

    @property
    def node_count(self) -> int:
        return self.topology.node_count

    def load_at(self, node: int, epoch: int) -> float:
        g = self.schedules[node][0][1]
        for start, value in self.schedules[node]:
            if start <= epoch:
                g = value
            else:
                break
        return g

    def loads_at(self, epoch: int) -> list[float]:
        return [self.load_at(i, epoch) for i in range(self.node_count)]

    def change_points(self) -> list[int]:
        return sorted({start for sched in self.schedules for start, _ in sched if start > 0})

    def with_loads(self, loads) -> "ScenarioConfig":
        """Copy with constant per-node loads."""
        return dataclasses.replace(self, schedules=[[(0, float(g))] for g in loads])

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _parse_schedule(raw, node_label: str, errors: list[str]) -> list[tuple[int, float]]:
    if _is_number(raw):
        raw = [[0, raw]]
    if not isinstance(raw, list) or not raw:
        errors.append(f"loads for {node_label}: expected a number or a non-empty list of [epoch, g]")
        return [(0, 0.0)]
    sched = []
    for item in raw:
        if not (isinstance(item, list) and len(item) == 2 and isinstance(item[0], int)
                and not isinstance(item[0], bool) and _is_number(item[1])):
            errors.append(f"loads for {node_label}: malformed schedule entry {item!r}")
            continue
        start, g = item
        if g < 0:
            errors.append(f"negative load {g} for {node_label} at epoch {start}")
        if start < 0:
            errors.append(f"negative schedule epoch {start} for {node_label}")
        sched.append((start, float(g)))
    sched.sort()
    if sched and sched[0][0] != 0:
        errors.append(f"load schedule for {node_label} does not cover epoch 0")
    starts = [s for s, _ in sched]
    if len(set(starts)) != len(starts):
        errors.append(f"duplicate schedule epochs for {node_label}")
    return sched or [(0, 0.0)]


def _parse_topology(raw, errors: list[str]) -> Topology | None:
    if not isinstance(raw, dict):
        errors.append("topology: expected an object")
        return None
    unknown = set(raw) - {"kind", "nodes", "edges"}
    if unknown:
        errors.append(f"topology: unknown keys {sorted(unknown)}")
    n = raw.get("nodes")
    if not (isinstance(n, int) and not isinstance(n, bool) and n >= 1):
        errors.append("topology.nodes: expected a positive integer")
        return None
    kind = raw.get("kind", "full")
    if kind == "full":
        if "edges" in raw:
            errors.append("topology: 'edges' only allowed with kind 'explicit'")
        return Topology.fully_connected(n)
    if kind == "explicit":
        edges = raw.get("edges")
        if not isinstance(edges, list):
            errors.append("topology.edges: required list of [a, b] pairs for kind 'explicit'")
            return None
        pairs = []
        for e in edges:
            if not (isinstance(e, list) and len(e) == 2 and all(isinstance(v, int) for v in e)):
                errors.append(f"topology.edges: malformed edge {e!r}")
                continue
            a, b = e[0] - 1, e[1] - 1
            if not (0 <= a < n and 0 <= b < n) or a == b:
                errors.append(f"topology.edges: invalid edge {e!r} for {n} nodes")
                continue
            pairs.append((a, b))
        return Topology.from_edges(n, pairs)
    errors.append(f"topology.kind: expected 'full' or 'explicit', got {kind!r}")
    return None


def _parse_weights(raw, n: int, policies: list[str], topology: Topology | None, errors: list[str]):
    partial = "hql_partial" in policies
    mode = "partial" if partial else "full"
    if raw is None:
        raw = "auto_n" if n >= 2 else {}
    if raw == "auto_n":
        if partial and topology is not None:
            # each node treats its 1-hop neighbourhood as a complete network
            rho, sigma = [], []
            for i in range(n):
                deg = len(topology.neighbors(i))
                if deg == 0:
                    rho.append(1.0)
                    sigma.append(0.0)
                else:
                    r, s = hyperparams_for_n(deg + 1)
                    rho.append(r)
                    sigma.append(s)
            return RewardWeights(rho=rho, sigma=sigma, mu=[0.0] * n, mode=mode), True
        if n < 2:
            errors.append("weights: 'auto_n' needs at least 2 nodes")
            return RewardWeights(mode=mode), False
        rho, sigma = hyperparams_for_n(n)
        return RewardWeights(rho=rho, sigma=sigma, mu=[0.0] * n, mode=mode), True
    if not isinstance(raw, dict):
        errors.append("weights: expected 'auto_n' or an object")
        return RewardWeights(mode=mode), False
    unknown = set(raw) - WEIGHT_KEYS
    if unknown:
        errors.append(f"weights: unknown keys {sorted(unknown)}")
    out = {}
    for key, default in (("rho", 1.0), ("sigma", 0.0)):
        v = raw.get(key, default)
        if _is_number(v):
            out[key] = float(v)
        elif isinstance(v, list) and len(v) == n and all(_is_number(x) for x in v):
            if not partial:
                errors.append(f"weights.{key}: per-node values require the hql_partial policy")
            out[key] = [float(x) for x in v]
        else:
            errors.append(f"weights.{key}: expected a number or {n} numbers")
            out[key] = default
    mu = raw.get("mu", [0.0] * n)
    if not (isinstance(mu, list) and len(mu) == n and all(_is_number(x) for x in mu)):
        errors.append(f"weights.mu: expected {n} numbers")
        mu = [0.0] * n
    penalty = raw.get("penalty", 0.8)
    if not _is_number(penalty) or penalty < 0:
        errors.append("weights.penalty: expected a non-negative number")
        penalty = 0.8
    return RewardWeights(rho=out["rho"], sigma=out["sigma"], mu=[float(x) for x in mu],
                         penalty=float(penalty), mode=mode), False


def _int_field(data, key, default, errors, minimum=1, maximum=None):
    v = data.get(key, default)
    if not (isinstance(v, int) and not isinstance(v, bool)) or v < minimum or (maximum is not None and v > maximum):
        bound = f" in [{minimum}, {maximum}]" if maximum is not None else f" >= {minimum}"
        errors.append(f"{key}: expected an integer{bound}, got {v!r}")
        return default
    return v


def validate(data: Any) -> ScenarioConfig:
    """Build a ScenarioConfig from decoded JSON, collecting every violation."""
    errors: list[str] = []
    if not isinstance(data, dict):
        raise ConfigError(["config: expected a JSON object"])
    unknown = set(data) - TOP_KEYS
    if unknown:
        errors.append(f"unknown keys {sorted(unknown)}")
    if "topology" not in data:
        errors.append("topology: required")
    if "loads" not in data:
        errors.append("loads: required")
    topology = _parse_topology(data.get("topology"), errors) if "topology" in data else None
    n = topology.node_count if topology is not None else 1

    raw_loads = data.get("loads", [0.0])
    if _is_number(raw_loads) or (isinstance(raw_loads, list) and raw_loads and isinstance(raw_loads[0], list)
                                 and raw_loads[0] and _is_number(raw_loads[0][0])):
        raw_loads = [raw_loads] * n
    if not isinstance(raw_loads, list) or len(raw_loads) != n:
        errors.append(f"loads: expected {n} per-node entries")
        raw_loads = [0.0] * n
    schedules = [_parse_schedule(raw, f"node {i + 1}", errors) for i, raw in enumerate(raw_loads)]

    raw_policy = data.get("policy", "aloha")
    policies = [raw_policy] * n if isinstance(raw_policy, str) else raw_policy
    if not isinstance(policies, list) or len(policies) != n:
        errors.append(f"policy: expected a name or {n} names")
        policies = ["aloha"] * n
    for i, pol in enumerate(policies):
        if pol not in POLICIES:
            errors.append(f"policy for node {i + 1}: unknown {pol!r} (expected one of {', '.join(POLICIES)})")
    if "hql_partial" in policies and topology is not None and topology.kind != "explicit":
        errors.append("policy hql_partial requires an explicit adjacency topology")
    if "q_single" in policies and n != 1:
        errors.append("policy q_single is a single-node policy; use hql_full for multi-node networks")

    strategy = data.get("strategy", "fixed")
    if strategy not in ("fixed", "incremental"):
        errors.append(f"strategy: expected 'fixed' or 'incremental', got {strategy!r}")
        strategy = "fixed"

    weights, auto = _parse_weights(data.get("weights"), n, policies, topology, errors)

    raw_params = data.get("params", {})
    if not isinstance(raw_params, dict):
        errors.append("params: expected an object")
        raw_params = {}
    unknown = set(raw_params) - PARAM_KEYS
    if unknown:
        errors.append(f"params: unknown keys {sorted(unknown)}")
    for k, v in raw_params.items():
        if k in PARAM_KEYS and not _is_number(v):
            errors.append(f"params.{k}: expected a number")
    learner = {k: float(v) for k, v in raw_params.items() if k in PARAM_KEYS - {"initial_p", "step"} and _is_number(v)}
    try:
        params = LearnerParams(**learner)
    except ValueError as exc:
        errors.append(f"params: {exc}")
        params = LearnerParams()
    initial_p = raw_params.get("initial_p", 1.0)
    if _is_number(initial_p) and not 0 <= initial_p <= 1:
        errors.append("params.initial_p: must lie in [0, 1]")
    step = raw_params.get("step", 0.1)
    if _is_number(step) and not 0 < step <= 1:
        errors.append("params.step: must lie in (0, 1]")

    epochs = _int_field(data, "epochs", 2000, errors)
    replicates = _int_field(data, "replicates", 1, errors)
    seed = _int_field(data, "seed", 0, errors, minimum=0, maximum=SEED_MAX)
    duration = data.get("epoch_duration", 1000)
    if not _is_number(duration) or duration <= 0:
        errors.append(f"epoch_duration: expected a positive number, got {duration!r}")
        duration = 1000

    if errors:
        raise ConfigError(errors)
    return ScenarioConfig(
        topology=topology,
        schedules=schedules,
        policies=list(policies),
        strategy=strategy,
        weights=weights,
        params=params,
        epochs=epochs,
        epoch_duration=float(duration),
        seed=seed,
        replicates=replicates,
        initial_p=float(initial_p) if _is_number(initial_p) else 1.0,
        step=float(step) if _is_number(step) else 0.1,
        auto_weights=auto,
    )


def parse_config(text: str) -> ScenarioConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"invalid JSON: {exc}"]) from exc
    return validate(data)


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        return parse_config(fh.read())
