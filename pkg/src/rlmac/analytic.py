"""Closed-form single-node throughput and optimum search."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar


def single_node_throughput(g: float) -> float:
    """Throughput of one node under self-collisions only, in Erlang."""
    if g < 0:
        raise ValueError(f"load must be non-negative, got {g}")
    return g * (math.exp(-2 * g) + math.exp(-g / 2) - math.exp(-1.5 * g))


@dataclass
class ThroughputCurve:
    loads: np.ndarray
    throughputs: np.ndarray
    source: str = "closed_form"

    def __post_init__(self):
        self.loads = np.asarray(self.loads, dtype=float)
        self.throughputs = np.asarray(self.throughputs, dtype=float)
        if self.loads.shape != self.throughputs.shape or self.loads.ndim != 1:
            raise ValueError("loads and throughputs must be 1-D arrays of equal length")
        if np.any(np.diff(self.loads) <= 0):
            raise ValueError("loads must be strictly increasing")

    @classmethod
    def closed_form(cls, loads: Sequence[float]) -> "ThroughputCurve":
        return cls(np.asarray(loads, float), np.array([single_node_throughput(g) for g in loads]))

    def write_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["g", "s", "source"])
            for g, s in zip(self.loads, self.throughputs):
                w.writerow([f"{g:.6g}", f"{s:.6g}", self.source])


@dataclass(frozen=True)
class Optimum:
    load: float
    throughput: float
    unimodal: bool = True


def _is_unimodal(values: np.ndarray) -> bool:
    d = np.sign(np.diff(values))
    d = d[d != 0]
    changes = np.count_nonzero(np.diff(d))
    return bool(changes == 0 or (changes == 1 and d[0] > 0))


def optimal_load(
    source: ThroughputCurve | Callable[[float], float] = single_node_throughput,
    interval: tuple[float, float] = (0.0, 6.0),
    xtol: float = 1e-4,
) -> Optimum:
    """Load maximizing throughput.

    Functions are searched with bounded Brent iteration. Sampled curves
    return their grid argmax; ``unimodal`` is False when the samples rise
    and fall more than once.
    """
    if isinstance(source, ThroughputCurve):
        lo, hi = interval
        mask = (source.loads >= lo) & (source.loads <= hi)
        loads, values = source.loads[mask], source.throughputs[mask]
        if loads.size == 0:
            raise ValueError(f"no samples inside {interval}")
        k = int(np.argmax(values))
        return Optimum(float(loads[k]), float(values[k]), _is_unimodal(values))
    res = minimize_scalar(lambda g: -source(g), bounds=interval, method="bounded", options={"xatol": xtol})
    return Optimum(float(res.x), float(-res.fun))
