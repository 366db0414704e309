"""CSV writers. Floats are written with 6 significant digits."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable

from .runner import EpochRecord, SweepResult

PER_NODE = ("p", "g", "gstar", "s", "psc", "pic", "r")
_FIELD = {"r": "reward"}


class OutputError(OSError):
    pass


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    return f"{float(x):.6g}"


def epoch_header(n: int) -> list[str]:
    cols = ["epoch"]
    for name in PER_NODE:
        cols.extend(f"{name}_{i + 1}" for i in range(n))
    return cols + ["S", "spread"]


def epoch_row(rec: EpochRecord) -> list[str]:
    row = [str(rec.epoch)]
    for name in PER_NODE:
        row.extend(fmt(v) for v in getattr(rec, _FIELD.get(name, name)))
    return row + [fmt(rec.S), fmt(rec.spread)]


def sweep_header(n: int) -> list[str]:
    return ([f"g_{i + 1}" for i in range(n)] + [f"s_{i + 1}" for i in range(n)]
            + ["S", "convergence_epoch", "converged", "replicates", "no_convergence"])


def sweep_row(row) -> list[str]:
    return ([fmt(g) for g in row.loads] + [fmt(s) for s in row.s]
            + [fmt(row.S), fmt(row.convergence_epoch), str(row.converged), str(row.replicates),
               str(int(row.flagged))])


def _open(path):
    try:
        return open(Path(path), "w", newline="")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit_epochs(records: Iterable[EpochRecord], path, n: int) -> int:
    """Stream epoch records to ``path``; returns the number of rows written."""
    count = 0
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(epoch_header(n))
        for rec in records:
            w.writerow(epoch_row(rec))
            count += 1
    return count


def emit_sweep(sweep: SweepResult, path, n: int) -> None:
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(sweep_header(n))
        for row in sweep.rows:
            w.writerow(sweep_row(row))


def emit_csv(data, path, n: int) -> None:
    """Write either an epoch-record stream or a SweepResult."""
    if isinstance(data, SweepResult):
        emit_sweep(data, path, n)
    else:
        emit_epochs(data, path, n)


def emit_qtables(agents, path) -> None:
    """Final Q-tables in long format, for inspection only."""
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", "state", "action", "q"])
        for agent in agents:
            if agent is None:
                continue
            for s in range(agent.q.shape[0]):
                for a in range(agent.q.shape[1]):
                    w.writerow([agent.node + 1, s, a, fmt(agent.q[s, a])])
