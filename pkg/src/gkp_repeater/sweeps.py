"""Parameter grids, result tables and their on-disk formats.

Tables are written as CSV with ``#``-prefixed metadata lines before the
header. Values are rendered with 17 significant digits so identical inputs
give byte-identical files; the wall-clock timestamp lives only in the JSON
sidecar.
"""

from __future__ import annotations

import datetime as _dt
import itertools
import json
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .protocols import RepeaterConfig, rate

THREADS_ENV = "GKPR_THREADS"
OUTPUT_FORMATS = ("csv", "json")


@dataclass(frozen=True)
class Axis:
    """A sweep axis: ``steps`` points from ``start`` to ``stop`` inclusive."""

    name: str
    start: float
    stop: float
    steps: int
    scale: str = "linear"

    def __post_init__(self):
        if self.scale not in ("linear", "log"):
            raise ValueError(f"axis scale must be 'linear' or 'log', got {self.scale!r}")
        if int(self.steps) != self.steps or self.steps < 2:
            raise ValueError(f"axis {self.name!r} needs at least 2 steps")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)) or self.stop <= self.start:
            raise ValueError(f"axis {self.name!r} needs finite start < stop")
        if self.scale == "log" and self.start <= 0:
            raise ValueError(f"log axis {self.name!r} needs a positive start")

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, int(self.steps))
        return np.linspace(self.start, self.stop, int(self.steps))

    @classmethod
    def parse(cls, text: str) -> Axis:
        """``name:start:stop:steps[:linear|log]``."""
        parts = text.split(":")
        if len(parts) not in (4, 5):
            raise ValueError(f"axis spec {text!r} is not name:start:stop:steps[:scale]")
        return cls(parts[0], float(parts[1]), float(parts[2]), int(parts[3]), *(parts[4:] or ["linear"]))

    def to_dict(self) -> dict:
        return {"name": self.name, "start": self.start, "stop": self.stop, "steps": self.steps, "scale": self.scale}


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to re-run a rate sweep."""

    config: RepeaterConfig = field(default_factory=RepeaterConfig)
    axes: tuple[Axis, ...] = ()
    output_format: str = "csv"
    output_path: str | None = None
    seed: int = 12345

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        if self.output_format not in OUTPUT_FORMATS:
            raise ValueError(f"output format must be one of {OUTPUT_FORMATS}")
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise ValueError("duplicate sweep axis")
        fields = set(RepeaterConfig.__dataclass_fields__)
        for name in names:
            if name not in fields:
                raise ValueError(f"cannot sweep unknown parameter {name!r}")

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "axes": [a.to_dict() for a in self.axes],
            "output_format": self.output_format,
            "output_path": self.output_path,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        unknown = set(data) - {"config", "axes", "output_format", "output_path", "seed"}
        if unknown:
            raise ValueError(f"unknown run-config keys: {sorted(unknown)}")
        return cls(
            config=RepeaterConfig.from_dict(data.get("config", {})),
            axes=tuple(Axis(**a) for a in data.get("axes", [])),
            output_format=data.get("output_format", "csv"),
            output_path=data.get("output_path"),
            seed=data.get("seed", 12345),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text: str) -> RunConfig:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class SweepTable:
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(f"row of length {len(row)} does not match {len(self.columns)} columns")

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows], dtype=float)

    def to_csv(self) -> str:
        lines = [f"# {key}: {_json_scalar(self.metadata[key])}" for key in sorted(self.metadata)]
        lines.append(",".join(self.columns))
        lines.extend(",".join(format_value(v) for v in row) for row in self.rows)
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        body = {"metadata": self.metadata, "columns": list(self.columns), "rows": [list(r) for r in self.rows]}
        return json.dumps(body, indent=2, sort_keys=True, default=_plain) + "\n"


def _plain(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialise {type(value).__name__}")


def _json_scalar(value) -> str:
    return json.dumps(value, sort_keys=True, default=_plain)


def format_value(value) -> str:
    """17 significant digits for reals, plain text for integers and strings."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if value is None:
        return ""
    return str(value)


def worker_count() -> int:
    """Worker-count hint from ``GKPR_THREADS``; never affects results."""
    raw = os.environ.get(THREADS_ENV, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def ordered_map(fn: Callable, items: Sequence, workers: int | None = None) -> list:
    """``[fn(x) for x in items]``, optionally spread over threads; order is preserved."""
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def grid(axes: Sequence[Axis]) -> list[tuple[float, ...]]:
    """Cartesian grid in lexicographic order of axis indices (last axis fastest)."""
    return [tuple(float(v) for v in point) for point in itertools.product(*(a.values() for a in axes))]


def run_sweep(run: RunConfig, workers: int | None = None) -> SweepTable:
    """Evaluate ``rate`` over the run's axes (a single point if there are none)."""
    names = [a.name for a in run.axes]
    points = grid(run.axes) if run.axes else [()]

    def evaluate(point):
        changes = dict(zip(names, point))
        if "dim" in changes:
            changes["dim"] = int(round(changes["dim"]))
        result = rate(run.config.with_(**changes))
        return point + (result.n_stations, result.skr_bits, result.skr_per_station, result.p0_station)

    rows = ordered_map(evaluate, points, workers)
    columns = tuple(names) + ("n_stations", "skr_bits", "skr_per_station", "p0_station")
    return SweepTable(columns, rows, {"run_config": run.to_dict(), "version": _version()})


def _version() -> str:
    from . import __version__

    return __version__


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write via a temp file in the target directory and rename into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_table(table: SweepTable, path: str | os.PathLike, fmt: str = "csv", sidecar: dict | None = None) -> list[Path]:
    """Write the table and, for CSV, a ``.json`` sidecar with parameters and timestamp."""
    path = Path(path)
    if fmt == "json":
        atomic_write(path, table.to_json())
        return [path]
    if fmt != "csv":
        raise ValueError(f"unknown output format {fmt!r}")
    atomic_write(path, table.to_csv())
    side = path.with_suffix(".json")
    payload = dict(sidecar or {})
    payload.update(table.metadata)
    payload["created"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    atomic_write(side, json.dumps(payload, indent=2, sort_keys=True, default=_plain) + "\n")
    return [path, side]
