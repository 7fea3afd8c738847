"""Discrete pair data and its descriptive statistics."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

SIGNS = (1, -1)
CELLS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ConditionLabel:
    """Setting pair for one condition.

    ``kind`` is ``"photon2d"`` (settings are angles in radians) or
    ``"spin3d"`` (settings are unit 3-vectors).
    """

    s: int
    setting1: object
    setting2: object
    kind: str = "photon2d"

    def __post_init__(self):
        if self.s not in (1, 2, 3, 4):
            raise ValueError("condition index must be 1..4")
        if self.kind == "photon2d":
            for v in (self.setting1, self.setting2):
                if not 0.0 <= float(v) < 2 * math.pi:
                    raise ValueError(f"angle {v} outside [0, 2pi)")
        elif self.kind == "spin3d":
            for v in (self.setting1, self.setting2):
                vec = np.asarray(v, dtype=float)
                if vec.shape != (3,) or abs(np.linalg.norm(vec) - 1.0) > 1e-12:
                    raise ValueError(f"setting {v} is not a 3D unit vector")
        else:
            raise ValueError(f"unknown condition kind {self.kind!r}")

    @classmethod
    def planar(cls, s: int, angle1: float, angle2: float) -> "ConditionLabel":
        """Photon condition; angles are reduced into [0, 2pi)."""
        return cls(s, float(angle1) % (2 * math.pi), float(angle2) % (2 * math.pi), "photon2d")

    @classmethod
    def spin(cls, s: int, v1, v2) -> "ConditionLabel":
        return cls(s, tuple(float(x) for x in v1), tuple(float(x) for x in v2), "spin3d")

    def vectors(self) -> tuple[np.ndarray, np.ndarray]:
        """Settings as 3D unit vectors (planar angles lie in the xy plane)."""
        if self.kind == "spin3d":
            return np.asarray(self.setting1, float), np.asarray(self.setting2, float)
        a, c = float(self.setting1), float(self.setting2)
        return np.array([math.cos(a), math.sin(a), 0.0]), np.array([math.cos(c), math.sin(c), 0.0])

    def to_json(self) -> dict:
        def enc(v):
            return list(v) if self.kind == "spin3d" else [float(v)]

        return {"s": self.s, "kind": self.kind, "setting1": enc(self.setting1), "setting2": enc(self.setting2)}

    @classmethod
    def from_json(cls, obj: dict) -> "ConditionLabel":
        if obj["kind"] == "spin3d":
            return cls.spin(obj["s"], obj["setting1"], obj["setting2"])
        return cls(obj["s"], float(obj["setting1"][0]), float(obj["setting2"][0]), "photon2d")


@dataclass(frozen=True)
class PairDataSet:
    """Ordered +-1 outcome pairs recorded under one condition."""

    condition: ConditionLabel
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = _frozen(self.a, np.int8)
        b = _frozen(self.b, np.int8)
        if a.shape != b.shape:
            raise ValueError("outcome arrays differ in length")
        if not (np.all(np.abs(a) == 1) and np.all(np.abs(b) == 1)):
            raise ValueError("outcomes must be +1 or -1")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_pairs(cls, condition: ConditionLabel, pairs: Sequence[tuple[int, int]]) -> "PairDataSet":
        arr = np.array(pairs, dtype=np.int8).reshape(-1, 2)
        return cls(condition, arr[:, 0], arr[:, 1])

    def __len__(self) -> int:
        return int(self.a.size)

    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.a.tolist(), self.b.tolist()))

    def head(self, n: int) -> "PairDataSet":
        return PairDataSet(self.condition, self.a[:n], self.b[:n])


@dataclass(frozen=True)
class FrequencyTable:
    """Integer cell counts; frequencies are exact fractions over ``n``."""

    counts: dict
    n: int

    def f(self, x: int, y: int) -> Fraction:
        return Fraction(self.counts[(x, y)], self.n)

    def as_float(self) -> dict:
        return {cell: self.counts[cell] / self.n for cell in CELLS}

    def correlation(self) -> float:
        return sum(x * y * self.counts[(x, y)] for x, y in CELLS) / self.n


@dataclass(frozen=True)
class SummaryStats:
    e1: float
    e2: float
    e12: float

    def cell(self, x: int, y: int) -> float:
        """Frequency reconstructed from the averages and the correlation."""
        return (1 + x * self.e1 + y * self.e2 + x * y * self.e12) / 4


@dataclass(frozen=True)
class RawStream:
    """Per-station events in emission order: outcome, time tag, setting bit."""

    station: int
    x: np.ndarray
    t: np.ndarray
    r: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.station not in (1, 2):
            raise ValueError("station must be 1 or 2")
        x = _frozen(self.x, np.int8)
        t = _frozen(self.t, np.float64)
        r = _frozen(np.zeros(x.size) if self.r is None else self.r, np.int8)
        if not (x.size == t.size == r.size):
            raise ValueError("raw stream columns differ in length")
        if np.any(np.abs(x) != 1) or np.any(t < 0) or np.any((r != 0) & (r != 1)):
            raise ValueError("invalid raw event")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "r", r)

    def __len__(self) -> int:
        return int(self.x.size)


def frequencies(d: PairDataSet) -> FrequencyTable:
    n = len(d)
    if n == 0:
        raise ValueError("empty dataset")
    code = (d.a.astype(np.int64) < 0) * 2 + (d.b.astype(np.int64) < 0)
    binc = np.bincount(code, minlength=4)
    counts = {cell: int(binc[i]) for i, cell in enumerate(CELLS)}
    return FrequencyTable(counts, n)


def summary(d: PairDataSet) -> SummaryStats:
    if len(d) == 0:
        raise ValueError("empty dataset")
    a = d.a.astype(np.int64)
    b = d.b.astype(np.int64)
    n = a.size
    return SummaryStats(int(a.sum()) / n, int(b.sum()) / n, int((a * b).sum()) / n)


def summarize_values(a: Sequence[float], b: Sequence[float]) -> SummaryStats:
    """Averages and correlation for generalized outcomes in [-1, 1]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or a.shape != b.shape:
        raise ValueError("empty dataset or mismatched lengths")
    if np.any(np.abs(a) > 1) or np.any(np.abs(b) > 1):
        raise ValueError("outcomes must lie in [-1, 1]")
    return SummaryStats(float(a.mean()), float(b.mean()), float((a * b).mean()))


def truncate_equal(*sets: PairDataSet) -> tuple[PairDataSet, ...]:
    """Keep the first min(N_s) pairs of every dataset."""
    if len(sets) != 4:
        raise ValueError("expected four datasets")
    if any(len(d) == 0 for d in sets):
        raise ValueError("empty dataset")
    n = min(len(d) for d in sets)
    return tuple(d.head(n) for d in sets)


# --- file formats -----------------------------------------------------------


def write_pairs(path, d: PairDataSet) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "a", "b"])
        for i, (x, y) in enumerate(zip(d.a.tolist(), d.b.tolist())):
            w.writerow([i, x, y])
    sidecar = path.with_suffix(path.suffix + ".json")
    sidecar.write_text(json.dumps(d.condition.to_json(), sort_keys=True) + "\n", encoding="utf-8")


def read_pairs(path, condition: ConditionLabel | None = None) -> PairDataSet:
    path = Path(path)
    if condition is None:
        sidecar = path.with_suffix(path.suffix + ".json")
        if sidecar.exists():
            condition = ConditionLabel.from_json(json.loads(sidecar.read_text(encoding="utf-8")))
        else:
            condition = ConditionLabel.planar(1, 0.0, 0.0)
    with path.open(encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    a = [int(r["a"]) for r in rows]
    b = [int(r["b"]) for r in rows]
    return PairDataSet(condition, a, b)


def write_raw(path, s: RawStream) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "x", "t", "r"])
        for i, (x, t, r) in enumerate(zip(s.x.tolist(), s.t.tolist(), s.r.tolist())):
            w.writerow([i, x, repr(float(t)), r])


def read_raw(path, station: int) -> RawStream:
    with Path(path).open(encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return RawStream(
        station,
        [int(r["x"]) for r in rows],
        [float(r["t"]) for r in rows],
        [int(r["r"]) for r in rows],
    )
