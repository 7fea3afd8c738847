"""Time-coincidence pairing of raw station streams and window scans."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import ConditionLabel, PairDataSet, RawStream
from .inequalities import chsh_function

PAIRING_MODES = ("emission_indexed", "nearest_tag")
DRIFT_SIGMAS = 5.0


@dataclass(frozen=True)
class CoincidenceConfig:
    w: float
    pairing: str = "emission_indexed"

    def __post_init__(self):
        if not self.w >= 0:
            raise ValueError("W must be nonnegative")
        if self.pairing not in PAIRING_MODES:
            raise ValueError(f"pairing must be one of {PAIRING_MODES}")


@dataclass(frozen=True)
class PairedData:
    """Truncated datasets and the per-setting pair counts before truncation."""

    datasets: tuple
    kept: tuple


@dataclass(frozen=True)
class WScanRow:
    w: float
    s: float
    e12: tuple
    e1: tuple
    e2: tuple
    pairs_kept: tuple
    n: int


def _default_conditions() -> tuple[ConditionLabel, ...]:
    return tuple(ConditionLabel.planar(s, 0.0, 0.0) for s in (1, 2, 3, 4))


def _match_emission(s1: RawStream, s2: RawStream) -> tuple[np.ndarray, np.ndarray]:
    if len(s1) != len(s2):
        raise ValueError("emission-indexed pairing needs streams of equal length")
    idx = np.arange(len(s1))
    return idx, idx


def _match_nearest(s1: RawStream, s2: RawStream, w: float) -> tuple[np.ndarray, np.ndarray]:
    """Greedy nearest-tag matching in left-tag order; ties go to the earlier right event."""
    order1 = np.argsort(s1.t, kind="stable")
    order2 = np.argsort(s2.t, kind="stable")
    t2 = s2.t[order2]
    m = t2.size
    # path-compressed pointers to the nearest unmatched slot on either side;
    # the backward table is shifted by one so that slot 0 means "none"
    fwd = list(range(m + 1))
    bwd = list(range(m + 1))

    def root(parent, j):
        r = j
        while parent[r] != r:
            r = parent[r]
        while parent[j] != r:
            parent[j], j = r, parent[j]
        return r

    left, right = [], []
    for i in order1.tolist():
        t = s1.t[i]
        k = int(np.searchsorted(t2, t, side="left"))
        after = root(fwd, k)
        before = root(bwd, k) - 1
        best = None
        if before >= 0:
            # among equal tags take the earliest unmatched one
            best = root(fwd, int(np.searchsorted(t2, t2[before], side="left")))
        if after < m and (best is None or t2[after] - t < t - t2[best]):
            best = after
        if best is None or abs(t2[best] - t) > w:
            continue
        left.append(i)
        right.append(int(order2[best]))
        fwd[best] = best + 1
        bwd[best + 1] = best
    return np.array(left, dtype=np.int64), np.array(right, dtype=np.int64)


def _route(s1: RawStream, s2: RawStream, i1: np.ndarray, i2: np.ndarray) -> np.ndarray:
    """Condition index 0..3 from the setting bits (a/b on the left, c/d on the right)."""
    return 2 * s1.r[i1].astype(np.int64) + s2.r[i2].astype(np.int64)


def _assemble(s1, s2, i1, i2, keep, conditions) -> PairedData:
    i1, i2 = i1[keep], i2[keep]
    route = _route(s1, s2, i1, i2)
    kept = tuple(int(np.count_nonzero(route == s)) for s in range(4))
    if min(kept) == 0:
        raise ValueError(f"a setting has no coincidences: pairs kept per setting {kept}")
    n = min(kept)
    sets = []
    for s in range(4):
        sel = np.flatnonzero(route == s)[:n]
        sets.append(PairDataSet(conditions[s], s1.x[i1[sel]], s2.x[i2[sel]]))
    return PairedData(tuple(sets), kept)


def pair_events(
    s1: RawStream, s2: RawStream, cfg: CoincidenceConfig, conditions: Sequence[ConditionLabel] | None = None
) -> PairedData:
    """Pair left and right events within window W and split them by setting."""
    conditions = tuple(conditions) if conditions is not None else _default_conditions()
    if cfg.pairing == "emission_indexed":
        i1, i2 = _match_emission(s1, s2)
        keep = np.abs(s1.t[i1] - s2.t[i2]) <= cfg.w
    else:
        i1, i2 = _match_nearest(s1, s2, cfg.w)
        keep = np.ones(i1.size, dtype=bool)
    return _assemble(s1, s2, i1, i2, keep, conditions)


def _row(w: float, paired: PairedData) -> WScanRow:
    e12, e1, e2 = [], [], []
    for d in paired.datasets:
        a = d.a.astype(np.int64)
        b = d.b.astype(np.int64)
        e1.append(float(a.mean()))
        e2.append(float(b.mean()))
        e12.append(float((a * b).mean()))
    n = len(paired.datasets[0])
    return WScanRow(float(w), chsh_function(e12), tuple(e12), tuple(e1), tuple(e2), paired.kept, n)


def w_scan(
    s1: RawStream,
    s2: RawStream,
    grid: Sequence[float],
    pairing: str = "emission_indexed",
    conditions: Sequence[ConditionLabel] | None = None,
) -> list[WScanRow]:
    """One row of correlations and S per window width."""
    grid = [float(w) for w in grid]
    if not grid:
        raise ValueError("empty W grid")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("W grid must be strictly increasing")
    conditions = tuple(conditions) if conditions is not None else _default_conditions()
    if pairing == "emission_indexed":
        i1, i2 = _match_emission(s1, s2)
        dt = np.abs(s1.t - s2.t)
        return [_row(w, _assemble(s1, s2, i1, i2, dt <= w, conditions)) for w in grid]
    return [_row(w, pair_events(s1, s2, CoincidenceConfig(w, pairing), conditions)) for w in grid]


@dataclass(frozen=True)
class DriftEntry:
    w: float
    station: int
    setting: str
    spread: float
    sigma: float
    flagged: bool


def drift_diagnostic(rows: Sequence[WScanRow], threshold: float = DRIFT_SIGMAS) -> list[DriftEntry]:
    """Dependence of single-station averages on the remote setting.

    Station 1 with setting a is seen in conditions 1 and 2, setting b in 3 and 4;
    station 2 with setting c in conditions 1 and 3, setting d in 2 and 4.
    """
    if len(rows) < 2:
        raise ValueError("need at least two scan rows")
    groups = ((1, "a", "e1", 0, 1), (1, "b", "e1", 2, 3), (2, "c", "e2", 0, 2), (2, "d", "e2", 1, 3))
    out = []
    for row in rows:
        for station, name, attr, i, j in groups:
            vals = getattr(row, attr)
            spread = abs(vals[i] - vals[j])
            sigma = math.sqrt(2.0 / row.n)
            out.append(DriftEntry(row.w, station, name, spread, sigma, spread > threshold * sigma))
    return out


def parse_grid(spec: str) -> list[float]:
    """``lo:hi:count`` gives a logarithmic grid; a comma list is taken literally."""
    if ":" in spec:
        lo, hi, count = spec.split(":")
        lo, hi, k = float(lo), float(hi), int(count)
        if lo <= 0 or hi <= lo or k < 2:
            raise ValueError("grid needs 0 < lo < hi and at least two points")
        return np.geomspace(lo, hi, k).tolist()
    return [float(v) for v in spec.split(",") if v.strip()]
