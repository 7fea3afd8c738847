"""Moment calculus for bi-, tri- and quadrivariates of two-valued variables.

Tables are numpy arrays of shape (2,)*n where index 0 stands for +1 and
index 1 for -1. Moments are keyed by tuples of 1-based variable labels, so
``K[(1, 3)]`` is the expectation of x1*x3.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping

import numpy as np

SLACK = 1e-12
_SIGN = np.array([1.0, -1.0])


class NoDistributionError(ValueError):
    """The requested moments admit no nonnegative distribution."""

    def __init__(self, message: str, detail=None):
        self.detail = detail
        super().__init__(message)


def _sign_grid(n: int) -> list[np.ndarray]:
    return [_SIGN.reshape([2 if k == i else 1 for k in range(n)]) for i in range(n)]


def moments(table: np.ndarray, labels: tuple[int, ...] | None = None) -> dict:
    """All moments of ``table``; ``labels`` names its axes (default 1..n)."""
    table = np.asarray(table, dtype=float)
    n = table.ndim
    labels = labels or tuple(range(1, n + 1))
    grids = _sign_grid(n)
    out = {}
    for r in range(1, n + 1):
        for axes in itertools.combinations(range(n), r):
            prod = np.ones([1] * n)
            for ax in axes:
                prod = prod * grids[ax]
            out[tuple(labels[a] for a in axes)] = float(np.sum(prod * table))
    return out


def table_from_moments(k: Mapping[tuple, float], labels: tuple[int, ...]) -> np.ndarray:
    """f(x) = 2^-n (1 + sum_S K_S prod_{i in S} x_i); missing moments count as 0."""
    n = len(labels)
    grids = _sign_grid(n)
    f = np.ones([2] * n)
    for r in range(1, n + 1):
        for axes in itertools.combinations(range(n), r):
            key = tuple(labels[a] for a in axes)
            val = k.get(key, 0.0)
            if val:
                prod = np.ones([1] * n)
                for ax in axes:
                    prod = prod * grids[ax]
                f = f + val * prod
    return f / 2**n


def _clip(f: np.ndarray) -> np.ndarray:
    """Zero out cells that are negative only by rounding."""
    if np.any(f < -SLACK):
        raise NoDistributionError("negative cell", float(f.min()))
    return np.where(f < 0, 0.0, f)


# --- Theorem I ---------------------------------------------------------------


@dataclass(frozen=True)
class MomentSet2:
    k1: float
    k2: float
    k12: float


def theorem_I(m: MomentSet2) -> tuple[bool, np.ndarray | None]:
    """Existence test for a bivariate with the given moments, and the bivariate itself."""
    ks = (m.k1, m.k2, m.k12)
    ok = all(abs(v) <= 1 + SLACK for v in ks)
    ok = ok and abs(m.k1 + m.k2) <= 1 + m.k12 + SLACK and abs(m.k1 - m.k2) <= 1 - m.k12 + SLACK
    if not ok:
        return False, None
    f = table_from_moments({(1,): m.k1, (2,): m.k2, (1, 2): m.k12}, (1, 2))
    if np.any(f < -SLACK):
        return False, None
    return True, _clip(f)


# --- Theorem II ----------------------------------------------------------------


@dataclass(frozen=True)
class MomentSet3:
    k1: float
    k2: float
    k3: float
    k12: float
    k13: float
    k23: float
    k123: float | None = None

    def as_dict(self) -> dict:
        d = {(1,): self.k1, (2,): self.k2, (3,): self.k3, (1, 2): self.k12, (1, 3): self.k13, (2, 3): self.k23}
        if self.k123 is not None:
            d[(1, 2, 3)] = self.k123
        return d


def three_violations(m: MomentSet3, tol: float = SLACK) -> list[str]:
    """Names of the necessary trivariate inequalities that fail."""
    bad = []
    for name, v in (("K1", m.k1), ("K2", m.k2), ("K3", m.k3), ("K12", m.k12), ("K13", m.k13), ("K23", m.k23)):
        if abs(v) > 1 + tol:
            bad.append(f"|{name}| <= 1")
    pairs = (("1", "2", m.k1, m.k2, m.k12), ("1", "3", m.k1, m.k3, m.k13), ("2", "3", m.k2, m.k3, m.k23))
    for i, j, ki, kj, kij in pairs:
        if abs(ki + kj) > 1 + kij + tol:
            bad.append(f"|K{i}+K{j}| <= 1+K{i}{j}")
        if abs(ki - kj) > 1 - kij + tol:
            bad.append(f"|K{i}-K{j}| <= 1-K{i}{j}")
    if abs(m.k12 + m.k13) > 1 + m.k23 + tol:
        bad.append("|K12+K13| <= 1+K23")
    if abs(m.k12 - m.k13) > 1 - m.k23 + tol:
        bad.append("|K12-K13| <= 1-K23")
    return bad


def k123_bounds_raw(m: MomentSet3) -> tuple[float, float]:
    """Interval for K123 from the eight cell conditions, without preconditions."""
    k1, k2, k3, k12, k13, k23 = m.k1, m.k2, m.k3, m.k12, m.k13, m.k23
    lhs = max(
        -1 - k3 - k12 + abs(k1 + k2 + k13 + k23),
        -1 + k3 + k12 + abs(k1 - k2 - k13 + k23),
    )
    rhs = min(
        1 - k3 + k12 - abs(k1 + k2 - k13 - k23),
        1 + k3 - k12 - abs(k1 - k2 + k13 - k23),
    )
    return lhs, rhs


def k123_interval(m: MomentSet3) -> tuple[float, float]:
    bad = three_violations(m)
    if bad:
        raise NoDistributionError("no trivariate exists: " + "; ".join(bad), bad)
    lhs, rhs = k123_bounds_raw(m)
    if lhs > rhs + SLACK:
        raise NoDistributionError(f"empty K123 interval [{lhs}, {rhs}]", (lhs, rhs))
    return lhs, max(lhs, rhs)


def trivariate(m: MomentSet3, k123: float | None = None) -> np.ndarray:
    """Trivariate table with K123 defaulting to the interval midpoint."""
    if k123 is None:
        k123 = m.k123
    if k123 is None:
        lo, hi = k123_interval(m)
        k123 = 0.5 * (lo + hi)
    d = MomentSet3(m.k1, m.k2, m.k3, m.k12, m.k13, m.k23, k123).as_dict()
    return table_from_moments(d, (1, 2, 3))


# --- Lemma I and Fine's construction -------------------------------------------


@dataclass(frozen=True)
class MomentSet4:
    """Moments of a quadrivariate keyed by label tuples; absent keys are unknown."""

    k: dict

    def __post_init__(self):
        for key, v in self.k.items():
            if v is not None and abs(v) > 1 + SLACK:
                raise ValueError(f"moment {key} = {v} outside [-1, 1]")

    def __getitem__(self, key):
        return self.k[tuple(key)]


def chsh_combinations(k13: float, k14: float, k23: float, k24: float) -> dict:
    return {
        "|K13-K14|+|K23+K24|": abs(k13 - k14) + abs(k23 + k24),
        "|K13+K14|+|K23-K24|": abs(k13 + k14) + abs(k23 - k24),
    }


def lemma_I_interval(k: Mapping[tuple, float]) -> tuple[float, float]:
    """Admissible range for K34 given K3, K4, K13, K14, K23, K24."""
    k3, k4 = k[(3,)], k[(4,)]
    k13, k14, k23, k24 = k[(1, 3)], k[(1, 4)], k[(2, 3)], k[(2, 4)]
    lo = -1 + max(abs(k13 + k14), abs(k23 + k24), abs(k3 + k4))
    hi = 1 - max(abs(k13 - k14), abs(k23 - k24), abs(k3 - k4))
    if lo > hi + SLACK:
        combos = {name: v for name, v in chsh_combinations(k13, k14, k23, k24).items() if v > 2 + SLACK}
        raise NoDistributionError(f"empty interval: no joint distribution (lo={lo:.6g} > hi={hi:.6g})", combos)
    return lo, max(lo, hi)


def marginal(table: np.ndarray, keep: tuple[int, ...]) -> np.ndarray:
    """Sum out every axis not listed in ``keep`` (0-based axes)."""
    drop = tuple(ax for ax in range(table.ndim) if ax not in keep)
    return table.sum(axis=drop)


def fine_quadrivariate(f2: np.ndarray, f1: np.ndarray, tol: float = SLACK) -> np.ndarray:
    """Glue f2(x1,x3,x4) and f1(x2,x3,x4) along their common (x3,x4) marginal.

    Returns the table indexed (x1, x2, x3, x4).
    """
    f2 = np.asarray(f2, dtype=float)
    f1 = np.asarray(f1, dtype=float)
    if f2.shape != (2, 2, 2) or f1.shape != (2, 2, 2):
        raise ValueError("trivariates must have shape (2, 2, 2)")
    for name, f in (("f2", f2), ("f1", f1)):
        if np.any(f < -tol) or abs(f.sum() - 1) > tol:
            raise ValueError(f"{name} is not a normalized nonnegative trivariate")
    g2 = f2.sum(axis=0)
    g1 = f1.sum(axis=0)
    dev = float(np.max(np.abs(g2 - g1)))
    if dev > tol:
        raise ValueError(f"incompatible (x3, x4) marginals: max deviation {dev:.3g}")
    out = np.zeros((2, 2, 2, 2))
    for i3 in range(2):
        for i4 in range(2):
            den = g2[i3, i4]
            if den > 0:
                out[:, :, i3, i4] = np.outer(f2[:, i3, i4], f1[:, i3, i4]) / den
    return out


def bivariate_moments(f: np.ndarray) -> tuple[float, float, float]:
    k = moments(f)
    return k[(1,)], k[(2,)], k[(1, 2)]


def pipeline_fine(f13: np.ndarray, f14: np.ndarray, f23: np.ndarray, f24: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Quadrivariate (x1,x2,x3,x4) whose pair marginals are the four inputs."""
    tables = [np.asarray(f, dtype=float) for f in (f13, f14, f23, f24)]
    for f in tables:
        if f.shape != (2, 2) or np.any(f < -tol) or abs(f.sum() - 1) > tol:
            raise ValueError("inputs must be normalized nonnegative 2x2 bivariates")
    (k1a, k3a, k13), (k1b, k4a, k14), (k2a, k3b, k23), (k2b, k4b, k24) = (bivariate_moments(f) for f in tables)
    for name, u, v in (("x1", k1a, k1b), ("x2", k2a, k2b), ("x3", k3a, k3b), ("x4", k4a, k4b)):
        if abs(u - v) > tol:
            raise ValueError(f"bivariates disagree on the {name} marginal ({u} vs {v})")
    k = {(1,): k1a, (2,): k2a, (3,): k3a, (4,): k4a, (1, 3): k13, (1, 4): k14, (2, 3): k23, (2, 4): k24}
    lo, hi = lemma_I_interval(k)
    k34 = 0.5 * (lo + hi)
    m134 = MomentSet3(k1a, k3a, k4a, k13, k14, k34)
    m234 = MomentSet3(k2a, k3a, k4a, k23, k24, k34)
    f2 = _clip(trivariate(m134))
    f1 = _clip(trivariate(m234))
    # Remove rounding drift so the gluing sees identical marginals.
    f2 = f2 / f2.sum()
    f1 = f1 / f1.sum()
    return fine_quadrivariate(f2, f1, tol=1e-10)


def quadrivariate_report(f: np.ndarray) -> dict:
    """All moments of a quadrivariate, including the unconstrained K12."""
    return moments(f)


def bivariate_from_correlation(e1: float, e2: float, e12: float) -> np.ndarray:
    ok, f = theorem_I(MomentSet2(e1, e2, e12))
    if not ok:
        raise NoDistributionError("moments violate the bivariate conditions")
    return f


def is_close_table(a: np.ndarray, b: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(np.asarray(a) - np.asarray(b))) <= tol)


__all__ = [
    "MomentSet2",
    "MomentSet3",
    "MomentSet4",
    "NoDistributionError",
    "theorem_I",
    "k123_interval",
    "k123_bounds_raw",
    "three_violations",
    "trivariate",
    "lemma_I_interval",
    "fine_quadrivariate",
    "pipeline_fine",
    "moments",
    "table_from_moments",
    "marginal",
]
