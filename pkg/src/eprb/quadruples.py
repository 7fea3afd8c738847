"""Maximum fraction of quadruples that can be formed by reshuffling four datasets.

A quadruple is a choice of one pair from each dataset such that
A1 = A2 = x, A3 = A4 = y, B1 = B3 = z and B2 = B4 = w. There are 16 types of
quadruple. Type ``i`` encodes the signs as ``i = 8[x<0] + 4[w<0] + 2[y<0] + [z<0]``.

Maximizing the number of quadruples over nonnegative type multiplicities
m_0..m_15 with leftovers u >= 0 is a small linear program (32 unknowns, 16
equalities) solved here by a dense primal simplex with Bland's rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .data import CELLS, PairDataSet

N_TYPES = 16
INTEGRALITY_TOL = 1e-7
_FLOAT_TOL = 1e-9
BRUTEFORCE_MAX_N = 8


class LPError(RuntimeError):
    """Raised when the simplex terminates abnormally."""


class FractionalOptimumError(LPError):
    """The optimum is not integral even in exact arithmetic."""

    def __init__(self, certificate):
        self.certificate = certificate
        super().__init__(f"fractional optimum: m = {[str(v) for v in certificate]}")


def type_signs(i: int) -> tuple[int, int, int, int]:
    """(x, y, z, w) for quadruple type i."""
    if not 0 <= i < N_TYPES:
        raise ValueError("type index out of range")
    x = -1 if i & 8 else 1
    w = -1 if i & 4 else 1
    y = -1 if i & 2 else 1
    z = -1 if i & 1 else 1
    return x, y, z, w


def type_cells(i: int) -> tuple[tuple[int, int], ...]:
    """The (A, B) pair each of the four datasets contributes to a type-i quadruple."""
    x, y, z, w = type_signs(i)
    return (x, z), (x, w), (y, z), (y, w)


def _cell_index(cell: tuple[int, int]) -> int:
    return CELLS.index(cell)


def membership_matrix() -> np.ndarray:
    """16x16 0/1 matrix: row 4*(s-1)+cell, column quadruple type."""
    mat = np.zeros((16, N_TYPES), dtype=np.int64)
    for i in range(N_TYPES):
        for s, cell in enumerate(type_cells(i)):
            mat[4 * s + _cell_index(cell), i] = 1
    return mat


@dataclass(frozen=True)
class CountTable4:
    """counts[s-1, cell] with cells ordered (++, +-, -+, --)."""

    counts: np.ndarray
    n: int

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64).reshape(4, 4)
        if np.any(c < 0):
            raise ValueError("negative count")
        if np.any(c.sum(axis=1) != self.n):
            raise ValueError("each condition must sum to N")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    def get(self, s: int, x: int, y: int) -> int:
        return int(self.counts[s - 1, _cell_index((x, y))])

    def correlations(self) -> tuple[float, ...]:
        sign = np.array([1, -1, -1, 1])
        return tuple(float(v) / self.n for v in self.counts @ sign)


@dataclass(frozen=True)
class QuadrupleSolution:
    m: tuple
    u: dict
    U: int
    n: int

    @property
    def delta(self) -> Fraction:
        return Fraction(self.n - self.U, self.n)


def _check_equal(sets: Sequence[PairDataSet]) -> int:
    if len(sets) != 4:
        raise ValueError("expected four datasets")
    lengths = {len(d) for d in sets}
    if len(lengths) != 1:
        raise ValueError(f"unequal dataset lengths {[len(d) for d in sets]}; truncate first")
    n = lengths.pop()
    if n == 0:
        raise ValueError("empty dataset")
    return n


def count_table(d1: PairDataSet, d2: PairDataSet, d3: PairDataSet, d4: PairDataSet) -> CountTable4:
    n = _check_equal((d1, d2, d3, d4))
    rows = []
    for d in (d1, d2, d3, d4):
        code = (d.a.astype(np.int64) < 0) * 2 + (d.b.astype(np.int64) < 0)
        rows.append(np.bincount(code, minlength=4))
    return CountTable4(np.array(rows), n)


def delta_naive(d1: PairDataSet, d2: PairDataSet, d3: PairDataSet, d4: PairDataSet) -> Fraction:
    """Fraction of indices that already form a quadruple without reshuffling."""
    n = _check_equal((d1, d2, d3, d4))
    ok = (d1.a == d2.a) & (d3.a == d4.a) & (d1.b == d3.b) & (d2.b == d4.b)
    return Fraction(int(ok.sum()), n)


def delta_cellwise(t: CountTable4) -> Fraction:
    return Fraction(int(t.counts.min(axis=0).sum()), t.n)


def delta_lambda(assignments: Sequence[Sequence[int]], k: int) -> Fraction:
    """Shared hidden-variable fraction: sum_k min_s multiplicity(lambda_k) / N."""
    if len(assignments) != 4:
        raise ValueError("expected four runs")
    arrays = [np.asarray(a, dtype=np.int64) for a in assignments]
    n = arrays[0].size
    if n == 0 or any(a.size != n for a in arrays):
        raise ValueError("runs must be nonempty and of equal length")
    for a in arrays:
        if a.min() < 1 or a.max() > k:
            raise ValueError(f"lambda index outside [1, {k}]")
    # count only the labels that occur, so a huge K costs nothing
    labels, inv = np.unique(np.concatenate(arrays), return_inverse=True)
    mult = np.zeros((4, labels.size), dtype=np.int64)
    for s, part in enumerate(np.split(inv, 4)):
        mult[s] = np.bincount(part, minlength=labels.size)
    return Fraction(int(mult.min(axis=0).sum()), n)


# --- simplex ----------------------------------------------------------------


class _Tableau:
    """Canonical-form tableau for min c.x s.t. A x = b, x >= 0."""

    def __init__(self, a: np.ndarray, b: np.ndarray, basis: list[int], exact: bool):
        self.exact = exact
        if exact:
            self.t = np.array([[Fraction(int(v)) for v in row] for row in a], dtype=object)
            self.rhs = np.array([Fraction(int(v)) for v in b], dtype=object)
            self.tol = 0
        else:
            self.t = np.array(a, dtype=np.float64)
            self.rhs = np.array(b, dtype=np.float64)
            self.tol = _FLOAT_TOL
        self.basis = list(basis)
        self.n_vars = a.shape[1]

    def reduced_costs(self, cost: np.ndarray) -> np.ndarray:
        cb = cost[self.basis]
        return cost - cb.dot(self.t)

    def pivot(self, row: int, col: int) -> None:
        t, rhs = self.t, self.rhs
        p = t[row, col]
        t[row] = t[row] / p
        rhs[row] = rhs[row] / p
        for r in range(t.shape[0]):
            if r != row:
                f = t[r, col]
                if f != 0:
                    t[r] = t[r] - f * t[row]
                    rhs[r] = rhs[r] - f * rhs[row]
        if not self.exact:
            t[np.abs(t) < 1e-13] = 0.0
            rhs[np.abs(rhs) < 1e-13] = 0.0
        self.basis[row] = col

    def minimize(self, cost: np.ndarray, allowed: set[int], max_iter: int = 10_000) -> np.ndarray:
        """Bland's rule iterations; returns the final reduced costs."""
        tol = self.tol
        for _ in range(max_iter):
            red = self.reduced_costs(cost)
            basic = set(self.basis)
            entering = next((j for j in range(self.n_vars) if j in allowed and j not in basic and red[j] < -tol), None)
            if entering is None:
                return red
            col = self.t[:, entering]
            best_row, best_ratio = None, None
            for i in range(len(self.basis)):
                if col[i] > tol:
                    ratio = self.rhs[i] / col[i]
                    if (
                        best_row is None
                        or ratio < best_ratio - (0 if self.exact else tol)
                        or (abs(ratio - best_ratio) <= (0 if self.exact else tol) and self.basis[i] < self.basis[best_row])
                    ):
                        best_row, best_ratio = i, ratio
            if best_row is None:
                raise LPError("unbounded direction in a bounded problem")
            self.pivot(best_row, entering)
        raise LPError("simplex iteration limit reached")

    def solution(self) -> np.ndarray:
        x = np.zeros(self.n_vars, dtype=object if self.exact else np.float64)
        if self.exact:
            x[:] = Fraction(0)
        for i, j in enumerate(self.basis):
            x[j] = self.rhs[i]
        return x


def _solve(b: np.ndarray, exact: bool) -> np.ndarray:
    mat = membership_matrix()
    a = np.hstack([mat, np.eye(16, dtype=np.int64)])
    tab = _Tableau(a, b, list(range(N_TYPES, 2 * N_TYPES)), exact)
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0

    def cost_vec(idx: Sequence[int], sign) -> np.ndarray:
        c = np.array([zero] * (2 * N_TYPES), dtype=object if exact else np.float64)
        for j in idx:
            c[j] = sign
        return c

    allowed = set(range(2 * N_TYPES))
    objectives = [cost_vec(range(N_TYPES), -one)] + [cost_vec([k], one) for k in range(N_TYPES)]
    for cost in objectives:
        red = tab.minimize(cost, allowed)
        basic = set(tab.basis)
        # Nonbasic columns with positive reduced cost vanish on the optimal face.
        allowed = {j for j in allowed if j in basic or red[j] <= tab.tol}
    return tab.solution()


def delta_lp(t: CountTable4) -> QuadrupleSolution:
    """Exact maximum number of quadruples; lexicographically smallest m among optima."""
    b = t.counts.reshape(-1).astype(np.int64)
    x = _solve(b, exact=False)
    if np.max(np.abs(x - np.round(x))) > INTEGRALITY_TOL:
        x = _solve(b, exact=True)
        if any(v.denominator != 1 for v in x):
            raise FractionalOptimumError(list(x[:N_TYPES]))
    xi = [int(round(v)) if not isinstance(v, Fraction) else int(v) for v in x]
    m = tuple(xi[:N_TYPES])
    mat = membership_matrix()
    used = mat @ np.array(m, dtype=np.int64)
    leftovers = b - used
    if np.any(leftovers < 0):
        raise LPError("solution violates a cell count")
    u = {}
    for s in range(4):
        for ci, cell in enumerate(CELLS):
            u[(s + 1, cell[0], cell[1])] = int(leftovers[4 * s + ci])
    total = sum(m)
    return QuadrupleSolution(m, u, t.n - total, t.n)


def delta_bruteforce(d1: PairDataSet, d2: PairDataSet, d3: PairDataSet, d4: PairDataSet) -> Fraction:
    """Exhaustive maximum over multisets of quadruples; N <= 8 only."""
    n = _check_equal((d1, d2, d3, d4))
    if n > BRUTEFORCE_MAX_N:
        raise ValueError(f"N={n} too large for exhaustive search (max {BRUTEFORCE_MAX_N})")
    pools = []
    for d in (d1, d2, d3, d4):
        pool = {}
        for pair in d.pairs():
            pool[pair] = pool.get(pair, 0) + 1
        pools.append(pool)

    # Each quadruple draws the pair (x,z) from set 1, (x,w) from 2, (y,z) from 3, (y,w) from 4.
    candidates = []
    for x in (1, -1):
        for y in (1, -1):
            for z in (1, -1):
                for w in (1, -1):
                    candidates.append(((x, z), (x, w), (y, z), (y, w)))
    keys = [sorted(p) for p in pools]

    def freeze(state):
        return tuple(tuple((k, state[s].get(k, 0)) for k in keys[s]) for s in range(4))

    @lru_cache(maxsize=None)
    def best(frozen, start: int) -> int:
        state = [dict(items) for items in frozen]
        top = 0
        for t in range(start, len(candidates)):
            need = candidates[t]
            if all(state[s].get(need[s], 0) > 0 for s in range(4)):
                for s in range(4):
                    state[s][need[s]] -= 1
                top = max(top, 1 + best(freeze(state), t))
                for s in range(4):
                    state[s][need[s]] += 1
        return top

    return Fraction(best(freeze(pools), 0), n)
