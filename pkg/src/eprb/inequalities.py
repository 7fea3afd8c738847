"""Bell-CHSH function, the quadruple-fraction bound and related count inequalities."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .data import FrequencyTable

EXACT_TOL = 1e-12


def _quartet(q: Sequence[float]) -> tuple[float, float, float, float]:
    if isinstance(q, dict):
        q = [q[s] for s in (1, 2, 3, 4)]
    c = tuple(float(v) for v in q)
    if len(c) != 4:
        raise ValueError("need four correlations")
    if any(abs(v) > 1 + EXACT_TOL for v in c):
        raise ValueError("correlations must lie in [-1, 1]")
    return c


def statistical_tol(n: int) -> float:
    """Comparison slack for Monte Carlo data of length n."""
    return 3.0 / math.sqrt(n)


def chsh_function(q: Sequence[float]) -> float:
    """max |C_i - C_j + C_k + C_l| over the placement of the minus sign."""
    c = _quartet(q)
    total = sum(c)
    return max(abs(total - 2 * ci) for ci in c)


@dataclass(frozen=True)
class BoundReport:
    s_chsh: float
    lhs_minus: float
    lhs_plus: float
    bound: float
    satisfied: bool
    violations: list = field(default_factory=list)


def model_free_check(q: Sequence[float], delta: float, tol: float = EXACT_TOL) -> BoundReport:
    """Compare |C1 -+ C2| + |C3 +- C4| and S with 4 - 2 delta."""
    if not 0.0 <= float(delta) <= 1.0:
        raise ValueError("delta must lie in [0, 1]")
    c1, c2, c3, c4 = _quartet(q)
    lhs_minus = abs(c1 - c2) + abs(c3 + c4)
    lhs_plus = abs(c1 + c2) + abs(c3 - c4)
    bound = 4.0 - 2.0 * float(delta)
    s = chsh_function((c1, c2, c3, c4))
    violations = [
        name for name, v in (("lhs_minus", lhs_minus), ("lhs_plus", lhs_plus), ("S", s)) if v > bound + tol
    ]
    return BoundReport(s, lhs_minus, lhs_plus, bound, not violations, violations)


def bell_triple_check(c1: float, c2: float, c3: float, delta: float, tol: float = EXACT_TOL) -> bool:
    """|C_i +- C_j| <= 3 - 2 delta +- C_k for every ordering of the three correlations."""
    c = (float(c1), float(c2), float(c3))
    if any(abs(v) > 1 + tol for v in c) or not 0.0 <= delta <= 1.0:
        raise ValueError("inputs out of range")
    base = 3.0 - 2.0 * delta
    for i, j, k in itertools.permutations(range(3)):
        if abs(c[i] + c[j]) > base + c[k] + tol:
            return False
        if abs(c[i] - c[j]) > base - c[k] + tol:
            return False
    return True


def _nint(x: Fraction) -> int:
    return math.floor(x + Fraction(1, 2))


def eberhard_counts(
    n_pp_1: int, n_p0_2: int, n_0p_3: int, n_pp_4: int, n_trials: Sequence[int]
) -> tuple[float, float]:
    """EBER/N after rescaling all counts to the mean number of trials.

    Returns (EBER/N, 1 - EBER/N); the second value bounds the quadruple fraction.
    """
    counts = (n_pp_1, n_p0_2, n_0p_3, n_pp_4)
    trials = tuple(int(t) for t in n_trials)
    if len(trials) != 4:
        raise ValueError("need four trial counts")
    if any(t <= 0 for t in trials):
        raise ValueError("zero trials")
    if any(c < 0 or c > t for c, t in zip(counts, trials)):
        raise ValueError("counts must lie in [0, trials]")
    n = Fraction(sum(trials), 4)
    scaled = [_nint(n * c / t) for c, t in zip(counts, trials)]
    eber = scaled[0] - scaled[1] - scaled[2] - scaled[3]
    j = Fraction(eber) / n
    return float(j), float(1 - j)


def eberhard_rescaled(counts: Sequence[int], n_trials: Sequence[int]) -> list[int]:
    """The nearest-integer rescaled counts used by :func:`eberhard_counts`."""
    n = Fraction(sum(int(t) for t in n_trials), 4)
    return [_nint(n * c / t) for c, t in zip(counts, n_trials)]


def ch_data(f1: FrequencyTable, f2: FrequencyTable, f3: FrequencyTable, f4: FrequencyTable, x: int, y: int) -> float:
    if x not in (1, -1) or y not in (1, -1):
        raise ValueError("x and y must be +1 or -1")
    c = [f.correlation() for f in (f1, f2, f3, f4)]
    return -0.5 + x * y * (c[0] - c[1] + c[2] + c[3]) / 4


def ch_bounds(delta: float) -> tuple[float, float]:
    return -1.0 - (1.0 - delta) / 2, (1.0 - delta) / 2


def basic_inequality_witness(x: float, y: float, z: float, w: float, tol: float = EXACT_TOL) -> bool:
    """Check |xy +- xz| <= 1 +- yz and |xz - xw + yz + yw| <= 2 for reals in [-1, 1]."""
    for v in (x, y, z, w):
        if abs(v) > 1:
            raise ValueError("inputs must lie in [-1, 1]")
    ok = abs(x * y + x * z) <= 1 + y * z + tol
    ok &= abs(x * y - x * z) <= 1 - y * z + tol
    ok &= abs(x * z - x * w + y * z + y * w) <= 2 + tol
    return bool(ok)


def triple_equivalent(a: float, b: float, c: float, tol: float = EXACT_TOL) -> tuple[bool, bool, bool]:
    """Truth values of |a+-b|<=1+-c, |a+-c|<=1+-b and |b+-c|<=1+-a."""

    def holds(u, v, r):
        return abs(u + v) <= 1 + r + tol and abs(u - v) <= 1 - r + tol

    return holds(a, b, c), holds(a, c, b), holds(b, c, a)
