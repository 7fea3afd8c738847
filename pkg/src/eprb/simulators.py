"""Generative models for EPRB data.

Every sampler is deterministic given its random stream. Quartet helpers draw
the four conditions from substreams 0..3 of one stream; counterfactual mode
reuses substream 0 for all four.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .data import CELLS, ConditionLabel, PairDataSet, RawStream, SummaryStats
from .rng import RandomStream, as_generator

TPM_D_VALUES = (0, 2, 4, 6, 8)
QUAD_TOL = 1e-8


# --- plumbing -----------------------------------------------------------------


def quartet_generators(rng, counterfactual: bool = False) -> list[np.random.Generator]:
    """Four generators for the four conditions."""
    if isinstance(rng, (int, np.integer)):
        rng = RandomStream(int(rng))
    if not isinstance(rng, RandomStream):
        rng = RandomStream(int(as_generator(rng).integers(0, 2**63)))
    if counterfactual:
        return [rng.substream(0) for _ in range(4)]
    return [rng.substream(i) for i in range(4)]


def quartet_conditions(a: float, b: float, c: float, d: float) -> tuple[ConditionLabel, ...]:
    """Planar conditions (a,c), (a,d), (b,c), (b,d); angles in radians."""
    return (
        ConditionLabel.planar(1, a, c),
        ConditionLabel.planar(2, a, d),
        ConditionLabel.planar(3, b, c),
        ConditionLabel.planar(4, b, d),
    )


def spin_quartet_conditions(a, b, c, d) -> tuple[ConditionLabel, ...]:
    return (
        ConditionLabel.spin(1, a, c),
        ConditionLabel.spin(2, a, d),
        ConditionLabel.spin(3, b, c),
        ConditionLabel.spin(4, b, d),
    )


def _angles(cond: ConditionLabel) -> tuple[float, float]:
    if cond.kind != "photon2d":
        raise ValueError("model needs planar angle settings")
    return float(cond.setting1), float(cond.setting2)


def _sign(v: np.ndarray) -> np.ndarray:
    return np.where(v >= 0, 1, -1).astype(np.int8)


def sample_cells(cond: ConditionLabel, n: int, probs: Sequence[float], rng) -> PairDataSet:
    """i.i.d. pairs with cell probabilities ordered (++, +-, -+, --)."""
    p = np.asarray(probs, dtype=float)
    if p.shape != (4,) or np.any(p < -1e-12) or abs(p.sum() - 1) > 1e-9:
        raise ValueError(f"invalid cell probabilities {p.tolist()}")
    p = np.clip(p, 0.0, None)
    cum = np.cumsum(p / p.sum())
    u = as_generator(rng).random(n)
    idx = np.minimum(np.searchsorted(cum, u, side="right"), 3)
    cells = np.array(CELLS, dtype=np.int8)
    return PairDataSet(cond, cells[idx, 0], cells[idx, 1])


def correlation_cells(e12: float, e1: float = 0.0, e2: float = 0.0) -> list[float]:
    return [(1 + x * e1 + y * e2 + x * y * e12) / 4 for x, y in CELLS]


# --- elementary samplers ----------------------------------------------------------


def sample_singlet(cond: ConditionLabel, n: int, q: float, rng) -> PairDataSet:
    """Cells (1 - q x y a.c)/4; q = 1 is the singlet."""
    va, vc = cond.vectors()
    ac = float(va @ vc)
    probs = [(1 - q * x * y * ac) / 4 for x, y in CELLS]
    if min(probs) < -1e-12:
        raise ValueError(f"negative cell probability {min(probs):.6g} for q={q}")
    return sample_cells(cond, n, probs, rng)


def sample_correlated(cond: ConditionLabel, n: int, c: float, rng) -> PairDataSet:
    """Cells (1 - c x y)/4, so the correlation is -c."""
    if abs(c) > 1:
        raise ValueError("|c| must not exceed 1")
    return sample_cells(cond, n, [(1 - c * x * y) / 4 for x, y in CELLS], rng)


def sample_product(cond: ConditionLabel, n: int, m1, m2, rng) -> PairDataSet:
    """Cells (1 + x a.M1)(1 + y c.M2)/4."""
    m1 = np.asarray(m1, dtype=float)
    m2 = np.asarray(m2, dtype=float)
    if np.linalg.norm(m1) > 1 + 1e-12 or np.linalg.norm(m2) > 1 + 1e-12:
        raise ValueError("polarization vectors must have norm <= 1")
    va, vc = cond.vectors()
    u, v = float(va @ m1), float(vc @ m2)
    return sample_cells(cond, n, [(1 + x * u) * (1 + y * v) / 4 for x, y in CELLS], rng)


# --- Bell's toy model -------------------------------------------------------------


def _toy_station(setting: float, lam: np.ndarray) -> np.ndarray:
    # +1 on the half of the circle where cos 2(lam - setting) >= 0
    phase = np.mod(2.0 * (lam - setting), 2 * math.pi)
    return np.where((phase < math.pi / 2) | (phase >= 3 * math.pi / 2), 1, -1).astype(np.int8)


def bell_toy(cond: ConditionLabel, n: int, rng, malus: bool = False) -> PairDataSet:
    """Bell's toy model; ``malus`` adds independent instrument variables r, r'."""
    a, c = _angles(cond)
    g = as_generator(rng)
    lam = g.random(n) * 2 * math.pi
    if not malus:
        return PairDataSet(cond, _toy_station(a, lam), -_toy_station(c, lam))
    r = g.random(n)
    r2 = g.random(n)
    x = _sign(1 + np.cos(2 * (lam - a)) - 2 * r)
    y = -_sign(1 + np.cos(2 * (lam - c)) - 2 * r2)
    return PairDataSet(cond, x, y)


def bell_toy_correlation(theta: float, malus: bool = False) -> float:
    if malus:
        return -0.5 * math.cos(2 * theta)
    return -1 + (2 / math.pi) * math.acos(max(-1.0, min(1.0, math.cos(2 * theta))))


def bell_toy_quartet(conds, n: int, rng, malus: bool = False, counterfactual: bool = False):
    gens = quartet_generators(rng, counterfactual)
    return tuple(bell_toy(cd, n, g, malus) for cd, g in zip(conds, gens))


def sample_quartet(conds, n: int, sampler: Callable, rng, counterfactual: bool = False):
    """Apply ``sampler(cond, n, generator)`` to each condition."""
    gens = quartet_generators(rng, counterfactual)
    return tuple(sampler(cd, n, g) for cd, g in zip(conds, gens))


# --- time-tag model -----------------------------------------------------------------


def _check_d(d: int) -> int:
    if int(d) != d or d < 0 or d % 2:
        raise ValueError(f"d must be a nonnegative even integer, got {d}")
    return int(d)


def delay_scale(u: np.ndarray, d: int, t0: float) -> np.ndarray:
    """T(u) = T0 |sin 2u|^d."""
    return t0 * np.abs(np.sin(2 * np.asarray(u))) ** d


@dataclass(frozen=True)
class TimeTagEmissions:
    """Per-emission record shared by the raw-stream and threshold models."""

    x: np.ndarray
    y: np.ndarray
    t1: np.ndarray
    t2: np.ndarray
    r1: np.ndarray
    r2: np.ndarray


def _timetag_emissions(settings, n: int, d: int, t0: float, mode: str, g: np.random.Generator) -> TimeTagEmissions:
    """settings is (a, b, c, d_angle); with one condition b = a and d = c."""
    d = _check_d(d)
    if t0 <= 0:
        raise ValueError("T0 must be positive")
    if mode not in ("anti", "parallel"):
        raise ValueError("mode must be 'anti' or 'parallel'")
    sa, sb, sc, sd = settings
    four = not (sa == sb and sc == sd)
    r1 = g.integers(0, 2, n).astype(np.int8) if four else np.zeros(n, np.int8)
    r2 = g.integers(0, 2, n).astype(np.int8) if four else np.zeros(n, np.int8)
    xi = g.random(n) * 2 * math.pi
    zeta = xi + math.pi / 2 if mode == "anti" else xi
    p1 = np.where(r1 == 0, sa, sb)
    p2 = np.where(r2 == 0, sc, sd)
    x = _sign(np.cos(2 * (xi - p1)) - (2 * g.random(n) - 1))
    y = _sign(np.cos(2 * (zeta - p2)) - (2 * g.random(n) - 1))
    t1 = g.random(n) * delay_scale(xi - p1, d, t0)
    t2 = g.random(n) * delay_scale(zeta - p2, d, t0)
    return TimeTagEmissions(x, y, t1, t2, r1, r2)


def _settings_of(conds) -> tuple[float, float, float, float]:
    conds = list(conds) if isinstance(conds, (list, tuple)) else [conds]
    if len(conds) == 1:
        a, c = _angles(conds[0])
        return a, a, c, c
    if len(conds) != 4:
        raise ValueError("need one or four conditions")
    a, c = _angles(conds[0])
    a2, d = _angles(conds[1])
    b, c2 = _angles(conds[2])
    b2, d2 = _angles(conds[3])
    if not (math.isclose(a, a2) and math.isclose(c, c2) and math.isclose(b, b2) and math.isclose(d, d2)):
        raise ValueError("conditions must be (a,c), (a,d), (b,c), (b,d)")
    return a, b, c, d


def timetag_raw(
    conds,
    n: int,
    d: int,
    t0: float,
    mode: str,
    rng,
    emission_period: float | None = None,
) -> tuple[RawStream, RawStream]:
    """Raw streams of the stochastic time-tag model.

    Event k carries the tag k*period + delay so both streams stay in emission
    order. With four conditions the setting bits r1 (a or b) and r2 (c or d)
    are fair coins.
    """
    period = 10.0 * t0 if emission_period is None else float(emission_period)
    if period <= 0:
        raise ValueError("emission period must be positive")
    ev = _timetag_emissions(_settings_of(conds), n, d, t0, mode, as_generator(rng))
    base = np.arange(n, dtype=np.float64) * period
    return RawStream(1, ev.x, base + ev.t1, ev.r1), RawStream(2, ev.y, base + ev.t2, ev.r2)


def tpm_correlation_analytic(theta: float, d: int, regime: str = "w_to_zero") -> float:
    """Closed-form correlation of the time-tag model with anti-parallel polarizations."""
    d = _check_d(d)
    if d not in TPM_D_VALUES:
        raise ValueError(f"no closed form for d={d}")
    c2 = math.cos(2 * theta)
    if regime == "w_ge_t0" or d == 0:
        return -0.5 * c2
    if regime != "w_to_zero":
        raise ValueError("regime must be 'w_to_zero' or 'w_ge_t0'")
    if d == 2:
        s2 = math.sin(2 * theta)
        t = abs(math.tan(theta)) if math.cos(theta) != 0 else math.inf
        if s2 == 0:
            # the log term vanishes at the zeros of sin 2 theta
            return -c2
        return (math.pi / 4) * s2 * c2 - c2 + 0.5 * s2 * s2 * math.log(t)
    if d == 4:
        return -c2
    if d == 6:
        return -0.5 * c2 * (1 + 24 / (19 + 5 * math.cos(4 * theta)))
    return -(53 * c2 + 7 * math.cos(6 * theta)) / (39 + 21 * math.cos(4 * theta))


def coincidence_weight(t1: float, t2: float, w: float) -> float:
    """P(|u1 - u2| <= W) for u1 ~ U[0, t1], u2 ~ U[0, t2]."""
    lo, hi = min(t1, t2), max(t1, t2)
    if hi == 0 or w >= hi:
        return 1.0
    if lo == 0:
        return min(1.0, w / hi)
    bw = hi - w
    c1 = lo * bw - lo * lo / 2 if bw >= lo else bw * bw / 2
    c2 = (lo - w) ** 2 / 2 if w < lo else 0.0
    return 1.0 - (c1 + c2) / (lo * hi)


def _breakpoints(a: float, c: float) -> list[float]:
    pts = set()
    for base in (a, c, 0.5 * (a + c), 0.5 * (a + c) + math.pi / 4):
        for k in range(-8, 9):
            v = base + k * math.pi / 4
            if 0 < v < math.pi:
                pts.add(v)
    return sorted(pts)


def tpm_correlation_numeric(theta: float, d: int, w: float, t0: float = 1.0) -> float:
    """Correlation of the time-tag model under coincidence window W.

    W = 0 stands for the W -> 0 limit, where the weight becomes 1/max(T1, T2).
    """
    d = _check_d(d)
    if w < 0 or t0 <= 0:
        raise ValueError("need W >= 0 and T0 > 0")
    a, c = float(theta), 0.0
    if w == 0:
        # the weight diverges where both delay scales vanish together
        s = math.sin(2 * (a - c))
        if d > 0 and abs(s) < 1e-15:
            return -math.cos(2 * (a - c))
        def weight(xi):
            return 1.0 / max(abs(math.sin(2 * (xi - a))) ** d, abs(math.sin(2 * (xi - c))) ** d)
    else:
        # rescale so the weight is of order one for small W
        scale = t0 / min(w, t0)

        def weight(xi):
            return scale * coincidence_weight(
                t0 * abs(math.sin(2 * (xi - a))) ** d, t0 * abs(math.sin(2 * (xi - c))) ** d, w
            )

    return _weighted_correlation(weight, a, c, d, w, t0)


def _weighted_correlation(weight, a: float, c: float, d: int, w: float, t0: float) -> float:
    """Ratio of the weighted correlation integral to the weight integral over one period."""

    def corr(xi):
        return -math.cos(2 * (xi - a)) * math.cos(2 * (xi - c))

    pts = _breakpoints(a % math.pi, c)
    if w > 0 and d > 0 and w < t0:
        # the weight has kinks where a delay scale crosses W
        u = 0.5 * math.asin((w / t0) ** (1.0 / d))
        extra = []
        for base in (a, c):
            for k in range(-4, 5):
                for v in (base + k * math.pi / 2 + u, base + k * math.pi / 2 - u):
                    if 0 < v < math.pi:
                        extra.append(v)
        pts = sorted(set(pts) | set(extra))
    edges = [0.0] + pts + [math.pi]
    num = den = err_num = err_den = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo < 1e-15:
            continue
        v1, e1 = integrate.quad(lambda x: weight(x) * corr(x), lo, hi, epsabs=1e-12, epsrel=1e-10, limit=400)
        v2, e2 = integrate.quad(weight, lo, hi, epsabs=1e-12, epsrel=1e-10, limit=400)
        num += v1
        den += v2
        err_num += e1
        err_den += e2
    value = num / den
    achieved = (err_num + abs(value) * err_den) / den
    if achieved > QUAD_TOL:
        raise ArithmeticError(f"quadrature tolerance not reached: {value} +- {achieved:.3g}")
    return value


def threshold_weight(t: np.ndarray, w: float) -> np.ndarray:
    """Probability that a delay uniform on [0, T] does not exceed W."""
    t = np.asarray(t, dtype=float)
    out = np.ones_like(t)
    big = t > w
    out[big] = w / t[big]
    return out


def local_threshold(cond: ConditionLabel, n: int, d: int, t0: float, w: float, rng, mode: str = "anti") -> PairDataSet:
    """Keep an emission iff each station's own delay is at most W."""
    if w < 0:
        raise ValueError("W must be nonnegative")
    ev = _timetag_emissions(_settings_of(cond), n, d, t0, mode, as_generator(rng))
    keep = (ev.t1 <= w) & (ev.t2 <= w)
    if not keep.any():
        raise ValueError("no emission survives the local thresholds")
    return PairDataSet(cond, ev.x[keep], ev.y[keep])


def local_threshold_correlation(theta: float, d: int, w: float, t0: float = 1.0) -> float:
    """Expected correlation of :func:`local_threshold` data by quadrature."""
    d = _check_d(d)
    if w <= 0 or t0 <= 0:
        raise ValueError("need W > 0 and T0 > 0")
    a, c = float(theta), 0.0
    scale = t0 / min(w, t0)

    def station(u):
        t = t0 * abs(math.sin(2 * u)) ** d
        return 1.0 if t <= w else w / t

    def weight(xi):
        return scale * scale * station(xi - a) * station(xi - c)

    return _weighted_correlation(weight, a, c, d, w, t0)


# --- classical models -------------------------------------------------------------------


def maxwell_correlation(cond: ConditionLabel, n: int, phi0: float, intensity: str, rng) -> SummaryStats:
    """Time-averaged intensity correlations of two polarized beams."""
    a, c = _angles(cond)
    g = as_generator(rng)
    phi = g.random(n) * math.pi
    if intensity == "exp":
        r = g.exponential(1.0, n)
    elif intensity == "constant":
        r = np.ones(n)
    else:
        raise ValueError("intensity must be 'exp' or 'constant'")
    ca = np.cos(2 * (phi - a))
    cc = np.cos(2 * (phi - c + phi0))
    # sum over x of x * r (1 + x cos)/2 is r cos
    e1 = float(np.mean(r * ca))
    e2 = float(np.mean(r * cc))
    e12 = float(np.mean(r * r * ca * cc))
    return SummaryStats(e1, e2, e12)


def _spin_magnitudes(mu, n: int, g: np.random.Generator) -> tuple[np.ndarray, float]:
    """Draw |S| with density S^2 mu(S); return draws and the fourth moment of mu."""
    if mu == "exp4":
        return g.gamma(3.0, 0.5, n), 3.0
    if mu == "two_delta":
        return np.where(g.random(n) < 1 / 3, 1.0, 2.0), 3.0
    if not callable(mu):
        raise ValueError("mu must be 'exp4', 'two_delta' or a callable")
    norm = integrate.quad(lambda s: s * s * mu(s), 0, np.inf, limit=400)[0]
    if abs(norm - 1) > 1e-6:
        raise ValueError(f"integral of S^2 mu(S) is {norm:.8g}, not 1")
    m4 = integrate.quad(lambda s: s**4 * mu(s), 0, np.inf, limit=400)[0]
    grid = np.linspace(0, 1, 2001)
    # map the grid through s = t/(1-t) to cover [0, inf)
    s = grid[:-1] / (1 - grid[:-1])
    dens = np.array([v * v * mu(v) for v in s]) * (1 / (1 - grid[:-1]) ** 2)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid[:-1]))])
    cdf /= cdf[-1]
    return np.interp(g.random(n), cdf, s), m4


def classical_spins(cond: ConditionLabel, n: int, mu, rng) -> SummaryStats:
    """Classical spins S2 = -S1 with uniform direction; outcomes are projections."""
    va, vc = cond.vectors()
    g = as_generator(rng)
    mag, _ = _spin_magnitudes(mu, n, g)
    v = g.standard_normal((n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    s1 = v * mag[:, None]
    x = s1 @ va
    y = -(s1 @ vc)
    return SummaryStats(float(x.mean()), float(y.mean()), float((x * y).mean()))


def classical_spins_fixed(a, c, m1, m2) -> SummaryStats:
    """Deterministic spin vectors M1, M2: every event gives (a.M1, c.M2)."""
    x = float(np.dot(a, m1))
    y = float(np.dot(c, m2))
    return SummaryStats(x, y, x * y)


# --- cascaded EEPRB experiment -----------------------------------------------------------


def _project(g: np.random.Generator, prior: np.ndarray, cosine: float) -> np.ndarray:
    """Outcome s with P(s = prior) = (1 + cosine)/2."""
    same = g.random(prior.size) < (1 + cosine) / 2
    return np.where(same, prior, -prior).astype(np.int8)


def eeprb_generate(a, b, c, d, n: int, rng) -> tuple[PairDataSet, ...]:
    """Cascaded filtering: S1 (a) and S3 (c) from the singlet, then S2 (b) and S4 (d).

    The four datasets share the emission index, so every row is a quadruple.
    """
    va, vb, vc, vd = (np.asarray(v, dtype=float) for v in (a, b, c, d))
    conds = spin_quartet_conditions(va, vb, vc, vd)
    g = as_generator(rng)
    first = sample_singlet(conds[0], n, 1.0, g)
    s1 = first.a
    s3 = first.b
    s2 = _project(g, s1, float(va @ vb))
    s4 = _project(g, s3, float(vc @ vd))
    return (
        PairDataSet(conds[0], s1, s3),
        PairDataSet(conds[1], s1, s4),
        PairDataSet(conds[2], s2, s3),
        PairDataSet(conds[3], s2, s4),
    )


def eeprb_correlations(a, b, c, d) -> tuple[float, float, float, float]:
    """Exact K13, K14, K23, K24 of the cascade."""
    ab, ac, cd = float(np.dot(a, b)), float(np.dot(a, c)), float(np.dot(c, d))
    return -ac, -ac * cd, -ab * ac, -ab * ac * cd


# --- finite hidden-variable sets -----------------------------------------------------------


def finite_lambda(conds, n: int, k: int, rule: str, rng):
    """Deterministic outcomes A(setting, lambda), B(setting, lambda) over lambda in 1..K.

    Returns the four datasets and the lambda index of every pair.
    """
    if k < 1:
        raise ValueError("K must be at least 1")
    if rule not in ("periodic", "uniform"):
        raise ValueError("rule must be 'periodic' or 'uniform'")
    stream = rng if isinstance(rng, RandomStream) else RandomStream(int(as_generator(rng).integers(0, 2**63)))
    table_gen = stream.substream(4)
    # outcome tables for settings a, b (station 1) and c, d (station 2)
    tables = table_gen.choice(np.array([1, -1], dtype=np.int8), size=(4, k))
    gens = [stream.substream(i) for i in range(4)]
    picks = ((0, 2), (0, 3), (1, 2), (1, 3))
    sets, lams = [], []
    for cond, gen, (i1, i2) in zip(conds, gens, picks):
        if rule == "periodic":
            start = int(gen.integers(0, k))
            lam = (start + np.arange(n)) % k
        else:
            lam = gen.integers(0, k, n)
        sets.append(PairDataSet(cond, tables[i1][lam], tables[i2][lam]))
        lams.append(lam + 1)
    return tuple(sets), tuple(lams)


# --- negative quasi-probabilities -----------------------------------------------------------


def quasiprob_factorization_check(a: float, c: float) -> tuple[float, float]:
    """Integrate the factorized quasi-probability representation of -cos 2(a-c).

    Returns the integrated correlation and the smallest value either factor takes.
    """
    s2 = math.sqrt(2)

    def factor1(x, phi):
        return (1 - x * s2 * math.cos(2 * (a - phi))) / 2

    def factor2(y, phi):
        return (1 - y * s2 * math.cos(2 * (c - phi + math.pi / 2))) / 2

    def integrand(phi):
        return sum(x * y * factor1(x, phi) * factor2(y, phi) for x in (1, -1) for y in (1, -1))

    pts = sorted({(v % (2 * math.pi)) for v in (a, c, a + math.pi / 2, c + math.pi / 2)})
    val = integrate.quad(integrand, 0, 2 * math.pi, points=pts, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    grid = np.linspace(0, 2 * math.pi, 4097)
    mins = []
    for x in (1, -1):
        mins.append(np.min((1 - x * s2 * np.cos(2 * (a - grid))) / 2))
        mins.append(np.min((1 - x * s2 * np.cos(2 * (c - grid + math.pi / 2))) / 2))
    return val / (2 * math.pi), float(min(mins))
