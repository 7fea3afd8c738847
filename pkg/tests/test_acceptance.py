"""Acceptance criteria, one test per criterion; each prints a PASS/FAIL line in the summary."""

import math
import time

import numpy as np
import pytest

from conftest import CRITERIA_LINES
from eprb.data import ConditionLabel, PairDataSet, summary
from eprb.inequalities import chsh_function, eberhard_counts, eberhard_rescaled
from eprb.moments import (
    MomentSet2,
    MomentSet3,
    NoDistributionError,
    k123_interval,
    lemma_I_interval,
    moments,
    pipeline_fine,
    theorem_I,
    trivariate,
)
from eprb.quadruples import count_table, delta_bruteforce, delta_cellwise, delta_lp, delta_naive
from eprb.quantum import (
    circuit_expectations,
    fisher_information,
    nogo_check,
    photon_cell_probabilities,
    photon_correlation,
    singlet_circuit,
    singlet_circuit_native,
    transpile_equivalence,
)
from eprb.coincidence import w_scan
from eprb.rng import RandomStream
from eprb.simulators import (
    bell_toy,
    bell_toy_quartet,
    classical_spins,
    eeprb_generate,
    maxwell_correlation,
    quartet_conditions,
    sample_cells,
    sample_correlated,
    sample_quartet,
    sample_singlet,
    timetag_raw,
    tpm_correlation_analytic,
    tpm_correlation_numeric,
)

N = 10**6
DEG = math.pi / 180
GRID25 = np.linspace(0, math.pi / 2, 25)


def record(label, ok, detail):
    CRITERIA_LINES.append(f"criterion {label}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


def quartet_stats(sets):
    table = count_table(*sets)
    sol = delta_lp(table)
    corr = [summary(d).e12 for d in sets]
    return {
        "S": chsh_function(corr),
        "delta": float(sol.delta),
        "naive": float(delta_naive(*sets)),
        "cellwise": float(delta_cellwise(table)),
    }


@pytest.fixture(scope="module")
def singlet_run():
    start = time.perf_counter()
    conds = quartet_conditions(0, 90 * DEG, 45 * DEG, 135 * DEG)
    sets = sample_quartet(conds, N, lambda c, n, g: sample_singlet(c, n, 1.0, g), RandomStream(2024))
    st = quartet_stats(sets)
    st["seconds"] = time.perf_counter() - start
    return st


def test_criterion_1_singlet_chsh(singlet_run):
    st = singlet_run
    ok = (
        abs(st["S"] - 2.828) <= 0.01
        and abs(st["delta"] - 0.585) <= 0.01
        and abs(4 - 2 * st["delta"] - st["S"]) <= 0.02
        and st["seconds"] <= 60
    )
    record(1, ok, f"S={st['S']:.4f} delta={st['delta']:.4f} 4-2delta={4 - 2 * st['delta']:.4f} time={st['seconds']:.1f}s")


def test_criterion_2_lower_bounds(singlet_run):
    st = singlet_run
    ok = abs(st["naive"] - 0.047) <= 0.01 and abs(st["cellwise"] - 0.292) <= 0.01
    record(2, ok, f"naive={st['naive']:.4f} cellwise={st['cellwise']:.4f}")


def test_criterion_3_quadruple_mode():
    e = eeprb_generate(*(np.array([math.cos(t), math.sin(t), 0.0]) for t in (0, math.pi / 2, math.pi / 4, 3 * math.pi / 4)), N, 31)
    cf = bell_toy_quartet(quartet_conditions(0, math.pi / 4, math.pi / 8, 3 * math.pi / 8), N, RandomStream(32), counterfactual=True)
    a, b = quartet_stats(e), quartet_stats(cf)
    lim = 2 + 3 / math.sqrt(N)
    ok = a["delta"] == 1 and b["delta"] == 1 and a["S"] <= lim and b["S"] <= lim
    record(3, ok, f"eeprb delta={a['delta']} S={a['S']:.4f}; counterfactual delta={b['delta']} S={b['S']:.4f}")


def test_criterion_4_random_data():
    conds = quartet_conditions(0, 1, 2, 3)
    st = quartet_stats(sample_quartet(conds, N, lambda c, n, g: sample_cells(c, n, [0.25] * 4, g), RandomStream(41)))
    eps = (4 - 2 * st["delta"]) / 2 - 1
    record(4, 0 <= eps <= 0.01, f"4-2delta={4 - 2 * st['delta']:.5f} eps={eps:.5f}")


def test_criterion_5a_tpm_wide_window():
    err_wide = max(
        abs(tpm_correlation_numeric(t, d, 1.0) - tpm_correlation_analytic(t, d, "w_ge_t0"))
        for d in (0, 4, 6, 8)
        for t in GRID25
    )
    err_zero = max(
        abs(tpm_correlation_numeric(t, d, 0.0) - tpm_correlation_analytic(t, d)) for d in (0, 4, 6, 8) for t in GRID25
    )
    ok = err_wide <= 1e-6 and err_zero <= 1e-6
    record("5a", ok, f"W=T0 max error {err_wide:.2e}; W->0 limit max error {err_zero:.2e}")


@pytest.mark.xfail(strict=True, reason="at W=1e-6 the d>=4 correlations are still 1e-3 to 1e-2 away from the W->0 forms")
def test_criterion_5b_tpm_small_window():
    err = {
        d: max(abs(tpm_correlation_numeric(t, d, 1e-6) - tpm_correlation_analytic(t, d)) for t in GRID25) for d in (4, 6, 8)
    }
    record("5b", max(err.values()) <= 1e-6, "W=1e-6 max error " + ", ".join(f"d={d}: {v:.2e}" for d, v in err.items()))


def tpm_mc_deviation(theta, seed):
    p1, p2 = timetag_raw([ConditionLabel.planar(1, theta, 0)], 10**7, 4, 1.0, "anti", seed)
    keep = np.abs(p1.t - p2.t) <= 1e-4
    return abs(float(np.mean(p1.x[keep] * p2.x[keep])) + math.cos(2 * theta)), int(keep.sum())


@pytest.fixture(scope="module")
def tpm_mc_runs():
    # the rate of coincidences, hence the statistical error, varies strongly with theta
    thetas = np.linspace(0, math.pi / 2, 7)
    return [(t, *tpm_mc_deviation(t, 530 + i)) for i, t in enumerate(thetas)]


def test_criterion_5c_tpm_monte_carlo_high_rate(tpm_mc_runs):
    rows = [(t, d, k) for t, d, k in tpm_mc_runs if k >= 20000]
    worst = max(d for _, d, _ in rows)
    record("5c", worst <= 0.02, f"{len(rows)} angles with >=2e4 pairs: max |e12 + cos 2theta| = {worst:.4f}")


@pytest.mark.xfail(strict=True, reason="near theta=pi/4 only ~3e3 of 1e7 emissions coincide, so sigma is ~0.018")
def test_criterion_5d_tpm_monte_carlo_all_angles(tpm_mc_runs):
    t, d, k = max(tpm_mc_runs, key=lambda r: r[1])
    record("5d", d <= 0.02, f"7-point grid: max |e12 + cos 2theta| = {d:.4f} at theta={t:.3f} from {k} pairs")


def correlated_quartet(c, seed):
    conds = quartet_conditions(0, 1, 2, 3)
    gens = RandomStream(seed)
    cs = (c, -c, c, c)
    sets = tuple(sample_correlated(cd, N, v, gens.substream(i)) for i, (cd, v) in enumerate(zip(conds, cs)))
    return quartet_stats(sets)


def test_criterion_6a_super_cirelson_080():
    st = correlated_quartet(0.80, 61)
    ok = abs(st["S"] - 3.20) <= 0.01 and abs(4 - 2 * st["delta"] - st["S"]) <= 0.02
    record("6a", ok, f"c=0.80 S={st['S']:.4f} 4-2delta={4 - 2 * st['delta']:.4f}")


@pytest.mark.xfail(strict=True, reason="c=0.83 gives S=4c=3.32; the quoted 3.34 belongs to c=0.834")
def test_criterion_6b_super_cirelson_083():
    st = correlated_quartet(0.83, 62)
    ok = abs(st["S"] - 3.34) <= 0.01 and abs(4 - 2 * st["delta"] - st["S"]) <= 0.02
    record("6b", ok, f"c=0.83 S={st['S']:.4f} 4-2delta={4 - 2 * st['delta']:.4f}")


def test_criterion_6c_super_cirelson_d8_value():
    c = -tpm_correlation_analytic(math.pi / 8, 8)
    st = correlated_quartet(c, 63)
    ok = round(4 * c, 2) == 3.34 and abs(st["S"] - 3.34) <= 0.01 and abs(4 - 2 * st["delta"] - st["S"]) <= 0.02
    record("6c", ok, f"c={c:.5f} S={st['S']:.4f} 4-2delta={4 - 2 * st['delta']:.4f}")


def test_criterion_7_modified_toy():
    devs = []
    for i, t in enumerate((0.0, 0.4, 1.0)):
        e = summary(bell_toy(ConditionLabel.planar(1, t, 0), N, 70 + i, malus=True)).e12
        devs.append(abs(e + 0.5 * math.cos(2 * t)))
    st = quartet_stats(bell_toy_quartet(quartet_conditions(0, math.pi / 4, math.pi / 8, 3 * math.pi / 8), N, RandomStream(73), True))
    ok = max(devs) <= 0.005 and abs(st["S"] - 1.41) <= 0.02 and abs(4 - 2 * st["delta"] - 2) <= 0.02
    record(7, ok, f"max e12 dev={max(devs):.4f} S={st['S']:.4f} 4-2delta={4 - 2 * st['delta']:.4f}")


def test_criterion_8_eberhard():
    trials = (875683790, 875518074, 875882007, 875700279)
    j, upper = eberhard_counts(141439, 67941, 58742, 8392, trials)
    ok = f"{j:.2e}" == "7.27e-06" and f"{upper:.8f}" == "0.99999273"
    record(8, ok, f"j/N={j:.3e} delta<={upper:.8f} rescaled={eberhard_rescaled((141439, 67941, 58742, 8392), trials)}")


def test_criterion_9_giustina_state():
    r = -2.9
    a, b, c, d = (v * DEG for v in (94.4, 62.4, -6.5, 25.5))
    pairs = ((a, c), (a, d), (b, c), (b, d))
    s_q = chsh_function([photon_correlation(r, x, y) for x, y in pairs])
    conds = quartet_conditions(a, b, c, d)
    sets = sample_quartet(
        conds, N, lambda cd, n, g: sample_cells(cd, n, photon_cell_probabilities(r, cd.setting1, cd.setting2), g), RandomStream(91)
    )
    st = quartet_stats(sets)
    ok = (
        abs(s_q - 2.34) <= 0.01
        and abs(st["delta"] - 0.829) <= 0.01
        and abs(st["naive"] - 0.275) <= 0.01
        and abs(st["cellwise"] - 0.491) <= 0.01
    )
    record(9, ok, f"S={s_q:.4f} delta={st['delta']:.4f} naive={st['naive']:.4f} cellwise={st['cellwise']:.4f}")


def test_criterion_10_lp_oracle():
    g = np.random.default_rng(10)
    mismatches = 0
    for _ in range(1000):
        n = int(g.integers(1, 7))
        conds = quartet_conditions(0, 1, 2, 3)
        sets = tuple(PairDataSet(cd, g.choice([1, -1], n), g.choice([1, -1], n)) for cd in conds)
        if delta_lp(count_table(*sets)).delta != delta_bruteforce(*sets):
            mismatches += 1
    record(10, mismatches == 0, f"{mismatches} mismatches in 1000 datasets")


def random_valid_set3(g):
    f = g.dirichlet(np.full(8, 0.3)).reshape(2, 2, 2)
    k = moments(f)
    return MomentSet3(k[(1,)], k[(2,)], k[(3,)], k[(1, 2)], k[(1, 3)], k[(2, 3)])


def random_chsh_quartet(g):
    """Compatible bivariates: singles uniform, correlations uniform in their admissible range."""
    while True:
        k = {(i,): g.uniform(-1, 1) for i in (1, 2, 3, 4)}
        for i, j in ((1, 3), (1, 4), (2, 3), (2, 4)):
            lo = -1 + abs(k[(i,)] + k[(j,)])
            hi = 1 - abs(k[(i,)] - k[(j,)])
            k[(i, j)] = g.uniform(lo, hi)
        c13, c14, c23, c24 = k[(1, 3)], k[(1, 4)], k[(2, 3)], k[(2, 4)]
        if abs(c13 - c14) + abs(c23 + c24) <= 2 and abs(c13 + c14) + abs(c23 - c24) <= 2:
            return k


def test_criterion_11_fine_machinery():
    g = np.random.default_rng(11)
    bad3 = 0
    for _ in range(10**4):
        m = random_valid_set3(g)
        lo, hi = k123_interval(m)
        if lo > hi or trivariate(m).min() < -1e-12:
            bad3 += 1
    bad4, worst = 0, 0.0
    for _ in range(10**4):
        k = random_chsh_quartet(g)
        bivs = []
        for i, j in ((1, 3), (1, 4), (2, 3), (2, 4)):
            ok, f = theorem_I(MomentSet2(k[(i,)], k[(j,)], k[(i, j)]))
            bivs.append(f)
        try:
            out = pipeline_fine(*bivs)
        except (NoDistributionError, ValueError):
            bad4 += 1
            continue
        km = moments(out)
        worst = max(worst, max(abs(km[key] - v) for key, v in k.items()))
    r = 1 / math.sqrt(2)
    try:
        lemma_I_interval({(3,): 0, (4,): 0, (1, 3): -r, (1, 4): r, (2, 3): -r, (2, 4): -r})
        singlet_detected = False
    except NoDistributionError:
        singlet_detected = True
    ok = bad3 == 0 and bad4 == 0 and worst <= 1e-12 and singlet_detected
    record(
        11,
        ok,
        f"trivariate failures={bad3} pipeline failures={bad4} max moment error={worst:.1e} singlet empty={singlet_detected}",
    )


def test_criterion_12_nogo():
    wrong, err = 0, 0.0
    for q in np.linspace(-2, 2, 201):
        valid, eig = nogo_check(q)
        expected = sorted([(1 + 3 * q) / 4] + [(1 - q) / 4] * 3)
        err = max(err, float(np.max(np.abs(eig - expected))))
        if valid != (-1 / 3 - 1e-12 <= q <= 1 + 1e-12):
            wrong += 1
    record(12, wrong == 0 and err <= 1e-12, f"misclassified={wrong} eigenvalue error={err:.1e}")


def test_criterion_13_circuit():
    grid = np.arange(16) * (2 * math.pi / 16)
    e_err = max(
        abs(circuit_expectations(singlet_circuit(a, b)).e12 + math.cos(a - b)) for a in grid for b in grid
    )
    t_err = max(transpile_equivalence(singlet_circuit(a, b), singlet_circuit_native(a, b)) for a in grid for b in grid)
    record(
        13,
        e_err <= 1e-12 and t_err <= 1e-12,
        f"e12 error={e_err:.1e} transpile error={t_err:.1e} (hardware values are comparison-only)",
    )


def test_criterion_14_classical_models():
    devs = []
    for i, t in enumerate((0.0, 0.5, 1.2)):
        st = maxwell_correlation(ConditionLabel.planar(1, t, 0), N, math.pi / 2, "exp", 140 + i)
        devs.append(abs(st.e12 + math.cos(2 * t)))
    a = np.array([0.0, 0.0, 1.0])
    for i, c in enumerate(([0, 0, 1.0], [1.0, 0, 0], [0.6, 0, 0.8])):
        st = classical_spins(ConditionLabel.spin(1, a, c), N, "exp4", 150 + i)
        devs.append(abs(st.e12 + float(a @ np.array(c))))
    record(14, max(devs) <= 0.01, f"max deviation {max(devs):.4f}")


def test_criterion_15_fisher():
    worst = 0.0
    phi = 0.3
    for n in (1, 2):
        grid = [t for t in np.linspace(0, math.pi, 60) if abs(math.cos(n * t + phi)) < 0.95]
        vals = fisher_information(lambda t: math.cos(n * t + phi), grid)
        worst = max(worst, max(abs(v - n * n) for v in vals))
    record(15, worst <= 1e-8, f"max |I_F - n^2| = {worst:.1e}")


def test_criterion_16_coincidence_scan():
    s1, s2 = timetag_raw(quartet_conditions(0, math.pi / 4, math.pi / 8, 3 * math.pi / 8), 10**7, 4, 1.0, "anti", 16)
    grid = np.geomspace(1e-4, 1.0, 25)
    rows = w_scan(s1, s2, grid)
    s = np.array([r.s for r in rows])
    above = s > 2
    crossings = int(np.count_nonzero(above[1:] != above[:-1]))
    # rank correlation of S with W
    rho = float(np.corrcoef(np.argsort(np.argsort(s)), np.arange(s.size))[0, 1])
    ok = s[0] >= 2.7 and s[-1] <= 1.5 and crossings == 1 and rho < -0.9
    record(16, ok, f"S(1e-4)={s[0]:.3f} S(1)={s[-1]:.3f} crossings of 2={crossings} rank corr={rho:.3f}")
