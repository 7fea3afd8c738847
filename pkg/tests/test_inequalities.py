import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eprb.data import FrequencyTable
from eprb.inequalities import (
    basic_inequality_witness,
    bell_triple_check,
    ch_bounds,
    ch_data,
    chsh_function,
    eberhard_counts,
    eberhard_rescaled,
    model_free_check,
    statistical_tol,
    triple_equivalent,
)

unit = st.floats(-1, 1, allow_nan=False)
quartets = st.tuples(unit, unit, unit, unit)
R2 = 1 / math.sqrt(2)


def table(probs, n=10**6):
    cells = ((1, 1), (1, -1), (-1, 1), (-1, -1))
    return FrequencyTable({c: round(p * n) for c, p in zip(cells, probs)}, n)


def test_chsh_examples():
    assert chsh_function((1, -1, 1, 1)) == 4
    assert chsh_function((0, 0, 0, 0)) == 0
    assert chsh_function((-R2, R2, -R2, -R2)) == pytest.approx(2 * math.sqrt(2), abs=1e-12)


def test_chsh_accepts_mapping_and_checks_range():
    assert chsh_function({1: 1, 2: -1, 3: 1, 4: 1}) == 4
    with pytest.raises(ValueError):
        chsh_function((1.5, 0, 0, 0))


@given(quartets, st.permutations(range(4)))
def test_chsh_symmetries(q, perm):
    s = chsh_function(q)
    assert chsh_function([q[i] for i in perm]) == pytest.approx(s, abs=1e-12)
    assert chsh_function([-v for v in q]) == pytest.approx(s, abs=1e-12)


@given(st.lists(st.tuples(*(st.sampled_from([1, -1]),) * 4), min_size=1, max_size=50))
def test_quadruple_data_never_exceeds_two(rows):
    x, y, z, w = (np.array(col, dtype=float) for col in zip(*rows))
    c = [float(np.mean(x * z)), float(np.mean(x * w)), float(np.mean(y * z)), float(np.mean(y * w))]
    assert chsh_function(c) <= 2 + 1e-12


def test_model_free_examples():
    r = model_free_check((-1, 1, -1, -1), 1.0)
    assert r.bound == 2 and r.lhs_minus == 4 and not r.satisfied
    assert model_free_check((1, -1, 1, 1), 0.0).satisfied
    r = model_free_check((-R2, R2, -R2, -R2), 2 - math.sqrt(2))
    assert r.satisfied
    assert r.bound == pytest.approx(r.s_chsh, abs=1e-12)
    with pytest.raises(ValueError):
        model_free_check((0, 0, 0, 0), 1.2)


def test_bell_triple_examples():
    assert bell_triple_check(0.7, -0.7, -0.4, 1.0)
    assert not bell_triple_check(0.7, -0.7, 0.4, 1.0)
    assert bell_triple_check(1, 1, -1, 0.0)


def test_eberhard_published_counts():
    trials = (875683790, 875518074, 875882007, 875700279)
    counts = (141439, 67941, 58742, 8392)
    assert eberhard_rescaled(counts, trials) == [141441, 67955, 58730, 8392]
    j, upper = eberhard_counts(*counts, trials)
    assert f"{j:.2e}" == "7.27e-06"
    assert f"{upper:.8f}" == "0.99999273"


def test_eberhard_trivial_cases():
    assert eberhard_counts(0, 0, 0, 0, (5, 5, 5, 5)) == (0.0, 1.0)
    assert eberhard_counts(2, 1, 1, 0, (4, 4, 4, 4)) == (0.0, 1.0)
    with pytest.raises(ValueError):
        eberhard_counts(0, 0, 0, 0, (0, 1, 1, 1))


def test_ch_data_examples():
    uniform = table([0.25] * 4)
    assert ch_data(uniform, uniform, uniform, uniform, 1, 1) == pytest.approx(-0.5)
    # singlet cells (1 - x y a.c)/4 at planar angles 0, 90, 45, 135
    angles = ((0, 45), (0, 135), (90, 45), (90, 135))
    tabs = []
    for a, c in angles:
        ac = math.cos(math.radians(a - c))
        tabs.append(table([(1 - x * y * ac) / 4 for x, y in ((1, 1), (1, -1), (-1, 1), (-1, -1))], 10**9))
    assert ch_data(*tabs, 1, 1) == pytest.approx(-0.5 - 2 * math.sqrt(2) / 4, abs=1e-8)


def test_ch_bounds():
    assert ch_bounds(1.0) == (-1.0, 0.0)
    assert ch_bounds(0.0) == (-1.5, 0.5)


def test_basic_witness_examples():
    assert basic_inequality_witness(1, 1, 1, -1)
    assert basic_inequality_witness(0, 0, 0, 0)
    with pytest.raises(ValueError):
        basic_inequality_witness(1.1, 0, 0, 0)


def test_basic_witness_random_sweep():
    rng = np.random.default_rng(3)
    for x, y, z, w in rng.uniform(-1, 1, (10**5, 4)):
        assert basic_inequality_witness(x, y, z, w)


@given(unit, unit, unit)
def test_triple_equivalence(a, b, c):
    res = triple_equivalent(a, b, c, tol=0.0)
    if res[0]:
        loose = triple_equivalent(a, b, c, tol=1e-12)
        assert all(loose)


def test_triple_equivalence_sweep():
    rng = np.random.default_rng(4)
    for a, b, c in rng.uniform(-1, 1, (10**4, 3)):
        first, second, third = triple_equivalent(a, b, c, tol=1e-12)
        assert first == second == third


def test_statistical_tol():
    assert statistical_tol(10**6) == pytest.approx(0.003)
