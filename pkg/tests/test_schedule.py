import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from consensus_flocking.schedule import (PiecewiseConstantSignal, ScheduleMatrix, gen_isc_star,
                                         gen_pe_matrix, gen_square_pe, validate_isc, validate_pe,
                                         window_integral, write_window_csv)

from .conftest import random_signal

SQUARE = PiecewiseConstantSignal((0.0, 0.5), (1.0, 0.0), 1.0)
ONE = PiecewiseConstantSignal.constant(1.0)
ZERO = PiecewiseConstantSignal.constant(0.0)


def brute_integral(sig, t, T, n=200001):
    # midpoint rule; exact up to O(pieces / n) for step functions
    s = np.linspace(t, t + T, n)
    mids = 0.5 * (s[:-1] + s[1:])
    return float(np.sum(sig(mids)) * (T / (n - 1)))


@pytest.mark.parametrize("sig, t, T, expected", [
    (ONE, 3.0, 2.0, 2.0),
    (SQUARE, 0.0, 1.0, 0.5),
    (SQUARE, 0.25, 1.0, 0.5),
])
def test_window_integral_examples(sig, t, T, expected):
    assert window_integral(sig, t, T) == pytest.approx(expected, abs=1e-15)


def test_window_integral_matches_brute_force():
    rng = np.random.default_rng(3)
    for _ in range(30):
        sig = random_signal(rng)
        t, T = rng.uniform(0, 5), rng.uniform(0.1, 4)
        assert window_integral(sig, t, T) == pytest.approx(brute_integral(sig, t, T), abs=1e-4)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), frac=st.floats(0, 1))
def test_window_integral_additive_and_bounded(seed, frac):
    rng = np.random.default_rng(seed)
    sig = random_signal(rng)
    t, T = rng.uniform(0, 10), rng.uniform(0.01, 5)
    s = frac * T
    whole = window_integral(sig, t, T)
    parts = (window_integral(sig, t, s) if s > 0 else 0.0) + (
        window_integral(sig, t + s, T - s) if T - s > 0 else 0.0)
    assert whole == pytest.approx(parts, abs=1e-12)
    assert -1e-12 <= whole <= T + 1e-12


def test_signal_rejects_out_of_range_values():
    with pytest.raises(ValueError):
        PiecewiseConstantSignal((0.0,), (1.5,), 1.0)
    with pytest.raises(ValueError):
        PiecewiseConstantSignal((0.1,), (0.5,), 1.0)


def test_signal_periodic_evaluation():
    assert SQUARE(0.49) == 1.0
    assert SQUARE(0.5) == 0.0
    assert SQUARE(1.25) == 1.0
    assert SQUARE(1.75) == 0.0


@pytest.mark.parametrize("sig, T, mu, holds, worst", [
    (ONE, 1.0, 0.9, True, 1.0),
    (ZERO, 1.0, 0.1, False, 0.0),
    (SQUARE, 1.0, 0.5, True, 0.5),
])
def test_validate_pe_examples(sig, T, mu, holds, worst):
    res = validate_pe(sig, T, mu)
    assert res.holds is holds
    assert res.worst_value == pytest.approx(worst, abs=1e-12)


def test_validate_pe_finds_true_minimum():
    # brute force over a fine start-time grid never undercuts the validator
    rng = np.random.default_rng(8)
    for _ in range(20):
        sig = random_signal(rng)
        T = float(rng.uniform(0.1, 3))
        res = validate_pe(sig, T, 0.0)
        ts = np.linspace(0, sig.horizon, 4001)
        brute = min(window_integral(sig, t, T) for t in ts)
        assert res.worst_value <= brute + 1e-12
        assert res.worst_value == pytest.approx(window_integral(sig, res.worst_t, T), abs=1e-12)


def test_validate_isc_examples():
    assert validate_isc(ScheduleMatrix.constant(4, 1.0), 1.0, 1.0).holds

    star = ScheduleMatrix(3, {(0, 2): ONE, (1, 2): ONE, (2, 0): ONE, (2, 1): ONE,
                              (0, 1): ZERO, (1, 0): ZERO})
    res = validate_isc(star, 1.0, 1.0)
    assert res.holds and res.witness[(0, 1)] == 2

    pair = ScheduleMatrix(2, {(0, 1): ZERO, (1, 0): ZERO})
    res = validate_isc(pair, 1.0, 0.5)
    assert not res.holds and res.witness[(0, 1)] is None


def test_validate_isc_brute_force_hub_search():
    rng = np.random.default_rng(21)
    for _ in range(20):
        n = int(rng.integers(2, 5))
        sigs = {(i, j): random_signal(rng) for i in range(n) for j in range(n) if i != j}
        m = ScheduleMatrix(n, sigs)
        T, mu = 1.0, float(rng.uniform(0.05, 0.6))
        ts = np.linspace(0, 6, 601)

        def serves(i, k):
            return i == k or all(window_integral(m[i, k], t, T) >= mu - 1e-12 for t in ts)

        expected = all(any(serves(i, k) and serves(j, k) for k in range(n))
                       for i in range(n) for j in range(i + 1, n))
        got = validate_isc(m, T, mu).holds
        # the grid can only miss bad windows, never invent them
        assert got <= expected


@pytest.mark.parametrize("T, mu, phase", [(1.0, 0.25, 0.0), (1.0, 0.25, 0.9), (2.0, 0.7, 0.4),
                                          (3.0, 1.5, 0.6), (1.0, 1.0, 0.0), (2.0, 1.5, 0.0)])
def test_gen_square_pe_passes_validator(T, mu, phase):
    sig = gen_square_pe(T, mu, phase)
    res = validate_pe(sig, T, mu)
    assert res.holds
    assert res.worst_value == pytest.approx(mu, abs=1e-12)


def test_gen_square_pe_examples():
    full = gen_square_pe(1.0, 1.0)
    assert full.is_constant and full.values[0] == 1.0
    q = gen_square_pe(1.0, 0.25, 0.0)
    assert q(0.1) == 1.0 and q(0.3) == 0.0 and q(1.1) == 1.0
    assert validate_pe(q, 1.0, 0.25).worst_value == pytest.approx(0.25)
    fb = gen_square_pe(2.0, 1.5)
    assert fb.is_constant and fb.values[0] == 0.75
    assert window_integral(fb, 0.3, 2.0) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        gen_square_pe(1.0, 1.5)


def test_gen_isc_star_examples():
    m = gen_isc_star(3, 1.0, 1.0, hub=2)
    assert validate_isc(m, 1.0, 1.0).witness[(0, 1)] == 2
    assert m[0, 1].values == (0.0,) and m[0, 2].values == (1.0,)

    two = gen_isc_star(2, 1.0, 1.0, hub=1)
    assert two[0, 1].values == (1.0,) and two[1, 0].values == (1.0,)

    five = gen_isc_star(5, 1.0, 0.5, hub=0, seed=4, duty_phase=None)
    assert validate_isc(five, 1.0, 0.5).holds
    assert not validate_pe(five[1, 2], 1.0, 0.5).holds


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(2, 6))
def test_pe_everywhere_implies_isc(seed, n):
    rng = np.random.default_rng(seed)
    T = float(rng.uniform(0.5, 4))
    mu = float(rng.uniform(0.01, 1)) * T
    m = gen_pe_matrix(n, T, mu, duty_phase=None, seed=seed)
    assert all(validate_pe(m[i, j], T, mu).holds for i, j, _ in m.off_diagonal())
    assert validate_isc(m, T, mu).holds


def test_schedule_file_roundtrip(tmp_path):
    m = gen_isc_star(4, 2.0, 0.5, hub=1, seed=0, duty_phase=None)
    path = tmp_path / "s.json"
    m.dump(path)
    entries = json.loads(path.read_text())
    assert {"i", "j", "breakpoints", "values", "horizon"} <= set(entries[0])
    back = ScheduleMatrix.load(4, path)
    ts = np.linspace(0, 7, 97)
    assert np.array_equal(back.sample(ts), m.sample(ts))


def test_absent_pairs_default_to_one():
    m = ScheduleMatrix.from_entries(3, [{"i": 0, "j": 1, "breakpoints": [0.0], "values": [0.0],
                                         "horizon": 1.0}])
    assert m.at(0.3)[0, 1] == 0.0
    assert m.at(0.3)[1, 0] == 1.0 and m.at(0.3)[2, 2] == 1.0


def test_window_csv(tmp_path):
    m = gen_isc_star(3, 1.0, 0.5, hub=0)
    path = tmp_path / "w.csv"
    write_window_csv(m, 1.0, [0.0, 0.5], path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,i,j,integral"
    assert len(lines) == 1 + 2 * 6
