import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from consensus_flocking.integrate import simulate
from consensus_flocking.metrics import (detect_consensus, diameter, dx_dv, gamma_extrema,
                                        projected_diameter, projected_positions, write_metrics_csv)
from consensus_flocking.model import FirstOrderState, InteractionKernel, SecondOrderState, SystemConfig
from consensus_flocking.schedule import ScheduleMatrix

ONE = InteractionKernel.constant(1.0)
FULL2 = ScheduleMatrix.constant(2, 1.0)


def test_diameter_examples():
    assert diameter([0.0, 1.0]) == 1.0
    assert diameter(np.ones((4, 3))) == 0.0
    assert diameter([[0.0, 0.0], [3.0, 4.0]]) == 5.0


def test_gamma_extrema():
    assert gamma_extrema([-2.0, 3.0]) == (3.0, -2.0)
    gmax, gmin = gamma_extrema([[3.0, 4.0], [0.0, 0.0]])
    assert gmax == 5.0 and gmin is None
    assert gamma_extrema([-1.5, 1.5])[0] == 1.5


def test_dx_dv():
    tr = simulate(SystemConfig(2, 1), ONE, FULL2, SecondOrderState([0.0, 1.0], [0.0, 1.0]), 1.0, 1e-3)
    assert dx_dv(tr, 0.0) == (1.0, 1.0)
    assert abs(dx_dv(tr, 1.0)[1] - math.exp(-1)) < 1e-9
    aligned = simulate(SystemConfig(3, 2), ONE, ScheduleMatrix.constant(3, 1.0),
                       SecondOrderState(np.eye(3)[:, :2], np.ones((3, 2))), 0.5, 0.01)
    assert dx_dv(aligned, 0.5)[1] == 0.0


def test_projected_positions():
    x = np.array([[1.0, 2.0], [3.0, -1.0], [0.5, 0.5]])
    assert projected_positions(x, [0, 0], [1, 0]) == pytest.approx(x[:, 0])
    gap = x[1] - x[0]
    y = projected_positions(x, x[0], gap / np.linalg.norm(gap))
    assert abs(y[1] - y[0]) == pytest.approx(diameter(x[:2]))
    with pytest.raises(ValueError):
        projected_positions(x, [0, 0], [1, 1])


def test_projection_recovers_embedded_line():
    rng = np.random.default_rng(0)
    vals = rng.uniform(-3, 3, 6)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    w = q[:, 0]
    base = rng.normal(size=3)
    x = base + vals[:, None] * w[None, :]
    assert np.max(np.abs(projected_positions(x, base, w) - vals)) < 1e-12


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_projected_diameter_never_exceeds_full(seed):
    rng = np.random.default_rng(seed)
    n, d = int(rng.integers(2, 8)), int(rng.integers(2, 4))
    x = rng.normal(size=(n, d))
    w = rng.normal(size=d)
    w /= np.linalg.norm(w)
    assert projected_diameter(x, rng.normal(size=d), w) <= diameter(x) + 1e-12
    # equality along the normalized gap of a diameter-realizing pair
    dist = np.linalg.norm(x[:, None] - x[None], axis=2)
    i, j = np.unravel_index(np.argmax(dist), dist.shape)
    g = (x[i] - x[j]) / dist[i, j]
    assert projected_diameter(x, x[j], g) == pytest.approx(diameter(x), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_diameter_invariances(seed):
    rng = np.random.default_rng(seed)
    n, d = int(rng.integers(2, 8)), int(rng.integers(2, 4))
    x = rng.normal(size=(n, d))
    q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    ref = diameter(x)
    assert diameter(x[rng.permutation(n)]) == ref
    assert diameter(x + rng.normal(size=d)) == pytest.approx(ref, abs=1e-12)
    assert diameter(x @ q.T) == pytest.approx(ref, abs=1e-12)


def test_detect_consensus():
    still = simulate(SystemConfig(3, 1), ONE, ScheduleMatrix.constant(3, 1.0), FirstOrderState(np.ones(3)), 1.0, 0.1)
    assert detect_consensus(still, 1e-9) == 0.0
    frozen = simulate(SystemConfig(2, 1), ONE, ScheduleMatrix.constant(2, 0.0), FirstOrderState([0.0, 1.0]), 1.0, 0.1)
    assert detect_consensus(frozen, 0.5) is None
    tr = simulate(SystemConfig(2, 1), ONE, FULL2, FirstOrderState([0.0, 1.0]), 3.0, 1e-3)
    t = detect_consensus(tr, math.exp(-2))
    assert t >= 2.0 - 1e-9 and t <= 2.0 + 1e-3 + 1e-9


def test_metrics_csv(tmp_path):
    tr = simulate(SystemConfig(2, 1), ONE, FULL2, SecondOrderState([0.0, 1.0], [0.0, 1.0]), 0.2, 0.1)
    path = tmp_path / "m.csv"
    write_metrics_csv(tr, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,diameter,D_X,D_V,gamma_max"
    assert len(lines) == 1 + len(tr)
