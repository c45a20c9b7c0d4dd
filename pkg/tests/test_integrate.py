import math

import numpy as np
import pytest

from consensus_flocking import _backend
from consensus_flocking.integrate import NumericalError, simulate, step_times
from consensus_flocking.metrics import diameters
from consensus_flocking.model import FirstOrderState, InteractionKernel, SecondOrderState, SystemConfig
from consensus_flocking.schedule import ScheduleMatrix, gen_isc_star, gen_pe_matrix

from .conftest import random_kernel

ONE = InteractionKernel.constant(1.0)
PAIR = SystemConfig(2, 1)
FULL2 = ScheduleMatrix.constant(2, 1.0)


def oracle_error(h, backend, t=1.0):
    tr = simulate(PAIR, ONE, FULL2, FirstOrderState([0.0, 1.0]), t, h, backend=backend)
    return abs(diameters(tr.positions)[-1] - math.exp(-t))


def test_two_agent_closed_form(backend):
    tr = simulate(PAIR, ONE, FULL2, FirstOrderState([0.0, 1.0]), 2.0, 1e-3, backend=backend)
    diam = diameters(tr.positions)
    for t in (0.5, 1.0, 2.0):
        k = tr.index_at(t)
        assert tr.times[k] == pytest.approx(t, abs=1e-12)
        assert abs(diam[k] - math.exp(-t)) < 1e-9


def test_rk4_order(backend):
    # step sizes large enough that truncation error dominates round-off
    ratios = [oracle_error(h, backend) / oracle_error(h / 2, backend) for h in (0.2, 0.1, 0.05)]
    assert min(ratios) >= 12
    assert ratios[-1] == pytest.approx(16, rel=0.1)


def test_trajectory_times():
    m = gen_pe_matrix(3, 1.0, 0.3, duty_phase=0.35)
    tr = simulate(SystemConfig(3, 1), ONE, m, FirstOrderState([0.0, 1.0, 2.0]), 2.5, 0.1)
    assert tr.times[0] == 0.0 and tr.times[-1] == 2.5
    assert np.all(np.diff(tr.times) > 0)
    assert np.all(np.diff(tr.times) <= 0.1 + 1e-12)
    for bp in (0.35, 0.65, 1.35, 1.65, 2.35):
        assert np.min(np.abs(tr.times - bp)) < 1e-12


def test_step_times_hits_breakpoints_exactly():
    m = gen_isc_star(3, 0.7, 0.2, hub=0, seed=1, duty_phase=None)
    times = step_times(m, 5.0, 0.01)
    for bp in m.breakpoints_in(0.0, 5.0):
        if 0 < bp < 5:
            assert bp in times


def test_no_communication_is_constant(backend):
    rng = np.random.default_rng(0)
    x0 = rng.normal(size=(4, 2))
    tr = simulate(SystemConfig(4, 2), ONE, ScheduleMatrix.constant(4, 0.0), FirstOrderState(x0), 1.0, 0.01,
                  backend=backend)
    assert np.all(tr.positions == x0)


def test_consensus_start_is_constant(backend):
    x0 = np.tile([0.4, -1.0], (3, 1))
    tr = simulate(SystemConfig(3, 2, scaling="normalized"), InteractionKernel.powerlaw(1, 1),
                  gen_pe_matrix(3, 1.0, 0.4), FirstOrderState(x0), 1.0, 0.01, backend=backend)
    assert np.all(tr.positions == x0)


@pytest.mark.skipif(_backend.compiled is None, reason="compiled core not built")
@pytest.mark.parametrize("seed", range(12))
def test_backends_agree(seed):
    rng = np.random.default_rng(seed)
    n, d = int(rng.integers(2, 6)), int(rng.integers(1, 4))
    scaling = ["fixed", "normalized"][seed % 2]
    cfg = SystemConfig(n, d, scaling=scaling, window=1.0, service=0.4)
    k = random_kernel(rng)
    m = gen_pe_matrix(n, 1.0, 0.4, duty_phase=None, seed=seed)
    if seed % 3 == 0:
        state = SecondOrderState(rng.normal(size=(n, d)), rng.normal(size=(n, d)))
    else:
        state = FirstOrderState(rng.normal(size=(n, d)))
    a = simulate(cfg, k, m, state, 3.0, 0.01, backend="python")
    b = simulate(cfg, k, m, state, 3.0, 0.01, backend="cython")
    assert np.array_equal(a.times, b.times)
    np.testing.assert_allclose(a.positions, b.positions, rtol=0, atol=1e-12)
    if state.__class__ is SecondOrderState:
        np.testing.assert_allclose(a.velocities, b.velocities, rtol=0, atol=1e-12)


def test_sign_reversal_trajectory(backend):
    rng = np.random.default_rng(5)
    cfg = SystemConfig(4, 2, scaling="normalized", window=1.0, service=0.3)
    m = gen_pe_matrix(4, 1.0, 0.3, duty_phase=None, seed=5)
    x0 = rng.normal(size=(4, 2))
    a = simulate(cfg, InteractionKernel.powerlaw(1, 1), m, FirstOrderState(x0), 2.0, 0.01, backend=backend)
    b = simulate(cfg, InteractionKernel.powerlaw(1, 1), m, FirstOrderState(-x0), 2.0, 0.01, backend=backend)
    np.testing.assert_allclose(b.positions, -a.positions, rtol=0, atol=1e-12)


def test_non_finite_state_aborts(monkeypatch):
    from consensus_flocking import _fallback

    def bad_rhs(x, *args):
        return np.full_like(x, np.inf)

    monkeypatch.setattr(_fallback, "rhs_first", bad_rhs)
    with pytest.raises(NumericalError):
        simulate(PAIR, ONE, FULL2, FirstOrderState([0.0, 1.0]), 1.0, 0.1, backend="python")


def test_default_step_and_metadata():
    tr = simulate(SystemConfig(2, 1, window=2.0, service=1.0), ONE, FULL2, FirstOrderState([0.0, 1.0]), 0.1,
                  seed=4, config_hash="abc")
    assert tr.metadata["step"] == pytest.approx(2e-3)
    assert tr.metadata["seed"] == 4 and tr.metadata["config_hash"] == "abc"


def test_trajectory_csv(tmp_path):
    tr = simulate(PAIR, ONE, FULL2, SecondOrderState([0.0, 1.0], [0.0, 1.0]), 0.1, 0.05)
    path = tmp_path / "t.csv"
    tr.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,agent_index,x_1,v_1"
    assert len(lines) == 1 + 2 * len(tr)
