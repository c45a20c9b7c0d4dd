import sys

import numpy as np
import pytest

from consensus_flocking import _backend
from consensus_flocking.model import InteractionKernel
from consensus_flocking.schedule import PiecewiseConstantSignal, ScheduleMatrix

BACKENDS = ["python"] + (["cython"] if _backend.compiled is not None else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


def random_kernel(rng, decreasing=False):
    family = rng.integers(3)
    if family == 0:
        return InteractionKernel.constant(rng.uniform(0.2, 2.0))
    if family == 1:
        return InteractionKernel.powerlaw(rng.uniform(0.2, 2.0), rng.uniform(0.0, 2.0))
    bp = np.concatenate(([0.0], np.sort(rng.uniform(0.1, 5.0, 4))))
    vals = rng.uniform(0.1, 2.0, bp.size)
    if decreasing:
        vals = np.sort(vals)[::-1]
    return InteractionKernel.tabulated(bp, vals)


def random_signal(rng, max_pieces=6):
    k = int(rng.integers(1, max_pieces + 1))
    horizon = float(rng.uniform(0.3, 3.0))
    bp = np.unique(np.concatenate(([0.0], np.sort(rng.uniform(0, horizon, k - 1)))))
    vals = rng.uniform(0, 1, bp.size)
    vals[rng.uniform(size=bp.size) < 0.3] = 0.0
    return PiecewiseConstantSignal(tuple(bp), tuple(vals), horizon)


def random_schedule(rng, n):
    return ScheduleMatrix(n, {(i, j): random_signal(rng) for i in range(n) for j in range(n) if i != j})


def pytest_terminal_summary(terminalreporter):
    acc = sys.modules.get(__package__ + ".test_acceptance")
    if acc is not None and acc.RESULTS:
        terminalreporter.section("acceptance criteria")
        for num in sorted(acc.RESULTS):
            ok, detail = acc.RESULTS[num]
            terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
