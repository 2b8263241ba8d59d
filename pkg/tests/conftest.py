"""Shared fixtures.

Everything heavy is session-scoped and computed from scratch: a green
run certifies the code as checked out, with no cached artifacts.  The
deep branches dominate the wall time (a few minutes each at n=512).
"""
import time

import numpy as np
import pytest

from esh.campaigns import (
    CAMPAIGN_LENGTH,
    CAMPAIGN_N,
    campaign_grid,
    first_rung,
    one_peak_branch,
    oscillon_initial,
    scheme_order_study,
    snaking_branch,
)
from esh.continuation import localized_seed, pattern_branch
from esh.diagnostics import maxwell_study
from esh.evolve import EvolveConfig, Scheme, run
from esh.grid import Field, Grid
from esh.model import ModelParams
from esh.steady import newton_stationary


def _timed(timings, name, builder):
    t0 = time.perf_counter()
    obj = builder()
    timings[name] = time.perf_counter() - t0
    return obj


@pytest.fixture(scope="session")
def timings():
    """Wall-clock build time per campaign artifact, keyed by name."""
    return {}


# ---------------------------------------------------------------- deep branches

def _deep(timings, name, p, phi):
    return _timed(timings, name,
                  lambda: snaking_branch(p, phi=phi, max_folds=9))


@pytest.fixture(scope="session")
def snake00_l0(timings):
    return _deep(timings, "snake00_l0", ModelParams(r=-0.20, b=1.8), 0.0)


@pytest.fixture(scope="session")
def snake00_l1(timings):
    return _deep(timings, "snake00_l1", ModelParams(r=-0.20, b=1.8), np.pi)


@pytest.fixture(scope="session")
def snake05_l0(timings):
    return _deep(timings, "snake05_l0",
                 ModelParams(r=-0.20, b=1.8, alpha=0.5), 0.0)


@pytest.fixture(scope="session")
def snake05_l1(timings):
    return _deep(timings, "snake05_l1",
                 ModelParams(r=-0.20, b=1.8, alpha=0.5), np.pi)


@pytest.fixture(scope="session")
def snake01_l0(timings):
    return _deep(timings, "snake01_l0",
                 ModelParams(r=-0.20, b=1.8, alpha=0.1), 0.0)


@pytest.fixture(scope="session")
def snake0102_l0(timings):
    return _deep(timings, "snake0102_l0",
                 ModelParams(r=-0.20, b=1.8, alpha=0.1, beta=0.2), 0.0)


# ---------------------------------------------------------------- one-peak branches

def _one_peak(timings, alpha):
    name = f"onepeak{alpha:g}"
    p = ModelParams(r=-0.20, b=1.8, alpha=alpha)
    return _timed(timings, name, lambda: one_peak_branch(p))


@pytest.fixture(scope="session")
def onepeak01(timings):
    return _one_peak(timings, 0.1)


@pytest.fixture(scope="session")
def onepeak05(timings):
    return _one_peak(timings, 0.5)


@pytest.fixture(scope="session")
def onepeak16(timings):
    return _one_peak(timings, 1.6)


@pytest.fixture(scope="session")
def onepeak20(timings):
    return _one_peak(timings, 2.0)


@pytest.fixture(scope="session")
def onepeak27(timings):
    return _one_peak(timings, 2.7)


@pytest.fixture(scope="session")
def onepeak29(timings):
    return _one_peak(timings, 2.9)


# ---------------------------------------------------------------- rungs

@pytest.fixture(scope="session")
def rung01_pair(onepeak01, timings):
    return (_timed(timings, "rung01p", lambda: first_rung(onepeak01, +1)),
            _timed(timings, "rung01m", lambda: first_rung(onepeak01, -1)))


@pytest.fixture(scope="session")
def rung05_pair(onepeak05, timings):
    return (_timed(timings, "rung05p", lambda: first_rung(onepeak05, +1)),
            _timed(timings, "rung05m", lambda: first_rung(onepeak05, -1)))


# ---------------------------------------------------------------- pointwise campaigns

@pytest.fixture(scope="session")
def maxwell_record(timings):
    return _timed(timings, "maxwell",
                  lambda: maxwell_study(ModelParams(r=-0.2, b=1.8)))


@pytest.fixture(scope="session")
def oscillon_bundle(timings):
    """Kicked one-peak state at the oscillatory instability plus its
    evolution to t=100."""
    p = ModelParams(r=-0.2681, b=1.8, alpha=2.0, beta=0.0)

    def build():
        field, st, freq = oscillon_initial(p)
        cfg = EvolveConfig(dt=0.05, t_end=100.0, scheme=Scheme.ETDRK4,
                           record_stride=40)
        traj = run(field, p, cfg)
        return {"params": p, "field": field, "state": st,
                "freq_linear": freq, "traj": traj}

    return _timed(timings, "oscillon", build)


@pytest.fixture(scope="session")
def order_reference_state():
    """Smooth initial condition for the self-convergence ladders: a
    localized steady state inflated by 5%, so the run has a genuine
    transient without being violent."""
    g = Grid(length=CAMPAIGN_LENGTH, n=256)
    p = ModelParams(r=-0.28, b=1.8)
    st = newton_stationary(localized_seed(g, p.r), p, enforce_even=True)
    return Field(g, st.u.values * 1.05), p


@pytest.fixture(scope="session")
def etdrk4_study(order_reference_state, timings):
    u0, p = order_reference_state
    return _timed(timings, "order_etdrk4",
                  lambda: scheme_order_study(u0, p, Scheme.ETDRK4))


@pytest.fixture(scope="session")
def imex2_study(order_reference_state, timings):
    u0, p = order_reference_state
    return _timed(timings, "order_imex2",
                  lambda: scheme_order_study(u0, p, Scheme.IMEX2))


@pytest.fixture(scope="session")
def pattern_small(timings):
    return _timed(timings, "pattern_small", lambda: pattern_branch(
        ModelParams(r=-0.15, b=1.8), r_start=-0.15, r_stop=-0.004,
        dr=0.01, family="small"))


# ---------------------------------------------------------------- state registry

@pytest.fixture(scope="session")
def stationary_states(snake00_l0, snake00_l1, snake05_l0, snake05_l1,
                      snake01_l0, snake0102_l0, onepeak01, onepeak05,
                      onepeak16, onepeak20, onepeak27, onepeak29,
                      oscillon_bundle):
    """Every stationary state the suite exhibits, as (label, params, state)
    triples: each deep branch subsampled, every annotated one-peak point,
    and the oscillon base state."""
    out = []
    deep = {
        "snake00_l0": snake00_l0, "snake00_l1": snake00_l1,
        "snake05_l0": snake05_l0, "snake05_l1": snake05_l1,
        "snake01_l0": snake01_l0, "snake0102_l0": snake0102_l0,
    }
    for name, br in deep.items():
        for i in range(0, len(br.points), 3):
            pt = br.points[i]
            out.append((f"{name}[{i}]", br.params.with_r(pt.r), pt.state))
    peaks = {
        "onepeak0.1": onepeak01, "onepeak0.5": onepeak05,
        "onepeak1.6": onepeak16, "onepeak2.0": onepeak20,
        "onepeak2.7": onepeak27, "onepeak2.9": onepeak29,
    }
    for name, br in peaks.items():
        for i in range(0, len(br.points), 3):
            pt = br.points[i]
            out.append((f"{name}[{i}]", br.params.with_r(pt.r), pt.state))
    out.append(("oscillon_base", oscillon_bundle["params"],
                oscillon_bundle["state"]))
    return out


# ---------------------------------------------------------------- small helpers

@pytest.fixture(scope="session")
def small_grid():
    return Grid(length=16 * np.pi, n=128)


@pytest.fixture(scope="session")
def small_state(small_grid):
    """A converged localized state on the small grid, for unit tests
    that need a realistic profile without campaign cost."""
    p = ModelParams(r=-0.27, b=1.8)
    st = newton_stationary(localized_seed(small_grid, p.r), p,
                           enforce_even=True)
    return st, p
