"""Campaign helper mechanics on the cheap grid.

The production campaigns themselves (deep branches, rung following,
the oscillatory kick) are exercised end to end by the acceptance suite;
here only the plumbing contracts are pinned.
"""
import numpy as np
import pytest

from esh.campaigns import (
    CAMPAIGN_LENGTH,
    CAMPAIGN_N,
    campaign_grid,
    ramped_even_state,
    scheme_order_study,
    stepped_state,
)
from esh.errors import InsufficientData
from esh.evolve import Scheme
from esh.grid import Field, Parity
from esh.model import ModelParams, rhs_values
from esh.steady import newton_tolerance


def test_campaign_grid_constants():
    g = campaign_grid()
    assert g.length == pytest.approx(CAMPAIGN_LENGTH)
    assert g.n == CAMPAIGN_N
    assert CAMPAIGN_LENGTH == pytest.approx(32 * np.pi)
    assert CAMPAIGN_N == 512


def test_ramped_state_zero_gradients_shortcut(small_grid):
    p = ModelParams(r=-0.27, b=1.8)
    st = ramped_even_state(p, grid=small_grid)
    assert st.parity is Parity.EVEN
    assert st.residual_norm < newton_tolerance(st.u.values)
    assert np.max(np.abs(st.u.values)) > 0.5


def test_ramped_state_reaches_gradient_coefficients(small_grid):
    # r must stay inside the one-peak existence window along the whole
    # coefficient ramp; at r = -0.28 that holds up to alpha ~ 0.2
    p = ModelParams(r=-0.28, b=1.8, alpha=0.2, beta=0.0)
    st = ramped_even_state(p, grid=small_grid)
    res = rhs_values(small_grid, st.u.values, p)
    assert np.max(np.abs(res)) < 1e-7
    assert st.parity is Parity.EVEN


def test_stepped_state_round_trip(small_grid):
    p = ModelParams(r=-0.27, b=1.8)
    st = ramped_even_state(p, grid=small_grid)
    moved = stepped_state(st, p, -0.285)
    res = rhs_values(small_grid, moved.u.values, p.with_r(-0.285))
    assert np.max(np.abs(res)) < 1e-7
    assert np.max(np.abs(moved.u.values)) > 0.5  # stayed on the branch
    back = stepped_state(moved, p.with_r(-0.285), -0.27)
    assert np.max(np.abs(back.u.values - st.u.values)) < 1e-8


def test_order_study_requires_commensurate_times(small_grid):
    p = ModelParams(r=-0.27, b=1.8)
    u0 = Field(small_grid, 0.1 * np.cos(small_grid.nodes))
    with pytest.raises(ValueError):
        scheme_order_study(u0, p, Scheme.ETDRK4, dt0=0.3, t_end=1.0)


def test_order_study_output_shape(small_grid):
    p = ModelParams(r=-0.27, b=1.8)
    st = ramped_even_state(p, grid=small_grid)
    u0 = Field(small_grid, st.u.values * 1.2)
    study = scheme_order_study(u0, p, Scheme.IMEX2, dt0=0.1, t_end=0.5,
                               n_halvings=2, refine=16)
    assert study.scheme is Scheme.IMEX2
    assert len(study.dts) == 3
    assert len(study.errors) == 3
    assert len(study.orders) == 2
    assert np.all(np.diff(study.errors) < 0)  # refinement helps
    assert study.ls_order == pytest.approx(2.0, abs=0.5)
