"""Measurement helpers: norms, interior wavenumber, hysteresis loop
detection, energy-tie location, oscillation frequency.

The loop detector is exercised on hand-built branches whose interior
wavenumbers are imposed analytically, so open and closed cycles have
exact expected outcomes.
"""
import numpy as np
import pytest

from esh.continuation import Branch, BranchPoint, EventType
from esh.diagnostics import (
    interior_wavenumber,
    l2_norm,
    maxwell_point,
    maxwell_study,
    oscillation_frequency,
    wavenumber_loop,
)
from esh.errors import InsufficientData
from esh.grid import Field, Grid, Parity
from esh.model import ModelParams
from esh.steady import SteadyState


@pytest.fixture(scope="module")
def wide_grid():
    return Grid(length=32 * np.pi, n=256)


def test_l2_norm_cosine():
    g = Grid(length=2 * np.pi, n=64)
    # integral of cos^2 over one period is pi
    assert l2_norm(Field(g, np.cos(g.nodes))) == pytest.approx(np.sqrt(np.pi),
                                                               rel=1e-12)
    assert l2_norm(Field(g, np.zeros(g.n))) == 0.0


def test_l2_norm_invariances(wide_grid):
    g = wide_grid
    u = np.exp(-((g.nodes / 9.0) ** 2)) * np.cos(g.nodes)
    base = l2_norm(Field(g, u))
    assert l2_norm(Field(g, np.roll(u, 17))) == pytest.approx(base, rel=1e-12)
    assert l2_norm(Field(g, g.reflect(u))) == pytest.approx(base, rel=1e-12)


def _patch(g, k, x0=0.0, width=12.0):
    x = g.nodes
    d = (x - x0 + g.length / 2) % g.length - g.length / 2
    return Field(g, 1.0 / np.cosh(d / width) * np.cos(k * d))


def test_interior_wavenumber_synthetic(wide_grid):
    for k in (0.95, 1.0, 1.05):
        got = interior_wavenumber(_patch(wide_grid, k))
        assert got == pytest.approx(k, rel=1e-3)


def test_interior_wavenumber_off_center(wide_grid):
    got = interior_wavenumber(_patch(wide_grid, 1.05, x0=20.0))
    assert got == pytest.approx(1.05, rel=1e-3)


def test_interior_wavenumber_needs_crossings(wide_grid):
    g = wide_grid
    # single hump: no interior cells to measure
    one = Field(g, 1.0 / np.cosh(g.nodes / 2.0))
    assert interior_wavenumber(one) is None
    assert interior_wavenumber(Field(g, np.zeros(g.n))) is None


def _loop_branch(g, k_up, k_down):
    """Three-fold cycle; segment r ladders meet at the shared right fold."""
    p = ModelParams(r=-0.3, b=1.8)
    r_lo, r_hi, m = -0.33, -0.26, 7

    def pt(r, k, event=EventType.NONE, side=None):
        st = SteadyState(u=_patch(g, k), c=0.0, residual_norm=0.0,
                         iterations=0, parity=Parity.EVEN)
        extra = {} if side is None else {"fold_side": side}
        return BranchPoint(state=st, r=r, l2norm=l2_norm(st.u),
                           event=event, extra=extra)

    up = np.linspace(r_lo, r_hi, m)
    down = np.linspace(r_hi, r_lo, m)
    pts = [pt(up[0], k_up(up[0]), EventType.FOLD, "left")]
    pts += [pt(r, k_up(r)) for r in up[1:-1]]
    pts.append(pt(r_hi, k_up(r_hi), EventType.FOLD, "right"))
    pts += [pt(r, k_down(r)) for r in down[1:-1]]
    pts.append(pt(down[-1], k_down(down[-1]), EventType.FOLD, "left"))
    return Branch(label="loop", params=p, points=pts)


def test_wavenumber_loop_open(wide_grid):
    # imposed split: half-sine bulge of 0.03, closing at both ends the
    # way adjacent snaking traversals do
    r_lo, r_hi = -0.33, -0.26

    def bulge(r):
        return np.sin(np.pi * (r - r_lo) / (r_hi - r_lo))

    rep = wavenumber_loop(_loop_branch(
        wide_grid,
        lambda r: 1.0 + 0.015 * bulge(r),
        lambda r: 1.0 - 0.015 * bulge(r)))
    assert rep.is_loop
    assert rep.max_split == pytest.approx(0.03, rel=0.1)
    assert rep.mean_signed_split > 0  # upright side carries the larger k
    assert rep.noise < 0.01


def test_wavenumber_loop_closed(wide_grid):
    # identical traversals except for incoherent 1e-4 measurement wiggle
    rep = wavenumber_loop(_loop_branch(
        wide_grid,
        lambda r: 1.0 + 1e-4 * np.sin(200.0 * r),
        lambda r: 1.0 + 1e-4 * np.cos(200.0 * r)))
    assert not rep.is_loop
    assert rep.max_split < 1e-3


def test_wavenumber_loop_needs_three_folds(wide_grid):
    br = _loop_branch(wide_grid, lambda r: 1.0, lambda r: 1.0)
    br.points[-1].event = EventType.NONE
    with pytest.raises(InsufficientData):
        wavenumber_loop(br)


def test_oscillation_frequency_synthetic():
    t = np.arange(0.0, 100.0, 0.05)
    v = np.sin(0.55 * t) * (1.0 + 0.2 * np.cos(0.03 * t))
    assert oscillation_frequency(t, v) == pytest.approx(0.55, abs=0.01)


def test_maxwell_study_record(maxwell_record):
    rec = maxwell_record
    assert -0.42 < rec.r < -0.15
    assert rec.k == pytest.approx(1.0, abs=0.05)
    assert rec.bracket < 1e-7
    assert maxwell_point(ModelParams(r=-0.2, b=1.8)) == pytest.approx(
        rec.r, abs=1e-9)


def test_maxwell_invariant_under_sign_conjugacy(maxwell_record):
    # u -> -u flips b but cannot move an energy tie
    flipped = maxwell_study(ModelParams(r=-0.2, b=1.8).inverted())
    assert flipped.r == pytest.approx(maxwell_record.r, abs=1e-6)
