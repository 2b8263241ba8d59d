"""Prebuilt parameter campaigns shared by the test suite and the CLI.

These wrap the lower-level modules into the handful of runs that get
repeated constantly: converge a localized state at gradient coefficients
where a cold Newton start fails, trace a snaking branch to a given fold
count, annotate the one-peak segment, follow the first drifting rung,
and measure temporal self-convergence of the steppers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .continuation import (
    Branch,
    ContinuationOptions,
    EventType,
    continue_branch,
    continue_rung,
    detect_bifurcations,
    localized_seed,
)
from .errors import EshError, InsufficientData, NoConvergence
from .evolve import EvolveConfig, Scheme, run
from .grid import Field, Grid
from .model import ModelParams
from .stability import compute_spectrum
from .steady import SteadyState, newton_stationary

#: Domain used by every campaign: wide enough for one- through
#: nine-peak states with negligible wraparound.
CAMPAIGN_LENGTH = 32.0 * np.pi
CAMPAIGN_N = 512


def campaign_grid() -> Grid:
    return Grid(length=CAMPAIGN_LENGTH, n=CAMPAIGN_N)


def ramped_even_state(
    p: ModelParams,
    *,
    phi: float = 0.0,
    grid: Optional[Grid] = None,
    steps: int = 8,
) -> SteadyState:
    """Localized even state at arbitrary gradient coefficients.

    The sech-envelope seed only sits in the Newton basin for small
    alpha/beta, so converge at zero gradient coefficients first and walk
    the coefficients up in a fixed number of increments at constant r.
    """
    g = campaign_grid() if grid is None else grid
    seed = localized_seed(g, p.r, phi=phi)
    st = newton_stationary(seed, p.with_gradients(0.0, 0.0), enforce_even=True)
    if p.alpha == 0.0 and p.beta == 0.0:
        return st
    for w in np.linspace(0.0, 1.0, steps + 1)[1:]:
        st = newton_stationary(
            st.u, p.with_gradients(w * p.alpha, w * p.beta),
            enforce_even=True)
    return st


def stepped_state(
    state: SteadyState,
    p: ModelParams,
    r_target: float,
    *,
    dr: float = 0.01,
) -> SteadyState:
    """Re-converge a state at a nearby abscissa by stepping r in small
    Newton-safe increments."""
    st = state
    r = p.r
    while r != r_target:
        r = min(r + dr, r_target) if r_target > r else max(r - dr, r_target)
        st = newton_stationary(st.u, p.with_r(r), enforce_even=True)
    return st


def snaking_branch(
    p: ModelParams,
    *,
    phi: float = 0.0,
    max_folds: int = 9,
    grid: Optional[Grid] = None,
    label: Optional[str] = None,
    ds_max: float = 0.3,
    max_points: int = 3000,
) -> Branch:
    """Trace a homoclinic snaking branch from its small-amplitude end
    until the requested number of folds has been passed."""
    st = ramped_even_state(p, phi=phi, grid=grid)
    opts = ContinuationOptions(max_folds=max_folds, ds_max=ds_max,
                               max_points=max_points)
    if label is None:
        label = "L0" if abs(phi) < 1e-12 else "L1"
    return continue_branch(st, p, direction=-1, opts=opts, label=label)


def one_peak_branch(
    p: ModelParams,
    *,
    grid: Optional[Grid] = None,
    detect: bool = True,
    stride: int = 4,
    label: str = "L0",
) -> Branch:
    """The lowest snaking segment only (two folds), optionally annotated
    with spectra and secondary bifurcations."""
    br = snaking_branch(p, max_folds=2, grid=grid, label=label)
    if detect:
        br = detect_bifurcations(br, stride=stride)
    return br


def first_rung(branch: Branch, sign: int = 1) -> Branch:
    """Drifting branch from the first symmetry-breaking event."""
    events = branch.events(EventType.PITCHFORK)
    if not events:
        raise InsufficientData("branch carries no symmetry-breaking event")
    return continue_rung(branch, events[0], sign=sign)


def oscillon_initial(
    p: ModelParams,
    *,
    grid: Optional[Grid] = None,
    amplitude: float = 1e-3,
) -> tuple:
    """Unstable one-peak state at p plus a small kick along its leading
    oscillatory eigenfunction; returns (field, state, frequency_guess).

    The state is grown by direct Newton solves from localized seeds.  A
    gradient-coefficient ramp does not work here: the one-peak existence
    window in r sweeps past any fixed abscissa along the ramp path, and
    the iteration slides onto the small-amplitude saddle sibling."""
    g = grid if grid is not None else campaign_grid()
    x = g.nodes
    best = None
    for a0, w in ((1.5, 4.0), (1.4, 4.0), (1.6, 4.0), (1.3, 4.5),
                  (1.5, 3.5), (1.7, 4.5)):
        seed = Field(g, a0 * np.exp(-x ** 2 / (2.0 * w ** 2)) * np.cos(x))
        try:
            st = newton_stationary(seed, p, enforce_even=True)
        except EshError:
            continue
        spec = compute_spectrum(st, p)
        vals = spec.eigenvalues
        cplx = [j for j in range(len(vals)) if vals[j].imag > 0.05]
        if not cplx:
            continue
        j = cplx[int(np.argmax(vals[np.array(cplx)].real))]
        # the pair must not be strongly damped or the kick just rings down
        if vals[j].real < -0.01:
            continue
        best = (st, spec, j)
        break
    if best is None:
        raise InsufficientData("no seed produced a state with an "
                               "oscillatory mode to excite")
    st, spec, j = best
    mode = spec.eigenfunctions[j].real
    mode = mode / np.max(np.abs(mode))
    field = Field(st.grid, st.u.values + amplitude * mode)
    freq = float(abs(spec.eigenvalues[j].imag))
    return field, st, freq


@dataclass
class OrderStudy:
    """Temporal self-convergence record: errors against a much finer
    reference and the observed orders between halvings."""

    scheme: Scheme
    dts: np.ndarray
    errors: np.ndarray
    orders: np.ndarray
    ls_order: float


def scheme_order_study(
    u0: Field,
    p: ModelParams,
    scheme: Scheme,
    *,
    t_end: float = 1.0,
    dt0: float = 0.1,
    n_halvings: int = 2,
    refine: int = 32,
) -> OrderStudy:
    """Run to t_end at dt0/2^j for j=0..n_halvings and compare final
    states against a dt0/refine reference.

    dt0 must divide t_end: the integrator rounds to whole steps, so an
    incommensurate ladder compares states at different end times and
    the measured orders are garbage.  Halvings below ~1e-10 final error
    hit the roundoff floor of the spectral transforms; the defaults
    keep the whole ladder inside the asymptotic window."""
    grid = u0.grid
    if abs(t_end / dt0 - round(t_end / dt0)) > 1e-9:
        raise ValueError(f"dt0={dt0:g} must divide t_end={t_end:g} evenly")

    def final(dt: float) -> np.ndarray:
        cfg = EvolveConfig(dt=dt, t_end=t_end, scheme=scheme,
                           record_stride=10 ** 9)
        traj = run(u0, p, cfg)
        if traj.blowup_time is not None:
            raise NoConvergence(
                f"reference run blew up at t={traj.blowup_time:g}")
        return traj.snapshots[-1]

    ref = final(dt0 / refine)
    dts = np.array([dt0 / 2 ** j for j in range(n_halvings + 1)])
    errors = np.array([
        float(np.sqrt(grid.integrate((final(dt) - ref) ** 2)))
        for dt in dts
    ])
    orders = np.log2(errors[:-1] / errors[1:])
    slope = np.polyfit(np.log(dts), np.log(errors), 1)[0]
    return OrderStudy(scheme=scheme, dts=dts, errors=errors,
                      orders=orders, ls_order=float(slope))
