"""Time integration: stiff linear part handled exactly or implicitly.

Two schemes are provided.  The fourth-order exponential scheme evaluates
the phi-function coefficients by a contour integral (mean over a circle
of points around each stiff eigenvalue), which is the standard stable way
to avoid cancellation for small |z|.  The second-order scheme is the
semi-implicit backward-differentiation variant: implicit two-step BDF on
the linear part, explicit extrapolation of the nonlinearity.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import BlowUp, NonFiniteInput
from .grid import Field, Grid, _check_finite
from .model import ModelParams, _linear_multiplier, free_energy, nonlinear_values


class Scheme(enum.Enum):
    ETDRK4 = "etdrk4"
    IMEX2 = "imex2"


@dataclass(frozen=True)
class EvolveConfig:
    """Time-stepping configuration.

    ``record_stride``: snapshots kept every that many steps (monitors are
    recorded every step).  The effective end time is rounded to a whole
    number of steps.
    """

    dt: float = 0.1
    t_end: float = 10.0
    scheme: Scheme = Scheme.ETDRK4
    record_stride: int = 10
    monitor_energy: bool = True
    monitor_norm: bool = True
    monitor_midpoint: bool = True

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (np.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")


@dataclass
class Trajectory:
    """Recorded output of a time integration run."""

    grid: Grid
    params: ModelParams
    config: EvolveConfig
    snapshot_times: np.ndarray = dc_field(repr=False)
    snapshots: np.ndarray = dc_field(repr=False)
    monitor_times: np.ndarray = dc_field(repr=False)
    monitors: dict = dc_field(repr=False)
    blowup_time: Optional[float] = None

    @property
    def final_state(self) -> Field:
        return Field(self.grid, self.snapshots[-1].copy())


class _Etdrk4Stepper:
    """One-step fourth-order exponential integrator in spectrum space."""

    def __init__(self, grid: Grid, p: ModelParams, dt: float, n_contour: int = 32):
        self.grid, self.p, self.dt = grid, p, dt
        lin = _linear_multiplier(grid, p)
        self.e_full = np.exp(dt * lin)
        self.e_half = np.exp(0.5 * dt * lin)
        j = np.arange(n_contour)
        circle = np.exp(1j * np.pi * (j + 0.5) / n_contour)
        z = dt * lin[:, None] + circle[None, :]
        ez = np.exp(z)
        self.q = dt * ((np.exp(0.5 * z) - 1.0) / z).mean(axis=1).real
        self.f1 = dt * (
            (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z ** 3
        ).mean(axis=1).real
        self.f2 = dt * ((2.0 + z + ez * (-2.0 + z)) / z ** 3).mean(axis=1).real
        self.f3 = dt * (
            (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z ** 3
        ).mean(axis=1).real

    def _nonlin(self, spec: np.ndarray) -> np.ndarray:
        u = self.grid.irfft(spec)
        return self.grid.rfft(nonlinear_values(self.grid, u, self.p))

    def step_spectrum(self, v: np.ndarray) -> np.ndarray:
        nv = self._nonlin(v)
        a = self.e_half * v + self.q * nv
        na = self._nonlin(a)
        b = self.e_half * v + self.q * na
        nb = self._nonlin(b)
        c = self.e_half * a + self.q * (2.0 * nb - nv)
        nc = self._nonlin(c)
        return self.e_full * v + self.f1 * nv + 2.0 * self.f2 * (na + nb) \
            + self.f3 * nc


class _Imex2Stepper:
    """Two-step semi-implicit BDF; the first step is semi-implicit Euler."""

    def __init__(self, grid: Grid, p: ModelParams, dt: float):
        self.grid, self.p, self.dt = grid, p, dt
        lin = _linear_multiplier(grid, p)
        self.euler_den = 1.0 - dt * lin
        self.bdf_den = 3.0 - 2.0 * dt * lin
        self.prev_spec = None
        self.prev_nonlin = None

    def _nonlin(self, spec: np.ndarray) -> np.ndarray:
        u = self.grid.irfft(spec)
        return self.grid.rfft(nonlinear_values(self.grid, u, self.p))

    def step_spectrum(self, v: np.ndarray) -> np.ndarray:
        nv = self._nonlin(v)
        if self.prev_spec is None:
            out = (v + self.dt * nv) / self.euler_den
        else:
            out = (
                4.0 * v - self.prev_spec
                + 2.0 * self.dt * (2.0 * nv - self.prev_nonlin)
            ) / self.bdf_den
        self.prev_spec = v
        self.prev_nonlin = nv
        return out


def _make_stepper(grid: Grid, p: ModelParams, dt: float, scheme: Scheme):
    if scheme is Scheme.ETDRK4:
        return _Etdrk4Stepper(grid, p, dt)
    return _Imex2Stepper(grid, p, dt)


@lru_cache(maxsize=8)
def _cached_etdrk4(grid: Grid, p: ModelParams, dt: float) -> _Etdrk4Stepper:
    return _Etdrk4Stepper(grid, p, dt)


def step(u: Field, p: ModelParams, dt: float, scheme: Scheme = Scheme.ETDRK4) -> Field:
    """Advance a field by a single time step.

    For the two-step scheme a single detached step reduces to its
    semi-implicit Euler startup.  Raises BlowUp if the result is not
    finite.
    """
    _check_finite(u)
    if not (np.isfinite(dt) and dt > 0):
        raise ValueError(f"dt must be positive, got {dt}")
    if scheme is Scheme.ETDRK4:
        stepper = _cached_etdrk4(u.grid, p, dt)
    else:
        stepper = _make_stepper(u.grid, p, dt, scheme)
    out = u.grid.irfft(stepper.step_spectrum(u.grid.rfft(u.values)))
    if not np.all(np.isfinite(out)):
        raise BlowUp(0.0)
    return Field(u.grid, out)


def run(u0: Field, p: ModelParams, cfg: EvolveConfig) -> Trajectory:
    """Integrate from u0 for cfg.t_end, recording monitors every step.

    On loss of finiteness the run stops and the partial trajectory is
    returned with ``blowup_time`` set to the last finite time.
    """
    _check_finite(u0)
    grid = u0.grid
    n_steps = max(1, int(round(cfg.t_end / cfg.dt)))
    stepper = _make_stepper(grid, p, cfg.dt, cfg.scheme)

    with_energy = cfg.monitor_energy and p.is_variational
    mon_names = []
    if with_energy:
        mon_names.append("energy")
    if cfg.monitor_norm:
        mon_names.append("norm")
    if cfg.monitor_midpoint:
        mon_names.append("midpoint")
    monitors = {name: [] for name in mon_names}
    mon_times = []
    snap_times = [0.0]
    snaps = [u0.values.copy()]

    def record_monitors(t: float, vals: np.ndarray) -> None:
        mon_times.append(t)
        if with_energy:
            monitors["energy"].append(free_energy(Field(grid, vals), p))
        if cfg.monitor_norm:
            monitors["norm"].append(
                float(np.sqrt(grid.integrate(vals * vals)))
            )
        if cfg.monitor_midpoint:
            monitors["midpoint"].append(float(vals[grid.n // 2]))

    record_monitors(0.0, u0.values)
    spec = grid.rfft(u0.values)
    blowup_time = None
    t = 0.0
    for i in range(1, n_steps + 1):
        # a blowing-up step overflows before the finiteness check trips
        with np.errstate(over="ignore", invalid="ignore"):
            spec = stepper.step_spectrum(spec)
            vals = grid.irfft(spec)
        t = i * cfg.dt
        if not np.all(np.isfinite(vals)):
            blowup_time = (i - 1) * cfg.dt
            break
        record_monitors(t, vals)
        if i % cfg.record_stride == 0 or i == n_steps:
            snap_times.append(t)
            snaps.append(vals.copy())

    return Trajectory(
        grid=grid,
        params=p,
        config=cfg,
        snapshot_times=np.array(snap_times),
        snapshots=np.array(snaps),
        monitor_times=np.array(mon_times),
        monitors={k: np.array(v) for k, v in monitors.items()},
        blowup_time=blowup_time,
    )
