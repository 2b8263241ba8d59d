"""Measurements on states and branches: norms, interior wavenumbers,
wavenumber hysteresis along a snaking branch, and the parameter value
where the periodic pattern and the flat state exchange energetic
preference."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .continuation import Branch, _CellProblem, pattern_branch
from .errors import InsufficientData, NoConvergence, NoRoot, SingularJacobian
from .grid import Field, Grid
from .model import ModelParams


def l2_norm(field: Field) -> float:
    u = field.values
    return float(np.sqrt(field.grid.integrate(u * u)))


def _zero_crossings(grid: Grid, u: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Crossing abscissae of u through zero where the mask holds, located
    by a local cubic fit and polished with the trigonometric interpolant."""
    x = grid.nodes
    idx = [i for i in range(grid.n - 1)
           if mask[i] and mask[i + 1] and u[i] * u[i + 1] < 0.0]
    out = []
    for i in idx:
        lo = max(i - 1, 0)
        hi = min(i + 3, grid.n)
        coef = np.polyfit(x[lo:hi] - x[i], u[lo:hi], min(3, hi - lo - 1))
        roots = np.roots(coef)
        real = [z.real for z in roots
                if abs(z.imag) < 1e-8 and -1e-9 <= z.real <= grid.dx + 1e-9]
        xc = x[i] + (real[0] if real else
                     grid.dx * u[i] / (u[i] - u[i + 1]))
        for _ in range(3):
            val = grid.interpolate(u, np.array([xc]))[0]
            der = grid.interpolate(u, np.array([xc]), deriv=1)[0]
            if der == 0.0:
                break
            step = val / der
            if abs(step) > grid.dx:
                break
            xc -= step
        out.append(xc)
    return np.array(out)


def interior_wavenumber(
    field: Field,
    *,
    envelope_window: float = 8.0,
    envelope_level: float = 0.25,
    min_crossings: int = 6,
    core_count: int = 4,
) -> Optional[float]:
    """Local wavenumber in the core of a localized patch, from the mean
    spacing of the ``core_count`` zero crossings nearest the peak (half
    a wavelength each).

    The window is a fixed crossing count, not a fixed fraction of the
    patch: states on successive snaking excursions differ by one cell,
    and a proportional window would sample different shoulder mixes on
    the two traversals, burying the genuine splits under a window
    artifact two orders larger.

    Returns None when the profile has too few interior oscillations to
    define one."""
    grid = field.grid
    u = field.values
    amp = float(np.max(np.abs(u)))
    if amp == 0.0:
        return None
    half_w = max(int(round(0.5 * envelope_window / grid.dx)), 1)
    padded = np.concatenate([np.abs(u[-half_w:]), np.abs(u),
                             np.abs(u[:half_w])])
    env = np.array([padded[i: i + 2 * half_w + 1].max()
                    for i in range(grid.n)])
    mask = env > envelope_level * amp
    xc = _zero_crossings(grid, u, mask)
    if len(xc) < min_crossings:
        return None
    # innermost crossings relative to the peak, periodic-aware
    x_peak = grid.nodes[int(np.argmax(np.abs(u)))]
    rel = (xc - x_peak + 0.5 * grid.length) % grid.length - 0.5 * grid.length
    order = np.argsort(np.abs(rel))
    core = np.sort(rel[order[:core_count]])
    spacing = (core[-1] - core[0]) / (len(core) - 1)
    return float(np.pi / spacing)


@dataclass
class LoopReport:
    """Wavenumber hysteresis over one snaking cycle.

    A cycle covers the same parameter window twice: once on a segment
    climbing toward the right fold ("upright") and once on a segment
    climbing toward the left fold ("upleft").  When the loop is open the
    two traversals carry different interior wavenumbers; ``max_split``
    is the largest gap between them on the shared window and ``noise``
    the measurement scatter of the individual traversals."""

    is_loop: bool
    max_split: float
    noise: float
    r_shared: np.ndarray
    k_upright: np.ndarray
    k_upleft: np.ndarray
    r_upright_raw: np.ndarray
    k_upright_raw: np.ndarray
    r_upleft_raw: np.ndarray
    k_upleft_raw: np.ndarray

    @property
    def mean_signed_split(self) -> float:
        """Mean of k_upright - k_upleft on the shared window; positive
        when the segment heading for the right fold carries the larger
        wavenumber."""
        return float(np.mean(self.k_upright - self.k_upleft))


def wavenumber_loop(branch: Branch, *, split_factor: float = 5.0) -> LoopReport:
    """Measure the interior-wavenumber loop over the last complete
    snaking cycle (between the last three detected folds)."""
    folds = branch.fold_indices
    if len(folds) < 3:
        raise InsufficientData(
            f"wavenumber loop needs >= 3 folds, branch has {len(folds)}")
    i0, i1, i2 = folds[-3], folds[-2], folds[-1]

    def seg(lo: int, hi: int):
        rs, ks = [], []
        for pt in branch.points[lo: hi + 1]:
            k = interior_wavenumber(pt.state.u)
            if k is not None:
                rs.append(pt.r)
                ks.append(k)
        return np.array(rs), np.array(ks)

    r_a, k_a = seg(i0, i1)
    r_b, k_b = seg(i1, i2)
    if len(r_a) < 4 or len(r_b) < 4:
        raise InsufficientData("too few wavenumber samples on a segment")

    # a segment that starts at a left fold climbs toward the right fold
    side0 = branch.points[i0].extra.get("fold_side")
    if side0 is None:
        side0 = "left" if branch.points[i0].r < branch.points[i1].r else "right"
    if side0 == "left":
        r_ur, k_ur, r_ul, k_ul = r_a, k_a, r_b, k_b
    else:
        r_ur, k_ur, r_ul, k_ul = r_b, k_b, r_a, k_a

    def ordered(rs, ks):
        order = np.argsort(rs)
        return rs[order], ks[order]

    rur_s, kur_s = ordered(r_ur, k_ur)
    rul_s, kul_s = ordered(r_ul, k_ul)
    lo = max(rur_s[0], rul_s[0])
    hi = min(rur_s[-1], rul_s[-1])
    if hi <= lo:
        raise InsufficientData("snaking segments share no parameter window")
    r_shared = np.linspace(lo, hi, 64)
    k_upright = np.interp(r_shared, rur_s, kur_s)
    k_upleft = np.interp(r_shared, rul_s, kul_s)

    def scatter(rs, ks):
        if len(rs) < 4:
            return np.inf
        fit = np.polyfit(rs, ks, 2)
        return float(np.std(ks - np.polyval(fit, rs)))

    gap = np.abs(k_upright - k_upleft)
    # the two traversals only share one fold; at the other end they sit a
    # full excursion apart and close only asymptotically, so the endpoint
    # mismatch calibrates the finite-width noise floor rather than the loop
    trim = max(len(r_shared) // 10, 1)
    noise = max(scatter(rur_s, kur_s), scatter(rul_s, kul_s),
                float(gap[0]), float(gap[-1]))
    split = float(np.max(gap[trim:-trim]))
    return LoopReport(
        is_loop=bool(split > split_factor * noise),
        max_split=split,
        noise=noise,
        r_shared=r_shared,
        k_upright=k_upright,
        k_upleft=k_upleft,
        r_upright_raw=r_ur,
        k_upright_raw=k_ur,
        r_upleft_raw=r_ul,
        k_upleft_raw=k_ul,
    )


@dataclass
class MaxwellPoint:
    r: float
    k: float
    bracket: float


def maxwell_study(
    p: ModelParams,
    *,
    r_hi: float = -0.15,
    r_lo: float = -0.42,
    tol: float = 1e-8,
    n_cell: int = 64,
) -> MaxwellPoint:
    """Parameter value where the energy per period of the zero-invariant
    periodic pattern vanishes, i.e. where pattern and flat state tie.
    Returns the location together with the selected wavenumber there.

    A coarse march brackets the sign change of the energy, then the
    bracket is bisected with warm-started cell solves."""
    branch = pattern_branch(p, r_start=r_hi, r_stop=r_lo, dr=0.01,
                            n_cell=n_cell)
    rs = branch.metadata["rs"]
    fs = branch.metadata["f_values"]
    flips = np.where(np.sign(fs[:-1]) != np.sign(fs[1:]))[0]
    if len(flips) == 0:
        raise NoRoot(
            f"pattern energy does not change sign on [{rs[-1]:.3f}, "
            f"{rs[0]:.3f}]")
    i = int(flips[0])
    cell = _CellProblem(p, n_cell)
    g = cell.grid

    def pack(j: int) -> np.ndarray:
        pt = branch.points[j]
        return np.concatenate([g.to_half(pt.state.u.values),
                               [pt.extra["k"]]])

    r_a, f_a, zk_a = float(rs[i]), float(fs[i]), pack(i)
    r_b, f_b = float(rs[i + 1]), float(fs[i + 1])
    while abs(r_b - r_a) > tol:
        r_m = 0.5 * (r_a + r_b)
        try:
            zk_m = cell.solve(zk_a, r_m)
        except (NoConvergence, SingularJacobian) as exc:
            raise NoRoot(f"cell solve failed during bisection: {exc}")
        u_m = g.from_half(zk_m[:-1])
        f_m = cell.f_per_period(u_m, float(zk_m[-1]), r_m)
        if f_m == 0.0:
            r_a = r_b = r_m
            f_a = f_m
            zk_a = zk_m
            break
        if np.sign(f_m) == np.sign(f_a):
            r_a, f_a, zk_a = r_m, f_m, zk_m
        else:
            r_b, f_b = r_m, f_m
    r_star = r_a - f_a * (r_b - r_a) / (f_b - f_a) if f_b != f_a else r_a
    zk_star = cell.solve(zk_a, r_star)
    return MaxwellPoint(r=float(r_star), k=float(zk_star[-1]),
                        bracket=float(abs(r_b - r_a)))


def maxwell_point(p: ModelParams, **kwargs) -> float:
    """Location of the pattern/flat energy tie; see maxwell_study for
    the full record."""
    return maxwell_study(p, **kwargs).r


def oscillation_frequency(times: np.ndarray, values: np.ndarray) -> float:
    """Angular frequency of a time series from the mean spacing of its
    upward mean crossings."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(times) != len(values) or len(times) < 8:
        raise InsufficientData("need matching series of at least 8 samples")
    y = values - values.mean()
    ups = []
    for i in range(len(y) - 1):
        if y[i] < 0.0 <= y[i + 1]:
            frac = y[i] / (y[i] - y[i + 1])
            ups.append(times[i] + frac * (times[i + 1] - times[i]))
    if len(ups) < 2:
        raise InsufficientData("fewer than two mean crossings in the series")
    period = (ups[-1] - ups[0]) / (len(ups) - 1)
    return float(2.0 * np.pi / period)
