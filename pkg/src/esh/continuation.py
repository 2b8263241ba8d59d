"""Pseudo-arclength continuation of steady and drifting branches.

The driver follows Keller's scheme: secant predictor, bordered Newton
corrector on a hyperplane normal to the tangent, step adaptation on
corrector effort.  Reflection-symmetric branches are continued in the
half-grid representation (which also removes the translation null
direction); asymmetric branches carry the drift speed as an unknown with
an integral phase condition.  Folds are flagged by sign changes of the
secant dr/ds and refined by successive parabolic fits along the branch
chord; symmetry-breaking and oscillatory instabilities are located by
bisection on eigenvalue indicators.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field as dc_field, replace
from typing import Callable, List, Optional

import numpy as np
import scipy.linalg as sla

from .errors import (
    InsufficientData,
    InvalidSeed,
    NoConvergence,
    SingularJacobian,
    StallError,
    UnsupportedParameters,
    WrongEventType,
)
from .grid import Field, Grid, Parity
from .model import LinearizedOperator, ModelParams, rhs_values
from .steady import (
    SteadyState,
    detect_parity,
    newton_stationary,
    newton_tolerance,
    travelling_jacobian,
    travelling_residual,
)
from .stability import (
    Spectrum,
    compute_spectrum,
    odd_real_indicator,
    oscillatory_frequency,
    oscillatory_indicator,
)


class EventType(enum.Enum):
    NONE = "none"
    FOLD = "fold"
    PITCHFORK = "pitchfork"
    HOPF = "hopf"


@dataclass
class BranchPoint:
    """One accepted continuation point with optional annotations."""

    state: SteadyState
    r: float
    l2norm: float
    event: EventType = EventType.NONE
    counts: Optional[tuple] = None
    extra: dict = dc_field(default_factory=dict)


@dataclass
class Branch:
    """An ordered set of continuation points at fixed (b, alpha, beta)."""

    label: str
    params: ModelParams
    points: List[BranchPoint]
    metadata: dict = dc_field(default_factory=dict)

    @property
    def rs(self) -> np.ndarray:
        return np.array([pt.r for pt in self.points])

    @property
    def norms(self) -> np.ndarray:
        return np.array([pt.l2norm for pt in self.points])

    @property
    def cs(self) -> np.ndarray:
        return np.array([pt.state.c for pt in self.points])

    @property
    def fold_indices(self) -> List[int]:
        return [i for i, pt in enumerate(self.points)
                if pt.event is EventType.FOLD]

    def events(self, kind: Optional[EventType] = None) -> List[int]:
        return [
            i for i, pt in enumerate(self.points)
            if pt.event is not EventType.NONE
            and (kind is None or pt.event is kind)
        ]


@dataclass
class SnakingRegion:
    """Snaking-region estimate from aligned fold abscissae."""

    r_left: float
    r_right: float
    left_spread: float
    right_spread: float
    left_folds: np.ndarray
    right_folds: np.ndarray
    n_folds: int

    @property
    def width(self) -> float:
        return self.r_right - self.r_left


@dataclass(frozen=True)
class ContinuationOptions:
    ds0: float = 0.02
    ds_min: float = 1e-4
    ds_max: float = 0.5
    max_points: int = 3000
    max_folds: Optional[int] = None
    r_min: Optional[float] = None
    r_max: Optional[float] = None
    max_amplitude: float = 8.0
    min_norm: Optional[float] = None
    corrector_max_iter: int = 10
    detect_folds: bool = True
    refine_folds: bool = True
    fold_tol_r: float = 1e-5
    #: travelling branches: stop once |c| exceeded c_arm and fell back
    #: below c_stop (the far end of a rung).
    c_stop: Optional[float] = None
    c_arm: float = 5e-4


# --------------------------------------------------------------------------
# Problem flavours: map between raw unknown vectors and states.


class _EvenProblem:
    """Unknowns (half-grid values of an even field, r)."""

    mode = "even"

    def __init__(self, grid: Grid, p: ModelParams):
        self.grid = grid
        self.p = p
        w = np.empty(grid.half_n + 1)
        w[: grid.half_n] = grid.dx * grid.half_weights
        w[-1] = 1.0
        self.weights = w

    def pack(self, state: SteadyState, r: float) -> np.ndarray:
        return np.concatenate([self.grid.to_half(state.u.values), [r]])

    def full_u(self, z: np.ndarray) -> np.ndarray:
        return self.grid.from_half(z[:-1])

    def r_of(self, z: np.ndarray) -> float:
        return float(z[-1])

    def c_of(self, z: np.ndarray) -> float:
        return 0.0

    def residual(self, z: np.ndarray) -> np.ndarray:
        u = self.full_u(z)
        return self.grid.to_half(
            rhs_values(self.grid, u, self.p.with_r(self.r_of(z)))
        )

    def jacobian(self, z: np.ndarray) -> np.ndarray:
        u = self.full_u(z)
        op = LinearizedOperator(self.grid, u, self.p.with_r(self.r_of(z)))
        jac = np.empty((self.grid.half_n, self.grid.half_n + 1))
        jac[:, :-1] = op.even_matrix()
        jac[:, -1] = z[: self.grid.half_n]  # d rhs / dr = u
        return jac

    def tolerance(self, z: np.ndarray) -> float:
        return newton_tolerance(z[:-1])

    def make_state(self, z: np.ndarray) -> SteadyState:
        u = self.full_u(z)
        res = rhs_values(self.grid, u, self.p.with_r(self.r_of(z)))
        return SteadyState(
            u=Field(self.grid, u),
            c=0.0,
            residual_norm=float(np.max(np.abs(res))),
            iterations=0,
            parity=Parity.EVEN,
        )

    def on_accept(self, z: np.ndarray) -> None:
        pass


class _TravellingProblem:
    """Unknowns (field values, drift speed c, r) with a phase condition
    anchored at the previously accepted profile."""

    mode = "travelling"

    def __init__(self, grid: Grid, p: ModelParams, u_ref: np.ndarray):
        self.grid = grid
        self.p = p
        self.set_reference(u_ref)
        w = np.empty(grid.n + 2)
        w[: grid.n] = grid.dx
        w[-2:] = 1.0
        self.weights = w

    def set_reference(self, u_ref: np.ndarray) -> None:
        self.u_ref = u_ref.copy()
        self.u_ref_x = self.grid.deriv(self.u_ref, 1)

    def pack(self, state: SteadyState, r: float) -> np.ndarray:
        return np.concatenate([state.u.values, [state.c, r]])

    def full_u(self, z: np.ndarray) -> np.ndarray:
        return z[:-2]

    def r_of(self, z: np.ndarray) -> float:
        return float(z[-1])

    def c_of(self, z: np.ndarray) -> float:
        return float(z[-2])

    def residual(self, z: np.ndarray) -> np.ndarray:
        return travelling_residual(
            self.grid, z[:-2], self.c_of(z), self.p.with_r(self.r_of(z)),
            self.u_ref, self.u_ref_x,
        )

    def jacobian(self, z: np.ndarray) -> np.ndarray:
        n = self.grid.n
        jac = np.empty((n + 1, n + 2))
        jac[:, : n + 1] = travelling_jacobian(
            self.grid, z[:-2], self.c_of(z), self.p.with_r(self.r_of(z)),
            self.u_ref_x,
        )
        jac[:n, n + 1] = z[:n]  # d rhs / dr = u
        jac[n, n + 1] = 0.0
        return jac

    def tolerance(self, z: np.ndarray) -> float:
        return newton_tolerance(z[:-2])

    def make_state(self, z: np.ndarray) -> SteadyState:
        u = z[:-2].copy()
        res = travelling_residual(
            self.grid, u, self.c_of(z), self.p.with_r(self.r_of(z)),
            self.u_ref, self.u_ref_x,
        )
        return SteadyState(
            u=Field(self.grid, u),
            c=self.c_of(z),
            residual_norm=float(np.max(np.abs(res))),
            iterations=0,
            parity=detect_parity(self.grid, u),
        )

    def on_accept(self, z: np.ndarray) -> None:
        self.set_reference(z[:-2])

    def asymmetry(self, z: np.ndarray) -> float:
        """RMS distance to the nearest reflection-symmetric profile.

        The overlap with the mirror image at every half-grid reflection
        center is the circular self-convolution of u; a parabolic fit
        around its peak handles centers between grid points."""
        u = z[: self.grid.n]
        spec = np.fft.fft(u)
        conv = np.fft.ifft(spec * spec).real
        s0 = int(np.argmax(conv))
        sm, s0v, sp = (conv[(s0 - 1) % self.grid.n], conv[s0],
                       conv[(s0 + 1) % self.grid.n])
        curv = sm - 2.0 * s0v + sp
        best = s0v if curv >= 0 else s0v - (sp - sm) ** 2 / (8.0 * curv)
        u2 = float(np.sum(u * u))
        return float(np.sqrt(max(2.0 * (u2 - best), 0.0) / self.grid.n))


def _problem_for(branch: Branch):
    grid = branch.points[0].state.grid
    if branch.metadata.get("mode") == "travelling":
        return _TravellingProblem(grid, branch.params,
                                  branch.points[0].state.u.values)
    return _EvenProblem(grid, branch.params)


def _pack_point(problem, pt: BranchPoint) -> np.ndarray:
    return problem.pack(pt.state, pt.r)


# --------------------------------------------------------------------------
# Corrector and tangents.


def _wnorm(problem, v: np.ndarray) -> float:
    return float(np.sqrt(np.sum(problem.weights * v * v)))


def _corrector(problem, z_pred: np.ndarray, tangent: np.ndarray,
               max_iter: int = 10):
    """Bordered Newton iteration from the predictor, on the hyperplane
    through z_pred normal (in the weighted metric) to the tangent.

    The Jacobian is frozen at the predictor and refreshed once if
    convergence is slow.  Returns (z, iterations)."""
    z = z_pred.copy()
    arc_row = problem.weights * tangent
    lu = None
    for it in range(max_iter + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            body = problem.residual(z)
        arc = float(arc_row @ (z - z_pred))
        res_norm = max(float(np.max(np.abs(body))), abs(arc))
        if not np.isfinite(res_norm):
            raise NoConvergence("corrector residual lost finiteness", res_norm)
        if res_norm < problem.tolerance(z):
            return z, it
        if it == max_iter:
            raise NoConvergence(
                f"corrector stalled after {it} iterations "
                f"(residual {res_norm:.3e})", res_norm)
        if lu is None or it == 4:
            jac = np.vstack([problem.jacobian(z), arc_row[None, :]])
            try:
                lu = sla.lu_factor(jac)
            except (sla.LinAlgError, ValueError) as exc:
                raise SingularJacobian(str(exc)) from exc
        step_vec = sla.lu_solve(lu, np.concatenate([body, [arc]]))
        z = z - step_vec
    raise AssertionError("unreachable")


def _natural_tangent(problem, z: np.ndarray, direction: int) -> np.ndarray:
    """Branch tangent at a point, oriented so dr/ds has the given sign."""
    m = len(z)
    row = np.zeros(m)
    row[-1] = 1.0
    jac = np.vstack([problem.jacobian(z), row[None, :]])
    e = np.zeros(m)
    e[-1] = 1.0
    try:
        t = sla.lu_solve(sla.lu_factor(jac), e)
    except (sla.LinAlgError, ValueError) as exc:
        raise SingularJacobian(
            "cannot orient initial tangent (start too close to a fold?)"
        ) from exc
    t = t / _wnorm(problem, t)
    if direction and np.sign(t[-1]) != np.sign(direction):
        t = -t
    return t


# --------------------------------------------------------------------------
# Fold refinement.


def _refine_extremum(problem, z_a: np.ndarray, z_b: np.ndarray,
                     find_max: bool, tol_r: float, opts: ContinuationOptions):
    """Extremal-r point on the branch between two nearby points, located
    by successive parabolic fits of r against the chord fraction."""
    chord = z_b - z_a
    t_loc = chord / _wnorm(problem, chord)

    def solve_at(lam: float):
        z, _ = _corrector(problem, z_a + lam * chord, t_loc,
                          opts.corrector_max_iter)
        return z

    sgn = 1.0 if find_max else -1.0
    pts = [(0.0, z_a), (1.0, z_b)]
    try:
        pts.insert(1, (0.5, solve_at(0.5)))
    except (NoConvergence, SingularJacobian):
        return z_a if sgn * problem.r_of(z_a) > sgn * problem.r_of(z_b) else z_b
    for _ in range(20):
        pts.sort(key=lambda q: q[0])
        rvals = [problem.r_of(z) for _, z in pts]
        best = int(np.argmax([sgn * rv for rv in rvals]))
        if best == 0 or best == len(pts) - 1:
            # extremum at an edge of the current set: shrink toward it
            lam_new = (pts[best][0] + pts[min(best + 1, len(pts) - 1) if best == 0
                                          else best - 1][0]) / 2.0
        else:
            lo, mid, hi = pts[best - 1], pts[best], pts[best + 1]
            pts = [lo, mid, hi]
            rl, rm, rh = (problem.r_of(q[1]) for q in pts)
            if abs(rm - rl) < tol_r and abs(rm - rh) < tol_r:
                return mid[1]
            ll, lm, lh = lo[0], mid[0], hi[0]
            denom = (lm - ll) * (rm - rh) - (lm - lh) * (rm - rl)
            if denom == 0:
                lam_new = (ll + lh) / 2.0
            else:
                lam_new = lm - 0.5 * (
                    (lm - ll) ** 2 * (rm - rh) - (lm - lh) ** 2 * (rm - rl)
                ) / denom
            span = lh - ll
            lam_new = float(np.clip(lam_new, ll + 0.02 * span,
                                    lh - 0.02 * span))
            if min(abs(lam_new - q[0]) for q in pts) < 1e-3 * span:
                lam_new = (ll + lh) / 2.0 if abs(lam_new - lm) < 1e-3 * span \
                    else lam_new + 0.05 * span
        try:
            pts.append((lam_new, solve_at(lam_new)))
        except (NoConvergence, SingularJacobian):
            break
    pts.sort(key=lambda q: q[0])
    rvals = [sgn * problem.r_of(z) for _, z in pts]
    return pts[int(np.argmax(rvals))][1]


# --------------------------------------------------------------------------
# Seeds.


def localized_seed(grid: Grid, r: float, phi: float = 0.0,
                   scale: float = 1.0) -> Field:
    """Small-amplitude localized guess: sqrt(-r) sech(x sqrt(-r)/2)
    cos(x + phi).  phi = 0 has a central maximum, phi = pi a central
    minimum (the two symmetric snaking families)."""
    if r >= 0:
        raise InvalidSeed(f"localized seed needs r < 0, got r={r}")
    x = grid.nodes
    amp = np.sqrt(-r)
    return Field(grid, scale * amp / np.cosh(0.5 * amp * x) * np.cos(x + phi))


# --------------------------------------------------------------------------
# Main driver.


def continue_branch(
    seed: SteadyState,
    p: ModelParams,
    direction: int = -1,
    opts: ContinuationOptions = ContinuationOptions(),
    label: str = "custom",
    r0: Optional[float] = None,
    init_tangent: Optional[np.ndarray] = None,
) -> Branch:
    """Trace a branch from a converged seed.

    ``p.r`` (or ``r0``) fixes the starting abscissa.  Even seeds with
    zero drift are continued in the symmetric subspace; everything else
    as a travelling profile.  ``init_tangent``/``prev_vector`` override
    the initial secant (used when switching onto a bifurcating branch).
    """
    if not np.all(np.isfinite(seed.u.values)) or not np.isfinite(seed.c):
        raise InvalidSeed("seed contains non-finite values")
    grid = seed.grid
    r_start = float(p.r if r0 is None else r0)
    travelling = not (seed.parity is Parity.EVEN and seed.c == 0.0)
    if travelling:
        problem = _TravellingProblem(grid, p, seed.u.values)
    else:
        problem = _EvenProblem(grid, p)
    z = problem.pack(seed, r_start)

    points: List[BranchPoint] = []

    def accept(z_acc: np.ndarray, event: EventType = EventType.NONE,
               extra: Optional[dict] = None, position: Optional[int] = None):
        st = problem.make_state(z_acc)
        u = st.u.values
        pt = BranchPoint(
            state=st,
            r=problem.r_of(z_acc),
            l2norm=float(np.sqrt(grid.integrate(u * u))),
            event=event,
            extra=extra or {},
        )
        if position is None:
            points.append(pt)
        else:
            points.insert(position, pt)
        return pt

    # make sure the seed is a genuine branch point
    res0 = problem.residual(z)
    if np.max(np.abs(res0)) > 100.0 * problem.tolerance(z):
        raise InvalidSeed(
            f"seed residual {np.max(np.abs(res0)):.2e} too large; "
            "converge it with a Newton solve first"
        )
    accept(z)

    if init_tangent is not None:
        t = init_tangent / _wnorm(problem, init_tangent)
    else:
        t = _natural_tangent(problem, z, direction)

    ds = opts.ds0
    dr_prev: Optional[float] = None
    z_back2: Optional[np.ndarray] = None  # previously accepted vector
    z_bracket_a: Optional[np.ndarray] = None  # two accepted steps ago
    fold_count = 0
    stop = None
    armed = False
    armed_asym = False
    asym0: Optional[float] = None

    while stop is None and len(points) < opts.max_points:
        # predict / correct with step retries
        while True:
            try:
                z_new, iters = _corrector(problem, z + ds * t, t,
                                          opts.corrector_max_iter)
                break
            except (NoConvergence, SingularJacobian):
                ds *= 0.5
                if ds < opts.ds_min:
                    stop = "stall"
                    break
        if stop is not None:
            break

        dz = z_new - z
        dsn = _wnorm(problem, dz)
        dr = problem.r_of(z_new) - problem.r_of(z)
        t = dz / dsn
        z_back2 = z
        z = z_new
        problem.on_accept(z)
        accept(z)

        if iters <= 3:
            ds = min(ds * 1.5, opts.ds_max)
        elif iters >= 7:
            ds = max(ds * 0.7, opts.ds_min)

        # fold detection: dr sign change over the last two secants puts
        # an extremum of r strictly between z_bracket_a and z_new
        if (opts.detect_folds and dr_prev is not None
                and np.sign(dr) != 0 and np.sign(dr_prev) != 0
                and np.sign(dr) != np.sign(dr_prev)):
            fold_count += 1
            side = "left" if dr > 0 else "right"
            if opts.refine_folds and z_bracket_a is not None:
                z_fold = _refine_extremum(
                    problem, z_bracket_a, z_new, find_max=(side == "right"),
                    tol_r=opts.fold_tol_r, opts=opts,
                )
                d_af = _wnorm(problem, z_fold - z_bracket_a)
                d_ak = _wnorm(problem, z_back2 - z_bracket_a)
                pos = len(points) - 2 if d_af < d_ak else len(points) - 1
                accept(z_fold, event=EventType.FOLD,
                       extra={"fold_side": side}, position=pos)
            else:
                points[-2].event = EventType.FOLD
                points[-2].extra["fold_side"] = side
            if opts.max_folds is not None and fold_count >= opts.max_folds:
                stop = "max_folds"
        dr_prev = dr
        z_bracket_a = z_back2

        # stopping rules
        st = points[-1].state
        amp = float(np.max(np.abs(st.u.values)))
        if amp > opts.max_amplitude:
            stop = "amplitude"
        if opts.min_norm is not None and points[-1].l2norm < opts.min_norm:
            stop = "trivial"
        r_now = points[-1].r
        if opts.r_min is not None and r_now < opts.r_min:
            stop = "r_min"
        if opts.r_max is not None and r_now > opts.r_max:
            stop = "r_max"
        if opts.c_stop is not None and problem.mode == "travelling":
            c_now = abs(st.c)
            asym = problem.asymmetry(z)
            points[-1].extra["asymmetry"] = asym
            if asym0 is None:
                asym0 = max(asym, 1e-12)
            if c_now > opts.c_arm:
                armed = True
            if asym > 5.0 * asym0:
                armed_asym = True
            if armed and c_now < opts.c_stop:
                stop = "c_returned"
            # require the drift to have died down as well, so the final
            # point sits at a genuine branch endpoint
            if armed_asym and asym < asym0 and c_now < opts.c_stop:
                stop = "symmetry_returned"
    if stop is None:
        stop = "max_points"

    branch = Branch(
        label=label,
        params=p,
        points=points,
        metadata={
            "mode": problem.mode,
            "stop_reason": stop,
            "fold_count": fold_count,
            "grid_length": grid.length,
            "grid_n": grid.n,
        },
    )
    if stop == "stall":
        raise StallError(
            f"step size fell below {opts.ds_min:g} after "
            f"{len(points)} accepted points",
            branch=branch,
        )
    return branch


# --------------------------------------------------------------------------
# Snaking-region measurement.


def snaking_region(branch: Branch) -> SnakingRegion:
    """Mean left/right fold abscissae, excluding the first two folds
    (the lowest ones converge to the asymptotic values last)."""
    fold_idx = branch.fold_indices
    if len(fold_idx) < 6:
        raise InsufficientData(
            f"snaking region needs >= 6 folds, branch has {len(fold_idx)}"
        )
    folds = [branch.points[i] for i in fold_idx][2:]
    lefts = np.array([pt.r for pt in folds
                      if pt.extra.get("fold_side") == "left"])
    rights = np.array([pt.r for pt in folds
                       if pt.extra.get("fold_side") == "right"])
    if len(lefts) == 0 or len(rights) == 0:
        raise InsufficientData("need folds on both sides after exclusion")
    return SnakingRegion(
        r_left=float(lefts.mean()),
        r_right=float(rights.mean()),
        left_spread=float(lefts.max() - lefts.min()),
        right_spread=float(rights.max() - rights.min()),
        left_folds=lefts,
        right_folds=rights,
        n_folds=len(fold_idx),
    )


# --------------------------------------------------------------------------
# Bifurcation detection along a branch.


def detect_bifurcations(
    branch: Branch,
    *,
    stride: int = 5,
    n_eigs: int = 64,
    sigma_tol: float = 1e-6,
    refine: bool = True,
    refine_dr: float = 1e-5,
    spectrum_cb: Optional[Callable[[int, Spectrum], None]] = None,
) -> Branch:
    """Annotate a branch with instability counts and refined secondary
    bifurcations (symmetry-breaking and oscillatory).

    Spectra are computed every ``stride`` points; indicator sign changes
    between consecutive samples are bisected with corrector solves until
    the bracket is ``refine_dr`` wide in r.  Returns a new branch with
    event points inserted.
    """
    problem = _problem_for(branch)
    n_pts = len(branch.points)
    sample_idx = sorted(set(range(0, n_pts, stride)) | {n_pts - 1})
    new_points = [replace(pt, extra=dict(pt.extra)) for pt in branch.points]

    spectra = {}
    for i in sample_idx:
        spec = compute_spectrum(branch.points[i].state, branch.params.with_r(
            branch.points[i].r), n_eigs=n_eigs, sigma_tol=sigma_tol)
        spectra[i] = spec
        new_points[i].counts = spec.counts
        if spectrum_cb is not None:
            spectrum_cb(i, spec)

    indicators = (
        (odd_real_indicator, EventType.PITCHFORK),
        (oscillatory_indicator, EventType.HOPF),
    )
    inserted = []  # (after_index, BranchPoint)
    for a, b in zip(sample_idx[:-1], sample_idx[1:]):
        for indicator, ev_type in indicators:
            ga, gb = indicator(spectra[a]), indicator(spectra[b])
            if not (np.isfinite(ga) and np.isfinite(gb)) or ga * gb >= 0:
                continue
            z_a = _pack_point(problem, branch.points[a])
            z_b = _pack_point(problem, branch.points[b])
            g_a, g_b = ga, gb
            spec_a, spec_b = spectra[a], spectra[b]
            if refine:
                for _ in range(30):
                    if abs(problem.r_of(z_a) - problem.r_of(z_b)) < refine_dr:
                        break
                    chord = z_b - z_a
                    t_loc = chord / _wnorm(problem, chord)
                    try:
                        z_m, _ = _corrector(problem, 0.5 * (z_a + z_b), t_loc)
                    except (NoConvergence, SingularJacobian):
                        break
                    spec_m = compute_spectrum(
                        problem.make_state(z_m),
                        branch.params.with_r(problem.r_of(z_m)),
                        n_eigs=n_eigs, sigma_tol=sigma_tol)
                    g_m = indicator(spec_m)
                    if not np.isfinite(g_m):
                        break
                    if g_m * g_a < 0:
                        z_b, g_b, spec_b = z_m, g_m, spec_m
                    else:
                        z_a, g_a, spec_a = z_m, g_m, spec_m
            # the bracket endpoint with the smaller indicator stands in
            # for the event point; r is interpolated across the bracket
            if abs(g_a) <= abs(g_b):
                z_ev, spec_ev = z_a, spec_a
            else:
                z_ev, spec_ev = z_b, spec_b
            r_a, r_b = problem.r_of(z_a), problem.r_of(z_b)
            r_star = r_a - g_a * (r_b - r_a) / (g_b - g_a) \
                if g_b != g_a else r_a
            st_ev = problem.make_state(z_ev)
            extra = {"r_refined": float(r_star)}
            if ev_type is EventType.HOPF:
                extra["frequency"] = oscillatory_frequency(spec_ev)
                vals = spec_ev.eigenvalues[: len(spec_ev.parities)]
                mask = vals.imag != 0.0
                if np.any(mask):
                    j = np.arange(len(vals))[mask][np.argmax(vals[mask].real)]
                    extra["critical_mode"] = spec_ev.eigenfunctions[j]
            else:
                # near the event the phase mode and the translation mode
                # are almost degenerate and the eigensolver mixes them;
                # deflate the translation component out of the candidate
                gold = problem.grid.deriv(st_ev.u.values, 1)
                gold = gold / np.linalg.norm(gold)
                cands = sorted(
                    (j for j in range(len(spec_ev.parities))
                     if j != spec_ev.goldstone_index
                     and spec_ev.eigenvalues[j].imag == 0.0
                     and spec_ev.parities[j] is Parity.ODD),
                    key=lambda j: abs(spec_ev.eigenvalues[j].real))
                for j in cands:
                    vec = spec_ev.eigenfunctions[j].real.copy()
                    vec -= (vec @ gold) * gold
                    nrm = np.linalg.norm(vec)
                    if nrm > 1e-6:
                        extra["critical_mode"] = vec / nrm
                        break
            u = st_ev.u.values
            pt_ev = BranchPoint(
                state=st_ev,
                r=float(r_star),
                l2norm=float(np.sqrt(problem.grid.integrate(u * u))),
                event=ev_type,
                counts=spec_ev.counts,
                extra=extra,
            )
            inserted.append((b, pt_ev))

    for after, pt in sorted(inserted, key=lambda q: q[0], reverse=True):
        new_points.insert(after, pt)
    return Branch(
        label=branch.label,
        params=branch.params,
        points=new_points,
        metadata=dict(branch.metadata),
    )


def branch_switch(branch: Branch, event_index: int, sign: int = 1,
                  delta_scale: float = 1e-2) -> Field:
    """Perturbed guess for the asymmetric branch born at a
    symmetry-breaking event: u* + sign * delta * U_crit, with delta =
    delta_scale * max|u*| and U_crit normalized to unit amplitude."""
    pt = branch.points[event_index]
    if pt.event is not EventType.PITCHFORK:
        raise WrongEventType(
            f"point {event_index} carries event {pt.event}, need "
            f"{EventType.PITCHFORK}"
        )
    mode = pt.extra.get("critical_mode")
    if mode is None:
        raise InsufficientData("event carries no critical eigenfunction")
    direction = np.real(mode).copy()
    gold = pt.state.grid.deriv(pt.state.u.values, 1)
    gold = gold / np.linalg.norm(gold)
    direction -= (direction @ gold) * gold
    if np.max(np.abs(direction)) < 1e-8:
        raise InsufficientData(
            "critical eigenfunction is indistinguishable from a translation")
    direction = direction / np.max(np.abs(direction))
    delta = delta_scale * float(np.max(np.abs(pt.state.u.values)))
    return Field(pt.state.grid,
                 pt.state.u.values + sign * delta * direction)


def continue_rung(
    branch: Branch,
    event_index: int,
    sign: int = 1,
    opts: Optional[ContinuationOptions] = None,
    delta_scale: float = 1e-2,
) -> Branch:
    """Switch onto the drifting branch at a symmetry-breaking event and
    follow it until the drift speed returns to zero at its far end."""
    pt = branch.points[event_index]
    grid = pt.state.grid
    p = branch.params.with_r(pt.r)
    guess = branch_switch(branch, event_index, sign, delta_scale)

    problem = _TravellingProblem(grid, p, pt.state.u.values)
    z_sym = np.concatenate([pt.state.u.values, [0.0, pt.r]])
    z_pred = np.concatenate([guess.values, [0.0, pt.r]])
    t0 = z_pred - z_sym
    t0 = t0 / _wnorm(problem, t0)
    try:
        z0, _ = _corrector(problem, z_pred, t0, max_iter=15)
    except (NoConvergence, SingularJacobian) as exc:
        raise InvalidSeed(f"could not land on the drifting branch: {exc}")
    asym = z0[: grid.n] - grid.reflect(z0[: grid.n])
    if float(np.max(np.abs(asym))) < 0.1 * delta_scale * float(
            np.max(np.abs(pt.state.u.values))):
        raise InvalidSeed("corrector fell back onto the symmetric state; "
                          "try a larger delta_scale")
    if opts is None:
        opts = ContinuationOptions(ds0=0.01, ds_max=0.1, c_stop=1e-4)
    elif opts.c_stop is None:
        opts = replace(opts, c_stop=1e-4)
    seed_state = problem.make_state(z0)
    rung = continue_branch(
        seed_state,
        p,
        direction=0,
        opts=opts,
        label=f"rung{'+' if sign > 0 else '-'}",
        r0=problem.r_of(z0),
        init_tangent=(z0 - z_sym),
    )
    # the branch genuinely starts at the symmetry-breaking point itself,
    # where the drift speed is exactly zero
    u_sym = pt.state.u.values
    rung.points.insert(0, BranchPoint(
        state=pt.state,
        r=pt.r,
        l2norm=float(np.sqrt(grid.integrate(u_sym * u_sym))),
        event=EventType.PITCHFORK,
        counts=pt.counts,
        extra={"r_refined": pt.extra.get("r_refined", pt.r)},
    ))
    rung.metadata["parent_event_index"] = event_index
    rung.metadata["sign"] = sign
    return rung


# --------------------------------------------------------------------------
# The spatially periodic (cellular) branch with zero spatial invariant.


@dataclass
class PatternPoint:
    r: float
    k: float
    profile: np.ndarray
    f_per_period: float
    l2norm: float


class _CellProblem:
    """Steady one-wavelength pattern in the rescaled cell xi = k x of
    length 2 pi, with unknown wavenumber k; conservative case only.

    Unknowns: even half-profile plus k.  Equations: the steady equation
    on the half-grid plus the vanishing of the cell-mean spatial
    invariant.  The small dense Jacobian is built by forward differences.
    """

    def __init__(self, p: ModelParams, n_cell: int = 64):
        if p.alpha != 0.0 or p.beta != 0.0:
            raise UnsupportedParameters(
                "the zero-invariant pattern branch requires alpha = beta = 0"
            )
        self.p = p
        self.grid = Grid(length=2.0 * np.pi, n=n_cell)
        self.m = self.grid.half_n + 1  # unknowns: half profile + k

    def _steady(self, u: np.ndarray, k: float, r: float) -> np.ndarray:
        g = self.grid
        spec = g.rfft(u)
        mode = np.arange(g.n // 2 + 1)
        lin = r - (1.0 - (k * mode) ** 2) ** 2
        out = g.irfft(spec * lin)
        usq = g.dealiased_product(u, u)
        return out + self.p.b * usq - g.dealiased_product(usq, u)

    def invariant_mean(self, u: np.ndarray, k: float, r: float) -> float:
        g = self.grid
        ux = k * g.deriv(u, 1)
        uxx = k * k * g.deriv(u, 2)
        uxxx = k ** 3 * g.deriv(u, 3)
        h = -0.5 * (r - 1.0) * u * u + ux * ux - 0.5 * uxx * uxx \
            + ux * uxxx - (self.p.b / 3.0) * u ** 3 + 0.25 * u ** 4
        return float(h.mean())

    def f_per_period(self, u: np.ndarray, k: float, r: float) -> float:
        g = self.grid
        lin = u + k * k * g.deriv(u, 2)
        dens = -0.5 * r * u * u + 0.5 * lin * lin \
            - (self.p.b / 3.0) * u ** 3 + 0.25 * u ** 4
        return float(dens.mean() * 2.0 * np.pi / k)

    def residual(self, zk: np.ndarray, r: float) -> np.ndarray:
        g = self.grid
        u = g.from_half(zk[:-1])
        k = float(zk[-1])
        return np.concatenate([
            g.to_half(self._steady(u, k, r)),
            [self.invariant_mean(u, k, r)],
        ])

    def solve(self, zk0: np.ndarray, r: float, max_iter: int = 30) -> np.ndarray:
        zk = zk0.copy()
        fd_eps = 1e-7
        mode = np.arange(self.grid.n // 2 + 1)
        for it in range(max_iter + 1):
            with np.errstate(over="ignore", invalid="ignore"):
                res = self.residual(zk, r)
            res_norm = float(np.max(np.abs(res)))
            if not np.isfinite(res_norm):
                raise NoConvergence("cell residual lost finiteness", res_norm)
            # the biquadratic multiplier amplifies the spectral noise
            # floor, so the achievable residual scales with its norm
            opnorm = float(np.max(np.abs(r - (1.0 - (zk[-1] * mode) ** 2) ** 2)))
            tol = np.finfo(float).eps * max(opnorm, 1e3) \
                * (1.0 + float(np.max(np.abs(zk[:-1]))))
            if res_norm < tol:
                return zk
            if it == max_iter:
                raise NoConvergence(
                    f"cell Newton stalled (residual {res_norm:.3e})", res_norm)
            jac = np.empty((self.m, self.m))
            for j in range(self.m):
                step_j = fd_eps * (1.0 + abs(zk[j]))
                zp = zk.copy()
                zp[j] += step_j
                jac[:, j] = (self.residual(zp, r) - res) / step_j
            try:
                zk = zk - sla.lu_solve(sla.lu_factor(jac), res)
            except (sla.LinAlgError, ValueError) as exc:
                raise SingularJacobian(str(exc)) from exc
        raise AssertionError("unreachable")


def pattern_branch(
    p: ModelParams,
    *,
    r_start: float = -0.15,
    r_stop: float = -0.45,
    dr: float = 0.01,
    n_cell: int = 64,
    k_init: float = 1.0,
    family: str = "large",
    stop_cb: Optional[Callable[[PatternPoint], bool]] = None,
) -> Branch:
    """March the zero-invariant periodic branch in r, recording the
    selected wavenumber and the free energy per period.

    ``family`` picks the amplitude root: "large" for the branch the
    energy comparison wants, "small" for the one that connects to the
    zero state at onset.  The march runs from r_start to r_stop in
    either direction with adaptive step reduction on Newton failures.
    ``stop_cb`` may terminate the march early (e.g. once the energy has
    changed sign)."""
    if r_start >= 0 or r_stop >= 0 or r_stop == r_start:
        raise ValueError("need distinct negative r_start, r_stop")
    cell = _CellProblem(p, n_cell)
    g = cell.grid
    zk = None
    if family == "large":
        # below onset the cell problem has a small- and a large-amplitude
        # root and the energy comparison wants the large one.  Converge a
        # fixed-wavenumber roll first (its basin is easy to hit from a
        # harmonic guess), then release k against the invariant constraint.
        for a0 in (1.2, 0.9, 1.6, 2.0):
            try:
                st0 = newton_stationary(Field(g, a0 * np.cos(g.nodes)),
                                        p.with_r(r_start), enforce_even=True)
            except (NoConvergence, SingularJacobian):
                continue
            if float(np.max(np.abs(st0.u.values))) < 1e-6:
                continue
            try:
                zk = cell.solve(
                    np.concatenate([g.to_half(st0.u.values), [k_init]]),
                    r_start)
            except (NoConvergence, SingularJacobian):
                continue
            if 0.5 < zk[-1] < 1.5:
                break
            zk = None
    elif family == "small":
        for a0 in (0.05, 0.1, 0.2, 0.3):
            try:
                cand = cell.solve(
                    np.concatenate([g.to_half(a0 * np.cos(g.nodes)),
                                    [k_init]]), r_start)
            except (NoConvergence, SingularJacobian):
                continue
            amp = float(np.max(np.abs(g.from_half(cand[:-1]))))
            if 0.5 < cand[-1] < 1.5 and 1e-6 < amp < 0.9:
                zk = cand
                break
    else:
        raise ValueError(f"unknown family {family!r}")
    if zk is None:
        raise NoConvergence(f"could not start pattern branch at r={r_start}")

    points: List[BranchPoint] = []
    pattern_pts: List[PatternPoint] = []

    def record(zk_acc: np.ndarray, r: float) -> PatternPoint:
        u = g.from_half(zk_acc[:-1])
        k = float(zk_acc[-1])
        ppt = PatternPoint(
            r=r, k=k, profile=u.copy(),
            f_per_period=cell.f_per_period(u, k, r),
            l2norm=float(np.sqrt(g.integrate(u * u))),
        )
        pattern_pts.append(ppt)
        points.append(BranchPoint(
            state=SteadyState(u=Field(g, u.copy()), c=0.0,
                              residual_norm=0.0, iterations=0,
                              parity=Parity.EVEN),
            r=r,
            l2norm=ppt.l2norm,
            extra={"k": k, "f_per_period": ppt.f_per_period},
        ))
        return ppt

    ppt = record(zk, r_start)
    r = r_start
    sense = 1.0 if r_stop > r_start else -1.0
    step_r = sense * abs(dr)
    while r != r_stop:
        r_next = r + step_r
        if (r_next - r_stop) * sense > 0:
            r_next = r_stop
        try:
            zk_next = cell.solve(zk, r_next)
        except (NoConvergence, SingularJacobian):
            step_r *= 0.5
            if abs(step_r) < 1e-6:
                break
            continue
        zk, r = zk_next, r_next
        ppt = record(zk, r)
        step_r = sense * min(abs(step_r) * 1.5, abs(dr))
        if stop_cb is not None and stop_cb(ppt):
            break

    return Branch(
        label="pattern",
        params=p,
        points=points,
        metadata={
            "mode": "pattern",
            "n_cell": n_cell,
            "ks": np.array([q.k for q in pattern_pts]),
            "f_values": np.array([q.f_per_period for q in pattern_pts]),
            "rs": np.array([q.r for q in pattern_pts]),
        },
    )
