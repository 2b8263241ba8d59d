"""Newton solvers for steady and uniformly drifting profiles.

All solves use dense LU on the exact discrete Jacobian.  Reflection
symmetry can be enforced by solving in the half-grid representation of
even fields, which also removes the translation null direction.  Drifting
profiles are computed in the co-moving frame with the drift speed as an
extra unknown, pinned by an integral phase condition against a reference
profile.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .errors import NoConvergence, NonFiniteInput, SingularJacobian
from .grid import Field, Grid, Parity, _check_finite, _check_same_grid
from .model import LinearizedOperator, ModelParams, rhs_values

#: Residual tolerance scale: tol = NEWTON_TOL_SCALE * (1 + max|u|).
NEWTON_TOL_SCALE = 1e-10

MAX_NEWTON_ITER = 25


@dataclass
class SteadyState:
    """A converged steady (c = 0) or drifting profile."""

    u: Field
    c: float
    residual_norm: float
    iterations: int
    parity: Optional[Parity]

    @property
    def grid(self) -> Grid:
        return self.u.grid


def newton_tolerance(values: np.ndarray) -> float:
    return NEWTON_TOL_SCALE * (1.0 + float(np.max(np.abs(values), initial=0.0)))


def detect_parity(grid: Grid, values: np.ndarray) -> Optional[Parity]:
    scale = 1e-10 * (1.0 + float(np.max(np.abs(values))))
    if np.max(np.abs(values - grid.reflect(values))) < scale:
        return Parity.EVEN
    if np.max(np.abs(values + grid.reflect(values))) < scale:
        return Parity.ODD
    return None


def _lu_solve(mat: np.ndarray, rhs_vec: np.ndarray) -> np.ndarray:
    try:
        return sla.lu_solve(sla.lu_factor(mat), rhs_vec)
    except (sla.LinAlgError, ValueError) as exc:
        raise SingularJacobian(str(exc)) from exc


def newton_stationary(
    u_guess: Field,
    p: ModelParams,
    *,
    enforce_even: bool = False,
    max_iter: int = MAX_NEWTON_ITER,
) -> SteadyState:
    """Solve rhs(u) = 0 by dense Newton from the given guess.

    With ``enforce_even`` the iteration runs in the reflection-symmetric
    subspace (the guess is projected into it first), which removes the
    translation degeneracy of localized profiles.
    """
    _check_finite(u_guess)
    grid = u_guess.grid
    u = u_guess.values.copy()
    if enforce_even:
        u = grid.parity_project(u, Parity.EVEN)

    initial_res = None
    for it in range(max_iter + 1):
        # divergent iterates overflow the dealiased product before the
        # finiteness check catches them; the warning is just noise
        with np.errstate(over="ignore", invalid="ignore"):
            res = rhs_values(grid, u, p)
        res_norm = float(np.max(np.abs(res)))
        if not np.isfinite(res_norm):
            raise NoConvergence(
                f"residual lost finiteness at iteration {it}", res_norm
            )
        if initial_res is None:
            initial_res = res_norm
        tol = newton_tolerance(u)
        if res_norm < tol:
            return SteadyState(
                u=Field(grid, u),
                c=0.0,
                residual_norm=res_norm,
                iterations=it,
                parity=detect_parity(grid, u),
            )
        if it == max_iter or res_norm > 1e8 * (1.0 + initial_res):
            raise NoConvergence(
                f"stationary Newton stalled after {it} iterations "
                f"(residual {res_norm:.3e}, tol {tol:.3e})",
                res_norm,
            )
        op = LinearizedOperator(grid, u, p)
        if enforce_even:
            delta = _lu_solve(op.even_matrix(), grid.to_half(res))
            u = u - grid.from_half(delta)
        else:
            u = u - _lu_solve(op.matrix(), res)
    raise AssertionError("unreachable")


def travelling_residual(
    grid: Grid,
    u: np.ndarray,
    c: float,
    p: ModelParams,
    u_ref: np.ndarray,
    u_ref_x: np.ndarray,
) -> np.ndarray:
    """Stacked co-moving residual: PDE right side plus c u_x on the grid
    nodes, then the phase condition <u - u_ref, u_ref_x>."""
    body = rhs_values(grid, u, p) + c * grid.deriv(u, 1)
    phase = grid.dx * float((u - u_ref) @ u_ref_x)
    return np.concatenate([body, [phase]])


def travelling_jacobian(
    grid: Grid,
    u: np.ndarray,
    c: float,
    p: ModelParams,
    u_ref_x: np.ndarray,
) -> np.ndarray:
    n = grid.n
    jac = np.empty((n + 1, n + 1))
    op = LinearizedOperator(grid, u, p, c=c)
    jac[:n, :n] = op.matrix()
    jac[:n, n] = grid.deriv(u, 1)
    jac[n, :n] = grid.dx * u_ref_x
    jac[n, n] = 0.0
    return jac


def newton_travelling(
    u_guess: Field,
    c_guess: float,
    p: ModelParams,
    u_ref: Optional[Field] = None,
    *,
    max_iter: int = MAX_NEWTON_ITER,
) -> SteadyState:
    """Solve rhs(u) + c u_x = 0 with unknown drift speed c.

    The phase condition <u - u_ref, d/dx u_ref> = 0 selects one point on
    the translation orbit; u_ref defaults to the guess itself.
    """
    _check_finite(u_guess)
    if not np.isfinite(c_guess):
        raise NonFiniteInput(f"non-finite drift guess {c_guess}")
    grid = u_guess.grid
    if u_ref is None:
        u_ref = u_guess
    else:
        _check_same_grid(u_guess, u_ref)
        _check_finite(u_ref)
    ref = u_ref.values
    ref_x = grid.deriv(ref, 1)

    u = u_guess.values.copy()
    c = float(c_guess)
    initial_res = None
    for it in range(max_iter + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            res = travelling_residual(grid, u, c, p, ref, ref_x)
        res_norm = float(np.max(np.abs(res)))
        if not np.isfinite(res_norm):
            raise NoConvergence(
                f"residual lost finiteness at iteration {it}", res_norm
            )
        if initial_res is None:
            initial_res = res_norm
        tol = newton_tolerance(u)
        if res_norm < tol:
            return SteadyState(
                u=Field(grid, u),
                c=c,
                residual_norm=res_norm,
                iterations=it,
                parity=detect_parity(grid, u),
            )
        if it == max_iter or res_norm > 1e8 * (1.0 + initial_res):
            raise NoConvergence(
                f"travelling Newton stalled after {it} iterations "
                f"(residual {res_norm:.3e}, tol {tol:.3e})",
                res_norm,
            )
        delta = _lu_solve(
            travelling_jacobian(grid, u, c, p, ref_x), res
        )
        u = u - delta[:-1]
        c = c - float(delta[-1])
    raise AssertionError("unreachable")
