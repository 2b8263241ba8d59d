"""The governing equation and its exact discrete linearization.

The dynamics integrated everywhere in this package is

    du/dt = r u - (1 + dxx)^2 u + b u^2 - u^3
            + alpha (du/dx)^2 + beta u dxx u

on a periodic cell.  The quadratic gradient terms break u -> -u symmetry
on their own but restore it jointly with (b, alpha, beta) -> -(b, alpha,
beta); reflection symmetry always survives.  On the plane alpha = beta/2
the flow descends a free energy, and at alpha = beta = 0 steady profiles
conserve a spatial invariant that continuation uses as a constraint.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import NonFiniteInput, NotVariational, UnsupportedParameters
from .grid import Field, Grid, _check_finite, _check_same_grid


@dataclass(frozen=True)
class ModelParams:
    """Equation coefficients: linear forcing r, quadratic b, and the two
    gradient couplings alpha, beta."""

    r: float
    b: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        vals = (self.r, self.b, self.alpha, self.beta)
        if not all(np.isfinite(v) for v in vals):
            raise NonFiniteInput(f"non-finite parameters {vals}")

    @property
    def is_variational(self) -> bool:
        scale = 1.0 + abs(self.alpha) + abs(self.beta)
        return abs(self.alpha - 0.5 * self.beta) <= 1e-12 * scale

    def with_r(self, r: float) -> "ModelParams":
        return replace(self, r=r)

    def with_gradients(self, alpha: float, beta: float) -> "ModelParams":
        return replace(self, alpha=alpha, beta=beta)

    def inverted(self) -> "ModelParams":
        """Image under the u -> -u conjugacy."""
        return ModelParams(self.r, -self.b, -self.alpha, -self.beta)


class SpatialRegime(enum.Enum):
    COMPLEX_QUARTET = "complex quartet"
    DOUBLE_IMAGINARY = "double imaginary pair"
    TWO_IMAGINARY_PAIRS = "two imaginary pairs"
    REAL_AND_IMAGINARY = "real pair and imaginary pair"


@dataclass(frozen=True)
class SpatialEigenvalues:
    """Spatial eigenvalues of the flat state and their qualitative regime."""

    eigenvalues: tuple
    regime: SpatialRegime


def spatial_eigenvalues(r: float) -> SpatialEigenvalues:
    """Roots of the steady linearization about u = 0, viewed as a spatial
    dynamical system: lambda^2 = +-sqrt(r) - 1 (principal branches)."""
    if not np.isfinite(r):
        raise NonFiniteInput(f"non-finite r={r}")
    s = np.sqrt(complex(r))
    lam1 = complex(np.sqrt(s - 1.0))
    lam2 = complex(np.sqrt(-s - 1.0))
    if r < 0:
        regime = SpatialRegime.COMPLEX_QUARTET
    elif r == 0:
        regime = SpatialRegime.DOUBLE_IMAGINARY
    elif r < 1:
        regime = SpatialRegime.TWO_IMAGINARY_PAIRS
    else:
        regime = SpatialRegime.REAL_AND_IMAGINARY
    return SpatialEigenvalues((lam1, -lam1, lam2, -lam2), regime)


def _linear_multiplier(grid: Grid, p: ModelParams) -> np.ndarray:
    k = grid.wavenumbers
    return p.r - (1.0 - k * k) ** 2


def linear_apply(grid: Grid, values: np.ndarray, p: ModelParams) -> np.ndarray:
    """r u - (1 + dxx)^2 u, spectrally."""
    return grid.irfft(grid.rfft(values) * _linear_multiplier(grid, p))


def nonlinear_values(grid: Grid, values: np.ndarray, p: ModelParams) -> np.ndarray:
    """All non-linear terms, with alias-free products; broadcasts over
    leading axes.  The cubic is built as two pairwise products so the
    result stays in the retained band."""
    prod = grid.dealiased_product
    usq = prod(values, values)
    out = p.b * usq - prod(usq, values)
    if p.alpha:
        ux = grid.deriv(values, 1)
        out = out + p.alpha * prod(ux, ux)
    if p.beta:
        out = out + p.beta * prod(values, grid.deriv(values, 2))
    return out


def rhs_values(grid: Grid, values: np.ndarray, p: ModelParams) -> np.ndarray:
    return linear_apply(grid, values, p) + nonlinear_values(grid, values, p)


def rhs(u: Field, p: ModelParams) -> Field:
    """Time derivative of the field under the governing equation."""
    _check_finite(u)
    return Field(u.grid, rhs_values(u.grid, u.values, p))


class LinearizedOperator:
    """Exact Frechet derivative of the discrete right-hand side about a
    base state, optionally in a frame co-moving at speed c (adds c d/dx).

    Because the discrete cubic is two nested dealiased products, its
    derivative keeps the same nesting; this is what makes the translation
    mode an exact null vector of converged steady states.
    """

    def __init__(self, grid: Grid, u0: np.ndarray, p: ModelParams, c: float = 0.0):
        self.grid = grid
        self.p = p
        self.c = c
        self.u0 = np.asarray(u0, dtype=float)
        self.u0x = grid.deriv(self.u0, 1)
        self.u0xx = grid.deriv(self.u0, 2)
        self.u0sq = grid.dealiased_product(self.u0, self.u0)
        k = grid.wavenumbers
        self._mult = _linear_multiplier(grid, p).astype(complex)
        if c:
            ik = 1j * k
            ik[-1] = 0.0
            self._mult = self._mult + c * ik

    def apply(self, v: np.ndarray) -> np.ndarray:
        g, p = self.grid, self.p
        prod = g.dealiased_product
        out = g.irfft(g.rfft(v) * self._mult)
        out = out + 2.0 * p.b * prod(self.u0, v)
        out = out - 2.0 * prod(prod(self.u0, v), self.u0) - prod(self.u0sq, v)
        if p.alpha:
            out = out + 2.0 * p.alpha * prod(self.u0x, g.deriv(v, 1))
        if p.beta:
            out = out + p.beta * (
                prod(self.u0xx, v) + prod(self.u0, g.deriv(v, 2))
            )
        return out

    def matrix(self) -> np.ndarray:
        """Dense matrix on the full grid, column j = operator on e_j."""
        return self.apply(np.eye(self.grid.n)).T

    def even_matrix(self) -> np.ndarray:
        """Dense matrix restricted to the reflection-symmetric subspace
        (valid when the base state is even)."""
        g = self.grid
        basis = g.from_half(np.eye(g.half_n))
        return self.apply(basis)[:, : g.half_n].T


def linearized_apply(u0: Field, v: Field, p: ModelParams, c: float = 0.0) -> Field:
    """Action of the linearization about u0 on a perturbation v."""
    grid = _check_same_grid(u0, v)
    _check_finite(u0)
    _check_finite(v)
    return Field(grid, LinearizedOperator(grid, u0.values, p, c).apply(v.values))


def _padded_values(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Samples of the trigonometric interpolant on the 3/2-fine grid."""
    m = grid.padded_n
    spec = np.zeros(values.shape[:-1] + (m // 2 + 1,), dtype=complex)
    spec[..., : grid.n // 2 + 1] = grid.rfft(values)
    return np.fft.irfft(spec, n=m, axis=-1) * (m / grid.n)


def free_energy(u: Field, p: ModelParams, *, sh23_only: bool = False) -> float:
    """Lyapunov functional of the gradient-flow case alpha = beta/2.

    With ``sh23_only`` the alpha/beta contribution is dropped, which is
    the correct functional only at alpha = beta = 0.  The integrand is
    evaluated on the padded grid so the cell mean of the quartic term is
    alias-free for band-limited fields.
    """
    _check_finite(u)
    if not p.is_variational and not sh23_only:
        raise NotVariational(
            f"free energy defined for alpha = beta/2; got alpha={p.alpha}, "
            f"beta={p.beta} (pass sh23_only=True to drop those terms)"
        )
    g = u.grid
    vals = u.values
    up = _padded_values(g, vals)
    lin = _padded_values(g, vals + g.deriv(vals, 2))
    dens = -0.5 * p.r * up * up + 0.5 * lin * lin \
        - (p.b / 3.0) * up ** 3 + 0.25 * up ** 4
    if not sh23_only and p.beta:
        uxp = _padded_values(g, g.deriv(vals, 1))
        dens = dens + 0.5 * p.beta * up * uxp * uxp
    return float(dens.sum() * (g.length / g.padded_n))


def spatial_hamiltonian(u: Field, p: ModelParams) -> Field:
    """Profile of the steady-state spatial invariant; constant in x on
    converged steady states.  Only defined at alpha = beta = 0."""
    _check_finite(u)
    if p.alpha != 0.0 or p.beta != 0.0:
        raise UnsupportedParameters(
            "the spatial invariant requires alpha = beta = 0; "
            f"got alpha={p.alpha}, beta={p.beta}"
        )
    g = u.grid
    v = u.values
    ux = g.deriv(v, 1)
    uxx = g.deriv(v, 2)
    uxxx = g.deriv(v, 3)
    h = -0.5 * (p.r - 1.0) * v * v + ux * ux - 0.5 * uxx * uxx \
        + ux * uxxx - (p.b / 3.0) * v ** 3 + 0.25 * v ** 4
    return Field(g, h)
