"""Periodic uniform grid and Fourier spectral primitives.

All fields live on nodes x_j = -L/2 + j*L/n, j = 0..n-1, and are kept
band-limited to |m| <= n//3 (the 2/3 rule).  Products are evaluated
pointwise on a 3/2 zero-padded grid and truncated back to that band, so
repeated quadratic products never alias.  Array operations act along the
last axis, which lets Jacobian assembly batch whole bases through the
same code path.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import GridMismatch, NonFiniteInput


class Parity(enum.Enum):
    EVEN = "even"
    ODD = "odd"


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid of ``n`` nodes on a cell of length ``length``."""

    length: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.length) and self.length > 0):
            raise ValueError(f"cell length must be positive, got {self.length}")
        if self.n < 16 or self.n % 2:
            raise ValueError(f"node count must be even and >= 16, got {self.n}")

    @cached_property
    def dx(self) -> float:
        return self.length / self.n

    @cached_property
    def nodes(self) -> np.ndarray:
        return -0.5 * self.length + self.dx * np.arange(self.n)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Non-negative wavenumbers 2*pi*m/L of the half spectrum."""
        return 2.0 * np.pi * np.arange(self.n // 2 + 1) / self.length

    @cached_property
    def cutoff_index(self) -> int:
        """Largest retained mode index under the 2/3 rule."""
        return self.n // 3

    @cached_property
    def padded_n(self) -> int:
        return 3 * self.n // 2

    def rfft(self, values: np.ndarray) -> np.ndarray:
        return np.fft.rfft(values, axis=-1)

    def irfft(self, spectrum: np.ndarray) -> np.ndarray:
        return np.fft.irfft(spectrum, n=self.n, axis=-1)

    def deriv(self, values: np.ndarray, order: int) -> np.ndarray:
        """Spectral derivative of the given order (1..4).

        The Nyquist mode is zeroed for odd orders, where the one-sided
        spectrum cannot represent the real derivative.
        """
        if order not in (1, 2, 3, 4):
            raise ValueError(f"derivative order must be 1..4, got {order}")
        spec = self.rfft(values) * (1j * self.wavenumbers) ** order
        if order % 2:
            spec[..., -1] = 0.0
        return self.irfft(spec)

    def band_limit(self, values: np.ndarray) -> np.ndarray:
        """Project onto the retained band |m| <= cutoff_index."""
        spec = self.rfft(values)
        spec[..., self.cutoff_index + 1:] = 0.0
        return self.irfft(spec)

    def dealiased_product(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Pointwise product on the 3/2-padded grid, truncated to the
        retained band.  Broadcasts over leading axes."""
        fa, fb = self.rfft(a), self.rfft(b)
        shape = np.broadcast_shapes(fa.shape[:-1], fb.shape[:-1])
        m = self.padded_n
        pa = np.zeros(shape + (m // 2 + 1,), dtype=complex)
        pb = np.zeros_like(pa)
        pa[..., : self.n // 2 + 1] = fa
        pb[..., : self.n // 2 + 1] = fb
        scale = m / self.n
        prod = (np.fft.irfft(pa, n=m, axis=-1) * scale) * (
            np.fft.irfft(pb, n=m, axis=-1) * scale
        )
        spec = np.fft.rfft(prod, axis=-1)[..., : self.n // 2 + 1] / scale
        spec[..., self.cutoff_index + 1:] = 0.0
        return self.irfft(spec)

    def reflect(self, values: np.ndarray) -> np.ndarray:
        """Values of u(-x): node j maps to node (n - j) mod n."""
        return np.roll(values[..., ::-1], 1, axis=-1)

    def parity_project(self, values: np.ndarray, parity: Parity) -> np.ndarray:
        mirrored = self.reflect(values)
        if parity is Parity.EVEN:
            return 0.5 * (values + mirrored)
        return 0.5 * (values - mirrored)

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Cell integral; the rectangle rule is spectrally exact here."""
        return values.sum(axis=-1) * self.dx

    def interpolate(self, values: np.ndarray, x: np.ndarray, deriv: int = 0):
        """Evaluate the trigonometric interpolant (or its derivative) at
        arbitrary points.  Intended for small point sets."""
        if values.ndim != 1:
            raise ValueError("interpolate expects a single field")
        x = np.atleast_1d(np.asarray(x, dtype=float))
        spec = self.rfft(values)
        mmax = self.n // 2
        theta = (x[:, None] + 0.5 * self.length) * (2.0 * np.pi / self.length)
        m = np.arange(1, mmax)
        phases = np.exp(1j * theta * m)
        k = 2.0 * np.pi * m / self.length
        coeff = spec[1:mmax] * (1j * k) ** deriv
        out = 2.0 * (phases * coeff).real.sum(axis=1)
        if deriv == 0:
            out += spec[0].real
            out += spec[mmax].real * np.cos(mmax * theta[:, 0])
        elif deriv % 2 == 0:
            knyq = 2.0 * np.pi * mmax / self.length
            out += spec[mmax].real * ((1j * knyq) ** deriv).real * np.cos(
                mmax * theta[:, 0]
            )
        return out / self.n

    # -- even-subspace (cosine) representation ---------------------------
    # A reflection-symmetric field is determined by nodes j = 0..n/2; the
    # interior nodes of that range stand for mirror pairs.

    @cached_property
    def half_n(self) -> int:
        return self.n // 2 + 1

    @cached_property
    def half_weights(self) -> np.ndarray:
        w = np.full(self.half_n, 2.0)
        w[0] = w[-1] = 1.0
        return w

    def to_half(self, values: np.ndarray) -> np.ndarray:
        return values[..., : self.half_n].copy()

    def from_half(self, half: np.ndarray) -> np.ndarray:
        full = np.empty(half.shape[:-1] + (self.n,), dtype=float)
        full[..., : self.half_n] = half
        full[..., self.half_n:] = half[..., self.n // 2 - 1: 0: -1]
        return full


@dataclass
class Field:
    """A real scalar field sampled on a grid."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise ValueError(
                f"field shape {vals.shape} does not match grid n={self.grid.n}"
            )
        self.values = vals

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def with_values(self, values) -> "Field":
        """Same grid, new sample values."""
        return Field(self.grid, np.asarray(values, dtype=float).copy())


def _check_same_grid(*fields: Field) -> Grid:
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridMismatch(f"grids differ: {f.grid} vs {g}")
    return g


def _check_finite(f: Field) -> None:
    if not np.all(np.isfinite(f.values)):
        raise NonFiniteInput("field contains non-finite values")


def derivative(f: Field, order: int) -> Field:
    """Spectral derivative of a field, order 1..4."""
    _check_finite(f)
    return Field(f.grid, f.grid.deriv(f.values, order))


def dealiased_product(f: Field, g: Field) -> Field:
    """Alias-free pointwise product of two fields."""
    grid = _check_same_grid(f, g)
    _check_finite(f)
    _check_finite(g)
    return Field(grid, grid.dealiased_product(f.values, g.values))


def parity_project(f: Field, parity: Parity) -> Field:
    """Reflection-symmetric or antisymmetric part about x = 0."""
    _check_finite(f)
    return Field(f.grid, f.grid.parity_project(f.values, parity))
