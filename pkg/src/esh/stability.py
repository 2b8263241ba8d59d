"""Temporal linear stability of steady and drifting profiles.

The dense linearization (in the co-moving frame for drifting states) is
diagonalized in full.  Unstable modes are reported with the four-count
notation (even-real, even-complex, odd-real, odd-complex); the neutral
translation mode is identified by overlap with the spatial derivative of
the base state and never counted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import EshError, TrackingLost
from .grid import Grid, Parity
from .model import LinearizedOperator, ModelParams
from .steady import SteadyState

#: Growth rates within this tolerance of zero are treated as neutral.
SIGMA_TOL = 1e-6

#: Parity is assigned when one reflection component dominates the other
#: by this factor; otherwise the mode is reported as mixed (None).
PARITY_DOMINANCE = 1e3


@dataclass
class Spectrum:
    """Eigenvalues (all, sorted by descending real part) and the
    rightmost eigenfunctions of the linearization about one state."""

    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray
    parities: tuple
    counts: tuple
    mixed_unstable: int
    sigma_tol: float
    goldstone_index: Optional[int]

    @property
    def rightmost(self) -> complex:
        return complex(self.eigenvalues[0])


def _classify_parity(grid: Grid, vec: np.ndarray) -> Optional[Parity]:
    mirrored = grid.reflect(vec)
    even_part = np.linalg.norm(vec + mirrored)
    odd_part = np.linalg.norm(vec - mirrored)
    if odd_part * PARITY_DOMINANCE <= even_part:
        return Parity.EVEN
    if even_part * PARITY_DOMINANCE <= odd_part:
        return Parity.ODD
    return None


def _count_modes(
    eigenvalues: np.ndarray,
    parities: Sequence[Optional[Parity]],
    sigma_tol: float,
    goldstone_index: Optional[int],
) -> tuple:
    m_r = m_c = n_r = n_c = mixed = 0
    for i, (sig, par) in enumerate(zip(eigenvalues, parities)):
        if i == goldstone_index or sig.real <= sigma_tol:
            continue
        is_complex = sig.imag != 0.0
        if par is Parity.EVEN:
            if is_complex:
                m_c += 1
            else:
                m_r += 1
        elif par is Parity.ODD:
            if is_complex:
                n_c += 1
            else:
                n_r += 1
        else:
            mixed += 1
    return (m_r, m_c, n_r, n_c), mixed


def compute_spectrum(
    state: SteadyState,
    p: ModelParams,
    *,
    n_eigs: int = 64,
    sigma_tol: float = SIGMA_TOL,
) -> Spectrum:
    """Full dense eigendecomposition of the linearization about a state,
    retaining eigenfunctions for the ``n_eigs`` rightmost modes."""
    grid = state.grid
    u0 = state.u.values
    op = LinearizedOperator(grid, u0, p, c=state.c)
    mat = op.matrix()
    try:
        w, v = sla.eig(mat)
    except sla.LinAlgError as exc:
        raise EshError(
            f"eigendecomposition failed: {exc} "
            f"(matrix condition estimate {np.linalg.cond(mat):.3e})"
        ) from exc
    order = np.argsort(-w.real)
    w = w[order]
    v = v[:, order]

    n_pos = int(np.count_nonzero(w.real > sigma_tol))
    n_keep = min(grid.n, max(n_eigs, n_pos + 2))
    funcs = v[:, :n_keep].T.copy()
    parities = tuple(_classify_parity(grid, funcs[i]) for i in range(n_keep))

    u0x = grid.deriv(u0, 1)
    gold_idx = None
    u0x_norm = np.linalg.norm(u0x)
    if u0x_norm > 1e-12 * (1.0 + np.linalg.norm(u0)):
        overlaps = np.abs(funcs @ u0x) / (
            np.linalg.norm(funcs, axis=1) * u0x_norm
        )
        best = int(np.argmax(overlaps))
        if overlaps[best] > 0.9:
            gold_idx = best

    counts, mixed = _count_modes(w[:n_keep], parities, sigma_tol, gold_idx)
    return Spectrum(
        eigenvalues=w,
        eigenfunctions=funcs,
        parities=parities,
        counts=counts,
        mixed_unstable=mixed,
        sigma_tol=sigma_tol,
        goldstone_index=gold_idx,
    )


def count_unstable(spectrum: Spectrum, sigma_tol: Optional[float] = None) -> tuple:
    """Recount unstable modes, optionally at a different tolerance.
    Counts only pertain to modes with retained eigenfunctions; modes
    beyond that set are far to the left for any sensible tolerance."""
    tol = spectrum.sigma_tol if sigma_tol is None else sigma_tol
    n_keep = len(spectrum.parities)
    counts, _ = _count_modes(
        spectrum.eigenvalues[:n_keep],
        spectrum.parities,
        tol,
        spectrum.goldstone_index,
    )
    return counts


def goldstone_eigenvalue(spectrum: Spectrum) -> Optional[complex]:
    if spectrum.goldstone_index is None:
        return None
    return complex(spectrum.eigenvalues[spectrum.goldstone_index])


def odd_real_indicator(spectrum: Spectrum) -> float:
    """Largest growth rate among odd-parity real modes, excluding the
    translation mode; -inf when no such mode is retained.  Crosses zero
    at symmetry-breaking (drift) bifurcations of even states."""
    best = -np.inf
    n_keep = len(spectrum.parities)
    for i in range(n_keep):
        if i == spectrum.goldstone_index:
            continue
        sig = spectrum.eigenvalues[i]
        if sig.imag == 0.0 and spectrum.parities[i] is Parity.ODD:
            best = max(best, float(sig.real))
    return best


def oscillatory_indicator(spectrum: Spectrum) -> float:
    """Largest growth rate among complex-pair modes; -inf when none is
    retained.  Crosses zero at oscillatory (Hopf-type) bifurcations."""
    mask = spectrum.eigenvalues[: len(spectrum.parities)].imag != 0.0
    if not np.any(mask):
        return -np.inf
    return float(
        spectrum.eigenvalues[: len(spectrum.parities)][mask].real.max()
    )


def oscillatory_frequency(spectrum: Spectrum) -> Optional[float]:
    """|Im sigma| of the rightmost complex pair, if any."""
    vals = spectrum.eigenvalues[: len(spectrum.parities)]
    mask = vals.imag != 0.0
    if not np.any(mask):
        return None
    pairs = vals[mask]
    return float(abs(pairs[np.argmax(pairs.real)].imag))


@dataclass
class ModeTrack:
    """An eigenvalue followed along a sequence of spectra by
    eigenfunction overlap."""

    start_index: int
    indices: list
    eigenvalues: np.ndarray
    collisions: list

    @property
    def became_complex(self) -> bool:
        return any(self.eigenvalues.imag != 0.0)


#: Minimum |<U_prev, U_next>| (unit vectors) to accept a continuation of
#: the tracked mode.
TRACK_OVERLAP_MIN = 0.5


def track_mode(
    spectra: Sequence[Spectrum], start_index: int
) -> ModeTrack:
    """Follow one mode through consecutive spectra.

    Raises TrackingLost (carrying the failing position) when the best
    overlap drops below threshold.  Positions where the tracked
    eigenvalue changes between real and complex are reported as
    collisions.
    """
    if not spectra:
        raise ValueError("need at least one spectrum")
    if not 0 <= start_index < len(spectra[0].parities):
        raise ValueError(f"start index {start_index} outside retained modes")
    idx = start_index
    indices = [idx]
    values = [spectra[0].eigenvalues[idx]]
    collisions = []
    prev_vec = spectra[0].eigenfunctions[idx]
    prev_vec = prev_vec / np.linalg.norm(prev_vec)
    for pos in range(1, len(spectra)):
        funcs = spectra[pos].eigenfunctions
        norms = np.linalg.norm(funcs, axis=1)
        overlaps = np.abs(funcs.conj() @ prev_vec) / norms
        idx = int(np.argmax(overlaps))
        if overlaps[idx] < TRACK_OVERLAP_MIN:
            raise TrackingLost(pos)
        val = spectra[pos].eigenvalues[idx]
        was_complex = values[-1].imag != 0.0
        if (val.imag != 0.0) != was_complex:
            collisions.append(pos)
        indices.append(idx)
        values.append(val)
        prev_vec = funcs[idx] / norms[idx]
    return ModeTrack(
        start_index=start_index,
        indices=indices,
        eigenvalues=np.array(values),
        collisions=collisions,
    )
