"""Spectra of linearized states.

The flat state is the analytic oracle: every mode is a pure Fourier
harmonic with growth rate r - (1 - k^2)^2, doubly degenerate except for
k = 0.  Localized states pin down the translation-mode bookkeeping.
"""
import numpy as np
import pytest

from esh.continuation import localized_seed
from esh.grid import Field, Grid, Parity
from esh.model import LinearizedOperator, ModelParams
from esh.stability import (
    ModeTrack,
    Spectrum,
    compute_spectrum,
    count_unstable,
    goldstone_eigenvalue,
    odd_real_indicator,
    oscillatory_frequency,
    oscillatory_indicator,
    track_mode,
)
from esh.steady import SteadyState, newton_stationary


def _flat_state(g):
    return SteadyState(u=Field(g, np.zeros(g.n)), c=0.0, residual_norm=0.0,
                       iterations=0, parity=Parity.EVEN)


def test_flat_state_spectrum_matches_dispersion():
    g = Grid(length=2 * np.pi, n=32)
    p = ModelParams(r=-0.3, b=1.8)
    spec = compute_spectrum(_flat_state(g), p, n_eigs=16)
    ks = np.arange(g.n // 2 + 1)
    mults = p.r - (1.0 - ks.astype(float) ** 2) ** 2
    expected = np.sort(np.concatenate([mults, mults[1:g.n // 2]]))[::-1]
    got = np.sort(spec.eigenvalues.real)[::-1]
    np.testing.assert_allclose(got[:16], expected[:16], atol=1e-8)
    assert np.max(np.abs(spec.eigenvalues.imag)) < 1e-8


def test_flat_state_nondegenerate_mode_parity():
    # degenerate cos/sin pairs may come back in a mixed basis, but the
    # k = 0 mode is simple and must classify as even
    g = Grid(length=2 * np.pi, n=32)
    p = ModelParams(r=-0.3, b=1.8)
    spec = compute_spectrum(_flat_state(g), p, n_eigs=8)
    i0 = int(np.argmin(np.abs(spec.eigenvalues[:8] - (p.r - 1.0))))
    assert spec.eigenvalues[i0].real == pytest.approx(p.r - 1.0, abs=1e-8)
    assert spec.parities[i0] is Parity.EVEN


def test_localized_state_spectrum(small_state):
    st, p = small_state
    spec = compute_spectrum(st, p)
    # stable equilibrium apart from translation
    assert spec.counts == (0, 0, 0, 0)
    assert spec.mixed_unstable == 0
    assert spec.goldstone_index is not None
    sig = goldstone_eigenvalue(spec)
    assert abs(sig) < 1e-6
    assert spec.parities[spec.goldstone_index] is Parity.ODD


def test_eigen_residuals(small_state):
    st, p = small_state
    spec = compute_spectrum(st, p, n_eigs=10)
    A = LinearizedOperator(st.grid, st.u.values, p).matrix()
    for i in range(10):
        v = spec.eigenfunctions[i]
        sig = spec.eigenvalues[i]
        res = np.linalg.norm(A @ v - sig * v) / np.linalg.norm(v)
        assert res < 1e-8 * (1.0 + abs(sig))


def test_eigenvalues_sorted_descending(small_state):
    st, p = small_state
    spec = compute_spectrum(st, p)
    assert np.all(np.diff(spec.eigenvalues.real) <= 1e-12)
    assert len(spec.eigenvalues) == st.grid.n
    assert len(spec.parities) == 64  # retained block


def test_count_unstable_recount(small_state):
    st, p = small_state
    spec = compute_spectrum(st, p)
    # a huge negative threshold counts everything retained as unstable
    loose = count_unstable(spec, sigma_tol=-1e6)
    assert sum(loose) >= 60
    assert count_unstable(spec) == spec.counts


def test_indicators_on_synthetic_spectrum():
    eigenvalues = np.array([0.2 + 0.0j, -0.05 + 0.3j, -0.05 - 0.3j,
                            -0.4 + 0.0j, -1.0 + 0.0j])
    parities = (Parity.ODD, Parity.EVEN, Parity.EVEN, Parity.ODD, None)
    spec = Spectrum(eigenvalues=eigenvalues,
                    eigenfunctions=np.eye(5, dtype=complex),
                    parities=parities, counts=(0, 0, 1, 0),
                    mixed_unstable=0, sigma_tol=1e-6, goldstone_index=3)
    assert odd_real_indicator(spec) == pytest.approx(0.2)
    assert oscillatory_indicator(spec) == pytest.approx(-0.05)
    assert oscillatory_frequency(spec) == pytest.approx(0.3)


def test_indicators_empty_cases():
    eigenvalues = np.array([-0.5 + 0.0j])
    spec = Spectrum(eigenvalues=eigenvalues,
                    eigenfunctions=np.eye(1, dtype=complex),
                    parities=(Parity.EVEN,), counts=(0, 0, 0, 0),
                    mixed_unstable=0, sigma_tol=1e-6, goldstone_index=None)
    assert odd_real_indicator(spec) == -np.inf
    assert oscillatory_indicator(spec) == -np.inf
    assert oscillatory_frequency(spec) is None
    assert goldstone_eigenvalue(spec) is None


def test_track_mode_follows_goldstone(small_state):
    st, p = small_state
    spectra = [compute_spectrum(st, p.with_r(r), n_eigs=16)
               for r in (p.r, p.r + 1e-4, p.r + 2e-4)]
    gi = spectra[0].goldstone_index
    track = track_mode(spectra, gi)
    assert isinstance(track, ModeTrack)
    assert len(track.indices) == 3
    # the translation mode barely moves off the perturbed state
    assert np.all(np.abs(track.eigenvalues.real) < 1e-2)


def test_track_mode_input_validation(small_state):
    st, p = small_state
    spec = compute_spectrum(st, p, n_eigs=8)
    with pytest.raises(ValueError):
        track_mode([], 0)
    with pytest.raises(ValueError):
        track_mode([spec], 99)


def test_rightmost_property(small_state):
    st, p = small_state
    spec = compute_spectrum(st, p)
    assert spec.rightmost == complex(spec.eigenvalues[0])
