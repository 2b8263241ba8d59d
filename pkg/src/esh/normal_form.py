"""Weakly nonlinear criticality analysis at the pattern-forming onset.

Near r = 0 the slow-envelope reduction of the governing equation yields
cubic and quintic Landau coefficients q2 and q4 as functions of
(b, alpha, beta).  q2 < 0 marks subcritical onset; on the q2 = 0 surface
the quintic q4 decides whether a localized-state window survives.  The
chain of intermediate coefficients c1..c10 reproduces the known exact
value q4 = 2202/361 on the q2 = 0 circle of the (b, 0, 0) axis, which
pins every sign in the pipeline.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, NonFiniteInput

#: Symmetric matrix M of the closed form q2 = (27 - p.M.p)/36, p = (b, alpha,
#: beta).  Derived by expanding the defining quadratic; matches q2_of to
#: rounding.
Q2_FORM_MATRIX = np.array(
    [
        [38.0, 19.0, -30.5],
        [19.0, -4.0, -8.5],
        [-30.5, -8.5, 23.0],
    ]
)

#: Commonly tabulated variant of the same matrix.  Its (b, alpha) entry (17)
#: is a transcription slip: expanding the quadratic requires 19.  It is kept
#: because the eigenvalue triple quoted alongside it, {66.82, 0.5113,
#: -10.33}, belongs to this variant, and because both variants share the
#: (+, +, -) signature that makes the q2 = 0 set a one-sheeted hyperboloid.
Q2_FORM_MATRIX_TABULATED = np.array(
    [
        [38.0, 17.0, -30.5],
        [17.0, -4.0, -8.5],
        [-30.5, -8.5, 23.0],
    ]
)

#: b^2 at which onset criticality changes sign on the (b, 0, 0) axis.
B_SQUARED_CRITICAL = 27.0 / 38.0

#: Exact quintic coefficient on the q2 = 0 circle at alpha = beta = 0.
Q4_AT_CRITICAL_B = 2202.0 / 361.0


def _check_finite_params(*vals: float) -> None:
    if not all(np.isfinite(v) for v in vals):
        raise NonFiniteInput(f"non-finite parameters {vals}")


def q2_of(b: float, alpha: float, beta: float) -> float:
    """Cubic Landau coefficient from the defining product form."""
    _check_finite_params(b, alpha, beta)
    return 0.25 * (
        3.0
        - 2.0 * (b + alpha - beta) * (2.0 * b - beta)
        - (1.0 / 9.0) * (b - alpha - beta) * (2.0 * b + 4.0 * alpha - 5.0 * beta)
    )


def q2_quadratic_form(b: float, alpha: float, beta: float) -> float:
    """Same coefficient via the symmetric-matrix closed form."""
    _check_finite_params(b, alpha, beta)
    p = np.array([b, alpha, beta])
    return (27.0 - p @ Q2_FORM_MATRIX @ p) / 36.0


def alpha_criticality_roots(b: float, beta: float) -> tuple:
    """The two alpha roots of q2(b, ., beta) = 0, ascending; empty tuple
    if the discriminant is negative."""
    _check_finite_params(b, beta)
    # 36 q2 = 27 + 4 a^2 - 38 a b + 17 a beta - 38 b^2 + 61 b beta - 23 beta^2
    A = 4.0
    B = -38.0 * b + 17.0 * beta
    C = 27.0 - 38.0 * b * b + 61.0 * b * beta - 23.0 * beta * beta
    disc = B * B - 4.0 * A * C
    if disc < 0:
        return ()
    s = math.sqrt(disc)
    lo, hi = (-B - s) / (2 * A), (-B + s) / (2 * A)
    return (lo, hi)


@dataclass(frozen=True)
class CCoefficients:
    """Intermediate expansion coefficients of the quintic reduction, plus
    the directional derivatives of c1, c2 along a parameter increment."""

    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    c6: float
    c7: float
    c8: float
    c9: float
    c10: float
    c1_hat: float
    c2_hat: float


def c_coefficients(
    b0: float,
    alpha0: float,
    beta0: float,
    b_hat: float = 0.0,
    alpha_hat: float = 0.0,
    beta_hat: float = 0.0,
) -> CCoefficients:
    """Expansion coefficients about the base point (b0, alpha0, beta0)."""
    _check_finite_params(b0, alpha0, beta0, b_hat, alpha_hat, beta_hat)
    c1 = 2.0 * (b0 + alpha0 - beta0)
    c2 = (b0 - alpha0 - beta0) / 9.0
    c3 = ((2.0 * b0 - 4.0 * alpha0 - 5.0 * beta0) * c2 - 1.0) / 64.0
    c4 = b0 * (c1 * c1 + 2.0 * c2 * c2) - 6.0 * (c1 + c2) \
        + 8.0 * c2 * c2 * (alpha0 - beta0)
    c5 = 2.0 * (alpha0 - beta0)
    c6 = (
        2.0 * c1 * c2 * (b0 - 2.0 * beta0)
        + 2.0 * c3 * (b0 + 3.0 * alpha0 - 5.0 * beta0)
        - 3.0 * (c1 + 2.0 * c2)
    ) / 9.0
    c7 = (2.0 / 9.0) * (24.0 * c2 + alpha0 + beta0)
    c8 = b0 * (-2.0 * c5 + 2.0 * c7) \
        + alpha0 * (4.0 * c7 + 2.0 * c1 - 4.0 * c2) \
        + beta0 * (c5 - 5.0 * c7 + 2.0 * c1 + 8.0 * c2)
    c9 = b0 * 2.0 * c5 + alpha0 * (2.0 * c1 + 4.0 * c2) \
        + beta0 * (-c5 - 2.0 * c2)
    c10 = b0 * (2.0 * c4 + 2.0 * c6 + 2.0 * c2 * c3) \
        - 3.0 * (c1 * c1 + c3 + 2.0 * c1 * c2 + 2.0 * c2 * c2) \
        + alpha0 * (4.0 * c6 + 12.0 * c2 * c3) \
        + beta0 * (-c4 - 5.0 * c6 - 13.0 * c2 * c3)
    c1_hat = 2.0 * (b_hat + alpha_hat - beta_hat)
    c2_hat = (b_hat - alpha_hat - beta_hat) / 9.0
    return CCoefficients(c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c1_hat, c2_hat)


class NormalFormRegime(enum.Enum):
    SUPERCRITICAL = "supercritical"
    SUPERCRITICAL_Q4_NEGATIVE = "supercritical, negative quintic"
    SUBCRITICAL_SNAKING = "subcritical, positive quintic"
    SUBCRITICAL_Q4_NEGATIVE = "subcritical, negative quintic"
    CRITICALITY_BOUNDARY = "degenerate q2 = 0 boundary"


def classify_regime(q2: float, q4: float, tol: float = 1e-12) -> NormalFormRegime:
    if abs(q2) <= tol:
        return NormalFormRegime.CRITICALITY_BOUNDARY
    if q2 > 0:
        return (
            NormalFormRegime.SUPERCRITICAL
            if q4 >= 0
            else NormalFormRegime.SUPERCRITICAL_Q4_NEGATIVE
        )
    return (
        NormalFormRegime.SUBCRITICAL_SNAKING
        if q4 >= 0
        else NormalFormRegime.SUBCRITICAL_Q4_NEGATIVE
    )


@dataclass(frozen=True)
class NormalFormReport:
    """Landau coefficients of the quintic envelope reduction at one
    parameter point, with the derived qualitative classification.

    ``q1`` is carried with the literal matched value -1/4.  The envelope
    convention that orients the unfolding parameter positive on the
    oscillatory side would flip it to +1/4; window logic that depends on
    that orientation uses |q1| (see :func:`homoclinic_exists`).
    """

    b: float
    alpha: float
    beta: float
    q1: float
    q2: float
    p2: float
    q3: float
    q4: float
    regime: NormalFormRegime
    mu_maxwell: Optional[float]

    @property
    def discriminant_coefficients(self) -> tuple:
        """(q1, q2, q4) defining the reduced discriminant Delta(mu)."""
        return (self.q1, self.q2, self.q4)

    def to_dict(self) -> dict:
        return {
            "b": self.b,
            "alpha": self.alpha,
            "beta": self.beta,
            "q1": self.q1,
            "q2": self.q2,
            "p2": self.p2,
            "q3": self.q3,
            "q4": self.q4,
            "regime": self.regime.name,
            "mu_maxwell": self.mu_maxwell,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormalFormReport":
        return cls(
            b=float(d["b"]),
            alpha=float(d["alpha"]),
            beta=float(d["beta"]),
            q1=float(d["q1"]),
            q2=float(d["q2"]),
            p2=float(d["p2"]),
            q3=float(d["q3"]),
            q4=float(d["q4"]),
            regime=NormalFormRegime[d["regime"]],
            mu_maxwell=None if d["mu_maxwell"] is None else float(d["mu_maxwell"]),
        )


#: Literal matched value of the unfolding coefficient.
Q1_MATCHED = -0.25


def quintic_coefficients(c: CCoefficients) -> tuple:
    """(p2, q3, q4) from the intermediate coefficients."""
    p2 = -(c.c8 + c.c9) / 16.0
    q3 = (c.c8 - 3.0 * c.c9) / 8.0
    q4 = (-3.0 * c.c8 ** 2 + 2.0 * c.c8 * c.c9 + 5.0 * c.c9 ** 2) / 256.0 \
        - c.c10 / 4.0
    return p2, q3, q4


def normal_form_report(b: float, alpha: float, beta: float) -> NormalFormReport:
    """Full criticality report at one parameter point."""
    c = c_coefficients(b, alpha, beta)
    q2 = q2_of(b, alpha, beta)
    p2, q3, q4 = quintic_coefficients(c)
    regime = classify_regime(q2, q4, tol=1e-12 * (1.0 + b * b + alpha * alpha + beta * beta))
    mu_m = None
    if q2 < 0 and q4 > 0:
        mu_m = -3.0 * q2 * q2 / (16.0 * Q1_MATCHED * q4)
    return NormalFormReport(
        b=b, alpha=alpha, beta=beta, q1=Q1_MATCHED,
        q2=q2, p2=p2, q3=q3, q4=q4, regime=regime, mu_maxwell=mu_m,
    )


def reduced_potential(y, mu: float, nf: NormalFormReport):
    """Potential of the reduced envelope amplitude y = |A|^2 >= 0:
    f(y) = 4 q1 mu y^2 - 2 q2 y^3 - (4/3) q4 y^4."""
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr < 0):
        raise DomainError("reduced amplitude y = |A|^2 must be >= 0")
    out = 4.0 * nf.q1 * mu * y_arr ** 2 - 2.0 * nf.q2 * y_arr ** 3 \
        - (4.0 / 3.0) * nf.q4 * y_arr ** 4
    return out if out.shape else float(out)


def discriminant(mu: float, nf: NormalFormReport) -> float:
    """Delta(mu) = q2^2/4 + (4/3) q1 q4 mu; its zero is the reduced
    Maxwell unfolding value."""
    return nf.q2 ** 2 / 4.0 + (4.0 / 3.0) * nf.q1 * nf.q4 * mu


def maxwell_mu(nf: NormalFormReport) -> Optional[float]:
    """Unfolding value at which the reduced potential develops a double
    root: mu_M = -3 q2^2 / (16 q1 q4).  Defined for q2 <= 0 with q4 > 0
    (0 exactly on the degenerate q2 = 0 boundary); None otherwise."""
    if nf.q4 <= 0 or nf.q2 > 0:
        return None
    return -3.0 * nf.q2 ** 2 / (16.0 * nf.q1 * nf.q4)


def homoclinic_exists(mu: float, nf: NormalFormReport) -> bool:
    """Whether the reduced system admits a localized envelope at the given
    unfolding value, in the orientation where the hyperbolic side is
    mu < 0 (so the q1 sign ambiguity drops out through |q1|)."""
    if nf.q4 > 0:
        if nf.q2 >= 0:
            return False
        mu_m = -3.0 * nf.q2 ** 2 / (16.0 * abs(nf.q1) * nf.q4)
        return mu_m <= mu <= 0.0
    if nf.q4 < 0:
        return mu < 0.0
    return nf.q2 < 0 and mu <= 0.0


@dataclass(frozen=True)
class Q2SurfaceRow:
    """One root of q2 = 0 solved for b at fixed (alpha, beta)."""

    b: float
    alpha: float
    beta: float
    q4: float
    q4_sign: int


@dataclass(frozen=True)
class Q2SurfaceTable:
    rows: tuple
    no_root_samples: tuple


def sample_q2_surface(alphas, slice_: str = "beta=0") -> Q2SurfaceTable:
    """Trace of the q2 = 0 surface over a one-parameter slice.

    ``slice_`` selects the plane: "beta=0" or "variational" (beta = 2
    alpha, the gradient-flow plane).  For each alpha the quadratic in b
    is solved exactly; samples with no real root are reported separately.
    """
    if slice_ == "beta=0":
        betas = np.zeros_like(np.asarray(alphas, dtype=float))
    elif slice_ == "variational":
        betas = 2.0 * np.asarray(alphas, dtype=float)
    else:
        raise ValueError(f"unknown slice {slice_!r}; use 'beta=0' or 'variational'")
    rows = []
    misses = []
    for alpha, beta in zip(np.asarray(alphas, dtype=float), betas):
        # 38 b^2 + (38 a - 61 be) b - (27 + 4 a^2 + 17 a be - 23 be^2) = 0
        B = 38.0 * alpha - 61.0 * beta
        C = -(27.0 + 4.0 * alpha * alpha + 17.0 * alpha * beta
              - 23.0 * beta * beta)
        disc = B * B - 4.0 * 38.0 * C
        if disc < 0:
            misses.append((float(alpha), float(beta)))
            continue
        s = math.sqrt(disc)
        for b_root in ((-B - s) / 76.0, (-B + s) / 76.0):
            q4 = normal_form_report(b_root, float(alpha), float(beta)).q4
            rows.append(
                Q2SurfaceRow(
                    b=float(b_root), alpha=float(alpha), beta=float(beta),
                    q4=float(q4), q4_sign=int(np.sign(q4)),
                )
            )
    return Q2SurfaceTable(rows=tuple(rows), no_root_samples=tuple(misses))
