"""Tangent angle ψ, conformal angle φ, and their Θ-blend.

All pair functions broadcast over leading axes, so a :class:`PairGeometry`
may hold a single pair or a whole block of a torus grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import AngleError, AssumptionViolation

CLAMP_SLACK = 1e-12
LINE_LIMIT_TOL = 1e-13


def _dot(a, b):
    return np.sum(a * b, axis=-1)


def _clamp(c):
    return np.clip(c, -1.0, 1.0)


@dataclass(frozen=True)
class PairGeometry:
    """Chord Δf = f(s1) - f(s2) and unit tangents at s1, s2 (arrays of shape (..., n))."""

    delta_f: np.ndarray
    tau1: np.ndarray
    tau2: np.ndarray
    check: bool = True

    def __post_init__(self):
        if not self.check:
            return
        for name in ("tau1", "tau2"):
            tau = np.asarray(getattr(self, name), dtype=float)
            if np.max(np.abs(np.linalg.norm(tau, axis=-1) - 1.0)) > 1e-12:
                raise AngleError(f"{name} is not a unit vector")

    @classmethod
    def from_points(cls, f1, f2, tau1, tau2):
        return cls(np.asarray(f1, float) - np.asarray(f2, float), np.asarray(tau1, float), np.asarray(tau2, float))

    @property
    def chord_len(self):
        return np.linalg.norm(self.delta_f, axis=-1)

    @property
    def unit_chord(self):
        r = self.chord_len
        if np.any(r == 0):
            raise AngleError("coincident points: the conformal angle is undefined")
        return self.delta_f / r[..., None]


def cos_psi(g):
    """τ(s1)·τ(s2), clamped."""
    return _clamp(_dot(g.tau1, g.tau2))


def one_minus_cos_psi(g):
    """1 - cos ψ = ||Δτ||² / 2, without cancellation."""
    d = g.tau1 - g.tau2
    return 0.5 * _dot(d, d)


def cos_phi_algebraic(g):
    """cos φ = -τ1·τ2 + 2 (τ1·u)(τ2·u) with u = Δf / ||Δf||."""
    u = g.unit_chord
    return _clamp(-_dot(g.tau1, g.tau2) + 2.0 * _dot(g.tau1, u) * _dot(g.tau2, u))


def one_minus_cos_phi(g):
    """1 - cos φ as ||τ1 + R_u τ2||² / 2, where R_u reflects across u^⊥.

    Same value as ``1 - cos_phi_algebraic(g)`` but keeps relative accuracy
    when φ is tiny (near the diagonal, or on round circles).
    """
    u = g.unit_chord
    w = g.tau1 + g.tau2 - 2.0 * _dot(g.tau2, u)[..., None] * u
    return 0.5 * _dot(w, w)


# --------------------------------------------------------------------------
# geometric construction of the two tangent circles


class TangentCircle(NamedTuple):
    """Circle tangent to ``tau`` at ``start``; ``center`` is None for the line limit."""

    start: np.ndarray
    tau: np.ndarray
    normal: Optional[np.ndarray]
    center: Optional[np.ndarray]
    radius: float

    def tangent_at(self, x):
        """Unit tangent at ``x`` oriented along the traversal that leaves ``start`` along ``tau``."""
        if self.center is None:
            return self.tau
        rho = (np.asarray(x, float) - self.center) / self.radius
        t = -np.dot(rho, self.normal) * self.tau + np.dot(rho, self.tau) * self.normal
        return t / np.linalg.norm(t)


def tangent_circle(start, through, tau):
    """The circle tangent to ``tau`` at ``start`` and passing through ``through``.

    It lies in the plane spanned by ``tau`` and the chord.  When ``tau`` is
    parallel to the chord within ``LINE_LIMIT_TOL`` the circle degenerates to
    the line, returned with ``center=None``.
    """
    start = np.asarray(start, float)
    tau = np.asarray(tau, float)
    d = np.asarray(through, float) - start
    dn = np.linalg.norm(d)
    if dn == 0:
        raise AngleError("coincident points: no tangent circle")
    perp = d - np.dot(d, tau) * tau
    pn = np.linalg.norm(perp)
    if pn <= LINE_LIMIT_TOL * dn:
        return TangentCircle(start, tau, None, None, np.inf)
    normal = perp / pn
    radius = dn * dn / (2.0 * np.dot(d, normal))
    return TangentCircle(start, tau, normal, start + radius * normal, radius)


class ConformalAngleReport(NamedTuple):
    cos_at_f1: float
    cos_at_f2: float
    degenerate: bool


def geometric_conformal_angle(f1, f2, tau1, tau2):
    """Build C12 (tangent at f1, through f2) and C21 (tangent at f2, through f1).

    Returns the cosine of the angle between them measured at f1 and, separately,
    at f2, plus a flag for the line-limit branch.
    """
    c12 = tangent_circle(f1, f2, tau1)
    c21 = tangent_circle(f2, f1, tau2)
    at1 = float(np.clip(np.dot(np.asarray(tau1, float), c21.tangent_at(f1)), -1.0, 1.0))
    at2 = float(np.clip(np.dot(np.asarray(tau2, float), c12.tangent_at(f2)), -1.0, 1.0))
    return ConformalAngleReport(at1, at2, c12.center is None or c21.center is None)


def cos_phi_geometric(f1, f2, tau1, tau2):
    return geometric_conformal_angle(f1, f2, tau1, tau2).cos_at_f1


# --------------------------------------------------------------------------
# blend


def cos_phi_blend(cos_phi, cos_psi, theta):
    """(1 - Θ) cos φ + Θ cos ψ; a convex combination when Θ ∈ [0, 1]."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < -CLAMP_SLACK) or np.any(theta > 1.0 + CLAMP_SLACK):
        raise AssumptionViolation("A.5(b)", "Θ outside [0, 1]; the blended angle may be undefined")
    out = (1.0 - theta) * cos_phi + theta * cos_psi
    return float(out) if np.ndim(out) == 0 else out


def blended_angle(cos_phi, cos_psi, theta):
    """φ_Φ itself, for reporting."""
    return np.arccos(_clamp(cos_phi_blend(cos_phi, cos_psi, theta)))
