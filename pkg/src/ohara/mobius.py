"""Möbius transformations of R^n ∪ {∞} acting on sampled curves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curve import reparametrize_by_arclength
from .errors import MobiusError

ORTHOGONAL_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Inversion:
    center: np.ndarray
    radius: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if not self.radius > 0:
            raise MobiusError("inversion radius must be positive")

    def apply(self, x):
        d = x - self.center
        r2 = np.sum(d * d, axis=-1, keepdims=True)
        if np.any(r2 == 0):
            raise MobiusError(f"point at inversion center {self.center.tolist()} maps to infinity")
        return self.center + self.radius**2 * d / r2


@dataclass(frozen=True, eq=False)
class Translation:
    vector: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vector", np.asarray(self.vector, dtype=float))

    def apply(self, x):
        return x + self.vector


@dataclass(frozen=True, eq=False)
class Rotation:
    matrix: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.matrix, dtype=float)
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise MobiusError("rotation must be a square matrix")
        if np.max(np.abs(R @ R.T - np.eye(R.shape[0]))) > ORTHOGONAL_TOL:
            raise MobiusError("rotation matrix is not orthogonal")
        object.__setattr__(self, "matrix", R)

    @classmethod
    def about_axis(cls, axis, angle):
        """3-D rotation by ``angle`` about ``axis`` (Rodrigues)."""
        k = np.asarray(axis, dtype=float)
        k = k / np.linalg.norm(k)
        K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
        return cls(np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K)

    def apply(self, x):
        return x @ self.matrix.T


@dataclass(frozen=True)
class Scaling:
    factor: float

    def __post_init__(self):
        if not self.factor > 0:
            raise MobiusError("scaling factor must be positive")

    def apply(self, x):
        return self.factor * x


@dataclass(frozen=True)
class MobiusMap:
    """Composition of primitives, applied left to right."""

    factors: tuple = ()

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        for f in self.factors:
            x = f.apply(x)
        return x

    def then(self, *more):
        return MobiusMap(tuple(self.factors) + tuple(more))


def apply_map_point(mobius_map, x):
    return mobius_map.apply(np.asarray(x, dtype=float))


def transform_curve(mobius_map, curve, N_out=None, oversample=8, min_distance=None):
    """Image of ``curve`` under the map, resampled at N_out arc-length nodes.

    The curve is trigonometrically oversampled before mapping, because an
    inversion concentrates arc length near its center.  Every inversion center
    must stay at least ``min_distance`` (default 1e-3 L of the current image)
    away from the curve.
    """
    N_out = N_out or curve.N
    pts = curve.dense_positions(oversample * curve.N)
    for f in mobius_map.factors:
        if isinstance(f, Inversion):
            chords = np.linalg.norm(pts - np.roll(pts, -1, axis=0), axis=1)
            delta = min_distance if min_distance is not None else 1e-3 * chords.sum()
            dist = float(np.min(np.linalg.norm(pts - f.center, axis=1)))
            if dist < delta:
                raise MobiusError(f"inversion center {f.center.tolist()} is {dist:.3g} from the curve (< {delta:.3g})")
        pts = f.apply(pts)
    return reparametrize_by_arclength(pts, N_out)


def distance_to_curve(point, curve, oversample=8):
    pts = curve.dense_positions(oversample * curve.N)
    return float(np.min(np.linalg.norm(pts - np.asarray(point, dtype=float), axis=1)))


def fit_circle(points):
    """Least-squares circle through points in R^n: (center, radius, max residual).

    Fits the best plane by SVD, then an algebraic (Kåsa) circle in it; the
    residual includes the out-of-plane distance.
    """
    P = np.asarray(points, dtype=float)
    mean = P.mean(axis=0)
    _, _, Vt = np.linalg.svd(P - mean)
    basis = Vt[:2]
    xy = (P - mean) @ basis.T
    A = np.column_stack([2 * xy, np.ones(len(xy))])
    b = np.sum(xy**2, axis=1)
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    c2 = sol[:2]
    radius = float(np.sqrt(sol[2] + c2 @ c2))
    center = mean + c2 @ basis
    resid = np.abs(np.linalg.norm(P - center, axis=1) - radius)
    return center, radius, float(resid.max())


def parse_map(text):
    """``"inv:cx,cy,cz,rho;scale:2;trans:x,y,z;rot:ax,ay,az,angle"`` -> MobiusMap."""
    factors = []
    for item in filter(None, (p.strip() for p in text.split(";"))):
        kind, _, arg = item.partition(":")
        try:
            vals = [float(v) for v in arg.split(",") if v.strip()]
        except ValueError:
            raise MobiusError(f"bad numbers in map factor {item!r}") from None
        if kind == "inv":
            if len(vals) < 3:
                raise MobiusError("inv needs a center and a radius")
            factors.append(Inversion(np.array(vals[:-1]), vals[-1]))
        elif kind == "scale" and len(vals) == 1:
            factors.append(Scaling(vals[0]))
        elif kind == "trans" and vals:
            factors.append(Translation(np.array(vals)))
        elif kind == "rot" and len(vals) == 4:
            factors.append(Rotation.about_axis(vals[:3], vals[3]))
        else:
            raise MobiusError(f"unrecognized map factor {item!r}")
    return MobiusMap(tuple(factors))
