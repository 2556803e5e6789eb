"""Closed curves sampled uniformly in arc length.

A :class:`Curve` stores ``N`` positions ``f(s_i)`` at ``s_i = i L / N`` on
``R / L Z`` together with unit tangents.  Everything downstream (energies,
angles, Möbius transport, descent) assumes the unit-speed premise, so every
constructor here ends in an arc-length resampling step.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator
from scipy.signal import resample as fourier_resample

from .errors import CurveError, NotEmbeddedError

log = logging.getLogger(__name__)

# Below this value of min ||Δf|| / D a sampled curve is treated as non-embedded.
BI_LIPSCHITZ_MIN = 1e-3
UNIT_TANGENT_TOL = 1e-12
# The spectral resampling path is taken when the upper half of the Fourier
# spectrum is below SPECTRAL_TAIL_TOL, or when the spectrum decays
# geometrically (top quarter / second quarter < SPECTRAL_DECAY_TOL); rougher
# input parametrizations fall back to splines.
SPECTRAL_TAIL_TOL = 1e-10
SPECTRAL_DECAY_TOL = 1e-3


# --------------------------------------------------------------------------
# spectral helpers


def spectral_derivative(values, period, order=1):
    """Fourier derivative of periodic samples along axis 0."""
    values = np.asarray(values, dtype=float)
    N = values.shape[0]
    k = np.fft.fftfreq(N, d=1.0 / N) * (2.0 * np.pi / period)
    if order % 2 == 1 and N % 2 == 0:
        k[N // 2] = 0.0
    mult = (1j * k) ** order
    shape = (N,) + (1,) * (values.ndim - 1)
    return np.fft.ifft(mult.reshape(shape) * np.fft.fft(values, axis=0), axis=0).real


class _TrigSeries:
    """Real trigonometric interpolant of uniform periodic samples on [0, 2π).

    Coefficients below ``rtol`` times the largest one are dropped from the
    top of the spectrum, which keeps off-grid evaluation cheap for smooth data.
    The Nyquist mode is discarded.
    """

    def __init__(self, samples, rtol=1e-16):
        samples = np.asarray(samples, dtype=float)
        self.scalar = samples.ndim == 1
        data = samples.reshape(samples.shape[0], -1)
        M = data.shape[0]
        c = np.fft.rfft(data, axis=0) / M
        c = c[: (M - 1) // 2 + 1]
        mag = np.abs(c).max(axis=1)
        n = len(mag)
        self.tail_ratio = float(mag[n // 2 :].max() / mag.max()) if mag.max() > 0 else 0.0
        # geometric decay (smooth data) makes the top quarter tiny next to the
        # second quarter; a kink gives algebraic decay and a ratio of O(0.1)
        mid = mag[n // 4 : n // 2].max() if n >= 8 else 0.0
        self.decay_ratio = float(mag[3 * n // 4 :].max() / mid) if mid > 0 else 0.0
        keep = np.nonzero(mag > rtol * mag.max())[0]
        K = int(keep[-1]) if keep.size else 0
        self.coef = c[: K + 1]
        self.M = M

    @property
    def mean(self):
        return self.coef[0].real

    def __call__(self, t, deriv=0, chunk=512):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        k = np.arange(1, len(self.coef))
        weights = self.coef[1:] * (1j * k[:, None]) ** deriv
        out = np.empty((t.size, self.coef.shape[1]))
        for lo in range(0, t.size, chunk):
            tt = t[lo : lo + chunk]
            E = np.exp(1j * np.outer(tt, k))
            out[lo : lo + chunk] = 2.0 * (E @ weights).real
        if deriv == 0:
            out += self.mean
        return out[:, 0] if self.scalar else out

    def antiderivative(self, t, chunk=512):
        """∫_0^t of the (scalar) series."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        k = np.arange(1, len(self.coef))
        w = self.coef[1:, 0] / (1j * k)
        out = np.empty(t.size)
        for lo in range(0, t.size, chunk):
            tt = t[lo : lo + chunk]
            E = np.exp(1j * np.outer(tt, k)) - 1.0
            out[lo : lo + chunk] = 2.0 * (E @ w).real
        return out + self.mean[0] * t

    def dense(self, Md, deriv=0):
        """Values (or derivatives) of the interpolant on a uniform grid of Md points."""
        K = len(self.coef) - 1
        if K >= Md // 2:
            raise ValueError("dense grid too coarse for the retained spectrum")
        k = np.arange(K + 1)
        spec = np.zeros((Md // 2 + 1, self.coef.shape[1]), dtype=complex)
        spec[: K + 1] = self.coef * ((1j * k[:, None]) ** deriv) * Md
        return np.fft.irfft(spec, n=Md, axis=0)


def _arclength_parameters(speed_samples, N):
    """Parameters t_i on [0, 2π) with s(t_i) = i L / N, and the length L.

    ``speed_samples`` are |f'(t)| on a uniform grid.  The cumulative length is
    integrated spectrally and inverted by Newton's method, starting from a
    trapezoid-table guess.
    """
    speed_samples = np.asarray(speed_samples, dtype=float)
    scale = speed_samples.max()
    if not np.all(speed_samples > 1e-12 * scale):
        raise CurveError("cumulative arc length is non-monotone (vanishing speed)")
    speed = _TrigSeries(speed_samples)
    L = 2.0 * np.pi * speed.mean[0]
    M = speed_samples.size
    grid = 2.0 * np.pi * np.arange(M + 1) / M
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (speed_samples + np.roll(speed_samples, -1)))])
    cum *= L / cum[-1]
    target = L * np.arange(N) / N
    t = np.interp(target, cum, grid)
    for _ in range(50):
        r = speed.antiderivative(t) - target
        t = t - r / speed(t)
        if np.max(np.abs(r)) <= 8 * np.finfo(float).eps * L:
            break
    else:
        raise CurveError("arc-length inversion did not converge")
    return t, L


def _spectral_resample(samples, N):
    series = _TrigSeries(samples)
    Md = max(2048, 8 * N, 4 * samples.shape[0])
    speed = np.linalg.norm(series.dense(Md, deriv=1), axis=1)
    t, L = _arclength_parameters(speed, N)
    return series(t), L


def _spline_resample(samples, N, sub=8, order=6):
    """Periodic cubic spline in the chordal parameter; lengths by Gauss-Legendre."""
    M, n = samples.shape
    chords = np.linalg.norm(np.roll(samples, -1, axis=0) - samples, axis=1)
    lam = np.concatenate([[0.0], np.cumsum(chords)])
    spline = CubicSpline(lam, np.vstack([samples, samples[:1]]), bc_type="periodic")
    dspline = spline.derivative()

    def speed(x):
        return np.linalg.norm(dspline(x.ravel()).reshape(x.shape + (n,)), axis=-1)

    xg, wg = np.polynomial.legendre.leggauss(order)
    nodes = np.interp(np.arange(M * sub + 1) / sub, np.arange(M + 1), lam)
    a, b = nodes[:-1], nodes[1:]
    half = 0.5 * (b - a)
    seg = half * (speed(0.5 * (a + b)[:, None] + half[:, None] * xg) @ wg)
    if np.any(seg <= 0):
        raise CurveError("cumulative arc length is non-monotone after cleanup")
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    L = cum[-1]
    target = L * np.arange(N) / N
    lam_t = PchipInterpolator(cum, nodes)(target)
    for _ in range(4):
        j = np.clip(np.searchsorted(nodes, lam_t, side="right") - 1, 0, nodes.size - 2)
        h = 0.5 * (lam_t - nodes[j])
        s = cum[j] + h * (speed(nodes[j][:, None] + h[:, None] * (xg + 1.0)) @ wg)
        lam_t = lam_t - (s - target) / speed(lam_t)
    return spline(lam_t), L


# --------------------------------------------------------------------------
# the curve type


@dataclass(frozen=True, eq=False)
class Curve:
    """Closed curve sampled at N uniform arc-length nodes.

    ``positions`` and ``tangents`` are read-only ``(N, dim)`` arrays; sample
    ``N`` wraps to sample 0.
    """

    positions: np.ndarray
    tangents: np.ndarray
    length: float

    def __post_init__(self):
        P = np.array(self.positions, dtype=float)
        T = np.array(self.tangents, dtype=float)
        if P.ndim != 2 or P.shape != T.shape:
            raise CurveError("positions and tangents must be matching (N, dim) arrays")
        N, dim = P.shape
        if dim < 2:
            raise CurveError("ambient dimension must be at least 2")
        if N < 16 or N % 2:
            raise CurveError(f"sample count must be even and >= 16, got {N}")
        if not (self.length > 0 and math.isfinite(self.length)):
            raise CurveError("total length must be positive")
        if np.max(np.abs(np.linalg.norm(T, axis=1) - 1.0)) > UNIT_TANGENT_TOL:
            raise CurveError("tangents are not unit vectors")
        P.setflags(write=False)
        T.setflags(write=False)
        object.__setattr__(self, "positions", P)
        object.__setattr__(self, "tangents", T)
        object.__setattr__(self, "length", float(self.length))

    @classmethod
    def from_uniform_positions(cls, positions, length):
        """Build from positions already at uniform arc length; tangents are spectral."""
        P = np.asarray(positions, dtype=float)
        D = spectral_derivative(P, length)
        return cls(P, D / np.linalg.norm(D, axis=1)[:, None], length)

    @property
    def N(self):
        return self.positions.shape[0]

    @property
    def dim(self):
        return self.positions.shape[1]

    @property
    def h(self):
        return self.length / self.N

    @property
    def s(self):
        return self.h * np.arange(self.N)

    def scaled(self, factor):
        return Curve(self.positions * factor, self.tangents, self.length * factor)

    def shifted(self, k):
        """Same curve with the starting sample moved by ``k`` indices."""
        return Curve(np.roll(self.positions, -k, axis=0), np.roll(self.tangents, -k, axis=0), self.length)

    def rigid_motion(self, rotation, offset=None):
        R = np.asarray(rotation, dtype=float)
        P = self.positions @ R.T
        if offset is not None:
            P = P + np.asarray(offset, dtype=float)
        return Curve(P, self.tangents @ R.T, self.length)

    def dense_positions(self, M):
        """Trigonometric interpolation of the positions onto M uniform nodes."""
        return fourier_resample(self.positions, M, axis=0)

    def curvature(self):
        return np.linalg.norm(spectral_derivative(self.positions, self.length, order=2), axis=1)

    def chord_tolerance(self):
        """Relative chord-vs-spacing tolerance, 10/N² scaled by (κ_max L / 2π)²."""
        bend = self.curvature().max() * self.length / (2.0 * np.pi)
        return 10.0 / self.N**2 * max(1.0, bend**2)

    def check_invariants(self):
        """Verdicts for the unit-tangent, chord-consistency and embedding invariants."""
        chords = np.linalg.norm(np.roll(self.positions, -1, axis=0) - self.positions, axis=1)
        chord_dev = float(np.max(np.abs(chords / self.h - 1.0)))
        ratio = bi_lipschitz_ratio(self, warn=False)
        return {
            "unit_tangents": bool(np.max(np.abs(np.linalg.norm(self.tangents, axis=1) - 1.0)) <= UNIT_TANGENT_TOL),
            "chord_consistency": bool(chord_dev <= self.chord_tolerance()),
            "chord_deviation": chord_dev,
            "bi_lipschitz": ratio > BI_LIPSCHITZ_MIN,
            "bi_lipschitz_ratio": ratio,
        }


# --------------------------------------------------------------------------
# operations


def intrinsic_distance(s1, s2, L):
    """Shorter-arc distance on R / L Z; broadcasts over arrays."""
    d = np.mod(np.abs(np.asarray(s1, dtype=float) - np.asarray(s2, dtype=float)), L)
    out = np.minimum(d, L - d)
    return float(out) if np.ndim(out) == 0 else out


def bi_lipschitz_ratio(curve, block=256, warn=True):
    """min over distinct sample pairs of ||Δf|| / D, a finite proxy for bi-Lipschitz.

    Coincident distinct samples give 0; a ``RuntimeWarning`` flags ratios at
    or below ``BI_LIPSCHITZ_MIN``.
    """
    P = curve.positions
    N = curve.N
    idx = np.arange(N)
    best = np.inf
    for lo in range(0, N, block):
        rows = idx[lo : lo + block]
        k = (idx[None, :] - rows[:, None]) % N
        arc = np.minimum(k, N - k) * curve.h
        chord = np.linalg.norm(P[rows, None, :] - P[None, :, :], axis=2)
        mask = k != 0
        best = min(best, float(np.min(chord[mask] / arc[mask])))
    if warn and best <= BI_LIPSCHITZ_MIN:
        warnings.warn(f"curve is not embedded: bi-Lipschitz ratio {best:.3g}", RuntimeWarning, stacklevel=2)
    return best


def reparametrize_by_arclength(samples, N, method="auto"):
    """Resample a closed curve, given as points in parameter order, at N arc-length nodes.

    ``method`` is ``"spectral"`` (trigonometric interpolation in the sample
    index, accurate to rounding for smooth periodic parametrizations),
    ``"spline"`` (periodic cubic spline in the chordal parameter), or
    ``"auto"``, which picks the spectral path when the input spectrum is
    negligible at the top or decays geometrically.  Tangents come from
    Fourier differentiation of the resampled positions.
    """
    Q = np.asarray(samples, dtype=float)
    if Q.ndim != 2 or Q.shape[1] < 2:
        raise CurveError("samples must be an (M, dim) array with dim >= 2")
    if N < 16 or N % 2:
        raise CurveError(f"sample count must be even and >= 16, got {N}")
    scale = float(np.ptp(Q, axis=0).max())
    if scale == 0.0:
        raise CurveError("all samples coincide")
    if np.linalg.norm(Q[-1] - Q[0]) <= 1e-12 * scale:
        Q = Q[:-1]
    if Q.shape[0] < 16:
        raise CurveError("need at least 16 distinct samples")
    steps = np.linalg.norm(np.roll(Q, -1, axis=0) - Q, axis=1)
    if np.any(steps <= 1e-14 * scale):
        raise CurveError("duplicate consecutive points")

    if method == "auto":
        series = _TrigSeries(Q)
        smooth = series.tail_ratio < SPECTRAL_TAIL_TOL or series.decay_ratio < SPECTRAL_DECAY_TOL
        method = "spectral" if smooth else "spline"
        log.debug("reparametrize_by_arclength: using %s path", method)
    if method == "spectral":
        P, L = _spectral_resample(Q, N)
    elif method == "spline":
        P, L = _spline_resample(Q, N)
    else:
        raise CurveError(f"unknown resampling method {method!r}")
    return Curve.from_uniform_positions(P, L)


# --------------------------------------------------------------------------
# named families; every one is a trigonometric polynomial in t ∈ [0, 2π)


def _pad(cols, dim, need=2):
    if dim < need:
        raise CurveError(f"family needs ambient dimension >= {need}")
    cols = list(cols) + [np.zeros_like(cols[0])] * (dim - len(cols))
    return np.stack(cols, axis=1)


def _circle(t, dim, r=1.0):
    if r <= 0:
        raise CurveError("circle radius must be positive")
    return _pad([r * np.cos(t), r * np.sin(t)], dim), 1


def _ellipse(t, dim, a=2.0, b=1.0):
    if a <= 0 or b <= 0:
        raise CurveError("ellipse semi-axes must be positive")
    return _pad([a * np.cos(t), b * np.sin(t)], dim), 1


def _torus_knot(t, dim, p=2, q=3, R=2.0, r=1.0):
    p, q = int(p), int(q)
    if not R > r > 0:
        raise CurveError("torus knot needs R > r > 0")
    if p < 1 or q < 1 or math.gcd(p, q) != 1:
        raise CurveError("torus knot needs coprime positive p, q")
    rad = R + r * np.cos(q * t)
    return _pad([rad * np.cos(p * t), rad * np.sin(p * t), -r * np.sin(q * t)], dim, need=3), p + q


def _trefoil(t, dim, R=2.0, r=1.0):
    return _torus_knot(t, dim, 2, 3, R, r)


def _perturbed_circle(t, dim, amp=0.05, harmonic=3, r=1.0):
    k = int(harmonic)
    if r <= 0 or not 0 <= amp < 1 or k < 1:
        raise CurveError("perturbed circle needs r > 0, 0 <= amp < 1, harmonic >= 1")
    rad = r * (1.0 + amp * np.cos(k * t))
    return _pad([rad * np.cos(t), rad * np.sin(t), r * amp * np.sin(k * t)], dim, need=3), k + 1


CURVE_FAMILIES: dict[str, Callable] = {
    "circle": _circle,
    "ellipse": _ellipse,
    "trefoil": _trefoil,
    "torus-knot": _torus_knot,
    "perturbed-circle": _perturbed_circle,
}


def make_named_curve(name, N=256, dim=3, **params):
    """Arc-length sampled member of a named curve family.

    >>> make_named_curve("circle", N=64, r=2.0).length  # doctest: +ELLIPSIS
    12.566370614359...
    """
    try:
        family = CURVE_FAMILIES[name]
    except KeyError:
        raise CurveError(f"unknown curve family {name!r}; known: {sorted(CURVE_FAMILIES)}") from None
    try:
        _, top = family(np.zeros(1), dim, **params)
    except TypeError as exc:
        raise CurveError(f"bad parameters for {name}: {exc}") from None
    M = max(64, 8 * top)
    t = 2.0 * np.pi * np.arange(M) / M
    samples, _ = family(t, dim, **params)
    curve = reparametrize_by_arclength(samples, N, method="spectral")
    ratio = bi_lipschitz_ratio(curve, warn=False)
    if ratio <= BI_LIPSCHITZ_MIN:
        raise NotEmbeddedError(f"{name} with {params} is not embedded (bi-Lipschitz ratio {ratio:.3g})")
    return curve


# --------------------------------------------------------------------------
# text files and string specs


def read_curve_file(path):
    """Points of a curve file: one point per line, whitespace-separated coordinates."""
    pts = np.loadtxt(Path(path), ndmin=2, comments="#")
    if pts.shape[1] < 2:
        raise CurveError(f"{path}: need at least two coordinates per line")
    return pts


def write_curve_file(path, curve):
    np.savetxt(Path(path), curve.positions, fmt="%.17g")


def _parse_value(text):
    try:
        return int(text)
    except ValueError:
        return float(text)


def parse_params(text):
    """``"R=2,r=1"`` -> {"R": 2, "r": 1.0}."""
    out = {}
    for item in filter(None, (p.strip() for p in text.split(","))):
        key, sep, val = item.partition("=")
        if not sep:
            raise CurveError(f"expected key=value, got {item!r}")
        out[key.strip()] = _parse_value(val.strip())
    return out


def curve_from_spec(spec, N, dim=3):
    """``"trefoil:R=2,r=1"``, ``"circle"`` or ``"file:PATH"`` -> Curve."""
    name, _, rest = spec.partition(":")
    if name == "file":
        return reparametrize_by_arclength(read_curve_file(rest), N)
    return make_named_curve(name, N=N, dim=dim, **parse_params(rest))
