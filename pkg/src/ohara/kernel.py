"""Kernels Φ and their derived quantities.

For a kernel Φ on (0, ∞) the energies need

* the tail integral ``G(x) = ∫_x^∞ dt / Φ(t)``,
* ``Λ(x) = -G(x) / x``,
* ``Θ(x) = (1 + Φ(x) Λ(x)) / 2``, the weight that blends conformal and
  tangent angles, and
* the curve-independent constant ``2 L G(L/2)``.

Power laws ``Φ(t) = t^α`` have all of these in closed form.  Tabulated kernels
are interpolated linearly in log-log coordinates, so each table segment is
itself a power law and the tail integral stays exact.  Arbitrary callables are
integrated numerically.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .errors import AssumptionViolation, KernelError

log = logging.getLogger(__name__)

SAFE_ALPHA = (2.0, 3.0)
ASSUMPTION_GRID = 10_000


def _positive(t):
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise KernelError("kernel arguments must be positive")
    return t


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """A kernel Φ: R_+ -> R_+.

    Build with :meth:`power`, :meth:`from_table`, :meth:`from_function`, or
    :func:`parse_kernel`.  ``tail_exponent`` is the declared decay exponent p
    with Φ(t) ~ t^p as t -> ∞; it truncates improper integrals.
    """

    kind: str
    alpha: Optional[float] = None
    func: Optional[Callable] = None
    table_t: Optional[np.ndarray] = None
    table_phi: Optional[np.ndarray] = None
    tail_exponent: Optional[float] = None
    small_exponent: Optional[float] = None
    unsafe: bool = False
    label: str = ""
    _cache: dict = field(default_factory=dict, repr=False)

    # -- constructors ------------------------------------------------------

    @classmethod
    def power(cls, alpha, unsafe=False):
        alpha = float(alpha)
        lo, hi = SAFE_ALPHA
        if not lo <= alpha < hi:
            if not unsafe:
                raise KernelError(f"power-law exponent {alpha} outside [{lo}, {hi}); pass unsafe=True to override")
            warnings.warn(
                f"power-law exponent {alpha} is outside [{lo}, {hi}); the energy identities may not hold",
                RuntimeWarning,
                stacklevel=2,
            )
        return cls("power", alpha=alpha, tail_exponent=alpha, small_exponent=alpha, unsafe=unsafe, label=f"power:{alpha:g}")

    @classmethod
    def from_function(cls, phi, tail_exponent, small_exponent=None, label="function"):
        """Kernel from a vectorized callable; tail integrals by adaptive quadrature."""
        return cls("function", func=phi, tail_exponent=float(tail_exponent),
                   small_exponent=None if small_exponent is None else float(small_exponent), label=label)

    @classmethod
    def from_table(cls, t, phi, tail_exponent, label="table"):
        t = np.asarray(t, dtype=float)
        phi = np.asarray(phi, dtype=float)
        order = np.argsort(t)
        t, phi = t[order], phi[order]
        if t.size < 2 or np.any(t <= 0) or np.any(phi <= 0) or np.any(np.diff(t) <= 0):
            raise KernelError("kernel table needs >= 2 distinct positive t with positive Φ")
        slopes = np.diff(np.log(phi)) / np.diff(np.log(t))
        return cls("table", table_t=t, table_phi=phi, tail_exponent=float(tail_exponent),
                   small_exponent=float(slopes[0]), label=label)

    # -- evaluation --------------------------------------------------------

    @property
    def is_power(self):
        return self.kind == "power"

    def _table_segments(self):
        t, phi = self.table_t, self.table_phi
        slopes = np.diff(np.log(phi)) / np.diff(np.log(t))
        # exponents for: below t0 | each segment | above tK
        return np.concatenate([[slopes[0]], slopes, [self.tail_exponent]])

    def phi(self, t):
        t = _positive(t)
        if self.kind == "power":
            return _out(t**self.alpha)
        if self.kind == "function":
            return _out(np.asarray(self.func(t), dtype=float))
        tt, ph = self.table_t, self.table_phi
        p = self._table_segments()
        j = np.searchsorted(tt, t, side="right")  # 0 .. K+1
        anchor = np.clip(j - 1, 0, tt.size - 1)
        return _out(ph[anchor] * (t / tt[anchor]) ** p[j])

    def tail_converges(self):
        p = self.tail_exponent
        return p is not None and p > 1

    def tail_integral(self, x):
        """G(x) = ∫_x^∞ dt / Φ(t)."""
        x = _positive(x)
        if not self.tail_converges():
            raise AssumptionViolation("A.2", f"∫_x^∞ dt/Φ diverges for {self.label} (tail exponent {self.tail_exponent})")
        if self.kind == "power":
            a = self.alpha
            return _out(x ** (1.0 - a) / (a - 1.0))
        if self.kind == "table":
            return _out(self._table_tail(x))
        if np.ndim(x) == 0:
            return self._quad_tail(float(x))
        return self._interp_tail(x)

    def _table_tail(self, x):
        tt, ph = self.table_t, self.table_phi
        p = self._table_segments()
        K = tt.size - 1

        def piece(a, b, anchor, expo):
            # ∫_a^b dt / (Φ_anchor (t / t_anchor)^expo)
            c = ph[anchor] / tt[anchor] ** expo
            one = np.abs(expo - 1.0) < 1e-14
            e = np.where(one, 0.5, expo)
            power = (b ** (1.0 - e) - a ** (1.0 - e)) / (c * (1.0 - e))
            return np.where(one, np.log(b / a) / c, power)

        P = p[-1]
        G_nodes = np.empty(K + 1)
        G_nodes[K] = tt[K] / (ph[K] * (P - 1.0))
        for k in range(K - 1, -1, -1):
            G_nodes[k] = G_nodes[k + 1] + piece(tt[k], tt[k + 1], k, p[k + 1])
        shape = x.shape
        x = np.atleast_1d(x)
        j = np.searchsorted(tt, x, side="right")
        out = np.empty_like(x)
        above = j > K
        out[above] = x[above] ** (1.0 - P) * tt[K] ** P / (ph[K] * (P - 1.0))
        below = j == 0
        out[below] = G_nodes[0] + piece(x[below], tt[0], 0, p[0])
        mid = ~(above | below)
        jm = j[mid]
        out[mid] = G_nodes[jm] + piece(x[mid], tt[jm], jm - 1, p[jm])
        return out.reshape(shape)

    def _quad_tail(self, x):
        # substitute t = x e^y; beyond X = x e^Y assume Φ ∝ t^p (exact for power tails)
        p = self.tail_exponent
        Y = min(80.0, 40.0 / (p - 1.0))
        val, _ = quad(lambda y: x * math.exp(y) / float(self.func(x * math.exp(y))), 0.0, Y,
                      epsabs=0.0, epsrel=1e-13, limit=400)
        X = x * math.exp(Y)
        return val + X / ((p - 1.0) * float(self.func(X)))

    def _interp_tail(self, x):
        lo, hi = float(x.min()), float(x.max())
        key = (math.floor(math.log2(lo)), math.ceil(math.log2(hi)) + 1)
        spline = self._cache.get(key)
        if spline is None:
            nodes = np.exp2(np.linspace(key[0], key[1], 64 * (key[1] - key[0]) + 1))
            G = np.empty(nodes.size)
            G[-1] = self._quad_tail(nodes[-1])
            for k in range(nodes.size - 2, -1, -1):
                seg, _ = quad(lambda t: 1.0 / float(self.func(t)), nodes[k], nodes[k + 1], epsabs=0.0, epsrel=1e-13)
                G[k] = G[k + 1] + seg
            spline = CubicSpline(np.log(nodes), np.log(G))
            self._cache[key] = spline
        return np.exp(spline(np.log(x)))

    def lam(self, t):
        t = _positive(t)
        if self.kind == "power":
            if not self.tail_converges():
                raise AssumptionViolation("A.2", f"Λ undefined: ∫_x^∞ dt/t^{self.alpha} diverges")
            return _out(-(t ** (-self.alpha)) / (self.alpha - 1.0))
        return _out(-self.tail_integral(t) / t)

    def theta(self, t):
        t = _positive(t)
        if self.kind == "power":
            if not self.tail_converges():
                raise AssumptionViolation("A.2", "Θ undefined without a convergent tail")
            a = self.alpha
            return _out(np.full(np.shape(t), (a - 2.0) / (2.0 * (a - 1.0))))
        return _out(0.5 * (1.0 + self.phi(t) * self.lam(t)))

    def tail_constant(self, L):
        if not L > 0:
            raise KernelError("length must be positive")
        if self.kind == "power":
            if not self.tail_converges():
                raise AssumptionViolation("A.2", "tail constant diverges")
            a = self.alpha
            return 2.0**a / ((a - 1.0) * L ** (a - 2.0))
        return 2.0 * L * float(self.tail_integral(L / 2.0))

    def singular_exponent(self, t_small):
        """Exponent a with Φ(t) ~ t^a at the scale ``t_small`` (drives the diagonal correction)."""
        if self.small_exponent is not None:
            return self.small_exponent
        t0 = float(t_small)
        return float(np.log(self.phi(t0 * 1.01) / self.phi(t0 / 1.01)) / np.log(1.01**2))


# -- module-level operations ----------------------------------------------


def phi_eval(kernel, t):
    return kernel.phi(t)


def lambda_eval(kernel, t):
    return kernel.lam(t)


def theta_eval(kernel, t):
    return kernel.theta(t)


def tail_constant(kernel, L):
    return kernel.tail_constant(L)


def load_kernel_file(path):
    """Tabulated kernel: a ``tail_exponent P`` header line then ``t Φ(t)`` rows."""
    path = Path(path)
    tail = None
    rows = []
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.strip().lstrip("#").strip()
        if not line:
            continue
        try:
            if line.lower().startswith("tail_exponent"):
                tail = float(line.replace("=", " ").replace(":", " ").split()[1])
                continue
            rows.append([float(v) for v in line.split()])
        except (ValueError, IndexError):
            raise KernelError(f"{path}: cannot parse line {lineno}: {raw!r}") from None
    if tail is None:
        raise KernelError(f"{path}: missing 'tail_exponent P' header line")
    data = np.asarray(rows, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise KernelError(f"{path}: expected two columns t, Φ(t)")
    return KernelSpec.from_table(data[:, 0], data[:, 1], tail, label=f"file:{path}")


def parse_kernel(text, unsafe=False):
    """``"power:2.5"`` or ``"file:PATH"``."""
    kind, _, arg = text.partition(":")
    if kind == "power":
        try:
            alpha = float(arg)
        except ValueError:
            raise KernelError(f"bad power-law exponent {arg!r}") from None
        return KernelSpec.power(alpha, unsafe=unsafe)
    if kind == "file":
        return load_kernel_file(arg)
    raise KernelError(f"unknown kernel selector {text!r}")


# -- assumption checks -----------------------------------------------------


@dataclass
class Verdict:
    name: str
    status: str  # "pass", "fail" or "not-checkable"
    detail: str
    value: Optional[float] = None

    @property
    def passed(self):
        return self.status == "pass"


@dataclass
class AssumptionReport:
    kernel: str
    length: float
    verdicts: dict

    def __getitem__(self, name):
        return self.verdicts[name]

    @property
    def checked_pass(self):
        return all(v.passed for v in self.verdicts.values() if v.status != "not-checkable")

    def rows(self):
        return [
            {"assumption": v.name, "status": v.status, "value": v.value, "detail": v.detail}
            for v in self.verdicts.values()
        ]


def _geometric_grid(hi, decades=8, n=ASSUMPTION_GRID):
    return np.geomspace(hi * 10.0**-decades, hi, n)


def _check_monotone(kernel, L):
    x = _geometric_grid(L)
    vals = np.asarray(kernel.phi(x))
    steps = np.diff(vals)
    ok = bool(np.all(steps > 0))
    return Verdict("A.1", "pass" if ok else "fail", f"Φ increasing on {x.size} geometric samples of (0, L]",
                   float(steps.min()))


def _check_tail(kernel, L, doublings=60, window=20):
    x0 = L / 2.0
    edges = x0 * 2.0 ** np.arange(doublings + 1)
    pieces = np.array([
        quad(lambda t: 1.0 / float(kernel.phi(t)), a, b, epsabs=0.0, epsrel=1e-10)[0]
        for a, b in zip(edges[:-1], edges[1:])
    ])
    ratios = pieces[1:] / pieces[:-1]
    r = float(ratios[-window:].max())
    declared = kernel.tail_exponent
    declared_ok = declared is None or declared > 1
    ok = r < 1.0 - 1e-3 and declared_ok
    estimate = float(pieces.sum() + pieces[-1] * r / (1.0 - r)) if r < 1 else math.inf
    detail = f"dyadic tail pieces from L/2 shrink by ratio {r:.4g}"
    if not declared_ok:
        detail += f"; declared tail exponent {declared} <= 1"
    return Verdict("A.2", "pass" if ok else "fail", detail, estimate)


def _check_doubling(kernel, L):
    if kernel.is_power:
        return Verdict("A.5(a)", "pass", f"Φ(λx) = λ^{kernel.alpha:g} Φ(x): C(λ, L) = λ^α > 0", None)
    x = _geometric_grid(L / 2.0, n=2000)
    worst = math.inf
    for lam in np.linspace(0.05, 0.95, 19):
        worst = min(worst, float(np.min(np.asarray(kernel.phi(lam * x)) / np.asarray(kernel.phi(x)))))
    return Verdict("A.5(a)", "pass" if worst > 0 else "fail", "sampled min of Φ(λx)/Φ(x) over λ ∈ [0.05, 0.95]", worst)


def _check_infimum(kernel, L, tol=1e-12):
    x = _geometric_grid(L / 2.0)
    try:
        kernel.lam(x)
    except AssumptionViolation as exc:
        return Verdict("A.5(b)", "fail", f"Λ undefined ({exc})", None)
    phi = np.asarray(kernel.phi(x))
    # 1/Φ + Λ = 2Θ/Φ; Θ is closed-form for power laws, so no cancellation at small x
    two_theta = 2.0 * np.asarray(kernel.theta(x))
    g = two_theta / phi
    ok = bool(np.min(two_theta) >= -tol)
    return Verdict("A.5(b)", "pass" if ok else "fail", f"inf of 1/Φ + Λ over {x.size} geometric samples of (0, L/2]",
                   float(g.min()))


def check_assumptions(kernel, L):
    """Numerical verdicts on A.1, A.2, A.5(a), A.5(b); A.3/A.4 are analytic only."""
    if not L > 0:
        raise KernelError("length must be positive")
    verdicts = [
        _check_monotone(kernel, L),
        _check_tail(kernel, L),
        Verdict("A.3", "not-checkable", "analytic, not machine-checkable (bi-Lipschitz proxy lives in the curve module)"),
        Verdict("A.4", "not-checkable", "analytic, not machine-checkable (ε -> 0 limits of the pair (Φ, f))"),
        _check_doubling(kernel, L),
        _check_infimum(kernel, L),
    ]
    return AssumptionReport(kernel.label, float(L), {v.name: v for v in verdicts})
