"""Length-constrained energy descent over truncated Fourier curves."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .curve import BI_LIPSCHITZ_MIN, bi_lipschitz_ratio, reparametrize_by_arclength
from .energy import THREADS_ENV, QuadratureSpec, energy_cosine
from .errors import ConfigError, NotEmbeddedError, OharaError

log = logging.getLogger(__name__)

# central stencils as (offset, weight) for the antisymmetric pairs; the
# fourth-order one keeps the truncation error far below evaluation noise,
# which makes the gradient rotation-covariant in practice
FD_STENCILS = {
    2: ((1.0, 0.5),),
    4: ((1.0, 2.0 / 3.0), (2.0, -1.0 / 12.0)),
}


@dataclass(frozen=True, eq=False)
class FourierCurve:
    """f(t) = Σ_{k=1..K} a_k cos(kt) + b_k sin(kt), t ∈ [0, 2π).

    ``coeffs`` has shape (2, K, dim): ``coeffs[0]`` holds the cosine vectors,
    ``coeffs[1]`` the sine vectors.  The constant mode is fixed at zero.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 3 or c.shape[0] != 2 or c.shape[1] < 1:
            raise ValueError("coefficients must have shape (2, K, dim)")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def K(self):
        return self.coeffs.shape[1]

    @property
    def dim(self):
        return self.coeffs.shape[2]

    @classmethod
    def zeros(cls, K, dim=3):
        return cls(np.zeros((2, K, dim)))

    @classmethod
    def circle(cls, K=8, dim=3, radius=1.0):
        c = np.zeros((2, K, dim))
        c[0, 0, 0] = radius
        c[1, 0, 1] = radius
        return cls(c)

    @classmethod
    def perturbed_circle(cls, amp=0.05, harmonic=3, K=8, dim=3, radius=1.0):
        """Coefficients of ((1 + a cos jt) cos t, (1 + a cos jt) sin t, a sin jt)."""
        if harmonic + 1 > K or dim < 3:
            raise ValueError("perturbed circle needs K >= harmonic + 1 and dim >= 3")
        c = cls.circle(K, dim, 1.0).coeffs.copy()
        j = harmonic
        # cos(jt)cos(t) = ½[cos((j-1)t) + cos((j+1)t)], cos(jt)sin(t) = ½[sin((j+1)t) - sin((j-1)t)]
        c[0, j, 0] += amp / 2
        c[1, j, 1] += amp / 2
        if j > 1:
            c[0, j - 2, 0] += amp / 2
            c[1, j - 2, 1] -= amp / 2
        else:
            # j = 1 feeds the constant mode, which is dropped (translation)
            pass
        c[1, j - 1, 2] += amp
        return cls(radius * c)

    def samples(self, M):
        t = 2.0 * np.pi * np.arange(M) / M
        k = np.arange(1, self.K + 1)
        kt = np.outer(t, k)
        return np.cos(kt) @ self.coeffs[0] + np.sin(kt) @ self.coeffs[1]

    def to_curve(self, N):
        M = max(N, 8 * self.K, 64)
        return reparametrize_by_arclength(self.samples(M), N, method="spectral")

    def length(self, N=256):
        return self.to_curve(N).length

    def scaled(self, factor):
        return FourierCurve(factor * self.coeffs)

    def rotated(self, R):
        return FourierCurve(self.coeffs @ np.asarray(R, float).T)

    def flat(self):
        return self.coeffs.ravel().copy()

    def with_flat(self, x):
        return FourierCurve(np.asarray(x, float).reshape(self.coeffs.shape))


@dataclass
class DescentOptions:
    N: int = 256
    max_iter: int = 50
    tol: float = 1e-6
    fd_rel_step: float = 1e-5
    fd_order: int = 4
    initial_step: float = 1e-2
    min_step: float = 1e-12
    armijo: float = 1e-4
    grow: float = 2.0
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    energy: float
    e3: float
    e4: float
    step: float
    gnorm: float
    length: float
    e4_minus_circle: float


@dataclass
class DescentTrace:
    records: list = field(default_factory=list)
    status: str = "running"

    FIELDS = tuple(TraceRecord.__dataclass_fields__)

    def append(self, rec):
        self.records.append(rec)

    def rows(self):
        return [asdict(r) for r in self.records]

    @property
    def energies(self):
        return np.array([r.energy for r in self.records])

    @property
    def lengths(self):
        return np.array([r.length for r in self.records])

    def __len__(self):
        return len(self.records)


class _Objective:
    """Energy of the reconstructed curve rescaled to length ``target_L``."""

    def __init__(self, kernel, target_L, opts):
        self.kernel = kernel
        self.target_L = target_L
        self.opts = opts
        self._circle_e4 = None

    def project(self, fc):
        return fc.scaled(self.target_L / fc.length(self.opts.N))

    def curve(self, fc):
        c = self.project(fc).to_curve(self.opts.N)
        if bi_lipschitz_ratio(c, warn=False) <= BI_LIPSCHITZ_MIN:
            raise NotEmbeddedError("iterate lost embeddedness")
        return c

    def breakdown(self, fc):
        return energy_cosine(self.curve(fc), self.kernel, self.opts.quad)

    def value(self, fc):
        return self.breakdown(fc).total

    def circle_e4(self):
        if self._circle_e4 is None:
            r = self.target_L / (2.0 * math.pi)
            circ = FourierCurve.circle(1, 3, r).to_curve(self.opts.N)
            self._circle_e4 = energy_cosine(circ, self.kernel, self.opts.quad).e4
        return self._circle_e4

    def gradient(self, fc):
        x = fc.flat()
        h = self.opts.fd_rel_step * self.target_L

        if self.opts.fd_order not in FD_STENCILS:
            raise ConfigError(f"unsupported finite-difference order {self.opts.fd_order}")
        stencil = FD_STENCILS[self.opts.fd_order]

        def f(i):
            acc = 0.0
            for offset, w in stencil:
                for sign in (1.0, -1.0):
                    xs = x.copy()
                    xs[i] += sign * offset * h
                    acc += sign * w * self.value(fc.with_flat(xs))
            return acc / h

        threads = int(os.environ.get(THREADS_ENV, "1") or 1)
        if threads > 1:
            with ThreadPoolExecutor(threads) as ex:
                g = list(ex.map(f, range(x.size)))
        else:
            g = [f(i) for i in range(x.size)]
        return np.array(g)


def minimize_under_length(start, kernel, target_L, opts=None):
    """Steepest descent on the Fourier coefficients with the length held fixed.

    Each iterate is rescaled to length ``target_L``.  A step is accepted only
    under a strict Armijo decrease; failures (including loss of embeddedness)
    halve the step.  Returns the final curve and the trace of accepted
    iterates, the first record being the start.
    """
    opts = opts or DescentOptions()
    obj = _Objective(kernel, target_L, opts)
    fc = obj.project(start)
    try:
        bd = obj.breakdown(fc)
    except NotEmbeddedError:
        raise NotEmbeddedError("start curve is not embedded") from None
    trace = DescentTrace()
    step = opts.initial_step

    def record(it, bd, step, gnorm):
        trace.append(TraceRecord(it, bd.total, bd.e3, bd.e4, step, gnorm, bd.length, bd.e4 - obj.circle_e4()))

    g = obj.gradient(fc)
    gnorm = float(np.linalg.norm(g))
    record(0, bd, 0.0, gnorm)
    for it in range(1, opts.max_iter + 1):
        if gnorm <= opts.tol:
            trace.status = "converged"
            break
        while step >= opts.min_step:
            trial = obj.project(fc.with_flat(fc.flat() - step * g))
            try:
                tbd = obj.breakdown(trial)
            except OharaError as exc:
                log.debug("step %.3g rejected: %s", step, exc)
                step /= 2.0
                continue
            if tbd.total < bd.total - opts.armijo * step * gnorm**2:
                break
            step /= 2.0
        else:
            trace.status = "step-underflow"
            break
        fc, bd = trial, tbd
        g = obj.gradient(fc)
        gnorm = float(np.linalg.norm(g))
        record(it, bd, step, gnorm)
        log.info("iter %d  E=%.12g  |g|=%.3g  step=%.3g", it, bd.total, gnorm, step)
        step *= opts.grow
    else:
        trace.status = "max-iter"
    return fc, trace
