"""``ohara`` command line: eval, compare, invariance, assumptions, minimize, sweep, angles."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .curve import curve_from_spec
from .energy import EVALUATORS, QuadratureSpec, evaluate
from .errors import ConfigError, OharaError
from .kernel import KernelSpec, check_assumptions, parse_kernel
from .minimize import DescentOptions, FourierCurve, minimize_under_length
from .mobius import Inversion, distance_to_curve, parse_map, transform_curve

DEFAULT_SEED = 20240607
LADDER = (128, 256, 512, 1024)
COMPARE_METHODS = ("direct", "decomp", "pv", "cosine")


@dataclass
class RunConfig:
    """Everything a run depends on; the header hash is taken over this."""

    command: str
    curve: str = "circle"
    kernel: str = "power:2"
    n: int = 256
    m: int = 1
    correction: bool = True
    dim: int = 3
    fmt: str = "csv"
    output: str = "-"
    seed: int = DEFAULT_SEED
    unsafe: bool = False
    options: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)

    def digest(self):
        # where the table is written does not change what is in it
        ident = {k: v for k, v in asdict(self).items() if k != "output"}
        return hashlib.sha256(json.dumps(ident, sort_keys=True).encode()).hexdigest()[:16]

    @property
    def quad(self):
        return QuadratureSpec(m=self.m, correction=self.correction)

    def kernel_spec(self):
        return parse_kernel(self.kernel, unsafe=self.unsafe)

    def make_curve(self, n=None):
        return curve_from_spec(self.curve, n or self.n, dim=self.dim)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(rows, config, fmt="csv"):
    """Header line plus CSV, or a JSON document with the same row fields."""
    header = f"# ohara {__version__} config={config.digest()}"
    if fmt == "json":
        doc = {"tool": "ohara", "version": __version__, "config_hash": config.digest(),
               "config": asdict(config), "rows": rows}
        return json.dumps(doc, indent=1, default=_json_default) + "\n"
    if fmt != "csv":
        raise ConfigError(f"unknown output format {fmt!r}")
    buf = io.StringIO()
    buf.write(header + "\n")
    if rows:
        w = csv.writer(buf, lineterminator="\n")
        cols = list(rows[0])
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in cols])
    return buf.getvalue()


def _json_default(v):
    if isinstance(v, np.generic):
        return v.item()
    raise TypeError(f"not serializable: {type(v)}")


def emit(rows, config):
    text = render(rows, config, config.fmt)
    if config.output in ("-", ""):
        sys.stdout.write(text)
    else:
        Path(config.output).write_text(text)


# -- commands --------------------------------------------------------------


def run_eval(config):
    kernel = config.kernel_spec()
    curve = config.make_curve()
    methods = list(EVALUATORS) if config.options.get("method") == "all" else [config.options.get("method", "cosine")]
    return [evaluate(curve, kernel, meth, config.quad).as_row() for meth in methods]


def _order(a, b):
    # observed order from two successive errors on a doubling ladder
    if a is None or b is None or a <= 0 or b <= 0:
        return None
    return math.log2(a / b)


def run_compare(config):
    """All four evaluators over the N-ladder, deviations from cosine, observed orders."""
    kernel = config.kernel_spec()
    ladder = config.options.get("ladder", list(LADDER))
    totals = {}
    for n in ladder:
        curve = config.make_curve(n)
        for meth in COMPARE_METHODS:
            totals[n, meth] = evaluate(curve, kernel, meth, config.quad).total
    rows = []
    devs = {}
    for k, n in enumerate(ladder):
        ref = totals[n, "cosine"]
        for meth in COMPARE_METHODS:
            dev = devs[n, meth] = abs(totals[n, meth] - ref) / abs(ref) if ref else abs(totals[n, meth])
            prev_dev = devs[ladder[k - 1], meth] if k else None
            self_order = None
            if k >= 2:
                d1 = abs(totals[ladder[k - 1], meth] - totals[ladder[k - 2], meth])
                d2 = abs(totals[n, meth] - totals[ladder[k - 1], meth])
                self_order = _order(d1, d2)
            rows.append({
                "N": n,
                "method": meth,
                "total": totals[n, meth],
                "dev_vs_cosine": dev,
                "order_dev": _order(prev_dev, dev) if meth != "cosine" else None,
                "order_self": self_order,
            })
    return rows


def run_invariance(config):
    kernel = config.kernel_spec()
    method = config.options.get("method", "cosine")
    curve = config.make_curve()
    mobius_map = parse_map(config.options["map"])
    image = transform_curve(mobius_map, curve, config.n)
    before = evaluate(curve, kernel, method, config.quad).total
    after = evaluate(image, kernel, method, config.quad).total
    centers = [f.center for f in mobius_map.factors if isinstance(f, Inversion)]
    dmin = min((distance_to_curve(c, curve) for c in centers), default=None)
    return [{
        "method": method,
        "N": config.n,
        "alpha": kernel.alpha,
        "before": before,
        "after": after,
        "rel_dev": abs(after - before) / abs(before),
        "length_before": curve.length,
        "length_after": image.length,
        "center_distance": dmin,
    }]


def run_assumptions(config):
    # the checker exists to judge kernels, so out-of-range exponents are accepted here
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        kernel = parse_kernel(config.kernel, unsafe=True)
    L = config.options.get("length") or config.make_curve().length
    report = check_assumptions(kernel, L)
    return [{"kernel": kernel.label, "length": L, **row} for row in report.rows()]


def _parse_start(text, K):
    name, _, rest = text.partition(":")
    vals = [float(v) for v in rest.split(",") if v.strip()]
    if name == "circle":
        return FourierCurve.circle(K)
    if name == "perturbed-circle":
        amp = vals[0] if vals else 0.05
        harmonic = int(vals[1]) if len(vals) > 1 else 3
        return FourierCurve.perturbed_circle(amp, harmonic, K)
    raise ConfigError(f"unknown start curve {text!r}; use circle or perturbed-circle:AMP,HARMONIC")


def run_minimize(config):
    kernel = config.kernel_spec()
    o = config.options
    start = _parse_start(o.get("start", "perturbed-circle:0.05,3"), o.get("K", 8))
    opts = DescentOptions(N=config.n, max_iter=o.get("iters", 50), tol=o.get("tol", 1e-6), quad=config.quad)
    _, trace = minimize_under_length(start, kernel, o.get("length", 2.0 * math.pi), opts)
    rows = trace.rows()
    if o.get("trace"):
        Path(o["trace"]).write_text(render(rows, config, "csv"))
    last = dict(rows[-1])
    last["status"] = trace.status
    return [last]


def run_sweep(config):
    alphas = config.options.get("alphas", [2.0, 2.25, 2.5, 2.75, 2.9])
    curve = config.make_curve()
    rows = []
    for a in alphas:
        kernel = KernelSpec.power(a, unsafe=config.unsafe)
        bd = evaluate(curve, kernel, "cosine", config.quad)
        theta = float(kernel.theta(1.0))
        rows.append({
            "alpha": a,
            "theta": theta,
            "one_minus_theta": 1.0 - theta,
            "tail_constant": kernel.tail_constant(curve.length),
            "length": curve.length,
            "total": bd.total,
            "e3": bd.e3,
            "e4": bd.e4,
            "normalized": curve.length ** (a - 2.0) * bd.total,
        })
    return rows


def run_angles(config):
    from .energy import pair_angle_table

    table = pair_angle_table(config.make_curve(), config.kernel_spec(), config.quad)
    cols = ("s1", "s2", "cos_psi", "cos_phi", "cos_phi_blend")
    return [dict(zip(cols, map(float, r))) for r in table]


COMMANDS = {
    "eval": run_eval,
    "compare": run_compare,
    "invariance": run_invariance,
    "assumptions": run_assumptions,
    "minimize": run_minimize,
    "sweep": run_sweep,
    "angles": run_angles,
}


# -- argument parsing ------------------------------------------------------


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--curve", default="circle", help="NAME[:k=v,...] or file:PATH")
    common.add_argument("--kernel", default="power:2", help="power:ALPHA or file:PATH")
    common.add_argument("--n", type=int, default=256, help="arc-length samples")
    common.add_argument("--m", type=int, default=1, help="excluded diagonal half-width")
    common.add_argument("--no-correction", action="store_true", help="plain trapezoid sum near the diagonal")
    common.add_argument("--dim", type=int, default=3)
    common.add_argument("--out", choices=("csv", "json"), default="csv")
    common.add_argument("--output", "-o", default="-", help="output path (default stdout)")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--unsafe", action="store_true", help="allow power laws outside [2, 3)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="ohara", description=__doc__)
    p.add_argument("--version", action="version", version=f"ohara {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("eval", parents=[common], help="energy breakdown for one curve")
    s.add_argument("--method", default="cosine", choices=sorted(EVALUATORS) + ["all"])

    s = sub.add_parser("compare", parents=[common], help="all evaluators over an N-ladder")
    s.add_argument("--ladder", type=_ints, default=list(LADDER))

    s = sub.add_parser("invariance", parents=[common], help="energy before and after a Möbius map")
    s.add_argument("--map", required=True, help="inv:cx,cy,cz,rho;scale:S;trans:x,y,z;rot:ax,ay,az,angle")
    s.add_argument("--method", default="cosine", choices=sorted(EVALUATORS))

    s = sub.add_parser("assumptions", parents=[common], help="kernel assumption verdicts")
    s.add_argument("--length", type=float, default=None, help="curve length L (default: length of --curve)")

    s = sub.add_parser("minimize", parents=[common], help="length-constrained descent")
    s.add_argument("--start", default="perturbed-circle:0.05,3")
    s.add_argument("--iters", type=int, default=50)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--K", type=int, default=8, help="retained Fourier harmonics")
    s.add_argument("--length", type=float, default=2.0 * math.pi)
    s.add_argument("--trace", default=None, help="write the per-iteration trace CSV here")

    s = sub.add_parser("sweep", parents=[common], help="Θ, tail constant and energy across α")
    s.add_argument("--alphas", type=_floats, default=[2.0, 2.25, 2.5, 2.75, 2.9])

    sub.add_parser("angles", parents=[common], help="per-pair angle dump")
    return p


_OPTION_KEYS = ("method", "ladder", "map", "length", "start", "iters", "tol", "K", "trace", "alphas")


def config_from_args(args):
    options = {k: getattr(args, k) for k in _OPTION_KEYS if getattr(args, k, None) is not None}
    return RunConfig(
        command=args.command, curve=args.curve, kernel=args.kernel, n=args.n, m=args.m,
        correction=not args.no_correction, dim=args.dim, fmt=args.out, output=args.output,
        seed=args.seed, unsafe=args.unsafe, options=options,
    )


def run(config):
    return COMMANDS[config.command](config)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    config = config_from_args(args)
    try:
        rows = run(config)
        emit(rows, config)
    except OharaError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 2
    except KeyError as exc:
        print(f"error: config: missing option {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
