"""Generalized O'Hara knot energies on sampled closed curves."""

from .angles import PairGeometry, cos_phi_algebraic, cos_phi_blend, cos_phi_geometric, cos_psi
from .curve import Curve, curve_from_spec, make_named_curve, reparametrize_by_arclength
from .energy import (
    EnergyBreakdown,
    QuadratureSpec,
    circle_energy_reduced,
    energy_cosine,
    energy_cosine_combined,
    energy_decomposition,
    energy_direct,
    energy_pv,
    evaluate,
    normalized_energy,
)
from .errors import OharaError
from .kernel import KernelSpec, check_assumptions, parse_kernel
from .minimize import DescentOptions, FourierCurve, minimize_under_length
from .mobius import Inversion, MobiusMap, Rotation, Scaling, Translation, parse_map, transform_curve

__version__ = "0.1.0"

__all__ = [
    "Curve",
    "DescentOptions",
    "EnergyBreakdown",
    "FourierCurve",
    "Inversion",
    "KernelSpec",
    "MobiusMap",
    "OharaError",
    "PairGeometry",
    "QuadratureSpec",
    "Rotation",
    "Scaling",
    "Translation",
    "check_assumptions",
    "circle_energy_reduced",
    "cos_phi_algebraic",
    "cos_phi_blend",
    "cos_phi_geometric",
    "cos_psi",
    "curve_from_spec",
    "energy_cosine",
    "energy_cosine_combined",
    "energy_decomposition",
    "energy_direct",
    "energy_pv",
    "evaluate",
    "make_named_curve",
    "minimize_under_length",
    "normalized_energy",
    "parse_kernel",
    "parse_map",
    "reparametrize_by_arclength",
    "transform_curve",
]
