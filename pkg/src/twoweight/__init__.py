"""Positive dyadic operators on finite two-weight lattices, with checkable constants."""

from .corona import build_corona, proposition_certificate, split_condition, verify_corona_properties
from .instances import Instance, InstanceSpec, generate_instance, load_instance
from .lattice import ExponentPair, Lattice, Measure, StructuralError, build_lattice
from .maximal import carleson_constant, carleson_embed_check, level_set_cubes, maximal_function
from .norm import constant_k, exact_norm_p2, norm_lower_bound, theorem_sandwich_check
from .operator import apply_T, apply_T_adjoint, bilinear_form
from .report import VerifyOptions, run_fuzz, run_verify
from .testing_conditions import testing_report

__version__ = "0.1.0"

__all__ = [
    "ExponentPair",
    "Instance",
    "InstanceSpec",
    "Lattice",
    "Measure",
    "StructuralError",
    "VerifyOptions",
    "apply_T",
    "apply_T_adjoint",
    "bilinear_form",
    "build_corona",
    "build_lattice",
    "carleson_constant",
    "carleson_embed_check",
    "constant_k",
    "exact_norm_p2",
    "generate_instance",
    "level_set_cubes",
    "load_instance",
    "maximal_function",
    "norm_lower_bound",
    "proposition_certificate",
    "run_fuzz",
    "run_verify",
    "split_condition",
    "testing_report",
    "theorem_sandwich_check",
    "verify_corona_properties",
]
