"""Finite-field toolkit and simulator for structured coded matrix multiplication."""

from .gf_core import FieldSpec, FqMatrix, field_arith, lagrange_coeffs, mat_mul, solve_linear

__all__ = [
    "FieldSpec",
    "FqMatrix",
    "field_arith",
    "lagrange_coeffs",
    "mat_mul",
    "solve_linear",
]

__version__ = "0.1.0"
