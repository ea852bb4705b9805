"""Exact admissibility checks and numerical verification for products and
convolutions in weighted Fourier-Lebesgue, modulation and Wiener spaces."""

from .admissibility import (
    Setup,
    HypothesisError,
    Verdict,
    WeightTriple,
    check_convolution,
    check_fl_product,
    check_kernel_bound,
    check_kernel_product,
    check_microlocal,
    check_modulation_product,
    check_region_piece,
    check_wiener_product,
)
from .exponents import Exponent, ExponentTriple, dual, h_functional, r_functional
from .grid import Grid, GridFunction, convolve, dft, idft, sample

__all__ = [
    "Exponent",
    "ExponentTriple",
    "Setup",
    "Grid",
    "GridFunction",
    "HypothesisError",
    "Verdict",
    "WeightTriple",
    "check_convolution",
    "check_fl_product",
    "check_kernel_bound",
    "check_kernel_product",
    "check_microlocal",
    "check_modulation_product",
    "check_region_piece",
    "check_wiener_product",
    "convolve",
    "dft",
    "dual",
    "h_functional",
    "idft",
    "r_functional",
    "sample",
]
