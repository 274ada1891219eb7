"""Multifractal analysis on the Heisenberg group and stratified (Carnot) groups.

Modules:
    group: group law, dilations, gauge norm, left-invariant fields.
    carnot: general stratified groups given by bracket structure constants.
    lattice: dyadic points and cubes, neighborhoods, irreducibility, approximation rates.
    synthesis: coefficient fields, Besov sequence norms, field files.
    leaders: wavelet leaders over the 35-cube neighborhood.
    analysis: global and pointwise exponents, counting spectra.
    taylor: right Taylor polynomials up to homogeneous degree 3.
    estimators: fit/predict wrappers over the analysis functions.
    verify: built-in oracle suites.
"""
from .analysis import counting_spectrum, global_exponent, pointwise_exponent
from .estimators import (
    ApproximationRateEstimator,
    CountingSpectrumEstimator,
    GlobalHolderEstimator,
    PointwiseHolderEstimator,
)
from .group import GPoint, dilate, dist, gauge_norm, inv, mul
from .lattice import approx_rate, locate, neighborhood, point_with_rate
from .synthesis import (
    BesovParams,
    CoefficientField,
    besov_saturating_field,
    besov_seq_norm,
    load_field,
    monofractal_round,
    save_field,
    zero_field,
)

__version__ = "0.1.0"

__all__ = [
    "ApproximationRateEstimator",
    "BesovParams",
    "CoefficientField",
    "CountingSpectrumEstimator",
    "GPoint",
    "GlobalHolderEstimator",
    "PointwiseHolderEstimator",
    "approx_rate",
    "besov_saturating_field",
    "besov_seq_norm",
    "counting_spectrum",
    "dilate",
    "dist",
    "gauge_norm",
    "global_exponent",
    "inv",
    "load_field",
    "locate",
    "monofractal_round",
    "mul",
    "neighborhood",
    "point_with_rate",
    "pointwise_exponent",
    "save_field",
    "zero_field",
]
