"""Mean winding numbers and semi-Fredholm diagnostics for Toeplitz operators on the line."""

__version__ = "0.1.0"

from .argtrack import ArgumentTrace, mean_motion, unwrap_arg, winding_number
from .hardy import TestFunction, eta_alpha, h1_norm, hilbert_step, scale_translate, spectral_factor_circle
from .symbolkit import SampleGrid, SymbolSpec, load_symbol, parse_symbol, preset
from .winding import generalized_winding, mean_winding, pairing, w_alpha

__all__ = [
    "ArgumentTrace",
    "SampleGrid",
    "SymbolSpec",
    "TestFunction",
    "eta_alpha",
    "generalized_winding",
    "h1_norm",
    "hilbert_step",
    "load_symbol",
    "mean_motion",
    "mean_winding",
    "pairing",
    "parse_symbol",
    "preset",
    "scale_translate",
    "spectral_factor_circle",
    "unwrap_arg",
    "w_alpha",
    "winding_number",
]
