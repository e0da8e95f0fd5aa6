"""Symbol DSL, evaluation and the Cayley pullback."""

from .grammar import inner_eval
from .grid import SampleGrid
from .presets import load_symbol, preset, preset_text
from .symbol import (
    CAYLEY_CONVENTION,
    MinModulus,
    SymbolSpec,
    cayley_pullback,
    det_eval,
    eval_symbol,
    inverse_cayley,
    min_det_modulus,
    parse_symbol,
)

__all__ = [
    "CAYLEY_CONVENTION",
    "MinModulus",
    "SampleGrid",
    "SymbolSpec",
    "cayley_pullback",
    "det_eval",
    "eval_symbol",
    "inner_eval",
    "inverse_cayley",
    "load_symbol",
    "min_det_modulus",
    "parse_symbol",
    "preset",
    "preset_text",
]
