"""Exception hierarchy.  Every module error carries the module name."""

from __future__ import annotations


class MeanWindError(Exception):
    module = "meanwind"


class SymbolSyntaxError(MeanWindError, ValueError):
    module = "symbolkit"

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


class SymbolDomainError(MeanWindError, ValueError):
    module = "symbolkit"


class ArgTrackError(MeanWindError):
    module = "argtrack"


class DepthExhausted(ArgTrackError):
    def __init__(self, message: str, segment: tuple[float, float]):
        super().__init__(message)
        self.segment = segment


class ZeroDeterminant(ArgTrackError):
    def __init__(self, message: str, node: float):
        super().__init__(message)
        self.node = node


class NonConvergentTails(ArgTrackError):
    pass


class MeanMotionNotDetected(ArgTrackError):
    pass


class HardyError(MeanWindError, ValueError):
    module = "hardy"


class WindingError(MeanWindError, ValueError):
    module = "winding"


class BMOError(MeanWindError, ValueError):
    module = "bmo"


class FinsecError(MeanWindError, ValueError):
    module = "finsec"


class FinsecInapplicable(FinsecError):
    """Aliasing residual too large: the circle symbol is not continuous at 1."""


class ConfigError(MeanWindError, ValueError):
    module = "cli"
