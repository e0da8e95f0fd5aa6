"""Reproducible real-line sample grids."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SampleGrid:
    """Strictly increasing real nodes, reproducible from the generation parameters.

    Nodes are ``x = tan(theta/2)`` for ``theta`` uniform on
    ``[2 atan(lo), 2 atan(hi)]`` (``count`` points, endpoints exactly
    ``lo``/``hi``), merged with the ``refine`` points, then any gap wider
    than ``max_spacing`` is split uniformly.
    """

    count: int
    lo: float
    hi: float
    refine: tuple[float, ...] = ()
    max_spacing: float | None = None
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.count < 2:
            raise ValueError("grid needs at least two nodes")
        if not (np.isfinite(self.lo) and np.isfinite(self.hi) and self.lo < self.hi):
            raise ValueError(f"bad grid range [{self.lo}, {self.hi}]")
        if self.max_spacing is not None and self.max_spacing <= 0:
            raise ValueError("max_spacing must be positive")
        object.__setattr__(self, "nodes", _build(self))

    @classmethod
    def symmetric(cls, count: int, half_width: float, **kw) -> "SampleGrid":
        return cls(count, -float(half_width), float(half_width), **kw)

    def __len__(self):
        return len(self.nodes)

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "lo": self.lo,
            "hi": self.hi,
            "refine": list(self.refine),
            "max_spacing": self.max_spacing,
        }


def _build(g: SampleGrid) -> np.ndarray:
    theta = np.linspace(2 * np.arctan(g.lo), 2 * np.arctan(g.hi), g.count)
    x = np.tan(theta / 2)
    x[0], x[-1] = g.lo, g.hi
    # refinement points within rounding distance of a node would give empty segments
    extra = []
    for p in sorted(float(p) for p in g.refine if g.lo < p < g.hi):
        tol = 1e-12 * max(1.0, abs(p))
        if np.min(np.abs(x - p)) > tol and (not extra or p - extra[-1] > tol):
            extra.append(p)
    x = np.unique(np.concatenate([x, np.asarray(extra, dtype=float)]))
    if g.max_spacing is not None:
        gaps = np.diff(x)
        pieces = np.maximum(1, np.ceil(gaps / g.max_spacing).astype(int))
        if np.any(pieces > 1):
            seg = np.repeat(np.arange(len(gaps)), pieces)
            j = np.arange(pieces.sum()) - np.repeat(np.cumsum(pieces) - pieces, pieces) + 1
            x = np.concatenate([x[:1], x[seg] + gaps[seg] * j / pieces[seg]])
            x[-1] = g.hi
    return x
