"""Continuous branch of ``arg det G`` on a real grid.

Segments are bisected until the wrapped phase step is below pi/2.  Two
further guards catch segments whose wrapped step happens to look small
although the phase turned through a multiple of 2*pi: a local phase-speed
bound (one-sided differences at both ends and the midpoint) and a midpoint
probe whose half-steps must add up to the full step.  Neither is a proof;
oscillating phases also need a grid spacing that resolves them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DepthExhausted, MeanMotionNotDetected, NonConvergentTails, ZeroDeterminant
from .symbolkit import SampleGrid, SymbolSpec, det_eval

STEP_LIMIT = np.pi / 2
BRANCH_CONVENTION = "value at leftmost node in (-pi, pi]"


@dataclass(frozen=True)
class ArgumentTrace:
    """Piecewise-linear continuous argument on ``nodes``.

    ``depth[i]`` is the number of bisections that produced segment
    ``(nodes[i], nodes[i+1])``.
    """

    nodes: np.ndarray
    values: np.ndarray
    depth: np.ndarray | None = None
    digest: str = ""
    _prefix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=float)
        values = np.ascontiguousarray(self.values, dtype=float)
        if nodes.ndim != 1 or nodes.shape != values.shape or len(nodes) < 2:
            raise ValueError("trace needs matching 1-d nodes and values with at least two points")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("trace nodes must be strictly increasing")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        # exact trapezoid prefix integrals, extended precision against cancellation
        h = np.diff(nodes).astype(np.longdouble)
        seg = h * (values[:-1].astype(np.longdouble) + values[1:]) / 2
        prefix = np.concatenate([np.zeros(1, dtype=np.longdouble), np.cumsum(seg)])
        object.__setattr__(self, "_prefix", prefix)

    @classmethod
    def from_function(cls, f, nodes, digest: str = "synthetic") -> "ArgumentTrace":
        nodes = np.asarray(nodes, dtype=float)
        return cls(nodes, np.asarray(f(nodes), dtype=float), None, digest)

    @property
    def lo(self) -> float:
        return float(self.nodes[0])

    @property
    def hi(self) -> float:
        return float(self.nodes[-1])

    def __len__(self):
        return len(self.nodes)

    def shifted(self, c: float) -> "ArgumentTrace":
        return ArgumentTrace(self.nodes, self.values + c, self.depth, self.digest)

    def with_values(self, values, digest: str | None = None) -> "ArgumentTrace":
        return ArgumentTrace(self.nodes, values, self.depth, self.digest if digest is None else digest)

    def __call__(self, x):
        return np.interp(x, self.nodes, self.values)

    def antiderivative(self, x) -> np.ndarray:
        """``int_{lo}^{x} arg``, exact for the piecewise-linear trace, in extended precision."""
        x = np.asarray(x, dtype=float)
        if np.any(x < self.lo) or np.any(x > self.hi):
            raise ValueError(f"points outside trace range [{self.lo}, {self.hi}]")
        i = np.clip(np.searchsorted(self.nodes, x, side="right") - 1, 0, len(self.nodes) - 2)
        x0 = self.nodes[i]
        v0 = self.values[i]
        slope = (self.values[i + 1] - v0) / (self.nodes[i + 1] - x0)
        d = (x - x0).astype(np.longdouble)
        return self._prefix[i] + d * (v0 + slope * d / 2)

    def integral(self, a, b) -> np.ndarray:
        return (self.antiderivative(b) - self.antiderivative(a)).astype(float)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(f"# digest={self.digest}\n# branch={BRANCH_CONVENTION}\n")
            w = csv.writer(fh)
            w.writerow(["x", "arg"])
            for x, v in zip(self.nodes, self.values):
                w.writerow([repr(float(x)), repr(float(v))])


def _phase_speed(sym: SymbolSpec, x: np.ndarray, d: np.ndarray) -> np.ndarray:
    h = 1e-6 * np.maximum(1.0, np.abs(x))
    dh = det_eval(sym, x + h)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.abs(np.angle(dh / d)) / h


def _check_nonzero(d, x):
    bad = np.flatnonzero(~(np.abs(d) > 0) | ~np.isfinite(d))
    if bad.size:
        raise ZeroDeterminant(f"det G vanishes or is not finite at x={x[bad[0]]!r}", float(x[bad[0]]))


def unwrap_arg(sym: SymbolSpec, grid: SampleGrid | np.ndarray, max_depth: int = 40,
               max_nodes: int = 5_000_000) -> ArgumentTrace:
    """Adaptive continuous argument of ``det G`` over the grid.

    A segment is accepted once its wrapped step and speed bound are below
    pi/2 and its midpoint probe agrees: the two half-steps are small and add
    up to the full step.  Otherwise the probe becomes a new node.

    Raises ``DepthExhausted`` (carrying the offending segment) when a
    segment still needs splitting after ``max_depth`` bisections or the
    node budget runs out, and ``ZeroDeterminant`` when a node hits a zero of
    ``det G``.
    """
    nodes = np.array(getattr(grid, "nodes", grid), dtype=float)
    d = np.asarray(det_eval(sym, nodes), dtype=complex)
    _check_nonzero(d, nodes)
    speed = _phase_speed(sym, nodes, d)
    depth = np.zeros(len(nodes) - 1, dtype=int)
    accepted = np.zeros(len(nodes) - 1, dtype=bool)
    for level in range(max_depth + 1):
        todo = np.flatnonzero(~accepted)
        if todo.size == 0:
            break
        x0, x1 = nodes[todo], nodes[todo + 1]
        mids = (x0 + x1) / 2
        if np.any((mids <= x0) | (mids >= x1)):
            j = int(todo[np.flatnonzero((mids <= x0) | (mids >= x1))[0]])
            seg = (float(nodes[j]), float(nodes[j + 1]))
            raise DepthExhausted(f"segment {seg} cannot be bisected further in floating point", seg)
        dm = np.asarray(det_eval(sym, mids), dtype=complex)
        _check_nonzero(dm, mids)
        sm = _phase_speed(sym, mids, dm)
        h = x1 - x0
        step = np.angle(d[todo + 1] / d[todo])
        s1 = np.angle(dm / d[todo])
        s2 = np.angle(d[todo + 1] / dm)
        fast = h * np.maximum(np.maximum(speed[todo], speed[todo + 1]), sm)
        ok = (
            (np.abs(step) < STEP_LIMIT)
            & (fast < STEP_LIMIT)
            & (np.abs(s1) < STEP_LIMIT)
            & (np.abs(s2) < STEP_LIMIT)
            & (np.abs(s1 + s2 - step) < 1e-6)
        )
        accepted[todo[ok]] = True
        split = todo[~ok]
        if split.size == 0:
            break
        if level == max_depth or len(nodes) + split.size > max_nodes:
            j = int(split[0])
            seg = (float(nodes[j]), float(nodes[j + 1]))
            why = f"after {max_depth} bisections" if level == max_depth else f"within the {max_nodes} node budget"
            raise DepthExhausted(f"phase still unresolved on segment {seg} {why}", seg)
        keep = ~ok
        nodes = np.insert(nodes, split + 1, mids[keep])
        d = np.insert(d, split + 1, dm[keep])
        speed = np.insert(speed, split + 1, sm[keep])
        depth[split] += 1
        depth = np.insert(depth, split + 1, depth[split])
        accepted = np.insert(accepted, split + 1, False)

    wrapped = np.angle(d)
    approx = wrapped[0] + np.concatenate([[0.0], np.cumsum(np.angle(d[1:] / d[:-1]))])
    turns = np.round((approx - wrapped) / (2 * np.pi))
    values = wrapped + 2 * np.pi * turns
    return ArgumentTrace(nodes, values, depth, sym.digest)


@dataclass(frozen=True)
class WindingNumber:
    value: int
    raw: float
    residual: float
    tail_variation: tuple[float, float]


def _tail_masks(trace: ArgumentTrace):
    x = trace.nodes
    if not (trace.lo < 0 < trace.hi):
        raise NonConvergentTails("trace must straddle 0 to certify both tails")
    return x <= trace.lo / 10, x >= trace.hi / 10


def winding_number(trace: ArgumentTrace, tail_tolerance: float = 0.1) -> WindingNumber:
    """``round((arg(+R) - arg(-R)) / 2pi)`` after certifying flat tails.

    Tails are the outermost decade ``|x| >= R/10`` on each side; the
    argument variation there must stay below ``tail_tolerance``.
    """
    left, right = _tail_masks(trace)
    edge = trace(np.array([trace.lo / 10, trace.hi / 10]))
    var_l = float(np.ptp(np.append(trace.values[left], edge[0])))
    var_r = float(np.ptp(np.append(trace.values[right], edge[1])))
    if var_l >= tail_tolerance or var_r >= tail_tolerance:
        raise NonConvergentTails(
            f"argument varies by {var_l:.3g} (left) / {var_r:.3g} (right) over the outer decade; "
            "limits at +-inf not detected, the classical index formula does not apply"
        )
    raw = float(trace.values[-1] - trace.values[0]) / (2 * np.pi)
    w = int(np.round(raw))
    return WindingNumber(w, raw, raw - w, (var_l, var_r))


@dataclass(frozen=True)
class MeanMotion:
    slope: float
    dispersion: float
    slopes: tuple[float, ...]
    windows: tuple[float, ...]


def mean_motion(trace: ArgumentTrace, side: str, window: float, max_dispersion: float = 0.05) -> MeanMotion:
    """Asymptotic slope of the argument towards ``side`` ('+' or '-').

    Least-squares slopes over the outermost windows ``window * 2**j``,
    ``j = 0..4``; the estimate averages the two largest, the dispersion is
    the spread of all five.
    """
    if side not in ("+", "-"):
        raise ValueError("side must be '+' or '-'")
    windows = [window * 2**j for j in range(5)]
    extent = trace.hi if side == "+" else -trace.lo
    if extent < windows[-1]:
        raise MeanMotionNotDetected(
            f"trace extends {extent:g} towards {side}inf, needs at least {windows[-1]:g}"
        )
    x, v = trace.nodes, trace.values
    w = np.zeros_like(x)
    h = np.diff(x)
    w[:-1] += h / 2
    w[1:] += h / 2
    slopes = []
    for L in windows:
        m = (x >= trace.hi - L) if side == "+" else (x <= trace.lo + L)
        if m.sum() < 3:
            raise MeanMotionNotDetected(f"too few nodes in window of length {L:g}")
        slope = np.polyfit(x[m], v[m], 1, w=np.sqrt(w[m]))[0]
        slopes.append(float(slope))
    est = (slopes[-1] + slopes[-2]) / 2
    disp = float(np.ptp(slopes))
    if disp > max_dispersion:
        raise MeanMotionNotDetected(
            f"window slopes {np.round(slopes, 4).tolist()} disperse by {disp:.3g} > {max_dispersion}"
        )
    return MeanMotion(est, disp, tuple(slopes), tuple(windows))
