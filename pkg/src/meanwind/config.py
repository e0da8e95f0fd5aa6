"""Run configuration: typed, validated, JSON round-trippable."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace

from .exceptions import ConfigError
from .hardy import TestFunction, eta_alpha

STEP3 = TestFunction((-2.0, -1.0, 0.5, 3.0), (-1.0, 0.2, 0.28), "step3")


@dataclass(frozen=True)
class GridConfig:
    count: int = 4001
    half_width: float | None = None  # None: smallest range the winding sweep needs
    max_spacing: float = 0.5
    max_depth: int = 40
    max_nodes: int = 4_000_000


@dataclass(frozen=True)
class WindingConfig:
    enabled: bool = True
    etas: tuple = ("eta_1", "eta_0.5", "step3")
    T_max: float = 1e4
    decades: int = 3
    per_decade: int = 10
    y_count: int = 41
    alphas: tuple = (0.5, 1.0)
    min_slope: float = 0.2


@dataclass(frozen=True)
class BMOConfig:
    enabled: bool = True
    scale_count: int = 10
    slope: float = 0.2
    fit_residual: float = 0.1


@dataclass(frozen=True)
class FinsecConfig:
    enabled: bool = True
    K: int = 136
    fft_size: int | None = None
    n_list: tuple = (8, 16, 32, 64)
    N: int = 3
    margin: float = 0.02
    residual_tol: float = 1e-8
    kernel_rel: float = 1e-6


@dataclass(frozen=True)
class RunConfig:
    symbol: str = "preset:identity()"
    name: str = "run"
    grid: GridConfig = field(default_factory=GridConfig)
    winding: WindingConfig = field(default_factory=WindingConfig)
    bmo: BMOConfig = field(default_factory=BMOConfig)
    finsec: FinsecConfig = field(default_factory=FinsecConfig)
    out: str | None = None
    formats: tuple = ("csv", "json")
    write_trace: bool = False

    def __post_init__(self):
        validate(self)

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = {}
        for f in fields(cls):
            if f.name not in d:
                continue
            sub = {"grid": GridConfig, "winding": WindingConfig, "bmo": BMOConfig, "finsec": FinsecConfig}.get(f.name)
            kw[f.name] = _section(sub, d[f.name], f.name) if sub else _coerce(d[f.name])
        return cls(**kw)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def with_updates(self, **sections) -> "RunConfig":
        """Replace whole fields or update sections: ``with_updates(winding={"T_max": 100})``."""
        kw = {}
        for key, val in sections.items():
            cur = getattr(self, key)
            if isinstance(val, dict) and hasattr(cur, "__dataclass_fields__"):
                kw[key] = _section(type(cur), {**asdict(cur), **val}, key)
            else:
                kw[key] = _coerce(val)
        return replace(self, **kw)


def _coerce(v):
    if isinstance(v, list):
        return tuple(_coerce(t) for t in v)
    return v


def _section(cls, d, name):
    if not isinstance(d, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(unknown)}")
    return cls(**{k: _coerce(v) for k, v in d.items()})


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return RunConfig.from_dict(data)


def resolve_eta(spec) -> TestFunction:
    """``"eta_<alpha>"``, ``"step3"`` or a dict with breakpoints and levels."""
    if isinstance(spec, dict):
        return TestFunction.from_dict(spec)
    if spec == "step3":
        return STEP3
    if isinstance(spec, str) and spec.startswith("eta_"):
        try:
            return eta_alpha(float(spec[4:]))
        except ValueError:
            pass
    raise ConfigError(f"unknown test function {spec!r}; use eta_<alpha>, step3 or a breakpoints/levels object")


def _check(cond, msg):
    if not cond:
        raise ConfigError(msg)


def _is_pow2(n):
    return n > 0 and n & (n - 1) == 0


def validate(cfg: RunConfig) -> None:
    g, w, b, f = cfg.grid, cfg.winding, cfg.bmo, cfg.finsec
    _check(isinstance(cfg.symbol, str) and cfg.symbol.strip(), "symbol source must be a nonempty string")
    _check(3 <= g.count <= 10_000_000, "grid.count must lie in [3, 1e7]")
    _check(g.half_width is None or g.half_width > 0, "grid.half_width must be positive")
    _check(g.max_spacing > 0, "grid.max_spacing must be positive")
    _check(1 <= g.max_depth <= 60, "grid.max_depth must lie in [1, 60]")
    _check(1000 <= g.max_nodes <= 50_000_000, "grid.max_nodes must lie in [1e3, 5e7]")
    _check(w.T_max > 0, "winding.T_max must be positive")
    _check(1 <= w.decades <= 8, "winding.decades must lie in [1, 8]")
    _check(2 <= w.per_decade <= 100, "winding.per_decade must lie in [2, 100]")
    _check(1 <= w.y_count <= 2001, "winding.y_count must lie in [1, 2001]")
    _check(len(w.alphas) > 0 and all(a > 0 for a in w.alphas), "winding.alphas must be positive")
    _check(len(w.etas) > 0, "winding.etas must not be empty")
    for e in w.etas:
        resolve_eta(e)
    _check(1 <= b.scale_count <= 40, "bmo.scale_count must lie in [1, 40]")
    _check(b.slope > 0 and b.fit_residual > 0, "bmo thresholds must be positive")
    _check(f.K >= 1, "finsec.K must be at least 1")
    _check(f.fft_size is None or (_is_pow2(f.fft_size) and f.fft_size >= 8 * f.K),
           "finsec.fft_size must be a power of two and at least 8K")
    _check(len(f.n_list) > 0 and all(int(n) >= 1 for n in f.n_list) and list(f.n_list) == sorted(set(f.n_list)),
           "finsec.n_list must be strictly ascending positive integers")
    _check(2 * max(f.n_list) - 1 <= f.K, "finsec.K must be at least 2*max(n_list) - 1 (Hankel sections)")
    _check(0 <= f.N <= 64, "finsec.N must lie in [0, 64]")
    _check(0 < f.margin < 1, "finsec.margin must lie in (0, 1)")
    _check(f.residual_tol > 0 and 0 < f.kernel_rel < 1, "finsec tolerances must be positive")
    _check(set(cfg.formats) <= {"csv", "json"}, "formats must be a subset of {csv, json}")
