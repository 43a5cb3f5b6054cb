"""Run configuration: a JSON document with ``"schema": 1``.

Every quantity is given in units of the Lorentzian width q (times as q t,
frequencies as w / q). A minimal simulate config::

    {"schema": 1,
     "system": {"p": 2.2360679775},
     "initial": "case1",
     "horizon": 3.0, "dt": 0.02,
     "shape": {"kind": "constant", "omega_max": 10.0}}
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any

from .dynamics import CASE1, CASE2, MultiModeParams, MultiModeState, ReducedState, SystemParams
from .shapes import KINDS, ShapeSpec

SCHEMA_VERSION = 1

__all__ = [
    "ConfigError",
    "SCHEMA_VERSION",
    "OptimizerBlock",
    "GridBlock",
    "SelectivityBlock",
    "RunConfig",
    "load_config",
    "parse_config",
]


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass
class OptimizerBlock:
    max_iters: int = 800
    tol: float = 1e-9
    restarts: int = 1
    seed: int = 0
    omega_max: float | None = None  # None = unbounded
    t_final: float | None = None
    target_pop: float | None = None


@dataclass
class GridBlock:
    t_max: float = 3.0
    n_t: int = 40
    n_pop: int = 40
    omega_max: float | None = None  # falls back to the optimizer bound
    n_omega: int = 101


@dataclass
class SelectivityBlock:
    alpha: float = 0.5
    lam: float = 2.0
    t_f: float = 1.225
    sweep: list[float] | None = None


@dataclass
class RunConfig:
    system: SystemParams | MultiModeParams
    initial: ReducedState | MultiModeState = CASE1
    initial_label: str = "case1"
    q_unit: float = 1.0
    horizon: float = 0.0
    dt: float = 0.02
    shape: ShapeSpec | None = None
    samples: list[float] | None = None
    optimizer: OptimizerBlock = field(default_factory=OptimizerBlock)
    grid: GridBlock | None = None
    selectivity: SelectivityBlock | None = None

    @property
    def multimode(self) -> bool:
        return isinstance(self.system, MultiModeParams)

    def to_dict(self) -> dict[str, Any]:
        """Canonical JSON-ready form; ``parse_config(cfg.to_dict())`` rebuilds ``cfg``."""
        out: dict[str, Any] = {"schema": SCHEMA_VERSION, "units": {"q": self.q_unit}}
        if self.multimode:
            out["system"] = {"modes": [list(m) for m in self.system.modes], "omega_c": self.system.omega_c}
        else:
            out["system"] = {"p": self.system.p, "q": self.system.q, "omega_c": self.system.omega_c}
        if self.initial_label in ("case1", "case2"):
            out["initial"] = self.initial_label
        else:
            ys = self.initial.y if self.multimode else (self.initial.y,)
            y = [[v.real, v.imag] for v in ys]
            out["initial"] = {
                "c1": [self.initial.c1.real, self.initial.c1.imag],
                "y": y if self.multimode else y[0],
            }
        out["horizon"] = self.horizon
        out["dt"] = self.dt
        if self.shape is not None:
            out["shape"] = {k: v for k, v in asdict(self.shape).items() if v is not None}
        if self.samples is not None:
            out["samples"] = list(self.samples)
        opt = asdict(self.optimizer)
        if opt["omega_max"] is None:
            opt["omega_max"] = "unbounded"
        out["optimizer"] = {k: v for k, v in opt.items() if v is not None}
        if self.grid is not None:
            out["grid"] = {k: v for k, v in asdict(self.grid).items() if v is not None}
        if self.selectivity is not None:
            sel = asdict(self.selectivity)
            sel["lambda"] = sel.pop("lam")
            out["selectivity"] = {k: v for k, v in sel.items() if v is not None}
        return out


def _num(d: dict, key: str, where: str, default=None, *, positive=False, nonneg=False, integer=False):
    if key not in d:
        if default is None:
            raise ConfigError(f"{where}.{key}: required field is missing")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {v!r}")
    if integer and (not float(v).is_integer()):
        raise ConfigError(f"{where}.{key}: expected an integer, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(f"{where}.{key}: must be finite")
    if positive and v <= 0:
        raise ConfigError(f"{where}.{key}: must be > 0, got {v}")
    if nonneg and v < 0:
        raise ConfigError(f"{where}.{key}: must be >= 0, got {v}")
    return int(v) if integer else float(v)


def _block(d: dict, key: str) -> dict | None:
    if key not in d or d[key] is None:
        return None
    if not isinstance(d[key], dict):
        raise ConfigError(f"{key}: expected an object")
    return d[key]


def _check_keys(d: dict, allowed: set[str], where: str):
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"{where}: unknown field(s) {sorted(extra)}")


def _complex(v, where: str) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return complex(v[0], v[1])
    raise ConfigError(f"{where}: expected a number or [re, im], got {v!r}")


def _bound(v, where: str) -> float | None:
    if v is None or v == "unbounded":
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not v >= 0 or not math.isfinite(v):
        raise ConfigError(f"{where}: expected a bound >= 0 or \"unbounded\", got {v!r}")
    return float(v)


def parse_config(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be an object")
    _check_keys(
        doc,
        {"schema", "units", "system", "initial", "horizon", "dt", "shape", "samples",
         "optimizer", "grid", "selectivity"},
        "config",
    )
    if doc.get("schema") != SCHEMA_VERSION:
        raise ConfigError(f"schema: expected {SCHEMA_VERSION}, got {doc.get('schema')!r}")
    units = _block(doc, "units") or {}
    q_unit = _num(units, "q", "units", 1.0, positive=True)

    sysd = _block(doc, "system")
    if sysd is None:
        raise ConfigError("system: required block is missing")
    try:
        if "modes" in sysd:
            _check_keys(sysd, {"modes", "omega_c"}, "system")
            modes = sysd["modes"]
            if not isinstance(modes, list) or not all(isinstance(m, list) and len(m) == 2 for m in modes):
                raise ConfigError("system.modes: expected a list of [p, q] pairs")
            system = MultiModeParams(tuple(tuple(m) for m in modes), _num(sysd, "omega_c", "system", 0.0))
        else:
            _check_keys(sysd, {"p", "q", "omega_c"}, "system")
            # system.q and units.q name the same width; outputs are normalised by it
            q_sys = _num(sysd, "q", "system", q_unit, positive=True)
            if "q" in units and q_sys != q_unit:
                raise ConfigError(f"system.q: {q_sys} disagrees with units.q = {q_unit}")
            q_unit = q_sys
            system = SystemParams(
                _num(sysd, "p", "system", nonneg=True),
                q_sys,
                _num(sysd, "omega_c", "system", 0.0),
            )
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"system: {exc}") from exc
    multimode = isinstance(system, MultiModeParams)

    init = doc.get("initial", "case1")
    n_y = system.n_modes if multimode else 1
    if init in ("case1", "case2"):
        label = init
        c1, ys = (1 + 0j, [0j] * n_y) if init == "case1" else (0j, [1 + 0j] + [0j] * (n_y - 1))
    elif isinstance(init, dict):
        label = "custom"
        _check_keys(init, {"c1", "y"}, "initial")
        c1 = _complex(init.get("c1", 0.0), "initial.c1")
        y_raw = init.get("y", 0.0)
        if multimode:
            if not isinstance(y_raw, list) or len(y_raw) != n_y:
                raise ConfigError(f"initial.y: expected {n_y} mode amplitudes")
            ys = [_complex(v, f"initial.y[{k}]") for k, v in enumerate(y_raw)]
        else:
            ys = [_complex(y_raw, "initial.y")]
    else:
        raise ConfigError(f"initial: expected 'case1', 'case2' or an object, got {init!r}")
    initial = MultiModeState(c1, tuple(ys)) if multimode else ReducedState(c1, ys[0])

    horizon = _num(doc, "horizon", "config", 0.0, nonneg=True)
    dt = _num(doc, "dt", "config", 0.02, positive=True)

    shape = None
    shd = _block(doc, "shape")
    if shd is not None:
        _check_keys(shd, {"kind", "omega_max", "theta", "period", "t_switch", "omega_a", "omega_b"}, "shape")
        if shd.get("kind") not in KINDS:
            raise ConfigError(f"shape.kind: expected one of {KINDS}, got {shd.get('kind')!r}")
        kw = {k: _num(shd, k, "shape") for k in ("omega_max", "theta", "period", "t_switch", "omega_a", "omega_b") if k in shd}
        try:
            shape = ShapeSpec(shd["kind"], **kw)
        except ValueError as exc:
            raise ConfigError(f"shape: {exc}") from exc
    samples = None
    if "samples" in doc:
        raw = doc["samples"]
        if not isinstance(raw, list) or not raw or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) for v in raw
        ):
            raise ConfigError("samples: expected a non-empty list of finite numbers")
        samples = [float(v) for v in raw]
    if shape is not None and samples is not None:
        raise ConfigError("shape, samples: give exactly one of them")

    optd = _block(doc, "optimizer") or {}
    _check_keys(optd, {"max_iters", "tol", "restarts", "seed", "omega_max", "t_final", "target_pop"}, "optimizer")
    optimizer = OptimizerBlock(
        max_iters=_num(optd, "max_iters", "optimizer", 800, integer=True, positive=True),
        tol=_num(optd, "tol", "optimizer", 1e-9, nonneg=True),
        restarts=_num(optd, "restarts", "optimizer", 1, integer=True, positive=True),
        seed=_num(optd, "seed", "optimizer", 0, integer=True, nonneg=True),
        omega_max=_bound(optd.get("omega_max"), "optimizer.omega_max"),
        t_final=_num(optd, "t_final", "optimizer", positive=True) if "t_final" in optd else None,
        target_pop=_num(optd, "target_pop", "optimizer") if "target_pop" in optd else None,
    )
    if optimizer.target_pop is not None and not 0 <= optimizer.target_pop <= 1:
        raise ConfigError("optimizer.target_pop: must lie in [0, 1]")

    grid = None
    gd = _block(doc, "grid")
    if gd is not None:
        _check_keys(gd, {"t_max", "n_t", "n_pop", "omega_max", "n_omega"}, "grid")
        grid = GridBlock(
            t_max=_num(gd, "t_max", "grid", positive=True),
            n_t=_num(gd, "n_t", "grid", integer=True, positive=True),
            n_pop=_num(gd, "n_pop", "grid", integer=True, positive=True),
            omega_max=_bound(gd.get("omega_max"), "grid.omega_max"),
            n_omega=_num(gd, "n_omega", "grid", 101, integer=True),
        )
        if grid.n_omega < 2:
            raise ConfigError("grid.n_omega: must be >= 2")

    selectivity = None
    sd = _block(doc, "selectivity")
    if sd is not None:
        _check_keys(sd, {"alpha", "lambda", "t_f", "sweep"}, "selectivity")
        sweep = sd.get("sweep")
        if sweep is not None and (
            not isinstance(sweep, list) or not sweep
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0 for v in sweep)
        ):
            raise ConfigError("selectivity.sweep: expected a non-empty list of bounds > 0")
        selectivity = SelectivityBlock(
            alpha=_num(sd, "alpha", "selectivity", 0.5),
            lam=_num(sd, "lambda", "selectivity", 2.0, nonneg=True),
            t_f=_num(sd, "t_f", "selectivity", 1.225, positive=True),
            sweep=[float(v) for v in sweep] if sweep is not None else None,
        )
        if selectivity.alpha <= -1:
            raise ConfigError("selectivity.alpha: must be > -1")

    return RunConfig(
        system=system,
        initial=initial,
        initial_label=label,
        q_unit=q_unit,
        horizon=horizon,
        dt=dt,
        shape=shape,
        samples=samples,
        optimizer=optimizer,
        grid=grid,
        selectivity=selectivity,
    )


def load_config(path) -> RunConfig:
    """Read and validate a config file; JSON syntax errors report line and column."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_config(doc)
