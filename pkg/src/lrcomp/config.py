"""Strict JSON configuration documents.

Keys: d, m, norm_p, alpha_minus, alpha_plus, lambda, placement, source_minus,
source_plus, engine, runs, n_grid, checkpoints, scenario, seed, out_dir,
format.  A family is either a number (constant), a flat object
``{"kind": "affine_log", "a": 1, "b": 1}`` or a nested one
``{"kind": ..., "coefficients": {...}}``.  Unknown or duplicate keys are
rejected with their key path.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

from .experiments import BUILTIN_SCENARIOS, DEFAULT_SEED, ENGINES, ScenarioSpec, builtin_scenario
from .rates import FAMILY_KINDS, PLACEMENTS, ModelParams, ParamFamily
from .torus import TorusSpec

TOP_KEYS = {"d", "m", "norm_p", "alpha_minus", "alpha_plus", "lambda", "placement", "source_minus",
            "source_plus", "engine", "runs", "n_grid", "checkpoints", "scenario", "seed", "out_dir",
            "format"}
MODEL_KEYS = {"d", "m", "norm_p", "alpha_minus", "alpha_plus", "lambda", "placement",
              "source_minus", "source_plus"}
FORMATS = ("csv", "json")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path or '<root>'}: {message}")
        self.path = path


class _Pairs(list):
    """Raw key/value pairs of one JSON object, before duplicate checking."""


def _join(path: str, key) -> str:
    return f"{path}.{key}" if path else str(key)


def _normalize(obj, path: str = ""):
    if isinstance(obj, _Pairs):
        out = {}
        for k, v in obj:
            p = _join(path, k)
            if k in out:
                raise ConfigError(p, "duplicate key")
            out[k] = _normalize(v, p)
        return out
    if isinstance(obj, list):
        return [_normalize(v, f"{path}[{i}]") for i, v in enumerate(obj)]
    return obj


def load_document(text: str) -> dict:
    try:
        raw = json.loads(text, object_pairs_hook=_Pairs)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"malformed JSON: {exc}") from None
    doc = _normalize(raw)
    if not isinstance(doc, dict):
        raise ConfigError("", "top level must be an object")
    return doc


@dataclass
class RunConfig:
    params: ModelParams
    engine: str = "coupled"
    runs: int = 1
    seed: int = DEFAULT_SEED
    m_grid: tuple[int, ...] = ()
    checkpoints: tuple[float, ...] = ()
    scenario: ScenarioSpec | None = None
    out_dir: str | None = None
    format: str = "csv"
    raw: dict = field(default_factory=dict)


def _number(v, path, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(path, f"expected an integer, got {v!r}")
    return int(v) if integer else float(v)


def parse_family(v, path: str) -> ParamFamily:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return ParamFamily.constant(float(v))
    if not isinstance(v, dict):
        raise ConfigError(path, "family must be a number or an object with 'kind'")
    if "kind" not in v:
        raise ConfigError(_join(path, "kind"), "missing")
    kind = v["kind"]
    if kind not in FAMILY_KINDS:
        raise ConfigError(_join(path, "kind"), f"unknown kind {kind!r}; expected one of {sorted(FAMILY_KINDS)}")
    if "coefficients" in v:
        extra = set(v) - {"kind", "coefficients"}
        if extra:
            raise ConfigError(_join(path, sorted(extra)[0]), "unknown key")
        coeffs, cpath = v["coefficients"], _join(path, "coefficients")
        if not isinstance(coeffs, dict):
            raise ConfigError(cpath, "must be an object")
    else:
        coeffs, cpath = {k: x for k, x in v.items() if k != "kind"}, path
    allowed = FAMILY_KINDS[kind]
    for k in coeffs:
        if k not in allowed:
            raise ConfigError(_join(cpath, k), f"unknown key for kind {kind!r}; expected {list(allowed)}")
    for k in allowed:
        if k not in coeffs:
            raise ConfigError(_join(cpath, k), "missing")
    if kind == "table":
        table = coeffs["values"]
        if not isinstance(table, dict):
            raise ConfigError(_join(cpath, "values"), "must map n to value")
        values = {}
        for n, x in table.items():
            try:
                values[int(n)] = _number(x, _join(_join(cpath, "values"), n))
            except ValueError as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(_join(_join(cpath, "values"), n), "key must be an integer") from None
        return ParamFamily("table", {"values": values})
    return ParamFamily(kind, {k: _number(coeffs[k], _join(cpath, k)) for k in allowed})


def _norm(v, path) -> float:
    if isinstance(v, str):
        if v.lower() in ("inf", "infinity"):
            return math.inf
        raise ConfigError(path, f"expected a number or 'inf', got {v!r}")
    p = _number(v, path)
    if p < 1:
        raise ConfigError(path, "must be >= 1")
    return p


def _point(v, path, d):
    if not isinstance(v, list) or len(v) != d:
        raise ConfigError(path, f"expected a list of {d} integers")
    return tuple(_number(x, f"{path}[{i}]", integer=True) for i, x in enumerate(v))


def _model(doc: dict, base: ModelParams | None) -> ModelParams:
    d = _number(doc["d"], "d", integer=True) if "d" in doc else (base.spec.d if base else None)
    if d is None:
        raise ConfigError("d", "missing")
    if d < 1:
        raise ConfigError("d", "must be a positive integer")
    if "m" in doc:
        m = _number(doc["m"], "m", integer=True)
    elif base is not None:
        m = base.spec.m
    elif doc.get("n_grid"):
        m = _number(doc["n_grid"][0], "n_grid[0]", integer=True)
    else:
        raise ConfigError("m", "missing")
    if m < 2:
        raise ConfigError("m", "must be >= 2")
    p = _norm(doc["norm_p"], "norm_p") if "norm_p" in doc else (base.spec.p if base else 2.0)
    fams = {}
    for key, attr, default in (("alpha_minus", "alpha_minus", 0.0), ("alpha_plus", "alpha_plus", 0.0),
                               ("lambda", "lam", 1.0)):
        if key in doc:
            fams[attr] = parse_family(doc[key], key)
        else:
            fams[attr] = getattr(base, attr) if base else ParamFamily.constant(default)
    placement = doc.get("placement", base.placement if base else "antipodal")
    if placement not in PLACEMENTS:
        raise ConfigError("placement", f"expected one of {PLACEMENTS}")
    src = {}
    for key in ("source_minus", "source_plus"):
        if key in doc:
            src[key] = _point(doc[key], key, d)
    if placement == "explicit" and len(src) != 2:
        raise ConfigError("source_minus" if "source_minus" not in src else "source_plus",
                          "explicit placement requires both sources")
    try:
        return ModelParams(TorusSpec(d, m, p), placement=placement, **fams, **src)
    except ValueError as exc:
        msg = str(exc)
        path = next((k for k in ("alpha_minus", "alpha_plus", "lambda", "source") if k in msg), "")
        if path == "source":
            path = "source_plus"
        raise ConfigError(path, msg) from None


def parse_config(doc) -> RunConfig:
    """Validate a document (JSON text or already-parsed dict) into a RunConfig.

    With a ``scenario`` key the config also carries a ScenarioSpec built from
    the named template, with any model keys, grid, runs and seed overriding it.
    """
    if isinstance(doc, (str, bytes)):
        doc = load_document(doc.decode() if isinstance(doc, bytes) else doc)
    elif not isinstance(doc, dict):
        raise ConfigError("", "document must be JSON text or an object")
    for k in doc:
        if k not in TOP_KEYS:
            raise ConfigError(k, "unknown key")
    engine = doc.get("engine", "coupled")
    if engine not in ENGINES:
        raise ConfigError("engine", f"expected one of {ENGINES}")
    fmt = doc.get("format", "csv")
    if fmt not in FORMATS:
        raise ConfigError("format", f"expected one of {FORMATS}")
    runs = _number(doc.get("runs", 1), "runs", integer=True)
    if runs < 1:
        raise ConfigError("runs", "must be >= 1")
    seed = _number(doc.get("seed", DEFAULT_SEED), "seed", integer=True)
    if not 0 <= seed < 2**64:
        raise ConfigError("seed", "must be an unsigned 64-bit integer")
    grid = doc.get("n_grid", [])
    if not isinstance(grid, list):
        raise ConfigError("n_grid", "expected a list of side lengths")
    grid = tuple(_number(x, f"n_grid[{i}]", integer=True) for i, x in enumerate(grid))
    ckpts = doc.get("checkpoints", [])
    if not isinstance(ckpts, list):
        raise ConfigError("checkpoints", "expected a list of times")
    ckpts = tuple(_number(x, f"checkpoints[{i}]") for i, x in enumerate(ckpts))
    out_dir = doc.get("out_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("out_dir", "expected a string")

    scenario = None
    if "scenario" in doc:
        name = doc["scenario"]
        if name not in BUILTIN_SCENARIOS:
            raise ConfigError("scenario", f"unknown scenario {name!r}; built-ins: {list(BUILTIN_SCENARIOS)}")
        template = builtin_scenario(name, seed=seed)
        params = template.params
        if MODEL_KEYS & set(doc):
            params = _model(doc, template.params)
        try:
            scenario = replace(template, params=params, engine=doc.get("engine", template.engine),
                               runs=runs if "runs" in doc else template.runs,
                               m_grid=grid or ((params.spec.m,) if "m" in doc else template.m_grid))
        except ValueError as exc:
            raise ConfigError("scenario", str(exc)) from None
    else:
        params = _model(doc, None)
    for i, m in enumerate(grid):
        if m < 2:
            raise ConfigError(f"n_grid[{i}]", "side must be >= 2")
        try:
            params.with_m(m)
        except ValueError as exc:
            raise ConfigError(f"n_grid[{i}]", str(exc)) from None
    return RunConfig(params, engine, runs, seed, grid, ckpts, scenario, out_dir, fmt, doc)


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())
