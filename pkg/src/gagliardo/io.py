"""Experiment configs and deterministic CSV/JSON writers."""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

#: hard cap on the size of an expanded parameter grid
MAX_RUNS = 10_000
DEPTH_RANGE = (3, 12)
PARAM_FIELDS = ("s", "p", "alpha", "beta", "theta")
_PARAM_DEFAULTS = {"alpha": [0.0], "beta": [0.0], "theta": [0.5]}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    domain: object
    params: dict
    depth: int = 7
    quad_order: int = 3
    seed: int = 0
    function: str = "x"
    output_dir: str = "results"
    options: dict = field(default_factory=dict)
    base_dir: str = "."

    def to_dict(self) -> dict:
        return {
            "domain": self.domain,
            "params": self.params,
            "depth": self.depth,
            "quad_order": self.quad_order,
            "seed": self.seed,
            "function": self.function,
            "output_dir": self.output_dir,
            "options": self.options,
        }

    @property
    def config_hash(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def grid(self) -> list:
        """Cartesian product of the parameter lists, in field order."""
        lists = [self.params[k] for k in PARAM_FIELDS]
        return [dict(zip(PARAM_FIELDS, combo)) for combo in itertools.product(*lists)]


def _as_list(name, value) -> list:
    vals = value if isinstance(value, list) else [value]
    if not vals:
        raise ConfigError(f"parameter grid {name!r} is empty")
    for v in vals:
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
            raise ConfigError(f"parameter {name!r} must hold finite numbers")
    return [float(v) for v in vals]


def parse_config(obj: dict, base_dir: str = ".", overrides: dict | None = None) -> ExperimentConfig:
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    obj = dict(obj)
    for k, v in (overrides or {}).items():
        if v is not None:
            obj[k] = v
    unknown = set(obj) - {"domain", "params", "depth", "quad_order", "seed", "function", "output_dir", "options"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "domain" not in obj:
        raise ConfigError("config needs a 'domain'")
    raw = obj.get("params", {})
    if not isinstance(raw, dict):
        raise ConfigError("'params' must be an object of lists")
    bad = set(raw) - set(PARAM_FIELDS)
    if bad:
        raise ConfigError(f"unknown parameters: {sorted(bad)}")
    params = {}
    for k in PARAM_FIELDS:
        if k in raw:
            params[k] = _as_list(k, raw[k])
        elif k in _PARAM_DEFAULTS:
            params[k] = list(_PARAM_DEFAULTS[k])
        else:
            params[k] = [0.5] if k == "s" else [2.0]
    runs = math.prod(len(v) for v in params.values())
    if runs > MAX_RUNS:
        raise ConfigError(f"parameter grid expands to {runs} runs, above the cap of {MAX_RUNS}")
    depth = obj.get("depth", 7)
    if not isinstance(depth, int) or isinstance(depth, bool) or not DEPTH_RANGE[0] <= depth <= DEPTH_RANGE[1]:
        raise ConfigError(f"depth must be an integer in [{DEPTH_RANGE[0]}, {DEPTH_RANGE[1]}]")
    quad_order = obj.get("quad_order", 3)
    if not isinstance(quad_order, int) or not 1 <= quad_order <= 10:
        raise ConfigError("quad_order must be an integer in [1, 10]")
    seed = obj.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed must be a nonnegative integer")
    function = obj.get("function", "x")
    if not isinstance(function, str):
        raise ConfigError("function must be an expression string")
    options = obj.get("options", {})
    if not isinstance(options, dict):
        raise ConfigError("'options' must be an object")
    return ExperimentConfig(obj["domain"], params, depth, quad_order, seed, function,
                            str(obj.get("output_dir", "results")), options, str(base_dir))


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return parse_config(obj, str(path.parent), overrides)


def build_domain(spec, base_dir: str = "."):
    """Domain from ``"square"``, ``{"polygon": [...]}``, ``{"koch": level}`` or ``{"file": path}``."""
    from .geometry import GeometryError, domain_from_json, koch_snowflake, make_polygon

    try:
        if spec == "square":
            return make_polygon([(0, 0), (1, 0), (1, 1), (0, 1)])
        if isinstance(spec, dict) and len(spec.keys() - {"side"}) == 1:
            if "polygon" in spec:
                return make_polygon(spec["polygon"])
            if "koch" in spec:
                level = spec["koch"]
                if not isinstance(level, int):
                    raise ConfigError("koch level must be an integer")
                return koch_snowflake(level, float(spec.get("side", 1.0)))
            if "file" in spec:
                path = Path(base_dir) / spec["file"]
                if not path.is_file():
                    raise ConfigError(f"domain file not found: {path}")
                try:
                    return domain_from_json(path)
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise ConfigError(f"invalid domain file {path}: {exc}") from exc
    except GeometryError as exc:
        raise ConfigError(f"invalid domain: {exc}") from exc
    raise ConfigError("domain must be 'square', {'polygon': ...}, {'koch': level} or {'file': path}")


# -- output ---------------------------------------------------------------------------


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    if isinstance(v, (list, tuple)):
        return ";".join(format_value(x) for x in v)
    if v is None:
        return ""
    return str(v)


def to_csv(rows: list, header: dict) -> str:
    """Comment lines with ``header`` entries, then a column row and data rows."""
    buf = io.StringIO()
    for k, v in header.items():
        buf.write(f"# {k}={format_value(v)}\n")
    if rows:
        cols = list(rows[0].keys())
        for r in rows[1:]:
            cols.extend(k for k in r if k not in cols)
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([format_value(r.get(c)) for c in cols])
    return buf.getvalue()


def _json(v, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, float):
        return "%.17g" % v if math.isfinite(v) else json.dumps(format_value(v))
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return json.dumps(v, ensure_ascii=False)
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_json(x, indent, level + 1)}" for k, x in v.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(v, (list, tuple)):
        if not v:
            return "[]"
        if all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
            return "[" + ", ".join(_json(x, indent, level + 1) for x in v) + "]"
        return "[\n" + ",\n".join(pad + _json(x, indent, level + 1) for x in v) + "\n" + end + "]"
    if hasattr(v, "item"):
        return _json(v.item(), indent, level)
    raise TypeError(f"cannot serialise {type(v).__name__}")


def to_json(obj, indent: int = 2) -> str:
    """JSON text with every float written to 17 significant digits; non-finite
    floats become the strings ``"inf"``, ``"-inf"`` and ``"nan"``."""
    return _json(obj, indent, 0) + "\n"
