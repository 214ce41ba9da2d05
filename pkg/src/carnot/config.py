"""YAML experiment configs with line/column diagnostics."""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass

import numpy as np
import yaml

from .examples import SUBMANIFOLDS
from .group import BUILTIN_GROUPS, AlgebraError, GradedAlgebra, builtin_group
from .metric import normalize_kind
from .polynomial import PolynomialSyntaxError
from .submanifold import ImplicitSubmanifold

EXPERIMENTS = ("degree", "blowup", "scaling", "converge", "density", "dimension", "calibrate")

DEFAULTS = {
    "distance": {"kind": "gauge_max", "calibrate": True, "calibration_seed": 0, "calibration_samples": 10_000},
    "seed": 0,
    "samples": 100_000,
    "threads": 1,
    "R": 1.0,
    "margin": 1.25,
    "method": "montecarlo",
    "scales": [0.125, 0.0625, 0.03125, 0.015625],
    "region": 1.0,
    "grid": 21,
}

# built-in configs: reproduction recipes that need no file
EXAMPLES = {
    "h1_plane_degree": {"experiment": "degree", "submanifold": "h1_plane", "point": [0, 0, 0]},
    "heisheis_blowup": {"experiment": "blowup", "submanifold": "heisheis", "point": [0] * 6},
    "heisheis_converge": {"experiment": "converge", "submanifold": "heisheis", "point": [0] * 6,
                          "radii": [0.1, 0.01, 0.001], "samples": 10_000},
    "h1_plane_scaling": {"experiment": "scaling", "submanifold": "h1_plane", "point": [0, 0, 0],
                         "samples": 1_000_000},
    "paraboloid_density": {"experiment": "density", "submanifold": "h1_paraboloid", "point": [0, 0, 0],
                           "samples": 1_000_000},
    "h1_plane_dimension": {"experiment": "dimension", "submanifold": "h1_plane", "point": [1, 0, 0],
                           "samples": 300_000, "region": 0.25},
    "h1_calibrate": {"experiment": "calibrate", "group": "h1", "distance": {"kind": "gauge_sum"}},
}


class ConfigError(ValueError):
    def __init__(self, message, line=None, column=None, source="<config>"):
        self.line, self.column, self.source = line, column, source
        where = f"{source}:{line}:{column}: " if line is not None else f"{source}: "
        super().__init__(where + message)


def _marks(node, path=(), out=None):
    """Map key paths of a composed YAML tree to 1-based (line, column)."""
    out = {} if out is None else out
    out[path] = (node.start_mark.line + 1, node.start_mark.column + 1)
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            _marks(v, path + (k.value,), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _marks(v, path + (i,), out)
    return out


@dataclass
class ExperimentConfig:
    raw: dict
    algebra: GradedAlgebra
    sigma: ImplicitSubmanifold | None

    def __getitem__(self, key):
        return self.raw[key]

    def get(self, key, default=None):
        return self.raw.get(key, default)

    @property
    def experiment(self):
        return self.raw["experiment"]

    @property
    def point(self):
        return np.asarray(self.raw["point"], dtype=float)

    def digest(self):
        # execution-only keys do not change the artifact, so they stay out of the hash
        keep = {k: v for k, v in self.raw.items() if k not in ("threads", "output")}
        text = json.dumps(keep, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def load_text(text, source="<config>"):
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line, col = (mark.line + 1, mark.column + 1) if mark else (None, None)
        raise ConfigError(f"invalid YAML: {getattr(exc, 'problem', exc)}", line, col, source) from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", 1, 1, source)
    return data, (_marks(node) if node is not None else {})


def load(path):
    with open(path) as fh:
        text = fh.read()
    return load_text(text, source=str(path))


def _merge(base, extra):
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def normalize(data, marks=None, source="<config>", overrides=None):
    """Validate ``data`` and fill defaults; returns an :class:`ExperimentConfig`."""
    marks = marks or {}

    def fail(msg, *path):
        for cut in range(len(path), -1, -1):
            if path[:cut] in marks:
                raise ConfigError(msg, *marks[path[:cut]], source)
        raise ConfigError(msg, source=source)

    known = {"group", "submanifold", "distance", "experiment", "point", "radii", "samples", "seed",
             "output", "threads", "R", "margin", "method", "scales", "region", "grid", "delta", "name"}
    for key in data:
        if key not in known:
            fail(f"unknown key {key!r}", key)
    raw = _merge(DEFAULTS, data)
    raw = _merge(raw, {k: v for k, v in (overrides or {}).items() if v is not None})

    if raw.get("experiment") not in EXPERIMENTS:
        fail(f"experiment must be one of {', '.join(EXPERIMENTS)}", "experiment")

    # submanifold given by built-in name fixes the group
    sub = raw.get("submanifold")
    if isinstance(sub, str) and sub in SUBMANIFOLDS:
        gname, exprs = SUBMANIFOLDS[sub]
        if raw.get("group", gname) != gname:
            fail(f"submanifold {sub!r} lives on group {gname!r}", "group")
        raw["group"] = gname
        raw["submanifold"] = list(exprs)
        raw.setdefault("name", sub)
    elif isinstance(sub, str):
        raw["submanifold"] = [sub]

    group = raw.get("group")
    if group is None:
        fail("missing group", "group")
    try:
        if isinstance(group, str):
            if group not in BUILTIN_GROUPS:
                fail(f"unknown group {group!r}; built-ins are {', '.join(sorted(BUILTIN_GROUPS))}", "group")
            algebra = builtin_group(group)
        elif isinstance(group, dict):
            for key in ("m1", "m2"):
                if not isinstance(group.get(key), int) or group[key] < 0:
                    fail(f"group.{key} must be a non-negative integer", "group", key)
            entries = group.get("brackets", [])
            for i, e in enumerate(entries):
                if not (isinstance(e, list) and len(e) == 4):
                    fail("bracket entries are [i, j, k, value] with 1-based indices", "group", "brackets", i)
            algebra = GradedAlgebra.from_entries(group["m1"], group["m2"], [tuple(e) for e in entries],
                                                 name=group.get("name", "custom"))
        else:
            fail("group must be a built-in name or a mapping with m1, m2, brackets", "group")
    except AlgebraError as exc:
        fail(str(exc), "group")

    dist = raw["distance"]
    if isinstance(dist, str):
        dist = dict(DEFAULTS["distance"], kind=dist)
    try:
        dist["kind"] = normalize_kind(dist.get("kind", "gauge_max"))
    except ValueError as exc:
        fail(str(exc), "distance", "kind")
    if "epsilon" in dist and not (isinstance(dist["epsilon"], (int, float)) and 0 < dist["epsilon"] <= 1):
        fail("distance.epsilon must lie in (0, 1]", "distance", "epsilon")
    raw["distance"] = dist

    sigma = None
    if raw["experiment"] != "calibrate":
        exprs = raw.get("submanifold")
        if not exprs:
            fail("missing submanifold (list of polynomial strings in x1..xq)", "submanifold")
        for i, expr in enumerate(exprs):
            if not isinstance(expr, str):
                fail("polynomials must be strings", "submanifold", i)
        try:
            sigma = ImplicitSubmanifold.from_strings(algebra, exprs, name=raw.get("name", "custom"))
        except PolynomialSyntaxError as exc:
            i = next((j for j, e in enumerate(exprs) if e == exc.text), 0)
            line, col = marks.get(("submanifold", i), (None, None))
            if line is not None and exc.column is not None:
                col = col + exc.column + 1  # skip the opening quote
            raise ConfigError(f"polynomial syntax: {exc}", line, col, source) from None
        except ValueError as exc:
            fail(str(exc), "submanifold")
        point = raw.get("point")
        if point is None:
            raw["point"] = [0.0] * algebra.q
        elif not (isinstance(point, list) and len(point) == algebra.q
                  and all(isinstance(v, (int, float)) for v in point)):
            fail(f"point must be a list of {algebra.q} numbers", "point")
        raw["point"] = [float(v) for v in raw["point"]]

    if raw.get("radii") is not None:
        radii = raw["radii"]
        if not (isinstance(radii, list) and radii and all(isinstance(r, (int, float)) and r > 0 for r in radii)):
            fail("radii must be a list of positive numbers", "radii")
        raw["radii"] = [float(r) for r in radii]
    for key in ("samples", "seed", "threads", "grid"):
        if not isinstance(raw[key], int) or isinstance(raw[key], bool) or raw[key] < 0:
            fail(f"{key} must be a non-negative integer", key)
    if raw["method"] not in ("montecarlo", "quadrature"):
        fail("method must be montecarlo or quadrature", "method")
    return ExperimentConfig(raw, algebra, sigma)
