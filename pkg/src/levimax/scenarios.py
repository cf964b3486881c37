"""Scenario documents: one JSON file describing a structure, fields and checks.

Schema (keys other than ``name``, ``n`` and ``fields`` are optional)::

    {
      "name": "...", "description": "...", "n": 1,
      "structure": {"type": "standard"}
                 | {"type": "J", "entries": [[expr, ...], ...]}
                 | {"type": "A", "entries": [[[re_expr, im_expr], ...], ...]},
                 optional "scale": lambda > 0 (isotropic dilation),
      "fields": [expr, ...],
      "metric": [[[re, im], ...], ...]   constant hermitian matrix (default identity),
      "alpha": expr or number,
      "theta": [theta_1, ...] | "epsilon": eps   (theta_j = eps for every field),
      "grid": {"lo": -1, "hi": 1, "points": 11, "radius": null},
      "tolerances": {...}                see DEFAULT_TOLERANCES,
      "levi": {"mode": "psh" | "vanish", "margin": 0.0},
      "point": [x1, ..., x2n], "vector": [x1, ..., x2n]   (real tangent vector),
      "disc": {"r": 0.1, "n_r": 32, "n_phi": 64, "max_iter": 50},
      "seed": 0
    }

Builtin scenarios live next to this module and load as ``builtin:<name>``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .almost_complex import AlmostComplexStructure, ExpressionMatrixField, scale_structure
from .coords import box_grid
from .expr import ExpressionError
from .fields import ExpressionField, HermitianMetric, ScalarField
from .regmax import ThetaVector

BUILTIN_PREFIX = "builtin:"

DEFAULT_TOLERANCES = {
    "estimate": 1e-8,
    "hessian": 0.05,
    "hypothesis": 0.05,
    "levi": 1e-5,
    "adapted_structure": 1e-8,
    "adapted_levi": 1e-5,
    "disc": 1e-4,
    "disc_agreement": 1e-3,
}


class ScenarioError(ValueError):
    """Malformed scenario; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class Scenario:
    name: str
    n: int
    structure: AlmostComplexStructure
    fields: list
    metric: HermitianMetric
    alpha: ScalarField
    theta: ThetaVector | None
    grid: np.ndarray
    tolerances: dict
    seed: int = 0
    point: np.ndarray | None = None
    vector: np.ndarray | None = None
    levi: dict = field(default_factory=dict)
    disc: dict = field(default_factory=dict)
    description: str = ""
    source: dict = field(default_factory=dict)

    @property
    def epsilon(self) -> float | None:
        return None if self.theta is None else max(self.theta.values)


def _require(data, key):
    if key not in data:
        raise ScenarioError(key, "missing")
    return data[key]


def _structure(spec, n):
    spec = spec or {"type": "standard"}
    if not isinstance(spec, dict):
        raise ScenarioError("structure", "must be an object")
    kind = spec.get("type", "standard")
    try:
        if kind == "standard":
            S = AlmostComplexStructure.standard(n)
        elif kind == "J":
            entries = _require(spec, "entries")
            if len(entries) != 2 * n or any(len(row) != 2 * n for row in entries):
                raise ScenarioError("structure.entries", f"J needs {2 * n}x{2 * n} entries")
            S = AlmostComplexStructure.from_j(ExpressionMatrixField(entries, n, False))
        elif kind == "A":
            entries = _require(spec, "entries")
            if len(entries) != n or any(len(row) != n for row in entries):
                raise ScenarioError("structure.entries", f"A needs {n}x{n} entries")
            if any(len(pair) != 2 for row in entries for pair in row):
                raise ScenarioError("structure.entries", "complex entries are [re, im] pairs")
            S = AlmostComplexStructure.from_a(ExpressionMatrixField(entries, n, True))
        else:
            raise ScenarioError("structure.type", f"unknown structure type {kind!r}")
    except (ExpressionError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError("structure.entries", str(exc)) from exc
    if "scale" in spec:
        try:
            S = scale_structure(S, float(spec["scale"]))
        except (TypeError, ValueError) as exc:
            raise ScenarioError("structure.scale", str(exc)) from exc
    return S


def _expression_field(text, n, key):
    if isinstance(text, (int, float)):
        text = repr(float(text))
    if not isinstance(text, str):
        raise ScenarioError(key, "expected an expression string or a number")
    try:
        return ExpressionField(text, n)
    except (ExpressionError, ValueError) as exc:
        raise ScenarioError(key, str(exc)) from exc


def _grid(spec, n):
    spec = spec or {}
    try:
        lo = float(spec.get("lo", -1.0))
        hi = float(spec.get("hi", 1.0))
        points = int(spec.get("points", 11))
    except (TypeError, ValueError) as exc:
        raise ScenarioError("grid", str(exc)) from exc
    if points < 1 or hi < lo:
        raise ScenarioError("grid", "need points >= 1 and hi >= lo")
    grid = box_grid(n, points, lo, hi)
    radius = spec.get("radius")
    if radius is not None:
        grid = grid[np.linalg.norm(grid, axis=-1) <= float(radius) + 1e-12]
    return grid


def _vector(data, key, n):
    if data.get(key) is None:
        return None
    v = np.asarray(data[key], dtype=float)
    if v.shape != (2 * n,):
        raise ScenarioError(key, f"expected {2 * n} real components")
    return v


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("scenario", "top level must be a JSON object")
    name = str(data.get("name", "unnamed"))
    n = _require(data, "n")
    if not isinstance(n, int) or n < 1:
        raise ScenarioError("n", "must be a positive integer")
    S = _structure(data.get("structure"), n)
    raw_fields = _require(data, "fields")
    if not isinstance(raw_fields, list) or not raw_fields:
        raise ScenarioError("fields", "must be a non-empty list")
    fields = [_expression_field(f, n, f"fields[{i}]") for i, f in enumerate(raw_fields)]

    if data.get("metric") is None:
        metric = HermitianMetric.euclidean(n)
    else:
        try:
            m = np.asarray(data["metric"], dtype=float)
            if m.shape != (n, n, 2):
                raise ValueError(f"expected {n}x{n} [re, im] pairs")
            metric = HermitianMetric(m[..., 0] + 1j * m[..., 1])
        except (TypeError, ValueError) as exc:
            raise ScenarioError("metric", str(exc)) from exc

    alpha = _expression_field(data.get("alpha", 0.0), n, "alpha")

    theta = None
    try:
        if "theta" in data:
            theta = ThetaVector(tuple(data["theta"]))
        elif "epsilon" in data:
            theta = ThetaVector(tuple([float(data["epsilon"])] * len(fields)))
    except (TypeError, ValueError) as exc:
        raise ScenarioError("theta" if "theta" in data else "epsilon", str(exc)) from exc
    if theta is not None and theta.k != len(fields):
        raise ScenarioError("theta", f"{theta.k} components for {len(fields)} fields")

    tolerances = dict(DEFAULT_TOLERANCES)
    extra = data.get("tolerances") or {}
    unknown = set(extra) - set(DEFAULT_TOLERANCES)
    if unknown:
        raise ScenarioError("tolerances", f"unknown keys {sorted(unknown)}")
    tolerances.update({k: float(v) for k, v in extra.items()})

    levi = {"mode": "psh", "margin": 0.0}
    levi.update(data.get("levi") or {})
    if levi["mode"] not in ("psh", "vanish"):
        raise ScenarioError("levi.mode", "must be 'psh' or 'vanish'")

    disc = {"r": 0.1, "n_r": 32, "n_phi": 64, "max_iter": 50}
    disc.update(data.get("disc") or {})

    return Scenario(
        name=name,
        n=n,
        structure=S,
        fields=fields,
        metric=metric,
        alpha=alpha,
        theta=theta,
        grid=_grid(data.get("grid"), n),
        tolerances=tolerances,
        seed=int(data.get("seed", 0)),
        point=_vector(data, "point", n),
        vector=_vector(data, "vector", n),
        levi=levi,
        disc=disc,
        description=str(data.get("description", "")),
        source=data,
    )


def _builtin_dir():
    return resources.files("levimax") / "scenarios"


def builtin_names() -> list:
    return sorted(p.name[: -len(".json")] for p in _builtin_dir().iterdir() if p.name.endswith(".json"))


def load_scenario(ref) -> Scenario:
    """Load ``builtin:<name>`` or a path to a JSON file."""
    ref = str(ref)
    if ref.startswith(BUILTIN_PREFIX):
        name = ref[len(BUILTIN_PREFIX):]
        if name not in builtin_names():
            raise ScenarioError("scenario", f"no builtin scenario {name!r}")
        text = (_builtin_dir() / f"{name}.json").read_text()
    else:
        path = Path(ref)
        if not path.is_file():
            raise ScenarioError("scenario", f"file not found: {ref}")
        text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("scenario", f"malformed JSON: {exc}") from exc
    return scenario_from_dict(data)
