"""Model descriptions in JSON and the bundled presets.

A model file looks like::

    {"name": "...", "alphabet": ["a", "b"], "transition": [[1, 1], [1, 0]],
     "potential": {"depth": 1, "entries": {"a": 0.0, "b": 0.0}},
     "step": {"depth": 3, "entries": {"aaa": 1, "aab": -1, ...}}}

Word keys are space separated symbols, or a plain string when every symbol
is a single character.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .gibbs import GibbsMarkov, ModelError, Potential, StepFunction, SubshiftSpec, build_gibbs, make_step_function


@dataclass(frozen=True, eq=False)
class Model:
    name: str
    source: dict
    spec: SubshiftSpec
    potential: Potential
    gibbs: GibbsMarkov
    step: StepFunction

    @property
    def recommended(self) -> dict:
        return dict(self.source.get("recommended", {}))

    def digest(self) -> str:
        return hashlib.sha256(canonical_json(self.source).encode()).hexdigest()


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def preset_names() -> list[str]:
    files = resources.files("zrecur") / "presets"
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def preset_source(name: str) -> dict:
    path = resources.files("zrecur") / "presets" / f"{name}.json"
    if not path.is_file():
        raise ModelError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return json.loads(path.read_text())


def _field(obj: dict, key: str, path: str):
    if not isinstance(obj, dict) or key not in obj:
        raise ModelError(f"{path}: missing field {key!r}")
    return obj[key]


def _table(spec: SubshiftSpec, obj, path: str, integer: bool):
    depth = _field(obj, "depth", path)
    entries = _field(obj, "entries", path)
    if not isinstance(depth, int) or depth < 1:
        raise ModelError(f"{path}.depth: must be a positive integer")
    if not isinstance(entries, dict):
        raise ModelError(f"{path}.entries: must be an object")
    values = {}
    for key, val in entries.items():
        where = f"{path}.entries[{key!r}]"
        try:
            word = spec.parse_word(key)
        except ModelError as exc:
            raise ModelError(f"{where}: {exc}") from None
        if len(word) != depth:
            raise ModelError(f"{where}: word length {len(word)} differs from depth {depth}")
        if not spec.allowed(word):
            raise ModelError(f"{where}: word is not allowed by the transition matrix")
        if integer and (isinstance(val, bool) or not isinstance(val, int)):
            raise ModelError(f"{where}: step values must be integers")
        if not integer and not isinstance(val, (int, float)):
            raise ModelError(f"{where}: must be a number")
        values[word] = val
    return depth, values


def load_model(source: dict) -> Model:
    """Validate a model description; errors name the offending field."""
    name = source.get("name", "inline")
    alphabet = _field(source, "alphabet", "model")
    transition = _field(source, "transition", "model")
    try:
        spec = SubshiftSpec(np.array(transition), tuple(str(a) for a in alphabet))
    except (ModelError, ValueError) as exc:
        raise ModelError(f"model.transition: {exc}") from None
    pdepth, pvals = _table(spec, _field(source, "potential", "model"), "model.potential", False)
    sdepth, svals = _table(spec, _field(source, "step", "model"), "model.step", True)
    pot = Potential(pdepth, {w: float(v) for w, v in pvals.items()})
    try:
        g = build_gibbs(spec, pot, depth=max(2, sdepth))
    except ModelError as exc:
        raise ModelError(f"model.potential: {exc}") from None
    try:
        step = make_step_function(g, sdepth, svals)
    except ModelError as exc:
        raise ModelError(f"model.step: {exc}") from None
    return Model(name, source, spec, pot, g, step)


def resolve(preset: str | None = None, model: dict | str | Path | None = None) -> Model:
    """Model from a preset name, an inline dict, or a JSON file path."""
    if model is not None:
        if isinstance(model, (str, Path)):
            model = json.loads(Path(model).read_text())
        return load_model(model)
    if preset is None:
        raise ModelError("model: give a preset name or a model description")
    return load_model(preset_source(preset))
