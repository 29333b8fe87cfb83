"""Scenario files: a versioned YAML (or JSON) document.

Matrices are row-major nested lists. The JSON Schema lives in
``schema/scenario-v1.json``; after schema validation every matrix
invariant is checked again with index-qualified messages.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from importlib import resources

import jsonschema
import yaml

from .jsr import UpdateSet
from .matrix_core import MatrixError, NormKind
from .power_control import CSchedule, GainMatrix, Scheme
from .simulator import ABSORB_FACTOR, DIVERGE_FACTOR, SwitchingPolicy

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    """Schema or invariant violation; ``path`` locates the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


def load_schema() -> dict:
    text = resources.files("powerjsr").joinpath("schema/scenario-v1.json").read_text()
    return json.loads(text)


class _Loader(yaml.SafeLoader):
    pass


# YAML 1.1 reads "1e9" as a string; accept exponent floats without a dot
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
        |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)


@dataclass(frozen=True)
class JsrConfig:
    delta: float = 1e-3
    norm: NormKind = NormKind.INF
    depth: int = 16
    budget: int = 2_000_000


@dataclass(frozen=True)
class Thresholds:
    diverge: float = DIVERGE_FACTOR
    absorb: float = ABSORB_FACTOR


@dataclass(frozen=True)
class EnsembleConfig:
    random: int = 8
    greedy: bool = True
    witness: bool = True


@dataclass(frozen=True)
class ScenarioConfig:
    """A validated scenario. Matrices are stored as nested tuples."""

    name: str = "scenario"
    scheme: Scheme = Scheme.DPC
    gains: tuple | None = None
    matrices: tuple | None = None
    c_schedule: CSchedule = CSchedule.constant(1.0)
    switching: SwitchingPolicy = SwitchingPolicy.iid_uniform(0)
    p0: tuple = ()
    steps: int = 200
    seed: int = 0
    jsr: JsrConfig = field(default_factory=JsrConfig)
    thresholds: Thresholds = field(default_factory=Thresholds)
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)

    @property
    def power_mode(self) -> bool:
        return self.gains is not None

    @property
    def dim(self) -> int:
        mats = self.gains if self.gains is not None else self.matrices
        return len(mats[0])

    def gain_matrices(self) -> list[GainMatrix]:
        return [GainMatrix(g) for g in self.gains]

    def raw_set(self) -> UpdateSet:
        return UpdateSet(tuple(self.matrices))


def _tuplize(matrix) -> tuple:
    return tuple(tuple(float(x) for x in row) for row in matrix)


def _check_square(mats, key):
    dims = set()
    for k, mat in enumerate(mats):
        m = len(mat)
        for i, row in enumerate(mat):
            if len(row) != m:
                raise ScenarioError(f"{key}[{k}][{i}]", f"row has {len(row)} entries, expected {m}")
        dims.add(m)
    if len(dims) != 1:
        raise ScenarioError(key, f"matrices have different dimensions {sorted(dims)}")


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse and validate a scenario document, filling defaults."""
    try:
        doc = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        raise ScenarioError("", f"not a well-formed document ({exc})") from None
    if not isinstance(doc, dict):
        raise ScenarioError("", "scenario must be a mapping")
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)
        raise ScenarioError(path.lstrip(".") or "<root>", err.message)
    return _build(doc)


def _build(doc: dict) -> ScenarioConfig:
    kw = {}
    if "name" in doc:
        kw["name"] = doc["name"]
    kw["scheme"] = Scheme.parse(doc.get("scheme", "DPC"))
    if "gains" in doc:
        _check_square(doc["gains"], "gains")
        gains = tuple(_tuplize(g) for g in doc["gains"])
        for k, g in enumerate(gains):
            try:
                GainMatrix(g)
            except MatrixError as exc:
                raise ScenarioError(f"gains[{k}]", str(exc)) from None
        kw["gains"] = gains
        n_members = len(gains)
    else:
        _check_square(doc["matrices"], "matrices")
        mats = tuple(_tuplize(mat) for mat in doc["matrices"])
        try:
            UpdateSet(mats)
        except MatrixError as exc:
            raise ScenarioError("matrices", str(exc)) from None
        kw["matrices"] = mats
        n_members = len(mats)
    m = len((kw.get("gains") or kw.get("matrices"))[0])

    cs = doc.get("c_schedule")
    if cs is not None:
        try:
            if cs["policy"] == "explicit":
                if "values" not in cs:
                    raise ValueError("explicit policy needs 'values'")
                kw["c_schedule"] = CSchedule.explicit(cs["values"])
            else:
                kw["c_schedule"] = CSchedule(cs["policy"], c0=cs.get("c0", 1.0), ratio=cs.get("ratio", 1.0))
        except ValueError as exc:
            raise ScenarioError("c_schedule", str(exc)) from None

    sw = doc.get("switching")
    if sw is not None:
        if sw["policy"] == "cyclic":
            word = sw.get("word")
            if not word:
                raise ScenarioError("switching.word", "cyclic policy needs a nonempty word")
            for i, idx in enumerate(word):
                if idx >= n_members:
                    raise ScenarioError(f"switching.word[{i}]", f"index {idx} out of range for {n_members} members")
            kw["switching"] = SwitchingPolicy.cyclic(word)
        elif sw["policy"] == "greedy_adversarial":
            kw["switching"] = SwitchingPolicy.greedy_adversarial(sw.get("norm", "inf"))
        else:
            kw["switching"] = SwitchingPolicy.iid_uniform(doc.get("seed", 0))

    if "p0" in doc:
        p0 = tuple(float(x) for x in doc["p0"])
        if len(p0) != m:
            raise ScenarioError("p0", f"has {len(p0)} entries, expected {m}")
        if not any(p0):
            raise ScenarioError("p0", "must be nonzero")
        kw["p0"] = p0
    else:
        kw["p0"] = (1.0,) * m
    for key in ("steps", "seed"):
        if key in doc:
            kw[key] = int(doc[key])
    if "jsr" in doc:
        j = dict(doc["jsr"])
        if "norm" in j:
            j["norm"] = NormKind.parse(j["norm"])
        if "delta" in j:
            j["delta"] = float(j["delta"])
        kw["jsr"] = JsrConfig(**j)
    if "thresholds" in doc:
        kw["thresholds"] = Thresholds(**{k: float(v) for k, v in doc["thresholds"].items()})
    if "ensemble" in doc:
        kw["ensemble"] = EnsembleConfig(**doc["ensemble"])
    config = ScenarioConfig(**kw)
    if config.switching.kind == "iid_uniform" and config.switching.seed != config.seed:
        config = replace(config, switching=SwitchingPolicy.iid_uniform(config.seed))
    return config


def load_scenario(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def to_document(config: ScenarioConfig) -> dict:
    doc = {"version": SCHEMA_VERSION, "name": config.name, "scheme": config.scheme.value}
    if config.gains is not None:
        doc["gains"] = [[list(row) for row in g] for g in config.gains]
    else:
        doc["matrices"] = [[list(row) for row in mat] for mat in config.matrices]
    cs = config.c_schedule
    if cs.policy == "explicit":
        doc["c_schedule"] = {"policy": "explicit", "values": list(cs.values)}
    elif cs.policy == "geometric":
        doc["c_schedule"] = {"policy": "geometric", "c0": cs.c0, "ratio": cs.ratio}
    else:
        doc["c_schedule"] = {"policy": "constant", "c0": cs.c0}
    sw = config.switching
    if sw.kind == "cyclic":
        doc["switching"] = {"policy": "cyclic", "word": list(sw.word)}
    elif sw.kind == "greedy_adversarial":
        doc["switching"] = {"policy": "greedy_adversarial", "norm": sw.norm.value}
    else:
        doc["switching"] = {"policy": "iid_uniform"}
    doc["p0"] = list(config.p0)
    doc["steps"] = config.steps
    doc["seed"] = config.seed
    doc["jsr"] = {
        "delta": config.jsr.delta,
        "norm": config.jsr.norm.value,
        "depth": config.jsr.depth,
        "budget": config.jsr.budget,
    }
    doc["thresholds"] = {"diverge": config.thresholds.diverge, "absorb": config.thresholds.absorb}
    doc["ensemble"] = {
        "random": config.ensemble.random,
        "greedy": config.ensemble.greedy,
        "witness": config.ensemble.witness,
    }
    return doc


def emit_scenario(config: ScenarioConfig) -> str:
    """Serialize to YAML; ``parse_scenario(emit_scenario(c)) == c``."""
    return yaml.safe_dump(to_document(config), sort_keys=False, default_flow_style=None)
