"""Scenario documents: YAML parsing, validation with line diagnostics, canonical form, and building.

A document has top-level blocks ``spaces``, ``drivers``, ``factorizations``,
``processes``, ``integrands`` and ``ou`` (each a mapping from block id to
parameters), a ``checks`` list, and the run settings ``seed`` and
``n_paths`` (both mandatory). Blocks refer to each other by id.
"""
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .. import levy_drivers as ld
from .. import rkhs
from ..cyl_process import SeriesProcess, process_from_dict
from ..errors import CylLevyError
from ..ou_dynamics import OUScenario, initial_from_dict
from ..space_model import Semigroup, SpaceModel
from ..stochastic_integration import StepIntegrand

REQUIRED = object()
TOP_KEYS = ("id", "description", "seed", "n_paths", "output", "workers", "spaces", "drivers", "factorizations", "processes", "integrands", "ou", "checks")
ADAPTED_FAMILIES = ("sign_first_driver", "tanh_first_driver")


class ConfigError(CylLevyError):
    """A scenario document failed to parse or validate; carries the offending field and position."""

    def __init__(self, message, path=(), line=None, column=None, source=None):
        self.message = message
        self.path = tuple(path)
        self.line = line
        self.column = column
        self.source = source
        super().__init__(self.render())

    def render(self):
        where = self.source or "<config>"
        if self.line is not None:
            where += f":{self.line}:{self.column}"
        field_ = format_path(self.path)
        return f"{where}: {field_ + ': ' if field_ else ''}{self.message}"


def format_path(path):
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out


# --------------------------------------------------------------------------
# YAML with source positions


def _marks(node, path, out):
    out[path] = (node.start_mark.line + 1, node.start_mark.column + 1)
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            out[path + (k.value,)] = (k.start_mark.line + 1, k.start_mark.column + 1)
            _marks(v, path + (k.value,), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _marks(v, path + (i,), out)


def load_yaml(text, source=None):
    """Parse YAML text into (document, marks) where marks maps field paths to (line, column)."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line, col = (mark.line + 1, mark.column + 1) if mark is not None else (None, None)
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', None) or exc}", (), line, col, source) from None
    marks = {}
    if node is not None:
        _marks(node, (), marks)
    return doc, marks


# --------------------------------------------------------------------------
# field validators; each returns the canonical value or raises _Invalid


class _Invalid(Exception):
    def __init__(self, message, path):
        self.message, self.path = message, tuple(path)


def _num(v, path, kind=float):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise _Invalid(f"expected a number, got {type(v).__name__}", path)
    if kind is int:
        if isinstance(v, float) and not v.is_integer():
            raise _Invalid("expected an integer", path)
        return int(v)
    if not np.isfinite(v):
        raise _Invalid("expected a finite number", path)
    return float(v)


def v_int(v, path):
    return _num(v, path, int)


def v_posint(v, path):
    out = _num(v, path, int)
    if out < 1:
        raise _Invalid("expected a positive integer", path)
    return out


def v_nonneg_int(v, path):
    out = _num(v, path, int)
    if out < 0:
        raise _Invalid("expected a non-negative integer", path)
    return out


def v_float(v, path):
    return _num(v, path)


def v_posfloat(v, path):
    out = _num(v, path)
    if not out > 0:
        raise _Invalid("expected a positive number", path)
    return out


def v_bool(v, path):
    if not isinstance(v, bool):
        raise _Invalid("expected true or false", path)
    return v


def v_str(v, path):
    if not isinstance(v, str):
        raise _Invalid("expected a string", path)
    return v


def v_floats(v, path):
    if not isinstance(v, list) or not v:
        raise _Invalid("expected a non-empty list of numbers", path)
    return [_num(x, path + (i,)) for i, x in enumerate(v)]


def v_vectors(v, path):
    if not isinstance(v, list) or not v:
        raise _Invalid("expected a non-empty list of vectors", path)
    out = [v_floats(x, path + (i,)) for i, x in enumerate(v)]
    if len({len(x) for x in out}) != 1:
        raise _Invalid("vectors must have equal length", path)
    return out


v_matrix = v_vectors


def v_matrices(v, path):
    if not isinstance(v, list) or not v:
        raise _Invalid("expected a list of matrices", path)
    return [v_matrix(x, path + (i,)) for i, x in enumerate(v)]


def v_any_mapping(v, path):
    if not isinstance(v, dict):
        raise _Invalid("expected a mapping", path)
    return v


def v_choice(*options):
    def check(v, path):
        if v not in options:
            raise _Invalid(f"expected one of {', '.join(map(str, options))}", path)
        return v

    return check


def v_optional(inner):
    def check(v, path):
        return None if v is None else inner(v, path)

    return check


@dataclass(frozen=True)
class Ref:
    """A field naming a block in another section."""

    section: str
    many: bool = False


def _fields(d, spec, path, refs):
    """Validate mapping ``d`` against ``spec`` {name: (validator | Ref, default)}."""
    if not isinstance(d, dict):
        raise _Invalid("expected a mapping", path)
    unknown = sorted(set(d) - set(spec), key=str)
    if unknown:
        raise _Invalid(f"unknown field (allowed: {', '.join(spec)})", path + (unknown[0],))
    out = {}
    for name, (check, default) in spec.items():
        if name not in d or (d[name] is None and default is not REQUIRED):
            if default is REQUIRED:
                raise _Invalid(f"missing required field {name!r}", path)
            out[name] = default
            continue
        value = d[name]
        if isinstance(check, Ref):
            out[name] = _ref(value, check, path + (name,), refs)
        else:
            out[name] = check(value, path + (name,))
    return out


def _ref(value, ref, path, refs):
    names = value if ref.many else [value]
    if ref.many and (not isinstance(value, list) or not value):
        raise _Invalid(f"expected a non-empty list of {ref.section} ids", path)
    for i, n in enumerate(names):
        p = path + (i,) if ref.many else path
        if not isinstance(n, str):
            raise _Invalid(f"expected a {ref.section} id", p)
        if n not in refs.get(ref.section, ()):
            raise _Invalid(f"unknown {ref.section} block {n!r}", p)
    return list(value) if ref.many else value


def _wrap_domain(fn, path):
    try:
        return fn()
    except _Invalid:
        raise
    except (CylLevyError, ValueError, KeyError, TypeError) as exc:
        raise _Invalid(str(exc).strip("'\""), path) from None


# --------------------------------------------------------------------------
# block sections

SPACE_SPEC = {"dim": (v_posint, REQUIRED), "p": (v_float, 2.0)}
DRIVER_SPEC = {"triplet": (v_any_mapping, REQUIRED), "normalize": (v_bool, False), "compensate": (v_bool, False)}
FACT_SPEC = {"Q": (v_matrix, REQUIRED), "rank_tol": (v_posfloat, rkhs.RANK_TOL)}
SERIES_SPEC = {"kind": (v_str, REQUIRED), "space": (Ref("spaces"), None), "factorization": (Ref("factorizations"), REQUIRED), "drivers": (Ref("drivers", True), REQUIRED)}
INTEGRAND_SPEC = {
    "breakpoints": (v_floats, None),
    "T": (v_posfloat, None),
    "n_intervals": (v_posint, None),
    "matrix": (v_matrix, None),
    "values": (v_matrices, None),
    "adapted": (v_optional(v_choice(*ADAPTED_FAMILIES)), None),
}
OU_SPEC = {
    "generator": (v_matrix, None),
    "translation": (v_any_mapping, None),
    "C": (v_matrix, None),
    "noise": (Ref("processes"), REQUIRED),
    "initial": (v_any_mapping, None),
    "T": (v_posfloat, REQUIRED),
    "dt": (v_posfloat, REQUIRED),
}


def _canon_driver(d, path):
    out = _fields(d, DRIVER_SPEC, path, {})
    tr = _wrap_domain(lambda: ld.triplet_from_dict(out["triplet"]), path + ("triplet",))
    out["triplet"] = tr.to_dict()
    return out


def _canon_fact(d, path):
    out = _fields(d, FACT_SPEC, path, {})
    _wrap_domain(lambda: rkhs.factorize(np.array(out["Q"]), out["rank_tol"]), path + ("Q",))
    return out


PROCESS_KEYS = {
    "cyl_poisson": ("zeta", "rate"),
    "cyl_compound_poisson": ("rate", "law"),
    "impulsive": ("weights", "rate", "law"),
    "induced": ("drift", "cov", "rate", "law"),
}


def _canon_process(d, path, refs, built):
    if not isinstance(d, dict) or "kind" not in d:
        raise _Invalid("process blocks need a 'kind'", path)
    allowed = PROCESS_KEYS.get(d["kind"])
    if allowed is not None:
        for k in d:
            if k not in ("kind", "space") + allowed:
                raise _Invalid(f"unknown field for a {d['kind']} process (allowed: kind, space, {', '.join(allowed)})", path + (k,))
    if d["kind"] == "series":
        out = _fields(d, SERIES_SPEC, path, refs)
        if out["space"] is None:
            out.pop("space")
        return out
    body = {k: v for k, v in d.items() if k != "space"}
    proc = _wrap_domain(lambda: process_from_dict(body), path)
    out = proc.to_dict()
    if d.get("space") is not None:
        out["space"] = _ref(d["space"], Ref("spaces"), path + ("space",), refs)
        dim = built["spaces"][out["space"]].dim
        if proc.dim != dim:
            raise _Invalid(f"process has dimension {proc.dim} but space {out['space']!r} has dimension {dim}", path)
    return out


def _canon_integrand(d, path):
    out = _fields(d, INTEGRAND_SPEC, path, {})
    if out["breakpoints"] is None:
        if out["T"] is None or out["n_intervals"] is None:
            raise _Invalid("give breakpoints or both T and n_intervals", path)
        out["breakpoints"] = np.linspace(0.0, out["T"], out["n_intervals"] + 1).tolist()
    elif out["T"] is not None or out["n_intervals"] is not None:
        raise _Invalid("give breakpoints or T with n_intervals, not both", path)
    del out["T"], out["n_intervals"]
    if (out["matrix"] is None) == (out["values"] is None):
        raise _Invalid("give exactly one of matrix and values", path)
    if out["adapted"] is not None and out["matrix"] is None:
        raise _Invalid("adapted integrands scale a single matrix", path + ("adapted",))
    if out["matrix"] is None:
        out.pop("matrix")
    else:
        out.pop("values")
    return out


def _canon_ou(d, path, refs):
    out = _fields(d, OU_SPEC, path, refs)
    if (out["generator"] is None) == (out["translation"] is None):
        raise _Invalid("give exactly one of generator and translation", path)
    if out["translation"] is not None:
        t = _fields(out["translation"], {"n_nodes": (v_posint, REQUIRED), "step": (v_posfloat, REQUIRED)}, path + ("translation",), {})
        out["translation"] = t
        out.pop("generator")
    else:
        out.pop("translation")
    if out["C"] is None:
        out.pop("C")
    out["initial"] = out["initial"] or {"kind": "zero"}
    return out


# --------------------------------------------------------------------------
# checks


def check_specs():
    from .checks import CHECKS

    return {kind: c.params for kind, c in CHECKS.items()}


def _canon_check(d, path, refs):
    out = _fields(d, {"id": (v_str, REQUIRED), "kind": (v_str, REQUIRED), "params": (v_any_mapping, {})}, path, refs)
    specs = check_specs()
    if out["kind"] not in specs:
        raise _Invalid(f"unknown check kind {out['kind']!r}", path + ("kind",))
    out["params"] = _params(out["params"], specs[out["kind"]], path + ("params",), refs)
    return out


def _params(d, spec, path, refs):
    d = dict(d or {})
    resolved = {}
    for name, (check, default) in spec.items():
        if isinstance(check, dict):
            # a list of sub-records
            if name not in d:
                if default is REQUIRED:
                    raise _Invalid(f"missing required field {name!r}", path)
                resolved[name] = default
                continue
            items = d[name]
            if not isinstance(items, list) or not items:
                raise _Invalid("expected a non-empty list", path + (name,))
            resolved[name] = [_fields(item, check, path + (name, i), refs) for i, item in enumerate(items)]
        else:
            resolved[name] = (check, default)
    plain = {k: v for k, v in resolved.items() if isinstance(v, tuple)}
    out = _fields({k: v for k, v in d.items() if k in plain or k not in spec}, plain, path, refs)
    for k, v in resolved.items():
        if not isinstance(v, tuple):
            out[k] = v
    return {k: out[k] for k in spec}


# --------------------------------------------------------------------------
# the scenario


SECTIONS = ("spaces", "drivers", "factorizations", "processes", "integrands", "ou")


@dataclass(frozen=True)
class ScenarioConfig:
    """A validated scenario in canonical form (plain data)."""

    seed: int
    n_paths: int
    id: str = "scenario"
    description: str = ""
    output: object = None
    workers: object = None
    spaces: dict = field(default_factory=dict)
    drivers: dict = field(default_factory=dict)
    factorizations: dict = field(default_factory=dict)
    processes: dict = field(default_factory=dict)
    integrands: dict = field(default_factory=dict)
    ou: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)

    def to_dict(self):
        return {k: getattr(self, k) for k in TOP_KEYS}

    def with_overrides(self, seed=None, n_paths=None, output=None, workers=None):
        d = self.to_dict()
        for k, v in (("seed", seed), ("n_paths", n_paths), ("output", output), ("workers", workers)):
            if v is not None:
                d[k] = v
        return from_dict(d)

    def to_yaml(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None, width=120)


def from_dict(doc, marks=None, source=None):
    """Validate a parsed document and return its canonical ScenarioConfig."""
    marks = marks or {}
    try:
        return _from_dict(doc)
    except _Invalid as exc:
        line, col = _locate(exc.path, marks)
        raise ConfigError(exc.message, exc.path, line, col, source) from None


def _locate(path, marks):
    p = tuple(path)
    while p and p not in marks:
        p = p[:-1]
    return marks.get(p, (None, None))


def _section(doc, name):
    v = doc.get(name)
    if v is None:
        return {}
    if not isinstance(v, dict):
        raise _Invalid("expected a mapping from block id to parameters", (name,))
    for k in v:
        if not isinstance(k, str):
            raise _Invalid("block ids must be strings", (name,))
    return v


def _from_dict(doc):
    if not isinstance(doc, dict):
        raise _Invalid("the document must be a mapping", ())
    unknown = sorted(set(doc) - set(TOP_KEYS), key=str)
    if unknown:
        raise _Invalid(f"unknown top-level field (allowed: {', '.join(TOP_KEYS)})", (unknown[0],))
    for k in ("seed", "n_paths"):
        if doc.get(k) is None:
            raise _Invalid(f"missing required field {k!r}", ())
    seed = v_nonneg_int(doc["seed"], ("seed",))
    n_paths = v_posint(doc["n_paths"], ("n_paths",))
    out = {
        "seed": seed,
        "n_paths": n_paths,
        "id": v_str(doc.get("id", "scenario"), ("id",)),
        "description": v_str(doc.get("description", "") or "", ("description",)),
        "output": v_optional(v_str)(doc.get("output"), ("output",)),
        "workers": v_optional(v_posint)(doc.get("workers"), ("workers",)),
    }
    refs = {s: set(_section(doc, s)) for s in SECTIONS}
    built = {"spaces": {}}
    out["spaces"] = {}
    for k, v in _section(doc, "spaces").items():
        out["spaces"][k] = _fields(v, SPACE_SPEC, ("spaces", k), refs)
        built["spaces"][k] = _wrap_domain(lambda: SpaceModel(out["spaces"][k]["dim"], out["spaces"][k]["p"]), ("spaces", k))
    out["drivers"] = {k: _canon_driver(v, ("drivers", k)) for k, v in _section(doc, "drivers").items()}
    out["factorizations"] = {k: _canon_fact(v, ("factorizations", k)) for k, v in _section(doc, "factorizations").items()}
    out["processes"] = {k: _canon_process(v, ("processes", k), refs, built) for k, v in _section(doc, "processes").items()}
    out["integrands"] = {k: _canon_integrand(v, ("integrands", k)) for k, v in _section(doc, "integrands").items()}
    out["ou"] = {k: _canon_ou(v, ("ou", k), refs) for k, v in _section(doc, "ou").items()}
    checks = doc.get("checks") or []
    if not isinstance(checks, list):
        raise _Invalid("expected a list of checks", ("checks",))
    out["checks"] = [_canon_check(c, ("checks", i), refs) for i, c in enumerate(checks)]
    ids = [c["id"] for c in out["checks"]]
    for i, cid in enumerate(ids):
        if ids.index(cid) != i:
            raise _Invalid(f"duplicate check id {cid!r}", ("checks", i, "id"))
    cfg = ScenarioConfig(**out)
    # building catches cross-block inconsistencies (dimensions, normalization)
    build_context(cfg)
    return cfg


def parse(text, source=None):
    doc, marks = load_yaml(text, source)
    return from_dict(doc if doc is not None else {}, marks, source)


def load(path):
    path = Path(path)
    return parse(path.read_text(), str(path))


def canonical(doc):
    """to_dict(from_dict(doc)): the canonical form of a document."""
    return from_dict(doc).to_dict()


# --------------------------------------------------------------------------
# bundled scenarios


def bundled_dir():
    return resources.files("cyllevy.runner") / "scenarios"


def bundled_ids():
    return sorted(p.name[:-5] for p in bundled_dir().iterdir() if p.name.endswith(".yaml"))


def bundled_text(scenario_id):
    p = bundled_dir() / f"{scenario_id}.yaml"
    if not p.is_file():
        raise ConfigError(f"no bundled scenario {scenario_id!r}", ())
    return p.read_text()


def resolve(target):
    """A config path or a bundled scenario id."""
    p = Path(target)
    if p.is_file():
        return load(p)
    if target in bundled_ids():
        return parse(bundled_text(target), f"{target}.yaml")
    raise ConfigError(f"no such config file or bundled scenario: {target}", ())


# --------------------------------------------------------------------------
# materialized objects


@dataclass
class Context:
    config: ScenarioConfig
    spaces: dict = field(default_factory=dict)
    drivers: dict = field(default_factory=dict)
    factorizations: dict = field(default_factory=dict)
    processes: dict = field(default_factory=dict)
    integrands: dict = field(default_factory=dict)
    ou: dict = field(default_factory=dict)


def build_driver(spec):
    tr = ld.triplet_from_dict(spec["triplet"])
    if spec["normalize"]:
        tr = ld.normalize_to_unit_quadratic(tr)
    if spec["compensate"]:
        tr = ld.compensated(tr)
    return tr


def _adapted_fn(family, M):
    def fn(j, hist):
        x = hist[:, 0, -1]
        if family == "sign_first_driver":
            scale = np.where(x >= 0, 1.0, -1.0)
        else:
            scale = 1.0 + np.tanh(x)
        return scale[:, None, None] * M[None]

    return fn


def build_integrand(spec):
    bp = np.array(spec["breakpoints"])
    if "matrix" in spec:
        M = np.array(spec["matrix"], dtype=np.float64)
        if spec["adapted"] is not None:
            return StepIntegrand.adapted(bp, _adapted_fn(spec["adapted"], M), M.shape)
        return StepIntegrand(bp, np.broadcast_to(M, (len(bp) - 1,) + M.shape).copy())
    return StepIntegrand(bp, np.array(spec["values"], dtype=np.float64))


def build_context(cfg):
    ctx = Context(cfg)
    for k, v in cfg.spaces.items():
        ctx.spaces[k] = SpaceModel(v["dim"], v["p"])
    for k, v in cfg.drivers.items():
        ctx.drivers[k] = _wrap_domain(lambda: build_driver(v), ("drivers", k))
    for k, v in cfg.factorizations.items():
        ctx.factorizations[k] = rkhs.factorize(np.array(v["Q"]), v["rank_tol"])
    for k, v in cfg.processes.items():
        path = ("processes", k)
        if v["kind"] == "series":
            fact = ctx.factorizations[v["factorization"]]
            drivers = [ctx.drivers[d] for d in v["drivers"]]
            if len(drivers) == 1:
                drivers = drivers[0]
            ctx.processes[k] = _wrap_domain(lambda: rkhs.build_series_process(fact, drivers), path + ("drivers",))
            if "space" in v and ctx.spaces[v["space"]].dim != fact.dim:
                raise _Invalid(f"factorization has dimension {fact.dim} but space {v['space']!r} has dimension {ctx.spaces[v['space']].dim}", path)
        else:
            ctx.processes[k] = process_from_dict({kk: vv for kk, vv in v.items() if kk != "space"})
    for k, v in cfg.integrands.items():
        ctx.integrands[k] = _wrap_domain(lambda: build_integrand(v), ("integrands", k))
    for k, v in cfg.ou.items():
        ctx.ou[k] = _wrap_domain(lambda: _build_ou(v, ctx), ("ou", k))
    return ctx


def _build_ou(v, ctx):
    noise = ctx.processes[v["noise"]]
    if not isinstance(noise, SeriesProcess):
        raise CylLevyError("OU noise must be a series process")
    if "generator" in v:
        S = Semigroup.from_generator(np.array(v["generator"]))
    else:
        S = Semigroup.translation(v["translation"]["n_nodes"], v["translation"]["step"])
    C = np.array(v["C"]) if "C" in v else np.eye(S.dim, noise.dim)
    return OUScenario(S, C, noise, initial_from_dict(dict(v["initial"]), S.dim), v["T"], v["dt"])
