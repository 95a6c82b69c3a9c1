"""Experiment configuration: JSON loading, schema validation and builders.

Complex numbers are written as ``[re, im]`` pairs (a bare number is also
accepted); matrices are lists of rows of such entries, or a string path to a
JSON file holding one, resolved relative to the config file.
"""

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from .cat import CatReservoirParams, generator_eq16, generator_eq18
from .dynamics import LindbladGenerator
from .errors import ConfigError, PetzLyapError
from .petz import PetzMeasure
from .states import (
    DISTANCE_KINDS,
    basis,
    cat2_state,
    check_density,
    coherent_state,
    ket_to_dm,
    maximally_mixed,
    oscillator_ops,
)

MODELS = ("photon_loss", "eq16", "eq18", "custom")
STATE_KINDS = ("vacuum", "fock", "coherent", "cat2", "mixed", "random", "inline")

_number = {"type": "number"}
_complex = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    ]
}
_matrix = {
    "oneOf": [
        {"type": "string"},
        {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": _complex}},
    ]
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "model": {"enum": list(MODELS)},
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "u": _number,
                "theta": _number,
                "phi": _number,
                "f_phi": _number,
                "beta": _complex,
                "kappa": _number,
                "kappa_c": _number,
                "nmax": {"type": "integer"},
                "allow_complex_beta": {"type": "boolean"},
            },
        },
        "hamiltonian": _matrix,
        "jumps": {"type": "array", "items": _matrix},
        "integrator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "h": _number,
                "t_end": _number,
                "sample_every": {"type": "integer", "minimum": 1},
            },
        },
        "measure": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "array", "items": _number, "minItems": 2, "maxItems": 2},
        },
        "initial_states": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["kind"],
                "properties": {
                    "kind": {"enum": list(STATE_KINDS)},
                    "alpha": _complex,
                    "n": {"type": "integer", "minimum": 0},
                    "rho": _matrix,
                    "label": {"type": "string"},
                },
            },
        },
        "seed": {"type": "integer"},
        "output_dir": {"type": "string"},
        "jobs": {"type": "integer", "minimum": 1},
        "equilibrium_nodes": {"type": "integer", "minimum": 2},
        "contraction": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "channels": {"type": "integer", "minimum": 1},
                "pairs": {"type": "integer", "minimum": 1},
                "dim": {"type": "integer", "minimum": 2},
                "kinds": {"type": "array", "items": {"enum": list(DISTANCE_KINDS)}, "minItems": 1},
                "unitary_only": {"type": "boolean"},
                "measures": {"type": "integer", "minimum": 0},
                "dual_checks": {"type": "integer", "minimum": 0},
                "slack": _number,
                "flow_generators": {"type": "integer", "minimum": 0},
                "flow_dim": {"type": "integer", "minimum": 2},
                "flow_t_end": _number,
                "flow_h": _number,
            },
        },
    },
}


@dataclass
class ContractionSettings:
    channels: int = 100
    pairs: int = 20
    dim: int = 4
    kinds: tuple = DISTANCE_KINDS
    unitary_only: bool = False
    measures: int = 5
    dual_checks: int = 50
    slack: float = 1e-9
    flow_generators: int = 5
    flow_dim: int = 6
    flow_t_end: float = 2.0
    flow_h: float = 1e-2


@dataclass
class ExperimentConfig:
    model: str = "eq18"
    params: CatReservoirParams = field(default_factory=CatReservoirParams)
    allow_complex_beta: bool = False
    hamiltonian: Optional[np.ndarray] = None
    jumps: tuple = ()
    h: float = 1e-3
    t_end: Optional[float] = None
    sample_every: int = 100
    measure: Optional[PetzMeasure] = None
    initial_states: tuple = (
        {"kind": "vacuum"},
        {"kind": "mixed"},
        {"kind": "random"},
        {"kind": "random"},
        {"kind": "random"},
    )
    seed: int = 0
    output_dir: str = "out"
    jobs: int = 1
    equilibrium_nodes: int = 400
    contraction: ContractionSettings = field(default_factory=ContractionSettings)
    source: Optional[str] = None
    base_dir: Path = field(default_factory=Path.cwd)

    @property
    def horizon(self) -> float:
        """``t_end``, defaulting to ``20 / kappa``."""
        if self.t_end is not None:
            return self.t_end
        rate = self.params.kappa + (self.params.kappa_c if self.model == "eq18" else 0.0)
        return 20.0 / (self.params.kappa if self.params.kappa > 0 else rate)

    @property
    def dim(self) -> int:
        if self.model == "custom":
            return self.hamiltonian.shape[0]
        return self.params.nmax + 1

    def echo(self) -> dict:
        """JSON-ready view of the effective configuration."""
        out = {
            "model": self.model,
            "params": _jsonable(asdict(self.params)),
            "integrator": {"h": self.h, "t_end": self.horizon, "sample_every": self.sample_every},
            "initial_states": [_jsonable(s) for s in self.initial_states],
            "seed": self.seed,
            "equilibrium_nodes": self.equilibrium_nodes,
            "contraction": _jsonable(asdict(self.contraction)),
        }
        if self.model == "custom":
            out["hamiltonian"] = complex_matrix_to_json(self.hamiltonian)
            out["jumps"] = [complex_matrix_to_json(j) for j in self.jumps]
            out.pop("params")
        if self.measure is not None:
            out["measure"] = [list(a) for a in self.measure.atoms]
        return out


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.ndarray):
        return complex_matrix_to_json(x)
    return x


def complex_matrix_to_json(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def parse_complex(x) -> complex:
    if isinstance(x, (list, tuple)):
        return complex(float(x[0]), float(x[1]))
    return complex(float(x))


def _parse_matrix(raw, where: str, base_dir: Path) -> np.ndarray:
    if isinstance(raw, str):
        path = (base_dir / raw).resolve()
        if not path.is_file():
            raise ConfigError(f"{where}: referenced file {raw!r} does not exist")
        raw = _load_json(path)
    try:
        rows = [[parse_complex(z) for z in row] for row in raw]
    except (TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"{where}: malformed complex matrix ({exc})") from None
    if any(len(r) != len(rows) for r in rows):
        raise ConfigError(f"{where}: matrix must be square")
    return np.array(rows, dtype=np.complex128)


def _load_json(path: Path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _field(err: jsonschema.ValidationError) -> str:
    parts = [str(p) if not isinstance(p, int) else f"[{p}]" for p in err.absolute_path]
    return ".".join(parts).replace(".[", "[") or "<root>"


def validate(raw) -> None:
    validator = jsonschema.Draft7Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        raise ConfigError(f"field {_field(err)}: {err.message}")


def from_dict(raw: dict, base_dir: Optional[Path] = None, source: Optional[str] = None) -> ExperimentConfig:
    validate(raw)
    base_dir = Path.cwd() if base_dir is None else Path(base_dir)
    cfg = ExperimentConfig(source=source, base_dir=base_dir)
    cfg.model = raw.get("model", cfg.model)
    pr = dict(raw.get("params", {}))
    cfg.allow_complex_beta = bool(pr.pop("allow_complex_beta", False))
    if "beta" in pr:
        beta = parse_complex(pr["beta"])
        if beta.imag != 0 and not cfg.allow_complex_beta:
            raise ConfigError("field params.beta: complex drive needs params.allow_complex_beta=true")
        pr["beta"] = beta if beta.imag else beta.real
    cfg.params = replace(cfg.params, **pr)
    if cfg.model == "custom":
        if "hamiltonian" not in raw:
            raise ConfigError("field hamiltonian: required when model is 'custom'")
        cfg.hamiltonian = _parse_matrix(raw["hamiltonian"], "field hamiltonian", base_dir)
        cfg.jumps = tuple(
            _parse_matrix(j, f"field jumps[{i}]", base_dir) for i, j in enumerate(raw.get("jumps", []))
        )
        d = cfg.hamiltonian.shape[0]
        for i, j in enumerate(cfg.jumps):
            if j.shape != (d, d):
                raise ConfigError(f"field jumps[{i}]: shape {j.shape} does not match hamiltonian {(d, d)}")
    elif "hamiltonian" in raw or "jumps" in raw:
        raise ConfigError("field hamiltonian/jumps: only allowed when model is 'custom'")
    integ = raw.get("integrator", {})
    cfg.h = float(integ.get("h", cfg.h))
    cfg.t_end = float(integ["t_end"]) if "t_end" in integ else None
    cfg.sample_every = int(integ.get("sample_every", cfg.sample_every))
    if "measure" in raw:
        try:
            cfg.measure = PetzMeasure.from_atoms(raw["measure"])
        except PetzLyapError as exc:
            raise ConfigError(f"field measure: {exc}") from None
    if "initial_states" in raw:
        cfg.initial_states = tuple(dict(s) for s in raw["initial_states"])
    cfg.seed = int(raw.get("seed", cfg.seed))
    cfg.output_dir = raw.get("output_dir", cfg.output_dir)
    cfg.jobs = int(raw.get("jobs", cfg.jobs))
    cfg.equilibrium_nodes = int(raw.get("equilibrium_nodes", cfg.equilibrium_nodes))
    if "contraction" in raw:
        c = dict(raw["contraction"])
        if "kinds" in c:
            c["kinds"] = tuple(c["kinds"])
        cfg.contraction = replace(cfg.contraction, **c)
    return cfg


def load_config(path: Optional[str] = None) -> ExperimentConfig:
    """Parse and validate a config file; ``None`` gives the defaults."""
    if path is None:
        return from_dict({})
    p = Path(path)
    raw = _load_json(p)
    if not isinstance(raw, dict):
        raise ConfigError(f"{p}: top level must be a JSON object")
    return from_dict(raw, base_dir=p.resolve().parent, source=str(p))


OVERRIDES = {
    "nmax": ("params", "nmax"),
    "beta": ("params", "beta"),
    "kappa": ("params", "kappa"),
    "kappa_c": ("params", "kappa_c"),
    "h": ("cfg", "h"),
    "t_end": ("cfg", "t_end"),
    "seed": ("cfg", "seed"),
    "jobs": ("cfg", "jobs"),
    "output_dir": ("cfg", "output_dir"),
}


def apply_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    """Command-line overrides; ``None`` values are ignored."""
    for key, value in kw.items():
        if value is None:
            continue
        target, name = OVERRIDES[key]
        if target == "params":
            cfg.params = replace(cfg.params, **{name: value})
        else:
            setattr(cfg, name, value)
    return cfg


def check(cfg: ExperimentConfig) -> ExperimentConfig:
    """Semantic checks that the schema cannot express."""
    if not (math.isfinite(cfg.h) and cfg.h > 0):
        raise ConfigError(f"field integrator.h: must be a positive number, got {cfg.h}")
    if cfg.t_end is not None and not (math.isfinite(cfg.t_end) and cfg.t_end >= cfg.h):
        raise ConfigError(f"field integrator.t_end: must be >= h = {cfg.h}, got {cfg.t_end}")
    if cfg.jobs < 1:
        raise ConfigError(f"field jobs: must be >= 1, got {cfg.jobs}")
    p = cfg.params
    if cfg.model != "custom":
        if p.nmax < 2:
            raise ConfigError(f"field params.nmax: must be >= 2, got {p.nmax}")
        if not p.kappa > 0 and cfg.model in ("photon_loss", "eq16"):
            raise ConfigError(f"field params.kappa: must be positive, got {p.kappa}")
        if p.kappa < 0 or p.kappa_c < 0 or not p.kappa + p.kappa_c > 0:
            raise ConfigError("field params.kappa/kappa_c: need both >= 0 and a positive sum")
    return cfg


def build_generator(cfg: ExperimentConfig) -> LindbladGenerator:
    p = cfg.params
    if cfg.model == "photon_loss":
        ops = oscillator_ops(p.nmax)
        return LindbladGenerator.dissipative((math.sqrt(p.kappa) * ops.a,))
    if cfg.model == "eq16":
        return generator_eq16(p.beta, p.kappa, p.nmax, allow_complex=cfg.allow_complex_beta)
    if cfg.model == "eq18":
        return generator_eq18(p.beta, p.kappa, p.kappa_c, p.nmax, allow_complex=cfg.allow_complex_beta)
    return LindbladGenerator(cfg.hamiltonian, cfg.jumps)


def state_label(entry: dict, index: int) -> str:
    if "label" in entry:
        return entry["label"]
    kind = entry["kind"]
    if kind in ("coherent", "cat2") and "alpha" in entry:
        a = parse_complex(entry["alpha"])
        tag = f"{a.real:g}" if a.imag == 0 else f"{a.real:g}{a.imag:+g}j"
        return f"{kind}_{tag}"
    if kind == "fock":
        return f"fock_{entry.get('n', 0)}"
    return f"{kind}_{index}" if kind in ("random", "inline") else kind


def build_initial_states(cfg: ExperimentConfig) -> list:
    """``(label, rho)`` pairs; random states draw from a generator seeded by ``cfg.seed``."""
    from .ensembles import random_density

    d = cfg.dim
    rng = np.random.default_rng(cfg.seed)
    out = []
    for i, entry in enumerate(cfg.initial_states):
        kind = entry["kind"]
        where = f"field initial_states[{i}]"
        try:
            if kind in ("coherent", "cat2", "fock") and cfg.model == "custom":
                raise ConfigError(f"{where}: oscillator states need a non-custom model")
            if kind == "vacuum":
                rho = ket_to_dm(basis(d, 0))
            elif kind == "fock":
                n = int(entry.get("n", 0))
                if n >= d:
                    raise ConfigError(f"{where}.n: {n} exceeds the truncation")
                rho = ket_to_dm(basis(d, n))
            elif kind == "coherent":
                rho = ket_to_dm(coherent_state(parse_complex(entry.get("alpha", 1.0)), d - 1))
            elif kind == "cat2":
                rho = ket_to_dm(cat2_state(parse_complex(entry.get("alpha", 1.0)), d - 1))
            elif kind == "mixed":
                rho = maximally_mixed(d)
            elif kind == "random":
                rho = random_density(d, rng)
            else:
                if "rho" not in entry:
                    raise ConfigError(f"{where}.rho: required for kind 'inline'")
                rho = _parse_matrix(entry["rho"], f"{where}.rho", cfg.base_dir)
                if rho.shape != (d, d):
                    raise ConfigError(f"{where}.rho: shape {rho.shape} does not match dimension {d}")
                rho = check_density(rho)
        except ConfigError:
            raise
        except PetzLyapError as exc:
            raise ConfigError(f"{where}: {exc}") from None
        out.append((state_label(entry, i), rho))
    return out
