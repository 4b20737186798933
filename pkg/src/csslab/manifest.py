"""Experiment manifests and the bundled presets.

A manifest is plain JSON::

    {"kind": "simulate", "config": {...}, "seed": 0, "out": "runs/x", "versions": {...}}

``config`` holds the per-kind payload.  Serialization is canonical (sorted keys,
fixed indentation), so ``from_json(m.to_json()).to_json() == m.to_json()``.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from importlib import metadata

from .errors import ContractViolation

KINDS = ("simulate", "groundstate", "classify", "dichotomy", "inequalities", "scatter_check")

SIM_KEYS = {"p", "dt", "t_end", "n", "r_max", "nonlinear_on", "blowup_gradient_factor",
            "boundary_mass_tol", "log_stride", "virial_radius", "snapshot_times", "initial",
            "expect"}
INITIAL_KEYS = {"amplitude", "width", "chirp"}
GROUND_KEYS = {"p", "n", "r_max", "n_gaussians", "restarts", "max_iter", "expect"}
ALLOWED = {
    "simulate": SIM_KEYS,
    "scatter_check": SIM_KEYS | {"horizons"},
    "groundstate": GROUND_KEYS,
    "classify": {"p", "n", "r_max", "initial", "ground"},
    "dichotomy": {"p", "amplitudes", "width", "plus", "minus", "ground", "expect"},
    "inequalities": {"n_fields", "n", "r_max", "cases"},
}
REQUIRED = {
    "simulate": {"p", "dt", "t_end"},
    "scatter_check": {"p", "dt", "t_end"},
    "groundstate": {"p"},
    "classify": {"p", "initial"},
    "dichotomy": {"p", "amplitudes"},
    "inequalities": set(),
}


def package_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


@dataclass
class ExperimentManifest:
    kind: str
    config: dict
    seed: int = 0
    out: str = "runs/out"
    versions: dict = field(default_factory=dict)

    def __post_init__(self):
        validate(self.kind, self.config)
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ContractViolation("seed: must be an integer")
        if not isinstance(self.out, str) or not self.out:
            raise ContractViolation("out: must be a non-empty path")
        if not self.versions:
            self.versions = {"package": package_version(), "config_sha256": config_hash(self.config)}

    def to_dict(self) -> dict:
        return {"kind": self.kind, "config": self.config, "seed": self.seed,
                "out": self.out, "versions": self.versions}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d) -> "ExperimentManifest":
        if not isinstance(d, dict):
            raise ContractViolation("manifest: expected a JSON object")
        extra = set(d) - {"kind", "config", "seed", "out", "versions"}
        if extra:
            raise ContractViolation(f"manifest: unknown field(s) {sorted(extra)}")
        for key in ("kind", "config"):
            if key not in d:
                raise ContractViolation(f"manifest: missing field '{key}'")
        return cls(kind=d["kind"], config=d["config"], seed=d.get("seed", 0),
                   out=d.get("out", "runs/out"), versions=d.get("versions", {}))

    @classmethod
    def from_json(cls, text: str) -> "ExperimentManifest":
        if not text.strip():
            raise ContractViolation("config file is empty")
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ContractViolation(f"config file is not valid JSON: {exc}") from None
        return cls.from_dict(d)


def validate(kind: str, config) -> None:
    if kind not in KINDS:
        raise ContractViolation(f"kind: must be one of {KINDS}, got {kind!r}")
    if not isinstance(config, dict):
        raise ContractViolation("config: expected a JSON object")
    extra = set(config) - ALLOWED[kind]
    if extra:
        raise ContractViolation(f"config: unknown field(s) {sorted(extra)} for {kind}")
    missing = REQUIRED[kind] - set(config)
    if missing:
        raise ContractViolation(f"config: missing field(s) {sorted(missing)} for {kind}")
    init = config.get("initial")
    if init is not None:
        if not isinstance(init, dict) or set(init) - INITIAL_KEYS or "amplitude" not in init:
            raise ContractViolation("config.initial: needs 'amplitude' and optional 'width', 'chirp'")
    for key, value in config.items():
        if key in ("p", "dt", "t_end", "r_max") and not _is_number(value):
            raise ContractViolation(f"config.{key}: expected a number, got {value!r}")
        if key == "n" and not (isinstance(value, int) and not isinstance(value, bool)):
            raise ContractViolation(f"config.n: expected an integer, got {value!r}")


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


GROUND_GRID = {"n": 2048, "r_max": 20.0}

_SCATTER_TIMES = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0]

PRESETS: dict[str, dict] = {
    # conservation run: t in [0, 5], p = 5
    "kplus": {
        "kind": "simulate",
        "config": {"p": 5.0, "dt": 1e-3, "t_end": 5.0, "n": 4096, "r_max": 128.0,
                   "log_stride": 50, "initial": {"amplitude": 1.0, "width": 1.0},
                   "expect": {"termination": "completed", "mass_drift": 1e-8,
                              "energy_drift": 1e-4}},
    },
    "free-gaussian": {
        "kind": "simulate",
        "config": {"p": 5.0, "dt": 1e-3, "t_end": 1.0, "n": 2048, "r_max": 64.0,
                   "nonlinear_on": False, "log_stride": 100,
                   "initial": {"amplitude": 1.0, "width": 1.0},
                   "expect": {"termination": "completed", "mass_drift": 1e-8}},
    },
    # small, wide datum on a large domain for the scattering and Morawetz checks
    "kplus-small": {
        "kind": "scatter_check",
        "config": {"p": 5.0, "dt": 1e-2, "t_end": 25.0, "n": 8192, "r_max": 256.0,
                   "log_stride": 50, "snapshot_times": _SCATTER_TIMES,
                   "initial": {"amplitude": 0.5, "width": 2.0},
                   "horizons": [5.0, 10.0, 15.0, 20.0, 25.0]},
    },
    "kminus": {
        "kind": "simulate",
        "config": {"p": 5.0, "dt": 1e-4, "t_end": 5.0, "n": 8192, "r_max": 16.0,
                   "log_stride": 100, "initial": {"amplitude": 2.5, "width": 1.0},
                   "expect": {"termination": "blowup_detected", "before": 5.0}},
    },
    "kminus-p4.5": {
        "kind": "simulate",
        "config": {"p": 4.5, "dt": 1e-4, "t_end": 5.0, "n": 8192, "r_max": 16.0,
                   "log_stride": 100, "initial": {"amplitude": 2.5, "width": 1.0},
                   "expect": {"termination": "blowup_detected", "before": 5.0}},
    },
    "groundstate": {
        "kind": "groundstate",
        "config": {"p": 5.0, **GROUND_GRID, "expect": {"d_max": 5.24}},
    },
    "groundstate-coarse": {
        "kind": "groundstate",
        "config": {"p": 5.0, "n": 1024, "r_max": 20.0, "expect": {"d_max": 5.24}},
    },
    "classify-small": {
        "kind": "classify",
        "config": {"p": 5.0, "n": 2048, "r_max": 64.0, "initial": {"amplitude": 0.1}},
    },
    "dichotomy": {
        "kind": "dichotomy",
        "config": {"p": 5.0, "amplitudes": [0.3, 0.5, 1.0, 2.5], "width": 2.0,
                   "expect": {"consistent": True}},
    },
    "inequalities": {
        "kind": "inequalities",
        "config": {"n_fields": 100, "n": 4096, "r_max": 48.0},
    },
}


def preset(name: str) -> dict:
    if name not in PRESETS:
        raise ContractViolation(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    return copy.deepcopy(PRESETS[name])
