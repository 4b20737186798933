"""Command line entry point: ``csslab <subcommand> [--preset NAME | --config FILE] [overrides]``.

Exit codes: 0 success, 2 usage error, 3 runtime or I/O error, 4 an acceptance
expectation of the run was not met.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .dichotomy import (classify, coercivity_check, dichotomy_suite, gaussian_datum, morawetz_check,
                        scattering_monitor, virial_rate_check)
from .errors import ContractViolation, CSSError
from .evolution import SimConfig, propagate
from .groundstate import DescentConfig, minimize_d
from .grid import RadialGrid
from .inequalities import InequalityCase, default_cases, sweep_report
from .manifest import GROUND_GRID, ExperimentManifest, preset

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_ACCEPT = 0, 2, 3, 4

log = logging.getLogger("csslab")

SUBCOMMANDS = {
    "simulate": "simulate",
    "groundstate": "groundstate",
    "classify": "classify",
    "dichotomy": "dichotomy",
    "inequalities": "inequalities",
    "scatter-check": "scatter_check",
}
DEFAULT_PRESET = {
    "simulate": "kplus",
    "groundstate": "groundstate",
    "classify": "classify-small",
    "dichotomy": "dichotomy",
    "inequalities": "inequalities",
    "scatter_check": "kplus-small",
}


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="csslab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        src = sp.add_mutually_exclusive_group()
        src.add_argument("--preset", help="bundled preset name")
        src.add_argument("--config", help="manifest JSON file")
        sp.add_argument("--p", type=float)
        sp.add_argument("--n", type=int)
        sp.add_argument("--rmax", type=float)
        sp.add_argument("--dt", type=float)
        sp.add_argument("--t-end", type=float, dest="t_end")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory")
    return parser


def resolve_manifest(args) -> ExperimentManifest:
    kind = SUBCOMMANDS[args.command]
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
        d = json.loads(text) if text.strip() else None
        if d is None:
            raise UsageError("config file is empty")
    else:
        d = preset(args.preset or DEFAULT_PRESET[kind])
    if d.get("kind") != kind:
        raise UsageError(f"manifest kind {d.get('kind')!r} does not match subcommand {args.command}")
    cfg = d["config"]
    for flag, key in (("p", "p"), ("n", "n"), ("rmax", "r_max"), ("dt", "dt"), ("t_end", "t_end")):
        value = getattr(args, flag)
        if value is not None:
            cfg[key] = value
    if args.seed is not None:
        d["seed"] = args.seed
    if args.out is not None:
        d["out"] = args.out
    d.setdefault("out", f"runs/{args.command}")
    d.pop("versions", None)  # recomputed after overrides
    return ExperimentManifest.from_dict(d)


def _sim_config(cfg: dict) -> SimConfig:
    keys = ("p", "dt", "t_end", "n", "r_max", "nonlinear_on", "blowup_gradient_factor",
            "boundary_mass_tol", "log_stride", "virial_radius")
    kw = {k: cfg[k] for k in keys if k in cfg}
    kw["snapshot_times"] = tuple(cfg.get("snapshot_times", ()))
    return SimConfig(**kw)


def _initial(cfg: dict, grid: RadialGrid):
    init = cfg["initial"]
    return gaussian_datum(grid, float(init["amplitude"]), float(init.get("width", 1.0)),
                          float(init.get("chirp", 0.0)))


def _write(out: Path, name: str, text: str):
    (out / name).write_text(text)


def _write_csv(out: Path, name: str, header, rows):
    with open(out / name, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(x) for x in row])


def _cell(x):
    if isinstance(x, (bool, np.bool_)) or x is None or isinstance(x, str):
        return x
    return repr(float(x))


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    raise TypeError(f"not serializable: {type(x)}")


def _clean(x):
    """JSON-safe copy with infinities spelled as strings."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _drift(series):
    a = np.asarray(series)
    return float(np.max(np.abs(a - a[0])) / abs(a[0])) if a[0] != 0 else float(np.max(np.abs(a)))


def ground_state_d(p: float, n: int | None = None, r_max: float | None = None, seed: int = 0):
    """``d`` for ``(p, grid)``, computed once and cached on disk."""
    n = n or GROUND_GRID["n"]
    r_max = r_max or GROUND_GRID["r_max"]
    cache_dir = Path(os.environ.get("CSSLAB_CACHE", Path.home() / ".cache" / "csslab"))
    path = cache_dir / f"d_p{p:g}_n{n}_r{r_max:g}.json"
    if path.exists():
        try:
            return json.loads(path.read_text())["d_value"]
        except (OSError, ValueError, KeyError):
            log.warning("ignoring unreadable cache entry %s", path)
    result = minimize_d(p, RadialGrid(n, r_max), DescentConfig(seed=seed))
    try:
        cache_dir.mkdir(parents=True, exist_ok=True)
        path.write_text(result.to_json())
    except OSError as exc:
        log.warning("could not cache d: %s", exc)
    return result.d_value


def run_simulate(m: ExperimentManifest, out: Path) -> list[str]:
    cfg = m.config
    sim = _sim_config(cfg)
    trajectory = propagate(_initial(cfg, sim.grid), sim)
    _write(out, "trajectory.csv", trajectory.to_csv())
    _write_csv(out, "grad_norm.csv", ("t", "grad_norm"), zip(trajectory.times, trajectory.grad_norm))
    summary = trajectory.manifest()
    summary["mass_drift"] = _drift([r.mass for r in trajectory.reports])
    summary["energy_drift"] = float(np.max(np.abs(np.array([r.energy for r in trajectory.reports])
                                                  - trajectory.reports[0].energy)))
    _write(out, "run.json", _dump(summary))
    failures = []
    exp = cfg.get("expect", {})
    if "termination" in exp and trajectory.termination != exp["termination"]:
        failures.append(f"termination {trajectory.termination} != {exp['termination']}")
    if "before" in exp and not (trajectory.termination_time or math.inf) < exp["before"]:
        failures.append(f"trigger time {trajectory.termination_time} not before {exp['before']}")
    if "mass_drift" in exp and not summary["mass_drift"] < exp["mass_drift"]:
        failures.append(f"mass drift {summary['mass_drift']:.3e} >= {exp['mass_drift']}")
    if "energy_drift" in exp and not summary["energy_drift"] < exp["energy_drift"]:
        failures.append(f"energy drift {summary['energy_drift']:.3e} >= {exp['energy_drift']}")
    print(f"simulate: {trajectory.termination} t={trajectory.times[-1]:g} "
          f"mass_drift={summary['mass_drift']:.3e} energy_drift={summary['energy_drift']:.3e}")
    return failures


def run_groundstate(m: ExperimentManifest, out: Path) -> list[str]:
    cfg = m.config
    grid = RadialGrid(cfg.get("n", GROUND_GRID["n"]), cfg.get("r_max", GROUND_GRID["r_max"]))
    kw = {k: cfg[k] for k in ("n_gaussians", "restarts", "max_iter") if k in cfg}
    result = minimize_d(float(cfg["p"]), grid, DescentConfig(seed=m.seed, **kw))
    _write(out, "groundstate.json", result.to_json())
    _write(out, "profile.csv", result.profile_csv())
    print(f"groundstate: d={result.d_value:.10f} converged={result.converged} "
          f"L-check={result.d_by_l_characterization:.10f}")
    failures = []
    d_max = cfg.get("expect", {}).get("d_max")
    if not result.d_value > 0:
        failures.append("d_value is not positive")
    if d_max is not None and not result.d_value < d_max:
        failures.append(f"d_value {result.d_value} >= {d_max}")
    return failures


def run_classify(m: ExperimentManifest, out: Path) -> list[str]:
    cfg = m.config
    p = float(cfg["p"])
    grid = RadialGrid(cfg.get("n", 2048), cfg.get("r_max", 64.0))
    ground = cfg.get("ground", {})
    d = ground_state_d(p, ground.get("n"), ground.get("r_max"))
    res = classify(_initial(cfg, grid), p, d)
    _write(out, "classification.json", _dump(res.to_dict()))
    print(f"classify: {res.set_label} S={res.s_value:.6g} K={res.k_value:.6g} d={d:.8g}")
    return []


def run_dichotomy(m: ExperimentManifest, out: Path) -> list[str]:
    cfg = m.config
    p = float(cfg["p"])
    ground = cfg.get("ground", {})
    d = ground_state_d(p, ground.get("n"), ground.get("r_max"))
    plus = _sim_config({"p": p, **cfg["plus"]}) if "plus" in cfg else None
    minus = _sim_config({"p": p, **cfg["minus"]}) if "minus" in cfg else None
    rows = dichotomy_suite(p, cfg["amplitudes"], d, width=float(cfg.get("width", 1.0)),
                           plus_config=plus, minus_config=minus)
    header = ("amplitude", "S", "K", "label", "outcome", "trigger_time", "scattered", "consistent")
    _write_csv(out, "dichotomy.csv", header,
               [(r.amplitude, r.s_value, r.k_value, r.label, r.outcome, r.trigger_time,
                 r.scattered, r.consistent) for r in rows])
    _write(out, "dichotomy.json", _dump({"d_reference": d, "rows": [r.to_dict() for r in rows]}))
    for r in rows:
        print(f"dichotomy: a={r.amplitude:g} {r.label} -> {r.outcome} consistent={r.consistent}")
    if cfg.get("expect", {}).get("consistent"):
        return [f"amplitude {r.amplitude}: {r.label} but {r.outcome}"
                for r in rows if r.consistent is False]
    return []


def run_inequalities(m: ExperimentManifest, out: Path) -> list[str]:
    cfg = m.config
    grid = RadialGrid(cfg.get("n", 4096), cfg.get("r_max", 48.0))
    if "cases" in cfg:
        cases = [InequalityCase(c["name"], {k: float(v) for k, v in c.get("exponents", {}).items()})
                 for c in cfg["cases"]]
    else:
        cases = default_cases()
    reports = [sweep_report(c, int(cfg.get("n_fields", 100)), grid, seed=m.seed) for c in cases]
    _write(out, "inequalities.json", _dump(_clean([r.to_dict() for r in reports])))
    failures = []
    for c, r in zip(cases, reports):
        print(f"inequalities: {c.label} max={r.max_ratio:.6g} violations={r.violations} "
              f"spread={r.dilation_spread}")
        if r.violations:
            failures.append(f"{c.label}: {r.violations} violations")
        if r.dilation_spread is not None and r.dilation_spread >= 0.05:
            failures.append(f"{c.label}: dilation spread {r.dilation_spread:.3f}")
    return failures


def run_scatter_check(m: ExperimentManifest, out: Path) -> list[str]:
    cfg = m.config
    sim = _sim_config(cfg)
    trajectory = propagate(_initial(cfg, sim.grid), sim)
    _write(out, "trajectory.csv", trajectory.to_csv())
    _write(out, "run.json", _dump(trajectory.manifest()))
    failures = []
    if trajectory.termination != "completed":
        failures.append(f"run ended with {trajectory.termination}")
        return failures
    scat = scattering_monitor(trajectory)
    mor = morawetz_check(trajectory, sim.p, tuple(cfg.get("horizons", (5, 10, 15, 20, 25))))
    vir = virial_rate_check(trajectory)
    coer = coercivity_check(trajectory)
    _write_csv(out, "morawetz.csv", ("T", "acc_p", "acc_q", "acc_a0", "ratio"), mor.ladder_rows())
    _write_csv(out, "scattering.csv", ("t", "increment"), zip(scat.times, scat.increments))
    _write(out, "scatter.json", _dump(_clean({"scattering": scat.to_dict(),
                                              "morawetz": mor.to_dict(),
                                              "virial": vir.to_dict(),
                                              "coercivity": coer.to_dict()})))
    min_k = min(r.nehari for r in trajectory.reports)
    print(f"scatter-check: scattered={scat.scattered} final={scat.final_relative:.3e} "
          f"morawetz_spread={mor.spread:.3f} min_K={min_k:.4g} coercivity_c={coer.fitted_constant:.4g}")
    if not scat.scattered:
        failures.append("scattering flag not set")
    if not mor.bounded:
        failures.append(f"Morawetz ratio spread {mor.spread:.3f}")
    if not min_k > 0:
        failures.append("K(u(t)) not positive at every log point")
    return failures


RUNNERS = {
    "simulate": run_simulate,
    "groundstate": run_groundstate,
    "classify": run_classify,
    "dichotomy": run_dichotomy,
    "inequalities": run_inequalities,
    "scatter_check": run_scatter_check,
}


def precheck(manifest: ExperimentManifest) -> None:
    """Build every config object up front so usage errors leave no partial outputs."""
    cfg = manifest.config
    if manifest.kind in ("simulate", "scatter_check"):
        sim = _sim_config(cfg)
        if "initial" not in cfg:
            raise ContractViolation("config.initial: required for simulation runs")
        _initial(cfg, RadialGrid(3, sim.r_max))
    elif manifest.kind == "groundstate":
        RadialGrid(cfg.get("n", GROUND_GRID["n"]), cfg.get("r_max", GROUND_GRID["r_max"]))
        if not float(cfg["p"]) > 3:
            raise ContractViolation("config.p: must exceed 3")
    elif manifest.kind == "classify":
        RadialGrid(cfg.get("n", 2048), cfg.get("r_max", 64.0))
    elif manifest.kind == "dichotomy":
        for key in ("plus", "minus"):
            if key in cfg:
                _sim_config({"p": cfg["p"], **cfg[key]})
        if not cfg["amplitudes"] or 0 in cfg["amplitudes"]:
            raise ContractViolation("config.amplitudes: needs nonzero amplitudes")
    elif manifest.kind == "inequalities":
        RadialGrid(cfg.get("n", 4096), cfg.get("r_max", 48.0))
        for c in cfg.get("cases", []):
            InequalityCase(c["name"], {k: float(v) for k, v in c.get("exponents", {}).items()})


def run(manifest: ExperimentManifest) -> int:
    out = Path(manifest.out)
    try:
        precheck(manifest)
    except (ContractViolation, KeyError, TypeError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        out.mkdir(parents=True, exist_ok=True)
        _write(out, "manifest.json", manifest.to_json())
        failures = RUNNERS[manifest.kind](manifest, out)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ContractViolation as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CSSError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if failures:
        for f in failures:
            print(f"acceptance failure: {f}", file=sys.stderr)
        return EXIT_ACCEPT
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        manifest = resolve_manifest(args)
    except (UsageError, ContractViolation, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(manifest)


if __name__ == "__main__":
    sys.exit(main())
