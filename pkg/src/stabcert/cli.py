"""Command-line scenario runner.

    stabcert run scenario.json [--seed N] [--tolerance X] [--report PATH]
    stabcert list [--json]

Exit codes: 0 all checks passed, 1 a check failed, 2 configuration error,
3 numeric non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
import time
from pathlib import Path
from typing import Optional

import numpy as np

from .core import CheckFailed, ConfigurationError, NumericError, PreconditionError, make_rng, norm
from .instances import CHECKS, REGISTRY, build

SCHEMA_VERSION = 1

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    # mkstemp creates 0600; give the report ordinary umask permissions
    mask = os.umask(0)
    os.umask(mask)
    os.chmod(tmp, 0o666 & ~mask)
    os.replace(tmp, path)


def load_scenario(path: Path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigurationError("scenario must be a JSON object")
    if cfg.get("schemaVersion") != SCHEMA_VERSION:
        raise ConfigurationError(f"unsupported schemaVersion {cfg.get('schemaVersion')!r}")
    if cfg.get("instance") not in REGISTRY:
        raise ConfigurationError(f"unknown instance {cfg.get('instance')!r}")
    checks = cfg.get("checks")
    if not isinstance(checks, list) or not checks:
        raise ConfigurationError("scenario needs a non-empty 'checks' list")
    for c in checks:
        name = c if isinstance(c, str) else (c.get("name") if isinstance(c, dict) else None)
        if name not in CHECKS:
            raise ConfigurationError(f"unknown check {name!r}")
    return cfg


def _check_entries(cfg: dict):
    for c in cfg["checks"]:
        if isinstance(c, str):
            yield c, {}
        else:
            opts = dict(c)
            yield opts.pop("name"), opts


def write_trajectories(path: Path, bundle, seed: int, count: int, steps: int) -> None:
    """CSV with columns sampleIndex, t, state..., normValue, vValue."""
    flow = bundle.flow
    setting = flow.setting
    time_ = setting.time
    try:
        times = time_.grid(bundle.policy.horizon)
    except ConfigurationError:
        times = list(range(steps + 1))
    if len(times) > steps + 1:
        stride = max(1, (len(times) - 1) // steps)
        times = times[::stride]
    points = setting.sample(make_rng(seed), count)[:count]
    rows = []
    width = None
    for i, x in enumerate(points):
        try:
            traj = flow.trajectory(x, times)
        except NumericError:
            continue
        for t, y in zip(times, traj):
            if isinstance(y, np.ndarray):
                state = [float(v) for v in np.ravel(y)]
            else:
                state = [str(y)]
            width = width or len(state)
            n = norm(setting, bundle.x_star, y)
            v = bundle.V(y) if bundle.V is not None else ""
            rows.append([i, float(t), *state, str(n) if not isinstance(n, float) else n,
                         v if not hasattr(v, "bits") else str(v)])
    header = ["sampleIndex", "t"] + [f"state{j}" for j in range(width or 1)] + ["normValue", "vValue"]
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def run_scenario(config_path, seed: Optional[int] = None, tolerance: Optional[float] = None,
                 report_path: Optional[str] = None, trajectories_path: Optional[str] = None,
                 out=None) -> int:
    config_path = Path(config_path)
    try:
        cfg = load_scenario(config_path)
        params = dict(cfg.get("parameters", {}))
        if tolerance is not None:
            params["tolerance"] = tolerance
        seed = int(cfg.get("seed", 0) if seed is None else seed)
        sample_count = int(cfg.get("sampleCount", 200))
        bundle = build(cfg["instance"], params, config_path.parent)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    output = cfg.get("output", {})
    report_file = Path(report_path or output.get("report") or
                       f"{cfg.get('name', config_path.stem)}.report.json")
    doc = {
        "schemaVersion": SCHEMA_VERSION,
        "scenario": cfg.get("name", config_path.stem),
        "instance": cfg["instance"],
        "seed": seed,
        "sampleCount": sample_count,
        "status": "running",
        "checks": [],
    }
    exit_code = EXIT_OK
    for name, opts in _check_entries(cfg):
        started = time.perf_counter()
        numeric = False
        try:
            report = CHECKS[name](bundle, seed, int(opts.pop("sampleCount", sample_count)), opts)
            entry = report.to_dict()
        except ConfigurationError as exc:
            print(f"configuration error in {name}: {exc}", file=sys.stderr)
            doc["status"] = "config-error"
            _write_atomic(report_file, json.dumps(doc, indent=2) + "\n")
            return EXIT_CONFIG
        except (NumericError, ArithmeticError, np.linalg.LinAlgError) as exc:
            numeric = True
            entry = {"lawName": name, "passed": False, "samplesChecked": 0,
                     "worstResidual": None, "counterexample": None,
                     "detail": f"numeric error: {exc}"}
        except (CheckFailed, PreconditionError) as exc:
            rep = getattr(exc, "report", None)
            entry = rep.to_dict() if rep is not None else {
                "lawName": name, "passed": False, "samplesChecked": 0, "worstResidual": None,
                "counterexample": None, "detail": str(exc)}
        entry["check"] = name
        entry["numericError"] = numeric
        entry["wallTime"] = round(time.perf_counter() - started, 6)
        doc["checks"].append(entry)
        _write_atomic(report_file, json.dumps(doc, indent=2) + "\n")
        status = "PASS" if entry["passed"] else ("NUMERIC" if numeric else "FAIL")
        print(f"{status:7s} {name:28s} samples={entry['samplesChecked']} "
              f"residual={entry['worstResidual']}", file=out)
        if numeric:
            exit_code = EXIT_NUMERIC
        elif not entry["passed"] and exit_code == EXIT_OK:
            exit_code = EXIT_FAILED

    doc["status"] = {EXIT_OK: "passed", EXIT_FAILED: "failed", EXIT_NUMERIC: "numeric-error"}[exit_code]
    _write_atomic(report_file, json.dumps(doc, indent=2) + "\n")

    traj = trajectories_path or output.get("trajectories")
    if traj:
        spec = cfg.get("trajectories", {})
        write_trajectories(Path(traj), bundle, seed, int(spec.get("count", 5)),
                           int(spec.get("steps", 100)))
    return exit_code


def list_instances(as_json: bool = False, registry=None, out=None) -> int:
    out = out or sys.stdout
    registry = REGISTRY if registry is None else registry
    if as_json:
        json.dump([inst.schema() for inst in registry.values()], out, indent=2)
        out.write("\n")
        return EXIT_OK
    for inst in registry.values():
        params = ", ".join(inst.parameters) or "-"
        print(f"{inst.name:15s} {inst.description}\n{'':15s} parameters: {params}", file=out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="stabcert", description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    parser.add_argument("--tolerance", type=float, default=None,
                        help="override the flow tolerance of numeric instances")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a scenario file")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p_run.add_argument("--tolerance", type=float, default=argparse.SUPPRESS)
    p_run.add_argument("--report", default=None, help="report path (overrides the scenario)")
    p_run.add_argument("--trajectories", default=None, help="trajectory CSV path")
    p_list = sub.add_parser("list", help="list registered instances")
    p_list.add_argument("--json", action="store_true")
    args = parser.parse_args(argv)
    if args.command == "list":
        return list_instances(args.json)
    return run_scenario(args.config, args.seed, args.tolerance, args.report, args.trajectories)


if __name__ == "__main__":
    sys.exit(main())
