"""Command-line driver: ``ellax <command> --config run.json --out dir``.

Config files are JSON with complex numbers written as ``[re, im]``.  Each
run writes ``report.json`` (deterministic for a fixed config and seed),
``run_meta.json`` (wall-clock data), and, depending on the command,
``dims.csv`` or ``trajectory.csv``.

Exit status: 0 when every check passes, 1 when a check fails, 2 when the
configuration is rejected.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from .errors import ConfigError, EllaxError
from .suites import SUITES

SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
_KIND_RE = r"(gl|sl|so|sp|tsp)\(\d+\)"


# ---------------------------------------------------------------------------
# validation


def _need(cfg, key, path):
    if key not in cfg:
        raise ConfigError(f"{path}.{key}" if path else key, "missing required field")
    return cfg[key]


def _complex_pair(v, path):
    if (not isinstance(v, (list, tuple)) or len(v) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
        raise ConfigError(path, "expected a [re, im] pair of numbers")
    return complex(v[0], v[1])


def _number(cfg, key, path, positive=False):
    if key not in cfg:
        return
    v = cfg[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
        raise ConfigError(f"{path}{key}", "expected a finite number")
    if positive and v <= 0:
        raise ConfigError(f"{path}{key}", "must be positive")


def validate_config(cfg) -> dict:
    """Check the fields the chosen command needs; raise :class:`ConfigError` with a field path."""
    import re
    from .elliptic import lattice_from_periods

    if not isinstance(cfg, dict):
        raise ConfigError("", "top level must be a JSON object")
    cmd = _need(cfg, "command", "")
    if cmd not in SUITES:
        raise ConfigError("command", f"unknown command {cmd!r}; choose from {sorted(SUITES)}")
    if "seed" in cfg and (not isinstance(cfg["seed"], int) or isinstance(cfg["seed"], bool) or cfg["seed"] < 0):
        raise ConfigError("seed", "expected a non-negative integer")
    if cmd != "elliptic-check" or "lattice" in cfg:
        lat = _need(cfg, "lattice", "")
        if not isinstance(lat, dict):
            raise ConfigError("lattice", "expected an object with omega1 and omega3")
        w1 = _complex_pair(_need(lat, "omega1", "lattice"), "lattice.omega1")
        w3 = _complex_pair(_need(lat, "omega3", "lattice"), "lattice.omega3")
        try:
            lattice_from_periods(w1, w3)
        except EllaxError as e:
            raise ConfigError("lattice", str(e)) from e
    for i, k in enumerate(cfg.get("kinds", [])):
        if not isinstance(k, str) or not re.fullmatch(_KIND_RE, k.replace(" ", "")):
            raise ConfigError(f"kinds[{i}]", f"cannot parse algebra label {k!r}")
    if "system" in cfg:
        sysc = cfg["system"]
        if not isinstance(sysc, dict) or sysc.get("kind", "gl") not in ("gl", "so", "sp"):
            raise ConfigError("system.kind", "expected one of gl, so, sp")
        n = sysc.get("n", 3)
        if not isinstance(n, int) or n < 1:
            raise ConfigError("system.n", "expected a positive integer")
    st = cfg.get("state")
    if isinstance(st, dict) and ("q" in st or "p" in st):
        for key in ("q", "p"):
            vals = _need(st, key, "state")
            if not isinstance(vals, list):
                raise ConfigError(f"state.{key}", "expected a list of [re, im] pairs")
            for i, v in enumerate(vals):
                _complex_pair(v, f"state.{key}[{i}]")
        if len(st["q"]) != len(st["p"]):
            raise ConfigError("state.p", "length differs from state.q")
    for key in ("T", "dt", "tyurin_dt", "holomorphy_radius"):
        _number(cfg, key, "", positive=True)
    tols = cfg.get("tolerances", {})
    if not isinstance(tols, dict):
        raise ConfigError("tolerances", "expected an object")
    for key in tols:
        _number(tols, key, "tolerances.", positive=True)
    return cfg


# ---------------------------------------------------------------------------
# report encoding


def to_jsonable(x):
    """Recursively convert numpy scalars/arrays and complex numbers; non-finite floats become null."""
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return to_jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [to_jsonable(float(x.real)), to_jsonable(float(x.imag))]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def dump_report(report: dict) -> str:
    return json.dumps(to_jsonable(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _write_dims(rows, path: Path):
    cols = ["kind", "space", "degree", "configuration", "dimension", "expected", "gap_ratio", "passed",
            "parameter_count"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([to_jsonable(r.get(c, "")) if r.get(c) is not None else "" for c in cols])


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ellax", description=__doc__.splitlines()[0])
    ap.add_argument("command", nargs="?", choices=sorted(SUITES),
                    help="suite to run (defaults to the config's 'command' field)")
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--seed", type=int, default=None, help="RNG seed (overrides the config)")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--tol-scale", type=float, default=1.0, help="multiply every tolerance")
    return ap


def run(cfg: dict, out: Path, seed: int | None = None, tol_scale: float = 1.0, command: str | None = None):
    """Run a validated config; returns ``(exit_code, report)``."""
    if command is not None:
        cfg = dict(cfg, command=command)
    validate_config(cfg)
    seed = int(cfg.get("seed", 0) if seed is None else seed)
    cmd = cfg["command"]
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    result = SUITES[cmd](cfg, seed, tol_scale)
    elapsed = time.time() - t0
    failures = [c for c in result.checks if not c["passed"]]
    report = {"schema": SCHEMA, "command": cmd, "seed": seed, "tol_scale": tol_scale, "config": cfg,
              "passed": result.passed, "n_checks": len(result.checks), "n_failures": len(failures),
              "checks": result.checks, "failures": [c["name"] for c in failures]}
    if "dims" in result.tables:
        report["dims"] = result.tables["dims"]
        _write_dims(result.tables["dims"], out / "dims.csv")
    for key in ("initial_state", "state"):
        if key in result.artifacts:
            report[key] = result.artifacts[key]
    if "trajectory" in result.artifacts:
        result.artifacts["trajectory"].to_csv(out / "trajectory.csv")
    (out / "report.json").write_text(dump_report(report))
    meta = {"schema": SCHEMA, "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(t0)),
            "elapsed_seconds": elapsed}
    (out / "run_meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    return (EXIT_OK if result.passed else EXIT_FAIL), report


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except FileNotFoundError as e:
            raise ConfigError("--config", f"file not found: {args.config}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"line {e.lineno}", f"invalid JSON: {e.msg}") from e
        code, report = run(cfg, Path(args.out), args.seed, args.tol_scale, args.command)
    except ConfigError as e:
        print(json.dumps({"error": "ConfigError", "path": e.path, "message": e.message}), file=sys.stderr)
        return EXIT_CONFIG
    for c in report["checks"]:
        status = "PASS" if c["passed"] else "FAIL"
        print(f"{status} {c['name']}: measured={_fmt(c['measured'])} {c['relation']} {_fmt(c['tol'])}")
    print(f"{report['command']}: {report['n_checks'] - report['n_failures']}/{report['n_checks']} checks passed")
    return code


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3e}"
    return str(v)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
