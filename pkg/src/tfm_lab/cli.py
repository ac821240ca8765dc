"""Batch experiment runner.

    tfm-lab <command> --config FILE [--seed N] [--samples N] [--out DIR]
            [--n N] [--k K] [--m X] [--h X] [--c-mode MODE] [--property P]

Flags override the matching config fields. Each run writes ``report.json`` and
``tables/*.csv`` into the output directory. Exit status: 0 on completion or a
passing audit, 2 on a failing audit, 1 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import subprocess
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, _rng, audit, hsearch
from .dists import C_MODES, DistributionError, ValuationDistribution, sample, second_moment, variation_constant
from .mech_core import MechanismParams, total_expected_payment
from .ssp_k import DomainError, EnumerationTooLarge, alloc_exact, alloc_mc, make_mechanism

COMMANDS = ("simulate", "audit", "hsearch", "counterexample", "allocation", "revenue-study")
AUDIT_PROPERTIES = (
    "dsic", "bnic", "scp1", "uir-bf", "nfl", "symmetry", "competitiveness", "conservative-field", "burning",
)
STOCHASTIC = set(COMMANDS) - {"counterexample"}

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2

_number = {"type": "number"}
_count = {"type": "integer", "minimum": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "params": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n"],
            "properties": {
                "n": _count,
                "k": _count,
                "m": {"type": "number", "minimum": 0},
                "h": {"type": "number", "minimum": 0},
                "c": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "dist": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["uniform", "truncated-power", "piecewise-linear-pdf"]},
                "params": {"type": "array", "items": _number},
            },
        },
        "samples": {"type": "integer", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "c_mode": {"enum": list(C_MODES)},
        "output_dir": {"type": "string"},
        "property": {"enum": list(AUDIT_PROPERTIES)},
        "trials": _count,
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "search_budget": {"type": "integer", "minimum": 0},
        "bids": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}, "minItems": 1},
        "rows": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["n", "h"],
                "properties": {"n": _count, "k": _count, "h": {"type": "number", "minimum": 0},
                               "c": {"type": "number", "exclusiveMinimum": 0}},
            },
        },
    },
}

DEFAULTS = {
    "params": {"k": 1, "m": 1.0, "h": 0.0},
    "dist": {"kind": "uniform", "params": []},
    "samples": 100_000,
    "c_mode": "second_moment",
    "output_dir": "out",
    "property": "bnic",
    "trials": 1000,
    "tol": 1e-4,
    "search_budget": 10_000,
}


class ConfigError(ValueError):
    pass


def from_dict(spec: dict) -> ValuationDistribution:
    return ValuationDistribution.from_dict(spec)


# -- config ----------------------------------------------------------------------


def _path(err) -> str:
    return ".".join(str(p) for p in err.absolute_path) or "<root>"


def validate(raw: dict):
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigError("; ".join(f"{_path(e)}: {e.message}" for e in errors))


def resolve(raw: dict, command: str, overrides: dict) -> dict:
    """Merge defaults, config file and flag overrides into a fully explicit config."""
    cfg = json.loads(json.dumps(raw))
    if cfg.get("command", command) != command:
        raise ConfigError(f"command: config says {cfg['command']!r} but {command!r} was requested")
    cfg["command"] = command
    cfg["params"] = {**DEFAULTS["params"], **cfg.get("params", {})}
    for key in ("n", "k", "m", "h"):
        if overrides.get(key) is not None:
            cfg["params"][key] = overrides[key]
    for key, flag in (("seed", "seed"), ("samples", "samples"), ("output_dir", "out"),
                      ("c_mode", "c_mode"), ("property", "property")):
        if overrides.get(flag) is not None:
            cfg[key] = overrides[flag]
    for key, value in DEFAULTS.items():
        cfg.setdefault(key, json.loads(json.dumps(value)))
    cfg["dist"].setdefault("params", [])
    validate(cfg)
    if "n" not in cfg["params"]:
        raise ConfigError("params.n: required")
    if command in STOCHASTIC and "seed" not in cfg:
        raise ConfigError(f"seed: required for the stochastic command {command!r}")

    dist = from_dict(cfg["dist"])
    # an explicit c in the file is kept unless a --c-mode flag asks to recompute it
    if "c" not in cfg["params"] or overrides.get("c_mode") is not None:
        cfg["params"]["c"] = variation_constant(dist, cfg["c_mode"])
    try:
        MechanismParams(**cfg["params"])
    except ValueError as exc:
        raise ConfigError(f"params: {exc}") from None
    return cfg


# -- output ----------------------------------------------------------------------


def git_describe() -> str:
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=here, capture_output=True, text=True, timeout=10,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return f"tfm-lab {__version__}"


def atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def table_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(row[h]) for h in header])
    return buf.getvalue()


def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return audit.fmt(x)
    return str(x)


# -- commands --------------------------------------------------------------------


def _params(cfg) -> MechanismParams:
    return MechanismParams(**cfg["params"])


def run_simulate(cfg):
    params = _params(cfg)
    dist = from_dict(cfg["dist"])
    mech = make_mechanism(params)
    n = params.n

    def work(stream, size):
        B = sample(dist, stream, n, size=size)
        a = mech.allocation(B)
        p = mech.payment(B)
        r = mech.revenue(B)
        pay = np.sum(a * p, axis=-1)
        util = a * (B - p)
        uir = np.where(a > 0, B - p, np.inf).min(axis=-1)
        return np.column_stack([a, a * p, util, pay, r, pay - r, (uir < -audit.FEASIBILITY_SLACK)])

    acc = _rng.MeanAccumulator()
    for part in _rng.chunked_map(work, cfg["samples"], cfg["seed"], 20_000):
        acc.add(part)
    mean, se = acc.result()
    users = [
        {"user": i, "allocation": mean[i], "allocation_se": se[i],
         "expected_payment": mean[n + i], "expected_payment_se": se[n + i],
         "utility": mean[2 * n + i], "utility_se": se[2 * n + i]}
        for i in range(n)
    ]
    labels = ("total_payment", "revenue", "burn", "uir_violation_rate")
    totals = {lab: {"estimate": float(mean[3 * n + j]), "se": float(se[3 * n + j])} for j, lab in enumerate(labels)}
    result = {"mechanism": repr(mech), "totals": totals, "users": users}
    tables = {"simulate.csv": table_csv(list(users[0]), users)}
    return result, tables, EXIT_OK


def run_audit(cfg):
    params = _params(cfg)
    dist = from_dict(cfg["dist"])
    mech = make_mechanism(params)
    prop, seed, trials = cfg["property"], cfg["seed"], cfg["trials"]
    curves = []
    if prop == "dsic":
        reports = [audit.dsic_audit(mech, trials, seed)]
    elif prop == "bnic":
        report, curves = audit.bnic_audit(mech, dist, cfg["samples"], seed)
        reports = [report]
    elif prop == "scp1":
        reports = [audit.scp1_audit(mech, trials, seed)]
    elif prop == "uir-bf":
        reports = hsearch.feasibility_audit(params, cfg["search_budget"], seed)
    elif prop == "nfl":
        reports = [audit.nfl_audit(mech, trials, seed)]
    elif prop == "symmetry":
        reports = [audit.symmetry_audit(mech, trials, seed)]
    elif prop == "competitiveness":
        reports = [audit.competitiveness_audit(mech, trials, seed)]
    elif prop == "conservative-field":
        if params.n < 2:
            raise ConfigError("params.n: the conservative-field audit needs n >= 2")
        reports = [audit.conservative_field_audit(
            lambda b: mech.theta(b), params.n, trials, seed)]
    else:
        reports = [audit.burning_audit(mech, dist, cfg["samples"], seed, structure_trials=trials)]

    tables = {}
    for rep in reports:
        tables[f"evidence_{rep.property}.csv"] = rep.evidence_csv()
    if curves:
        rows = [{"v_i": c.v_i, "bid": b, "expected_utility": u, "se": s}
                for c in curves for b, u, s in zip(c.bid_grid, c.expected_utility, c.standard_errors)]
        tables["deviation_curves.csv"] = table_csv(["v_i", "bid", "expected_utility", "se"], rows)
    status = EXIT_OK if all(r.verdict != "fail" for r in reports) else EXIT_FAIL
    result = {"reports": [r.to_dict() for r in reports],
              "verdict": "fail" if status == EXIT_FAIL else "pass"}
    return result, tables, status


def run_hsearch(cfg):
    params = _params(cfg).replace(h=0.0)
    dist = from_dict(cfg["dist"])
    rep = hsearch.h_star_estimate(params, dist, tol=cfg["tol"], seed=cfg["seed"],
                                  search_budget=cfg["search_budget"], revenue_samples=cfg["samples"])
    row = {"n": params.n, "k": params.k, "m": params.m, "c": params.c, "h_star": rep.h_star,
           "bracket_lo": rep.bisection_bracket[0], "bracket_hi": rep.bisection_bracket[1],
           "h_star_n_over_kc": rep.h_star * params.n / (params.k * params.c),
           "binding": rep.binding}
    return rep.to_dict(), {"hsearch.csv": table_csv(list(row), [row])}, EXIT_OK


def run_counterexample(cfg):
    rep = audit.counterexample_first_price()
    rows = [{"path": "1", "value": float(rep.path1), "exact": str(rep.path1)},
            {"path": "2", "value": float(rep.path2), "exact": str(rep.path2)}]
    return rep.to_dict(), {"paths.csv": table_csv(["path", "value", "exact"], rows)}, EXIT_OK


def run_allocation(cfg):
    params = _params(cfg)
    n = params.n
    if "bids" in cfg:
        b = np.asarray(cfg["bids"], dtype=float)
        if b.size != n:
            raise ConfigError(f"bids: expected {n} entries, got {b.size}")
    else:
        b = sample(from_dict(cfg["dist"]), np.random.default_rng(_rng.seed_sequence(cfg["seed"]).spawn(1)[0]), n)
    mech = make_mechanism(params)
    a = alloc_exact(b, params.k, params.m)
    p = mech.payment(b)
    theta = mech.theta(b)
    if cfg["samples"]:
        freq, se = alloc_mc(b, params.k, params.m, cfg["samples"], cfg["seed"])
    else:
        freq, se = np.full(n, np.nan), np.full(n, np.nan)
    rows = [{"user": i, "bid": b[i], "allocation": a[i], "payment": p[i], "theta": theta[i],
             "mc_frequency": freq[i], "mc_se": se[i]} for i in range(n)]
    result = {
        "bids": b.tolist(),
        "allocation_sum": float(a.sum()),
        "revenue": float(mech.revenue(b)),
        "total_expected_payment": float(total_expected_payment(mech, b)),
        "users": rows,
    }
    return result, {"allocation.csv": table_csv(list(rows[0]), rows)}, EXIT_OK


def run_revenue_study(cfg):
    dist = from_dict(cfg["dist"])
    c = cfg["params"]["c"]
    rows = cfg.get("rows") or [{k: cfg["params"][k] for k in ("n", "k", "h")}]
    rows = [{"k": 1, "c": c, **r} for r in rows]
    out = hsearch.revenue_study(rows, dist, cfg["samples"], cfg["seed"])
    result = {"second_moment": second_moment(dist), "rows": out}
    return result, {"revenue.csv": table_csv(list(hsearch.REVENUE_CSV_HEADER), out)}, EXIT_OK


RUNNERS = {
    "simulate": run_simulate,
    "audit": run_audit,
    "hsearch": run_hsearch,
    "counterexample": run_counterexample,
    "allocation": run_allocation,
    "revenue-study": run_revenue_study,
}


def run(cfg: dict):
    """Execute a resolved config; returns (report dict, {csv name: text}, exit status)."""
    result, tables, status = RUNNERS[cfg["command"]](cfg)
    report = {
        "command": cfg["command"],
        "config": cfg,
        "seed": cfg.get("seed"),
        "build": git_describe(),
        "exit_status": status,
        "result": audit._jsonable(result),
        "metadata": {"timestamp": datetime.now(timezone.utc).isoformat()},
    }
    return report, tables, status


def write_outputs(out_dir: Path, report: dict, tables: dict):
    for name, text in tables.items():
        atomic_write(out_dir / "tables" / name, text)
    atomic_write(out_dir / "report.json", json.dumps(report, indent=2, allow_nan=True) + "\n")


# -- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tfm-lab", description="Soft second-price fee mechanism experiments.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON experiment config")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--samples", type=int)
    ap.add_argument("--out", help="output directory (overrides output_dir)")
    ap.add_argument("--n", type=int)
    ap.add_argument("--k", type=int)
    ap.add_argument("--m", type=float)
    ap.add_argument("--h", type=float)
    ap.add_argument("--c-mode", dest="c_mode", choices=C_MODES)
    ap.add_argument("--property", choices=AUDIT_PROPERTIES)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ConfigError("<root>: config must be a JSON object")
        validate(raw)
        cfg = resolve(raw, args.command, vars(args))
        report, tables, status = run(cfg)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"tfm-lab: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, DistributionError, EnumerationTooLarge, DomainError) as exc:
        print(f"tfm-lab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    write_outputs(Path(cfg["output_dir"]), report, tables)
    verdict = report["result"].get("verdict") if isinstance(report["result"], dict) else None
    print(f"{cfg['command']}: wrote {cfg['output_dir']}/report.json" + (f" ({verdict})" if verdict else ""))
    return status


if __name__ == "__main__":
    sys.exit(main())
