"""Command-line harness.

Subcommands run the scans defined in :mod:`gammaq.scans` plus three direct
operations (quantize, decompose, bracket).  Inputs come either from a JSON
config file (``--config``) or from inline flags; outputs are CSV tables
(header ``N,value``, 17 significant digits) and JSON documents carrying the
fit fields.  Identical config and seed give bit-identical CSV output.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import scans as _scans
from .poisson import bracket
from .serialize import (decomposition_to_json, poly_from_json, poly_to_json,
                        tensor_from_json, tensor_to_json)
from .symbolic import decompose, quantize
from .tolerances import DENSE_DIM_LIMIT

SCAN_KINDS = ("norm_scan", "dgr_scan", "remainder_scan", "consistency_scan",
              "axiom_scan", "lowerbound_scan")

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["kind", "n_range"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": list(SCAN_KINDS)},
        "kappa": {"type": "integer", "minimum": 2},
        "engine": {"enum": ["dense", "implicit"]},
        "seed": {"type": "integer"},
        "dense_limit": {"type": "integer", "minimum": 2},
        "n_range": {
            "type": "object",
            "required": ["min", "max"],
            "additionalProperties": False,
            "properties": {
                "min": {"type": "integer", "minimum": 1},
                "max": {"type": "integer", "minimum": 1},
                "stride": {"type": "integer", "minimum": 1},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "path": {"type": "string"},
                "format": {"enum": ["csv", "json"]},
            },
        },
        "polynomial": {"type": "object"},
        "polynomial2": {"type": "object"},
        "polynomial3": {"type": "object"},
        "tensor": {"type": "object"},
        "decomposition": {"type": "object"},
        "n_embed": {"type": "integer", "minimum": 1},
        "assertions": {"type": "object"},
    },
}


class ConfigError(ValueError):
    pass


def validate_config(config: dict) -> None:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(config), key=lambda e: e.json_path)
    if errors:
        lines = [f"{e.json_path}: {e.message}" for e in errors]
        raise ConfigError("invalid config:\n  " + "\n  ".join(lines))
    nr = config["n_range"]
    ns = list(range(nr["min"], nr["max"] + 1, nr.get("stride", 1)))
    if not ns:
        raise ConfigError(f"$.n_range: empty range {nr['min']}..{nr['max']}")
    kappa = config.get("kappa", 2)
    limit = config.get("dense_limit", DENSE_DIM_LIMIT)
    if config.get("engine", "dense") == "dense" and kappa ** max(ns) > limit:
        raise ConfigError(
            f"$.engine: dense engine cannot reach kappa^{max(ns)} = {kappa ** max(ns)}"
            f" (limit {limit}); use the implicit engine")


def _expand_range(config: dict) -> list[int]:
    nr = config["n_range"]
    return list(range(nr["min"], nr["max"] + 1, nr.get("stride", 1)))


def _need(config: dict, key: str) -> dict:
    if key not in config:
        raise ConfigError(f"$.{key}: required for kind {config['kind']!r}")
    return config[key]


def run_scan(config: dict):
    """Execute the configured scan; returns {label: ScanResult}."""
    validate_config(config)
    kind = config["kind"]
    kappa = config.get("kappa", 2)
    engine = config.get("engine", "dense")
    seed = config.get("seed", 0)
    limit = config.get("dense_limit", DENSE_DIM_LIMIT)
    ns = _expand_range(config)
    common = dict(engine=engine, seed=seed, dense_limit=limit)
    if kind == "norm_scan":
        p = poly_from_json(_need(config, "polynomial"), kappa)
        return {"": _scans.norm_scan(p, ns, **common)}
    if kind == "dgr_scan":
        p = poly_from_json(_need(config, "polynomial"), kappa)
        q = poly_from_json(_need(config, "polynomial2"), kappa)
        return {"": _scans.dgr_scan(p, q, ns, **common)}
    if kind == "remainder_scan":
        p = poly_from_json(_need(config, "polynomial"), kappa)
        q = poly_from_json(_need(config, "polynomial2"), kappa)
        return {"": _scans.remainder_scan(p, q, ns, **common)}
    if kind == "consistency_scan":
        t = tensor_from_json(_need(config, "tensor"), kappa)
        n_embed = config.get("n_embed")
        if n_embed is None:
            raise ConfigError("$.n_embed: required for consistency_scan")
        return {"": _scans.consistency_scan(t, n_embed, ns, **common)}
    if kind == "axiom_scan":
        p = poly_from_json(_need(config, "polynomial"), kappa)
        q = poly_from_json(_need(config, "polynomial2"), kappa)
        r = poly_from_json(_need(config, "polynomial3"), kappa)
        leib, jac = _scans.axiom_scan(p, q, r, ns, **common)
        return {"leibniz": leib, "jacobi": jac}
    if kind == "lowerbound_scan":
        if "decomposition" in config:
            from .serialize import decomposition_from_json
            d = decomposition_from_json(config["decomposition"], kappa)
        else:
            d = decompose(tensor_from_json(_need(config, "tensor"), kappa))
        return {"": _scans.lowerbound_scan(d, ns, **common)}
    raise ConfigError(f"unknown kind {kind!r}")


# ---------------------------------------------------------------------------
# assertions


def check_assertions(result: _scans.ScanResult, assertions: dict) -> list[str]:
    """Evaluate configured acceptance checks; returns failure messages."""
    out: list[str] = []
    vals = [v for v in result.values() if np.isfinite(v)]
    tail = [(n, v) for n, v in result.tail() if np.isfinite(v)]
    slack = 1e-12

    def fail(msg):
        out.append(f"{result.kind}: {msg}")

    if assertions.get("no_failures") and result.extras.get("failures"):
        fail(f"points failed to converge: {result.extras['failures']}")
    if "rows_max" in assertions and any(v > assertions["rows_max"] + slack for v in vals):
        fail(f"some rows exceed {assertions['rows_max']}")
    if "rows_min" in assertions and any(v < assertions["rows_min"] - slack for v in vals):
        fail(f"some rows fall below {assertions['rows_min']}")
    if "max_fit_slope" in assertions:
        if result.fit is None:
            fail("no slope fit available")
        elif result.fit[0] > assertions["max_fit_slope"]:
            fail(f"fitted slope {result.fit[0]:.3f} above {assertions['max_fit_slope']}")
    if assertions.get("tail_nonincreasing_diffs"):
        diffs = [abs(b - a) for (_, a), (_, b) in zip(tail, tail[1:])]
        if any(d2 > d1 + slack for d1, d2 in zip(diffs, diffs[1:])):
            fail("successive tail differences are not non-increasing")
    if assertions.get("tail_strictly_decreasing"):
        if any(b >= a - slack for (_, a), (_, b) in zip(tail, tail[1:])):
            fail("tail values are not strictly decreasing")
    if "tail_ratio_max" in assertions:
        scaled = [n * v for n, v in tail if v > 0]
        if scaled and max(scaled) / min(scaled) > assertions["tail_ratio_max"]:
            fail(f"tail max/min ratio of N*value exceeds {assertions['tail_ratio_max']}")
    if "lowerbound_threshold_frac" in assertions:
        frac = assertions["lowerbound_threshold_frac"]
        threshold = frac * result.extras.get("witness_factor", 1.0) \
            * result.extras.get("grid_max", 0.0)
        if any(v < threshold - slack for _, v in tail):
            fail(f"tail rows fall below the witness threshold {threshold:.6g}")
        norms = dict(result.extras.get("norms", []))
        for n, v in result.rows:
            if n in norms and np.isfinite(v) and norms[n] < v - 1e-9 * max(1.0, v):
                fail(f"norm at N={n} fell below its state witness")
    return out


# ---------------------------------------------------------------------------
# output


def _fmt(x: float) -> str:
    return "%.17g" % x


def result_to_csv(result: _scans.ScanResult) -> str:
    lines = ["N,value"]
    for n, v in result.rows:
        lines.append(f"{n},{_fmt(v)}")
    return "\n".join(lines) + "\n"


def result_to_json(result: _scans.ScanResult) -> dict:
    def clean(obj):
        if isinstance(obj, dict):
            return {str(k): clean(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [clean(v) for v in obj]
        if isinstance(obj, (np.floating, float)):
            return float(obj)
        if isinstance(obj, (np.integer, int)):
            return int(obj)
        return obj

    return {
        "kind": result.kind,
        "rows": [[int(n), float(v)] for n, v in result.rows],
        "fit": None if result.fit is None else
            {"slope": result.fit[0], "intercept": result.fit[1]},
        "fit_window": None if result.fit_window is None else list(result.fit_window),
        "extrapolated_limit": result.extrapolated_limit,
        "extras": clean(result.extras),
    }


def write_outputs(results: dict, path: str | None, fmt: str) -> list[str]:
    if path is None:
        return []
    base = Path(path)
    if base.suffix in (".csv", ".json"):
        base = base.with_suffix("")
    written = []
    for label, result in results.items():
        stem = base if not label else base.with_name(f"{base.name}_{label}")
        targets = [fmt] if fmt else ["csv", "json"]
        for kind in targets:
            target = stem.with_suffix("." + kind)
            if kind == "csv":
                target.write_text(result_to_csv(result))
            else:
                target.write_text(json.dumps(result_to_json(result), indent=2, sort_keys=True))
            written.append(str(target))
    return written


def run(config: dict, echo=print) -> int:
    """Validate, execute, write artifacts; nonzero iff an assertion fails."""
    results = run_scan(config)
    assertions = config.get("assertions", {})
    failures: list[str] = []
    for label, result in results.items():
        failures.extend(check_assertions(result, assertions))
    out = config.get("output", {})
    written = write_outputs(results, out.get("path"), out.get("format"))
    for label, result in results.items():
        name = f"{config['kind']}{('/' + label) if label else ''}"
        echo(f"{name}: {len(result.rows)} rows"
             + (f", slope {result.fit[0]:+.3f}" if result.fit else "")
             + (f", limit {result.extrapolated_limit:.6g}"
                if result.extrapolated_limit is not None else ""))
    for path in written:
        echo(f"wrote {path}")
    for msg in failures:
        echo(f"ASSERTION FAILED: {msg}", file=sys.stderr) if echo is print \
            else echo(f"ASSERTION FAILED: {msg}")
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# argument parsing


def _load_json_arg(text: str) -> dict:
    text = text.strip()
    if text.startswith("{"):
        return json.loads(text)
    return json.loads(Path(text).read_text())


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gammaq",
        description="Scans and canonical-form operations for cyclically averaged "
                    "spin-chain observables")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file; inline flags override it")
        sp.add_argument("--kappa", type=int, default=None)
        sp.add_argument("--n-min", type=int, default=None)
        sp.add_argument("--n-max", type=int, default=None)
        sp.add_argument("--stride", type=int, default=None)
        sp.add_argument("--engine", choices=["dense", "implicit"], default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None)
        sp.add_argument("--format", choices=["csv", "json"], default=None)

    scan_inputs = {
        "norm-scan": ["--poly"],
        "dgr-scan": ["--poly", "--poly2"],
        "remainder-scan": ["--poly", "--poly2"],
        "consistency-scan": ["--tensor", "--n-embed"],
        "axiom-scan": ["--poly", "--poly2", "--poly3"],
        "lowerbound-scan": ["--tensor"],
    }
    for name, extra in scan_inputs.items():
        sp = sub.add_parser(name, help=f"run a {name.replace('-', '_')}")
        common(sp)
        for flag in extra:
            if flag == "--n-embed":
                sp.add_argument(flag, type=int, default=None)
            else:
                sp.add_argument(flag, default=None,
                                help="JSON file path or inline JSON")

    sp = sub.add_parser("quantize", help="materialize a polynomial at one chain length")
    common(sp)
    sp.add_argument("--poly", required=True)
    sp.add_argument("--n", type=int, required=True)

    sp = sub.add_parser("decompose", help="canonical components of a local tensor")
    common(sp)
    sp.add_argument("--tensor", required=True)

    sp = sub.add_parser("bracket", help="Poisson bracket of two polynomials")
    common(sp)
    sp.add_argument("--poly", required=True)
    sp.add_argument("--poly2", required=True)
    return parser


def _config_from_args(args) -> dict:
    config: dict = {}
    if args.config:
        config = json.loads(Path(args.config).read_text())
    kind = args.command.replace("-", "_")
    config.setdefault("kind", kind)
    if config.get("kind") != kind:
        raise ConfigError(f"config kind {config.get('kind')!r} does not match "
                          f"subcommand {args.command!r}")
    if args.kappa is not None:
        config["kappa"] = args.kappa
    nr = dict(config.get("n_range", {}))
    if args.n_min is not None:
        nr["min"] = args.n_min
    if args.n_max is not None:
        nr["max"] = args.n_max
    if args.stride is not None:
        nr["stride"] = args.stride
    if nr:
        config["n_range"] = nr
    if args.engine is not None:
        config["engine"] = args.engine
    if args.seed is not None:
        config["seed"] = args.seed
    if args.out is not None or args.format is not None:
        out = dict(config.get("output", {}))
        if args.out is not None:
            out["path"] = args.out
        if args.format is not None:
            out["format"] = args.format
        config["output"] = out
    for attr, key in (("poly", "polynomial"), ("poly2", "polynomial2"),
                      ("poly3", "polynomial3"), ("tensor", "tensor")):
        if getattr(args, attr, None) is not None:
            config[key] = _load_json_arg(getattr(args, attr))
    if getattr(args, "n_embed", None) is not None:
        config["n_embed"] = args.n_embed
    return config


def _emit(obj: dict, args) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command in ("quantize", "decompose", "bracket"):
            kappa = args.kappa or 2
            if args.command == "quantize":
                p = poly_from_json(_load_json_arg(args.poly), kappa)
                op = quantize(p, args.n, engine=args.engine or "dense")
                if hasattr(op, "matrix"):
                    matrix = [[[float(z.real), float(z.imag)] for z in row]
                              for row in op.matrix]
                    _emit({"kappa": kappa, "sites": args.n, "matrix": matrix}, args)
                else:
                    _emit({"kappa": kappa, "sites": args.n,
                           "terms": len(op.terms)}, args)
            elif args.command == "decompose":
                t = tensor_from_json(_load_json_arg(args.tensor), kappa)
                _emit(decomposition_to_json(decompose(t)), args)
            else:
                p = poly_from_json(_load_json_arg(args.poly), kappa)
                q = poly_from_json(_load_json_arg(args.poly2), kappa)
                _emit(poly_to_json(bracket(p, q)), args)
            return 0
        config = _config_from_args(args)
        return run(config)
    except (ConfigError, ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
