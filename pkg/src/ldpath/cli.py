"""Command-line front end.

Machine-readable results (JSON or CSV) go to stdout or ``--out``; summaries
and diagnostics go to stderr. Exit status: 0 success, 1 failed gate, 2 bad
input or configuration.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import LdpathError
from .laws import CompoundPoisson, LegendreTransform, law_from_spec
from .metrics import rho_borovkov_paths, rho_compact, rho_hat, rho_uniform, rho_weighted
from .montecarlo import (ESTIMATORS, FAMILIES, MIN_SAMPLES, WEIGHTINGS, CrossingExperiment,
                         block_rng, estimate_crossing, rate_table, simulate_cp, simulate_rw)
from .pathspace import CSV_HEADER, path_to_csv, read_path
from .ratefn import crossing_rate, j0u

EXIT_OK, EXIT_GATE, EXIT_CONFIG = 0, 1, 2

LAW_SCHEMA = {
    "oneOf": [
        {"type": "string"},
        {"type": "object", "required": ["name"], "properties": {"name": {"type": "string"}}},
    ]
}

EXPERIMENT_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["law", "family", "c", "scales", "samples"],
    "properties": {
        "law": LAW_SCHEMA,
        "family": {"enum": list(FAMILIES)},
        "c": {"type": "number", "minimum": 0},
        "scales": {"type": "array", "minItems": 1, "items": {"type": "number", "exclusiveMinimum": 0}},
        "samples": {"type": "integer", "minimum": MIN_SAMPLES},
        "estimator": {"enum": list(ESTIMATORS)},
        "weighting": {"enum": list(WEIGHTINGS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "workers": {"type": "integer", "minimum": 1},
        "out": {"type": "string"},
        "gates": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "final_gap_max": {"type": "number", "minimum": 0},
                "gap_shrinking": {"type": "boolean"},
            },
        },
    },
}


def _num(x: float):
    if isinstance(x, float) and math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    return x


def _fmt(x: float) -> str:
    return str(_num(float(x))) if math.isinf(x) else repr(float(x))


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_json(obj: dict, out: str | None) -> None:
    _emit(json.dumps({k: _num(v) for k, v in obj.items()}, sort_keys=True) + "\n", out)


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def parse_law(text: str):
    """``name``, ``name:key=value,...`` or a JSON law record."""
    text = text.strip()
    if text.startswith("{"):
        try:
            spec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise LdpathError(f"bad law JSON: {exc}") from exc
        jsonschema.validate(spec, LAW_SCHEMA)
        return law_from_spec(spec)
    name, _, rest = text.partition(":")
    spec = {"name": name}
    for item in filter(None, rest.split(",")):
        key, eq, value = item.partition("=")
        if not eq:
            raise LdpathError(f"bad law parameter {item!r}; expected key=value")
        spec[key.strip()] = float(value)
    return law_from_spec(spec)


def parse_grid(text: str) -> list[float]:
    """Comma list ``a,b,c`` or inclusive range ``start:stop:step``."""
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        if step <= 0:
            raise LdpathError("grid step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(count)]
    return [float(x) for x in text.split(",") if x.strip()]


# Commands -------------------------------------------------------------------

def cmd_lambda(args) -> int:
    law = parse_law(args.law)
    lt = LegendreTransform(law, require_centered=False)
    lines = ["alpha,Lambda,lambda_star"]
    for a in parse_grid(args.alpha):
        val, lam = lt(a)
        lines.append(f"{_fmt(a)},{_fmt(val)},{_fmt(lam)}")
    _emit("\n".join(lines) + "\n", args.out)
    _note(f"deviation function of {law.label} at {len(lines) - 1} points")
    return EXIT_OK


def cmd_rate(args) -> int:
    law = parse_law(args.law)
    path = read_path(args.path)
    U = path.horizon if args.U is None else args.U
    res = j0u(path, law, U)
    _emit_json({"value": res.value, "error": res.numeric_error, "reason": res.infinite_reason},
               args.out)
    _note(f"J_0^{U} = {res.value} for {law.label}")
    return EXIT_OK


_METRICS = {
    "B": lambda f, g, tol: rho_borovkov_paths(f, g, tol),
    "weighted": lambda f, g, tol: rho_weighted(f, g, tol),
    "U": lambda f, g, tol: rho_uniform(f, g),
    "hat": lambda f, g, tol: rho_hat(f, g),
    "P": lambda f, g, tol: rho_compact(f, g),
}


def cmd_metric(args) -> int:
    f, g = read_path(args.a), read_path(args.b)
    res = _METRICS[args.which](f, g, args.tol)
    _emit_json({"value": res.value, "certified_error": res.certified_error}, args.out)
    _note(f"rho_{args.which} = {res.value} (certified error {res.certified_error:.3g})")
    return EXIT_OK


def cmd_crossing_rate(args) -> int:
    law = parse_law(args.law)
    res = crossing_rate(law, args.c, grid=args.grid)
    _emit_json({"c": res.c, "v0": res.v0, "rate": res.rate}, args.out)
    _note(f"J(B_{args.c}) = {res.rate} attained at v0 = {res.v0}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    law = parse_law(args.law)
    family = args.family or ("compound_poisson" if isinstance(law, CompoundPoisson) else "random_walk")
    scales = parse_grid(args.scales) if args.scales else [100.0]
    scale = scales[0]
    rng = block_rng(args.seed, 0, 0)
    count = args.samples or 1
    paths = []
    for _ in range(count):
        if family == "random_walk":
            paths.append(simulate_rw(law, int(scale), rng))
        else:
            paths.append(simulate_cp(law, scale, rng))
    if count == 1:
        text = path_to_csv(paths[0])
    else:
        lines = [",".join(("sample",) + CSV_HEADER)]
        for k, p in enumerate(paths):
            lines += [f"{k},{t!r},{lv!r},{rv!r}" for t, lv, rv in p.rows()]
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    _note(f"simulated {count} {family} path(s) of {law.label} at scale {scale}")
    return EXIT_OK


def load_config(ref: str) -> dict:
    """Read a config file, or a bundled config by name (``gaussian_rw``)."""
    p = Path(ref)
    if p.is_file():
        text = p.read_text()
    else:
        name = ref if ref.endswith(".json") else ref + ".json"
        bundled = resources.files("ldpath") / "configs" / name
        if not bundled.is_file():
            raise LdpathError(f"no config file or bundled config named {ref!r}")
        text = bundled.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise LdpathError(f"config is not valid JSON: {exc}") from exc


def experiment_from_config(cfg: dict, workers: int | None = None) -> CrossingExperiment:
    jsonschema.validate(cfg, EXPERIMENT_SCHEMA)
    return CrossingExperiment(
        law=law_from_spec(cfg["law"]),
        family=cfg["family"],
        c=float(cfg["c"]),
        scales=tuple(cfg["scales"]),
        samples=int(cfg["samples"]),
        estimator=cfg.get("estimator", "tilted"),
        weighting=cfg.get("weighting", "endpoint"),
        seed=int(cfg.get("seed", 0)),
        workers=workers if workers is not None else cfg.get("workers"),
    )


def cmd_verify_ldp(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.samples is not None:
        cfg["samples"] = args.samples
    if args.scales:
        cfg["scales"] = parse_grid(args.scales)
    if args.c is not None:
        cfg["c"] = args.c
    exp = experiment_from_config(cfg, args.workers)
    result = estimate_crossing(exp)
    table = rate_table(result)
    _emit(result.to_csv(), args.out or cfg.get("out"))

    for r, row in zip(result.rows, table.rows):
        _note(f"scale={r.scale:g} p_hat={r.p_hat:.6g} +- {r.std_err:.3g} "
              f"empirical={r.empirical_rate:.6f} theoretical={r.theoretical_rate:.6f} "
              f"gap={row.gap:+.6f} (rate se {row.rate_std_err:.2g})")
    gates = cfg.get("gates", {})
    ok = True
    if "final_gap_max" in gates:
        passed = abs(table.final_gap) <= gates["final_gap_max"]
        ok &= passed
        _note(f"gate final_gap_max={gates['final_gap_max']}: "
              f"{'pass' if passed else 'FAIL'} (|gap| = {abs(table.final_gap):.6f})")
    if gates.get("gap_shrinking"):
        passed = table.shrinking()
        ok &= passed
        _note(f"gate gap_shrinking: {'pass' if passed else 'FAIL'}")
    return EXIT_OK if ok else EXIT_GATE


# Parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ldpath", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(handler=handler)
        p.add_argument("--out", help="write the result here instead of stdout")
        return p

    p = add("lambda", cmd_lambda, "tabulate the deviation function")
    p.add_argument("--law", required=True)
    p.add_argument("--alpha", default="-2:2:0.5", help="a,b,c or start:stop:step")

    p = add("rate", cmd_rate, "rate functional of a path CSV")
    p.add_argument("path")
    p.add_argument("--law", required=True)
    p.add_argument("--U", type=float, default=None, help="upper time; defaults to the horizon")

    p = add("metric", cmd_metric, "distance between two path CSVs")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--which", choices=sorted(_METRICS), default="B")
    p.add_argument("--tol", type=float, default=1e-4)

    p = add("crossing-rate", cmd_crossing_rate, "rate of the level-c crossing set")
    p.add_argument("--law", required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--tol", "--grid", dest="grid", type=float, default=1e-3,
                   help="cross-check grid step over v")

    p = add("simulate", cmd_simulate, "sample scaled paths")
    p.add_argument("--law", required=True)
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--scales", help="scale n or T (first value used)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=1, help="number of paths")

    p = add("verify-ldp", cmd_verify_ldp, "run a crossing experiment and check its gates")
    p.add_argument("config", help="config file or bundled config name")
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--scales")
    p.add_argument("--c", type=float)
    p.add_argument("--workers", type=int)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except jsonschema.ValidationError as exc:
        _note(f"config error: {exc.message} at {'/'.join(map(str, exc.absolute_path)) or '<root>'}")
        return EXIT_CONFIG
    except (LdpathError, ValueError, OSError) as exc:
        _note(f"error: {exc}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
