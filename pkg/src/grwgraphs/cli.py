"""Command line front end: ``grwgraphs run | list-models | schema``.

A run config is a JSON document (see ``grwgraphs schema``). Each requested
suite contributes one entry to ``report.json`` and one CSV file in the output
directory. Exit status: 0 when every suite passes, 1 on suite failure, 2 on a
config error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np
import scipy

from . import __version__, conditions, experiments
from . import fibermesh as fm
from ._backend import BACKEND
from .graphgeom import CROSS_CHECK, IDENTITIES, energy_report, identity_residuals
from .warp import DomainError, IntervalSpec, from_config, inf_ratio_alpha, log_concavity_margin

log = logging.getLogger("grwgraphs")

SUITES = ("identities", "conditions", "slice-solve", "inequality-scan", "energy", "convergence")

DEFAULT_TOLERANCES = {
    "identity": 0.05,
    "min_order": 1.8,
    "min_order_sphere": 1.5,
    "levels": 3,
    "oscillation": 1e-6,
    "solver_residual": 1e-9,
    "condition": 1e-9,
    "energy_rtol": 1e-3,
}

CSV_COLUMNS = {
    "identities": ["field", "identity", "resolution", "max_abs_residual", "l2_residual",
                   "max_abs_interior"],
    "convergence": ["field", "identity", "level", "resolution", "spacing",
                    "max_abs_residual", "max_abs_interior"],
    "conditions": ["condition", "holds", "margin", "t"],
    "slice-solve": ["field", "converged", "iterations", "residual_inf", "oscillation"],
    "slice-solve history": ["iteration", "residual_inf", "oscillation", "max_speed"],
    "inequality-scan": ["field", "max_residual", "verdict"],
    "energy": ["field", "E_S", "bound_rhs", "bound_holds", "ncc_margin", "tilde_max_residual"],
}

_interval = {
    "type": "array",
    "minItems": 2,
    "maxItems": 2,
    "items": {"oneOf": [{"type": "number"}, {"enum": ["inf", "-inf"]}]},
}

_recipe = {
    "type": "object",
    "required": ["kind", "t0"],
    "properties": {
        "kind": {"enum": sorted(experiments.RECIPES)},
        "t0": {"type": "number"},
        "amplitude": {"type": "number", "minimum": 0},
        "wavevector": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
        "max_mode": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
    },
    "additionalProperties": False,
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "grwgraphs run config",
    "type": "object",
    "properties": {
        "preset": {"type": "string"},
        "spacetime": {
            "type": "object",
            "properties": {
                "warping": {
                    "type": "object",
                    "required": ["family"],
                    "properties": {
                        "family": {"enum": ["constant", "exp", "cosh", "powerlaw", "affine"]},
                        "params": {"type": "object", "additionalProperties": {"type": "number"}},
                        "domain": _interval,
                    },
                    "additionalProperties": False,
                },
                "window": _interval,
            },
            "required": ["warping"],
            "additionalProperties": False,
        },
        "fiber": {
            "type": "object",
            "required": ["kind", "resolution"],
            "properties": {
                "kind": {"enum": ["torus", "sphere"]},
                "resolution": {
                    "type": "array",
                    "items": {"type": "integer", "minimum": fm.MIN_RESOLUTION},
                    "minItems": 2,
                    "maxItems": 2,
                },
                "size": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                         "minItems": 1, "maxItems": 2},
            },
            "additionalProperties": False,
        },
        "fields": {"type": "array", "items": _recipe},
        "suites": {"type": "array", "items": {"enum": list(SUITES)}, "minItems": 1,
                   "uniqueItems": True},
        "tolerances": {
            "type": "object",
            "properties": {k: {"type": "number", "exclusiveMinimum": 0}
                           for k in DEFAULT_TOLERANCES},
            "additionalProperties": False,
        },
        "output_dir": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
    },
    "required": ["suites"],
    "additionalProperties": False,
    "x-csv-columns": CSV_COLUMNS,
}

PRESETS = {
    "lorentz-product": {
        "spacetime": {"warping": {"family": "constant", "params": {"c": 1.0}}},
        "fiber": {"kind": "torus", "resolution": [64, 64]},
        "fields": [{"kind": "SingleMode", "t0": 0.0, "amplitude": 0.2, "wavevector": [1, 1]}],
        "note": "f constant; the inequality is equivalent to H = 0",
    },
    "steady-state": {
        "spacetime": {"warping": {"family": "exp"}},
        "fiber": {"kind": "torus", "resolution": [64, 64]},
        "fields": [{"kind": "SingleMode", "t0": 0.0, "amplitude": 0.2, "wavevector": [1, 0]}],
        "note": "(log f)'' = 0",
    },
    "de-sitter": {
        "spacetime": {"warping": {"family": "cosh"}},
        "fiber": {"kind": "sphere", "resolution": [32, 64], "size": [1.0]},
        "fields": [{"kind": "SingleMode", "t0": 0.5, "amplitude": 0.1, "wavevector": [1, 1]}],
        "note": "fails (log f)'' <= 0; hypotheses for constant-only solutions NOT met",
    },
    "powerlaw-proper": {
        "spacetime": {"warping": {"family": "powerlaw", "params": {"k": 1.0}},
                      "window": [1.0, 4.0]},
        "fiber": {"kind": "sphere", "resolution": [32, 64], "size": [1.0]},
        "fields": [{"kind": "RandomBandLimited", "t0": 2.0, "amplitude": 0.1, "max_mode": 4}],
        "note": "proper (f' never zero) and (log f)'' = -1/t^2 < 0",
    },
}


class ConfigError(ValueError):
    pass


def fiber_curvature(mesh: fm.FiberMesh) -> float:
    return float(mesh.gauss_curvature)


def describe_preset(name: str) -> dict:
    """Hypotheses satisfied by a preset, evaluated from its warping function."""
    p = PRESETS[name]
    wf = from_config(p["spacetime"]["warping"])
    window = p["spacetime"].get("window")
    mesh_cfg = p["fiber"]
    Kf = 0.0 if mesh_cfg["kind"] == "torus" else 1.0 / mesh_cfg.get("size", [1.0])[0] ** 2
    lc = log_concavity_margin(wf, window)
    verdicts = conditions.all_conditions(wf, Kf, window)
    return {
        "preset": name,
        "warping": wf.describe(),
        "fiber": mesh_cfg["kind"],
        "log_concave": lc.holds,
        "alpha": inf_ratio_alpha(wf, window),
        "NCC": verdicts["NCC"].holds,
        "TCC": verdicts["TCC"].holds,
        "note": p["note"],
    }


def list_models(out=None) -> list[dict]:
    out = sys.stdout if out is None else out
    rows = [describe_preset(name) for name in PRESETS]
    header = f"{'preset':<16} {'warping':<22} {'fiber':<7} {'(log f)<=0':<11} {'alpha':>8}  NCC   TCC   note"
    print(header, file=out)
    for r in rows:
        print(f"{r['preset']:<16} {r['warping']:<22} {r['fiber']:<7} {str(r['log_concave']):<11} "
              f"{r['alpha']:>8.4g}  {str(r['NCC']):<5} {str(r['TCC']):<5} {r['note']}", file=out)
    return rows


# -- config -------------------------------------------------------------------

def load_config(source, seed: int | None = None) -> dict:
    """Parse, merge preset defaults, validate and normalise a run config."""
    if isinstance(source, dict):
        raw = copy.deepcopy(source)
    else:
        try:
            raw = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{source}: {exc}") from None
    _validate(raw)
    cfg = {}
    if "preset" in raw:
        if raw["preset"] not in PRESETS:
            raise ConfigError(f"preset: unknown preset {raw['preset']!r}; "
                              f"expected one of {sorted(PRESETS)}")
        cfg = {k: copy.deepcopy(v) for k, v in PRESETS[raw["preset"]].items() if k != "note"}
    cfg.update(raw)
    cfg.pop("preset", None)
    for key in ("spacetime", "fiber"):
        if key not in cfg:
            raise ConfigError(f"{key}: required (directly or through a preset)")
    cfg.setdefault("fields", [])
    cfg["tolerances"] = {**DEFAULT_TOLERANCES, **cfg.get("tolerances", {})}
    cfg.setdefault("output_dir", "runs/latest")
    if seed is not None:
        cfg["seed"] = seed
    cfg.setdefault("seed", 0)
    for i, fcfg in enumerate(cfg["fields"]):
        if fcfg["kind"] == "RandomBandLimited":
            fcfg.setdefault("seed", cfg["seed"] + i)
    _validate(cfg)
    _check_semantics(cfg)
    return cfg


def _validate(cfg):
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {exc.message}") from None


def _check_semantics(cfg):
    try:
        wf = from_config(cfg["spacetime"]["warping"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"spacetime/warping: {exc}") from None
    window = cfg["spacetime"].get("window")
    if window is not None and not IntervalSpec.parse(window).is_subset_of(wf.domain):
        raise ConfigError(f"spacetime/window: {window} is not inside the domain {wf.domain}")
    try:
        fm.build(cfg["fiber"])
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"fiber: {exc}") from None
    needs_fields = {"identities", "slice-solve", "inequality-scan", "energy", "convergence"}
    if needs_fields & set(cfg["suites"]) and not cfg["fields"]:
        raise ConfigError("fields: at least one field is required by the requested suites")
    for i, fcfg in enumerate(cfg["fields"]):
        try:
            experiments.recipe_from_config(fcfg)
        except TypeError as exc:
            raise ConfigError(f"fields/{i}: {exc}") from None


# -- suites -------------------------------------------------------------------

class Context:
    def __init__(self, cfg):
        self.cfg = cfg
        self.tol = cfg["tolerances"]
        self.wf = from_config(cfg["spacetime"]["warping"])
        self.window = cfg["spacetime"].get("window")
        self.mesh = fm.build(cfg["fiber"])
        self.Kf = fiber_curvature(self.mesh)
        self.recipes = [experiments.recipe_from_config(f) for f in cfg["fields"]]
        self.out = Path(cfg["output_dir"])

    def write_csv(self, name, header, rows):
        with open(self.out / f"{name}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)


def _suite_identities(ctx):
    fields, rows, ok = [], [], True
    for i, recipe in enumerate(ctx.recipes):
        _, graph = recipe.realize(ctx.wf, ctx.mesh)
        rep = identity_residuals(graph, 1)
        worst = {r.name: r.max_abs_interior for r in rep.records}
        ok &= all(v <= ctx.tol["identity"] for v in worst.values())
        fields.append({"field": i, "max_abs_interior": worst})
        rows += [[i, r.name, "x".join(map(str, r.resolution)), r.max_abs_residual,
                  r.l2_residual, r.max_abs_interior] for r in rep.records]
    ctx.write_csv("identities", CSV_COLUMNS["identities"], rows)
    return ok, {"fields": fields, "tolerance": ctx.tol["identity"]}


def _suite_convergence(ctx):
    fields, rows, ok = [], [], True
    key = "min_order_sphere" if ctx.mesh.kind == "sphere" else "min_order"
    for i, recipe in enumerate(ctx.recipes):
        rep = experiments.convergence_study(ctx.wf, ctx.mesh, recipe, int(ctx.tol["levels"]))
        orders = rep.orders("max_abs_interior")
        ok &= all(o == "exact" or (o is not None and o >= ctx.tol[key]) for o in orders.values())
        fields.append({"field": i, "orders_interior": orders, "orders": rep.orders(),
                       "polar_cap": rep.polar_cap})
        rows += [[i, r.name, r.level, "x".join(map(str, r.resolution)), r.spacing,
                  r.max_abs_residual, r.max_abs_interior] for r in rep.records]
    ctx.write_csv("convergence", CSV_COLUMNS["convergence"], rows)
    return ok, {"fields": fields, "min_order": ctx.tol[key]}


def _suite_conditions(ctx):
    verdicts = conditions.all_conditions(ctx.wf, ctx.Kf, ctx.window, tol=ctx.tol["condition"])
    failures = conditions.implication_failures(verdicts, ctx.Kf)
    cc = conditions.constant_curvature_classify(ctx.wf, ctx.Kf, ctx.window)
    ctx.write_csv("conditions", CSV_COLUMNS["conditions"],
                  [[v.name, v.holds, v.margin, v.worst_point.get("t")] for v in verdicts.values()])
    return not failures, {
        "Kf": ctx.Kf,
        "verdicts": {k: v.to_dict() for k, v in verdicts.items()},
        "log_concave": verdicts["LogConcavity"].holds,
        "implication_failures": failures,
        "constant_curvature": cc.to_dict(),
    }


def _suite_slice_solve(ctx):
    scfg = experiments.SolverConfig(residual_tolerance=ctx.tol["solver_residual"])
    runs, rows, ok = [], [], True
    for i, recipe in enumerate(ctx.recipes):
        res = experiments.solve_slice(ctx.wf, ctx.mesh, recipe, scfg, ctx.window,
                                      raise_on_failure=False)
        passed = res.converged and res.oscillation < ctx.tol["oscillation"]
        ok &= passed
        runs.append({"field": i, "passed": passed, **res.to_dict()})
        rows.append([i, res.converged, res.iterations, res.residual_inf, res.oscillation])
        (ctx.out / f"slice-solve_history_{i}.csv").write_text(res.history_csv())
    ctx.write_csv("slice-solve", CSV_COLUMNS["slice-solve"], rows)
    return ok, {"runs": runs, "solver": scfg.to_config()}


def _suite_inequality_scan(ctx):
    recipes = [r for r in ctx.recipes if not r.is_constant]
    if not recipes:
        return False, {"error": "no non-constant fields to scan"}
    scan = experiments.violation_scan(ctx.wf, ctx.mesh, recipes)
    ctx.write_csv("inequality-scan", CSV_COLUMNS["inequality-scan"],
                  [[i, r["max_residual"], r["verdict"]] for i, r in enumerate(scan.per_field)])
    return scan.within_floor, scan.to_dict()


def _suite_energy(ctx):
    results, rows, ok = [], [], True
    for i, recipe in enumerate(ctx.recipes):
        _, graph = recipe.realize(ctx.wf, ctx.mesh)
        rep = energy_report(graph, ctx.tol["energy_rtol"])
        d = rep.to_dict()
        applies = d["ncc_holds"] and rep.tilde_max_residual <= ctx.tol["condition"]
        passed = rep.bound_holds or not applies
        ok &= passed
        results.append({"field": i, "hypotheses_met": applies, "passed": passed, **d})
        rows.append([i, rep.E_S, rep.bound_rhs, rep.bound_holds, rep.ncc_margin,
                     rep.tilde_max_residual])
    ctx.write_csv("energy", CSV_COLUMNS["energy"], rows)
    return ok, {"fields": results}


RUNNERS = {
    "identities": _suite_identities,
    "conditions": _suite_conditions,
    "slice-solve": _suite_slice_solve,
    "inequality-scan": _suite_inequality_scan,
    "energy": _suite_energy,
    "convergence": _suite_convergence,
}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def run(cfg: dict) -> dict:
    """Run every suite of a normalised config and write the report files."""
    ctx = Context(cfg)
    ctx.out.mkdir(parents=True, exist_ok=True)
    suites, timing, failures = {}, {}, []
    for name in cfg["suites"]:
        log.info("running suite %s", name)
        t0 = time.perf_counter()
        try:
            passed, result = RUNNERS[name](ctx)
        except (experiments.SafeguardBreach, experiments.PreconditionError,
                DomainError, ValueError) as exc:
            passed, result = False, {"error": f"{type(exc).__name__}: {exc}"}
        timing[name] = time.perf_counter() - t0
        suites[name] = {"pass": bool(passed), **result}
        if not passed:
            failures.append(name)
    report = {
        "config": cfg,
        "suites": suites,
        "passed": not failures,
        "failures": failures,
        "identities": list(IDENTITIES) + [CROSS_CHECK],
        "versions": {"grwgraphs": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__, "backend": BACKEND},
        "timing": timing,
    }
    report = _jsonable(report)
    (ctx.out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report


# -- entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="grwgraphs", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the suites of a JSON config")
    r.add_argument("config", help="path to the run config")
    r.add_argument("--out", help="output directory (overrides output_dir)")
    r.add_argument("--seed", type=int, help="base seed (overrides seed)")
    r.add_argument("-v", "--verbose", action="count", default=0)
    sub.add_parser("list-models", help="print the built-in presets")
    sub.add_parser("schema", help="print the config JSON schema")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "schema":
        print(json.dumps(SCHEMA, indent=2))
        return 0
    if args.command == "list-models":
        list_models()
        return 0
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, args.seed)
        if args.out:
            cfg["output_dir"] = args.out
        out = Path(cfg["output_dir"])
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise ConfigError(f"output_dir: {out} is not writable")
    except ConfigError as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return 2
    report = run(cfg)
    status = {"passed": report["passed"], "failures": report["failures"],
              "report": str(Path(cfg["output_dir"]) / "report.json")}
    print(json.dumps(status))
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
