"""Command-line driver: JSON config in, deterministic JSON report out.

Exit codes: 0 success, 1 a check or solver failed, 2 configuration,
usage or precondition error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping, Sequence

from . import __version__
from .core import (
    Character,
    ConfigurationError,
    ModelConfig,
    PreconditionError,
    Truncation,
    ValueModule,
    format_rational,
    to_rational,
    validate_value_module,
)

SCHEMA_VERSION = 1
COMMANDS = ("validate", "dgla-check", "primitive", "koszul", "e1", "specseq", "ode")
TOP_FIELDS = {"schema_version", "command", "model", "truncation", "seed", "tolerance", "output", "options"}
MODEL_FIELDS = {"d", "l", "values", "structure"}
OPTIONS = {
    "validate": {},
    "dgla-check": {"samples": int, "max_deg": int},
    "primitive": {"samples": int, "form": list},
    "koszul": {"value": str},
    "e1": {},
    "specseq": {"r_max": int, "random": bool, "grid": list, "max_dim": int},
    "ode": {"kappa": (str, int, float), "f": list, "R": (int, float), "n_r": int, "n_phi": int, "n_max": int, "manufactured": bool},
}
NEEDS_MODEL = {"validate", "dgla-check", "primitive", "koszul", "e1", "specseq"}
NEEDS_TRUNCATION = {"primitive", "koszul", "e1"}


@dataclass(frozen=True)
class SchemaError:
    message: str
    line: int | None = None

    def as_dict(self) -> dict[str, object]:
        return {"message": self.message, "line": self.line}


class ConfigParseError(ConfigurationError):
    def __init__(self, errors: Sequence[SchemaError]):
        self.errors = list(errors)
        super().__init__("; ".join(e.message for e in self.errors))


@dataclass(frozen=True)
class RunConfig:
    command: str
    model: ModelConfig | None = None
    truncation: Truncation | None = None
    seed: int = 0
    tolerance: float = 1e-6
    output: str | None = None
    options: Mapping[str, Any] = field(default_factory=dict)


# parsing ---------------------------------------------------------------------


def _line_of(text: str, key: str) -> int | None:
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _parse_model(raw: object, text: str, errors: list[SchemaError]) -> ModelConfig | None:
    def err(msg: str, key: str = "model") -> None:
        errors.append(SchemaError(msg, _line_of(text, key)))

    if not isinstance(raw, dict):
        err("model must be an object")
        return None
    for k in sorted(set(raw) - MODEL_FIELDS):
        err(f"unknown field model.{k}", k)
    d, l = raw.get("d"), raw.get("l")
    if not isinstance(d, int) or isinstance(d, bool) or not isinstance(l, int) or isinstance(l, bool):
        err("model.d and model.l must be integers", "d" if "d" in raw else "model")
        return None
    values = raw.get("values")
    if not isinstance(values, list) or not values:
        err("model.values must be a nonempty list", "values")
        return None
    basis = []
    for item in values:
        if not isinstance(item, dict) or set(item) - {"name", "kappa"} or "name" not in item:
            err("each value needs exactly name and kappa", "values")
            return None
        kappa = item.get("kappa", [])
        if not isinstance(kappa, list):
            err(f"kappa of {item['name']!r} must be a list", "kappa")
            return None
        try:
            basis.append((str(item["name"]), Character.of(*kappa)))
        except (ConfigurationError, ValueError) as exc:
            err(f"value {item['name']!r}: {exc}", "kappa")
            return None
    brackets = None
    if "structure" in raw:
        brackets = {}
        entries = raw["structure"]
        if not isinstance(entries, list):
            err("model.structure must be a list", "structure")
            return None
        for e in entries:
            if not isinstance(e, dict) or set(e) != {"a", "b", "c", "coeff"}:
                err("structure entries need exactly a, b, c, coeff", "structure")
                return None
            brackets.setdefault((e["a"], e["b"]), {})[e["c"]] = e["coeff"]
    try:
        vm = ValueModule.build(basis, brackets)
        return ModelConfig(d, l, vm)
    except (ConfigurationError, ValueError) as exc:
        err(str(exc))
        return None


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON config; raises :class:`ConfigParseError` listing every problem."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError([SchemaError(f"invalid JSON: {exc.msg}", exc.lineno)]) from None
    if not isinstance(raw, dict):
        raise ConfigParseError([SchemaError("config must be a JSON object", 1)])
    errors: list[SchemaError] = []

    def err(msg: str, key: str) -> None:
        errors.append(SchemaError(msg, _line_of(text, key)))

    for k in sorted(set(raw) - TOP_FIELDS):
        err(f"unknown field {k}", k)
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        err(f"unsupported schema_version {version!r}", "schema_version")
    command = raw.get("command")
    if command is None:
        errors.append(SchemaError("missing field command", None))
    elif command not in COMMANDS:
        err(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}", "command")
    model = None
    if "model" in raw:
        model = _parse_model(raw["model"], text, errors)
    elif command in NEEDS_MODEL:
        errors.append(SchemaError(f"command {command} needs a model", None))
    trunc = None
    if "truncation" in raw:
        t = raw["truncation"]
        if not (isinstance(t, list) and len(t) == 2 and all(isinstance(x, int) and not isinstance(x, bool) and x >= 0 for x in t)):
            err("truncation must be [max_z_deg, max_zbar_deg] with nonnegative integers", "truncation")
        else:
            trunc = Truncation(*t)
    elif command in NEEDS_TRUNCATION:
        errors.append(SchemaError(f"command {command} needs a truncation", None))
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        err("seed must be an integer", "seed")
    tol = raw.get("tolerance", 1e-6)
    if not isinstance(tol, (int, float)) or isinstance(tol, bool) or not tol > 0:
        err("tolerance must be a positive number", "tolerance")
    output = raw.get("output")
    if output is not None and not isinstance(output, str):
        err("output must be a path string", "output")
    options = raw.get("options", {})
    if not isinstance(options, dict):
        err("options must be an object", "options")
        options = {}
    elif command in OPTIONS:
        allowed = OPTIONS[command]
        for k, v in sorted(options.items()):
            if k not in allowed:
                err(f"unknown option {k} for {command}", k)
            elif isinstance(v, bool) and allowed[k] is not bool:
                err(f"option {k} has the wrong type", k)
            elif not isinstance(v, allowed[k]):
                err(f"option {k} has the wrong type", k)
        if command == "ode":
            if "kappa" not in options or "f" not in options:
                errors.append(SchemaError("command ode needs options.kappa and options.f", _line_of(text, "options")))
            elif isinstance(options["kappa"], str):
                try:
                    to_rational(options["kappa"])
                except ConfigurationError as exc:
                    err(str(exc), "kappa")
    if errors:
        raise ConfigParseError(errors)
    return RunConfig(command, model, trunc, seed, float(tol), output, dict(options))


def serialize(config: RunConfig) -> str:
    """Canonical JSON text; ``parse_config(serialize(c)) == c``."""
    out: dict[str, object] = {"schema_version": SCHEMA_VERSION, "command": config.command}
    if config.model is not None:
        out["model"] = model_to_json(config.model)
    if config.truncation is not None:
        out["truncation"] = [config.truncation.max_z_deg, config.truncation.max_zbar_deg]
    out["seed"] = config.seed
    out["tolerance"] = config.tolerance
    if config.output is not None:
        out["output"] = config.output
    if config.options:
        out["options"] = dict(config.options)
    return json.dumps(out, indent=2, sort_keys=True) + "\n"


def model_to_json(model: ModelConfig) -> dict[str, object]:
    vm = model.values
    out: dict[str, object] = {
        "d": model.d,
        "l": model.l,
        "values": [
            {"name": name, "kappa": [format_rational(k) for k in ch.kappa]}
            for name, ch in zip(vm.names, vm.characters)
        ],
    }
    if vm.structure is not None:
        out["structure"] = [
            {"a": vm.names[a], "b": vm.names[b], "c": vm.names[c], "coeff": format_rational(f)}
            for (a, b), row in sorted(vm.structure.items())
            for c, f in sorted(row.items())
        ]
    return out


# commands ----------------------------------------------------------------------


def _dims_table(dims: Mapping[tuple[int, int], int]) -> list[list[int]]:
    return [[p, q, n] for (p, q), n in sorted(dims.items())]


def _cmd_validate(cfg: RunConfig) -> tuple[dict, bool]:
    rep = validate_value_module(cfg.model.values)
    return {"validation": rep.as_dict()}, rep.valid


def _cmd_dgla(cfg: RunConfig) -> tuple[dict, bool]:
    from .axioms import check_axioms

    opts = cfg.options
    rep = check_axioms(cfg.model, opts.get("samples", 500), cfg.seed, opts.get("max_deg", 2))
    return {"axioms": rep.as_dict()}, rep.passed


def _cmd_primitive(cfg: RunConfig) -> tuple[dict, bool]:
    from .logforms import LogForm, dprime, random_form
    from .primitives import closed_form_from_kernel, peel_primitive, solve_dprime, verify_primitive

    model, trunc, opts = cfg.model, cfg.truncation, cfg.options
    if "form" in opts:
        omega = LogForm.from_json(model, opts["form"])
        alpha = peel_primitive(omega, trunc)
        beta = solve_dprime(omega, trunc)
        ok = verify_primitive(omega, alpha) and beta is not None and verify_primitive(omega, beta)
        return {
            "omega": omega.to_json(),
            "peeled": alpha.to_json(),
            "solved": beta.to_json() if beta is not None else None,
            "checks": {"peeled_verified": verify_primitive(omega, alpha), "solved_verified": beta is not None and verify_primitive(omega, beta)},
        }, ok
    if model.d < 1:
        raise PreconditionError("primitives need d >= 1")
    samples = opts.get("samples", 20)
    counts = {"images": 0, "kernel": 0, "peeled_verified": 0, "solved_verified": 0, "skipped_zero": 0}
    for s in range(samples):
        p = 1 + (s % model.d)
        q = (s // model.d) % (model.d + 1)
        seed = cfg.seed * 100003 + s
        if s % 2 == 0:
            base = random_form(model, p - 1, q, max(trunc.max_z_deg - 1, 0), seed)
            omega = dprime(base)
            kind = "images"
        else:
            omega = closed_form_from_kernel(model, p, q, trunc, seed)
            kind = "kernel"
        if not omega or not omega.within(trunc):
            counts["skipped_zero"] += 1
            continue
        counts[kind] += 1
        alpha = peel_primitive(omega, trunc)
        counts["peeled_verified"] += verify_primitive(omega, alpha)
        beta = solve_dprime(omega, trunc)
        counts["solved_verified"] += beta is not None and verify_primitive(omega, beta)
    tested = counts["images"] + counts["kernel"]
    ok = counts["peeled_verified"] == tested and counts["solved_verified"] == tested
    return {"primitives": counts}, ok


def _cmd_koszul(cfg: RunConfig) -> tuple[dict, bool]:
    from .koszul import build_koszul, diagonal_oracle, koszul_homology

    vm = cfg.model.values
    v = vm.index(cfg.options["value"]) if "value" in cfg.options else 0
    kc = build_koszul(cfg.model, v, cfg.truncation)
    hom, oracle = koszul_homology(kc), diagonal_oracle(kc)
    return {
        "koszul": {
            "value": vm.names[v],
            "kappa": [format_rational(k) for k in kc.kappa],
            "dims": kc.dims(),
            "homology": hom,
            "oracle": oracle,
        },
        "checks": {"matches_oracle": hom == oracle},
    }, hom == oracle


def _cmd_e1(cfg: RunConfig) -> tuple[dict, bool]:
    from .specseq import e_page, from_model, kernel_dprime_description

    dc = from_model(cfg.model, cfg.truncation)
    e1 = e_page(dc, 1)
    kernels = [kernel_dprime_description(cfg.model, q, cfg.truncation) for q in range(cfg.model.d + 1)]
    match = all(k.match for k in kernels)
    return {
        "e0_dims": _dims_table(dc.dims),
        "e1_dims": _dims_table(e1.dims),
        "kernel_dprime": [{"q": k.q, "dim": k.dim, "predicted": len(k.predicted), "match": k.match} for k in kernels],
        "checks": {"kernel_matches_prediction": match},
    }, match


def _cmd_specseq(cfg: RunConfig) -> tuple[dict, bool]:
    from .specseq import check_convergence, from_model, page_to_json, random_double_complex, spectral_sequence

    opts = cfg.options
    if opts.get("random"):
        grid = tuple(opts.get("grid", [4, 4]))
        if len(grid) != 2 or not all(isinstance(x, int) and x > 0 for x in grid):
            raise ConfigurationError("options.grid must be two positive integers")
        dc = random_double_complex(cfg.seed, grid, opts.get("max_dim", 6))
    else:
        if cfg.truncation is None:
            raise ConfigurationError("specseq on a model needs a truncation")
        dc = from_model(cfg.model, cfg.truncation)
    rep = check_convergence(dc, opts.get("r_max"))
    pages = spectral_sequence(dc, rep.r_max)
    checks = {
        "invariants": all(dc.check().values()),
        "page_laws": rep.page_laws,
        "d_squared": rep.d_squared,
        "stabilized": rep.stabilized,
        "converges": rep.converges,
    }
    return {
        "dims": _dims_table(dc.dims),
        "pages": [page_to_json(p) for p in pages],
        "e_infinity": _dims_table(rep.e_infinity),
        "total_cohomology": [[n, h] for n, h in sorted(rep.total.items())],
        "nonzero_differentials": rep.nonzero_differentials,
        "checks": checks,
    }, all(checks.values())


def _cmd_ode(cfg: RunConfig) -> tuple[dict, bool]:
    import numpy as np

    from .ode_num import SolveConfig, apply_P_terms, evaluate_terms, parse_expression, sample, solve, sup_on_disk

    opts = cfg.options
    k = opts["kappa"]
    kappa = float(to_rational(k)) if isinstance(k, str) else float(k)
    terms = parse_expression(opts["f"])
    grid = dict(R=float(opts.get("R", 1.0)), n_r=opts.get("n_r", 256), n_phi=opts.get("n_phi", 64))
    manufactured = opts.get("manufactured", False)
    if manufactured:
        f = sample(lambda z: apply_P_terms(terms, kappa, z), **grid)
    else:
        f = sample(lambda z: evaluate_terms(terms, z), **grid)
    solver = SolveConfig(n_max=opts.get("n_max", 32))
    g, rep = solve(f, kappa, solver)
    out = {"ode": rep.as_dict()}
    checks = {"residual_within_tolerance": rep.residual <= cfg.tolerance, "finite": bool(np.all(np.isfinite(g.values)))}
    if manufactured:
        exact = evaluate_terms(terms, f.points())
        err = sup_on_disk(f, g.values - exact, solver.verify_radius)
        out["ode"]["recovery_error"] = err
        checks["recovered"] = err <= cfg.tolerance
    out["checks"] = checks
    return out, all(checks.values())


HANDLERS = {
    "validate": _cmd_validate,
    "dgla-check": _cmd_dgla,
    "primitive": _cmd_primitive,
    "koszul": _cmd_koszul,
    "e1": _cmd_e1,
    "specseq": _cmd_specseq,
    "ode": _cmd_ode,
}


def run(config: RunConfig, timings: bool = False) -> tuple[dict[str, object], int]:
    """Dispatch ``config`` and return the report with its exit code.

    Timings are left out unless asked for, so that reports for a fixed
    seed and version are byte-identical.
    """
    start = time.perf_counter()
    body, ok = HANDLERS[config.command](config)
    report: dict[str, object] = {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "command": config.command,
        "seed": config.seed,
        "config": json.loads(serialize(config)),
        "ok": bool(ok),
        **body,
    }
    if timings:
        report["timings"] = {"total_seconds": time.perf_counter() - start}
    return report, 0 if ok else 1


def dumps(report: Mapping[str, object]) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def _error(kind: str, message: str, errors: Sequence[SchemaError] = ()) -> str:
    body: dict[str, object] = {"type": kind, "message": message}
    if errors:
        body["errors"] = [e.as_dict() for e in errors]
    return json.dumps({"error": body}, sort_keys=True)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="logdgla", description="Exact checks on truncated log-form models.")
    ap.add_argument("--config", required=True, help="path to a JSON run config")
    ap.add_argument("--out", help="write the report here instead of stdout")
    ap.add_argument("--seed", type=int, help="override the config seed")
    ap.add_argument("--tol", type=float, help="override the numeric tolerance (ode)")
    ap.add_argument("--quiet", action="store_true", help="print nothing on success")
    ap.add_argument("--timings", action="store_true", help="include wall-clock timings in the report")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(_error("usage", f"cannot read config: {exc.strerror}"), file=sys.stderr)
        return 2
    try:
        cfg = parse_config(text)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.tol is not None:
            if not args.tol > 0:
                raise ConfigParseError([SchemaError("--tol must be positive")])
            cfg = replace(cfg, tolerance=args.tol)
        if args.out is not None:
            cfg = replace(cfg, output=args.out)
        report, code = run(cfg, args.timings)
    except ConfigParseError as exc:
        print(_error("config", "invalid configuration", exc.errors), file=sys.stderr)
        return 2
    except (ConfigurationError, PreconditionError, KeyError) as exc:
        print(_error("precondition", str(exc)), file=sys.stderr)
        return 2
    except (RuntimeError, ArithmeticError) as exc:
        print(_error("failure", str(exc)), file=sys.stderr)
        return 1
    text = dumps(report)
    if cfg.output:
        Path(cfg.output).write_text(text, encoding="utf-8")
    elif not args.quiet:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
