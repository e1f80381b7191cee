"""Command-line entry point: ``fracdg <subcommand> [options]``.

Every report echoes the resolved configuration.  Structured output
(``--format json``) is deterministic: sorted keys, no timestamps, and all
randomness drawn from ``--seed``.  Exit codes: 0 ok, 1 a check found a
violation, 2 malformed input.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .dgcert import DGParams, appendix_reproduction, certify, dg_sides
from .energy import Potential, SolveConfig, energy, minimize
from .gridfn import Ball, ExteriorSpec, FracParams, SpecError, build_grid_function
from .operator import RightHandSide, apply_pv, solve, weak_residual
from .quadrature import KernelSpec, SeminormDivergesError, gagliardo_seminorm, tail
from .regularity import (
    growth_probe,
    harnack_report,
    holder_fit,
    isoperimetric_check,
    isoperimetric_scan,
    iterate_lemma,
    iteration_threshold,
    local_bound_estimate,
)

SCHEMA = "fracdg.report/1"

COMMANDS = (
    "seminorm", "tail", "dg-check", "dg-certify", "minimize", "solve", "residual", "pv", "bound",
    "holder", "harnack", "growth", "iterate", "isoperimetric", "appendix-a", "suite",
)

DEFAULTS = {
    "spec": None, "s": 0.25, "p": 2.0, "kernel": "exact", "Lambda": 1.0, "lambda": 0.0, "d": 0.0, "H": 1.0,
    "F0": 1.0, "f0": 1.0, "delta": 1.0, "potential": "zero", "rhs": "zero", "grid_n": None, "x0": None,
    "r": None, "R": None, "k": None, "sign": None, "mode": "weak", "eps": 0.5, "tol": None, "seed": 0,
    "out": None, "format": "human", "trace": None, "normalized": False, "C": None, "b": 2.0, "phi0": None,
    "s_values": None, "only": None, "cells": None,
}

BUILTIN_SPECS = {
    "one": {"family": "constant", "params": {"c": 1.0}, "box": {"a": -1, "b": 1}, "cells": 256,
            "exterior": "extend"},
    "step": {"family": "step", "box": {"a": -1, "b": 1}, "cells": 1024, "exterior": "extend"},
}


class UsageError(Exception):
    """Malformed input detected after argument parsing."""


# ---------------------------------------------------------------------------
# configuration


def _add_common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    g = p.add_argument_group("inputs")
    g.add_argument("--config", default=S, help="JSON or YAML file supplying any flag; flags override it")
    g.add_argument("--spec", default=S, help="function spec: file path, inline JSON, or one of: one, step")
    g.add_argument("--grid-n", dest="grid_n", type=int, default=S, help="override the spec's cell count")
    g = p.add_argument_group("parameters")
    g.add_argument("--s", type=float, default=S, help="fractional order s in (0, 1)")
    g.add_argument("--p", type=float, default=S, help="integrability exponent p > 1")
    g.add_argument("--kernel", choices=["exact", "scaled", "oscillating"], default=S)
    g.add_argument("--Lambda", type=float, default=S, help="kernel ellipticity constant")
    g.add_argument("--lambda", dest="lambda", type=float, default=S, help="level-term exponent λ")
    g.add_argument("--d", type=float, default=S, help="data constant d")
    g.add_argument("--H", type=float, default=S, help="class constant H (checks fail above it)")
    g.add_argument("--F0", type=float, default=S, help="potential bound F0")
    g.add_argument("--f0", type=float, default=S, help="right-hand side scale f0")
    g.add_argument("--delta", type=float, default=S, help="double-well exponent δ")
    g.add_argument("--potential", choices=["zero", "indicator", "double_well"], default=S)
    g.add_argument("--rhs", choices=["zero", "constant", "ramp"], default=S)
    g = p.add_argument_group("geometry")
    g.add_argument("--x0", type=float, nargs="+", default=S, help="centre (one value per dimension)")
    g.add_argument("--r", type=float, default=S)
    g.add_argument("--R", type=float, default=S)
    g.add_argument("--k", type=float, default=S, help="truncation level")
    g.add_argument("--sign", choices=["+", "-"], default=S)
    g.add_argument("--mode", choices=["weak", "strong"], default=S)
    g.add_argument("--normalized", action="store_const", const=True, default=S,
                   help="use the (1-s)-normalized seminorm and tail")
    g = p.add_argument_group("numerics and output")
    g.add_argument("--eps", type=float, default=S, help="Harnack exponent ε or iteration exponent")
    g.add_argument("--tol", type=float, default=S, help="energy / residual tolerance")
    g.add_argument("--seed", type=int, default=S)
    g.add_argument("--out", default=S, help="write the report here (atomically)")
    g.add_argument("--format", choices=["human", "json"], default=S)
    g.add_argument("--trace", default=S, help="write a plot-ready CSV trace here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracdg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")
    helps = {
        "seminorm": "Gagliardo seminorm on a ball (or the whole box)",
        "tail": "Tail and normalized tail outside B_R(x0)",
        "dg-check": "both sides of the Caccioppoli-type inequality at one (x0, r, R, k)",
        "dg-certify": "sampled wDG / DG certificate with minimal H",
        "minimize": "coordinate-descent minimizer of the nonlocal energy",
        "solve": "weak solution of L u = f with exterior data",
        "residual": "weak residual of L u = f against nonnegative tests",
        "pv": "principal value L u(x0) by shrinking truncations",
        "bound": "local sup bound quantities",
        "holder": "Hölder exponent from oscillation decay",
        "harnack": "Harnack quotient terms",
        "growth": "growth-lemma quantities",
        "iterate": "the iteration lemma recursion",
        "isoperimetric": "level-set isoperimetric inequality (2D)",
        "appendix-a": "step function reproduction: closed forms and certificates",
        "suite": "acceptance corpus with a summary table",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        _add_common(p)
        if name == "iterate":
            p.add_argument("--C", type=float, default=argparse.SUPPRESS)
            p.add_argument("--b", type=float, default=argparse.SUPPRESS)
            p.add_argument("--phi0", type=float, default=argparse.SUPPRESS,
                           help="starting value (default 0.99 times the threshold)")
        if name == "isoperimetric":
            p.add_argument("--C", type=float, default=argparse.SUPPRESS, help="candidate constant to check")
            p.add_argument("--s-values", dest="s_values", type=float, nargs="+", default=argparse.SUPPRESS)
        if name == "appendix-a":
            p.add_argument("--cells", type=int, nargs="+", default=argparse.SUPPRESS)
        if name == "suite":
            p.add_argument("--only", type=int, nargs="+", default=argparse.SUPPRESS, help="criterion ids")
    return parser


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    try:
        doc = json.loads(text) if path.endswith(".json") else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise UsageError(f"config {path} is not valid: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError("config must be a mapping of flag names to values")
    doc = {k.replace("-", "_"): v for k, v in doc.items()}
    unknown = sorted(set(doc) - set(DEFAULTS))
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    return doc


def resolve(ns: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    flags = vars(ns).copy()
    command = flags.pop("command")
    cfg = dict(DEFAULTS)
    if "config" in flags:
        cfg.update(_load_config(flags.pop("config")))
    cfg.update(flags)
    cfg["command"] = command
    for key in ("s", "p", "Lambda", "lambda", "d", "H", "F0", "f0", "eps", "delta"):
        try:
            cfg[key] = float(cfg[key])
        except (TypeError, ValueError):
            raise UsageError(f"{key} must be a number, got {cfg[key]!r}") from None
    if cfg["x0"] is not None:
        cfg["x0"] = [float(t) for t in np.atleast_1d(cfg["x0"])]
    if cfg["format"] not in ("human", "json"):
        raise UsageError("format must be human or json")
    return cfg


# ---------------------------------------------------------------------------
# shared construction


def _function(cfg: dict):
    spec = cfg["spec"]
    if spec is None:
        raise UsageError("this subcommand needs --spec")
    if isinstance(spec, dict):
        doc = dict(spec)
    elif spec in BUILTIN_SPECS:
        doc = dict(BUILTIN_SPECS[spec])
    elif spec.lstrip().startswith("{"):
        try:
            doc = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise UsageError(f"inline spec is not valid JSON: {exc}") from None
    else:
        try:
            text = Path(spec).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read spec {spec}: {exc}") from None
        doc = json.loads(text) if spec.endswith(".json") else yaml.safe_load(text)
    if cfg["grid_n"] is not None:
        doc["cells"] = cfg["grid_n"]
    cfg["spec"] = doc
    return build_grid_function(doc)


def _params(cfg: dict, n: int = 1) -> FracParams:
    return FracParams(n, cfg["s"], cfg["p"])


def _kernel(cfg: dict, params: FracParams) -> KernelSpec:
    return KernelSpec.preset(params, cfg["kernel"], cfg["Lambda"])


def _dg(cfg: dict) -> DGParams:
    return DGParams(d=cfg["d"], H=cfg["H"], lam=cfg["lambda"])


def _center(cfg: dict, u) -> tuple:
    x0 = cfg["x0"] if cfg["x0"] is not None else [0.5 * (u.a + u.b)] * u.n
    if len(x0) != u.n:
        raise UsageError(f"--x0 needs {u.n} coordinate(s)")
    cfg["x0"] = list(x0)
    return tuple(x0)


def _need(cfg: dict, *keys):
    missing = [k for k in keys if cfg[k] is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + k for k in missing))


def _potential(cfg: dict) -> Potential:
    return Potential.preset(cfg["potential"], cfg["F0"], cfg["delta"])


def _solve_config(cfg: dict) -> SolveConfig:
    if cfg["tol"] is None:
        return SolveConfig(seed=cfg["seed"])
    return SolveConfig(tol_energy=cfg["tol"], seed=cfg["seed"])


def _write_trace(cfg: dict, text: str) -> None:
    if cfg["trace"]:
        atomic_write(cfg["trace"], text)


def _values(u) -> list:
    return np.asarray(u.values).tolist()


# ---------------------------------------------------------------------------
# subcommands; each returns (result dict, passed flag)


def cmd_seminorm(cfg):
    u = _function(cfg)
    params = _params(cfg, u.n)
    region = None
    if cfg["R"] is not None:
        region = Ball(_center(cfg, u), cfg["R"])
    val = gagliardo_seminorm(u, region, params, normalized=cfg["normalized"])
    return {"seminorm_p": val, "seminorm": val ** (1 / params.p), "region": "box" if region is None else "ball"}, True


def cmd_tail(cfg):
    u = _function(cfg)
    params = _params(cfg, u.n)
    x0 = _center(cfg, u)
    R = cfg["R"] if cfg["R"] is not None else 0.5 * u.dist_to_boundary(x0)
    cfg["R"] = R
    t = tail(u, params, x0, R, normalized=cfg["normalized"])
    return {"Tail": t.tail, "Tail_bar": t.tail_bar}, True


def cmd_dg_check(cfg):
    _need(cfg, "r", "R", "k", "sign")
    u = _function(cfg)
    params = _params(cfg, u.n)
    rep = dg_sides(u, params, _dg(cfg), _center(cfg, u), cfg["r"], cfg["R"], cfg["k"], cfg["sign"], cfg["mode"],
                   normalized=cfg["normalized"])
    return rep.to_dict(), rep.holds


def cmd_dg_certify(cfg):
    u = _function(cfg)
    params = _params(cfg, u.n)
    signs = (cfg["sign"],) if cfg["sign"] else ("+", "-")
    cert = certify(u, params, cfg["d"], cfg["lambda"], mode=cfg["mode"], signs=signs, normalized=cfg["normalized"])
    out = cert.to_dict()
    out["within_H"] = cert.minimal_H <= cfg["H"]
    return out, cert.verdict == "certified" and (cfg["H"] == 1.0 or out["within_H"])


def cmd_minimize(cfg):
    u0 = _function(cfg)
    params = _params(cfg, u0.n)
    kernel = _kernel(cfg, params)
    F = _potential(cfg)
    res = minimize(u0, kernel, F, _solve_config(cfg))
    _write_trace(cfg, res.trace_csv())
    e = energy(res.u, kernel, F)
    return {"energy": e.to_dict(), "converged": res.converged, "sweeps": res.sweeps, "last_move": res.last_move,
            "message": res.message, "local_only": res.local_only, "values": _values(res.u),
            "potential": F.describe()}, res.converged


def cmd_solve(cfg):
    template = _function(cfg)
    params = _params(cfg, template.n)
    kernel = _kernel(cfg, params)
    rhs = RightHandSide.preset(cfg["rhs"], template.a, template.b, template.cells, cfg["f0"])
    res = solve(rhs, template.exterior, kernel, _solve_config(cfg), box=(template.a, template.b),
                cells=template.cells, residual_tol=cfg["tol"])
    _write_trace(cfg, res.descent.trace_csv())
    return {"ok": res.ok, "converged": res.descent.converged, "sweeps": res.descent.sweeps,
            "residual_max": res.residual.max_abs, "residual_tol": res.residual_tol,
            "f0": rhs.f0, "values": _values(res.u)}, res.ok


def cmd_residual(cfg):
    u = _function(cfg)
    params = _params(cfg, u.n)
    rhs = RightHandSide.preset(cfg["rhs"], u.a, u.b, u.cells, cfg["f0"])
    rep = weak_residual(u, _kernel(cfg, params), rhs)
    tol = cfg["tol"] if cfg["tol"] is not None else 1e-6
    cfg["tol"] = tol
    sup, sub = rep.supersolution(tol), rep.subsolution(tol)
    # sign '-' asks for a supersolution (DG^-), '+' for a subsolution (DG^+), none for both
    passed = {"-": sup, "+": sub, None: sup and sub}[cfg["sign"]]
    out = rep.to_dict()
    out.update(supersolution=sup, subsolution=sub)
    return out, passed


def cmd_pv(cfg):
    u = _function(cfg)
    params = _params(cfg, u.n)
    x0 = _center(cfg, u)
    res = apply_pv(u, x0[0], _kernel(cfg, params))
    _write_trace(cfg, res.trace_csv())
    return res.to_dict(), res.converged


def cmd_bound(cfg):
    _need(cfg, "R")
    u = _function(cfg)
    rep = local_bound_estimate(u, _params(cfg, u.n), _dg(cfg), _center(cfg, u), cfg["R"])
    return rep.to_dict(), True


def cmd_holder(cfg):
    u = _function(cfg)
    x0 = _center(cfg, u)
    R = cfg["R"] if cfg["R"] is not None else 0.5 * u.dist_to_boundary(x0)
    cfg["R"] = R
    fit = holder_fit(u, x0, R)
    if cfg["trace"]:
        rows = ["r,oscillation"] + [f"{r!r},{o!r}" for r, o in zip(fit.scales, fit.oscillations)]
        _write_trace(cfg, "\n".join(rows) + "\n")
    return fit.to_dict(), True


def cmd_harnack(cfg):
    _need(cfg, "R")
    u = _function(cfg)
    rep = harnack_report(u, _params(cfg, u.n), _dg(cfg), _center(cfg, u), cfg["R"], cfg["eps"])
    return rep.to_dict(), True


def cmd_growth(cfg):
    _need(cfg, "R")
    u = _function(cfg)
    rec = growth_probe(u, _params(cfg, u.n), _dg(cfg), cfg["R"], _center(cfg, u))
    return rec.to_dict(), True


def cmd_iterate(cfg):
    _need(cfg, "C")
    thr = iteration_threshold(cfg["C"], cfg["b"], cfg["eps"])
    phi0 = cfg["phi0"] if cfg["phi0"] is not None else 0.99 * thr
    cfg["phi0"] = phi0
    tr = iterate_lemma(phi0, cfg["C"], cfg["b"], cfg["eps"])
    if cfg["trace"]:
        _write_trace(cfg, "i,phi\n" + "".join(f"{i},{v!r}\n" for i, v in enumerate(tr.phi)))
    # below the threshold the lemma guarantees decay, so a stall there is a violation
    return tr.to_dict(), not (phi0 <= thr and tr.verdict != "vanishes")


def cmd_isoperimetric(cfg):
    u = _function(cfg)
    if cfg["s_values"]:
        scan = isoperimetric_scan([u], cfg["s_values"], cfg["p"], cfg["C"])
        ok = cfg["C"] is None or all(r <= cfg["C"] for r in scan.max_ratio)
        return scan.to_dict(), ok
    rep = isoperimetric_check(u, cfg["s"], cfg["p"])
    out = rep.to_dict()
    return out, cfg["C"] is None or rep.ratio <= cfg["C"]


def cmd_appendix_a(cfg):
    cells = tuple(cfg["cells"]) if cfg["cells"] else (512, 1024, 2048, 4096)
    cfg["cells"] = list(cells)
    rep = appendix_reproduction(cfg["s"], cfg["p"], cells)
    return rep, rep["passed"]


def cmd_suite(cfg):
    from .suite import run_suite

    results = run_suite(cfg["only"])
    return {"criteria": [r.to_dict() for r in results], "passed": all(r.passed for r in results)}, \
        all(r.passed for r in results)


HANDLERS = {name: globals()["cmd_" + name.replace("-", "_")] for name in COMMANDS}


# ---------------------------------------------------------------------------
# output


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        obj = dataclasses.asdict(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


def render_json(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


def _human_lines(obj, indent=0, limit=12):
    pad = "  " * indent
    lines = []
    for key in sorted(obj):
        val = obj[key]
        if isinstance(val, dict):
            lines.append(f"{pad}{key}:")
            lines += _human_lines(val, indent + 1, limit)
        elif isinstance(val, list) and val and isinstance(val[0], dict):
            lines.append(f"{pad}{key}: [{len(val)} entries]")
            for item in val[:limit]:
                lines.append(f"{pad}  -")
                lines += _human_lines(item, indent + 2, limit)
        elif isinstance(val, list) and len(val) > limit:
            head = ", ".join(f"{v:.6g}" if isinstance(v, float) else str(v) for v in val[:limit])
            lines.append(f"{pad}{key}: [{head}, ...] ({len(val)} values)")
        elif isinstance(val, float):
            lines.append(f"{pad}{key}: {val:.10g}")
        else:
            lines.append(f"{pad}{key}: {val}")
    return lines


def render_human(report: dict) -> str:
    result = _clean(report["result"])
    if report["command"] == "suite":
        rows = [f"{'id':>3}  {'status':<6} {'seconds':>8}  name"]
        for c in result["criteria"]:
            rows.append(f"{c['id']:>3}  {'PASS' if c['passed'] else 'FAIL':<6} {c['seconds']:>8.1f}  {c['name']}")
        rows.append(f"overall: {'PASS' if result['passed'] else 'FAIL'}")
        return "\n".join(rows) + "\n"
    head = [f"fracdg {report['command']}: {'ok' if report['passed'] else 'VIOLATION'}"]
    return "\n".join(head + _human_lines(result)) + "\n"


def atomic_write(path: str, text: str) -> None:
    """Write via a temporary file in the target directory, then rename over the target."""
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent or Path("."), prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve(ns)
        result, passed = HANDLERS[cfg["command"]](cfg)
    except (UsageError, SpecError, SeminormDivergesError, ValueError, NotImplementedError,
            json.JSONDecodeError, yaml.YAMLError) as exc:
        print(f"fracdg: error: {exc}", file=sys.stderr)
        return 2
    echoed = {k: v for k, v in cfg.items() if k not in ("out", "format", "command")}
    report = {"schema": SCHEMA, "command": cfg["command"], "config": echoed, "passed": bool(passed),
              "result": result}
    text = render_json(report) if cfg["format"] == "json" else render_human(report)
    if cfg["out"]:
        atomic_write(cfg["out"], text)
    else:
        sys.stdout.write(text)
    return 0 if passed else 1


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
