"""Command-line interface.

Every command writes one JSON report (sorted keys) to ``--out`` or stdout.
Exit codes: 0 when every requested check passes, 1 when a check fails or the
computation reports a mathematical failure, 2 for usage and configuration
errors (nothing is computed in that case).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .decompose import coset_residual_split, decompose_full, diagnostic, psi_from_char, bruteforce_theorem_oracle
from .errors import BudgetExceeded, ConstraintViolated, GroupcharError, StructuralError
from .estimation import optimality_check, random_perturbation, risk_dominance
from .funceq import DualFunction, Sampled, check_parallelogram, check_product_equation, lemma2_oracle
from .groups import FiniteAbelianGroup, parse_group
from .spectral import SignedMeasure, char_function
from .torus import (GALLERY, TorusModel, admissible_tilts, density_min, smallest_positive_width,
                    write_density_csv)


class ConfigError(Exception):
    """Invalid configuration; maps to exit code 2."""


# -- measure sources -----------------------------------------------------------

def _add_source(p: argparse.ArgumentParser, gallery: bool = True):
    p.add_argument("--group", help="cyclic product such as Z2xZ4")
    p.add_argument("--measure", help="inline JSON weight list or path to a measure JSON file")
    if gallery:
        p.add_argument("--gallery", choices=sorted(GALLERY), help="torus model from the gallery")
        p.add_argument("--model", help="path to a torus model JSON file")
        _add_gallery_params(p)


def _add_gallery_params(p: argparse.ArgumentParser):
    p.add_argument("--eps", type=float, default=0.1, help="parity tilt (remark2)")
    p.add_argument("--a", default=None, help="width, or comma-separated widths for remark4")
    p.add_argument("--l", type=int, default=2, help="number of coordinates (remark4)")
    p.add_argument("--M", type=int, default=None, help="truncation bound")


def _load_measure(spec: str, group: str | None) -> SignedMeasure:
    text = spec
    if not spec.lstrip().startswith(("[", "{")):
        path = Path(spec)
        if not path.is_file():
            raise ConfigError(f"measure {spec!r} is neither inline JSON nor a readable file")
        text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"cannot parse measure: {exc}") from None
    if isinstance(data, dict):
        if group is not None:
            data = {**data, "group": group}
        if "group" not in data or "weights" not in data:
            raise ConfigError("measure JSON needs 'group' and 'weights'")
        data = {"group": data["group"], "weights": data["weights"]}
    else:
        if group is None:
            raise ConfigError("--group is required with an inline weight list")
        data = {"group": group, "weights": data}
    try:
        return SignedMeasure.from_dict(data)
    except (StructuralError, ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def _gallery_model(args) -> TorusModel:
    try:
        if args.gallery == "remark2":
            return GALLERY["remark2"](args.eps, args.M or 10)
        if args.gallery == "remark4":
            a = [4.0, 5.0] if args.a is None else [float(v) for v in args.a.split(",")]
            return GALLERY["remark4"](args.l, a, args.M or 8)
        return GALLERY["remark5"](1.0 if args.a is None else float(args.a), args.M or 10)
    except (ValueError, ConstraintViolated) as exc:
        raise ConfigError(str(exc)) from None


def _source(args, allow_torus: bool = True):
    chosen = [s for s in ("measure", "gallery", "model") if getattr(args, s, None)]
    if len(chosen) != 1:
        raise ConfigError("give exactly one of --measure" + (", --gallery, --model" if allow_torus else ""))
    if args.measure:
        return _load_measure(args.measure, args.group)
    if args.gallery:
        return _gallery_model(args)
    try:
        return TorusModel.from_dict(json.loads(Path(args.model).read_text()))
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot load model: {exc}") from None


def _char(source):
    return char_function(source) if isinstance(source, SignedMeasure) else source.char_function()


def _describe(source) -> dict:
    if isinstance(source, SignedMeasure):
        return {"kind": "measure", **source.to_dict()}
    return {"kind": "torus", "name": source.name, "q": source.q, "M": source.M, "params": source.params}


def _mode(args):
    if args.mode == "exhaustive":
        return "exhaustive"
    return Sampled(args.seed, args.samples)


def _positive(name):
    def check(v):
        k = int(v)
        if k < 1:
            raise argparse.ArgumentTypeError(f"{name} must be positive")
        return k
    return check


# -- commands --------------------------------------------------------------------

def cmd_check_eq3(args) -> tuple[int, dict]:
    source = _source(args)
    f = _char(source)
    out = {"source": _describe(source)}
    mod = np.abs(f.values)
    if isinstance(f.group, FiniteAbelianGroup) and mod.min() < 1e-12:
        i = int(np.argmin(mod))
        out["diagnostic"] = {"reason": "VanishingCharFunction", "where": f.group.label(i), "value": float(mod[i])}
        return 1, out
    rep = check_product_equation(f, args.n, _mode(args), arg_bound=args.arg_bound, relative=args.relative,
                                 tol=args.tol, budget=args.budget)
    out["report"] = rep.to_dict()
    return (0 if rep.passed else 1), out


def cmd_check_eq1(args) -> tuple[int, dict]:
    source = _source(args)
    f = _char(source)
    psi = psi_from_char(f, "half")
    out = {"source": _describe(source), "part": args.part}
    target = psi
    if args.part == "quadratic":
        target, residuals = coset_residual_split(psi)
        out["residuals"] = [{"coset": list(k.coords), "r": v} for k, v in residuals.items()]
    rep = check_parallelogram(DualFunction(target.group, target.values), tol=args.tol)
    out["report"] = rep.to_dict()
    return (0 if rep.passed else 1), out


def cmd_decompose(args) -> tuple[int, dict]:
    source = _source(args)
    out = {"source": _describe(source)}
    res = decompose_full(source, args.n, arg_bound=args.arg_bound, budget=args.budget, seed=args.seed)
    out["result"] = res.to_dict()
    return 0, out


def cmd_gallery(args) -> tuple[int, dict]:
    args.gallery = args.name
    model = _gallery_model(args)
    n = args.n or model.expected.get("n", 3)
    cert = density_min(model, args.grid)
    eq = check_product_equation(model.char_function(), n, arg_bound=args.arg_bound, relative=True)
    out = {"model": model.to_dict(), "density": cert.to_dict(), "n": n, "eq3_relative": eq.to_dict()}
    try:
        out["decomposition"] = decompose_full(model, n, arg_bound=args.arg_bound).to_dict()
    except GroupcharError as exc:
        out["decomposition_failure"] = diagnostic(exc)
    if args.scan:
        if args.name == "remark5":
            out["scan"] = smallest_positive_width(np.arange(0.5, 5.01, 0.5), model.M, args.grid)
        elif args.name == "remark2":
            out["scan"] = admissible_tilts(np.round(np.arange(0.0, 1.0001, 0.05), 10), model.M, args.grid)
    ok = cert.certified and eq.passed
    return (0 if ok else 1), out


def cmd_density(args) -> tuple[int, dict]:
    source = _source(args)
    if isinstance(source, SignedMeasure):
        raise ConfigError("density needs a torus model (--gallery or --model)")
    cert = density_min(source, args.grid)
    out = {"source": _describe(source), "density": cert.to_dict()}
    if args.csv:
        out["csv"] = str(write_density_csv(source, args.grid, args.csv))
    return (0 if cert.certified else 1), out


def cmd_oracle(args) -> tuple[int, dict]:
    if args.which == "theorem1":
        if not args.group:
            raise ConfigError("oracle theorem1 needs --group")
        G = _group(args.group)
        rep = bruteforce_theorem_oracle(G, args.n, args.grid, budget=args.budget)
        return (0 if rep["mismatch_count"] == 0 else 1), {"report": rep}
    if not (args.y1 and args.y2):
        raise ConfigError("oracle lemma2 needs --y1 and --y2")
    rep = lemma2_oracle(_group(args.y1), _group(args.y2), args.n, budget=args.budget)
    return (0 if rep["mismatches"] == 0 else 1), {"report": rep}


def cmd_simulate(args) -> tuple[int, dict]:
    source = _source(args, allow_torus=False)
    if not source.is_distribution:
        raise ConfigError("simulate-optimality needs a probability distribution")
    G = source.group
    opt = optimality_check(source, args.n)
    rng = np.random.Generator(np.random.Philox(args.seed))
    gs = [random_perturbation(G, args.n, rng) for _ in range(args.perturbations)]
    mode = "exact" if args.mode == "exact" else Sampled(args.seed, args.samples)
    thetas = None if mode == "exact" else [int(t) for t in rng.choice(G.order, size=min(G.order, 4), replace=False)]
    dom = risk_dominance(source, args.n, gs, thetas=thetas, mode=mode)
    out = {"source": _describe(source), "optimality": opt.to_dict(), "dominance": dom.to_dict()}
    return (0 if opt.equivalent and dom.passed else 1), out


def _group(spec: str) -> FiniteAbelianGroup:
    try:
        return parse_group(spec)
    except (StructuralError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="groupchar", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"groupchar {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help="write the JSON report here instead of stdout")

    sp = sub.add_parser("check-eq3", help="check the product equation for a characteristic function")
    _add_source(sp)
    sp.add_argument("--n", type=_positive("n"), required=True)
    sp.add_argument("--mode", choices=["exhaustive", "sampled"], default="exhaustive")
    sp.add_argument("--samples", type=_positive("samples"), default=10**5)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--budget", type=_positive("budget"), default=10**8)
    sp.add_argument("--arg-bound", type=int, default=None)
    sp.add_argument("--relative", action="store_true", help="scale violations by the larger side")
    sp.add_argument("--tol", type=float, default=1e-9)
    common(sp)
    sp.set_defaults(func=cmd_check_eq3)

    sp = sub.add_parser("check-eq1", help="check the parallelogram law for psi or its quadratic part")
    _add_source(sp)
    sp.add_argument("--part", choices=["psi", "quadratic"], default="quadratic")
    sp.add_argument("--tol", type=float, default=1e-9)
    common(sp)
    sp.set_defaults(func=cmd_check_eq1)

    sp = sub.add_parser("decompose", help="factor a solution into shift, Gaussian part and signed measure")
    _add_source(sp)
    sp.add_argument("--n", type=_positive("n"), required=True)
    sp.add_argument("--arg-bound", type=int, default=None)
    sp.add_argument("--budget", type=_positive("budget"), default=10**8)
    sp.add_argument("--seed", type=int, default=0)
    common(sp)
    sp.set_defaults(func=cmd_decompose)

    sp = sub.add_parser("gallery", help="reproduce a torus counterexample")
    sp.add_argument("name", choices=sorted(GALLERY))
    _add_gallery_params(sp)
    sp.add_argument("--n", type=_positive("n"), default=None)
    sp.add_argument("--grid", type=_positive("grid"), default=2048)
    sp.add_argument("--arg-bound", type=int, default=3)
    sp.add_argument("--scan", action="store_true", help="also scan the model parameter for positivity")
    common(sp)
    sp.set_defaults(func=cmd_gallery)

    sp = sub.add_parser("density", help="density grid with positivity certificate")
    _add_source(sp)
    sp.add_argument("--grid", type=_positive("grid"), default=2048)
    sp.add_argument("--csv", help="write t_1..t_q,rho rows here")
    common(sp)
    sp.set_defaults(func=cmd_density)

    sp = sub.add_parser("oracle", help="brute-force verification on small groups")
    sp.add_argument("which", choices=["theorem1", "lemma2"])
    sp.add_argument("--group")
    sp.add_argument("--y1")
    sp.add_argument("--y2")
    sp.add_argument("--n", type=_positive("n"), default=3)
    sp.add_argument("--grid", type=_positive("grid"), default=6)
    sp.add_argument("--budget", type=_positive("budget"), default=10**7)
    common(sp)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("simulate-optimality", help="optimality criterion and risk comparison")
    _add_source(sp, gallery=False)
    sp.add_argument("--n", type=_positive("n"), required=True)
    sp.add_argument("--mode", choices=["exact", "mc"], default="exact")
    sp.add_argument("--samples", type=_positive("samples"), default=10**5)
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--perturbations", type=int, default=50)
    common(sp)
    sp.set_defaults(func=cmd_simulate)
    return p


def _threads() -> int | None:
    raw = os.environ.get("GROUPCHAR_THREADS")
    if raw is None:
        return None
    try:
        k = int(raw)
    except ValueError:
        raise ConfigError(f"GROUPCHAR_THREADS must be a positive integer, got {raw!r}") from None
    if k < 1:
        raise ConfigError(f"GROUPCHAR_THREADS must be a positive integer, got {raw!r}")
    return k


def _echo(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    report = {"tool_version": __version__, "command": args.command, "config_echo": _echo(args)}
    try:
        report["config_echo"]["threads"] = _threads()
        code, body = args.func(args)
        report.update(body)
    except (ConfigError, BudgetExceeded) as exc:
        print(f"groupchar: error: {exc}", file=sys.stderr)
        return 2
    except GroupcharError as exc:
        code = 1
        report["diagnostic"] = diagnostic(exc)
    report["status"] = "pass" if code == 0 else "fail"
    report["timings"] = {"total_seconds": round(time.perf_counter() - start, 6)}
    text = json.dumps(report, sort_keys=True, indent=2, default=_json_default) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


if __name__ == "__main__":
    sys.exit(main())
