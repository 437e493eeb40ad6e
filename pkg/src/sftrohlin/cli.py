"""Command line front end.

Exit codes: 0 verdict true or certificate found; 1 verified false;
2 undecided, bound-limited or nothing found within bounds; 3 input error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .config import DEFAULT_CONFIG, RunConfig
from .errors import (
    InfeasibleError,
    InputError,
    PreconditionError,
    ResourceCapError,
    SFTError,
    UndecidedError,
    VerificationError,
)
from .k_theory import eventual_rank, infinitesimal_rank
from .measure import ClopenSet, Cylinder, cylinder_measure, perron_data
from .numberfield import perron_field
from .sft_core import TransitionMatrix, is_primitive, parse_matrix

EXIT_OK, EXIT_FALSE, EXIT_LIMITED, EXIT_INPUT = 0, 1, 2, 3


def exact(value):
    return {"exact": value}


def approx(value: float, tol: float):
    return {"float": float(value), "tol": tol}


def tag_numbers(obj, tol: float):
    """Wrap every bare number; already tagged values pass through."""
    if isinstance(obj, dict):
        if set(obj) == {"exact"} or set(obj) == {"float", "tol"}:
            return obj
        return {k: tag_numbers(v, tol) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [tag_numbers(v, tol) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return exact(obj)
    if isinstance(obj, float):
        return approx(obj, tol)
    return str(obj)


def _matrix(text) -> TransitionMatrix:
    if text is None:
        raise InputError("--matrix is required")
    return parse_matrix(text)


def _require_primitive(T):
    v = is_primitive(T)
    if not v:
        raise PreconditionError(f"matrix is not primitive: {v.obstruction}")


# ---------------------------------------------------------------- commands


def cmd_invariants(T, config: RunConfig):
    T = TransitionMatrix.of(T)
    _require_primitive(T)
    from .shift_equiv import full_shift_test

    pd = perron_data(T)
    pf = perron_field(T)
    fs = full_shift_test(T)
    out = {
        "command": "invariants",
        "matrix": exact(T.to_json()),
        "primitive": exact(True),
        "primitivity_exponent": exact(is_primitive(T).exponent),
        "lambda": approx(pd.lam, 1e-12),
        "minimal_polynomial": exact(str(pf.minpoly.as_expr())),
        "perron_degree": exact(pf.degree),
        "eventual_rank": exact(eventual_rank(T)),
        "infinitesimal_rank": exact(infinitesimal_rank(T)),
        "full_shift": exact(fs.n if fs.equivalent else False),
    }
    return out, EXIT_OK


def cmd_tower(T, m: int, config: RunConfig):
    from .rohlin import build_tower

    tw = build_tower(T, m, config)
    out = {"command": "tower", "matrix": exact(tw.T.to_json()), "m": m, "tower": _tower_json(tw)}
    return out, EXIT_OK


def _tower_json(tw):
    info = dict(tw.info)
    checks = info.pop("checks", {})
    return {
        "seed_path": exact(list(tw.seed)),
        "N": tw.N,
        "base_window": exact(list(tw.base.window.as_tuple())),
        "base_paths": len(tw.base),
        "class": exact(tw.cls.to_json()),
        "checks": exact(checks),
        "fixed_class_rule": info.get("fixed_class", {}).get("rule"),
        "window_width": info.get("window_width"),
    }


def cmd_stack(T, m: int, ell: int | None, config: RunConfig):
    from .rohlin import (
        build_cyclic_stack,
        build_tower,
        cyclic_stack_length,
        model_shape_from_tower,
        model_stack,
        stack_from_tower,
    )

    tw = build_tower(T, m, config)
    sd = stack_from_tower(tw, m, config)
    out = {
        "command": "stack",
        "matrix": exact(tw.T.to_json()),
        "m": m,
        "tower": _tower_json(tw),
        "stack": {
            "length": m,
            "window": exact(sd.info["window"]),
            "p_window": exact(list(sd.p.window.as_tuple())),
            "q_window": exact(list(sd.q.window.as_tuple())),
            "p_pairs": len(sd.p.mapping),
            "q_pairs": len(sd.q.mapping),
            "checks": exact(sd.info["checks"]),
        },
    }
    if ell is not None:
        D, c = model_shape_from_tower(tw)
        K = cyclic_stack_length(m, ell)
        model = model_stack(K, D, c, max_dim=config.max_model_dim)
        cs = build_cyclic_stack(model, m, ell, seed=config.seed)
        out["cyclic_stack"] = cs.report
    return out, EXIT_OK


def cmd_rohlin(T, m: int, epsilon: float, config: RunConfig, n=None, ell=None):
    from .rohlin import rohlin_pipeline

    report = rohlin_pipeline(T, m, epsilon, None, config, n=n, ell=ell)
    out = {"command": "rohlin", **report.to_json()}
    if report.verdict:
        code = EXIT_OK
    elif report.bound_limited or "epsilon" in report.violated:
        code = EXIT_LIMITED
    else:
        code = EXIT_FALSE
    return out, code, report


def cmd_se(U, V, max_lag: int, max_entry: int, config: RunConfig):
    from .shift_equiv import search_se, verify_se

    U, V = TransitionMatrix.of(U), TransitionMatrix.of(V)
    res = search_se(U.entries, V.entries, max_lag, max_entry, config)
    out = {"command": "se", "U": exact(U.to_json()), "V": exact(V.to_json()), "status": res.status,
           "certificate": None if res.certificate is None else exact(res.certificate.to_json()),
           "max_lag": max_lag, "max_entry": max_entry, "notes": res.notes}
    if res.found:
        out["residuals"] = exact(verify_se(U.entries, V.entries, res.certificate).residuals)
        return out, EXIT_OK
    return out, EXIT_LIMITED


def cmd_measure(T, path, offset: int, config: RunConfig):
    T = TransitionMatrix.of(T)
    _require_primitive(T)
    pd = perron_data(T)
    c = Cylinder(tuple(path), offset)
    mu = cylinder_measure(pd, T, c)
    C = ClopenSet.from_cylinder(T, c)
    out = {"command": "measure", "matrix": exact(T.to_json()), "path": exact(list(c.path)), "offset": offset,
           "measure": approx(mu, 1e-12), "window": exact([C.window.a, C.window.b]),
           "lambda": approx(pd.lam, 1e-12)}
    return out, EXIT_OK


# ---------------------------------------------------------------- plumbing


def _parse_path(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise InputError(f"malformed path {text!r}; use comma-separated edge indices") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--matrix", help='transition matrix, e.g. "1,1;1,0"')
    common.add_argument("--json", action="store_true", help="emit JSON instead of a table")
    common.add_argument("--seed", type=int, help="seed for randomized probes")
    common.add_argument("--caps", help="JSON file with RunConfig fields")

    parser = argparse.ArgumentParser(prog="sftrohlin", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("invariants", parents=[common], help="primitivity, Perron data, ranks, full-shift test")
    p = sub.add_parser("tower", parents=[common], help="clopen tower of height m")
    p.add_argument("--m", type=int, required=True)
    p = sub.add_parser("stack", parents=[common], help="stack with p, q; with --ell also a cyclic stack")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--ell", type=int)
    p = sub.add_parser("rohlin", parents=[common], help="certified Rohlin partition")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--n", type=int)
    p.add_argument("--ell", type=int)
    p = sub.add_parser("se", parents=[common], help="bounded shift-equivalence search")
    p.add_argument("U", nargs="?")
    p.add_argument("V", nargs="?")
    p.add_argument("--matrix2", help="second matrix when --matrix gives the first")
    p.add_argument("--max-lag", type=int)
    p.add_argument("--max-entry", type=int)
    p = sub.add_parser("measure", parents=[common], help="measure of a cylinder set")
    p.add_argument("--cylinder", required=True, help="comma-separated edge indices")
    p.add_argument("--offset", type=int, default=0)
    return parser


def _config(args) -> RunConfig:
    config = RunConfig.from_file(args.caps) if args.caps else DEFAULT_CONFIG
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if getattr(args, "max_lag", None) is not None:
        changes["max_lag"] = args.max_lag
    if getattr(args, "max_entry", None) is not None:
        changes["max_entry"] = args.max_entry
    changes["output"] = "json" if args.json else "table"
    return config.with_(**changes)


def _table(out: dict, indent: str = "") -> list[str]:
    lines = []
    for k, v in out.items():
        if isinstance(v, dict) and set(v) == {"exact"}:
            v = v["exact"]
        if isinstance(v, dict) and set(v) == {"float", "tol"}:
            lines.append(f"{indent}{k}: {v['float']:.12g}")
        elif isinstance(v, dict):
            lines.append(f"{indent}{k}:")
            lines += _table(v, indent + "  ")
        else:
            lines.append(f"{indent}{k}: {json.dumps(v) if isinstance(v, (list, dict)) else v}")
    return lines


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    report = None
    try:
        config = _config(args)
        if args.command == "invariants":
            out, code = cmd_invariants(_matrix(args.matrix), config)
        elif args.command == "tower":
            out, code = cmd_tower(_matrix(args.matrix), args.m, config)
        elif args.command == "stack":
            out, code = cmd_stack(_matrix(args.matrix), args.m, args.ell, config)
        elif args.command == "rohlin":
            out, code, report = cmd_rohlin(_matrix(args.matrix), args.m, args.epsilon, config, args.n, args.ell)
        elif args.command == "se":
            U = args.U if args.U is not None else args.matrix
            V = args.V if args.V is not None else args.matrix2
            if U is None or V is None:
                raise InputError("se needs two matrices")
            out, code = cmd_se(parse_matrix(U), parse_matrix(V), config.max_lag, config.max_entry, config)
        else:
            out, code = cmd_measure(_matrix(args.matrix), _parse_path(args.cylinder), args.offset, config)
    except (InputError, PreconditionError) as exc:
        out, code = {"error": {"type": type(exc).__name__, "message": str(exc)}}, EXIT_INPUT
    except (ResourceCapError, UndecidedError, InfeasibleError) as exc:
        out, code = {"error": {"type": type(exc).__name__, "message": str(exc)}, "bound_limited": True}, EXIT_LIMITED
    except VerificationError as exc:
        out, code = {"error": {"type": type(exc).__name__, "message": str(exc)}, "verdict": False}, EXIT_FALSE
    except SFTError as exc:
        out, code = {"error": {"type": type(exc).__name__, "message": str(exc)}}, EXIT_LIMITED
    out["exit_code"] = code
    tol = DEFAULT_CONFIG.float_slack
    if args.json:
        stdout.write(json.dumps(tag_numbers(out, tol), sort_keys=True, indent=2) + "\n")
    elif report is not None:
        stdout.write(report.table() + "\n")
    else:
        stdout.write("\n".join(_table(tag_numbers(out, tol))) + "\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
