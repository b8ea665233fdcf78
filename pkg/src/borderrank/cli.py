"""Command-line front end.

Exit codes: 0 success, 1 input or parameter error, 2 tensor not classified
(multilinear rank above (2, 2, 2)).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import approx, constructions, io
from .errors import DimensionError, ToleranceError
from .rank222 import (
    OrbitClass,
    canonical_terms,
    classify_general,
    reduce222,
    table1,
)
from .tensor_core import DEFAULT_TOL

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_UNCLASSIFIED = 2

EPILOG = "exit codes: 0 ok, 1 input/parameter error, 2 unclassified tensor"


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with code 1; code 2 is reserved for 'unclassified'."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


class InputError(Exception):
    pass


def _emit(obj):
    print(json.dumps(obj, indent=2))


def _load(path, exact=False):
    try:
        A = io.read_tensor(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except (io.TensorFormatError, DimensionError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    return A.to_exact() if exact else A


# ---------------------------------------------------------------------------
# classify
# ---------------------------------------------------------------------------

def cmd_classify(args) -> int:
    A = _load(args.path, args.exact)
    if A.order != 3:
        raise InputError(f"classification needs an order-3 tensor, got shape {A.shape}")
    if A.shape == (2, 2, 2):
        rep = reduce222(A, tol=args.tol)
    else:
        rep = classify_general(A, tol=args.tol)
    _emit(rep.to_json())
    return EXIT_OK if rep.classified else EXIT_UNCLASSIFIED


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------

_E1, _E2 = np.array([1, 0]), np.array([0, 1])


def _int_list(text, name):
    try:
        vals = [int(v) for v in str(text).replace(" ", "").split(",") if v]
    except ValueError as exc:
        raise InputError(f"--{name} expects comma-separated integers, got {text!r}") from exc
    if not vals:
        raise InputError(f"--{name} is empty")
    return vals


def _need(args, *names):
    for n in names:
        if getattr(args, n) is None:
            raise InputError(f"this kind needs --{n.replace('_', '-')}")


def _handle_payload(kind, handle, n):
    payload = {"kind": kind, "labels": handle.labels()}
    if n is None:
        return handle.limit, payload
    if n < 1:
        raise InputError("--n must be at least 1")
    payload["n"] = n
    payload["witness"] = io.terms_to_json(handle.witness(n))
    if handle.error_bound(n) is not None:
        payload["error_bound"] = handle.error_bound(n)
    return handle.term(n), payload


def _generate(args):
    kind = args.kind
    if kind.startswith("canonical:"):
        cls = OrbitClass.parse(kind.split(":", 1)[1])
        payload = {
            "kind": kind,
            "labels": {
                "class": cls.label,
                "sign_delta": cls.sign_delta,
                "mlrank": list(cls.mlrank),
                "outer_rank": cls.outer_rank,
                "border_rank": cls.border_rank,
            },
            "witness": io.terms_to_json([(1, list(t)) for t in canonical_terms(cls)]),
        }
        return cls.canonical(), payload
    if kind == "dsl":
        h = constructions.dsl_sequence(_E1, _E2, _E1, _E2, _E1, _E2)
        payload = {
            "kind": kind,
            "labels": h.labels(),
            "witness": io.terms_to_json([
                (1, [_E1, _E1, _E2]), (1, [_E1, _E2, _E1]), (1, [_E2, _E1, _E1]),
            ]),
        }
        return h.limit, payload
    if kind == "dsl-seq":
        _need(args, "n")
        h = constructions.dsl_sequence(_E1, _E2, _E1, _E2, _E1, _E2)
        return _handle_payload(kind, h, args.n)
    if kind == "leibniz":
        _need(args, "k", "a")
        spec = constructions.LeibnizSpec.standard(args.k, _int_list(args.a, "a"))
        h = constructions.leibniz_sequence(spec)
        A, payload = _handle_payload(kind, h, args.n)
        payload["labels"]["limit_term_count"] = spec.limit_term_count
        payload["labels"]["quotient_term_count"] = spec.quotient_term_count
        return A, payload
    if kind == "gap":
        _need(args, "r", "s")
        return _handle_payload(kind, constructions.gap_sequence(args.r, args.s), args.n)
    if kind == "rank-plus-one":
        _need(args, "shape", "r")
        h = constructions.rank_plus_one_instance(_int_list(args.shape, "shape"), args.r)
        return _handle_payload(kind, h, args.n)
    if kind == "random-orbit":
        _need(args, "cls")
        cls = OrbitClass.parse(args.cls)
        A, maps = constructions.random_orbit_sample(cls, args.seed)
        return A, {"kind": kind, "labels": {"class": cls.label, "seed": args.seed},
                   "map": maps.to_lists()}
    raise InputError(f"unknown kind {kind!r}")


def cmd_generate(args) -> int:
    try:
        A, payload = _generate(args)
    except (ValueError, DimensionError) as exc:
        raise InputError(str(exc)) from exc
    if args.float:
        A = A.to_float()
    if args.out is None:
        print(io.dumps_tensor(A))
        return EXIT_OK
    io.write_tensor(A, args.out)
    if payload is not None:
        io.write_sidecar(args.out, payload)
    return EXIT_OK


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------

def _write_trace(trace, path, clock):
    if path is None:
        return
    if not clock:
        trace.elapsed_ms = [0.0] * len(trace)
    with open(path, "w", newline="") as fh:
        trace.write_csv(fh)


def cmd_fit(args) -> int:
    A = _load(args.path)
    if args.rank < 1:
        raise InputError("--rank must be at least 1")
    if A.order < 2:
        raise InputError("fitting needs an order >= 2 tensor")
    model, trace = approx.als_cp(A, args.rank, seed=args.seed, max_iter=args.max_iter, tol=args.tol)
    _write_trace(trace, args.trace, not args.no_clock)
    rep = approx.degeneracy_report(trace, A.norm())
    _emit({
        "model": model.to_json(),
        "residual": trace.final_residual,
        "iterations": len(trace),
        "degeneracy": rep.to_json(),
    })
    return EXIT_OK


def _classification_json(T):
    rep = classify_general(T)
    return rep.to_json()


def cmd_weak2(args) -> int:
    A = _load(args.path)
    if A.order != 3 or any(d < 2 for d in A.shape):
        raise InputError(f"weak2 needs an order-3 tensor with every dimension >= 2, got {A.shape}")
    model, trace = approx.weak_rank2(
        A, seed=args.seed, restarts=args.restarts, max_iter=args.max_iter, tol=args.tol
    )
    _write_trace(trace, args.trace, not args.no_clock)
    approximant = model.evaluate()
    _emit({
        "model": model.to_json(),
        "residual": trace.final_residual,
        "classification": _classification_json(approximant),
    })
    return EXIT_OK


def cmd_degeneracy_demo(args) -> int:
    A = _load(args.path) if args.path else OrbitClass.G3.canonical()
    model, trace = approx.als_cp(A, args.rank, seed=args.seed, max_iter=args.max_iter, tol=args.tol)
    _write_trace(trace, args.trace, not args.no_clock)
    L = trace.lambda_matrix()
    checkpoints = sorted({min(len(trace), c) for c in (1, 10, 100, 1000, len(trace))})
    _emit({
        "target_norm": A.norm(),
        "rank": args.rank,
        "seed": args.seed,
        "iterations": len(trace),
        "checkpoints": [
            {"iter": c, "residual": trace.residual[c - 1], "max_lambda": float(L[c - 1].max())}
            for c in checkpoints
        ],
        "report": approx.degeneracy_report(trace, A.norm()).to_json(),
    })
    return EXIT_OK


# ---------------------------------------------------------------------------
# Bregman divergence
# ---------------------------------------------------------------------------

def cmd_bregman(args) -> int:
    try:
        phi = approx.GENERATORS[args.phi]
    except KeyError as exc:
        raise InputError(f"unknown generator {args.phi!r}; choose from {sorted(approx.GENERATORS)}") from exc
    if args.dsl_n is not None:
        if args.dsl_n < 1:
            raise InputError("--dsl-n must be at least 1")
        h = constructions.dsl_sequence(_E1, _E2, _E1, _E2, _E1, _E2)
        A, B = h.limit.to_float(), h.term(args.dsl_n).to_float()
        _emit({
            "generator": phi.name,
            "n": args.dsl_n,
            "D(A,A_n)": approx.bregman(A, B, phi),
            "D(A_n,A)": approx.bregman(B, A, phi),
        })
        return EXIT_OK
    if args.a is None or args.b is None:
        raise InputError("give two tensor files, or --dsl-n N for the boundary-sequence demo")
    A, B = _load(args.a), _load(args.b)
    try:
        value = approx.bregman(A, B, phi)
    except (ValueError, DimensionError) as exc:
        raise InputError(str(exc)) from exc
    _emit({"generator": phi.name, "divergence": value})
    return EXIT_OK


# ---------------------------------------------------------------------------
# orbit table
# ---------------------------------------------------------------------------

def _fmt_sign(s):
    return {1: "+", -1: "-", 0: "0"}[s]


def table1_markdown(rows=None) -> str:
    rows = table1() if rows is None else rows
    lines = [
        "| class | sign(delta) | multilinear rank | rank | border rank |",
        "|---|---|---|---|---|",
    ]
    for r in rows:
        ml = ",".join(str(v) for v in r["mlrank"])
        lines.append(
            f"| {r['class']} | {_fmt_sign(r['sign_delta'])} | ({ml}) | {r['outer_rank']} | {r['border_rank']} |"
        )
    return "\n".join(lines)


def cmd_reproduce_table1(args) -> int:
    print(table1_markdown())
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _fit_options(p, max_iter=10_000):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iter", type=int, default=max_iter)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--trace", help="write the per-iteration trace as CSV")
    p.add_argument("--no-clock", action="store_true",
                   help="write elapsed_ms as 0 so traces are byte-identical across runs")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="borderrank", description="Tensor rank, orbits and border-rank tools.",
                     epilog=EPILOG)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("classify", help="orbit report for an order-3 tensor file", epilog=EPILOG)
    p.add_argument("path")
    p.add_argument("--exact", action="store_true", help="convert entries to exact rationals first")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser(
        "generate", help="write a tensor from one of the built-in families", epilog=EPILOG,
        description="kinds: canonical:<class>, dsl, dsl-seq, leibniz, gap, rank-plus-one, random-orbit",
    )
    p.add_argument("kind")
    p.add_argument("--n", type=int, help="sequence index (term A_n instead of the limit)")
    p.add_argument("--k", type=int, help="Leibniz order")
    p.add_argument("--a", help="Leibniz exponents, e.g. '1,1'")
    p.add_argument("--r", type=int, help="rank parameter")
    p.add_argument("--s", type=int, help="number of boundary blocks (gap)")
    p.add_argument("--shape", help="comma-separated shape (rank-plus-one)")
    p.add_argument("--class", dest="cls", help="orbit class (random-orbit)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--float", action="store_true", help="write f64 instead of rational entries")
    p.add_argument("--out", help="output path; a .witness.json sidecar is written next to it")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="CP alternating least squares with degeneracy report", epilog=EPILOG)
    p.add_argument("path")
    p.add_argument("--rank", type=int, required=True)
    _fit_options(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("weak2", help="best approximation of border rank at most two", epilog=EPILOG)
    p.add_argument("path")
    p.add_argument("--restarts", type=int, default=8)
    _fit_options(p)
    p.set_defaults(func=cmd_weak2)

    p = sub.add_parser("bregman", help="Bregman divergence of two tensor files", epilog=EPILOG)
    p.add_argument("a", nargs="?")
    p.add_argument("b", nargs="?")
    p.add_argument("--phi", default=approx.HALF_SQUARED_NORM.name)
    p.add_argument("--dsl-n", type=int, help="compare the boundary tensor with term n of its sequence")
    p.set_defaults(func=cmd_bregman)

    p = sub.add_parser("reproduce-table1", help="recompute the 2x2x2 orbit table", epilog=EPILOG)
    p.set_defaults(func=cmd_reproduce_table1)

    p = sub.add_parser("degeneracy-demo", help="ALS run showing diverging coefficients", epilog=EPILOG)
    p.add_argument("path", nargs="?", help="tensor file (default: canonical G3)")
    p.add_argument("--rank", type=int, default=2)
    _fit_options(p, max_iter=5000)
    p.set_defaults(func=cmd_degeneracy_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"borderrank: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ToleranceError as exc:
        print(f"borderrank: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
