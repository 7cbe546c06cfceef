"""Command-line front end: ``compident <subcommand> [--model FILE | --family KIND N] ...``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

from . import identifiability as ident
from .coeffs import coefficient_map
from .errors import (
    BadSize,
    DegenerateSample,
    InvalidModel,
    MalformedInput,
    MinorLimitExceeded,
    NoSingleMinor,
    PreconditionViolated,
    RankDeficient,
)
from .linalg import MINOR_LIMIT
from .model import FAMILIES, CompartmentModel, family, parse_model

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MODEL = 3
EXIT_LIMIT = 4

DEGREE_FAMILIES = ("cycle", "mammillary", "catenary")


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    model_file: str | None
    family: tuple | None  # (kind, n)
    fmt: str = "text"
    trials: int = 3
    samples: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise UsageError("--trials must be at least 1")
        if self.samples < 1:
            raise UsageError("--samples must be at least 1")

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        return cls(
            args.subcommand,
            args.model,
            tuple(args.family) if args.family else None,
            args.fmt,
            args.trials,
            args.samples,
            args.seed,
        )


class UsageError(Exception):
    pass


def _family_arg(values) -> tuple:
    kind, n = values
    if kind not in FAMILIES:
        raise UsageError(f"unknown family {kind!r}; choose from {', '.join(FAMILIES)}")
    try:
        return kind, int(n)
    except ValueError:
        raise UsageError(f"family size must be an integer, got {n!r}") from None


def _edge_list(chunks) -> list:
    nums = []
    for chunk in chunks:
        for tok in chunk.split(","):
            tok = tok.strip()
            if not tok:
                continue
            try:
                nums.append(int(tok))
            except ValueError:
                raise UsageError(f"--delete expects integers, got {tok!r}") from None
    if len(nums) % 2:
        raise UsageError("--delete expects pairs j,i (flow j -> i)")
    return [(nums[k], nums[k + 1]) for k in range(0, len(nums), 2)]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--model", metavar="FILE", help="model JSON file")
    src.add_argument("--family", nargs=2, metavar=("KIND", "N"), help="catenary, cycle or mammillary model")
    common.add_argument("--format", choices=("text", "json"), default="text", dest="fmt")
    common.add_argument("--trials", type=int, default=3, help="random evaluations for rank tests")
    common.add_argument("--samples", type=int, default=20, help="parameter samples for degree counting")
    common.add_argument("--seed", type=int, default=0, help="seed for every random choice")
    common.add_argument("--minor-limit", type=int, default=MINOR_LIMIT, help="cap on enumerated minors")

    parser = argparse.ArgumentParser(
        prog="compident",
        description="Identifiability analysis of linear compartment models.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")
    p = sub.add_parser("coeffs", parents=[common], help="input-output coefficients")
    p.add_argument("--method", choices=("forests", "charpoly"), default="forests")
    sub.add_parser("identifiable", parents=[common], help="generic local identifiability verdict")
    sub.add_parser("singular-locus", parents=[common], help="singular-locus equation and factors")
    p = sub.add_parser("submodel", parents=[common], help="screen an edge deletion")
    p.add_argument("--delete", action="append", required=True, metavar="j,i[,...]",
                   help="edges j -> i to delete (repeatable)")
    sub.add_parser("degree", parents=[common], help="identifiability degree of a family model")
    sub.add_parser("verify-family", parents=[common], help="compare with the family product formula")
    p = sub.add_parser("tree-conjecture", parents=[common], help="tree exponent procedure vs. computed multiplicities")
    p.add_argument("--all-trees", type=int, metavar="N", help="check every rooted tree shape on N vertices")
    p = sub.add_parser("vandermonde", parents=[common], help="elementary-symmetric determinant identity")
    p.add_argument("n", type=int)
    return parser


def _load_model(args) -> CompartmentModel:
    if args.model:
        try:
            with open(args.model) as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read {args.model}: {exc.strerror}") from None
        return parse_model(text)
    if args.family:
        return family(*_family_arg(args.family))
    raise UsageError("a model is required: use --model FILE or --family KIND N")


def _need_family(args, allowed=FAMILIES) -> tuple:
    if not args.family:
        raise UsageError(f"{args.subcommand} needs --family KIND N")
    kind, n = _family_arg(args.family)
    if kind not in allowed:
        raise UsageError(f"{args.subcommand} supports {', '.join(allowed)}")
    return kind, n


# -- subcommands: each returns (json-able dict, list of text lines) ------------


def cmd_coeffs(args):
    model = _load_model(args)
    cm = coefficient_map(model, args.method)
    doc = {
        "model": model.to_dict(),
        "params": [p.name for p in cm.params],
        "c": [str(f) for f in cm.c],
        "d": [str(f) for f in cm.d],
    }
    lines = [f"params: {', '.join(doc['params'])}"]
    lines += [f"{lab} = {f}" for lab, f in zip(cm.row_labels(), cm.rows())]
    lines.append("equation: " + io_equation(cm))
    doc["equation"] = io_equation(cm)
    return doc, lines


def _derivative(sym: str, k: int) -> str:
    return sym if k == 0 else f"{sym}^({k})"


def io_equation(cm) -> str:
    """``y^(n) + (c_{n-1}) y^(n-1) + ... = u^(n-1) + ... + (d_0) u``."""
    n = cm.n
    lhs = [_derivative("y", n)] + [f"({cm.c[k]}) {_derivative('y', k)}" for k in range(n - 1, -1, -1)]
    rhs = [_derivative("u", n - 1)] + [f"({cm.d[k]}) {_derivative('u', k)}" for k in range(n - 2, -1, -1)]
    return " + ".join(lhs) + " = " + " + ".join(rhs)


def cmd_identifiable(args):
    model = _load_model(args)
    rep = ident.is_generically_locally_identifiable(model, args.trials, args.seed)
    doc = {"model": model.to_dict(), **rep.to_dict()}
    lines = [
        f"verdict: {rep.verdict}",
        f"generic rank: {rep.generic_rank} of {rep.param_count} parameters ({rep.coeff_count} coefficients)",
        f"trials: {rep.trials}",
    ]
    return doc, lines


def cmd_singular_locus(args):
    model = _load_model(args)
    try:
        res = ident.singular_locus_equation(model, args.trials, args.seed, args.minor_limit)
    except RankDeficient as exc:
        return {"model": model.to_dict(), "verdict": ident.UNIDENTIFIABLE, "detail": str(exc)}, [
            f"verdict: {ident.UNIDENTIFIABLE}",
            str(exc),
        ]
    except NoSingleMinor as exc:
        minors = [
            {"rows": list(mn.rows), "cols": list(mn.cols), "value": str(mn.value)}
            for mn in exc.minors
            if not mn.is_zero
        ]
        lines = ["no single maximal minor defines the singular locus; nonzero minors:"]
        lines += [f"  rows {m['rows']}: {m['value']}" for m in minors]
        return {"model": model.to_dict(), "verdict": "no-single-minor", "minors": minors}, lines
    doc = {"model": model.to_dict(), **res.to_dict()}
    lines = [f"equation: {res.equation}", f"provenance: {res.provenance}"]
    if res.row_set is not None:
        lines.append(f"rows: {', '.join(res.row_set)}")
        lines.append(
            f"nonzero minors: {res.nonzero_minors}, all divisible: {res.all_divisible}, "
            f"all rational multiples: {res.all_rational_multiples}"
        )
    lines.append("factors:")
    lines += [f"  ({f})^{m}" for f, m in res.factor_report]
    return doc, lines


def cmd_submodel(args):
    model = _load_model(args)
    edges = _edge_list(args.delete)
    rep = ident.check_submodel(model, edges, trials=args.trials, rng=args.seed)
    doc = {"model": model.to_dict(), **rep.to_dict()}
    lines = [
        f"deleted: {', '.join(p.name for p in rep.deleted)}",
        f"theorem: {rep.theorem_verdict}",
        f"direct: {rep.direct.verdict if rep.direct else rep.direct_error}",
    ]
    return doc, lines


def cmd_degree(args):
    kind, n = _need_family(args, DEGREE_FAMILIES)
    rep = ident.identifiability_degree(kind, n, args.samples, args.seed)
    doc = rep.to_dict()
    lines = [
        f"family: {kind} n={n}",
        f"degree: {rep.degree if rep.degree is not None else 'not constant'} (expected {rep.expected})",
        f"samples: {rep.sample_count}, observed: {sorted(set(rep.observed_degrees))}",
        f"true point in every fiber: {doc['contains_truth']}",
    ]
    return doc, lines


def cmd_verify_family(args):
    kind, n = _need_family(args)
    res = ident.verify_family_singular_locus(kind, n, args.trials, args.seed)
    doc = res.to_dict()
    lines = [
        f"family: {kind} n={n}",
        f"status: {res.status}",
        f"expected: {res.expected}",
        f"computed: {res.computed}",
    ]
    if kind == "catenary":
        doc["divisibility"] = ident.catenary_divisibility_check(n, res.computed)
        lines.append(f"divisibility: {'ok' if doc['divisibility']['ok'] else 'FAILED'}")
    return doc, lines


def cmd_tree_conjecture(args):
    if args.all_trees is not None:
        models = ident.tree_models(args.all_trees)
    else:
        models = [_load_model(args)]
    reports = [ident.verify_tree_conjecture(m, args.trials, args.seed) for m in models]
    doc = {"trees": [r.to_dict() for r in reports], "all_match": all(r.all_match for r in reports)}
    lines = []
    for r in reports:
        shape = " ".join(f"{c}:{p}" for c, p in sorted(r.parents.items()))
        lines.append(f"tree {shape}: {'match' if r.all_match else 'MISMATCH'}")
        for p, pred, obs in r.entries:
            lines.append(f"  {p.name}: predicted {pred}, observed {obs}")
    lines.append(f"all match: {doc['all_match']}")
    return doc, lines


def cmd_vandermonde(args):
    ok = ident.vandermonde_check(args.n)
    return {"n": args.n, "holds": ok}, [f"n={args.n}: {'holds' if ok else 'FAILS'}"]


COMMANDS = {
    "coeffs": cmd_coeffs,
    "identifiable": cmd_identifiable,
    "singular-locus": cmd_singular_locus,
    "submodel": cmd_submodel,
    "degree": cmd_degree,
    "verify-family": cmd_verify_family,
    "tree-conjecture": cmd_tree_conjecture,
    "vandermonde": cmd_vandermonde,
}


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        config = RunConfig.from_args(args)
        doc, lines = COMMANDS[config.subcommand](args)
    except UsageError as exc:
        print(f"compident: error: {exc}", file=err)
        return EXIT_USAGE
    except (InvalidModel, MalformedInput, PreconditionViolated, BadSize) as exc:
        print(f"compident: {type(exc).__name__}: {exc}", file=err)
        return EXIT_MODEL
    except MinorLimitExceeded as exc:
        print(f"compident: {type(exc).__name__}: {exc}", file=err)
        return EXIT_LIMIT
    except DegenerateSample as exc:
        print(f"compident: {type(exc).__name__}: {exc}", file=err)
        return EXIT_LIMIT
    if config.fmt == "json":
        print(json.dumps(doc, indent=2), file=out)
    else:
        print("\n".join(lines), file=out)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
