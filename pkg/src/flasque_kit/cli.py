"""Command-line interface: cohomology of lattice files, resolution checks, R-class counts, catalog runs."""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

from . import __version__
from ._parallel import fanout
from .arith import BaseField, FieldError, FieldTowerSpec
from .brauer import dihedral_connector, r_count
from .exactlin import IntMatrix
from .gmod import (
    FiniteGModule,
    GLattice,
    GroupError,
    LatticeError,
    character_lattice,
    check_subgroup,
    group_from_abelian_invariants,
    is_cyclic_subgroup,
    matrix_from_json,
    matrix_to_json,
    permutation_module,
    quasitrivial_cover,
    regular_module,
    subgroups,
    trivial_lattice,
)
from .paptori import (
    FamilyError,
    TorusFamilyParams,
    build_XS,
    build_XT,
    choose_m,
    ind_XS,
    kernel_order_check,
    restriction_map,
    verify_family,
)
from .tate import check_flasque_resolution, cohomology, construct_flasque_resolution, is_coflasque, is_flasque

EXIT_OK, EXIT_FALSE, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    """Bad user input; reported with exit code 2."""


# ------------------------------------------------------------------ file I/O


def load_json(path: str) -> Any:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _parse_or_fail(path: str, what: str, fn: Callable[[Any], Any], data: Any) -> Any:
    try:
        return fn(data)
    except KeyError as exc:
        raise InputError(f"{path}: {what} is missing the field {exc.args[0]!r}") from exc
    except (TypeError, ValueError, GroupError, LatticeError) as exc:
        raise InputError(f"{path}: invalid {what}: {exc}") from exc


def load_lattice(path: str) -> GLattice:
    return _parse_or_fail(path, "lattice", GLattice.from_json, load_json(path))


def parse_subgroups(X: GLattice, selector: str) -> list[tuple[int, ...]]:
    """'all', 'cyclic', or a comma list of element indices or names forming a subgroup."""
    G = X.group
    sel = selector.strip()
    if sel == "all":
        return subgroups(G)
    if sel == "cyclic":
        return [H for H in subgroups(G) if is_cyclic_subgroup(G, H)]
    names = {G.element_name(g): g for g in range(G.order)}
    elems = []
    for tok in sel.split(","):
        tok = tok.strip()
        if tok.lstrip("-").isdigit():
            g = int(tok)
            if not 0 <= g < G.order:
                raise InputError(f"element index {g} out of range 0..{G.order - 1}")
        elif tok in names:
            g = names[tok]
        else:
            raise InputError(f"unknown group element {tok!r}; known: {', '.join(names)}")
        elems.append(g)
    try:
        return [check_subgroup(G, elems)]
    except GroupError as exc:
        raise InputError(f"invalid subgroup {selector!r}: {exc}") from exc


def _parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"not a rational number: {text!r}") from exc


def _tower(base: str, s: int, a: int | None) -> FieldTowerSpec:
    try:
        return FieldTowerSpec(BaseField.parse(base), s, a)
    except FieldError as exc:
        raise InputError(str(exc)) from exc


# ------------------------------------------------------------------- output


@dataclass
class Outcome:
    code: int
    data: Any
    text: str


def emit(args, out: Outcome) -> int:
    if getattr(args, "quiet", False):
        return out.code
    if getattr(args, "json", False):
        print(json.dumps(out.data, indent=2, sort_keys=False))
    else:
        print(out.text)
    return out.code


# ----------------------------------------------------------------- commands


def cmd_tate(args) -> Outcome:
    X = load_lattice(args.lattice)
    if args.degree not in (-1, 0, 1):
        raise InputError("degree must be -1, 0 or 1")
    subs = parse_subgroups(X, args.subgroup)
    reports = fanout(lambda H: cohomology(X, H, args.degree), subs)
    G = X.group
    lines = []
    for r in reports:
        names = ", ".join(G.element_name(h) for h in r.subgroup)
        lines.append(f"H = {{{names}}}: degree {r.degree} group = {r.result}")
    return Outcome(EXIT_OK, {"degree": args.degree, "reports": [r.to_json() for r in reports]}, "\n".join(lines))


def cmd_flasque_check(args) -> Outcome:
    X = load_lattice(args.lattice)
    sweep = is_flasque(X)
    data = sweep.to_json()
    w = sweep.witness
    if w is None:
        text = f"flasque: degree -1 group trivial on all {len(sweep.reports)} subgroups"
        return Outcome(EXIT_OK, data, text)
    names = ", ".join(X.group.element_name(h) for h in w.subgroup)
    data["witness"] = w.to_json()
    return Outcome(EXIT_FALSE, data, f"not flasque: degree -1 group at H = {{{names}}} is {w.result}")


def _resolution_from_file(path: str):
    data = load_json(path)

    def parse(d):
        XT, XQ, XS = (GLattice.from_json(d[k]) for k in ("XT", "XQ", "XS"))
        incl = matrix_from_json(d["inclusion"], XQ.rank, XT.rank)
        proj = matrix_from_json(d["projection"], XS.rank, XQ.rank)
        return XT, XQ, XS, incl, proj

    return _parse_or_fail(path, "resolution", parse, data)


def resolution_to_json(XT, XQ, XS, incl: IntMatrix, proj: IntMatrix) -> dict:
    return {
        "XT": XT.to_json(),
        "XQ": XQ.to_json(),
        "XS": XS.to_json(),
        "inclusion": matrix_to_json(incl),
        "projection": matrix_to_json(proj),
    }


def cmd_resolution(args) -> Outcome:
    if args.s0 is not None:
        try:
            rho = restriction_map(args.s0)
        except FamilyError as exc:
            raise InputError(str(exc)) from exc
        XT, incl = build_XT(args.s0)
        triple = (XT, rho.source, rho.target, incl.matrix, rho.matrix)
        source = f"family lattices for s0 = {args.s0}"
    elif args.construct is not None:
        res = construct_flasque_resolution(load_lattice(args.construct))
        triple = (res.XT, res.XQ, res.XS, res.inclusion.matrix, res.projection.matrix)
        source = f"constructed from {args.construct}"
    else:
        triple = _resolution_from_file(args.input)
        source = args.input
    try:
        check = check_flasque_resolution(*triple)
    except LatticeError as exc:
        data = {"ok": False, "failures": [f"not equivariant: {exc}"]}
        return Outcome(EXIT_FALSE, data, f"{source}: FAIL\n  not equivariant: {exc}")
    data = check.to_json()
    if args.emit:
        data["resolution"] = resolution_to_json(*triple)
    XT, XQ, XS = triple[:3]
    lines = [f"{source}: {'PASS' if check.ok else 'FAIL'}", f"  ranks: X(T) {XT.rank}, X(Q) {XQ.rank}, X(S) {XS.rank}"]
    lines += [f"  {f}" for f in check.failures()]
    return Outcome(EXIT_OK if check.ok else EXIT_FALSE, data, "\n".join(lines))


def cmd_rclasses(args) -> Outcome:
    tower = _tower(args.base, args.s, args.a)
    try:
        report = r_count(tower)
    except FieldError as exc:
        raise InputError(str(exc)) from exc
    return Outcome(EXIT_OK, report.to_json(), report.to_text())


def cmd_connector(args) -> Outcome:
    a, b = _parse_rational(args.a), _parse_rational(args.b)
    try:
        c = dihedral_connector(a, b)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    text = f"q(t) = {c.q.as_expr()}\nl(t) = {c.ell.as_expr()}\np(t) = {c.p.as_expr()}"
    return Outcome(EXIT_OK, c.to_json(), text)


# ------------------------------------------------------------------ catalog


def sign_lattice(order: int = 2) -> GLattice:
    G = group_from_abelian_invariants([order], ["g"])
    return character_lattice(G, {"g": -1})


def inversion_module(n: int) -> FiniteGModule:
    """Z/n with C2 acting by -1."""
    G = group_from_abelian_invariants([2], ["sigma"])
    return FiniteGModule(G, (n,), {"sigma": IntMatrix.from_rows([[-1]])})


BUILTIN_CATALOG: list[dict] = [
    *(
        {"name": f"xs-flasque-s0-{s0}", "kind": "xs_flasque", "params": {"s0": s0}, "expected": {"flasque": True}}
        for s0 in (1, 2, 4, 8)
    ),
    *(
        {"name": f"resolution-s0-{s0}", "kind": "resolution", "params": {"s0": s0}, "expected": {"ok": True}}
        for s0 in (1, 2, 4, 8)
    ),
    {
        "name": "kernel-order-3-2-3",
        "kind": "kernel_order",
        "params": {"s": 3, "s0": 2, "m": 3},
        "expected": {"cokernel": "Z/8", "two_part_order": 8},
    },
    {
        "name": "kernel-order-4-4-3",
        "kind": "kernel_order",
        "params": {"s": 4, "s0": 4, "m": 3},
        "expected": {"cokernel": "Z/80", "two_part_order": 16},
    },
    *(
        {
            "name": f"ind-copies-s0-{s0}-k-{k}",
            "kind": "ind_copies",
            "params": {"s0": s0, "k": k},
            "expected": {"flasque": True},
        }
        for s0 in (2, 4)
        for k in (2, 3)
    ),
    {"name": "family-3-2", "kind": "family", "params": {"s": 3, "s0": 2}, "expected": {"ok": True}},
    {"name": "family-4-4", "kind": "family", "params": {"s": 4, "s0": 4}, "expected": {"ok": True}},
    {"name": "cyclic-inversion-3", "kind": "cyclic_inversion", "params": {"n": 3}, "expected": {"ok": True}},
    {"name": "cyclic-inversion-5", "kind": "cyclic_inversion", "params": {"n": 5}, "expected": {"ok": True}},
    {
        "name": "rclasses-Q(sqrt 17)-s3",
        "kind": "rclasses",
        "params": {"base": "Q(sqrt 17)", "s": 3},
        "expected": {"r": 2, "S_size": 2, "Sf_size": 2},
    },
    {
        "name": "rclasses-Q-s3",
        "kind": "rclasses",
        "params": {"base": "Q", "s": 3},
        "expected": {"r": 1, "S_size": 1, "Sf_size": 1},
    },
    {
        "name": "rclasses-Q3-s3-a3",
        "kind": "rclasses",
        "params": {"base": "Qp:3", "s": 3, "a": 3},
        "expected": {"r": 2},
    },
    {
        "name": "connector-6-3",
        "kind": "connector",
        "params": {"a": "6", "b": "3"},
        "expected": {"q": ["1", "2"], "p": ["-1", "1", "6"]},
    },
    {"name": "choose-m-3-2", "kind": "choose_m", "params": {"s": 3, "s0": 2}, "expected": {"m": 3}},
    {"name": "choose-m-4-4", "kind": "choose_m", "params": {"s": 4, "s0": 4}, "expected": {"m": 3}},
]


def _run_xs_flasque(p):
    sweep = is_flasque(build_XS(p["s0"]))
    return {"flasque": sweep.ok, "subgroups": len(sweep.reports)}


def _run_resolution(p):
    rho = restriction_map(p["s0"])
    XT, incl = build_XT(p["s0"])
    check = check_flasque_resolution(XT, rho.source, rho.target, incl.matrix, rho.matrix)
    return {"ok": check.ok, "failures": check.failures()}


def _run_ind_copies(p):
    sweep = is_flasque(ind_XS(p["s0"], p["k"]))
    out = {"flasque": sweep.ok}
    if sweep.witness is not None:
        out["witness"] = str(sweep.witness.result)
    return out


def _run_family(p):
    params = TorusFamilyParams.default(p["s"], p["s0"], p.get("epsilon", 1))
    if "m" in p:
        params = TorusFamilyParams(p["s"], p["s0"], p["m"], p.get("epsilon", 1))
    report = verify_family(params, mutate=bool(p.get("mutate", False)))
    out = {"ok": report.ok, "items": [i.to_json() for i in report.items]}
    failed = [i for i in report.items if not i.ok]
    if failed:
        out["failed_items"] = [i.name for i in failed]
    return out


def _run_cyclic_inversion(p):
    cover = quasitrivial_cover(inversion_module(p["n"]))
    res = construct_flasque_resolution(cover.XT)
    fl, cofl = is_flasque(res.XS), is_coflasque(res.XS)
    check = check_flasque_resolution(res.XT, res.XQ, res.XS, res.inclusion.matrix, res.projection.matrix)
    return {
        "ok": fl.ok and cofl.ok and check.ok,
        "XS_rank": res.XS.rank,
        "flasque": fl.ok,
        "coflasque": cofl.ok,
        "resolution_ok": check.ok,
    }


def _run_rclasses(p):
    report = r_count(FieldTowerSpec(BaseField.parse(p["base"]), p["s"], p.get("a")))
    return {"r": report.r, "S_size": len(report.S), "Sf_size": len(report.Sf), "S": list(report.S)}


def _run_connector(p):
    return dihedral_connector(Fraction(p["a"]), Fraction(p["b"])).coefficients()


SCENARIO_RUNNERS: dict[str, Callable[[dict], dict]] = {
    "xs_flasque": _run_xs_flasque,
    "resolution": _run_resolution,
    "kernel_order": lambda p: kernel_order_check(p["s"], p["s0"], p["m"]),
    "ind_copies": _run_ind_copies,
    "family": _run_family,
    "cyclic_inversion": _run_cyclic_inversion,
    "rclasses": _run_rclasses,
    "connector": _run_connector,
    "choose_m": lambda p: {"m": choose_m(p["s"], p["s0"])},
}


@dataclass(frozen=True)
class Scenario:
    name: str
    kind: str
    params: dict
    expected: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, d: dict) -> "Scenario":
        if d["kind"] not in SCENARIO_RUNNERS:
            raise ValueError(f"unknown scenario kind {d['kind']!r}")
        return cls(str(d["name"]), d["kind"], dict(d.get("params", {})), dict(d.get("expected", {})))

    def to_json(self) -> dict:
        return {"name": self.name, "kind": self.kind, "params": self.params, "expected": self.expected}


@dataclass
class ItemResult:
    name: str
    ok: bool
    detail: str
    actual: dict

    def to_json(self) -> dict:
        return {"name": self.name, "ok": self.ok, "detail": self.detail, "actual": self.actual}


def load_catalog(path: str | None) -> list[Scenario]:
    raw = BUILTIN_CATALOG if path is None else load_json(path)
    if isinstance(raw, dict):
        raw = raw.get("scenarios", [])
    if not isinstance(raw, list):
        raise InputError(f"{path}: catalog must be a list of scenarios")
    scenarios = [_parse_or_fail(path or "catalog", "scenario", Scenario.from_json, d) for d in raw]
    names = [s.name for s in scenarios]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise InputError(f"duplicate scenario names: {', '.join(dupes)}")
    return scenarios


def run_scenario(sc: Scenario) -> ItemResult:
    try:
        actual = SCENARIO_RUNNERS[sc.kind](sc.params)
    except (KeyError, TypeError, ValueError, FieldError, FamilyError, LatticeError, GroupError) as exc:
        return ItemResult(sc.name, False, f"error: {exc}", {})
    mismatches = [f"{k}: expected {v!r}, got {actual.get(k)!r}" for k, v in sc.expected.items() if actual.get(k) != v]
    if mismatches:
        return ItemResult(sc.name, False, "; ".join(mismatches), actual)
    detail = ", ".join(f"{k}={actual[k]}" for k in sc.expected) or "ran"
    return ItemResult(sc.name, True, detail, actual)


def cmd_catalog(args) -> Outcome:
    scenarios = load_catalog(args.catalog)
    text = "\n".join(f"{s.name:28s} {s.kind:17s} {json.dumps(s.params)}" for s in scenarios)
    return Outcome(EXIT_OK, [s.to_json() for s in scenarios], text)


def cmd_verify(args) -> Outcome:
    scenarios = load_catalog(args.catalog)
    if args.only:
        wanted = set(args.only)
        unknown = wanted - {s.name for s in scenarios}
        if unknown:
            raise InputError(f"unknown scenario(s): {', '.join(sorted(unknown))}")
        scenarios = [s for s in scenarios if s.name in wanted]
    results = fanout(run_scenario, scenarios)
    ok = all(r.ok for r in results)
    width = max((len(r.name) for r in results), default=4)
    lines = [f"[{'PASS' if r.ok else 'FAIL'}] {r.name:{width}s}  {r.detail}" for r in results]
    failed = [r.name for r in results if not r.ok]
    lines.append(f"{len(results) - len(failed)}/{len(results)} items passed")
    if failed:
        lines.append(f"failed: {', '.join(failed)}")
    data = {"ok": ok, "items": [r.to_json() for r in results], "failed": failed}
    return Outcome(EXIT_OK if ok else EXIT_FALSE, data, "\n".join(lines))


def cmd_export(args) -> Outcome:
    """Write one of the built-in lattices as JSON."""
    kind = args.kind
    try:
        if kind == "xs":
            X = build_XS(args.s0)
        elif kind == "xt":
            X = build_XT(args.s0)[0]
        elif kind == "xq":
            X = restriction_map(args.s0).source
        elif kind == "ind-xs":
            X = ind_XS(args.s0, args.k)
        elif kind == "sign":
            X = sign_lattice(args.order)
        elif kind == "trivial":
            X = trivial_lattice(group_from_abelian_invariants([args.order], ["g"]), args.rank)
        elif kind == "regular":
            X = regular_module(group_from_abelian_invariants([args.order], ["g"]))
        elif kind == "empty":
            X = trivial_lattice(group_from_abelian_invariants([args.order], ["g"]), 0)
        elif kind == "coset":
            G = group_from_abelian_invariants([args.order], ["g"])
            step = args.order // args.subgroup_order
            if args.order % args.subgroup_order:
                raise InputError("subgroup order must divide the group order")
            X = permutation_module(G, [step * i for i in range(args.subgroup_order)])
        else:
            raise InputError(f"unknown lattice kind {kind!r}")
    except FamilyError as exc:
        raise InputError(str(exc)) from exc
    data = X.to_json()
    return Outcome(EXIT_OK, data, json.dumps(data))


# ------------------------------------------------------------------- parser


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--json", action="store_true", default=d if suppress else False, help="machine-readable output")
    p.add_argument("--quiet", action="store_true", default=d if suppress else False, help="print nothing; exit code only")
    p.add_argument("--catalog", metavar="FILE", default=d, help="scenario catalog overriding the built-in one")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flasque-kit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("tate", parents=[common], help="Tate cohomology of a lattice file")
    p.add_argument("lattice", help="lattice JSON file ('-' for stdin)")
    p.add_argument("--subgroup", default="all", help="'all', 'cyclic', or comma list of elements (default all)")
    p.add_argument("--degree", type=int, default=-1, help="-1, 0 or 1 (default -1)")
    p.set_defaults(func=cmd_tate)

    p = sub.add_parser("flasque-check", parents=[common], help="exit 0 iff the lattice is flasque")
    p.add_argument("lattice")
    p.set_defaults(func=cmd_flasque_check)

    p = sub.add_parser("resolution", parents=[common], help="check a flasque resolution")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--s0", type=int, help="use the built-in family lattices")
    g.add_argument("--input", metavar="FILE", help="JSON with XT, XQ, XS, inclusion, projection")
    g.add_argument("--construct", metavar="LATTICE", help="build a resolution of this X(T) and check it")
    p.add_argument("--emit", action="store_true", help="include the checked lattices and maps in --json output")
    p.set_defaults(func=cmd_resolution)

    p = sub.add_parser("rclasses", parents=[common], help="R-equivalence class count for a tower")
    p.add_argument("--base", required=True, help="Q, 'Q(sqrt D)' or Qp:P")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--a", type=int, default=None, help="twist parameter (omit for the untwisted tower)")
    p.set_defaults(func=cmd_rclasses)

    p = sub.add_parser("connector", parents=[common], help="polynomials q | p joining -1 to a")
    # let negative fractions such as -1/2 parse as positionals
    p._negative_number_matcher = re.compile(r"^-\d+(/\d+)?$|^-\d*\.\d+$")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_connector)

    p = sub.add_parser("catalog", parents=[common], help="list the scenario catalog")
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("verify", parents=[common], help="run every catalog scenario")
    p.add_argument("--only", nargs="+", metavar="NAME", help="run only these scenarios")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export", parents=[common], help="print a built-in lattice as JSON")
    p.add_argument("kind", choices=["xs", "xt", "xq", "ind-xs", "sign", "trivial", "regular", "empty", "coset"])
    p.add_argument("--s0", type=int, default=2)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--rank", type=int, default=1)
    p.add_argument("--subgroup-order", type=int, default=1)
    p.set_defaults(func=cmd_export)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return emit(args, args.func(args))
    except InputError as exc:
        if not getattr(args, "quiet", False):
            print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
