"""Command-line entry point.

Every command writes JSON (or DOT for ``dot``) to standard output and
diagnostics to standard error.  Exit status is 0 on success, 1 when a
checked computation fails (exhausted budget, failed audit), and 2 for usage
or parse errors.
"""

from __future__ import annotations

import argparse
import json
import random
import sys

from . import io
from .eppa import extend_in_cover, ho_cover
from .errors import BudgetExhausted, ParseError, SasGraphError, StreamExhausted
from .graph import Graph, PartialMap, check_partial_automorphism, classify
from .oracle import HashOracle, TowerOracle, back_and_forth
from .splitting import (
    AutoHandle,
    TreeParams,
    audit_tree,
    cover_oracle,
    default_sigmas,
    extension_tree,
    split,
    tower_handles,
)
from .tower import Branch, LimitMap, build_tower, check_lift, lift_partial_automorphism

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _read_graph(path: str | None) -> Graph:
    if path is None or path == "-":
        return io.parse_graph(sys.stdin.read())
    try:
        with open(path, encoding="utf-8") as fh:
            return io.parse_graph(fh.read())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True)


def _load_json_arg(text: str, what: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{what}: {exc.msg}", f"column {exc.colno}") from None


def _pairs(value, where: str) -> list[tuple]:
    if not isinstance(value, list) or not all(isinstance(p, list) and len(p) == 2 for p in value):
        raise ParseError("expected a list of pairs", where)
    return [tuple(p) for p in value]


def cmd_classify(args) -> int:
    g = _read_graph(args.inp)
    label = classify(g, args.cap)
    out = {"class": label.kind.value, "extensional": label.extensional}
    if args.cap is not None:
        out["homogeneous_cap"] = label.homogeneous_cap
        out["homogeneous"] = label.homogeneous
    _emit(_json(out), args.out)
    return EXIT_OK


def cmd_cover(args) -> int:
    g = _read_graph(args.inp)
    cover = ho_cover(g, "full")
    _emit(io.serialize_graph(cover.to_graph(), provenance="valuation cover"), args.out)
    print(f"cover: {cover.left_size} x {cover.right_size}", file=sys.stderr)
    return EXIT_OK


def cmd_extend(args) -> int:
    g = _read_graph(args.inp)
    doc = _load_json_arg(args.map, "--map")
    if not isinstance(doc, dict):
        raise ParseError("map must be an object", "--map")
    try:
        p = PartialMap(tuple(sorted(_pairs(doc.get("left", []), "left"))), tuple(_pairs(doc.get("right", []), "right")))
    except ValueError as exc:
        raise ParseError(str(exc), "--map") from None
    if not check_partial_automorphism(g, p):
        print("not a partial automorphism", file=sys.stderr)
        _emit(_json({"verified": False}), args.out)
        return EXIT_FAIL
    aut = extend_in_cover(g, p)
    cover = ho_cover(g, "full")
    ok = cover.verify(aut) and cover.agrees_on_embedding(aut, p)
    t = cover.restrict(aut)
    _emit(
        _json(
            {
                "verified": ok,
                "cover": [cover.left_size, cover.right_size],
                "base_left": list(aut.base_left),
                "base_right": list(aut.base_right),
                "flips": list(aut.flips),
                "left_perm": list(t.left_perm),
                "right_perm": list(t.right_perm),
            }
        ),
        args.out,
    )
    return EXIT_OK if ok else EXIT_FAIL


def cmd_tower(args) -> int:
    t = build_tower(args.stages, args.k)
    _emit(_json(t.manifest()), args.out)
    return EXIT_OK


def cmd_lift(args) -> int:
    doc = _load_json_arg(args.map, "--map")
    if not isinstance(doc, dict):
        raise ParseError("map must be an object", "--map")
    left = _pairs(doc.get("left", []), "left")
    right = [(Branch(tuple(a)), Branch(tuple(b))) for a, b in _pairs(doc.get("right", []), "right")]
    f = LimitMap(tuple(sorted(left)), tuple(right))
    t = build_tower(args.stages, args.k)
    lift = lift_partial_automorphism(t, f)
    problems = check_lift(t, lift)
    _emit(
        _json(
            {
                "n0": lift.n0,
                "stages": {
                    str(n): {"total": not isinstance(m, PartialMap), "size": len(m.left_perm) if not isinstance(m, PartialMap) else len(m)}
                    for n, m in sorted(lift.f_bar.items())
                },
                "problems": problems,
            }
        ),
        args.out,
    )
    return EXIT_FAIL if problems else EXIT_OK


def cmd_bnf(args) -> int:
    a, b = HashOracle(args.seed_a), HashOracle(args.seed_b)
    try:
        m = back_and_forth(a, b, args.steps, args.budget)
    except BudgetExhausted as exc:
        part = exc.partial or {}
        pm = part.get("map")
        _emit(
            _json(
                {
                    "ok": False,
                    "error": str(exc),
                    "turn": part.get("turn"),
                    "type": part.get("type"),
                    "partial": pm.to_json() if pm else None,
                }
            ),
            args.out,
        )
        return EXIT_FAIL
    _emit(_json({"ok": True, "identity": m.is_identity(), "size": len(m), "map": m.to_json()}), args.out)
    return EXIT_OK


def _split_setup(args):
    if args.oracle == "tower":
        o = TowerOracle(build_tower(args.stages, args.k))
        G = tower_handles(o, 2, seed=args.seed)
    elif args.oracle == "cover":
        rng = random.Random(args.seed)
        base = Graph.from_edges(6, 6, [(x, u) for x in range(6) for u in range(6) if rng.random() < 0.5])
        o, G = cover_oracle(base, 2, seed=args.seed)
    else:
        o = HashOracle(args.seed)
        G = [AutoHandle.identity(o)]
    return o, G


def cmd_split(args) -> int:
    o, G = _split_setup(args)
    sigmas = default_sigmas(o, G, args.steps, seed=args.seed)
    try:
        trace = split(o, G, sigmas, budget=args.budget)
    except (BudgetExhausted, StreamExhausted) as exc:
        part = exc.partial
        _emit(_json({"ok": False, "error": str(exc), "partial": part.to_json() if part else None}), args.out)
        return EXIT_FAIL
    _emit(_json({"ok": True, "generators": [g.name for g in G], "trace": trace.to_json()}), args.out)
    return EXIT_OK


def cmd_tree(args) -> int:
    o, G = _split_setup(args)
    params = TreeParams(steps=args.steps, probe=args.probe, budget=args.budget, seed=args.seed)
    try:
        root = extension_tree(o, G, args.depth, params)
    except (BudgetExhausted, StreamExhausted) as exc:
        print(_json({"ok": False, "error": str(exc)}))
        return EXIT_FAIL
    problems = audit_tree(root, args.probe)
    certs = [n.certificate for n in root.walk() if n.certificate is not None]
    for c in certs:
        print(c.line())
    summary = {
        "ok": not problems,
        "certificates": len(certs),
        "leaves": len(root.leaves()),
        "problems": problems,
    }
    print(_json(summary))
    if args.out:
        _emit(_json(root.to_json()), args.out)
    return EXIT_OK if not problems else EXIT_FAIL


def cmd_dot(args) -> int:
    g = _read_graph(args.inp)
    text = io.export_dot(g)
    if args.out:
        _emit(text, args.out)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sasgraph", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        sp = sub.add_parser(name, help=help_text, formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        sp.set_defaults(func=func)
        sp.add_argument("--out", default=None, help="write the result to this file")
        return sp

    def graph_in(sp):
        sp.add_argument("--in", dest="inp", default=None, help="graph document (default: stdin)")

    def tower_flags(sp, stages):
        sp.add_argument("--stages", type=int, default=stages, help="tower depth")
        sp.add_argument("--k", type=int, default=3, help="magic bound at every magic stage")

    sp = add("classify", cmd_classify, "classify a finite graph")
    graph_in(sp)
    sp.add_argument("--cap", type=int, default=None, help="also test homogeneity up to this size")

    graph_in(add("cover", cmd_cover, "full valuation cover of a graph"))

    sp = add("extend", cmd_extend, "extend a partial automorphism inside the cover")
    graph_in(sp)
    sp.add_argument("--map", required=True, help='JSON, e.g. {"left": [[0, 1]], "right": [[0, 1]]}')

    tower_flags(add("tower", cmd_tower, "build a tower and print its manifest"), 5)

    sp = add("lift", cmd_lift, "lift a partial isomorphism of the limit")
    tower_flags(sp, 5)
    sp.add_argument("--map", required=True, help='JSON, e.g. {"left": [[0, 1]], "right": [[[1], [2]]]}')

    sp = add("bnf", cmd_bnf, "back-and-forth between two hash oracles")
    sp.add_argument("--seed-a", type=int, default=1)
    sp.add_argument("--seed-b", type=int, default=2)
    sp.add_argument("--steps", type=int, default=40)
    sp.add_argument("--budget", type=int, default=100_000, help="candidates per turn")

    for name, func, help_text in (
        ("split", cmd_split, "run one split and print its trace"),
        ("tree", cmd_tree, "build an extension tree and print certificates"),
    ):
        sp = add(name, func, help_text)
        sp.add_argument("--oracle", choices=("tower", "cover", "hash"), default="tower")
        tower_flags(sp, 5)
        sp.add_argument("--seed", type=int, default=1, help="seed for the automorphism sample")
        sp.add_argument("--steps", type=int, default=8, help="conditions per split")
        sp.add_argument("--budget", type=int, default=1 << 20, help="candidates per search")
        if name == "tree":
            sp.add_argument("--depth", type=int, default=3)
            sp.add_argument("--probe", type=int, default=64, help="certificate window N")

    graph_in(add("dot", cmd_dot, "export a graph as DOT"))
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SasGraphError as exc:
        print(f"failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        print(_json({"ok": False, "error": str(exc), "kind": type(exc).__name__}))
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
