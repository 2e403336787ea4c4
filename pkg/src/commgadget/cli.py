"""Command-line entry point. Every run prints one JSON report on stdout."""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import fpgroups, games, gadget, homsearch, relstruct, repalg, weighted

EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2


class InputError(Exception):
    pass


class Inconclusive(Exception):
    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


class _Context:
    def __init__(self, args):
        self.args = args
        self.inputs: dict[str, str] = {}

    def load(self, path: str):
        p = Path(path)
        try:
            data = p.read_bytes()
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc.strerror}") from exc
        self.inputs[path] = hashlib.sha256(data).hexdigest()
        try:
            return json.loads(data)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path} is not valid JSON: {exc}") from exc

    def structure(self, path):
        return relstruct.structure_from_json(self.load(path))

    def linear(self, path):
        return relstruct.as_linear(self.structure(path))

    def group(self, path):
        return fpgroups.presentation_from_json(self.load(path))

    def write(self, doc, out):
        if out:
            Path(out).write_text(json.dumps(doc, indent=1, sort_keys=True))
        return doc


def _frac(q: Fraction) -> dict:
    return {"value": str(q), "num": q.numerator, "den": q.denominator}


def _ints(text: str) -> list[int]:
    text = text.strip()
    return [int(t) for t in text.split(",")] if text else []


def _structure_summary(A) -> dict:
    A = relstruct.as_structure(A)
    return {
        "domain_size": A.domain_size,
        "lazy": A.is_lazy,
        "relations": {s: len(A.relations[s]) for s in A.signature},
    }


# -- struct ---------------------------------------------------------------------------


def cmd_struct(ctx, a):
    if a.action == "build":
        A = ctx.structure(a.input)
    elif a.action == "power":
        A = relstruct.power_structure(ctx.structure(a.base), a.exponent)
    elif a.action == "complete":
        A = relstruct.complete_graph(a.n)
    elif a.action == "homogenise":
        A, j = relstruct.homogenise(ctx.linear(a.lin))
    elif a.action == "completion":
        A = relstruct.completion(ctx.structure(a.input))
    elif a.action == "encode":
        target = ctx.structure(a.target) if a.target else None
        G = relstruct.encode_graph(ctx.structure(a.lin), target)
        A = relstruct.completion(G.structure) if a.complete else G.structure
    else:  # catalog
        params = {}
        if a.n is not None:
            params["n"] = a.n
        if a.arities:
            params["arities"] = tuple(_ints(a.arities))
        A = relstruct.catalog_structure(a.name, **params)
    doc = relstruct.structure_to_json(A)
    ctx.write(doc, a.out)
    payload = {"summary": _structure_summary(A)}
    if not a.out:
        payload["structure"] = doc
    return payload


# -- hom / poly -----------------------------------------------------------------------


def cmd_hom(ctx, a):
    X, A = ctx.structure(a.source), ctx.structure(a.target)
    try:
        maps = homsearch.search_mappings(X, A, a.limit, ctx.args.node_budget)
    except homsearch.BudgetExceeded as exc:
        raise Inconclusive(str(exc), {"found": [list(m) for m in exc.found], "lower_bound": len(exc.found)})
    return {"count": len(maps), "mappings": [list(m) for m in maps]}


def cmd_poly(ctx, a):
    A = ctx.structure(a.base)
    try:
        polys = homsearch.enumerate_polymorphisms(A, a.arity, ctx.args.node_budget)
    except homsearch.BudgetExceeded as exc:
        raise Inconclusive(str(exc), {"lower_bound": len(exc.found)})
    decomp = []
    for f in polys:
        d = homsearch.decompose_projection(f)
        decomp.append(None if d is None else {"coordinate": d.coordinate, "permutation": list(d.permutation)})
    return {
        "count": len(polys),
        "all_projections": all(d is not None for d in decomp),
        "decompositions": decomp,
    }


# -- gadget ---------------------------------------------------------------------------


def cmd_gadget(ctx, a):
    if a.action == "build":
        g = gadget.build_commutativity_gadget(ctx.structure(a.base))
        doc = gadget.gadget_to_json(g)
        ctx.write(doc, a.out)
        return {
            "exponent": g.exponent,
            "domain_size": g.structure.domain_size,
            "x": list(g.decode(g.x)),
            "y": list(g.decode(g.y)),
            "gadget": doc,
        }
    if a.action == "verify":
        g = gadget.gadget_from_json(ctx.load(a.gadget))
        r = gadget.verify_gadget_property_i(g, a.samples, ctx.args.seed)
        return {
            "valid": r.valid,
            "mode": r.mode,
            "exponent": r.exponent,
            "witnesses": [
                {"pair": list(w.pair), "coordinate": w.coordinate, "checked_tuples": w.checked_tuples, "valid": w.valid}
                for w in r.witnesses
            ],
            "membership_samples": r.membership_samples,
        }
    p = gadget.build_separation_structure(ctx.linear(a.lin))
    stages = {
        "homogenised": p.homogenised,
        "magic_assembly": p.magic_assembly.structure,
        "assembled": p.assembled.structure,
        "result": p.result,
    }
    if a.emit_intermediates:
        os.makedirs(a.emit_intermediates, exist_ok=True)
        for name, S in stages.items():
            ctx.write(relstruct.structure_to_json(S), os.path.join(a.emit_intermediates, f"{name}.json"))
    return {
        "stages": {name: _structure_summary(S) for name, S in stages.items()},
        "glue": {"magic_assembly": len(p.magic_assembly.glue), "assembled": len(p.assembled.glue)},
    }


# -- group ----------------------------------------------------------------------------


def _word_arg(ctx, g, text):
    if os.path.exists(text):
        w = ctx.load(text)
        return g.parse(w) if isinstance(w, str) else g.check_word(w)
    return g.parse(text)


def _table_payload(t):
    return {"status": t.status, "index": t.index, "cosets_defined": t.cosets_defined}


def cmd_group(ctx, a):
    mc = ctx.args.max_cosets
    if a.action == "solution":
        spec = fpgroups.solution_group(ctx.linear(a.lin), a.homogeneous)
        doc = fpgroups.presentation_to_json(spec.presentation)
        ctx.write(doc, a.out)
        return {"group": doc, "relators": len(doc["relators"])}
    if a.action == "tc":
        g = ctx.group(a.group)
        sub = []
        if a.subgroup:
            sub = [g.parse(w) if isinstance(w, str) else w for w in ctx.load(a.subgroup)]
        t = fpgroups.todd_coxeter(g, sub, mc)
        if not t.complete:
            raise Inconclusive("coset limit reached", _table_payload(t))
        return _table_payload(t)
    if a.action == "word":
        g = ctx.group(a.group)
        w = _word_arg(ctx, g, a.word)
        verdict = fpgroups.word_is_trivial(g, w, mc)
        payload = {"word": g.format(w), "trivial": verdict}
        if verdict == fpgroups.INCONCLUSIVE:
            raise Inconclusive("coset limit reached", payload)
        return payload
    if a.action == "combine":
        g1, g2 = ctx.group(a.group1), ctx.group(a.group2)
        pairs = []
        if a.amalgamation:
            for u, v in ctx.load(a.amalgamation):
                pairs.append((g1.parse(u) if isinstance(u, str) else u, g2.parse(v) if isinstance(v, str) else v))
        doc = fpgroups.presentation_to_json(fpgroups.combine(g1, g2, pairs))
        ctx.write(doc, a.out)
        return {"group": doc}
    g = ctx.group(a.group)
    words = [g.parse(w) if isinstance(w, str) else w for w in ctx.load(a.words)] if os.path.exists(a.words) else [g.parse(a.words)]
    doc = fpgroups.presentation_to_json(fpgroups.quotient_by_normal_closure(g, words))
    ctx.write(doc, a.out)
    return {"group": doc}


# -- rep ------------------------------------------------------------------------------


def _violations(r):
    return repalg.report_to_json(r)


def cmd_rep(ctx, a):
    tol = ctx.args.tol
    if a.action == "check":
        rep = repalg.representation_from_json(ctx.load(a.rep))
        return _violations(repalg.check_representation(rep, tol, a.cap, ctx.args.seed))
    if a.action == "compose":
        r1 = repalg.representation_from_json(ctx.load(a.rep1))
        r2 = repalg.representation_from_json(ctx.load(a.rep2))
        doc = repalg.representation_to_json(repalg.compose(r1, r2))
        ctx.write(doc, a.out)
        return {"dimension": doc["dimension"], "representation": doc}
    if a.action == "character":
        X, A = ctx.structure(a.source), ctx.structure(a.target)
        f = homsearch.Homomorphism(X, A, _ints(a.mapping))
        doc = repalg.representation_to_json(repalg.character_of_hom(f))
        ctx.write(doc, a.out)
        return {"dimension": 1, "representation": doc}
    if a.action == "magic-unitary":
        u = repalg.magic_unitary_from_json(ctx.load(a.unitary)) if a.unitary else repalg.block_magic_unitary(a.theta)
        rep = repalg.magic_unitary_rep(u, a.coordinate, a.arity, tol)
        doc = repalg.representation_to_json(rep)
        ctx.write(doc, a.out)
        report = repalg.check_representation(rep, tol, a.cap, ctx.args.seed)
        return {"dimension": rep.dimension, "check": _violations(report)}
    if a.action == "pi":
        rep = repalg.representation_from_json(ctx.load(a.rep))
        M = repalg.pi_projection(rep, _ints(a.subset))
        return {"matrix": [[[float(z.real), float(z.imag)] for z in row] for row in M]}
    if a.action == "identities":
        rep = repalg.representation_from_json(ctx.load(a.rep))
        r = repalg.complete_graph_identities(rep, tol)
        return {"ok": r.ok, "residuals": r.residuals, "counts": r.counts}
    s = weighted.strategy_from_json(ctx.load(a.strategy))
    if a.action == "commdef":
        return {"comm_defect": weighted.comm_defect(s, a.x, a.y)}
    A, B = ctx.structure(a.source), ctx.structure(a.target)
    w = weighted.weights_from_json(ctx.load(a.dist)) if a.dist else None
    fn = {"a": weighted.defect_assignment, "cv": weighted.defect_cv, "cc": weighted.defect_cc}[a.flavor]
    return weighted.report_to_json(fn(s, A, B, w))


# -- game -----------------------------------------------------------------------------


def _dist_doc(doc):
    # [{"key": {"symbol", "tuple"} or [k1, k2], "num", "den"}]
    out = {}
    for e in doc:
        k = e["key"]
        key = ((k[0]["symbol"], tuple(k[0]["tuple"])), (k[1]["symbol"], tuple(k[1]["tuple"]))) if isinstance(k, list) else (k["symbol"], tuple(k["tuple"]))
        out[key] = Fraction(int(e["num"]), int(e["den"]))
    return out


def cmd_game(ctx, a):
    if a.action == "build":
        dist = _dist_doc(ctx.load(a.dist)) if a.dist else None
        g = games.build_game(ctx.structure(a.source), ctx.structure(a.target), a.kind, dist)
        doc = games.game_to_json(g)
        ctx.write(doc, a.out)
        return {
            "questions": [len(g.alice_questions), len(g.bob_questions)],
            "answers": [len(g.alice_answers), len(g.bob_answers)],
            "synchronous": g.synchronous,
            "game": doc if not a.out else None,
        }
    g = games.game_from_json(ctx.load(a.game))
    try:
        r = games.solve_classical(g, a.synchronous, a.budget)
    except games.ValueBudgetExceeded as exc:
        raise Inconclusive(str(exc), {"lower_bound": _frac(exc.lower_bound)})
    return {
        **_frac(r.value),
        "synchronous": a.synchronous,
        "alice": list(r.alice),
        "bob": list(r.bob),
        "strategies_examined": r.strategies_examined,
    }


# -- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="commgadget", description="Commutativity gadgets, solution groups and CSP games.")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=repalg.DEFAULT_TOL)
    p.add_argument("--max-cosets", type=int, default=fpgroups.DEFAULT_MAX_COSETS)
    p.add_argument("--node-budget", type=int, default=homsearch.DEFAULT_NODE_BUDGET)
    p.add_argument("--threads", type=int, default=1, help="accepted for compatibility; searches run single-threaded")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    st = sub.add_parser("struct").add_subparsers(dest="action", required=True, parser_class=_Parser)
    for name in ("build", "completion"):
        q = st.add_parser(name)
        q.add_argument("--input", required=True)
        q.add_argument("--out")
    q = st.add_parser("power")
    q.add_argument("--base", required=True)
    q.add_argument("--exponent", type=int, required=True)
    q.add_argument("--out")
    q = st.add_parser("complete")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--out")
    q = st.add_parser("homogenise")
    q.add_argument("--lin", required=True)
    q.add_argument("--out")
    q = st.add_parser("encode")
    q.add_argument("--lin", required=True)
    q.add_argument("--target")
    q.add_argument("--complete", action="store_true", help="add the completion edge relation")
    q.add_argument("--out")
    q = st.add_parser("catalog")
    q.add_argument("--name", required=True)
    q.add_argument("--n", type=int)
    q.add_argument("--arities")
    q.add_argument("--out")

    q = sub.add_parser("hom").add_subparsers(dest="action", required=True, parser_class=_Parser).add_parser("enumerate")
    q.add_argument("--source", required=True)
    q.add_argument("--target", required=True)
    q.add_argument("--limit", type=int)
    q = sub.add_parser("poly").add_subparsers(dest="action", required=True, parser_class=_Parser).add_parser("enumerate")
    q.add_argument("--base", required=True)
    q.add_argument("--arity", type=int, required=True)

    gd = sub.add_parser("gadget").add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = gd.add_parser("build")
    q.add_argument("--base", required=True)
    q.add_argument("--out")
    q = gd.add_parser("verify")
    q.add_argument("--gadget", required=True)
    q.add_argument("--samples", type=int, default=gadget.DEFAULT_SAMPLES)
    q = gd.add_parser("separation")
    q.add_argument("--lin", required=True)
    q.add_argument("--emit-intermediates")

    gr = sub.add_parser("group").add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = gr.add_parser("solution")
    q.add_argument("--lin", required=True)
    q.add_argument("--homogeneous", action="store_true")
    q.add_argument("--out")
    q = gr.add_parser("tc")
    q.add_argument("--group", required=True)
    q.add_argument("--subgroup")
    q = gr.add_parser("word")
    q.add_argument("--group", required=True)
    q.add_argument("--word", required=True)
    q = gr.add_parser("combine")
    q.add_argument("--group1", required=True)
    q.add_argument("--group2", required=True)
    q.add_argument("--amalgamation")
    q.add_argument("--out")
    q = gr.add_parser("quotient")
    q.add_argument("--group", required=True)
    q.add_argument("--words", required=True)
    q.add_argument("--out")

    rp = sub.add_parser("rep").add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = rp.add_parser("check")
    q.add_argument("--rep", required=True)
    q.add_argument("--cap", type=int, default=repalg.DEFAULT_CAP)
    q = rp.add_parser("compose")
    q.add_argument("--rep1", required=True)
    q.add_argument("--rep2", required=True)
    q.add_argument("--out")
    q = rp.add_parser("character")
    q.add_argument("--source", required=True)
    q.add_argument("--target", required=True)
    q.add_argument("--mapping", required=True, help="comma-separated images")
    q.add_argument("--out")
    q = rp.add_parser("magic-unitary")
    q.add_argument("--unitary")
    q.add_argument("--theta", type=float, default=float(np.pi / 4))
    q.add_argument("--coordinate", type=int, default=0)
    q.add_argument("--arity", type=int, default=1)
    q.add_argument("--cap", type=int, default=repalg.DEFAULT_CAP)
    q.add_argument("--out")
    q = rp.add_parser("pi")
    q.add_argument("--rep", required=True)
    q.add_argument("--subset", required=True, help="comma-separated 0-based coordinates")
    q = rp.add_parser("identities")
    q.add_argument("--rep", required=True)
    q = rp.add_parser("defect")
    q.add_argument("--flavor", choices=("a", "cv", "cc"), required=True)
    q.add_argument("--strategy", required=True)
    q.add_argument("--source", required=True)
    q.add_argument("--target", required=True)
    q.add_argument("--dist")
    q = rp.add_parser("commdef")
    q.add_argument("--strategy", required=True)
    q.add_argument("--x", type=int, required=True)
    q.add_argument("--y", type=int, required=True)

    gm = sub.add_parser("game").add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = gm.add_parser("build")
    q.add_argument("--kind", choices=("a", "cv", "cc"), required=True)
    q.add_argument("--source", required=True)
    q.add_argument("--target", required=True)
    q.add_argument("--dist")
    q.add_argument("--out")
    q = gm.add_parser("value")
    q.add_argument("--game", required=True)
    q.add_argument("--synchronous", action="store_true")
    q.add_argument("--budget", type=int, default=games.DEFAULT_STRATEGY_BUDGET)
    return p


COMMANDS = {
    "struct": cmd_struct,
    "hom": cmd_hom,
    "poly": cmd_poly,
    "gadget": cmd_gadget,
    "group": cmd_group,
    "rep": cmd_rep,
    "game": cmd_game,
}

_INPUT_ERRORS = (
    InputError,
    relstruct.StructureError,
    fpgroups.PresentationError,
    repalg.RepresentationError,
    weighted.StrategyError,
    games.GameError,
    KeyError,
    TypeError,
    ValueError,
)


def run(argv=None, stdout=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    stdout = stdout or sys.stdout
    start = time.perf_counter()
    report = {"command": argv, "inputs": {}, "seed": None, "status": "ok", "payload": None}
    code = EXIT_OK
    ctx = None
    try:
        args = build_parser().parse_args(argv)
        report["seed"] = args.seed
        ctx = _Context(args)
        report["payload"] = COMMANDS[args.command](ctx, args)
    except Inconclusive as exc:
        code = EXIT_INCONCLUSIVE
        report["status"] = "inconclusive"
        report["payload"] = exc.payload
        report["message"] = str(exc)
    except homsearch.BudgetExceeded as exc:
        code = EXIT_INCONCLUSIVE
        report["status"] = "inconclusive"
        report["message"] = str(exc)
    except _INPUT_ERRORS as exc:
        code = EXIT_ERROR
        report["status"] = "error"
        report["error"] = f"{type(exc).__name__}: {exc}"
        print(report["error"], file=sys.stderr)
    if ctx is not None:
        report["inputs"] = dict(ctx.inputs)
    report["wall_time"] = round(time.perf_counter() - start, 6)
    stdout.write(json.dumps(report, sort_keys=True, default=str) + "\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
