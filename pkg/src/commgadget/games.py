"""CSP nonlocal games and their exact classical values."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm

from .homsearch import BudgetExceeded
from .relstruct import Structure, as_structure

DEFAULT_STRATEGY_BUDGET = 10**7
KINDS = {"a": "assignment", "assignment": "assignment", "cv": "c-v", "c-v": "c-v", "cc": "c-c", "c-c": "c-c"}


class GameError(ValueError):
    pass


class ValueBudgetExceeded(BudgetExceeded):
    """Strategy enumeration stopped early; ``lower_bound`` is the best value seen."""

    def __init__(self, message, lower_bound: Fraction):
        super().__init__(message, [lower_bound])
        self.lower_bound = lower_bound


@dataclass
class Game:
    """Questions and answers are label lists; the predicate is the set of
    accepted ``(x, y, a, b)`` index quadruples."""

    alice_questions: list
    bob_questions: list
    alice_answers: list
    bob_answers: list
    distribution: dict  # (x, y) -> Fraction
    accept: frozenset
    synchronous: bool = False

    def __post_init__(self):
        self.distribution = {k: Fraction(v) for k, v in self.distribution.items() if v}
        self.accept = frozenset(tuple(q) for q in self.accept)
        if any(v < 0 for v in self.distribution.values()):
            raise GameError("negative question weight")
        if sum(self.distribution.values()) != 1:
            raise GameError("question distribution must sum to 1")
        nx, ny = len(self.alice_questions), len(self.bob_questions)
        na, nb = len(self.alice_answers), len(self.bob_answers)
        for x, y in self.distribution:
            if not (0 <= x < nx and 0 <= y < ny):
                raise GameError(f"question pair {(x, y)} out of range")
        for x, y, a, b in self.accept:
            if not (0 <= x < nx and 0 <= y < ny and 0 <= a < na and 0 <= b < nb):
                raise GameError(f"accept entry {(x, y, a, b)} out of range")
        if self.synchronous:
            if self.alice_questions != self.bob_questions or self.alice_answers != self.bob_answers:
                raise GameError("synchronous game needs matching question and answer sets")
            for x, _, a, b in ((x, y, a, b) for x, y, a, b in self.accept if x == y):
                if a != b:
                    raise GameError("synchronous game accepts different answers to equal questions")

    def V(self, a: int, b: int, x: int, y: int) -> int:
        return int((x, y, a, b) in self.accept)

    def value_of(self, f, g) -> Fraction:
        """Value of the deterministic strategy pair (f, g)."""
        return sum((p for (x, y), p in self.distribution.items() if (x, y, f[x], g[y]) in self.accept), Fraction(0))


# -- building -------------------------------------------------------------------------


def _constraints(A: Structure) -> list[tuple[str, tuple]]:
    return [(s, tuple(t)) for s in A.signature for t in A.relations[s]]


def _label(c) -> str:
    return f"{c[0]}({','.join(map(str, c[1]))})"


def _tuple_label(t) -> str:
    return ",".join(map(str, t))


def _normalise(dist, keys, what: str) -> dict:
    if dist is None:
        return {k: Fraction(1, len(keys)) for k in keys} if keys else {}
    dist = {k: Fraction(v) for k, v in dist.items()}
    unknown = set(dist) - set(keys)
    if unknown:
        raise GameError(f"{what} weights on unknown keys: {sorted(map(str, unknown))[:3]}")
    if any(v < 0 for v in dist.values()) or sum(dist.values()) != 1:
        raise GameError(f"unnormalized {what} distribution")
    return dist


def build_game(A, B, kind: str, dist: dict | None = None) -> Game:
    """The assignment, constraint-variable or constraint-constraint game of (A, B).

    ``dist`` weights constraints ``(R, a)`` (pairs of them for c-c) and
    defaults to uniform.
    """
    A, B = as_structure(A), as_structure(B)
    kind = KINDS.get(kind)
    if kind is None:
        raise GameError("kind must be one of a, cv, cc")
    for s in A.signature:
        if s not in B.signature or B.signature.arity[s] != A.signature.arity[s]:
            raise GameError(f"signature mismatch on {s!r}")
    cons = _constraints(A)

    if kind == "assignment":
        if any(A.signature.arity[s] != 2 for s in A.signature):
            raise GameError("assignment game needs all arities equal to 2")
        pi = _normalise(dist, cons, "constraint")
        qdist: dict = {}
        for (R, (x, y)), p in pi.items():
            qdist[(x, y)] = qdist.get((x, y), Fraction(0)) + p
        related = {}
        for R, (x, y) in cons:
            related.setdefault((x, y), []).append(R)
        accept = set()
        n, m = A.domain_size, B.domain_size
        for x in range(n):
            for y in range(n):
                rels = related.get((x, y), [])
                for a in range(m):
                    for b in range(m):
                        if all((a, b) in B.relations[R] for R in rels):
                            accept.add((x, y, a, b))
        qs = [A.label(x) for x in range(n)]
        ans = [B.label(b) for b in range(m)]
        return Game(qs, list(qs), ans, list(ans), qdist, frozenset(accept), synchronous=False)

    arities = sorted({A.signature.arity[s] for s in A.signature})
    answers = [t for r in arities for t in itertools.product(range(B.domain_size), repeat=r)]
    ans_labels = [_tuple_label(t) for t in answers]
    q_labels = [_label(c) for c in cons]

    if kind == "c-v":
        pi = _normalise(dist, cons, "constraint")
        qdist = {}
        for ci, c in enumerate(cons):
            p = pi.get(c, Fraction(0))
            for i, y in enumerate(c[1]):
                qdist[(ci, y)] = qdist.get((ci, y), Fraction(0)) + p / len(c[1])
        accept = set()
        for ci, (R, xs) in enumerate(cons):
            rel = B.relations[R]
            for ai, t in enumerate(answers):
                if len(t) != len(xs) or t not in rel:
                    continue
                for y in range(A.domain_size):
                    for b in range(B.domain_size):
                        if all(t[i] == b for i, x in enumerate(xs) if x == y):
                            accept.add((ci, y, ai, b))
        bob = [A.label(y) for y in range(A.domain_size)]
        return Game(q_labels, bob, ans_labels, [B.label(b) for b in range(B.domain_size)], qdist, frozenset(accept))

    pairs = list(itertools.product(cons, repeat=2))
    pi = _normalise(dist, pairs, "constraint-pair")
    index = {c: i for i, c in enumerate(cons)}
    qdist = {(index[c1], index[c2]): p for (c1, c2), p in pi.items()}
    good = [[ai for ai, t in enumerate(answers) if len(t) == len(xs) and t in B.relations[R]] for R, xs in cons]
    accept = set()
    for i, (_, xs) in enumerate(cons):
        for j, (_, ys) in enumerate(cons):
            for ai in good[i]:
                t1 = answers[ai]
                for bi in good[j]:
                    t2 = answers[bi]
                    if all(t1[p] == t2[q] for p, x in enumerate(xs) for q, y in enumerate(ys) if x == y):
                        accept.add((i, j, ai, bi))
    return Game(q_labels, list(q_labels), ans_labels, list(ans_labels), qdist, frozenset(accept), synchronous=True)


# -- classical value ------------------------------------------------------------------


@dataclass
class ValueResult:
    value: Fraction
    alice: tuple  # answer index per Alice question
    bob: tuple
    strategies_examined: int
    pruned_answers: dict = field(default_factory=dict)


def _useful_answers(g: Game, side: str) -> list[list[int]]:
    """Per question, answers that can win somewhere; the rest are dominated."""
    if side == "alice":
        n, na = len(g.alice_questions), len(g.alice_answers)
        useful = [set() for _ in range(n)]
        for x, y, a, b in g.accept:
            if (x, y) in g.distribution:
                useful[x].add(a)
    else:
        n, na = len(g.bob_questions), len(g.bob_answers)
        useful = [set() for _ in range(n)]
        for x, y, a, b in g.accept:
            if (x, y) in g.distribution:
                useful[y].add(b)
    # questions that never win keep one answer so strategies stay total
    return [sorted(u) if u else [0] for u in useful] if na else [[] for _ in range(n)]


def solve_classical(
    g: Game,
    synchronous_only: bool = False,
    budget: int = DEFAULT_STRATEGY_BUDGET,
    prune: bool = True,
) -> ValueResult:
    """Best deterministic strategy pair, by exact enumeration.

    Enumerates one player's strategies and lets the other best-respond
    question by question. ``synchronous_only`` enumerates a single shared
    strategy. With ``prune`` off every answer is tried, which is the
    brute-force reference.
    """
    den = lcm(*(p.denominator for p in g.distribution.values())) if g.distribution else 1
    w = {k: int(p * den) for k, p in g.distribution.items()}
    acc = g.accept

    if synchronous_only:
        if g.alice_questions != g.bob_questions or g.alice_answers != g.bob_answers:
            raise GameError("synchronous strategies need matching question and answer sets")
        nq = len(g.alice_questions)
        if prune:
            ua, ub = _useful_answers(g, "alice"), _useful_answers(g, "bob")
            choices = []
            for x in range(nq):
                both = sorted(set(ua[x]) & set(ub[x]))
                choices.append(both or sorted(set(ua[x]) | set(ub[x])) or [0])
        else:
            choices = [list(range(len(g.alice_answers)))] * nq
        by_pair = sorted(w.items())
        best, best_f, count = -1, None, 0
        for f in itertools.product(*choices):
            count += 1
            if count > budget:
                raise ValueBudgetExceeded(f"strategy budget {budget} exceeded", Fraction(max(best, 0), den))
            score = 0
            for (x, y), p in by_pair:
                if (x, y, f[x], f[y]) in acc:
                    score += p
            if score > best:
                best, best_f = score, f
                if best == den:
                    break
        return ValueResult(Fraction(best, den), best_f, best_f, count)

    nx, ny = len(g.alice_questions), len(g.bob_questions)
    ua = _useful_answers(g, "alice") if prune else [list(range(len(g.alice_answers)))] * nx
    ub = _useful_answers(g, "bob") if prune else [list(range(len(g.bob_answers)))] * ny
    size_a = 1
    for c in ua:
        size_a *= len(c)
    size_b = 1
    for c in ub:
        size_b *= len(c)
    enumerate_alice = size_a <= size_b

    # per responder question, the weighted pairs that involve it
    if enumerate_alice:
        lead, resp, n_resp = ua, ub, ny
        incident = [[] for _ in range(ny)]
        for (x, y), p in w.items():
            incident[y].append((x, p))
        win = lambda x, y, a, b: (x, y, a, b) in acc  # noqa: E731
    else:
        lead, resp, n_resp = ub, ua, nx
        incident = [[] for _ in range(nx)]
        for (x, y), p in w.items():
            incident[x].append((y, p))
        win = lambda y, x, b, a: (x, y, a, b) in acc  # noqa: E731

    best, best_pair, count = -1, None, 0
    for f in itertools.product(*lead):
        count += 1
        if count > budget:
            raise ValueBudgetExceeded(f"strategy budget {budget} exceeded", Fraction(max(best, 0), den))
        score = 0
        reply = []
        for q in range(n_resp):
            top, top_r = -1, resp[q][0] if resp[q] else 0
            for r in resp[q]:
                s = sum(p for lq, p in incident[q] if win(lq, q, f[lq], r))
                if s > top:
                    top, top_r = s, r
            score += max(top, 0)
            reply.append(top_r)
        if score > best:
            best = score
            best_pair = (f, tuple(reply)) if enumerate_alice else (tuple(reply), f)
            if best == den:
                break
    return ValueResult(Fraction(best, den), tuple(best_pair[0]), tuple(best_pair[1]), count)


def classical_value(g: Game, synchronous_only: bool = False, budget: int = DEFAULT_STRATEGY_BUDGET) -> Fraction:
    return solve_classical(g, synchronous_only, budget).value


# -- JSON -----------------------------------------------------------------------------


def game_to_json(g: Game) -> dict:
    return {
        "alice_questions": list(map(str, g.alice_questions)),
        "bob_questions": list(map(str, g.bob_questions)),
        "alice_answers": list(map(str, g.alice_answers)),
        "bob_answers": list(map(str, g.bob_answers)),
        "distribution": [
            {"x": x, "y": y, "num": p.numerator, "den": p.denominator} for (x, y), p in sorted(g.distribution.items())
        ],
        "accept": [list(q) for q in sorted(g.accept)],
        "synchronous": g.synchronous,
    }


def game_from_json(doc) -> Game:
    dist = {(int(e["x"]), int(e["y"])): Fraction(int(e["num"]), int(e["den"])) for e in doc["distribution"]}
    return Game(
        list(doc["alice_questions"]),
        list(doc["bob_questions"]),
        list(doc["alice_answers"]),
        list(doc["bob_answers"]),
        dist,
        frozenset(tuple(q) for q in doc["accept"]),
        bool(doc.get("synchronous", False)),
    )
