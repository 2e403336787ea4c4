"""Finitely presented groups, solution groups and coset enumeration.

Words are tuples of nonzero integers: ``+(i+1)`` is generator ``i`` and
``-(i+1)`` its inverse.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .relstruct import LinearStructure, as_linear

DEFAULT_MAX_COSETS = 10**6


class PresentationError(ValueError):
    pass


def inverse(word: Sequence[int]) -> tuple:
    return tuple(-x for x in reversed(word))


def free_reduce(word: Sequence[int]) -> tuple:
    out: list[int] = []
    for x in word:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def commutator(u: Sequence[int], v: Sequence[int]) -> tuple:
    """[u, v] = u v u^-1 v^-1."""
    return tuple(u) + tuple(v) + inverse(u) + inverse(v)


@dataclass(frozen=True)
class GroupPresentation:
    generators: tuple
    relators: tuple = ()

    def __post_init__(self):
        gens = tuple(str(g) for g in self.generators)
        if len(set(gens)) != len(gens):
            raise PresentationError("duplicate generator names")
        rels = tuple(tuple(int(x) for x in r) for r in self.relators)
        for r in rels:
            self._check_word(r, len(gens))
            if not r:
                raise PresentationError("empty relator")
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "relators", rels)

    @staticmethod
    def _check_word(word, ngens):
        for x in word:
            if x == 0 or abs(x) > ngens:
                raise PresentationError(f"letter {x} does not name a generator")

    def check_word(self, word) -> tuple:
        word = tuple(int(x) for x in word)
        self._check_word(word, len(self.generators))
        return word

    def generator(self, name: str) -> int:
        """1-based letter for a generator name."""
        try:
            return self.generators.index(name) + 1
        except ValueError:
            raise PresentationError(f"unknown generator {name!r}") from None

    def parse(self, text: str) -> tuple:
        return parse_word(text, self.generators)

    def format(self, word: Sequence[int]) -> str:
        parts = []
        for x in word:
            name = self.generators[abs(x) - 1]
            parts.append(name if x > 0 else f"{name}^-1")
        return " ".join(parts) if parts else "1"


# -- word parsing ----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(\^-?\d+|[\[\](),*]|[A-Za-z_][A-Za-z0-9_']*|\S)")


def parse_word(text: str, generators: Sequence[str]) -> tuple:
    """Parse words like ``[x1,x5]J^-1``, ``(a b)^2``, ``a*b^-1``.

    Commutators follow ``[u, v] = u v u^-1 v^-1``. ``1`` is the empty word.
    """
    tokens = [t for t in _TOKEN.findall(text) if t.strip()]
    pos = 0
    names = {g: i + 1 for i, g in enumerate(generators)}

    def peek():
        return tokens[pos] if pos < len(tokens) else None

    def take():
        nonlocal pos
        if pos >= len(tokens):
            raise PresentationError(f"unexpected end of word {text!r}")
        tok = tokens[pos]
        pos += 1
        return tok

    def power(word):
        tok = peek()
        if tok is not None and tok.startswith("^"):
            take()
            e = int(tok[1:])
            base = word if e >= 0 else inverse(word)
            return base * abs(e)
        return word

    def atom():
        tok = peek()
        if tok == "(":
            take()
            w = sequence({")"})
            if take() != ")":
                raise PresentationError("expected ')'")
            return power(w)
        if tok == "[":
            take()
            u = sequence({","})
            if take() != ",":
                raise PresentationError("expected ',' in commutator")
            v = sequence({"]"})
            if take() != "]":
                raise PresentationError("expected ']'")
            return power(commutator(u, v))
        if tok == "1":
            take()
            return power(())
        if tok in names:
            take()
            return power((names[tok],))
        raise PresentationError(f"unexpected token {tok!r} in word {text!r}")

    def sequence(stops):
        word: tuple = ()
        while peek() is not None and peek() not in stops:
            if peek() == "*":
                take()
                continue
            word += atom()
        return word

    word = sequence(set())
    if pos != len(tokens):
        raise PresentationError(f"trailing input in word {text!r}")
    return word


# -- constructions --------------------------------------------------------------


@dataclass(frozen=True)
class SolutionGroupSpec:
    presentation: GroupPresentation
    variable_generators: dict = field(compare=False)  # element -> 1-based letter
    j_generator: int | None = None

    def x(self, element: int) -> int:
        return self.variable_generators[element]


def _generator_names(A: LinearStructure) -> list[str]:
    names = []
    for a in range(A.num_variables):
        label = A.labels.get(a)
        if label is not None and re.fullmatch(r"[A-Za-z0-9_]+", label):
            names.append(f"x{label}")
        else:
            names.append(f"x{a}")
    if len(set(names)) != len(names):
        names = [f"x{a}" for a in range(A.num_variables)]
    return names


def solution_group(A, homogeneous: bool = False) -> SolutionGroupSpec:
    """Gamma(A), or Gamma_H(A) for a homogeneous system when ``homogeneous``."""
    A = as_linear(A)
    if homogeneous and not A.is_homogeneous:
        raise PresentationError("homogeneous solution group needs a homogeneous structure")
    names = _generator_names(A)
    n = A.num_variables
    gens = names if homogeneous else names + ["J"]
    J = None if homogeneous else n + 1
    rels: list[tuple] = []
    for a in range(1, n + 1):
        rels.append((a, a))
    if J is not None:
        rels.append((J, J))
        for a in range(1, n + 1):
            rels.append(commutator((a,), (J,)))
    for rhs, vs in A.constraints:
        word = tuple(v + 1 for v in vs)
        if rhs and J is not None:
            word += (-J,)
        word = free_reduce(word)
        if word:
            rels.append(word)
        for i in range(len(vs)):
            for j in range(i + 1, len(vs)):
                if vs[i] != vs[j]:
                    rels.append(commutator((vs[i] + 1,), (vs[j] + 1,)))
    seen = set()
    unique = []
    for r in rels:
        if r not in seen:
            seen.add(r)
            unique.append(r)
    pres = GroupPresentation(tuple(gens), tuple(unique))
    return SolutionGroupSpec(pres, {a: a + 1 for a in range(n)}, J)


def combine(g1: GroupPresentation, g2: GroupPresentation, amalgamation=None) -> GroupPresentation:
    """Free product of g1 and g2; each pair ``(u, v)`` adds the relator u^-1 v."""
    n1 = len(g1.generators)
    names = list(g1.generators)
    for g in g2.generators:
        name = g
        while name in names:
            name += "'"
        names.append(name)

    def shift(word):
        return tuple(x + n1 if x > 0 else x - n1 for x in word)

    rels = list(g1.relators) + [shift(r) for r in g2.relators]
    for u, v in amalgamation or ():
        u = g1.check_word(u)
        v = g2.check_word(v)
        r = free_reduce(inverse(u) + shift(v))
        if r:
            rels.append(r)
    return GroupPresentation(tuple(names), tuple(rels))


def quotient_by_normal_closure(g: GroupPresentation, words: Iterable[Sequence[int]]) -> GroupPresentation:
    extra = []
    for w in words:
        w = free_reduce(g.check_word(w))
        if w:
            extra.append(w)
    return GroupPresentation(g.generators, g.relators + tuple(extra))


def cyclic_group(n: int, name: str = "a") -> GroupPresentation:
    return GroupPresentation((name,), ((1,) * n,))


# -- coset enumeration ------------------------------------------------------------


COMPLETE = "complete"
EXCEEDED = "exceeded-limit"


@dataclass
class CosetTable:
    """Result of coset enumeration.

    ``table[c][2*i]`` is the image of coset ``c`` under generator ``i``,
    ``table[c][2*i+1]`` under its inverse. Row 0 is the subgroup coset.
    """

    presentation: GroupPresentation
    subgroup: tuple
    table: list
    status: str
    cosets_defined: int = 0

    @property
    def complete(self) -> bool:
        return self.status == COMPLETE

    @property
    def index(self) -> int | None:
        return len(self.table) if self.complete else None

    def column(self, letter: int) -> int:
        return 2 * (abs(letter) - 1) + (1 if letter < 0 else 0)

    def act(self, coset: int, word: Sequence[int]) -> int:
        for x in word:
            coset = self.table[coset][self.column(x)]
        return coset

    def permutation(self, word: Sequence[int]) -> list[int]:
        return [self.act(c, word) for c in range(len(self.table))]


class _Enumerator:
    def __init__(self, pres: GroupPresentation, subgroup, max_cosets: int):
        ngens = len(pres.generators)
        self.ngens = ngens
        self.max_cosets = max_cosets
        # involutions share one column for x and x^-1
        squares = {r[0] for r in pres.relators if len(r) == 2 and r[0] == r[1]}
        squares |= {-r[0] for r in pres.relators if len(r) == 2 and r[0] == r[1] and r[0] < 0}
        self.col = {}
        self.invc = []
        ncols = 0
        for g in range(1, ngens + 1):
            if g in squares or -g in squares:
                self.col[g] = self.col[-g] = ncols
                self.invc.append(ncols)
                ncols += 1
            else:
                self.col[g], self.col[-g] = ncols, ncols + 1
                self.invc.extend([ncols + 1, ncols])
                ncols += 2
        self.ncols = ncols
        self.rels = self._prepare(pres.relators)
        self.subgroup = [self._reduce([self.col[x] for x in w]) for w in subgroup]
        self.table: list[list[int]] = [[-1] * ncols]
        self.parent = [0]
        self.defined = 1

    def _reduce(self, cols: list[int]) -> list[int]:
        out: list[int] = []
        for c in cols:
            if out and out[-1] == self.invc[c]:
                out.pop()
            else:
                out.append(c)
        return out

    def _prepare(self, relators) -> list[list[int]]:
        """Cyclically reduced column words, one per rotation/inversion class."""
        seen = set()
        out = []
        for r in relators:
            w = self._reduce([self.col[x] for x in r])
            while len(w) > 1 and w[0] == self.invc[w[-1]]:
                w = w[1:-1]
            if not w:
                continue
            inv = [self.invc[c] for c in reversed(w)]
            key = min(tuple(v[i:] + v[:i]) for v in (w, inv) for i in range(len(v)))
            if key not in seen:
                seen.add(key)
                out.append((len(key), key))
        # canonical order: the run does not depend on how relators were listed
        out.sort()
        return [list(key) for _, key in out]

    def find(self, c: int) -> int:
        p = self.parent
        root = c
        while p[root] != root:
            root = p[root]
        while p[c] != root:
            p[c], c = root, p[c]
        return root

    def define(self, c: int, x: int) -> int:
        if self.defined >= self.max_cosets:
            raise _Overflow
        d = len(self.table)
        self.table.append([-1] * self.ncols)
        self.parent.append(d)
        self.defined += 1
        self.table[c][x] = d
        self.table[d][self.invc[x]] = c
        return d

    def scan_and_fill(self, c: int, word: list[int]) -> None:
        table, invc = self.table, self.invc
        f = b = c
        i, j = 0, len(word) - 1
        while True:
            while i <= j:
                nxt = table[f][word[i]]
                if nxt < 0:
                    break
                f = nxt
                i += 1
            if i > j:
                if f != b:
                    self.coincidence(f, b)
                return
            while j >= i:
                nxt = table[b][invc[word[j]]]
                if nxt < 0:
                    break
                b = nxt
                j -= 1
            if j < i:
                self.coincidence(f, b)
                return
            if i == j:
                table[f][word[i]] = b
                table[b][invc[word[i]]] = f
                return
            self.define(f, word[i])

    def _merge(self, k: int, l: int, queue: list[int]) -> None:
        k, l = self.find(k), self.find(l)
        if k == l:
            return
        if k > l:
            k, l = l, k
        self.parent[l] = k
        queue.append(l)

    def coincidence(self, a: int, b: int) -> None:
        table, invc = self.table, self.invc
        queue: list[int] = []
        self._merge(a, b, queue)
        qi = 0
        while qi < len(queue):
            e = queue[qi]
            qi += 1
            row = table[e]
            for x in range(self.ncols):
                f = row[x]
                if f < 0:
                    continue
                xi = invc[x]
                if table[f][xi] == e:
                    table[f][xi] = -1
                e1, f1 = self.find(e), self.find(f)
                if table[e1][x] >= 0:
                    self._merge(f1, table[e1][x], queue)
                elif table[f1][xi] >= 0:
                    self._merge(e1, table[f1][xi], queue)
                else:
                    table[e1][x] = f1
                    table[f1][xi] = e1
        for e in queue:
            table[e] = None

    def alive(self, c: int) -> bool:
        return self.parent[c] == c

    def run(self) -> None:
        for w in self.subgroup:
            if w:
                self.scan_and_fill(0, w)
        c = 0
        while c < len(self.table):
            if self.alive(c):
                for w in self.rels:
                    self.scan_and_fill(c, w)
                    if not self.alive(c):
                        break
                if self.alive(c):
                    row = self.table[c]
                    for x in range(self.ncols):
                        if row[x] < 0:
                            self.define(c, x)
            c += 1

    def compact(self) -> list[list[int]]:
        live = [c for c in range(len(self.table)) if self.alive(c)]
        renum = {c: i for i, c in enumerate(live)}
        out = []
        for c in live:
            row = self.table[c]
            full = []
            for g in range(1, self.ngens + 1):
                full.append(renum[self.find(row[self.col[g]])])
                full.append(renum[self.find(row[self.col[-g]])])
            out.append(full)
        return out


class _Overflow(Exception):
    pass


def todd_coxeter(
    g: GroupPresentation,
    subgroup_words: Iterable[Sequence[int]] = (),
    max_cosets: int = DEFAULT_MAX_COSETS,
) -> CosetTable:
    """HLT coset enumeration of the subgroup generated by ``subgroup_words``.

    Returns a table with status ``exceeded-limit`` once more than
    ``max_cosets`` cosets have been allocated; that says nothing about
    whether the index is finite.
    """
    if max_cosets < 1:
        raise ValueError("max_cosets must be >= 1")
    subgroup = tuple(g.check_word(w) for w in subgroup_words)
    en = _Enumerator(g, subgroup, max_cosets)
    try:
        en.run()
    except _Overflow:
        return CosetTable(g, subgroup, [], EXCEEDED, en.defined)
    return CosetTable(g, subgroup, en.compact(), COMPLETE, en.defined)


def group_order(g: GroupPresentation, max_cosets: int = DEFAULT_MAX_COSETS) -> int | None:
    """Order via enumeration over the trivial subgroup; None if the limit was hit."""
    return todd_coxeter(g, (), max_cosets).index


YES, NO, INCONCLUSIVE = "yes", "no", "inconclusive"


def word_is_trivial(g: GroupPresentation, word, max_cosets: int = DEFAULT_MAX_COSETS, table: CosetTable | None = None) -> str:
    """Decide ``word == 1`` through the regular permutation representation."""
    if isinstance(word, str):
        word = g.parse(word)
    word = g.check_word(word)
    if table is None:
        table = todd_coxeter(g, (), max_cosets)
    if not table.complete:
        return INCONCLUSIVE
    perm = table.permutation(word)
    return YES if all(perm[c] == c for c in range(len(perm))) else NO


# -- JSON -----------------------------------------------------------------------------


def presentation_to_json(g: GroupPresentation) -> dict:
    return {"generators": list(g.generators), "relators": [list(r) for r in g.relators]}


def presentation_from_json(doc) -> GroupPresentation:
    try:
        return GroupPresentation(tuple(doc["generators"]), tuple(tuple(r) for r in doc["relators"]))
    except (KeyError, TypeError) as exc:
        raise PresentationError(f"malformed group document: {exc}") from exc
