"""Finite relational structures and the structure-level constructions.

Elements of every structure are the integers ``0 .. domain_size - 1``.
Elements of a power ``A^k`` are mixed-radix integers, little-endian in the
coordinate index: the tuple ``(x_0, ..., x_{k-1})`` is ``sum(x_i * n**i)``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

DEFAULT_THRESHOLD = 10**5
COMPLETION_SYMBOL = "E"

_LR_PATTERN = re.compile(r"^LR\((0|1),(\d+)\)$")


class StructureError(ValueError):
    pass


def lr(b: int, n: int) -> str:
    """Name of the linear relation symbol LR(b, n)."""
    return f"LR({b},{n})"


def parse_lr(symbol: str) -> tuple[int, int] | None:
    m = _LR_PATTERN.match(symbol)
    if m is None:
        return None
    return int(m.group(1)), int(m.group(2))


@dataclass(frozen=True)
class Signature:
    symbols: tuple
    arity: Mapping[str, int]

    def __post_init__(self):
        if len(set(self.symbols)) != len(self.symbols):
            raise StructureError("duplicate relation symbols")
        if set(self.symbols) != set(self.arity):
            raise StructureError("arity map does not match symbol list")
        for s in self.symbols:
            if int(self.arity[s]) < 1:
                raise StructureError(f"symbol {s!r} has arity < 1")
        object.__setattr__(self, "symbols", tuple(self.symbols))
        object.__setattr__(self, "arity", dict(self.arity))

    @classmethod
    def of(cls, spec) -> "Signature":
        if isinstance(spec, Signature):
            return spec
        spec = dict(spec)
        return cls(tuple(spec), spec)

    def __contains__(self, symbol) -> bool:
        return symbol in self.arity

    def __iter__(self):
        return iter(self.symbols)

    def __len__(self):
        return len(self.symbols)

    def __hash__(self):
        return hash((self.symbols, tuple(self.arity[s] for s in self.symbols)))

    def __eq__(self, other):
        if not isinstance(other, Signature):
            return NotImplemented
        return self.symbols == other.symbols and self.arity == other.arity

    def extended(self, symbol: str, arity: int) -> "Signature":
        if symbol in self.arity:
            raise StructureError(f"symbol {symbol!r} already in signature")
        return Signature(self.symbols + (symbol,), {**self.arity, symbol: arity})


# -- relations ---------------------------------------------------------------


class Relation:
    """Common surface of explicit and lazily evaluated relations."""

    arity: int
    is_lazy = False

    def __contains__(self, tup) -> bool:  # pragma: no cover - interface
        raise NotImplementedError

    def __iter__(self) -> Iterator[tuple]:  # pragma: no cover - interface
        raise NotImplementedError

    def __len__(self) -> int:  # pragma: no cover - interface
        raise NotImplementedError

    def tuples(self) -> frozenset:
        return frozenset(self)


class ExplicitRelation(Relation):
    __slots__ = ("arity", "_tuples", "_sorted")

    def __init__(self, arity: int, tuples: Iterable[Sequence[int]]):
        self.arity = arity
        self._tuples = frozenset(tuple(t) for t in tuples)
        self._sorted = None

    def __contains__(self, tup) -> bool:
        return tuple(tup) in self._tuples

    def __iter__(self):
        if self._sorted is None:
            self._sorted = tuple(sorted(self._tuples))
        return iter(self._sorted)

    def __len__(self):
        return len(self._tuples)

    def tuples(self) -> frozenset:
        return self._tuples

    def __repr__(self):
        return f"ExplicitRelation(arity={self.arity}, size={len(self)})"


class PowerRelation(Relation):
    """R^{A^k}: membership by coordinate-wise projection onto R^A."""

    is_lazy = True
    __slots__ = ("arity", "base", "base_size", "exponent")

    def __init__(self, base: Relation, base_size: int, exponent: int):
        self.arity = base.arity
        self.base = base
        self.base_size = base_size
        self.exponent = exponent

    def __contains__(self, tup) -> bool:
        tup = tuple(tup)
        if len(tup) != self.arity:
            return False
        n = self.base_size
        rest = list(tup)
        for _ in range(self.exponent):
            coord = []
            for j, v in enumerate(rest):
                v, d = divmod(v, n)
                rest[j] = v
                coord.append(d)
            if tuple(coord) not in self.base:
                return False
        return not any(rest)

    def __iter__(self):
        n = self.base_size
        weights = [n**c for c in range(self.exponent)]
        base = list(self.base)
        for combo in itertools.product(base, repeat=self.exponent):
            yield tuple(
                sum(w * t[j] for w, t in zip(weights, combo))
                for j in range(self.arity)
            )

    def __len__(self):
        return len(self.base) ** self.exponent

    def __repr__(self):
        return f"PowerRelation(arity={self.arity}, exponent={self.exponent})"


class DisequalityRelation(Relation):
    """The edge relation of the complete graph on ``size`` vertices."""

    is_lazy = True
    __slots__ = ("arity", "size")

    def __init__(self, size: int):
        self.arity = 2
        self.size = size

    def __contains__(self, tup) -> bool:
        a, b = tup
        return a != b and 0 <= a < self.size and 0 <= b < self.size

    def __iter__(self):
        for a in range(self.size):
            for b in range(self.size):
                if a != b:
                    yield (a, b)

    def __len__(self):
        return self.size * (self.size - 1)

    def __repr__(self):
        return f"DisequalityRelation(size={self.size})"


# -- structures ---------------------------------------------------------------


class Structure:
    """A finite sigma-structure. Treated as immutable once built."""

    def __init__(
        self,
        domain_size: int,
        signature: Signature,
        relations: Mapping[str, Relation],
        labels: Mapping[int, str] | None = None,
        marks: Mapping[str, int] | None = None,
        power_of: "Structure | None" = None,
        exponent: int | None = None,
    ):
        self.domain_size = domain_size
        self.signature = signature
        self.relations = dict(relations)
        self.labels = dict(labels or {})
        self.marks = dict(marks or {})
        self.power_of = power_of
        self.exponent = exponent

    def __getitem__(self, symbol) -> Relation:
        return self.relations[symbol]

    def __len__(self):
        return self.domain_size

    @property
    def is_lazy(self) -> bool:
        return any(r.is_lazy for r in self.relations.values())

    def label(self, element: int) -> str:
        return self.labels.get(element, str(element))

    def decode(self, element: int) -> tuple[int, ...]:
        """Coordinates of a power element (requires ``power_of``)."""
        if self.power_of is None:
            raise StructureError("structure is not a power")
        return decode(element, self.power_of.domain_size, self.exponent)

    def encode(self, coords: Sequence[int]) -> int:
        if self.power_of is None:
            raise StructureError("structure is not a power")
        return encode(coords, self.power_of.domain_size)

    def explicit(self) -> dict:
        """Relations as sorted tuple lists (materializes lazy ones)."""
        return {s: sorted(self.relations[s].tuples()) for s in self.signature}

    def __eq__(self, other):
        if not isinstance(other, Structure):
            return NotImplemented
        if self.domain_size != other.domain_size or self.signature != other.signature:
            return False
        return all(
            self.relations[s].tuples() == other.relations[s].tuples()
            for s in self.signature
        )

    def __hash__(self):
        return hash((self.domain_size, self.signature))

    def __repr__(self):
        rels = ", ".join(f"{s}:{len(self.relations[s])}" for s in self.signature)
        return f"Structure(domain_size={self.domain_size}, {rels})"


def encode(coords: Sequence[int], base: int) -> int:
    value = 0
    for c in reversed(coords):
        value = value * base + c
    return value


def decode(element: int, base: int, length: int) -> tuple[int, ...]:
    out = []
    for _ in range(length):
        element, d = divmod(element, base)
        out.append(d)
    return tuple(out)


def build_structure(
    domain_size: int,
    signature,
    explicit_relations: Mapping[str, Iterable[Sequence[int]]],
    labels: Mapping[int, str] | None = None,
    marks: Mapping[str, int] | None = None,
) -> Structure:
    if domain_size < 1:
        raise StructureError("domain_size must be positive")
    signature = Signature.of(signature)
    unknown = set(explicit_relations) - set(signature.symbols)
    if unknown:
        raise StructureError(f"relations for undeclared symbols: {sorted(map(str, unknown))}")
    relations = {}
    for s in signature:
        k = signature.arity[s]
        tuples = set()
        for t in explicit_relations.get(s, ()):
            t = tuple(int(v) for v in t)
            if len(t) != k:
                raise StructureError(f"tuple {t} has length {len(t)}, arity of {s!r} is {k}")
            for v in t:
                if not 0 <= v < domain_size:
                    raise StructureError(f"element {v} out of range in {s!r} tuple {t}")
            tuples.add(t)
        relations[s] = ExplicitRelation(k, tuples)
    for m, v in (marks or {}).items():
        if not 0 <= v < domain_size:
            raise StructureError(f"mark {m!r} out of range")
    return Structure(domain_size, signature, relations, labels, marks)


def rename_symbol(A: Structure, old: str, new: str) -> Structure:
    if new in A.signature:
        raise StructureError(f"symbol {new!r} already present")
    symbols = tuple(new if s == old else s for s in A.signature)
    arity = {(new if s == old else s): a for s, a in A.signature.arity.items()}
    rels = {(new if s == old else s): r for s, r in A.relations.items()}
    return Structure(A.domain_size, Signature(symbols, arity), rels, A.labels, A.marks)


# -- powers -------------------------------------------------------------------


def power_structure(A: Structure, k: int, threshold: int = DEFAULT_THRESHOLD) -> Structure:
    """Cartesian power ``A^k``; relations above ``threshold`` tuples stay lazy."""
    if k < 1:
        raise StructureError("exponent must be at least 1")
    n = A.domain_size
    relations = {}
    for s in A.signature:
        lazy = PowerRelation(A.relations[s], n, k)
        if len(lazy) <= threshold:
            relations[s] = ExplicitRelation(lazy.arity, lazy)
        else:
            relations[s] = lazy
    labels = {}
    if n**k <= threshold:
        for e in range(n**k):
            labels[e] = "(" + ",".join(A.label(c) for c in decode(e, n, k)) + ")"
    return Structure(n**k, A.signature, relations, labels, power_of=A, exponent=k)


# -- linear structures ----------------------------------------------------------


@dataclass(frozen=True)
class LinearStructure:
    """A system of parity constraints, i.e. a structure over sigma_LIN.

    ``constraints`` holds ``(rhs, variables)`` pairs; each one is a tuple of
    ``LR(rhs, len(variables))``.
    """

    num_variables: int
    constraints: tuple = ()
    labels: Mapping[int, str] = field(default_factory=dict, compare=False)
    marks: Mapping[str, int] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.num_variables < 1:
            raise StructureError("num_variables must be positive")
        cleaned = set()
        for rhs, vs in self.constraints:
            rhs = int(rhs)
            vs = tuple(int(v) for v in vs)
            if rhs not in (0, 1):
                raise StructureError(f"rhs must be 0 or 1, got {rhs}")
            if not vs:
                raise StructureError("empty constraint")
            for v in vs:
                if not 0 <= v < self.num_variables:
                    raise StructureError(f"variable {v} out of range")
            cleaned.add((rhs, vs))
        object.__setattr__(self, "constraints", tuple(sorted(cleaned, key=lambda c: (len(c[1]), c))))
        object.__setattr__(self, "labels", dict(self.labels))
        object.__setattr__(self, "marks", dict(self.marks))

    @property
    def is_homogeneous(self) -> bool:
        return all(rhs == 0 for rhs, _ in self.constraints)

    def symbols(self) -> list[str]:
        used = sorted({(len(vs), rhs) for rhs, vs in self.constraints})
        return [lr(b, n) for n, b in used]

    def relation(self, b: int, n: int) -> list[tuple]:
        return [vs for rhs, vs in self.constraints if rhs == b and len(vs) == n]

    def to_structure(self) -> Structure:
        syms = self.symbols()
        sig = Signature(tuple(syms), {s: parse_lr(s)[1] for s in syms})
        rels = {s: self.relation(*parse_lr(s)) for s in syms}
        return build_structure(self.num_variables, sig, rels, self.labels, self.marks)

    @classmethod
    def from_structure(cls, A: Structure) -> "LinearStructure":
        constraints = []
        for s in A.signature:
            parsed = parse_lr(s)
            if parsed is None or parsed[1] != A.signature.arity[s]:
                raise StructureError(f"{s!r} is not a linear relation symbol")
            b, _ = parsed
            constraints.extend((b, t) for t in A.relations[s])
        return cls(A.domain_size, tuple(constraints), A.labels, A.marks)

    def satisfied_by(self, assignment: Sequence[int]) -> bool:
        return all(sum(assignment[v] for v in vs) % 2 == rhs for rhs, vs in self.constraints)

    def label(self, element: int) -> str:
        return self.labels.get(element, str(element))


def as_structure(A) -> Structure:
    return A.to_structure() if isinstance(A, LinearStructure) else A


def as_linear(A) -> LinearStructure:
    return A if isinstance(A, LinearStructure) else LinearStructure.from_structure(A)


def lin_structure(symbols: Iterable[str]) -> Structure:
    """LIN restricted to the given LR(b,n) symbols."""
    syms = []
    for s in symbols:
        if parse_lr(s) is None:
            raise StructureError(f"{s!r} is not a linear relation symbol")
        if s not in syms:
            syms.append(s)
    arity = {s: parse_lr(s)[1] for s in syms}
    rels = {}
    for s in syms:
        b, n = parse_lr(s)
        rels[s] = [t for t in itertools.product((0, 1), repeat=n) if sum(t) % 2 == b]
    return build_structure(2, Signature(tuple(syms), arity), rels)


def homogeneous_part(A) -> LinearStructure:
    """A_H: every LR(1,n) tuple moved into LR(0,n)."""
    A = as_linear(A)
    return LinearStructure(
        A.num_variables, tuple((0, vs) for _, vs in A.constraints), A.labels, A.marks
    )


def homogenise(A) -> tuple[LinearStructure, int]:
    """Homogeneous system with a fresh element ``j`` standing in for J.

    Returns the new structure and ``j``. Each inhomogeneous tuple gets ``j``
    appended, and ``(a, j, a, j)`` is added for every variable ``a``.
    """
    A = as_linear(A)
    j = A.num_variables
    constraints = []
    for rhs, vs in A.constraints:
        constraints.append((0, vs + (j,)) if rhs else (0, vs))
    for a in range(A.num_variables):
        constraints.append((0, (a, j, a, j)))
    labels = {a: A.label(a) for a in range(A.num_variables)}
    labels[j] = "j"
    marks = dict(A.marks)
    marks["j"] = j
    return LinearStructure(A.num_variables + 1, tuple(constraints), labels, marks), j


def completion(A: Structure, threshold: int = DEFAULT_THRESHOLD) -> Structure:
    """A_K: adds the complete-graph edge relation under symbol ``E``."""
    A = as_structure(A)
    if COMPLETION_SYMBOL in A.signature:
        raise StructureError(f"signature already contains {COMPLETION_SYMBOL!r}")
    sig = A.signature.extended(COMPLETION_SYMBOL, 2)
    rels = dict(A.relations)
    edge = DisequalityRelation(A.domain_size)
    rels[COMPLETION_SYMBOL] = ExplicitRelation(2, edge) if len(edge) <= threshold else edge
    return Structure(A.domain_size, sig, rels, A.labels, A.marks)


# -- graph encoding -------------------------------------------------------------


EDGE_SYMBOL = "edge"


@dataclass
class ColoredGraph:
    """Bipartite coloured graph G(A, B) with vertex bookkeeping."""

    structure: Structure
    variable_vertices: dict  # (a, b) -> vertex
    constraint_vertices: dict  # (R, a_tuple, b_tuple) -> vertex
    variable_colors: dict  # a -> unary symbol
    constraint_colors: dict  # (R, a_tuple) -> unary symbol


def encode_graph(A, B=None) -> ColoredGraph:
    """Encode the pair (A, B) as a coloured bipartite graph.

    With ``B`` omitted, ``A`` must be linear and LIN over A's symbols is used.
    """
    A = as_structure(A)
    if B is None:
        B = lin_structure(A.signature.symbols)
    B = as_structure(B)
    for s in A.signature:
        if s not in B.signature or B.signature.arity[s] != A.signature.arity[s]:
            raise StructureError(f"signature mismatch on symbol {s!r}")

    nb = B.domain_size
    variable_vertices = {}
    labels = {}
    for a in range(A.domain_size):
        for b in range(nb):
            v = a * nb + b
            variable_vertices[(a, b)] = v
            labels[v] = f"({A.label(a)},{B.label(b)})"

    constraint_vertices = {}
    edges = set()
    colors: dict[str, list] = {}
    variable_colors = {}
    constraint_colors = {}
    for a in range(A.domain_size):
        sym = f"C[{A.label(a)}]"
        if sym in colors:
            sym = f"C[#{a}]"
        variable_colors[a] = sym
        colors[sym] = [(variable_vertices[(a, b)],) for b in range(nb)]

    nxt = A.domain_size * nb
    for s in A.signature:
        btuples = list(B.relations[s])
        for at in A.relations[s]:
            csym = f"C[{s}|{','.join(map(str, at))}]"
            constraint_colors[(s, at)] = csym
            members = []
            for bt in btuples:
                if any(at[i] == at[j] and bt[i] != bt[j] for i in range(len(at)) for j in range(i)):
                    continue
                v = nxt
                nxt += 1
                constraint_vertices[(s, at, bt)] = v
                labels[v] = f"({s},{','.join(A.label(x) for x in at)};{''.join(B.label(y) for y in bt)})"
                members.append((v,))
                for ai, bi in zip(at, bt):
                    u = variable_vertices[(ai, bi)]
                    edges.add((u, v))
                    edges.add((v, u))
            colors[csym] = members

    symbols = (EDGE_SYMBOL,) + tuple(colors)
    arity = {EDGE_SYMBOL: 2, **{c: 1 for c in colors}}
    rels = {EDGE_SYMBOL: edges, **colors}
    graph = build_structure(nxt, Signature(symbols, arity), rels, labels)
    return ColoredGraph(graph, variable_vertices, constraint_vertices, variable_colors, constraint_colors)


# -- catalog --------------------------------------------------------------------


def complete_graph(n: int) -> Structure:
    if n < 1:
        raise StructureError("complete graph needs n >= 1")
    edges = [(a, b) for a in range(n) for b in range(n) if a != b]
    return build_structure(n, {COMPLETION_SYMBOL: 2}, {COMPLETION_SYMBOL: edges})


MAGIC_SQUARE_ROWS_COLS = [(1, 2, 3), (4, 5, 6), (7, 8, 9), (1, 4, 7), (2, 5, 8)]
MAGIC_SQUARE_ODD = [(3, 6, 9)]


def magic_square() -> LinearStructure:
    """Mermin-Peres square; element i-1 is labelled by its 1-based cell number."""
    cons = [(0, tuple(v - 1 for v in t)) for t in MAGIC_SQUARE_ROWS_COLS]
    cons += [(1, tuple(v - 1 for v in t)) for t in MAGIC_SQUARE_ODD]
    return LinearStructure(9, tuple(cons), {i: str(i + 1) for i in range(9)})


def _a7_involutions() -> list[tuple[tuple[int, int], tuple[int, int]]]:
    out = []
    for p in itertools.combinations(range(1, 8), 2):
        for q in itertools.combinations(range(1, 8), 2):
            if p < q and not set(p) & set(q):
                out.append((p, q))
    return sorted(out)


def _cycles_to_perm(cycles) -> tuple[int, ...]:
    perm = list(range(8))
    for a, b in cycles:
        perm[a], perm[b] = b, a
    return tuple(perm)


def a7_structure() -> LinearStructure:
    """Order-two elements of A_7 with LR(0,3) = {(a,b,c) : abc = 1}.

    Elements are sorted by cycle notation; marks ``a1`` = (1 2)(3 4) and
    ``a2`` = (2 3)(5 6).
    """
    invs = _a7_involutions()
    perms = [_cycles_to_perm(c) for c in invs]
    index = {p: i for i, p in enumerate(perms)}
    identity = tuple(range(8))
    triples = []
    for i, p in enumerate(perms):
        for j, q in enumerate(perms):
            pq = tuple(p[q[x]] for x in range(8))
            if pq == identity:
                continue
            # c = (pq)^{-1}; it must itself be an involution of the domain
            inv = [0] * 8
            for x, y in enumerate(pq):
                inv[y] = x
            k = index.get(tuple(inv))
            if k is not None:
                triples.append((i, j, k))
    labels = {i: "".join(f"({a} {b})" for a, b in c) for i, c in enumerate(invs)}
    marks = {"a1": invs.index(((1, 2), (3, 4))), "a2": invs.index(((2, 3), (5, 6)))}
    return LinearStructure(len(invs), tuple((0, t) for t in triples), labels, marks)


CATALOG = ("complete", "lin", "magic-square", "a7")


def catalog_structure(name: str, **params):
    """Named structures: ``complete`` (n), ``lin`` (arities), ``magic-square``, ``a7``.

    Linear catalog entries are returned as :class:`LinearStructure`.
    """
    if name == "complete":
        n = params.get("n")
        if not isinstance(n, int) or n < 1:
            raise StructureError("complete needs integer n >= 1")
        return complete_graph(n)
    if name == "lin":
        arities = params.get("arities", (1, 2, 3))
        if not arities or any(not isinstance(n, int) or n < 1 for n in arities):
            raise StructureError("lin needs positive integer arities")
        return lin_structure([lr(b, n) for n in arities for b in (0, 1)])
    if name == "magic-square":
        return magic_square()
    if name == "a7":
        return a7_structure()
    raise StructureError(f"unknown catalog structure {name!r}")


# -- JSON -----------------------------------------------------------------------


def structure_to_json(A) -> dict:
    if isinstance(A, LinearStructure):
        A = A.to_structure()
    if A.power_of is not None and A.is_lazy:
        return {"power_of": structure_to_json(A.power_of), "exponent": A.exponent}
    rels = {}
    for s in A.signature:
        r = A.relations[s]
        if isinstance(r, DisequalityRelation):
            rels[s] = {"disequality": True}
        else:
            rels[s] = [list(t) for t in sorted(r.tuples())]
    doc = {
        "domain_size": A.domain_size,
        "signature": [{"name": s, "arity": A.signature.arity[s]} for s in A.signature],
        "relations": rels,
    }
    if A.labels:
        doc["labels"] = {str(k): v for k, v in sorted(A.labels.items())}
    if A.marks:
        doc["marks"] = dict(A.marks)
    if A.power_of is not None:
        # keep the power shape so coordinates survive a round trip
        doc["power_of"] = structure_to_json(A.power_of)
        doc["exponent"] = A.exponent
    return doc


def structure_from_json(doc: Mapping, threshold: int = DEFAULT_THRESHOLD) -> Structure:
    if "power_of" in doc:
        P = power_structure(structure_from_json(doc["power_of"]), int(doc["exponent"]), threshold)
        if "domain_size" in doc and int(doc["domain_size"]) != P.domain_size:
            raise StructureError("power document has an inconsistent domain size")
        return P
    try:
        n = int(doc["domain_size"])
        sig = Signature(
            tuple(e["name"] for e in doc["signature"]),
            {e["name"]: int(e["arity"]) for e in doc["signature"]},
        )
    except (KeyError, TypeError) as exc:
        raise StructureError(f"malformed structure document: {exc}") from exc
    raw = dict(doc.get("relations", {}))
    lazy = {s: v for s, v in raw.items() if isinstance(v, Mapping)}
    explicit = {s: v for s, v in raw.items() if not isinstance(v, Mapping)}
    labels = {int(k): str(v) for k, v in doc.get("labels", {}).items()}
    A = build_structure(n, sig, explicit, labels, doc.get("marks"))
    for s, v in lazy.items():
        if not v.get("disequality") or sig.arity[s] != 2:
            raise StructureError(f"unsupported lazy relation for {s!r}")
        A.relations[s] = DisequalityRelation(n)
    return A
