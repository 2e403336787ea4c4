"""The |A|^2-power gadget candidate and the separation-structure pipeline."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .relstruct import (
    DEFAULT_THRESHOLD,
    ColoredGraph,
    LinearStructure,
    Structure,
    as_linear,
    as_structure,
    completion,
    decode,
    encode,
    encode_graph,
    homogenise,
    magic_square,
    a7_structure,
    power_structure,
    structure_from_json,
    structure_to_json,
)

DEFAULT_SAMPLES = 10**4


class GadgetVerificationError(AssertionError):
    """A projection witness failed; this means an implementation bug."""


@dataclass
class GadgetCandidate:
    structure: Structure
    x: int
    y: int
    base: Structure

    @property
    def exponent(self) -> int:
        return self.structure.exponent

    def pair_coordinate(self, a: int, b: int) -> int:
        return a * self.base.domain_size + b

    def decode(self, element: int) -> tuple[int, ...]:
        return decode(element, self.base.domain_size, self.exponent)


def build_commutativity_gadget(A, threshold: int = DEFAULT_THRESHOLD) -> GadgetCandidate:
    """``(A^{|A|^2}, x, y)`` with coordinates indexed by pairs in lexicographic order."""
    A = as_structure(A)
    n = A.domain_size
    k = n * n
    G = power_structure(A, k, threshold)
    pairs = [(a, b) for a in range(n) for b in range(n)]
    x = encode([a for a, _ in pairs], n)
    y = encode([b for _, b in pairs], n)
    return GadgetCandidate(G, x, y, A)


@dataclass
class Witness:
    pair: tuple
    coordinate: int
    value_x: int
    value_y: int
    checked_tuples: int
    valid: bool


@dataclass
class GadgetReport:
    exponent: int
    domain_size: int
    mode: str  # "full" or "sampled"
    witnesses: list = field(default_factory=list)
    membership_samples: int = 0

    @property
    def valid(self) -> bool:
        return all(w.valid for w in self.witnesses)


def _sample_power_tuple(rng: random.Random, base_tuples, n: int, k: int):
    combo = [rng.choice(base_tuples) for _ in range(k)]
    arity = len(combo[0])
    return tuple(encode([t[j] for t in combo], n) for j in range(arity))


def verify_gadget_property_i(
    g: GadgetCandidate,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> GadgetReport:
    """Check the projection witnesses ``pi_(a,b)`` on the gadget.

    Each projection must send x to a and y to b, and map every relation tuple
    of the power into the base relation. Relations held explicitly are
    checked in full; lazy ones on ``samples`` seeded random tuples, which are
    also re-checked against the lazy membership procedure.
    """
    A, G = g.base, g.structure
    n, k = A.domain_size, g.exponent
    xs, ys = g.decode(g.x), g.decode(g.y)
    lazy = G.is_lazy
    rng = random.Random(seed)

    tuples_by_symbol = {}
    membership_checks = 0
    for s in A.signature:
        rel = G.relations[s]
        base = list(A.relations[s])
        if not rel.is_lazy:
            tuples_by_symbol[s] = [tuple(decode(e, n, k) for e in t) for t in rel]
            continue
        if not base:
            tuples_by_symbol[s] = []
            continue
        picked = []
        for _ in range(samples):
            t = _sample_power_tuple(rng, base, n, k)
            if t not in rel:
                raise GadgetVerificationError(f"sampled product tuple {t} rejected by lazy membership for {s!r}")
            membership_checks += 1
            picked.append(tuple(decode(e, n, k) for e in t))
        # random element tuples: lazy membership must agree with the product definition
        for _ in range(samples // 10):
            t = tuple(rng.randrange(n**k) for _ in range(rel.arity))
            coords = [decode(e, n, k) for e in t]
            direct = all(tuple(c[i] for c in coords) in A.relations[s] for i in range(k))
            if (t in rel) != direct:
                raise GadgetVerificationError(f"lazy membership disagrees with product definition on {t}")
            membership_checks += 1
        tuples_by_symbol[s] = picked

    report = GadgetReport(k, G.domain_size, "sampled" if lazy else "full", membership_samples=membership_checks)
    for a in range(n):
        for b in range(n):
            c = g.pair_coordinate(a, b)
            checked = 0
            ok = xs[c] == a and ys[c] == b
            for s, tuples in tuples_by_symbol.items():
                rel = A.relations[s]
                for t in tuples:
                    checked += 1
                    if tuple(e[c] for e in t) not in rel:
                        ok = False
                        break
            w = Witness((a, b), c, xs[c], ys[c], checked, ok)
            if not ok:
                raise GadgetVerificationError(f"projection witness for {(a, b)} failed")
            report.witnesses.append(w)
    return report


# -- separation pipeline ------------------------------------------------------------


MAGIC_GLUE = (("A1", "a1", 1), ("A1", "a2", 5), ("A2", "a1", 2), ("A2", "a2", 4))


@dataclass
class Assembly:
    """A disjoint union with glue tuples, remembering where each element came from."""

    structure: LinearStructure
    provenance: dict  # element -> (block, local element)
    glue: list  # added LR(0,2) tuples

    def element(self, block: str, local: int) -> int:
        for e, (blk, loc) in self.provenance.items():
            if blk == block and loc == local:
                return e
        raise KeyError((block, local))


def _disjoint_union(blocks: list[tuple[str, LinearStructure]], glue) -> Assembly:
    offsets = {}
    total = 0
    constraints = []
    labels = {}
    provenance = {}
    for name, S in blocks:
        offsets[name] = total
        for rhs, vs in S.constraints:
            constraints.append((rhs, tuple(v + total for v in vs)))
        for a in range(S.num_variables):
            labels[total + a] = f"{name}:{S.label(a)}"
            provenance[total + a] = (name, a)
        total += S.num_variables
    glue_tuples = [(offsets[b1] + e1, offsets[b2] + e2) for (b1, e1), (b2, e2) in glue]
    constraints += [(0, t) for t in glue_tuples]
    return Assembly(LinearStructure(total, tuple(constraints), labels), provenance, glue_tuples)


def magic_square_assembly() -> Assembly:
    """Homogenised magic square glued to two copies of the A_7 structure.

    The four LR(0,2) glue tuples identify a1/a2 of the first copy with cells
    1 and 5 and of the second copy with cells 2 and 4. Marks: ``a`` = cell 1,
    ``j`` = the homogenising element.
    """
    ms, j = homogenise(magic_square())
    a7 = a7_structure()
    glue = []
    for copy, mark, cell in MAGIC_GLUE:
        glue.append(((copy, a7.marks[mark]), ("B", cell - 1)))
    asm = _disjoint_union([("B", ms), ("A1", a7), ("A2", a7)], glue)
    S = asm.structure
    asm.structure = LinearStructure(S.num_variables, S.constraints, S.labels, {"a": 0, "j": j})
    return asm


def trivialising_assembly(A) -> tuple[Assembly, int]:
    """Homogenise A, then glue one magic-square assembly per variable.

    Glue tuples: ``(a, alpha_a)`` and ``(j, j_a)``. Returns the assembly and
    the element standing for J.
    """
    A = as_linear(A)
    Ah, j = homogenise(A)
    unit = magic_square_assembly().structure
    blocks = [("A", Ah)]
    glue = []
    for a in range(A.num_variables):
        name = f"M{a}"
        blocks.append((name, unit))
        glue.append((("A", a), (name, unit.marks["a"])))
        glue.append((("A", j), (name, unit.marks["j"])))
    asm = _disjoint_union(blocks, glue)
    S = asm.structure
    asm.structure = LinearStructure(S.num_variables, S.constraints, S.labels, {"j": j})
    return asm, j


@dataclass
class SeparationPipeline:
    homogenised: LinearStructure
    magic_assembly: Assembly
    assembled: Assembly
    graph: ColoredGraph
    result: Structure


def build_separation_structure(A, threshold: int = DEFAULT_THRESHOLD) -> SeparationPipeline:
    """Run the whole pipeline; ``result`` is the completed graph encoding."""
    A = as_linear(A)
    homogenised, _ = homogenise(A)
    magic = magic_square_assembly()
    assembled, _ = trivialising_assembly(A)
    graph = encode_graph(assembled.structure)
    result = completion(graph.structure, threshold)
    return SeparationPipeline(homogenised, magic, assembled, graph, result)


def gadget_to_json(g: GadgetCandidate) -> dict:
    return {"base": structure_to_json(g.base), "exponent": g.exponent, "x": g.x, "y": g.y}


def gadget_from_json(doc, threshold: int = DEFAULT_THRESHOLD) -> GadgetCandidate:
    base = structure_from_json(doc["base"])
    k = int(doc["exponent"])
    G = power_structure(base, k, threshold)
    return GadgetCandidate(G, int(doc["x"]), int(doc["y"]), base)

