"""Backtracking enumeration of homomorphisms and polymorphisms."""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Sequence

from .relstruct import (
    DisequalityRelation,
    Structure,
    StructureError,
    as_structure,
    power_structure,
)

DEFAULT_NODE_BUDGET = 10**8


class BudgetExceeded(RuntimeError):
    """The node budget ran out before the search space was exhausted.

    ``found`` holds the results collected so far; they are a lower bound, not
    a refutation of further results.
    """

    def __init__(self, message, found=()):
        super().__init__(message)
        self.found = list(found)


def is_homomorphism(source: Structure, target: Structure, mapping: Sequence[int]) -> bool:
    """Full check of every source tuple, independent of any search state."""
    if len(mapping) != source.domain_size:
        return False
    if any(not 0 <= v < target.domain_size for v in mapping):
        return False
    for s in source.signature:
        src, tgt = source.relations[s], target.relations[s]
        if isinstance(src, DisequalityRelation) and isinstance(tgt, DisequalityRelation):
            if len(set(mapping)) != len(mapping):
                return False
            continue
        for t in src:
            if tuple(mapping[v] for v in t) not in tgt:
                return False
    return True


@dataclass(frozen=True)
class Homomorphism:
    source: Structure
    target: Structure
    mapping: tuple

    def __post_init__(self):
        object.__setattr__(self, "mapping", tuple(self.mapping))
        if not is_homomorphism(self.source, self.target, self.mapping):
            raise ValueError("mapping is not a homomorphism")

    def __call__(self, element: int) -> int:
        return self.mapping[element]

    def __eq__(self, other):
        if not isinstance(other, Homomorphism):
            return NotImplemented
        return self.mapping == other.mapping and self.source is other.source and self.target is other.target

    def __hash__(self):
        return hash(self.mapping)


@dataclass(frozen=True)
class ProjectionDecomposition:
    coordinate: int
    permutation: tuple


def _check_signatures(X: Structure, A: Structure) -> None:
    for s in X.signature:
        if s not in A.signature or A.signature.arity[s] != X.signature.arity[s]:
            raise StructureError(f"signature mismatch on symbol {s!r}")


class _Search:
    """Variables are source elements in natural order, values ascending.

    Arc consistency is maintained after every assignment. A domain of
    ``None`` stands for the whole target, so huge targets cost nothing until
    some constraint narrows them.
    """

    def __init__(self, X: Structure, A: Structure, limit, node_budget):
        self.X, self.A = X, A
        self.n, self.m = X.domain_size, A.domain_size
        self.limit = limit
        self.budget = node_budget
        self.nodes = 0
        self.results: list[tuple] = []

        # (symbol, tuple) constraints indexed by each element they mention
        self.incident: dict[int, list] = defaultdict(list)
        self.constraints: list = []
        # all-different over every pair, for E -> E between complete graphs
        self.injective = False
        self.pairwise: list[str] = []
        self.index: dict[str, dict] = {}
        self.targets: dict[str, tuple] = {}
        for s in X.signature:
            src, tgt = X.relations[s], A.relations[s]
            if isinstance(src, DisequalityRelation):
                if isinstance(tgt, DisequalityRelation):
                    self.injective = True
                else:
                    self.pairwise.append(s)
                continue
            if s not in self.targets:
                tuples = tuple(tgt.tuples())
                self.targets[s] = tuples
                idx = defaultdict(list)
                for t in tuples:
                    for pos, v in enumerate(t):
                        idx[(pos, v)].append(t)
                self.index[s] = idx
            for t in src:
                c = (s, tuple(t))
                self.constraints.append(c)
                for v in set(t):
                    self.incident[v].append(c)

        self.domains: list = [None] * self.n
        self.assignment = [-1] * self.n
        self.used: set[int] = set()

    # -- propagation --------------------------------------------------------

    def _supports(self, s, t):
        """Target tuples compatible with the current domains."""
        doms = self.domains
        best, size = None, self.m + 1
        for pos, v in enumerate(t):
            d = doms[v]
            if d is not None and len(d) < size:
                best, size = pos, len(d)
        if best is None:
            pool = self.targets[s]
        else:
            idx = self.index[s]
            pool = [u for val in doms[t[best]] for u in idx.get((best, val), ())]
        out = []
        for u in pool:
            seen = {}
            for pos, v in enumerate(t):
                d = doms[v]
                if d is not None and u[pos] not in d:
                    break
                if seen.setdefault(v, u[pos]) != u[pos]:
                    break
            else:
                out.append(u)
        return out

    def _propagate(self, queue, trail) -> bool:
        """Arc consistency from the queued constraints; False on wipe-out."""
        pending = set(queue)
        queue = deque(queue)
        while queue:
            c = queue.popleft()
            pending.discard(c)
            s, t = c
            sup = self._supports(s, t)
            if not sup:
                return False
            for pos, v in enumerate(t):
                allowed = {u[pos] for u in sup}
                dom = self.domains[v]
                if dom is not None and dom <= allowed:
                    continue
                trail.append((v, dom))
                dom = allowed if dom is None else dom & allowed
                self.domains[v] = dom
                if not dom:
                    return False
                for c2 in self.incident[v]:
                    if c2 is not c and c2 not in pending:
                        pending.add(c2)
                        queue.append(c2)
        return True

    def initial(self) -> bool:
        # unary colour constraints first, so binary supports start from small domains
        order = sorted(range(len(self.constraints)), key=lambda i: len(self.constraints[i][1]))
        return self._propagate([self.constraints[i] for i in order], [])

    # -- search ---------------------------------------------------------------

    def _consistent_pairwise(self, v, val) -> bool:
        if self.injective and val in self.used:
            return False
        a = self.assignment
        for s in self.pairwise:
            tgt = self.A.relations[s]
            for u in range(v):
                if (a[u], val) not in tgt or (val, a[u]) not in tgt:
                    return False
        return True

    def _candidates(self, v):
        dom = self.domains[v]
        return iter(range(self.m) if dom is None else sorted(dom))

    def run(self) -> None:
        """Depth-first search with an explicit stack (sources can be large)."""
        # one frame per assigned variable: (value iterator, trail of the current value)
        frames: list[list] = [[self._candidates(0), None]]
        while frames:
            v = len(frames) - 1
            frame = frames[-1]
            if frame[1] is not None:
                self._undo(v, frame[1])
                frame[1] = None
            for val in frame[0]:
                self.nodes += 1
                if self.nodes > self.budget:
                    raise BudgetExceeded(f"node budget {self.budget} exceeded", self.results)
                if not self._consistent_pairwise(v, val):
                    continue
                prior = self.domains[v]
                trail: list = [(v, prior)]
                self.assignment[v] = val
                self.used.add(val)
                self.domains[v] = {val}
                frame[1] = trail
                # a forced value changes no domain, so arc consistency still holds
                if (prior is not None and len(prior) == 1) or self._propagate(self.incident[v], trail):
                    break
                self._undo(v, trail)
                frame[1] = None
            else:
                frames.pop()
                continue
            if v + 1 == self.n:
                self.results.append(tuple(self.assignment))
                if self.limit is not None and len(self.results) >= self.limit:
                    return
            else:
                frames.append([self._candidates(v + 1), None])

    def _undo(self, v, trail) -> None:
        for u, d in reversed(trail):
            self.domains[u] = d
        self.used.discard(self.assignment[v])
        self.assignment[v] = -1


def search_mappings(X, A, limit=None, node_budget=DEFAULT_NODE_BUDGET) -> list[tuple]:
    """Raw homomorphism mappings X -> A in lexicographic order."""
    X, A = as_structure(X), as_structure(A)
    _check_signatures(X, A)
    if limit is not None and limit < 1:
        raise ValueError("limit must be >= 1")
    search = _Search(X, A, limit, node_budget)
    if search.n == 0 or not search.initial():
        return []
    search.run()
    return search.results


def enumerate_homomorphisms(X, A, limit=None, node_budget=DEFAULT_NODE_BUDGET) -> list[Homomorphism]:
    X, A = as_structure(X), as_structure(A)
    return [Homomorphism(X, A, m) for m in search_mappings(X, A, limit, node_budget)]


def count_homomorphisms(X, A, node_budget=DEFAULT_NODE_BUDGET) -> int:
    return len(search_mappings(X, A, None, node_budget))


def enumerate_polymorphisms(A, k: int, node_budget=DEFAULT_NODE_BUDGET) -> list[Homomorphism]:
    """All homomorphisms A^k -> A."""
    A = as_structure(A)
    if k < 1:
        raise ValueError("arity must be >= 1")
    return enumerate_homomorphisms(power_structure(A, k), A, None, node_budget)


def decompose_projection(f: Homomorphism) -> ProjectionDecomposition | None:
    """Find ``(i, sigma)`` with ``f = sigma o pi_i``; least ``i`` wins."""
    P = f.source
    if P.power_of is None:
        raise ValueError("source is not a power structure")
    n, k = P.power_of.domain_size, P.exponent
    for i in range(k):
        sigma = [-1] * n
        ok = True
        for e, val in enumerate(f.mapping):
            xi = (e // n**i) % n
            if sigma[xi] == -1:
                sigma[xi] = val
            elif sigma[xi] != val:
                ok = False
                break
        if ok and sorted(sigma) == list(range(n)):
            return ProjectionDecomposition(i, tuple(sigma))
    return None
