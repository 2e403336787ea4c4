"""Finite-dimensional PVM representations of quantum homomorphism algebras.

A representation of ``Mor+(A, B)`` assigns a projection ``P[a, b]`` to every
source element ``a`` and target element ``b``. Each row ``{P[a, b]}_b`` must be a
PVM, and ``P[a1,b1] ... P[ar,br] = 0`` whenever ``(a1..ar)`` is a source
tuple and ``(b1..br)`` is not a target tuple. Oracular representations also
need tuple-mates to commute.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .relstruct import (
    DisequalityRelation,
    ExplicitRelation,
    PowerRelation,
    Structure,
    StructureError,
    as_linear,
    as_structure,
    complete_graph,
    lin_structure,
    power_structure,
    structure_from_json,
    structure_to_json,
)

DEFAULT_TOL = 1e-9
DEFAULT_CAP = 10**5


class RepresentationError(ValueError):
    pass


def _norm(M) -> float:
    return float(np.linalg.norm(M))


def _comm(P, Q):
    return P @ Q - Q @ P


@dataclass
class PvmRepresentation:
    source: Structure
    target: Structure
    dimension: int
    matrices: dict  # (a, b) -> complex ndarray
    oracular: bool = False

    def __post_init__(self):
        self.source = as_structure(self.source)
        self.target = as_structure(self.target)
        d = self.dimension
        if d < 1:
            raise RepresentationError("dimension must be positive")
        mats = {}
        for a in range(self.source.domain_size):
            for b in range(self.target.domain_size):
                if (a, b) not in self.matrices:
                    raise RepresentationError(f"missing matrix for ({a}, {b})")
                M = np.asarray(self.matrices[(a, b)], dtype=complex)
                if M.shape != (d, d):
                    raise RepresentationError(f"matrix ({a}, {b}) has shape {M.shape}, expected {(d, d)}")
                mats[(a, b)] = M
        self.matrices = mats

    def __getitem__(self, key) -> np.ndarray:
        return self.matrices[key]

    def row(self, a: int) -> list:
        return [self.matrices[(a, b)] for b in range(self.target.domain_size)]


@dataclass
class Violation:
    relation: str
    residual: float


@dataclass
class ViolationReport:
    tol: float
    violations: list = field(default_factory=list)
    max_residual: float = 0.0
    checked: int = 0
    sampled: bool = False

    @property
    def ok(self) -> bool:
        return not self.violations

    def record(self, description: str, residual: float) -> None:
        self.checked += 1
        if residual > self.max_residual:
            self.max_residual = residual
        if residual > self.tol:
            self.violations.append(Violation(description, residual))


# -- relation iteration -----------------------------------------------------------


def _sample_tuple(rel, rng: random.Random) -> tuple:
    if isinstance(rel, DisequalityRelation):
        a = rng.randrange(rel.size)
        b = rng.randrange(rel.size - 1)
        return (a, b + (b >= a))
    if isinstance(rel, PowerRelation):
        base = list(rel.base)
        combo = [rng.choice(base) for _ in range(rel.exponent)]
        n = rel.base_size
        return tuple(sum(c[j] * n**i for i, c in enumerate(combo)) for j in range(rel.arity))
    return rng.choice(list(rel))


def source_tuples(rel, cap: int, rng: random.Random) -> tuple[Iterable[tuple], bool]:
    """All tuples of ``rel`` if there are at most ``cap``, else ``cap`` seeded samples."""
    if len(rel) <= cap:
        return iter(rel), False
    if isinstance(rel, ExplicitRelation):
        return iter(rng.sample(sorted(rel), cap)), True
    if not len(rel):
        return iter(()), False
    return (_sample_tuple(rel, rng) for _ in range(cap)), True


def _forbidden(rel, m: int) -> list[tuple]:
    """Target tuples outside ``rel``."""
    if isinstance(rel, DisequalityRelation):
        return [(b, b) for b in range(m)]
    return [t for t in itertools.product(range(m), repeat=rel.arity) if t not in rel]


def check_representation(
    rep: PvmRepresentation,
    tol: float = DEFAULT_TOL,
    cap: int = DEFAULT_CAP,
    seed: int = 0,
) -> ViolationReport:
    """Residuals of every defining relation, in Frobenius norm.

    Relations of lazy or very large sources are checked on ``cap`` seeded
    samples; ``report.sampled`` says so.
    """
    A, B = rep.source, rep.target
    for s in A.signature:
        if s not in B.signature or B.signature.arity[s] != A.signature.arity[s]:
            raise StructureError(f"target lacks symbol {s!r}")
    d = rep.dimension
    eye = np.eye(d)
    report = ViolationReport(tol)
    rng = random.Random(seed)

    for (a, b), P in rep.matrices.items():
        report.record(f"projection P[{A.label(a)},{B.label(b)}]^2", _norm(P @ P - P))
        report.record(f"self-adjoint P[{A.label(a)},{B.label(b)}]", _norm(P.conj().T - P))
    for a in range(A.domain_size):
        report.record(f"PVM row {A.label(a)} sums to I", _norm(sum(rep.row(a)) - eye))

    mates = set()
    for s in A.signature:
        forbidden = _forbidden(B.relations[s], B.domain_size)
        tuples, sampled = source_tuples(A.relations[s], cap, rng)
        report.sampled |= sampled
        for t in tuples:
            names = ",".join(A.label(a) for a in t)
            for bt in forbidden:
                M = eye
                for a, b in zip(t, bt):
                    M = M @ rep.matrices[(a, b)]
                report.record(f"{s}({names}) -> {bt}", _norm(M))
            if rep.oracular:
                for i, j in itertools.combinations(range(len(t)), 2):
                    if t[i] != t[j]:
                        mates.add((min(t[i], t[j]), max(t[i], t[j])))
    for a1, a2 in sorted(mates):
        for b1 in range(B.domain_size):
            for b2 in range(B.domain_size):
                r = _norm(_comm(rep.matrices[(a1, b1)], rep.matrices[(a2, b2)]))
                report.record(f"[P[{A.label(a1)},{b1}], P[{A.label(a2)},{b2}]]", r)
    return report


# -- constructions --------------------------------------------------------------------


def compose(rep1: PvmRepresentation, rep2: PvmRepresentation) -> PvmRepresentation:
    """``P[a, c] = sum_b P1[a, b] (x) P2[b, c]``; dimension ``d1 * d2``."""
    if rep1.target != rep2.source:
        raise StructureError("rep1.target differs from rep2.source")
    A, B, C = rep1.source, rep1.target, rep2.target
    mats = {}
    for a in range(A.domain_size):
        for c in range(C.domain_size):
            mats[(a, c)] = sum(np.kron(rep1.matrices[(a, b)], rep2.matrices[(b, c)]) for b in range(B.domain_size))
    return PvmRepresentation(A, C, rep1.dimension * rep2.dimension, mats, rep1.oracular and rep2.oracular)


def character_of_hom(f) -> PvmRepresentation:
    """The 1-dimensional representation ``P[a, b] = delta(f(a), b)``."""
    mats = {
        (a, b): np.array([[1.0 if f.mapping[a] == b else 0.0]])
        for a in range(f.source.domain_size)
        for b in range(f.target.domain_size)
    }
    return PvmRepresentation(f.source, f.target, 1, mats, oracular=True)


@dataclass
class MagicUnitary:
    entries: np.ndarray  # shape (n, n, d, d)

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        if self.entries.ndim != 4 or self.entries.shape[0] != self.entries.shape[1]:
            raise RepresentationError("magic unitary needs an n x n grid of square matrices")
        if self.entries.shape[2] != self.entries.shape[3]:
            raise RepresentationError("entries must be square")

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def dimension(self) -> int:
        return self.entries.shape[2]

    def residuals(self) -> list[tuple[str, float]]:
        u, n = self.entries, self.size
        eye = np.eye(self.dimension)
        out = []
        for x in range(n):
            for a in range(n):
                P = u[x, a]
                out.append((f"u[{x},{a}] projection", max(_norm(P @ P - P), _norm(P.conj().T - P))))
        for x in range(n):
            out.append((f"row {x}", _norm(u[x].sum(axis=0) - eye)))
            out.append((f"column {x}", _norm(u[:, x].sum(axis=0) - eye)))
        return out

    def validate(self, tol: float = DEFAULT_TOL) -> None:
        bad = [(name, r) for name, r in self.residuals() if r > tol]
        if bad:
            raise RepresentationError(f"invalid magic unitary: {bad[0][0]} off by {bad[0][1]:.3g}")

    @classmethod
    def from_permutation(cls, sigma: Sequence[int]) -> "MagicUnitary":
        n = len(sigma)
        e = np.zeros((n, n, 1, 1))
        for x, a in enumerate(sigma):
            e[x, a, 0, 0] = 1.0
        return cls(e)


def rotated_projection(theta: float) -> np.ndarray:
    """diag(1, 0) rotated by ``theta``."""
    v = np.array([np.cos(theta), np.sin(theta)])
    return np.outer(v, v).astype(complex)


def block_magic_unitary(theta: float = np.pi / 4) -> MagicUnitary:
    """4x4 magic unitary of 2x2 blocks built from p(0) and p(theta).

    Rows ``[p, 1-p, 0, 0], [1-p, p, 0, 0], [0, 0, q, 1-q], [0, 0, 1-q, q]``.
    Entries from the two blocks fail to commute unless theta is a multiple of pi/2.
    """
    p, q = rotated_projection(0.0), rotated_projection(theta)
    eye, zero = np.eye(2), np.zeros((2, 2))
    grid = [
        [p, eye - p, zero, zero],
        [eye - p, p, zero, zero],
        [zero, zero, q, eye - q],
        [zero, zero, eye - q, q],
    ]
    return MagicUnitary(np.array(grid))


def magic_unitary_rep(u: MagicUnitary, i: int, k: int, tol: float = DEFAULT_TOL) -> PvmRepresentation:
    """Representation of ``Mor+(K_n^k, K_n)`` with ``P[x, a] = u[x_i, a]`` (``i`` 0-based)."""
    u.validate(tol)
    if not 0 <= i < k:
        raise ValueError(f"coordinate {i} out of range for arity {k}")
    n = u.size
    src = power_structure(complete_graph(n), k)
    mats = {}
    for x in range(n**k):
        xi = (x // n**i) % n
        for a in range(n):
            mats[(x, a)] = u.entries[xi, a]
    return PvmRepresentation(src, complete_graph(n), u.dimension, mats)


# -- complete-graph projections and identities --------------------------------------


def _kn_shape(rep: PvmRepresentation) -> tuple[int, int]:
    src = rep.source
    if src.power_of is None:
        raise ValueError("source is not a power structure")
    n, k = src.power_of.domain_size, src.exponent
    if n < 3:
        raise ValueError("complete-graph identities need n >= 3")
    return n, k


def _pi_from(rep, n, xs, ys) -> np.ndarray:
    x = sum(c * n**i for i, c in enumerate(xs))
    y = sum(c * n**i for i, c in enumerate(ys))
    return sum(rep.matrices[(x, a)] @ rep.matrices[(y, a)] for a in range(n))


def pi_projection(rep: PvmRepresentation, S: Iterable[int], pair=None) -> np.ndarray:
    """``Pi_S = sum_a P[x, a] P[y, a]`` with ``x_i = y_i`` exactly for ``i`` in S.

    The default pair is ``x = 0``, ``y_i = 0`` on S and 1 elsewhere. ``pair``
    may supply any other admissible (x, y) as coordinate tuples.
    """
    n, k = _kn_shape(rep)
    S = set(S)
    if not S <= set(range(k)):
        raise ValueError(f"coordinates {sorted(S)} out of range for arity {k}")
    if pair is None:
        xs = (0,) * k
        ys = tuple(0 if i in S else 1 for i in range(k))
    else:
        xs, ys = (tuple(p) for p in pair)
        if len(xs) != k or len(ys) != k or any((xs[i] == ys[i]) != (i in S) for i in range(k)):
            raise ValueError("pair is not admissible for S")
    return _pi_from(rep, n, xs, ys)


def admissible_pairs(n: int, k: int, S) -> Iterable[tuple[tuple, tuple]]:
    S = set(S)
    for xs in itertools.product(range(n), repeat=k):
        choices = [(xs[i],) if i in S else tuple(v for v in range(n) if v != xs[i]) for i in range(k)]
        for ys in itertools.product(*choices):
            yield xs, ys


@dataclass
class IdentityReport:
    tol: float
    residuals: dict = field(default_factory=dict)  # identity name -> max residual
    counts: dict = field(default_factory=dict)

    def record(self, name: str, value: float) -> None:
        self.residuals[name] = max(self.residuals.get(name, 0.0), value)
        self.counts[name] = self.counts.get(name, 0) + 1

    @property
    def ok(self) -> bool:
        return all(v <= self.tol for v in self.residuals.values())


def _diagonal_families(n: int, k: int, cap: int):
    # coordinate j of family member i is sigma_j(i); sigma_0 fixed to the identity
    perms = list(itertools.permutations(range(n)))
    count = 0
    for rest in itertools.product(perms, repeat=k - 1):
        sigmas = [tuple(range(n))] + list(rest)
        yield [tuple(sig[i] for sig in sigmas) for i in range(n)]
        count += 1
        if count >= cap:
            return


def complete_graph_identities(rep: PvmRepresentation, tol: float = DEFAULT_TOL, cap: int = 2000) -> IdentityReport:
    """Check the projection identities every representation of ``Mor+(K_n^k, K_n)`` obeys.

    diagonal-sum
        ``sum_i P[x_i, a] = I`` for families whose members differ in every coordinate.
    swap
        ``P[x, a] + P[x', a] = P[y, a] + P[y', a]`` where y, y' swap x, x' off S.
    commutation
        ``[P[x, a], P[y, a]] = 0`` for all x, y.
    pi-*
        ``Pi_S`` is choice independent, a central projection, additive over
        disjoint splits ``S = T + (S - T)``, and ``{Pi_{i}}`` resolves I.
    """
    n, k = _kn_shape(rep)
    d = rep.dimension
    eye = np.eye(d)
    P = rep.matrices
    enc = lambda xs: sum(c * n**i for i, c in enumerate(xs))  # noqa: E731
    points = list(itertools.product(range(n), repeat=k))
    report = IdentityReport(tol)

    for fam in _diagonal_families(n, k, cap):
        for a in range(n):
            report.record("diagonal-sum", _norm(sum(P[(enc(x), a)] for x in fam) - eye))

    subsets = [frozenset(c) for r in range(k + 1) for c in itertools.combinations(range(k), r)]
    swaps = 0
    for xs in points:
        for xps in itertools.product(*[[v for v in range(n) if v != xs[i]] for i in range(k)]):
            for S in subsets:
                ys = tuple(xs[i] if i in S else xps[i] for i in range(k))
                yps = tuple(xps[i] if i in S else xs[i] for i in range(k))
                for a in range(n):
                    lhs = P[(enc(xs), a)] + P[(enc(xps), a)]
                    rhs = P[(enc(ys), a)] + P[(enc(yps), a)]
                    report.record("swap", _norm(lhs - rhs))
                swaps += 1
                if swaps >= cap:
                    break
            if swaps >= cap:
                break
        if swaps >= cap:
            break

    for x in range(n**k):
        for y in range(x + 1, n**k):
            for a in range(n):
                report.record("commutation", _norm(_comm(P[(x, a)], P[(y, a)])))

    pis = {S: pi_projection(rep, S) for S in subsets}
    for S in subsets:
        for m, pair in enumerate(admissible_pairs(n, k, S)):
            if m >= cap:
                break
            report.record("pi-independence", _norm(pi_projection(rep, S, pair) - pis[S]))
        Pi = pis[S]
        report.record("pi-projection", max(_norm(Pi @ Pi - Pi), _norm(Pi.conj().T - Pi)))
        for key, M in P.items():
            report.record("pi-central", _norm(_comm(Pi, M)))
        for T in subsets:
            if T <= S:
                report.record("pi-additivity", _norm(Pi - pis[T] - pis[S - T]))
    report.record("pi-full", _norm(pis[frozenset(range(k))] - eye))
    report.record("pi-resolution", _norm(sum(pis[frozenset([i])] for i in range(k)) - eye))
    return report


def entry_commutator_norm(u: MagicUnitary, e1: tuple[int, int], e2: tuple[int, int]) -> float:
    return _norm(_comm(u.entries[e1], u.entries[e2]))


# -- observables for linear structures --------------------------------------------

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# two-qubit grid for the magic square, cells 1..9 row by row
MAGIC_GRID = ("XI", "IX", "XX", "IZ", "ZI", "ZZ", "XZ", "ZX", "YY")


def pauli(word: str) -> np.ndarray:
    M = np.eye(1, dtype=complex)
    for ch in word:
        M = np.kron(M, PAULI[ch])
    return M


def magic_square_observables() -> list[np.ndarray]:
    return [pauli(w) for w in MAGIC_GRID]


def constraint_products(A, observables) -> list[tuple[tuple, np.ndarray]]:
    """Product of the observables along each constraint of a linear structure."""
    A = as_linear(A)
    out = []
    for rhs, vs in A.constraints:
        M = np.eye(observables[0].shape[0], dtype=complex)
        for v in vs:
            M = M @ observables[v]
        out.append(((rhs, vs), M))
    return out


def observable_representation(A, observables, oracular: bool = True) -> PvmRepresentation:
    """Representation of ``Mor(A, LIN)`` from order-2 observables: ``P[a, b] = (I + (-1)^b O_a) / 2``."""
    L = as_linear(A)
    if len(observables) != L.num_variables:
        raise RepresentationError("one observable per variable expected")
    src = L.to_structure()
    tgt = lin_structure(L.symbols())
    d = observables[0].shape[0]
    eye = np.eye(d)
    mats = {}
    for a, O in enumerate(observables):
        O = np.asarray(O, dtype=complex)
        mats[(a, 0)] = (eye + O) / 2
        mats[(a, 1)] = (eye - O) / 2
    return PvmRepresentation(src, tgt, d, mats, oracular)


# -- JSON ---------------------------------------------------------------------------


def _matrix_to_json(M) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(M)]


def _matrix_from_json(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)


def representation_to_json(rep: PvmRepresentation) -> dict:
    return {
        "source": structure_to_json(rep.source),
        "target": structure_to_json(rep.target),
        "dimension": rep.dimension,
        "oracular": rep.oracular,
        "matrices": {f"{a},{b}": _matrix_to_json(M) for (a, b), M in sorted(rep.matrices.items())},
    }


def representation_from_json(doc) -> PvmRepresentation:
    mats = {}
    for key, rows in doc["matrices"].items():
        a, b = (int(p) for p in key.split(","))
        mats[(a, b)] = _matrix_from_json(rows)
    return PvmRepresentation(
        structure_from_json(doc["source"]),
        structure_from_json(doc["target"]),
        int(doc["dimension"]),
        mats,
        bool(doc.get("oracular", False)),
    )


def magic_unitary_to_json(u: MagicUnitary) -> dict:
    return {"entries": [[_matrix_to_json(u.entries[x, a]) for a in range(u.size)] for x in range(u.size)]}


def magic_unitary_from_json(doc) -> MagicUnitary:
    return MagicUnitary(np.array([[_matrix_from_json(m) for m in row] for row in doc["entries"]]))


def report_to_json(report: ViolationReport) -> dict:
    return {
        "tol": report.tol,
        "ok": report.ok,
        "max_residual": report.max_residual,
        "checked": report.checked,
        "sampled": report.sampled,
        "violations": [{"relation": v.relation, "residual": v.residual} for v in report.violations],
    }
