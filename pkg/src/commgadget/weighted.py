"""Defects of weighted homomorphism algebras under the normalized trace.

``||M||_tau^2 = tau(M* M)`` with ``tau = trace / d``. A strategy carries a PVM
``p^a`` per variable and, for the constraint flavours, a PVM ``Phi^{R,a}``
per constraint indexed by the satisfying target tuples.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .relstruct import Structure, as_linear, as_structure, lin_structure

PVM_TOL = 1e-8
FLAVORS = ("assignment", "constraint-variable", "constraint-constraint")
_ALIASES = {"a": "assignment", "cv": "constraint-variable", "c-v": "constraint-variable",
            "cc": "constraint-constraint", "c-c": "constraint-constraint"}


class StrategyError(ValueError):
    pass


def tau_norm2(M) -> float:
    """``tau(M* M)`` for the normalized trace."""
    M = np.asarray(M)
    return float(np.vdot(M, M).real) / M.shape[0]


def constraints_of(A) -> list[tuple[str, tuple]]:
    """``(R, a)`` for every symbol and source tuple, in signature then tuple order."""
    A = as_structure(A)
    return [(s, tuple(t)) for s in A.signature for t in A.relations[s]]


def _flavor(name: str) -> str:
    name = _ALIASES.get(name, name)
    if name not in FLAVORS:
        raise ValueError(f"unknown flavor {name!r}")
    return name


@dataclass
class WeightSpec:
    flavor: str
    distribution: dict  # constraint, or (constraint, constraint), -> Fraction

    def __post_init__(self):
        self.flavor = _flavor(self.flavor)
        self.distribution = {k: Fraction(v) for k, v in self.distribution.items()}
        if any(v < 0 for v in self.distribution.values()):
            raise ValueError("weights must be nonnegative")
        if self.distribution and sum(self.distribution.values()) != 1:
            raise ValueError("weights must sum to 1")

    @classmethod
    def uniform(cls, flavor: str, A) -> "WeightSpec":
        flavor = _flavor(flavor)
        cons = constraints_of(A)
        keys = list(itertools.product(cons, repeat=2)) if flavor == "constraint-constraint" else cons
        return cls(flavor, {k: Fraction(1, len(keys)) for k in keys})

    @classmethod
    def point(cls, flavor: str, key) -> "WeightSpec":
        return cls(flavor, {key: Fraction(1)})


@dataclass
class StrategyRep:
    dimension: int
    variables: dict  # (a, b) -> matrix
    constraints: dict = field(default_factory=dict)  # ((R, a), b-tuple) -> matrix

    def __post_init__(self):
        d = self.dimension
        conv = lambda M: np.asarray(M, dtype=complex)  # noqa: E731
        self.variables = {k: conv(M) for k, M in self.variables.items()}
        self.constraints = {(tuple(c), tuple(b)): conv(M) for (c, b), M in self.constraints.items()}
        for M in itertools.chain(self.variables.values(), self.constraints.values()):
            if M.shape != (d, d):
                raise StrategyError(f"matrix of shape {M.shape}, expected {(d, d)}")

    def p(self, a: int, b: int) -> np.ndarray:
        try:
            return self.variables[(a, b)]
        except KeyError:
            raise StrategyError(f"missing variable PVM entry {(a, b)}") from None

    def phi(self, c, b) -> np.ndarray:
        try:
            return self.constraints[(c, tuple(b))]
        except KeyError:
            raise StrategyError(f"missing constraint PVM entry {c} -> {tuple(b)}") from None

    def phi_marginal(self, c, i: int, b: int, allowed) -> np.ndarray:
        """``Phi^{R,a,i}_b``: sum of ``Phi_bb`` over satisfying ``bb`` with ``bb_i = b``."""
        d = self.dimension
        return sum((self.phi(c, bb) for bb in allowed if bb[i] == b), np.zeros((d, d), dtype=complex))

    def validate(self, A, B, need_constraints: bool, tol: float = PVM_TOL) -> None:
        A, B = as_structure(A), as_structure(B)
        eye = np.eye(self.dimension)
        fams = [[self.p(a, b) for b in range(B.domain_size)] for a in range(A.domain_size)]
        if need_constraints:
            for c in constraints_of(A):
                fams.append([self.phi(c, bb) for bb in _satisfying(B, c[0])])
        for fam in fams:
            for P in fam:
                if np.linalg.norm(P @ P - P) > tol or np.linalg.norm(P.conj().T - P) > tol:
                    raise StrategyError("PVM entry is not a projection")
            if np.linalg.norm(sum(fam) - eye) > tol:
                raise StrategyError("PVM family does not sum to the identity")


@dataclass
class DefectReport:
    defect: float
    terms: list = field(default_factory=list)  # (description, value)
    comm: dict = field(default_factory=dict)


def _satisfying(B: Structure, symbol: str) -> list[tuple]:
    return sorted(B.relations[symbol].tuples())


def _check_weights(w: WeightSpec, flavor: str):
    if w.flavor != flavor:
        raise ValueError(f"expected a {flavor} weight spec, got {w.flavor}")


def _report(terms) -> DefectReport:
    terms = [(desc, max(v, 0.0)) for desc, v in terms]
    return DefectReport(float(sum(v for _, v in terms)), terms)


def defect_assignment(s: StrategyRep, A, B, w: WeightSpec | None = None, tol: float = PVM_TOL) -> DefectReport:
    """``sum pi(R,a) sum_{b not in R^B} ||p^{a1}_{b1} ... p^{ar}_{br}||_tau^2``."""
    A, B = as_structure(A), as_structure(B)
    w = w or WeightSpec.uniform("assignment", A)
    _check_weights(w, "assignment")
    s.validate(A, B, False, tol)
    eye = np.eye(s.dimension)
    terms = []
    for c, pi in w.distribution.items():
        R, t = c
        if not pi:
            continue
        rel = B.relations[R]
        for bt in itertools.product(range(B.domain_size), repeat=len(t)):
            if bt in rel:
                continue
            M = eye
            for a, b in zip(t, bt):
                M = M @ s.p(a, b)
            terms.append((f"{R}{t}->{bt}", float(pi) * tau_norm2(M)))
    return _report(terms)


def defect_cv(s: StrategyRep, A, B, w: WeightSpec | None = None, tol: float = PVM_TOL) -> DefectReport:
    """``sum pi(R,a)/ar(R) sum_{b in R^B} sum_i ||Phi_b (I - p^{a_i}_{b_i})||_tau^2``."""
    A, B = as_structure(A), as_structure(B)
    w = w or WeightSpec.uniform("constraint-variable", A)
    _check_weights(w, "constraint-variable")
    s.validate(A, B, True, tol)
    eye = np.eye(s.dimension)
    terms = []
    for c, pi in w.distribution.items():
        R, t = c
        if not pi:
            continue
        weight = float(pi) / len(t)
        for bt in _satisfying(B, R):
            Phi = s.phi(c, bt)
            for i, (a, b) in enumerate(zip(t, bt)):
                terms.append((f"{R}{t}->{bt} at {i}", weight * tau_norm2(Phi @ (eye - s.p(a, b)))))
    return _report(terms)


def conflicting(t1, b1, t2, b2) -> bool:
    """Some shared variable gets different values."""
    return any(x == y and u != v for x, u in zip(t1, b1) for y, v in zip(t2, b2))


def defect_cc(s: StrategyRep, A, B, w: WeightSpec | None = None, tol: float = PVM_TOL) -> DefectReport:
    """``sum pi(c, c') ||Phi^c_b Phi^{c'}_{b'}||_tau^2`` over conflicting answer pairs."""
    A, B = as_structure(A), as_structure(B)
    w = w or WeightSpec.uniform("constraint-constraint", A)
    _check_weights(w, "constraint-constraint")
    s.validate(A, B, True, tol)
    terms = []
    for (c1, c2), pi in w.distribution.items():
        if not pi or not set(c1[1]) & set(c2[1]):
            continue
        for b1 in _satisfying(B, c1[0]):
            for b2 in _satisfying(B, c2[0]):
                if conflicting(c1[1], b1, c2[1], b2):
                    val = float(pi) * tau_norm2(s.phi(c1, b1) @ s.phi(c2, b2))
                    terms.append((f"{c1}->{b1} / {c2}->{b2}", val))
    return _report(terms)


def comm_defect(s: StrategyRep, x: int, y: int) -> float:
    """``sum_{a,b} ||[p^x_a, p^y_b]||_tau^2``."""
    xs = sorted(b for (a, b) in s.variables if a == x)
    ys = sorted(b for (a, b) in s.variables if a == y)
    if not xs:
        raise StrategyError(f"unknown variable {x}")
    if not ys:
        raise StrategyError(f"unknown variable {y}")
    total = 0.0
    for a in xs:
        P = s.variables[(x, a)]
        for b in ys:
            Q = s.variables[(y, b)]
            total += tau_norm2(P @ Q - Q @ P)
    return total


@dataclass
class CCCommDefect:
    raw: float
    m: int

    @property
    def averaged(self) -> float:
        return self.raw / self.m**2 if self.m else 0.0


def cc_comm_defect(s: StrategyRep, A, B, x: int, y: int, m: int | None = None) -> CCCommDefect:
    """Commutators of constraint marginals at x against those at y.

    Sums ``||[Phi^{R,a,i}_u, Phi^{S,c,j}_v]||_tau^2`` over constraints with
    ``a_i = x``, ``c_j = y`` and values u, v. The averaged value divides by
    ``m^2``; ``m`` defaults to the number of constraints of A.
    """
    A, B = as_structure(A), as_structure(B)
    cons = constraints_of(A)
    at_x = [(c, i) for c in cons for i, a in enumerate(c[1]) if a == x]
    at_y = [(c, j) for c in cons for j, a in enumerate(c[1]) if a == y]
    margs = {}

    def marg(c, i, b):
        key = (c, i, b)
        if key not in margs:
            margs[key] = s.phi_marginal(c, i, b, _satisfying(B, c[0]))
        return margs[key]

    raw = 0.0
    for c1, i in at_x:
        for c2, j in at_y:
            for u in range(B.domain_size):
                P = marg(c1, i, u)
                for v in range(B.domain_size):
                    Q = marg(c2, j, v)
                    raw += tau_norm2(P @ Q - Q @ P)
    return CCCommDefect(raw, len(cons) if m is None else m)


def joint_spectral_strategy(A, observables) -> StrategyRep:
    """Strategy from commuting-per-constraint order-2 observables.

    ``p^a_b = (I + (-1)^b O_a)/2`` and ``Phi^{R,a}_b = prod_i p^{a_i}_{b_i}``
    for satisfying ``b``, the joint spectral projections.
    """
    L = as_linear(A)
    S = L.to_structure()
    B = lin_structure(L.symbols())
    d = observables[0].shape[0]
    eye = np.eye(d)
    var = {}
    for a, O in enumerate(observables):
        var[(a, 0)] = (eye + O) / 2
        var[(a, 1)] = (eye - O) / 2
    cons = {}
    for c in constraints_of(S):
        for bt in _satisfying(B, c[0]):
            M = eye
            for a, b in zip(c[1], bt):
                M = M @ var[(a, b)]
            cons[(c, bt)] = M
    return StrategyRep(d, var, cons)


def assignment_strategy(A, B, f, answers: dict | None = None) -> StrategyRep:
    """1-dimensional strategy: variables follow ``f``, each constraint answers ``answers[c]``.

    ``answers`` defaults to the restriction of ``f``; every answer must be a
    satisfying tuple, so a globally inconsistent choice is how a classical
    strategy loses.
    """
    A, B = as_structure(A), as_structure(B)
    answers = dict(answers or {})
    var = {(a, b): [[1.0 if f[a] == b else 0.0]] for a in range(A.domain_size) for b in range(B.domain_size)}
    cons = {}
    for c in constraints_of(A):
        allowed = _satisfying(B, c[0])
        pick = tuple(answers.get(c, tuple(f[a] for a in c[1])))
        if pick not in allowed:
            raise StrategyError(f"answer {pick} does not satisfy {c}")
        for bt in allowed:
            cons[(c, bt)] = [[1.0 if bt == pick else 0.0]]
    return StrategyRep(1, var, cons)


# -- JSON ---------------------------------------------------------------------------


def _mat(M):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(M)]


def _unmat(rows):
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)


def strategy_to_json(s: StrategyRep) -> dict:
    return {
        "dimension": s.dimension,
        "variables": {f"{a},{b}": _mat(M) for (a, b), M in sorted(s.variables.items())},
        "constraints": [
            {"symbol": c[0], "tuple": list(c[1]), "value": list(bt), "matrix": _mat(M)}
            for (c, bt), M in sorted(s.constraints.items(), key=lambda kv: (kv[0][0], kv[0][1]))
        ],
    }


def strategy_from_json(doc) -> StrategyRep:
    var = {}
    for key, rows in doc["variables"].items():
        a, b = (int(p) for p in key.split(","))
        var[(a, b)] = _unmat(rows)
    cons = {}
    for e in doc.get("constraints", []):
        cons[((e["symbol"], tuple(e["tuple"])), tuple(e["value"]))] = _unmat(e["matrix"])
    return StrategyRep(int(doc["dimension"]), var, cons)


def _key_to_json(key):
    if isinstance(key[0], tuple):  # constraint pair
        return [_key_to_json(key[0]), _key_to_json(key[1])]
    return {"symbol": key[0], "tuple": list(key[1])}


def _key_from_json(doc):
    if isinstance(doc, list):
        return (_key_from_json(doc[0]), _key_from_json(doc[1]))
    return (doc["symbol"], tuple(doc["tuple"]))


def weights_to_json(w: WeightSpec) -> dict:
    return {
        "flavor": w.flavor,
        "weights": [{"key": _key_to_json(k), "num": v.numerator, "den": v.denominator} for k, v in w.distribution.items()],
    }


def weights_from_json(doc) -> WeightSpec:
    return WeightSpec(doc["flavor"], {_key_from_json(e["key"]): Fraction(e["num"], e["den"]) for e in doc["weights"]})


def report_to_json(r: DefectReport) -> dict:
    return {"defect": r.defect, "terms": [{"term": d, "value": v} for d, v in r.terms if v > 0]}
