import itertools
import random
from fractions import Fraction

import numpy as np
import pytest

from commgadget.games import (
    Game,
    GameError,
    ValueBudgetExceeded,
    build_game,
    classical_value,
    game_from_json,
    game_to_json,
    solve_classical,
)
from commgadget.homsearch import enumerate_homomorphisms
from commgadget.relstruct import build_structure, complete_graph, lin_structure, magic_square

MSQ = magic_square()
MSQ_S = MSQ.to_structure()
MSQ_LIN = lin_structure(MSQ.symbols())


def cycle(n):
    edges = [(i, (i + 1) % n) for i in range(n)] + [((i + 1) % n, i) for i in range(n)]
    return build_structure(n, {"E": 2}, {"E": edges})


def magic_cc_oracle():
    """Synchronous c-c value of the magic square from first principles.

    Every constraint gets any triple in {0,1}^3 (no pruning); a question pair
    wins when both triples satisfy their own parity and agree on shared cells.
    """
    cons = [(vs, rhs) for rhs, vs in MSQ.constraints]
    triples = list(itertools.product((0, 1), repeat=3))
    m = len(cons)
    W = np.zeros((m, m, 8, 8), dtype=np.int64)
    for i, (xs, r1) in enumerate(cons):
        for j, (ys, r2) in enumerate(cons):
            for a, t1 in enumerate(triples):
                for b, t2 in enumerate(triples):
                    ok = sum(t1) % 2 == r1 and sum(t2) % 2 == r2
                    ok = ok and all(t1[p] == t2[q] for p in range(3) for q in range(3) if xs[p] == ys[q])
                    W[i, j, a, b] = ok
    strategies = np.array(list(itertools.product(range(8), repeat=m)), dtype=np.int64)
    score = np.zeros(len(strategies), dtype=np.int64)
    for i in range(m):
        for j in range(m):
            score += W[i, j, strategies[:, i], strategies[:, j]]
    return Fraction(int(score.max()), m * m), len(strategies)


def test_assignment_game_shape():
    K3 = complete_graph(3)
    g = build_game(K3, K3, "a")
    assert len(g.alice_questions) == len(g.bob_questions) == 3
    assert len(g.alice_answers) == len(g.bob_answers) == 3
    assert set(g.distribution.values()) == {Fraction(1, 6)}


def test_assignment_needs_binary():
    with pytest.raises(GameError):
        build_game(MSQ_S, MSQ_LIN, "a")


def test_unnormalized_distribution():
    K3 = complete_graph(3)
    with pytest.raises(GameError):
        build_game(K3, K3, "a", {("E", (0, 1)): Fraction(1, 2)})
    with pytest.raises(GameError):
        build_game(K3, K3, "zz")


def test_cc_game_shape():
    g = build_game(MSQ_S, MSQ_LIN, "cc")
    assert len(g.alice_questions) == len(g.bob_questions) == 6
    assert g.synchronous
    for x in range(6):
        winners = {a for (q, y, a, b) in g.accept if q == x}
        assert len(winners) == 4


def test_cv_game_shape_and_marginal():
    g = build_game(MSQ_S, MSQ_LIN, "cv")
    assert len(g.bob_questions) == 9
    assert len(g.alice_questions) == 6
    assert sum(g.distribution.values()) == 1
    # each constraint has 3 distinct variables: (c, y) gets (1/6)/3
    assert set(g.distribution.values()) == {Fraction(1, 18)}


def test_cv_marginal_with_repeats():
    from commgadget.relstruct import LinearStructure, homogenise

    H, j = homogenise(LinearStructure(1, ()))  # single tuple (0, j, 0, j)
    S = H.to_structure()
    g = build_game(S, lin_structure(H.symbols()), "cv")
    assert g.distribution == {(0, 0): Fraction(1, 2), (0, j): Fraction(1, 2)}


def test_k3_values():
    K3, K2 = complete_graph(3), complete_graph(2)
    assert classical_value(build_game(K3, K3, "a")) == 1
    assert classical_value(build_game(K3, K3, "a"), synchronous_only=True) == 1
    # without consistency questions Alice can answer 0 and Bob 1 everywhere
    assert classical_value(build_game(K3, K2, "a")) == 1
    assert classical_value(build_game(K3, K2, "a"), synchronous_only=True) == Fraction(2, 3)


def test_magic_square_cc_value_matches_brute_force():
    g = build_game(MSQ_S, MSQ_LIN, "cc")
    pruned = solve_classical(g, synchronous_only=True)
    assert pruned.strategies_examined <= 4**6
    oracle, n = magic_cc_oracle()
    assert n == 8**6
    assert pruned.value == oracle == Fraction(17, 18)


def test_magic_square_cc_unpruned_solver():
    g = build_game(MSQ_S, MSQ_LIN, "cc")
    assert solve_classical(g, synchronous_only=True, prune=False).value == Fraction(17, 18)


def test_magic_square_cv_value_below_one():
    g = build_game(MSQ_S, MSQ_LIN, "cv")
    v = classical_value(g)
    assert 0 < v < 1
    assert v == solve_classical(g, prune=False).value


PAIRS = [
    (complete_graph(3), complete_graph(3)),
    (complete_graph(3), complete_graph(2)),
    (cycle(4), complete_graph(2)),
    (cycle(5), complete_graph(2)),
    (cycle(5), complete_graph(3)),
]


@pytest.mark.parametrize("X,A", PAIRS)
def test_value_one_iff_homomorphism(X, A):
    g = build_game(X, A, "a")
    has_hom = bool(enumerate_homomorphisms(X, A, limit=1))
    sync = classical_value(g, synchronous_only=True)
    assert (sync == 1) == has_hom
    full = classical_value(g)
    assert 0 <= sync <= full <= 1


def _relabel(g: Game, seed: int) -> Game:
    rng = random.Random(seed)
    def perm(n):
        p = list(range(n))
        rng.shuffle(p)
        return p
    qa, qb = perm(len(g.alice_questions)), perm(len(g.bob_questions))
    aa, ab = perm(len(g.alice_answers)), perm(len(g.bob_answers))
    dist = {(qa[x], qb[y]): p for (x, y), p in g.distribution.items()}
    acc = {(qa[x], qb[y], aa[a], ab[b]) for x, y, a, b in g.accept}
    return Game(
        [None] * len(qa), [None] * len(qb), [None] * len(aa), [None] * len(ab), dist, frozenset(acc)
    )


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_value_invariant_under_relabeling(seed):
    g = build_game(cycle(5), complete_graph(3), "a")
    assert classical_value(_relabel(g, seed)) == classical_value(g)
    h = build_game(MSQ_S, MSQ_LIN, "cv")
    assert classical_value(_relabel(h, seed)) == classical_value(h)


def test_budget_reports_lower_bound():
    g = build_game(MSQ_S, MSQ_LIN, "cc")
    with pytest.raises(ValueBudgetExceeded) as info:
        solve_classical(g, synchronous_only=True, budget=10)
    assert 0 <= info.value.lower_bound <= Fraction(17, 18)


def test_game_validation():
    with pytest.raises(GameError):
        Game(["x"], ["y"], ["a"], ["b"], {(0, 0): Fraction(1, 2)}, frozenset())
    with pytest.raises(GameError):
        Game(["x"], ["x"], ["a", "b"], ["a", "b"], {(0, 0): 1}, frozenset({(0, 0, 0, 1)}), synchronous=True)


def test_json_roundtrip():
    g = build_game(MSQ_S, MSQ_LIN, "cc")
    h = game_from_json(game_to_json(g))
    assert h.distribution == g.distribution and h.accept == g.accept and h.synchronous
