import itertools
import random

import numpy as np
import pytest

from commgadget.fpgroups import (
    EXCEEDED,
    INCONCLUSIVE,
    NO,
    YES,
    GroupPresentation,
    PresentationError,
    combine,
    commutator,
    cyclic_group,
    free_reduce,
    group_order,
    inverse,
    parse_word,
    presentation_from_json,
    presentation_to_json,
    quotient_by_normal_closure,
    solution_group,
    todd_coxeter,
    word_is_trivial,
)
from commgadget.relstruct import LinearStructure, a7_structure, homogenise, magic_square
from commgadget.repalg import magic_square_observables

SINGLE = LinearStructure(3, ((1, (0, 1, 2)),))
SINGLE_H = LinearStructure(3, ((0, (0, 1, 2)),))
KLEIN = GroupPresentation(("a", "b"), ((1, 1), (2, 2), (1, 2, 1, 2)))


def matrix_group_order(gens):
    """Closure of a finite matrix group by breadth-first multiplication."""
    def key(M):
        return tuple(np.round(M, 8).flatten().tolist())

    d = gens[0].shape[0]
    seen = {key(np.eye(d)): np.eye(d)}
    frontier = [np.eye(d)]
    while frontier:
        nxt = []
        for M in frontier:
            for g in gens:
                P = M @ g
                k = key(P)
                if k not in seen:
                    seen[k] = P
                    nxt.append(P)
        frontier = nxt
    return len(seen)


def test_word_helpers():
    assert inverse((1, -2, 3)) == (-3, 2, -1)
    assert free_reduce((1, 2, -2, -1, 3)) == (3,)
    assert commutator((1,), (2,)) == (1, 2, -1, -2)


def test_parse_word():
    gens = ("x1", "x5", "J")
    assert parse_word("[x1,x5]J^-1", gens) == (1, 2, -1, -2, -3)
    assert parse_word("(x1 x5)^2", gens) == (1, 2, 1, 2)
    assert parse_word("x1*J^-2", gens) == (1, -3, -3)
    assert parse_word("1", gens) == ()
    with pytest.raises(PresentationError):
        parse_word("x9", gens)
    with pytest.raises(PresentationError):
        parse_word("[x1 x5", gens)


def test_presentation_validation():
    with pytest.raises(PresentationError):
        GroupPresentation(("a",), ((),))
    with pytest.raises(PresentationError):
        GroupPresentation(("a",), ((2,),))
    with pytest.raises(PresentationError):
        GroupPresentation(("a", "a"))


@pytest.mark.parametrize(
    "g,order",
    [
        (cyclic_group(3), 3),
        (KLEIN, 4),
        (GroupPresentation(("a", "b"), ((1, 1, 1), (2, 2), (1, 2, 1, 2))), 6),
        (GroupPresentation(("a", "b"), ((1,) * 4, (2, 2), (1, 2, 1, 2))), 8),
    ],
)
def test_small_orders(g, order):
    t = todd_coxeter(g)
    assert t.complete and t.index == order


def test_table_is_permutation_action():
    g = solution_group(magic_square()).presentation
    t = todd_coxeter(g)
    n = t.index
    for i in range(len(g.generators)):
        col = [row[2 * i] for row in t.table]
        inv = [row[2 * i + 1] for row in t.table]
        assert sorted(col) == list(range(n))
        assert all(inv[col[c]] == c for c in range(n))
    for r in g.relators:
        assert all(t.act(c, r) == c for c in range(n))


def test_subgroup_index():
    # <a> in S3 = <a,b | a^3, b^2, (ab)^2> has index 2
    g = GroupPresentation(("a", "b"), ((1, 1, 1), (2, 2), (1, 2, 1, 2)))
    t = todd_coxeter(g, [(1,)])
    assert t.index == 2


def test_exceeded_is_a_status():
    free = combine(cyclic_group(2, "a"), cyclic_group(2, "b"))
    t = todd_coxeter(free, max_cosets=500)
    assert t.status == EXCEEDED and t.index is None
    assert word_is_trivial(free, (1, 2), max_cosets=500) == INCONCLUSIVE
    with pytest.raises(ValueError):
        todd_coxeter(free, max_cosets=0)


def test_combine_klein():
    free = combine(cyclic_group(2, "a"), cyclic_group(2, "b"))
    assert free.generators == ("a", "b")
    assert group_order(quotient_by_normal_closure(free, [(1, 2, 1, 2)])) == 4


def test_combine_renames_clashes():
    g = combine(cyclic_group(2), cyclic_group(3))
    assert g.generators == ("a", "a'")
    assert group_order(g, max_cosets=1000) is None


def test_amalgamated_z4():
    am = combine(cyclic_group(4, "a"), cyclic_group(4, "b"), [((1, 1), (1, 1))])
    g = quotient_by_normal_closure(am, [(1, -2)])
    assert group_order(g) == 4


def test_quotient_examples():
    assert group_order(quotient_by_normal_closure(cyclic_group(4), [(1, 1)])) == 2
    g = cyclic_group(4)
    assert quotient_by_normal_closure(g, []) == g


def test_word_problem_klein():
    assert word_is_trivial(KLEIN, (1, 2, 1, 2)) == YES
    assert word_is_trivial(KLEIN, "a b a b") == YES
    assert word_is_trivial(KLEIN, "a") == NO


def test_solution_group_relators():
    spec = solution_group(SINGLE)
    g = spec.presentation
    assert g.generators == ("x0", "x1", "x2", "J")
    J = spec.j_generator
    assert (J, J) in g.relators
    for a in (1, 2, 3):
        assert (a, a) in g.relators
        assert commutator((a,), (J,)) in g.relators
    assert (1, 2, 3, -J) in g.relators
    for a, b in itertools.combinations((1, 2, 3), 2):
        assert commutator((a,), (b,)) in g.relators
    assert group_order(g) == 8


def test_solution_group_homogeneous_mode():
    spec = solution_group(SINGLE_H, homogeneous=True)
    assert spec.j_generator is None
    assert "J" not in spec.presentation.generators
    assert group_order(spec.presentation) == 4
    with pytest.raises(PresentationError):
        solution_group(SINGLE, homogeneous=True)


def test_magic_square_group():
    g = solution_group(magic_square()).presentation
    assert g.generators[:9] == tuple(f"x{i}" for i in range(1, 10))
    t = todd_coxeter(g)
    assert t.complete
    assert word_is_trivial(g, "[x1,x5]J^-1", table=t) == YES
    assert word_is_trivial(g, "[x2,x4]J^-1", table=t) == YES
    assert word_is_trivial(g, "J", table=t) == NO
    # the real two-qubit observables give an order-32 quotient; enumeration says it is faithful
    assert matrix_group_order(magic_square_observables()) == 32 == t.index


def _shuffled(g: GroupPresentation, seed: int) -> GroupPresentation:
    rels = list(g.relators)
    random.Random(seed).shuffle(rels)
    return GroupPresentation(g.generators, tuple(rels))


def _renamed(g: GroupPresentation) -> GroupPresentation:
    # reverse the generator order and rename
    n = len(g.generators)
    perm = {i + 1: n - i for i in range(n)}
    rels = tuple(tuple(perm[abs(x)] * (1 if x > 0 else -1) for x in r) for r in g.relators)
    return GroupPresentation(tuple(f"g{i}" for i in range(n)), rels)


def test_order_invariance_magic_square():
    g = solution_group(magic_square()).presentation
    assert group_order(_shuffled(g, 1)) == group_order(_renamed(g)) == group_order(g) == 32


@pytest.mark.slow
def test_order_invariance_a7():
    g = solution_group(a7_structure(), homogeneous=True).presentation
    assert group_order(_shuffled(g, 7)) == group_order(_renamed(g)) == 7560


def test_homogenise_preserves_order():
    for A, order in ((SINGLE, 8), (magic_square(), 32)):
        B, _ = homogenise(A)
        assert group_order(solution_group(A).presentation) == order
        assert group_order(solution_group(B, homogeneous=True).presentation) == order


def test_homogeneous_part_order_relation():
    # Gamma(A_H) = Gamma_H(A_H) x Z_2 at the level of orders
    gh = solution_group(SINGLE_H, homogeneous=True).presentation
    g = solution_group(SINGLE_H).presentation
    assert group_order(g) == 2 * group_order(gh)


def test_json_roundtrip():
    g = solution_group(magic_square()).presentation
    assert presentation_from_json(presentation_to_json(g)) == g
    with pytest.raises(PresentationError):
        presentation_from_json({"generators": ["a"]})
