"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s`` or as a script.
"""

import contextlib
import math
import time

import numpy as np
import pytest

from commgadget.fpgroups import (
    NO,
    YES,
    commutator,
    group_order,
    quotient_by_normal_closure,
    solution_group,
    todd_coxeter,
    word_is_trivial,
)
from commgadget.gadget import build_commutativity_gadget, verify_gadget_property_i
from commgadget.games import build_game, classical_value, solve_classical
from commgadget.homsearch import decompose_projection, enumerate_polymorphisms, search_mappings
from commgadget.relstruct import (
    LinearStructure,
    a7_structure,
    complete_graph,
    completion,
    encode_graph,
    homogeneous_part,
    homogenise,
    lin_structure,
    magic_square,
)
from commgadget.repalg import (
    block_magic_unitary,
    check_representation,
    complete_graph_identities,
    entry_commutator_norm,
    magic_square_observables,
    magic_unitary_rep,
    observable_representation,
    pi_projection,
)
from commgadget.weighted import comm_defect, defect_cc, defect_cv, joint_spectral_strategy

SINGLE = LinearStructure(3, ((1, (0, 1, 2)),))


@contextlib.contextmanager
def criterion(number, title, limit_s, capsys=None):
    start = time.perf_counter()
    status, detail = "FAIL", ""
    notes = {}
    try:
        yield notes
        elapsed = time.perf_counter() - start
        assert elapsed < limit_s, f"took {elapsed:.1f}s, limit {limit_s}s"
        status = "PASS"
    except AssertionError as exc:
        first = str(exc).splitlines()[0] if str(exc) else ""
        detail = f" ({first})" if first else ""
        raise
    finally:
        elapsed = time.perf_counter() - start
        extra = "".join(f" {k}={v}" for k, v in notes.items())
        line = f"[criterion {number}] {status} {title} in {elapsed:.2f}s{extra}{detail}"
        ctx = capsys.disabled() if capsys is not None else contextlib.nullcontext()
        with ctx:
            print("\n" + line)


def gf2_count(L: LinearStructure) -> int:
    """Solutions of a parity system by Gaussian elimination over GF(2)."""
    pivots = {}
    consistent = True
    for rhs, vs in L.constraints:
        row = 0
        for v in vs:
            row ^= 1 << v
        row |= rhs << L.num_variables
        for bit in sorted(pivots, reverse=True):
            if row >> bit & 1:
                row ^= pivots[bit]
        lead = (row & ((1 << L.num_variables) - 1)).bit_length() - 1
        if lead < 0:
            consistent = consistent and not row
            continue
        for bit, p in pivots.items():
            if p >> lead & 1:
                pivots[bit] = p ^ row
        pivots[lead] = row
    return 2 ** (L.num_variables - len(pivots)) if consistent else 0


def test_criterion_1_polymorphism_collapse(capsys):
    # the time limit is per run; the block holds all four
    with criterion(1, "complete-graph polymorphisms", 4 * 60, capsys) as notes:
        for n, k, expected in ((3, 1, 6), (3, 2, 12), (3, 3, 18), (4, 2, 48)):
            start = time.perf_counter()
            polys = enumerate_polymorphisms(complete_graph(n), k)
            assert time.perf_counter() - start < 60
            notes[f"K{n}^{k}"] = len(polys)
            assert len(polys) == expected == k * math.factorial(n)
            assert all(decompose_projection(f) is not None for f in polys)


def test_criterion_2_gadget_construction(capsys):
    with criterion(2, "K3 commutativity gadget", 10, capsys) as notes:
        g = build_commutativity_gadget(complete_graph(3))
        rep = verify_gadget_property_i(g)
        notes["exponent"] = g.exponent
        notes["domain"] = g.structure.domain_size
        notes["witnesses"] = sum(w.valid for w in rep.witnesses)
        assert g.exponent == 9 and g.structure.domain_size == 19683
        assert len(rep.witnesses) == 9 and rep.valid


def test_criterion_3_magic_square_group(capsys):
    with criterion(3, "magic-square solution group", 60, capsys) as notes:
        g = solution_group(magic_square()).presentation
        t = todd_coxeter(g)
        notes["order"] = t.index
        assert t.complete
        assert word_is_trivial(g, "[x1,x5]J^-1", table=t) == YES
        assert word_is_trivial(g, "J", table=t) == NO
        assert word_is_trivial(g, "[x2,x4]J^-1", table=t) == YES


def test_criterion_4_a7_group(capsys):
    with criterion(4, "A7 structure group", 15 * 60, capsys) as notes:
        A = a7_structure()
        spec = solution_group(A, homogeneous=True)
        order = group_order(spec.presentation, max_cosets=10**6)
        notes["order"] = order
        assert order == 7560
        a1, a2 = spec.x(A.marks["a1"]), spec.x(A.marks["a2"])
        q = quotient_by_normal_closure(spec.presentation, [commutator((a1,), (a2,))])
        notes["quotient_order"] = group_order(q, max_cosets=10**6)
        assert notes["quotient_order"] == 1


def test_criterion_5_homogenisation_preserves_order(capsys):
    with criterion(5, "homogenisation keeps the group order", 120, capsys) as notes:
        for name, A, expected in (("single", SINGLE, 8), ("magic", magic_square(), 32)):
            H, _ = homogenise(A)
            full = group_order(solution_group(A).presentation)
            hom = group_order(solution_group(H, homogeneous=True).presentation)
            notes[name] = f"{full}/{hom}"
            assert full == hom == expected


def test_criterion_6_magic_square_strategy(capsys):
    with criterion(6, "magic-square quantum strategy", 5, capsys) as notes:
        msq = magic_square()
        S, L = msq.to_structure(), lin_structure(msq.symbols())
        obs = magic_square_observables()
        r = check_representation(observable_representation(msq, obs, True), tol=1e-9)
        assert r.ok and r.max_residual <= 1e-9
        s = joint_spectral_strategy(msq, obs)
        cv, cc = defect_cv(s, S, L).defect, defect_cc(s, S, L).defect
        assert cv <= 1e-9 and cc <= 1e-9
        # variables x1 and x5 are elements 0 and 4
        cd = comm_defect(s, 0, 4)
        notes["comm_defect"] = f"{cd:.6f}"
        assert abs(cd - 0.25) <= 1e-6, f"comm_defect(x1,x5) = {cd:.6f}, expected 0.25"


def test_criterion_7_identity_suite(capsys):
    with criterion(7, "K4 magic-unitary identities", 5, capsys) as notes:
        u = block_magic_unitary(np.pi / 4)
        for i in (0, 1):
            rep = magic_unitary_rep(u, i, 2)
            assert check_representation(rep, tol=1e-9).ok
            ids = complete_graph_identities(rep, tol=1e-9)
            assert ids.ok, ids.residuals
            total = sum(pi_projection(rep, {a}) for a in range(2))
            assert np.linalg.norm(total - np.eye(rep.dimension)) <= 1e-9
        norm = entry_commutator_norm(u, (0, 0), (2, 2))
        notes["commutator_norm"] = f"{norm:.4f}"
        assert norm > 0.1


def test_criterion_8_game_values(capsys):
    with criterion(8, "game values", 300, capsys) as notes:
        K3, K2 = complete_graph(3), complete_graph(2)
        assert classical_value(build_game(K3, K3, "a")) == 1
        k3k2 = build_game(K3, K2, "a")
        notes["k3k2_sync"] = classical_value(k3k2, synchronous_only=True)
        notes["k3k2_unrestricted"] = classical_value(k3k2)
        assert notes["k3k2_sync"] < 1
        msq = magic_square()
        g = build_game(msq.to_structure(), lin_structure(msq.symbols()), "cc")
        pruned = solve_classical(g, synchronous_only=True).value
        brute = solve_classical(g, synchronous_only=True, prune=False).value
        notes["magic_cc"] = pruned
        assert pruned == brute < 1


def test_criterion_9_encoding_correspondence(capsys):
    with criterion(9, "graph-encoding endomorphisms", 60, capsys) as notes:
        AH = homogeneous_part(SINGLE)
        G = completion(encode_graph(AH).structure)
        count = len(search_mappings(G, G))
        notes["endomorphisms"] = count
        notes["solutions"] = gf2_count(AH)
        assert count == gf2_count(AH) == 4
        # the same correspondence for the system with the fresh element j
        H, _ = homogenise(SINGLE)
        G = completion(encode_graph(H).structure)
        assert len(search_mappings(G, G)) == gf2_count(H) == 8


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
