import itertools
import random
from math import factorial

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from symrecover.perm import (
    AutStrategy,
    CosetSide,
    Permutation,
    aut_group,
    coset_key,
    group_order,
    list_coset_reps,
    orbit_of,
    perm_algebra,
    schreier_sims,
    sift,
    symmetric_chain,
    trivial_chain,
)


def P(text):
    return Permutation.parse(text)


def perms(m):
    return st.permutations(list(range(1, m + 1))).map(Permutation)


def edge_oracle(edges, directed=False):
    edges = set(edges)
    return lambda g: oracles.relabel(g.images, edges, directed) == edges


# -- algebra ------------------------------------------------------------------------

def test_compose_convention():
    assert perm_algebra("compose", P("2,1,3"), P("1,3,2")) == P("2,3,1")


def test_inverse_example():
    assert perm_algebra("inverse", P("2,3,1")) == P("3,1,2")


def test_apply_identity():
    assert perm_algebra("apply", perm_algebra("identity", 5), 4) == 4


def test_parse_and_str_round_trip():
    p = P("3, 1, 4, 2")
    assert str(p) == "3,1,4,2"
    assert p.images == (3, 1, 4, 2)
    assert P(str(p)) == p


@pytest.mark.parametrize("bad", [[1, 1, 2], [0, 1, 2], [1, 2, 4]])
def test_rejects_non_bijections(bad):
    with pytest.raises(ValueError):
        Permutation(bad)


def test_degree_mismatch_and_point_range():
    with pytest.raises(ValueError):
        P("2,1") * P("1,2,3")
    with pytest.raises((ValueError, IndexError)):
        P("2,1,3")(4)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 12).flatmap(lambda m: st.tuples(perms(m), perms(m), perms(m))))
def test_group_axioms(triple):
    p, q, r = triple
    m = p.degree
    e = Permutation.identity(m)
    assert (p * q) * r == p * (q * r)
    assert p * e == p == e * p
    assert p * p.inverse() == e == p.inverse() * p
    assert (p * q).images == oracles.compose(p.images, q.images)


# -- Schreier-Sims ------------------------------------------------------------------

@pytest.mark.parametrize("m", range(2, 8))
def test_transposition_and_cycle_generate_symmetric_group(m):
    t = Permutation([2, 1] + list(range(3, m + 1)))
    c = Permutation(list(range(2, m + 1)) + [1])
    assert group_order(schreier_sims([t, c], m)) == factorial(m)


def test_three_cycle_order():
    assert group_order(schreier_sims([P("2,3,1")], 3)) == 3


def test_empty_generators_give_trivial_group():
    ch = schreier_sims([], 4)
    assert group_order(ch) == 1
    assert sift(ch, P("2,1,3,4"))[1] is False


def test_random_generator_sets_match_closure():
    rng = random.Random(11)
    pts = list(range(1, 7))
    for _ in range(100):
        gens = []
        for _ in range(rng.randint(1, 3)):
            rng.shuffle(pts)
            gens.append(tuple(pts))
        ch = schreier_sims([Permutation(g) for g in gens], 6)
        assert group_order(ch) == len(oracles.closure(gens, 6))


def test_chain_structure_invariants():
    rng = random.Random(5)
    pts = list(range(1, 7))
    for _ in range(30):
        gens = []
        for _ in range(2):
            rng.shuffle(pts)
            gens.append(Permutation(pts))
        ch = schreier_sims(gens, 6)
        prod = 1
        for i, b in enumerate(ch.base):
            prod *= len(ch.orbit(i))
            for g in ch.generators(i):
                assert all(g(ch.base[j]) == ch.base[j] for j in range(i))
        assert prod == group_order(ch)
        for g in ch.strong_generators:
            residue, member = sift(ch, g)
            assert member and residue == Permutation.identity(6)


def test_sift_matches_closure_membership():
    rng = random.Random(3)
    pts = list(range(1, 6))
    for _ in range(15):
        rng.shuffle(pts)
        g1 = tuple(pts)
        rng.shuffle(pts)
        gens = [g1] if rng.random() < 0.5 else [g1, tuple(pts)]
        group = oracles.closure(gens, 5)
        ch = schreier_sims([Permutation(g) for g in gens], 5)
        for p in oracles.symmetric_group(5):
            residue, member = sift(ch, Permutation(p))
            assert member == (p in group)
            assert residue.is_identity() == member


def test_sift_symmetric_and_trivial():
    s3 = symmetric_chain(3)
    assert all(sift(s3, Permutation(p))[1] for p in oracles.symmetric_group(3))
    assert sift(trivial_chain(3), P("2,1,3"))[1] is False


def test_sift_path_automorphisms():
    ch = aut_group(edge_oracle({(1, 2), (2, 3)}), 3, AutStrategy.EXHAUSTIVE)
    assert sift(ch, P("3,2,1"))[1]
    assert not sift(ch, P("2,1,3"))[1]


def test_large_orders_are_exact():
    assert group_order(symmetric_chain(25)) == factorial(25)


# -- automorphism groups --------------------------------------------------------------

def test_aut_orders_from_closed_forms():
    k4_minus = set(oracles.pair_list(4)) - {(1, 2)}
    assert group_order(aut_group(edge_oracle(k4_minus), 4)) == 4
    assert group_order(aut_group(edge_oracle(oracles.pair_list(6)), 6)) == 720
    assert group_order(aut_group(edge_oracle(oracles.pair_list(5)), 5)) == 120


def test_aut_of_empty_graph_and_path():
    assert group_order(aut_group(edge_oracle(set()), 5)) == 120
    path = {(1, 2), (2, 3), (3, 4)}
    ch = aut_group(edge_oracle(path), 4)
    assert group_order(ch) == 2
    assert sorted(str(g) for g in ch.elements()) == ["1,2,3,4", "4,3,2,1"]


def test_strategies_agree_on_all_four_vertex_graphs():
    for bits in range(64):
        edges = oracles.edges_of(4, bits)
        a = aut_group(edge_oracle(edges), 4, AutStrategy.EXHAUSTIVE)
        b = aut_group(edge_oracle(edges), 4, AutStrategy.BACKTRACKING)
        expected = {Permutation(g) for g in oracles.automorphisms(4, edges)}
        assert set(a.elements()) == set(b.elements()) == expected


def test_strategies_agree_at_degree_seven():
    rng = random.Random(2)
    for _ in range(4):
        edges = {e for e in oracles.pair_list(7) if rng.random() < 0.4}
        a = aut_group(edge_oracle(edges), 7, AutStrategy.EXHAUSTIVE)
        b = aut_group(edge_oracle(edges), 7, AutStrategy.BACKTRACKING)
        assert group_order(a) == group_order(b) == len(oracles.automorphisms(7, edges))
        assert all(g in b for g in a.strong_generators)
        assert all(g in a for g in b.strong_generators)


def test_exhaustive_degree_cap():
    with pytest.raises(ValueError):
        aut_group(lambda g: True, 11, AutStrategy.EXHAUSTIVE)


# -- cosets ---------------------------------------------------------------------------

def distinct_cosets(chain, reps, side):
    for i, j in itertools.combinations(range(len(reps)), 2):
        ri, rj = reps[i], reps[j]
        witness = ri * rj.inverse() if side is CosetSide.RIGHT else rj.inverse() * ri
        if sift(chain, witness)[1]:
            return False
    return True


def test_whole_group_single_coset():
    assert list_coset_reps(symmetric_chain(4), 4, 1, CosetSide.LEFT) == [Permutation.identity(4)]


def test_trivial_subgroup_lists_group_in_order():
    reps = list_coset_reps(trivial_chain(3), 3, 6, CosetSide.RIGHT)
    assert [r.images for r in reps] == oracles.symmetric_group(3)


@pytest.mark.parametrize("side", list(CosetSide))
def test_path_cosets_distinct(side):
    ch = aut_group(edge_oracle({(1, 2), (2, 3)}), 3)
    reps = list_coset_reps(ch, 3, 3, side)
    assert len(reps) == 3 and distinct_cosets(ch, reps, side)


@pytest.mark.parametrize("side", list(CosetSide))
def test_random_subgroup_cosets(side):
    rng = random.Random(17)
    pts = list(range(1, 6))
    for _ in range(10):
        rng.shuffle(pts)
        ch = schreier_sims([Permutation(pts)], 5)
        index = factorial(5) // group_order(ch)
        reps = list_coset_reps(ch, 5, index, side)
        assert distinct_cosets(ch, reps, side)
        assert reps == list_coset_reps(ch, 5, index, side)
        # lexicographically first element of each coset, in order
        firsts, seen = [], set()
        for g in oracles.symmetric_group(5):
            key = coset_key(ch, Permutation(g), side)
            if key not in seen:
                seen.add(key)
                firsts.append(Permutation(g))
        assert reps == firsts


def test_coset_key_agrees_with_membership():
    ch = schreier_sims([P("2,1,3,4"), P("1,2,4,3")], 4)
    for a in oracles.symmetric_group(4):
        for b in oracles.symmetric_group(4)[:8]:
            pa, pb = Permutation(a), Permutation(b)
            same_left = sift(ch, pb.inverse() * pa)[1]
            same_right = sift(ch, pa * pb.inverse())[1]
            assert (coset_key(ch, pa, CosetSide.LEFT) == coset_key(ch, pb, CosetSide.LEFT)) == same_left
            assert (coset_key(ch, pa, CosetSide.RIGHT) == coset_key(ch, pb, CosetSide.RIGHT)) == same_right


def test_too_many_reps_rejected():
    with pytest.raises(ValueError):
        list_coset_reps(symmetric_chain(3), 3, 2, CosetSide.LEFT)


# -- orbits ---------------------------------------------------------------------------

def graph_action(n):
    return lambda g, edges: frozenset(oracles.relabel(g.images, edges))


def test_orbit_examples():
    assert len(orbit_of(graph_action(4), frozenset(oracles.pair_list(4)), 4)) == 1
    assert len(orbit_of(graph_action(3), frozenset({(1, 2), (2, 3)}), 3)) == 3


def test_orbit_stabilizer_four_vertices():
    for bits in range(64):
        edges = frozenset(oracles.edges_of(4, bits))
        orb = orbit_of(graph_action(4), edges, 4)
        assert orb == oracles.orbit(4, edges)
        assert len(orb) * group_order(aut_group(edge_oracle(edges), 4)) == 24


def test_orbit_degree_cap():
    with pytest.raises(ValueError):
        orbit_of(lambda g, x: x, 0, 9)
