import itertools
import random
from functools import reduce

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from symrecover.perm import Permutation, all_permutations
from symrecover.problems import GraphInstance, instance_aut_group, make_problem
from symrecover.sicsaf import (
    Semigroup,
    check_invariance,
    eval_bruteforce,
    eval_compressed,
    eval_compressed_regular,
    eval_orbit_full,
    right_transversal,
    semigroup_power,
)

PLAIN = {
    Semigroup.BOOL_OR: lambda a, b: a or b,
    Semigroup.INT_MAX: max,
    Semigroup.BOOL_XOR: lambda a, b: (a + b) % 2,
    Semigroup.INT_ADD: lambda a, b: a + b,
}


def values(s):
    return st.integers(0, 1) if s.boolean else st.integers(0, 50)


# -- semigroups -----------------------------------------------------------------------

@settings(max_examples=200, deadline=None)
@given(st.sampled_from(list(Semigroup)).flatmap(
    lambda s: st.tuples(st.just(s), values(s), values(s), values(s))))
def test_semigroup_laws(case):
    s, a, b, c = case
    assert s.combine(a, b) == s.combine(b, a) == PLAIN[s](a, b)
    assert s.combine(s.combine(a, b), c) == s.combine(a, s.combine(b, c))
    if s.idempotent:
        assert s.combine(a, a) == a


@pytest.mark.parametrize("s,d,t,expected", [
    (Semigroup.BOOL_XOR, 1, 4, 0),
    (Semigroup.BOOL_OR, 1, 7, 1),
    (Semigroup.INT_ADD, 3, 5, 15),
])
def test_power_examples(s, d, t, expected):
    assert semigroup_power(d, t, s) == expected


@pytest.mark.parametrize("s", list(Semigroup))
def test_power_matches_fold(s):
    rng = random.Random(s.value)
    for t in list(range(1, 65)) + rng.sample(range(65, 1001), 20):
        d = rng.randint(0, 1) if s.boolean else rng.randint(0, 9)
        assert semigroup_power(d, t, s) == reduce(PLAIN[s], [d] * t)


def test_power_needs_positive_exponent():
    with pytest.raises(ValueError):
        semigroup_power(1, 0, Semigroup.BOOL_OR)


# -- brute force ----------------------------------------------------------------------

def clique_index(problem, k, edges):
    return problem.encode((k, GraphInstance.from_edges(problem.n, edges)))


def test_bruteforce_examples():
    p = make_problem("clique", {"n": 3})
    triangle = [(1, 2), (1, 3), (2, 3)]
    assert eval_bruteforce(p, clique_index(p, 2, triangle)) == 1
    assert eval_bruteforce(p, clique_index(p, 3, [])) == 0


def test_bruteforce_budget():
    p = make_problem("clique", {"n": 4})
    with pytest.raises(ValueError):
        eval_bruteforce(p, 0, budget=8)


def test_maxcsp_bruteforce_matches_direct_maximizer():
    # clause: x == y on the two selected positions ("equality literal" OR-free form)
    table = [1, 0, 0, 1]
    p = make_problem("maxkcsp", {"q": 3, "k": 2}, clause_table=table)
    every = p.instance_count - 1
    best = max(sum(ys[a] == ys[b] for a, b in itertools.product(range(3), repeat=2))
               for ys in itertools.product(range(2), repeat=3))
    assert eval_bruteforce(p, every) == best == 9


# -- orbit sums -----------------------------------------------------------------------

def test_orbit_full_single_edge():
    p = make_problem("clique", {"n": 4})
    x = clique_index(p, 2, [(1, 2)])
    assert eval_orbit_full(p, x, 3) == 1  # orbit of 2-subsets


def test_orbit_sums_recombine_to_bruteforce():
    p = make_problem("clique", {"n": 4})
    for x in range(p.instance_count):
        parts = [eval_orbit_full(p, x, i) for i in range(1, p.orbit_count + 1)]
        assert max(parts) == eval_bruteforce(p, x)


def test_orbit_full_hampath_on_path():
    p = make_problem("hampath", {"n": 4})
    x = GraphInstance.from_edges(4, [(1, 2), (2, 3), (3, 4)]).edges
    assert eval_orbit_full(p, x, 1) == 1
    assert oracles.hamiltonian_paths(4, oracles.edges_of(4, x)) == 2


def test_orbit_full_rejects_xor_and_bad_index():
    p = make_problem("dir_hampath_parity", {"n": 3})
    with pytest.raises(ValueError):
        eval_orbit_full(p, 0, 1)
    q = make_problem("clique", {"n": 3})
    with pytest.raises(IndexError):
        eval_orbit_full(q, 0, 9)


# -- compressed evaluation --------------------------------------------------------------

def test_complete_graph_single_coset():
    p = make_problem("clique", {"n": 5})
    x = clique_index(p, 3, oracles.pair_list(5))
    ch = instance_aut_group(p, x)
    assert ch.order() == 120
    assert right_transversal(ch) == [Permutation.identity(5)]
    assert eval_compressed(p, x, ch) == 1


def test_two_sat_selection_all_instances():
    p = make_problem("ksat", {"n": 2, "k": 2})
    assert p.instance_count == 1024
    for x in range(p.instance_count):
        assert eval_compressed(p, x, instance_aut_group(p, x)) == eval_bruteforce(p, x)


def test_compressed_refuses_small_budget_and_xor():
    p = make_problem("clique", {"n": 4})
    x = clique_index(p, 2, [(1, 2)])
    with pytest.raises(ValueError):
        eval_compressed(p, x, instance_aut_group(p, x), budget=2)
    d = make_problem("dir_hampath_parity", {"n": 3})
    with pytest.raises(ValueError):
        eval_compressed(d, 0, instance_aut_group(d, 0))


def directed_bits(n, arcs):
    return GraphInstance.from_edges(n, arcs, directed=True).edges


def test_regular_parity_on_directed_four_cycle():
    p = make_problem("dir_hampath_parity", {"n": 4})
    arcs = [(1, 2), (2, 3), (3, 4), (4, 1)]
    x = directed_bits(4, arcs)
    expected = oracles.hamiltonian_paths(4, set(arcs), directed=True) % 2
    assert eval_compressed_regular(p, x, instance_aut_group(p, x)) == expected == 0


def test_regular_count_on_complete_digraph():
    p = make_problem("dir_hampath_parity", {"n": 3, "count": 1})
    x = p.instance_count - 1
    assert eval_compressed_regular(p, x, instance_aut_group(p, x)) == 6


def test_regular_asymmetric_digraph_uses_exponent_one():
    p = make_problem("dir_hampath_parity", {"n": 4, "count": 1})
    arcs = [(1, 2), (2, 3), (3, 4), (1, 3), (2, 4), (1, 4)]
    x = directed_bits(4, arcs)
    ch = instance_aut_group(p, x)
    assert ch.order() == 1
    assert eval_compressed_regular(p, x, ch) == oracles.hamiltonian_paths(4, set(arcs), True) == 1


def test_regular_refused_without_regular_orbits():
    p = make_problem("parity_kclique", {"n": 4, "k": 3})
    with pytest.raises(ValueError):
        eval_compressed_regular(p, 0, instance_aut_group(p, 0))


# -- invariance -----------------------------------------------------------------------

N3_PROBLEMS = [
    ("clique", {"n": 3}), ("indset", {"n": 3}), ("vertexcover", {"n": 3}),
    ("kcol", {"n": 3, "k": 3}), ("hampath", {"n": 3}), ("hamcycle", {"n": 3}),
    ("dir_hampath_parity", {"n": 3}), ("kcsp", {"q": 3, "k": 2}), ("maxkcsp", {"q": 3, "k": 2}),
    ("ov", {"n": 3, "d": 2}), ("parity_kclique", {"n": 3, "k": 3}),
]


@pytest.mark.parametrize("pid,params", N3_PROBLEMS)
def test_invariance_exhaustive_at_three(pid, params):
    p = make_problem(pid, params)
    group = list(all_permutations(3))
    for x in range(p.instance_count):
        for c in range(p.certificate_count):
            assert all(check_invariance(p, x, c, g) for g in group)


def test_invariance_ksat_sampled_at_three():
    p = make_problem("ksat", {"n": 3, "k": 2})
    rng = random.Random(8)
    group = list(all_permutations(3))
    for _ in range(3000):
        x = rng.randrange(p.instance_count)
        assert check_invariance(p, x, rng.randrange(8), rng.choice(group))


@pytest.mark.parametrize("pid,params", [
    ("clique", {"n": 4}), ("kcol", {"n": 4, "k": 3}), ("hamcycle", {"n": 5}),
    ("ksat", {"n": 4, "k": 2}), ("ov", {"n": 5, "d": 2}), ("kcsp", {"q": 4, "k": 2}),
])
def test_invariance_random_triples(pid, params):
    p = make_problem(pid, params)
    m = p.group_degree
    rng = random.Random(pid)
    pts = list(range(1, m + 1))
    for _ in range(10_000 // 6):
        rng.shuffle(pts)
        g = Permutation(pts)
        x = rng.randrange(p.instance_count)
        c = rng.randrange(p.certificate_count)
        assert check_invariance(p, x, c, g)
        # automorphisms also fix h on their own: h(x, beta_g(c)) = h(x, c)
    for x in rng.sample(range(p.instance_count), 20):
        for g in instance_aut_group(p, x).strong_generators:
            for c in rng.sample(range(p.certificate_count), min(10, p.certificate_count)):
                assert p.h(x, p.act_certificate_raw(g.array, c)) == p.h(x, c)


def test_invariance_identity_and_degree_check():
    p = make_problem("clique", {"n": 4})
    assert check_invariance(p, 77, 5, Permutation.identity(4))
    with pytest.raises(ValueError):
        check_invariance(p, 77, 5, Permutation.identity(3))
