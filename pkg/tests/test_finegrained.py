import math
import random
from math import comb

import numpy as np
import pytest

import oracles
from symrecover.finegrained import (
    OTHER,
    Family,
    GraphFamily,
    aut_order_closed_form,
    classify_graph,
    count_k_cliques_brute,
    count_k_cliques_special,
    default_samples,
    family_graph,
    majority_failure_bound,
    ov_brute_force,
    ov_distinct_counts,
    ov_recover,
    ov_shortcut,
    ov_solve,
    parity_kclique_recover,
    parse_ov_text,
    sampled_majority,
)
from symrecover.noise import build_table, corrupt
from symrecover.perm import group_order
from symrecover.problems import GraphInstance, OVInstance, instance_aut_group, make_problem

BASES = [f for f in Family if f is not Family.OTHER]
ALL_TWELVE = [GraphFamily(b, c) for b in BASES for c in (False, True)]


def ov(*vectors):
    return OVInstance(len(vectors), len(vectors[0]), tuple(tuple(v) for v in vectors))


def graph(n, edges):
    return GraphInstance.from_edges(n, edges)


# -- OV -----------------------------------------------------------------------------------------

def test_shortcut_examples():
    assert ov_shortcut(ov((0, 0), (0, 0), (0, 0), (0, 0))) is True
    assert ov_shortcut(ov((1, 0), (0, 1), (1, 1), (1, 0))) is True
    assert ov_shortcut(ov((0, 0), (1, 0), (0, 1), (1, 1))) is None
    assert ov_shortcut(ov((1, 1), (1, 1), (1, 0))) is False


def test_shortcut_matches_oracle_everywhere():
    p = make_problem("ov", {"n": 4, "d": 2})
    answered = 0
    for x in range(p.instance_count):
        V = p.decode(x)
        direct = ov_shortcut(V)
        distinct = len(set(V.vectors))
        assert (direct is None) == (distinct >= 4)
        if direct is not None:
            answered += 1
            assert direct == oracles.orthogonal_pair_exists(V.vectors) == ov_brute_force(V)
    assert answered == p.instance_count - math.factorial(4)


def test_distinct_counts():
    p = make_problem("ov", {"n": 4, "d": 2})
    xs = np.arange(p.instance_count)
    got = ov_distinct_counts(p, xs)
    assert got.tolist() == [len(set(p.decode(int(x)).vectors)) for x in xs]


@pytest.fixture(scope="module")
def ov5():
    p = make_problem("ov", {"n": 5, "d": 3})
    return p, build_table(p)


def test_ov_recover_without_noise(ov5):
    p, t = ov5
    ct, _ = corrupt(t, 0, 0)
    rng = random.Random(1)
    tried = 0
    while tried < 40:
        V = p.decode(rng.randrange(p.instance_count))
        if ov_shortcut(V) is not None:
            with pytest.raises(ValueError):
                ov_recover(V, ct, samples=5)
            continue
        assert ov_recover(V, ct, samples=5, seed=tried) == oracles.orthogonal_pair_exists(V.vectors)
        tried += 1


def test_ov_solve_routes_repeats_to_shortcut(ov5):
    p, t = ov5
    ct, _ = corrupt(t, 0.4, 3)
    V = ov((1, 0, 0), (1, 0, 0), (1, 1, 0), (1, 1, 0), (1, 0, 0))
    assert ov_solve(V, ct, samples=9) is False
    assert ct.query_count == 0


def test_ov_recover_needs_sample_size(ov5):
    p, t = ov5
    ct, _ = corrupt(t, 0, 0)
    V = ov((0, 0, 1), (0, 1, 0), (1, 0, 0), (1, 1, 1), (0, 1, 1))
    with pytest.raises(ValueError):
        ov_recover(V, ct)
    assert ov_recover(V, ct, epsilon="1/4") is True


def test_ov_noisy_small(ov5):
    p, t = ov5
    xs = np.asarray([x for x in range(p.instance_count) if len(set(p.vectors(x))) >= 4])[::17]
    ok = []
    for seed in range(3):
        ct, _ = corrupt(t, 0.2, seed)
        ok.append(np.mean(sampled_majority(p, xs, ct, 101, seed) == t.entries[xs]))
    assert min(ok) >= 0.99


def test_sampled_majority_seeds_and_batches(ov5):
    p, t = ov5
    ct, _ = corrupt(t, 0.3, 7)
    xs = np.arange(0, p.instance_count, 997)
    a = sampled_majority(p, xs, ct, 15, seed=4)
    assert np.array_equal(a, sampled_majority(p, xs, ct, 15, seed=4))
    assert np.array_equal(a, sampled_majority(p, xs, ct, 15, seed=4, chunk=3))
    assert sampled_majority(p, xs[:1], ct, 15, seed=4)[0] == a[0]
    assert ct.query_count == 15 * (3 * xs.size + 1)
    with pytest.raises(ValueError):
        sampled_majority(p, xs, ct, 0, 0)


def test_sampled_majority_generic_path():
    # degree above the image-table limit falls back to per-sample permutations
    p = make_problem("ov", {"n": 9, "d": 1})
    t = build_table(p)
    ct, _ = corrupt(t, 0, 0)
    xs = np.array([0b000000011, 0b111111111, 0b101010101])
    assert sampled_majority(p, xs, ct, 3, 0).tolist() == t.entries[xs].tolist()


def test_parse_ov_text():
    V = parse_ov_text("# demo\n3 2\n1 0\n0 1\n1 1\n")
    assert V == ov((1, 0), (0, 1), (1, 1))
    for bad in ["", "3\n1 0", "2 2\n1 0", "2 2\n1 0\n1 2", "2 2\n1 0\n1"]:
        with pytest.raises(ValueError):
            parse_ov_text(bad)


def test_sampling_defaults():
    assert default_samples(6, "1/4") == math.ceil(8 * math.log(6) / (1 / 16))
    assert default_samples(2, 0.5) == math.ceil(8 * math.log(4) / 0.25)
    assert majority_failure_bound(201, 0.2) == pytest.approx(math.exp(-2 * 201 * 0.09))
    assert majority_failure_bound(10, 0.5) == 1.0


# -- classifier --------------------------------------------------------------------------------------

def test_classifier_examples():
    full = oracles.pair_list(6)
    assert classify_graph(graph(6, full)) == GraphFamily(Family.COMPLETE)
    assert classify_graph(graph(6, [e for e in full if e != (1, 2)])) == GraphFamily(Family.COMPLETE_MINUS_EDGE)
    cycle = [(i, i % 6 + 1) for i in range(1, 7)]
    assert classify_graph(graph(6, cycle)) == OTHER
    assert classify_graph(GraphInstance(6, 0)) == GraphFamily(Family.COMPLETE, True)
    assert str(GraphFamily(Family.COMPLETE, True)) == "complement of Complete"
    assert str(OTHER) == "Other"


@pytest.mark.parametrize("n", [6, 7, 8])
def test_explicit_members_are_recognised(n):
    for fam in ALL_TWELVE:
        assert classify_graph(family_graph(fam, n)) == fam
        g = family_graph(fam, n)
        assert classify_graph(g.complement()) == GraphFamily(fam.base, not fam.complement)


@pytest.mark.parametrize("n", [4, 5])
def test_small_n_families_may_coincide(n):
    # e.g. at n = 4, K_2 plus two isolated vertices is K_4 minus an edge, complemented
    for fam in ALL_TWELVE:
        g = family_graph(fam, n)
        got = classify_graph(g)
        assert not got.is_other
        assert oracles.canonical(n, family_graph(got, n).edge_list()) == oracles.canonical(n, g.edge_list())


def test_classifier_exact_at_six():
    n = 6
    member_of = {}
    for fam in ALL_TWELVE:
        for edges in oracles.orbit(n, set(family_graph(fam, n).edge_list())):
            member_of[oracles.bits_of(n, edges)] = fam
    counts = {}
    for bits in range(1 << comb(n, 2)):
        got = classify_graph(GraphInstance(n, bits))
        assert got == member_of.get(bits, OTHER)
        if not got.is_other:
            flipped = classify_graph(GraphInstance(n, bits).complement())
            assert flipped == GraphFamily(got.base, not got.complement)
        counts[got] = counts.get(got, 0) + 1
    assert sum(v for k, v in counts.items() if not k.is_other) == len(member_of)


def test_family_graph_other_rejected():
    with pytest.raises(ValueError):
        family_graph(OTHER, 6)


# -- closed forms ------------------------------------------------------------------------------------

def test_closed_form_examples():
    assert aut_order_closed_form(GraphFamily(Family.COMPLETE), 5) == 120
    assert aut_order_closed_form(GraphFamily(Family.COMPLETE_MINUS_EDGE), 6) == 48
    assert aut_order_closed_form(GraphFamily(Family.CLIQUE_N1_PLUS_PENDANT), 6) == 24
    assert count_k_cliques_special(GraphFamily(Family.COMPLETE), 6, 3) == 20
    assert count_k_cliques_special(GraphFamily(Family.COMPLETE_MINUS_EDGE), 6, 3) == 16
    assert count_k_cliques_special(GraphFamily(Family.CLIQUE_N2_PLUS_TWO_ISOLATED, True), 6, 3) == 4


def test_closed_form_errors():
    with pytest.raises(ValueError):
        aut_order_closed_form(OTHER, 6)
    with pytest.raises(ValueError):
        count_k_cliques_special(OTHER, 6, 3)
    with pytest.raises(ValueError):
        count_k_cliques_special(GraphFamily(Family.COMPLETE), 6, 2)


@pytest.mark.parametrize("n", [6, 7, 8])
def test_aut_orders_match_search(n):
    p = make_problem("hampath", {"n": n})
    for fam in ALL_TWELVE:
        g = family_graph(fam, n)
        assert group_order(instance_aut_group(p, g.edges)) == aut_order_closed_form(fam, n)
    if n <= 7:
        for fam in ALL_TWELVE[:4]:
            edges = set(family_graph(fam, n).edge_list())
            assert len(oracles.automorphisms(n, edges)) == aut_order_closed_form(fam, n)


@pytest.mark.parametrize("n", [6, 7, 8])
@pytest.mark.parametrize("k", [3, 4])
def test_clique_counts_match_brute_force(n, k):
    for fam in ALL_TWELVE:
        g = family_graph(fam, n)
        expected = oracles.count_cliques(n, set(g.edge_list()), k)
        assert count_k_cliques_special(fam, n, k) == expected == count_k_cliques_brute(g, k)


def test_brute_counter_on_random_graphs():
    rng = random.Random(5)
    for _ in range(30):
        bits = rng.randrange(1 << 15)
        edges = oracles.edges_of(6, bits)
        for k in (2, 3, 4):
            assert count_k_cliques_brute(GraphInstance(6, bits), k) == oracles.count_cliques(6, edges, k)


# -- parity k-clique -----------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def parity6():
    p = make_problem("parity_kclique", {"n": 6, "k": 3})
    return p, build_table(p)


def test_parity_complete_graph_no_queries(parity6):
    p, t = parity6
    ct, _ = corrupt(t, 0.45, 1)
    assert parity_kclique_recover(graph(6, oracles.pair_list(6)), 3, ct, samples=11) == 0
    assert ct.query_count == 0


def test_parity_without_noise(parity6):
    p, t = parity6
    ct, _ = corrupt(t, 0, 0)
    rng = random.Random(2)
    for i in range(60):
        H = GraphInstance(6, rng.randrange(p.instance_count))
        expected = oracles.count_cliques(6, set(H.edge_list()), 3) % 2
        assert parity_kclique_recover(H, 3, ct, samples=3, seed=i) == expected


def test_parity_errors(parity6):
    p, t = parity6
    ct, _ = corrupt(t, 0, 0)
    cycle = graph(6, [(i, i % 6 + 1) for i in range(1, 7)])
    with pytest.raises(ValueError):
        parity_kclique_recover(cycle, 2, ct, samples=3)
    with pytest.raises(ValueError):
        parity_kclique_recover(cycle, 3, ct)
    assert parity_kclique_recover(cycle, 3, ct, epsilon="0.3") == 0
