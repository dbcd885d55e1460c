"""Randomized recovery for Orthogonal Vectors and Parity k-Clique.

Both reductions first try to answer directly: OV when the input has at
most three distinct vectors, Parity k-Clique when the graph is one of the
twelve highly symmetric graphs recognised by :func:`classify_graph`.
Otherwise the corrupted table is queried at uniformly random images of the
input under S_n and the strict majority is returned.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from math import comb, factorial

import numpy as np

from .noise import CorruptedTable, as_fraction
from .problems import (
    IMAGE_TABLE_MAX_DEGREE,
    GraphInstance,
    OVInstance,
    OVProblem,
    ParityKCliqueProblem,
    adjacency,
)
from .recover import UNDEFINED, MajorityUndefined, _row_majority


class Family(enum.Enum):
    COMPLETE = "Complete"
    COMPLETE_MINUS_EDGE = "CompleteMinusEdge"
    CLIQUE_N1_PLUS_ISOLATED = "CliqueN1PlusIsolated"
    CLIQUE_N1_PLUS_PENDANT = "CliqueN1PlusPendant"
    CLIQUE_N2_PLUS_TWO_ISOLATED = "CliqueN2PlusTwoIsolated"
    CLIQUE_N2_PLUS_EDGE = "CliqueN2PlusEdge"
    OTHER = "Other"


@dataclass(frozen=True)
class GraphFamily:
    base: Family
    complement: bool = False

    @property
    def is_other(self) -> bool:
        return self.base is Family.OTHER

    def __str__(self):
        if self.is_other:
            return "Other"
        return f"complement of {self.base.value}" if self.complement else self.base.value


OTHER = GraphFamily(Family.OTHER)


# -- OV ------------------------------------------------------------------------

def _dot_zero(u, v) -> bool:
    return not any(a and b for a, b in zip(u, v))


def ov_brute_force(V: OVInstance) -> bool:
    vs = V.vectors
    return any(_dot_zero(vs[i], vs[j]) for i in range(V.n) for j in range(i + 1, V.n))


def ov_shortcut(V: OVInstance):
    """Direct answer when V has at most three distinct vectors, else None."""
    counts: dict = {}
    for v in V.vectors:
        counts[tuple(v)] = counts.get(tuple(v), 0) + 1
        if len(counts) > 3:
            return None
    distinct = list(counts)
    for i, u in enumerate(distinct):
        if counts[u] > 1 and not any(u):
            return True
        for v in distinct[i + 1:]:
            if _dot_zero(u, v):
                return True
    return False


def parse_ov_text(text: str) -> OVInstance:
    """First line ``n d``, then n lines of d space-separated bits."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValueError("empty OV description")
    head = lines[0].split()
    if len(head) != 2:
        raise ValueError(f"line 1: expected 'n d', got {lines[0]!r}")
    n, d = int(head[0]), int(head[1])
    if len(lines) - 1 != n:
        raise ValueError(f"expected {n} vector lines, found {len(lines) - 1}")
    vectors = []
    for lineno, ln in enumerate(lines[1:], start=2):
        bits = ln.split()
        if len(bits) != d or any(b not in ("0", "1") for b in bits):
            raise ValueError(f"line {lineno}: expected {d} bits, got {ln!r}")
        vectors.append(tuple(int(b) for b in bits))
    return OVInstance(n, d, tuple(vectors))


# -- sampling ------------------------------------------------------------------

def default_samples(n: int, epsilon) -> int:
    """ceil(8 ln(max(n, 4)) / eps^2)."""
    eps = float(as_fraction(epsilon))
    return math.ceil(8 * math.log(max(n, 4)) / eps ** 2)


def majority_failure_bound(samples: int, delta) -> float:
    """Hoeffding tail for a strict majority of ``samples`` independent looks at rate delta."""
    gap = 0.5 - float(as_fraction(delta))
    if gap <= 0:
        return 1.0
    return math.exp(-2 * samples * gap * gap)


def _sample_images(problem, instances: np.ndarray, samples: int, rng: np.random.Generator):
    m = problem.group_degree
    if m <= IMAGE_TABLE_MAX_DEGREE and hasattr(problem, "images_by_rank"):
        ranks = rng.integers(0, factorial(m), size=(instances.size, samples))
        return problem.images_by_rank(instances, ranks)
    out = np.empty((instances.size, samples), dtype=np.int64)
    for b, x in enumerate(instances.tolist()):
        for t in range(samples):
            out[b, t] = problem.act_instance_raw(tuple(rng.permutation(m).tolist()), x)
    return out


def sampled_majority(problem, instances, corrupted: CorruptedTable, samples: int,
                     seed: int, chunk: int = 4096) -> np.ndarray:
    """Strict majority of the table over ``samples`` random images per instance.

    Uses one generator seeded with ``seed`` for the whole batch, drawing the
    permutations of each instance in order; a batch of one instance matches
    the single-instance functions below.  Ties give ``UNDEFINED``.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    if corrupted.entry_count != problem.instance_count:
        raise ValueError("corrupted table does not match the problem's instance space")
    instances = np.asarray(instances, dtype=np.int64).reshape(-1)
    rng = np.random.default_rng(seed)
    out = np.empty(instances.size, dtype=np.int64)
    for lo in range(0, instances.size, chunk):
        part = instances[lo:lo + chunk]
        images = _sample_images(problem, part, samples, rng)
        out[lo:lo + chunk] = _row_majority(corrupted.query_many(images))
    return out


def ov_recover(V: OVInstance, corrupted: CorruptedTable, epsilon=None,
               samples: int | None = None, seed: int = 0) -> bool:
    """Majority of the corrupted OV table over random permutations of V."""
    if ov_shortcut(V) is not None:
        raise ValueError("V has at most three distinct vectors; answer it with ov_shortcut")
    problem = OVProblem(V.n, {"d": V.d})
    if samples is None:
        if epsilon is None:
            raise ValueError("give samples or epsilon")
        samples = default_samples(V.n, epsilon)
    value = sampled_majority(problem, [problem.encode(V)], corrupted, samples, seed)[0]
    if value == UNDEFINED:
        raise MajorityUndefined(f"tie among {samples} samples")
    return bool(value)


def ov_solve(V: OVInstance, corrupted: CorruptedTable, epsilon=None,
             samples: int | None = None, seed: int = 0) -> bool:
    direct = ov_shortcut(V)
    if direct is not None:
        return direct
    return ov_recover(V, corrupted, epsilon, samples, seed)


def ov_distinct_counts(problem: OVProblem, instances) -> np.ndarray:
    instances = np.asarray(instances, dtype=np.int64)
    vecs = np.stack([(instances >> (i * problem.d)) & problem._vmask for i in range(problem.n)], axis=1)
    vecs.sort(axis=1)
    return 1 + (np.diff(vecs, axis=1) != 0).sum(axis=1)


# -- twelve-graph classifier ----------------------------------------------------

def _match(n: int, rows: list) -> Family | None:
    """Degree-profile tests, each followed by the adjacency check it needs."""
    deg = [bin(r).count("1") for r in rows]
    profile = sorted(deg)
    if profile == [n - 1] * n:
        return Family.COMPLETE
    if n < 3:
        return None
    if profile == [n - 2] * 2 + [n - 1] * (n - 2):
        return Family.COMPLETE_MINUS_EDGE
    if profile == [0] + [n - 2] * (n - 1):
        return Family.CLIQUE_N1_PLUS_ISOLATED
    if profile == sorted([1, n - 1] + [n - 2] * (n - 2)):
        leaf = deg.index(1)
        if deg[rows[leaf].bit_length() - 1] == n - 1:
            return Family.CLIQUE_N1_PLUS_PENDANT
    if profile == [0, 0] + [n - 3] * (n - 2):
        return Family.CLIQUE_N2_PLUS_TWO_ISOLATED
    if profile == sorted([1, 1] + [n - 3] * (n - 2)):
        if n == 4:
            return Family.CLIQUE_N2_PLUS_EDGE  # all degrees one: two disjoint edges
        a, b = [v for v in range(n) if deg[v] == 1]
        if rows[a] >> b & 1:
            return Family.CLIQUE_N2_PLUS_EDGE
    return None


def classify_graph(H: GraphInstance) -> GraphFamily:
    """Recognise K_n, K_n minus an edge, K_{n-1} + isolated, K_{n-1} + pendant,
    K_{n-2} + two isolated, K_{n-2} + disjoint edge, and their complements.

    The denser of H and its complement is tested first, so a graph and its
    complement always name the same base family with opposite flags.
    """
    if H.directed:
        raise ValueError("classify_graph needs an undirected graph")
    n = H.n
    full = (1 << H.bit_length) - 1
    dense_first = 2 * bin(H.edges).count("1") >= H.bit_length
    order = [(H.edges, False), (full ^ H.edges, True)]
    if not dense_first:
        order.reverse()
    for bits, flipped in order:
        fam = _match(n, adjacency(n, bits))
        if fam is not None:
            return GraphFamily(fam, flipped)
    return OTHER


def family_graph(family: GraphFamily, n: int) -> GraphInstance:
    """An explicit member of ``family`` on vertices 1..n."""
    if family.is_other:
        raise ValueError("Other has no explicit member")
    if n < 4:
        raise ValueError("the twelve families are defined for n >= 4")
    clique = lambda vs: [(a, b) for i, a in enumerate(vs) for b in vs[i + 1:]]
    everyone = list(range(1, n + 1))
    edges = {
        Family.COMPLETE: clique(everyone),
        Family.COMPLETE_MINUS_EDGE: [e for e in clique(everyone) if e != (1, 2)],
        Family.CLIQUE_N1_PLUS_ISOLATED: clique(everyone[:-1]),
        Family.CLIQUE_N1_PLUS_PENDANT: clique(everyone[:-1]) + [(1, n)],
        Family.CLIQUE_N2_PLUS_TWO_ISOLATED: clique(everyone[:-2]),
        Family.CLIQUE_N2_PLUS_EDGE: clique(everyone[:-2]) + [(n - 1, n)],
    }[family.base]
    g = GraphInstance.from_edges(n, edges)
    return g.complement() if family.complement else g


def aut_order_closed_form(family: GraphFamily, n: int) -> int:
    if family.is_other:
        raise ValueError("no closed form for Other")
    if n < 4:
        raise ValueError("closed forms hold for n >= 4")
    return {
        Family.COMPLETE: factorial(n),
        Family.COMPLETE_MINUS_EDGE: 2 * factorial(n - 2),
        Family.CLIQUE_N1_PLUS_ISOLATED: factorial(n - 1),
        Family.CLIQUE_N1_PLUS_PENDANT: factorial(n - 2),
        Family.CLIQUE_N2_PLUS_TWO_ISOLATED: 2 * factorial(n - 2),
        Family.CLIQUE_N2_PLUS_EDGE: 2 * factorial(n - 2),
    }[family.base]


def count_k_cliques_special(family: GraphFamily, n: int, k: int) -> int:
    """Number of k-cliques (k >= 3) in a member of ``family``.

    Every complement family is triangle-free except the complement of
    K_{n-2} + two isolated vertices, where the two former isolated vertices
    and each of the n-2 others form a triangle.
    """
    if family.is_other:
        raise ValueError("no closed form for Other")
    if k <= 2:
        raise ValueError("closed forms hold for k >= 3")
    if family.complement:
        if family.base is Family.CLIQUE_N2_PLUS_TWO_ISOLATED and k == 3:
            return n - 2
        return 0
    return {
        Family.COMPLETE: comb(n, k),
        Family.COMPLETE_MINUS_EDGE: comb(n, k) - comb(n - 2, k - 2),
        Family.CLIQUE_N1_PLUS_ISOLATED: comb(n - 1, k),
        Family.CLIQUE_N1_PLUS_PENDANT: comb(n - 1, k),
        Family.CLIQUE_N2_PLUS_TWO_ISOLATED: comb(n - 2, k),
        Family.CLIQUE_N2_PLUS_EDGE: comb(n - 2, k),
    }[family.base]


def count_k_cliques_brute(H: GraphInstance, k: int) -> int:
    rows = adjacency(H.n, H.edges)

    def extend(clique_mask, candidates, need):
        if need == 0:
            return 1
        total = 0
        while candidates:
            v = candidates.bit_length() - 1
            candidates &= ~(1 << v)
            total += extend(clique_mask | 1 << v, candidates & rows[v], need - 1)
        return total

    return extend(0, (1 << H.n) - 1, k)


def parity_kclique_recover(H: GraphInstance, k: int, corrupted: CorruptedTable, epsilon=None,
                           samples: int | None = None, seed: int = 0) -> int:
    """Parity of the k-clique count; zero queries when H is one of the twelve graphs."""
    if k < 3:
        raise ValueError("k must be at least 3")
    family = classify_graph(H)
    if not family.is_other and H.n >= 4:
        return count_k_cliques_special(family, H.n, k) & 1
    problem = ParityKCliqueProblem(H.n, {"k": k})
    if samples is None:
        if epsilon is None:
            raise ValueError("give samples or epsilon")
        samples = default_samples(H.n, epsilon)
    value = sampled_majority(problem, [H.edges], corrupted, samples, seed)[0]
    if value == UNDEFINED:
        raise MajorityUndefined(f"tie among {samples} samples")
    return int(value)


__all__ = [
    "Family", "GraphFamily", "OTHER", "OVInstance", "ov_brute_force", "ov_shortcut",
    "ov_recover", "ov_solve", "ov_distinct_counts", "parse_ov_text", "default_samples",
    "majority_failure_bound", "sampled_majority", "classify_graph", "family_graph",
    "aut_order_closed_form", "count_k_cliques_special", "count_k_cliques_brute",
    "parity_kclique_recover",
]
