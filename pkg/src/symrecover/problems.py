"""Concrete symmetric-group problems: graph problems, clause-selection SAT, CSPs, OV.

Encodings
---------
Undirected graphs on ``n`` vertices are bit vectors over the pairs ``(i, j)``,
``i < j``, in lexicographic order; bit 0 is the pair (1, 2).  Directed graphs
use the ordered pairs ``(i, j)``, ``i != j``, in lexicographic order.  For
the size-parameterised graph problems (clique, indset, vertexcover) the
instance index is ``(k - 1) * 2**C(n, 2) + edge_bits``.

Certificates are subsets (bitmask, bit ``i`` is vertex ``i + 1``), colorings
(base-``k`` digits, vertex 1 least significant, colors 0-based), vertex
sequences (lexicographic rank among the ``n!`` orderings), assignments (bit
``i`` is ``x_{i+1}``) and proofs (base-``|Sigma|`` digits, position 1 least
significant).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .perm import (AutStrategy, Permutation, StabilizerChain, aut_group, aut_group_raw,
                   lex_permutations)
from .sicsaf import ProblemSpec, Semigroup


@dataclass(frozen=True)
class GraphInstance:
    n: int
    edges: int  # bit vector, layout as in the module docstring
    directed: bool = False

    @property
    def bit_length(self) -> int:
        return self.n * (self.n - 1) if self.directed else self.n * (self.n - 1) // 2

    def __post_init__(self):
        if not 0 <= self.edges < (1 << self.bit_length):
            raise ValueError(f"edge bits do not fit {self.bit_length} pairs")

    @classmethod
    def from_edges(cls, n: int, edges, directed: bool = False) -> "GraphInstance":
        """Build from 1-based vertex pairs."""
        idx = _arc_index(n) if directed else _pair_index(n)
        bits = 0
        for a, b in edges:
            if a == b or not (1 <= a <= n and 1 <= b <= n):
                raise ValueError(f"bad edge ({a}, {b}) for n={n}")
            if not directed and a > b:
                a, b = b, a
            bits |= 1 << idx[a - 1][b - 1]
        return cls(n, bits, directed)

    def edge_list(self) -> list:
        pairs = _arcs(self.n) if self.directed else _pairs(self.n)
        return [(i + 1, j + 1) for p, (i, j) in enumerate(pairs) if self.edges >> p & 1]

    def complement(self) -> "GraphInstance":
        return GraphInstance(self.n, ((1 << self.bit_length) - 1) ^ self.edges, self.directed)


_PAIR_CACHE: dict = {}


def _pairs(n: int) -> list:
    return list(itertools.combinations(range(n), 2))


def _arcs(n: int) -> list:
    return [(i, j) for i in range(n) for j in range(n) if i != j]


def _pair_index(n: int) -> list:
    key = ("u", n)
    if key not in _PAIR_CACHE:
        idx = [[-1] * n for _ in range(n)]
        for p, (i, j) in enumerate(_pairs(n)):
            idx[i][j] = idx[j][i] = p
        _PAIR_CACHE[key] = idx
    return _PAIR_CACHE[key]


def _arc_index(n: int) -> list:
    key = ("d", n)
    if key not in _PAIR_CACHE:
        idx = [[-1] * n for _ in range(n)]
        for p, (i, j) in enumerate(_arcs(n)):
            idx[i][j] = p
        _PAIR_CACHE[key] = idx
    return _PAIR_CACHE[key]


def adjacency(n: int, bits: int, directed: bool = False) -> list:
    """Adjacency rows as bitmasks over vertices (0-based)."""
    rows = [0] * n
    pairs = _arcs(n) if directed else _pairs(n)
    for p, (i, j) in enumerate(pairs):
        if bits >> p & 1:
            rows[i] |= 1 << j
            if not directed:
                rows[j] |= 1 << i
    return rows


def permute_graph(g: tuple, bits: int, n: int, directed: bool = False) -> int:
    """Edge {g(i), g(j)} present iff {i, j} present in ``bits``."""
    pairs = _arcs(n) if directed else _pairs(n)
    idx = _arc_index(n) if directed else _pair_index(n)
    out = 0
    p = 0
    while bits:
        if bits & 1:
            i, j = pairs[p]
            out |= 1 << idx[g[i]][g[j]]
        bits >>= 1
        p += 1
    return out


_IMAGE_TABLES: dict = {}
IMAGE_TABLE_MAX_DEGREE = 8


def _image_table(n: int, directed: bool) -> np.ndarray:
    """T[r, p]: position of pair p after applying the r-th permutation of S_n (lex order)."""
    key = (n, directed)
    if key not in _IMAGE_TABLES:
        pairs = _arcs(n) if directed else _pairs(n)
        idx = np.array(_arc_index(n) if directed else _pair_index(n), dtype=np.int8)
        perms = np.array(list(itertools.permutations(range(n))), dtype=np.int8).reshape(-1, n)
        a = np.array([i for i, _ in pairs], dtype=np.int64)
        b = np.array([j for _, j in pairs], dtype=np.int64)
        _IMAGE_TABLES[key] = idx[perms[:, a], perms[:, b]].astype(np.int64)
    return _IMAGE_TABLES[key]


def permute_subset(g: tuple, mask: int) -> int:
    out = 0
    i = 0
    while mask:
        if mask & 1:
            out |= 1 << g[i]
        mask >>= 1
        i += 1
    return out


def _graph_partial_check(n: int, bits: int, directed: bool = False):
    adj = adjacency(n, bits, directed)
    if directed:
        radj = [0] * n
        for i in range(n):
            for j in range(n):
                if adj[i] >> j & 1:
                    radj[j] |= 1 << i
        deg = [(bin(adj[i]).count("1"), bin(radj[i]).count("1")) for i in range(n)]
    else:
        radj = adj
        deg = [bin(a).count("1") for a in adj]

    def check(partial):
        x = len(partial) - 1
        gx = partial[x]
        if deg[x] != deg[gx]:
            return False
        ax, agx = adj[x], adj[gx]
        rx, rgx = radj[x], radj[gx]
        for y in range(x):
            gy = partial[y]
            if (ax >> y & 1) != (agx >> gy & 1) or (rx >> y & 1) != (rgx >> gy & 1):
                return False
        return True

    return check


# -- graph problems ----------------------------------------------------------

class _GraphProblem(ProblemSpec):
    directed = False

    def __init__(self, n: int, params: dict):
        super().__init__(n, params)
        if n < 1:
            raise ValueError("n must be positive")
        self.edge_count = n * (n - 1) if self.directed else n * (n - 1) // 2
        self.instance_length = self.edge_count
        self.instance_count = 1 << self.edge_count

    def graph_bits(self, instance: int) -> int:
        return instance

    def act_instance_raw(self, g, instance):
        return permute_graph(g, instance, self.n, self.directed)

    def partial_check(self, instance):
        return _graph_partial_check(self.n, self.graph_bits(instance), self.directed)

    def symmetry_offset(self, instance):
        return instance - self.graph_bits(instance)

    def all_images(self, instance):
        if self.n > IMAGE_TABLE_MAX_DEGREE:
            return None
        table = _image_table(self.n, self.directed)
        bits = self.graph_bits(instance)
        present = [p for p in range(self.edge_count) if bits >> p & 1]
        images = (np.int64(1) << table[:, present]).sum(axis=1)
        return images + self.symmetry_offset(instance)

    def images_by_rank(self, instances: np.ndarray, ranks: np.ndarray) -> np.ndarray:
        """Image of ``instances[b]`` under the ``ranks[b, t]``-th permutation (lex order)."""
        table = _image_table(self.n, self.directed)
        instances = np.asarray(instances, dtype=np.int64)
        bits = instances & ((1 << self.edge_count) - 1)
        out = np.zeros(ranks.shape, dtype=np.int64)
        for p in range(self.edge_count):
            present = ((bits >> p) & 1).astype(bool)
            out += present[:, None] * (np.int64(1) << table[ranks, p])
        return out + (instances - bits)[:, None]

    def encode(self, obj: GraphInstance) -> int:
        if obj.n != self.n or obj.directed != self.directed:
            raise ValueError("graph does not match the problem binding")
        return obj.edges

    def decode(self, index: int) -> GraphInstance:
        if not 0 <= index < self.instance_count:
            raise IndexError(f"instance {index} outside [0, {self.instance_count})")
        return GraphInstance(self.n, index, self.directed)


class _SubsetGraphProblem(_GraphProblem):
    """Domain [n] x graphs; certificates are vertex subsets; h checks |S| = k."""

    def __init__(self, n: int, params: dict):
        super().__init__(n, params)
        self.instance_count = n << self.edge_count
        self.certificate_count = 1 << n
        E = self.edge_count
        # inside[S]: pair bits with both ends in S
        idx = _pair_index(n)
        inside = [0] * (1 << n)
        for S in range(1 << n):
            verts = [i for i in range(n) if S >> i & 1]
            m = 0
            for a, b in itertools.combinations(verts, 2):
                m |= 1 << idx[a][b]
            inside[S] = m
        self._inside = inside
        self._full = (1 << n) - 1
        self._emask = (1 << E) - 1

    def split(self, instance: int) -> tuple:
        return (instance >> self.edge_count) + 1, instance & self._emask

    def graph_bits(self, instance):
        return instance & self._emask

    def symmetry_key(self, instance):
        return instance & self._emask

    def act_instance_raw(self, g, instance):
        k_part = instance >> self.edge_count
        return (k_part << self.edge_count) | permute_graph(g, instance & self._emask, self.n)

    def act_certificate_raw(self, g, certificate):
        return permute_subset(g, certificate)

    def orbit_reps(self):
        return [(1 << i) - 1 for i in range(self.n + 1)]

    @property
    def orbit_count(self):
        return self.n + 1

    def relevant_orbits(self, instance):
        # Under OR, subsets of the wrong size contribute 0, the identity.
        return [(instance >> self.edge_count) + 1]

    def h(self, instance, certificate):
        k = (instance >> self.edge_count) + 1
        if bin(certificate).count("1") != k:
            return 0
        return int(self._test(instance & self._emask, certificate))

    def encode(self, obj) -> int:
        k, graph = obj
        if not 1 <= k <= self.n:
            raise ValueError(f"k={k} outside [1, {self.n}]")
        return (k - 1) << self.edge_count | super().encode(graph)

    def decode(self, index):
        if not 0 <= index < self.instance_count:
            raise IndexError(f"instance {index} outside [0, {self.instance_count})")
        k, bits = self.split(index)
        return k, GraphInstance(self.n, bits)

    def decode_certificate(self, c: int) -> frozenset:
        return frozenset(i + 1 for i in range(self.n) if c >> i & 1)

    def encode_certificate(self, subset) -> int:
        return sum(1 << (i - 1) for i in subset)

    def table_values(self) -> np.ndarray:
        graphs = np.arange(1 << self.edge_count, dtype=np.int64)
        by_size = np.zeros((self.n + 1, graphs.size), dtype=bool)
        for S in range(1 << self.n):
            by_size[bin(S).count("1")] |= self._vector_test(graphs, S)
        return by_size[1:].reshape(-1).astype(np.int64)


class CliqueProblem(_SubsetGraphProblem):
    id = "clique"

    def _test(self, bits, S):
        m = self._inside[S]
        return bits & m == m

    def _vector_test(self, graphs, S):
        m = self._inside[S]
        return (graphs & m) == m


class IndSetProblem(_SubsetGraphProblem):
    id = "indset"

    def _test(self, bits, S):
        return bits & self._inside[S] == 0

    def _vector_test(self, graphs, S):
        return (graphs & self._inside[S]) == 0


class VertexCoverProblem(_SubsetGraphProblem):
    id = "vertexcover"

    def _test(self, bits, S):
        return bits & self._inside[self._full ^ S] == 0

    def _vector_test(self, graphs, S):
        return (graphs & self._inside[self._full ^ S]) == 0


class KColProblem(_GraphProblem):
    id = "kcol"

    def __init__(self, n, params):
        super().__init__(n, params)
        self.k = int(params.get("k", 3))
        if self.k < 1:
            raise ValueError("k must be positive")
        self.certificate_count = self.k ** n
        self._pairs = _pairs(n)

    def colors(self, c: int) -> list:
        out = []
        for _ in range(self.n):
            c, r = divmod(c, self.k)
            out.append(r)
        return out

    def _index(self, cols) -> int:
        c = 0
        for x in reversed(cols):
            c = c * self.k + x
        return c

    def h(self, instance, certificate):
        cols = self.colors(certificate)
        bits = instance
        p = 0
        while bits:
            if bits & 1:
                i, j = self._pairs[p]
                if cols[i] == cols[j]:
                    return 0
            bits >>= 1
            p += 1
        return 1

    def act_certificate_raw(self, g, certificate):
        cols = self.colors(certificate)
        out = [0] * self.n
        for i, c in enumerate(cols):
            out[g[i]] = c
        return self._index(out)

    def orbit_reps(self):
        return [self._index(list(seq))
                for seq in itertools.combinations_with_replacement(range(self.k), self.n)]

    @property
    def orbit_count(self):
        return math.comb(self.n + self.k - 1, self.k - 1)

    def decode_certificate(self, c):
        return tuple(x + 1 for x in self.colors(c))

    def encode_certificate(self, colors) -> int:
        return self._index([x - 1 for x in colors])


class _SequenceMixin:
    """Certificates are orderings of the n vertices, ranked lexicographically."""

    @cached_property
    def _seqs(self):
        return list(itertools.permutations(range(self.n)))

    @cached_property
    def _rank(self):
        return {s: r for r, s in enumerate(self._seqs)}

    def act_certificate_raw(self, g, certificate):
        # Relabel the vertices named by the sequence.
        return self._rank[tuple(g[v] for v in self._seqs[certificate])]

    def orbit_reps(self):
        return [0]

    @property
    def orbit_count(self):
        return 1

    def decode_certificate(self, c):
        return tuple(v + 1 for v in self._seqs[c])

    def encode_certificate(self, seq) -> int:
        return self._rank[tuple(v - 1 for v in seq)]


class HamPathProblem(_SequenceMixin, _GraphProblem):
    id = "hampath"
    regular_orbits = True
    cycle = False

    def __init__(self, n, params):
        super().__init__(n, params)
        self.certificate_count = math.factorial(n)

    def h(self, instance, certificate):
        seq = self._seqs[certificate]
        idx = _arc_index(self.n) if self.directed else _pair_index(self.n)
        steps = list(zip(seq, seq[1:]))
        if self.cycle:
            steps.append((seq[-1], seq[0]))
        for a, b in steps:
            if not instance >> idx[a][b] & 1:
                return 0
        return 1


class HamCycleProblem(HamPathProblem):
    id = "hamcycle"
    cycle = True

    def __init__(self, n, params):
        if n < 3:
            raise ValueError("hamcycle needs n >= 3")
        super().__init__(n, params)


class DirHamPathProblem(HamPathProblem):
    """Directed Hamiltonian paths, aggregated by parity (or by count with ``count=1``)."""

    id = "dir_hampath_parity"
    directed = True

    def __init__(self, n, params):
        self.semigroup = Semigroup.INT_ADD if params.get("count", 0) else Semigroup.BOOL_XOR
        super().__init__(n, params)

    def value_range(self):
        if self.semigroup is Semigroup.INT_ADD:
            return (0, math.factorial(self.n))
        return (0, 1)


# -- satisfiability and CSPs ---------------------------------------------------

class KSatProblem(ProblemSpec):
    """Width-<=k clause selection: one bit per clause over the 2n literals.

    Literal ``2*v`` is ``x_{v+1}`` and ``2*v + 1`` its negation.  Clauses are
    literal sets of size 1..k, ordered by size and then lexicographically;
    clauses holding both ``x`` and ``not x`` are kept and always satisfied.
    """

    id = "ksat"

    def __init__(self, n, params):
        super().__init__(n, params)
        self.k = int(params.get("k", 3))
        if not 1 <= self.k <= 2 * n:
            raise ValueError(f"k={self.k} outside [1, {2 * n}]")
        self.clauses = [c for size in range(1, self.k + 1)
                        for c in itertools.combinations(range(2 * n), size)]
        self._clause_index = {c: i for i, c in enumerate(self.clauses)}
        self.instance_length = len(self.clauses)
        self.instance_count = 1 << self.instance_length
        self.certificate_count = 1 << n
        full = (1 << n) - 1
        # sat[a]: clause bits satisfied by assignment a
        self._unsat = []
        for a in range(1 << n):
            sat = 0
            for i, c in enumerate(self.clauses):
                if any((a >> (lit >> 1) & 1) != (lit & 1) for lit in c):
                    sat |= 1 << i
            self._unsat.append(((1 << self.instance_length) - 1) ^ sat)
        self._full = full

    def h(self, instance, certificate):
        return int(instance & self._unsat[certificate] == 0)

    def act_instance_raw(self, g, instance):
        out = 0
        i = 0
        bits = instance
        while bits:
            if bits & 1:
                c = tuple(sorted(2 * g[lit >> 1] + (lit & 1) for lit in self.clauses[i]))
                out |= 1 << self._clause_index[c]
            bits >>= 1
            i += 1
        return out

    def act_certificate_raw(self, g, certificate):
        return permute_subset(g, certificate)

    def orbit_reps(self):
        # z leading zeros: x_1..x_z = 0, the rest 1
        return [self._full ^ ((1 << z) - 1) for z in range(self.n + 1)]

    @property
    def orbit_count(self):
        return self.n + 1

    def partial_check(self, instance):
        # a variable must keep its multiset of (clause size, sign) occurrences
        prof = [[] for _ in range(self.n)]
        i = 0
        bits = instance
        while bits:
            if bits & 1:
                c = self.clauses[i]
                for lit in c:
                    prof[lit >> 1].append((len(c), lit & 1))
            bits >>= 1
            i += 1
        prof = [sorted(p) for p in prof]

        def check(partial):
            x = len(partial) - 1
            return prof[x] == prof[partial[x]]

        return check

    def decode(self, index):
        return frozenset(
            tuple((lit >> 1) + 1 if not lit & 1 else -((lit >> 1) + 1) for lit in self.clauses[i])
            for i in range(self.instance_length) if index >> i & 1)

    def encode(self, clauses) -> int:
        out = 0
        for c in clauses:
            lits = tuple(sorted(2 * (abs(v) - 1) + (v < 0) for v in c))
            out |= 1 << self._clause_index[lits]
        return out

    def decode_certificate(self, c):
        return tuple(c >> i & 1 for i in range(self.n))

    def encode_certificate(self, bits) -> int:
        return sum(b << i for i, b in enumerate(bits))

    def table_values(self) -> np.ndarray:
        inst = np.arange(self.instance_count, dtype=np.int64)
        out = np.zeros(inst.size, dtype=bool)
        for unsat in self._unsat:
            out |= (inst & unsat) == 0
        return out.astype(np.int64)


def _not_all_equal(sigma: int, k: int) -> list:
    table = []
    for code in range(sigma ** k):
        xs = [(code // sigma ** j) % sigma for j in range(k)]
        table.append(int(len(set(xs)) > 1))
    return table


class KCspProblem(ProblemSpec):
    """Constraint selection over ``q`` proof positions with one fixed k-ary clause.

    An instance selects a subset of the ``q**k`` index tuples; a proof
    ``y in Sigma^q`` satisfies it when the clause holds on ``y`` restricted to
    every selected tuple.  ``clause_table[code]`` with
    ``code = sum(x_j * |Sigma|**(j-1))`` gives the clause value; the default
    is "not all equal".
    """

    id = "kcsp"

    def __init__(self, n, params, clause_table=None):
        super().__init__(n, params)
        self.q = int(params.get("q", n))
        self.k = int(params.get("k", 2))
        self.sigma = int(params.get("sigma", 2))
        self.n = self.q
        self.group_degree = self.q
        self.alphabet_size = 2
        if self.q < 1 or self.k < 1 or self.sigma < 2:
            raise ValueError("need q >= 1, k >= 1, sigma >= 2")
        if clause_table is None:
            clause_table = _not_all_equal(self.sigma, self.k)
        clause_table = [int(bool(v)) for v in clause_table]
        if len(clause_table) != self.sigma ** self.k:
            raise ValueError(f"clause table needs {self.sigma ** self.k} entries")
        self.clause_table = clause_table
        self.tuples = list(itertools.product(range(self.q), repeat=self.k))
        self._tuple_index = {t: i for i, t in enumerate(self.tuples)}
        self.instance_length = len(self.tuples)
        self.instance_count = 1 << self.instance_length
        self.certificate_count = self.sigma ** self.q
        # good[y]: tuple bits on which the clause holds under proof y
        self._good = []
        for y in range(self.certificate_count):
            ys = self.proof(y)
            good = 0
            for i, t in enumerate(self.tuples):
                code = sum(ys[p] * self.sigma ** j for j, p in enumerate(t))
                if clause_table[code]:
                    good |= 1 << i
            self._good.append(good)
        self._all = (1 << self.instance_length) - 1

    def proof(self, y: int) -> list:
        out = []
        for _ in range(self.q):
            y, r = divmod(y, self.sigma)
            out.append(r)
        return out

    def _proof_index(self, ys) -> int:
        y = 0
        for v in reversed(ys):
            y = y * self.sigma + v
        return y

    def h(self, instance, certificate):
        return int(instance & (self._all ^ self._good[certificate]) == 0)

    def act_instance_raw(self, g, instance):
        out = 0
        i = 0
        bits = instance
        while bits:
            if bits & 1:
                out |= 1 << self._tuple_index[tuple(g[p] for p in self.tuples[i])]
            bits >>= 1
            i += 1
        return out

    def act_certificate_raw(self, g, certificate):
        ys = self.proof(certificate)
        out = [0] * self.q
        for i, v in enumerate(ys):
            out[g[i]] = v
        return self._proof_index(out)

    def orbit_reps(self):
        return [self._proof_index(list(seq))
                for seq in itertools.combinations_with_replacement(range(self.sigma), self.q)]

    @property
    def orbit_count(self):
        return math.comb(self.q + self.sigma - 1, self.sigma - 1)

    def partial_check(self, instance):
        # position p: sorted multiset of (tuple shape relative to p) is a cheap invariant
        prof = [[] for _ in range(self.q)]
        for i, t in enumerate(self.tuples):
            if instance >> i & 1:
                for j, p in enumerate(t):
                    prof[p].append((j, tuple(x == p for x in t)))
        prof = [sorted(p) for p in prof]

        def check(partial):
            x = len(partial) - 1
            return prof[x] == prof[partial[x]]

        return check

    def decode(self, index):
        return frozenset(tuple(p + 1 for p in self.tuples[i])
                         for i in range(self.instance_length) if index >> i & 1)

    def encode(self, tuples) -> int:
        return sum(1 << self._tuple_index[tuple(p - 1 for p in t)] for t in tuples)

    def decode_certificate(self, c):
        return tuple(self.proof(c))

    def encode_certificate(self, ys) -> int:
        return self._proof_index(list(ys))


class MaxKCspProblem(KCspProblem):
    """Like kcsp but h counts satisfied selected tuples; aggregated by max."""

    id = "maxkcsp"
    semigroup = Semigroup.INT_MAX

    def h(self, instance, certificate):
        return bin(instance & self._good[certificate]).count("1")

    def value_range(self):
        return (0, self.instance_length)


# -- fine-grained problems -------------------------------------------------------

class OVProblem(ProblemSpec):
    """Orthogonal vectors: n vectors in {0,1}^d, is some pair i < j orthogonal?

    Vector ``i`` occupies instance bits ``[i*d, (i+1)*d)``; certificates are
    index pairs ranked lexicographically.
    """

    id = "ov"

    def __init__(self, n, params):
        super().__init__(n, params)
        self.d = int(params.get("d", 2))
        if n < 2 or self.d < 1:
            raise ValueError("ov needs n >= 2 and d >= 1")
        self.instance_length = n * self.d
        self.instance_count = 1 << self.instance_length
        self.pairs = _pairs(n)
        self._pair_rank = {p: r for r, p in enumerate(self.pairs)}
        self.certificate_count = len(self.pairs)
        self._vmask = (1 << self.d) - 1

    def vectors(self, instance: int) -> list:
        return [(instance >> (i * self.d)) & self._vmask for i in range(self.n)]

    def h(self, instance, certificate):
        i, j = self.pairs[certificate]
        d, m = self.d, self._vmask
        return int((instance >> (i * d)) & (instance >> (j * d)) & m == 0)

    def act_instance_raw(self, g, instance):
        out = 0
        for i, v in enumerate(self.vectors(instance)):
            out |= v << (g[i] * self.d)
        return out

    def images_by_rank(self, instances: np.ndarray, ranks: np.ndarray) -> np.ndarray:
        """Image of ``instances[b]`` under the ``ranks[b, t]``-th permutation (lex order)."""
        perms = np.asarray(lex_permutations(self.n), dtype=np.int64).reshape(-1, self.n)
        slots = perms[ranks]  # (B, T, n): vector i moves to slot g(i)
        instances = np.asarray(instances, dtype=np.int64)
        out = np.zeros(ranks.shape, dtype=np.int64)
        for i in range(self.n):
            vec = (instances >> (i * self.d)) & self._vmask
            out |= vec[:, None] << (self.d * slots[..., i])
        return out

    def act_certificate_raw(self, g, certificate):
        i, j = self.pairs[certificate]
        a, b = g[i], g[j]
        return self._pair_rank[(a, b) if a < b else (b, a)]

    def orbit_reps(self):
        return [0]

    @property
    def orbit_count(self):
        return 1

    def partial_check(self, instance):
        vecs = self.vectors(instance)

        def check(partial):
            x = len(partial) - 1
            return vecs[x] == vecs[partial[x]]

        return check

    def decode(self, index):
        return OVInstance(self.n, self.d, tuple(
            tuple(v >> t & 1 for t in range(self.d)) for v in self.vectors(index)))

    def encode(self, obj: "OVInstance") -> int:
        out = 0
        for i, vec in enumerate(obj.vectors):
            for t, b in enumerate(vec):
                out |= int(b) << (i * self.d + t)
        return out

    def table_values(self) -> np.ndarray:
        inst = np.arange(self.instance_count, dtype=np.int64)
        vecs = [(inst >> (i * self.d)) & self._vmask for i in range(self.n)]
        out = np.zeros(inst.size, dtype=bool)
        for i, j in self.pairs:
            out |= (vecs[i] & vecs[j]) == 0
        return out.astype(np.int64)


@dataclass(frozen=True)
class OVInstance:
    n: int
    d: int
    vectors: tuple  # n tuples of d bits

    def __post_init__(self):
        if len(self.vectors) != self.n or any(len(v) != self.d for v in self.vectors):
            raise ValueError("vector count or dimension does not match (n, d)")


class ParityKCliqueProblem(_GraphProblem):
    """Parity of the number of k-cliques; certificates are k-subsets."""

    id = "parity_kclique"
    semigroup = Semigroup.BOOL_XOR

    def __init__(self, n, params):
        super().__init__(n, params)
        self.k = int(params.get("k", 3))
        if not 1 <= self.k <= n:
            raise ValueError(f"k={self.k} outside [1, {n}]")
        self.subsets = list(itertools.combinations(range(n), self.k))
        self._subset_rank = {s: r for r, s in enumerate(self.subsets)}
        self.certificate_count = len(self.subsets)
        idx = _pair_index(n)
        self._masks = []
        for s in self.subsets:
            m = 0
            for a, b in itertools.combinations(s, 2):
                m |= 1 << idx[a][b]
            self._masks.append(m)

    def h(self, instance, certificate):
        m = self._masks[certificate]
        return int(instance & m == m)

    def act_certificate_raw(self, g, certificate):
        return self._subset_rank[tuple(sorted(g[v] for v in self.subsets[certificate]))]

    def orbit_reps(self):
        return [0]

    @property
    def orbit_count(self):
        return 1

    def table_values(self) -> np.ndarray:
        graphs = np.arange(self.instance_count, dtype=np.int64)
        count = np.zeros(graphs.size, dtype=np.int64)
        for m in self._masks:
            count += (graphs & m) == m
        return count & 1


PROBLEMS = {
    "clique": CliqueProblem,
    "indset": IndSetProblem,
    "vertexcover": VertexCoverProblem,
    "kcol": KColProblem,
    "hampath": HamPathProblem,
    "hamcycle": HamCycleProblem,
    "dir_hampath_parity": DirHamPathProblem,
    "ksat": KSatProblem,
    "kcsp": KCspProblem,
    "maxkcsp": MaxKCspProblem,
    "ov": OVProblem,
    "parity_kclique": ParityKCliqueProblem,
}

_PARAMS = {
    "clique": set(), "indset": set(), "vertexcover": set(), "hampath": set(),
    "hamcycle": set(), "kcol": {"k"}, "dir_hampath_parity": {"count"},
    "ksat": {"k"}, "kcsp": {"q", "k", "sigma"}, "maxkcsp": {"q", "k", "sigma"},
    "ov": {"d"}, "parity_kclique": {"k"},
}


def make_problem(id: str, params: dict | None = None,
                 clause_table: Sequence[int] | None = None) -> ProblemSpec:
    """Build a problem by name; ``params`` maps parameter names to integers."""
    if id not in PROBLEMS:
        raise ValueError(f"unknown problem {id!r}; choose from {sorted(PROBLEMS)}")
    params = dict(params or {})
    extra = set(params) - _PARAMS[id] - {"n"}
    if extra:
        raise ValueError(f"unexpected parameters for {id}: {sorted(extra)}")
    params = {k: int(v) for k, v in params.items()}
    if id in ("kcsp", "maxkcsp"):
        if "n" not in params and "q" not in params:
            raise ValueError(f"{id} needs q (or n)")
        n = params.get("q", params.get("n"))
        if "n" in params and "q" in params and params["n"] != params["q"]:
            raise ValueError("n and q disagree")
        return PROBLEMS[id](n, params, clause_table)
    if clause_table is not None:
        raise ValueError("clause_table only applies to kcsp and maxkcsp")
    if "n" not in params:
        raise ValueError(f"{id} needs n")
    return PROBLEMS[id](params["n"], params)


def parse_graph_text(text: str, directed: bool = False) -> GraphInstance:
    """First line ``n``; then ``i j`` edge lines (1-based) or one hex edge-bit vector."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ValueError("empty graph description")
    try:
        n = int(lines[0])
    except ValueError:
        raise ValueError(f"line 1: expected vertex count, got {lines[0]!r}") from None
    body = lines[1:]
    if len(body) == 1 and len(body[0].split()) == 1:
        return GraphInstance(n, int(body[0], 16), directed)
    edges = []
    for lineno, ln in enumerate(body, start=2):
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'i j', got {ln!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return GraphInstance.from_edges(n, edges, directed)


# -- public operations -------------------------------------------------------------

def _raw(problem: ProblemSpec, g: Permutation) -> tuple:
    if g.degree != problem.group_degree:
        raise ValueError(f"degree mismatch: {g.degree} != {problem.group_degree}")
    return g.array


def h_eval(problem: ProblemSpec, instance: int, certificate: int) -> int:
    if not 0 <= certificate < problem.certificate_count:
        raise IndexError(f"certificate {certificate} outside [0, {problem.certificate_count})")
    return problem.h(instance, certificate)


def act_instance(problem: ProblemSpec, g: Permutation, instance: int) -> int:
    return problem.act_instance_raw(_raw(problem, g), instance)


def act_certificate(problem: ProblemSpec, g: Permutation, certificate: int) -> int:
    return problem.act_certificate_raw(_raw(problem, g), certificate)


def orbit_reps(problem: ProblemSpec) -> list:
    return problem.orbit_reps()


def encode_decode(problem: ProblemSpec, direction: str, obj):
    """``to_index`` encodes a structured instance; ``from_index`` decodes one."""
    if direction == "to_index":
        return problem.encode(obj)
    if direction == "from_index":
        return problem.decode(obj)
    raise ValueError(f"direction must be 'to_index' or 'from_index', not {direction!r}")


def instance_aut_group(problem: ProblemSpec, instance: int,
                       strategy: AutStrategy | str = AutStrategy.BACKTRACKING) -> StabilizerChain:
    """Chain of the stabilizer of ``instance`` under the instance action."""
    act = problem.act_instance_raw
    m = problem.group_degree
    strategy = AutStrategy(strategy)
    if strategy is AutStrategy.BACKTRACKING:
        return aut_group_raw(lambda img: act(img, instance) == instance, m,
                             problem.partial_check(instance))
    return aut_group(lambda g: act(g.array, instance) == instance, m, strategy)
