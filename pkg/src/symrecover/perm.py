"""Permutations of [m] and stabilizer chains.

Points are 1-based at the public surface and 0-based internally.  Composition
follows ``(p * q)(x) == p(q(x))``, so a left action satisfies
``act(p * q, x) == act(p, act(q, x))``.  Under this convention two group
elements give the same image of an object exactly when they lie in the same
*left* coset of its stabilizer.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Sequence


class Permutation:
    """An element of S_m, stored as a tuple of 0-based images."""

    __slots__ = ("_img",)

    def __init__(self, images: Sequence[int]):
        img = tuple(int(x) - 1 for x in images)
        if sorted(img) != list(range(len(img))):
            raise ValueError(f"not a permutation of [{len(img)}]: {tuple(images)}")
        if not img:
            raise ValueError("degree must be positive")
        self._img = img

    @classmethod
    def _raw(cls, img: tuple) -> "Permutation":
        p = cls.__new__(cls)
        p._img = img
        return p

    @classmethod
    def identity(cls, m: int) -> "Permutation":
        if m < 1:
            raise ValueError("degree must be positive")
        return cls._raw(tuple(range(m)))

    @classmethod
    def parse(cls, text: str) -> "Permutation":
        """Parse one-line image notation such as ``"2,3,1"``."""
        return cls([int(tok) for tok in text.replace(" ", "").split(",") if tok])

    @property
    def degree(self) -> int:
        return len(self._img)

    @property
    def images(self) -> tuple:
        return tuple(x + 1 for x in self._img)

    @property
    def array(self) -> tuple:
        """0-based image tuple."""
        return self._img

    def __call__(self, point: int) -> int:
        if not 1 <= point <= len(self._img):
            raise ValueError(f"point {point} outside [1, {len(self._img)}]")
        return self._img[point - 1] + 1

    def __mul__(self, other: "Permutation") -> "Permutation":
        if not isinstance(other, Permutation):
            return NotImplemented
        _check_degree(self, other)
        p = self._img
        return Permutation._raw(tuple(p[i] for i in other._img))

    def inverse(self) -> "Permutation":
        return Permutation._raw(_inv(self._img))

    def is_identity(self) -> bool:
        return all(i == x for i, x in enumerate(self._img))

    def __eq__(self, other):
        return isinstance(other, Permutation) and self._img == other._img

    def __lt__(self, other: "Permutation") -> bool:
        return self._img < other._img

    def __hash__(self):
        return hash(self._img)

    def __len__(self):
        return len(self._img)

    def __str__(self):
        return ",".join(str(x + 1) for x in self._img)

    def __repr__(self):
        return f"Permutation({str(self)!r})"


def _check_degree(p: Permutation, q: Permutation) -> None:
    if p.degree != q.degree:
        raise ValueError(f"degree mismatch: {p.degree} != {q.degree}")


def _mul(p: tuple, q: tuple) -> tuple:
    return tuple(p[i] for i in q)


def _inv(p: tuple) -> tuple:
    out = [0] * len(p)
    for i, x in enumerate(p):
        out[x] = i
    return tuple(out)


def perm_algebra(op: str, p: Permutation | int | None = None, q=None):
    """Dispatch ``compose``, ``inverse``, ``apply`` or ``identity``.

    ``identity`` takes the degree as its first argument.
    """
    if op == "compose":
        return p * q
    if op == "inverse":
        return p.inverse()
    if op == "apply":
        return p(q)
    if op == "identity":
        return Permutation.identity(int(p))
    raise ValueError(f"unknown permutation operation {op!r}")


def all_permutations(m: int) -> Iterable[Permutation]:
    """All of S_m in lexicographic image order."""
    for img in itertools.permutations(range(m)):
        yield Permutation._raw(img)


_LEX_CACHE: dict = {}


def lex_permutations(m: int) -> list:
    """S_m as 0-based image tuples in lexicographic order (cached)."""
    if m not in _LEX_CACHE:
        _LEX_CACHE[m] = list(itertools.permutations(range(m)))
    return _LEX_CACHE[m]


def lex_inverse_ranks(m: int) -> list:
    """r -> lexicographic rank of the inverse of the r-th permutation."""
    perms = lex_permutations(m)
    rank = {p: r for r, p in enumerate(perms)}
    return [rank[_inv(p)] for p in perms]


class CosetSide(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


class AutStrategy(enum.Enum):
    EXHAUSTIVE = "exhaustive"
    BACKTRACKING = "backtracking"


@dataclass(frozen=True)
class ChainLevel:
    base_point: int  # 0-based
    generators: tuple  # 0-based image tuples fixing all earlier base points
    transversal: dict  # orbit point -> tuple u with u[base_point] == point

    @property
    def orbit(self) -> tuple:
        return tuple(self.transversal)


@dataclass(frozen=True)
class StabilizerChain:
    """Base and strong generating set for a subgroup of S_m.

    Base points increase and every point that is not a base point is fixed by
    the stabilizer of the base points before it, which is what the greedy
    lexicographically-minimal coset representative needs.
    """

    degree: int
    levels: tuple

    @property
    def base(self) -> tuple:
        return tuple(lv.base_point + 1 for lv in self.levels)

    @property
    def strong_generators(self) -> list:
        seen = {}
        for lv in self.levels:
            for g in lv.generators:
                seen.setdefault(g, None)
        return [Permutation._raw(g) for g in seen]

    def orbit(self, level: int) -> tuple:
        return tuple(x + 1 for x in self.levels[level].orbit)

    def generators(self, level: int) -> list:
        """Strong generators of the stabilizer of the first ``level`` base points."""
        return [Permutation._raw(g) for g in self.levels[level].generators]

    def transversal(self, level: int) -> dict:
        lv = self.levels[level]
        return {x + 1: Permutation._raw(u) for x, u in lv.transversal.items()}

    def order(self) -> int:
        return math.prod(len(lv.transversal) for lv in self.levels)

    def __contains__(self, p: Permutation) -> bool:
        return sift(self, p)[1]

    def elements(self) -> Iterable[Permutation]:
        """Every group element (products of transversal elements)."""
        m = self.degree
        ident = tuple(range(m))
        trans = [list(lv.transversal.values()) for lv in self.levels]
        for combo in itertools.product(*trans):
            g = ident
            for u in combo:
                g = _mul(g, u)
            yield Permutation._raw(g)


def _orbit_transversal(base: int, gens: Sequence[tuple], m: int) -> dict:
    trans = {base: tuple(range(m))}
    queue = [base]
    for y in queue:
        uy = trans[y]
        for s in gens:
            z = s[y]
            if z not in trans:
                trans[z] = _mul(s, uy)
                queue.append(z)
    return trans


def _sift_raw(levels: Sequence, g: tuple, start: int = 0):
    """Sift ``g`` from level ``start``; return (residue, drop-out level)."""
    for i in range(start, len(levels)):
        b, trans = levels[i]
        u = trans.get(g[b])
        if u is None:
            return g, i
        if g[b] != b:
            g = _mul(_inv(u), g)
    return g, len(levels)


def _schreier_sims_raw(gens: Sequence[tuple], m: int) -> StabilizerChain:
    ident = tuple(range(m))
    gens = [g for g in dict.fromkeys(gens) if g != ident]
    # Full base 0..m-1; trivial levels are dropped at the end.
    strong = [[g for g in gens if all(g[j] == j for j in range(i))] for i in range(m)]
    work = [(i, {i: ident}) for i in range(m)]
    i = m - 1
    while i >= 0:
        trans = _orbit_transversal(i, strong[i], m)
        work[i] = (i, trans)
        restart = False
        for y, uy in trans.items():
            for s in strong[i]:
                h = _mul(_inv(trans[s[y]]), _mul(s, uy))
                if h == ident:
                    continue
                r, j = _sift_raw(work, h, i + 1)
                if r != ident:
                    for lvl in range(i + 1, j + 1):
                        strong[lvl].append(r)
                    i = j
                    restart = True
                    break
            if restart:
                break
        if not restart:
            i -= 1
    levels = tuple(
        ChainLevel(b, tuple(strong[b]), trans)
        for b, trans in work
        if len(trans) > 1
    )
    return StabilizerChain(m, levels)


def schreier_sims(generators: Iterable[Permutation], m: int) -> StabilizerChain:
    """Deterministic Schreier-Sims with base points taken in increasing order."""
    gens = []
    for g in generators:
        if g.degree != m:
            raise ValueError(f"generator of degree {g.degree} in S_{m}")
        gens.append(g.array)
    return _schreier_sims_raw(gens, m)


def trivial_chain(m: int) -> StabilizerChain:
    return StabilizerChain(m, ())


def symmetric_chain(m: int) -> StabilizerChain:
    gens = []
    if m > 1:
        gens = [Permutation._raw((1, 0) + tuple(range(2, m))),
                Permutation._raw(tuple(range(1, m)) + (0,))]
    return schreier_sims(gens, m)


def sift(chain: StabilizerChain, p: Permutation) -> tuple:
    """Return ``(residue, is_member)``."""
    if p.degree != chain.degree:
        raise ValueError(f"degree mismatch: {p.degree} != {chain.degree}")
    levels = [(lv.base_point, lv.transversal) for lv in chain.levels]
    r, _ = _sift_raw(levels, p.array)
    res = Permutation._raw(r)
    return res, res.is_identity()


def group_order(chain: StabilizerChain) -> int:
    return chain.order()


# -- automorphism groups ---------------------------------------------------

DEFAULT_EXHAUSTIVE_CAP = 10


def aut_group(
    oracle: Callable[[Permutation], bool],
    m: int,
    strategy: AutStrategy | str = AutStrategy.BACKTRACKING,
    prune: Callable[[tuple], bool] | None = None,
    max_exhaustive_degree: int = DEFAULT_EXHAUSTIVE_CAP,
) -> StabilizerChain:
    """Stabilizer chain of the subgroup accepted by ``oracle``.

    ``oracle`` must accept a subgroup; this is not checked.  ``prune``
    optionally rejects partial maps early during backtracking: it receives the
    1-based images of points ``1..len(partial)`` and returns False when no
    completion can be accepted.
    """
    strategy = AutStrategy(strategy)
    if strategy is AutStrategy.EXHAUSTIVE:
        if m > max_exhaustive_degree:
            raise ValueError(f"exhaustive search over S_{m} exceeds cap {max_exhaustive_degree}")
        return _aut_exhaustive(oracle, m)
    return _aut_backtrack(oracle, m, prune)


def _aut_exhaustive(oracle, m):
    chain = trivial_chain(m)
    gens = []
    for g in all_permutations(m):
        if g.is_identity() or not oracle(g):
            continue
        if not sift(chain, g)[1]:
            gens.append(g)
            chain = schreier_sims(gens, m)
    return chain


def _aut_backtrack(oracle, m, prune):
    if prune is None:
        raw_prune = None
    else:
        def raw_prune(partial):
            return prune(tuple(x + 1 for x in partial))
    return aut_group_raw(lambda img: oracle(Permutation._raw(img)), m, raw_prune)


def aut_group_raw(oracle, m, prune=None) -> StabilizerChain:
    """Backtracking automorphism search on 0-based image tuples.

    ``oracle(img)`` decides membership of a full map; ``prune(partial)`` sees
    the 0-based list of images of points ``0..len(partial)-1``.
    """
    gens: list[tuple] = []
    for i in range(m - 1, -1, -1):
        # gens generate the full stabilizer of points 0..i; extend to 0..i-1.
        orbit = set(_orbit_transversal(i, gens, m))
        for gamma in range(i + 1, m):
            if gamma in orbit:
                continue
            g = _find_element(oracle, m, i, gamma, prune)
            if g is not None:
                gens.append(g)
                orbit = set(_orbit_transversal(i, gens, m))
    return _schreier_sims_raw(gens, m)


def _find_element(oracle, m, i, gamma, prune):
    """First accepted g (DFS order) fixing 0..i-1 with g(i) = gamma."""
    partial = list(range(i)) + [gamma]
    used = set(partial)
    if prune is not None and not prune(partial):
        return None

    def dfs():
        if len(partial) == m:
            img = tuple(partial)
            return img if oracle(img) else None
        for y in range(m):
            if y in used:
                continue
            partial.append(y)
            used.add(y)
            if prune is None or prune(partial):
                found = dfs()
                if found is not None:
                    return found
            partial.pop()
            used.discard(y)
        return None

    return dfs()


# -- cosets and orbits -----------------------------------------------------

def _left_key(levels: Sequence, g: tuple) -> tuple:
    """Lexicographically minimal element of the left coset g*H."""
    for b, trans in levels:
        best = None
        for pt, u in trans.items():
            if best is None or g[pt] < g[best[0]]:
                best = (pt, u)
        if best[0] != b:
            g = _mul(g, best[1])
    return g


def coset_key(chain: StabilizerChain, g: Permutation, side: CosetSide | str) -> tuple:
    """Canonical key of the coset of ``g``: equal iff same coset."""
    side = CosetSide(side)
    levels = [(lv.base_point, lv.transversal) for lv in chain.levels]
    a = g.array if side is CosetSide.LEFT else _inv(g.array)
    return _left_key(levels, a)


def list_coset_reps(
    chain_H: StabilizerChain, m: int, k: int, side: CosetSide | str
) -> list:
    """First ``k`` coset representatives met while scanning S_m in lex order.

    Each representative is the lexicographically first element of its coset
    (left: ``g*H``, right: ``H*g``), so the output is fixed by ``(H, k, side)``.
    """
    side = CosetSide(side)
    if chain_H.degree != m:
        raise ValueError(f"degree mismatch: {chain_H.degree} != {m}")
    index = math.factorial(m) // chain_H.order()
    if k > index:
        raise ValueError(f"requested {k} coset representatives but the index is {index}")
    levels = [(lv.base_point, lv.transversal) for lv in chain_H.levels]
    if not levels:
        return [Permutation._raw(img) for img in itertools.islice(itertools.permutations(range(m)), k)]
    seen = set()
    out = []
    left = side is CosetSide.LEFT
    for img in itertools.permutations(range(m)):
        if len(out) >= k:
            break
        key = _left_key(levels, img if left else _inv(img))
        if key not in seen:
            seen.add(key)
            out.append(Permutation._raw(img))
    return out


ORBIT_DEGREE_CAP = 8


def orbit_of(
    action: Callable[[Permutation, object], Hashable],
    seed_object: Hashable,
    m: int,
    max_degree: int = ORBIT_DEGREE_CAP,
) -> set:
    """Orbit of ``seed_object`` by exhaustive enumeration of S_m."""
    if m > max_degree:
        raise ValueError(f"orbit enumeration over S_{m} exceeds cap {max_degree}")
    return {action(g, seed_object) for g in all_permutations(m)}


def closure_size(generators: Sequence[Permutation], m: int) -> int:
    """Size of the group generated by ``generators``, by BFS over products."""
    ident = tuple(range(m))
    gens = [g.array for g in generators]
    seen = {ident}
    queue = [ident]
    for x in queue:
        for s in gens:
            y = _mul(s, x)
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return len(seen)
