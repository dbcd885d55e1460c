"""Semigroup aggregation over certificates, with symmetry-compressed evaluation.

A problem is a function ``f(x) = combine over certificates c of h(x, c)``
together with two compatible actions of S_m, one on instances (``alpha``) and
one on certificates (``beta``), such that
``h(alpha_g(x), beta_g(c)) == h(x, c)``.  Instances and certificates are
plain integers under each problem's canonical encoding, and semigroup values
are plain ints (booleans as 0/1).
"""
from __future__ import annotations

import enum
import math
from typing import Callable, Iterable, Sequence

from .perm import (
    CosetSide,
    Permutation,
    StabilizerChain,
    all_permutations,
    list_coset_reps,
)


class Semigroup(enum.Enum):
    BOOL_OR = "BoolOr"
    INT_MAX = "IntMax"
    BOOL_XOR = "BoolXor"
    INT_ADD = "IntAdd"

    @property
    def idempotent(self) -> bool:
        return self in (Semigroup.BOOL_OR, Semigroup.INT_MAX)

    @property
    def boolean(self) -> bool:
        return self in (Semigroup.BOOL_OR, Semigroup.BOOL_XOR)

    def combine(self, a: int, b: int) -> int:
        if self is Semigroup.BOOL_OR:
            return a | b
        if self is Semigroup.INT_MAX:
            return a if a >= b else b
        if self is Semigroup.BOOL_XOR:
            return a ^ b
        return a + b

    @property
    def absorbing(self):
        """Value that no further combine can change, if any (enables early exit)."""
        return 1 if self is Semigroup.BOOL_OR else None

    def fold(self, values: Iterable[int]) -> int:
        it = iter(values)
        try:
            acc = next(it)
        except StopIteration:
            raise ValueError("cannot fold an empty sequence in a semigroup") from None
        for v in it:
            acc = self.combine(acc, v)
        return acc


def semigroup_power(d: int, t: int, s: Semigroup) -> int:
    """Combine ``t`` copies of ``d`` with O(log t) combines."""
    t = int(t)
    if t < 1:
        raise ValueError("semigroup power needs t >= 1")
    result = None
    base = d
    while t:
        if t & 1:
            result = base if result is None else s.combine(result, base)
        t >>= 1
        if t:
            base = s.combine(base, base)
    return result


class ProblemSpec:
    """Base class for symmetric-group SICSAF problems.

    Subclasses set the size attributes in ``__init__`` and implement ``h``,
    ``act_instance``, ``act_certificate`` and ``orbit_reps``.  Group elements
    are handled as 0-based image tuples in the hot paths; the public wrappers
    in :mod:`symrecover.problems` accept :class:`Permutation`.
    """

    id: str = ""
    semigroup: Semigroup = Semigroup.BOOL_OR
    alphabet_size: int = 2
    #: every certificate orbit has size m! (needed for non-idempotent compression)
    regular_orbits: bool = False

    def __init__(self, n: int, params: dict):
        self.n = n
        self.params = dict(params)
        self.group_degree = n
        self.instance_length = 0
        self.instance_count = 0
        self.certificate_count = 0

    # -- required ----------------------------------------------------------
    def h(self, instance: int, certificate: int) -> int:
        raise NotImplementedError

    def act_instance_raw(self, g: tuple, instance: int) -> int:
        raise NotImplementedError

    def act_certificate_raw(self, g: tuple, certificate: int) -> int:
        raise NotImplementedError

    def orbit_reps(self) -> list:
        raise NotImplementedError

    # -- optional hooks ----------------------------------------------------
    @property
    def orbit_count(self) -> int:
        return len(self.orbit_reps())

    def certificates(self) -> Iterable[int]:
        return range(self.certificate_count)

    def value_range(self) -> tuple:
        """Inclusive (lo, hi) range of f and h values."""
        return (0, 1)

    def symmetry_key(self, instance: int):
        """Part of the instance the group acts on; equal keys share Aut."""
        return instance

    def symmetry_offset(self, instance: int) -> int:
        """Part of the encoding left untouched by the action (``instance - offset`` carries the key)."""
        return 0

    def all_images(self, instance: int):
        """alpha_g(instance) for every g of S_m in lexicographic order, or None.

        Problems with a cheap vectorised action override this; callers fall
        back to the generic coset machinery when it returns None.
        """
        return None

    def relevant_orbits(self, instance: int) -> Sequence[int]:
        """Orbit positions whose h-values are not all the combine identity.

        Problems override this only when the skipped orbits provably
        contribute the identity element (e.g. size-mismatched subsets under OR).
        """
        return range(self.orbit_count)

    def partial_check(self, instance: int) -> Callable[[Sequence[int]], bool] | None:
        """Prune for automorphism backtracking over 0-based partial maps."""
        return None

    def describe(self) -> dict:
        return {
            "id": self.id,
            "n": self.n,
            "params": self.params,
            "alphabet_size": self.alphabet_size,
            "instance_length": self.instance_length,
            "instance_count": self.instance_count,
            "group_degree": self.group_degree,
            "semigroup": self.semigroup.value,
            "certificate_count": self.certificate_count,
            "orbit_count": self.orbit_count,
        }

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, params={self.params})"


def _check_instance(problem: ProblemSpec, instance: int) -> None:
    if not 0 <= instance < problem.instance_count:
        raise IndexError(f"instance {instance} outside [0, {problem.instance_count})")


DEFAULT_CERTIFICATE_BUDGET = 1 << 22


def eval_bruteforce(problem: ProblemSpec, instance: int,
                    budget: int = DEFAULT_CERTIFICATE_BUDGET) -> int:
    """Aggregate h over the whole certificate space."""
    _check_instance(problem, instance)
    if problem.certificate_count > budget:
        raise ValueError(
            f"certificate space {problem.certificate_count} exceeds budget {budget}")
    s = problem.semigroup
    h = problem.h
    absorbing = s.absorbing
    acc = None
    for c in problem.certificates():
        v = h(instance, c)
        acc = v if acc is None else s.combine(acc, v)
        if acc == absorbing:
            break
    return acc


ORBIT_FULL_CAP = 8


def eval_orbit_full(problem: ProblemSpec, instance: int, orbit: int) -> int:
    """f_i(x): combine h(x, beta_g(y_i)) over all g in S_m (1-based orbit index)."""
    if not problem.semigroup.idempotent:
        raise ValueError("full-group orbit sums need an idempotent semigroup")
    m = problem.group_degree
    if m > ORBIT_FULL_CAP:
        raise ValueError(f"S_{m} enumeration exceeds cap {ORBIT_FULL_CAP}")
    _check_instance(problem, instance)
    reps = problem.orbit_reps()
    if not 1 <= orbit <= len(reps):
        raise IndexError(f"orbit index {orbit} outside [1, {len(reps)}]")
    y = reps[orbit - 1]
    s = problem.semigroup
    return s.fold(problem.h(instance, problem.act_certificate_raw(g.array, y))
                  for g in all_permutations(m))


def right_transversal(aut_chain: StabilizerChain, budget: int | None = None) -> list:
    m = aut_chain.degree
    index = math.factorial(m) // aut_chain.order()
    if budget is not None and index > budget:
        raise ValueError(
            f"transversal of size {index} exceeds budget {budget}; "
            "this instance belongs to the query branch")
    return list_coset_reps(aut_chain, m, index, CosetSide.RIGHT)


def _compressed(problem, instance, transversal, exponent):
    s = problem.semigroup
    h = problem.h
    act = problem.act_certificate_raw
    reps = problem.orbit_reps()
    absorbing = s.absorbing
    total = None
    for i in problem.relevant_orbits(instance):
        y = reps[i]
        f_i = None
        for u in transversal:
            v = h(instance, act(u.array, y))
            if exponent != 1:
                v = semigroup_power(v, exponent, s)
            f_i = v if f_i is None else s.combine(f_i, v)
            if f_i == absorbing:
                break
        total = f_i if total is None else s.combine(total, f_i)
        if total == absorbing:
            break
    if total is None:
        # Every orbit was skipped as contributing only the identity element.
        total = 0
    return total


def eval_compressed(problem: ProblemSpec, instance: int, aut_chain: StabilizerChain,
                    budget: int | None = None, transversal: Sequence[Permutation] | None = None) -> int:
    """Evaluate f via a right transversal of Aut(instance), one h per coset per orbit."""
    if not problem.semigroup.idempotent:
        raise ValueError(
            f"{problem.semigroup.value} is not idempotent; use eval_compressed_regular "
            "for problems whose certificate orbits are regular")
    _check_instance(problem, instance)
    if transversal is None:
        transversal = right_transversal(aut_chain, budget)
    return _compressed(problem, instance, transversal, 1)


def eval_compressed_regular(problem: ProblemSpec, instance: int, aut_chain: StabilizerChain,
                            budget: int | None = None,
                            transversal: Sequence[Permutation] | None = None) -> int:
    """Compressed evaluation for any commutative semigroup, given regular orbits.

    Each coset contributes its h-value combined |Aut| times.
    """
    if not problem.regular_orbits:
        raise ValueError(f"{problem.id} does not guarantee regular certificate orbits")
    _check_instance(problem, instance)
    if transversal is None:
        transversal = right_transversal(aut_chain, budget)
    return _compressed(problem, instance, transversal, aut_chain.order())


def check_invariance(problem: ProblemSpec, instance: int, certificate: int,
                     g: Permutation) -> bool:
    """h(alpha_g(x), beta_g(c)) == h(x, c)."""
    if g.degree != problem.group_degree:
        raise ValueError(f"degree mismatch: {g.degree} != {problem.group_degree}")
    a = g.array
    return (problem.h(problem.act_instance_raw(a, instance),
                      problem.act_certificate_raw(a, certificate))
            == problem.h(instance, certificate))
