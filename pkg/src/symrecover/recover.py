"""Two-branch recovery from a randomly corrupted truth table.

For an instance x with automorphism group A (inside S_m) and sample size s:

* ``|A| * s >= m!``: the index of A is at most s, so f(x) is computed
  exactly from a right transversal of A without touching the table;
* otherwise s left-coset representatives g_1..g_s of A give s distinct
  isomorphic instances g_i(x); the table is queried there and the strict
  majority is returned.

Everything except the table lookups is deterministic, so the per-instance
work is captured once as a :class:`RecoveryPlan` and replayed against any
number of corrupted tables.
"""
from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .noise import CorruptedTable, TruthTable, as_fraction
from .perm import (AutStrategy, CosetSide, Permutation, StabilizerChain, lex_inverse_ranks,
                   lex_permutations, list_coset_reps)
from .problems import instance_aut_group
from .sicsaf import ProblemSpec, eval_compressed, eval_compressed_regular, right_transversal

UNDEFINED = -1


class MajorityUndefined(ValueError):
    """No value occurs in more than half of the retrieved answers."""


class Branch(enum.Enum):
    SYMMETRIC = "symmetric"
    QUERY = "query"


@dataclass(frozen=True)
class RecoveryConfig:
    epsilon: Fraction = Fraction(1, 4)
    sample_size_override: int | None = None
    majority_rule: str = "strict"

    def __post_init__(self):
        eps = as_fraction(self.epsilon)
        object.__setattr__(self, "epsilon", eps)
        if not 0 < eps < Fraction(1, 2):
            raise ValueError(f"epsilon must lie in (0, 1/2), got {eps}")
        if self.sample_size_override is not None and self.sample_size_override < 1:
            raise ValueError("sample size override must be positive")
        if self.majority_rule != "strict":
            raise ValueError("only strict majority is supported")


@dataclass(frozen=True)
class RecoveryPlan:
    instance: int
    branch: Branch
    aut_order: int
    value: int | None = None  # symmetric branch
    queries: tuple = ()  # query branch: distinct instances in the orbit


@dataclass(frozen=True)
class RecoveryOutcome:
    value: int
    branch: Branch
    aut_order: int
    queries_made: int
    majority_margin: Fraction | None = None


def recovery_threshold(problem: ProblemSpec, config: RecoveryConfig) -> int:
    """s = ceil(16 p(n) ln|Sigma| / eps^2), unless overridden."""
    if config.sample_size_override is not None:
        return int(config.sample_size_override)
    eps = float(config.epsilon)
    return math.ceil(16 * problem.instance_length * math.log(problem.alphabet_size) / eps ** 2)


def majority(values: Sequence[int]) -> int:
    if len(values) == 0:
        raise ValueError("majority of an empty sequence")
    value, count = Counter(values).most_common(1)[0]
    if 2 * count <= len(values):
        raise MajorityUndefined(f"no strict majority among {len(values)} values")
    return value


def union_bound(entry_count: int, s: int, delta) -> float:
    """Chance that some s-subset of the table is at most (1/2 + eps/2) clean, eps = 1/2 - delta."""
    eps = 0.5 - float(as_fraction(delta))
    if eps <= 0:
        return math.inf
    return entry_count * math.exp(-eps * eps * s / 8)


class _SymmetryCache:
    """Per-symmetry-key automorphism chains, coset lists and orbit images.

    When the problem can produce ``alpha_g(x)`` for all of S_m at once, the
    lexicographically first member of each left coset ``gA`` is the first
    permutation reaching a new image, and that of each right coset ``Ag`` is
    the first ``g`` whose inverse reaches a new image.  This reproduces
    ``list_coset_reps`` exactly without sifting.
    """

    def __init__(self, problem: ProblemSpec, strategy: AutStrategy):
        self.problem = problem
        self.strategy = strategy
        self.chains: dict = {}
        self.images: dict = {}
        self.right: dict = {}
        self.left: dict = {}

    def chain(self, instance: int) -> StabilizerChain:
        key = self.problem.symmetry_key(instance)
        ch = self.chains.get(key)
        if ch is None:
            ch = instance_aut_group(self.problem, instance, self.strategy)
            self.chains[key] = ch
        return ch

    def _images(self, instance: int):
        """Orbit images of the offset-free instance, or None."""
        key = self.problem.symmetry_key(instance)
        if key not in self.images:
            base = instance - self.problem.symmetry_offset(instance)
            imgs = self.problem.all_images(base)
            if imgs is not None:
                distinct = np.unique(imgs).size
                order = self.chain(instance).order()
                if distinct * order != math.factorial(self.problem.group_degree):
                    raise RuntimeError(
                        f"orbit-stabilizer mismatch for {instance}: {distinct} images, |Aut| = {order}")
            self.images[key] = imgs
        return self.images[key]

    def right_transversal(self, instance: int, budget: int) -> list:
        key = self.problem.symmetry_key(instance)
        tr = self.right.get(key)
        if tr is None:
            imgs = self._images(instance)
            if imgs is None:
                tr = right_transversal(self.chain(instance), budget)
            else:
                m = self.problem.group_degree
                inv_imgs = imgs[lex_inverse_ranks_np(m)]
                perms = lex_permutations(m)
                tr = [Permutation._raw(perms[r]) for r in _first_occurrences(inv_imgs)]
                if len(tr) > budget:
                    raise ValueError(f"transversal of size {len(tr)} exceeds budget {budget}")
            self.right[key] = tr
        return tr

    def left_images(self, instance: int, k: int) -> np.ndarray:
        """alpha_g(instance) over the first k left-coset representatives g."""
        key = (self.problem.symmetry_key(instance), k)
        out = self.left.get(key)
        if out is None:
            imgs = self._images(instance)
            if imgs is None:
                ch = self.chain(instance)
                base = instance - self.problem.symmetry_offset(instance)
                act = self.problem.act_instance_raw
                reps = list_coset_reps(ch, ch.degree, k, CosetSide.LEFT)
                out = np.array([act(g.array, base) for g in reps], dtype=np.int64)
            else:
                first = _first_occurrences(imgs)
                if k > first.size:
                    raise ValueError(f"k={k} exceeds the number of cosets {first.size}")
                out = imgs[first[:k]]
            self.left[key] = out
        return out + self.problem.symmetry_offset(instance)


_INV_RANKS: dict = {}


def lex_inverse_ranks_np(m: int) -> np.ndarray:
    if m not in _INV_RANKS:
        _INV_RANKS[m] = np.asarray(lex_inverse_ranks(m), dtype=np.int64)
    return _INV_RANKS[m]


def _first_occurrences(values: np.ndarray) -> np.ndarray:
    _, first = np.unique(values, return_index=True)
    first.sort()
    return first


def plan_instance(problem: ProblemSpec, instance: int, s: int,
                  cache: _SymmetryCache | None = None,
                  strategy: AutStrategy | str = AutStrategy.BACKTRACKING) -> RecoveryPlan:
    if cache is None:
        cache = _SymmetryCache(problem, AutStrategy(strategy))
    chain = cache.chain(instance)
    order = chain.order()
    m_fact = math.factorial(problem.group_degree)
    if order * s >= m_fact:
        transversal = cache.right_transversal(instance, s)
        if problem.semigroup.idempotent:
            value = eval_compressed(problem, instance, chain, transversal=transversal)
        elif problem.regular_orbits:
            value = eval_compressed_regular(problem, instance, chain, transversal=transversal)
        else:
            raise ValueError(
                f"{problem.id}: non-idempotent semigroup without regular orbits "
                "has no exact compressed evaluation")
        return RecoveryPlan(instance, Branch.SYMMETRIC, order, value=value)
    queries = tuple(cache.left_images(instance, s).tolist())
    return RecoveryPlan(instance, Branch.QUERY, order, queries=queries)


def execute_plan(plan: RecoveryPlan, corrupted: CorruptedTable) -> RecoveryOutcome:
    if plan.branch is Branch.SYMMETRIC:
        return RecoveryOutcome(plan.value, plan.branch, plan.aut_order, 0)
    answers = corrupted.query_many(np.asarray(plan.queries, dtype=np.int64)).tolist()
    value = majority(answers)
    margin = Fraction(answers.count(value), len(answers)) - Fraction(1, 2)
    return RecoveryOutcome(value, plan.branch, plan.aut_order, len(answers), margin)


def recover_one(problem: ProblemSpec, instance: int, corrupted: CorruptedTable,
                config: RecoveryConfig, strategy: AutStrategy | str = AutStrategy.BACKTRACKING
                ) -> RecoveryOutcome:
    if corrupted.entry_count != problem.instance_count:
        raise ValueError("corrupted table does not match the problem's instance space")
    plan = plan_instance(problem, instance, recovery_threshold(problem, config), strategy=strategy)
    return execute_plan(plan, corrupted)


@dataclass
class RecoveryReport:
    total: int = 0
    symmetric: int = 0
    query_branch: int = 0
    correct: int = 0
    majority_undefined: int = 0
    queries: int = 0
    symmetric_correct: int = 0
    query_correct: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _plan_chunk(problem, instances, s, strategy):
    cache = _SymmetryCache(problem, strategy)
    return [plan_instance(problem, i, s, cache) for i in instances]


class RecoveryReduction(BaseEstimator):
    """Estimator form of the two-branch recovery.

    ``fit(problem)`` computes the deterministic plan of every instance (or of
    ``instances``); ``predict(corrupted)`` replays the plans against one
    corrupted table and returns the recovered values, with ``UNDEFINED``
    where no strict majority exists.
    """

    def __init__(self, epsilon=Fraction(1, 4), sample_size=None,
                 aut_strategy="backtracking", parallelism=1):
        self.epsilon = epsilon
        self.sample_size = sample_size
        self.aut_strategy = aut_strategy
        self.parallelism = parallelism

    def _config(self) -> RecoveryConfig:
        return RecoveryConfig(as_fraction(self.epsilon), self.sample_size)

    def fit(self, problem: ProblemSpec, instances: Iterable[int] | None = None):
        self.problem_ = problem
        self.config_ = self._config()
        self.s_ = recovery_threshold(problem, self.config_)
        inst = list(range(problem.instance_count) if instances is None else instances)
        strategy = AutStrategy(self.aut_strategy)
        if self.parallelism > 1 and len(inst) > 1:
            from concurrent.futures import ProcessPoolExecutor
            # chunk by symmetry key so each worker's cache stays useful
            chunks: dict = {}
            for i in inst:
                chunks.setdefault(hash(problem.symmetry_key(i)) % self.parallelism, []).append(i)
            with ProcessPoolExecutor(self.parallelism) as ex:
                parts = list(ex.map(_plan_chunk, [problem] * len(chunks), list(chunks.values()),
                                    [self.s_] * len(chunks), [strategy] * len(chunks)))
            by_instance = {p.instance: p for part in parts for p in part}
            plans = [by_instance[i] for i in inst]
        else:
            plans = _plan_chunk(problem, inst, self.s_, strategy)
        self.plans_ = plans
        self.instances_ = np.asarray(inst, dtype=np.int64)
        sym = [p for p in plans if p.branch is Branch.SYMMETRIC]
        qry = [p for p in plans if p.branch is Branch.QUERY]
        pos = {p.instance: k for k, p in enumerate(plans)}
        self.symmetric_pos_ = np.asarray([pos[p.instance] for p in sym], dtype=np.int64)
        self.symmetric_values_ = np.asarray([p.value for p in sym], dtype=np.int64)
        self.query_pos_ = np.asarray([pos[p.instance] for p in qry], dtype=np.int64)
        self.query_matrix_ = (np.asarray([p.queries for p in qry], dtype=np.int64)
                              if qry else np.zeros((0, self.s_), dtype=np.int64))
        self.aut_orders_ = [p.aut_order for p in plans]
        return self

    def predict(self, corrupted: CorruptedTable) -> np.ndarray:
        check_is_fitted(self, "plans_")
        out = np.full(len(self.plans_), UNDEFINED, dtype=np.int64)
        out[self.symmetric_pos_] = self.symmetric_values_
        if self.query_pos_.size:
            answers = corrupted.query_many(self.query_matrix_)
            out[self.query_pos_] = _row_majority(answers)
        return out

    @property
    def branches_(self) -> list:
        check_is_fitted(self, "plans_")
        return [p.branch for p in self.plans_]

    def report(self, corrupted: CorruptedTable, truth: TruthTable) -> RecoveryReport:
        before = corrupted.query_count
        pred = self.predict(corrupted)
        expected = truth.entries[self.instances_]
        ok = pred == expected
        rep = RecoveryReport()
        rep.total = int(pred.size)
        rep.symmetric = int(self.symmetric_pos_.size)
        rep.query_branch = int(self.query_pos_.size)
        rep.correct = int(ok.sum())
        rep.symmetric_correct = int(ok[self.symmetric_pos_].sum())
        rep.query_correct = int(ok[self.query_pos_].sum())
        rep.majority_undefined = int((pred[self.query_pos_] == UNDEFINED).sum())
        rep.queries = corrupted.query_count - before
        return rep


def _row_majority(answers: np.ndarray) -> np.ndarray:
    """Strict majority per row, UNDEFINED where none exists."""
    s = answers.shape[1]
    srt = np.sort(answers, axis=1)
    cand = srt[:, s // 2]  # a strict majority, if any, must be the median
    count = (answers == cand[:, None]).sum(axis=1)
    return np.where(2 * count > s, cand, UNDEFINED)


def recover_all(problem: ProblemSpec, corrupted: CorruptedTable, config: RecoveryConfig,
                truth: TruthTable, parallelism: int = 1,
                strategy: AutStrategy | str = AutStrategy.BACKTRACKING) -> RecoveryReport:
    """Recover every instance and compare against the pristine table."""
    est = RecoveryReduction(config.epsilon, config.sample_size_override,
                            AutStrategy(strategy).value, parallelism)
    est.fit(problem)
    return est.report(corrupted, truth)
