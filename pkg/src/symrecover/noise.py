"""Truth tables and the random-noise operator.

``corrupt`` selects either exactly ``floor(delta * N)`` entries (seeded partial
Fisher-Yates) or each entry independently with probability ``delta`` (keyed
hash, usable without materialising anything), then changes every selected
entry.
"""
from __future__ import annotations

import enum
import io
import struct
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .sicsaf import ProblemSpec, eval_bruteforce

DEFAULT_TABLE_BUDGET = 1 << 24
_M64 = (1 << 64) - 1


class CorruptionModel(enum.Enum):
    EXACT_FRACTION = "exact"
    IID_BERNOULLI = "bernoulli"


class Strategy(enum.Enum):
    FLIP_BOOLEAN = "flip"
    REPLACE_UNIFORM_WRONG = "replace"
    CONSTANT = "constant"


def as_fraction(x) -> Fraction:
    """Exact rational from a Fraction, int, decimal string or float."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _M64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def _splitmix64_np(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.uint64) + np.uint64(0x9E3779B97F4A7C15)
    z = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def derive_seed(master: int, index: int) -> int:
    """Per-trial seed; independent of scheduling."""
    return splitmix64((int(master) ^ int(index)) & _M64)


@dataclass(frozen=True, eq=False)
class TruthTable:
    problem_id: str
    n: int
    entries: np.ndarray  # int64 values indexed by instance
    value_range: tuple = (0, 1)

    @property
    def entry_count(self) -> int:
        return int(self.entries.size)

    def __len__(self):
        return self.entry_count

    def __getitem__(self, i):
        return int(self.entries[i])

    def __eq__(self, other):
        return (isinstance(other, TruthTable) and self.problem_id == other.problem_id
                and self.n == other.n and np.array_equal(self.entries, other.entries))


def build_table(problem: ProblemSpec, parallelism: int = 1,
                budget: int = DEFAULT_TABLE_BUDGET, vectorized: bool = True) -> TruthTable:
    """Exact table of f over the whole instance space.

    Problems with a vectorised evaluator use it; otherwise every entry is
    computed by brute force.  Content does not depend on ``parallelism``.
    """
    N = problem.instance_count
    if N > budget:
        raise ValueError(f"instance space {N} exceeds table budget {budget}; use a lazy oracle")
    fast = getattr(problem, "table_values", None)
    if vectorized and fast is not None:
        values = np.asarray(fast(), dtype=np.int64)
    elif parallelism > 1:
        from concurrent.futures import ProcessPoolExecutor
        chunks = np.array_split(np.arange(N), parallelism)
        with ProcessPoolExecutor(parallelism) as ex:
            parts = ex.map(_eval_chunk, [problem] * len(chunks), [c.tolist() for c in chunks])
            values = np.concatenate([np.asarray(p, dtype=np.int64) for p in parts])
    else:
        values = np.fromiter((eval_bruteforce(problem, i) for i in range(N)),
                             dtype=np.int64, count=N)
    return TruthTable(problem.id, problem.n, values, problem.value_range())


def _eval_chunk(problem, idx):
    return [eval_bruteforce(problem, i) for i in idx]


@dataclass(frozen=True, eq=False)
class CorruptionMask:
    entry_count: int
    delta: Fraction
    seed: int
    model: CorruptionModel
    selected: np.ndarray | None = None  # bool per index; None for lazy Bernoulli

    @property
    def count(self) -> int:
        if self.selected is None:
            raise ValueError("lazy Bernoulli mask has no materialised count")
        return int(self.selected.sum())

    def contains(self, i) -> np.ndarray | bool:
        if self.selected is not None:
            return self.selected[i]
        return bernoulli_selected(self.seed, self.delta, np.asarray(i))

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.selected)

    def __eq__(self, other):
        return (isinstance(other, CorruptionMask) and self.entry_count == other.entry_count
                and self.delta == other.delta and self.seed == other.seed
                and self.model == other.model
                and ((self.selected is None and other.selected is None)
                     or (self.selected is not None and other.selected is not None
                         and np.array_equal(self.selected, other.selected))))


def bernoulli_selected(seed: int, delta: Fraction, index: np.ndarray) -> np.ndarray:
    """Keyed-hash coin per index: selected iff hash(seed, i) < delta * 2**64."""
    threshold = (delta.numerator << 64) // delta.denominator
    key = np.uint64(splitmix64(int(seed) & _M64))
    h = _splitmix64_np(np.asarray(index, dtype=np.uint64) ^ key)
    if threshold >= 1 << 64:
        return np.ones(h.shape, dtype=bool)
    return h < np.uint64(threshold)


def make_mask(entry_count: int, delta, seed: int,
              model: CorruptionModel | str = CorruptionModel.EXACT_FRACTION,
              materialize: bool = True) -> CorruptionMask:
    delta = as_fraction(delta)
    if not 0 <= delta < 1:
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    model = CorruptionModel(model)
    N = int(entry_count)
    if model is CorruptionModel.EXACT_FRACTION:
        count = (delta.numerator * N) // delta.denominator
        rng = np.random.Generator(np.random.PCG64(int(seed) & _M64))
        perm = np.arange(N, dtype=np.int64)
        # partial Fisher-Yates: position i swaps with a uniform j in [i, N)
        js = np.arange(count, dtype=np.int64) + rng.integers(
            0, N - np.arange(count, dtype=np.int64), size=count) if count else []
        for i, j in enumerate(js):
            perm[i], perm[j] = perm[j], perm[i]
        selected = np.zeros(N, dtype=bool)
        selected[perm[:count]] = True
        return CorruptionMask(N, delta, int(seed), model, selected)
    selected = bernoulli_selected(seed, delta, np.arange(N)) if materialize else None
    return CorruptionMask(N, delta, int(seed), model, selected)


def _wrong_values(true: np.ndarray, lo: int, hi: int, seed: int, index: np.ndarray) -> np.ndarray:
    """Uniform value in [lo, hi] different from ``true``, keyed by (seed, index)."""
    span = hi - lo
    if span < 1:
        raise ValueError("cannot change a value in a single-valued range")
    key = np.uint64(splitmix64((int(seed) ^ 0x5DEECE66D) & _M64))
    r = _splitmix64_np(np.asarray(index, dtype=np.uint64) ^ key) % np.uint64(span)
    v = lo + r.astype(np.int64)
    return np.where(v >= true, v + 1, v)


class CorruptedTable:
    """Oracle over a truth table (or lazy evaluator) with corrupted entries changed."""

    def __init__(self, base: TruthTable | Callable[[int], int], mask: CorruptionMask,
                 strategy: Strategy | str = Strategy.FLIP_BOOLEAN, constant: int | None = None,
                 value_range: tuple | None = None):
        self.base = base
        self.mask = mask
        self.strategy = Strategy(strategy)
        self.constant = constant
        if value_range is None:
            value_range = base.value_range if isinstance(base, TruthTable) else (0, 1)
        self.value_range = tuple(value_range)
        if self.strategy is Strategy.CONSTANT and constant is None:
            raise ValueError("constant strategy needs a value")
        if self.strategy is Strategy.FLIP_BOOLEAN and self.value_range != (0, 1):
            raise ValueError("flip strategy only applies to Boolean tables")
        self._lock = threading.Lock()
        self._queries = 0
        self._values = None
        if isinstance(base, TruthTable) and mask.selected is not None:
            if base.entry_count != mask.entry_count:
                raise ValueError("mask and table sizes differ")
            vals = base.entries.copy()
            idx = mask.indices()
            vals[idx] = self._corrupt(base.entries[idx], idx)
            self._values = vals

    @property
    def entry_count(self) -> int:
        return self.mask.entry_count

    @property
    def query_count(self) -> int:
        return self._queries

    @property
    def values(self) -> np.ndarray:
        """Full corrupted contents (does not count as queries)."""
        if self._values is None:
            raise ValueError("lazy table has no materialised contents")
        return self._values

    def _corrupt(self, true: np.ndarray, idx: np.ndarray) -> np.ndarray:
        lo, hi = self.value_range
        if self.strategy is Strategy.FLIP_BOOLEAN:
            return 1 - true
        if self.strategy is Strategy.REPLACE_UNIFORM_WRONG:
            return _wrong_values(true, lo, hi, self.mask.seed, idx)
        const = np.full(true.shape, self.constant, dtype=np.int64)
        # a constant equal to the truth would leave the entry unmodified
        same = const == true
        if same.any():
            const[same] = _wrong_values(true[same], lo, hi, self.mask.seed, idx[same])
        return const

    def _count(self, k: int) -> None:
        with self._lock:
            self._queries += k

    def query(self, i: int) -> int:
        if not 0 <= i < self.entry_count:
            raise IndexError(f"index {i} outside [0, {self.entry_count})")
        self._count(1)
        if self._values is not None:
            return int(self._values[i])
        return int(self.query_many(np.array([i]), _counted=True)[0])

    def query_many(self, idx, _counted: bool = False) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.entry_count):
            raise IndexError("query index out of range")
        if not _counted:
            self._count(int(idx.size))
        if self._values is not None:
            return self._values[idx]
        flat = idx.reshape(-1)
        if isinstance(self.base, TruthTable):
            true = self.base.entries[flat]
        else:
            true = np.fromiter((self.base(int(i)) for i in flat), dtype=np.int64, count=flat.size)
        hit = np.asarray(self.mask.contains(flat), dtype=bool)
        out = true.copy()
        if hit.any():
            out[hit] = self._corrupt(true[hit], flat[hit])
        return out.reshape(idx.shape)

    def reset_counter(self) -> None:
        with self._lock:
            self._queries = 0


def corrupt(table: TruthTable | Callable[[int], int], delta, seed: int,
            model: CorruptionModel | str = CorruptionModel.EXACT_FRACTION,
            strategy: Strategy | str = Strategy.FLIP_BOOLEAN, constant: int | None = None,
            entry_count: int | None = None, value_range: tuple | None = None):
    """Return ``(corrupted_table, mask)``.

    A callable ``table`` is a lazy oracle; it needs ``entry_count`` and the
    Bernoulli model.
    """
    model = CorruptionModel(model)
    if isinstance(table, TruthTable):
        N = table.entry_count
        materialize = True
    else:
        if entry_count is None:
            raise ValueError("lazy oracle needs entry_count")
        if model is CorruptionModel.EXACT_FRACTION:
            raise ValueError("exact-fraction corruption needs a materialised table")
        N = entry_count
        materialize = False
    mask = make_mask(N, delta, seed, model, materialize=materialize)
    return CorruptedTable(table, mask, strategy, constant, value_range), mask


def mask_stats(mask: CorruptionMask, subsets: Iterable[Sequence[int]]) -> list:
    """Exact uncorrupted fraction of each index subset."""
    out = []
    for s in subsets:
        s = np.asarray(list(s) if not isinstance(s, np.ndarray) else s, dtype=np.int64)
        if s.size == 0:
            out.append(Fraction(1))
            continue
        bad = int(np.count_nonzero(mask.contains(s)))
        out.append(Fraction(s.size - bad, s.size))
    return out


class NoiseOperator(BaseEstimator, TransformerMixin):
    """Estimator wrapper: ``fit`` draws the mask, ``transform`` corrupts a table."""

    def __init__(self, delta=0.0, seed=0, model="exact", strategy="flip", constant=None):
        self.delta = delta
        self.seed = seed
        self.model = model
        self.strategy = strategy
        self.constant = constant

    def fit(self, table, y=None):
        N = table.entry_count if isinstance(table, TruthTable) else int(table)
        self.mask_ = make_mask(N, self.delta, self.seed, self.model)
        return self

    def transform(self, table: TruthTable) -> CorruptedTable:
        check_is_fitted(self, "mask_")
        return CorruptedTable(table, self.mask_, self.strategy, self.constant)


# -- binary files ------------------------------------------------------------

TABLE_MAGIC = b"STB1"
MASK_MAGIC = b"SMK1"
FORMAT_VERSION = 1
_MODEL_CODES = {CorruptionModel.EXACT_FRACTION: 0, CorruptionModel.IID_BERNOULLI: 1}


def _pack_bits(values: np.ndarray, width: int) -> bytes:
    """Entries packed least-significant-bit first."""
    values = np.asarray(values, dtype=np.uint64)
    if width == 1:
        return np.packbits(values.astype(np.uint8), bitorder="little").tobytes()
    bits = ((values[:, None] >> np.arange(width, dtype=np.uint64)) & np.uint64(1)).astype(np.uint8)
    return np.packbits(bits.reshape(-1), bitorder="little").tobytes()


def _unpack_bits(data: bytes, count: int, width: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")[: count * width]
    if width == 1:
        return bits.astype(np.int64)
    bits = bits.reshape(count, width).astype(np.uint64)
    return (bits << np.arange(width, dtype=np.uint64)).sum(axis=1).astype(np.int64)


def _header(magic: bytes, problem_id: str, n: int, count: int, width: int) -> bytes:
    pid = problem_id.encode("utf-8")
    return (magic + struct.pack("<H", FORMAT_VERSION) + struct.pack("<H", len(pid)) + pid
            + struct.pack("<QQB", n, count, width))


def _read_header(buf: io.BufferedIOBase, magic: bytes):
    if buf.read(4) != magic:
        raise ValueError(f"bad magic, expected {magic!r}")
    (version,) = struct.unpack("<H", buf.read(2))
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported format version {version}")
    (plen,) = struct.unpack("<H", buf.read(2))
    pid = buf.read(plen).decode("utf-8")
    n, count, width = struct.unpack("<QQB", buf.read(17))
    return pid, n, count, width


def write_table(table: TruthTable, path) -> None:
    lo, hi = table.value_range
    if lo != 0 or table.entries.min(initial=0) < 0:
        raise ValueError("only non-negative tables can be serialised")
    width = max(1, int(hi).bit_length())
    with open(path, "wb") as fh:
        fh.write(_header(TABLE_MAGIC, table.problem_id, table.n, table.entry_count, width))
        fh.write(_pack_bits(table.entries, width))


def read_table(path) -> TruthTable:
    with open(path, "rb") as fh:
        pid, n, count, width = _read_header(fh, TABLE_MAGIC)
        entries = _unpack_bits(fh.read(), count, width)
    return TruthTable(pid, n, entries, (0, (1 << width) - 1 if width > 1 else 1))


def write_mask(mask: CorruptionMask, path, problem_id: str = "", n: int = 0) -> None:
    if mask.selected is None:
        raise ValueError("lazy masks are reproduced from their parameters, not stored")
    with open(path, "wb") as fh:
        fh.write(_header(MASK_MAGIC, problem_id, n, mask.entry_count, 1))
        fh.write(struct.pack("<QBqq", int(mask.seed) & _M64, _MODEL_CODES[mask.model],
                             mask.delta.numerator, mask.delta.denominator))
        fh.write(_pack_bits(mask.selected, 1))


def read_mask(path) -> CorruptionMask:
    with open(path, "rb") as fh:
        _pid, _n, count, _width = _read_header(fh, MASK_MAGIC)
        seed, code, num, den = struct.unpack("<QBqq", fh.read(25))
        selected = _unpack_bits(fh.read(), count, 1).astype(bool)
    model = {v: k for k, v in _MODEL_CODES.items()}[code]
    return CorruptionMask(count, Fraction(num, den), seed, model, selected)
