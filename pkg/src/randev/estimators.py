"""One-pass, mergeable measurements of a bit stream.

Everything a stream's randomness quality is judged by is derived from
two small accumulators:

* ``PairCounts``     -- total bits, one-bits, and the four adjacent-pair
                        counts; enough for bias, the empirical joint
                        distribution, mutual information, conditional
                        entropy, and the plug-in randomness deviation.
* ``LagAccumulator`` -- the lag-k product and window sums behind the
                        serial autocorrelation coefficient.

Both are exact integer accumulators: any partition of a stream into
chunks, accumulated separately and merged in order, reproduces the
serial result field for field, so parallel analysis is bit-identical
to sequential analysis.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from randev.bitstream import BitSequence
from randev.model import binary_entropy, deviation_sigma, n_max

__all__ = [
    "EstimatorError",
    "EmptyInputError",
    "InsufficientDataError",
    "DegenerateSequenceError",
    "PairCounts",
    "LagAccumulator",
    "LagEstimate",
    "AnalysisReport",
    "accumulate",
    "merge",
    "bias_estimate",
    "autocorr",
    "mutual_information_lag1",
    "cond_entropy_lag1",
    "marginal_entropy_lag1",
    "deviation_plugin",
    "deviation_quadratic",
    "analyze",
    "analyze_parallel",
]

_LN2 = math.log(2.0)


class EstimatorError(ValueError):
    """Base class for estimator input problems."""


class EmptyInputError(EstimatorError):
    """No bits were provided where at least one is required."""


class InsufficientDataError(EstimatorError):
    """Too few bits for the requested quantity."""


class DegenerateSequenceError(EstimatorError):
    """The sequence is constant, so normalized correlations are undefined."""


@dataclass(frozen=True)
class PairCounts:
    """Counts of bits, one-bits, and adjacent (previous, next) pairs.

    ``first_bit`` and ``last_bit`` carry the stream boundary so that two
    PairCounts from consecutive stream pieces merge exactly: the pair
    that straddles the cut is reconstructed from them.
    """

    n: int = 0
    ones: int = 0
    c00: int = 0
    c01: int = 0
    c10: int = 0
    c11: int = 0
    first_bit: int | None = None
    last_bit: int | None = None

    @property
    def pair_total(self) -> int:
        return self.c00 + self.c01 + self.c10 + self.c11


def _cells_of_array(arr: np.ndarray) -> tuple[int, int, int, int]:
    # one count_nonzero plus sums: c11 directly, the rest by difference
    if arr.size < 2:
        return 0, 0, 0, 0
    head = arr[:-1]
    tail = arr[1:]
    c11 = int(np.count_nonzero(head & tail))
    head_ones = int(np.count_nonzero(head))
    tail_ones = int(np.count_nonzero(tail))
    c10 = head_ones - c11
    c01 = tail_ones - c11
    c00 = (arr.size - 1) - c01 - c10 - c11
    return c00, c01, c10, c11


def _accumulate_array(counts: PairCounts, arr: np.ndarray) -> PairCounts:
    m = int(arr.size)
    if m == 0:
        return counts
    ones = int(np.count_nonzero(arr))
    cells = list(_cells_of_array(arr))
    first = int(arr[0])
    last = int(arr[-1])
    if counts.n == 0:
        return PairCounts(m, ones, *cells, first, last)
    cells[2 * counts.last_bit + first] += 1
    return PairCounts(
        counts.n + m,
        counts.ones + ones,
        counts.c00 + cells[0],
        counts.c01 + cells[1],
        counts.c10 + cells[2],
        counts.c11 + cells[3],
        counts.first_bit,
        last,
    )


def accumulate(counts: PairCounts, seq: BitSequence) -> PairCounts:
    """Fold a sequence into the counts, including the pair across the
    boundary between previously accumulated data and seq."""
    return _accumulate_array(counts, seq.to_array())


def _merge_counts(a: PairCounts, b: PairCounts) -> PairCounts:
    if a.n == 0:
        return b
    if b.n == 0:
        return a
    cells = [a.c00 + b.c00, a.c01 + b.c01, a.c10 + b.c10, a.c11 + b.c11]
    cells[2 * a.last_bit + b.first_bit] += 1
    return PairCounts(
        a.n + b.n, a.ones + b.ones, *cells, a.first_bit, b.last_bit
    )


class LagAccumulator:
    """Streaming sums behind the lag-k serial autocorrelation.

    Tracks sum_prod = sum of x[i]*x[i+k], the one-counts of the head
    window x[0 .. n-k) and tail window x[k .. n), the total one-count,
    and the first/last min(k, n) bits so that accumulators over
    consecutive stream pieces merge exactly.
    """

    __slots__ = ("k", "n", "ones", "sum_prod", "sum_head", "sum_tail",
                 "_head", "_ring")

    def __init__(self, k: int):
        if k < 1:
            raise EstimatorError(f"lag k={k} must be at least 1")
        self.k = k
        self.n = 0
        self.ones = 0
        self.sum_prod = 0
        self.sum_head = 0
        self.sum_tail = 0
        self._head = np.zeros(0, dtype=np.uint8)
        self._ring = np.zeros(0, dtype=np.uint8)

    @property
    def ring(self) -> np.ndarray:
        """Last min(k, n) bits seen."""
        return self._ring.copy()

    @property
    def head(self) -> np.ndarray:
        """First min(k, n) bits seen."""
        return self._head.copy()

    def add(self, seq: BitSequence) -> None:
        self.add_array(seq.to_array())

    def add_array(self, chunk: np.ndarray) -> None:
        m = int(chunk.size)
        if m == 0:
            return
        k = self.k
        ext = np.concatenate((self._ring, chunk)) if self._ring.size else chunk
        if ext.size > k:
            # every lag-k pair inside ext has its tail in the new chunk
            self.sum_prod += int(np.count_nonzero(ext[:-k] & ext[k:]))
            self.sum_head += int(np.count_nonzero(ext[: ext.size - k]))
            self.sum_tail += int(np.count_nonzero(ext[k:]))
        self.ones += int(np.count_nonzero(chunk))
        n_new = self.n + m
        if self._head.size < k:
            need = min(k, n_new) - self._head.size
            self._head = np.concatenate((self._head, chunk[:need]))
        self._ring = ext[ext.size - min(k, n_new):].copy()
        self.n = n_new

    def __eq__(self, other) -> bool:
        if not isinstance(other, LagAccumulator):
            return NotImplemented
        return (
            self.k == other.k
            and self.n == other.n
            and self.ones == other.ones
            and self.sum_prod == other.sum_prod
            and self.sum_head == other.sum_head
            and self.sum_tail == other.sum_tail
            and np.array_equal(self._head, other._head)
            and np.array_equal(self._ring, other._ring)
        )

    def __repr__(self) -> str:
        return (
            f"LagAccumulator(k={self.k}, n={self.n}, ones={self.ones}, "
            f"sum_prod={self.sum_prod}, sum_head={self.sum_head}, "
            f"sum_tail={self.sum_tail})"
        )


def _merge_lags(a: LagAccumulator, b: LagAccumulator) -> LagAccumulator:
    if a.k != b.k:
        raise EstimatorError(f"lag mismatch: {a.k} vs {b.k}")
    k = a.k
    out = LagAccumulator(k)
    out.n = a.n + b.n
    out.ones = a.ones + b.ones
    # pairs whose head is in a and tail in b
    ext = np.concatenate((a._ring, b._head))
    lim = min(a._ring.size, max(0, ext.size - k))
    cross = int(np.count_nonzero(ext[:lim] & ext[k:k + lim])) if lim else 0
    out.sum_prod = a.sum_prod + b.sum_prod + cross
    head = np.concatenate((a._head, b._head))[: min(k, out.n)].copy()
    ring = np.concatenate((a._ring, b._ring))[-min(k, out.n):].copy() \
        if out.n else np.zeros(0, dtype=np.uint8)
    out._head = head
    out._ring = ring
    out.sum_head = out.ones - int(np.count_nonzero(ring))
    out.sum_tail = out.ones - int(np.count_nonzero(head))
    return out


def merge(a, b):
    """Combine two accumulators over consecutive stream pieces.

    Accepts two PairCounts or two LagAccumulators; the result is field
    for field what serial accumulation over the joined stream produces.
    """
    if isinstance(a, PairCounts) and isinstance(b, PairCounts):
        return _merge_counts(a, b)
    if isinstance(a, LagAccumulator) and isinstance(b, LagAccumulator):
        return _merge_lags(a, b)
    raise TypeError(
        f"cannot merge {type(a).__name__} with {type(b).__name__}"
    )


def bias_estimate(counts: PairCounts) -> tuple[float, float]:
    """Empirical bias 2*ones/n - 1 and its uncertainty 1/sqrt(n)."""
    if counts.n == 0:
        raise EmptyInputError("cannot estimate bias of an empty stream")
    return 2.0 * counts.ones / counts.n - 1.0, 1.0 / math.sqrt(counts.n)


def _acf_from_sums(sum_prod: int, sum_head: int, sum_tail: int,
                   ones: int, n: int, k: int) -> tuple[float, float]:
    if n < k + 2:
        raise InsufficientDataError(
            f"lag-{k} autocorrelation needs at least {k + 2} bits, got {n}"
        )
    mean = ones / n
    terms = n - k
    num = sum_prod - mean * (sum_head + sum_tail) + terms * mean * mean
    den = sum_head * (1.0 - 2.0 * mean) + terms * mean * mean
    if den == 0.0:
        raise DegenerateSequenceError(
            "constant sequence: autocorrelation is undefined"
        )
    return num / den, 1.0 / math.sqrt(n)


def autocorr(data, k: int | None = None) -> tuple[float, float]:
    """Lag-k serial autocorrelation coefficient and its 1/sqrt(n) sigma.

    ``data`` is a BitSequence (k defaults to 1) or a LagAccumulator
    (k defaults to the accumulator's lag).  The numerator and
    denominator sums use the full-sequence mean and run over the first
    n - k positions; the streaming path reconstructs the identical
    value from the accumulator's integer fields.
    """
    if isinstance(data, LagAccumulator):
        if k is not None and k != data.k:
            raise EstimatorError(
                f"requested lag {k} but accumulator holds lag {data.k}"
            )
        return _acf_from_sums(data.sum_prod, data.sum_head, data.sum_tail,
                              data.ones, data.n, data.k)
    if k is None:
        k = 1
    if k < 1:
        raise EstimatorError(f"lag k={k} must be at least 1")
    n = data.nbits
    if n < k + 2:
        raise InsufficientDataError(
            f"lag-{k} autocorrelation needs at least {k + 2} bits, got {n}"
        )
    arr = data.to_array()
    ones = int(np.count_nonzero(arr))
    sum_prod = int(np.count_nonzero(arr[:-k] & arr[k:]))
    sum_head = ones - int(np.count_nonzero(arr[n - k:]))
    sum_tail = ones - int(np.count_nonzero(arr[:k]))
    return _acf_from_sums(sum_prod, sum_head, sum_tail, ones, n, k)


def _require_pairs(counts: PairCounts) -> int:
    total = counts.pair_total
    if counts.n < 2 or total < 1:
        raise InsufficientDataError(
            "pair statistics need at least 2 bits"
        )
    return total


def mutual_information_lag1(counts: PairCounts) -> float:
    """Plug-in mutual information in bits between adjacent bits.

    Cell-wise sum over the empirical joint distribution against the
    product of its own marginals; integer count ratios keep the
    product-distribution case at exactly zero.
    """
    total = _require_pairs(counts)
    row = (counts.c00 + counts.c01, counts.c10 + counts.c11)
    col = (counts.c00 + counts.c10, counts.c01 + counts.c11)
    mi = 0.0
    for cell, r, c in (
        (counts.c00, 0, 0),
        (counts.c01, 0, 1),
        (counts.c10, 1, 0),
        (counts.c11, 1, 1),
    ):
        if cell:
            mi += (cell / total) * math.log2(cell * total / (row[r] * col[c]))
    return 0.0 if mi < 0.0 else mi


def cond_entropy_lag1(counts: PairCounts) -> float:
    """Plug-in conditional entropy in bits of the next bit given the
    previous one: row-weighted binary entropies of the transition table."""
    total = _require_pairs(counts)
    ce = 0.0
    for c_to0, c_to1 in ((counts.c00, counts.c01), (counts.c10, counts.c11)):
        row_n = c_to0 + c_to1
        if row_n:
            ce += (row_n / total) * binary_entropy(c_to1 / row_n)
    return ce


def marginal_entropy_lag1(counts: PairCounts) -> float:
    """Plug-in entropy in bits of the second element of an adjacent pair."""
    total = _require_pairs(counts)
    return binary_entropy((counts.c01 + counts.c11) / total)


def deviation_plugin(counts: PairCounts) -> float:
    """Empirical randomness deviation: 1 minus the plug-in conditional
    entropy, clamped to [0, 1]."""
    d = 1.0 - cond_entropy_lag1(counts)
    if d < 0.0:
        return 0.0
    return 1.0 if d > 1.0 else d


def deviation_quadratic(bias: float, a1: float) -> float:
    """Quadratic deviation form (a1**2 + bias**2) / (2 ln 2) applied to
    measured values."""
    return (a1 * a1 + bias * bias) / (2.0 * _LN2)


@dataclass(frozen=True)
class LagEstimate:
    lag: int
    value: float
    sigma: float


@dataclass(frozen=True)
class AnalysisReport:
    """Every measured quantity for one stream.

    ``deviation_plugin`` comes from the conditional-entropy route;
    ``deviation_markov`` is the quadratic form evaluated at the measured
    bias and lag-1 autocorrelation; ``n_max`` is math.inf when the
    plug-in deviation is exactly zero.
    """

    n_bits: int
    bias_hat: float
    bias_sigma: float
    autocorr: tuple[LagEstimate, ...]
    mi_lag1_hat: float
    cond_entropy_hat: float
    deviation_plugin: float
    deviation_markov: float
    deviation_sigma: float
    n_max: float

    def to_json_dict(self) -> dict:
        return {
            "n_bits": self.n_bits,
            "bias": {"value": self.bias_hat, "sigma": self.bias_sigma},
            "autocorr": [
                {"lag": e.lag, "value": e.value, "sigma": e.sigma}
                for e in self.autocorr
            ],
            "mi_lag1": self.mi_lag1_hat,
            "cond_entropy": self.cond_entropy_hat,
            "deviation_plugin": self.deviation_plugin,
            "deviation_markov": self.deviation_markov,
            "deviation_sigma": self.deviation_sigma,
            "n_max": "unbounded" if math.isinf(self.n_max) else self.n_max,
        }


def _assemble_report(counts: PairCounts,
                     accs: list[LagAccumulator]) -> AnalysisReport:
    bias_hat, bias_sigma = bias_estimate(counts)
    lags = tuple(
        LagEstimate(acc.k, *autocorr(acc)) for acc in accs
    )
    dev = deviation_plugin(counts)
    return AnalysisReport(
        n_bits=counts.n,
        bias_hat=bias_hat,
        bias_sigma=bias_sigma,
        autocorr=lags,
        mi_lag1_hat=mutual_information_lag1(counts),
        cond_entropy_hat=cond_entropy_lag1(counts),
        deviation_plugin=dev,
        deviation_markov=deviation_quadratic(bias_hat, lags[0].value),
        deviation_sigma=deviation_sigma(dev, counts.n),
        n_max=n_max(dev),
    )


def analyze(data, max_lag: int = 8) -> AnalysisReport:
    """Measure a stream: bias, autocorrelation for lags 1..max_lag,
    adjacent-pair information quantities, deviation, and length bound.

    ``data`` is one BitSequence or an iterable of BitSequence chunks in
    stream order; chunked input produces the identical report.
    """
    if max_lag < 1:
        raise EstimatorError(f"max_lag={max_lag} must be at least 1")
    chunks = [data] if isinstance(data, BitSequence) else data
    counts = PairCounts()
    accs = [LagAccumulator(k) for k in range(1, max_lag + 1)]
    for seq in chunks:
        arr = seq.to_array()
        counts = _accumulate_array(counts, arr)
        for acc in accs:
            acc.add_array(arr)
    if counts.n < max_lag + 2:
        raise InsufficientDataError(
            f"analysis up to lag {max_lag} needs at least {max_lag + 2} "
            f"bits, got {counts.n}"
        )
    return _assemble_report(counts, accs)


def _byte_aligned_chunks(seq: BitSequence, n_chunks: int) -> list[BitSequence]:
    data = seq.data
    nbits = seq.nbits
    n_chunks = max(1, min(n_chunks, max(1, len(data))))
    step = -(-len(data) // n_chunks)
    out = []
    for start in range(0, len(data), step):
        piece = data[start:start + step]
        bits = min(nbits - 8 * start, 8 * len(piece))
        out.append(BitSequence(piece, bits))
    return out


def analyze_parallel(seq: BitSequence, max_lag: int = 8,
                     workers: int | None = None) -> AnalysisReport:
    """analyze() over worker threads via the merge contract.

    The stream is split on byte boundaries, each piece is accumulated
    independently, and the ordered merge reproduces the serial integer
    state exactly, so the report equals the sequential one field for
    field.
    """
    if max_lag < 1:
        raise EstimatorError(f"max_lag={max_lag} must be at least 1")
    if workers is None:
        workers = os.cpu_count() or 1
    pieces = _byte_aligned_chunks(seq, workers)

    def measure(piece: BitSequence):
        arr = piece.to_array()
        counts = _accumulate_array(PairCounts(), arr)
        accs = [LagAccumulator(k) for k in range(1, max_lag + 1)]
        for acc in accs:
            acc.add_array(arr)
        return counts, accs

    if len(pieces) == 1:
        parts = [measure(pieces[0])]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(measure, pieces))
    counts, accs = parts[0]
    for more_counts, more_accs in parts[1:]:
        counts = _merge_counts(counts, more_counts)
        accs = [_merge_lags(a, b) for a, b in zip(accs, more_accs)]
    if counts.n < max_lag + 2:
        raise InsufficientDataError(
            f"analysis up to lag {max_lag} needs at least {max_lag + 2} "
            f"bits, got {counts.n}"
        )
    return _assemble_report(counts, accs)
