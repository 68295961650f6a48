"""Multi-step transition probability matrices for uncertain graphs.

The k-step matrix cannot be obtained by powering the one-step matrix:
entry (u, v) is the sum of walk probabilities over all length-k walks
from u to v, and walk probabilities do not factorize step by step when a
walk revisits a vertex.  The pipeline here enumerates walks incrementally,
spilling sorted (walk, probability, last-vertex factor) records to disk
chunks when they outgrow memory, merging the chunks, and aggregating
records by (start, end) into each matrix.
"""

from __future__ import annotations

import heapq
import math
import os
import struct
import tempfile
import time
from pathlib import Path

import numpy as np

from .graph import UncertainGraph
from .walks import Walk, extend_walk_probability, girth

__all__ = [
    "TransMatrix",
    "MatrixStore",
    "WalkBudgetError",
    "one_step_row",
    "one_step_matrix",
    "trans_pr",
    "read_column",
    "DEFAULT_K_MAX",
    "DEFAULT_BUDGET_BYTES",
    "DEFAULT_CHUNK_BYTES",
]

DEFAULT_K_MAX = 6
DEFAULT_BUDGET_BYTES = 256 * 1024 * 1024
DEFAULT_CHUNK_BYTES = 256 * 1024 * 1024

_MATRIX_MAGIC = b"UTMX"
_WALK_MAGIC = b"UWLK"
_FORMAT_VERSION = 1
_MATRIX_HEADER = struct.Struct("<4sIIQ")  # magic, version, k, vertex_count
_WALK_HEADER = struct.Struct("<4sIIQ")  # magic, version, k, record count
_TAIL = struct.Struct("<dd")  # probability, last-vertex factor


class WalkBudgetError(RuntimeError):
    """Walk-file volume exceeded the byte budget while building step ``step``."""

    def __init__(self, step: int, budget_bytes: int):
        self.step = step
        self.budget_bytes = budget_bytes
        super().__init__(
            f"walk file for step {step} exceeds the byte budget "
            f"({budget_bytes} bytes); walk counts grow exponentially with k"
        )


class TransMatrix:
    """Dense k-step transition matrix with row and column views."""

    __slots__ = ("k", "values")

    def __init__(self, k: int, values: np.ndarray):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError("transition matrix must be square")
        if k < 0:
            raise ValueError("step count must be >= 0")
        if values.size:
            if values.min() < -1e-12 or values.max() > 1.0 + 1e-9:
                raise ValueError("transition probabilities must lie in [0, 1]")
            if values.sum(axis=1).max() > 1.0 + 1e-9:
                raise ValueError("a transition row sums to more than 1")
        self.k = int(k)
        self.values = values

    @property
    def vertex_count(self) -> int:
        return self.values.shape[0]

    def row(self, u: int) -> np.ndarray:
        return self.values[u]

    def column(self, v: int) -> np.ndarray:
        return self.values[:, v]

    def __repr__(self) -> str:
        return f"TransMatrix(k={self.k}, n={self.vertex_count})"


# ---------------------------------------------------------------------------
# one-step matrix

_leggauss_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_nodes(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped onto [0, 1]."""
    if m not in _leggauss_cache:
        t, w = np.polynomial.legendre.leggauss(m)
        _leggauss_cache[m] = ((t + 1.0) / 2.0, w / 2.0)
    return _leggauss_cache[m]


def one_step_row(g: UncertainGraph, u: int) -> dict[int, float]:
    """One row of the one-step matrix as a sparse target -> probability map.

    Entry (u, v) is the expectation over worlds containing arc (u, v) of
    arc probability times 1/out-degree.  Writing that expectation as the
    integral over t in [0, 1] of the product of (1 - p + p*t) across u's
    other out-arcs makes the integrand a polynomial of degree < d, which a
    d/2-point Gauss-Legendre rule integrates exactly.  This matches
    :func:`~usimrank.walks.vertex_factor` with a single forced arc to
    within rounding, at O(d^2) per vertex instead of per arc.
    """
    out = g.out_dict(u)
    d = len(out)
    if d == 0:
        return {}
    targets = list(out)
    probs = np.array([out[v] for v in targets])
    x, w = _gauss_nodes((d + 1) // 2)
    factors = 1.0 - probs[None, :] * (1.0 - x[:, None])  # (nodes, d)
    full = factors.prod(axis=1)
    integrals = (w[:, None] * (full[:, None] / factors)).sum(axis=0)
    entries = probs * integrals
    return dict(zip(targets, entries.tolist()))


def one_step_matrix(g: UncertainGraph) -> TransMatrix:
    """Dense one-step transition matrix; sparse with one entry per arc."""
    n = g.vertex_count
    values = np.zeros((n, n))
    for u in range(n):
        for v, p in one_step_row(g, u).items():
            values[u, v] = p
    return TransMatrix(1, values)


# ---------------------------------------------------------------------------
# binary record codec

def _varint_size(x: int) -> int:
    return max(1, (x.bit_length() + 6) // 7)


def _zigzag(x: int) -> int:
    return (x << 1) if x >= 0 else ((-x << 1) - 1)


def _unzigzag(u: int) -> int:
    return (u >> 1) if not (u & 1) else -((u + 1) >> 1)


def _write_varint(buf: bytearray, x: int) -> None:
    while True:
        b = x & 0x7F
        x >>= 7
        if x:
            buf.append(b | 0x80)
        else:
            buf.append(b)
            return


def _read_varint(fh) -> int:
    shift = 0
    value = 0
    while True:
        byte = fh.read(1)
        if not byte:
            raise EOFError("truncated walk record")
        b = byte[0]
        value |= (b & 0x7F) << shift
        if not (b & 0x80):
            return value
        shift += 7


def record_size(walk: Walk) -> int:
    """Encoded byte size of one walk record."""
    size = _varint_size(len(walk) - 1) + _varint_size(walk[0])
    for i in range(1, len(walk)):
        size += _varint_size(_zigzag(walk[i] - walk[i - 1]))
    return size + _TAIL.size


def encode_record(walk: Walk, prob: float, factor: float) -> bytes:
    """Record layout: varint arc count, varint start id, zigzag-varint
    deltas for the remaining ids, then two little-endian doubles."""
    buf = bytearray()
    _write_varint(buf, len(walk) - 1)
    _write_varint(buf, walk[0])
    for i in range(1, len(walk)):
        _write_varint(buf, _zigzag(walk[i] - walk[i - 1]))
    buf += _TAIL.pack(prob, factor)
    return bytes(buf)


def read_record(fh) -> tuple[Walk, float, float]:
    arc_count = _read_varint(fh)
    vertices = [_read_varint(fh)]
    for _ in range(arc_count):
        vertices.append(vertices[-1] + _unzigzag(_read_varint(fh)))
    tail = fh.read(_TAIL.size)
    if len(tail) != _TAIL.size:
        raise EOFError("truncated walk record")
    prob, factor = _TAIL.unpack(tail)
    return tuple(vertices), prob, factor


def _record_key(item: tuple[Walk, float, float]):
    walk = item[0]
    return (walk[0], walk[-1], walk)


def write_walk_file(path, step: int, records) -> int:
    """Write records to a versioned walk file; returns the record count.

    Works on a plain iterable: the count in the header is patched in after
    the records have been streamed out.
    """
    count = 0
    with open(path, "wb") as fh:
        fh.write(_WALK_HEADER.pack(_WALK_MAGIC, _FORMAT_VERSION, step, 0))
        for walk, prob, factor in records:
            fh.write(encode_record(walk, prob, factor))
            count += 1
        fh.seek(0)
        fh.write(_WALK_HEADER.pack(_WALK_MAGIC, _FORMAT_VERSION, step, count))
    return count


def iter_walk_file(path):
    """Yield (walk, probability, factor) records from a walk file."""
    with open(path, "rb") as fh:
        header = fh.read(_WALK_HEADER.size)
        magic, version, _step, count = _WALK_HEADER.unpack(header)
        if magic != _WALK_MAGIC:
            raise ValueError(f"{path}: not a walk file")
        if version != _FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported walk file version {version}")
        for _ in range(count):
            yield read_record(fh)


class _RecordSink:
    """Collects walk records, spilling sorted chunks to disk past a threshold.

    Small workloads never touch disk; large ones become sorted chunk files
    merged lazily with :func:`heapq.merge`.  The byte budget covers the
    total encoded volume of one step's records.
    """

    def __init__(self, step: int, tmpdir, chunk_bytes: int, budget_bytes: int):
        self.step = step
        self.tmpdir = tmpdir
        self.chunk_bytes = chunk_bytes
        self.budget_bytes = budget_bytes
        self.buffer: list[tuple[Walk, float, float]] = []
        self.buffer_bytes = 0
        self.total_bytes = 0
        self.chunk_paths: list[Path] = []

    def add(self, walk: Walk, prob: float, factor: float) -> None:
        size = record_size(walk)
        self.total_bytes += size
        if self.total_bytes > self.budget_bytes:
            raise WalkBudgetError(self.step, self.budget_bytes)
        self.buffer.append((walk, prob, factor))
        self.buffer_bytes += size
        if self.buffer_bytes > self.chunk_bytes:
            self._spill()

    def _spill(self) -> None:
        self.buffer.sort(key=_record_key)
        path = Path(self.tmpdir) / f"chunk_{self.step}_{len(self.chunk_paths)}.wlk"
        write_walk_file(path, self.step, self.buffer)
        self.chunk_paths.append(path)
        self.buffer = []
        self.buffer_bytes = 0

    def sorted_records(self):
        """All records in (start, end, walk) order; consumes the sink."""
        if not self.chunk_paths:
            self.buffer.sort(key=_record_key)
            return self.buffer
        if self.buffer:
            self._spill()
        streams = [iter_walk_file(p) for p in self.chunk_paths]
        return heapq.merge(*streams, key=_record_key)


# ---------------------------------------------------------------------------
# the multi-step pipeline

class MatrixStore:
    """Holds transition matrices for steps 1..K, in memory or on disk.

    With a directory, each matrix lives in a versioned binary file holding
    the columns consecutively (header: magic, version, k, vertex count;
    then vertex-order columns of little-endian doubles), so one column is
    one contiguous read.  Loaded matrices are cached; stores are safe for
    concurrent readers once materialized.
    """

    def __init__(self, directory=None):
        self.directory = Path(directory) if directory is not None else None
        if self.directory is not None:
            self.directory.mkdir(parents=True, exist_ok=True)
        self._cache: dict[int, TransMatrix] = {}

    def matrix_path(self, k: int) -> Path:
        if self.directory is None:
            raise ValueError("store is memory-backed")
        return self.directory / f"trans_k{k}.mat"

    def walk_path(self, k: int) -> Path:
        if self.directory is None:
            raise ValueError("store is memory-backed")
        return self.directory / f"walks_k{k}.wlk"

    def steps(self) -> list[int]:
        ks = set(self._cache)
        if self.directory is not None:
            for path in self.directory.glob("trans_k*.mat"):
                try:
                    ks.add(int(path.stem.removeprefix("trans_k")))
                except ValueError:
                    continue
        return sorted(ks)

    def add(self, matrix: TransMatrix) -> None:
        self._cache[matrix.k] = matrix
        if self.directory is not None:
            save_matrix(self.matrix_path(matrix.k), matrix)

    def has(self, k: int) -> bool:
        return k in self._cache or (
            self.directory is not None and self.matrix_path(k).exists()
        )

    def get(self, k: int) -> TransMatrix:
        if k not in self._cache:
            if self.directory is None or not self.matrix_path(k).exists():
                raise KeyError(f"step {k} is not materialized")
            self._cache[k] = load_matrix(self.matrix_path(k))
        return self._cache[k]

    def row(self, k: int, u: int) -> np.ndarray:
        return self.get(k).row(u)

    def column(self, k: int, v: int) -> np.ndarray:
        if k in self._cache:
            return self._cache[k].column(v)
        if self.directory is None or not self.matrix_path(k).exists():
            raise KeyError(f"step {k} is not materialized")
        return read_column_file(self.matrix_path(k), v)


def save_matrix(path, matrix: TransMatrix) -> None:
    with open(path, "wb") as fh:
        fh.write(
            _MATRIX_HEADER.pack(
                _MATRIX_MAGIC, _FORMAT_VERSION, matrix.k, matrix.vertex_count
            )
        )
        fh.write(matrix.values.astype("<f8", copy=False).tobytes(order="F"))


def load_matrix(path) -> TransMatrix:
    with open(path, "rb") as fh:
        magic, version, k, n = _MATRIX_HEADER.unpack(fh.read(_MATRIX_HEADER.size))
        if magic != _MATRIX_MAGIC:
            raise ValueError(f"{path}: not a transition matrix file")
        if version != _FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported matrix file version {version}")
        values = np.fromfile(fh, dtype="<f8", count=n * n).reshape((n, n), order="F")
    return TransMatrix(k, values)


def read_column_file(path, v: int) -> np.ndarray:
    """One column straight from a matrix file: a single contiguous read."""
    with open(path, "rb") as fh:
        magic, version, _k, n = _MATRIX_HEADER.unpack(fh.read(_MATRIX_HEADER.size))
        if magic != _MATRIX_MAGIC:
            raise ValueError(f"{path}: not a transition matrix file")
        if version != _FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported matrix file version {version}")
        if not (0 <= v < n):
            raise ValueError(f"column {v} out of range")
        fh.seek(_MATRIX_HEADER.size + v * n * 8)
        return np.fromfile(fh, dtype="<f8", count=n)


def read_column(store: MatrixStore, k: int, v: int) -> np.ndarray:
    """Column v of the k-step matrix (all sources for a fixed target)."""
    return store.column(k, v)


def _seed_records(g: UncertainGraph, w1: TransMatrix):
    """Length-1 walk records in canonical order.

    The stored factor is the factor of the walk's last vertex: 1 for a
    plain arc (the target has no departures yet), and the arc's one-step
    probability for a self-loop (start and last coincide).
    """
    records = []
    for u in range(g.vertex_count):
        for v in sorted(g.out_dict(u)):
            p = float(w1.values[u, v])
            records.append(((u, v), p, p if u == v else 1.0))
    return records


class _GroupAccumulator:
    """Sums (start, end)-sorted records into matrix entries.

    Each entry aggregates the run of records sharing its key with an
    exact (compensated) sum, so entries built from up to d^k walk
    probabilities do not drift.
    """

    def __init__(self, k: int, n: int):
        self.k = k
        self.values = np.zeros((n, n))
        self._run_key: tuple[int, int] | None = None
        self._run: list[float] = []

    def feed(self, walk: Walk, prob: float) -> None:
        key = (walk[0], walk[-1])
        if key != self._run_key:
            self._flush()
            self._run_key = key
        self._run.append(prob)

    def _flush(self) -> None:
        if self._run_key is not None:
            self.values[self._run_key] = math.fsum(self._run)
            self._run = []

    def finish(self) -> TransMatrix:
        self._flush()
        return TransMatrix(self.k, self.values)


def trans_pr(
    g: UncertainGraph,
    k_steps: int,
    store: MatrixStore | os.PathLike | str | None = None,
    *,
    k_max: int = DEFAULT_K_MAX,
    budget_bytes: int = DEFAULT_BUDGET_BYTES,
    chunk_bytes: int = DEFAULT_CHUNK_BYTES,
    on_step=None,
) -> MatrixStore:
    """Materialize the transition matrices for steps 1..k_steps.

    Walk records for step k+1 are produced by extending every surviving
    step-k record along each out-arc of its last vertex.  While a walk is
    shorter than the graph's girth it cannot revisit a vertex, so its
    probability update is a one-step multiplication; longer walks take
    the incremental factor-ratio update.  Records are grouped by (start,
    end) and summed into matrix entries.

    Raises :class:`WalkBudgetError` naming the offending step when one
    step's record volume exceeds ``budget_bytes``.
    """
    if k_steps < 1:
        raise ValueError("k_steps must be >= 1")
    if k_steps > k_max:
        raise ValueError(
            f"k_steps={k_steps} exceeds k_max={k_max}; raise k_max explicitly "
            "if the exponential walk growth is acceptable"
        )
    if not isinstance(store, MatrixStore):
        store = MatrixStore(store)
    step_start = time.perf_counter()
    w1 = one_step_matrix(g)
    store.add(w1)
    records = _seed_records(g, w1)
    if store.directory is not None:
        write_walk_file(store.walk_path(1), 1, records)
    if on_step is not None:
        on_step(1, len(records), time.perf_counter() - step_start)
    if k_steps == 1:
        return store

    ell = girth(g)
    n = g.vertex_count
    with tempfile.TemporaryDirectory(prefix="usimrank_walks_") as tmpdir:
        source = records
        for k in range(1, k_steps):
            step_start = time.perf_counter()
            sink = _RecordSink(k + 1, tmpdir, chunk_bytes, budget_bytes)
            simple = (k + 1) < ell  # extended walks cannot revisit any vertex
            for walk, prob, factor in source:
                last = walk[-1]
                if simple:
                    base = w1.values[last]
                    for w in g.out_targets(last):
                        sink.add(walk + (w,), prob * float(base[w]), 1.0)
                else:
                    for w in g.out_targets(last):
                        p2, f2 = extend_walk_probability(g, walk, prob, factor, w)
                        sink.add(walk + (w,), p2, f2)
            merged = sink.sorted_records()
            grouper = _GroupAccumulator(k + 1, n)
            if isinstance(merged, list):
                for walk, prob, _factor in merged:
                    grouper.feed(walk, prob)
                if store.directory is not None:
                    write_walk_file(store.walk_path(k + 1), k + 1, merged)
                count = len(merged)
                source = merged
            else:
                # Spilled to chunks: one pass writes the canonical sorted
                # file while feeding the matrix; the next step re-reads it.
                if store.directory is not None:
                    canon = store.walk_path(k + 1)
                else:
                    canon = Path(tmpdir) / f"canonical_{k + 1}.wlk"

                def _tee(stream, grouper=grouper):
                    for walk, prob, factor in stream:
                        grouper.feed(walk, prob)
                        yield walk, prob, factor

                count = write_walk_file(canon, k + 1, _tee(merged))
                source = iter_walk_file(canon)
            store.add(grouper.finish())
            if on_step is not None:
                on_step(k + 1, count, time.perf_counter() - step_start)
    return store
