"""The two pipeline engines.

Both make two passes over the input.  Pass 1 decodes every row and builds
the 26 vocabulary tables; decoded records are stashed (in memory or on
disk) so pass 2 transforms them without re-decoding.  The engines differ
only in how work is organized:

* ColumnwiseEngine splits each batch into per-column lanes connected by
  bounded channels, one worker thread per lane; each vocabulary table is
  owned by exactly one lane.  Batches carry sequence numbers and are
  reassembled in order on the far side.

* RowwiseEngine keeps records whole and fans chunks out to a thread pool.
  Pass 1 workers build per-chunk sub-vocabularies that are merged in chunk
  order, which reproduces global first-appearance ids exactly.

The two engines produce bit-identical output for the same input and
configuration; the test suite holds them to that.
"""

from __future__ import annotations

import logging
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator

import numpy as np

from . import io_formats
from .channels import Channel
from .ops import dense_transform, modulus_reduce
from .schema import (
    N_COLUMNS,
    N_DENSE,
    N_SPARSE,
    PipelineConfig,
    RecordBatch,
    TransformedBatch,
    validate_config,
)
from .vocab import VocabTable, Vocabulary, first_appearance_unique

log = logging.getLogger("tabprep")

DEFAULT_ROWS_PER_BATCH = 16384


@dataclass
class RunStats:
    engine: str
    rows: int = 0
    batches: int = 0
    pass1_seconds: float = 0.0
    pass2_seconds: float = 0.0
    vocab_sizes: list = field(default_factory=list)
    # rowwise stage breakdown (cumulative worker seconds):
    # split (decode), generate (sub-vocab + merge), apply (transform),
    # concatenate (output assembly)
    stage_seconds: dict = field(default_factory=dict)


class _StageClock:
    """Thread-safe accumulator for per-stage durations."""

    def __init__(self):
        self._lock = threading.Lock()
        self.totals: dict[str, float] = {}

    def add(self, stage: str, seconds: float) -> None:
        with self._lock:
            self.totals[stage] = self.totals.get(stage, 0.0) + seconds

    def timed_iter(self, it: Iterator, stage: str) -> Iterator:
        while True:
            t0 = time.perf_counter()
            try:
                item = next(it)
            except StopIteration:
                return
            finally:
                self.add(stage, time.perf_counter() - t0)
            yield item


@dataclass
class PipelineResult:
    vocabulary: Vocabulary
    stats: RunStats
    transformed: TransformedBatch | None = None


# -- input sources ----------------------------------------------------------

def make_source(input_path: str | Path, config: PipelineConfig) -> Callable[[], Iterator[RecordBatch]]:
    """Return a factory producing a fresh decoded-batch iterator per call."""
    rows_per_batch = max(1, min(DEFAULT_ROWS_PER_BATCH, config.channel_capacity))
    return io_formats.read_source(input_path, encoding=config.input_encoding,
                                  group_width=config.decode_group_width,
                                  rows_per_batch=rows_per_batch)


# -- intermediate stash -----------------------------------------------------

class _MemoryStash:
    def __init__(self):
        self._batches: list[RecordBatch] = []

    def append(self, batch: RecordBatch) -> None:
        self._batches.append(batch)

    def finish(self) -> None:
        pass

    def reader(self) -> Iterator[RecordBatch]:
        return iter(self._batches)

    def cleanup(self) -> None:
        self._batches.clear()


class _DiskStash:
    def __init__(self):
        fd = tempfile.NamedTemporaryFile(prefix="tabprep-stash-", suffix=".pbin",
                                         delete=False)
        self.path = Path(fd.name)
        fd.close()
        self._writer = io_formats.RecordWriter(self.path, io_formats.KIND_DECODED)

    def append(self, batch: RecordBatch) -> None:
        self._writer.write(batch)

    def finish(self) -> None:
        self._writer.close()

    def reader(self) -> Iterator[RecordBatch]:
        return io_formats.iter_read_records(self.path, DEFAULT_ROWS_PER_BATCH)

    def cleanup(self) -> None:
        self.path.unlink(missing_ok=True)


def _make_stash(config: PipelineConfig):
    return _DiskStash() if config.intermediate_spill == "disk" else _MemoryStash()


# -- per-column transforms --------------------------------------------------

def _dense_op(arr: np.ndarray, apply_log: bool) -> np.ndarray:
    return dense_transform(arr, apply_log=apply_log)


class ColumnwiseEngine:
    """Channel-connected per-column lanes, one thread per lane."""

    name = "columnwise"

    def __init__(self, config: PipelineConfig):
        self.config = validate_config(config)

    # pass 1: demux sparse columns into 26 vocabulary-building lanes
    def _pass1(self, batches: Iterable[RecordBatch], stash, stats: RunStats) -> Vocabulary:
        cfg = self.config
        tables = [VocabTable(cfg.modulus) for _ in range(N_SPARSE)]
        in_ch = [Channel(cfg.channel_capacity) for _ in range(N_SPARSE)]
        errors: list[BaseException] = []

        def lane(col: int):
            table = tables[col]
            try:
                for _seq, arr in in_ch[col]:
                    table.observe_batch(modulus_reduce(arr, cfg.modulus))
            except BaseException as exc:
                errors.append(exc)
                in_ch[col].fail(exc)

        threads = [threading.Thread(target=lane, args=(c,), name=f"vocab-lane-{c}")
                   for c in range(N_SPARSE)]
        for t in threads:
            t.start()
        failure: BaseException | None = None
        seq = 0
        try:
            for batch in batches:
                stash.append(batch)
                n = len(batch)
                for col in range(N_SPARSE):
                    in_ch[col].put((seq, batch.sparse[:, col]), size=n)
                stats.rows += n
                stats.batches += 1
                seq += 1
        except BaseException as exc:
            failure = exc
        for ch in in_ch:
            ch.close()
        for t in threads:
            t.join()
        if failure is not None:
            raise failure
        if errors:
            raise errors[0]
        return Vocabulary(cfg.modulus, tables)

    # pass 2: demux all 40 columns, transform, remux in sequence order
    def _pass2(self, batches: Iterable[RecordBatch], vocabulary: Vocabulary,
               sink: Callable[[TransformedBatch], None]) -> None:
        cfg = self.config
        in_ch = [Channel(cfg.channel_capacity) for _ in range(N_COLUMNS)]
        out_ch = [Channel(cfg.channel_capacity) for _ in range(N_COLUMNS)]
        errors: list[BaseException] = []

        def lane(col: int):
            try:
                if col == 0:
                    op = lambda arr: arr
                elif col <= N_DENSE:
                    op = lambda arr: _dense_op(arr, cfg.apply_log)
                else:
                    table = vocabulary.tables[col - 1 - N_DENSE]
                    op = lambda arr: table.lookup_batch(modulus_reduce(arr, cfg.modulus))
                for seq, arr in in_ch[col]:
                    out_ch[col].put((seq, op(arr)), size=len(arr))
                out_ch[col].close()
            except BaseException as exc:
                errors.append(exc)
                in_ch[col].fail(exc)
                out_ch[col].fail(exc)

        def remux():
            try:
                while True:
                    first = None
                    parts = []
                    for col in range(N_COLUMNS):
                        try:
                            seq, arr = out_ch[col].get()
                        except StopIteration:
                            if col != 0:
                                raise AssertionError("lanes closed out of step")
                            return
                        if first is None:
                            first = seq
                        elif seq != first:
                            raise AssertionError("lanes delivered misaligned sequences")
                        parts.append(arr)
                    n = parts[0].shape[0]
                    out = TransformedBatch(
                        labels=np.ascontiguousarray(parts[0], dtype=np.int32),
                        dense=np.empty((n, N_DENSE), dtype=np.float32),
                        sparse=np.empty((n, N_SPARSE), dtype=np.uint32),
                    )
                    for j in range(N_DENSE):
                        out.dense[:, j] = parts[1 + j]
                    for j in range(N_SPARSE):
                        out.sparse[:, j] = parts[1 + N_DENSE + j]
                    sink(out)
            except BaseException as exc:
                errors.append(exc)
                for ch in out_ch:
                    ch.fail(exc)

        threads = [threading.Thread(target=lane, args=(c,), name=f"xform-lane-{c}")
                   for c in range(N_COLUMNS)]
        remux_thread = threading.Thread(target=remux, name="remux")
        for t in threads:
            t.start()
        remux_thread.start()
        failure: BaseException | None = None
        seq = 0
        try:
            for batch in batches:
                n = len(batch)
                in_ch[0].put((seq, batch.labels), size=n)
                for j in range(N_DENSE):
                    in_ch[1 + j].put((seq, batch.dense[:, j]), size=n)
                for j in range(N_SPARSE):
                    in_ch[1 + N_DENSE + j].put((seq, batch.sparse[:, j]), size=n)
                seq += 1
        except BaseException as exc:
            failure = exc
        for ch in in_ch:
            ch.close()
        for t in threads:
            t.join()
        remux_thread.join()
        if failure is not None:
            raise failure
        if errors:
            raise errors[0]

    def run(self, source: Callable[[], Iterator[RecordBatch]],
            sink: Callable[[TransformedBatch], None]) -> PipelineResult:
        stats = RunStats(engine=self.name)
        stash = _make_stash(self.config)
        try:
            t0 = time.perf_counter()
            vocabulary = self._pass1(source(), stash, stats)
            stash.finish()
            stats.pass1_seconds = time.perf_counter() - t0
            t0 = time.perf_counter()
            self._pass2(stash.reader(), vocabulary, sink)
            stats.pass2_seconds = time.perf_counter() - t0
        finally:
            stash.cleanup()
        stats.vocab_sizes = vocabulary.sizes()
        return PipelineResult(vocabulary=vocabulary, stats=stats)


class RowwiseEngine:
    """Whole-record chunks over a thread pool; the multithreaded baseline."""

    name = "rowwise"

    def __init__(self, config: PipelineConfig):
        self.config = validate_config(config)

    def _sub_vocab(self, batch: RecordBatch, clock: _StageClock) -> list[np.ndarray]:
        """Per-column distinct residues of one chunk, in first-appearance order."""
        t0 = time.perf_counter()
        residues = modulus_reduce(batch.sparse, self.config.modulus)
        parts = [first_appearance_unique(residues[:, col]) for col in range(N_SPARSE)]
        clock.add("generate", time.perf_counter() - t0)
        return parts

    def _transform(self, batch: RecordBatch, vocabulary: Vocabulary,
                   clock: _StageClock) -> TransformedBatch:
        t0 = time.perf_counter()
        cfg = self.config
        n = len(batch)
        dense = np.empty((n, N_DENSE), dtype=np.float32)
        for j in range(N_DENSE):
            dense[:, j] = _dense_op(batch.dense[:, j], cfg.apply_log)
        sparse = vocabulary.lookup_batch(modulus_reduce(batch.sparse, cfg.modulus))
        out = TransformedBatch(labels=batch.labels.copy(), dense=dense, sparse=sparse)
        clock.add("apply", time.perf_counter() - t0)
        return out

    def run(self, source: Callable[[], Iterator[RecordBatch]],
            sink: Callable[[TransformedBatch], None]) -> PipelineResult:
        cfg = self.config
        stats = RunStats(engine=self.name)
        clock = _StageClock()
        stash = _make_stash(cfg)
        try:
            t0 = time.perf_counter()
            parts: list[list[np.ndarray]] = []
            with ThreadPoolExecutor(max_workers=cfg.rowwise_threads) as pool:
                futures = []
                for batch in clock.timed_iter(source(), "split"):
                    stash.append(batch)
                    stats.rows += len(batch)
                    stats.batches += 1
                    futures.append(pool.submit(self._sub_vocab, batch, clock))
                parts = [f.result() for f in futures]
            if cfg.rowwise_threads > max(1, len(parts)):
                log.warning("rowwise_threads=%d exceeds %d chunk(s); extra threads idle",
                            cfg.rowwise_threads, len(parts))
            stash.finish()
            t_merge = time.perf_counter()
            tables = [VocabTable.merge_parts([p[col] for p in parts], cfg.modulus)
                      for col in range(N_SPARSE)]
            clock.add("generate", time.perf_counter() - t_merge)
            vocabulary = Vocabulary(cfg.modulus, tables)
            stats.pass1_seconds = time.perf_counter() - t0

            t0 = time.perf_counter()
            with ThreadPoolExecutor(max_workers=cfg.rowwise_threads) as pool:
                for out in pool.map(
                        lambda b: self._transform(b, vocabulary, clock),
                        stash.reader()):
                    t_sink = time.perf_counter()
                    sink(out)
                    clock.add("concatenate", time.perf_counter() - t_sink)
            stats.pass2_seconds = time.perf_counter() - t0
        finally:
            stash.cleanup()
        stats.vocab_sizes = vocabulary.sizes()
        for stage in ("split", "generate", "apply", "concatenate"):
            stats.stage_seconds[stage] = clock.totals.get(stage, 0.0)
        return PipelineResult(vocabulary=vocabulary, stats=stats)


ENGINES = {
    ColumnwiseEngine.name: ColumnwiseEngine,
    RowwiseEngine.name: RowwiseEngine,
}


def run_pipeline(input_path: str | Path, config: PipelineConfig | None = None,
                 engine: str = "columnwise", output_path: str | Path | None = None,
                 vocab_path: str | Path | None = None,
                 collect: bool | None = None) -> PipelineResult:
    """Run both passes over a file.

    With output_path the transformed records stream to a binary record file;
    with collect (default when there is no output_path) they are also
    returned as one in-memory batch.
    """
    config = validate_config(config or PipelineConfig())
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}; choose from {sorted(ENGINES)}")
    if collect is None:
        collect = output_path is None
    source = make_source(input_path, config)
    eng = ENGINES[engine](config)

    collected: list[TransformedBatch] = []
    writer = None
    if output_path is not None:
        writer = io_formats.RecordWriter(output_path, io_formats.KIND_TRANSFORMED)

    def sink(batch: TransformedBatch) -> None:
        if writer is not None:
            writer.write(batch)
        if collect:
            collected.append(batch)

    try:
        result = eng.run(source, sink)
    finally:
        if writer is not None:
            writer.close()
    if vocab_path is not None:
        io_formats.save_vocabulary(vocab_path, result.vocabulary)
    if collect:
        result.transformed = TransformedBatch.concat(collected)
    return result
