"""Benchmark harness: a desk-scale throughput sweep with a correctness gate.

Every cell is verified against the plain-Python reference before any timing
happens, then measured three times after a warm-up and reported as the mean.
Cells that fail verification or crash become error rows; the sweep carries
on.  Results are plain CSV with a stable column set.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, fields as dataclass_fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import io_formats, reference
from .datagen import SyntheticSpec, write_text
from .decoder import decode_file
from .engine import run_pipeline
from .schema import PipelineConfig, TransformedBatch

DEFAULT_REPETITIONS = 3


@dataclass
class BenchRow:
    engine: str
    threads: int
    encoding: str
    modulus: int
    rows: int
    pass1_s: float = 0.0
    pass2_s: float = 0.0
    split_s: float = 0.0
    generate_s: float = 0.0
    apply_s: float = 0.0
    concatenate_s: float = 0.0
    rows_per_second: float = 0.0
    status: str = "ok"


CSV_COLUMNS = [f.name for f in dataclass_fields(BenchRow)]

# lane count of the columnwise engine: 40 column lanes are always present
COLUMNWISE_THREADS = 40


def _equal_outputs(got: TransformedBatch, want: TransformedBatch) -> bool:
    return (np.array_equal(got.labels, want.labels)
            and np.array_equal(got.dense, want.dense)
            and np.array_equal(got.sparse, want.sparse))


@dataclass
class BenchInputs:
    """Pre-generated inputs shared by every cell of a sweep."""

    utf8_path: Path
    binary_path: Path
    rows: int
    seed: int

    @classmethod
    def prepare(cls, workdir: str | Path, rows: int, seed: int = 0,
                missing_prob: float = 0.04) -> "BenchInputs":
        workdir = Path(workdir)
        workdir.mkdir(parents=True, exist_ok=True)
        utf8_path = workdir / f"bench-{rows}-{seed}.txt"
        binary_path = workdir / f"bench-{rows}-{seed}.pbin"
        truth = write_text(utf8_path, SyntheticSpec(n_rows=rows, seed=seed,
                                                    missing_prob=missing_prob))
        io_formats.write_records(binary_path, truth)
        return cls(utf8_path=utf8_path, binary_path=binary_path, rows=rows, seed=seed)

    def path_for(self, encoding: str) -> Path:
        return self.binary_path if encoding == "binary" else self.utf8_path


def run_cell(inputs: BenchInputs, engine: str, threads: int, encoding: str,
             modulus: int, repetitions: int = DEFAULT_REPETITIONS,
             reference_output: TransformedBatch | None = None) -> BenchRow:
    """Gate one configuration against the reference, then time it."""
    row = BenchRow(engine=engine,
                   threads=COLUMNWISE_THREADS if engine == "columnwise" else threads,
                   encoding=encoding, modulus=modulus, rows=inputs.rows)
    config = PipelineConfig(modulus=modulus, input_encoding=encoding,
                            rowwise_threads=threads)
    path = inputs.path_for(encoding)
    try:
        # warm-up doubles as the correctness gate: never time wrong code
        gate = run_pipeline(path, config, engine=engine)
        if reference_output is None:
            decoded = decode_file(inputs.utf8_path)
            reference_output, _ = reference.reference_pipeline(decoded, modulus)
        if not _equal_outputs(gate.transformed, reference_output):
            row.status = "verification failed against reference"
            return row

        p1, p2, stages = [], [], []
        for _ in range(repetitions):
            result = run_pipeline(path, config, engine=engine)
            p1.append(result.stats.pass1_seconds)
            p2.append(result.stats.pass2_seconds)
            stages.append(result.stats.stage_seconds)
        row.pass1_s = float(np.mean(p1))
        row.pass2_s = float(np.mean(p2))
        for name in ("split", "generate", "apply", "concatenate"):
            vals = [s.get(name, 0.0) for s in stages]
            setattr(row, f"{name}_s", float(np.mean(vals)))
        total = row.pass1_s + row.pass2_s
        row.rows_per_second = inputs.rows / total if total > 0 else 0.0
    except Exception as exc:  # cell failure must not kill the sweep
        row.status = f"error: {exc}"
    return row


def run_matrix(workdir: str | Path, rows: int = 100_000, seed: int = 0,
               engines: Sequence[str] = ("columnwise", "rowwise"),
               threads_list: Sequence[int] = (1, 2, 4),
               encodings: Sequence[str] = ("utf8", "binary"),
               moduli: Sequence[int] = (5000, 1_000_000),
               repetitions: int = DEFAULT_REPETITIONS) -> list[BenchRow]:
    """The full sweep.  The columnwise engine has a fixed lane structure, so
    it contributes one cell per (encoding, modulus) regardless of threads_list."""
    inputs = BenchInputs.prepare(workdir, rows, seed)
    decoded = decode_file(inputs.utf8_path)
    results = []
    for modulus in moduli:
        reference_output, _ = reference.reference_pipeline(decoded, modulus)
        for encoding in encodings:
            for engine in engines:
                cell_threads = [1] if engine == "columnwise" else list(threads_list)
                for threads in cell_threads:
                    results.append(run_cell(inputs, engine, threads, encoding,
                                            modulus, repetitions,
                                            reference_output=reference_output))
    return results


def write_csv(rows: Iterable[BenchRow], fh) -> None:
    """Emit rows; re-derives rows_per_second to catch inconsistent entries."""
    writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
    writer.writeheader()
    for row in rows:
        total = row.pass1_s + row.pass2_s
        if row.status == "ok" and total > 0:
            derived = row.rows / total
            if abs(derived - row.rows_per_second) > max(1e-6 * derived, 1e-9):
                raise AssertionError("rows_per_second inconsistent with timings")
        writer.writerow({name: getattr(row, name) for name in CSV_COLUMNS})


def csv_text(rows: Iterable[BenchRow]) -> str:
    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()
