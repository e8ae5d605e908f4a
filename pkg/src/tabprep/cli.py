"""Command-line entry point."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import bench as bench_mod
from . import io_formats, net
from .datagen import SyntheticSpec, write_text
from .decoder import decode_file
from .engine import run_pipeline
from .errors import TabprepError
from .schema import PipelineConfig, load_config_file, validate_config

DEFAULT_ADDRESS = os.environ.get("TABPREP_SERVER", "127.0.0.1:9000")


def _parse_address(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {text!r}")
    return host, int(port)


def _add_config_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", type=Path, default=None,
                     help="key=value config file; flags override it")
    sub.add_argument("--modulus", type=int, default=None)
    sub.add_argument("--encoding", choices=("utf8", "binary"), default=None)
    sub.add_argument("--group-width", type=int, choices=(1, 4), default=None)
    sub.add_argument("--threads", type=int, default=None,
                     help="rowwise worker threads")
    sub.add_argument("--channel-capacity", type=int, default=None,
                     help="records buffered per channel")
    sub.add_argument("--spill", choices=("memory", "disk"), default=None,
                     help="where pass 1 stashes decoded records")
    sub.add_argument("--no-log", action="store_true",
                     help="skip log(x+1) on dense features")


def _config_from_args(args) -> PipelineConfig:
    cfg = load_config_file(args.config) if args.config else PipelineConfig()
    overrides = {}
    if args.modulus is not None:
        overrides["modulus"] = args.modulus
    if args.encoding is not None:
        overrides["input_encoding"] = args.encoding
    if args.group_width is not None:
        overrides["decode_group_width"] = args.group_width
    if args.threads is not None:
        overrides["rowwise_threads"] = args.threads
    if args.channel_capacity is not None:
        overrides["channel_capacity"] = args.channel_capacity
    if args.spill is not None:
        overrides["intermediate_spill"] = args.spill
    if args.no_log:
        overrides["apply_log"] = False
    return validate_config(cfg.replace(**overrides))


def cmd_gen_data(args) -> int:
    spec = SyntheticSpec(n_rows=args.rows, seed=args.seed,
                         missing_prob=args.missing_prob, hex_width=args.hex_width)
    write_text(args.out, spec)
    print(f"wrote {args.rows} rows to {args.out}")
    return 0


def cmd_preprocess(args) -> int:
    cfg = _config_from_args(args)
    result = run_pipeline(args.input, cfg, engine=args.engine,
                          output_path=args.out, vocab_path=args.vocab_out)
    s = result.stats
    print(f"{s.engine}: {s.rows} rows in {s.pass1_seconds + s.pass2_seconds:.3f}s "
          f"(pass1 {s.pass1_seconds:.3f}s, pass2 {s.pass2_seconds:.3f}s)")
    print(f"vocabulary sizes: min {min(s.vocab_sizes)}, max {max(s.vocab_sizes)}"
          if s.vocab_sizes else "vocabulary empty")
    return 0


def cmd_to_binary(args) -> int:
    batch = decode_file(args.input, group_width=args.group_width or 4)
    io_formats.write_records(args.out, batch)
    print(f"packed {len(batch)} records into {args.out}")
    return 0


def cmd_serve(args) -> int:
    print(f"serving on {args.host}:{args.port}")
    net.serve((args.host, args.port), byte_budget=args.byte_budget,
              session_timeout=args.timeout)
    return 0


def cmd_send(args) -> int:
    stats = net.client_send(args.input, args.addr, args.out,
                            modulus=args.modulus if args.modulus is not None else 5000,
                            apply_log=not args.no_log,
                            input_encoding=args.encoding or "utf8")
    print(f"{stats.rows} rows round-tripped in {stats.total_seconds:.3f}s "
          f"(pass1 {stats.pass1_seconds:.3f}s, pass2 {stats.pass2_seconds:.3f}s)")
    return 0


def cmd_bench(args) -> int:
    rows = bench_mod.run_matrix(
        args.workdir, rows=args.rows, seed=args.seed,
        engines=tuple(args.engines.split(",")),
        threads_list=tuple(int(t) for t in args.thread_list.split(",")),
        encodings=tuple(args.encodings.split(",")),
        moduli=tuple(int(m) for m in args.moduli.split(",")),
        repetitions=args.reps)
    text = bench_mod.csv_text(rows)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
        print(f"wrote {len(rows)} cells to {args.out}")
    return 0


def cmd_verify(args) -> int:
    a = Path(args.file_a).read_bytes()
    b = Path(args.file_b).read_bytes()
    limit = min(len(a), len(b))
    offset = next((i for i in range(limit) if a[i] != b[i]), None)
    if offset is None and len(a) == len(b):
        print("equal")
        return 0
    if offset is None:
        offset = limit
    line = f"files differ at byte {offset}"
    header = io_formats.RECORD_HEADER.size
    if a[:4] == io_formats.RECORD_MAGIC and b[:4] == io_formats.RECORD_MAGIC \
            and offset >= header:
        line += f" (record {(offset - header) // io_formats.RECORD_BYTES})"
    print(line)
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tabprep",
        description="Two-pass preprocessing for label + 13 dense + 26 sparse datasets")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write a seeded synthetic dataset")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--missing-prob", type=float, default=0.04)
    p.add_argument("--hex-width", type=int, default=0,
                   help="fixed sparse digit count; 0 means natural width")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("preprocess", help="run both passes over a file")
    p.add_argument("input", type=Path)
    p.add_argument("--engine", choices=("columnwise", "rowwise"), default="columnwise")
    p.add_argument("--out", type=Path, default=None,
                   help="transformed record file to write")
    p.add_argument("--vocab-out", type=Path, default=None,
                   help="vocabulary sidecar file to write")
    _add_config_flags(p)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("to-binary", help="decode text and pack decoded records")
    p.add_argument("input", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--group-width", type=int, choices=(1, 4), default=4)
    p.set_defaults(func=cmd_to_binary)

    p = sub.add_parser("serve", help="run the preprocessing server")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=9000)
    p.add_argument("--byte-budget", type=int, default=64 << 20,
                   help="buffered-bytes cap per session")
    p.add_argument("--timeout", type=float, default=60.0)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("send", help="stream a file through a server twice")
    p.add_argument("input", type=Path)
    p.add_argument("--addr", type=_parse_address, default=DEFAULT_ADDRESS,
                   help="HOST:PORT (default from TABPREP_SERVER)")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--modulus", type=int, default=None)
    p.add_argument("--encoding", choices=("utf8", "binary"), default=None)
    p.add_argument("--no-log", action="store_true")
    p.set_defaults(func=cmd_send)

    p = sub.add_parser("bench", help="sweep the timing matrix, emit CSV")
    p.add_argument("--rows", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--engines", default="columnwise,rowwise")
    p.add_argument("--threads", dest="thread_list", default="1,2,4")
    p.add_argument("--encodings", default="utf8,binary")
    p.add_argument("--moduli", default="5000,1000000")
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--workdir", type=Path, default=Path("bench-data"))
    p.add_argument("--out", default=None, help="CSV path, or - for stdout")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="byte-compare two files")
    p.add_argument("file_a", type=Path)
    p.add_argument("file_b", type=Path)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if isinstance(getattr(args, "addr", None), str):
        args.addr = _parse_address(args.addr)
    try:
        return args.func(args)
    except (TabprepError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
