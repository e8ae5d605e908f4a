"""Network-attached streaming mode: preprocess a twice-streamed dataset over TCP.

The client streams the raw dataset twice on one connection.  The server
builds vocabularies during the first pass and returns transformed records
during the second, holding only decoder carry state and the vocabulary
tables in between, so datasets far larger than server memory stream
through.  All integers are little-endian.

Connection layout (each pass):

    SessionHeader (21 bytes, raw)
    DATA frame *        opaque input chunks; boundaries carry no meaning
    END frame
    pass 1 reply: STATS frame
    pass 2 reply: RESULT frame * (packed 160-byte transformed records),
                  then STATS frame

    SessionHeader:  magic "PNET" | version u16 | session_id u64 |
                    pass_number u8 | input_encoding u8 (0 utf8, 1 binary) |
                    modulus u32 | apply_log u8
    WireFrame:      frame_type u8 | length u32 | payload (<= 1 MiB)
    STATS payload:  rows u64 | 26 x vocabulary size u32
    ERROR payload:  code u8 | row u64 | utf-8 message

An ERROR frame ends the session: codes 1 ProtocolViolation, 2 PassMismatch,
3 DecodeError, 4 Timeout.
"""

from __future__ import annotations

import socket
import socketserver
import struct
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io_formats
from .decoder import StreamDecoder
from .errors import DecodeError, MissingEntry, ProtocolError, ServerError
from .ops import dense_transform, modulus_reduce
from .schema import N_SPARSE, RecordBatch, TransformedBatch
from .vocab import Vocabulary

PROTOCOL_VERSION = 1
SESSION_MAGIC = b"PNET"
SESSION_HEADER = struct.Struct("<4sHQBBIB")
FRAME_HEADER = struct.Struct("<BI")
MAX_PAYLOAD = 1 << 20

T_DATA = 1
T_END = 2
T_RESULT = 3
T_STATS = 4
T_ERROR = 5

E_PROTOCOL = 1
E_PASS_MISMATCH = 2
E_DECODE = 3
E_TIMEOUT = 4
ERROR_NAMES = {
    E_PROTOCOL: "ProtocolViolation",
    E_PASS_MISMATCH: "PassMismatch",
    E_DECODE: "DecodeError",
    E_TIMEOUT: "Timeout",
}

ENC_UTF8 = 0
ENC_BINARY = 1

STATS_STRUCT = struct.Struct("<Q26I")
ERROR_PREFIX = struct.Struct("<BQ")

# 6553 records keep a RESULT frame under the payload cap
RESULT_RECORDS_PER_FRAME = MAX_PAYLOAD // io_formats.RECORD_BYTES


@dataclass(frozen=True)
class SessionHeader:
    session_id: int
    pass_number: int
    input_encoding: int
    modulus: int
    apply_log: bool

    def pack(self) -> bytes:
        return SESSION_HEADER.pack(SESSION_MAGIC, PROTOCOL_VERSION, self.session_id,
                                   self.pass_number, self.input_encoding,
                                   self.modulus, 1 if self.apply_log else 0)

    @classmethod
    def unpack(cls, raw: bytes) -> "SessionHeader":
        magic, version, sid, pass_no, enc, modulus, logf = SESSION_HEADER.unpack(raw)
        if magic != SESSION_MAGIC:
            raise ProtocolError(f"bad session magic {magic!r}")
        if version != PROTOCOL_VERSION:
            raise ProtocolError(f"unsupported protocol version {version}")
        if pass_no not in (1, 2):
            raise ProtocolError(f"pass_number must be 1 or 2, got {pass_no}")
        if enc not in (ENC_UTF8, ENC_BINARY):
            raise ProtocolError(f"unknown input encoding {enc}")
        if modulus < 1:
            raise ProtocolError("modulus must be >= 1")
        return cls(sid, pass_no, enc, modulus, bool(logf))


# -- socket plumbing --------------------------------------------------------

def _recv_exact(sock: socket.socket, n: int) -> bytes:
    chunks = []
    got = 0
    while got < n:
        piece = sock.recv(min(n - got, 1 << 16))
        if not piece:
            raise ProtocolError("connection closed mid-message")
        chunks.append(piece)
        got += len(piece)
    return b"".join(chunks)


def send_frame(sock: socket.socket, frame_type: int, payload: bytes = b"") -> None:
    if len(payload) > MAX_PAYLOAD:
        raise ProtocolError(f"payload of {len(payload)} bytes exceeds the 1 MiB cap")
    sock.sendall(FRAME_HEADER.pack(frame_type, len(payload)) + payload)


def recv_frame(sock: socket.socket) -> tuple[int, bytes]:
    frame_type, length = FRAME_HEADER.unpack(_recv_exact(sock, FRAME_HEADER.size))
    if length > MAX_PAYLOAD:
        raise ProtocolError(f"declared payload of {length} bytes exceeds the 1 MiB cap")
    return frame_type, _recv_exact(sock, length) if length else b""


def _raise_server_error(payload: bytes):
    code, row = ERROR_PREFIX.unpack_from(payload, 0)
    message = payload[ERROR_PREFIX.size:].decode("utf-8", "replace")
    raise ServerError(code, ERROR_NAMES.get(code, f"code {code}"), row, message)


# -- server-side memory accounting ------------------------------------------

class ByteBudget:
    """Counted allocator for buffered payload bytes.

    acquire() blocks while the budget is exhausted, except that a single
    oversized request is admitted when nothing is held (mirrors the channel
    admission rule).  peak_bytes records the high-water mark.
    """

    def __init__(self, limit: int):
        if limit < 1:
            raise ValueError("limit must be >= 1")
        self.limit = limit
        self.used = 0
        self.peak_bytes = 0
        self._cond = threading.Condition()

    def acquire(self, n: int) -> None:
        with self._cond:
            while self.used > 0 and self.used + n > self.limit:
                self._cond.wait()
            self.used += n
            self.peak_bytes = max(self.peak_bytes, self.used)

    def release(self, n: int) -> None:
        with self._cond:
            self.used -= n
            self._cond.notify_all()


# -- per-session input handling ----------------------------------------------

class _ByteStream:
    """Reassembles framed payloads into decoded batches; boundaries are opaque."""

    def __init__(self, header: SessionHeader):
        self.encoding = header.input_encoding
        self.rows = 0
        if self.encoding == ENC_UTF8:
            self._decoder = StreamDecoder(group_width=4)
        else:
            self._carry = b""

    def feed(self, payload: bytes) -> RecordBatch:
        if self.encoding == ENC_UTF8:
            batch = self._decoder.feed(payload)
        else:
            raw = self._carry + payload
            keep = len(raw) % io_formats.RECORD_BYTES
            self._carry = raw[len(raw) - keep:] if keep else b""
            batch = io_formats.decode_record_payload(raw[:len(raw) - keep],
                                                     io_formats.KIND_DECODED)
        self.rows += len(batch)
        return batch

    def finish(self) -> RecordBatch:
        if self.encoding == ENC_UTF8:
            batch = self._decoder.finish()
        else:
            if self._carry:
                raise ProtocolError("binary stream ends mid-record")
            batch = RecordBatch.empty()
        self.rows += len(batch)
        return batch


class _Session:
    """State carried from pass 1 to pass 2 on one connection."""

    def __init__(self, header: SessionHeader):
        self.header = header
        self.vocabulary = Vocabulary(header.modulus)
        self.pass1_rows = 0

    def observe(self, batch: RecordBatch) -> None:
        if len(batch):
            self.vocabulary.observe_batch(
                modulus_reduce(batch.sparse, self.header.modulus))

    def transform(self, batch: RecordBatch) -> TransformedBatch:
        hdr = self.header
        dense = dense_transform(batch.dense, apply_log=hdr.apply_log)
        sparse = self.vocabulary.lookup_batch(
            modulus_reduce(batch.sparse, hdr.modulus))
        return TransformedBatch(labels=batch.labels.copy(), dense=dense, sparse=sparse)

    def stats_payload(self, rows: int) -> bytes:
        sizes = self.vocabulary.sizes()
        return STATS_STRUCT.pack(rows, *sizes)


class _Abort(Exception):
    def __init__(self, code: int, row: int, message: str):
        self.code = code
        self.row = row
        self.message = message
        super().__init__(message)


class _Handler(socketserver.BaseRequestHandler):
    def handle(self):
        server: PreprocessServer = self.server.owner
        sock = self.request
        sock.settimeout(server.session_timeout)
        budget = ByteBudget(server.byte_budget)
        try:
            try:
                session = self._run_pass1(sock, budget)
                self._run_pass2(sock, session, budget)
            except socket.timeout:
                self._send_error(sock, E_TIMEOUT, 0, "session timed out")
            except _Abort as abort:
                self._send_error(sock, abort.code, abort.row, abort.message)
            except ProtocolError as exc:
                self._send_error(sock, E_PROTOCOL, 0, str(exc))
        except OSError:
            pass  # peer went away; session state is discarded regardless
        finally:
            server.note_peak(budget.peak_bytes)

    def _send_error(self, sock, code: int, row: int, message: str) -> None:
        payload = ERROR_PREFIX.pack(code, row) + message.encode("utf-8")
        send_frame(sock, T_ERROR, payload[:MAX_PAYLOAD])

    def _read_header(self, sock) -> SessionHeader:
        return SessionHeader.unpack(_recv_exact(sock, SESSION_HEADER.size))

    def _consume_pass(self, sock, stream: _ByteStream, budget: ByteBudget, consume) -> None:
        while True:
            frame_type, payload = recv_frame(sock)
            if frame_type == T_END:
                try:
                    consume(stream.finish())
                except DecodeError as exc:
                    raise _Abort(E_DECODE, exc.row, str(exc)) from exc
                return
            if frame_type != T_DATA:
                raise _Abort(E_PROTOCOL, stream.rows,
                             f"unexpected frame type {frame_type} inside a pass")
            budget.acquire(len(payload))
            try:
                try:
                    consume(stream.feed(payload))
                except DecodeError as exc:
                    raise _Abort(E_DECODE, exc.row, str(exc)) from exc
            finally:
                budget.release(len(payload))

    def _run_pass1(self, sock, budget: ByteBudget) -> _Session:
        header = self._read_header(sock)
        if header.pass_number != 1:
            raise _Abort(E_PROTOCOL, 0,
                         f"unknown session {header.session_id}: pass 2 before pass 1")
        session = _Session(header)
        stream = _ByteStream(header)
        self._consume_pass(sock, stream, budget, session.observe)
        session.pass1_rows = stream.rows
        self.server.owner.note_vocab(session.vocabulary.nbytes)
        send_frame(sock, T_STATS, session.stats_payload(stream.rows))
        return session

    def _run_pass2(self, sock, session: _Session, budget: ByteBudget) -> None:
        header = self._read_header(sock)
        first = session.header
        if header.pass_number != 2:
            raise _Abort(E_PROTOCOL, 0, "second stream must declare pass_number 2")
        if (header.session_id, header.input_encoding, header.modulus,
                header.apply_log) != (first.session_id, first.input_encoding,
                                      first.modulus, first.apply_log):
            raise _Abort(E_PROTOCOL, 0, "pass 2 header does not match pass 1")
        stream = _ByteStream(header)

        def emit(batch: RecordBatch) -> None:
            if not len(batch):
                return
            try:
                out = session.transform(batch)
            except MissingEntry as exc:
                raise _Abort(E_PASS_MISMATCH, stream.rows,
                             f"pass 2 diverges from pass 1: {exc}") from exc
            raw = io_formats.encode_record_payload(out)
            step = RESULT_RECORDS_PER_FRAME * io_formats.RECORD_BYTES
            for off in range(0, len(raw), step):
                send_frame(sock, T_RESULT, raw[off:off + step])

        self._consume_pass(sock, stream, budget, emit)
        if stream.rows != session.pass1_rows:
            raise _Abort(E_PASS_MISMATCH, stream.rows,
                         f"pass 2 carried {stream.rows} rows, pass 1 carried "
                         f"{session.pass1_rows}")
        send_frame(sock, T_STATS, session.stats_payload(stream.rows))


class _TCPServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class PreprocessServer:
    """Threaded TCP server; each connection owns an isolated session."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0,
                 byte_budget: int = 64 << 20, session_timeout: float = 60.0):
        self.byte_budget = byte_budget
        self.session_timeout = session_timeout
        self._peak_lock = threading.Lock()
        self.peak_session_bytes = 0
        self.peak_vocab_bytes = 0
        self._server = _TCPServer((host, port), _Handler)
        self._server.owner = self
        self._thread: threading.Thread | None = None

    def note_peak(self, peak: int) -> None:
        with self._peak_lock:
            self.peak_session_bytes = max(self.peak_session_bytes, peak)

    def note_vocab(self, nbytes: int) -> None:
        with self._peak_lock:
            self.peak_vocab_bytes = max(self.peak_vocab_bytes, nbytes)

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address[:2]

    def start(self) -> "PreprocessServer":
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        name="preprocess-server", daemon=True)
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def serve(listen_address: tuple[str, int], byte_budget: int = 64 << 20,
          session_timeout: float = 60.0) -> None:
    """Run a server on listen_address until interrupted."""
    server = PreprocessServer(listen_address[0], listen_address[1],
                              byte_budget=byte_budget,
                              session_timeout=session_timeout)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()


# -- client -----------------------------------------------------------------

@dataclass
class ClientStats:
    rows: int = 0
    result_bytes: int = 0
    pass1_seconds: float = 0.0
    pass2_seconds: float = 0.0
    total_seconds: float = 0.0
    vocab_sizes: list = field(default_factory=list)


def _parse_stats(payload: bytes) -> tuple[int, list[int]]:
    if len(payload) != STATS_STRUCT.size:
        raise ProtocolError(f"stats payload must be {STATS_STRUCT.size} bytes")
    rows, *sizes = STATS_STRUCT.unpack(payload)
    return rows, list(sizes)


def _stream_file(sock, path: Path, encoding: int, frame_bytes: int) -> None:
    offset = 0
    if encoding == ENC_BINARY:
        kind, _rows = io_formats.read_header(path)
        if kind != io_formats.KIND_DECODED:
            raise ValueError("binary input must hold decoded records")
        offset = io_formats.RECORD_HEADER.size
    with open(path, "rb") as fh:
        fh.seek(offset)
        while True:
            piece = fh.read(frame_bytes)
            if not piece:
                break
            send_frame(sock, T_DATA, piece)
    send_frame(sock, T_END)


def _expect_frame(sock, wanted: int) -> bytes:
    frame_type, payload = recv_frame(sock)
    if frame_type == T_ERROR:
        _raise_server_error(payload)
    if frame_type != wanted:
        raise ProtocolError(f"expected frame type {wanted}, got {frame_type}")
    return payload


def client_send(path: str | Path, server_address: tuple[str, int],
                output_path: str | Path, modulus: int = 5000,
                apply_log: bool = True, input_encoding: str = "utf8",
                session_id: int | None = None,
                frame_bytes: int = 256 << 10) -> ClientStats:
    """Stream path through a server twice; write transformed records to output_path.

    The output file is a standard transformed record file, byte-identical to
    a local engine run over the same input.
    """
    if frame_bytes < 1 or frame_bytes > MAX_PAYLOAD:
        raise ValueError("frame_bytes must be within the 1 MiB payload cap")
    path = Path(path)
    enc = ENC_BINARY if input_encoding == "binary" else ENC_UTF8
    if session_id is None:
        session_id = int(time.time_ns()) & (2**64 - 1)
    stats = ClientStats()
    t_start = time.perf_counter()
    with socket.create_connection(server_address) as sock:
        t0 = time.perf_counter()
        hdr = SessionHeader(session_id, 1, enc, modulus, apply_log)
        sock.sendall(hdr.pack())
        _stream_file(sock, path, enc, frame_bytes)
        _parse_stats(_expect_frame(sock, T_STATS))
        stats.pass1_seconds = time.perf_counter() - t0

        # Pass 2 is full duplex: the server interleaves RESULT frames with
        # our DATA frames, so a second thread streams the input while this
        # one drains results.  Sending everything first would deadlock once
        # the kernel socket buffers fill on both directions.
        t0 = time.perf_counter()
        hdr = SessionHeader(session_id, 2, enc, modulus, apply_log)
        sock.sendall(hdr.pack())
        send_failure: list[BaseException] = []

        def pump():
            try:
                _stream_file(sock, path, enc, frame_bytes)
            except BaseException as exc:
                send_failure.append(exc)
                try:
                    # half-close so the server fails fast instead of timing out
                    sock.shutdown(socket.SHUT_WR)
                except OSError:
                    pass

        sender = threading.Thread(target=pump, name="pass2-sender")
        sender.start()
        try:
            with open(output_path, "wb") as out:
                out.write(io_formats.pack_record_header(io_formats.KIND_TRANSFORMED, 0))
                while True:
                    frame_type, payload = recv_frame(sock)
                    if frame_type == T_ERROR:
                        _raise_server_error(payload)
                    if frame_type == T_RESULT:
                        out.write(payload)
                        stats.result_bytes += len(payload)
                        continue
                    if frame_type == T_STATS:
                        stats.rows, stats.vocab_sizes = _parse_stats(payload)
                        break
                    raise ProtocolError(f"unexpected frame type {frame_type} in pass 2")
                out.seek(0)
                out.write(io_formats.pack_record_header(io_formats.KIND_TRANSFORMED,
                                                        stats.rows))
        except BaseException:
            # Unblock a sender stuck in sendall before re-raising.
            try:
                sock.close()
            except OSError:
                pass
            sender.join()
            raise
        sender.join()
        if send_failure:
            raise send_failure[0]
        stats.pass2_seconds = time.perf_counter() - t0
    if stats.result_bytes != stats.rows * io_formats.RECORD_BYTES:
        raise ProtocolError("result byte count disagrees with reported row count")
    stats.total_seconds = time.perf_counter() - t_start
    return stats
