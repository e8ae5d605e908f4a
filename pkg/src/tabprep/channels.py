"""Bounded inter-stage channels for the columnwise engine.

Capacity is counted in records, not batches, so backpressure tracks actual
memory no matter how the stream is batched.  One rule keeps arbitrarily
large batches deadlock-free: a batch is always admitted into an empty
channel, even when it alone exceeds capacity.

A channel closes either cleanly or with an error; consumers blocked on get()
see the error re-raised.
"""

from __future__ import annotations

import threading
from typing import Any, Iterator

_DONE = object()


class ChannelClosed(RuntimeError):
    """put() after close()."""


class Channel:
    """FIFO of (size, item) with blocking put/get and record-counted capacity."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._items: list[tuple[int, Any]] = []
        self._records = 0
        self._closed = False
        self._error: BaseException | None = None
        self._lock = threading.Lock()
        self._not_full = threading.Condition(self._lock)
        self._not_empty = threading.Condition(self._lock)

    def put(self, item: Any, size: int = 1) -> None:
        """Block until the item fits (or the channel is empty), then enqueue."""
        if size < 0:
            raise ValueError("size must be >= 0")
        with self._lock:
            while True:
                if self._error is not None:
                    raise self._error
                if self._closed:
                    raise ChannelClosed("channel is closed")
                if self._records == 0 or self._records + size <= self.capacity:
                    break
                self._not_full.wait()
            self._items.append((size, item))
            self._records += size
            self._not_empty.notify()

    def get(self) -> Any:
        """Block for the next item; raises StopIteration when drained and closed."""
        with self._lock:
            while True:
                if self._items:
                    size, item = self._items.pop(0)
                    self._records -= size
                    self._not_full.notify_all()
                    return item
                if self._error is not None:
                    raise self._error
                if self._closed:
                    raise StopIteration
                self._not_empty.wait()

    def close(self) -> None:
        with self._lock:
            self._closed = True
            self._not_empty.notify_all()
            self._not_full.notify_all()

    def fail(self, exc: BaseException) -> None:
        """Close with an error; pending and future callers see exc."""
        with self._lock:
            self._error = exc
            self._closed = True
            self._not_empty.notify_all()
            self._not_full.notify_all()

    @property
    def records_queued(self) -> int:
        with self._lock:
            return self._records

    def __iter__(self) -> Iterator[Any]:
        while True:
            try:
                yield self.get()
            except StopIteration:
                return
