"""Bounded FIFO ring with overwrite-oldest overflow.

The producer never waits for the consumer: when the ring is full the
oldest item is dropped (freshest vitals win) and dropped_count records
the loss.  Push and pop are O(1) under a lock held only for the slot
update, so either side completes in bounded steps regardless of what
the other is doing.
"""

from __future__ import annotations

import threading
from typing import Any, List, Optional

ACCEPTED = "accepted"
OVERWROTE = "overwrote"


class RingBuffer:
    def __init__(self, capacity: int = 1024):
        if capacity < 2 or capacity & (capacity - 1):
            raise ValueError("capacity must be a power of two >= 2")
        self.capacity = capacity
        self._slots: List[Any] = [None] * capacity
        self._mask = capacity - 1
        self._head = 0  # next write position (total writes)
        self._tail = 0  # next read position (total reads + drops)
        self.dropped_count = 0
        self._lock = threading.Lock()

    def push(self, item: Any) -> str:
        with self._lock:
            outcome = ACCEPTED
            if self._head - self._tail == self.capacity:
                self._tail += 1
                self.dropped_count += 1
                outcome = OVERWROTE
            self._slots[self._head & self._mask] = item
            self._head += 1
            return outcome

    def pop(self) -> Optional[Any]:
        with self._lock:
            if self._head == self._tail:
                return None
            item = self._slots[self._tail & self._mask]
            self._slots[self._tail & self._mask] = None
            self._tail += 1
            return item

    def __len__(self) -> int:
        with self._lock:
            return self._head - self._tail
