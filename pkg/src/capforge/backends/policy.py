"""Retry and rate-limit policy shared by the HTTP clients."""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass

BACKOFF_CAP_MS = 60_000


@dataclass
class BackendPolicy:
    max_retries: int = 3
    backoff_base_ms: int = 100
    rate_limit_per_s: float = 10.0
    timeout_ms: int = 30_000

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.backoff_base_ms <= 0:
            raise ValueError("backoff_base_ms must be positive")
        if self.rate_limit_per_s <= 0:
            raise ValueError("rate_limit_per_s must be positive")
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")

    def backoff_s(self, attempt: int) -> float:
        """Exponential backoff for the given 0-based retry attempt."""
        return min(self.backoff_base_ms * (2**attempt), BACKOFF_CAP_MS) / 1000.0


class RateLimiter:
    """Serializes callers so the request rate stays within the policy.

    Allows one immediate request (burst of 1), then spaces subsequent
    requests by 1/rate seconds. Thread-safe.
    """

    def __init__(self, rate_per_s: float):
        if rate_per_s <= 0:
            raise ValueError("rate must be positive")
        self._interval = 1.0 / rate_per_s
        self._lock = threading.Lock()
        self._next_at = 0.0

    def acquire(self) -> None:
        with self._lock:
            now = time.monotonic()
            wait = self._next_at - now
            self._next_at = max(now, self._next_at) + self._interval
        if wait > 0:
            time.sleep(wait)
