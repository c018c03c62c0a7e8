"""In-memory memoization shared by experiment suites."""

import hashlib
import json
import threading
from collections import OrderedDict
from collections.abc import Callable
from functools import wraps
from typing import Any


def fingerprint_key(name: str, payload: Any) -> str:
    """md5 digest of a JSON-serializable payload, namespaced by ``name``."""
    key_data = {"name": name, "payload": payload}
    return hashlib.md5(
        json.dumps(key_data, sort_keys=True, default=str).encode()
    ).hexdigest()


class ResultCache:
    """Thread-safe LRU cache of computed tables."""

    def __init__(self, max_entries: int = 128):
        """Initialize cache.

        Args:
            max_entries: Oldest entries are evicted beyond this size
        """
        self._cache: OrderedDict[str, Any] = OrderedDict()
        self._lock = threading.Lock()
        self._max_entries = max_entries
        self.hits = 0
        self.misses = 0

    def get(self, key: str) -> Any | None:
        """Get a cached value, or None if absent."""
        with self._lock:
            if key not in self._cache:
                self.misses += 1
                return None
            self._cache.move_to_end(key)
            self.hits += 1
            return self._cache[key]

    def set(self, key: str, value: Any):
        with self._lock:
            self._cache[key] = value
            self._cache.move_to_end(key)
            while len(self._cache) > self._max_entries:
                self._cache.popitem(last=False)

    def clear(self):
        """Clear all cache entries."""
        with self._lock:
            self._cache.clear()
            self.hits = 0
            self.misses = 0

    def __len__(self) -> int:
        return len(self._cache)


# Global cache instance
_cache = ResultCache()


def get_cache() -> ResultCache:
    return _cache


def memoize(key_func: Callable[..., str]):
    """Decorator caching a function's result under ``key_func(*args, **kwargs)``.

    Args:
        key_func: Builds the cache key, typically via ``fingerprint_key``

    Returns:
        Decorated function
    """

    def decorator(func: Callable):
        @wraps(func)
        def wrapper(*args, **kwargs):
            cache_key = key_func(*args, **kwargs)
            cached = _cache.get(cache_key)
            if cached is not None:
                return cached
            result = func(*args, **kwargs)
            _cache.set(cache_key, result)
            return result

        return wrapper

    return decorator
