"""Unit tests for the result cache."""

import pytest

from core.cache import ResultCache, fingerprint_key, get_cache, memoize

pytestmark = pytest.mark.unit


def test_fingerprint_key_ignores_key_order():
    assert fingerprint_key("t", {"a": 1, "b": 2}) == fingerprint_key("t", {"b": 2, "a": 1})
    assert fingerprint_key("t", {"a": 1}) != fingerprint_key("u", {"a": 1})


def test_cache_counts_hits_and_misses():
    cache = ResultCache()
    assert cache.get("k") is None
    cache.set("k", [1])
    assert cache.get("k") == [1]
    assert (cache.hits, cache.misses) == (1, 1)
    cache.clear()
    assert len(cache) == 0
    assert cache.hits == 0


def test_cache_evicts_least_recently_used():
    cache = ResultCache(max_entries=2)
    cache.set("a", 1)
    cache.set("b", 2)
    cache.get("a")
    cache.set("c", 3)
    assert cache.get("b") is None
    assert cache.get("a") == 1
    assert cache.get("c") == 3


def test_memoize_calls_once_per_key():
    calls = []

    @memoize(lambda x: fingerprint_key("square", x))
    def square(x):
        calls.append(x)
        return x * x

    assert square(3) == 9
    assert square(3) == 9
    assert square(4) == 16
    assert calls == [3, 4]
    assert len(get_cache()) == 2
