"""Counter-based random streams with scheduling-independent reproducibility.

Every draw is a pure function of ``(stream key, counter index)``: the i-th
raw word of a stream is ``mix64(key + (i + 1) * GAMMA)`` where ``mix64`` is
the SplitMix64 finalizer and GAMMA is the golden-ratio increment.  Random
access by counter index is what makes parallel sweeps reproducible for any
worker count: tasks address disjoint counter ranges instead of sharing
sequential generator state, so the schedule cannot influence any draw.

Stream keys are derived from ``(seed, stream_id)`` by a keyed BLAKE2b hash,
so distinct stream ids give statistically independent streams.  Child
streams are derived the same way from arbitrary token paths, which lets
audit code assign one stream per scenario deterministically.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV_2_53 = 1.0 / (1 << 53)


def mix64(z: int) -> int:
    """SplitMix64 finalizer: a full-avalanche 64-bit integer hash."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def derive_key(seed: int, stream_id: int) -> int:
    """Keyed 64-bit hash of (seed, stream_id); the stream's counter key."""
    h = hashlib.blake2b(
        struct.pack("<QQ", seed & _MASK, stream_id & _MASK),
        digest_size=8,
        key=b"mechaudit.stream",
    )
    return int.from_bytes(h.digest(), "little")


def child_key(key: int, tokens: tuple) -> int:
    """Derive a sub-stream key from a parent key and a token path.

    Tokens may be ints, strings or bytes; the encoding is canonical so the
    derivation never depends on interpreter hash randomization.
    """
    h = hashlib.blake2b(digest_size=8, key=b"mechaudit.child")
    h.update(struct.pack("<Q", key & _MASK))
    for tok in tokens:
        if isinstance(tok, (int, np.integer)):
            h.update(b"i" + struct.pack("<q", int(tok)))
        elif isinstance(tok, str):
            h.update(b"s" + tok.encode("utf-8") + b"\x1f")
        elif isinstance(tok, bytes):
            h.update(b"b" + tok + b"\x1f")
        else:
            raise TypeError(f"unsupported stream token type: {type(tok)!r}")
    return int.from_bytes(h.digest(), "little")


def raw_words(key: int, start: int, count: int) -> np.ndarray:
    """uint64 words at counter indices [start, start + count), vectorized."""
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    z = np.uint64(key & _MASK) + idx * np.uint64(_GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def uniforms(key: int, start: int, count: int) -> np.ndarray:
    """float64 uniforms in the open interval (0, 1) at the given counters.

    The midpoint offset keeps 0 and 1 unreachable, which inverse-CDF
    samplers rely on.
    """
    return ((raw_words(key, start, count) >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53


@dataclass
class RandomStream:
    """A named, reproducible stream of random draws.

    Identical ``(seed, stream_id)`` always reproduces identical draw
    sequences, independent of platform, worker count or call interleaving
    with other streams.  Instances are cheap; derive one per independent
    task rather than sharing a consuming stream across tasks.
    """

    seed: int
    stream_id: int = 0
    _key: int = field(init=False, repr=False)
    _counter: int = field(default=0, init=False, repr=False)

    def __post_init__(self) -> None:
        self._key = derive_key(self.seed, self.stream_id)

    @property
    def key(self) -> int:
        return self._key

    @property
    def counter(self) -> int:
        return self._counter

    def child(self, *tokens) -> "RandomStream":
        """A fresh independent stream addressed by a token path."""
        out = RandomStream.__new__(RandomStream)
        out.seed = self.seed
        out.stream_id = self.stream_id
        out._key = child_key(self._key, tokens)
        out._counter = 0
        return out

    def take_words(self, count: int) -> np.ndarray:
        words = raw_words(self._key, self._counter, count)
        self._counter += count
        return words

    def take_uniforms(self, count: int) -> np.ndarray:
        u = uniforms(self._key, self._counter, count)
        self._counter += count
        return u

    def take_uniform(self) -> float:
        return float(self.take_uniforms(1)[0])
