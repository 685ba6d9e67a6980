"""Seeded hash families shared by both parties of a reconciliation session.

All randomness in the toolkit is derived from a single 16-byte seed, so two
parties holding the same seed evaluate identical hash functions without
exchanging anything else.  The workhorse family is polynomial evaluation over
the Mersenne field GF(2^31 - 1), one lane per 31 output bits, with a random
evaluation point and a random affine postmix per lane.  For distinct inputs of
length <= L the collision probability per lane is about (L + 2) / 2^31.

Everything here is vectorised with numpy; strings are hashed in O(n) and all
window digests of a string are produced in O(n) total via prefix sums.
"""

from __future__ import annotations

import hashlib
import os
import struct
from dataclasses import dataclass, field

import numpy as np

M31 = np.uint64((1 << 31) - 1)
_M31_INT = (1 << 31) - 1


def _fold(v: np.ndarray) -> np.ndarray:
    """Reduce uint64 values < 2^62 modulo 2^31 - 1."""
    v = (v & M31) + (v >> np.uint64(31))
    v = (v & M31) + (v >> np.uint64(31))
    return np.where(v == M31, np.uint64(0), v)


def _mulmod(a: np.ndarray, b) -> np.ndarray:
    return _fold(a * b)


@dataclass(frozen=True)
class SharedSeed:
    """A 16-byte value held identically by both parties."""

    value: bytes

    def __post_init__(self):
        if len(self.value) != 16:
            raise ValueError("seed must be exactly 16 bytes")

    @classmethod
    def random(cls) -> "SharedSeed":
        return cls(os.urandom(16))

    @classmethod
    def from_int(cls, n: int) -> "SharedSeed":
        return cls((n & ((1 << 128) - 1)).to_bytes(16, "little"))

    def derive_bytes(self, label: str, n: int) -> bytes:
        """Deterministic byte stream for (seed, label); same on both parties."""
        out = bytearray()
        counter = 0
        while len(out) < n:
            h = hashlib.blake2b(
                label.encode() + b"\x00" + struct.pack("<I", counter),
                key=self.value,
                digest_size=64,
            )
            out.extend(h.digest())
            counter += 1
        return bytes(out[:n])

    def derive_words(self, label: str, n: int) -> np.ndarray:
        raw = self.derive_bytes(label, 8 * n)
        return np.frombuffer(raw, dtype="<u8").astype(np.uint64)

    def child(self, label: str) -> "SharedSeed":
        return SharedSeed(self.derive_bytes("child/" + label, 16))


def _byte_terms(data: bytes) -> np.ndarray:
    """Per-symbol polynomial coefficients: byte value + 1 (never zero)."""
    return np.frombuffer(data, dtype=np.uint8).astype(np.uint64) + np.uint64(1)


def _powers(x: int, n: int) -> np.ndarray:
    """[x^0, x^1, ..., x^(n-1)] mod 2^31-1, computed blockwise."""
    if n == 0:
        return np.empty(0, dtype=np.uint64)
    block = min(n, 1024)
    base = np.empty(block, dtype=np.uint64)
    acc = 1
    for i in range(block):
        base[i] = acc
        acc = (acc * x) % _M31_INT
    if n <= block:
        return base[:n]
    nblocks = (n + block - 1) // block
    out = np.empty(nblocks * block, dtype=np.uint64)
    mult = 1
    step = pow(x, block, _M31_INT)
    for b in range(nblocks):
        out[b * block : (b + 1) * block] = _mulmod(base, np.uint64(mult))
        mult = (mult * step) % _M31_INT
    return out[:n]


@dataclass(frozen=True)
class HashFn:
    """Seeded polynomial hash over byte strings with `out_bits` output bits.

    Deterministic given (seed, label).  Evaluates the same function whether
    called on a whole string, on packed 64-bit keys, or through the rolling
    window path in :class:`PrefixHashes`.
    """

    label: str
    out_bits: int
    xs: tuple  # evaluation point per lane
    post_a: tuple
    post_b: tuple
    _u64_pow: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def lanes(self) -> int:
        return len(self.xs)

    def _lane_digest(self, terms: np.ndarray, lane: int) -> int:
        n = len(terms)
        if n == 0:
            d = 0
        else:
            prods = _mulmod(terms, _powers(self.xs[lane], n))
            # raw cumulative sum stays below 2^64 for n < 2^33
            d = int(prods.sum(dtype=np.uint64)) % _M31_INT
        return (self.post_a[lane] * d + self.post_b[lane]) % _M31_INT

    def __call__(self, data: bytes) -> int:
        terms = _byte_terms(data)
        combined = 0
        for lane in range(self.lanes):
            combined = (combined << 31) | self._lane_digest(terms, lane)
        return combined >> (31 * self.lanes - self.out_bits)

    def hash_u64(self, keys) -> np.ndarray:
        """Vectorised evaluation on 64-bit keys (little-endian byte view)."""
        keys = np.asarray(keys, dtype=np.uint64)
        scalar = keys.ndim == 0
        keys = np.atleast_1d(keys)
        combined = np.zeros(len(keys), dtype=object) if self.lanes > 2 else None
        acc64 = np.zeros(len(keys), dtype=np.uint64)
        shift_left = 31 * self.lanes - self.out_bits
        for lane in range(self.lanes):
            pw = self._u64_powers(lane)
            d = np.zeros(len(keys), dtype=np.uint64)
            for j in range(8):
                byte = (keys >> np.uint64(8 * j)) & np.uint64(0xFF)
                d += _mulmod(byte + np.uint64(1), pw[j])
            d = _fold(d)
            d = _fold(d * np.uint64(self.post_a[lane]) + np.uint64(self.post_b[lane]))
            if combined is not None:
                combined = (combined << 31) | d.astype(object)
            else:
                acc64 = (acc64 << np.uint64(31)) | d
        if combined is not None:
            out = np.array([int(v) >> shift_left for v in combined], dtype=np.uint64)
        else:
            out = acc64 >> np.uint64(shift_left)
        return out[0] if scalar else out

    def _u64_powers(self, lane: int) -> np.ndarray:
        return _powers(self.xs[lane], 8) if self._u64_pow is None else self._u64_pow[lane]


def derive_hash(seed: SharedSeed, label: str, out_bits: int) -> HashFn:
    """Build the (seed, label)-determined hash function with out_bits output."""
    if not 1 <= out_bits <= 128:
        raise ValueError(f"out_bits must be in [1, 128], got {out_bits}")
    lanes = (out_bits + 30) // 31
    words = seed.derive_words("hashfn/" + label, 3 * lanes)
    xs, post_a, post_b = [], [], []
    for lane in range(lanes):
        xs.append(2 + int(words[3 * lane]) % (_M31_INT - 3))
        post_a.append(1 + int(words[3 * lane + 1]) % (_M31_INT - 1))
        post_b.append(int(words[3 * lane + 2]) % _M31_INT)
    u64_pow = np.stack([_powers(x, 8) for x in xs])
    return HashFn(label, out_bits, tuple(xs), tuple(post_a), tuple(post_b), u64_pow)


class PrefixHashes:
    """Prefix sums of a HashFn's polynomial lanes over one string.

    After O(n) setup, the digest of any substring [start, end) is available in
    O(1), and all window digests of a fixed width come out as one vectorised
    expression.  Values agree exactly with calling the HashFn on the slice.
    """

    def __init__(self, data: bytes, fn: HashFn):
        if fn.lanes > 2:
            raise ValueError("prefix hashing supports out_bits <= 62")
        self.fn = fn
        self.n = len(data)
        terms = _byte_terms(data)
        self._pref = []  # raw cumulative sums, exact integers < 2^64
        self._inv_pow = []
        for lane in range(fn.lanes):
            pw = _powers(fn.xs[lane], self.n)
            prods = _mulmod(terms, pw)
            pref = np.zeros(self.n + 1, dtype=np.uint64)
            np.cumsum(prods, out=pref[1:])
            self._pref.append(pref)
            inv_x = pow(fn.xs[lane], _M31_INT - 2, _M31_INT)
            self._inv_pow.append(_powers(inv_x, self.n + 1))

    def _lane_window(self, lane: int, starts, width) -> np.ndarray:
        pref = self._pref[lane]
        raw = pref[starts + width] - pref[starts]  # exact: window sums < 2^62
        d = _mulmod(_fold(raw), self._inv_pow[lane][starts])
        return _fold(
            d * np.uint64(self.fn.post_a[lane]) + np.uint64(self.fn.post_b[lane])
        )

    def digest(self, start: int, end: int) -> int:
        return int(self.digests(np.array([start]), end - start)[0])

    def digests(self, starts: np.ndarray, width) -> np.ndarray:
        """Digest of [s, s+width) for each start; width scalar or array."""
        starts = np.asarray(starts, dtype=np.int64)
        out = np.zeros(len(starts), dtype=np.uint64)
        for lane in range(self.fn.lanes):
            out = (out << np.uint64(31)) | self._lane_window(lane, starts, width)
        return out >> np.uint64(31 * self.fn.lanes - self.fn.out_bits)

    def window_digests(self, width: int) -> np.ndarray:
        """All n - width + 1 sliding-window digests, O(n) total."""
        if not 1 <= width <= self.n:
            raise ValueError(f"window width {width} out of range [1, {self.n}]")
        starts = np.arange(self.n - width + 1, dtype=np.int64)
        return self.digests(starts, width)

    def prefix_digest(self, length: int) -> int:
        """Digest of the length-`length` prefix (clamped to the string)."""
        return self.digest(0, min(length, self.n))


def rolling_digest(s: bytes, w: int, fn: HashFn) -> np.ndarray:
    """Digests of every width-w window of s under fn, in O(|s|) total time."""
    if w > len(s):
        raise ValueError(f"window {w} longer than input ({len(s)})")
    return PrefixHashes(s, fn).window_digests(w)


def small_hash(s: bytes, fn: HashFn) -> int:
    """Constant-size hash used for noisy comparisons; collisions <= 1/4."""
    if fn.out_bits != 2:
        raise ValueError("small_hash expects a 2-bit hash function")
    return fn(s)
