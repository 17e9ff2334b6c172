"""Byte-oriented range coder: 32-bit state, 16-bit frequencies, carry-less renormalization.

Classic Subbotin construction. The encoder emits the top byte of `low`
whenever the top bytes of `low` and `low + range` agree (so later additions
can never carry into emitted bytes), and force-shrinks `range` below that
point when it drops under 2**16. The decoder mirrors the exact same state
transitions, so the two are bit-exact inverses. Output bytes are most
significant first.

Frequencies are given as cumulative arrays summing to exactly 2**16 with
every symbol frequency >= 1 (see entropy.CdfTable).
"""

from __future__ import annotations

from bisect import bisect_right
from typing import Sequence

from .exceptions import DecodeError, EncodeError

TOP = 1 << 24
BOT = 1 << 16
MASK = (1 << 32) - 1

#: total of every cumulative frequency table (16-bit precision)
TOTAL = 1 << 16

FLUSH_BYTES = 4


class RangeEncoder:
    def __init__(self) -> None:
        self._low = 0
        self._range = MASK
        self._out = bytearray()

    def encode_symbol(self, cum: Sequence[int], index: int) -> None:
        """Code one symbol given its table's cumulative frequencies.

        ``cum`` has length K+1 with cum[0] == 0 and cum[K] == TOTAL;
        ``index`` selects the interval [cum[index], cum[index+1]).
        """
        cum_low = cum[index]
        freq = cum[index + 1] - cum_low
        r = self._range // TOTAL
        self._low += cum_low * r
        self._range = freq * r
        self._normalize()

    def _normalize(self) -> None:
        low, rng = self._low, self._range
        while True:
            if (low ^ (low + rng)) < TOP:
                pass
            elif rng < BOT:
                # top bytes differ but range is tiny: clamp range up to the
                # next 2**16 boundary so a byte can be emitted (carry-less)
                rng = (-low) & (BOT - 1)
            else:
                break
            self._out.append((low >> 24) & 0xFF)
            low = (low << 8) & MASK
            rng <<= 8
        self._low, self._range = low, rng

    def finish(self) -> bytes:
        low = self._low
        for _ in range(FLUSH_BYTES):
            self._out.append((low >> 24) & 0xFF)
            low = (low << 8) & MASK
        return bytes(self._out)


class RangeDecoder:
    def __init__(self, data: bytes) -> None:
        self._data = data
        self._pos = 0
        self._low = 0
        self._range = MASK
        code = 0
        for _ in range(FLUSH_BYTES):
            code = (code << 8) | self._next_byte()
        self._code = code

    def _next_byte(self) -> int:
        if self._pos >= len(self._data):
            raise DecodeError("range-coded payload truncated")
        b = self._data[self._pos]
        self._pos += 1
        return b

    def decode_symbol(self, cum: Sequence[int]) -> int:
        r = self._range // TOTAL
        value = (self._code - self._low) // r
        if value < 0 or value >= TOTAL:
            raise DecodeError("corrupt range-coded payload")
        index = bisect_right(cum, value) - 1
        cum_low = cum[index]
        freq = cum[index + 1] - cum_low
        self._low += cum_low * r
        self._range = freq * r
        self._normalize()
        return index

    def _normalize(self) -> None:
        low, rng, code = self._low, self._range, self._code
        while True:
            if (low ^ (low + rng)) < TOP:
                pass
            elif rng < BOT:
                rng = (-low) & (BOT - 1)
            else:
                break
            code = ((code << 8) & MASK) | self._next_byte()
            low = (low << 8) & MASK
            rng <<= 8
        self._low, self._range, self._code = low, rng, code

    @property
    def consumed(self) -> int:
        return self._pos


def range_encode(symbols: Sequence[int], cum: Sequence[int]) -> bytes:
    """Encode a symbol-index sequence against a single cumulative table.

    An empty sequence produces an empty payload.
    """
    if len(symbols) == 0:
        return b""
    n_symbols = len(cum) - 1
    enc = RangeEncoder()
    for s in symbols:
        if s < 0 or s >= n_symbols:
            raise EncodeError(f"symbol index {s} outside table of size {n_symbols}")
        enc.encode_symbol(cum, s)
    return enc.finish()


def range_decode(data: bytes, cum: Sequence[int], count: int) -> list[int]:
    """Decode ``count`` symbol indices; exact inverse of :func:`range_encode`."""
    if count == 0:
        return []
    dec = RangeDecoder(data)
    return [dec.decode_symbol(cum) for _ in range(count)]
