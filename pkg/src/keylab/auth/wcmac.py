"""Wegman-Carter one-time MAC: polynomial evaluation hash plus one-time pad.

A message is cut into k-bit blocks ``c_0 .. c_{d-1}`` followed by a length
block ``c_d = bitlen mod 2^k``; the hash is ``sum_j c_j * h^(d+1-j)`` in
GF(2^k), which is zero for the empty message.  The tag is hash XOR pad.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import BitString, ProtocolAbort
from .gf2k import bits_to_blocks, power_basis_table


class AuthKeyExhausted(ProtocolAbort):
    """No unused one-time pad remains in the authentication key."""

    reason = "auth-key-exhausted"


class PadReuse(ProtocolAbort):
    reason = "pad-reuse"


@dataclass
class WcMacKey:
    k: int
    poly_key: int
    pads: list[int]
    consumed_count: int = 0
    _tagged: set[int] = field(default_factory=set, repr=False)
    _verified: set[int] = field(default_factory=set, repr=False)

    @classmethod
    def from_bits(cls, key: BitString, k: int = 32) -> "WcMacKey":
        """First k bits are the polynomial key, every following k bits one pad."""
        if len(key) < 2 * k:
            raise ValueError(f"need at least {2 * k} key bits, got {len(key)}")
        blocks = bits_to_blocks(key.bits[: (len(key) // k) * k], k)
        return cls(k, int(blocks[0]), [int(b) for b in blocks[1:]])

    @staticmethod
    def key_bits(k: int, pads: int) -> int:
        return k * (1 + pads)

    @property
    def remaining(self) -> int:
        return len(self.pads) - self.consumed_count


def poly_hash(key: WcMacKey, message: BitString) -> int:
    k = key.k
    n = len(message)
    d = -(-n // k)
    bits = np.zeros((d + 1) * k, dtype=bool)
    bits[:n] = message.bits
    length = n % (1 << k)
    bits[d * k :] = [(length >> (k - 1 - i)) & 1 for i in range(k)]
    # block j carries exponent d + 1 - j; its bit column c stands for x^(k-1-c)
    W = power_basis_table(key.poly_key, k, d + 2)
    rows = W[d + 1 - np.arange(d + 1)][:, ::-1]
    chosen = rows[bits.reshape(d + 1, k)]
    return int(np.bitwise_xor.reduce(chosen)) if chosen.size else 0


def wc_tag(key: WcMacKey, message: BitString, index: int | None = None) -> BitString:
    """Tag ``message`` with the next (or the given) unused pad."""
    if index is None:
        index = key.consumed_count
    if index >= len(key.pads):
        raise AuthKeyExhausted(f"pad pool of {len(key.pads)} exhausted at message {index}")
    if index in key._tagged:
        raise PadReuse(f"pad {index} already used for tagging")
    key._tagged.add(index)
    key.consumed_count = max(key.consumed_count, index + 1)
    return BitString.from_int(poly_hash(key, message) ^ key.pads[index], key.k)


def wc_verify(key: WcMacKey, message: BitString, tag: BitString | None, index: int | None = None) -> bool:
    if index is None:
        index = len(key._verified)
    if tag is None or len(tag) != key.k:
        return False
    if index >= len(key.pads) or index in key._verified:
        return False
    key._verified.add(index)
    return tag.to_int() == poly_hash(key, message) ^ key.pads[index]
