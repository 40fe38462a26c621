"""The configured one-way function and everything built from it.

Strong mode is SHA-256 with a domain-separation prefix (256-bit inputs and
outputs).  Toy mode truncates the same function to ``bits <= 16`` on a
``bits``-wide domain, so exhaustive search inverts it instantly.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache

from ..core import BitString


@dataclass(frozen=True)
class OwfConfig:
    mode: str = "strong"
    output_bits: int = 256

    def __post_init__(self):
        if self.mode == "strong":
            if self.output_bits != 256:
                raise ValueError("strong mode is fixed at 256 bits")
        elif self.mode == "toy":
            if not 1 <= self.output_bits <= 16:
                raise ValueError("toy mode needs output_bits <= 16")
        else:
            raise ValueError(f"unknown OWF mode {self.mode!r}")

    @classmethod
    def strong(cls) -> "OwfConfig":
        return cls("strong", 256)

    @classmethod
    def toy(cls, bits: int = 12) -> "OwfConfig":
        return cls("toy", bits)

    @property
    def input_bits(self) -> int:
        return self.output_bits

    def __call__(self, x: int) -> int:
        if self.mode == "strong":
            h = hashlib.sha256(b"keylab/owf" + x.to_bytes(32, "big")).digest()
            return int.from_bytes(h, "big")
        h = hashlib.sha256(b"keylab/owf-toy" + x.to_bytes(4, "big")).digest()
        return int.from_bytes(h[:4], "big") >> (32 - self.output_bits)



@lru_cache(maxsize=None)
def _inverse_table(owf: OwfConfig) -> dict[int, int]:
    table: dict[int, int] = {}
    for x in range(1 << owf.input_bits):
        table.setdefault(owf(x), x)
    return table


def invert(owf: OwfConfig, y: int) -> int | None:
    """Exhaustive-search preimage of ``y`` (toy mode only)."""
    if owf.mode != "toy":
        raise ValueError("only toy mode can be inverted")
    return _inverse_table(owf).get(y)


def _sha(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def md_digest(message: BitString, m: int) -> BitString:
    """Merkle-Damgard chaining of the strong OWF, truncated to ``m`` bits.

    Input is the packed message followed by its 64-bit big-endian bit
    length, zero-padded to 32-byte blocks; the chaining value starts at
    zero and each step is ``h = SHA256("keylab/md" | h | block)``.
    """
    if not 0 < m <= 256:
        raise ValueError("digest length must be in 1..256")
    data = message.to_bytes() + len(message).to_bytes(8, "big")
    data += b"\0" * (-len(data) % 32)
    h = b"\0" * 32
    for i in range(0, len(data), 32):
        h = _sha(b"keylab/md" + h + data[i : i + 32])
    return BitString.from_bytes(h, m)


def prg_expand(seed: BitString, out_len: int) -> BitString:
    """Counter-mode PRG: block j is ``SHA256("keylab/prg" | len | seed | j)``.

    Shorter outputs are prefixes of longer ones.
    """
    if len(seed) == 0:
        raise ValueError("PRG seed must be nonempty")
    if out_len < 0:
        raise ValueError("out_len must be nonnegative")
    head = b"keylab/prg" + len(seed).to_bytes(4, "big") + seed.to_bytes()
    blocks = -(-out_len // 256)
    data = b"".join(_sha(head + j.to_bytes(8, "big")) for j in range(blocks))
    return BitString.from_bytes(data, out_len)


def stream_encrypt(key: BitString, plaintext: BitString) -> BitString:
    """Symmetric cipher surrogate: XOR with the PRG keystream of ``key``."""
    return plaintext ^ prg_expand(key, len(plaintext))


stream_decrypt = stream_encrypt
