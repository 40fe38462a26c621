"""Lamport one-time signatures over the configured OWF."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import BitString, KeylabError, ProtocolAbort
from .owf import OwfConfig, invert, md_digest


class OneTimeViolation(KeylabError):
    """A Lamport keypair was asked to sign a second message."""


class KeyPoolEmpty(ProtocolAbort):
    reason = "signature-pool-empty"


@dataclass(frozen=True)
class LamportPublicKey:
    owf: OwfConfig
    images: tuple[tuple[int, int], ...]

    @property
    def m(self) -> int:
        return len(self.images)

    def encode(self) -> BitString:
        """``2m`` images, each ``owf.output_bits`` wide, in (i, b) order."""
        w = self.owf.output_bits
        return BitString.from_str("".join(format(y, f"0{w}b") for pair in self.images for y in pair))

    @classmethod
    def decode(cls, bits: BitString, owf: OwfConfig, m: int) -> "LamportPublicKey":
        w = owf.output_bits
        if len(bits) != 2 * m * w:
            raise ValueError("public key has wrong length")
        s = str(bits)
        vals = [int(s[i : i + w], 2) for i in range(0, len(s), w)]
        return cls(owf, tuple((vals[2 * i], vals[2 * i + 1]) for i in range(m)))


@dataclass
class LamportKeypair:
    owf: OwfConfig
    private: tuple[tuple[int, int], ...]
    public: LamportPublicKey
    used: bool = field(default=False)

    @property
    def m(self) -> int:
        return len(self.private)


def lamport_keygen(owf: OwfConfig, m: int, rng: np.random.Generator) -> LamportKeypair:
    if m <= 0:
        raise ValueError("digest length m must be positive")
    w = owf.input_bits
    words = -(-w // 32)
    raw = rng.integers(0, 2**32, size=(m, 2, words), dtype=np.uint64)
    private = []
    for i in range(m):
        pair = []
        for b in range(2):
            x = 0
            for word in raw[i, b]:
                x = (x << 32) | int(word)
            pair.append(x >> (32 * words - w))
        private.append(tuple(pair))
    images = tuple((owf(x0), owf(x1)) for x0, x1 in private)
    return LamportKeypair(owf, tuple(private), LamportPublicKey(owf, images))


def sign_digest(keypair: LamportKeypair, digest: BitString) -> BitString:
    if keypair.used:
        raise OneTimeViolation("Lamport keypair already used")
    if len(digest) != keypair.m:
        raise ValueError(f"digest must be {keypair.m} bits")
    keypair.used = True
    w = keypair.owf.input_bits
    return BitString.from_str(
        "".join(format(keypair.private[i][bit], f"0{w}b") for i, bit in enumerate(digest))
    )


def verify_digest(public: LamportPublicKey, digest: BitString, signature: BitString | None) -> bool:
    w = public.owf.input_bits
    if signature is None or len(digest) != public.m or len(signature) != public.m * w:
        return False
    s = str(signature)
    for i, bit in enumerate(digest):
        if public.owf(int(s[i * w : (i + 1) * w], 2)) != public.images[i][bit]:
            return False
    return True


def lamport_sign(keypair: LamportKeypair, message: BitString) -> BitString:
    return sign_digest(keypair, md_digest(message, keypair.m))


def lamport_verify(public: LamportPublicKey, message: BitString, signature: BitString | None) -> bool:
    return verify_digest(public, md_digest(message, public.m), signature)


def forge_digest(public: LamportPublicKey, digest: BitString) -> BitString | None:
    """Signature on ``digest`` found by inverting every needed image.

    Only succeeds in toy mode, where exhaustive search is cheap.
    """
    w = public.owf.input_bits
    parts = []
    for i, bit in enumerate(digest):
        x = invert(public.owf, public.images[i][bit])
        if x is None:
            return None
        parts.append(format(x, f"0{w}b"))
    return BitString.from_str("".join(parts))


def forge(public: LamportPublicKey, message: BitString) -> BitString | None:
    return forge_digest(public, md_digest(message, public.m))


def recover_keypair(public: LamportPublicKey) -> LamportKeypair | None:
    """A working private key for ``public`` from inverting all ``2m`` images (toy mode)."""
    private = []
    for y0, y1 in public.images:
        x0, x1 = invert(public.owf, y0), invert(public.owf, y1)
        if x0 is None or x1 is None:
            return None
        private.append((x0, x1))
    return LamportKeypair(public.owf, tuple(private), public)
