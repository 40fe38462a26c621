"""Goldwasser-Micali quadratic-residuosity predicate at toy scale.

A bit ``b`` is encrypted as a random ``x^2 * y^b mod N`` where ``y`` is a
non-residue with Jacobi symbol +1; deciding residuosity needs the factors.
Moduli are capped at 32 bits so the trapdoor can always be brute-forced.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd, isqrt

import numpy as np
from sympy import isprime

from ..core import KeylabError

MIN_MODULUS_BITS = 16
MAX_MODULUS_BITS = 32


class ToyScaleError(KeylabError):
    pass


@dataclass(frozen=True)
class GmPublicKey:
    N: int
    y: int


@dataclass(frozen=True)
class TrapdoorPredicateKeypair:
    public: GmPublicKey
    p: int
    q: int

    @property
    def modulus_bits(self) -> int:
        return self.public.N.bit_length()


def _random_prime(bits: int, rng: np.random.Generator) -> int:
    while True:
        c = int(rng.integers(0, 1 << bits)) | (0b11 << (bits - 2)) | 1
        if isprime(c):
            return c


def _is_qr(a: int, p: int) -> bool:
    return pow(a % p, (p - 1) // 2, p) == 1


def tp_keygen(modulus_bits: int, rng: np.random.Generator) -> TrapdoorPredicateKeypair:
    if not MIN_MODULUS_BITS <= modulus_bits <= MAX_MODULUS_BITS:
        raise ToyScaleError(f"modulus_bits must lie in [{MIN_MODULUS_BITS}, {MAX_MODULUS_BITS}]")
    half = modulus_bits // 2
    p = _random_prime(half, rng)
    q = p
    while q == p:
        q = _random_prime(modulus_bits - half, rng)
    N = p * q
    while True:
        y = int(rng.integers(2, N))
        if gcd(y, N) == 1 and not _is_qr(y, p) and not _is_qr(y, q):
            break
    return TrapdoorPredicateKeypair(GmPublicKey(N, y), p, q)


def tp_encrypt_bit(public: GmPublicKey, b: int, rng: np.random.Generator) -> int:
    if b not in (0, 1):
        raise ValueError("plaintext must be a bit")
    N = public.N
    while True:
        x = int(rng.integers(1, N))
        if gcd(x, N) == 1:
            break
    return (x * x * (public.y if b else 1)) % N


def tp_decrypt_bit(keypair: TrapdoorPredicateKeypair, c: int) -> int:
    return 0 if _is_qr(c, keypair.p) else 1


def factor_trial_division(N: int) -> tuple[int, int]:
    """Smallest prime factor split of ``N`` by trial division."""
    if N % 2 == 0:
        return 2, N // 2
    for d in range(3, isqrt(N) + 1, 2):
        if N % d == 0:
            return d, N // d
    raise ValueError(f"{N} is prime")


def tp_break(public: GmPublicKey) -> TrapdoorPredicateKeypair:
    """Recover the trapdoor from the public modulus alone."""
    p, q = factor_trial_division(public.N)
    return TrapdoorPredicateKeypair(public, p, q)
