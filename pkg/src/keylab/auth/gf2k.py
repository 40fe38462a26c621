"""Arithmetic in GF(2^k) for k in {8, 16, 32}, scalar and vectorised."""

from __future__ import annotations

import numpy as np

# low-weight irreducible polynomials, leading term included
IRREDUCIBLE = {
    8: 0x11B,  # x^8 + x^4 + x^3 + x + 1
    16: 0x1002B,  # x^16 + x^5 + x^3 + x + 1
    32: 0x10000008D,  # x^32 + x^7 + x^3 + x^2 + 1
}


def _poly(k: int) -> int:
    try:
        return IRREDUCIBLE[k]
    except KeyError:
        raise ValueError(f"unsupported field size k={k}; choose one of {sorted(IRREDUCIBLE)}") from None


def gf_mul(a: int, b: int, k: int) -> int:
    poly = _poly(k)
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a >> k:
            a ^= poly
    return r


def gf_pow(a: int, e: int, k: int) -> int:
    r = 1
    while e:
        if e & 1:
            r = gf_mul(r, a, k)
        a = gf_mul(a, a, k)
        e >>= 1
    return r


def gf_mul_vec(a: np.ndarray, b: np.ndarray, k: int) -> np.ndarray:
    """Elementwise product of two uint64 arrays of field elements."""
    poly = np.uint64(_poly(k))
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    one = np.uint64(1)
    p = np.zeros(np.broadcast(a, b).shape, dtype=np.uint64)
    for i in range(k):
        p ^= ((b >> np.uint64(i)) & one) * (a << np.uint64(i))
    for i in range(2 * k - 2, k - 1, -1):
        p ^= ((p >> np.uint64(i)) & one) * (poly << np.uint64(i - k))
    return p


def gf_mul_const(a: np.ndarray, b: int, k: int) -> np.ndarray:
    """Multiply every element of ``a`` by the scalar ``b``.

    Multiplication by a constant is GF(2)-linear, so it is a table lookup
    of ``b * x^i`` for every set bit ``i`` of each element.
    """
    a = np.asarray(a, dtype=np.uint64)
    cols = np.empty(k, dtype=np.uint64)
    cols[0] = b
    for i in range(1, k):
        cols[i] = gf_mul_x(cols[i - 1 : i], k)[0]
    bits = (a[..., None] >> np.arange(k, dtype=np.uint64)) & np.uint64(1)
    return np.bitwise_xor.reduce(bits * cols, axis=-1)


def gf_powers(x: int, count: int, k: int) -> np.ndarray:
    """Array ``[x^1, x^2, ..., x^count]`` built by doubling."""
    out = np.zeros(count, dtype=np.uint64)
    if count == 0:
        return out
    out[0] = x
    filled = 1
    while filled < count:
        step = min(filled, count - filled)
        xf = np.uint64(gf_pow(x, filled, k))
        out[filled : filled + step] = gf_mul_const(out[:step], int(xf), k)
        filled += step
    return out


def bits_to_blocks(bits: np.ndarray, k: int) -> np.ndarray:
    """Split a bit vector into big-endian k-bit integers, zero-padding the tail."""
    n = bits.size
    d = -(-n // k)
    padded = np.zeros(d * k, dtype=np.uint64)
    padded[:n] = bits
    weights = np.uint64(1) << np.arange(k - 1, -1, -1, dtype=np.uint64)
    return (padded.reshape(d, k) * weights).sum(axis=1, dtype=np.uint64)


def gf_mul_x(v: np.ndarray, k: int) -> np.ndarray:
    """Multiply every element by the generator ``x``."""
    t = np.asarray(v, dtype=np.uint64) << np.uint64(1)
    return t ^ (((t >> np.uint64(k)) & np.uint64(1)) * np.uint64(_poly(k)))


_TABLES: dict[tuple[int, int], np.ndarray] = {}


def power_basis_table(h: int, k: int, rows: int) -> np.ndarray:
    """``W[e, i] = h^e * x^i`` for ``e < rows`` (or more), cached per ``(h, k)``.

    Multiplying a field element ``c`` by ``h^e`` is then the XOR of
    ``W[e, i]`` over the set bits ``i`` of ``c``.
    """
    W = _TABLES.get((h, k))
    if W is None or W.shape[0] < rows:
        size = max(rows, 64, 2 * W.shape[0] if W is not None else 0)
        W = np.empty((size, k), dtype=np.uint64)
        W[0, 0] = 1
        W[1:, 0] = gf_powers(h, size - 1, k)
        for i in range(1, k):
            W[:, i] = gf_mul_x(W[:, i - 1], k)
        if len(_TABLES) > 256:
            _TABLES.clear()
        _TABLES[(h, k)] = W
    return W
