"""Idealised BB84 qubit frames: preparation, a noisy channel, Eve's taps.

Matched-basis measurement returns the prepared bit, flipped with the
channel's noise probability; mismatched-basis measurement returns an
unbiased random bit.  A frame can be measured only once.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import BitString, KeylabError, Party, random_bits


class Basis(enum.IntEnum):
    RECTILINEAR = 0
    DIAGONAL = 1


class FrameConsumed(KeylabError):
    """Second measurement of a frame (no-cloning surrogate)."""


@dataclass
class QubitFrame:
    bits: np.ndarray
    bases: np.ndarray
    sender: Party = Party.ALICE
    frame_id: int = 0
    consumed: bool = False

    def __len__(self) -> int:
        return int(self.bits.size)

    def preparations(self) -> list[tuple[Basis, int]]:
        return [(Basis(int(b)), int(x)) for b, x in zip(self.bases, self.bits)]


@dataclass(frozen=True)
class EveTap:
    """``none``, ``intercept_resend`` (basis policy ``random`` or a fixed
    :class:`Basis`) or ``full_mitm``."""

    kind: str = "none"
    basis_policy: str | Basis = "random"

    def __post_init__(self):
        if self.kind not in ("none", "intercept_resend", "full_mitm"):
            raise ValueError(f"unknown tap {self.kind!r}")

    @classmethod
    def none(cls) -> "EveTap":
        return cls("none")

    @classmethod
    def intercept_resend(cls, basis_policy: str | Basis = "random") -> "EveTap":
        return cls("intercept_resend", basis_policy)

    @classmethod
    def full_mitm(cls) -> "EveTap":
        return cls("full_mitm")


@dataclass(frozen=True)
class EveRecord:
    bases: np.ndarray
    bits: np.ndarray


@dataclass(frozen=True)
class Measurement:
    bits: BitString
    eve: EveRecord | None
    tapped: bool


def _as_basis_array(bases) -> np.ndarray:
    if isinstance(bases, np.ndarray):
        arr = bases.astype(np.uint8, copy=False)
    else:
        arr = np.array([int(b) for b in bases], dtype=np.uint8)
    if arr.size and arr.max() > 1:
        raise ValueError("bases must be 0 (rectilinear) or 1 (diagonal)")
    return arr


def prepare(bits: BitString | np.ndarray, bases, sender: Party = Party.ALICE, frame_id: int = 0) -> QubitFrame:
    b = bits.bits if isinstance(bits, BitString) else np.asarray(bits, dtype=np.uint8)
    bs = _as_basis_array(bases)
    if b.size != bs.size:
        raise ValueError(f"length mismatch: {b.size} bits vs {bs.size} bases")
    return QubitFrame(b.copy(), bs.copy(), sender, frame_id)


def _measure(frame: QubitFrame, bases: np.ndarray, flip_prob: float, rng: np.random.Generator) -> np.ndarray:
    if frame.consumed:
        raise FrameConsumed(f"frame {frame.frame_id} was already measured")
    frame.consumed = True
    n = len(frame)
    match = frame.bases == bases
    coin = random_bits(rng, n)
    out = np.where(match, frame.bits, coin).astype(np.uint8)
    if flip_prob > 0:
        out ^= (match & (rng.random(n) < flip_prob)).astype(np.uint8)
    return out


def transmit_and_measure(
    frame: QubitFrame,
    receiver_bases,
    noise_flip_prob: float,
    tap: EveTap,
    rng: np.random.Generator,
    eve_rng: np.random.Generator | None = None,
) -> Measurement:
    """Send ``frame`` through the channel and measure it in ``receiver_bases``.

    Under intercept-resend Eve measures first, keeps her outcome and
    re-prepares in her own basis; channel noise acts on the final leg.
    """
    rb = _as_basis_array(receiver_bases)
    if rb.size != len(frame):
        raise ValueError("receiver_bases length must equal frame length")
    if frame.consumed:
        raise FrameConsumed(f"frame {frame.frame_id} was already measured")
    if tap.kind == "full_mitm":
        raise ValueError("full_mitm is realised by two separate sessions, not a tap")
    record = None
    if tap.kind == "intercept_resend":
        erng = eve_rng if eve_rng is not None else rng
        if tap.basis_policy == "random":
            eb = random_bits(erng, len(frame))
        else:
            eb = np.full(len(frame), int(tap.basis_policy), dtype=np.uint8)
        ebits = _measure(frame, eb, 0.0, erng)
        record = EveRecord(eb, ebits)
        frame = QubitFrame(ebits, eb, Party.EVE, frame.frame_id)
    return Measurement(BitString._wrap(_measure(frame, rb, noise_flip_prob, rng)), record, record is not None)
