"""Domain types shared by every module.

Keys, transcripts and outcomes are immutable once built.  Randomness is
always drawn from numpy's PCG64 generator seeded through ``SeedSequence`` so
that a single 64-bit integer reproduces a whole experiment.
"""

from __future__ import annotations

import enum
import hashlib
import json
import struct
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator

import numpy as np


class KeylabError(Exception):
    """Base class for every error raised by the package."""


class ProtocolAbort(KeylabError):
    """A session ended in the abort outcome."""

    reason = "abort"


# ---------------------------------------------------------------------------
# BitString
# ---------------------------------------------------------------------------


class BitString:
    """Immutable sequence of bits backed by a read-only ``uint8`` array."""

    __slots__ = ("_bits",)

    def __init__(self, bits: Iterable[int] | np.ndarray = ()):
        arr = np.array(bits, dtype=np.uint8).reshape(-1)
        if arr.size and arr.max() > 1:
            raise ValueError("bits must be 0 or 1")
        arr.flags.writeable = False
        self._bits = arr

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "BitString":
        # trusted path: arr is already a fresh 0/1 uint8 vector
        obj = cls.__new__(cls)
        arr = np.ascontiguousarray(arr, dtype=np.uint8)
        arr.flags.writeable = False
        obj._bits = arr
        return obj

    @classmethod
    def zeros(cls, length: int) -> "BitString":
        return cls._wrap(np.zeros(length, dtype=np.uint8))

    @classmethod
    def from_str(cls, text: str) -> "BitString":
        text = text.replace(" ", "").replace("_", "")
        if set(text) - {"0", "1"}:
            raise ValueError(f"not a bit string: {text!r}")
        return cls._wrap(np.frombuffer(text.encode(), dtype=np.uint8) - ord("0"))

    @classmethod
    def from_int(cls, value: int, length: int) -> "BitString":
        """Big-endian encoding of ``value`` in exactly ``length`` bits."""
        if value < 0 or value >> length:
            raise ValueError(f"{value} does not fit in {length} bits")
        return cls.from_str(format(value, f"0{length}b") if length else "")

    @classmethod
    def from_bytes(cls, data: bytes, length: int | None = None) -> "BitString":
        bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
        if length is not None:
            if length > bits.size:
                raise ValueError("length exceeds available bits")
            bits = bits[:length]
        return cls._wrap(bits)

    @classmethod
    def random(cls, length: int, rng: np.random.Generator) -> "BitString":
        return cls._wrap(random_bits(rng, length))

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    @property
    def length(self) -> int:
        return int(self._bits.size)

    def __len__(self) -> int:
        return int(self._bits.size)

    def __iter__(self) -> Iterator[int]:
        return (int(b) for b in self._bits)

    def __getitem__(self, idx):
        if isinstance(idx, (int, np.integer)):
            return int(self._bits[idx])
        return BitString._wrap(self._bits[idx].copy())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitString):
            return NotImplemented
        return self._bits.size == other._bits.size and bool(
            np.array_equal(self._bits, other._bits)
        )

    def __hash__(self) -> int:
        return hash((self._bits.size, self._bits.tobytes()))

    def __xor__(self, other: "BitString") -> "BitString":
        return xor(self, other)

    def __add__(self, other: "BitString") -> "BitString":
        return BitString._wrap(np.concatenate([self._bits, other._bits]))

    def __str__(self) -> str:
        return (self._bits + ord("0")).tobytes().decode()

    def __repr__(self) -> str:
        s = str(self)
        if len(s) > 40:
            s = s[:32] + f"...({len(self)} bits)"
        return f"BitString('{s}')"

    def to_int(self) -> int:
        return int(str(self), 2) if len(self) else 0

    def to_bytes(self) -> bytes:
        """Pack MSB-first; the final byte is zero-padded on the right."""
        return np.packbits(self._bits).tobytes()

    def hex(self) -> str:
        return self.to_bytes().hex()

    def weight(self) -> int:
        return int(self._bits.sum())


def xor(a: BitString, b: BitString) -> BitString:
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    return BitString._wrap(np.bitwise_xor(a.bits, b.bits))


# ---------------------------------------------------------------------------
# Randomness
# ---------------------------------------------------------------------------


def seeded_rng(seed: int) -> np.random.Generator:
    """PCG64 generator seeded via ``SeedSequence(seed)``.

    This is exactly ``numpy.random.default_rng(seed)``; bits are drawn with
    :func:`random_bits`.  Golden vector: seed 0 yields first bits 01111101.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def random_bits(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.integers(0, 2, size=n, dtype=np.uint8)


def child_seeds(seed: int, count: int) -> list[int]:
    """Derive ``count`` independent 64-bit seeds from ``seed``."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


def draw_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**63, dtype=np.int64))


# ---------------------------------------------------------------------------
# Protocol identities and adversaries
# ---------------------------------------------------------------------------


class ProtocolClassId(str, enum.Enum):
    OOB = "OOB"
    PGE = "PGE"
    SEB = "SEB"
    MAC_SKE = "MAC_SKE"
    SIG_SKE = "SIG_SKE"
    MAC_QKE = "MAC_QKE"
    SIG_QKE = "SIG_QKE"

    @property
    def is_quantum(self) -> bool:
        return self in (ProtocolClassId.MAC_QKE, ProtocolClassId.SIG_QKE)

    @classmethod
    def parse(cls, name: str) -> "ProtocolClassId":
        key = name.strip().upper().replace("-", "_")
        try:
            return cls[key]
        except KeyError:
            raise ValueError(f"unknown protocol class {name!r}") from None


class Mode(str, enum.Enum):
    PASSIVE = "p"
    DELAYED = "d"
    ACTIVE = "a"

    def __le__(self, other: "Mode") -> bool:
        order = {"p": 0, "d": 1, "a": 2}
        return order[self.value] <= order[other.value]


@dataclass(frozen=True)
class AdversarySpec:
    """Eve's power per channel.

    Passive on the quantum channel means no access at all.  Delayed means
    passive until the run completes; afterwards Eve holds the recorded
    classical transcript and nothing from the quantum channel.
    """

    classical_mode: Mode = Mode.PASSIVE
    quantum_mode: Mode = Mode.PASSIVE
    initial_keys_revealed: bool = False

    @property
    def label(self) -> str:
        return f"({self.classical_mode.value},{self.quantum_mode.value})"

    @classmethod
    def parse(cls, text: str, revealed: bool = False) -> "AdversarySpec":
        parts = text.strip().strip("()").split(",")
        if len(parts) != 2:
            raise ValueError(f"adversary must look like 'a,d', got {text!r}")
        c, q = (Mode(p.strip().lower()) for p in parts)
        return cls(c, q, revealed)

    def weaker_or_equal(self, other: "AdversarySpec") -> bool:
        return (
            self.classical_mode <= other.classical_mode
            and self.quantum_mode <= other.quantum_mode
            and (other.initial_keys_revealed or not self.initial_keys_revealed)
        )


TABLE3_COLUMNS: tuple[AdversarySpec, ...] = tuple(
    AdversarySpec.parse(c, revealed=True) for c in ("p,p", "d,d", "a,p", "a,d", "a,a")
)


@dataclass(frozen=True)
class ProtocolConfig:
    n: int = 256
    ell: int = 256
    qber_abort_threshold: float = 0.11
    noise_flip_prob: float = 0.0
    sample_fraction: float = 0.5
    rng_seed: int = 0
    target_epsilon: float = 2.0**-32
    mac_tag_bits: int = 32
    mac_pads: int = 256
    lamport_digest_bits: int = 64
    lamport_pool: int = 8
    owf_mode: str = "strong"
    toy_owf_bits: int = 12
    gm_modulus_bits: int = 32
    cascade_rounds: int = 4
    reserve_recycle: bool = True

    def __post_init__(self):
        if not 0 <= self.qber_abort_threshold < 0.5:
            raise ValueError("qber_abort_threshold must lie in [0, 0.5)")
        if not 0 <= self.noise_flip_prob < 0.5:
            raise ValueError("noise_flip_prob must lie in [0, 0.5)")
        if not 0 < self.sample_fraction < 1:
            raise ValueError("sample_fraction must lie in (0, 1)")
        if self.n <= 0 or self.ell <= 0:
            raise ValueError("n and ell must be positive")
        if not 0 < self.target_epsilon < 1:
            raise ValueError("target_epsilon must lie in (0, 1)")
        if self.owf_mode not in ("strong", "toy"):
            raise ValueError("owf_mode must be 'strong' or 'toy'")

    @property
    def mac_key_bits(self) -> int:
        """Length of one session's Wegman-Carter key (polynomial key + pads)."""
        return self.mac_tag_bits * (1 + self.mac_pads)

    def replace(self, **changes) -> "ProtocolConfig":
        from dataclasses import replace

        return replace(self, **changes)

    def as_dict(self) -> dict[str, Any]:
        from dataclasses import asdict

        return asdict(self)


# ---------------------------------------------------------------------------
# Keys, transcripts, outcomes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InitialKeys:
    """Pre-distributed key material.

    ``symmetric`` keys are one shared BitString.  ``asymmetric`` keys follow
    the usual split: Alice holds ``(x_A, y_B)`` and Bob holds ``(x_B, y_A)``.
    """

    kind: str = "none"
    k: BitString | None = None
    x_A: Any = None
    y_A: Any = None
    x_B: Any = None
    y_B: Any = None

    def __post_init__(self):
        if self.kind not in ("none", "symmetric", "asymmetric"):
            raise ValueError(f"unknown initial-key kind {self.kind!r}")
        if self.kind == "symmetric" and self.k is None:
            raise ValueError("symmetric initial keys need k")
        if self.kind == "asymmetric" and None in (self.x_A, self.y_A, self.x_B, self.y_B):
            raise ValueError("asymmetric initial keys need x_A, y_A, x_B, y_B")

    @classmethod
    def none(cls) -> "InitialKeys":
        return cls("none")

    @classmethod
    def symmetric(cls, k: BitString) -> "InitialKeys":
        return cls("symmetric", k=k)

    @classmethod
    def asymmetric(cls, x_A, y_A, x_B, y_B) -> "InitialKeys":
        return cls("asymmetric", x_A=x_A, y_A=y_A, x_B=x_B, y_B=y_B)

    def alice_view(self):
        if self.kind == "symmetric":
            return self.k
        if self.kind == "asymmetric":
            return (self.x_A, self.y_B)
        return None

    def bob_view(self):
        if self.kind == "symmetric":
            return self.k
        if self.kind == "asymmetric":
            return (self.x_B, self.y_A)
        return None


class Party(str, enum.Enum):
    ALICE = "A"
    BOB = "B"
    KDC = "K"
    EVE = "E"


_PARTY_CODE = {Party.ALICE: 0, Party.BOB: 1, Party.KDC: 2, Party.EVE: 3}
_CODE_PARTY = {v: k for k, v in _PARTY_CODE.items()}


class MsgType(enum.IntEnum):
    """One-byte message type tags used in the binary transcript layout."""

    BASES_BOB = 0x01
    SIFT_MASK = 0x02
    SAMPLE_ALICE = 0x03
    SAMPLE_BOB = 0x04
    PARITIES = 0x05
    PARITY_REQUEST = 0x06
    VERIFY_HASH = 0x07
    VERIFY_RESULT = 0x08
    PA_SEED = 0x09
    ABORT = 0x0A
    SEB_CIPHERTEXT = 0x10
    GM_PUBKEY = 0x11
    GM_CIPHERTEXT = 0x12
    LAMPORT_REFILL = 0x13
    KDC_TRANSPORT = 0x14
    APPLICATION = 0x20


@dataclass(frozen=True)
class Message:
    sender: Party
    kind: MsgType
    payload: BitString
    auth: BitString | None = None
    link: str = ""

    def encode(self) -> bytes:
        out = bytearray()
        out += struct.pack("<BBI", _PARTY_CODE[self.sender], int(self.kind), len(self.payload))
        out += self.payload.to_bytes()
        if self.auth is None:
            out += struct.pack("<B", 0)
        else:
            out += struct.pack("<BI", 1, len(self.auth))
            out += self.auth.to_bytes()
        return bytes(out)

    def signed_bytes(self, seq: int) -> bytes:
        """Bytes covered by a tag or signature: sequence number, header, payload."""
        head = struct.pack("<IBBI", seq, _PARTY_CODE[self.sender], int(self.kind), len(self.payload))
        return head + self.payload.to_bytes()

    def to_json(self) -> dict[str, Any]:
        d = {
            "sender": self.sender.value,
            "kind": self.kind.name,
            "payload_bits": len(self.payload),
            "payload_hex": self.payload.hex(),
            "auth_bits": None if self.auth is None else len(self.auth),
            "auth_hex": None if self.auth is None else self.auth.hex(),
        }
        if self.link:
            d["link"] = self.link
        return d


@dataclass(frozen=True)
class FrameRecord:
    frame_id: int
    sender: Party
    tapped: bool
    n_qubits: int


TRANSCRIPT_MAGIC = b"KLTR"
TRANSCRIPT_VERSION = 1


class Transcript:
    """Append-only record of a run.

    The classical communication ``c`` is the concatenation of the encoded
    classical messages; quantum frame records are logged separately and are
    not part of ``c``.
    """

    def __init__(self):
        self._messages: list[Message] = []
        self._frames: list[FrameRecord] = []
        self._frozen = False

    @property
    def frozen(self) -> bool:
        return self._frozen

    def freeze(self) -> "Transcript":
        self._frozen = True
        return self

    def append(self, msg: Message) -> None:
        if self._frozen:
            raise KeylabError("transcript is frozen")
        self._messages.append(msg)

    def log_frame(self, rec: FrameRecord) -> None:
        if self._frozen:
            raise KeylabError("transcript is frozen")
        self._frames.append(rec)

    def extend(self, other: "Transcript", link: str = "") -> None:
        for m in other.classical_messages:
            self.append(Message(m.sender, m.kind, m.payload, m.auth, link or m.link))
        for f in other.quantum_frames:
            self.log_frame(f)

    @property
    def classical_messages(self) -> tuple[Message, ...]:
        return tuple(self._messages)

    @property
    def quantum_frames(self) -> tuple[FrameRecord, ...]:
        return tuple(self._frames)

    def __len__(self) -> int:
        return len(self._messages)

    def of_kind(self, kind: MsgType) -> list[Message]:
        return [m for m in self._messages if m.kind == kind]

    def classical_bytes(self) -> bytes:
        return b"".join(m.encode() for m in self._messages)

    def to_bytes(self) -> bytes:
        """Binary layout, all integers little-endian.

        ``"KLTR" | version:u8 | n_msgs:u32 | msg* | n_frames:u32 | frame*``
        where ``msg = sender:u8 kind:u8 payload_bits:u32 payload
        has_auth:u8 [auth_bits:u32 auth]`` and ``frame = frame_id:u32
        sender:u8 tapped:u8 n_qubits:u32``.  Bit payloads are packed MSB-first.
        """
        out = bytearray(TRANSCRIPT_MAGIC)
        out += struct.pack("<BI", TRANSCRIPT_VERSION, len(self._messages))
        out += self.classical_bytes()
        out += struct.pack("<I", len(self._frames))
        for f in self._frames:
            out += struct.pack("<IBBI", f.frame_id, _PARTY_CODE[f.sender], int(f.tapped), f.n_qubits)
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Transcript":
        if data[:4] != TRANSCRIPT_MAGIC:
            raise ValueError("bad transcript magic")
        version, count = struct.unpack_from("<BI", data, 4)
        if version != TRANSCRIPT_VERSION:
            raise ValueError(f"unsupported transcript version {version}")
        pos = 9
        t = cls()
        for _ in range(count):
            sender, kind, nbits = struct.unpack_from("<BBI", data, pos)
            pos += 6
            nbytes = (nbits + 7) // 8
            payload = BitString.from_bytes(data[pos : pos + nbytes], nbits)
            pos += nbytes
            (has_auth,) = struct.unpack_from("<B", data, pos)
            pos += 1
            auth = None
            if has_auth:
                (abits,) = struct.unpack_from("<I", data, pos)
                pos += 4
                abytes = (abits + 7) // 8
                auth = BitString.from_bytes(data[pos : pos + abytes], abits)
                pos += abytes
            t.append(Message(_CODE_PARTY[sender], MsgType(kind), payload, auth))
        (nframes,) = struct.unpack_from("<I", data, pos)
        pos += 4
        for _ in range(nframes):
            fid, sender, tapped, nq = struct.unpack_from("<IBBI", data, pos)
            pos += 10
            t.log_frame(FrameRecord(fid, _CODE_PARTY[sender], bool(tapped), nq))
        return t.freeze()

    def digest(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()

    def to_json(self) -> dict[str, Any]:
        return {
            "classical_messages": [m.to_json() for m in self._messages],
            "quantum_frames": [
                {"frame_id": f.frame_id, "sender": f.sender.value, "tapped": f.tapped, "n_qubits": f.n_qubits}
                for f in self._frames
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


@dataclass(frozen=True)
class SessionOutcome:
    """Either abort (both keys ``None``) or the pair of candidate keys.

    ``None`` stands for the abort symbol; an empty BitString is a legitimate
    (if useless) key and is never used to signal abort.
    """

    s_A: BitString | None = None
    s_B: BitString | None = None
    reason: str = ""

    @classmethod
    def abort(cls, reason: str = "abort") -> "SessionOutcome":
        return cls(None, None, reason)

    @property
    def aborted(self) -> bool:
        return self.s_A is None and self.s_B is None

    @property
    def secret_key(self) -> BitString | None:
        if self.s_A is not None and self.s_B is not None and self.s_A == self.s_B:
            return self.s_A
        return None

    @property
    def agreed(self) -> bool:
        return self.secret_key is not None


@dataclass
class EveView:
    """Everything Eve observed during a run, per her adversary spec."""

    spec: AdversarySpec = field(default_factory=AdversarySpec)
    classical: Transcript | None = None
    quantum_record: Any = None
    revealed_keys: InitialKeys | None = None
    notes: dict[str, Any] = field(default_factory=dict)
