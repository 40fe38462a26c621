"""In-process classical channel with optional per-message authentication.

Every message carries a link-wide sequence number.  The sender seals the
message, an optional tamper hook (Eve) may replace it in flight, the
delivered version is appended to the transcript and the receiver checks
it.  A failed check raises :class:`AuthenticationFailure`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Protocol

import numpy as np

from .auth.lamport import (
    KeyPoolEmpty,
    LamportKeypair,
    LamportPublicKey,
    lamport_keygen,
    lamport_sign,
    lamport_verify,
)
from .auth.owf import OwfConfig
from .auth.wcmac import WcMacKey, wc_tag, wc_verify
from .core import BitString, Message, MsgType, Party, ProtocolAbort, Transcript


class AuthenticationFailure(ProtocolAbort):
    reason = "auth-reject"


class ProtocolViolation(ProtocolAbort):
    reason = "protocol-violation"


class Authenticator(Protocol):
    scheme: str

    def seal(self, seq: int, data: BitString) -> BitString: ...

    def check(self, seq: int, data: BitString, auth: BitString | None) -> bool: ...


class MacAuthenticator:
    """One party's copy of a Wegman-Carter key; pad ``i`` serves message ``i``."""

    scheme = "mac"

    def __init__(self, key: WcMacKey):
        self.key = key

    @classmethod
    def from_bits(cls, bits: BitString, k: int = 32) -> "MacAuthenticator":
        return cls(WcMacKey.from_bits(bits, k))

    def seal(self, seq: int, data: BitString) -> BitString:
        return wc_tag(self.key, data, index=seq)

    def check(self, seq: int, data: BitString, auth: BitString | None) -> bool:
        return wc_verify(self.key, data, auth, index=seq)

    def needs_refill(self) -> bool:
        return False


class SignatureAuthenticator:
    """Lamport signing pool for outgoing messages, peer public pool for incoming.

    When only one unused keypair remains, the next send is preceded by a
    refill message: a batch of fresh public keys signed with that last
    keypair.  The receiver appends the batch to its copy of the peer pool.
    """

    scheme = "sig"

    def __init__(
        self,
        own: list[LamportKeypair],
        peer: list[LamportPublicKey],
        rng: np.random.Generator | None = None,
        refill_batch: int = 8,
    ):
        self.own = list(own)
        self.peer = list(peer)
        self.rng = rng
        self.refill_batch = refill_batch
        self._next_own = 0
        self._next_peer = 0
        self.signatures_made = 0

    def _owf_m(self) -> tuple[OwfConfig, int]:
        kp = self.own[0] if self.own else None
        if kp is None:
            raise KeyPoolEmpty("no signing keys")
        return kp.owf, kp.m

    def needs_refill(self) -> bool:
        return self.rng is not None and len(self.own) - self._next_own == 1

    def make_refill(self) -> BitString:
        owf, m = self._owf_m()
        fresh = [lamport_keygen(owf, m, self.rng) for _ in range(self.refill_batch)]
        self.own.extend(fresh)
        payload = BitString()
        for kp in fresh:
            payload = payload + kp.public.encode()
        return payload

    def absorb_refill(self, payload: BitString) -> None:
        pk = self.peer[-1]
        width = 2 * pk.m * pk.owf.output_bits
        if len(payload) % width:
            raise ProtocolViolation("malformed key refill")
        for i in range(0, len(payload), width):
            self.peer.append(LamportPublicKey.decode(payload[i : i + width], pk.owf, pk.m))

    def seal(self, seq: int, data: BitString) -> BitString:
        if self._next_own >= len(self.own):
            raise KeyPoolEmpty("signing pool exhausted")
        kp = self.own[self._next_own]
        self._next_own += 1
        self.signatures_made += 1
        return lamport_sign(kp, data)

    def check(self, seq: int, data: BitString, auth: BitString | None) -> bool:
        if self._next_peer >= len(self.peer):
            return False
        pk = self.peer[self._next_peer]
        self._next_peer += 1
        return lamport_verify(pk, data, auth)


@dataclass
class Endpoint:
    party: Party
    auth: Authenticator | None = None


Tamper = Callable[[Message, int], Message]


def covered_bits(msg: Message, seq: int) -> BitString:
    return BitString.from_bytes(msg.signed_bytes(seq))


@dataclass
class ClassicalChannel:
    a: Endpoint
    b: Endpoint
    transcript: Transcript = field(default_factory=Transcript)
    tamper: Tamper | None = None
    link: str = ""
    seq: int = 0

    def other(self, ep: Endpoint) -> Endpoint:
        return self.b if ep is self.a else self.a

    def send(self, sender: Endpoint, kind: MsgType, payload: BitString) -> BitString:
        """Deliver ``payload`` to the other endpoint; returns what it received."""
        auth = sender.auth
        if auth is not None and getattr(auth, "needs_refill", lambda: False)():
            self._transmit(sender, MsgType.LAMPORT_REFILL, auth.make_refill())
        return self._transmit(sender, kind, payload)

    def _transmit(self, sender: Endpoint, kind: MsgType, payload: BitString) -> BitString:
        seq = self.seq
        self.seq += 1
        msg = Message(sender.party, kind, payload, link=self.link)
        if sender.auth is not None:
            msg = replace(msg, auth=sender.auth.seal(seq, covered_bits(msg, seq)))
        if self.tamper is not None:
            msg = self.tamper(msg, seq)
        self.transcript.append(msg)
        receiver = self.other(sender)
        if receiver.auth is not None:
            if msg.kind != kind or not receiver.auth.check(seq, covered_bits(msg, seq), msg.auth):
                raise AuthenticationFailure(f"message {seq} ({kind.name}) rejected by {receiver.party.value}")
            if kind == MsgType.LAMPORT_REFILL:
                receiver.auth.absorb_refill(msg.payload)
        return msg.payload
