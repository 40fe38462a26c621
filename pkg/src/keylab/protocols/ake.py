"""Authenticated key establishment built from unauthenticated exchanges.

An *exchange* is any two-party routine with the signature of
:func:`keylab.qke.qke_exchange`: it runs over a :class:`ClassicalChannel`
and returns a :class:`SessionResult`.  :func:`authenticate_uke` wraps an
exchange with per-message Wegman-Carter tags or Lamport signatures.  The
quantum classes use the BB84 exchange, the SKE classes the toy
Goldwasser-Micali key transport below.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Callable

import numpy as np

from ..auth.gm import MAX_MODULUS_BITS, GmPublicKey, tp_decrypt_bit, tp_encrypt_bit, tp_keygen
from ..channel import ClassicalChannel, Endpoint, MacAuthenticator, ProtocolViolation, SignatureAuthenticator
from ..core import (
    AdversarySpec,
    BitString,
    InitialKeys,
    MsgType,
    Party,
    ProtocolAbort,
    ProtocolClassId,
    ProtocolConfig,
    SessionOutcome,
    Transcript,
    seeded_rng,
)
from ..qchannel import EveTap
from ..qke import SessionResult, SessionRngs, SessionStats, qke_exchange
from .base import (
    Interference,
    ProtocolRun,
    RunSeeds,
    asymmetric_keys,
    make_eve_view,
    split_seed,
    symmetric_keys,
)

Exchange = Callable[..., SessionResult]

GM_FIELD_BITS = MAX_MODULUS_BITS


# ---------------------------------------------------------------------------
# Toy public-key transport (the unauthenticated classical exchange)
# ---------------------------------------------------------------------------


def encode_gm_public(pk: GmPublicKey) -> BitString:
    return BitString.from_int(pk.N, GM_FIELD_BITS) + BitString.from_int(pk.y, GM_FIELD_BITS)


def decode_gm_public(bits: BitString) -> GmPublicKey:
    if len(bits) != 2 * GM_FIELD_BITS:
        raise ProtocolViolation("public key has wrong length")
    N, y = bits[:GM_FIELD_BITS].to_int(), bits[GM_FIELD_BITS:].to_int()
    if N < 15 or not 0 < y < N:
        raise ProtocolViolation("malformed public key")
    return GmPublicKey(N, y)


def encode_gm_ciphertext(values: list[int]) -> BitString:
    return BitString.from_bytes(np.asarray(values, dtype=">u4").tobytes())


def decode_gm_ciphertext(bits: BitString) -> list[int]:
    if len(bits) % GM_FIELD_BITS:
        raise ProtocolViolation("ciphertext has wrong length")
    return [int(v) for v in np.frombuffer(bits.to_bytes(), dtype=">u4")]


def gm_encrypt(pk: GmPublicKey, s: BitString, rng: np.random.Generator) -> BitString:
    return encode_gm_ciphertext([tp_encrypt_bit(pk, int(b), rng) for b in s.bits])


def gm_transport_exchange(
    config: ProtocolConfig,
    channel: ClassicalChannel,
    rngs: SessionRngs,
    target_len: int,
    tap: EveTap = EveTap.none(),
) -> SessionResult:
    """Bob publishes a fresh toy public key; Alice encrypts a fresh ``s`` bitwise."""
    stats = SessionStats()
    try:
        keypair = tp_keygen(config.gm_modulus_bits, rngs.bob)
        pk = decode_gm_public(channel.send(channel.b, MsgType.GM_PUBKEY, encode_gm_public(keypair.public)))
        s_A = BitString.random(target_len, rngs.alice)
        got = decode_gm_ciphertext(channel.send(channel.a, MsgType.GM_CIPHERTEXT, gm_encrypt(pk, s_A, rngs.alice)))
        if len(got) != target_len:
            raise ProtocolViolation("ciphertext length does not match the key length")
        s_B = BitString([tp_decrypt_bit(keypair, c) for c in got])
        stats.messages = len(channel.transcript)
        return SessionResult(s_A, s_B, stats)
    except ProtocolAbort as exc:
        stats.messages = len(channel.transcript)
        return SessionResult(None, None, stats, None, exc)


gm_transport_exchange.quantum = False  # type: ignore[attr-defined]
qke_exchange.quantum = True  # type: ignore[attr-defined]


# ---------------------------------------------------------------------------
# The combinator
# ---------------------------------------------------------------------------

_SCHEMES = {"mac": "mac", "wc": "mac", "wc-mac": "mac", "sig": "sig", "lamport": "sig"}

_CLASS = {
    (True, "mac"): ProtocolClassId.MAC_QKE,
    (True, "sig"): ProtocolClassId.SIG_QKE,
    (False, "mac"): ProtocolClassId.MAC_SKE,
    (False, "sig"): ProtocolClassId.SIG_SKE,
}

_ASSUMPTIONS = {
    ProtocolClassId.MAC_QKE: (),
    ProtocolClassId.SIG_QKE: ("one-way function (short-term)",),
    ProtocolClassId.MAC_SKE: ("trapdoor predicate",),
    ProtocolClassId.SIG_SKE: ("trapdoor predicate", "one-way function"),
}


def _copy_pool(pool) -> list:
    # initial keys are a pre-distribution snapshot; each run signs with copies
    return [replace(kp) for kp in pool]


def make_authenticators(scheme: str, keys: InitialKeys, config: ProtocolConfig, seeds: RunSeeds):
    if scheme == "mac":
        if keys.kind != "symmetric" or len(keys.k) < config.mac_key_bits:
            raise ValueError(f"MAC authentication needs a symmetric key of {config.mac_key_bits} bits")
        bits = keys.k[: config.mac_key_bits]
        return (
            MacAuthenticator.from_bits(bits, config.mac_tag_bits),
            MacAuthenticator.from_bits(bits, config.mac_tag_bits),
        )
    if keys.kind != "asymmetric":
        raise ValueError("signature authentication needs asymmetric initial keys")
    return (
        SignatureAuthenticator(_copy_pool(keys.x_A), list(keys.y_B), seeded_rng(seeds.alice_aux), config.lamport_pool),
        SignatureAuthenticator(_copy_pool(keys.x_B), list(keys.y_A), seeded_rng(seeds.bob_aux), config.lamport_pool),
    )


def _split(pre: BitString | None, reserve: int):
    if pre is None:
        return None, None
    return pre[reserve:], pre[:reserve] if reserve else None


def authenticate_uke(uke_runner: Exchange, auth_scheme: str):
    """Turn an unauthenticated exchange into an authenticated runner.

    Every classical message of the exchange is sealed by its sender and
    checked by its receiver.  Quantum exchanges additionally reserve the
    first ``config.mac_key_bits`` output bits as the next session's MAC key
    when ``config.reserve_recycle`` is set.
    """
    try:
        scheme = _SCHEMES[auth_scheme.lower()]
    except KeyError:
        raise ValueError(f"unknown authentication scheme {auth_scheme!r}") from None
    quantum = bool(getattr(uke_runner, "quantum", False))
    class_id = _CLASS[(quantum, scheme)]

    def runner(
        config: ProtocolConfig,
        rng: np.random.Generator | None = None,
        *,
        initial_keys: InitialKeys | None = None,
        spec: AdversarySpec = AdversarySpec(),
        eve: Interference | None = None,
        link: str = "",
        bob_keys: InitialKeys | None = None,
    ) -> ProtocolRun:
        """``bob_keys`` overrides Bob's copy of the initial keys (they normally
        coincide with Alice's; after an undetected attack they may not)."""
        courier, session = split_seed(config, rng)
        if initial_keys is None:
            crng = seeded_rng(courier)
            initial_keys = symmetric_keys(config.mac_key_bits, crng) if scheme == "mac" else asymmetric_keys(config, crng)
        seeds = RunSeeds.from_seed(session)
        a_auth, b_auth = make_authenticators(scheme, initial_keys, config, seeds)
        if bob_keys is not None:
            b_auth = make_authenticators(scheme, bob_keys, config, seeds)[1]
        reserve = config.mac_key_bits if quantum and config.reserve_recycle else 0
        target = config.n + reserve
        eve = eve or Interference()
        rngs = SessionRngs(*(seeded_rng(s) for s in (seeds.alice, seeds.bob, seeds.nature, seeds.eve)))
        notes = {}
        if eve.mitm is None:
            channel = ClassicalChannel(Endpoint(Party.ALICE, a_auth), Endpoint(Party.BOB, b_auth), tamper=eve.tamper, link=link)
            res = uke_runner(config, channel, rngs, target, eve.tap)
            transcript = channel.transcript
            pre_A, pre_B, stats, record = res.s_A, res.s_B, res.stats, res.eve_record
            reason = res.abort.reason if res.abort else ""
        else:
            plan = eve.mitm
            erngs = SessionRngs.from_seed(plan.seed)
            left = ClassicalChannel(Endpoint(Party.ALICE, a_auth), Endpoint(Party.BOB, plan.as_bob), link=link + "A~E")
            r1 = uke_runner(config, left, SessionRngs(rngs.alice, erngs.bob, rngs.nature, erngs.eve), target)
            right = ClassicalChannel(Endpoint(Party.ALICE, plan.as_alice), Endpoint(Party.BOB, b_auth), link=link + "E~B")
            r2 = uke_runner(config, right, SessionRngs(erngs.alice, rngs.bob, erngs.nature, erngs.eve), target)
            transcript = Transcript()
            transcript.extend(left.transcript)
            transcript.extend(right.transcript)
            pre_A, pre_B, stats, record = r1.s_A, r2.s_B, r1.stats, None
            reason = next((r.abort.reason for r in (r1, r2) if r.abort), "")
            notes["key_with_alice"], notes["next_key_with_alice"] = _split(r1.s_B, reserve)
            notes["key_with_bob"], notes["next_key_with_bob"] = _split(r2.s_A, reserve)
        if pre_A is None or pre_B is None:
            outcome, next_keys = SessionOutcome.abort(reason or "abort"), None
        else:
            (s_A, n_A), (s_B, n_B) = _split(pre_A, reserve), _split(pre_B, reserve)
            outcome = SessionOutcome(s_A, s_B)
            next_keys = (n_A, n_B) if reserve else None
        transcript.freeze()
        return ProtocolRun(
            class_id=class_id,
            config=config,
            initial_keys=initial_keys,
            outcome=outcome,
            transcript=transcript,
            party_randomness=(seeds.alice, seeds.bob),
            eve_view=make_eve_view(spec, transcript, initial_keys, record, **notes),
            stats=stats,
            next_keys=next_keys,
            assumptions=_ASSUMPTIONS[class_id],
            seeds=seeds,
        )

    runner.__name__ = f"run_{class_id.value.lower()}"
    runner.class_id = class_id  # type: ignore[attr-defined]
    runner.exchange = uke_runner  # type: ignore[attr-defined]
    runner.scheme = scheme  # type: ignore[attr-defined]
    return runner


run_mac_qke = authenticate_uke(qke_exchange, "mac")
run_sig_qke = authenticate_uke(qke_exchange, "sig")
run_mac_ske = authenticate_uke(gm_transport_exchange, "mac")
run_sig_ske = authenticate_uke(gm_transport_exchange, "sig")


def run_ske(
    config: ProtocolConfig,
    variant: str | ProtocolClassId = ProtocolClassId.MAC_SKE,
    rng: np.random.Generator | None = None,
    **kwargs,
) -> ProtocolRun:
    """Toy public-key transport authenticated by WC-MAC or Lamport signatures."""
    v = ProtocolClassId.parse(variant) if isinstance(variant, str) else variant
    if v == ProtocolClassId.MAC_SKE:
        return run_mac_ske(config, rng, **kwargs)
    if v == ProtocolClassId.SIG_SKE:
        return run_sig_ske(config, rng, **kwargs)
    raise ValueError(f"{v.value} is not an SKE variant")
