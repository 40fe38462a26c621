"""Key establishment classes that need no quantum channel: OOB, PGE, SEB."""

from __future__ import annotations

import numpy as np

from ..auth.owf import prg_expand
from ..channel import ClassicalChannel, Endpoint, MacAuthenticator
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
from .base import Interference, ProtocolRun, RunSeeds, make_eve_view, split_seed, symmetric_keys


def _finish(class_id, config, keys, outcome, transcript, seeds, spec, assumptions=(), **artifacts) -> ProtocolRun:
    transcript.freeze()
    return ProtocolRun(
        class_id=class_id,
        config=config,
        initial_keys=keys,
        outcome=outcome,
        transcript=transcript,
        party_randomness=(seeds.alice, seeds.bob),
        eve_view=make_eve_view(spec, transcript, keys),
        assumptions=tuple(assumptions),
        seeds=seeds,
        artifacts=artifacts,
    )


def run_oob(
    config: ProtocolConfig,
    rng: np.random.Generator | None = None,
    *,
    initial_keys: InitialKeys | None = None,
    spec: AdversarySpec = AdversarySpec(),
    eve: Interference | None = None,
) -> ProtocolRun:
    """A courier preloads both parties with ``s = k``; nothing is sent in band."""
    courier, session = split_seed(config, rng)
    keys = initial_keys or symmetric_keys(config.n, seeded_rng(courier))
    s = keys.k
    return _finish(ProtocolClassId.OOB, config, keys, SessionOutcome(s, s), Transcript(), RunSeeds.from_seed(session), spec)


def run_pge(
    config: ProtocolConfig,
    rng: np.random.Generator | None = None,
    *,
    initial_keys: InitialKeys | None = None,
    spec: AdversarySpec = AdversarySpec(),
    eve: Interference | None = None,
) -> ProtocolRun:
    """Both parties expand the shared seed: ``s = prg_expand(k, n)``."""
    courier, session = split_seed(config, rng)
    keys = initial_keys or symmetric_keys(config.ell, seeded_rng(courier))
    if keys.kind != "symmetric":
        raise ValueError("PGE needs symmetric initial keys")
    s = prg_expand(keys.k, config.n)
    return _finish(
        ProtocolClassId.PGE, config, keys, SessionOutcome(s, s), Transcript(), RunSeeds.from_seed(session), spec,
        assumptions=("pseudorandom generator",),
    )


def seb_key_bits(config: ProtocolConfig) -> int:
    """Encryption subkey (``ell`` bits) followed by a one-pad Wegman-Carter key."""
    return config.ell + 2 * config.mac_tag_bits


def seb_split(config: ProtocolConfig, k: BitString) -> tuple[BitString, BitString]:
    return k[: config.ell], k[config.ell : seb_key_bits(config)]


def seb_decrypt(config: ProtocolConfig, k: BitString, ciphertext: BitString) -> BitString:
    k_enc, _ = seb_split(config, k)
    return ciphertext ^ prg_expand(k_enc, len(ciphertext))


def run_seb(
    config: ProtocolConfig,
    rng: np.random.Generator | None = None,
    *,
    initial_keys: InitialKeys | None = None,
    spec: AdversarySpec = AdversarySpec(),
    eve: Interference | None = None,
    link: str = "",
) -> ProtocolRun:
    """Alice picks ``s`` and sends ``s XOR prg_expand(k_enc, n)`` with a WC tag."""
    courier, session = split_seed(config, rng)
    keys = initial_keys or symmetric_keys(seb_key_bits(config), seeded_rng(courier))
    if keys.kind != "symmetric" or len(keys.k) < seb_key_bits(config):
        raise ValueError(f"SEB needs a symmetric key of {seb_key_bits(config)} bits")
    seeds = RunSeeds.from_seed(session)
    k_enc, k_mac = seb_split(config, keys.k)
    channel = ClassicalChannel(
        Endpoint(Party.ALICE, MacAuthenticator.from_bits(k_mac, config.mac_tag_bits)),
        Endpoint(Party.BOB, MacAuthenticator.from_bits(k_mac, config.mac_tag_bits)),
        tamper=eve.tamper if eve else None,
        link=link,
    )
    s = BitString.random(config.n, seeded_rng(seeds.alice))
    try:
        c = channel.send(channel.a, MsgType.SEB_CIPHERTEXT, s ^ prg_expand(k_enc, config.n))
        outcome = SessionOutcome(s, seb_decrypt(config, keys.k, c))
    except ProtocolAbort as exc:
        outcome = SessionOutcome.abort(exc.reason)
    return _finish(
        ProtocolClassId.SEB, config, keys, outcome, channel.transcript, seeds, spec,
        assumptions=("pseudorandom generator",),
    )


run_oob.class_id = ProtocolClassId.OOB  # type: ignore[attr-defined]
run_pge.class_id = ProtocolClassId.PGE  # type: ignore[attr-defined]
run_seb.class_id = ProtocolClassId.SEB  # type: ignore[attr-defined]
