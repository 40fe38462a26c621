"""Key-distribution-centre mediated mode.

The centre shares a long-term SEB key with each user, issues a fresh
session key to Alice and Bob by encrypted, MAC-tagged transport, and the
two then run MAC-authenticated QKE with the session key as their initial
key.  The centre's record is returned so experiments can compromise it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

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
    ProtocolConfig,
    SessionOutcome,
    Transcript,
    child_seeds,
    seeded_rng,
)
from .ake import run_mac_qke
from .base import Interference, ProtocolRun, make_eve_view, split_seed
from .classical import seb_decrypt, seb_key_bits, seb_split


@dataclass
class KdcState:
    """Everything the centre holds or saw."""

    long_term: dict[str, BitString]
    session_key: BitString
    transport: Transcript
    observed: Transcript | None = None
    delivered: dict[str, BitString] = field(default_factory=dict)


def transport_config(config: ProtocolConfig) -> ProtocolConfig:
    """SEB parameters for carrying one session's MAC key."""
    return config.replace(n=config.mac_key_bits)


def run_kdc_mediated(
    config: ProtocolConfig,
    rng: np.random.Generator | None = None,
    *,
    spec: AdversarySpec = AdversarySpec(),
    long_term: dict[str, BitString] | None = None,
    eve_factory: Callable[[KdcState], Interference | None] | None = None,
) -> tuple[ProtocolRun, KdcState]:
    """``eve_factory`` is called after key issue and before the QKE phase."""
    courier, session = split_seed(config, rng)
    tcfg = transport_config(config)
    if long_term is None:
        crng = seeded_rng(courier)
        long_term = {p: BitString.random(seb_key_bits(tcfg), crng) for p in ("A", "B")}
    kdc_seed, qke_seed = child_seeds(session, 2)
    session_key = BitString.random(config.mac_key_bits, seeded_rng(kdc_seed))
    transport = Transcript()
    state = KdcState(dict(long_term), session_key, transport)
    try:
        for party, peer in (("A", Party.ALICE), ("B", Party.BOB)):
            k = long_term[party]
            k_enc, k_mac = seb_split(tcfg, k)
            ch = ClassicalChannel(
                Endpoint(Party.KDC, MacAuthenticator.from_bits(k_mac, config.mac_tag_bits)),
                Endpoint(peer, MacAuthenticator.from_bits(k_mac, config.mac_tag_bits)),
                link=f"K~{party}",
            )
            got = ch.send(ch.a, MsgType.KDC_TRANSPORT, session_key ^ prg_expand(k_enc, len(session_key)))
            state.delivered[party] = seb_decrypt(tcfg, k, got)
            transport.extend(ch.transcript)
    except ProtocolAbort as exc:
        transport.freeze()
        run = ProtocolRun(
            class_id=run_mac_qke.class_id,
            config=config,
            initial_keys=InitialKeys.none(),
            outcome=SessionOutcome.abort(exc.reason),
            transcript=transport,
            party_randomness=(0, 0),
            eve_view=make_eve_view(spec, transport, InitialKeys.none()),
        )
        return run, state
    transport.freeze()
    eve = eve_factory(state) if eve_factory else None
    run = run_mac_qke(
        config,
        seeded_rng(qke_seed),
        initial_keys=InitialKeys.symmetric(state.delivered["A"]),
        bob_keys=InitialKeys.symmetric(state.delivered["B"]),
        spec=spec,
        eve=eve,
    )
    state.observed = run.transcript
    run.artifacts["kdc_transport"] = transport
    return run, state
