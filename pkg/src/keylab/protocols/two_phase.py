"""Signature-authenticated first session, MAC-authenticated thereafter.

Session 1 runs SIG-QKE from the Lamport initial keys; every session
reserves a MAC key for the next one, so sessions 2..N run MAC-QKE and
depend on no computational assumption.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from ..core import AdversarySpec, BitString, InitialKeys, ProtocolConfig, draw_seed, seeded_rng
from .ake import run_mac_qke, run_sig_qke
from .base import Interference, ProtocolRun, asymmetric_keys

FIRST_SESSION_ASSUMPTIONS = ("one-way function (short-term, session 1 only)",)


@dataclass(frozen=True)
class ChainState:
    """Where a chain stopped; pass it back to :func:`run_two_phase` to resume."""

    next_index: int
    alice_key: BitString | None
    bob_key: BitString | None
    halted: bool = False
    reason: str = ""


class TwoPhaseChain(list):
    """The list of session runs plus the resumable chain state."""

    state: ChainState


def run_two_phase(
    config: ProtocolConfig,
    session_count: int,
    rng: np.random.Generator | None = None,
    *,
    initial_keys: InitialKeys | None = None,
    spec: AdversarySpec = AdversarySpec(),
    eve_factory: Callable[[int, list[ProtocolRun]], Interference | None] | None = None,
    resume: ChainState | None = None,
) -> TwoPhaseChain:
    """Run sessions ``1..session_count`` (or resume from ``resume``).

    ``eve_factory(i, runs_so_far)`` may return an interference plan for
    session ``i``.  An abort halts the chain; ``chain.state`` records where.
    """
    if session_count < 1:
        raise ValueError("session_count must be at least 1")
    config = config.replace(reserve_recycle=True)
    rng = rng if rng is not None else seeded_rng(config.rng_seed)
    chain = TwoPhaseChain()
    if resume is None:
        if initial_keys is None:
            initial_keys = asymmetric_keys(config, seeded_rng(draw_seed(rng)))
        if initial_keys.kind != "asymmetric":
            raise ValueError("the two-phase chain starts from asymmetric initial keys")
        state = ChainState(1, None, None)
    else:
        state = resume
    for i in range(state.next_index, session_count + 1):
        eve = eve_factory(i, list(chain)) if eve_factory else None
        if i == 1:
            run = run_sig_qke(config, rng, initial_keys=initial_keys, spec=spec, eve=eve)
            run.assumptions = FIRST_SESSION_ASSUMPTIONS
        else:
            run = run_mac_qke(
                config,
                rng,
                initial_keys=InitialKeys.symmetric(state.alice_key),
                bob_keys=InitialKeys.symmetric(state.bob_key),
                spec=spec,
                eve=eve,
            )
            run.assumptions = ()
        run.artifacts["session_index"] = i
        chain.append(run)
        if run.outcome.aborted or run.next_keys is None:
            state = replace(state, next_index=i, halted=True, reason=run.outcome.reason or "abort")
            break
        state = ChainState(i + 1, run.next_keys[0], run.next_keys[1])
    chain.state = state
    return chain
