"""Shared run record and the hooks an active Eve uses to interfere with a run."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from ..auth.lamport import LamportKeypair, lamport_keygen
from ..auth.owf import OwfConfig
from ..channel import Authenticator, Tamper
from ..core import (
    AdversarySpec,
    BitString,
    EveView,
    InitialKeys,
    Mode,
    ProtocolClassId,
    ProtocolConfig,
    SessionOutcome,
    Transcript,
    child_seeds,
    seeded_rng,
)
from ..qchannel import EveTap
from ..qke import SessionStats

SUMMARY_SCHEMA = "keylab.run/1"


@dataclass
class MitmPlan:
    """Eve splits the run into two half-sessions.

    ``as_bob`` is Eve's authenticator on the link with Alice (she poses as
    Bob); ``as_alice`` is the one she uses towards Bob.
    """

    as_bob: Authenticator | None
    as_alice: Authenticator | None
    seed: int = 0


@dataclass
class Interference:
    """An active Eve's handles on one run."""

    tap: EveTap = field(default_factory=EveTap.none)
    tamper: Tamper | None = None
    mitm: MitmPlan | None = None


@dataclass(frozen=True)
class RunSeeds:
    """Seeds of the independent streams behind one run.

    ``alice`` and ``bob`` are the parties' private randomness ``r_A`` and
    ``r_B``; ``nature`` drives channel noise and measurement coins.
    """

    alice: int
    bob: int
    nature: int
    eve: int
    alice_aux: int
    bob_aux: int

    @classmethod
    def from_seed(cls, seed: int) -> "RunSeeds":
        return cls(*child_seeds(seed, 6))


@dataclass
class ProtocolRun:
    class_id: ProtocolClassId
    config: ProtocolConfig
    initial_keys: InitialKeys
    outcome: SessionOutcome
    transcript: Transcript
    party_randomness: tuple[int, int]
    eve_view: EveView
    stats: SessionStats | None = None
    next_keys: tuple[BitString | None, BitString | None] | None = None
    assumptions: tuple[str, ...] = ()
    seeds: RunSeeds | None = None
    artifacts: dict[str, Any] = field(default_factory=dict, repr=False)

    @property
    def secret_key(self) -> BitString | None:
        return self.outcome.secret_key

    def summary(self) -> dict[str, Any]:
        """JSON-ready report of the run; key material is reported by length only."""
        o = self.outcome
        st = self.stats
        return {
            "schema": SUMMARY_SCHEMA,
            "class": self.class_id.value,
            "seed": self.config.rng_seed,
            "outcome": "ABORT" if o.aborted else ("OK" if o.agreed else "MISMATCH"),
            "abort_reason": o.reason,
            "key_bits": len(o.s_A) if o.s_A is not None else 0,
            "qber": None if st is None or st.qber is None else round(float(st.qber), 6),
            "messages": len(self.transcript),
            "quantum_frames": len(self.transcript.quantum_frames),
            "transcript_sha256": self.transcript.digest(),
            "assumptions": list(self.assumptions),
            "stats": None if st is None else {k: (round(v, 6) if isinstance(v, float) else v) for k, v in vars(st).items()},
        }

    def dumps(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def make_eve_view(spec: AdversarySpec, transcript: Transcript, keys: InitialKeys, quantum_record=None, **notes) -> EveView:
    """Eve's view per her spec.

    Every mode at least eavesdrops on the classical channel, so the full
    transcript is always included; quantum data only under an active tap.
    """
    return EveView(
        spec=spec,
        classical=transcript,
        quantum_record=quantum_record if spec.quantum_mode == Mode.ACTIVE else None,
        revealed_keys=keys if spec.initial_keys_revealed else None,
        notes=dict(notes),
    )


def owf_for(config: ProtocolConfig) -> OwfConfig:
    return OwfConfig.strong() if config.owf_mode == "strong" else OwfConfig.toy(config.toy_owf_bits)


def lamport_pool(config: ProtocolConfig, rng: np.random.Generator) -> list[LamportKeypair]:
    owf = owf_for(config)
    return [lamport_keygen(owf, config.lamport_digest_bits, rng) for _ in range(config.lamport_pool)]


def symmetric_keys(length: int, rng: np.random.Generator) -> InitialKeys:
    return InitialKeys.symmetric(BitString.random(length, rng))


def asymmetric_keys(config: ProtocolConfig, rng: np.random.Generator) -> InitialKeys:
    """Lamport pools: ``x_*`` private keypairs, ``y_*`` the matching public keys."""
    xa = lamport_pool(config, rng)
    xb = lamport_pool(config, rng)
    return InitialKeys.asymmetric(
        x_A=tuple(xa), y_A=tuple(kp.public for kp in xa), x_B=tuple(xb), y_B=tuple(kp.public for kp in xb)
    )


def split_seed(config: ProtocolConfig, rng: np.random.Generator | None) -> tuple[int, int]:
    """(key-courier seed, session seed) for one run."""
    if rng is None:
        rng = seeded_rng(config.rng_seed)
    s = child_seeds(int(rng.integers(0, 2**63, dtype=np.int64)), 2)
    return s[0], s[1]


Runner = Callable[..., ProtocolRun]
