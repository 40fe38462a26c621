"""keylab: a simulation lab for classical and quantum key establishment.

The package models the protocol classes OOB, PGE, SEB, SKE and QKE with a
common run record, lets an adversary with configurable power attack them,
and measures what she learns with recomputation oracles, distinguisher
games and statistical independence tests.
"""

from .adversary import (
    AttackResult,
    KdcResult,
    Table3Result,
    TwoPhaseResult,
    attack,
    kdc_compromise,
    mac_exhaustion_demo,
    mitm,
    table3_matrix,
    two_phase_attack,
)
from .core import (
    TABLE3_COLUMNS,
    AdversarySpec,
    BitString,
    InitialKeys,
    KeylabError,
    Mode,
    ProtocolAbort,
    ProtocolClassId,
    ProtocolConfig,
    SessionOutcome,
    Transcript,
    seeded_rng,
)
from .metrics import (
    attribution_check,
    distinguisher_game,
    independence_test,
    recompute_oracle,
    uniformity_test,
)
from .protocols import (
    ProtocolRun,
    authenticate_uke,
    run_kdc_mediated,
    run_mac_qke,
    run_oob,
    run_pge,
    run_seb,
    run_sig_qke,
    run_ske,
    run_two_phase,
)
from .qke import run_quke_session

__version__ = "0.1.0"

__all__ = [
    "TABLE3_COLUMNS",
    "AdversarySpec",
    "AttackResult",
    "BitString",
    "InitialKeys",
    "KdcResult",
    "KeylabError",
    "Mode",
    "ProtocolAbort",
    "ProtocolClassId",
    "ProtocolConfig",
    "ProtocolRun",
    "SessionOutcome",
    "Table3Result",
    "Transcript",
    "TwoPhaseResult",
    "attack",
    "attribution_check",
    "authenticate_uke",
    "distinguisher_game",
    "independence_test",
    "kdc_compromise",
    "mac_exhaustion_demo",
    "mitm",
    "recompute_oracle",
    "run_kdc_mediated",
    "run_mac_qke",
    "run_oob",
    "run_pge",
    "run_quke_session",
    "run_seb",
    "run_sig_qke",
    "run_ske",
    "run_two_phase",
    "seeded_rng",
    "table3_matrix",
    "two_phase_attack",
    "uniformity_test",
]
