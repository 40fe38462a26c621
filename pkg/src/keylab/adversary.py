"""Eve's strategies and the experiment that fills the key-reveal security matrix.

Each trial draws fresh initial keys, hands Eve whatever her spec allows,
lets her interfere with the run and then asks her for the key.  Her output
is scored by the paired recognition game of
:func:`keylab.metrics.recognition_score`, for which chance is 1/2.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field, replace
from typing import Any, Callable

import numpy as np

from .auth.lamport import recover_keypair
from .channel import MacAuthenticator, SignatureAuthenticator, covered_bits
from .core import (
    TABLE3_COLUMNS,
    AdversarySpec,
    BitString,
    InitialKeys,
    Message,
    Mode,
    MsgType,
    ProtocolClassId,
    ProtocolConfig,
    Transcript,
    child_seeds,
    draw_seed,
    seeded_rng,
)
from .metrics import Material, best_guess, recognition_score, recompute_candidates, wilson_interval
from .protocols import (
    Interference,
    MitmPlan,
    ProtocolRun,
    run_mac_qke,
    run_mac_ske,
    run_oob,
    run_pge,
    run_seb,
    run_sig_qke,
    run_sig_ske,
)
from .protocols.base import asymmetric_keys, lamport_pool, symmetric_keys
from .protocols.classical import seb_key_bits
from .qchannel import EveTap

COMPROMISED_AT = 0.9
CHANCE = 0.5
SECURE_MARGIN = 0.02
MIN_TRIALS = 2000

RUNNERS: dict[ProtocolClassId, Callable[..., ProtocolRun]] = {
    ProtocolClassId.OOB: run_oob,
    ProtocolClassId.PGE: run_pge,
    ProtocolClassId.SEB: run_seb,
    ProtocolClassId.MAC_SKE: run_mac_ske,
    ProtocolClassId.SIG_SKE: run_sig_ske,
    ProtocolClassId.MAC_QKE: run_mac_qke,
    ProtocolClassId.SIG_QKE: run_sig_qke,
}

TRANSPORT = (ProtocolClassId.MAC_SKE, ProtocolClassId.SIG_SKE)

#: small sessions keep the matrix fast; noiseless runs need 9 messages
TABLE3_CONFIG = ProtocolConfig(n=32, ell=64, mac_pads=12, gm_modulus_bits=24)


class IllegalAdversary(ValueError):
    pass


def initial_keys_for(class_id: ProtocolClassId, config: ProtocolConfig, rng: np.random.Generator) -> InitialKeys:
    if class_id == ProtocolClassId.OOB:
        return symmetric_keys(config.n, rng)
    if class_id == ProtocolClassId.PGE:
        return symmetric_keys(config.ell, rng)
    if class_id == ProtocolClassId.SEB:
        return symmetric_keys(seb_key_bits(config), rng)
    if class_id in (ProtocolClassId.MAC_QKE, ProtocolClassId.MAC_SKE):
        return symmetric_keys(config.mac_key_bits, rng)
    return asymmetric_keys(config, rng)


# ---------------------------------------------------------------------------
# Eve's active tools
# ---------------------------------------------------------------------------


def _sig_impersonator(own, peer_public, config: ProtocolConfig, rng: np.random.Generator) -> SignatureAuthenticator:
    return SignatureAuthenticator([replace(kp) for kp in own], list(peer_public), rng, config.lamport_pool)


def impersonators(class_id: ProtocolClassId, config: ProtocolConfig, keys: InitialKeys | None, rng: np.random.Generator):
    """Eve's authenticators for posing as Bob (towards Alice) and as Alice.

    With the initial keys she seals exactly as the honest party would;
    without them she uses key material of her own, which the honest
    verifier rejects.
    """
    mac = class_id in (ProtocolClassId.MAC_QKE, ProtocolClassId.MAC_SKE)
    if mac:
        bits = keys.k[: config.mac_key_bits] if keys is not None else BitString.random(config.mac_key_bits, rng)
        return (
            MacAuthenticator.from_bits(bits, config.mac_tag_bits),
            MacAuthenticator.from_bits(bits, config.mac_tag_bits),
        )
    if keys is None:
        own = lamport_pool(config, rng)
        pub = [kp.public for kp in own]
        return _sig_impersonator(own, pub, config, rng), _sig_impersonator(own, pub, config, rng)
    return (
        _sig_impersonator(keys.x_B, keys.y_A, config, rng),
        _sig_impersonator(keys.x_A, keys.y_B, config, rng),
    )


def forged_impersonators(keys_public: InitialKeys, config: ProtocolConfig, rng: np.random.Generator):
    """Impersonators built by inverting the toy OWF on the public Lamport keys."""
    xa = [recover_keypair(pk) for pk in keys_public.y_A]
    xb = [recover_keypair(pk) for pk in keys_public.y_B]
    if any(kp is None for kp in xa + xb):
        raise ValueError("the one-way function could not be inverted (strong mode?)")
    return _sig_impersonator(xb, keys_public.y_A, config, rng), _sig_impersonator(xa, keys_public.y_B, config, rng)


def public_part(keys: InitialKeys) -> InitialKeys:
    """The public halves of asymmetric initial keys (what anyone may know)."""
    return InitialKeys.asymmetric(x_A=(), y_A=keys.y_A, x_B=(), y_B=keys.y_B)


def basis_substitution(auth, rng: np.random.Generator):
    """Tamper hook replacing Bob's basis announcement with random bases,
    re-sealed with ``auth`` (or a random tag when Eve has no key)."""

    def tamper(msg: Message, seq: int) -> Message:
        if msg.kind != MsgType.BASES_BOB:
            return msg
        fake = Message(msg.sender, msg.kind, BitString.random(len(msg.payload), rng), None, msg.link)
        if auth is not None:
            tag = auth.seal(seq, covered_bits(fake, seq))
        else:
            tag = BitString.random(len(msg.auth) if msg.auth is not None else 32, rng)
        return replace(fake, auth=tag)

    return tamper


def plan_interference(
    class_id: ProtocolClassId,
    config: ProtocolConfig,
    spec: AdversarySpec,
    revealed: InitialKeys | None,
    rng: np.random.Generator,
) -> Interference | None:
    """Pick the class-appropriate active strategy for ``spec``.

    Delayed modes act only after the run, when nothing is left to interfere
    with, so they plan nothing here.
    """
    c_act = spec.classical_mode == Mode.ACTIVE
    q_act = spec.quantum_mode == Mode.ACTIVE
    if class_id.is_quantum:
        if c_act and q_act:
            as_bob, as_alice = impersonators(class_id, config, revealed, rng)
            return Interference(mitm=MitmPlan(as_bob, as_alice, draw_seed(rng)))
        if c_act:
            auth = impersonators(class_id, config, revealed, rng)[0] if revealed is not None else None
            return Interference(tamper=basis_substitution(auth, rng))
        if q_act:
            return Interference(tap=EveTap.intercept_resend())
        return None
    if class_id in TRANSPORT and c_act:
        as_bob, as_alice = impersonators(class_id, config, revealed, rng)
        return Interference(mitm=MitmPlan(as_bob, as_alice, draw_seed(rng)))
    return None


def eve_output(run: ProtocolRun, broken_trapdoor: bool = False) -> BitString | None:
    """Eve's final answer, computed from her view alone."""
    view = run.eve_view
    if view.notes.get("key_with_alice") is not None:
        return view.notes["key_with_alice"]
    return best_guess(Material.from_view(view, run.class_id, run.config, broken_trapdoor))


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AttackResult:
    protocol_class: ProtocolClassId
    adversary: AdversarySpec
    trials: int
    recognition_rate: float
    exact_recoveries: int
    aborts: int
    confidence: tuple[float, float]
    evidence: dict[str, Any] = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        if self.recognition_rate >= COMPROMISED_AT:
            return "compromised"
        if self.recognition_rate <= CHANCE + SECURE_MARGIN:
            return "secure"
        return "inconclusive"

    @property
    def compromised(self) -> bool:
        return self.verdict == "compromised"

    @property
    def secure(self) -> bool:
        return self.verdict == "secure"

    @property
    def underpowered(self) -> bool:
        return self.trials < MIN_TRIALS

    @property
    def abort_rate(self) -> float:
        return self.aborts / self.trials if self.trials else 0.0

    def as_dict(self) -> dict[str, Any]:
        return {
            "class": self.protocol_class.value,
            "adversary": self.adversary.label,
            "keys_revealed": self.adversary.initial_keys_revealed,
            "trials": self.trials,
            "verdict": self.verdict,
            "recognition_rate": round(self.recognition_rate, 6),
            "ci_low": round(self.confidence[0], 6),
            "ci_high": round(self.confidence[1], 6),
            "exact_recoveries": self.exact_recoveries,
            "abort_rate": round(self.abort_rate, 6),
        }


def _check_spec(spec: AdversarySpec) -> None:
    if not isinstance(spec.classical_mode, Mode) or not isinstance(spec.quantum_mode, Mode):
        raise IllegalAdversary(f"illegal adversary {spec!r}")


def attack_trial(class_id: ProtocolClassId, config: ProtocolConfig, spec: AdversarySpec, seed: int) -> tuple[float, bool, bool]:
    """(recognition score, exact recovery, aborted) for one trial."""
    rng = seeded_rng(seed)
    keys = initial_keys_for(class_id, config, rng)
    eve_rng = seeded_rng(draw_seed(rng))
    revealed = keys if spec.initial_keys_revealed else None
    plan = plan_interference(class_id, config, spec, revealed, eve_rng)
    run = RUNNERS[class_id](config, rng, initial_keys=keys, spec=spec, eve=plan)
    guess = eve_output(run)
    s = run.outcome.s_A
    decoy = BitString.random(len(s), eve_rng) if s is not None else None
    return recognition_score(guess, s, decoy), bool(s is not None and guess == s), run.outcome.aborted


def attack(
    run_family: ProtocolClassId | Callable[..., ProtocolRun] | str,
    spec: AdversarySpec,
    trials: int = MIN_TRIALS,
    rng: np.random.Generator | None = None,
    config: ProtocolConfig = TABLE3_CONFIG,
) -> AttackResult:
    """Run ``trials`` independent attacks of Eve with ``spec`` on a protocol class."""
    _check_spec(spec)
    if isinstance(run_family, str):
        class_id = ProtocolClassId.parse(run_family)
    elif isinstance(run_family, ProtocolClassId):
        class_id = run_family
    else:
        class_id = run_family.class_id
    if trials <= 0:
        raise ValueError("trials must be positive")
    rng = rng if rng is not None else seeded_rng(config.rng_seed)
    seeds = child_seeds(draw_seed(rng), trials)
    total, exact, aborts = 0.0, 0, 0
    for seed in seeds:
        score, hit, aborted = attack_trial(class_id, config, spec, seed)
        total += score
        exact += hit
        aborts += aborted
    rate = total / trials
    return AttackResult(class_id, spec, trials, rate, exact, aborts, wilson_interval(total, trials))


# ---------------------------------------------------------------------------
# Man in the middle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MitmOutcome:
    key_with_alice: BitString | None
    key_with_bob: BitString | None
    run: ProtocolRun

    @property
    def success(self) -> bool:
        """Both halves completed without abort and Eve holds both honest keys."""
        o = self.run.outcome
        return (
            not o.aborted
            and self.key_with_alice is not None
            and self.key_with_bob is not None
            and self.key_with_alice == o.s_A
            and self.key_with_bob == o.s_B
        )


def mitm(
    class_id: ProtocolClassId,
    config: ProtocolConfig,
    revealed_keys: InitialKeys | None,
    rng: np.random.Generator,
    *,
    initial_keys: InitialKeys | None = None,
    as_bob=None,
    as_alice=None,
    bob_keys: InitialKeys | None = None,
) -> MitmOutcome:
    """Eve runs one session with Alice posing as Bob and one with Bob posing as Alice.

    ``revealed_keys`` are what Eve knows of the initial keys; the honest
    parties use ``initial_keys`` (defaults to the same keys).  Explicit
    ``as_bob``/``as_alice`` authenticators override the ones derived from
    ``revealed_keys``.
    """
    keys = initial_keys or revealed_keys or initial_keys_for(class_id, config, rng)
    eve_rng = seeded_rng(draw_seed(rng))
    if as_bob is None or as_alice is None:
        as_bob, as_alice = impersonators(class_id, config, revealed_keys, eve_rng)
    spec = AdversarySpec(Mode.ACTIVE, Mode.ACTIVE, revealed_keys is not None)
    kwargs = {"bob_keys": bob_keys} if bob_keys is not None else {}
    run = RUNNERS[class_id](
        config, rng, initial_keys=keys, spec=spec, eve=Interference(mitm=MitmPlan(as_bob, as_alice, draw_seed(eve_rng))), **kwargs
    )
    return MitmOutcome(run.eve_view.notes.get("key_with_alice"), run.eve_view.notes.get("key_with_bob"), run)


# ---------------------------------------------------------------------------
# The matrix
# ---------------------------------------------------------------------------

#: reference matrix rows, "yes" (secure) per column (p,p) (d,d) (a,p) (a,d) (a,a)
TABLE3_EXPECTED: dict[str, tuple[bool, ...]] = {
    "OOB": (False, False, False, False, False),
    "PGE": (False, False, False, False, False),
    "SEB": (False, False, False, False, False),
    "qAKE": (True, True, True, True, False),
}

TABLE3_ROWS: dict[str, ProtocolClassId] = {
    "OOB": ProtocolClassId.OOB,
    "PGE": ProtocolClassId.PGE,
    "SEB": ProtocolClassId.SEB,
    "qAKE": ProtocolClassId.MAC_QKE,
}

SKE_ROW = "scAKE (toy SKE)"
CONTROL_ROW = "qAKE (keys kept)"


@dataclass
class Table3Result:
    rows: list[str]
    columns: list[AdversarySpec]
    cells: dict[tuple[str, str], AttackResult]
    expected: dict[str, tuple[bool, ...]]
    trials_per_cell: int
    seed: int | None
    runtime_s: float = 0.0

    def secure(self, row: str) -> tuple[bool, ...]:
        return tuple(self.cells[(row, c.label)].secure for c in self.columns)

    def matches(self, row: str) -> bool:
        return self.secure(row) == self.expected[row]

    def matching_cells(self, rows: list[str] | None = None) -> tuple[int, int]:
        rows = rows or self.rows
        hit = sum(
            self.cells[(r, c.label)].secure == self.expected[r][j] for r in rows for j, c in enumerate(self.columns)
        )
        return hit, len(rows) * len(self.columns)

    @property
    def match(self) -> bool:
        hit, total = self.matching_cells()
        return hit == total

    def to_csv(self) -> str:
        """Frozen column order: row, adversary, then the AttackResult fields."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row", "class", "adversary", "keys_revealed", "secure", "expected_secure", "verdict",
                    "recognition_rate", "ci_low", "ci_high", "exact_recoveries", "abort_rate", "trials"])
        for r in self.rows:
            for j, c in enumerate(self.columns):
                a = self.cells[(r, c.label)].as_dict()
                w.writerow([r, a["class"], a["adversary"], a["keys_revealed"], self.cells[(r, c.label)].secure,
                            self.expected[r][j], a["verdict"], f"{a['recognition_rate']:.6f}", f"{a['ci_low']:.6f}",
                            f"{a['ci_high']:.6f}", a["exact_recoveries"], f"{a['abort_rate']:.6f}", a["trials"]])
        return buf.getvalue()

    def to_text(self) -> str:
        """Matrix layout: yes = key stays secure."""
        width = max(len(r) for r in self.rows) + 2
        head = " " * width + "".join(f"{c.label:>8}" for c in self.columns) + "   match"
        lines = ["Security against reveal of initial keys", head]
        for r in self.rows:
            cells = "".join(f"{'yes' if s else 'no':>8}" for s in self.secure(r))
            lines.append(f"{r:<{width}}{cells}   {'ok' if self.matches(r) else 'MISMATCH'}")
        hit, total = self.matching_cells()
        lines.append(f"{hit}/{total} cells match; {self.trials_per_cell} trials per cell; seed {self.seed}")
        return "\n".join(lines)

    def as_dict(self) -> dict[str, Any]:
        hit, total = self.matching_cells()
        return {
            "schema": "keylab.table3/1",
            "seed": self.seed,
            "trials_per_cell": self.trials_per_cell,
            "columns": [c.label for c in self.columns],
            "rows": {r: ["yes" if s else "no" for s in self.secure(r)] for r in self.rows},
            "expected": {r: ["yes" if s else "no" for s in self.expected[r]] for r in self.rows},
            "cells_matching": hit,
            "cells_total": total,
            "match": self.match,
            "cells": [self.cells[(r, c.label)].as_dict() | {"row": r} for r in self.rows for c in self.columns],
        }


def table3_matrix(
    trials_per_cell: int = MIN_TRIALS,
    rng: np.random.Generator | None = None,
    *,
    config: ProtocolConfig = TABLE3_CONFIG,
    include_ske_row: bool = False,
    include_control: bool = False,
    seed: int | None = None,
) -> Table3Result:
    """Fill the key-reveal matrix; every cell gets its own seed stream."""
    start = time.perf_counter()
    if rng is None:
        seed = config.rng_seed if seed is None else seed
        rng = seeded_rng(seed)
    rows = list(TABLE3_ROWS.items())
    expected = dict(TABLE3_EXPECTED)
    if include_ske_row:
        rows.append((SKE_ROW, ProtocolClassId.MAC_SKE))
        expected[SKE_ROW] = TABLE3_EXPECTED["qAKE"]
    if include_control:
        rows.append((CONTROL_ROW, ProtocolClassId.MAC_QKE))
        expected[CONTROL_ROW] = (True,) * len(TABLE3_COLUMNS)
    cell_seeds = child_seeds(draw_seed(rng), len(rows) * len(TABLE3_COLUMNS))
    cells = {}
    for i, (label, class_id) in enumerate(rows):
        for j, col in enumerate(TABLE3_COLUMNS):
            spec = col if label != CONTROL_ROW else replace(col, initial_keys_revealed=False)
            cells[(label, col.label)] = attack(
                class_id, spec, trials_per_cell, seeded_rng(cell_seeds[i * len(TABLE3_COLUMNS) + j]), config
            )
    return Table3Result(
        [r for r, _ in rows], list(TABLE3_COLUMNS), cells, expected, trials_per_cell, seed,
        time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# Mediated mode and the two-phase chain
# ---------------------------------------------------------------------------


def any_candidate_score(material: Material, s: BitString | None, rng: np.random.Generator) -> tuple[float, bool]:
    """Recognition score of an Eve who accepts whatever any recomputation
    algorithm applicable to her material produces (cut to ``len(s)``)."""
    if s is None:
        return 0.5, False
    cands = [c[: len(s)] for c in recompute_candidates(material).values() if len(c) >= len(s)]
    guess = next((c for c in cands if c == s), cands[0] if cands else None)
    decoy = BitString.random(len(s), rng)
    return recognition_score(guess, s, decoy), bool(guess is not None and guess == s)


@dataclass(frozen=True)
class KdcResult:
    when: str
    trials: int
    session_key_recovered: int
    recognition_rate: float
    exact_recoveries: int
    mitm_successes: int
    aborts: int
    confidence: tuple[float, float]

    @property
    def secure(self) -> bool:
        return self.recognition_rate <= CHANCE + SECURE_MARGIN and self.exact_recoveries == 0

    def as_dict(self) -> dict[str, Any]:
        return {
            "schema": "keylab.kdc/1",
            "compromise": self.when,
            "trials": self.trials,
            "session_key_recovered": self.session_key_recovered,
            "recognition_rate": round(self.recognition_rate, 6),
            "ci_low": round(self.confidence[0], 6),
            "ci_high": round(self.confidence[1], 6),
            "exact_recoveries": self.exact_recoveries,
            "mitm_successes": self.mitm_successes,
            "aborts": self.aborts,
        }


def kdc_compromise(
    when: str = "after",
    trials: int = MIN_TRIALS,
    rng: np.random.Generator | None = None,
    config: ProtocolConfig = TABLE3_CONFIG,
) -> KdcResult:
    """Compromise the centre's record after the session or before it.

    ``after``: Eve records the whole run passively, then seizes the centre's
    state and tries to get from it (session key, transport) plus the QKE
    transcript to the QKE output.  ``before``: she seizes the state first
    and mounts a full man-in-the-middle with the session key.
    """
    from .protocols import run_kdc_mediated

    if when not in ("after", "before"):
        raise ValueError("when must be 'after' or 'before'")
    rng = rng if rng is not None else seeded_rng(config.rng_seed)
    spec = AdversarySpec(Mode.ACTIVE, Mode.ACTIVE, True) if when == "before" else AdversarySpec(Mode.DELAYED, Mode.DELAYED, True)
    total, exact, sk_hits, mitm_ok, aborts = 0.0, 0, 0, 0, 0
    for seed in child_seeds(draw_seed(rng), trials):
        trng = seeded_rng(seed)
        eve_rng = seeded_rng(draw_seed(trng))

        def factory(state):
            if when != "before":
                return None
            keys = InitialKeys.symmetric(state.session_key)
            as_bob, as_alice = impersonators(ProtocolClassId.MAC_QKE, config, keys, eve_rng)
            return Interference(mitm=MitmPlan(as_bob, as_alice, draw_seed(eve_rng)))

        run, state = run_kdc_mediated(config, trng, spec=spec, eve_factory=factory)
        sk_hits += state.session_key == state.delivered.get("A")
        aborts += run.outcome.aborted
        s = run.outcome.s_A
        if when == "before":
            guess = run.eve_view.notes.get("key_with_alice")
            decoy = BitString.random(len(s), eve_rng) if s is not None else None
            total += recognition_score(guess, s, decoy)
            hit = bool(s is not None and guess == s)
            mitm_ok += hit and run.eve_view.notes.get("key_with_bob") == run.outcome.s_B and not run.outcome.aborted
        else:
            transcript = Transcript()
            transcript.extend(state.transport)
            transcript.extend(run.transcript)
            material = Material(ProtocolClassId.MAC_QKE, config, state.session_key, transcript)
            score, hit = any_candidate_score(material, s, eve_rng)
            total += score
        exact += hit
    return KdcResult(when, trials, sk_hits, total / trials, exact, mitm_ok, aborts, wilson_interval(total, trials))


@dataclass(frozen=True)
class TwoPhaseResult:
    break_owf: str
    sessions: int
    trials: int
    recognition_rate: float
    exact_recoveries: int
    chains_compromised: int
    sessions_completed: int
    confidence: tuple[float, float]
    owf_broken: int = 0

    @property
    def keys_private(self) -> bool:
        return self.exact_recoveries == 0 and self.recognition_rate <= CHANCE + SECURE_MARGIN

    def as_dict(self) -> dict[str, Any]:
        return {
            "schema": "keylab.two_phase/1",
            "break_owf": self.break_owf,
            "sessions": self.sessions,
            "trials": self.trials,
            "recognition_rate": round(self.recognition_rate, 6),
            "ci_low": round(self.confidence[0], 6),
            "ci_high": round(self.confidence[1], 6),
            "exact_recoveries": self.exact_recoveries,
            "chains_compromised": self.chains_compromised,
            "sessions_completed": self.sessions_completed,
            "keys_private": self.keys_private,
            "owf_broken": self.owf_broken,
        }


TWO_PHASE_CONFIG = TABLE3_CONFIG.replace(owf_mode="toy", lamport_digest_bits=32, lamport_pool=4)


def two_phase_attack(
    sessions: int = 3,
    break_owf: str = "after",
    trials: int = 200,
    rng: np.random.Generator | None = None,
    config: ProtocolConfig = TWO_PHASE_CONFIG,
) -> TwoPhaseResult:
    """Eve against the SIG-then-MAC chain with a breakable (toy) one-way function.

    ``after``: she records every session passively and inverts the OWF once
    session 1 is over, which hands her the Lamport private keys but nothing
    that any session key depends on.  ``during``: she inverts the OWF before
    session 1, forges signatures to run a man-in-the-middle, and carries the
    recycled MAC keys she shares with each side into every later session.
    ``none`` is the control with no OWF break.
    """
    from .protocols import run_two_phase

    if break_owf not in ("after", "during", "none"):
        raise ValueError("break_owf must be 'after', 'during' or 'none'")
    if break_owf != "none" and config.owf_mode != "toy":
        raise ValueError("breaking the one-way function needs owf_mode='toy'")
    rng = rng if rng is not None else seeded_rng(config.rng_seed)
    active = break_owf == "during"
    spec = AdversarySpec(Mode.ACTIVE, Mode.ACTIVE, False) if active else AdversarySpec(Mode.DELAYED, Mode.DELAYED, False)
    total, scored, exact, compromised, completed, owf_broken = 0.0, 0, 0, 0, 0, 0
    for seed in child_seeds(draw_seed(rng), trials):
        trng = seeded_rng(seed)
        eve_rng = seeded_rng(draw_seed(trng))
        keys = asymmetric_keys(config, seeded_rng(draw_seed(trng)))

        def factory(i, runs):
            if not active:
                return None
            if i == 1:
                as_bob, as_alice = forged_impersonators(public_part(keys), config, eve_rng)
            else:
                notes = runs[-1].eve_view.notes
                as_bob = MacAuthenticator.from_bits(notes["next_key_with_alice"], config.mac_tag_bits)
                as_alice = MacAuthenticator.from_bits(notes["next_key_with_bob"], config.mac_tag_bits)
            return Interference(mitm=MitmPlan(as_bob, as_alice, draw_seed(eve_rng)))

        chain = run_two_phase(config, sessions, trng, initial_keys=keys, spec=spec, eve_factory=factory)
        completed += sum(not r.outcome.aborted for r in chain)
        if break_owf == "after":
            # the break hands Eve every Lamport private key; no session key depends on them
            broken = [recover_keypair(pk) for pk in keys.y_A + keys.y_B]
            owf_broken += all(kp is not None for kp in broken)
        if active:
            wins = [
                not r.outcome.aborted
                and r.eve_view.notes.get("key_with_alice") == r.outcome.s_A
                and r.eve_view.notes.get("key_with_bob") == r.outcome.s_B
                for r in chain
            ]
            compromised += len(chain) == sessions and all(wins)
        for r in chain:
            s = r.outcome.s_A
            if active:
                guess = r.eve_view.notes.get("key_with_alice")
                decoy = BitString.random(len(s), eve_rng) if s is not None else None
                score, hit = recognition_score(guess, s, decoy), bool(s is not None and guess == s)
            else:
                score, hit = any_candidate_score(Material(r.class_id, config, None, r.transcript), s, eve_rng)
            total += score
            scored += 1
            exact += hit
    return TwoPhaseResult(
        break_owf, sessions, trials, total / max(scored, 1), exact, compromised, completed,
        wilson_interval(total, max(scored, 1)), owf_broken,
    )


@dataclass(frozen=True)
class ExhaustionResult:
    messages_needed: int
    mac_pads: int
    mac_reason: str
    mac_error: str
    sig_completed: bool
    sig_messages: int
    sig_refills: int

    def as_dict(self) -> dict[str, Any]:
        return {
            "schema": "keylab.exhaustion/1",
            "messages_needed": self.messages_needed,
            "mac_pads": self.mac_pads,
            "mac_reason": self.mac_reason,
            "mac_error": self.mac_error,
            "sig_completed": self.sig_completed,
            "sig_messages": self.sig_messages,
            "sig_refills": self.sig_refills,
        }


def mac_exhaustion_demo(config: ProtocolConfig | None = None, seed: int = 0) -> ExhaustionResult:
    """Run MAC-QKE with fewer one-time pads than the session has messages,
    then SIG-QKE with an equally small Lamport pool on the same seed."""
    from .auth.wcmac import AuthKeyExhausted

    config = config or TABLE3_CONFIG.replace(mac_pads=4, lamport_pool=4, lamport_digest_bits=32)
    honest = run_mac_qke(TABLE3_CONFIG, seeded_rng(seed))
    needed = len(honest.transcript)
    mac = run_mac_qke(config, seeded_rng(seed))
    error = ""
    try:
        MacAuthenticator.from_bits(BitString.zeros(config.mac_key_bits), config.mac_tag_bits).seal(config.mac_pads, BitString.zeros(8))
    except AuthKeyExhausted as exc:
        error = f"{type(exc).__name__}: {exc}"
    sig = run_sig_qke(config, seeded_rng(seed))
    refills = len(sig.transcript.of_kind(MsgType.LAMPORT_REFILL))
    return ExhaustionResult(
        needed, config.mac_pads, mac.outcome.reason or "", error, sig.outcome.agreed, len(sig.transcript), refills
    )


# ---------------------------------------------------------------------------
# Primitive bounds: forgery against the MAC and signatures, trapdoor breaking
# ---------------------------------------------------------------------------


def wc_hash_batch(poly_keys: np.ndarray, blocks: np.ndarray, k: int) -> np.ndarray:
    """Polynomial hash of many equal-length messages at once (Horner form).

    ``blocks`` has one row of field elements per message, length block
    included as the last column.
    """
    from .auth.gf2k import gf_mul_vec

    acc = np.zeros(blocks.shape[0], dtype=np.uint64)
    for j in range(blocks.shape[1]):
        acc = gf_mul_vec(acc ^ blocks[:, j].astype(np.uint64), poly_keys, k)
    return acc


@dataclass(frozen=True)
class PrimitiveBounds:
    mac_k: int
    mac_blocks: int
    mac_trials: int
    mac_forgeries: int
    lamport_trials: int
    lamport_strong_forgeries: int
    lamport_toy_trials: int
    lamport_toy_forgeries: int
    gm_keys: int
    gm_roundtrips_ok: int
    gm_breaks_ok: int

    @property
    def mac_rate(self) -> float:
        return self.mac_forgeries / self.mac_trials

    @property
    def mac_bound(self) -> float:
        return 4 * self.mac_blocks / 2**self.mac_k

    @property
    def holds(self) -> bool:
        return (
            self.mac_rate <= self.mac_bound
            and self.lamport_strong_forgeries == 0
            and self.lamport_toy_forgeries == self.lamport_toy_trials
            and self.gm_roundtrips_ok == self.gm_keys
            and self.gm_breaks_ok == self.gm_keys
        )

    def as_dict(self) -> dict[str, Any]:
        return {
            "schema": "keylab.primitives/1",
            "mac_k": self.mac_k,
            "mac_blocks": self.mac_blocks,
            "mac_trials": self.mac_trials,
            "mac_forgeries": self.mac_forgeries,
            "mac_rate": self.mac_rate,
            "mac_bound": self.mac_bound,
            "lamport_trials": self.lamport_trials,
            "lamport_strong_forgeries": self.lamport_strong_forgeries,
            "lamport_toy_trials": self.lamport_toy_trials,
            "lamport_toy_forgeries": self.lamport_toy_forgeries,
            "gm_keys": self.gm_keys,
            "gm_roundtrips_ok": self.gm_roundtrips_ok,
            "gm_breaks_ok": self.gm_breaks_ok,
            "holds": self.holds,
        }


def mac_forgery_trials(k: int, d: int, trials: int, rng: np.random.Generator) -> int:
    """Substitution forgeries accepted out of ``trials``.

    Each trial draws a fresh key, tags a random ``d``-block message and
    lets the forger submit the same tag on a different random ``d``-block
    message.  The forgery is accepted iff the two polynomial hashes agree.
    """
    top = 1 << k
    keys = rng.integers(0, top, size=trials, dtype=np.uint64)
    m = rng.integers(0, top, size=(trials, d), dtype=np.uint64)
    m2 = rng.integers(0, top, size=(trials, d), dtype=np.uint64)
    same = np.all(m == m2, axis=1)
    while same.any():
        m2[same] = rng.integers(0, top, size=(int(same.sum()), d), dtype=np.uint64)
        same = np.all(m == m2, axis=1)
    length = np.full((trials, 1), (d * k) % top, dtype=np.uint64)
    h1 = wc_hash_batch(keys, np.hstack([m, length]), k)
    h2 = wc_hash_batch(keys, np.hstack([m2, length]), k)
    # tag = hash ^ pad, so reusing the tag passes iff the hashes collide
    return int(np.count_nonzero(h1 == h2))


def primitive_bounds(
    rng: np.random.Generator,
    *,
    mac_k: int = 8,
    mac_blocks: int = 4,
    mac_trials: int = 100_000,
    lamport_trials: int = 10_000,
    lamport_digest_bits: int = 64,
    toy_trials: int = 20,
    gm_keys: int = 100,
    gm_modulus_bits: int = 32,
) -> PrimitiveBounds:
    """Empirical forgery and breaking rates for every primitive."""
    from .auth.gm import tp_break, tp_decrypt_bit, tp_encrypt_bit, tp_keygen
    from .auth.lamport import forge_digest, lamport_keygen, sign_digest, verify_digest
    from .auth.owf import OwfConfig

    forged = mac_forgery_trials(mac_k, mac_blocks, mac_trials, rng)

    strong = OwfConfig.strong()
    strong_forged = 0
    for _ in range(lamport_trials):
        kp = lamport_keygen(strong, lamport_digest_bits, rng)
        digest = BitString.random(lamport_digest_bits, rng)
        sig = sign_digest(kp, digest)
        i = int(rng.integers(lamport_digest_bits))
        flipped = digest.bits.copy()
        flipped[i] ^= 1
        strong_forged += verify_digest(kp.public, BitString(flipped), sig)

    toy = OwfConfig.toy(12)
    toy_forged = 0
    for _ in range(toy_trials):
        kp = lamport_keygen(toy, lamport_digest_bits, rng)
        target = BitString.random(lamport_digest_bits, rng)
        toy_forged += verify_digest(kp.public, target, forge_digest(kp.public, target))

    rt_ok = brk_ok = 0
    for _ in range(gm_keys):
        kp = tp_keygen(gm_modulus_bits, rng)
        cts = [(b, tp_encrypt_bit(kp.public, b, rng)) for b in (0, 1)]
        rt_ok += all(tp_decrypt_bit(kp, c) == b for b, c in cts)
        broken = tp_break(kp.public)
        brk_ok += all(tp_decrypt_bit(broken, c) == b for b, c in cts)

    return PrimitiveBounds(
        mac_k, mac_blocks, mac_trials, forged,
        lamport_trials, strong_forged, toy_trials, toy_forged,
        gm_keys, rt_ok, brk_ok,
    )


# ---------------------------------------------------------------------------
# Class relations as oracles, and the statistical independence suite
# ---------------------------------------------------------------------------

ORACLE_CLASSES = (
    ProtocolClassId.OOB,
    ProtocolClassId.PGE,
    ProtocolClassId.SEB,
    ProtocolClassId.MAC_SKE,
    ProtocolClassId.SIG_SKE,
    ProtocolClassId.MAC_QKE,
    ProtocolClassId.SIG_QKE,
)
QKE_CLASSES = (ProtocolClassId.MAC_QKE, ProtocolClassId.SIG_QKE)


def knowledge_subsets() -> list[frozenset[str]]:
    """All 64 subsets of the knowledge items, smallest first."""
    from itertools import combinations

    from .metrics import KNOWLEDGE

    return [frozenset(c) for r in range(len(KNOWLEDGE) + 1) for c in combinations(KNOWLEDGE, r)]


@dataclass(frozen=True)
class OracleSuiteResult:
    runs_per_class: int
    #: class -> knowledge subsets checked, exact successes seen, mismatches against the prescription
    checked: dict[str, int]
    successes: dict[str, int]
    mismatches: dict[str, list[str]]
    recognition: dict[str, float]
    recognition_trials: int
    recognition_ci: dict[str, tuple[float, float]]
    aborted: int
    seed: int

    @property
    def relations_hold(self) -> bool:
        return not any(self.mismatches.values())

    @property
    def qke_private(self) -> bool:
        return all(r <= CHANCE + SECURE_MARGIN for r in self.recognition.values())

    def as_dict(self) -> dict[str, Any]:
        return {
            "schema": "keylab.oracles/1",
            "seed": self.seed,
            "runs_per_class": self.runs_per_class,
            "checked": self.checked,
            "successes": self.successes,
            "mismatches": self.mismatches,
            "recognition_trials": self.recognition_trials,
            "recognition": {k: round(v, 6) for k, v in self.recognition.items()},
            "recognition_ci": {k: [round(v[0], 6), round(v[1], 6)] for k, v in self.recognition_ci.items()},
            "aborted": self.aborted,
            "relations_hold": self.relations_hold,
            "qke_private": self.qke_private,
        }


def class_relation_suite(
    runs_per_class: int = 200,
    recognition_trials: int = 2000,
    seed: int = 0,
    config: ProtocolConfig = TABLE3_CONFIG,
) -> OracleSuiteResult:
    """Check every knowledge subset against every class's prescribed relation.

    For each honest run, :func:`keylab.metrics.recompute_oracle` must succeed
    exactly on the knowledge sets that cover one of the class's prescribed
    sets.  The quantum classes are also scored in the recognition game by
    an analyst holding everything (including all recomputation candidates).
    """
    from .metrics import KNOWLEDGE, expected_success, recompute_oracle

    subsets = knowledge_subsets()
    checked: dict[str, int] = {}
    successes: dict[str, int] = {}
    mismatches: dict[str, list[str]] = {}
    aborted = 0
    seeds = child_seeds(seed, len(ORACLE_CLASSES) + len(QKE_CLASSES))
    for ci, class_id in enumerate(ORACLE_CLASSES):
        rng = seeded_rng(seeds[ci])
        name = class_id.value
        checked[name] = successes[name] = 0
        bad: set[str] = set()
        done = 0
        while done < runs_per_class:
            run = RUNNERS[class_id](config, rng)
            if run.outcome.secret_key is None:
                aborted += 1
                continue
            done += 1
            for kn in subsets:
                ok = recompute_oracle(run, kn).success
                checked[name] += 1
                successes[name] += ok
                if ok != expected_success(class_id, kn):
                    bad.add(",".join(sorted(kn)) or "{}")
        mismatches[name] = sorted(bad)

    recognition: dict[str, float] = {}
    intervals: dict[str, tuple[float, float]] = {}
    everything = frozenset(KNOWLEDGE)
    for qi, class_id in enumerate(QKE_CLASSES):
        rng = seeded_rng(seeds[len(ORACLE_CLASSES) + qi])
        total = 0.0
        for _ in range(recognition_trials):
            run = RUNNERS[class_id](config, rng)
            score, _ = any_candidate_score(Material.from_run(run, everything), run.outcome.secret_key, rng)
            total += score
        recognition[class_id.value] = total / recognition_trials
        intervals[class_id.value] = wilson_interval(total, recognition_trials)
    return OracleSuiteResult(
        runs_per_class, checked, successes, mismatches, recognition, recognition_trials, intervals, aborted, seed
    )


INDEPENDENCE_CONFIG = ProtocolConfig(n=1024, mac_pads=16)


@dataclass(frozen=True)
class IndependenceSuiteResult:
    runs: int
    aborted: int
    key_bits: int
    permutations: int
    alpha: float
    rejection_rate: float
    ks_statistic: float
    ks_p_value: float
    max_mi_bits: float
    uniformity_p_value: float | None
    seed: int
    p_values: tuple[float, ...] = field(repr=False, default=())

    @property
    def calibrated(self) -> bool:
        return abs(self.rejection_rate - self.alpha) <= 0.02

    def as_dict(self) -> dict[str, Any]:
        return {
            "schema": "keylab.independence/1",
            "seed": self.seed,
            "runs": self.runs,
            "aborted": self.aborted,
            "key_bits": self.key_bits,
            "permutations": self.permutations,
            "alpha": self.alpha,
            "rejection_rate": round(self.rejection_rate, 6),
            "ks_statistic": round(self.ks_statistic, 6),
            "ks_p_value": round(self.ks_p_value, 6),
            "max_mi_bits": round(self.max_mi_bits, 6),
            "uniformity_p_value": None if self.uniformity_p_value is None else round(self.uniformity_p_value, 6),
            "calibrated": self.calibrated,
        }


def independence_suite(
    runs: int = 2000,
    permutations: int = 200,
    alpha: float = 0.05,
    seed: int = 0,
    config: ProtocolConfig = INDEPENDENCE_CONFIG,
    runner: Callable[..., ProtocolRun] = run_mac_qke,
) -> IndependenceSuiteResult:
    """Permutation MI between each output-key bit and a bucketed transcript digest.

    Under independence the per-bit rejection rate is close to ``alpha``
    and the p-values are close to uniform (reported as a KS statistic).
    """
    from scipy import stats as sps

    from .metrics import independence_test, uniformity_test

    rng = seeded_rng(seed)
    keys: list[BitString] = []
    transcripts: list[Transcript] = []
    aborted = 0
    while len(keys) < runs:
        run = runner(config, rng)
        if run.outcome.secret_key is None:
            aborted += 1
            continue
        keys.append(run.outcome.secret_key)
        transcripts.append(run.transcript)
    rep = independence_test(keys, transcripts, permutations=permutations, rng=seeded_rng(draw_seed(rng)), alpha=alpha)
    # permutation p-values sit on a grid; the KS statistic compares against the continuous uniform
    ks = sps.kstest(rep.p_values, "uniform")
    # the chi-square uniformity check needs at least 500 keys
    uni = uniformity_test(keys).p_value if len(keys) >= 500 else None
    return IndependenceSuiteResult(
        runs, aborted, len(keys[0]), permutations, alpha, rep.rejection_rate,
        float(ks.statistic), float(ks.pvalue), float(rep.mi.max()), uni, seed,
        tuple(float(p) for p in rep.p_values),
    )
