from dataclasses import replace

import pytest

from keylab.adversary import TABLE3_CONFIG, basis_substitution
from keylab.auth.owf import prg_expand
from keylab.core import AdversarySpec, BitString, InitialKeys, Mode, MsgType, ProtocolClassId, ProtocolConfig, seeded_rng
from keylab.metrics import recompute_oracle
from keylab.protocols import (
    Interference,
    authenticate_uke,
    gm_transport_exchange,
    run_kdc_mediated,
    run_mac_qke,
    run_mac_ske,
    run_oob,
    run_pge,
    run_seb,
    run_sig_qke,
    run_sig_ske,
    run_two_phase,
)
from keylab.protocols.ake import run_ske
from keylab.qchannel import EveTap
from keylab.qke import qke_exchange

SMALL = TABLE3_CONFIG


def test_oob_key_is_preloaded_and_silent():
    run = run_oob(ProtocolConfig(n=128), seeded_rng(0))
    assert run.secret_key == run.initial_keys.k and len(run.secret_key) == 128
    assert len(run.transcript) == 0
    assert run_oob(ProtocolConfig(n=128), seeded_rng(1)).secret_key != run.secret_key


def test_pge_expands_seed_without_messages():
    run = run_pge(SMALL, seeded_rng(0))
    assert run.secret_key == prg_expand(run.initial_keys.k, SMALL.n)
    assert len(run.transcript) == 0
    assert recompute_oracle(run, {"pi", "k"}).success


def test_seb_honest_and_recomputable():
    run = run_seb(SMALL, seeded_rng(0))
    assert run.outcome.agreed and len(run.transcript) == 1
    assert len(run.transcript.of_kind(MsgType.SEB_CIPHERTEXT)) == 1
    assert recompute_oracle(run, {"pi", "k", "c"}).success
    assert not recompute_oracle(run, {"pi", "c"}).success


def _flip_first(msg, seq):
    bits = msg.payload.bits.copy()
    bits[0] ^= 1
    return replace(msg, payload=BitString(bits))


def test_seb_tamper_aborts():
    run = run_seb(SMALL, seeded_rng(0), eve=Interference(tamper=_flip_first))
    assert run.outcome.aborted and run.outcome.reason


@pytest.mark.parametrize("variant", [ProtocolClassId.MAC_SKE, ProtocolClassId.SIG_SKE])
def test_ske_relations(variant):
    run = run_ske(SMALL, variant, seeded_rng(3))
    assert run.outcome.agreed
    assert recompute_oracle(run, {"pi", "r_A", "r_B"}).success
    assert recompute_oracle(run, {"pi", "c", "broken_trapdoor"}).success
    assert not recompute_oracle(run, {"pi", "k", "c"}).success


def test_mac_qke_honest_with_recycle():
    cfg = ProtocolConfig()
    run = run_mac_qke(cfg, seeded_rng(0))
    assert run.outcome.agreed and len(run.secret_key) == cfg.n
    n_A, n_B = run.next_keys
    assert n_A == n_B and len(n_A) == cfg.mac_key_bits
    assert not recompute_oracle(run, {"pi", "k", "c"}).success


def test_mac_qke_noise_within_budget():
    cfg = ProtocolConfig(noise_flip_prob=0.05)
    runs = [run_mac_qke(cfg, seeded_rng(s)) for s in range(6)]
    assert all(r.outcome.agreed for r in runs)


def test_mac_qke_active_eve_without_keys_aborts():
    run = run_mac_qke(SMALL, seeded_rng(0), eve=Interference(tamper=basis_substitution(None, seeded_rng(1))))
    assert run.outcome.aborted


def test_mac_exhaustion_aborts_with_documented_reason():
    run = run_mac_qke(SMALL.replace(mac_pads=3), seeded_rng(0))
    assert run.outcome.aborted and run.outcome.reason == "auth-key-exhausted"


def test_sig_qke_honest_and_refills():
    cfg = SMALL.replace(lamport_pool=2, lamport_digest_bits=32)
    run = run_sig_qke(cfg, seeded_rng(0))
    assert run.outcome.agreed
    assert len(run.transcript.of_kind(MsgType.LAMPORT_REFILL)) >= 1


def test_combinator_coherence():
    for seed in range(3):
        direct = run_mac_qke(SMALL, seeded_rng(seed))
        again = authenticate_uke(qke_exchange, "mac")(SMALL, seeded_rng(seed))
        assert direct.outcome == again.outcome and direct.transcript.digest() == again.transcript.digest()
        sig = authenticate_uke(gm_transport_exchange, "lamport")(SMALL, seeded_rng(seed))
        assert sig.transcript.digest() == run_sig_ske(SMALL, seeded_rng(seed)).transcript.digest()
        assert sig.class_id == ProtocolClassId.SIG_SKE


def test_eve_view_rules():
    run = run_mac_qke(SMALL, seeded_rng(0), spec=AdversarySpec.parse("p,p"))
    assert run.eve_view.classical is run.transcript
    assert run.eve_view.quantum_record is None and run.eve_view.revealed_keys is None
    tapped = run_mac_qke(SMALL, seeded_rng(0), spec=AdversarySpec.parse("p,a", revealed=True),
                         eve=Interference(tap=EveTap.intercept_resend()))
    assert tapped.eve_view.quantum_record is not None and tapped.eve_view.revealed_keys is not None


def test_summary_is_json_ready():
    import json

    s = json.loads(run_mac_qke(SMALL, seeded_rng(0)).dumps())
    assert s["schema"] == "keylab.run/1" and s["outcome"] == "OK" and s["key_bits"] == SMALL.n


def test_kdc_honest_run():
    run, state = run_kdc_mediated(SMALL, seeded_rng(0))
    assert run.outcome.agreed
    assert state.delivered["A"] == state.delivered["B"] == state.session_key
    assert run.secret_key != state.session_key[: SMALL.n]


def test_two_phase_chain():
    cfg = SMALL.replace(lamport_pool=4, lamport_digest_bits=32)
    chain = run_two_phase(cfg, 3, seeded_rng(0))
    assert len(chain) == 3 and all(r.outcome.agreed for r in chain)
    assert chain[0].class_id == ProtocolClassId.SIG_QKE
    assert all(r.class_id == ProtocolClassId.MAC_QKE for r in chain[1:])
    assert chain[0].assumptions and not chain[1].assumptions
    keys = {str(r.secret_key) for r in chain}
    assert len(keys) == 3
    # session i+1 is keyed by session i's reserved segment
    assert chain[1].initial_keys.k == chain[0].next_keys[0]


def test_two_phase_resume_after_abort():
    cfg = SMALL.replace(lamport_pool=4, lamport_digest_bits=32)

    def eve(i, runs):
        return Interference(tamper=basis_substitution(None, seeded_rng(i))) if i == 2 else None

    chain = run_two_phase(cfg, 3, seeded_rng(0), eve_factory=eve)
    assert len(chain) == 2 and chain.state.halted and chain.state.next_index == 2
    resumed = run_two_phase(cfg, 3, seeded_rng(1), resume=chain.state)
    assert [r.outcome.agreed for r in resumed] == [True, True]


def test_two_phase_needs_asymmetric_keys():
    with pytest.raises(ValueError):
        run_two_phase(SMALL, 2, seeded_rng(0), initial_keys=InitialKeys.symmetric(BitString.zeros(8)))
