import pytest

from keylab.adversary import (
    CHANCE,
    TABLE3_CONFIG,
    TABLE3_EXPECTED,
    attack,
    class_relation_suite,
    independence_suite,
    kdc_compromise,
    knowledge_subsets,
    mac_exhaustion_demo,
    mitm,
    primitive_bounds,
    table3_matrix,
    two_phase_attack,
)
from keylab.core import AdversarySpec, ProtocolClassId, ProtocolConfig, seeded_rng


@pytest.mark.parametrize("cls", ["oob", "pge", "seb"])
def test_classical_rows_fall_to_key_reveal(cls):
    res = attack(cls, AdversarySpec.parse("p,p", revealed=True), 40, seeded_rng(0))
    assert res.compromised and res.exact_recoveries == 40


def test_qke_passive_with_keys_is_secure_but_underpowered_flag():
    res = attack("mac-qke", AdversarySpec.parse("p,p", revealed=True), 100, seeded_rng(1))
    assert res.recognition_rate == pytest.approx(CHANCE, abs=0.06)
    assert res.exact_recoveries == 0 and res.underpowered


def test_qke_intercept_resend_forces_abort():
    res = attack("mac-qke", AdversarySpec.parse("p,a", revealed=True), 30, seeded_rng(2))
    assert res.abort_rate == 1.0 and res.exact_recoveries == 0


def test_qke_full_mitm_with_keys():
    res = attack("mac-qke", AdversarySpec.parse("a,a", revealed=True), 30, seeded_rng(3))
    assert res.compromised


def test_mitm_without_keys_fails():
    out = mitm(ProtocolClassId.MAC_QKE, TABLE3_CONFIG, None, seeded_rng(4))
    assert not out.success and out.run.outcome.aborted


def test_attack_rejects_zero_trials():
    with pytest.raises(ValueError):
        attack("oob", AdversarySpec(), 0)


def test_small_matrix_shape_and_serialisation():
    res = table3_matrix(40, seed=5)
    assert res.rows == list(TABLE3_EXPECTED) and len(res.cells) == 20
    assert res.match
    csv_text = res.to_csv()
    assert csv_text.splitlines()[0].startswith("row,class,adversary")
    assert len(csv_text.splitlines()) == 21
    assert "20/20 cells match" in res.to_text()
    assert table3_matrix(40, seed=5).to_csv() == csv_text


def test_kdc_small():
    after = kdc_compromise("after", 60, seeded_rng(6))
    assert after.session_key_recovered == 60 and after.recognition_rate <= 0.6
    before = kdc_compromise("before", 20, seeded_rng(7))
    assert before.mitm_successes == 20


def test_two_phase_small():
    after = two_phase_attack(3, "after", 20, seeded_rng(8))
    assert after.keys_private and after.exact_recoveries == 0
    during = two_phase_attack(3, "during", 20, seeded_rng(9))
    assert during.chains_compromised == 20


def test_exhaustion_demo():
    res = mac_exhaustion_demo()
    assert res.mac_reason == "auth-key-exhausted" and "AuthKeyExhausted" in res.mac_error
    assert res.sig_completed and res.sig_messages >= res.messages_needed > res.mac_pads
    assert res.sig_refills >= 1


def test_knowledge_subsets():
    subs = knowledge_subsets()
    assert len(subs) == 64 and len(set(subs)) == 64 and subs[0] == frozenset()


def test_oracle_suite_small():
    res = class_relation_suite(runs_per_class=4, recognition_trials=40, seed=1)
    assert res.relations_hold and res.qke_private
    assert res.checked["OOB"] == 4 * 64 and res.successes["OOB"] == 4 * 32


def test_independence_suite_small():
    res = independence_suite(runs=300, permutations=40, config=ProtocolConfig(n=128, mac_pads=16))
    assert res.key_bits == 128 and res.aborted == 0
    assert 0.0 <= res.rejection_rate <= 0.15


def test_primitive_bounds_small():
    res = primitive_bounds(seeded_rng(0), mac_trials=5000, lamport_trials=50, toy_trials=3, gm_keys=10)
    assert res.holds
