import math

import numpy as np
import pytest

from keylab.adversary import TABLE3_CONFIG
from keylab.core import AdversarySpec, BitString, ProtocolClassId, seeded_rng
from keylab.metrics import (
    HEADER,
    HeaderRecognizer,
    attribution_check,
    digest_feature,
    distinguisher_game,
    encrypt_application,
    expected_success,
    ideal_system,
    independence_test,
    mac_repudiation_demo,
    min_entropy,
    newcombe_interval,
    normalize_knowledge,
    plugin_entropy,
    real_system,
    recognition_score,
    recompute_oracle,
    uniformity_test,
    wilson_interval,
)
from keylab.protocols import run_mac_qke, run_pge, run_seb, run_sig_qke, run_sig_ske

SMALL = TABLE3_CONFIG


def test_recognition_score_cases():
    s, d = BitString.from_str("1010"), BitString.from_str("0110")
    assert recognition_score(s, s, d) == 1.0
    assert recognition_score(d, s, d) == 0.0
    assert recognition_score(None, s, d) == 0.5
    assert recognition_score(BitString.from_str("1111"), s, d) == 0.5
    assert recognition_score(s, None, d) == 0.5


def test_wilson_interval_reference_value():
    # Wilson score interval for 5/10 at 95%
    lo, hi = wilson_interval(5, 10)
    assert lo == pytest.approx(0.2366, abs=1e-4) and hi == pytest.approx(0.7634, abs=1e-4)
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_newcombe_interval_reference_value():
    # 56/70 vs 48/80: hybrid score interval (0.0524, 0.3339) from the method's original worked example
    lo, hi = newcombe_interval(56 / 70, 70, 48 / 80, 80)
    assert lo == pytest.approx(0.0524, abs=1e-4) and hi == pytest.approx(0.3339, abs=1e-4)


def test_knowledge_normalisation():
    assert normalize_knowledge(["π", "k", "ra", "trapdoor"]) == {"pi", "k", "r_A", "broken_trapdoor"}
    with pytest.raises(ValueError):
        normalize_knowledge(["nonsense"])
    assert expected_success(ProtocolClassId.PGE, {"pi", "k", "c"})
    assert not expected_success(ProtocolClassId.MAC_QKE, {"pi", "k", "c", "r_A", "r_B", "broken_trapdoor"})


def test_oracle_examples_and_determinism():
    pge = run_pge(SMALL, seeded_rng(0))
    assert recompute_oracle(pge, {"pi", "k"}).success
    assert recompute_oracle(pge, {"pi", "k"}) == recompute_oracle(pge, {"pi", "k"})
    qke = run_mac_qke(SMALL, seeded_rng(0))
    assert not recompute_oracle(qke, {"pi", "k", "c"}).success
    ske = run_sig_ske(SMALL, seeded_rng(0))
    assert recompute_oracle(ske, {"pi", "c", "broken_trapdoor"}).success


def test_distinguisher_seb_revealed():
    real = real_system(run_seb, SMALL, AdversarySpec.parse("p,p", revealed=True))
    res = distinguisher_game(real, None, "recompute", 200, seeded_rng(0))
    assert res.advantage_estimate >= 0.95
    assert res.confidence_interval[0] <= res.advantage_estimate <= res.confidence_interval[1]


def test_distinguisher_ideal_vs_ideal_and_qke():
    real = real_system(run_mac_qke, SMALL)
    ideal = ideal_system(real)
    res = distinguisher_game(ideal, ideal, ["bit-balance", "transcript-correlation"], 300, seeded_rng(1))
    assert all(r.advantage_estimate <= 0.1 for r in res.values())
    res = distinguisher_game(real, None, "recompute", 200, seeded_rng(2))
    assert res.advantage_estimate == 0.0


def test_interval_shrinks_with_trials():
    real = real_system(run_mac_qke, SMALL)
    a = distinguisher_game(real, None, "bit-balance", 200, seeded_rng(3))
    b = distinguisher_game(real, None, "bit-balance", 400, seeded_rng(3))
    wa = a.confidence_interval[1] - a.confidence_interval[0]
    wb = b.confidence_interval[1] - b.confidence_interval[0]
    assert wa / wb >= 1.3 or wb < 0.02


def test_uniformity():
    rng = seeded_rng(4)
    assert uniformity_test([BitString.random(64, rng) for _ in range(600)]).passed
    assert not uniformity_test([BitString.zeros(64) for _ in range(600)]).passed
    with pytest.raises(ValueError):
        uniformity_test([BitString.zeros(8)] * 10)


def test_uniformity_null_pass_rate():
    rng = seeded_rng(5)
    passes = sum(uniformity_test([BitString.random(32, rng) for _ in range(500)]).passed for _ in range(60))
    assert passes >= 51  # about 95% expected


def test_independence_detects_copied_bit():
    rng = seeded_rng(6)
    keys = [BitString.random(16, rng) for _ in range(400)]
    feats = [int(k.bits[3]) for k in keys]
    rep = independence_test(keys, feats, feature_extractor=lambda f: f, permutations=99, rng=seeded_rng(7))
    assert rep.mi[3] == pytest.approx(1.0, abs=0.01) and rep.p_values[3] == pytest.approx(0.01)
    assert np.median(rep.p_values) > 0.1


def test_independence_null_calibration_ks():
    from scipy import stats

    # 2000 null p-values (one per key bit)
    rng = seeded_rng(8)
    keys = [BitString.random(2000, rng) for _ in range(500)]
    feats = list(rng.integers(0, 8, 500))
    rep = independence_test(keys, feats, feature_extractor=int, permutations=200, rng=seeded_rng(9))
    assert stats.kstest(rep.p_values, "uniform").statistic <= 0.05
    assert abs(rep.rejection_rate - 0.05) <= 0.02


def test_digest_feature_range_and_entropy_helpers():
    run = run_mac_qke(SMALL, seeded_rng(0))
    assert 0 <= digest_feature(run.transcript) < 8
    assert plugin_entropy([0, 1, 2, 3] * 10) == pytest.approx(2.0)
    assert min_entropy([0, 0, 0, 1]) == pytest.approx(-math.log2(0.75))


def test_attribution_examples():
    pt = HEADER + BitString.from_bytes(b"hi")
    ske = run_sig_ske(SMALL.replace(n=128), seeded_rng(0))
    c = encrypt_application(ske.secret_key, pt, "short")
    v = attribution_check(ske, {"pi", "c", "broken_trapdoor"}, HeaderRecognizer("short"), c)
    assert v.attributable and v.provably_party_attributable

    qke = run_sig_qke(SMALL.replace(n=128), seeded_rng(0))
    c = encrypt_application(qke.secret_key, pt, "otp")
    v = attribution_check(qke, {"pi", "c"}, HeaderRecognizer("otp"), c)
    assert v.label == "nonattributable"

    mac = run_mac_qke(SMALL, seeded_rng(0))
    v = attribution_check(mac, {"pi", "c"})
    assert v.party_attributable and not v.provably_party_attributable
    assert mac_repudiation_demo(mac)
