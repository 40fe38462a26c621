import numpy as np
import pytest

from keylab.core import BitString, MsgType, ProtocolConfig, seeded_rng
from keylab.qchannel import EveTap
from keylab.qke import (
    InsufficientKey,
    SiftedPair,
    binary_entropy,
    count_parity_bits,
    estimate_qber,
    pa_output_length,
    privacy_amplify,
    reconcile,
    run_quke_session,
    sift,
    toeplitz_hash,
)


def _pair(a: BitString, b: BitString) -> SiftedPair:
    return SiftedPair(a, b, tuple(range(len(a))))


def _noisy_pair(L: int, q: float, rng) -> SiftedPair:
    a = BitString.random(L, rng)
    return _pair(a, BitString(a.bits ^ (rng.random(L) < q).astype(np.uint8)))


def test_sift_total_match_and_mismatch():
    bits = BitString.from_str("1011")
    p = sift([0, 1, 1, 0], [0, 1, 1, 0], bits, bits)
    assert p.kept_indices == (0, 1, 2, 3) and p.alice_bits == bits
    assert len(sift([0, 1, 1, 0], [1, 0, 0, 1], bits, bits)) == 0


def test_sift_keeps_matched_positions_in_order():
    p = sift([0, 1, 1, 0], [0, 0, 1, 1], BitString.from_str("1011"), BitString.from_str("1111"))
    assert p.kept_indices == (0, 2)
    assert str(p.alice_bits) == "11" and str(p.bob_bits) == "11"


def test_sift_length_mismatch():
    with pytest.raises(ValueError):
        sift([0, 1], [0], BitString.from_str("10"), BitString.from_str("10"))


def test_sift_fraction_random_bases():
    rng = seeded_rng(4)
    n = 10_000
    p = sift(rng.integers(0, 2, n), rng.integers(0, 2, n), BitString.zeros(n), BitString.zeros(n))
    assert 0.47 <= len(p) / n <= 0.53


def test_estimate_qber_extremes():
    a = BitString.random(200, seeded_rng(0))
    est, rest, disclosed = estimate_qber(_pair(a, a), 0.5, seeded_rng(1))
    assert est == 0.0 and len(rest) == 100 and len(disclosed) == 100
    assert set(rest.kept_indices).isdisjoint(disclosed)
    est, _, _ = estimate_qber(_pair(a, BitString(1 - a.bits)), 0.5, seeded_rng(1))
    assert est == 1.0


@pytest.mark.parametrize("L,frac", [(1, 0.5), (10, 0.01), (10, 0.99)])
def test_estimate_qber_rejects_empty_or_total_samples(L, frac):
    a = BitString.zeros(L)
    with pytest.raises(ValueError):
        estimate_qber(_pair(a, a), frac, seeded_rng(0))


def test_reconcile_zero_errors_leaks_top_level_only():
    a = BitString.random(64, seeded_rng(0))
    r = reconcile(_pair(a, a), seeded_rng(1))
    # block 16 doubling per pass over 64 bits: 4 + 2 + 1 + 1 top-level parities
    assert r.corrected_key == a and r.leaked_bits == 8 and r.corrections == 0


@pytest.mark.parametrize("pos", [0, 17, 63])
def test_reconcile_single_flip(pos):
    a = BitString.random(64, seeded_rng(pos))
    b = a.bits.copy()
    b[pos] ^= 1
    r = reconcile(_pair(a, BitString(b)), seeded_rng(2))
    assert r.corrected_key == a
    assert r.leaked_bits <= 8 + 6


def test_reconcile_leak_matches_transcript():
    rng = seeded_rng(7)
    r = reconcile(_noisy_pair(2048, 0.05, rng), rng, qber_hint=0.05)
    assert r.leaked_bits == count_parity_bits(r.transcript)
    assert len(r.transcript.of_kind(MsgType.VERIFY_HASH)) == 1


@pytest.mark.slow
def test_reconcile_five_percent_4096_bits():
    ok = 0
    for seed in range(1000):
        rng = seeded_rng(seed)
        pair = _noisy_pair(4096, 0.05, rng)
        try:
            ok += reconcile(pair, rng, qber_hint=0.05).corrected_key == pair.alice_bits
        except Exception:
            pass
    assert ok >= 999


def test_pa_length_example():
    assert pa_output_length(1024, 100, 0.0, 2.0**-32) == 860
    assert binary_entropy(0.0) == 0.0 and binary_entropy(0.5) == pytest.approx(1.0)


def test_pa_insufficient_key():
    with pytest.raises(InsufficientKey):
        privacy_amplify(BitString.zeros(1024), 0, 0.5, 2.0**-32, 1)


def test_pa_deterministic():
    k = BitString.random(1024, seeded_rng(3))
    out = privacy_amplify(k, 100, 0.0, 2.0**-32, 99)
    assert len(out) == 860 and out == privacy_amplify(k, 100, 0.0, 2.0**-32, 99)


def test_toeplitz_matches_dense_matrix():
    rng = seeded_rng(5)
    key = BitString.random(37, rng)
    seed = BitString.random(64, rng)
    from keylab.auth.owf import prg_expand

    L, m = 37, 11
    t = prg_expand(seed, m + L - 1).bits
    T = np.array([[t[i - j + L - 1] for j in range(L)] for i in range(m)], dtype=np.int64)
    assert toeplitz_hash(key, m, seed) == BitString((T @ key.bits.astype(np.int64)) % 2)


def test_session_ideal_run():
    r = run_quke_session(ProtocolConfig(), rng=seeded_rng(0))
    assert not r.outcome.aborted and r.outcome.s_A == r.outcome.s_B
    assert len(r.outcome.s_A) >= 256 and r.stats.qber == 0.0


def test_session_intercept_resend_aborts():
    aborts = sum(
        run_quke_session(ProtocolConfig(n=512), EveTap.intercept_resend(), seeded_rng(s)).outcome.aborted for s in range(20)
    )
    assert aborts == 20


def test_threshold_monotonicity():
    for seed in range(6):
        base = run_quke_session(ProtocolConfig(noise_flip_prob=0.09, qber_abort_threshold=0.09), rng=seeded_rng(seed))
        if not base.outcome.aborted:
            hi = run_quke_session(ProtocolConfig(noise_flip_prob=0.09, qber_abort_threshold=0.12), rng=seeded_rng(seed))
            assert not hi.outcome.aborted
