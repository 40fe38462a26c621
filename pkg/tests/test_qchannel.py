import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from keylab.core import BitString, seeded_rng
from keylab.qchannel import Basis, EveTap, FrameConsumed, prepare, transmit_and_measure

R, D = Basis.RECTILINEAR, Basis.DIAGONAL


def _measure_dist(prep_basis, prep_bit, meas_basis):
    """Outcome distribution of the conjugate-basis rule: {bit: probability}."""
    if prep_basis == meas_basis:
        return {prep_bit: Fraction(1)}
    return {0: Fraction(1, 2), 1: Fraction(1, 2)}


def intercept_resend_error_oracle() -> Fraction:
    """Exact matched-basis error rate under random-basis intercept-resend,
    by enumerating (sender basis, sender bit, Eve basis) and Eve's outcomes."""
    total = Fraction(0)
    for basis, bit, eve_basis in itertools.product((R, D), (0, 1), (R, D)):
        weight = Fraction(1, 8)
        for eve_bit, pe in _measure_dist(basis, bit, eve_basis).items():
            for bob_bit, pb in _measure_dist(eve_basis, eve_bit, basis).items():
                if bob_bit != bit:
                    total += weight * pe * pb
    return total


def test_oracle_value():
    assert intercept_resend_error_oracle() == Fraction(1, 4)


def test_prepare_examples():
    f = prepare(BitString.from_str("01"), [R, D])
    assert f.preparations() == [(R, 0), (D, 1)]
    assert len(prepare(BitString(), [])) == 0
    with pytest.raises(ValueError):
        prepare(BitString.from_str("011"), [R, D])


@pytest.mark.parametrize("basis,bit", list(itertools.product((R, D), (0, 1))))
def test_matched_noiseless_identity_single_qubit(basis, bit):
    f = prepare(BitString([bit]), [basis])
    m = transmit_and_measure(f, [basis], 0.0, EveTap.none(), seeded_rng(0))
    assert m.bits == BitString([bit])


def test_matched_noiseless_identity_example():
    f = prepare(BitString.from_str("1011"), [R, D, D, R])
    assert transmit_and_measure(f, [R, D, D, R], 0.0, EveTap.none(), seeded_rng(1)).bits == BitString.from_str("1011")


def test_frame_consumed_once():
    f = prepare(BitString.from_str("10"), [R, R])
    transmit_and_measure(f, [R, R], 0.0, EveTap.none(), seeded_rng(0))
    with pytest.raises(FrameConsumed):
        transmit_and_measure(f, [R, R], 0.0, EveTap.none(), seeded_rng(0))


@settings(max_examples=20, deadline=None)
@given(st.lists(st.booleans(), min_size=1, max_size=8))
def test_no_cloning_under_random_schedules(schedule):
    f = prepare(BitString.from_str("1"), [R])
    transmit_and_measure(f, [R], 0.0, EveTap.none(), seeded_rng(0))
    for _ in schedule:
        with pytest.raises(FrameConsumed):
            transmit_and_measure(f, [R], 0.0, EveTap.none(), seeded_rng(0))


def test_random_basis_match_fraction():
    rng = seeded_rng(11)
    n = 10_000
    ab = rng.integers(0, 2, n)
    bb = rng.integers(0, 2, n)
    frac = float(np.mean(ab == bb))
    assert 0.47 <= frac <= 0.53


def test_intercept_resend_error_rate():
    rng = seeded_rng(3)
    n = 10_000
    bits = BitString.random(n, rng)
    bases = rng.integers(0, 2, n)
    f = prepare(bits, bases)
    m = transmit_and_measure(f, bases, 0.0, EveTap.intercept_resend(), rng)
    err = float(np.mean(m.bits.bits != bits.bits))
    assert 0.22 <= err <= 0.28
    assert m.eve is not None and m.eve.bits.size == n


@pytest.mark.parametrize("basis,bit", list(itertools.product((R, D), (0, 1))))
def test_fixed_basis_equal_to_sender_is_invisible(basis, bit):
    f = prepare(BitString([bit]), [basis])
    m = transmit_and_measure(f, [basis], 0.0, EveTap.intercept_resend(basis), seeded_rng(0))
    assert m.bits == BitString([bit])
    assert int(m.eve.bits[0]) == bit


def test_noise_flips_matched_positions_only():
    rng = seeded_rng(9)
    n = 20_000
    bits = BitString.random(n, rng)
    f = prepare(bits, np.zeros(n, dtype=int))
    m = transmit_and_measure(f, np.zeros(n, dtype=int), 0.05, EveTap.none(), rng)
    assert 0.04 <= float(np.mean(m.bits.bits != bits.bits)) <= 0.06


def test_full_mitm_is_not_a_tap():
    f = prepare(BitString.from_str("1"), [R])
    with pytest.raises(ValueError):
        transmit_and_measure(f, [R], 0.0, EveTap.full_mitm(), seeded_rng(0))
