"""BB84 classical post-processing and the unauthenticated QKE session.

Pipeline: prepare -> transmit -> sift -> sample QBER -> Cascade -> verify
hash -> Toeplitz privacy amplification.  Every classical step goes through a
:class:`~keylab.channel.ClassicalChannel`, so the same code serves the
unauthenticated session and the MAC/signature-authenticated protocols.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .auth.owf import prg_expand
from .channel import ClassicalChannel, Endpoint, ProtocolViolation
from .core import (
    AdversarySpec,
    BitString,
    EveView,
    FrameRecord,
    KeylabError,
    Mode,
    MsgType,
    Party,
    ProtocolAbort,
    ProtocolConfig,
    SessionOutcome,
    Transcript,
    child_seeds,
    draw_seed,
    random_bits,
    seeded_rng,
)
from .qchannel import EveRecord, EveTap, prepare, transmit_and_measure

VERIFY_HASH_BITS = 64
PARITY_HEADER_BITS = 72  # 64-bit permutation seed + 8-bit log2(base block)
SEED_BITS = 64


class QberAbort(ProtocolAbort):
    reason = "qber-abort"


class ReconciliationFailure(ProtocolAbort):
    reason = "reconciliation-failure"


class InsufficientKey(ProtocolAbort):
    reason = "insufficient-key"


# ---------------------------------------------------------------------------
# Sifting and QBER estimation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SiftedPair:
    alice_bits: BitString
    bob_bits: BitString
    kept_indices: tuple[int, ...]

    def __post_init__(self):
        if not len(self.alice_bits) == len(self.bob_bits) == len(self.kept_indices):
            raise ValueError("sifted pair components must have equal length")

    def __len__(self) -> int:
        return len(self.alice_bits)

    def subset(self, positions: np.ndarray) -> "SiftedPair":
        kept = np.asarray(self.kept_indices, dtype=np.int64)
        return SiftedPair(self.alice_bits[positions], self.bob_bits[positions], tuple(int(i) for i in kept[positions]))


def _arr(x) -> np.ndarray:
    if isinstance(x, BitString):
        return x.bits
    return np.asarray([int(v) for v in x] if not isinstance(x, np.ndarray) else x, dtype=np.uint8)


def sift(alice_bases, bob_bases, alice_bits, bob_bits) -> SiftedPair:
    ab, bb, ax, bx = (_arr(v) for v in (alice_bases, bob_bases, alice_bits, bob_bits))
    if not ab.size == bb.size == ax.size == bx.size:
        raise ValueError("sift inputs must have equal length")
    keep = np.flatnonzero(ab == bb)
    return SiftedPair(BitString._wrap(ax[keep]), BitString._wrap(bx[keep]), tuple(int(i) for i in keep))


def sample_positions(length: int, sample_fraction: float, rng: np.random.Generator) -> np.ndarray:
    """Sorted uniform sample of ``round(length * sample_fraction)`` positions."""
    if length <= 0:
        raise ValueError("cannot sample from an empty key")
    if not 0 < sample_fraction < 1:
        raise ValueError("sample_fraction must lie in (0, 1)")
    size = int(round(length * sample_fraction))
    if size == 0 or size >= length:
        raise ValueError(f"sample of {size} from {length} bits would be empty or total")
    return np.sort(rng.choice(length, size=size, replace=False))


def estimate_qber(pair: SiftedPair, sample_fraction: float, rng: np.random.Generator):
    """Returns ``(estimate, remaining_pair, disclosed_positions)``."""
    pos = sample_positions(len(pair), sample_fraction, rng)
    a, b = pair.alice_bits.bits, pair.bob_bits.bits
    estimate = float(np.count_nonzero(a[pos] != b[pos])) / pos.size
    rest = np.setdiff1d(np.arange(len(pair)), pos, assume_unique=True)
    return estimate, pair.subset(rest), tuple(int(p) for p in pos)


# ---------------------------------------------------------------------------
# Privacy amplification
# ---------------------------------------------------------------------------


def binary_entropy(p: float) -> float:
    if p <= 0 or p >= 1:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def pa_output_length(key_len: int, leaked_bits: int, qber: float, target_epsilon: float) -> int:
    """``floor(L * (1 - h2(q)) - leaked - 2 log2(1/eps))``; h2 saturates at 1."""
    h = 1.0 if qber >= 0.5 else binary_entropy(qber)
    return math.floor(key_len * (1 - h) - leaked_bits - 2 * math.log2(1 / target_epsilon))


def toeplitz_hash(key: BitString, out_len: int, seed: BitString) -> BitString:
    """``T @ key`` over GF(2) for the ``out_len x len(key)`` Toeplitz matrix
    ``T[i, j] = t[i - j + len(key) - 1]`` with ``t = prg_expand(seed, out_len + len(key) - 1)``."""
    L = len(key)
    if out_len <= 0 or L == 0:
        raise ValueError("Toeplitz hash needs positive dimensions")
    t = prg_expand(seed, out_len + L - 1).bits.astype(np.float64)
    conv = fftconvolve(t, key.bits.astype(np.float64))[L - 1 : L - 1 + out_len]
    return BitString._wrap(np.rint(conv).astype(np.int64) & 1)


def privacy_amplify(key: BitString, leaked_bits: int, qber_estimate: float, target_epsilon: float, rng_seed: int) -> BitString:
    m = pa_output_length(len(key), leaked_bits, qber_estimate, target_epsilon)
    if m <= 0:
        raise InsufficientKey(f"privacy amplification leaves {m} bits")
    return toeplitz_hash(key, m, BitString.from_int(rng_seed % (1 << SEED_BITS), SEED_BITS))


# ---------------------------------------------------------------------------
# Cascade reconciliation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReconciliationResult:
    corrected_key: BitString
    leaked_bits: int
    verify_bits: int = VERIFY_HASH_BITS
    corrections: int = 0
    transcript: Transcript | None = field(default=None, compare=False)


def base_block_size(qber_hint: float) -> int:
    if qber_hint <= 0.05:
        return 16
    return int(max(4, min(16, 2 ** math.floor(math.log2(0.73 / qber_hint)))))


def _encode_ranges(ranges: list[tuple[int, int, int]]) -> BitString:
    data = b"".join(struct.pack(">BII", p, s, e) for p, s, e in ranges)
    return BitString.from_bytes(data)


def _decode_ranges(payload: BitString, L: int, passes: int) -> list[tuple[int, int, int]]:
    if len(payload) % 72:
        raise ProtocolViolation("malformed parity request")
    raw = payload.to_bytes()
    out = []
    for off in range(0, len(raw), 9):
        p, s, e = struct.unpack_from(">BII", raw, off)
        if p >= passes or not 0 <= s < e <= L:
            raise ProtocolViolation("parity request out of range")
        out.append((p, s, e))
    return out


def _pass_orders(L: int, passes: int, perm_seed: int) -> list[np.ndarray]:
    rng = seeded_rng(perm_seed)
    orders = [np.arange(L)]
    for _ in range(1, passes):
        orders.append(rng.permutation(L))
    return orders


def _block_parities(bits: np.ndarray, size: int) -> np.ndarray:
    starts = np.arange(0, bits.size, size)
    return (np.add.reduceat(bits.astype(np.int64), starts) & 1).astype(np.uint8)


def count_parity_bits(transcript: Transcript) -> int:
    """Parity values disclosed in a transcript's reconciliation messages."""
    msgs = transcript.of_kind(MsgType.PARITIES)
    return sum(len(m.payload) for m in msgs) - PARITY_HEADER_BITS * (1 if msgs else 0)


def reconcile(
    pair: SiftedPair,
    rng: np.random.Generator,
    channel: ClassicalChannel | None = None,
    rounds: int = 4,
    qber_hint: float = 0.0,
    block_size: int | None = None,
) -> ReconciliationResult:
    """Cascade with all passes announced together, then a verification hash.

    Alice's parities are the only disclosed key information; Bob drives the
    bisection with batched range requests.  A residual mismatch caught by
    the final hash raises :class:`ReconciliationFailure`.
    """
    if len(pair) == 0:
        raise ValueError("cannot reconcile an empty key")
    if channel is None:
        channel = ClassicalChannel(Endpoint(Party.ALICE), Endpoint(Party.BOB))
    alice_ep, bob_ep = channel.a, channel.b
    a = pair.alice_bits.bits
    b = pair.bob_bits.bits.copy()
    L = a.size
    k1 = block_size or base_block_size(qber_hint)
    sizes = [min(L, k1 << p) for p in range(rounds)]

    # Alice: choose permutations, announce top-level parities of every pass
    perm_seed = draw_seed(rng)
    orders = _pass_orders(L, rounds, perm_seed)
    a_perm = [a[o] for o in orders]
    top = np.concatenate([_block_parities(a_perm[p], sizes[p]) for p in range(rounds)])
    header = BitString.from_int(perm_seed, 64) + BitString.from_int(int(math.log2(k1)), 8)
    got = channel.send(alice_ep, MsgType.PARITIES, header + BitString._wrap(top))
    leaked = len(top)

    # Bob: same permutations from the delivered header
    if len(got) < PARITY_HEADER_BITS:
        raise ProtocolViolation("parity header missing")
    b_seed = got[:64].to_int()
    b_k1 = 1 << got[64:72].to_int()
    b_sizes = [min(L, b_k1 << p) for p in range(rounds)]
    b_orders = orders if b_seed == perm_seed else _pass_orders(L, rounds, b_seed)
    positions = [np.argsort(o) for o in b_orders]
    b_perm = [b[o] for o in b_orders]
    counts = [-(-L // s) for s in b_sizes]
    if len(got) - PARITY_HEADER_BITS != sum(counts):
        raise ProtocolViolation("wrong number of top-level parities")
    alice_top = np.split(got.bits[PARITY_HEADER_BITS:], np.cumsum(counts)[:-1])

    def flip(idx: int) -> None:
        b[idx] ^= 1
        for p in range(rounds):
            b_perm[p][positions[p][idx]] ^= 1

    def parity(p: int, s: int, e: int) -> int:
        return int(np.count_nonzero(b_perm[p][s:e])) & 1

    pending: list[tuple[int, int, int, int]] = []  # pass, start, stop, alice parity
    corrections = 0
    for _ in range(4 * L + 16):
        pending = [r for r in pending if parity(*r[:3]) != r[3]]
        covered = {(p, s // b_sizes[p]) for p, s, _, _ in pending}
        for p in range(rounds):
            odd = np.flatnonzero(_block_parities(b_perm[p], b_sizes[p]) != alice_top[p])
            for j in odd:
                if (p, int(j)) not in covered:
                    s = int(j) * b_sizes[p]
                    pending.append((p, s, min(L, s + b_sizes[p]), int(alice_top[p][j])))
        # a differing bit can be pinned down in several passes at once
        singles = {int(b_orders[p][s]) for p, s, e, _ in pending if e - s == 1}
        for idx in sorted(singles):
            flip(idx)
            corrections += 1
        if singles:
            continue
        # bisect the earliest pass first; later passes wait, since flips found
        # in earlier passes often repair their odd blocks for free
        if pending:
            first = min(r[0] for r in pending)
            waiting = [r for r in pending if r[0] != first]
            pending = [r for r in pending if r[0] == first]
        else:
            waiting = []
        request = [(p, s, (s + e) // 2) for p, s, e, _ in pending]
        got_req = channel.send(bob_ep, MsgType.PARITY_REQUEST, _encode_ranges(request))
        if not request:
            break
        # Alice answers with the parities of the requested ranges
        asked = _decode_ranges(got_req, L, rounds)
        answer = np.array([int(np.count_nonzero(a_perm[p][s:e])) & 1 for p, s, e in asked], dtype=np.uint8)
        reply = channel.send(alice_ep, MsgType.PARITIES, BitString._wrap(answer))
        leaked += len(answer)
        if len(reply) != len(pending):
            raise ProtocolViolation("parity reply length mismatch")
        nxt = []
        for (p, s, e, ap), left_a in zip(pending, reply.bits):
            if parity(p, s, e) == ap:
                continue
            mid = (s + e) // 2
            if parity(p, s, mid) != left_a:
                nxt.append((p, s, mid, int(left_a)))
            else:
                nxt.append((p, mid, e, ap ^ int(left_a)))
        pending = nxt + waiting
    else:
        raise ReconciliationFailure("cascade did not converge")

    # verification hash, Alice -> Bob, Bob answers with the comparison bit
    vseed = BitString.from_int(draw_seed(rng), SEED_BITS)
    digest = toeplitz_hash(pair.alice_bits, VERIFY_HASH_BITS, vseed)
    got = channel.send(alice_ep, MsgType.VERIFY_HASH, vseed + digest)
    ok = toeplitz_hash(BitString._wrap(b), VERIFY_HASH_BITS, got[:SEED_BITS]) == got[SEED_BITS:]
    verdict = channel.send(bob_ep, MsgType.VERIFY_RESULT, BitString([int(ok)]))
    if not ok or verdict.bits[0] != 1:
        raise ReconciliationFailure("verification hash mismatch after cascade")
    return ReconciliationResult(BitString._wrap(b), leaked, VERIFY_HASH_BITS, corrections, channel.transcript)


# ---------------------------------------------------------------------------
# The two-party session
# ---------------------------------------------------------------------------


def leak_rate_estimate(qber: float, rounds: int = 4) -> float:
    k1 = base_block_size(qber)
    top = sum(1 / (k1 << p) for p in range(rounds))
    return top + qber * (math.log2(k1) + 4)


def raw_qubits_for(config: ProtocolConfig, target_len: int) -> int:
    """Qubit count expected to yield ``target_len`` bits after amplification."""
    q = config.noise_flip_prob
    f = config.sample_fraction
    overhead = VERIFY_HASH_BITS + 2 * math.log2(1 / config.target_epsilon)
    n_raw = 4096
    for _ in range(6):
        sample = 0.5 * f * n_raw
        q_eff = min(0.5, q + 3 * math.sqrt(q * (1 - q) / sample)) if q > 0 else 0.0
        yield_per_bit = 1 - binary_entropy(q_eff) - leak_rate_estimate(q_eff, config.cascade_rounds)
        if yield_per_bit <= 0.02:
            n_raw *= 4
            continue
        n_raw = math.ceil((target_len + overhead) / yield_per_bit / (0.5 * (1 - f)) * 1.1) + 64
    if yield_per_bit <= 0.02:
        raise InsufficientKey(f"noise {q} leaves no key after amplification")
    return n_raw


@dataclass
class SessionStats:
    raw_qubits: int = 0
    sifted: int = 0
    sample_size: int = 0
    qber: float | None = None
    leaked_bits: int = 0
    verify_bits: int = 0
    pa_length: int = 0
    corrections: int = 0
    messages: int = 0


@dataclass
class SessionRngs:
    alice: np.random.Generator
    bob: np.random.Generator
    nature: np.random.Generator
    eve: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "SessionRngs":
        return cls(*(seeded_rng(s) for s in child_seeds(seed, 4)))


@dataclass
class SessionResult:
    s_A: BitString | None
    s_B: BitString | None
    stats: SessionStats
    eve_record: EveRecord | None = None
    abort: ProtocolAbort | None = None


def qke_exchange(
    config: ProtocolConfig,
    channel: ClassicalChannel,
    rngs: SessionRngs,
    target_len: int,
    tap: EveTap = EveTap.none(),
) -> SessionResult:
    """One BB84 session between ``channel.a`` (sender) and ``channel.b``.

    Aborts are caught and reported in the result, never raised.
    """
    stats = SessionStats()
    record = None
    try:
        n_raw = raw_qubits_for(config, target_len)
        stats.raw_qubits = n_raw
        a_ep, b_ep = channel.a, channel.b
        # quantum phase
        a_bits = random_bits(rngs.alice, n_raw)
        a_bases = random_bits(rngs.alice, n_raw)
        frame = prepare(a_bits, a_bases, a_ep.party, frame_id=len(channel.transcript.quantum_frames) + 1)
        b_bases = random_bits(rngs.bob, n_raw)
        meas = transmit_and_measure(frame, b_bases, config.noise_flip_prob, tap, rngs.nature, rngs.eve)
        record = meas.eve
        channel.transcript.log_frame(FrameRecord(frame.frame_id, a_ep.party, meas.tapped, n_raw))
        b_bits = meas.bits.bits

        # sifting: Bob announces bases, Alice answers with the match mask
        seen_b_bases = channel.send(b_ep, MsgType.BASES_BOB, BitString._wrap(b_bases)).bits
        if seen_b_bases.size != n_raw:
            raise ProtocolViolation("basis announcement has wrong length")
        a_keep = np.flatnonzero(a_bases == seen_b_bases)
        mask = channel.send(a_ep, MsgType.SIFT_MASK, BitString._wrap((a_bases == seen_b_bases).astype(np.uint8))).bits
        if mask.size != n_raw:
            raise ProtocolViolation("sift mask has wrong length")
        b_keep = np.flatnonzero(mask)
        a_sift, b_sift = a_bits[a_keep], b_bits[b_keep]
        stats.sifted = int(a_keep.size)

        # parameter estimation on a uniform sample of the sifted key
        pos = sample_positions(a_sift.size, config.sample_fraction, rngs.alice)
        smask = np.zeros(a_sift.size, dtype=np.uint8)
        smask[pos] = 1
        got = channel.send(a_ep, MsgType.SAMPLE_ALICE, BitString._wrap(np.concatenate([smask, a_sift[pos]])))
        if b_sift.size != a_sift.size or len(got) != b_sift.size + pos.size:
            raise ProtocolViolation("sample announcement inconsistent with sifted key")
        b_mask = got.bits[: b_sift.size].astype(bool)
        a_vals_seen = got.bits[b_sift.size :]
        if int(b_mask.sum()) != a_vals_seen.size:
            raise ProtocolViolation("sample mask and values disagree")
        b_vals = b_sift[b_mask]
        qber_b = float(np.count_nonzero(b_vals != a_vals_seen)) / max(1, b_vals.size)
        b_vals_seen = channel.send(b_ep, MsgType.SAMPLE_BOB, BitString._wrap(b_vals)).bits
        qber_a = float(np.count_nonzero(b_vals_seen != a_sift[pos])) / pos.size
        stats.sample_size = int(pos.size)
        stats.qber = qber_a
        if qber_a > config.qber_abort_threshold or qber_b > config.qber_abort_threshold:
            raise QberAbort(f"QBER estimate {qber_a:.4f} above {config.qber_abort_threshold}")

        a_rest = np.delete(a_sift, pos)
        b_rest = b_sift[~b_mask]
        kept = np.delete(a_keep, pos)
        pair = SiftedPair(BitString._wrap(a_rest), BitString._wrap(b_rest), tuple(int(i) for i in kept))
        rec = reconcile(pair, rngs.alice, channel, rounds=config.cascade_rounds, qber_hint=qber_a)
        stats.leaked_bits = rec.leaked_bits
        stats.verify_bits = rec.verify_bits
        stats.corrections = rec.corrections

        # privacy amplification, seed chosen by Alice
        pa_seed = BitString.from_int(draw_seed(rngs.alice), SEED_BITS)
        seen_seed = channel.send(a_ep, MsgType.PA_SEED, pa_seed)
        m = pa_output_length(len(pair), rec.leaked_bits + rec.verify_bits, qber_a, config.target_epsilon)
        stats.pa_length = m
        if m < target_len:
            raise InsufficientKey(f"amplified key would have {m} < {target_len} bits")
        s_A = toeplitz_hash(pair.alice_bits, target_len, pa_seed)
        s_B = toeplitz_hash(rec.corrected_key, target_len, seen_seed)
        stats.messages = len(channel.transcript)
        return SessionResult(s_A, s_B, stats, record)
    except ProtocolAbort as exc:
        stats.messages = len(channel.transcript)
        return SessionResult(None, None, stats, record, exc)


@dataclass
class QukeResult:
    outcome: SessionOutcome
    transcript: Transcript
    eve_view: EveView
    stats: SessionStats

    def __iter__(self):
        return iter((self.outcome, self.transcript, self.eve_view))


def run_quke_session(config: ProtocolConfig, tap: EveTap = EveTap.none(), rng: np.random.Generator | None = None) -> QukeResult:
    """Unauthenticated BB84 session producing ``config.n`` key bits."""
    if rng is None:
        rng = seeded_rng(config.rng_seed)
    rngs = SessionRngs.from_seed(draw_seed(rng))
    channel = ClassicalChannel(Endpoint(Party.ALICE), Endpoint(Party.BOB))
    res = qke_exchange(config, channel, rngs, config.n, tap)
    transcript = channel.transcript.freeze()
    outcome = SessionOutcome(res.s_A, res.s_B) if res.abort is None else SessionOutcome.abort(res.abort.reason)
    spec = AdversarySpec(Mode.PASSIVE, Mode.ACTIVE if tap.kind != "none" else Mode.PASSIVE)
    view = EveView(spec, classical=transcript, quantum_record=res.eve_record)
    return QukeResult(outcome, transcript, view, res.stats)


# alias matching the usual "qUKE" spelling
run_qUKE_session = run_quke_session

__all__ = [
    "InsufficientKey",
    "KeylabError",
    "QberAbort",
    "ReconciliationFailure",
    "ReconciliationResult",
    "SiftedPair",
    "binary_entropy",
    "count_parity_bits",
    "estimate_qber",
    "pa_output_length",
    "privacy_amplify",
    "qke_exchange",
    "raw_qubits_for",
    "reconcile",
    "run_quke_session",
    "sift",
    "toeplitz_hash",
]
