"""Statistical machinery: recomputation oracles, the real-vs-ideal
distinguisher game, uniformity and independence tests, attribution.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

import numpy as np
from scipy import stats as sps
from scipy.special import xlogy

from .auth.gm import tp_break, tp_decrypt_bit
from .auth.owf import prg_expand, stream_encrypt
from .auth.wcmac import WcMacKey, wc_tag, wc_verify
from .channel import ClassicalChannel, Endpoint, covered_bits
from .core import (
    BitString,
    EveView,
    Message,
    MsgType,
    Party,
    ProtocolClassId,
    ProtocolConfig,
    Transcript,
    seeded_rng,
)

# ---------------------------------------------------------------------------
# Knowledge sets and recomputation oracles
# ---------------------------------------------------------------------------

KNOWLEDGE = ("pi", "k", "c", "r_A", "r_B", "broken_trapdoor")
_ALIASES = {"π": "pi", "protocol": "pi", "ra": "r_A", "rb": "r_B", "broken": "broken_trapdoor", "trapdoor": "broken_trapdoor"}

TRANSPORT_CLASSES = (ProtocolClassId.MAC_SKE, ProtocolClassId.SIG_SKE)

#: minimal knowledge sets under which each class's defining relation yields s
PRESCRIBED: dict[ProtocolClassId, tuple[frozenset[str], ...]] = {
    ProtocolClassId.OOB: (frozenset({"k"}),),
    ProtocolClassId.PGE: (frozenset({"pi", "k"}),),
    ProtocolClassId.SEB: (frozenset({"pi", "k", "c"}),),
    ProtocolClassId.MAC_SKE: (frozenset({"pi", "r_A", "r_B"}), frozenset({"pi", "c", "broken_trapdoor"})),
    ProtocolClassId.SIG_SKE: (frozenset({"pi", "r_A", "r_B"}), frozenset({"pi", "c", "broken_trapdoor"})),
    ProtocolClassId.MAC_QKE: (),
    ProtocolClassId.SIG_QKE: (),
}


def normalize_knowledge(knowledge: Iterable[str]) -> frozenset[str]:
    out = set()
    for item in knowledge:
        key = _ALIASES.get(item.strip().lower(), item.strip())
        key = {"r_a": "r_A", "r_b": "r_B"}.get(key.lower(), key)
        if key not in KNOWLEDGE:
            raise ValueError(f"unknown knowledge item {item!r}; choose from {KNOWLEDGE}")
        out.add(key)
    return frozenset(out)


def expected_success(class_id: ProtocolClassId, knowledge: Iterable[str]) -> bool:
    kn = normalize_knowledge(knowledge)
    return any(req <= kn for req in PRESCRIBED[class_id])


@dataclass(frozen=True)
class Material:
    """What an analyst holds: the run's public description plus ``knowledge``."""

    class_id: ProtocolClassId | None = None
    config: ProtocolConfig | None = None
    k: Any = None
    c: Transcript | None = None
    r_A: int | None = None
    r_B: int | None = None
    broken_trapdoor: bool = False

    @classmethod
    def from_run(cls, run, knowledge: Iterable[str]) -> "Material":
        kn = normalize_knowledge(knowledge)
        return cls(
            class_id=run.class_id if "pi" in kn else None,
            config=run.config if "pi" in kn else None,
            k=run.initial_keys.k if "k" in kn else None,
            c=run.transcript if "c" in kn else None,
            r_A=run.party_randomness[0] if "r_A" in kn else None,
            r_B=run.party_randomness[1] if "r_B" in kn else None,
            broken_trapdoor="broken_trapdoor" in kn,
        )

    @classmethod
    def from_view(cls, view: EveView, class_id: ProtocolClassId, config: ProtocolConfig, broken_trapdoor: bool = False) -> "Material":
        """Eve's material: protocol description, transcript and any revealed keys."""
        keys = view.revealed_keys
        return cls(
            class_id=class_id,
            config=config,
            k=keys.k if keys is not None else None,
            c=view.classical,
            broken_trapdoor=broken_trapdoor,
        )


def _alg_identity(m: Material) -> BitString | None:
    return m.k if isinstance(m.k, BitString) else None


def _alg_expand(m: Material) -> BitString | None:
    if not isinstance(m.k, BitString) or m.config is None:
        return None
    return prg_expand(m.k, m.config.n)


def _alg_seb_decrypt(m: Material) -> BitString | None:
    if not isinstance(m.k, BitString) or m.config is None or m.c is None:
        return None
    from .protocols.classical import seb_decrypt, seb_key_bits

    msgs = m.c.of_kind(MsgType.SEB_CIPHERTEXT)
    if not msgs or len(m.k) < seb_key_bits(m.config):
        return None
    return seb_decrypt(m.config, m.k, msgs[0].payload)


def _alg_transport_replay(m: Material) -> BitString | None:
    if m.class_id not in TRANSPORT_CLASSES or m.r_A is None or m.r_B is None:
        return None
    from .protocols.ake import gm_transport_exchange
    from .qke import SessionRngs

    channel = ClassicalChannel(Endpoint(Party.ALICE), Endpoint(Party.BOB))
    rngs = SessionRngs(seeded_rng(m.r_A), seeded_rng(m.r_B), seeded_rng(0), seeded_rng(0))
    return gm_transport_exchange(m.config, channel, rngs, m.config.n).s_A


def _alg_trapdoor(m: Material) -> BitString | None:
    if not m.broken_trapdoor or m.c is None or m.config is None:
        return None
    from .protocols.ake import decode_gm_ciphertext, decode_gm_public

    pks, cts = m.c.of_kind(MsgType.GM_PUBKEY), m.c.of_kind(MsgType.GM_CIPHERTEXT)
    if not pks or not cts:
        return None
    keypair = tp_break(decode_gm_public(pks[0].payload))
    return BitString([tp_decrypt_bit(keypair, v) for v in decode_gm_ciphertext(cts[0].payload)])


#: name -> (required knowledge, algorithm)
ALGORITHMS: dict[str, tuple[frozenset[str], Callable[[Material], BitString | None]]] = {
    "identity": (frozenset({"k"}), _alg_identity),
    "prg-expand": (frozenset({"pi", "k"}), _alg_expand),
    "seb-decrypt": (frozenset({"pi", "k", "c"}), _alg_seb_decrypt),
    "transport-replay": (frozenset({"pi", "r_A", "r_B"}), _alg_transport_replay),
    "trapdoor-decrypt": (frozenset({"pi", "c", "broken_trapdoor"}), _alg_trapdoor),
}

#: the algorithm that expresses each class's defining relation, in preference order
CLASS_ALGORITHMS: dict[ProtocolClassId, tuple[str, ...]] = {
    ProtocolClassId.OOB: ("identity",),
    ProtocolClassId.PGE: ("prg-expand",),
    ProtocolClassId.SEB: ("seb-decrypt",),
    ProtocolClassId.MAC_SKE: ("transport-replay", "trapdoor-decrypt"),
    ProtocolClassId.SIG_SKE: ("transport-replay", "trapdoor-decrypt"),
    ProtocolClassId.MAC_QKE: (),
    ProtocolClassId.SIG_QKE: (),
}


def _held(m: Material) -> frozenset[str]:
    held = set()
    if m.class_id is not None:
        held.add("pi")
    for name in ("k", "c", "r_A", "r_B"):
        if getattr(m, name) is not None:
            held.add(name)
    if m.broken_trapdoor:
        held.add("broken_trapdoor")
    return frozenset(held)


def recompute_candidates(material: Material) -> dict[str, BitString]:
    """Run every algorithm whose inputs the material covers."""
    held = _held(material)
    out = {}
    for name, (needs, alg) in ALGORITHMS.items():
        if needs <= held:
            cand = alg(material)
            if cand is not None:
                out[name] = cand
    return out


def best_guess(material: Material) -> BitString | None:
    """The candidate an analyst who knows the class would output, if any."""
    cands = recompute_candidates(material)
    order = CLASS_ALGORITHMS.get(material.class_id, ()) if material.class_id else ()
    for name in order:
        if name in cands:
            return cands[name]
    return None


@dataclass(frozen=True)
class OracleResult:
    success: bool
    candidate: BitString | None
    algorithm: str | None
    knowledge: frozenset[str]


def recompute_oracle(run, knowledge: Iterable[str]) -> OracleResult:
    """Try to reproduce ``s`` bit-exactly from ``knowledge`` about ``run``."""
    s = run.outcome.secret_key
    if s is None:
        raise ValueError("recompute_oracle needs a completed, agreed run")
    kn = normalize_knowledge(knowledge)
    cands = recompute_candidates(Material.from_run(run, kn))
    for name, cand in cands.items():
        if cand == s:
            return OracleResult(True, cand, name, kn)
    first = next(iter(cands.items()), (None, None))
    return OracleResult(False, first[1], first[0], kn)


def recognition_score(candidate: BitString | None, s: BitString | None, decoy: BitString | None) -> float:
    """Paired recognition game: shown the real key and a fresh decoy, a
    recogniser that accepts exactly its candidate is right with probability
    ``(1[cand = s] + 1[cand != decoy]) / 2``.  Chance is 1/2; an aborted run
    (``s`` is None) scores 1/2."""
    if s is None:
        return 0.5
    return 0.5 * (float(candidate is not None and candidate == s) + float(candidate is None or candidate != decoy))


# ---------------------------------------------------------------------------
# Binomial intervals
# ---------------------------------------------------------------------------


def wilson_interval(successes: float, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if n <= 0:
        return (0.0, 1.0)
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, centre - half), min(1.0, centre + half))


def newcombe_interval(p1: float, n1: int, p2: float, n2: int) -> tuple[float, float]:
    """Newcombe's hybrid score interval for ``p1 - p2`` (method 10)."""
    l1, u1 = wilson_interval(p1 * n1, n1)
    l2, u2 = wilson_interval(p2 * n2, n2)
    d = p1 - p2
    lo = d - math.sqrt((p1 - l1) ** 2 + (u2 - p2) ** 2)
    hi = d + math.sqrt((u1 - p1) ** 2 + (p2 - l2) ** 2)
    return (max(-1.0, lo), min(1.0, hi))


# ---------------------------------------------------------------------------
# Distinguisher game
# ---------------------------------------------------------------------------


@dataclass
class GameSample:
    """What a distinguisher sees from one run of a system."""

    eve_view: EveView
    s_A: BitString | None
    s_B: BitString | None
    class_id: ProtocolClassId
    config: ProtocolConfig


System = Callable[[np.random.Generator], GameSample]
Distinguisher = Callable[[GameSample], float]


def real_system(runner, config: ProtocolConfig, spec=None) -> System:
    """Honest runs of ``runner`` as seen by an Eve with ``spec``."""
    from .core import AdversarySpec

    spec = spec or AdversarySpec()

    def system(rng: np.random.Generator) -> GameSample:
        run = runner(config, rng, spec=spec)
        return GameSample(run.eve_view, run.outcome.s_A, run.outcome.s_B, run.class_id, config)

    return system


def idealize(sample: GameSample, rng: np.random.Generator) -> GameSample:
    """Replace the key by a fresh uniform one, keeping Eve's view."""
    if sample.s_A is None or sample.s_B is None:
        return GameSample(sample.eve_view, None, None, sample.class_id, sample.config)
    s = BitString.random(len(sample.s_A), rng)
    return GameSample(sample.eve_view, s, s, sample.class_id, sample.config)


def ideal_system(real: System) -> System:
    def system(rng: np.random.Generator) -> GameSample:
        return idealize(real(rng), rng)

    return system


def _transcript_stream(view: EveView, length: int) -> BitString:
    data = view.classical.to_bytes() if view.classical is not None else b""
    return prg_expand(BitString.from_bytes(hashlib.sha256(data).digest()), length)


def dist_recompute(x: GameSample) -> float:
    """1 if Eve's class-prescribed recomputation reproduces ``s_A``."""
    if x.s_A is None:
        return 0.0
    guess = best_guess(Material.from_view(x.eve_view, x.class_id, x.config))
    return float(guess is not None and guess == x.s_A)


def dist_transcript_correlation(x: GameSample) -> float:
    """Agreement rate between the key and a keystream derived from the transcript."""
    if x.s_A is None or len(x.s_A) == 0:
        return 0.5
    return float(np.mean(x.s_A.bits == _transcript_stream(x.eve_view, len(x.s_A)).bits))


def dist_revealed_key_correlation(x: GameSample) -> float:
    """Agreement rate between the key and the revealed initial key (tiled)."""
    keys = x.eve_view.revealed_keys
    if x.s_A is None or keys is None or not isinstance(keys.k, BitString) or len(keys.k) == 0:
        return 0.5
    k = np.resize(keys.k.bits, len(x.s_A))
    return float(np.mean(x.s_A.bits == k))


def dist_bit_balance(x: GameSample) -> float:
    if x.s_A is None or len(x.s_A) == 0:
        return 0.5
    return x.s_A.weight() / len(x.s_A)


def dist_agreement(x: GameSample) -> float:
    return float(x.s_A is not None and x.s_A == x.s_B)


DISTINGUISHERS: dict[str, Distinguisher] = {
    "recompute": dist_recompute,
    "transcript-correlation": dist_transcript_correlation,
    "revealed-key-correlation": dist_revealed_key_correlation,
    "bit-balance": dist_bit_balance,
    "agreement": dist_agreement,
}


def register_distinguisher(name: str, fn: Distinguisher) -> None:
    DISTINGUISHERS[name] = fn


@dataclass(frozen=True)
class DistinguisherResult:
    """``advantage_estimate = |Pr[B=1 | real] - Pr[B=1 | ideal]|``.

    Distinguishers may output a probability in [0, 1] (a randomised
    distinguisher averaged over its own coin); the interval is Newcombe's
    hybrid score interval on the two arms, folded to ``|.|``.
    """

    name: str
    advantage_estimate: float
    trials: int
    confidence_interval: tuple[float, float]
    p_real: float
    p_ideal: float

    def as_dict(self) -> dict[str, Any]:
        lo, hi = self.confidence_interval
        return {
            "distinguisher": self.name,
            "advantage": round(self.advantage_estimate, 6),
            "ci_low": round(lo, 6),
            "ci_high": round(hi, 6),
            "p_real": round(self.p_real, 6),
            "p_ideal": round(self.p_ideal, 6),
            "trials": self.trials,
        }


def _fold(lo: float, hi: float) -> tuple[float, float]:
    if lo >= 0:
        return (lo, hi)
    if hi <= 0:
        return (-hi, -lo)
    return (0.0, max(-lo, hi))


def distinguisher_game(
    real: System,
    ideal: System | None,
    distinguisher: Distinguisher | str | Iterable[str],
    trials: int,
    rng: np.random.Generator,
) -> DistinguisherResult | dict[str, DistinguisherResult]:
    """Monte-Carlo advantage of one or several distinguishers.

    With ``ideal=None`` the ideal system is the real one with its key
    replaced by a fresh uniform key, sampled on the same runs (common random
    numbers).  Passing a list of names evaluates them all on shared runs.
    """
    if isinstance(distinguisher, str):
        names, single = [distinguisher], True
    elif callable(distinguisher):
        names, single = [getattr(distinguisher, "__name__", "custom")], True
    else:
        names, single = list(distinguisher), False
    fns = [distinguisher if callable(distinguisher) else DISTINGUISHERS[n] for n in names]
    real_out = np.zeros((len(fns), trials))
    ideal_out = np.zeros((len(fns), trials))
    for t in range(trials):
        x = real(rng)
        y = idealize(x, rng) if ideal is None else ideal(rng)
        for i, fn in enumerate(fns):
            real_out[i, t] = fn(x)
            ideal_out[i, t] = fn(y)
    results = {}
    for i, name in enumerate(names):
        p1, p0 = float(real_out[i].mean()), float(ideal_out[i].mean())
        ci = _fold(*newcombe_interval(p1, trials, p0, trials))
        results[name] = DistinguisherResult(name, abs(p1 - p0), trials, ci, p1, p0)
    return results[names[0]] if single else results


# ---------------------------------------------------------------------------
# Uniformity and independence
# ---------------------------------------------------------------------------


def _key_matrix(keys: list[BitString]) -> np.ndarray:
    if not keys:
        raise ValueError("no keys")
    L = len(keys[0])
    if any(len(k) != L for k in keys):
        raise ValueError("keys must have equal length")
    return np.stack([k.bits for k in keys])


@dataclass(frozen=True)
class UniformityReport:
    frequencies: np.ndarray
    chi2: float
    dof: int
    p_value: float
    alpha: float
    samples: int

    @property
    def passed(self) -> bool:
        return self.p_value >= self.alpha

    def as_dict(self) -> dict[str, Any]:
        return {
            "samples": self.samples,
            "dof": self.dof,
            "chi2": round(self.chi2, 6),
            "p_value": round(self.p_value, 6),
            "passed": self.passed,
            "min_frequency": round(float(self.frequencies.min()), 6),
            "max_frequency": round(float(self.frequencies.max()), 6),
        }


def uniformity_test(keys: list[BitString], alpha: float = 0.05, min_samples: int = 500) -> UniformityReport:
    """Per-position one-frequencies and ``sum_j (n1_j - N/2)^2 / (N/4)`` ~ chi2(L)."""
    X = _key_matrix(keys)
    N, L = X.shape
    if N < min_samples:
        raise ValueError(f"uniformity test needs at least {min_samples} keys, got {N}")
    ones = X.sum(axis=0).astype(np.float64)
    chi2 = float(np.sum((ones - N / 2) ** 2 / (N / 4)))
    return UniformityReport(ones / N, chi2, L, float(sps.chi2.sf(chi2, L)), alpha, N)


def digest_feature(transcript: Transcript | bytes, buckets: int = 8) -> int:
    """Bucketed SHA-256 digest of a transcript."""
    data = transcript.to_bytes() if isinstance(transcript, Transcript) else bytes(transcript)
    return hashlib.sha256(data).digest()[0] % buckets


def _mi_bits(onehot: np.ndarray, X: np.ndarray, ones: np.ndarray) -> np.ndarray:
    """Plug-in MI (bits) between a categorical feature and each column of X."""
    N = X.shape[0]
    nb = onehot.sum(axis=0)[:, None]
    c1 = onehot.T @ X
    c0 = nb - c1
    n1 = ones[None, :]
    n0 = N - n1
    mi = xlogy(c1, c1 * N) - xlogy(c1, nb * n1) + xlogy(c0, c0 * N) - xlogy(c0, nb * n0)
    return mi.sum(axis=0) / (N * math.log(2))


@dataclass(frozen=True)
class IndependenceReport:
    p_values: np.ndarray
    mi: np.ndarray
    permutations: int
    alpha: float

    @property
    def rejection_rate(self) -> float:
        return float(np.mean(self.p_values <= self.alpha))

    def as_dict(self) -> dict[str, Any]:
        return {
            "bits": int(self.p_values.size),
            "permutations": self.permutations,
            "alpha": self.alpha,
            "rejection_rate": round(self.rejection_rate, 6),
            "max_mi_bits": round(float(self.mi.max()), 6),
            "min_p_value": round(float(self.p_values.min()), 6),
        }


def independence_test(
    keys: list[BitString],
    transcripts: list,
    feature_extractor: Callable[[Any], int] = digest_feature,
    permutations: int = 200,
    rng: np.random.Generator | None = None,
    alpha: float = 0.05,
) -> IndependenceReport:
    """Permutation test of MI between each key bit and a transcript feature.

    ``p = (1 + #{perm MI >= observed MI}) / (1 + permutations)``; the same
    feature permutation is applied to every bit.
    """
    if len(keys) != len(transcripts):
        raise ValueError("keys and transcripts must be paired")
    rng = rng if rng is not None else seeded_rng(0)
    X = _key_matrix(keys).astype(np.float64)
    feats = np.array([int(feature_extractor(t)) for t in transcripts])
    _, codes = np.unique(feats, return_inverse=True)
    onehot = np.eye(codes.max() + 1)[codes]
    ones = X.sum(axis=0)
    observed = _mi_bits(onehot, X, ones)
    exceed = np.zeros(X.shape[1])
    tol = 1e-12
    for _ in range(permutations):
        exceed += _mi_bits(onehot[rng.permutation(len(codes))], X, ones) >= observed - tol
    return IndependenceReport((1 + exceed) / (1 + permutations), observed, permutations, alpha)


def plugin_entropy(samples: Iterable[int]) -> float:
    """Plug-in Shannon entropy (bits) of a discrete sample."""
    _, counts = np.unique(np.fromiter(samples, dtype=np.int64), return_counts=True)
    p = counts / counts.sum()
    return float(-(p * np.log2(p)).sum())


def min_entropy(samples: Iterable[int]) -> float:
    _, counts = np.unique(np.fromiter(samples, dtype=np.int64), return_counts=True)
    return float(-math.log2(counts.max() / counts.sum()))


# ---------------------------------------------------------------------------
# Attribution
# ---------------------------------------------------------------------------

HEADER = BitString.from_int(0xA5C3, 16)
CIPHERS = ("otp", "short")
SHORT_KEY_BITS = 64


def encrypt_application(s: BitString, plaintext: BitString, cipher: str = "otp") -> BitString:
    """Use the established key: one-time pad, or a PRG stream cipher keyed by
    the first 64 key bits (a short key reused for a long message)."""
    if cipher == "otp":
        if len(plaintext) > len(s):
            raise ValueError("one-time pad needs a key at least as long as the message")
        return plaintext ^ s[: len(plaintext)]
    if cipher == "short":
        return stream_encrypt(s[:SHORT_KEY_BITS], plaintext)
    raise ValueError(f"unknown cipher {cipher!r}")


decrypt_application = encrypt_application


@dataclass(frozen=True)
class HeaderRecognizer:
    """Accept a candidate key if it decrypts the ciphertext to the known header."""

    cipher: str = "otp"
    header: BitString = HEADER

    def __call__(self, candidate: BitString, ciphertext: BitString) -> bool:
        if candidate is None or len(ciphertext) < len(self.header):
            return False
        try:
            pt = decrypt_application(candidate, ciphertext, self.cipher)
        except ValueError:
            return False
        return pt[: len(self.header)] == self.header


@dataclass(frozen=True)
class AttributionVerdict:
    attributable: bool
    party_attributable: bool
    provably_party_attributable: bool
    method: str
    evidence: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.provably_party_attributable and not self.party_attributable:
            raise ValueError("provable party attribution implies party attribution")

    @property
    def label(self) -> str:
        if not self.attributable:
            return "nonattributable"
        if self.provably_party_attributable:
            return "provably-party-attributable"
        if self.party_attributable:
            return "party-attributable"
        return "attributable"

    def as_dict(self) -> dict[str, Any]:
        return {
            "label": self.label,
            "attributable": self.attributable,
            "party_attributable": self.party_attributable,
            "provably_party_attributable": self.provably_party_attributable,
            "method": self.method,
            **{k: v for k, v in self.evidence.items()},
        }


def mac_repudiation_demo(run) -> bool:
    """Bob, holding the shared MAC key, tags a message in Alice's name and the
    tag verifies under Alice's copy of the key: MAC tags cannot prove authorship."""
    cfg = run.config
    k = run.initial_keys.k[: cfg.mac_key_bits]
    bob_copy, alice_copy = WcMacKey.from_bits(k, cfg.mac_tag_bits), WcMacKey.from_bits(k, cfg.mac_tag_bits)
    claim = Message(Party.ALICE, MsgType.APPLICATION, BitString.from_bytes(b"pay Bob 100"))
    data = covered_bits(claim, 0)
    return wc_verify(alice_copy, data, wc_tag(bob_copy, data, index=0), index=0)


def attribution_check(run, knowledge: Iterable[str], recognizer: HeaderRecognizer | None = None, application: BitString | None = None) -> AttributionVerdict:
    """Can ``s`` (or ciphertext under it) be linked to the transcript, and is
    the transcript bound to a party?"""
    kn = normalize_knowledge(knowledge)
    s = run.outcome.secret_key
    cands = recompute_candidates(Material.from_run(run, kn))
    linked = [name for name, cand in cands.items() if s is not None and cand == s]
    recognized = []
    if recognizer is not None and application is not None:
        recognized = [name for name, cand in cands.items() if recognizer(cand, application)]
    attributable = bool(linked or recognized)
    authenticated = len(run.transcript) > 0 and all(m.auth is not None for m in run.transcript.classical_messages)
    signed = authenticated and run.class_id in (ProtocolClassId.SIG_QKE, ProtocolClassId.SIG_SKE)
    evidence: dict[str, Any] = {"knowledge": sorted(kn), "linked_by": linked, "recognized_by": recognized}
    if authenticated and not signed:
        evidence["mac_forgeable_by_peer"] = mac_repudiation_demo(run) if run.initial_keys.kind == "symmetric" else None
    if attributable:
        method = "recomputation" if linked else "recognizer"
    else:
        method = "no algorithm links the key to the transcript"
    if signed:
        method += "; transcript signed (publicly verifiable)"
    elif authenticated:
        method += "; transcript MAC-tagged (either key holder could have produced it)"
    return AttributionVerdict(attributable, authenticated, signed, method, evidence)
