"""Minimal-assumption primitives used by the protocol runners."""

from .gf2k import gf_mul, gf_mul_vec, gf_pow
from .gm import (
    GmPublicKey,
    ToyScaleError,
    TrapdoorPredicateKeypair,
    factor_trial_division,
    tp_break,
    tp_decrypt_bit,
    tp_encrypt_bit,
    tp_keygen,
)
from .lamport import (
    KeyPoolEmpty,
    LamportKeypair,
    LamportPublicKey,
    OneTimeViolation,
    forge,
    forge_digest,
    lamport_keygen,
    lamport_sign,
    lamport_verify,
    recover_keypair,
    sign_digest,
    verify_digest,
)
from .owf import OwfConfig, invert, md_digest, prg_expand, stream_decrypt, stream_encrypt
from .wcmac import AuthKeyExhausted, PadReuse, WcMacKey, poly_hash, wc_tag, wc_verify

__all__ = [
    "AuthKeyExhausted",
    "GmPublicKey",
    "KeyPoolEmpty",
    "LamportKeypair",
    "LamportPublicKey",
    "OneTimeViolation",
    "OwfConfig",
    "PadReuse",
    "ToyScaleError",
    "TrapdoorPredicateKeypair",
    "WcMacKey",
    "factor_trial_division",
    "forge",
    "forge_digest",
    "gf_mul",
    "gf_mul_vec",
    "gf_pow",
    "invert",
    "lamport_keygen",
    "lamport_sign",
    "lamport_verify",
    "md_digest",
    "poly_hash",
    "prg_expand",
    "recover_keypair",
    "sign_digest",
    "stream_decrypt",
    "stream_encrypt",
    "tp_break",
    "tp_decrypt_bit",
    "tp_encrypt_bit",
    "tp_keygen",
    "verify_digest",
    "wc_tag",
    "wc_verify",
]
