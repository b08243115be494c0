"""Deterministic test backend. EXPLICITLY INSECURE.

The "master secret" is copied into the public parameters, so anyone
holding the parameters can recover every key. The point of this backend
is speed in CI with byte-for-byte reproducible output under a seeded
RNG, while enforcing exactly the same satisfy-the-access-tree predicate
as the pairing backend (keys are MAC-bound to their attribute set, so
hand-assembled collusion keys are rejected). Never use it to protect
real data.
"""

from __future__ import annotations

import hashlib
import hmac

from ..encoding import ByteReader, lp
from ..errors import DecapsulationFailure
from ..policy import policy_id as access_policy_id, satisfies

SCHEME_ID = 2


def _mac(secret: bytes, attributes) -> bytes:
    material = b"".join(lp(a.encode("utf-8")) for a in sorted(attributes))
    return hmac.new(secret, b"petra-toy-key" + material, hashlib.sha256).digest()


def _wrap_pad(secret: bytes, pid: bytes, nonce: bytes) -> bytes:
    return hashlib.sha256(b"petra-toy-wrap" + secret + pid + nonce).digest()


def _kcv(key: bytes) -> bytes:
    return hashlib.sha256(b"petra-kcv-v1" + key).digest()[:16]


def setup(rng):
    secret = rng(32)
    return lp(secret), lp(secret)


def _secret_of(blob: bytes) -> bytes:
    reader = ByteReader(blob)
    secret = reader.lp_bytes()
    reader.expect_end()
    return secret


def keygen(mk: bytes, attributes, rng) -> bytes:
    del rng  # keys are deterministic in this backend
    return _mac(_secret_of(mk), attributes)


def encapsulate(pp: bytes, access, rng):
    secret = _secret_of(pp)
    key = rng(32)
    nonce = rng(16)
    pid = access_policy_id(access)
    wrapped = bytes(a ^ b for a, b in zip(key, _wrap_pad(secret, pid, nonce)))
    return key, lp(nonce) + lp(wrapped) + lp(_kcv(key))


def decapsulate(pp: bytes, access, ciphertext: bytes, sk: bytes, sk_attrs) -> bytes:
    secret = _secret_of(pp)
    if not hmac.compare_digest(sk, _mac(secret, sk_attrs)):
        raise DecapsulationFailure("key material does not match its attribute set")
    if not satisfies(access, set(sk_attrs)):
        raise DecapsulationFailure("attributes do not satisfy the access policy")
    try:
        reader = ByteReader(ciphertext)
        nonce = reader.lp_bytes()
        wrapped = reader.lp_bytes()
        kcv = reader.lp_bytes()
        reader.expect_end()
    except ValueError as exc:
        raise DecapsulationFailure(f"malformed ciphertext: {exc}") from exc
    pid = access_policy_id(access)
    key = bytes(a ^ b for a, b in zip(wrapped, _wrap_pad(secret, pid, nonce)))
    if _kcv(key) != kcv:
        raise DecapsulationFailure("key check value mismatch")
    return key


def self_check(pp: bytes) -> bool:
    try:
        _secret_of(pp)
    except ValueError:
        return False
    return True
