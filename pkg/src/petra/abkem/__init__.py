"""Attribute-based key encapsulation plus the symmetric node layer.

A random 256-bit key is drawn per distinct access tree and encapsulated
under it (one PolicyKeySlot per tree); node payloads are then sealed
with AES-256-GCM under that key. Two interchangeable backends implement
the encapsulation: the pairing-based scheme (default) and an insecure
deterministic one for fast tests.

Key files are versioned blobs: magic ``PABE``, format version, scheme
id, kind tag, payload.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from ..encoding import U32, ByteReader, lp
from ..errors import (
    AuthenticationFailure,
    DecapsulationFailure,
    EmptyAttributeSet,
    MalformedKeyFile,
)
from ..policy import decode_access_tree, encode_access_tree
from ..policy import policy_id as access_policy_id
from . import bsw07, insecure

SCHEME_PAIRING = bsw07.SCHEME_ID
SCHEME_INSECURE = insecure.SCHEME_ID
_BACKENDS = {SCHEME_PAIRING: bsw07, SCHEME_INSECURE: insecure}

MAGIC = b"PABE"
_VERSION = 1
_KIND_PP = 0x01
_KIND_MK = 0x02
_KIND_SK = 0x03

NONCE_BYTES = 12
KEY_BYTES = 32

_decap_calls = 0


def decap_call_count() -> int:
    """Total decapsulation attempts in this process (for order audits)."""
    return _decap_calls


@dataclass(frozen=True)
class PublicParams:
    scheme: int
    payload: bytes

    def self_check(self) -> bool:
        return _BACKENDS[self.scheme].self_check(self.payload)


@dataclass(frozen=True)
class MasterKey:
    scheme: int
    payload: bytes


@dataclass(frozen=True)
class AttributeSecretKey:
    scheme: int
    attributes: frozenset
    payload: bytes
    params: PublicParams | None = None


@dataclass(frozen=True)
class PolicyKeySlot:
    policy_id: bytes
    access: object  # AccessTree
    ciphertext: bytes

    def to_bytes(self) -> bytes:
        return self.policy_id + lp(encode_access_tree(self.access)) + lp(self.ciphertext)

    @classmethod
    def from_bytes(cls, data: bytes) -> "PolicyKeySlot":
        reader = ByteReader(data)
        pid = reader.take(32)
        access = decode_access_tree(reader.lp_bytes())
        ciphertext = reader.lp_bytes()
        reader.expect_end()
        return cls(policy_id=pid, access=access, ciphertext=ciphertext)


@dataclass(frozen=True)
class NodeCiphertext:
    policy_id: bytes
    nonce: bytes
    ciphertext: bytes  # AEAD output including the tag

    def to_bytes(self) -> bytes:
        return self.policy_id + self.nonce + lp(self.ciphertext)

    @classmethod
    def from_bytes(cls, data: bytes) -> "NodeCiphertext":
        reader = ByteReader(data)
        pid = reader.take(32)
        nonce = reader.take(NONCE_BYTES)
        ciphertext = reader.lp_bytes()
        reader.expect_end()
        return cls(policy_id=pid, nonce=nonce, ciphertext=ciphertext)


# --- KEM operations ---

def abe_setup(security_level: int = 128, scheme: int = SCHEME_PAIRING, rng=secrets.token_bytes):
    if security_level != 128:
        raise ValueError("only the 128-bit level is supported")
    backend = _BACKENDS[scheme]
    pp_payload, mk_payload = backend.setup(rng)
    return PublicParams(scheme, pp_payload), MasterKey(scheme, mk_payload)


def abe_keygen(
    mk: MasterKey,
    attributes,
    rng=secrets.token_bytes,
    params: PublicParams | None = None,
) -> AttributeSecretKey:
    attrs = frozenset(attributes)
    if not attrs:
        raise EmptyAttributeSet("key issuance requires at least one attribute")
    payload = _BACKENDS[mk.scheme].keygen(mk.payload, attrs, rng)
    return AttributeSecretKey(scheme=mk.scheme, attributes=attrs, payload=payload, params=params)


def encapsulate(pp: PublicParams, access, rng=secrets.token_bytes):
    key, ciphertext = _BACKENDS[pp.scheme].encapsulate(pp.payload, access, rng)
    slot = PolicyKeySlot(policy_id=access_policy_id(access), access=access, ciphertext=ciphertext)
    return key, slot


def decapsulate(pp: PublicParams, slot: PolicyKeySlot, sk: AttributeSecretKey) -> bytes:
    global _decap_calls
    _decap_calls += 1
    if sk.scheme != pp.scheme:
        raise DecapsulationFailure("key and parameters use different schemes")
    return _BACKENDS[pp.scheme].decapsulate(
        pp.payload, slot.access, slot.ciphertext, sk.payload, sk.attributes
    )


# --- symmetric node layer ---

def encrypt_node(
    key: bytes,
    salt: bytes,
    payload: bytes,
    policy_id: bytes,
    rng=secrets.token_bytes,
) -> NodeCiphertext:
    nonce = rng(NONCE_BYTES)
    plaintext = lp(salt) + lp(payload)
    ciphertext = AESGCM(key).encrypt(nonce, plaintext, policy_id)
    return NodeCiphertext(policy_id=policy_id, nonce=nonce, ciphertext=ciphertext)


def decrypt_node(key: bytes, ct: NodeCiphertext):
    try:
        plaintext = AESGCM(key).decrypt(ct.nonce, ct.ciphertext, ct.policy_id)
    except InvalidTag as exc:
        raise AuthenticationFailure("node ciphertext failed authentication") from exc
    reader = ByteReader(plaintext)
    salt = reader.lp_bytes()
    payload = reader.lp_bytes()
    reader.expect_end()
    return salt, payload


# --- key files ---

def _frame(scheme: int, kind: int, payload: bytes) -> bytes:
    return MAGIC + bytes([_VERSION, scheme, kind]) + payload


def _unframe(data: bytes, expected_kind: int):
    if len(data) < 7 or data[:4] != MAGIC:
        raise MalformedKeyFile("missing PABE magic")
    version, scheme, kind = data[4], data[5], data[6]
    if version != _VERSION:
        raise MalformedKeyFile(f"unsupported key file version {version}")
    if scheme not in _BACKENDS:
        raise MalformedKeyFile(f"unknown scheme id {scheme}")
    if kind != expected_kind:
        raise MalformedKeyFile(f"unexpected key kind {kind}")
    return scheme, data[7:]


def serialize_public_params(pp: PublicParams) -> bytes:
    return _frame(pp.scheme, _KIND_PP, pp.payload)


def load_public_params(data: bytes) -> PublicParams:
    scheme, payload = _unframe(data, _KIND_PP)
    return PublicParams(scheme=scheme, payload=payload)


def serialize_master_key(mk: MasterKey) -> bytes:
    return _frame(mk.scheme, _KIND_MK, mk.payload)


def load_master_key(data: bytes) -> MasterKey:
    scheme, payload = _unframe(data, _KIND_MK)
    return MasterKey(scheme=scheme, payload=payload)


def serialize_secret_key(sk: AttributeSecretKey) -> bytes:
    body = U32.pack(len(sk.attributes))
    for attr in sorted(sk.attributes):
        body += lp(attr.encode("utf-8"))
    body += lp(sk.payload)
    body += lp(sk.params.payload if sk.params is not None else b"")
    return _frame(sk.scheme, _KIND_SK, body)


def load_secret_key(data: bytes) -> AttributeSecretKey:
    scheme, body = _unframe(data, _KIND_SK)
    try:
        reader = ByteReader(body)
        attrs = frozenset(reader.lp_text() for _ in range(reader.u32()))
        payload = reader.lp_bytes()
        pp_payload = reader.lp_bytes()
        reader.expect_end()
    except ValueError as exc:
        raise MalformedKeyFile(f"truncated key file: {exc}") from exc
    params = PublicParams(scheme=scheme, payload=pp_payload) if pp_payload else None
    return AttributeSecretKey(scheme=scheme, attributes=attrs, payload=payload, params=params)
