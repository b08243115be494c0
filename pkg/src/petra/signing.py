"""Ed25519 signing for generators and producers.

The generator signs the Merkle root of the redacted tree; the producer
countersigns the generator's signature bytes after a successful
sameness audit. Messages are domain-separated so the two signature
kinds can never be confused for one another.
"""

from __future__ import annotations

from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

_ROOT_TAG = b"petra-root-v1"
_COUNTERSIGN_TAG = b"petra-countersig-v1"
_TOKEN_TAG = b"petra-token-v1"


@dataclass
class SigningKeyPair:
    private: Ed25519PrivateKey

    @classmethod
    def generate(cls) -> "SigningKeyPair":
        return cls(private=Ed25519PrivateKey.generate())

    @property
    def public_bytes(self) -> bytes:
        return self.private.public_key().public_bytes(
            encoding=serialization.Encoding.Raw,
            format=serialization.PublicFormat.Raw,
        )

    def private_pem(self) -> bytes:
        return self.private.private_bytes(
            encoding=serialization.Encoding.PEM,
            format=serialization.PrivateFormat.PKCS8,
            encryption_algorithm=serialization.NoEncryption(),
        )

    def public_pem(self) -> bytes:
        return self.private.public_key().public_bytes(
            encoding=serialization.Encoding.PEM,
            format=serialization.PublicFormat.SubjectPublicKeyInfo,
        )

    @classmethod
    def from_private_pem(cls, pem: bytes) -> "SigningKeyPair":
        key = serialization.load_pem_private_key(pem, password=None)
        if not isinstance(key, Ed25519PrivateKey):
            raise ValueError("expected an Ed25519 private key")
        return cls(private=key)


def load_public_key(pem: bytes) -> bytes:
    key = serialization.load_pem_public_key(pem)
    if not isinstance(key, Ed25519PublicKey):
        raise ValueError("expected an Ed25519 public key")
    return key.public_bytes(
        encoding=serialization.Encoding.Raw, format=serialization.PublicFormat.Raw
    )


def _verify(public: bytes, signature: bytes, message: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(public).verify(signature, message)
        return True
    except (InvalidSignature, ValueError):
        return False


def sign_root(keypair: SigningKeyPair, merkle_root: bytes) -> bytes:
    return keypair.private.sign(_ROOT_TAG + merkle_root)


def verify_root_signature(public: bytes, signature: bytes, merkle_root: bytes) -> bool:
    return _verify(public, signature, _ROOT_TAG + merkle_root)


def countersign(keypair: SigningKeyPair, generator_signature: bytes) -> bytes:
    return keypair.private.sign(_COUNTERSIGN_TAG + generator_signature)


def verify_countersignature(
    public: bytes, countersignature: bytes, generator_signature: bytes
) -> bool:
    return _verify(public, countersignature, _COUNTERSIGN_TAG + generator_signature)


def sign_token(keypair: SigningKeyPair, body: bytes) -> bytes:
    return keypair.private.sign(_TOKEN_TAG + body)


def verify_token_signature(public: bytes, signature: bytes, body: bytes) -> bool:
    return _verify(public, signature, _TOKEN_TAG + body)
