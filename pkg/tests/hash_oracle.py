"""Standalone hash oracle used to pin the golden digest vectors.

Everything here is computed from first principles with hashlib and the
AES-GCM primitive only; nothing is imported from the petra package, so
these values independently cross-check the production hash passes.

Byte conventions under test:
  lp(x)            = 4-byte big-endian length of x, then x
  H(p0, p1, ...)   = SHA-256( lp(p0) + lp(p1) + ... )
  commit(d, salt)  = H(salt, d)

  field payload    = lp(name) + lp(value)
  complex payload  = element_type bytes
  sbom payload     = doc_meta bytes

  h_F_plain = commit(field payload, salt_F)
  h_C_plain = H(commit(complex payload, salt_C), child plain hashes...)
  h_S_plain = H(commit(sbom payload, salt_S), child plain hashes...)

  redacted blob (marker R) = policy_id + nonce + lp(AESGCM ct)
  public blob   (marker P) = lp(salt) + lp(payload)

  h_F = H("R", A_n, blob, h_F_plain)            | H("P", blob, h_F_plain)
  h_C = H("R", A_n, blob, h_C_plain, h_child..) | H("P", blob, h_C_plain, h_child..)
  merkle_root = H( lp(slot table) + lp(meta segment), h_S_plain, h_child.. )
      meta segment = "R" + lp(A_n) + lp(blob)   | "P" + lp(blob)
"""

import hashlib
import json
import struct

from cryptography.hazmat.primitives.ciphers.aead import AESGCM


def lp(data: bytes) -> bytes:
    return struct.pack(">I", len(data)) + data


def H(*parts: bytes) -> bytes:
    return hashlib.sha256(b"".join(lp(p) for p in parts)).digest()


def commit(data: bytes, salt: bytes) -> bytes:
    return H(salt, data)


# --- fixed inputs for the 3-node vector tree ---

FIELD_NAME = "licenseConcluded"
FIELD_VALUE = '"GPL-3.0-or-later"'
COMPLEX_TYPE = "package"
SBOM_INDEX = "pkg:generic/hello@2.12"
SBOM_META = "hello-sbom"

SALT_S = bytes([0x33]) * 32
SALT_C = bytes([0x22]) * 32
SALT_F = bytes([0x11]) * 32

AES_KEY = bytes([0x44]) * 32
NONCE_F = bytes([0x55]) * 12
NONCE_C = bytes([0x66]) * 12

TOY_SECRET = bytes([0x77]) * 32
TOY_WRAP_NONCE = bytes([0x88]) * 16

# access tree: single leaf user:producer -> encoding "L" + lp(attr)
ACCESS_ENC = b"L" + lp(b"user:producer")
POLICY_ID = hashlib.sha256(ACCESS_ENC).digest()


def field_payload(name: str, value: str) -> bytes:
    return lp(name.encode()) + lp(value.encode())


def toy_slot_bytes() -> bytes:
    wrap_pad = hashlib.sha256(b"petra-toy-wrap" + TOY_SECRET + POLICY_ID + TOY_WRAP_NONCE).digest()
    wrapped = bytes(a ^ b for a, b in zip(AES_KEY, wrap_pad))
    kcv = hashlib.sha256(b"petra-kcv-v1" + AES_KEY).digest()[:16]
    ct = lp(TOY_WRAP_NONCE) + lp(wrapped) + lp(kcv)
    return POLICY_ID + lp(ACCESS_ENC) + lp(ct)


def node_ciphertext(nonce: bytes, salt: bytes, payload: bytes) -> bytes:
    plaintext = lp(salt) + lp(payload)
    ct = AESGCM(AES_KEY).encrypt(nonce, plaintext, POLICY_ID)
    return POLICY_ID + nonce + lp(ct)


def compute_vectors() -> dict:
    f_payload = field_payload(FIELD_NAME, FIELD_VALUE)
    c_payload = COMPLEX_TYPE.encode()
    s_payload = SBOM_META.encode()

    h_f_plain = commit(f_payload, SALT_F)
    h_c_plain = H(commit(c_payload, SALT_C), h_f_plain)
    h_s_plain = H(commit(s_payload, SALT_S), h_c_plain)

    # field and complex redacted under the policy; sbom meta public
    blob_f = node_ciphertext(NONCE_F, SALT_F, f_payload)
    blob_c = node_ciphertext(NONCE_C, SALT_C, c_payload)
    h_f = H(b"R", ACCESS_ENC, blob_f, h_f_plain)
    h_c = H(b"R", ACCESS_ENC, blob_c, h_c_plain, h_f)

    slot_table = lp(toy_slot_bytes())
    meta_segment = b"P" + lp(lp(SALT_S) + lp(s_payload))
    merkle_root = H(slot_table + lp(meta_segment), h_s_plain, h_c)

    return {
        "h_f_plain": h_f_plain.hex(),
        "h_c_plain": h_c_plain.hex(),
        "h_s_plain": h_s_plain.hex(),
        "h_f": h_f.hex(),
        "h_c": h_c.hex(),
        "merkle_root": merkle_root.hex(),
    }


if __name__ == "__main__":
    print(json.dumps(compute_vectors(), indent=2))
