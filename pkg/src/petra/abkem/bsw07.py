"""Ciphertext-policy ABE over the symmetric pairing, used as a KEM.

Setup picks alpha, beta and publishes (g, g^beta, e(g,g)^alpha). A
decryption key for attribute set S blinds everything with a per-key
random r0 (the collusion barrier): D = g^((alpha+r0)/beta) and, for
each attribute, D_a = g^r0 * H(a)^{r_a}, D'_a = g^{r_a}.

Encapsulation shares a random exponent s over the access tree with one
Shamir polynomial per gate; each leaf publishes (g^q, H(attr)^q). The
encapsulated key is derived from e(g,g)^(alpha*s), which a key can
reassemble exactly when its attributes satisfy the tree.
"""

from __future__ import annotations

import hashlib
from functools import lru_cache

from ..encoding import U32, ByteReader, lp
from ..errors import DecapsulationFailure
from ..policy import AttributeLeaf
from . import pairing as pr

SCHEME_ID = 1
_SCALAR_BYTES = 32


def _kdf(gt_element) -> bytes:
    return hashlib.sha256(b"petra-kem-v1" + pr.gt_to_bytes(gt_element)).digest()


def _kcv(key: bytes) -> bytes:
    return hashlib.sha256(b"petra-kcv-v1" + key).digest()[:16]


@lru_cache(maxsize=4096)
def _attr_point(attribute: str):
    return pr.hash_to_group(b"petra-attr-v1" + attribute.encode("utf-8"))


def _scalar_bytes(k) -> bytes:
    return int(k).to_bytes(_SCALAR_BYTES, "big")


def setup(rng):
    g = pr.point_mul(pr.GENERATOR, pr.random_scalar(rng))
    alpha = pr.random_scalar(rng)
    beta = pr.random_scalar(rng)
    g_beta = pr.point_mul(g, beta)
    egg_alpha = pr.gt_pow(pr.pairing(g, g), alpha)
    pp = lp(pr.point_to_bytes(g)) + lp(pr.point_to_bytes(g_beta)) + lp(pr.gt_to_bytes(egg_alpha))
    mk = lp(_scalar_bytes(alpha)) + lp(_scalar_bytes(beta)) + lp(pp)
    return pp, mk


def _parse_pp(pp: bytes):
    reader = ByteReader(pp)
    g = pr.point_from_bytes(reader.lp_bytes())
    g_beta = pr.point_from_bytes(reader.lp_bytes())
    gt_raw = reader.lp_bytes()
    egg_alpha = (
        int.from_bytes(gt_raw[:pr.FP_BYTES], "big"),
        int.from_bytes(gt_raw[pr.FP_BYTES:], "big"),
    )
    reader.expect_end()
    return g, g_beta, egg_alpha


def _parse_mk(mk: bytes):
    reader = ByteReader(mk)
    alpha = int.from_bytes(reader.lp_bytes(), "big")
    beta = int.from_bytes(reader.lp_bytes(), "big")
    pp = reader.lp_bytes()
    reader.expect_end()
    return alpha, beta, pp


def keygen(mk: bytes, attributes, rng) -> bytes:
    alpha, beta, pp = _parse_mk(mk)
    g, _g_beta, _ = _parse_pp(pp)
    r0 = pr.random_scalar(rng)
    beta_inv = pow(beta, -1, int(pr.R))
    d_point = pr.point_mul(g, (alpha + r0) * beta_inv % int(pr.R))
    g_r0 = pr.point_mul(g, r0)
    body = lp(pr.point_to_bytes(d_point)) + U32.pack(len(attributes))
    for attr in sorted(attributes):
        r_a = pr.random_scalar(rng)
        d_a = pr.point_add(g_r0, pr.point_mul(_attr_point(attr), r_a))
        d_a_prime = pr.point_mul(g, r_a)
        body += lp(attr.encode("utf-8"))
        body += lp(pr.point_to_bytes(d_a))
        body += lp(pr.point_to_bytes(d_a_prime))
    return body


def _parse_sk(sk: bytes):
    reader = ByteReader(sk)
    d_point = pr.point_from_bytes(reader.lp_bytes())
    components = {}
    for _ in range(reader.u32()):
        attr = reader.lp_text()
        d_a = pr.point_from_bytes(reader.lp_bytes())
        d_a_prime = pr.point_from_bytes(reader.lp_bytes())
        components[attr] = (d_a, d_a_prime)
    reader.expect_end()
    return d_point, components


def _leaves(access) -> list:
    if isinstance(access, AttributeLeaf):
        return [access.attribute]
    out = []
    for child in access.children:
        out.extend(_leaves(child))
    return out


def _share(access, secret: int, rng, shares: list) -> None:
    if isinstance(access, AttributeLeaf):
        shares.append(secret)
        return
    # Shamir polynomial of degree k-1 with q(0) = secret; child i gets q(i)
    coeffs = [secret] + [pr.random_scalar(rng) for _ in range(access.k - 1)]
    for i, child in enumerate(access.children, start=1):
        value = 0
        for power, coeff in enumerate(coeffs):
            value = (value + coeff * pow(i, power, int(pr.R))) % int(pr.R)
        _share(child, value, rng, shares)


def encapsulate(pp: bytes, access, rng):
    g, g_beta, egg_alpha = _parse_pp(pp)
    s = pr.random_scalar(rng)
    key = _kdf(pr.gt_pow(egg_alpha, s))
    shares: list = []
    _share(access, s, rng, shares)
    attrs = _leaves(access)
    body = lp(pr.point_to_bytes(pr.point_mul(g_beta, s)))
    body += U32.pack(len(shares))
    for attr, q in zip(attrs, shares):
        body += lp(pr.point_to_bytes(pr.point_mul(g, q)))
        body += lp(pr.point_to_bytes(pr.point_mul(_attr_point(attr), q)))
    body += lp(_kcv(key))
    return key, body


def _lagrange_at_zero(i: int, chosen) -> int:
    r = int(pr.R)
    value = 1
    for j in chosen:
        if j != i:
            value = value * (-j % r) % r
            value = value * pow((i - j) % r, -1, r) % r
    return value


def _select(access, attrs, position) -> list | None:
    """Leaf choices as (leaf_position, coefficient); None if unsatisfied."""
    if isinstance(access, AttributeLeaf):
        pos = position[0]
        position[0] += 1
        return [(pos, access.attribute, 1)] if access.attribute in attrs else None
    child_results = []
    for child in access.children:
        child_results.append(_select(child, attrs, position))
    satisfied = [(i, res) for i, res in enumerate(child_results, start=1) if res is not None]
    if len(satisfied) < access.k:
        return None
    chosen = satisfied[: access.k]
    indices = [i for i, _ in chosen]
    out = []
    r = int(pr.R)
    for i, res in chosen:
        lam = _lagrange_at_zero(i, indices)
        out.extend((pos, attr, coeff * lam % r) for pos, attr, coeff in res)
    return out


def decapsulate(pp: bytes, access, ciphertext: bytes, sk: bytes, sk_attrs) -> bytes:
    try:
        d_point, components = _parse_sk(sk)
    except ValueError as exc:
        raise DecapsulationFailure(f"malformed key: {exc}") from exc
    usable = set(components) & set(sk_attrs) if sk_attrs else set(components)
    selection = _select(access, usable, [0])
    if selection is None:
        raise DecapsulationFailure("attributes do not satisfy the access policy")
    try:
        reader = ByteReader(ciphertext)
        c_point = pr.point_from_bytes(reader.lp_bytes())
        n = reader.u32()
        leaf_components = [
            (pr.point_from_bytes(reader.lp_bytes()), pr.point_from_bytes(reader.lp_bytes()))
            for _ in range(n)
        ]
        kcv = reader.lp_bytes()
        reader.expect_end()
    except ValueError as exc:
        raise DecapsulationFailure(f"malformed ciphertext: {exc}") from exc

    combined = pr.FP2_ONE
    for pos, attr, coeff in selection:
        if pos >= len(leaf_components):
            raise DecapsulationFailure("ciphertext does not match the access tree")
        c_y, c_y_prime = leaf_components[pos]
        d_a, d_a_prime = components[attr]
        ratio = pr.fp2_mul(
            pr.miller_loop(d_a, c_y),
            pr.fp2_inv(pr.miller_loop(d_a_prime, c_y_prime)),
        )
        combined = pr.fp2_mul(combined, pr.fp2_pow(ratio, coeff))
    # e(C, D) / A with one shared final exponentiation
    raw = pr.fp2_mul(pr.miller_loop(c_point, d_point), pr.fp2_inv(combined))
    key = _kdf(pr.final_exponentiation(raw))
    if _kcv(key) != kcv:
        raise DecapsulationFailure("key check value mismatch")
    return key


def self_check(pp: bytes) -> bool:
    try:
        _parse_pp(pp)
    except ValueError:
        return False
    return True
