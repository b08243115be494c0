"""On-disk formats: the `.petra` container and the `.petra-salts` bundle.

A container is a JSON envelope describing the root SBOM node (index,
Merkle root, keyslot table, sbom meta, signatures) plus the base64 of
the canonical redacted-tree bytes for the root's children. Nested SBOM
nodes carry their own keyslot tables inside the tree bytes; embedded
(composed) documents appear as complete child containers.

The salts bundle is the producer-side artifact: the plaintext tree in
native form plus the per-node commitment salts, which is exactly what a
full sameness audit needs.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field as dc_field

from .abkem import PolicyKeySlot
from .encoding import U16, U32, ByteReader, hash_parts, lp
from .errors import MalformedContainer
from .merkle import (
    DIGEST_BYTES,
    MARKER_PUBLIC,
    MARKER_REDACTED,
    TAG_EMBEDDED,
    MembershipProof,
    RedactedNode,
    RedactedSbom,
    commit_digest,
)
from .policy import encode_access_tree
from .tree import (
    NATIVE,
    SbomTree,
    TAG_COMPLEX,
    TAG_FIELD,
    TAG_SBOM,
    parse_native,
    serialize_tree,
)

CONTAINER_VERSION = 1
CONTAINER_SUFFIX = ".petra"
SALTS_SUFFIX = ".petra-salts"
POLICY_SUFFIX = ".petra-policy.json"
SIGNATURE_ALGORITHM = "ed25519"


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def _unb64(text: str) -> bytes:
    try:
        return base64.b64decode(text.encode("ascii"), validate=True)
    except (ValueError, UnicodeEncodeError) as exc:
        raise MalformedContainer(f"bad base64 field: {exc}") from exc


# --- redacted tree wire format ---

def _encode_redacted(node: RedactedNode, slot_index: dict) -> bytes:
    if node.kind == TAG_EMBEDDED:
        proof = node.proof.to_bytes() if node.proof is not None else b""
        return (
            bytes([TAG_EMBEDDED])
            + lp(node.blob)
            + node.claimed_root
            + lp(proof)
        )
    marker = MARKER_REDACTED if node.redacted else MARKER_PUBLIC
    out = bytes([node.kind]) + marker
    if node.kind == TAG_SBOM:
        inner_index = {slot.policy_id: i for i, slot in enumerate(node.keyslots)}
        if node.redacted:
            out += U16.pack(inner_index[node.policy_id])
        out += lp(node.index.encode("utf-8"))
        out += lp(node.blob)
        out += node.plain_hash
        out += U32.pack(len(node.keyslots))
        for slot in node.keyslots:
            out += lp(slot.to_bytes())
        out += U32.pack(len(node.children))
        for child in node.children:
            out += _encode_redacted(child, inner_index)
        return out
    if node.redacted:
        out += U16.pack(slot_index[node.policy_id])
    out += lp(node.blob)
    if node.redacted:
        out += node.plain_hash
    if node.kind == TAG_COMPLEX:
        out += U32.pack(len(node.children))
        for child in node.children:
            out += _encode_redacted(child, slot_index)
    return out


def _decode_redacted(reader: ByteReader, slots: list) -> RedactedNode:
    tag = reader.u8()
    if tag == TAG_EMBEDDED:
        blob = reader.lp_bytes()
        claimed_root = reader.take(DIGEST_BYTES)
        proof_bytes = reader.lp_bytes()
        child = load_container(blob)
        node = RedactedNode(
            kind=TAG_EMBEDDED,
            redacted=False,
            blob=blob,
            plain_hash=child.h_s_plain,
            claimed_root=claimed_root,
            proof=MembershipProof.from_bytes(proof_bytes) if proof_bytes else None,
        )
        return node
    if tag not in (TAG_FIELD, TAG_COMPLEX, TAG_SBOM):
        raise ValueError(f"unknown redacted node tag 0x{tag:02x}")
    marker = reader.take(1)
    if marker not in (MARKER_REDACTED, MARKER_PUBLIC):
        raise ValueError(f"unknown marker {marker!r}")
    redacted = marker == MARKER_REDACTED

    if tag == TAG_SBOM:
        slot_idx = reader.u16() if redacted else None
        index = reader.lp_text()
        blob = reader.lp_bytes()
        plain_hash = reader.take(DIGEST_BYTES)
        own_slots = [
            PolicyKeySlot.from_bytes(reader.lp_bytes()) for _ in range(reader.u32())
        ]
        node = RedactedNode(
            kind=TAG_SBOM,
            redacted=redacted,
            blob=blob,
            plain_hash=plain_hash,
            index=index,
            keyslots=own_slots,
        )
        if redacted:
            _bind_slot(node, own_slots, slot_idx)
        for _ in range(reader.u32()):
            node.children.append(_decode_redacted(reader, own_slots))
        return node

    slot_idx = reader.u16() if redacted else None
    blob = reader.lp_bytes()
    if redacted:
        plain_hash = reader.take(DIGEST_BYTES)
    node = RedactedNode(kind=tag, redacted=redacted, blob=blob, plain_hash=b"")
    if redacted:
        node.plain_hash = plain_hash
        _bind_slot(node, slots, slot_idx)
    if tag == TAG_COMPLEX:
        for _ in range(reader.u32()):
            node.children.append(_decode_redacted(reader, slots))
    if not redacted:
        salt, payload = node.public_salt_payload()
        own = commit_digest(payload, salt)
        if tag == TAG_FIELD:
            node.plain_hash = own
        else:
            node.plain_hash = hash_parts(own, *(c.plain_hash for c in node.children))
    return node


def _bind_slot(node: RedactedNode, slots: list, slot_idx: int) -> None:
    if slot_idx is None or slot_idx >= len(slots):
        raise ValueError(f"keyslot index {slot_idx} out of range")
    slot = slots[slot_idx]
    node.policy_id = slot.policy_id
    node.access_enc = encode_access_tree(slot.access)


# --- container envelope ---

def container_bytes(redacted: RedactedSbom) -> bytes:
    root = redacted.root
    slot_index = {slot.policy_id: i for i, slot in enumerate(root.keyslots)}
    tree = U32.pack(len(root.children)) + b"".join(
        _encode_redacted(child, slot_index) for child in root.children
    )
    meta: dict = {"marker": "R" if root.redacted else "P", "blob": _b64(root.blob)}
    if root.redacted:
        meta["slot"] = slot_index[root.policy_id]
    envelope = {
        "version": CONTAINER_VERSION,
        "scheme": redacted.scheme,
        "index": root.index,
        "merkle_root": redacted.merkle_root.hex(),
        "h_s_plain": root.plain_hash.hex(),
        "sbom_meta": meta,
        "keyslots": [_b64(slot.to_bytes()) for slot in root.keyslots],
        "signatures": {
            "algorithm": SIGNATURE_ALGORITHM,
            "generator": _b64(redacted.generator_signature),
            "producer": _b64(redacted.producer_signature),
        },
        "tree": _b64(tree),
    }
    return json.dumps(envelope, indent=1).encode("utf-8")


def load_container(data: bytes) -> RedactedSbom:
    try:
        envelope = json.loads(data.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise MalformedContainer(f"container is not valid JSON: {exc}") from exc
    if not isinstance(envelope, dict):
        raise MalformedContainer("container envelope must be a JSON object")
    if envelope.get("version") != CONTAINER_VERSION:
        raise MalformedContainer(f"unsupported container version {envelope.get('version')}")
    try:
        slots = [PolicyKeySlot.from_bytes(_unb64(s)) for s in envelope["keyslots"]]
        meta = envelope["sbom_meta"]
        root = RedactedNode(
            kind=TAG_SBOM,
            redacted=meta.get("marker") == "R",
            blob=_unb64(meta["blob"]),
            plain_hash=bytes.fromhex(envelope["h_s_plain"]),
            index=envelope["index"],
            keyslots=slots,
        )
        if root.redacted:
            _bind_slot(root, slots, meta.get("slot"))
        reader = ByteReader(_unb64(envelope["tree"]))
        for _ in range(reader.u32()):
            root.children.append(_decode_redacted(reader, slots))
        reader.expect_end()
        signatures = envelope["signatures"]
        return RedactedSbom(
            root=root,
            merkle_root=bytes.fromhex(envelope["merkle_root"]),
            scheme=int(envelope["scheme"]),
            generator_signature=_unb64(signatures.get("generator", "")),
            producer_signature=_unb64(signatures.get("producer", "")),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise MalformedContainer(f"bad container structure: {exc}") from exc


# --- plaintext bundle ---

@dataclass
class PlainSbomBundle:
    """The pre-redaction artifact handed back to the producer."""

    tree: SbomTree
    salts: dict  # index-path tuple -> 32-byte salt
    source_format: str = NATIVE
    placeholders: set = dc_field(default_factory=set)

    def to_bytes(self) -> bytes:
        payload = {
            "version": CONTAINER_VERSION,
            "format": self.source_format,
            "tree": _b64(serialize_tree(self.tree)),
            "salts": {
                "/".join(str(i) for i in path): salt.hex()
                for path, salt in sorted(self.salts.items())
            },
        }
        return json.dumps(payload, indent=1).encode("utf-8")

    @classmethod
    def from_bytes(cls, data: bytes) -> "PlainSbomBundle":
        try:
            payload = json.loads(data.decode("utf-8"))
            tree = parse_native(_unb64(payload["tree"]))
            tree.source_format = payload.get("format", NATIVE)
            salts = {}
            for key, value in payload["salts"].items():
                path = tuple(int(p) for p in key.split("/") if p != "")
                salts[path] = bytes.fromhex(value)
            return cls(tree=tree, salts=salts, source_format=tree.source_format)
        except (KeyError, ValueError, TypeError) as exc:
            raise MalformedContainer(f"bad salts bundle: {exc}") from exc
