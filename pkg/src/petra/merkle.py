"""Dual-pass Merkle hashing, membership proofs, and sameness checks.

Pass one commits to the plaintext tree: every node gets a salted
commitment, and interior nodes chain their children's plain hashes.
Pass two hashes the redacted tree (markers, access-tree encodings,
ciphertexts, and the embedded plain hashes), producing the Merkle root
that the generator signs. Both passes use SHA-256 over length-prefixed
parts, so every digest is recomputable byte-exactly by third parties.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import secrets

from .encoding import U32, ByteReader, hash_parts, lp
from .errors import (
    AmbiguousPath,
    MissingPlainHash,
    NodeNotFound,
    SaltMissing,
)
from .tree import (
    TAG_COMPLEX,
    TAG_FIELD,
    TAG_SBOM,
    ComplexNode,
    FieldNode,
    SbomNode,
    SbomTree,
    node_payload,
    payload_to_field,
)

TAG_EMBEDDED = 0x04

MARKER_REDACTED = b"R"  # 0x52
MARKER_PUBLIC = b"P"  # 0x50

SALT_BYTES = 32
DIGEST_BYTES = 32


@dataclass(frozen=True)
class Commitment:
    salt: bytes
    digest: bytes


def commit(data: bytes, salt: bytes) -> Commitment:
    """Salted binding commitment: SHA-256 over (len-prefixed) salt, data."""
    return Commitment(salt=salt, digest=hash_parts(salt, data))


def commit_digest(data: bytes, salt: bytes) -> bytes:
    return hash_parts(salt, data)


def verify_commitment(commitment: Commitment, data: bytes) -> bool:
    return commit_digest(data, commitment.salt) == commitment.digest


# --- plaintext pass ---

def plain_pass(tree: SbomTree, rng=secrets.token_bytes):
    """Bottom-up plain hashes; returns (path->digest, path->salt) maps."""
    hashes: dict = {}
    salts: dict = {}

    def visit(node, path):
        salts[path] = rng(SALT_BYTES)
        child_hashes = [
            visit(child, path + (i,)) for i, child in enumerate(node.children)
        ]
        own = commit_digest(node_payload(node), salts[path])
        if isinstance(node, FieldNode):
            digest = own
        else:
            digest = hash_parts(own, *child_hashes)
        hashes[path] = digest
        return digest

    visit(tree.root, ())
    return hashes, salts


def plain_hash_from_parts(own_commit: bytes, child_hashes) -> bytes:
    return hash_parts(own_commit, *child_hashes)


# --- redacted tree model ---

@dataclass
class RedactedNode:
    """One node of the redacted tree; `blob` is ciphertext bytes when
    redacted, else the public lp(salt)+lp(payload) bytes."""

    kind: int  # TAG_FIELD / TAG_COMPLEX / TAG_SBOM / TAG_EMBEDDED
    redacted: bool
    blob: bytes
    plain_hash: bytes
    children: list = dc_field(default_factory=list)
    access_enc: bytes = b""  # canonical access-tree bytes (redacted nodes)
    policy_id: bytes = b""
    # SBOM-node extras
    index: str = ""
    keyslots: list = dc_field(default_factory=list)
    # embedded-node extras (blob holds the child container bytes)
    claimed_root: bytes = b""
    proof: "MembershipProof | None" = None

    def public_salt_payload(self):
        reader = ByteReader(self.blob)
        salt = reader.lp_bytes()
        payload = reader.lp_bytes()
        reader.expect_end()
        return salt, payload


@dataclass
class RedactedSbom:
    """Root envelope plus the redacted tree and its signatures."""

    root: RedactedNode
    merkle_root: bytes
    scheme: int
    generator_signature: bytes = b""
    producer_signature: bytes = b""

    @property
    def index(self) -> str:
        return self.root.index

    @property
    def h_s_plain(self) -> bytes:
        return self.root.plain_hash

    @property
    def keyslots(self) -> list:
        return self.root.keyslots

    def walk(self):
        yield from _walk_redacted(self.root, ())

    def node_at(self, path: tuple) -> RedactedNode:
        node = self.root
        for i in path:
            node = node.children[i]
        return node


def _walk_redacted(node: RedactedNode, path: tuple):
    yield path, node
    for i, child in enumerate(node.children):
        yield from _walk_redacted(child, path + (i,))


def slot_table_bytes(keyslots) -> bytes:
    return b"".join(lp(slot.to_bytes()) for slot in keyslots)


def node_prefix_parts(node: RedactedNode) -> tuple:
    """The hash-input parts that precede the child hashes."""
    if not node.plain_hash or len(node.plain_hash) != DIGEST_BYTES:
        raise MissingPlainHash(f"node kind 0x{node.kind:02x} lacks its plain hash")
    if node.kind == TAG_SBOM:
        if node.redacted:
            meta_segment = MARKER_REDACTED + lp(node.access_enc) + lp(node.blob)
        else:
            meta_segment = MARKER_PUBLIC + lp(node.blob)
        segment = slot_table_bytes(node.keyslots) + lp(meta_segment)
        return (segment, node.plain_hash)
    if node.redacted:
        return (MARKER_REDACTED, node.access_enc, node.blob, node.plain_hash)
    return (MARKER_PUBLIC, node.blob, node.plain_hash)


def redacted_hash(node: RedactedNode) -> bytes:
    if node.kind == TAG_EMBEDDED:
        return node.claimed_root
    child_hashes = [redacted_hash(child) for child in node.children]
    return hash_parts(*node_prefix_parts(node), *child_hashes)


def redacted_pass(root: RedactedNode):
    """All redacted digests plus the Merkle root of the tree."""
    digests: dict = {}

    def visit(node, path):
        if node.kind == TAG_EMBEDDED:
            digests[path] = node.claimed_root
            return node.claimed_root
        child_hashes = [
            visit(child, path + (i,)) for i, child in enumerate(node.children)
        ]
        digest = hash_parts(*node_prefix_parts(node), *child_hashes)
        digests[path] = digest
        return digest

    merkle_root = visit(root, ())
    return digests, merkle_root


# --- membership proofs ---

@dataclass(frozen=True)
class ProofStep:
    prefix_parts: tuple  # bytes parts of the parent's hash input
    index: int  # position of the running hash among the children
    siblings: tuple  # other children's redacted hashes, in order


@dataclass(frozen=True)
class MembershipProof:
    target_redacted_hash: bytes
    target_plain_hash: bytes
    steps: tuple  # leaf-to-root ProofSteps
    root: bytes

    def to_bytes(self) -> bytes:
        body = lp(self.target_redacted_hash) + lp(self.target_plain_hash) + lp(self.root)
        body += U32.pack(len(self.steps))
        for step in self.steps:
            body += U32.pack(len(step.prefix_parts))
            for part in step.prefix_parts:
                body += lp(part)
            body += U32.pack(step.index)
            body += U32.pack(len(step.siblings))
            for sib in step.siblings:
                body += lp(sib)
        return body

    @classmethod
    def from_bytes(cls, data: bytes) -> "MembershipProof":
        reader = ByteReader(data)
        target = reader.lp_bytes()
        plain = reader.lp_bytes()
        root = reader.lp_bytes()
        steps = []
        for _ in range(reader.u32()):
            parts = tuple(reader.lp_bytes() for _ in range(reader.u32()))
            index = reader.u32()
            siblings = tuple(reader.lp_bytes() for _ in range(reader.u32()))
            steps.append(ProofStep(prefix_parts=parts, index=index, siblings=siblings))
        reader.expect_end()
        return cls(
            target_redacted_hash=target,
            target_plain_hash=plain,
            steps=tuple(steps),
            root=root,
        )


def redacted_label(node: RedactedNode) -> str:
    """Best-effort label for selector matching over a redacted tree."""
    if node.kind == TAG_SBOM:
        return node.index
    if node.kind == TAG_EMBEDDED:
        return "embedded-sbom"
    if node.redacted:
        return "_redacted"
    _salt, payload = node.public_salt_payload()
    if node.kind == TAG_FIELD:
        return payload_to_field(payload).name
    return payload.decode("utf-8")


def resolve_selector(redacted: RedactedSbom, selector, label_overlay: dict | None = None) -> tuple:
    """Find the unique node path a selector names; labels of decrypted
    nodes may be supplied through the overlay."""
    matches = []
    labels_by_path: dict = {}
    for path, node in redacted.walk():
        if label_overlay and path in label_overlay:
            label = label_overlay[path]
        else:
            label = redacted_label(node)
        parent = path[:-1] if path else None
        prefix = labels_by_path.get(parent, ()) if path else ()
        labels_by_path[path] = prefix + (label,)
        if selector.matches(labels_by_path[path]):
            matches.append(path)
    if not matches:
        raise NodeNotFound(f"no node matches {selector}")
    if len(matches) > 1:
        raise AmbiguousPath(f"{selector} matches {len(matches)} nodes")
    return matches[0]


def prove_membership(
    redacted: RedactedSbom,
    selector=None,
    path: tuple | None = None,
    label_overlay: dict | None = None,
) -> MembershipProof:
    if path is None:
        path = resolve_selector(redacted, selector, label_overlay)
    digests, merkle_root = redacted_pass(redacted.root)
    target = redacted.node_at(path)
    steps = []
    for depth in range(len(path), 0, -1):
        parent_path = path[:depth - 1]
        parent = redacted.node_at(parent_path)
        child_index = path[depth - 1]
        siblings = tuple(
            digests[parent_path + (i,)]
            for i in range(len(parent.children))
            if i != child_index
        )
        steps.append(
            ProofStep(
                prefix_parts=node_prefix_parts(parent),
                index=child_index,
                siblings=siblings,
            )
        )
    return MembershipProof(
        target_redacted_hash=digests[path],
        target_plain_hash=target.plain_hash,
        steps=tuple(steps),
        root=merkle_root,
    )


def verify_membership(proof: MembershipProof, root: bytes) -> bool:
    current = proof.target_redacted_hash
    for step in proof.steps:
        children = list(step.siblings)
        if step.index > len(children):
            return False
        children.insert(step.index, current)
        current = hash_parts(*step.prefix_parts, *children)
    return current == root


# --- sameness verification ---

@dataclass
class SamenessReport:
    matches: list = dc_field(default_factory=list)
    mismatches: list = dc_field(default_factory=list)
    unverifiable: list = dc_field(default_factory=list)

    @property
    def complete_match(self) -> bool:
        return not self.mismatches and not self.unverifiable

    @property
    def consistent(self) -> bool:
        return not self.mismatches

    def counts(self) -> tuple:
        return (len(self.matches), len(self.mismatches), len(self.unverifiable))


def verify_sameness(
    redacted: RedactedSbom,
    plaintext: SbomTree,
    salts: dict,
    partial: bool = False,
) -> SamenessReport:
    """Recompute plain hashes from available plaintext and compare with
    the hashes embedded in the redacted tree.

    ``salts`` maps node index-paths to commitment salts. With
    ``partial`` set, nodes whose plaintext or salt is unavailable are
    reported unverifiable instead of raising SaltMissing; unverifiable
    children chain through their embedded plain hashes.
    """
    report = SamenessReport()

    def visit(plain_node, red_node: RedactedNode, path: tuple):
        known = plain_node is not None and not getattr(plain_node, "placeholder", False)
        plain_children = list(plain_node.children) if plain_node is not None else []
        red_children = red_node.children
        if known and len(plain_children) != len(red_children):
            report.mismatches.append(path)
            return red_node.plain_hash

        child_hashes = []
        for i, red_child in enumerate(red_children):
            plain_child = plain_children[i] if i < len(plain_children) else None
            child_hashes.append(visit(plain_child, red_child, path + (i,)))

        if not known:
            report.unverifiable.append(path)
            return red_node.plain_hash
        if path not in salts:
            if partial:
                report.unverifiable.append(path)
                return red_node.plain_hash
            raise SaltMissing(f"no salt recorded for node at {path}")

        own = commit_digest(node_payload(plain_node), salts[path])
        if isinstance(plain_node, FieldNode):
            recomputed = own
        else:
            recomputed = hash_parts(own, *child_hashes)
        if recomputed == red_node.plain_hash:
            report.matches.append(path)
        else:
            report.mismatches.append(path)
        return recomputed

    visit(plaintext.root, redacted.root, ())
    return report


def kind_of(node) -> int:
    if isinstance(node, FieldNode):
        return TAG_FIELD
    if isinstance(node, ComplexNode):
        return TAG_COMPLEX
    if isinstance(node, SbomNode):
        return TAG_SBOM
    raise TypeError(f"unexpected node type {type(node).__name__}")
