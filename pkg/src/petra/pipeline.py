"""Redaction, countersigning, consumption, and composition.

Redaction composes the input trees, runs the plaintext commitment pass,
resolves the policy, encapsulates one symmetric key per distinct access
tree (scoped per SBOM node so nested documents stay self-contained),
encrypts the selected nodes, hashes the redacted tree, and signs its
root. Consumption is the strict mirror: countersignature, then
signature, then key decapsulation, then decrypt-and-check.
"""

from __future__ import annotations

import copy
import secrets
import time
from dataclasses import dataclass, field as dc_field

from . import abkem
from .container import PlainSbomBundle, container_bytes, load_container
from .encoding import lp
from .errors import (
    AuthenticationFailure,
    FailGeneratorProducerLied,
    FailUntrustedSbom,
    SamenessFailure,
)
from .merkle import (
    SALT_BYTES,
    TAG_EMBEDDED,
    RedactedNode,
    RedactedSbom,
    commit_digest,
    hash_parts,
    kind_of,
    plain_pass,
    prove_membership,
    redacted_pass,
    verify_membership,
    verify_sameness,
)
from .policy import PUBLIC, PathSelector, RedactionPolicy, resolve_policy, satisfies
from .signing import (
    SigningKeyPair,
    countersign as sign_countersignature,
    sign_root,
    verify_countersignature,
    verify_root_signature,
)
from .tree import (
    ComplexNode,
    PlaceholderNode,
    SbomNode,
    SbomTree,
    TAG_COMPLEX,
    TAG_FIELD,
    TAG_SBOM,
    node_payload,
    payload_to_field,
)

EMBEDDED_ELEMENT_TYPE = "embedded-sbom"


@dataclass
class DecryptedView:
    """What one consumer key can see of a redacted SBOM."""

    tree: SbomTree
    source_root: bytes  # merkle root of the container this came from
    salts: dict = dc_field(default_factory=dict)  # path -> salt, decrypted/public
    accessible: set = dc_field(default_factory=set)
    placeholders: set = dc_field(default_factory=set)

    def scalar_pairs(self):
        return self.tree.scalar_pairs()


def _nearest_sbom_scope(path: tuple, sbom_paths: set) -> tuple:
    while path not in sbom_paths:
        path = path[:-1]
    return path


def redact(
    artifact_sboms,
    policy: RedactionPolicy,
    pp: abkem.PublicParams,
    sk_gen: SigningKeyPair,
    rng=secrets.token_bytes,
    expiry_window: str | None = None,
    timings: dict | None = None,
):
    """Compose, commit, encrypt, merkleize, and sign; returns the
    producer bundle and the redacted SBOM."""
    if not artifact_sboms:
        raise ValueError("at least one input tree is required")
    clock = time.perf_counter
    combined = copy.deepcopy(artifact_sboms[0])
    for extra in artifact_sboms[1:]:
        combined.root.children.append(copy.deepcopy(extra.root))

    t0 = clock()
    hashes, salts = plain_pass(combined, rng)
    t_plain = clock() - t0
    assignment = resolve_policy(policy, combined, expiry_window)

    sbom_paths = {
        path for path, node in combined.walk() if isinstance(node, SbomNode)
    }
    # one symmetric key per (enclosing SBOM node, distinct access tree)
    slot_tables: dict = {path: [] for path in sbom_paths}
    keys: dict = {}
    t0 = clock()
    for path, _node in combined.walk():
        access = assignment[path]
        if access is PUBLIC:
            continue
        scope = _nearest_sbom_scope(path, sbom_paths)
        pid = abkem.access_policy_id(access)
        if (scope, pid) not in keys:
            key, slot = abkem.encapsulate(pp, access, rng)
            keys[(scope, pid)] = key
            slot_tables[scope].append(slot)
    t_encap = clock() - t0

    def build(node, path) -> RedactedNode:
        access = assignment[path]
        payload = node_payload(node)
        salt = salts[path]
        kind = kind_of(node)
        if access is PUBLIC:
            red = RedactedNode(
                kind=kind,
                redacted=False,
                blob=lp(salt) + lp(payload),
                plain_hash=hashes[path],
            )
        else:
            scope = _nearest_sbom_scope(path, sbom_paths)
            pid = abkem.access_policy_id(access)
            nc = abkem.encrypt_node(keys[(scope, pid)], salt, payload, pid, rng)
            red = RedactedNode(
                kind=kind,
                redacted=True,
                blob=nc.to_bytes(),
                plain_hash=hashes[path],
                access_enc=abkem.encode_access_tree(access),
                policy_id=pid,
            )
        if isinstance(node, SbomNode):
            red.index = node.index
            red.keyslots = slot_tables[path]
        red.children = [
            build(child, path + (i,)) for i, child in enumerate(node.children)
        ]
        return red

    t0 = clock()
    root = build(combined.root, ())
    t_encrypt = clock() - t0
    t0 = clock()
    _digests, merkle_root = redacted_pass(root)
    t_merkle = clock() - t0
    if timings is not None:
        timings.update(
            plain_pass_s=t_plain,
            encapsulate_s=t_encap,
            encrypt_nodes_s=t_encrypt,
            redacted_pass_s=t_merkle,
        )
    redacted = RedactedSbom(
        root=root,
        merkle_root=merkle_root,
        scheme=pp.scheme,
        generator_signature=sign_root(sk_gen, merkle_root),
    )
    bundle = PlainSbomBundle(
        tree=combined, salts=salts, source_format=combined.source_format
    )
    return bundle, redacted


def countersign(
    redacted: RedactedSbom, plain: PlainSbomBundle, sk_prod: SigningKeyPair
) -> RedactedSbom:
    """Producer endorsement; refuses unless sameness holds everywhere
    (embedded child documents are accepted on their own signatures)."""
    report = verify_sameness(redacted, plain.tree, plain.salts, partial=True)
    if report.mismatches:
        raise SamenessFailure(f"{len(report.mismatches)} nodes fail the sameness check")
    for path in report.unverifiable:
        if redacted.node_at(path).kind != TAG_EMBEDDED:
            raise SamenessFailure(f"node at {path} cannot be verified against the plaintext")
    redacted.producer_signature = sign_countersignature(
        sk_prod, redacted.generator_signature
    )
    return redacted


def consume(
    redacted: RedactedSbom,
    sk: abkem.AttributeSecretKey,
    pk_gen: bytes,
    pk_prod: bytes,
    query_field: PathSelector | str | None = None,
    pp: abkem.PublicParams | None = None,
    now: str | None = None,
    timings: dict | None = None,
) -> DecryptedView:
    """Verify signatures, unlock whatever the key's attributes allow,
    check every decrypted node against its committed plain hash, and
    optionally verify membership of a queried field."""
    clock = time.perf_counter
    if not verify_countersignature(
        pk_prod, redacted.producer_signature, redacted.generator_signature
    ):
        raise FailUntrustedSbom("producer countersignature is invalid")
    if not verify_root_signature(
        pk_gen, redacted.generator_signature, redacted.merkle_root
    ):
        raise FailUntrustedSbom("generator signature is invalid")

    params = pp or sk.params
    if params is None:
        raise ValueError("public parameters are required (none embedded in the key)")

    # unpack every satisfiable keyslot, per SBOM-node table
    keys: dict = {}
    t0 = clock()
    for _path, node in redacted.walk():
        if node.kind != TAG_SBOM:
            continue
        for slot in node.keyslots:
            if slot.policy_id in keys:
                continue
            if not satisfies(slot.access, sk.attributes, now):
                continue
            try:
                keys[slot.policy_id] = abkem.decapsulate(params, slot, sk)
            except abkem.DecapsulationFailure:
                continue
    t_decap = clock() - t0

    digests, recomputed_root = redacted_pass(redacted.root)
    if recomputed_root != redacted.merkle_root:
        raise FailGeneratorProducerLied("redacted tree does not hash to the signed root")

    view = DecryptedView(tree=None, source_root=redacted.merkle_root)  # type: ignore[arg-type]
    labels: dict = {}

    def open_node(node: RedactedNode, path: tuple):
        if node.kind == TAG_EMBEDDED:
            child = load_container(node.blob)
            if child.merkle_root != node.claimed_root:
                raise FailGeneratorProducerLied("embedded document does not match its root")
            child_view = consume(child, sk, pk_gen, pk_prod, pp=params, now=now)
            for sub_path, salt in child_view.salts.items():
                view.salts[path + sub_path] = salt
            view.accessible |= {path + p for p in child_view.accessible}
            view.placeholders |= {path + p for p in child_view.placeholders}
            labels[path] = child_view.tree.root.label
            return child_view.tree.root

        salt = payload = None
        if not node.redacted:
            salt, payload = node.public_salt_payload()
        elif node.policy_id in keys:
            try:
                salt, payload = abkem.decrypt_node(
                    keys[node.policy_id], abkem.NodeCiphertext.from_bytes(node.blob)
                )
            except AuthenticationFailure as exc:
                raise FailGeneratorProducerLied(
                    "node ciphertext does not open under its policy key"
                ) from exc

        children = [
            open_node(child, path + (i,)) for i, child in enumerate(node.children)
        ]

        if salt is None:
            view.placeholders.add(path)
            if node.kind == TAG_SBOM:
                # the index stays public even when the meta is not
                plain = SbomNode(index=node.index, doc_meta="", children=children)
            else:
                plain = PlaceholderNode(
                    kind=node.kind, policy_id=node.policy_id, children=children
                )
            labels[path] = plain.label
            return plain

        own = commit_digest(payload, salt)
        if node.children:
            recomputed = hash_parts(own, *(c.plain_hash for c in node.children))
        elif node.kind == TAG_FIELD:
            recomputed = own
        else:
            recomputed = hash_parts(own)
        if recomputed != node.plain_hash:
            raise FailGeneratorProducerLied(
                f"decrypted node at {path} contradicts its committed plain hash"
            )
        view.salts[path] = salt
        view.accessible.add(path)
        if node.kind == TAG_SBOM:
            plain = SbomNode(
                index=node.index, doc_meta=payload.decode("utf-8"), children=children
            )
        elif node.kind == TAG_FIELD:
            plain = payload_to_field(payload)
        else:
            plain = ComplexNode(element_type=payload.decode("utf-8"), children=children)
        labels[path] = plain.label
        return plain

    t0 = clock()
    view_root = open_node(redacted.root, ())
    if timings is not None:
        timings.update(decapsulate_s=t_decap, decrypt_nodes_s=clock() - t0)
    view.tree = SbomTree(root=view_root, source_format="native")

    if query_field is not None:
        selector = (
            PathSelector.parse(query_field) if isinstance(query_field, str) else query_field
        )
        proof = prove_membership(redacted, selector, label_overlay=labels)
        if not verify_membership(proof, redacted.merkle_root):
            raise FailGeneratorProducerLied("membership proof does not reach the signed root")
    return view


def compose(
    parent: SbomTree,
    child_redacted: RedactedSbom,
    policy: RedactionPolicy,
    pp: abkem.PublicParams,
    sk_gen: SigningKeyPair,
    pk_gen: bytes,
    pk_prod: bytes,
    rng=secrets.token_bytes,
    expiry_window: str | None = None,
):
    """Embed an already-redacted SBOM into a parent without plaintext
    access to it; the child's root hash is preserved byte-for-byte."""
    if not verify_countersignature(
        pk_prod, child_redacted.producer_signature, child_redacted.generator_signature
    ) or not verify_root_signature(
        pk_gen, child_redacted.generator_signature, child_redacted.merkle_root
    ):
        raise FailUntrustedSbom("embedded document's signatures do not verify")

    bundle, redacted = redact([parent], policy, pp, sk_gen, rng, expiry_window)

    embedded = RedactedNode(
        kind=TAG_EMBEDDED,
        redacted=False,
        blob=container_bytes(child_redacted),
        plain_hash=child_redacted.h_s_plain,
        claimed_root=child_redacted.merkle_root,
    )
    envelope_salt = rng(SALT_BYTES)
    envelope_payload = EMBEDDED_ELEMENT_TYPE.encode("utf-8")
    envelope_plain = hash_parts(
        commit_digest(envelope_payload, envelope_salt), child_redacted.h_s_plain
    )
    envelope = RedactedNode(
        kind=TAG_COMPLEX,
        redacted=False,
        blob=lp(envelope_salt) + lp(envelope_payload),
        plain_hash=envelope_plain,
        children=[embedded],
    )
    root = redacted.root
    root.children.append(envelope)

    # re-chain the root's plain hash over the added envelope
    root_salt = bundle.salts[()]
    own = commit_digest(node_payload(bundle.tree.root), root_salt)
    root.plain_hash = hash_parts(own, *(c.plain_hash for c in root.children))

    _digests, merkle_root = redacted_pass(root)
    redacted.merkle_root = merkle_root
    redacted.generator_signature = sign_root(sk_gen, merkle_root)
    redacted.producer_signature = b""

    envelope_path = (len(root.children) - 1,)
    envelope.proof = prove_membership(redacted, path=envelope_path + (0,))

    # mirror the structure in the producer bundle for sameness audits
    placeholder = PlaceholderNode(kind=TAG_EMBEDDED)
    bundle.tree.root.children.append(
        ComplexNode(element_type=EMBEDDED_ELEMENT_TYPE, children=[placeholder])
    )
    bundle.salts[envelope_path] = envelope_salt
    bundle.placeholders.add(envelope_path + (0,))
    return bundle, redacted


def extract_embedded(redacted: RedactedSbom):
    """Yield (path, embedded RedactedSbom) for every composed child."""
    for path, node in redacted.walk():
        if node.kind == TAG_EMBEDDED:
            yield path, load_container(node.blob)


def full_verify(
    redacted: RedactedSbom,
    pk_gen: bytes,
    pk_prod: bytes,
    plain: PlainSbomBundle | None = None,
):
    """Producer/verifier-side audit: signatures, root recomputation,
    and (when the plaintext bundle is supplied) the sameness report."""
    if not verify_countersignature(
        pk_prod, redacted.producer_signature, redacted.generator_signature
    ):
        raise FailUntrustedSbom("producer countersignature is invalid")
    if not verify_root_signature(
        pk_gen, redacted.generator_signature, redacted.merkle_root
    ):
        raise FailUntrustedSbom("generator signature is invalid")
    _digests, recomputed = redacted_pass(redacted.root)
    if recomputed != redacted.merkle_root:
        raise FailGeneratorProducerLied("redacted tree does not hash to the signed root")
    for path, node in redacted.walk():
        if node.kind == TAG_EMBEDDED:
            child = load_container(node.blob)
            _cd, child_root = redacted_pass(child.root)
            if child_root != node.claimed_root or child_root != child.merkle_root:
                raise FailGeneratorProducerLied("embedded document does not match its root")
    if plain is None:
        return None
    report = verify_sameness(redacted, plain.tree, plain.salts, partial=True)
    if report.mismatches:
        raise FailGeneratorProducerLied(
            f"{len(report.mismatches)} nodes fail the sameness check"
        )
    return report
