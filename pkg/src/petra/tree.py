"""SBOM tree model and the canonical native byte format.

A tree has exactly one SBOM node at the root (nested SBOM nodes mark
composed documents), complex nodes for composite claims, and field
nodes for single claims. The native encoding is deterministic, so a
tree serializes to the same bytes every time, and those bytes double as
hash input material.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .encoding import U32, ByteReader, lp, lp_str
from .errors import MalformedDocument, MissingIndex

TAG_FIELD = 0x01
TAG_COMPLEX = 0x02
TAG_SBOM = 0x03
TAG_PLACEHOLDER = 0x05  # view/bundle trees only, never in source documents

_PURL_RE = re.compile(
    r"^pkg:[a-z0-9.+-]+/(?:[^@#?\s]+/)*[^/@#?\s]+(?:@[^#?\s]+)?$"
)


@dataclass(frozen=True)
class FieldNode:
    """A single claim: one name/value pair, always a leaf."""

    name: str
    value: str

    def __post_init__(self):
        if not self.name:
            raise MalformedDocument("field node requires a non-empty name")

    children = ()

    @property
    def label(self) -> str:
        return self.name


@dataclass
class ComplexNode:
    """A composite claim (package, file, relationship, ...)."""

    element_type: str
    children: list = field(default_factory=list)

    def __post_init__(self):
        if not self.element_type:
            raise MalformedDocument("complex node requires an element type")

    @property
    def label(self) -> str:
        return self.element_type


@dataclass
class SbomNode:
    """Document node: indexable identifier plus redactable doc metadata."""

    index: str
    doc_meta: str = ""
    children: list = field(default_factory=list)

    def __post_init__(self):
        if not is_valid_purl(self.index):
            raise MissingIndex(f"not a valid pURL index: {self.index!r}")

    @property
    def label(self) -> str:
        return self.index


@dataclass
class PlaceholderNode:
    """Stand-in for a node the viewer could not decrypt. Keeps the
    structural slot (and any accessible children) without any payload."""

    kind: int  # original node tag
    policy_id: bytes = b""
    children: list = field(default_factory=list)
    placeholder = True

    @property
    def label(self) -> str:
        return "_redacted"


SPDX = "spdx"
CYCLONEDX = "cyclonedx"
NATIVE = "native"
FORMATS = (SPDX, CYCLONEDX, NATIVE)


@dataclass
class SbomTree:
    root: SbomNode
    source_format: str = NATIVE

    def walk(self):
        """Yield (index_path, node) in depth-first document order."""
        yield from _walk(self.root, ())

    def node_at(self, index_path: tuple) -> object:
        node = self.root
        for i in index_path:
            node = node.children[i]
        return node

    def scalar_pairs(self):
        """Multiset of (label-path, value) pairs carried by the tree."""
        pairs = []
        for path, node in self.walk():
            labels = self.label_path(path)
            if isinstance(node, FieldNode):
                pairs.append(("/".join(labels), node.value))
            elif isinstance(node, SbomNode) and node.doc_meta:
                pairs.append(("/".join(labels) + "#meta", node.doc_meta))
        return sorted(pairs)

    def label_path(self, index_path: tuple) -> tuple:
        labels = [self.root.label]
        node = self.root
        for i in index_path:
            node = node.children[i]
            labels.append(node.label)
        return tuple(labels)


def _walk(node, path):
    yield path, node
    for i, child in enumerate(node.children):
        yield from _walk(child, path + (i,))


def is_valid_purl(text: str) -> bool:
    return bool(_PURL_RE.match(text))


def derive_purl(name: str, version: str = "") -> str:
    """Fallback index for documents that carry no pURL of their own."""
    safe = re.sub(r"[^A-Za-z0-9._-]+", "-", name).strip("-")
    if not safe:
        raise MissingIndex("cannot derive an index from an empty name")
    return f"pkg:generic/{safe}@{version or '0'}"


# --- native byte format ---

def serialize_tree(tree: SbomTree) -> bytes:
    """Canonical deterministic encoding; inverse of parse_native."""
    return _encode_node(tree.root)


def _encode_node(node) -> bytes:
    if isinstance(node, FieldNode):
        return bytes([TAG_FIELD]) + lp_str(node.name) + lp_str(node.value) + U32.pack(0)
    if isinstance(node, ComplexNode):
        body = bytes([TAG_COMPLEX]) + lp_str(node.element_type)
    elif isinstance(node, SbomNode):
        body = bytes([TAG_SBOM]) + lp_str(node.index) + lp_str(node.doc_meta)
    elif isinstance(node, PlaceholderNode):
        body = bytes([TAG_PLACEHOLDER, node.kind]) + lp(node.policy_id)
    else:
        raise MalformedDocument(f"unknown node type {type(node).__name__}")
    body += U32.pack(len(node.children))
    for child in node.children:
        body += _encode_node(child)
    return body


def parse_native(data: bytes) -> SbomTree:
    reader = ByteReader(data)
    try:
        root = _decode_node(reader)
        reader.expect_end()
    except ValueError as exc:
        raise MalformedDocument(f"bad native tree encoding: {exc}") from exc
    if not isinstance(root, SbomNode):
        raise MalformedDocument("tree root must be an SBOM node")
    return SbomTree(root=root, source_format=NATIVE)


def _decode_node(reader: ByteReader):
    tag = reader.u8()
    if tag == TAG_FIELD:
        name = reader.lp_text()
        value = reader.lp_text()
        if reader.u32() != 0:
            raise ValueError("field node with children")
        return FieldNode(name=name, value=value)
    if tag == TAG_COMPLEX:
        node = ComplexNode(element_type=reader.lp_text())
    elif tag == TAG_SBOM:
        node = SbomNode(index=reader.lp_text(), doc_meta=reader.lp_text())
    elif tag == TAG_PLACEHOLDER:
        node = PlaceholderNode(kind=reader.u8(), policy_id=reader.lp_bytes())
    else:
        raise ValueError(f"unknown node tag 0x{tag:02x}")
    for _ in range(reader.u32()):
        node.children.append(_decode_node(reader))
    return node


def field_payload(name: str, value: str) -> bytes:
    """Committed/encrypted content of a field node."""
    return lp_str(name) + lp_str(value)


def complex_payload(element_type: str) -> bytes:
    return element_type.encode("utf-8")


def sbom_meta_payload(doc_meta: str) -> bytes:
    return doc_meta.encode("utf-8")


def node_payload(node) -> bytes:
    if isinstance(node, FieldNode):
        return field_payload(node.name, node.value)
    if isinstance(node, ComplexNode):
        return complex_payload(node.element_type)
    return sbom_meta_payload(node.doc_meta)


def payload_to_field(payload: bytes) -> FieldNode:
    reader = ByteReader(payload)
    name = reader.lp_text()
    value = reader.lp_text()
    reader.expect_end()
    return FieldNode(name=name, value=value)
