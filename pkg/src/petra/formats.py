"""SPDX / CycloneDX ingestion and export.

The mapping is mechanical so that it stays lossless: scalars become
field nodes (values kept as canonical JSON so types survive), nested
objects become complex nodes named after their key, arrays of objects
become one complex node per element named with the singular of the
array key, and arrays of scalars become index-suffixed field nodes.
Document-level identity moves into the root SBOM node: the pURL index
and the redactable doc_meta slot.
"""

from __future__ import annotations

import json
import re

from .errors import MalformedDocument, UnsupportedFormat
from .tree import (
    CYCLONEDX,
    NATIVE,
    SPDX,
    ComplexNode,
    FieldNode,
    PlaceholderNode,
    SbomNode,
    SbomTree,
    derive_purl,
    is_valid_purl,
    parse_native,
    serialize_tree,
)

_INDEXED = re.compile(r"^(.*)\[(\d+)\]$")

# Array-of-object keys that must regroup into arrays even with one element.
_SPDX_ARRAY_KEYS = {
    "packages", "files", "relationships", "checksums", "externalRefs",
    "hasExtractedLicensingInfos", "annotations", "snippets", "ranges",
    "crossRefs", "artifactOfs", "externalDocumentRefs",
}
_CDX_ARRAY_KEYS = {
    "components", "licenses", "hashes", "externalReferences", "properties",
    "vulnerabilities", "services", "dependencies", "compositions", "tools",
    "ratings", "advisories", "affects", "commits", "patches", "pedigrees",
}
_SPDX_TOP_KEYS = {
    "spdxVersion", "dataLicense", "SPDXID", "name", "documentNamespace",
    "documentDescribes", "creationInfo", "packages", "files", "relationships",
    "hasExtractedLicensingInfos", "annotations", "snippets", "comment",
    "externalDocumentRefs",
}
_CDX_TOP_KEYS = {
    "bomFormat", "specVersion", "serialNumber", "version", "metadata",
    "components", "services", "dependencies", "compositions",
    "vulnerabilities", "externalReferences", "properties",
}
# (parent element type, child element type) pairs that are single nested
# objects even though the child name collides with an array-element name
_SPDX_SINGLE = set()
_CDX_SINGLE = {("metadata", "component"), ("license", "license"), ("metadata", "tool")}


def _enc(scalar) -> str:
    return json.dumps(scalar, separators=(",", ":"), ensure_ascii=False)


def _dec(text: str):
    try:
        return json.loads(text)
    except (ValueError, TypeError):
        return text


def singularize(key: str) -> str:
    if key.endswith("ies"):
        return key[:-3] + "y"
    if key.endswith("s") and not key.endswith("ss"):
        return key[:-1]
    return key


def pluralize(element_type: str) -> str:
    if element_type.endswith("y") and element_type[-2:-1] not in "aeiou":
        return element_type[:-1] + "ies"
    return element_type + "s"


def _convert(key: str, value) -> list:
    """Map one JSON entry onto tree nodes, preserving document order."""
    if isinstance(value, dict):
        return [ComplexNode(element_type=key, children=_convert_object(value))]
    if isinstance(value, list):
        nodes = []
        for i, item in enumerate(value):
            if isinstance(item, dict):
                nodes.append(
                    ComplexNode(element_type=singularize(key), children=_convert_object(item))
                )
            elif isinstance(item, list):
                nodes.extend(_convert(f"{key}[{i}]", item))
            else:
                nodes.append(FieldNode(name=f"{key}[{i}]", value=_enc(item)))
        return nodes
    return [FieldNode(name=key, value=_enc(value))]


def _convert_object(obj: dict) -> list:
    nodes = []
    for key, value in obj.items():
        nodes.extend(_convert(key, value))
    return nodes


def parse_sbom(document: bytes, fmt: str) -> SbomTree:
    """Build the canonical tree from an SBOM document."""
    if fmt == NATIVE:
        return parse_native(document)
    if fmt not in (SPDX, CYCLONEDX):
        raise UnsupportedFormat(f"unknown format {fmt!r}")
    try:
        data = json.loads(document.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise MalformedDocument(f"not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise MalformedDocument("document root must be a JSON object")
    if fmt == SPDX:
        return _parse_spdx(data)
    return _parse_cyclonedx(data)


def _find_spdx_purl(data: dict) -> str | None:
    for pkg in data.get("packages", []):
        if not isinstance(pkg, dict):
            continue
        for ref in pkg.get("externalRefs", []):
            if isinstance(ref, dict) and ref.get("referenceType") == "purl":
                locator = ref.get("referenceLocator", "")
                if is_valid_purl(locator):
                    return locator
    return None


def _parse_spdx(data: dict) -> SbomTree:
    if "spdxVersion" not in data:
        raise MalformedDocument("missing spdxVersion")
    index = _find_spdx_purl(data)
    if index is None:
        packages = data.get("packages") or [{}]
        version = packages[0].get("versionInfo", "") if isinstance(packages[0], dict) else ""
        index = derive_purl(data.get("name") or data.get("documentNamespace", ""), version)
    root = SbomNode(index=index, doc_meta=data.get("name", ""))
    for key, value in data.items():
        if key == "name":
            continue  # carried in doc_meta
        root.children.extend(_convert(key, value))
    return SbomTree(root=root, source_format=SPDX)


def _parse_cyclonedx(data: dict) -> SbomTree:
    if data.get("bomFormat") != "CycloneDX":
        raise MalformedDocument("missing bomFormat: CycloneDX")
    meta_component = (data.get("metadata") or {}).get("component") or {}
    index = meta_component.get("purl")
    if not (index and is_valid_purl(index)):
        index = None
        for comp in data.get("components", []):
            if isinstance(comp, dict) and is_valid_purl(comp.get("purl", "")):
                index = comp["purl"]
                break
    if index is None:
        index = derive_purl(
            meta_component.get("name") or data.get("serialNumber", ""),
            meta_component.get("version", ""),
        )
    root = SbomNode(index=index, doc_meta=data.get("serialNumber", ""))
    for key, value in data.items():
        if key == "serialNumber":
            continue  # carried in doc_meta
        root.children.extend(_convert(key, value))
    return SbomTree(root=root, source_format=CYCLONEDX)


# --- export ---

def export_plaintext(tree: SbomTree, fmt: str) -> bytes:
    """Emit a document holding all content present in the tree."""
    if fmt == NATIVE:
        return serialize_tree(tree)
    if fmt == SPDX:
        array_keys, single_keys, top_keys, meta_key = (
            _SPDX_ARRAY_KEYS, _SPDX_SINGLE, _SPDX_TOP_KEYS, "name",
        )
    elif fmt == CYCLONEDX:
        array_keys, single_keys, top_keys, meta_key = (
            _CDX_ARRAY_KEYS, _CDX_SINGLE, _CDX_TOP_KEYS, "serialNumber",
        )
    else:
        raise UnsupportedFormat(f"unknown format {fmt!r}")

    obj = _children_to_json(tree.root.children, array_keys, single_keys, "")
    if tree.root.doc_meta:
        obj[meta_key] = tree.root.doc_meta
    known = {k: v for k, v in obj.items() if k in top_keys}
    unknown = {k: v for k, v in obj.items() if k not in top_keys}
    if unknown:
        known["x-petra-extensions"] = unknown
    return json.dumps(known, indent=2, ensure_ascii=False).encode("utf-8")


def _children_to_json(children, array_keys: set, single_keys: set, parent_type: str) -> dict:
    obj: dict = {}
    type_counts: dict = {}
    for child in children:
        if isinstance(child, ComplexNode):
            type_counts[child.element_type] = type_counts.get(child.element_type, 0) + 1
    for child in children:
        if isinstance(child, FieldNode):
            match = _INDEXED.match(child.name)
            if match:
                obj.setdefault(match.group(1), []).append(_dec(child.value))
            else:
                obj[child.name] = _dec(child.value)
        elif isinstance(child, ComplexNode):
            element_type = child.element_type
            body = _children_to_json(child.children, array_keys, single_keys, element_type)
            plural = pluralize(element_type)
            single = (parent_type, element_type) in single_keys
            if not single and (plural in array_keys or type_counts[element_type] > 1):
                obj.setdefault(plural, []).append(body)
            else:
                obj[element_type] = body
        elif isinstance(child, SbomNode):
            embedded = _children_to_json(child.children, array_keys, single_keys, "")
            embedded["index"] = child.index
            if child.doc_meta:
                embedded["meta"] = child.doc_meta
            obj.setdefault("x-petra-embedded", []).append(embedded)
        elif isinstance(child, PlaceholderNode):
            marker = f"redacted:{child.policy_id.hex()[:16]}"
            if child.children:
                body = _children_to_json(child.children, array_keys, single_keys, parent_type)
                body["x-petra-redacted"] = marker
                obj.setdefault("x-petra-redacted-elements", []).append(body)
            else:
                obj.setdefault("x-petra-redacted-fields", []).append(marker)
    return obj


def source_scalar_pairs(document: bytes, fmt: str):
    """Independent (path, value) multiset straight from the source JSON.

    Walks the raw document without going through the tree model, so it
    can serve as the losslessness oracle.
    """
    data = json.loads(document.decode("utf-8"))
    pairs = []

    def visit(prefix, value):
        if isinstance(value, dict):
            for k, v in value.items():
                visit(prefix + (k,), v)
        elif isinstance(value, list):
            for i, v in enumerate(value):
                visit(prefix + (f"[{i}]",), v)
        else:
            pairs.append(("/".join(prefix), _enc(value)))

    visit((), data)
    return sorted(pairs)
