from __future__ import annotations

import json

import pytest

from petra.errors import MalformedDocument, UnsupportedFormat
from petra.formats import (
    export_plaintext,
    parse_sbom,
    pluralize,
    singularize,
    source_scalar_pairs,
)
from petra.tree import (
    CYCLONEDX,
    ComplexNode,
    FieldNode,
    NATIVE,
    PlaceholderNode,
    SPDX,
    SbomNode,
    SbomTree,
    serialize_tree,
)


def count_kinds(tree):
    fields = complexes = sboms = 0
    for _path, node in tree.walk():
        if isinstance(node, FieldNode):
            fields += 1
        elif isinstance(node, ComplexNode):
            complexes += 1
        elif isinstance(node, SbomNode):
            sboms += 1
    return fields, complexes, sboms


def test_hello_structure(hello_tree):
    by_type = {}
    for _path, node in hello_tree.walk():
        if isinstance(node, ComplexNode):
            by_type.setdefault(node.element_type, []).append(node)
    assert len(by_type["package"]) == 1
    assert len(by_type["file"]) == 3
    assert len(by_type["relationship"]) == 6
    # each file holds its checksum nodes
    for file_node in by_type["file"]:
        assert any(
            isinstance(c, ComplexNode) and c.element_type == "checksum"
            for c in file_node.children
        )
    assert hello_tree.root.index == "pkg:generic/hello@2.12"
    assert hello_tree.root.doc_meta == "hello-2.12"


def test_empty_spdx_has_only_field_children():
    doc = json.dumps(
        {
            "spdxVersion": "SPDX-2.3",
            "dataLicense": "CC0-1.0",
            "SPDXID": "SPDXRef-DOCUMENT",
            "name": "empty",
            "documentNamespace": "https://example.org/empty",
        }
    ).encode()
    tree = parse_sbom(doc, SPDX)
    fields, complexes, sboms = count_kinds(tree)
    assert complexes == 0
    assert sboms == 1
    assert fields == 4  # name went to doc_meta


def test_cdx_two_components_node_count(cdx_doc, cdx_tree):
    """Hand enumeration over the fixture JSON: each component carries
    type/name/version/purl fields plus one license complex with one id."""
    data = json.loads(cdx_doc)
    expected_components = len(data["components"])

    by_type = {}
    field_count = 0
    for _path, node in cdx_tree.walk():
        if isinstance(node, ComplexNode):
            by_type.setdefault(node.element_type, 0)
            by_type[node.element_type] += 1
        elif isinstance(node, FieldNode):
            field_count += 1
    assert by_type["component"] == expected_components == 2
    # component scalar fields: 2 x (type, name, version, purl) = 8
    # nested license ids: 2; doc level: bomFormat, specVersion, version,
    # metadata.component(type, name, version, purl) = 7
    assert field_count == 8 + 2 + 7
    assert cdx_tree.root.index == "pkg:npm/webapp@1.4.0"
    assert cdx_tree.root.doc_meta.startswith("urn:uuid:")


def test_losslessness_multiset(hello_doc):
    tree = parse_sbom(hello_doc, SPDX)
    out = export_plaintext(tree, SPDX)
    assert source_scalar_pairs(out, SPDX) == source_scalar_pairs(hello_doc, SPDX)


def test_losslessness_multiset_cdx(cdx_doc):
    tree = parse_sbom(cdx_doc, CYCLONEDX)
    out = export_plaintext(tree, CYCLONEDX)
    assert source_scalar_pairs(out, CYCLONEDX) == source_scalar_pairs(cdx_doc, CYCLONEDX)


def test_parse_serialize_parse_fixed_point(hello_doc):
    tree = parse_sbom(hello_doc, SPDX)
    once = serialize_tree(tree)
    twice = serialize_tree(parse_sbom(once, NATIVE))
    assert once == twice


def test_export_semantic_round_trip(hello_doc):
    tree = parse_sbom(hello_doc, SPDX)
    out = json.loads(export_plaintext(tree, SPDX))
    src = json.loads(hello_doc)
    assert out == src  # same keys, same arrays, order preserved


def test_scalar_array_index_suffix():
    doc = json.dumps(
        {
            "spdxVersion": "SPDX-2.3",
            "name": "arr",
            "documentNamespace": "https://e.org/a",
            "documentDescribes": ["SPDXRef-A", "SPDXRef-B"],
        }
    ).encode()
    tree = parse_sbom(doc, SPDX)
    names = [n.name for _p, n in tree.walk() if isinstance(n, FieldNode)]
    assert "documentDescribes[0]" in names and "documentDescribes[1]" in names
    out = json.loads(export_plaintext(tree, SPDX))
    assert out["documentDescribes"] == ["SPDXRef-A", "SPDXRef-B"]


def test_malformed_and_unsupported():
    with pytest.raises(MalformedDocument):
        parse_sbom(b"{not json", SPDX)
    with pytest.raises(MalformedDocument):
        parse_sbom(b'{"no": "marker"}', SPDX)
    with pytest.raises(MalformedDocument):
        parse_sbom(b'{"bomFormat": "other"}', CYCLONEDX)
    with pytest.raises(UnsupportedFormat):
        parse_sbom(b"{}", "tagvalue")
    with pytest.raises(UnsupportedFormat):
        export_plaintext(SbomTree(root=SbomNode(index="pkg:generic/x@0")), "tagvalue")


def test_singular_plural_helpers():
    assert singularize("packages") == "package"
    assert singularize("vulnerabilities") == "vulnerability"
    assert pluralize("vulnerability") == "vulnerabilities"
    assert pluralize(singularize("files")) == "files"
    assert pluralize(singularize("relationships")) == "relationships"
    assert pluralize(singularize("components")) == "components"
    assert pluralize(singularize("checksums")) == "checksums"


def test_one_element_known_array_stays_array():
    doc = json.dumps(
        {
            "spdxVersion": "SPDX-2.3",
            "name": "single",
            "documentNamespace": "https://e.org/s",
            "packages": [{"name": "solo", "SPDXID": "SPDXRef-solo"}],
        }
    ).encode()
    tree = parse_sbom(doc, SPDX)
    out = json.loads(export_plaintext(tree, SPDX))
    assert isinstance(out["packages"], list) and len(out["packages"]) == 1


def test_export_with_placeholders():
    tree = SbomTree(
        root=SbomNode(
            index="pkg:generic/x@1",
            children=[
                ComplexNode(
                    element_type="package",
                    children=[
                        FieldNode(name="name", value='"x"'),
                        PlaceholderNode(kind=0x01, policy_id=b"\x11" * 32),
                    ],
                )
            ],
        )
    )
    out = json.loads(export_plaintext(tree, SPDX))
    pkg = out["packages"][0]
    assert pkg["name"] == "x"
    assert pkg["x-petra-redacted-fields"] == ["redacted:1111111111111111"]


def test_unknown_top_level_goes_to_extensions():
    tree = SbomTree(
        root=SbomNode(
            index="pkg:generic/x@1",
            children=[FieldNode(name="totallyCustomField", value='"v"')],
        )
    )
    out = json.loads(export_plaintext(tree, SPDX))
    assert out["x-petra-extensions"]["totallyCustomField"] == "v"


def test_cdx_missing_purl_derives_index():
    doc = json.dumps(
        {"bomFormat": "CycloneDX", "specVersion": "1.5",
         "metadata": {"component": {"name": "app", "version": "2.0"}}}
    ).encode()
    tree = parse_sbom(doc, CYCLONEDX)
    assert tree.root.index == "pkg:generic/app@2.0"
