from __future__ import annotations

import pytest

from petra.errors import MalformedDocument, MissingIndex
from petra.tree import (
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


def small_tree() -> SbomTree:
    return SbomTree(
        root=SbomNode(
            index="pkg:generic/hello@2.12",
            doc_meta="hello-sbom",
            children=[
                ComplexNode(
                    element_type="package",
                    children=[
                        FieldNode(name="name", value='"hello"'),
                        FieldNode(name="versionInfo", value='"2.12"'),
                    ],
                )
            ],
        )
    )


def test_field_node_requires_name():
    with pytest.raises(MalformedDocument):
        FieldNode(name="", value="x")


def test_complex_node_requires_type():
    with pytest.raises(MalformedDocument):
        ComplexNode(element_type="")


def test_sbom_node_requires_purl_index():
    with pytest.raises(MissingIndex):
        SbomNode(index="not-a-purl")


@pytest.mark.parametrize(
    "purl,ok",
    [
        ("pkg:generic/hello@2.12", True),
        ("pkg:npm/express@4.17.1", True),
        ("pkg:npm/%40scope/name@1.0.0", True),
        ("pkg:pypi/requests", True),
        ("pkg:maven/org.apache/commons@1.2", True),
        ("http://example.com", False),
        ("pkg:", False),
        ("pkg:type", False),
    ],
)
def test_purl_grammar(purl, ok):
    assert is_valid_purl(purl) is ok


def test_derive_purl_sanitizes():
    assert derive_purl("hello world!", "1.0") == "pkg:generic/hello-world@1.0"
    assert derive_purl("doc") == "pkg:generic/doc@0"
    with pytest.raises(MissingIndex):
        derive_purl("!!!")


def test_native_round_trip_identity():
    tree = small_tree()
    again = parse_native(serialize_tree(tree))
    assert again.root == tree.root


def test_serialization_deterministic():
    tree = small_tree()
    assert serialize_tree(tree) == serialize_tree(tree)


def test_serialization_injective_on_value_change():
    t1 = small_tree()
    t2 = small_tree()
    t2.root.children[0].children[1] = FieldNode(name="versionInfo", value='"2.13"')
    assert serialize_tree(t1) != serialize_tree(t2)


def test_child_order_changes_bytes():
    t1 = small_tree()
    t2 = small_tree()
    t2.root.children[0].children.reverse()
    assert serialize_tree(t1) != serialize_tree(t2)


def test_truncated_native_rejected():
    data = serialize_tree(small_tree())
    with pytest.raises(MalformedDocument):
        parse_native(data[:-3])
    with pytest.raises(MalformedDocument):
        parse_native(data + b"\x00")


def test_root_must_be_sbom_node():
    from petra.tree import _encode_node

    with pytest.raises(MalformedDocument):
        parse_native(_encode_node(FieldNode(name="a", value="b")))


def test_placeholder_round_trip():
    tree = small_tree()
    tree.root.children.append(PlaceholderNode(kind=0x01, policy_id=b"\xab" * 32))
    again = parse_native(serialize_tree(tree))
    restored = again.root.children[-1]
    assert isinstance(restored, PlaceholderNode)
    assert restored.policy_id == b"\xab" * 32


def test_composition_readiness():
    outer = small_tree()
    inner = small_tree()
    inner.root.index = "pkg:generic/inner@1"
    outer.root.children[0].children.append(inner.root)
    data = serialize_tree(outer)
    again = parse_native(data)
    nested = again.root.children[0].children[-1]
    assert isinstance(nested, SbomNode)
    assert nested.index == "pkg:generic/inner@1"


def test_walk_paths_and_labels():
    tree = small_tree()
    paths = dict(tree.walk())
    assert () in paths and (0,) in paths and (0, 1) in paths
    assert tree.label_path((0, 1)) == ("pkg:generic/hello@2.12", "package", "versionInfo")


def test_scalar_pairs_include_meta():
    pairs = small_tree().scalar_pairs()
    assert ("pkg:generic/hello@2.12#meta", "hello-sbom") in pairs
    assert ("pkg:generic/hello@2.12/package/name", '"hello"') in pairs
