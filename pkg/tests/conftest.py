from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

from petra import abkem
from petra.formats import parse_sbom
from petra.policy import parse_policy
from petra.signing import SigningKeyPair
from petra.tree import CYCLONEDX, SPDX

FIXTURES = Path(__file__).parent / "fixtures"

FIG4_EXPR = "(role:scanner AND cert:fedramp) OR role:auditor OR org:federal"


def seeded_rng(seed: int):
    """Deterministic byte source with the rng-callable signature."""
    rnd = random.Random(seed)
    return lambda n: rnd.randbytes(n)


class FeedRng:
    """Byte source that returns scripted values in order."""

    def __init__(self, *chunks: bytes):
        self.chunks = list(chunks)

    def __call__(self, n: int) -> bytes:
        chunk = self.chunks.pop(0)
        assert len(chunk) == n, f"expected a request for {len(chunk)} bytes, got {n}"
        return chunk


@pytest.fixture(scope="session")
def hello_doc() -> bytes:
    return (FIXTURES / "hello.spdx.json").read_bytes()


@pytest.fixture(scope="session")
def cdx_doc() -> bytes:
    return (FIXTURES / "two_components.cdx.json").read_bytes()


@pytest.fixture()
def hello_tree(hello_doc):
    return parse_sbom(hello_doc, SPDX)


@pytest.fixture()
def cdx_tree(cdx_doc):
    return parse_sbom(cdx_doc, CYCLONEDX)


@pytest.fixture(scope="session")
def toy_setup():
    return abkem.abe_setup(scheme=abkem.SCHEME_INSECURE, rng=seeded_rng(101))


@pytest.fixture(scope="session")
def pairing_setup():
    return abkem.abe_setup(scheme=abkem.SCHEME_PAIRING, rng=seeded_rng(202))


@pytest.fixture(scope="session")
def keypairs():
    return SigningKeyPair.generate(), SigningKeyPair.generate()


@pytest.fixture()
def license_policy():
    return parse_policy(
        json.dumps(
            {
                "rules": [
                    {"paths": ["**.licenseConcluded"], "access": "role:auditor OR user:producer"}
                ],
                "default": "public",
            }
        ).encode()
    )


@pytest.fixture()
def public_policy():
    return parse_policy(b'{"rules": [], "default": "public"}')
