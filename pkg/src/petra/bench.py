"""Storage and timing measurement harness, plus a synthetic corpus
generator for it.

Per input document the harness reports plaintext versus container size
and per-stage times; redaction stages (tree build, encryption, hashing)
and the mirrored decryption stages come from the pipeline's own
counters. The synthetic corpus mimics in-the-wild SPDX documents:
tool-style package metadata of varying verbosity, relationship records,
and occasionally embedded license texts.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass
from pathlib import Path

from . import abkem
from .container import container_bytes
from .errors import PetraError
from .formats import parse_sbom
from .pipeline import consume, countersign, redact
from .policy import RedactionPolicy, leaves_of
from .signing import SigningKeyPair
from .tree import CYCLONEDX, SPDX

CSV_HEADER = "file,plain_bytes,redacted_bytes,overhead_pct,tree_ms,encrypt_ms,merkle_ms,decrypt_ms"


@dataclass
class OverheadRow:
    file: str
    plain_bytes: int
    redacted_bytes: int
    overhead_pct: float
    tree_ms: float
    encrypt_ms: float
    merkle_ms: float
    decrypt_ms: float

    def csv(self) -> str:
        return (
            f"{self.file},{self.plain_bytes},{self.redacted_bytes},"
            f"{self.overhead_pct:.2f},{self.tree_ms:.3f},{self.encrypt_ms:.3f},"
            f"{self.merkle_ms:.3f},{self.decrypt_ms:.3f}"
        )


@dataclass
class OverheadReport:
    rows: list
    aggregate: OverheadRow
    skipped: int

    def csv(self) -> str:
        lines = [CSV_HEADER]
        lines.extend(row.csv() for row in self.rows)
        lines.append(self.aggregate.csv())
        return "\n".join(lines) + "\n"


def _full_access_attributes(policy: RedactionPolicy, expiry_window: str | None) -> set:
    attrs = set()
    for rule in policy.rules:
        attrs |= leaves_of(rule.access)
    if policy.verifier_or is not None:
        attrs |= leaves_of(policy.verifier_or)
    if not policy.default_public:
        attrs.add(f"user:{policy.producer}")
    if policy.enforce_expiry and expiry_window:
        attrs.add(f"expiry:{expiry_window}")
    return attrs or {"user:bench"}


def run_bench(
    corpus_dir,
    policy: RedactionPolicy,
    scheme: int = abkem.SCHEME_PAIRING,
    seed: int | None = None,
    expiry_window: str | None = None,
) -> OverheadReport:
    rng = random.Random(seed).randbytes if seed is not None else None
    pp, mk = abkem.abe_setup(scheme=scheme, **({"rng": rng} if rng else {}))
    gen = SigningKeyPair.generate()
    prod = SigningKeyPair.generate()
    sk = abkem.abe_keygen(mk, _full_access_attributes(policy, expiry_window), params=pp)

    rows = []
    skipped = 0
    for path in sorted(Path(corpus_dir).glob("*.json")):
        raw = path.read_bytes()
        try:
            fmt = CYCLONEDX if b'"CycloneDX"' in raw else SPDX
            t0 = time.perf_counter()
            tree = parse_sbom(raw, fmt)
            tree_ms = (time.perf_counter() - t0) * 1e3
            timings: dict = {}
            bundle, redacted = redact(
                [tree],
                policy,
                pp,
                gen,
                expiry_window=expiry_window,
                timings=timings,
                **({"rng": rng} if rng else {}),
            )
            redacted = countersign(redacted, bundle, prod)
            blob = container_bytes(redacted)
            consume_timings: dict = {}
            consume(
                redacted,
                sk,
                gen.public_bytes,
                prod.public_bytes,
                pp=pp,
                timings=consume_timings,
            )
        except (PetraError, ValueError) as exc:
            skipped += 1
            print(f"warning: skipping {path.name}: {exc}")
            continue
        encrypt_ms = (timings["encapsulate_s"] + timings["encrypt_nodes_s"]) * 1e3
        merkle_ms = (timings["plain_pass_s"] + timings["redacted_pass_s"]) * 1e3
        decrypt_ms = (
            consume_timings["decapsulate_s"] + consume_timings["decrypt_nodes_s"]
        ) * 1e3
        plain = len(raw)
        total = len(blob)
        rows.append(
            OverheadRow(
                file=path.name,
                plain_bytes=plain,
                redacted_bytes=total,
                overhead_pct=(total - plain) / plain * 100.0,
                tree_ms=tree_ms,
                encrypt_ms=encrypt_ms,
                merkle_ms=merkle_ms,
                decrypt_ms=decrypt_ms,
            )
        )
    if not rows:
        raise PetraError("no usable documents in the corpus")
    n = len(rows)
    aggregate = OverheadRow(
        file="MEAN",
        plain_bytes=round(sum(r.plain_bytes for r in rows) / n),
        redacted_bytes=round(sum(r.redacted_bytes for r in rows) / n),
        overhead_pct=sum(r.overhead_pct for r in rows) / n,
        tree_ms=sum(r.tree_ms for r in rows) / n,
        encrypt_ms=sum(r.encrypt_ms for r in rows) / n,
        merkle_ms=sum(r.merkle_ms for r in rows) / n,
        decrypt_ms=sum(r.decrypt_ms for r in rows) / n,
    )
    return OverheadReport(rows=rows, aggregate=aggregate, skipped=skipped)


# --- synthetic corpus ---

_WORDS = (
    "zlib crypto parser buffer stream codec vector matrix socket server "
    "client logger metrics cache proto async http json yaml xml util core "
    "engine kernel plugin filter router broker queue store index search"
).split()

_LICENSES = (
    "MIT", "Apache-2.0", "GPL-3.0-or-later", "BSD-3-Clause", "ISC",
    "LGPL-2.1-only", "MPL-2.0", "EPL-2.0", "Zlib", "Unlicense",
)

_LICENSE_TEXT_STANZA = (
    "Permission is hereby granted, free of charge, to any person obtaining "
    "a copy of this software and associated documentation files, to deal in "
    "the software without restriction, including without limitation the "
    "rights to use, copy, modify, merge, publish, distribute, sublicense, "
    "and/or sell copies of the software, subject to the following conditions. "
)


def _package_entry(rnd: random.Random, i: int) -> dict:
    name = f"{rnd.choice(_WORDS)}-{rnd.choice(_WORDS)}{i}"
    version = f"{rnd.randint(0, 9)}.{rnd.randint(0, 20)}.{rnd.randint(0, 40)}"
    license_id = rnd.choice(_LICENSES)
    sha256 = "".join(rnd.choice("0123456789abcdef") for _ in range(64))
    desc_len = rnd.randint(1, 6)
    description = " ".join(
        f"{rnd.choice(_WORDS)} {rnd.choice(_WORDS)} {rnd.choice(_WORDS)} library layer"
        for _ in range(desc_len)
    )
    return {
        "name": name,
        "SPDXID": f"SPDXRef-Package-{name}",
        "versionInfo": version,
        "supplier": f"Organization: {rnd.choice(_WORDS).title()} Software Foundation",
        "downloadLocation": f"https://registry.example.org/{name}/-/{name}-{version}.tgz",
        "filesAnalyzed": False,
        "licenseConcluded": license_id,
        "licenseDeclared": license_id,
        "copyrightText": (
            f"Copyright (c) {rnd.randint(1999, 2024)} {rnd.choice(_WORDS).title()} "
            "Contributors and individual authors. All rights reserved."
        ),
        "description": description,
        "checksums": [{"algorithm": "SHA256", "checksumValue": sha256}],
        "externalRefs": [
            {
                "referenceCategory": "PACKAGE-MANAGER",
                "referenceType": "purl",
                "referenceLocator": f"pkg:npm/{name}@{version}",
            }
        ],
    }


def synthetic_spdx(rnd: random.Random, packages: int) -> dict:
    doc_name = f"synthetic-{rnd.choice(_WORDS)}-{packages}"
    entries = [_package_entry(rnd, i) for i in range(packages)]
    relationships = [
        {
            "spdxElementId": "SPDXRef-DOCUMENT",
            "relationshipType": "DESCRIBES",
            "relatedSpdxElement": entries[0]["SPDXID"],
        }
    ]
    for entry in entries[1:]:
        relationships.append(
            {
                "spdxElementId": entries[0]["SPDXID"],
                "relationshipType": "DEPENDS_ON",
                "relatedSpdxElement": entry["SPDXID"],
            }
        )
    doc = {
        "spdxVersion": "SPDX-2.3",
        "dataLicense": "CC0-1.0",
        "SPDXID": "SPDXRef-DOCUMENT",
        "name": doc_name,
        "documentNamespace": f"https://sbom.example.org/{doc_name}",
        "creationInfo": {
            "created": "2024-06-01T00:00:00Z",
            "creators": ["Tool: synthetic-generator-1.0"],
        },
        "packages": entries,
        "relationships": relationships,
    }
    # in-the-wild documents often embed license texts wholesale
    texts = []
    for ref in range(rnd.randint(1, 3)):
        stanzas = rnd.randint(4, 16)
        texts.append(
            {
                "licenseId": f"LicenseRef-custom-{ref}",
                "extractedText": _LICENSE_TEXT_STANZA * stanzas,
            }
        )
    doc["hasExtractedLicensingInfos"] = texts
    return doc


def generate_corpus(out_dir, files: int = 20, seed: int = 7, min_packages: int = 2, max_packages: int = 50) -> list:
    """Write a deterministic synthetic SPDX corpus; returns the paths."""
    rnd = random.Random(seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(files):
        packages = rnd.randint(min_packages, max_packages)
        doc = synthetic_spdx(rnd, packages)
        path = out / f"corpus-{i:02d}-{packages}pkgs.spdx.json"
        path.write_text(json.dumps(doc, indent=2))
        paths.append(path)
    return paths
