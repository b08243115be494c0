"""File-based distributor store indexed by pURL.

Publishing gates on both signatures under the configured public keys;
an attempt to re-publish a different Merkle root for an index already
on file is refused as equivocation. Fetch returns the stored container
byte-exactly.
"""

from __future__ import annotations

import json
from pathlib import Path
from urllib.parse import quote, unquote

from .container import CONTAINER_SUFFIX, load_container
from .errors import Equivocation, NotFound, SignatureRejected
from .signing import verify_countersignature, verify_root_signature


class DistributorStore:
    def __init__(self, root, pk_gen: bytes | None = None, pk_prod: bytes | None = None):
        self.root = Path(root)
        self.pk_gen = pk_gen
        self.pk_prod = pk_prod

    def _entry_path(self, purl: str) -> Path:
        return self.root / (quote(purl, safe="") + CONTAINER_SUFFIX)

    def publish(self, data: bytes, purl: str | None = None, force: bool = False) -> str:
        redacted = load_container(data)
        if self.pk_gen is None or self.pk_prod is None:
            raise SignatureRejected("store has no configured public keys")
        if not verify_root_signature(
            self.pk_gen, redacted.generator_signature, redacted.merkle_root
        ):
            raise SignatureRejected("generator signature does not verify")
        if not verify_countersignature(
            self.pk_prod, redacted.producer_signature, redacted.generator_signature
        ):
            raise SignatureRejected("producer countersignature does not verify")
        purl = purl or redacted.index
        path = self._entry_path(purl)
        if path.exists() and not force:
            existing = load_container(path.read_bytes())
            if existing.merkle_root != redacted.merkle_root:
                raise Equivocation(
                    f"{purl} already published with root {existing.merkle_root.hex()}"
                )
        self.root.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
        meta = {"index": purl, "merkle_root": redacted.merkle_root.hex()}
        path.with_suffix(path.suffix + ".meta.json").write_text(json.dumps(meta, indent=1))
        return purl

    def fetch(self, purl: str) -> bytes:
        path = self._entry_path(purl)
        if not path.exists():
            raise NotFound(f"no container published for {purl}")
        return path.read_bytes()

    def entries(self) -> list:
        out = []
        for path in sorted(self.root.glob("*" + CONTAINER_SUFFIX)):
            out.append(unquote(path.name[: -len(CONTAINER_SUFFIX)]))
        return out
