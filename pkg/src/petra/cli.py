"""Command-line front end for all exchange personas.

Exit codes are part of the contract: 0 success, 1 generic error (with a
machine-readable JSON error on stderr), 2 FAIL_UNTRUSTED_SBOM,
3 FAIL_GENERATOR_PRODUCER_LIED, 4 EQUIVOCATION.
"""

from __future__ import annotations

import base64
import json
import sys
from pathlib import Path

import click

from . import abkem, bench as bench_mod, kms as kms_mod, policies as policies_mod
from .container import (
    CONTAINER_SUFFIX,
    PlainSbomBundle,
    SALTS_SUFFIX,
    container_bytes,
    load_container,
)
from .errors import (
    Equivocation,
    FailGeneratorProducerLied,
    FailUntrustedSbom,
    PetraError,
)
from .formats import export_plaintext, parse_sbom
from .merkle import TAG_EMBEDDED, redacted_label
from .pipeline import (
    consume,
    countersign as countersign_op,
    extract_embedded,
    full_verify,
    redact,
)
from .policy import PathSelector, parse_policy
from .signing import SigningKeyPair, load_public_key
from .store import DistributorStore
from .tree import (
    CYCLONEDX,
    FieldNode,
    NATIVE,
    PlaceholderNode,
    SPDX,
    SbomNode,
    TAG_COMPLEX,
    TAG_FIELD,
    TAG_SBOM,
)

EXIT_CODES = {
    "FAIL_UNTRUSTED_SBOM": 2,
    "FAIL_GENERATOR_PRODUCER_LIED": 3,
    "EQUIVOCATION": 4,
}


def _fail(code: str, message: str) -> None:
    click.echo(json.dumps({"error": code, "message": message}), err=True)
    sys.exit(EXIT_CODES.get(code, 1))


def _read(path: str, code: str) -> bytes:
    p = Path(path)
    if not p.exists():
        _fail(code, f"{path} does not exist")
    return p.read_bytes()


def _load_config(config_path: str | None) -> dict:
    """Flat key = value config, petra.toml style."""
    path = Path(config_path) if config_path else Path("petra.toml")
    values: dict = {}
    if not path.exists():
        if config_path:
            _fail("CONFIG_NOT_FOUND", f"{config_path} does not exist")
        return values
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip().strip('"').strip("'")
    return values


def _detect_format(raw: bytes, declared: str | None) -> str:
    if declared:
        return declared
    if raw[:1] in (b"\x01", b"\x02", b"\x03"):
        return NATIVE
    return CYCLONEDX if b'"CycloneDX"' in raw[:4096] else SPDX


def _pubkeys(gen_pub, prod_pub, config):
    gen_path = gen_pub or config.get("gen_pub")
    prod_path = prod_pub or config.get("prod_pub")
    if not gen_path or not prod_path:
        _fail("KEY_NOT_FOUND", "generator/producer public keys not configured")
    return (
        load_public_key(_read(gen_path, "KEY_NOT_FOUND")),
        load_public_key(_read(prod_path, "KEY_NOT_FOUND")),
    )


@click.group()
def main():
    """Confidential SBOM exchange tooling."""


# --- redact ---

@main.command("redact")
@click.option("--sbom", "sboms", multiple=True, required=True, help="input SBOM file (repeatable)")
@click.option("--policy", "policy_path", required=True)
@click.option("--params", "params_path", help="public parameters file")
@click.option("--gen-key", "gen_key_path", help="generator signing key (PEM)")
@click.option("--prod-key", "prod_key_path", help="countersign with this producer key (PEM)")
@click.option("--out", "out_dir", default=".", show_default=True)
@click.option("--format", "fmt", type=click.Choice([SPDX, CYCLONEDX, NATIVE]))
@click.option("--expiry-window", help="YYYY-MM window for expiry-enforcing policies")
@click.option("--config", "config_path", default=None)
def cli_redact(sboms, policy_path, params_path, gen_key_path, prod_key_path, out_dir, fmt, expiry_window, config_path):
    """Translate, selectively encrypt, hash, and sign SBOMs."""
    config = _load_config(config_path)
    policy_raw = _read(policy_path, "POLICY_NOT_FOUND")
    params_path = params_path or config.get("params")
    gen_key_path = gen_key_path or config.get("gen_key")
    if not params_path or not gen_key_path:
        _fail("PARAMS_NOT_FOUND", "params and generator key are required")
    try:
        policy = parse_policy(policy_raw)
        pp = abkem.load_public_params(_read(params_path, "PARAMS_NOT_FOUND"))
        gen = SigningKeyPair.from_private_pem(_read(gen_key_path, "KEY_NOT_FOUND"))
        trees = []
        for sbom_path in sboms:
            raw = _read(sbom_path, "SBOM_NOT_FOUND")
            trees.append(parse_sbom(raw, _detect_format(raw, fmt)))
        bundle, redacted = redact(trees, policy, pp, gen, expiry_window=expiry_window)
        if prod_key_path:
            prod = SigningKeyPair.from_private_pem(_read(prod_key_path, "KEY_NOT_FOUND"))
            redacted = countersign_op(redacted, bundle, prod)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = Path(sboms[0]).name.split(".")[0]
        (out / (stem + CONTAINER_SUFFIX)).write_bytes(container_bytes(redacted))
        (out / (stem + SALTS_SUFFIX)).write_bytes(bundle.to_bytes())
        click.echo(redacted.merkle_root.hex())
    except PetraError as exc:
        _fail(exc.code, str(exc))


@main.command("countersign")
@click.option("--sbom", "sbom_path", required=True)
@click.option("--plaintext", "salts_path", required=True)
@click.option("--prod-key", "prod_key_path", required=True)
@click.option("--out", "out_path", default=None)
def cli_countersign(sbom_path, salts_path, prod_key_path, out_path):
    """Producer endorsement after a sameness audit."""
    try:
        redacted = load_container(_read(sbom_path, "SBOM_NOT_FOUND"))
        bundle = PlainSbomBundle.from_bytes(_read(salts_path, "SBOM_NOT_FOUND"))
        prod = SigningKeyPair.from_private_pem(_read(prod_key_path, "KEY_NOT_FOUND"))
        redacted = countersign_op(redacted, bundle, prod)
        Path(out_path or sbom_path).write_bytes(container_bytes(redacted))
        click.echo("countersigned")
    except PetraError as exc:
        _fail(exc.code, str(exc))


# --- verify ---

@main.command("verify")
@click.option("--sbom", "sbom_path", required=True)
@click.option("--plaintext", "salts_path", help="producer bundle for a full sameness audit")
@click.option("--key", "key_path", help="consumer key for a partial audit")
@click.option("--field", "field_selector", help="also verify membership of this selector")
@click.option("--gen-pub", default=None)
@click.option("--prod-pub", default=None)
@click.option("--config", "config_path", default=None)
def cli_verify(sbom_path, salts_path, key_path, field_selector, gen_pub, prod_pub, config_path):
    """Signature, hash-chain, and sameness verification."""
    config = _load_config(config_path)
    pk_gen, pk_prod = _pubkeys(gen_pub, prod_pub, config)
    try:
        redacted = load_container(_read(sbom_path, "SBOM_NOT_FOUND"))
        if salts_path:
            bundle = PlainSbomBundle.from_bytes(_read(salts_path, "SBOM_NOT_FOUND"))
            report = full_verify(redacted, pk_gen, pk_prod, bundle)
            click.echo("signatures: OK")
            m, mm, uv = report.counts()
            click.echo(f"sameness: {m} match, {mm} mismatch, {uv} unverifiable")
            if field_selector:
                from .merkle import prove_membership, verify_membership

                overlay = {
                    path: node.label for path, node in bundle.tree.walk()
                }
                proof = prove_membership(
                    redacted, PathSelector.parse(field_selector), label_overlay=overlay
                )
                ok = verify_membership(proof, redacted.merkle_root)
                click.echo(f"membership {field_selector}: {'OK' if ok else 'FAILED'}")
                if not ok:
                    _fail("FAIL_GENERATOR_PRODUCER_LIED", "membership proof failed")
        elif key_path:
            sk = abkem.load_secret_key(_read(key_path, "KEY_NOT_FOUND"))
            view = consume(
                redacted, sk, pk_gen, pk_prod, query_field=field_selector
            )
            click.echo("signatures: OK")
            from .merkle import verify_sameness

            report = verify_sameness(redacted, view.tree, view.salts, partial=True)
            m, mm, uv = report.counts()
            click.echo(f"sameness: {m} match, {mm} mismatch, {uv} unverifiable")
            if mm:
                _fail("FAIL_GENERATOR_PRODUCER_LIED", f"{mm} nodes mismatch")
            if field_selector:
                click.echo(f"membership {field_selector}: OK")
        else:
            full_verify(redacted, pk_gen, pk_prod)
            click.echo("signatures: OK")
            click.echo("sameness: not checked (no plaintext or key provided)")
    except PetraError as exc:
        _fail(exc.code, str(exc))


# --- query ---

@main.command("query")
@click.option("--sbom", "sbom_path", required=True)
@click.option("--key", "key_path", required=True)
@click.option("--select", "selector", default="**")
@click.option("--format", "fmt", type=click.Choice(["spdx", "cdx", "json"]), default="json")
@click.option("--gen-pub", default=None)
@click.option("--prod-pub", default=None)
@click.option("--config", "config_path", default=None)
def cli_query(sbom_path, key_path, selector, fmt, gen_pub, prod_pub, config_path):
    """Decrypt and print whatever the key's attributes allow."""
    config = _load_config(config_path)
    pk_gen, pk_prod = _pubkeys(gen_pub, prod_pub, config)
    try:
        redacted = load_container(_read(sbom_path, "SBOM_NOT_FOUND"))
        sk = abkem.load_secret_key(_read(key_path, "KEY_NOT_FOUND"))
        view = consume(redacted, sk, pk_gen, pk_prod)
    except PetraError as exc:
        click.echo(json.dumps({"error": exc.code, "message": str(exc)}), err=True)
        sys.exit(1)
    if fmt == "spdx":
        click.echo(export_plaintext(view.tree, SPDX).decode("utf-8"))
        return
    if fmt == "cdx":
        click.echo(export_plaintext(view.tree, CYCLONEDX).decode("utf-8"))
        return
    sel = PathSelector.parse(selector)
    out = {}
    for path, node in view.tree.walk():
        labels = view.tree.label_path(path)
        if not sel.matches(labels):
            continue
        key = ".".join(labels)
        n = 2
        while key in out:
            key = ".".join(labels) + f"#{n}"
            n += 1
        if isinstance(node, FieldNode):
            try:
                out[key] = json.loads(node.value)
            except ValueError:
                out[key] = node.value
        elif isinstance(node, PlaceholderNode):
            out[key] = f"[redacted:{node.policy_id.hex()[:16]}]"
    click.echo(json.dumps(out, indent=1, ensure_ascii=False))


# --- store ---

@main.group("store")
def cli_store():
    """File-based distributor store indexed by pURL."""


@cli_store.command("publish")
@click.option("--store", "store_dir", required=True)
@click.option("--purl", default=None)
@click.option("--sbom", "sbom_path", required=True)
@click.option("--gen-pub", default=None)
@click.option("--prod-pub", default=None)
@click.option("--config", "config_path", default=None)
def store_publish(store_dir, purl, sbom_path, gen_pub, prod_pub, config_path):
    config = _load_config(config_path)
    pk_gen, pk_prod = _pubkeys(gen_pub, prod_pub, config)
    try:
        store = DistributorStore(store_dir, pk_gen, pk_prod)
        published = store.publish(_read(sbom_path, "SBOM_NOT_FOUND"), purl)
        click.echo(published)
    except PetraError as exc:
        _fail(exc.code, str(exc))


@cli_store.command("fetch")
@click.option("--store", "store_dir", required=True)
@click.option("--purl", required=True)
@click.option("--out", "out_path", default=None)
def store_fetch(store_dir, purl, out_path):
    try:
        data = DistributorStore(store_dir).fetch(purl)
    except PetraError as exc:
        _fail(exc.code, str(exc))
        return
    if out_path:
        Path(out_path).write_bytes(data)
        click.echo(out_path)
    else:
        sys.stdout.buffer.write(data)


# --- compare (split-view detection) ---

@main.command("compare")
@click.argument("first")
@click.argument("second")
def cli_compare(first, second):
    """Flag two containers that claim one pURL with different roots."""
    try:
        a = load_container(_read(first, "SBOM_NOT_FOUND"))
        b = load_container(_read(second, "SBOM_NOT_FOUND"))
    except PetraError as exc:
        _fail(exc.code, str(exc))
        return
    if a.index != b.index:
        click.echo(f"different artifacts: {a.index} vs {b.index}")
        return
    if a.merkle_root == b.merkle_root:
        click.echo(f"consistent: {a.index} root {a.merkle_root.hex()}")
        return
    click.echo(
        f"EQUIVOCATION: {a.index} has roots {a.merkle_root.hex()} and {b.merkle_root.hex()}"
    )
    _fail("EQUIVOCATION", f"two distinct roots published for {a.index}")


# --- inspect ---

@main.command("inspect")
@click.argument("container")
def cli_inspect(container):
    """Print the container envelope and redacted tree structure."""
    try:
        redacted = load_container(_read(container, "SBOM_NOT_FOUND"))
    except PetraError as exc:
        _fail(exc.code, str(exc))
        return
    click.echo(f"index: {redacted.index}")
    click.echo(f"merkle_root: {redacted.merkle_root.hex()}")
    click.echo(f"scheme: {redacted.scheme}")
    click.echo(f"countersigned: {'yes' if redacted.producer_signature else 'no'}")
    kinds = {TAG_FIELD: "field", TAG_COMPLEX: "complex", TAG_SBOM: "sbom", TAG_EMBEDDED: "embedded-sbom"}
    for path, node in redacted.walk():
        indent = "  " * len(path)
        marker = "R" if node.redacted else "P"
        label = redacted_label(node)
        extra = f" slots={len(node.keyslots)}" if node.kind == TAG_SBOM else ""
        click.echo(f"{indent}{kinds[node.kind]} {label} [{marker}]{extra}")
        if node.kind == TAG_EMBEDDED:
            child = load_container(node.blob)
            click.echo(f"{indent}  (embedded root {child.merkle_root.hex()})")


# --- bench ---

@main.command("bench")
@click.option("--corpus", "corpus_dir", required=True)
@click.option("--policy", "policy_path", required=True)
@click.option("--out", "out_csv", default=None)
@click.option("--seed", type=int, default=None)
@click.option("--scheme", type=click.Choice(["pairing", "insecure"]), default="pairing")
@click.option("--expiry-window", default=None)
def cli_bench(corpus_dir, policy_path, out_csv, seed, scheme, expiry_window):
    """Measure storage and timing overhead over a corpus."""
    try:
        policy = parse_policy(_read(policy_path, "POLICY_NOT_FOUND"))
        report = bench_mod.run_bench(
            corpus_dir,
            policy,
            scheme=abkem.SCHEME_PAIRING if scheme == "pairing" else abkem.SCHEME_INSECURE,
            seed=seed,
            expiry_window=expiry_window,
        )
    except PetraError as exc:
        _fail(exc.code, str(exc))
        return
    click.echo(bench_mod.CSV_HEADER)
    for row in report.rows:
        click.echo(row.csv())
    click.echo(report.aggregate.csv())
    if report.skipped:
        click.echo(f"skipped: {report.skipped} unparseable files", err=True)
    if out_csv:
        Path(out_csv).write_text(report.csv())


@main.command("gen-corpus")
@click.option("--out", "out_dir", required=True)
@click.option("--files", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--min-packages", type=int, default=2)
@click.option("--max-packages", type=int, default=50)
def cli_gen_corpus(out_dir, files, seed, min_packages, max_packages):
    """Write a deterministic synthetic SPDX corpus."""
    paths = bench_mod.generate_corpus(out_dir, files, seed, min_packages, max_packages)
    click.echo(f"wrote {len(paths)} documents to {out_dir}")


@main.command("policies")
@click.option("--out", "out_dir", required=True)
def cli_policies(out_dir):
    """Export the bundled evaluation policy fixtures."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, body in policies_mod.FIXTURE_POLICIES.items():
        (out / f"{name}.petra-policy.json").write_text(body)
    click.echo(f"wrote {len(policies_mod.FIXTURE_POLICIES)} policies to {out_dir}")


# --- keys (key-service persona) ---

@main.group("keys")
def cli_keys():
    """Key-service operations against a local state directory."""


def _state_dir(state: str | None) -> str:
    import os

    path = state or os.environ.get(kms_mod.STATE_ENV_VAR)
    if not path:
        _fail("STATE_NOT_FOUND", "--state or PETRA_KMS_STATE is required")
    return path


@cli_keys.command("setup")
@click.option("--state", default=None)
@click.option("--scheme", type=click.Choice(["pairing", "insecure"]), default="pairing")
def keys_setup(state, scheme):
    try:
        kms_mod.KmsState.setup(
            _state_dir(state),
            scheme=abkem.SCHEME_PAIRING if scheme == "pairing" else abkem.SCHEME_INSECURE,
        )
        click.echo(f"state created at {_state_dir(state)}")
    except PetraError as exc:
        _fail(exc.code, str(exc))


@cli_keys.command("issue")
@click.option("--state", default=None)
@click.option("--subject", required=True)
@click.option("--claim", "claims", multiple=True, help="k=v, repeatable")
@click.option("--now", default=None, help="ISO date for the issuance window")
@click.option("--out", "out_path", required=True)
def keys_issue(state, subject, claims, now, out_path):
    try:
        kstate = kms_mod.KmsState.open(_state_dir(state))
        claim_map = dict(c.split("=", 1) for c in claims)
        token = kms_mod.IdentityToken(
            subject=subject,
            extra_claims=claim_map,
            not_before="0000-01-01",
            not_after="9999-12-31",
        )
        blob = kms_mod.mint_token(kstate.signing_pair("auth"), token)
        grant = kstate.issue_key(blob, now=now)
        Path(out_path).write_bytes(abkem.serialize_secret_key(grant.key))
        click.echo(json.dumps({"attributes": sorted(grant.attributes), "expiry": grant.expiry_window}))
    except PetraError as exc:
        _fail(exc.code, str(exc))


@cli_keys.command("rotate")
@click.option("--state", default=None)
@click.option("--now", default=None)
@click.option("--out-dir", default=None, help="write the rotated key files here")
def keys_rotate(state, now, out_dir):
    try:
        kstate = kms_mod.KmsState.open(_state_dir(state))
        grants = kstate.rotate_keys(now=now)
        if out_dir:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            for grant in grants:
                safe = grant.subject.replace("@", "_at_").replace("/", "_")
                (out / f"{safe}.pabe").write_bytes(abkem.serialize_secret_key(grant.key))
        click.echo(str(len(grants)))
    except PetraError as exc:
        _fail(exc.code, str(exc))


@cli_keys.command("revoke")
@click.option("--state", default=None)
@click.option("--subject", required=True)
def keys_revoke(state, subject):
    try:
        kms_mod.KmsState.open(_state_dir(state)).revoke(subject)
        click.echo(f"revoked {subject}")
    except PetraError as exc:
        _fail(exc.code, str(exc))


@cli_keys.command("params")
@click.option("--state", default=None)
@click.option("--out", "out_path", required=True, help="write the public parameters here")
def keys_params(state, out_path):
    try:
        kstate = kms_mod.KmsState.open(_state_dir(state))
        Path(out_path).write_bytes(kstate.path("params").read_bytes())
        click.echo(out_path)
    except PetraError as exc:
        _fail(exc.code, str(exc))


@cli_keys.command("serve")
@click.option("--state", default=None)
@click.option("--listen", default="127.0.0.1:8787", show_default=True)
def keys_serve(state, listen):
    import uvicorn

    kstate = kms_mod.KmsState.open(_state_dir(state))
    host, _, port = listen.partition(":")
    uvicorn.run(kms_mod.create_app(kstate), host=host or "127.0.0.1", port=int(port or 8787))


if __name__ == "__main__":
    main()
