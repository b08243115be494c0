"""Key management service: setup, attribute derivation, key issuance,
rotation, revocation-by-expiry, and delegation.

Authentication is a test-authority token stub: tokens are JSON bodies
signed by an authority key created at setup. A token's subject (an
email-form identity) decomposes into ``user:<local>`` and
``namespace:<domain>`` attributes; configured claims pass through as
``<claim>:<value>``; and every key gets exactly one ``expiry:YYYY-MM``
attribute for the issuance window. Rotation re-issues keys for the
current window to every non-revoked subject in the ledger.
"""

from __future__ import annotations

import base64
import datetime as dt
import json
import os
import re
import threading
from dataclasses import dataclass
from pathlib import Path

from . import abkem
from .errors import (
    AuthenticationFailure,
    ExpiredToken,
    MalformedSubject,
    PetraError,
    StateExists,
)
from .policy import ATTRIBUTE_RE, AttributeLeaf, and_gate
from .signing import SigningKeyPair, load_public_key, sign_token, verify_token_signature

STATE_ENV_VAR = "PETRA_KMS_STATE"
DEFAULT_CLAIM_ATTRIBUTES = ("role", "org", "cert")

_SUBJECT_PART = re.compile(r"^[A-Za-z0-9_.-]+$")
_DOMAIN_PART = re.compile(r"^[A-Za-z0-9_.-]+$")


def month_window(now=None) -> str:
    """The YYYY-MM time window containing ``now``."""
    if now is None:
        now = dt.date.today()
    if isinstance(now, str):
        return now[:7]
    return f"{now.year:04d}-{now.month:02d}"


@dataclass(frozen=True)
class IdentityToken:
    subject: str
    extra_claims: dict
    not_before: str  # ISO date
    not_after: str

    def body_bytes(self) -> bytes:
        return json.dumps(
            {
                "subject": self.subject,
                "claims": dict(sorted(self.extra_claims.items())),
                "not_before": self.not_before,
                "not_after": self.not_after,
            },
            sort_keys=True,
            separators=(",", ":"),
        ).encode("utf-8")


def mint_token(authority: SigningKeyPair, token: IdentityToken) -> bytes:
    body = token.body_bytes()
    signature = sign_token(authority, body)
    return base64.b64encode(body) + b"." + base64.b64encode(signature)


def parse_token(blob: bytes, authority_public: bytes) -> IdentityToken:
    try:
        body_b64, sig_b64 = blob.split(b".", 1)
        body = base64.b64decode(body_b64, validate=True)
        signature = base64.b64decode(sig_b64, validate=True)
    except (ValueError, TypeError) as exc:
        raise AuthenticationFailure(f"malformed token: {exc}") from exc
    if not verify_token_signature(authority_public, signature, body):
        raise AuthenticationFailure("token signature does not verify")
    data = json.loads(body.decode("utf-8"))
    return IdentityToken(
        subject=data["subject"],
        extra_claims=data.get("claims", {}),
        not_before=data.get("not_before", "0000-01-01"),
        not_after=data.get("not_after", "9999-12-31"),
    )


def derive_attributes(token: IdentityToken, now=None, claim_attributes=DEFAULT_CLAIM_ATTRIBUTES) -> set:
    """Decompose the token identity into namespaced attributes."""
    today = dt.date.today().isoformat() if now is None else str(now)[:10]
    if not (token.not_before <= today <= token.not_after):
        raise ExpiredToken(f"token valid {token.not_before}..{token.not_after}, now {today}")
    if token.subject.count("@") != 1:
        raise MalformedSubject(f"subject {token.subject!r} is not local@domain")
    local, domain = token.subject.split("@")
    if not (_SUBJECT_PART.match(local) and _DOMAIN_PART.match(domain)):
        raise MalformedSubject(f"subject {token.subject!r} has unusable characters")
    attrs = {f"user:{local}", f"namespace:{domain}"}
    for claim, value in token.extra_claims.items():
        if claim in claim_attributes:
            candidate = f"{claim}:{value}"
            if not ATTRIBUTE_RE.match(candidate):
                raise MalformedSubject(f"claim produces a bad attribute: {candidate!r}")
            attrs.add(candidate)
    attrs.add(f"expiry:{month_window(now)}")
    return attrs


@dataclass
class KeyGrant:
    subject: str
    key: abkem.AttributeSecretKey
    attributes: set
    expiry_window: str
    issued_at: str


_FILES = {
    "params": "params.pabe",
    "master": "master.pabe",
    "gen_sk": "generator_sk.pem",
    "gen_pub": "generator_pub.pem",
    "prod_sk": "producer_sk.pem",
    "prod_pub": "producer_pub.pem",
    "auth_sk": "authority_sk.pem",
    "auth_pub": "authority_pub.pem",
    "config": "config.json",
    "ledger": "ledger.jsonl",
}


class KmsState:
    """On-disk KMS state. Master-key access and ledger appends are
    serialized behind one lock."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self._lock = threading.Lock()

    def path(self, name: str) -> Path:
        return self.root / _FILES[name]

    # -- setup / loading --

    @classmethod
    def setup(
        cls,
        root,
        scheme: int = abkem.SCHEME_PAIRING,
        claim_attributes=DEFAULT_CLAIM_ATTRIBUTES,
    ) -> "KmsState":
        state = cls(Path(root))
        if state.path("params").exists():
            raise StateExists(f"KMS state already present at {state.root}")
        state.root.mkdir(parents=True, exist_ok=True)
        pp, mk = abkem.abe_setup(scheme=scheme)
        state.path("params").write_bytes(abkem.serialize_public_params(pp))
        state.path("master").write_bytes(abkem.serialize_master_key(mk))
        os.chmod(state.path("master"), 0o600)
        for prefix in ("gen", "prod", "auth"):
            pair = SigningKeyPair.generate()
            state.path(f"{prefix}_sk").write_bytes(pair.private_pem())
            os.chmod(state.path(f"{prefix}_sk"), 0o600)
            state.path(f"{prefix}_pub").write_bytes(pair.public_pem())
        state.path("config").write_text(
            json.dumps({"scheme": scheme, "claim_attributes": list(claim_attributes)}, indent=1)
        )
        state.path("ledger").touch()
        return state

    @classmethod
    def open(cls, root) -> "KmsState":
        state = cls(Path(root))
        if not state.path("params").exists():
            raise PetraError(f"no KMS state at {state.root}")
        return state

    @property
    def config(self) -> dict:
        return json.loads(self.path("config").read_text())

    @property
    def public_params(self) -> abkem.PublicParams:
        return abkem.load_public_params(self.path("params").read_bytes())

    @property
    def master_key(self) -> abkem.MasterKey:
        return abkem.load_master_key(self.path("master").read_bytes())

    def signing_pair(self, prefix: str) -> SigningKeyPair:
        return SigningKeyPair.from_private_pem(self.path(f"{prefix}_sk").read_bytes())

    def public_key(self, prefix: str) -> bytes:
        return load_public_key(self.path(f"{prefix}_pub").read_bytes())

    # -- ledger --

    def _append_ledger(self, entry: dict) -> None:
        line = json.dumps(entry, sort_keys=True) + "\n"
        with open(self.path("ledger"), "a", encoding="utf-8") as handle:
            handle.write(line)

    def ledger_entries(self) -> list:
        lines = self.path("ledger").read_text().splitlines()
        return [json.loads(line) for line in lines if line.strip()]

    # -- operations --

    def issue_key(self, token_blob: bytes, now=None) -> KeyGrant:
        token = parse_token(token_blob, self.public_key("auth"))
        attrs = derive_attributes(
            token, now=now, claim_attributes=tuple(self.config["claim_attributes"])
        )
        return self._grant(token.subject, attrs, now)

    def _grant(self, subject: str, attrs: set, now=None, event: str = "issue") -> KeyGrant:
        window = month_window(now)
        with self._lock:
            key = abkem.abe_keygen(self.master_key, attrs, params=self.public_params)
            self._append_ledger(
                {
                    "event": event,
                    "subject": subject,
                    "attributes": sorted(a for a in attrs if not a.startswith("expiry:")),
                    "expiry": window,
                    "issued_at": dt.datetime.now(dt.timezone.utc).isoformat(),
                }
            )
        return KeyGrant(
            subject=subject,
            key=key,
            attributes=attrs,
            expiry_window=window,
            issued_at=dt.datetime.now(dt.timezone.utc).isoformat(),
        )

    def revoke(self, subject: str) -> None:
        with self._lock:
            self._append_ledger({"event": "revoke", "subject": subject})

    def _subject_states(self) -> dict:
        """Latest issuance attributes/window per subject, plus revocation."""
        states: dict = {}
        for entry in self.ledger_entries():
            subject = entry.get("subject")
            if entry["event"] in ("issue", "rotate", "delegate"):
                states[subject] = {
                    "attributes": entry["attributes"],
                    "expiry": entry["expiry"],
                    "revoked": states.get(subject, {}).get("revoked", False),
                }
            elif entry["event"] == "revoke" and subject in states:
                states[subject]["revoked"] = True
            elif entry["event"] == "revoke":
                states[subject] = {"attributes": [], "expiry": "", "revoked": True}
        return states

    def rotate_keys(self, now=None) -> list:
        """Re-issue keys in the current window for all non-revoked
        subjects; idempotent within one window."""
        window = month_window(now)
        grants = []
        for subject, info in sorted(self._subject_states().items()):
            if info["revoked"] or not info["attributes"]:
                continue
            if info["expiry"] == window:
                continue  # already current
            attrs = set(info["attributes"]) | {f"expiry:{window}"}
            grants.append(self._grant(subject, attrs, now, event="rotate"))
        return grants

    def delegate(self, parent_key_blob: bytes, subset, now=None) -> KeyGrant:
        """Single-level re-issuance for a subset of a presented key's
        attributes; the parent key must prove it actually works."""
        parent = abkem.load_secret_key(parent_key_blob)
        base = {a for a in parent.attributes if not a.startswith("expiry:")}
        subset = set(subset)
        if not subset:
            raise AuthenticationFailure("empty delegation subset")
        if not subset <= base:
            raise AuthenticationFailure("subset is not covered by the presented key")
        # possession probe: the key must decapsulate under all its attributes
        pp = self.public_params
        probe_tree = (
            and_gate(*(AttributeLeaf(a) for a in sorted(parent.attributes)))
            if len(parent.attributes) > 1
            else AttributeLeaf(next(iter(parent.attributes)))
        )
        probe_key, probe_slot = abkem.encapsulate(pp, probe_tree)
        try:
            recovered = abkem.decapsulate(pp, probe_slot, parent)
        except abkem.DecapsulationFailure as exc:
            raise AuthenticationFailure("presented key fails its own attributes") from exc
        if recovered != probe_key:
            raise AuthenticationFailure("presented key fails its own attributes")
        attrs = subset | {f"expiry:{month_window(now)}"}
        return self._grant(f"delegated:{sorted(subset)!r}", attrs, now, event="delegate")


def create_app(state: KmsState):
    """FastAPI application exposing the KMS over HTTP/JSON."""
    from fastapi import FastAPI, Request
    from fastapi.responses import JSONResponse

    app = FastAPI(title="petra-kms")

    def error_response(exc: PetraError, status: int = 400) -> JSONResponse:
        return JSONResponse(
            status_code=status, content={"error": exc.code, "message": str(exc)}
        )

    def grant_payload(grant: KeyGrant) -> dict:
        return {
            "key": base64.b64encode(abkem.serialize_secret_key(grant.key)).decode(),
            "attributes": sorted(grant.attributes),
            "expiry": grant.expiry_window,
            "subject": grant.subject,
        }

    @app.get("/params")
    def params():
        return {
            "scheme": state.config["scheme"],
            "params": base64.b64encode(state.path("params").read_bytes()).decode(),
            "generator_public_key": state.path("gen_pub").read_text(),
            "producer_public_key": state.path("prod_pub").read_text(),
            "authority_public_key": state.path("auth_pub").read_text(),
        }

    @app.post("/keys")
    async def keys(request: Request):
        body = await request.json()
        try:
            grant = state.issue_key(
                body.get("token", "").encode("utf-8"), now=body.get("now")
            )
        except PetraError as exc:
            return error_response(exc, 401)
        return grant_payload(grant)

    @app.post("/keys/delegate")
    async def delegate(request: Request):
        body = await request.json()
        try:
            parent = base64.b64decode(body.get("parent_key", ""))
            grant = state.delegate(parent, body.get("subset", []), now=body.get("now"))
        except PetraError as exc:
            return error_response(exc, 403)
        return grant_payload(grant)

    @app.post("/revoke")
    async def revoke(request: Request):
        body = await request.json()
        subject = body.get("subject", "")
        state.revoke(subject)
        return {"revoked": subject}

    @app.post("/rotate")
    async def rotate(request: Request):
        raw = await request.body()
        body = json.loads(raw) if raw else {}
        grants = state.rotate_keys(now=body.get("now"))
        return {"rotated": len(grants), "grants": [grant_payload(g) for g in grants]}

    return app
