"""Redaction policies: path selectors bound to attribute access trees.

An access tree is a threshold-gate tree over attribute leaves (AND is
n-of-n, OR is 1-of-n). Policies are ordered rules, first match wins;
whatever no rule matches falls back to the policy default (public, or
an access tree naming the producer when the default denies).

Expression grammar, infix with AND binding tighter than OR::

    (role:scanner AND cert:fedramp) OR role:auditor OR org:federal
    2of(a:x, b:y, c:z)
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field

from .encoding import U32, ByteReader, lp
from .errors import BadThreshold, EmptyGate, PolicySyntax
from .tree import SbomTree

ATTRIBUTE_RE = re.compile(r"^[a-z0-9_.-]+:[A-Za-z0-9_.@-]+$")
EXPIRY_PREFIX = "expiry:"


@dataclass(frozen=True)
class AttributeLeaf:
    attribute: str

    def __post_init__(self):
        if not ATTRIBUTE_RE.match(self.attribute):
            raise PolicySyntax(f"bad attribute {self.attribute!r}")


@dataclass(frozen=True)
class ThresholdGate:
    k: int
    children: tuple

    def __post_init__(self):
        if not self.children:
            raise EmptyGate("gate has no children")
        if not 1 <= self.k <= len(self.children):
            raise BadThreshold(f"threshold {self.k} out of range 1..{len(self.children)}")


AccessTree = "AttributeLeaf | ThresholdGate"


def and_gate(*children) -> ThresholdGate:
    return ThresholdGate(k=len(children), children=tuple(children))


def or_gate(*children) -> ThresholdGate:
    return ThresholdGate(k=1, children=tuple(children))


def leaves_of(access) -> set:
    if isinstance(access, AttributeLeaf):
        return {access.attribute}
    out = set()
    for child in access.children:
        out |= leaves_of(child)
    return out


def satisfies(access, attrs, now: str | None = None) -> bool:
    """Threshold evaluation of an access tree against an attribute set.

    ``attrs`` is a set of namespaced attribute strings. Leaves match by
    exact equality; for ``expiry:`` leaves, when ``now`` (a YYYY-MM
    window) is given, the matched key window must additionally not lie
    in the past.
    """
    if isinstance(access, AttributeLeaf):
        if access.attribute not in attrs:
            return False
        if now is not None and access.attribute.startswith(EXPIRY_PREFIX):
            return access.attribute[len(EXPIRY_PREFIX):] >= now
        return True
    satisfied = sum(1 for child in access.children if satisfies(child, attrs, now))
    return satisfied >= access.k


# --- canonical encoding (the A_n bytes bound into redacted hashes) ---

def encode_access_tree(access) -> bytes:
    if isinstance(access, AttributeLeaf):
        return b"L" + lp(access.attribute.encode("utf-8"))
    body = b"G" + U32.pack(access.k) + U32.pack(len(access.children))
    for child in access.children:
        body += encode_access_tree(child)
    return body


def decode_access_tree(data: bytes):
    reader = ByteReader(data)
    tree = _decode_access(reader)
    reader.expect_end()
    return tree


def _decode_access(reader: ByteReader):
    tag = reader.take(1)
    if tag == b"L":
        return AttributeLeaf(reader.lp_text())
    if tag == b"G":
        k = reader.u32()
        n = reader.u32()
        return ThresholdGate(k=k, children=tuple(_decode_access(reader) for _ in range(n)))
    raise PolicySyntax(f"bad access-tree tag {tag!r}")


def policy_id(access) -> bytes:
    return hashlib.sha256(encode_access_tree(access)).digest()


# --- access expression parser ---

_TOKEN_RE = re.compile(r"\(|\)|,|[A-Za-z0-9_.:@-]+")


def parse_access(expression: str):
    tokens = _TOKEN_RE.findall(expression)
    if "".join(tokens).replace(" ", "") != expression.replace(" ", ""):
        raise PolicySyntax(f"unexpected characters in {expression!r}")
    parser = _ExprParser(tokens)
    tree = parser.parse_or()
    if parser.peek() is not None:
        raise PolicySyntax(f"trailing tokens near {parser.peek()!r}")
    return tree


class _ExprParser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self):
        token = self.peek()
        if token is None:
            raise PolicySyntax("unexpected end of expression")
        self.pos += 1
        return token

    def parse_or(self):
        terms = [self.parse_and()]
        while self.peek() is not None and self.peek().upper() == "OR":
            self.take()
            terms.append(self.parse_and())
        if len(terms) == 1:
            return terms[0]
        return or_gate(*terms)

    def parse_and(self):
        factors = [self.parse_atom()]
        while self.peek() is not None and self.peek().upper() == "AND":
            self.take()
            factors.append(self.parse_atom())
        if len(factors) == 1:
            return factors[0]
        return and_gate(*factors)

    def parse_atom(self):
        token = self.take()
        if token == "(":
            inner = self.parse_or()
            if self.take() != ")":
                raise PolicySyntax("missing closing parenthesis")
            return inner
        kof = re.match(r"^(\d+)of$", token)
        if kof:
            if self.take() != "(":
                raise PolicySyntax("expected ( after threshold")
            children = [self.parse_or()]
            while self.peek() == ",":
                self.take()
                children.append(self.parse_or())
            if self.take() != ")":
                raise PolicySyntax("missing closing parenthesis in threshold gate")
            return ThresholdGate(k=int(kof.group(1)), children=tuple(children))
        if ATTRIBUTE_RE.match(token):
            return AttributeLeaf(token)
        raise PolicySyntax(f"unexpected token {token!r}")


# --- path selectors ---

@dataclass(frozen=True)
class PathSelector:
    """Dot-separated label path; `*` matches one level, `**` any depth."""

    segments: tuple

    @classmethod
    def parse(cls, text: str) -> "PathSelector":
        segments = tuple(s for s in text.split(".") if s)
        if not segments:
            raise PolicySyntax("empty path selector")
        return cls(segments=segments)

    def matches(self, labels: tuple) -> bool:
        return _glob_match(self.segments, labels)

    def __str__(self) -> str:
        return ".".join(self.segments)


def _glob_match(segments: tuple, labels: tuple) -> bool:
    if not segments:
        return not labels
    head, rest = segments[0], segments[1:]
    if head == "**":
        return any(_glob_match(rest, labels[i:]) for i in range(len(labels) + 1))
    if not labels:
        return False
    if head == "*" or head == labels[0]:
        return _glob_match(rest, labels[1:])
    return False


# --- policies ---

PUBLIC = "public"  # sentinel visibility for unredacted nodes


@dataclass(frozen=True)
class PolicyRule:
    paths: tuple  # of PathSelector
    access: object  # AccessTree


@dataclass
class RedactionPolicy:
    rules: list = field(default_factory=list)
    default_public: bool = True
    producer: str = "producer"
    verifier_or: object | None = None
    enforce_expiry: bool = False

    def effective_access(self, access, expiry_window: str | None):
        """Apply the verifier escape hatch and the expiry conjunction."""
        if self.verifier_or is not None:
            access = or_gate(access, self.verifier_or)
        if self.enforce_expiry and expiry_window:
            access = and_gate(access, AttributeLeaf(f"{EXPIRY_PREFIX}{expiry_window}"))
        return access

    def default_access(self):
        if self.default_public:
            return PUBLIC
        return AttributeLeaf(f"user:{self.producer}")


def parse_policy(document: bytes) -> RedactionPolicy:
    try:
        data = json.loads(document.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise PolicySyntax(f"policy is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise PolicySyntax("policy root must be a JSON object")
    default = data.get("default", "public")
    if default not in ("public", "deny"):
        raise PolicySyntax(f"default must be 'public' or 'deny', got {default!r}")
    rules = []
    for rule in data.get("rules", []):
        paths = rule.get("paths", [])
        if isinstance(paths, str):
            paths = [paths]
        if not paths:
            raise PolicySyntax("rule without paths")
        access = rule.get("access")
        if not isinstance(access, str):
            raise PolicySyntax("rule without an access expression")
        rules.append(
            PolicyRule(
                paths=tuple(PathSelector.parse(p) for p in paths),
                access=parse_access(access),
            )
        )
    verifier_or = None
    if data.get("verifier_or"):
        verifier_or = parse_access(data["verifier_or"])
    return RedactionPolicy(
        rules=rules,
        default_public=default == "public",
        producer=data.get("producer", "producer"),
        verifier_or=verifier_or,
        enforce_expiry=bool(data.get("enforce_expiry", False)),
    )


def resolve_policy(
    policy: RedactionPolicy,
    tree: SbomTree,
    expiry_window: str | None = None,
) -> dict:
    """Total assignment of node index-path -> AccessTree or PUBLIC."""
    assignment = {}
    for path, _node in tree.walk():
        labels = tree.label_path(path)
        chosen = None
        for rule in policy.rules:
            if any(selector.matches(labels) for selector in rule.paths):
                chosen = rule.access
                break
        if chosen is None:
            chosen = policy.default_access()
        if chosen is PUBLIC or chosen == PUBLIC:
            assignment[path] = PUBLIC
        else:
            assignment[path] = policy.effective_access(chosen, expiry_window)
    return assignment
