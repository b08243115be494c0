"""Exception vocabulary shared across the petra package.

Each error maps to a stable machine-readable code used by the CLI;
``code`` is part of the public contract, the message text is not.
"""

from __future__ import annotations


class PetraError(Exception):
    """Base class for all petra errors."""

    code = "PETRA_ERROR"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)


# --- document ingestion ---

class MalformedDocument(PetraError):
    code = "MALFORMED_DOCUMENT"


class UnsupportedFormat(PetraError):
    code = "UNSUPPORTED_FORMAT"


class MissingIndex(PetraError):
    code = "MISSING_INDEX"


# --- policy ---

class PolicySyntax(PetraError):
    code = "POLICY_SYNTAX"


class EmptyGate(PolicySyntax):
    code = "EMPTY_GATE"


class BadThreshold(PolicySyntax):
    code = "BAD_THRESHOLD"


# --- crypto ---

class EmptyAttributeSet(PetraError):
    code = "EMPTY_ATTRIBUTE_SET"


class DecapsulationFailure(PetraError):
    code = "DECAPSULATION_FAILURE"


class AuthenticationFailure(PetraError):
    code = "AUTHENTICATION_FAILURE"


# --- integrity ---

class MissingPlainHash(PetraError):
    code = "MISSING_PLAIN_HASH"


class SaltMissing(PetraError):
    code = "SALT_MISSING"


class AmbiguousPath(PetraError):
    code = "AMBIGUOUS_PATH"


class NodeNotFound(PetraError):
    code = "NODE_NOT_FOUND"


class SamenessFailure(PetraError):
    code = "SAMENESS_FAILURE"


# --- consumption verdicts (names mirror the consumption algorithm) ---

class FailUntrustedSbom(PetraError):
    """A signature or countersignature did not verify."""

    code = "FAIL_UNTRUSTED_SBOM"


class FailGeneratorProducerLied(PetraError):
    """Hash-chain or membership verification contradicts the signed root."""

    code = "FAIL_GENERATOR_PRODUCER_LIED"


# --- container / key files ---

class MalformedContainer(PetraError):
    code = "MALFORMED_CONTAINER"


class MalformedKeyFile(PetraError):
    code = "MALFORMED_KEY_FILE"


# --- key service ---

class StateExists(PetraError):
    code = "STATE_EXISTS"


class ExpiredToken(PetraError):
    code = "EXPIRED_TOKEN"


class MalformedSubject(PetraError):
    code = "MALFORMED_SUBJECT"


# --- distributor store ---

class SignatureRejected(PetraError):
    code = "SIGNATURE_REJECTED"


class NotFound(PetraError):
    code = "NOT_FOUND"


class Equivocation(PetraError):
    """Two containers claim the same index with different Merkle roots."""

    code = "EQUIVOCATION"
