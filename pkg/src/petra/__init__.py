"""petra: confidential SBOM exchange.

SBOM documents become canonical relational trees; policies bind tree
paths to attribute access trees; nodes are selectively encrypted under
attribute-based key encapsulation; dual Merkle passes make everything
tamper-evident and sameness-provable; signed containers travel through
untrusted distributors to policy-gated consumers.
"""

__version__ = "0.1.0"

from .errors import PetraError  # noqa: F401
