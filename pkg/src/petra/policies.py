"""Evaluation policy fixtures.

Two deployable policies cover the common confidentiality intents
(proprietary dependency identity, and weakness/version exposure), and
two synthetic stress policies bracket the cost spectrum: one unique
attribute per node, and a blunt two-attribute split.
"""

from __future__ import annotations

import json

from .policy import RedactionPolicy, parse_policy
from .tree import SbomTree

INTELLECTUAL_PROPERTY_POLICY = json.dumps(
    {
        "rules": [
            {
                "paths": [
                    "**.package.name",
                    "**.component.name",
                    "**.versionInfo",
                    "**.component.version",
                    "**.supplier",
                    "**.downloadLocation",
                    "**.externalRef.*",
                    "**.relationship.*",
                    "**.purl",
                ],
                "access": "org:owner OR role:auditor",
            }
        ],
        "default": "public",
    },
    indent=1,
)

WEAKNESSES_POLICY = json.dumps(
    {
        "rules": [
            {
                "paths": [
                    "**.vulnerability.**",
                    "**.versionInfo",
                    "**.component.version",
                    "**.licenseConcluded",
                ],
                "access": "(role:scanner AND cert:fedramp) OR role:auditor OR org:federal",
            }
        ],
        "default": "public",
    },
    indent=1,
)

SIMPLISTIC_POLICY = json.dumps(
    {
        "rules": [
            {"paths": ["**.licenseConcluded", "**.licenseDeclared"], "access": "grp:legal"},
            {"paths": ["**"], "access": "grp:general"},
        ],
        "default": "public",
    },
    indent=1,
)

FIXTURE_POLICIES = {
    "intellectual-property": INTELLECTUAL_PROPERTY_POLICY,
    "weaknesses": WEAKNESSES_POLICY,
    "simplistic": SIMPLISTIC_POLICY,
}


def load_fixture(name: str) -> RedactionPolicy:
    return parse_policy(FIXTURE_POLICIES[name].encode("utf-8"))


def complicated_policy(tree: SbomTree) -> RedactionPolicy:
    """One unique attribute per tree node: the worst-case keyslot load."""
    policy = RedactionPolicy(default_public=True)
    from .policy import AttributeLeaf, PolicyRule, PathSelector

    for i, (path, _node) in enumerate(tree.walk()):
        labels = tree.label_path(path)
        # label paths are not unique in general; fall back to the default
        # for duplicates, which stay public
        selector = PathSelector(segments=tuple(labels))
        policy.rules.append(
            PolicyRule(paths=(selector,), access=AttributeLeaf(f"node:n{i}"))
        )
    return policy
