"""Fixture programs and their expected analysis results.

The manifest (``manifest.json``, schema ``singulock.manifest/1``) maps each
fixture name to its source file, a one-line description and an
``expected`` table whose entries are ``{"value": ..., "provenance": ...}``.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

from ..calculus import Program, parse_program

MANIFEST_SCHEMA = "singulock.manifest/1"


@lru_cache(maxsize=1)
def manifest() -> dict:
    doc = json.loads(resources.files(__package__).joinpath("manifest.json").read_text("utf-8"))
    if doc.get("schema") != MANIFEST_SCHEMA:
        raise ValueError(f"unsupported manifest schema {doc.get('schema')!r}")
    return doc


def fixture_names() -> list:
    return sorted(manifest()["fixtures"])


def fixture_path(name: str):
    """Filesystem path of a fixture's ``.ccs`` source."""
    entry = _entry(name)
    return resources.files(__package__).joinpath(entry["file"])


def fixture_source(name: str) -> str:
    return fixture_path(name).read_text("utf-8")


def load_fixture(name: str) -> tuple[Program, dict]:
    """Parsed program and plain expected values (provenance stripped)."""
    entry = _entry(name)
    expected = {k: v["value"] for k, v in entry["expected"].items()}
    return parse_program(fixture_source(name)), expected


def provenance(name: str) -> dict:
    return {k: v["provenance"] for k, v in _entry(name)["expected"].items()}


def _entry(name):
    try:
        return manifest()["fixtures"][name]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(fixture_names())}") from None
