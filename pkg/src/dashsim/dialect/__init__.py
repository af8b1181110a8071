"""Lexer, parser, validator, canonical printer and static feature evidence
for the supported scenario-language subset."""

from .catalog import Catalog, CatalogError, default_catalog, load_catalog
from .diagnostics import Diagnostic, Span, has_errors
from .hints import hints_for_tree, object_feature_evidence, static_feature_hints
from .nodes import ScenarioTree, ScenicScript
from .parser import parse
from .printer import render, render_tree
from .validator import validate

__all__ = [
    "Catalog", "CatalogError", "Diagnostic", "ScenarioTree", "ScenicScript",
    "Span", "default_catalog", "has_errors", "hints_for_tree", "load_catalog",
    "object_feature_evidence", "parse", "render", "render_tree",
    "static_feature_hints", "validate",
]
