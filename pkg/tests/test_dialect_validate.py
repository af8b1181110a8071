from __future__ import annotations

import dataclasses
import json

import pytest

from dashsim.dialect import default_catalog, load_catalog, parse, validate
from dashsim.dialect.catalog import Catalog, CatalogError
from dashsim.dialect.nodes import Name
from dashsim.dialect.validator import referenced_name

from conftest import parsed


def test_known_class_is_clean():
    script = parsed("ego = new Car at (0, 0)\n")
    assert validate(script, default_catalog()) == []


def test_unknown_class_flagged_with_identifier():
    script = parsed("ego = new Car at (0, 0)\nmoose = new Moose ahead of ego by 5\n")
    diags = validate(script, default_catalog())
    assert len(diags) == 1
    assert diags[0].code == "CATALOG_UNKNOWN_CLASS"
    assert "Moose" in diags[0].message


def test_undefined_behavior_reference_flagged():
    script = parsed("ego = new Car at (0, 0), with behavior FollowNobody()\n")
    diags = validate(script, default_catalog())
    assert [d.code for d in diags] == ["CATALOG_UNKNOWN_BEHAVIOR"]
    assert "FollowNobody" in diags[0].message


def test_locally_defined_behavior_resolves():
    script = parsed(
        "behavior Mine():\n"
        "    do FollowLaneBehavior(5)\n"
        "ego = new Car at (0, 0), with behavior Mine()\n"
    )
    assert validate(script, default_catalog()) == []


def test_do_target_checked_inside_behaviors():
    script = parsed(
        "behavior Mine():\n"
        "    do NotABehavior(5)\n"
        "ego = new Car at (0, 0), with behavior Mine()\n"
    )
    codes = [d.code for d in validate(script, default_catalog())]
    assert codes == ["CATALOG_UNKNOWN_BEHAVIOR"]


def test_corpus_validates_cleanly(corpus):
    catalog = default_catalog()
    for name, source in corpus.items():
        assert validate(parsed(source), catalog) == [], name


def test_validation_monotonic_under_declaration_removal(corpus):
    """Removing an unreferenced declaration never introduces a catalog
    diagnostic about what remains."""
    catalog = default_catalog()
    for name, source in corpus.items():
        script = parsed(source)
        tree = script.tree
        baseline = {(d.code, d.message) for d in validate(script, catalog)}
        referenced = _referenced_idents(tree)
        for i, obj in enumerate(tree.objects):
            if obj.binding in (None, "ego") or obj.binding in referenced:
                continue
            smaller = dataclasses.replace(
                tree, objects=tuple(o for j, o in enumerate(tree.objects) if j != i)
            )
            diags = validate(dataclasses.replace(script, tree=smaller), catalog)
            introduced = {(d.code, d.message) for d in diags} - baseline
            assert not introduced, f"{name}: removing {obj.binding} introduced {introduced}"
        for i in range(len(tree.requirements)):
            smaller = dataclasses.replace(
                tree,
                requirements=tuple(r for j, r in enumerate(tree.requirements) if j != i),
            )
            diags = validate(dataclasses.replace(script, tree=smaller), catalog)
            assert {(d.code, d.message) for d in diags} <= baseline, name


def _referenced_idents(tree) -> set[str]:
    names: set[str] = set()

    def walk(expr) -> None:
        from dashsim.dialect.hints import _children

        if isinstance(expr, Name):
            names.add(expr.ident)
        for child in _children(expr):
            walk(child)

    for obj in tree.objects:
        for spec in obj.specifiers:
            for arg in spec.args:
                walk(arg)
        for prop in obj.properties:
            walk(prop.value)
    for req in tree.requirements:
        walk(req.condition)
    for term in tree.terminations:
        walk(term.condition)
    return names


def test_catalog_round_trips_through_json(tmp_path):
    catalog = default_catalog()
    path = tmp_path / "catalog.json"
    path.write_text(json.dumps(catalog.to_dict()))
    loaded = load_catalog(path)
    assert loaded == catalog


def test_catalog_rejects_unknown_keys():
    with pytest.raises(CatalogError):
        Catalog.from_dict({
            "object_classes": ["Car"], "builtin_behaviors": {"Idle": 0},
            "weather_values": ["ClearNoon"], "param_names": ["weather"],
            "specifier_kinds": ["at"], "bogus": [],
        })


def test_catalog_rejects_empty_sets():
    with pytest.raises(CatalogError):
        Catalog.from_dict({
            "object_classes": [], "builtin_behaviors": {"Idle": 0},
            "weather_values": ["ClearNoon"], "param_names": ["weather"],
            "specifier_kinds": ["at"],
        })


def test_catalog_lookups_case_sensitive():
    script = parsed("ego = new car at (0, 0)\n")
    diags = validate(script, default_catalog())
    assert diags and diags[0].code == "CATALOG_UNKNOWN_CLASS"


def test_referenced_name_shapes():
    from dashsim.dialect.nodes import Attribute, Call

    assert referenced_name(Name("Idle")) == "Idle"
    assert referenced_name(Call(Name("Idle"))) == "Idle"
    assert referenced_name(Attribute(Name("lib"), "Idle")) == "Idle"
    assert referenced_name(Call(Call(Name("f")))) == "f"
