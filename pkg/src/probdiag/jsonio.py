"""JSON interchange for categories, spaces, diagrams and fans.

Rationals serialize as "num/den" strings; atoms may be strings, ints or
(nested) tuples, which round-trip through JSON lists.  Map keys use a
canonical compact JSON encoding of the atom.  Object ids must not contain
the cover separator "->"."""
from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .categories import IndexingCategory
from .diagrams import Diagram, FanOfDiagrams, Reduction
from .errors import ConfigError
from .spaces import ProbSpace


def encode_atom(atom):
    if isinstance(atom, tuple):
        return [encode_atom(a) for a in atom]
    if isinstance(atom, (str, int, bool)) or atom is None:
        return atom
    raise ConfigError(f"atom {atom!r} is not JSON-serializable")


def decode_atom(value):
    if isinstance(value, list):
        return tuple(decode_atom(v) for v in value)
    return value


def atom_key(atom) -> str:
    return json.dumps(encode_atom(atom), separators=(",", ":"), sort_keys=True)


def atom_from_key(key: str):
    return decode_atom(json.loads(key))


def category_to_obj(cat: IndexingCategory) -> dict:
    return {"objects": list(cat.objects), "covers": [[i, j] for (i, j) in cat.covers]}


def category_from_obj(obj: dict) -> IndexingCategory:
    return IndexingCategory(obj["objects"], [tuple(c) for c in obj["covers"]])


def space_to_obj(space: ProbSpace) -> dict:
    return {"atoms": [encode_atom(a) for a in space.atoms],
            "weights": [str(w) for w in space.weights]}


def space_from_obj(obj: dict) -> ProbSpace:
    return ProbSpace([decode_atom(a) for a in obj["atoms"]],
                     [Fraction(w) for w in obj["weights"]])


def _mapping_to_obj(mapping: dict) -> dict:
    return {atom_key(a): encode_atom(b) for a, b in mapping.items()}


def _mapping_from_obj(obj: dict) -> dict:
    return {atom_from_key(k): decode_atom(v) for k, v in obj.items()}


def diagram_to_obj(diagram: Diagram) -> dict:
    return {
        "category": category_to_obj(diagram.category),
        "spaces": {o: space_to_obj(s) for o, s in diagram.spaces.items()},
        "maps": {f"{i}->{j}": _mapping_to_obj(r.mapping)
                 for (i, j), r in diagram.prime_maps.items()},
    }


def diagram_from_obj(obj: dict) -> Diagram:
    cat = category_from_obj(obj["category"])
    spaces = {o: space_from_obj(s) for o, s in obj["spaces"].items()}
    maps = {}
    for key, m in obj["maps"].items():
        i, sep, j = key.partition("->")
        if not sep:
            raise ConfigError(f"bad cover key {key!r}")
        maps[(i, j)] = Reduction(spaces[i], spaces[j], _mapping_from_obj(m))
    return Diagram(cat, spaces, maps, validate=True)


def fan_to_obj(fan: FanOfDiagrams) -> dict:
    return {
        "top": diagram_to_obj(fan.top),
        "left": diagram_to_obj(fan.left),
        "right": diagram_to_obj(fan.right),
        "proj_left": {o: _mapping_to_obj(r.mapping) for o, r in fan.proj_left.items()},
        "proj_right": {o: _mapping_to_obj(r.mapping) for o, r in fan.proj_right.items()},
    }


def fan_from_obj(obj: dict) -> FanOfDiagrams:
    top = diagram_from_obj(obj["top"])
    left = diagram_from_obj(obj["left"])
    right = diagram_from_obj(obj["right"])
    proj_left = {o: Reduction(top.spaces[o], left.spaces[o], _mapping_from_obj(m))
                 for o, m in obj["proj_left"].items()}
    proj_right = {o: Reduction(top.spaces[o], right.spaces[o], _mapping_from_obj(m))
                  for o, m in obj["proj_right"].items()}
    return FanOfDiagrams(top, left, right, proj_left, proj_right, validate=True)


def load_diagram(path) -> Diagram:
    return diagram_from_obj(json.loads(Path(path).read_text()))


def save_diagram(diagram: Diagram, path) -> None:
    Path(path).write_text(json.dumps(diagram_to_obj(diagram), indent=2) + "\n")
