import json
import random

from probdiag import standard_category, tensor_fan, uniform
from probdiag.distances import single_space_diagram
from probdiag.fixtures import coord_lambda3, coord_two_fan
from probdiag.jsonio import (
    atom_from_key,
    atom_key,
    category_from_obj,
    category_to_obj,
    diagram_from_obj,
    diagram_to_obj,
    fan_from_obj,
    fan_to_obj,
    load_diagram,
    save_diagram,
    space_from_obj,
    space_to_obj,
)
from conftest import random_diagram, random_space


def test_atom_key_roundtrip():
    for atom in ["a", 5, (0, 1), ("x", (2, 3)), (0, "n")]:
        assert atom_from_key(atom_key(atom)) == atom


def test_category_roundtrip():
    cat = standard_category("full_lambda", 3)
    assert category_from_obj(category_to_obj(cat)) == cat


def test_space_roundtrip_exact():
    rng = random.Random(60)
    for _ in range(20):
        space = random_space(rng)
        again = space_from_obj(space_to_obj(space))
        assert again == space


def test_diagram_roundtrip_exact():
    rng = random.Random(61)
    for _ in range(15):
        d = random_diagram(rng)
        again = diagram_from_obj(diagram_to_obj(d))
        assert again == d


def test_coordinate_diagram_roundtrip():
    d, _ = coord_lambda3()
    again = diagram_from_obj(diagram_to_obj(d))
    assert again == d


def test_fan_roundtrip():
    fan = tensor_fan(single_space_diagram(uniform(2)), single_space_diagram(uniform(3)))
    again = fan_from_obj(fan_to_obj(fan))
    assert again.top == fan.top and again.left == fan.left and again.right == fan.right


def test_file_roundtrip(tmp_path):
    d, _ = coord_two_fan(4, [1, 2], [3, 4])
    path = tmp_path / "diagram.json"
    save_diagram(d, path)
    assert load_diagram(path) == d
    # the payload is plain JSON with the documented top-level keys
    payload = json.loads(path.read_text())
    assert set(payload) == {"category", "spaces", "maps"}
    assert set(payload["category"]) == {"objects", "covers"}
