import json
import warnings

import pytest
from hypothesis import given, strategies as st

from tforge.model import (
    Configuration,
    MaterialError,
    MaterialSpec,
    TopologyError,
    TopologyMap,
    dump_topology,
    load_material,
    load_topology,
    prism_topology,
    random_topology,
    validate,
)


def write(tmp_path, obj, name="topo.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


def test_load_minimal_prism(tmp_path):
    springs = [[1, 3], [3, 5], [5, 1], [2, 4], [4, 6], [6, 2], [1, 6], [3, 2], [5, 4]]
    topo = load_topology(write(tmp_path, {"n_struts": 3, "struts": [[1, 2], [3, 4], [5, 6]], "springs": springs}))
    assert topo.n_struts == 3
    assert topo.n_springs == 9


def test_load_rejects_spring_duplicating_strut(tmp_path):
    path = write(tmp_path, {"n_struts": 3, "struts": [[1, 2], [3, 4], [5, 6]], "springs": [[2, 1], [3, 5]]})
    with pytest.raises(TopologyError, match=r"\[2, 1\]"):
        load_topology(path)


def test_load_fifteen_bar_scale(tmp_path):
    topo = random_topology(15, 78, seed=7)
    p = tmp_path / "bar15.json"
    dump_topology(topo, p)
    loaded = load_topology(p)
    assert loaded.n_struts == 15 and loaded.n_springs == 78
    assert sorted(v for pair in loaded.struts for v in pair) == list(range(1, 31))


def test_load_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(TopologyError, match="not valid JSON"):
        load_topology(p)


@pytest.mark.parametrize("p, springs", [(3, 9), (4, 12)])
def test_prism_counts(p, springs):
    topo = prism_topology(p)
    assert topo.n_struts == p and topo.n_springs == springs
    strut_keys = {frozenset(s) for s in topo.struts}
    assert not any(frozenset(s) in strut_keys for s in topo.springs)


def test_prism_too_small():
    with pytest.raises(ValueError):
        prism_topology(2)


@pytest.mark.parametrize("p", range(3, 13))
def test_prism_always_valid(p):
    assert validate(prism_topology(p)) == []


def test_validate_vertex_in_two_struts():
    problems = validate(TopologyMap(2, [(1, 2), (2, 3)], [(1, 3)]))
    assert any("vertex 2 in two struts" in msg for msg in problems)


def test_validate_self_loop():
    problems = validate(TopologyMap(3, [(1, 2), (3, 4), (5, 6)], [(1, 3), (5, 5)]))
    assert any("self-loop" in msg for msg in problems)


def test_validate_duplicate_spring_either_order():
    problems = validate(TopologyMap(2, [(1, 2), (3, 4)], [(1, 3), (3, 1)]))
    assert any("duplicate" in msg for msg in problems)


@given(st.integers(3, 12))
def test_round_trip(tmp_path_factory, p):
    path = tmp_path_factory.mktemp("rt") / "t.json"
    topo = prism_topology(p)
    dump_topology(topo, path)
    once = load_topology(path)
    dump_topology(once, path)
    assert load_topology(path) == once == topo


@given(st.integers(2, 15), st.integers(0, 1000))
def test_random_topology_valid(n, seed):
    n_springs = min(3 * n, 2 * n * (2 * n - 1) // 2 - n)
    assert validate(random_topology(n, n_springs, seed)) == []


def test_material_per_spring_and_uniform():
    mat = MaterialSpec(10.0, 0.1, [1.0, 2.0, 3.0], 2.0)
    assert list(mat.stiffness(3)) == [1.0, 2.0, 3.0]
    assert list(mat.free_length(3)) == [2.0, 2.0, 2.0]
    with pytest.raises(MaterialError):
        mat.stiffness(4)


def test_material_positive_and_warns():
    with pytest.raises(MaterialError):
        MaterialSpec(10.0, 0.0, 1.0, 2.0)
    with pytest.raises(MaterialError):
        MaterialSpec(10.0, 1.0, [1.0, -1.0], 2.0)
    with pytest.warns(UserWarning, match="free length"):
        MaterialSpec(10.0, 1.0, 1.0, 12.0)


def test_material_file(tmp_path):
    p = write(tmp_path, {"strut_length_in": 8, "strut_mass_lbm": 0.05, "spring_stiffness_lbf_per_in": [1, 2],
                         "spring_free_length_in": 1.5, "gravity_in_per_s2": 386.09}, "mat.json")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        mat = load_material(p)
    assert mat.spring_stiffness == (1.0, 2.0)
    assert mat.strut_weight == pytest.approx(0.05)


def test_configuration_immutable_and_rigidity(prism3):
    c = Configuration([[0, 0, 0], [10, 0, 0], [0, 1, 0], [0, 1, 10], [5, 5, 0], [5, 5, 10]])
    with pytest.raises(ValueError):
        c.coords[0, 0] = 1.0
    assert c.is_rigid(prism3, 10.0)
    assert not c.is_rigid(prism3, 9.0)
