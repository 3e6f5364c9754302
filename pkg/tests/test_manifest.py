from __future__ import annotations

import copy
import json

import pytest

from concircle.dsl import Call, Pow, Var
from concircle.errors import ManifestError
from concircle.manifest import DEFAULT_POINTS, DEFAULT_SEED, DEFAULT_TOLERANCE, load_manifest


@pytest.fixture
def euclid2():
    return {"name": "e2", "dimension": 2, "coordinates": ["x", "y"],
            "metric": [["1", "0"], ["0", "1"]],
            "sample_box": {"x": [0, 1], "y": [0, 1]}}


@pytest.fixture
def warped_doc():
    return {"name": "w", "dimension": 4, "coordinates": ["x", "y", "u", "v"],
            "fields": {"f": "exp(x)"},
            "metric": {"symmetric": True, "upper": [["1", "0", "0", "0"], ["1", "0", "0"],
                                                     ["f^2", "0"], ["f^2*sin(u)^2"]]},
            "sample_box": {"x": [0, 1], "y": [0, 1], "u": [0.3, 2.8], "v": [0, 6]},
            "structure": {"type": "warped", "base_dimension": 2, "warping": "f"}}


def errors_of(doc) -> list[str]:
    with pytest.raises(ManifestError) as info:
        load_manifest(doc)
    return info.value.errors


class TestAccepted:
    def test_minimal_euclidean(self, euclid2):
        m = load_manifest(json.dumps(euclid2))
        assert m.dimension == 2 and m.coordinates == ("x", "y")
        assert (m.tolerance, m.seed, m.points) == (DEFAULT_TOLERANCE, DEFAULT_SEED, DEFAULT_POINTS)

    def test_sphere2(self):
        m = load_manifest({"name": "s2", "dimension": 2, "coordinates": ["theta", "phi"],
                           "metric": [["1", "0"], ["0", "sin(theta)^2"]],
                           "sample_box": {"theta": [0.3, 2.8], "phi": [0, 6.2]}})
        assert m.metric[1][1] == Pow(Call("sin", Var("theta")), 2)

    def test_upper_triangle_symmetrized(self, warped_doc):
        m = load_manifest(warped_doc)
        assert m.metric[3][2] == m.metric[2][3]
        assert m.structure.kind == "warped" and m.structure.base_dimension == 2

    def test_whitespace_normalized_symmetry(self, euclid2):
        euclid2["metric"] = [["1", "x*y"], ["x * y", "1"]]
        load_manifest(euclid2)

    def test_document_round_trip(self, warped_doc):
        m = load_manifest(warped_doc)
        again = load_manifest(json.dumps(m.to_document()))
        assert again == m and again.digest() == m.digest()

    def test_overrides(self, euclid2):
        euclid2.update(tolerance=1e-9, seed=3, points=5)
        m = load_manifest(euclid2)
        assert (m.tolerance, m.seed, m.points) == (1e-9, 3, 5)


class TestRejected:
    def test_asymmetric(self, euclid2):
        euclid2["metric"] = [["1", "x"], ["y", "1"]]
        assert "asymmetric at (0,1)" in errors_of(euclid2)

    def test_every_violation_listed(self, euclid2):
        bad = copy.deepcopy(euclid2)
        bad["metric"] = [["1", "x"], ["y", "q"]]
        bad["sample_box"] = {"x": [1, 1], "y": [0, float("inf")]}
        bad["seed"] = -1
        errs = errors_of(bad)
        assert "asymmetric at (0,1)" in errs
        assert any("metric[1][1]" in e and "q" in e for e in errs)
        assert any("degenerate" in e for e in errs)
        assert any("finite" in e for e in errs)
        assert any("seed" in e for e in errs)
        assert len(errs) >= 5

    @pytest.mark.parametrize("key", ["name", "dimension", "coordinates", "metric", "sample_box"])
    def test_missing_field(self, euclid2, key):
        del euclid2[key]
        assert any(key in e for e in errors_of(euclid2))

    def test_wrong_arity(self, euclid2):
        euclid2["metric"] = [["1", "0"]]
        assert any("2x2" in e for e in errors_of(euclid2))

    def test_dimension_one_rejected(self):
        doc = {"name": "l", "dimension": 1, "coordinates": ["t"], "metric": [["1"]],
               "sample_box": {"t": [0, 1]}}
        assert any("dimension" in e for e in errors_of(doc))

    def test_field_shadowing(self, euclid2):
        euclid2["fields"] = {"x": "y"}
        assert any("shadows" in e for e in errors_of(euclid2))

    def test_malformed_json(self):
        assert "malformed JSON" in errors_of("{not json")[0]

    def test_unknown_key(self, euclid2):
        euclid2["colour"] = "red"
        assert any("colour" in e for e in errors_of(euclid2))

    def test_parse_error_surfaces(self, euclid2):
        euclid2["metric"] = [["1", "0"], ["0", "sin(x"]]
        assert any("metric[1][1]" in e for e in errors_of(euclid2))


class TestStructureRules:
    def test_warping_on_fiber_coordinate(self, warped_doc):
        warped_doc["fields"]["f"] = "exp(u)"
        assert any("non-base" in e for e in errors_of(warped_doc))

    def test_off_block_entry(self, warped_doc):
        warped_doc["metric"]["upper"][0][2] = "x"
        assert any("metric[0][2] = 0" in e for e in errors_of(warped_doc))

    def test_grw_needs_time_line(self, warped_doc):
        warped_doc["structure"]["type"] = "grw"
        assert any("grw" in e for e in errors_of(warped_doc))

    def test_ssst_needs_spatial_base(self, warped_doc):
        warped_doc["structure"]["type"] = "ssst"
        assert any("ssst" in e for e in errors_of(warped_doc))

    def test_undeclared_warping(self, warped_doc):
        warped_doc["structure"]["warping"] = "h"
        assert any("declared field" in e for e in errors_of(warped_doc))

    def test_bad_type(self, warped_doc):
        warped_doc["structure"]["type"] = "twisted"
        assert any("structure.type" in e for e in errors_of(warped_doc))
