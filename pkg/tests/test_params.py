"""Parameter registry, dotted-path access, file I/O, and validation."""

import dataclasses

import pytest
import yaml

from rentdyn.equilibrium import DERIVED_FIELDS, equilibrate
from rentdyn.params import (
    FIELDS,
    PROVENANCE_TAGS,
    ModelParams,
    ParamError,
    ParamFileError,
    bounds_for,
    clamp_to_bounds,
    default_params,
    get_value,
    load_params,
    save_params,
    sweepable_parameters,
    validate_params,
    with_value,
)


# ---------------------------------------------------------------- registry

def test_registry_covers_every_numeric_leaf():
    """Every float field of the parameter tree has exactly one registry row."""
    paths = set()

    def walk(obj, prefix):
        for f in dataclasses.fields(obj):
            value = getattr(obj, f.name)
            if dataclasses.is_dataclass(value):
                walk(value, prefix + f.name + ".")
            elif isinstance(value, float):
                paths.add(prefix + f.name)

    walk(default_params(), "")
    registered = set(f.path for f in FIELDS)
    assert registered == paths


def test_registry_paths_unique_and_resolvable():
    params = default_params()
    paths = [f.path for f in FIELDS]
    assert len(paths) == len(set(paths))
    for f in FIELDS:
        value = get_value(params, f.path)
        assert isinstance(value, float)


def test_registry_tags_and_bounds_sane():
    params = default_params()
    for f in FIELDS:
        assert f.provenance in PROVENANCE_TAGS, f.path
        assert f.units, f.path
        value = get_value(params, f.path)
        assert value >= f.lo, f.path
        if f.hi is not None:
            assert value <= f.hi, f.path


def test_sweepable_matches_registry():
    assert sweepable_parameters() == [f.path for f in FIELDS]


def test_bounds_lookup_and_clamp():
    lo, hi = bounds_for("moratorium.processing_reduction")
    assert lo == 0.0 and hi == 1.0
    assert clamp_to_bounds("moratorium.processing_reduction", 1.2) == 1.0
    assert clamp_to_bounds("moratorium.processing_reduction", -0.3) == 0.0
    assert clamp_to_bounds("moratorium.processing_reduction", 0.5) == 0.5
    with pytest.raises(KeyError):
        bounds_for("no.such.parameter")


# ---------------------------------------------------------------- access

def test_with_value_is_pure():
    base = default_params()
    bumped = with_value(base, "covid.magnitude", 0.9)
    assert bumped.covid.magnitude == 0.9
    assert base.covid.magnitude != 0.9
    assert base == default_params()


def test_with_value_nested_and_flat():
    base = default_params()
    p1 = with_value(base, "avg_monthly_rent", 1234.0)
    assert p1.avg_monthly_rent == 1234.0
    p2 = with_value(base, "stress_curve.steepness", 0.5)
    assert p2.stress_curve.steepness == 0.5
    assert base.stress_curve.steepness != 0.5


def test_with_value_unknown_path_raises():
    with pytest.raises(KeyError):
        with_value(default_params(), "typo_field", 1.0)
    with pytest.raises(KeyError):
        with_value(default_params(), "covid.typo", 1.0)


def test_params_are_frozen():
    params = default_params()
    with pytest.raises(dataclasses.FrozenInstanceError):
        params.avg_monthly_rent = 0.0


# ---------------------------------------------------------------- validation

def test_validate_accepts_defaults():
    validate_params(default_params())


def test_validate_reports_every_violation():
    bad = with_value(default_params(), "avg_monthly_rent", -5.0)
    bad = with_value(bad, "eviction_proportion", 2.0)
    with pytest.raises(ParamError) as err:
        validate_params(bad)
    message = str(err.value)
    assert "avg_monthly_rent" in message
    assert "eviction_proportion" in message


def test_validate_rejects_non_finite():
    bad = with_value(default_params(), "processing_time", float("nan"))
    with pytest.raises(ParamError):
        validate_params(bad)


# ---------------------------------------------------------------- file I/O

def test_save_load_round_trip_exact(tmp_path):
    path = tmp_path / "sub" / "params.yaml"
    original = with_value(default_params(), "covid.magnitude", 0.4321)
    save_params(original, path, name="round-trip")
    loaded, meta = load_params(path)
    assert loaded == original
    assert meta["name"] == "round-trip"
    assert set(meta["provenance"]) == set(f.path for f in FIELDS)


def test_shipped_default_file_matches_code_defaults():
    loaded, meta = load_params("params/default.yaml")
    assert loaded == default_params()
    assert meta["name"] == "default"


def test_provenance_override_round_trips(tmp_path):
    path = tmp_path / "fitted.yaml"
    save_params(default_params(), path,
                provenance_overrides={"covid.magnitude": "calibrated"})
    _, meta = load_params(path)
    assert meta["provenance"]["covid.magnitude"] == "calibrated"


def test_save_rejects_unknown_provenance_tag(tmp_path):
    with pytest.raises(ValueError):
        save_params(default_params(), tmp_path / "x.yaml",
                    provenance_overrides={"covid.magnitude": "guessed"})


def test_load_rejects_missing_and_unknown_fields(tmp_path):
    path = tmp_path / "broken.yaml"
    save_params(default_params(), path)
    doc = yaml.safe_load(path.read_text())
    del doc["params"]["avg_monthly_rent"]
    doc["params"]["mystery_knob"] = {"value": 1.0, "units": "x", "provenance": "assumption"}
    path.write_text(yaml.safe_dump(doc))
    with pytest.raises(ParamFileError) as err:
        load_params(path)
    assert "avg_monthly_rent" in str(err.value)
    assert "mystery_knob" in str(err.value)


def test_load_rejects_bad_value_and_bad_tag(tmp_path):
    path = tmp_path / "broken.yaml"
    save_params(default_params(), path)
    doc = yaml.safe_load(path.read_text())
    doc["params"]["avg_monthly_rent"]["value"] = "plenty"
    path.write_text(yaml.safe_dump(doc))
    with pytest.raises(ParamFileError):
        load_params(path)

    save_params(default_params(), path)
    doc = yaml.safe_load(path.read_text())
    doc["params"]["avg_monthly_rent"]["provenance"] = "vibes"
    path.write_text(yaml.safe_dump(doc))
    with pytest.raises(ParamFileError):
        load_params(path)


def test_load_rejects_out_of_bounds_value(tmp_path):
    path = tmp_path / "broken.yaml"
    save_params(default_params(), path)
    doc = yaml.safe_load(path.read_text())
    doc["params"]["eviction_proportion"]["value"] = 3.0
    path.write_text(yaml.safe_dump(doc))
    with pytest.raises(ParamError):
        load_params(path)


def test_load_rejects_non_yaml(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("params: [unclosed")
    with pytest.raises(ParamFileError):
        load_params(path)
    path.write_text("just a string\n")
    with pytest.raises(ParamFileError):
        load_params(path)


# ---------------------------------------------------------------- equilibrium

def test_defaults_are_an_equilibrium_fixed_point():
    """The shipped derived values reproduce themselves exactly."""
    base = default_params()
    balanced = equilibrate(base)
    for path in DERIVED_FIELDS:
        before = get_value(base, path)
        after = get_value(balanced, path)
        assert after == pytest.approx(before, rel=1e-12), path


def test_equilibrate_recomputes_after_perturbation():
    """Changing a non-derived input moves the derived fields consistently."""
    base = with_value(default_params(), "avg_monthly_rent", 1200.0)
    balanced = equilibrate(base)
    assert balanced.rent_owed_initial != pytest.approx(
        base.rent_owed_initial, rel=1e-6)
    again = equilibrate(balanced)
    for path in DERIVED_FIELDS:
        assert get_value(again, path) == pytest.approx(
            get_value(balanced, path), rel=1e-9), path
