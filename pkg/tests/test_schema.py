import math

import pytest
from hypothesis import given, strategies as st

from ckdscreen.errors import SchemaError
from ckdscreen.schema import CohortSchema, DiscretizationRule, FeatureSpec, load_schema


def test_packaged_schema_shape(schema):
    assert len(schema.features) == 24
    groups = [f.group for f in schema.features]
    assert {g: groups.count(g) for g in ("SD", "LH", "MH", "CE", "Path")} == {
        "SD": 5,
        "LH": 3,
        "MH": 7,
        "CE": 4,
        "Path": 5,
    }
    assert schema.positive_label == "CKD"
    assert schema.negative_label == "non-CKD"
    assert schema.class_counts == {"CKD": 112, "non-CKD": 172}


def test_bmi_bands(schema):
    assert schema.discretize("BMI", 17.0) == "Underweight"
    # bands are lower-inclusive: the breakpoint itself belongs to the upper band
    assert schema.discretize("BMI", 18.5) == "Normal"
    assert schema.discretize("BMI", 24.999) == "Normal"
    assert schema.discretize("BMI", 25.0) == "Overweight"
    assert schema.discretize("BMI", 31.0) == "Obese"


def test_age_bands(schema):
    assert schema.discretize("Age", 18) == "18-30y"
    assert schema.discretize("Age", 30) == "18-30y"
    assert schema.discretize("Age", 31) == "31-39y"
    assert schema.discretize("Age", 59) == "50-60y"
    assert schema.discretize("Age", 60) == "60+y"
    assert schema.discretize("Age", 95) == "60+y"


def test_sex_specific_anemia(schema):
    assert schema.discretize("Anemia", 12.5, sex="Male") == "Yes"
    assert schema.discretize("Anemia", 12.5, sex="Female") == "No"
    assert schema.discretize("Anemia", 13.0, sex="Male") == "No"
    assert schema.discretize("Anemia", 11.9, sex="Female") == "Yes"


def test_sex_specific_requires_sex(schema):
    with pytest.raises(SchemaError):
        schema.discretize("Anemia", 12.5)
    with pytest.raises(SchemaError):
        schema.discretize("Anemia", 12.5, sex="Other")


def test_direction_of_threshold_rules(schema):
    # waist: at/above the cut is abdominal obesity
    assert schema.discretize("Abdominal obesity", 94.0, sex="Male") == "Yes"
    assert schema.discretize("Abdominal obesity", 93.9, sex="Male") == "No"
    assert schema.discretize("Abdominal obesity", 80.0, sex="Female") == "Yes"
    # MUAC: below the cut is undernutrition
    assert schema.discretize("Undernutrition", 24.9, sex="Male") == "Yes"
    assert schema.discretize("Undernutrition", 25.0, sex="Male") == "No"
    assert schema.discretize("Daily sleep<7h", 6.5) == "Yes"
    assert schema.discretize("Daily sleep<7h", 7.0) == "No"
    assert schema.discretize("Low serum albumin", 3.4) == "Yes"
    assert schema.discretize("Hypercholesterolemia", 201.0) == "Yes"
    assert schema.discretize("Low HDL cholesterol", 39.0) == "Yes"
    assert schema.discretize("Hypertriglyceridemia", 149.0) == "No"


def test_discretize_rejects_bad_values(schema):
    with pytest.raises(SchemaError):
        schema.discretize("BMI", float("nan"))
    with pytest.raises(SchemaError):
        schema.discretize("BMI", -1.0)
    with pytest.raises(SchemaError):
        schema.discretize("Hypertension", 1.0)  # no rule on a reported feature
    with pytest.raises(SchemaError):
        schema.discretize("NoSuchFeature", 1.0)


@given(st.floats(min_value=0, max_value=1e6, allow_nan=False))
def test_bands_partition_nonnegative_reals(value):
    rule = DiscretizationRule(
        unit="kg/m2",
        labels=("Underweight", "Normal", "Overweight", "Obese"),
        breakpoints=(18.5, 25.0, 30.0),
    )
    got = rule.apply(value)
    # independent linear-scan oracle: count breakpoints at or below the value
    idx = sum(1 for b in rule.breakpoints if value >= b)
    assert got == rule.labels[idx]


def test_rule_validation():
    with pytest.raises(SchemaError):
        DiscretizationRule(unit="u", labels=("a", "b", "c"), breakpoints=(1.0,))
    with pytest.raises(SchemaError):
        DiscretizationRule(unit="u", labels=("a", "b", "c"), breakpoints=(2.0, 1.0))
    with pytest.raises(SchemaError):
        DiscretizationRule(unit="u", labels=("a", "b"))


def test_feature_spec_validation():
    with pytest.raises(SchemaError):
        FeatureSpec(name="X", group="nope", kind="binary", categories=("Yes", "No"))
    with pytest.raises(SchemaError):
        FeatureSpec(name="X", group="SD", kind="binary", categories=("Yes", "No", "Maybe"))
    with pytest.raises(SchemaError):
        FeatureSpec(name="X", group="SD", kind="categorical", categories=("a", "a"))
    with pytest.raises(SchemaError):
        FeatureSpec(name="X", group="SD", kind="other", categories=("a", "b"))


def test_schema_requires_sex_coverage():
    gender = FeatureSpec(name="Gender", group="SD", kind="binary", categories=("Female", "Male"))
    partial_rule = DiscretizationRule(
        unit="g/dL",
        labels=("Yes", "No"),
        sex_breakpoints={"Male": (13.0,)},
        sex_feature="Gender",
    )
    anemia = FeatureSpec(
        name="Anemia", group="CE", kind="binary", categories=("Yes", "No"), discretization=partial_rule
    )
    with pytest.raises(SchemaError):
        CohortSchema(features=(gender, anemia))


def test_schema_hash_stability_and_sensitivity(schema):
    again = load_schema()
    assert schema.schema_hash == again.schema_hash
    # a renamed category must change the digest (Occupation has no rule tied to it)
    doc = schema.to_dict()
    occ = next(f for f in doc["features"] if f["name"] == "Occupation")
    occ["categories"][0] = "Farming"
    from ckdscreen.schema import schema_from_dict

    assert schema_from_dict(doc).schema_hash != schema.schema_hash


def test_indicator_category_convention(schema):
    assert schema.get("Gender").indicator_category == "Female"
    assert schema.get("Hypertension").indicator_category == "Yes"


def test_schema_yaml_round_trip(tmp_path, schema):
    from ckdscreen.schema import save_schema

    p = tmp_path / "schema.yaml"
    save_schema(schema, str(p))
    back = load_schema(str(p))
    assert back.schema_hash == schema.schema_hash
    assert back.feature_names == schema.feature_names
    assert math.isclose(
        back.get("BMI").discretization.breakpoints[0],
        schema.get("BMI").discretization.breakpoints[0],
    )
