import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairlin import (
    SynthConfig,
    equality_conditions_check,
    estimate_group_stats,
    evaluate,
    feature_decomposition,
    fit_ols,
    gap_identity_check,
    generate,
    predict,
    unfairness_gaussian,
)
from fairlin.errors import MissingColumn, NonNumericCell, TooFewGroups
from fairlin.io import AuditDocument, Schema, load_csv, read_csv, write_dataset_csv

FIXTURE = "x,s,y\n0,a,1\n2,a,2\n10,b,3\n14,b,4\n"


def test_fixture_matches_hand_example(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text(FIXTURE)
    data = load_csv(path)
    assert data.labels == ("a", "b") and data.feature_names == ("x",)
    np.testing.assert_array_equal(data.X[:, 0], [0, 2, 10, 14])
    np.testing.assert_array_equal(data.S, [1, 1, 2, 2])
    st_ = estimate_group_stats(data)
    np.testing.assert_array_equal(st_.mu[:, 0], [1, 12])
    np.testing.assert_array_equal(st_.sigma[:, 0, 0], [1, 4])


def test_single_group(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("x,s,y\n1,a,1\n2,a,2\n")
    with pytest.raises(TooFewGroups):
        load_csv(path)


def test_bad_cells(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text(FIXTURE + "oops,b,5\n3,a,nan\n")
    with pytest.raises(NonNumericCell) as exc:
        load_csv(path)
    assert (exc.value.row, exc.value.col) == (6, "x")
    data, dropped = read_csv(path, drop_bad_rows=True)
    assert dropped == 2 and data.n == 4


def test_missing_column_and_schema(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,b,grp,out\n1,9,0,1\n2,8,1,2\n3,7,1,3\n")
    with pytest.raises(MissingColumn):
        load_csv(path)
    data = load_csv(path, Schema(["b"], "grp", "out"))
    assert data.feature_names == ("b",) and data.labels == (0, 1)
    np.testing.assert_array_equal(data.Y, [1, 2, 3])


def test_numeric_labels_sort_numerically(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("x,s,y\n1,10,1\n2,9,2\n3,10,3\n")
    assert load_csv(path).labels == (9, 10)


def test_gen_csv_round_trip(tmp_path):
    data, _ = generate(SynthConfig(n=300, t_y=1, t_mean=1, t_std=1, t_corr=0.4, seed=8))
    write_dataset_csv(tmp_path / "d.csv", data)
    assert load_csv(tmp_path / "d.csv").equals(data)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=4, max_size=20))
def test_float_round_trip(tmp_path_factory, values):
    from fairlin.group_stats import Dataset

    n = len(values)
    data = Dataset(np.array(values)[:, None], np.resize([1, 2], n), np.array(values[::-1]))
    path = tmp_path_factory.mktemp("rt") / "d.csv"
    write_dataset_csv(path, data)
    assert load_csv(path).equals(data)


def _audit(seed=0):
    data, _ = generate(SynthConfig(n=3000, t_y=3, t_mean=2, t_std=3, t_corr=0.7, seed=seed))
    model = fit_ols(data)
    stats = estimate_group_stats(data)
    fit = evaluate(predict(model, data.X, data.S), data)
    return AuditDocument(model, data.feature_names, stats, fit, unfairness_gaussian(model, stats),
                         feature_decomposition(model, stats, data.feature_names),
                         equality_conditions_check(model, stats, data), gap_identity_check(fit),
                         config_hash="0123456789abcdef")


def test_audit_round_trip():
    doc = _audit()
    text = doc.serialize()
    again = AuditDocument.parse(text)
    assert again.serialize() == text
    assert again.to_dict() == doc.to_dict()
    np.testing.assert_array_equal(again.group_stats.sigma, doc.group_stats.sigma)
    assert again.fit == doc.fit and again.unfairness == doc.unfairness


def test_audit_validates_against_schema():
    import jsonschema

    from fairlin.io import load_schema

    jsonschema.validate(_audit().to_dict(), load_schema("audit"))
