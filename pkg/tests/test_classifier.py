import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermoscan.classifier import (
    DistanceTable,
    Label,
    PatientRecord,
    classify_batch,
    feature_distances,
    knn_euclidean,
    knn_neighbours,
    per_feature_vote,
    read_records,
    write_records,
)
from thermoscan.errors import EmptyGallery, GalleryTooSmall, UnreadableFile, ValidationError

# Feature vectors whose pairwise differences from O_1 are exactly the first
# published distance table.
O1 = PatientRecord.from_values("O_1", (0.05, 40.0, 0.16, 0.01), "sick")
O2 = PatientRecord.from_values("O_2", (0.222, 54.648, 0.317, 0.063), "sick")
O3 = PatientRecord.from_values("O_3", (0.8716, 68.826, 0.993, 0.073), "healthy")
O4 = PatientRecord.from_values("O_4", (0.464, 77.26, 0.475, 0.080), "healthy")
PATIENTS = [O1, O2, O3, O4]

features = st.tuples(st.floats(0, 1), st.floats(0, 127.5), st.floats(0, 1), st.floats(0, 1))


def record(i, values, label=None):
    return PatientRecord.from_values(f"r{i}", values, label)


class TestDistances:
    def test_published_row(self):
        table = feature_distances(O1, [O2, O3, O4])
        np.testing.assert_allclose(table.row("O_2"), [0.172, 14.648, 0.157, 0.053], atol=1e-12)
        np.testing.assert_allclose(table.row("O_4"), [0.414, 37.26, 0.315, 0.070], atol=1e-12)

    def test_equal_record_gives_zero_row(self):
        twin = PatientRecord("twin", O1.features, "sick")
        assert feature_distances(O1, [twin, O2]).row("twin").tolist() == [0, 0, 0, 0]

    def test_errors(self):
        with pytest.raises(EmptyGallery):
            feature_distances(O1, [])
        with pytest.raises(ValidationError):
            feature_distances(O1, [O1, O2])
        with pytest.raises(ValidationError):
            DistanceTable(("a",), [[-1, 0, 0, 0]])

    @given(features, features)
    def test_symmetric(self, a, b):
        ra, rb = record(0, a), record(1, b)
        np.testing.assert_array_equal(feature_distances(ra, [rb]).rows, feature_distances(rb, [ra]).rows)
        np.testing.assert_array_equal(feature_distances(ra, [rb]).rows[0], np.abs(np.subtract(a, b)))


class TestVote:
    def test_single_patient(self):
        result = per_feature_vote(DistanceTable(("x",), [[1, 2, 3, 4]]), ["healthy"])
        assert result.label is Label.HEALTHY and result.tally == {"x": 4}

    def test_tie_within_feature_goes_to_earlier_row(self):
        table = DistanceTable(("a", "b"), [[1, 1, 1, 1], [1, 1, 1, 1]])
        assert per_feature_vote(table, ["sick", "healthy"]).votes == ("a",) * 4

    def test_two_two_split_uses_normalised_sum(self):
        # a wins mean and std, b wins max and asymmetry; b is closer overall after scaling
        table = DistanceTable(("a", "b"), [[0.1, 10, 0.9, 0.9], [0.2, 11, 0.1, 0.1]])
        result = per_feature_vote(table, {"a": "sick", "b": "healthy"})
        assert result.tally == {"a": 2, "b": 2}
        assert result.label is Label.HEALTHY

    def test_label_count_mismatch(self):
        with pytest.raises(ValidationError):
            per_feature_vote(DistanceTable(("a", "b"), np.zeros((2, 4))), ["sick"])

    @settings(max_examples=100)
    @given(features, st.lists(features, min_size=1, max_size=6), st.integers(0, 3), st.floats(0.01, 100))
    def test_column_scaling_invariance(self, q, gallery, column, factor):
        labels = ["sick" if i % 2 else "healthy" for i in range(len(gallery))]
        recs = [record(i + 1, g, labels[i]) for i, g in enumerate(gallery)]
        base = per_feature_vote(feature_distances(record(0, q), recs), labels)
        table = feature_distances(record(0, q), recs)
        rows = table.rows.copy()
        rows[:, column] *= factor
        scaled = per_feature_vote(DistanceTable(table.ids, rows), labels)
        if not np.any(np.diff(np.sort(rows[:, column])) == 0):  # rounding may create a tie
            assert scaled.votes == base.votes


class TestKnn:
    def test_identical_vector(self):
        gallery = [record(1, (0.5, 10, 0.6, 0.1), "sick"), record(2, (0.2, 30, 0.3, 0.2), "healthy")]
        assert knn_euclidean(record(0, (0.2, 30, 0.3, 0.2)), gallery) is Label.HEALTHY

    def test_constructed_nearest(self):
        gallery = [
            record(1, (0.8, 20, 0.9, 0.05), "sick"),
            record(2, (0.3, 5, 0.4, 0.01), "healthy"),
            record(3, (0.35, 6, 0.45, 0.01), "healthy"),
            record(4, (0.9, 40, 1.0, 0.1), "sick"),
        ]
        assert knn_euclidean(record(0, (0.82, 21, 0.9, 0.05)), gallery) is Label.SICK
        label, nearest = knn_neighbours(record(0, (0.82, 21, 0.9, 0.05)), gallery, 3)
        assert [i for i, _ in nearest] == ["r1", "r3", "r2"] and label is Label.HEALTHY

    def test_even_k_tie_goes_to_nearest(self):
        gallery = [record(1, (0.5, 10, 0.5, 0), "sick"), record(2, (0.5, 12, 0.5, 0), "healthy")]
        assert knn_euclidean(record(0, (0.5, 10.5, 0.5, 0)), gallery, k=2) is Label.SICK

    def test_distance_tie_goes_to_earlier(self):
        gallery = [record(1, (0.5, 9, 0.5, 0), "healthy"), record(2, (0.5, 11, 0.5, 0), "sick")]
        assert knn_euclidean(record(0, (0.5, 10, 0.5, 0)), gallery) is Label.HEALTHY

    def test_normalize_changes_dominant_feature(self):
        gallery = [record(1, (0.9, 10, 0.9, 0.1), "sick"), record(2, (0.1, 14, 0.1, 0.0), "healthy")]
        query = record(0, (0.85, 14, 0.85, 0.1))
        assert knn_euclidean(query, gallery) is Label.HEALTHY
        assert knn_euclidean(query, gallery, normalize=True) is Label.SICK

    def test_errors(self):
        with pytest.raises(GalleryTooSmall):
            knn_euclidean(O1, [O2], k=2)
        with pytest.raises(EmptyGallery):
            knn_euclidean(O1, [])
        with pytest.raises(ValidationError):
            knn_euclidean(O1, [record(9, (0, 0, 0, 0))])

    @given(features, st.lists(features, min_size=1, max_size=6), st.sampled_from(["sick", "healthy"]))
    def test_exact_vector_wins(self, q, others, label):
        gallery = [record(1, q, label)] + [record(i + 2, g, "healthy" if label == "sick" else "sick")
                                           for i, g in enumerate(others) if g != q]
        assert knn_euclidean(record(0, q), gallery).value == label


class TestBatch:
    def test_leave_one_out_matches_published_conclusions(self):
        labels = classify_batch(PATIENTS, PATIENTS).labels()
        assert labels["O_1"] == "sick"
        assert labels["O_3"] == "healthy"

    def test_empty(self):
        assert classify_batch([], PATIENTS).entries == []

    def test_duplicates_flagged(self):
        report = classify_batch([O1, O1, O3], PATIENTS)
        assert report.duplicates == ["O_1"]

    def test_errors_collected(self):
        report = classify_batch([O1], [O1], "knn")
        assert report.entries[0]["label"] is None and "EmptyGallery" in report.entries[0]["error"]

    def test_gallery_order_does_not_matter(self, tmp_path):
        a = classify_batch(PATIENTS, PATIENTS, "knn", 3)
        b = classify_batch(PATIENTS, PATIENTS[::-1], "knn", 3)
        assert a.as_dict() == b.as_dict()
        a.write(tmp_path / "r.json")
        assert json.loads((tmp_path / "r.json").read_text()) == a.as_dict()

    def test_unknown_method(self):
        with pytest.raises(ValidationError):
            classify_batch(PATIENTS, PATIENTS, "svm")


class TestRecordFiles:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "g.csv"
        write_records(path, PATIENTS + [record(5, (0.1, 2, 0.3, 0.4))])
        assert path.read_text().splitlines()[0] == "id,mean_norm,std_raw,max_norm,asymmetry,label"
        back = read_records(path)
        assert back[:4] == PATIENTS and back[4].label is None

    def test_bad_files(self, tmp_path):
        with pytest.raises(UnreadableFile):
            read_records(tmp_path / "missing.csv")
        bad = tmp_path / "bad.csv"
        bad.write_text("id,a,b\n")
        with pytest.raises(ValidationError):
            read_records(bad)
        bad.write_text("id,mean_norm,std_raw,max_norm,asymmetry,label\nx,0.1,zz,0.1,0.1,\n")
        with pytest.raises(ValidationError):
            read_records(bad)
        bad.write_text("id,mean_norm,std_raw,max_norm,asymmetry,label\nx,0.1,1,0.1,0.1,ill\n")
        with pytest.raises(ValidationError):
            read_records(bad)
