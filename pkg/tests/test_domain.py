import hypothesis.strategies as st
import pytest
from hypothesis import given

from sentriage.domain import (
    Dataset,
    Decision,
    LabelEncoding,
    NeutrosophicScore,
    PolicyMode,
    ThresholdPolicy,
    validate_probability_vector,
)
from sentriage.errors import PipelineError

from conftest import probability_values


class TestValidateProbabilityVector:
    def test_symmetric_two_class(self):
        v = validate_probability_vector([0.5, 0.5])
        assert v.values == (0.5, 0.5)
        assert v.class_count == 2

    def test_one_hot(self):
        v = validate_probability_vector([1.0, 0.0, 0.0])
        assert v.values == (1.0, 0.0, 0.0)

    def test_sum_out_of_tolerance(self):
        with pytest.raises(PipelineError) as e:
            validate_probability_vector([0.6, 0.6])
        assert e.value.code == "SUM_OUT_OF_TOLERANCE"

    def test_negative_entry(self):
        with pytest.raises(PipelineError) as e:
            validate_probability_vector([1.2, -0.2])
        assert e.value.code == "NEGATIVE_ENTRY"

    def test_too_few_classes(self):
        with pytest.raises(PipelineError) as e:
            validate_probability_vector([1.0])
        assert e.value.code == "TOO_FEW_CLASSES"

    def test_does_not_renormalize(self):
        v = validate_probability_vector([0.5000004, 0.5])
        assert v.values == (0.5000004, 0.5)

    @given(probability_values())
    def test_normalized_vectors_validate(self, values):
        v = validate_probability_vector(values)
        assert v.class_count == len(values)


class TestLabelEncoding:
    def test_lexicographic_order(self):
        enc = LabelEncoding.from_names(["Normal", "DDoS", "MITM", "Malware"])
        assert enc.class_names == ("DDoS", "MITM", "Malware", "Normal")

    def test_round_trip(self):
        names = ["probe", "dos", "normal"]
        enc = LabelEncoding.from_names(names)
        for n in names:
            assert enc.decode(enc.encode(n)) == n

    def test_unknown_class(self):
        enc = LabelEncoding.from_names(["a", "b"])
        with pytest.raises(PipelineError) as e:
            enc.encode("c")
        assert e.value.code == "UNKNOWN_CLASS"

    def test_unsorted_rejected(self):
        with pytest.raises(PipelineError) as e:
            LabelEncoding(("b", "a"))
        assert e.value.code == "ENCODING_NOT_SORTED"

    @given(st.sets(st.text(min_size=1, max_size=8), min_size=1, max_size=8))
    def test_round_trip_property(self, names):
        enc = LabelEncoding.from_names(names)
        assert set(enc.class_names) == names
        for name in names:
            assert enc.decode(enc.encode(name)) == name


class TestNeutrosophicScore:
    def test_truth_falsity_must_complement(self):
        with pytest.raises(PipelineError) as e:
            NeutrosophicScore(truth=0.8, indeterminacy=0.1, falsity=0.1)
        assert e.value.code == "TRUTH_FALSITY_MISMATCH"

    def test_range_enforced(self):
        with pytest.raises(PipelineError):
            NeutrosophicScore(truth=0.5, indeterminacy=1.5, falsity=0.5)


class TestDataset:
    def test_labels_checked_against_encoding(self):
        enc = LabelEncoding.from_names(["a", "b"])
        with pytest.raises(PipelineError) as e:
            Dataset([[1.0], [2.0]], [0, 2], enc, ("f0",))
        assert e.value.code == "INDEX_OUT_OF_RANGE"

    def test_immutable_features(self):
        enc = LabelEncoding.from_names(["a", "b"])
        ds = Dataset([[1.0], [2.0]], [0, 1], enc, ("f0",))
        with pytest.raises(ValueError):
            ds.features[0, 0] = 9.0

    def test_take_preserves_order(self):
        enc = LabelEncoding.from_names(["a", "b"])
        ds = Dataset([[1.0], [2.0], [3.0]], [0, 1, 0], enc, ("f0",))
        sub = ds.take([2, 0])
        assert sub.features[:, 0].tolist() == [3.0, 1.0]
        assert sub.labels.tolist() == [0, 0]


class TestThresholdPolicy:
    def test_per_class_requires_thresholds(self):
        with pytest.raises(PipelineError) as e:
            ThresholdPolicy(0.4, {}, 80.0, PolicyMode.PER_CLASS, 1)
        assert e.value.code == "MISSING_CLASS_THRESHOLD"

    def test_threshold_for_global(self):
        p = ThresholdPolicy(0.4, {}, 80.0, PolicyMode.GLOBAL, 1)
        assert p.threshold_for(3) == 0.4

    def test_threshold_for_missing_class(self):
        p = ThresholdPolicy(0.4, {0: 0.5}, 80.0, PolicyMode.PER_CLASS, 1)
        assert p.threshold_for(0) == 0.5
        with pytest.raises(PipelineError) as e:
            p.threshold_for(1)
        assert e.value.code == "MISSING_CLASS_THRESHOLD"

    def test_out_of_range_threshold(self):
        with pytest.raises(PipelineError):
            ThresholdPolicy(1.4, {}, 80.0, PolicyMode.GLOBAL, 1)


class TestDecision:
    def _score(self, i):
        return NeutrosophicScore(truth=0.6, indeterminacy=i, falsity=0.4)

    def test_consistency_enforced(self):
        with pytest.raises(PipelineError) as e:
            Decision("s1", 0, self._score(0.5), False, 0.4, 1)
        assert e.value.code == "DECISION_INCONSISTENT"

    @given(
        st.floats(min_value=0, max_value=1, allow_nan=False),
        st.floats(min_value=0, max_value=1, allow_nan=False),
    )
    def test_abstained_reconstructible(self, i, tau):
        d = Decision("s", 0, self._score(i), i > tau, tau, 1)
        assert d.abstained == (d.score.indeterminacy > d.applied_threshold)
