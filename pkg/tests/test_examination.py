import numpy as np
import pytest

from jointfair import ExamSpec, exam_weight
from jointfair.base import ConfigurationError, DegenerateInputError
from jointfair.examination import KINDS, position_weights


class TestExamWeight:
    @pytest.mark.parametrize(
        "spec, z, k, expected",
        [
            ("linear", 1, 10, 10.0),
            ("normalized_linear", 10, 10, 0.0),
            (ExamSpec("rbp", 0.8), 3, None, 0.64),
            ("dcg", 1, None, 1.0),
            ("inverse", 4, None, 0.25),
        ],
    )
    def test_table(self, spec, z, k, expected):
        assert exam_weight(spec, z, k) == pytest.approx(expected, abs=1e-12)

    def test_normalized_linear_endpoints(self):
        for k in range(2, 20):
            assert exam_weight("normalized_linear", 1, k) == 1.0
            assert exam_weight("normalized_linear", k, k) == 0.0

    def test_normalized_linear_k1(self):
        with pytest.raises(DegenerateInputError):
            exam_weight("normalized_linear", 1, 1)

    def test_rank_below_one(self):
        with pytest.raises(ValueError):
            exam_weight("dcg", 0)

    def test_zero_beyond_cutoff(self):
        for spec in ("linear", "normalized_linear", "dcg", "inverse", ExamSpec("rbp", 0.5)):
            assert exam_weight(spec, 6, 5) == 0.0

    @pytest.mark.parametrize("kind", KINDS)
    def test_non_increasing(self, kind):
        spec = ExamSpec(kind, 0.7 if kind == "rbp" else None)
        w = position_weights(spec, 12)
        assert np.all(np.diff(w) <= 0)

    def test_inverse_most_punishing(self):
        z = np.arange(2, 11)
        assert np.all(exam_weight("inverse", z, 10) <= exam_weight("dcg", z, 10))

    def test_vectorised(self):
        np.testing.assert_allclose(exam_weight("inverse", [1, 2, 4]), [1, 0.5, 0.25])


class TestExamSpec:
    def test_rbp_needs_gamma(self):
        with pytest.raises(ConfigurationError):
            ExamSpec("rbp")

    @pytest.mark.parametrize("gamma", [0.0, 1.0, 1.5])
    def test_gamma_open_interval(self, gamma):
        with pytest.raises(ConfigurationError):
            ExamSpec("rbp", gamma)

    def test_gamma_only_for_rbp(self):
        with pytest.raises(ConfigurationError):
            ExamSpec("dcg", 0.5)

    def test_unknown_kind(self):
        with pytest.raises(ConfigurationError):
            ExamSpec("log")
