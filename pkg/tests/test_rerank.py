import numpy as np
import pytest

from jointfair import CombMNZReranker, RunData, combmnz_rerank
from jointfair.base import ConfigurationError
from jointfair.rerank import coverage_scores


def _run(lists):
    return RunData.from_lists(lists)


class TestCombMNZ:
    def test_hand_example(self):
        # coverage@1: a=2, b=0, c=0 ; u1 candidates a(1.0) b(0.5) c(0.0)
        run = _run({"u1": [("a", 1.0), ("b", 0.5), ("c", 0.0)], "u2": [("a", 0.9), ("c", 0.1), ("b", 0.0)]})
        out = combmnz_rerank(run, k_prime=3, k=1)
        # u1: a -> (1 + 0) * 1 = 1 ; b -> (0.5 + 1) * 2 = 3 ; c -> (0 + 1) * 1 = 1
        assert list(out.lists())[0][2] == ["b", "a", "c"]
        np.testing.assert_allclose(out.scores[0, 0], [3.0, 1.0, 1.0])

    def test_truncates_to_k_prime(self):
        run = _run({"u": [(f"i{j}", 10 - j) for j in range(6)]})
        assert combmnz_rerank(run, k_prime=4, k=2).depth == 4
        assert combmnz_rerank(run, k_prime=4, k=2, keep_tail=True).depth == 6

    def test_keeps_candidate_set(self):
        rng = np.random.default_rng(0)
        lists = {f"u{u}": [(f"i{j}", float(s)) for j, s in zip(rng.permutation(30), rng.random(30))] for u in range(5)}
        run = _run(lists)
        out = combmnz_rerank(run, k_prime=10, k=5)
        for (_, _, before), (_, _, after) in zip(run.lists(), out.lists()):
            assert sorted(before[:10]) == sorted(after)

    def test_short_list_warns(self):
        run = _run({"u": [("a", 1.0), ("b", 0.0)]})
        with pytest.warns(UserWarning, match="fewer than"):
            combmnz_rerank(run, k_prime=3, k=1)

    def test_needs_scores(self):
        with pytest.raises(ValueError, match="scores"):
            combmnz_rerank(_run({"u": ["a", "b"]}), k_prime=2, k=1)

    def test_k_above_k_prime(self):
        with pytest.raises(ConfigurationError):
            combmnz_rerank(_run({"u": [("a", 1.0)]}), k_prime=1, k=2)

    def test_estimator_matches_function(self):
        run = _run({"u1": [("a", 1.0), ("b", 0.5), ("c", 0.2)], "u2": [("a", 0.9), ("c", 0.3), ("b", 0.1)]})
        est = CombMNZReranker(k_prime=3, k=1).fit(run)
        np.testing.assert_array_equal(est.coverage_, coverage_scores(run, 1))
        assert est.transform(run) == combmnz_rerank(run, 3, 1)

    def test_transform_before_fit(self):
        with pytest.raises(RuntimeError):
            CombMNZReranker().transform(_run({"u": [("a", 1.0)]}))
