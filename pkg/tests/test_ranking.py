import numpy as np
import pytest

from rankforge.core.exceptions import NumericError, UsageError
from rankforge.core.ranking import (
    RankJacobian,
    approx_bound_check,
    bound_holds,
    l1_rank_loss,
    pairwise_state,
    rank_minus,
    rank_plus,
    rank_score_gradients,
    sigma_backward,
    sigmoid,
    tie_permutation,
    true_ranks,
)
from rankforge.models.dataset import SyntheticSpec
from rankforge.models.ranking import GradientStrategy, TwinSigmoidSpec
from rankforge.services.experiment_service import ExperimentService
from tests.helpers import central_difference, distinct_scores

TYPE1 = TwinSigmoidSpec(strategy=GradientStrategy.TYPE1)
TYPE2 = TwinSigmoidSpec(strategy=GradientStrategy.TYPE2)
TYPE3 = TwinSigmoidSpec(strategy=GradientStrategy.TYPE3)


class TestRankPlus:
    def test_distinct_scores(self):
        rv = rank_plus([1.0, 3.0, 5.0, 4.0])
        np.testing.assert_array_equal(rv.r, [4, 3, 1, 2])
        np.testing.assert_array_equal(rv.asc_perm, [2, 3, 1, 0])

    def test_agrees_with_sort(self, rng):
        for _ in range(50):
            y = rng.uniform(size=int(rng.integers(1, 200)))
            assert l1_rank_loss(rank_plus(y).r, true_ranks(y)) == 0.0

    def test_tie_gives_permutation(self):
        seen = set()
        for seed in range(20):
            r = rank_plus([2.0, 2.0], TwinSigmoidSpec(tie_seed=seed)).r
            assert sorted(r) == [1.0, 2.0]
            seen.add(tuple(r))
        assert seen == {(1.0, 2.0), (2.0, 1.0)}

    def test_always_exact_permutation(self, rng):
        for counter in range(200):
            m = int(rng.integers(1, 40))
            y = rng.integers(0, 4, size=m).astype(np.float64)  # heavy ties
            rv = rank_plus(y, TwinSigmoidSpec(tie_seed=3), tie_counter=counter)
            np.testing.assert_array_equal(np.sort(rv.r), np.arange(1, m + 1))
            np.testing.assert_array_equal(rv.r[rv.asc_perm], np.arange(1, m + 1))

    def test_ties_follow_the_permutation(self):
        y = np.array([1.0, 1.0, 1.0, 0.0])
        rv = rank_plus(y, TwinSigmoidSpec(tie_seed=11), tie_counter=4)
        p = tie_permutation(4, 11, 4)
        # among tied documents the larger p ranks first
        tied = [0, 1, 2]
        assert [i for i in np.argsort(-p[tied])] == list(np.argsort(rv.r[tied]))

    def test_blocks_give_same_ranks(self, rng, monkeypatch):
        from rankforge.core import ranking
        y = rng.integers(0, 5, size=50).astype(np.float64)
        full = rank_plus(y, TwinSigmoidSpec(tie_seed=1))
        original = ranking._row_blocks
        monkeypatch.setattr(ranking, "_row_blocks", lambda m, block=7: original(m, 7))
        np.testing.assert_array_equal(rank_plus(y, TwinSigmoidSpec(tie_seed=1)).r, full.r)

    def test_without_tie_breaking_ties_share_half(self):
        r = rank_plus([1.0, 1.0, 0.0], TwinSigmoidSpec(break_ties=False)).r
        np.testing.assert_array_equal(r, [1.5, 1.5, 3.0])

    def test_single_document(self):
        np.testing.assert_array_equal(rank_plus([0.3]).r, [1.0])

    def test_non_finite_scores(self):
        with pytest.raises(NumericError):
            rank_plus([1.0, np.nan])
        with pytest.raises(NumericError):
            rank_plus([np.inf, 0.0])

    def test_pairwise_state(self):
        p = np.array([2, 3, 1])
        state = pairwise_state([1.0, 1.0, 0.0], p)
        np.testing.assert_array_equal(state.A, -state.A.T)
        assert state.tie_mask[0, 1] and state.tie_mask[1, 0]
        assert not state.tie_mask[0, 0]
        off = ~np.eye(3, dtype=bool)
        np.testing.assert_array_equal(state.P_ddot[off], 1 - state.P_ddot.T[off])


class TestRankMinus:
    def test_tie_gives_half(self):
        np.testing.assert_array_equal(rank_minus([0.0, 0.0], alpha=3.0), [1.5, 1.5])

    def test_large_alpha_approaches_true_ranks(self):
        y = np.array([0.1, 0.5, 0.3])
        np.testing.assert_allclose(rank_minus(y, 1e4), [3.0, 1.0, 2.0], atol=1e-12)

    def test_rejects_non_positive_alpha(self):
        with pytest.raises(UsageError):
            rank_minus([1.0], 0.0)

    def test_error_shrinks_with_alpha(self):
        rows = ExperimentService().rank_accuracy_experiment(
            SyntheticSpec(v1=20, v2=50, seed=2), alphas=(1.0, 10.0, 100.0, 1000.0))
        losses = [r.mean_L1 for r in rows if r.method == "pi_minus"]
        assert all(a > b for a, b in zip(losses, losses[1:]))


class TestSigmaBackward:
    def test_type1_at_zero(self):
        assert sigma_backward(0.0, 0, TYPE1) == 0.25

    def test_type2_zero_on_label_tie(self):
        assert sigma_backward(2.5, 0, TYPE2) == 0.0
        assert sigma_backward(0.0, -1, TYPE2) == -0.25

    def test_type3(self):
        assert sigma_backward(0.0, 1, TYPE3) == 1.0
        assert sigma_backward(0.0, 0, TYPE3) == 0.0
        assert sigma_backward(0.0, -1, TYPE3) == -1.0

    def test_type3_never_vanishes_for_wrongly_ordered_pairs(self):
        z = np.array([-1e3, -50.0, -5.0, 0.0, 5.0, 50.0, 700.0])
        g = sigma_backward(z, np.ones_like(z, dtype=int), TYPE3)
        assert np.all(g > 0)
        np.testing.assert_allclose(g[0], 2.0, rtol=1e-12)

    def test_rejects_bad_signal(self):
        with pytest.raises(UsageError):
            sigma_backward(0.0, 2, TYPE3)

    def test_vectorized(self):
        z = np.linspace(-3, 3, 7)
        s = sigmoid(z)
        np.testing.assert_allclose(sigma_backward(z, np.zeros(7, dtype=int), TYPE1), s * (1 - s), rtol=1e-12)


class TestRankJacobian:
    def test_single_document_has_no_gradient(self):
        jac = rank_score_gradients([1.0], spec=TYPE1)
        np.testing.assert_array_equal(jac.dense(), [[0.0]])
        np.testing.assert_array_equal(jac.vjp([1.0]), [0.0])

    def test_two_documents(self):
        jac = rank_score_gradients([0.7, -0.2], spec=TYPE1)
        s = sigmoid(0.9)
        g = s * (1 - s)
        J = jac.dense()
        assert J[0, 0] == pytest.approx(-g)
        assert J[0, 1] == pytest.approx(g)
        assert jac.pair(0, 1) == pytest.approx(g)
        assert jac.pair(1, 1) == 0.0

    @pytest.mark.parametrize("alpha_b", [0.5, 1.0, 4.0])
    def test_type1_matches_soft_rank_jacobian(self, rng, alpha_b):
        spec = TwinSigmoidSpec(alpha_b=alpha_b)
        for _ in range(20):
            y = rng.normal(size=int(rng.integers(2, 9)))
            J = rank_score_gradients(y, spec=spec).dense()
            for i in range(y.size):
                numeric = central_difference(lambda v: rank_minus(v, alpha_b)[i], y)
                np.testing.assert_allclose(J[i], numeric, atol=1e-6)

    def test_vjp_matches_dense(self, rng):
        y = rng.normal(size=12)
        labels = rng.integers(0, 3, size=12)
        for spec in (TYPE1, TYPE2, TYPE3):
            jac = rank_score_gradients(y, labels, spec)
            v = rng.normal(size=12)
            np.testing.assert_allclose(jac.vjp(v), jac.dense().T @ v, atol=1e-12)

    def test_blockwise_vjp(self, rng):
        y = rng.normal(size=30)
        labels = rng.integers(0, 3, size=30)
        v = rng.normal(size=30)
        full = RankJacobian(y, TYPE3, labels).vjp(v)
        np.testing.assert_allclose(RankJacobian(y, TYPE3, labels, block=4).vjp(v), full, atol=1e-12)

    def test_type2_zero_when_labels_tie(self, rng):
        jac = rank_score_gradients(rng.normal(size=6), np.full(6, 2), TYPE2)
        assert not np.any(jac.matrix())

    @pytest.mark.parametrize("spec", [TYPE2, TYPE3])
    def test_labels_required(self, spec):
        with pytest.raises(UsageError):
            rank_score_gradients([0.1, 0.2], None, spec)

    def test_signal_uses_graded_labels(self):
        jac = rank_score_gradients([0.0, 0.0], [2, 1], TYPE3)
        assert jac.pair(0, 1) == 1.0
        assert jac.pair(1, 0) == -1.0


class TestL1:
    def test_examples(self):
        assert l1_rank_loss([1, 2, 3], [1, 2, 3]) == 0.0
        assert l1_rank_loss([1, 2], [2, 1]) == 2.0

    def test_length_mismatch(self):
        with pytest.raises(UsageError):
            l1_rank_loss([1, 2], [1])


class TestApproxBound:
    def test_two_documents_hit_the_bound(self):
        lhs, rhs = approx_bound_check([1.0, 0.0], alpha=1.0)
        assert lhs == pytest.approx(1 / (np.e + 1), rel=1e-12)
        assert rhs == pytest.approx(1 / (np.e + 1), rel=1e-12)
        assert bound_holds(lhs, rhs)

    def test_left_side_is_the_rank_error(self, rng):
        y = distinct_scores(rng, 10)
        lhs, _ = approx_bound_check(y, alpha=2.0)
        assert lhs == pytest.approx(np.abs(rank_minus(y, 2.0) - true_ranks(y)).max(), abs=1e-12)

    def test_large_alpha_shrinks_both_sides(self):
        lhs, rhs = approx_bound_check([0.0, 1.0, 2.0], alpha=1e3)
        assert lhs == 0.0 and rhs == 0.0

    def test_ties_rejected(self):
        with pytest.raises(UsageError):
            approx_bound_check([1.0, 1.0, 0.0], alpha=1.0)

    def test_random_vectors_never_violate(self):
        sweep = ExperimentService().bound_sweep(n_vectors=10000, max_m=20, alphas=(1.0, 10.0, 100.0), seed=0)
        assert sweep.checked >= 29000
        assert sweep.violations == []
