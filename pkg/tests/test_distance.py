import numpy as np
import pytest
from scipy.special import expit

from ctxmover.clustering import ClusteredSppmi
from ctxmover.errors import BadInput, BadParameter, EmptySentence, OovError
from ctxmover.estimates import DistributionalEstimate, HistogramStore
from ctxmover.distance import (
    GroundSpace,
    SentenceEstimate,
    cmd,
    comb,
    entailment_cost,
    ground_cost,
    nearest_neighbors,
    sentence_cmd,
)


def store_from_table(table):
    return HistogramStore.from_clustered(ClusteredSppmi(table=np.asarray(table, dtype=float)))


def toy_space(atoms, metric="euclidean", p=1, n_clusters=None):
    atoms = np.asarray(atoms, dtype=float)
    return GroundSpace(atom_vectors=atoms, metric=metric, p=p,
                       n_clusters=len(atoms) if n_clusters is None else n_clusters)


class TestGroundCost:
    def test_identical_atoms_zero_diagonal(self):
        space = toy_space([[1.0, 2.0], [3.0, 4.0]])
        M = ground_cost(space, [0, 1], [0, 1])
        assert np.diag(M) == pytest.approx([0.0, 0.0], abs=1e-12)

    def test_euclidean_hand_value(self):
        space = toy_space([[0.0, 0.0], [3.0, 4.0]], p=1)
        assert ground_cost(space, [0], [1])[0, 0] == pytest.approx(5.0)
        space2 = toy_space([[0.0, 0.0], [3.0, 4.0]], p=2)
        assert ground_cost(space2, [0], [1])[0, 0] == pytest.approx(25.0)

    def test_angular_right_angle(self):
        space = toy_space([[1.0, 0.0], [0.0, 2.0]], metric="angular", p=1)
        assert ground_cost(space, [0], [1])[0, 0] == pytest.approx(np.pi / 2)

    def test_angular_rejects_zero_vector(self):
        space = toy_space([[0.0, 0.0], [1.0, 0.0]], metric="angular")
        with pytest.raises(BadInput):
            ground_cost(space, [0], [1])

    def test_entailment_matrix_matches_scalar(self, rng):
        V = rng.standard_normal((4, 3))
        space = toy_space(V, metric="entailment")
        M = ground_cost(space, [0, 1, 2, 3], [0, 1, 2, 3])
        for i in range(4):
            for j in range(4):
                assert M[i, j] == pytest.approx(entailment_cost(V[i], V[j]), abs=1e-12)

    def test_bad_support(self):
        space = toy_space([[0.0], [1.0]])
        with pytest.raises(BadInput):
            ground_cost(space, [0, 7], [1])


class TestEntailmentCost:
    def test_self_zero_vector(self):
        assert entailment_cost([0.0], [0.0]) == pytest.approx(0.3466, abs=1e-3)

    def test_asymmetric_pair(self):
        assert entailment_cost([2.0], [0.0]) == pytest.approx(0.0826, abs=1e-3)
        assert entailment_cost([0.0], [2.0]) == pytest.approx(1.0635, abs=1e-3)

    def test_always_nonnegative(self, rng):
        for _ in range(50):
            vi, vj = rng.standard_normal((2, 6)) * 5
            assert entailment_cost(vi, vj) >= 0.0

    def test_monotonicity_grid(self):
        grid = np.linspace(-4.0, 4.0, 9)
        # decreasing in the source component, increasing in the target one
        costs_src = [entailment_cost([x], [0.5]) for x in grid]
        assert all(b <= a + 1e-12 for a, b in zip(costs_src, costs_src[1:]))
        costs_tgt = [entailment_cost([0.5], [x]) for x in grid]
        assert all(b >= a - 1e-12 for a, b in zip(costs_tgt, costs_tgt[1:]))

    def test_source_at_infinity_costs_nothing(self):
        assert entailment_cost([40.0, 40.0], [3.0, 3.0]) == pytest.approx(0.0, abs=1e-12)

    def test_numerically_safe_for_large_inputs(self):
        assert np.isfinite(entailment_cost([-800.0], [800.0]))


class TestCmd:
    def test_self_distance_small(self):
        store = store_from_table([[1.0, 2.0, 1.0], [2.0, 0.5, 0.0]])
        space = toy_space(np.array([[0.0], [1.0], [2.0], [10.0], [11.0]]), n_clusters=3)
        M = ground_cost(space, store.estimate(0).support, store.estimate(0).support)
        d = cmd(0, 0, store, space, lam=1e-3 * M.max(), iters=3000)
        assert d <= 1e-2 * M.max()

    def test_symmetric_metric_symmetry(self):
        store = store_from_table([[1.0, 2.0, 1.0], [2.0, 0.5, 1.5]])
        space = toy_space(np.array([[0.0], [1.0], [2.0], [10.0], [11.0]]), n_clusters=3)
        d12 = cmd(0, 1, store, space, lam=0.3, iters=4000)
        d21 = cmd(1, 0, store, space, lam=0.3, iters=4000)
        assert abs(d12 - d21) <= 1e-9

    def test_disjoint_diracs_forced_cost(self):
        store = store_from_table([[1.0, 0.0], [0.0, 1.0]])
        space = toy_space(np.array([[0.0], [5.0], [20.0], [30.0]]), n_clusters=2)
        for lam in (1e-3, 0.1, 5.0):
            assert cmd(0, 1, store, space, lam=lam, iters=50) == pytest.approx(5.0)

    def test_oov(self):
        store = store_from_table([[1.0]])
        space = toy_space(np.array([[0.0], [1.0]]), n_clusters=1)
        with pytest.raises(OovError):
            cmd(0, 5, store, space)

    def test_entailment_direction_matters(self, rng):
        V = rng.standard_normal((4, 3))
        store = store_from_table([[1.0, 0.5], [0.3, 1.0]])
        space = toy_space(V, metric="entailment", n_clusters=2)
        d_ab = cmd(0, 1, store, space, lam=0.1, iters=200)
        d_ba = cmd(1, 0, store, space, lam=0.1, iters=200)
        assert d_ab != pytest.approx(d_ba, abs=1e-6)

    def test_ranking_scale_invariance(self, rng):
        table = rng.random((5, 4)) + 0.05
        store = store_from_table(table)
        atoms = rng.standard_normal((9, 2))
        space1 = toy_space(atoms, p=1, n_clusters=4)
        space3 = toy_space(3.0 * atoms, p=1, n_clusters=4)
        d1 = [cmd(0, w, store, space1, lam=0.05, iters=300) for w in range(1, 5)]
        d3 = [cmd(0, w, store, space3, lam=3 * 0.05, iters=300) for w in range(1, 5)]
        assert d3 == pytest.approx([3.0 * d for d in d1], rel=1e-10)
        assert np.argsort(d1).tolist() == np.argsort(d3).tolist()


class TestComb:
    def midpoint_setup(self):
        # word 0 is a unit mass at grid point 0, word 1 at grid point 1;
        # both supports mention the idle midpoint atom so the barycenter may use it
        est0 = DistributionalEstimate(support=np.array([0, 1, 2]),
                                      weights=np.array([1.0, 0.0, 0.0]),
                                      owner=0, own_atom=3)
        est1 = DistributionalEstimate(support=np.array([0, 1, 2]),
                                      weights=np.array([0.0, 0.0, 1.0]),
                                      owner=1, own_atom=4)
        store = HistogramStore([est0, est1], n_clusters=3)
        space = toy_space(np.array([[0.0], [0.5], [1.0], [5.0], [6.0]]),
                          p=2, n_clusters=3)
        return store, space

    def test_single_word_is_word_estimate(self):
        store = store_from_table([[1.0, 3.0]])
        space = toy_space(np.array([[0.0], [1.0], [7.0]]), n_clusters=2)
        out = comb([0], store, space, lam=1e-3, iters=200)
        est = store.estimate(0)
        assert np.array_equal(out.support, est.support)
        assert out.weights == pytest.approx(est.weights, abs=1e-9)

    def test_repeated_word_equals_single(self):
        store = store_from_table([[1.0, 3.0]])
        space = toy_space(np.array([[0.0], [1.0], [7.0]]), n_clusters=2)
        a = comb([0], store, space, lam=0.1, iters=100)
        b = comb([0, 0], store, space, lam=0.1, iters=100)
        assert np.array_equal(a.support, b.support)
        assert b.weights == pytest.approx(a.weights, abs=1e-9)

    def test_midpoint_concentration(self):
        store, space = self.midpoint_setup()
        out = comb([0, 1], store, space, lam=1e-3, iters=500)
        mid = out.weights[out.support.tolist().index(1)]
        assert mid >= 0.95

    def test_support_subset_of_union(self, rng):
        table = rng.random((4, 5)) * (rng.random((4, 5)) > 0.4) + 1e-3
        store = store_from_table(table)
        space = toy_space(rng.standard_normal((9, 2)), n_clusters=5)
        out = comb([0, 2, 3], store, space, lam=0.1, iters=50)
        union = np.unique(np.concatenate([store.estimate(w).support for w in (0, 2, 3)]))
        assert set(out.support.tolist()) <= set(union.tolist())
        assert out.weights.sum() == pytest.approx(1.0, abs=1e-9)

    def test_empty_sentence(self):
        store = store_from_table([[1.0]])
        space = toy_space(np.array([[0.0], [1.0]]), n_clusters=1)
        with pytest.raises(EmptySentence):
            comb([], store, space)

    def test_eta_length_checked_even_for_single_word(self):
        store = store_from_table([[1.0, 1.0]])
        space = toy_space(np.array([[0.0], [1.0], [9.0]]), n_clusters=2)
        with pytest.raises(BadParameter):
            comb([0], store, space, eta=[0.5, 0.5])


class TestSentenceCmd:
    def make(self, rng):
        table = rng.random((6, 5)) + 0.05
        store = store_from_table(table)
        space = toy_space(rng.standard_normal((11, 3)), n_clusters=5)
        return store, space

    def test_self_distance_small(self, rng):
        store, space = self.make(rng)
        sent = [0, 2, 4]
        est = comb(sent, store, space, lam=0.05, iters=200)
        M = ground_cost(space, est.support, est.support)
        d = sentence_cmd(sent, sent, store, space, lam=1e-3 * M.max(), iters=3000)
        assert d <= 1e-2 * M.max()

    def test_word_order_irrelevant(self, rng):
        store, space = self.make(rng)
        d1 = sentence_cmd([0, 1, 2], [3, 4], store, space, lam=0.1, iters=100)
        d2 = sentence_cmd([2, 0, 1], [4, 3], store, space, lam=0.1, iters=100)
        assert abs(d1 - d2) <= 1e-9

    def test_single_word_sentences_reduce_to_cmd(self, rng):
        store, space = self.make(rng)
        d_sent = sentence_cmd([1], [4], store, space, lam=0.1, iters=100)
        d_word = cmd(1, 4, store, space, lam=0.1, iters=100)
        assert d_sent == pytest.approx(d_word, abs=1e-12)

    def test_accepts_prebuilt_estimates(self, rng):
        store, space = self.make(rng)
        e1 = comb([0, 1], store, space, lam=0.1, iters=100)
        e2 = comb([2, 3], store, space, lam=0.1, iters=100)
        d_pre = sentence_cmd(e1, e2, store, space, lam=0.1, iters=100)
        d_ids = sentence_cmd([0, 1], [2, 3], store, space, lam=0.1, iters=100)
        assert d_pre == pytest.approx(d_ids, abs=1e-12)


class TestNearestNeighbors:
    def make(self, rng, V=20):
        table = rng.random((V, 6)) + 0.05
        store = store_from_table(table)
        space = toy_space(rng.standard_normal((6 + V, 2)), n_clusters=6)
        return store, space

    def test_query_word_ranks_itself_first(self, rng):
        store, space = self.make(rng)
        out = nearest_neighbors(3, range(20), k=5, store=store, space=space,
                                lam=0.01, iters=500)
        assert out[0][0] == 3

    def test_full_ranking_is_permutation(self, rng):
        store, space = self.make(rng, V=8)
        out = nearest_neighbors(0, range(8), k=8, store=store, space=space,
                                lam=0.1, iters=60)
        assert sorted(w for w, _ in out) == list(range(8))

    def test_matches_bruteforce_loop(self, rng):
        store, space = self.make(rng)
        out = nearest_neighbors(5, range(20), k=20, store=store, space=space,
                                lam=0.1, iters=80)
        brute = sorted(
            ((w, cmd(5, w, store, space, lam=0.1, iters=80)) for w in range(20)),
            key=lambda t: (t[1], t[0]),
        )
        assert [w for w, _ in out] == [w for w, _ in brute]

    def test_sentence_query(self, rng):
        store, space = self.make(rng, V=6)
        est = comb([0, 1], store, space, lam=0.1, iters=60)
        out = nearest_neighbors(est, range(6), k=3, store=store, space=space,
                                lam=0.1, iters=60)
        assert len(out) == 3

    def test_parameter_validation(self, rng):
        store, space = self.make(rng, V=4)
        with pytest.raises(BadParameter):
            nearest_neighbors(0, [], k=1, store=store, space=space)
        with pytest.raises(BadParameter):
            nearest_neighbors(0, [1, 2], k=3, store=store, space=space)
