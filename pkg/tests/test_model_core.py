import numpy as np
import pytest

from plaggm.core.exceptions import DimensionMismatchError, NotPositiveDefinite
from plaggm.core.models import ConfoundedDataset, SymmetricParam
from plaggm.domains.model_core import (
    log_pseudo_likelihood,
    node_conditional_means,
    node_design,
    precision_from_param,
    sample_ggm,
)
from tests.conftest import random_param


def _param(p, offdiag, diag=None):
    diag = np.zeros(p) if diag is None else diag
    return SymmetricParam(p=p, diag=diag, offdiag=offdiag)


class TestSymmetricParam:
    def test_matrix_round_trip(self, rng):
        theta = random_param(rng, 5)
        m = theta.matrix()
        assert np.array_equal(m, m.T)
        assert SymmetricParam.from_matrix(m).vector.tolist() == theta.vector.tolist()

    def test_wrong_length_rejected(self):
        with pytest.raises(ValueError):
            SymmetricParam(p=3, diag=np.zeros(3), offdiag=np.zeros(2))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            SymmetricParam(p=2, diag=[0.0, np.nan], offdiag=[0.0])

    def test_arrays_read_only(self, rng):
        theta = random_param(rng, 3)
        with pytest.raises(ValueError):
            theta.offdiag[0] = 1.0

    def test_edges_are_zero_based(self):
        theta = _param(3, [0.5, 0.0, -0.2])
        assert theta.edges() == [(0, 1, 0.5), (1, 2, -0.2)]


class TestConfoundedDataset:
    def test_row_mismatch(self):
        with pytest.raises(ValueError):
            ConfoundedDataset(g=[0.0, 1.0], Z=np.zeros((3, 2)))

    def test_needs_two_variables(self):
        with pytest.raises(ValueError):
            ConfoundedDataset(g=[0.0], Z=np.zeros((1, 1)))


class TestNodeDesign:
    def test_first_component_replaced(self):
        ds = ConfoundedDataset(g=[0.0], Z=[[2.0, 3.0]])
        assert node_design(ds, 0).X[0].tolist() == [1.0, 3.0]

    def test_second_component_replaced(self):
        ds = ConfoundedDataset(g=[0.0], Z=[[2.0, 3.0]])
        assert node_design(ds, 1).X[0].tolist() == [2.0, 1.0]

    def test_zero_data(self):
        ds = ConfoundedDataset(g=np.zeros(4), Z=np.zeros((4, 3)))
        X = node_design(ds, 1).X
        assert np.all(X[:, 1] == 1.0)
        assert np.all(X[:, [0, 2]] == 0.0)

    def test_target_is_column(self, small_dataset):
        design = node_design(small_dataset, 2)
        assert np.array_equal(design.y, small_dataset.Z[:, 2])

    def test_index_out_of_range(self, small_dataset):
        with pytest.raises(IndexError):
            node_design(small_dataset, 3)


class TestPrecision:
    def test_zero_interactions_identity(self):
        assert np.array_equal(precision_from_param(SymmetricParam.zeros(4)), np.eye(4))

    def test_two_nodes(self):
        K = precision_from_param(_param(2, [0.3]))
        np.testing.assert_allclose(K, [[1.0, -0.3], [-0.3, 1.0]])

    def test_three_nodes_single_edge(self):
        K = precision_from_param(_param(3, [0.5, 0.0, 0.0]))
        assert K[0, 1] == K[1, 0] == -0.5
        assert np.all(np.diag(K) == 1.0)
        assert K[0, 2] == K[1, 2] == 0.0

    def test_intercepts_do_not_enter(self):
        K = precision_from_param(_param(2, [0.3], diag=np.array([5.0, -2.0])))
        np.testing.assert_allclose(np.diag(K), [1.0, 1.0])


class TestSampler:
    def test_standard_normal_when_zero(self, rng):
        draws = sample_ggm(SymmetricParam.zeros(3), 200000, rng)
        np.testing.assert_allclose(draws.mean(axis=0), 0.0, atol=0.02)
        np.testing.assert_allclose(np.cov(draws.T), np.eye(3), atol=0.02)

    def test_covariance_two_nodes(self, rng):
        theta = _param(2, [0.3])
        draws = sample_ggm(theta, 200000, rng)
        expected = np.linalg.inv(precision_from_param(theta))
        np.testing.assert_allclose(np.cov(draws.T), expected, atol=0.02)

    def test_covariance_three_nodes(self, rng):
        theta = _param(3, [0.3, -0.2, 0.25])
        draws = sample_ggm(theta, 200000, rng)
        expected = np.linalg.inv(precision_from_param(theta))
        np.testing.assert_allclose(np.cov(draws.T), expected, atol=0.02)

    def test_mean_from_intercepts(self, rng):
        theta = _param(2, [0.0], diag=np.array([1.0, 0.0]))
        draws = sample_ggm(theta, 200000, rng)
        np.testing.assert_allclose(draws.mean(axis=0), [1.0, 0.0], atol=0.02)

    def test_seeded_reproducibility(self):
        theta = _param(3, [0.1, 0.2, -0.1])
        a = sample_ggm(theta, 50, np.random.default_rng(3))
        b = sample_ggm(theta, 50, np.random.default_rng(3))
        assert np.array_equal(a, b)

    def test_not_positive_definite(self, rng):
        with pytest.raises(NotPositiveDefinite):
            sample_ggm(_param(2, [1.5]), 10, rng)


def _naive_lpl(dataset, thetas):
    total = 0.0
    for i in range(dataset.n):
        omega = thetas[i].matrix()
        z = dataset.Z[i]
        for j in range(dataset.p):
            eta = omega[j, j]
            for k in range(dataset.p):
                if k != j:
                    eta += omega[j, k] * z[k]
            total += z[j] * eta - 0.5 * z[j] ** 2 - 0.5 * eta**2
    return total


class TestLogPseudoLikelihood:
    def test_all_zero(self):
        ds = ConfoundedDataset(g=np.zeros(5), Z=np.zeros((5, 3)))
        assert log_pseudo_likelihood(ds, [SymmetricParam.zeros(3)] * 5) == 0.0

    def test_single_sample_by_hand(self):
        ds = ConfoundedDataset(g=[0.0], Z=[[1.0, 1.0]])
        assert log_pseudo_likelihood(ds, [SymmetricParam.zeros(2)]) == pytest.approx(-1.0)

    def test_matches_naive_loop(self, rng):
        ds = ConfoundedDataset(g=rng.standard_normal(12), Z=rng.standard_normal((12, 4)))
        thetas = [random_param(rng, 4) for _ in range(ds.n)]
        assert log_pseudo_likelihood(ds, thetas) == pytest.approx(_naive_lpl(ds, thetas), abs=1e-12)

    def test_wrong_number_of_parameters(self, small_dataset):
        with pytest.raises(DimensionMismatchError):
            log_pseudo_likelihood(small_dataset, [SymmetricParam.zeros(3)])

    def test_conditional_means_match_loop(self, small_dataset, rng):
        theta = random_param(rng, 3)
        eta = node_conditional_means(small_dataset, theta)
        omega = theta.matrix()
        i, j = 7, 1
        z = small_dataset.Z[i]
        expected = omega[j, j] + sum(omega[j, k] * z[k] for k in range(3) if k != j)
        assert eta[i, j] == pytest.approx(expected)
