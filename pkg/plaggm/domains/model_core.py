"""PLA-GGM 参数化、节点条件表示、伪似然与精确采样器.

The density is read literally: exp{η·z + Σ_{j<j'} Ω_jj' z_j z_j' − ½‖z‖²}, so the
conditional precision is K = I − B with unit diagonal. The diagonal entries of a
SymmetricParam are node intercepts η, never precision diagonal modifications.
"""
from typing import Sequence

import numpy as np
from loguru import logger
from scipy import linalg

from plaggm.core.exceptions import DimensionMismatchError, NotPositiveDefinite
from plaggm.core.models import ConfoundedDataset, NodeDesign, SymmetricParam


def node_design(dataset: ConfoundedDataset, j: int) -> NodeDesign:
    """构造第 j 个节点的回归设计 (0-based)"""
    if not 0 <= j < dataset.p:
        raise IndexError(f"node index {j} out of range for p={dataset.p}")
    X = np.array(dataset.Z, copy=True)
    X[:, j] = 1.0
    return NodeDesign(j=j, X=X, y=dataset.Z[:, j])


def precision_from_param(theta: SymmetricParam) -> np.ndarray:
    """K = I − B"""
    return np.eye(theta.p) - theta.interaction_matrix()


def _cholesky(K: np.ndarray):
    try:
        return linalg.cho_factor(K, lower=True, check_finite=True)
    except linalg.LinAlgError as e:
        logger.error(f"Precision matrix failed Cholesky factorization: {e}")
        raise NotPositiveDefinite(f"precision matrix is not positive definite: {e}")


def sample_ggm(theta: SymmetricParam, n: int, rng: np.random.Generator) -> np.ndarray:
    """从 N(K⁻¹η, K⁻¹) 抽取 n 个样本"""
    K = precision_from_param(theta)
    c, lower = _cholesky(K)
    mean = linalg.cho_solve((c, lower), theta.diag)
    eps = rng.standard_normal((n, theta.p))
    # K = L Lᵀ, so L⁻ᵀ ε has covariance K⁻¹
    draws = linalg.solve_triangular(c, eps.T, lower=True, trans="T")
    return mean + draws.T


def node_conditional_means(dataset: ConfoundedDataset, theta: SymmetricParam) -> np.ndarray:
    """η_ij = z_{i,-j}ᵀ Ω_{·j}, shape (n, p)"""
    if theta.p != dataset.p:
        raise DimensionMismatchError(f"parameter has p={theta.p}, dataset has p={dataset.p}")
    B = theta.interaction_matrix()
    return dataset.Z @ B + theta.diag


def log_pseudo_likelihood(
    dataset: ConfoundedDataset, omega_per_sample: Sequence[SymmetricParam]
) -> float:
    """按样本参数 Ω(g_i) 计算对数伪似然"""
    if len(omega_per_sample) != dataset.n:
        raise DimensionMismatchError(
            f"got {len(omega_per_sample)} parameters for {dataset.n} samples"
        )
    if any(theta.p != dataset.p for theta in omega_per_sample):
        raise DimensionMismatchError(f"parameter dimension differs from p={dataset.p}")

    B = np.stack([theta.interaction_matrix() for theta in omega_per_sample])
    intercepts = np.stack([theta.diag for theta in omega_per_sample])
    Z = dataset.Z
    eta = np.einsum("ik,ikj->ij", Z, B) + intercepts
    return float(np.sum(Z * eta - 0.5 * Z**2 - 0.5 * eta**2))
