import numpy as np
import pytest

from plaggm.core.models import (
    ConfoundedDataset,
    FitPath,
    IndicatorSpec,
    KernelFamily,
    KernelSpec,
    PathPoint,
    SolverConfig,
    SymmetricParam,
)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def small_dataset(rng):
    """n=60, p=3, g 在 [-3, 3] 上等距"""
    n, p = 60, 3
    g = np.linspace(-3.0, 3.0, n)
    return ConfoundedDataset(g=g, Z=rng.standard_normal((n, p)))


@pytest.fixture
def gaussian_kernel():
    return KernelSpec(family=KernelFamily.GAUSSIAN, bandwidth=1.0)


@pytest.fixture
def soft_indicator():
    return IndicatorSpec(k=0.5)


@pytest.fixture
def tight_config():
    return SolverConfig(tol=1e-12, max_sweeps=100000, n_lambda=20, folds=3)


def correlated_dataset(rng, n: int, p: int, rho: float = 0.4) -> ConfoundedDataset:
    """AR(1) 相关的高斯数据, g 为标准正态"""
    cov = rho ** np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
    Z = rng.multivariate_normal(np.zeros(p), cov, size=n)
    return ConfoundedDataset(g=rng.standard_normal(n), Z=Z)


def random_param(rng, p: int, scale: float = 0.2) -> SymmetricParam:
    return SymmetricParam(
        p=p,
        diag=rng.normal(0.0, 0.5, p),
        offdiag=rng.normal(0.0, scale, p * (p - 1) // 2),
    )


def path_from_supports(p: int, supports) -> FitPath:
    """按给定支撑 (布尔向量) 序列构造 lambda 递减的路径"""
    points = []
    for k, support in enumerate(supports):
        theta = SymmetricParam(p=p, diag=np.zeros(p), offdiag=np.asarray(support, dtype=float))
        points.append(
            PathPoint(
                lam=float(len(supports) - k),
                theta=theta,
                objective=0.0,
                active_size=int(np.count_nonzero(support)),
                sweeps=1,
                kkt_violation=0.0,
                repairs=0,
            )
        )
    return FitPath(points=points)
