"""局部线性核平滑器与 profile 变换.

For sample i and node j the smoother row is

    S_ijᵀ = [x_ijᵀ, 0ᵀ] (D_ijᵀ W_i D_ij)⁻¹ D_ijᵀ W_i

where row i' of D_ij is [ι(g_i') x_i'jᵀ, ((g_i' − g_i)/h) ι(g_i') x_i'jᵀ] and
W_i = diag ψ(|g_i − g_i'|/h). Subtracting the smoothed part from every node
regression leaves a quadratic in Ω_0 only.
"""
import concurrent.futures
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger
from scipy import sparse, stats

from plaggm.config import settings
from plaggm.core.exceptions import DataError, SingularSmoother
from plaggm.core.models import (
    ConfoundedDataset,
    IndicatorFamily,
    IndicatorSpec,
    KernelFamily,
    KernelSpec,
    ProfileDesign,
)
from plaggm.domains.model_core import node_design


def kernel_density(u, family: KernelFamily) -> np.ndarray:
    """ψ(u)"""
    u = np.asarray(u, dtype=float)
    if family == KernelFamily.EPANECHNIKOV:
        return 0.75 * np.clip(1.0 - u**2, 0.0, None)
    if family == KernelFamily.GAUSSIAN:
        return stats.norm.pdf(u)
    raise ValueError(f"unknown kernel family {family}")


def indicator(g, spec: IndicatorSpec):
    """ι(g) ∈ (0, 1], 偶函数, 随 |g| 单调不减"""
    g = np.asarray(g, dtype=float)
    if spec.family == IndicatorFamily.HARD:
        value = np.where(np.abs(g) >= spec.threshold, 1.0, spec.floor)
    else:
        value = 1.0 - np.exp(-(spec.k**2) * g**2) / 2.0
    return value if value.ndim else float(value)


def indicator_for_threshold(g_star: float) -> IndicatorSpec:
    """soft 指示函数, k = indicator_sharpness / g*"""
    return IndicatorSpec(k=settings.indicator_k(g_star), threshold=g_star)


def kernel_weights(g_center: float, g: np.ndarray, spec: KernelSpec) -> np.ndarray:
    return kernel_density(np.abs(g_center - np.asarray(g, dtype=float)) / spec.bandwidth, spec.family)


def build_weight_matrix(i: int, g: np.ndarray, spec: KernelSpec) -> sparse.dia_array:
    """W_i = diag ψ(|g_i − g_i'|/h)"""
    g = np.asarray(g, dtype=float)
    w = kernel_weights(g[i], g, spec)
    return sparse.dia_array((w[None, :], [0]), shape=(g.shape[0], g.shape[0]))


def build_Dij(
    i: int,
    j: int,
    dataset: ConfoundedDataset,
    ind: IndicatorSpec,
    spec: KernelSpec,
) -> np.ndarray:
    """辅助矩阵 D_ij, n×2p"""
    X = node_design(dataset, j).X
    iota = indicator(dataset.g, ind)
    t = (dataset.g - dataset.g[i]) / spec.bandwidth
    level = iota[:, None] * X
    return np.hstack([level, t[:, None] * level])


def _rcond(gram: np.ndarray) -> np.ndarray:
    cond = np.linalg.cond(gram)
    return np.where(np.isfinite(cond), 1.0 / cond, 0.0)


def smoother_row(
    i: int,
    j: int,
    dataset: ConfoundedDataset,
    ind: IndicatorSpec,
    spec: KernelSpec,
    ridge: float = 0.0,
) -> np.ndarray:
    """单个平滑行 S_ij (直接按定义计算)"""
    D = build_Dij(i, j, dataset, ind, spec)
    w = kernel_weights(dataset.g[i], dataset.g, spec)
    gram = D.T @ (w[:, None] * D)
    if ridge > 0:
        gram = gram + ridge * np.eye(gram.shape[0])
    rcond = float(_rcond(gram))
    if rcond < settings.rcond_threshold:
        raise SingularSmoother(i, j, rcond)
    x_ij = node_design(dataset, j).X[i]
    a = np.concatenate([x_ij, np.zeros_like(x_ij)])
    v = np.linalg.solve(gram, a)
    return w * (D @ v)


def _node_columns(p: int) -> np.ndarray:
    """每个节点在增广基 [z_1..z_p, 1] 中的列下标: 第 j 列替换为截距列 p"""
    cols = np.tile(np.arange(p), (p, 1))
    cols[np.arange(p), np.arange(p)] = p
    # slope block sits p + 1 columns further right
    return np.hstack([cols, cols + p + 1])


def _target_rows(
    start: int,
    stop: int,
    reference: ConfoundedDataset,
    targets: ConfoundedDataset,
    iota: np.ndarray,
    spec: KernelSpec,
    ridge: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """计算目标样本 start..stop 的 profile 行"""
    n_ref, p = reference.Z.shape
    basis = np.hstack([reference.Z, np.ones((n_ref, 1))]) * iota[:, None]
    node_cols = _node_columns(p)
    eye = np.eye(2 * p)

    xp = np.empty((p, stop - start, p))
    yp = np.empty((p, stop - start))
    for row, i in enumerate(range(start, stop)):
        g_i = targets.g[i]
        w = kernel_weights(g_i, reference.g, spec)
        t = (reference.g - g_i) / spec.bandwidth
        U = np.hstack([basis, t[:, None] * basis])
        # 每个样本只构建一次增广 Gram, 再按节点抽取主子矩阵
        gram = U.T @ (w[:, None] * U)
        grams = gram[node_cols[:, :, None], node_cols[:, None, :]]
        if ridge > 0:
            grams = grams + ridge * eye

        rconds = _rcond(grams)
        bad = np.flatnonzero(rconds < settings.rcond_threshold)
        if bad.size:
            raise SingularSmoother(i, int(bad[0]), float(rconds[bad[0]]))

        x_i = np.broadcast_to(targets.Z[i], (p, p)).copy()
        x_i[np.arange(p), np.arange(p)] = 1.0
        a = np.hstack([x_i, np.zeros((p, p))])
        v = np.linalg.solve(grams, a[:, :, None])[:, :, 0]

        S = np.stack([w * (U[:, node_cols[j]] @ v[j]) for j in range(p)])
        SZ = S @ reference.Z
        S1 = S.sum(axis=1)
        smoothed_x = SZ.copy()
        smoothed_x[np.arange(p), np.arange(p)] = S1

        xp[:, row, :] = x_i - smoothed_x
        yp[:, row] = targets.Z[i] - np.diag(SZ)
    return xp, yp


def _chunks(n: int, workers: int) -> List[Tuple[int, int]]:
    size = max(1, -(-n // workers))
    return [(s, min(n, s + size)) for s in range(0, n, size)]


def profile_rows(
    reference: ConfoundedDataset,
    targets: ConfoundedDataset,
    ind: IndicatorSpec,
    spec: KernelSpec,
    ridge: Optional[float] = None,
    workers: Optional[int] = None,
) -> ProfileDesign:
    """用 reference 样本构建平滑器, 在 targets 的样本点上做 profile 变换"""
    if reference.p != targets.p:
        raise DataError(f"reference has p={reference.p}, targets have p={targets.p}")
    ridge = settings.smoother_ridge if ridge is None else ridge
    if ridge > 0:
        logger.warning(f"Smoother Gram regularized with ridge {ridge:.1e}")

    iota = indicator(reference.g, ind)
    workers = workers or settings.default_workers(targets.n)
    chunks = _chunks(targets.n, workers)

    def _run(bounds):
        return _target_rows(bounds[0], bounds[1], reference, targets, iota, spec, ridge)

    if len(chunks) == 1:
        parts = [_run(chunks[0])]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            # map 保持输入顺序, 结果与调度无关
            parts = list(pool.map(_run, chunks))

    xp = np.concatenate([part[0] for part in parts], axis=1)
    yp = np.concatenate([part[1] for part in parts], axis=1)
    return ProfileDesign(
        Xp=xp,
        Yp=yp,
        bandwidth=spec.bandwidth,
        kernel=spec.family,
        indicator_k=ind.k,
        ridge=ridge,
        smoothed=True,
    )


def profile_design(
    dataset: ConfoundedDataset,
    ind: IndicatorSpec,
    spec: KernelSpec,
    ridge: Optional[float] = None,
) -> ProfileDesign:
    """对全部 (i, j) 做 (1_i − S_ij)ᵀ 变换"""
    logger.info(
        f"Building profile design: n={dataset.n}, p={dataset.p}, "
        f"kernel={spec.family.value}, h={spec.bandwidth:.4g}, k={ind.k:.4g}"
    )
    return profile_rows(dataset, dataset, ind, spec, ridge=ridge)


def raw_design(dataset: ConfoundedDataset, weights: Optional[np.ndarray] = None) -> ProfileDesign:
    """关闭平滑 (S_ij = 0) 的节点设计, 可选样本权重 (按 √w 缩放行)"""
    p = dataset.p
    xp = np.stack([node_design(dataset, j).X for j in range(p)])
    yp = dataset.Z.T.copy()
    if weights is not None:
        root = np.sqrt(np.asarray(weights, dtype=float))
        xp = xp * root[None, :, None]
        yp = yp * root[None, :]
    return ProfileDesign(Xp=xp, Yp=yp, smoothed=False)


def default_bandwidth(n: int, g, constant: Optional[float] = None) -> float:
    """h = c_h · sd(g) · n^(-1/4)"""
    if n < 2:
        raise DataError(f"bandwidth needs n >= 2, got {n}")
    g = np.asarray(g, dtype=float)
    sd = float(np.std(g, ddof=1)) if g.size > 1 else 0.0
    if not sd > 0:
        raise DataError("confounder has zero variance; bandwidth is undefined")
    constant = settings.bandwidth_constant if constant is None else constant
    return constant * sd * n ** (-0.25)
