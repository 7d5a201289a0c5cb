"""L1 正则化 PPL 的坐标下降求解: 正则化路径, 强筛选规则 + KKT 修复, K 折交叉验证."""
import concurrent.futures
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from sklearn.model_selection import KFold

from plaggm.config import settings
from plaggm.core.exceptions import (
    ConfigError,
    CrossValidationFailed,
    DataError,
    NonConvergence,
    NumericalError,
)
from plaggm.core.models import (
    ConfoundedDataset,
    CrossValidationResult,
    CvRule,
    FitPath,
    IndicatorSpec,
    KernelSpec,
    PathPoint,
    ProfileDesign,
    SingleFit,
    SolverConfig,
    SymmetricParam,
)
from plaggm.domains.kernel_profile import profile_rows
from plaggm.domains.ppl_objective import QuadraticForm, assemble_quadratic, ppl_value

DesignBuilder = Callable[[ConfoundedDataset, ConfoundedDataset], ProfileDesign]


def soft_threshold(z: float, gamma: float) -> float:
    """sign(z)·max(|z| − γ, 0)"""
    if gamma < 0:
        raise ValueError(f"threshold must be non-negative, got {gamma}")
    if z > gamma:
        return z - gamma
    if z < -gamma:
        return z + gamma
    return 0.0


def lambda_max(pd: ProfileDesign) -> float:
    """使所有非对角项为 0 的最小 lambda"""
    return assemble_quadratic(pd).lambda_max()


def lambda_grid(lam_max: float, n_lambda: int, ratio: float) -> np.ndarray:
    """从 lam_max 到 ratio·lam_max 的对数等距网格"""
    if lam_max <= 0:
        logger.warning("lambda_max is zero; path reduces to a single unpenalized point")
        return np.array([0.0])
    if n_lambda == 1:
        return np.array([lam_max])
    return np.geomspace(lam_max, lam_max * ratio, n_lambda)


def kkt_violation(qf: QuadraticForm, theta_vec: np.ndarray, lam: float) -> float:
    grad = qf.gradient(theta_vec)
    p = qf.p
    worst = float(np.max(np.abs(grad[:p])))
    off = theta_vec[p:]
    g_off = grad[p:]
    active = off != 0
    if np.any(active):
        worst = max(worst, float(np.max(np.abs(g_off[active] + lam * np.sign(off[active])))))
    if np.any(~active):
        worst = max(worst, float(np.max(np.abs(g_off[~active]) - lam)))
    return max(worst, 0.0)


def _coordinate_descent(
    qf: QuadraticForm,
    lam: float,
    theta: np.ndarray,
    eligible: np.ndarray,
    tol: float,
    max_sweeps: int,
) -> Tuple[np.ndarray, int, bool]:
    """在 eligible 坐标上做循环坐标下降, 全量扫描后在活跃集上迭代"""
    theta = theta.copy()
    H = qf.H
    a = qf.curvature
    grad = qf.gradient(theta)
    penalty = np.where(qf.index.penalized, lam, 0.0)
    is_diag = ~qf.index.penalized
    coords = np.flatnonzero(eligible)

    def sweep(order) -> float:
        max_delta = 0.0
        for m in order:
            if a[m] <= 0:
                continue
            old = theta[m]
            new = soft_threshold(a[m] * old - grad[m], penalty[m]) / a[m]
            delta = new - old
            if delta != 0.0:
                theta[m] = new
                np.add(grad, H[:, m] * delta, out=grad)
                max_delta = max(max_delta, abs(delta))
        return max_delta

    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        if sweep(coords) < tol:
            return theta, sweeps, True
        while sweeps < max_sweeps:
            active = coords[(theta[coords] != 0) | is_diag[coords]]
            sweeps += 1
            if sweep(active) < tol:
                break
    return theta, sweeps, False


def fit_single(
    qf: QuadraticForm,
    lam: float,
    warm: Optional[SymmetricParam] = None,
    config: Optional[SolverConfig] = None,
    strict: bool = False,
) -> SingleFit:
    """单个 lambda 的 L1 正则化 MaPPLE"""
    if lam < 0:
        raise ConfigError(f"lambda must be non-negative, got {lam}")
    config = config or settings.default_solver_config()
    start = qf.intercept_only() if warm is None else warm.vector
    eligible = np.ones(qf.index.size, dtype=bool)
    theta, sweeps, converged = _coordinate_descent(
        qf, lam, start, eligible, config.tol, config.max_sweeps
    )
    result = SymmetricParam.from_vector(qf.p, theta)
    if not converged:
        logger.warning(f"Coordinate descent did not converge at lambda={lam:.4g} after {sweeps} sweeps")
        if strict:
            raise NonConvergence(
                f"no convergence at lambda={lam:.4g} after {sweeps} sweeps", best=result, sweeps=sweeps
            )
    return SingleFit(
        theta=result,
        lam=float(lam),
        objective=qf.penalized_value(theta, lam),
        converged=converged,
        sweeps=sweeps,
        kkt_violation=kkt_violation(qf, theta, lam),
    )


def fit_path(
    qf: QuadraticForm,
    lambdas: Sequence[float],
    config: Optional[SolverConfig] = None,
) -> FitPath:
    """热启动正则化路径; 开启筛选时对被跳过的坐标做 KKT 检查并重新纳入违规者"""
    config = config or settings.default_solver_config()
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.size and np.any(np.diff(lambdas) >= 0):
        raise ConfigError("lambda sequence must be strictly decreasing")

    p = qf.p
    is_diag = ~qf.index.penalized
    theta = qf.intercept_only()
    prev_lam = max(qf.lambda_max(), float(lambdas[0])) if lambdas.size else 0.0

    points: List[PathPoint] = []
    for lam in lambdas:
        if config.screening:
            grad = qf.gradient(theta)
            strong = np.abs(grad) >= 2.0 * lam - prev_lam
            eligible = is_diag | strong | (theta != 0)
        else:
            eligible = np.ones(qf.index.size, dtype=bool)

        repairs = 0
        sweeps = 0
        while True:
            theta, used, converged = _coordinate_descent(
                qf, lam, theta, eligible, config.tol, config.max_sweeps
            )
            sweeps += used
            if not config.screening:
                break
            grad = qf.gradient(theta)
            violators = ~eligible & (np.abs(grad) > lam)
            if not np.any(violators):
                break
            repairs += int(violators.sum())
            eligible = eligible | violators

        if not converged:
            logger.warning(f"Path point lambda={lam:.4g} did not converge after {sweeps} sweeps")
        point = PathPoint(
            lam=float(lam),
            theta=SymmetricParam.from_vector(p, theta),
            objective=qf.penalized_value(theta, lam),
            active_size=int(np.count_nonzero(theta[p:])),
            sweeps=sweeps,
            kkt_violation=kkt_violation(qf, theta, lam),
            repairs=repairs,
            converged=converged,
        )
        if converged and point.kkt_violation > settings.kkt_tol:
            logger.warning(f"Path point lambda={lam:.4g} has KKT violation {point.kkt_violation:.2e}")
        logger.debug(
            f"lambda={lam:.4g} active={point.active_size} sweeps={sweeps} "
            f"kkt={point.kkt_violation:.2e} repairs={repairs}"
        )
        points.append(point)
        prev_lam = lam
    return FitPath(points=points)


def pla_builder(ind: IndicatorSpec, kernel: KernelSpec, ridge: Optional[float] = None) -> DesignBuilder:
    """PLA-GGM 的设计构建器: 平滑器取自训练样本"""

    def build(reference: ConfoundedDataset, targets: ConfoundedDataset) -> ProfileDesign:
        return profile_rows(reference, targets, ind, kernel, ridge=ridge)

    return build


def _fold_losses(
    fold: int,
    train: ConfoundedDataset,
    test: ConfoundedDataset,
    builder: DesignBuilder,
    lambdas: np.ndarray,
    config: SolverConfig,
) -> Tuple[np.ndarray, Optional[str]]:
    losses = np.full(lambdas.size, np.nan)
    try:
        qf = assemble_quadratic(builder(train, train))
        held_out = builder(train, test)
        path = fit_path(qf, lambdas, config)
    except (NumericalError, DataError) as e:
        logger.warning(f"CV fold {fold} failed: {e}")
        return losses, str(e)
    for k, point in enumerate(path.points):
        if point.converged:
            losses[k] = ppl_value(point.theta, held_out)
    return losses, None


def cross_validate_design(
    dataset: ConfoundedDataset,
    builder: DesignBuilder,
    lambdas: Sequence[float],
    config: Optional[SolverConfig] = None,
) -> CrossValidationResult:
    """通用 K 折交叉验证: 训练集构建设计, 留出样本按 PPL 二次损失打分"""
    config = config or settings.default_solver_config()
    lambdas = np.asarray(lambdas, dtype=float)
    if dataset.n < config.folds:
        raise ConfigError(f"need at least {config.folds} samples for {config.folds}-fold CV, got {dataset.n}")

    splitter = KFold(n_splits=config.folds, shuffle=True, random_state=config.seed)
    splits = list(splitter.split(np.arange(dataset.n)))

    def _run(item):
        fold, (train_idx, test_idx) = item
        return _fold_losses(
            fold, dataset.subset(train_idx), dataset.subset(test_idx), builder, lambdas, config
        )

    workers = settings.default_workers(len(splits))
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(_run, enumerate(splits)))

    losses = np.vstack([r[0] for r in results])
    fold_errors: Dict[int, str] = {k: r[1] for k, r in enumerate(results) if r[1] is not None}
    failures = np.isnan(losses).sum(axis=0)
    keep = 2 * failures < config.folds
    if not np.any(keep):
        raise CrossValidationFailed(
            f"every lambda failed in at least half of the {config.folds} folds"
        )
    dropped = int((~keep).sum())
    if dropped:
        logger.warning(f"Dropped {dropped} lambda points failing in at least half the folds")

    kept = losses[:, keep]
    mean = np.nanmean(kept, axis=0)
    counts = np.sum(~np.isnan(kept), axis=0)
    sd = np.array([
        np.nanstd(kept[:, k], ddof=1) if counts[k] > 1 else 0.0 for k in range(kept.shape[1])
    ])
    kept_lambdas = lambdas[keep]

    best = int(np.argmin(mean))
    if config.cv_rule == CvRule.ONE_SE:
        bound = mean[best] + sd[best] / np.sqrt(counts[best])
        # largest lambda whose mean loss is within one standard error
        best = int(np.flatnonzero(mean <= bound)[0])

    logger.info(f"Cross-validation selected lambda={kept_lambdas[best]:.4g} ({config.cv_rule.value})")
    return CrossValidationResult(
        lambdas=kept_lambdas,
        mean=mean,
        sd=sd,
        best_lambda=float(kept_lambdas[best]),
        rule=config.cv_rule,
        fold_errors=fold_errors,
        dropped=dropped,
    )


def cross_validate(
    dataset: ConfoundedDataset,
    ind: IndicatorSpec,
    kernel: KernelSpec,
    config: Optional[SolverConfig] = None,
    ridge: Optional[float] = None,
) -> CrossValidationResult:
    """PLA-GGM 的交叉验证, lambda 网格由全数据自动生成"""
    config = config or settings.default_solver_config()
    builder = pla_builder(ind, kernel, ridge=ridge)
    qf = assemble_quadratic(builder(dataset, dataset))
    lambdas = lambda_grid(qf.lambda_max(), config.n_lambda, config.lambda_min_ratio)
    return cross_validate_design(dataset, builder, lambdas, config)


def select_by_aic(path: FitPath, qf: QuadraticForm) -> float:
    """AIC = 2n·F(θ) + 2·df, df = p + 非零非对角项数"""
    if not path.points:
        raise ValueError("empty path")
    scores = [
        2.0 * qf.n * qf.value(pt.theta.vector) + 2.0 * (qf.p + pt.active_size)
        for pt in path.points
    ]
    return path.points[int(np.argmin(scores))].lam
