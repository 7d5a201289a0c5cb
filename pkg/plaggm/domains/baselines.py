"""对比方法: 非混杂样本上的 GGM, LR-GGM, CON-GGM, 核加权 TV-GGM.

Every method reuses the coordinate-descent core: smoothing is disabled
(S_ij = 0) and, for TV-GGM, kernel weights scale the node regressions.
"""
from typing import Dict, Optional, Sequence

import numpy as np
from loguru import logger
from scipy import linalg

from plaggm.config import settings
from plaggm.core.exceptions import (
    DataError,
    EffectiveSampleTooSmall,
    InsufficientCleanSamples,
    NotPositiveDefinite,
)
from plaggm.core.models import (
    BaselineResult,
    ConfoundedDataset,
    FitPath,
    IndicatorSpec,
    KernelSpec,
    Method,
    PathPoint,
    Selection,
    SolverConfig,
    SymmetricParam,
)
from plaggm.domains.cd_solver import (
    DesignBuilder,
    cross_validate_design,
    fit_path,
    lambda_grid,
    pla_builder,
    select_by_aic,
)
from plaggm.domains.kernel_profile import kernel_weights, raw_design
from plaggm.domains.ppl_objective import assemble_quadratic


def _raw_builder(reference: ConfoundedDataset, targets: ConfoundedDataset):
    return raw_design(targets)


def _path_for(builder: DesignBuilder, dataset: ConfoundedDataset, config: SolverConfig) -> FitPath:
    qf = assemble_quadratic(builder(dataset, dataset))
    lambdas = lambda_grid(qf.lambda_max(), config.n_lambda, config.lambda_min_ratio)
    return fit_path(qf, lambdas, config)


def clean_subsample(dataset: ConfoundedDataset, g_threshold: float) -> ConfoundedDataset:
    keep = np.flatnonzero(np.abs(dataset.g) <= g_threshold)
    needed = max(settings.plain_min_samples, settings.plain_samples_per_node * dataset.p)
    if keep.size < needed:
        raise InsufficientCleanSamples(
            f"only {keep.size} samples with |g| <= {g_threshold}, need {needed}"
        )
    return dataset.subset(keep)


def fit_plain_ggm(
    dataset: ConfoundedDataset, g_threshold: float, config: Optional[SolverConfig] = None
) -> BaselineResult:
    """只用 |g| <= g_threshold 的样本做伪似然 lasso"""
    config = config or settings.default_solver_config()
    clean = clean_subsample(dataset, g_threshold)
    logger.info(f"Plain GGM retains {clean.n} of {dataset.n} samples (|g| <= {g_threshold})")
    path = _path_for(_raw_builder, clean, config)
    return BaselineResult(
        method=Method.PLAIN, path=path, notes={"samples_retained": str(clean.n)}
    )


def _confounder_design(g: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones(g.shape[0]), g])


def confounder_coefficients(dataset: ConfoundedDataset) -> np.ndarray:
    """每列 Z 在 (1, g) 上的最小二乘系数, 形状 (2, p)"""
    coef, *_ = np.linalg.lstsq(_confounder_design(dataset.g), dataset.Z, rcond=None)
    return coef


def residualize(dataset: ConfoundedDataset, coef: np.ndarray) -> ConfoundedDataset:
    return ConfoundedDataset(g=dataset.g, Z=dataset.Z - _confounder_design(dataset.g) @ coef)


def regress_out_confounder(dataset: ConfoundedDataset) -> ConfoundedDataset:
    """对每列 Z 在 (1, g) 上做最小二乘, 返回残差"""
    return residualize(dataset, confounder_coefficients(dataset))


def _lr_builder(reference: ConfoundedDataset, targets: ConfoundedDataset):
    """回归系数只由 reference 样本估计"""
    return raw_design(residualize(targets, confounder_coefficients(reference)))


def fit_lr_ggm(dataset: ConfoundedDataset, config: Optional[SolverConfig] = None) -> BaselineResult:
    config = config or settings.default_solver_config()
    if dataset.n < 3:
        raise DataError(f"LR-GGM needs n >= 3, got {dataset.n}")
    residuals = regress_out_confounder(dataset)
    path = _path_for(_raw_builder, residuals, config)
    return BaselineResult(method=Method.LR, path=path, notes={"regression": "ols on (1, g)"})


def conditional_precision(sigma) -> np.ndarray:
    """[Σ_ZZ − Σ_ZG Σ_GG⁻¹ Σ_GZ]⁻¹, G 为第一个变量"""
    sigma = np.asarray(sigma, dtype=float)
    try:
        linalg.cholesky(sigma, lower=True)
    except linalg.LinAlgError as e:
        raise NotPositiveDefinite(f"covariance is not positive definite: {e}")
    s_gg = sigma[:1, :1]
    s_zg = sigma[1:, :1]
    schur = sigma[1:, 1:] - s_zg @ linalg.solve(s_gg, s_zg.T, assume_a="pos")
    return linalg.inv(schur)


def augment_with_confounder(
    dataset: ConfoundedDataset, reference: Optional[ConfoundedDataset] = None
) -> ConfoundedDataset:
    """(G, Z) 联合数据, G 按 reference 的均值与标准差标准化后放在第一列"""
    reference = dataset if reference is None else reference
    center = float(reference.g.mean())
    sd = float(np.std(reference.g))
    g_std = (dataset.g - center) / sd if sd > 0 else dataset.g - center
    return ConfoundedDataset(g=dataset.g, Z=np.column_stack([g_std, dataset.Z]))


def _con_builder(reference: ConfoundedDataset, targets: ConfoundedDataset):
    return raw_design(augment_with_confounder(targets, reference))


def zz_block(theta: SymmetricParam) -> SymmetricParam:
    """去掉第一个 (G) 节点后的参数"""
    return SymmetricParam.from_matrix(theta.matrix()[1:, 1:])


def fit_con_ggm(dataset: ConfoundedDataset, config: Optional[SolverConfig] = None) -> BaselineResult:
    """联合 (G, Z) 的伪似然稀疏精度, 取 ZZ 块作为条件结构"""
    config = config or settings.default_solver_config()
    joint = augment_with_confounder(dataset)
    joint_path = _path_for(_raw_builder, joint, config)
    points = []
    for pt in joint_path.points:
        theta = zz_block(pt.theta)
        points.append(
            pt.model_copy(update={"theta": theta, "active_size": int(np.count_nonzero(theta.offdiag))})
        )
    return BaselineResult(
        method=Method.CON,
        path=FitPath(points=points),
        notes={
            "solver": "pseudo-likelihood lasso on (G, Z) instead of covariance graphical lasso",
            "confounder": "standardized to mean 0, sd 1",
        },
    )


def tv_weights(dataset: ConfoundedDataset, eval_point: float, kernel: KernelSpec) -> np.ndarray:
    """核权重, 归一化到均值 1"""
    w = kernel_weights(eval_point, dataset.g, kernel)
    total = float(w.sum())
    if total < 3 * dataset.p:
        raise EffectiveSampleTooSmall(
            f"kernel weight mass {total:.3g} at g={eval_point} is below {3 * dataset.p}"
        )
    return w / w.mean()


def _tv_builder(eval_point: float, kernel: KernelSpec) -> DesignBuilder:
    """目标样本的权重按 reference 样本的平均权重归一化"""

    def build(reference: ConfoundedDataset, targets: ConfoundedDataset):
        tv_weights(reference, eval_point, kernel)
        raw_mean = float(kernel_weights(eval_point, reference.g, kernel).mean())
        weights = kernel_weights(eval_point, targets.g, kernel) / raw_mean
        return raw_design(targets, weights=weights)

    return build


def fit_tv_ggm(
    dataset: ConfoundedDataset,
    eval_point: float = 0.0,
    kernel: Optional[KernelSpec] = None,
    config: Optional[SolverConfig] = None,
    eval_points: Optional[Sequence[float]] = None,
) -> BaselineResult:
    """核加权伪似然 lasso; 给定 eval_points 时对各点估计取平均"""
    config = config or settings.default_solver_config()
    if kernel is None:
        raise DataError("TV-GGM needs a kernel specification")
    points_to_fit = [eval_point] if eval_points is None else list(eval_points)

    forms = [
        assemble_quadratic(_tv_builder(point, kernel)(dataset, dataset)) for point in points_to_fit
    ]
    lam_max = max(qf.lambda_max() for qf in forms)
    lambdas = lambda_grid(lam_max, config.n_lambda, config.lambda_min_ratio)
    paths = [fit_path(qf, lambdas, config) for qf in forms]

    if len(paths) == 1:
        path = paths[0]
    else:
        path = _average_paths(paths)
    notes: Dict[str, str] = {"bandwidth": f"{kernel.bandwidth:.6g}", "weights": "normalized to mean 1"}
    notes["eval_points"] = ",".join(f"{x:g}" for x in points_to_fit)
    return BaselineResult(method=Method.TV, path=path, notes=notes)


def _average_paths(paths) -> FitPath:
    """同一 lambda 网格上逐点平均估计"""
    averaged = []
    for pts in zip(*(path.points for path in paths)):
        vector = np.mean([pt.theta.vector for pt in pts], axis=0)
        theta = SymmetricParam.from_vector(pts[0].theta.p, vector)
        averaged.append(
            PathPoint(
                lam=pts[0].lam,
                theta=theta,
                objective=float(np.mean([pt.objective for pt in pts])),
                active_size=int(np.count_nonzero(theta.offdiag)),
                sweeps=max(pt.sweeps for pt in pts),
                kkt_violation=max(pt.kkt_violation for pt in pts),
                repairs=sum(pt.repairs for pt in pts),
                converged=all(pt.converged for pt in pts),
            )
        )
    return FitPath(points=averaged)


class BaselineService:
    """按方法拟合路径并选择 lambda (交叉验证或 AIC)"""

    def __init__(
        self,
        config: SolverConfig,
        kernel: KernelSpec,
        indicator: IndicatorSpec,
        g_threshold: Optional[float] = None,
        ridge: Optional[float] = None,
        selection: Selection = Selection.CV,
        tv_eval_points: Optional[Sequence[float]] = None,
    ):
        self.config = config
        self.kernel = kernel
        self.indicator = indicator
        self.g_threshold = settings.baseline_clean_threshold if g_threshold is None else g_threshold
        self.ridge = ridge
        self.selection = selection
        self.tv_eval_points = tv_eval_points

    def _builder(self, method: Method) -> DesignBuilder:
        if method == Method.PLA:
            return pla_builder(self.indicator, self.kernel, ridge=self.ridge)
        if method == Method.TV:
            return _tv_builder(0.0, self.kernel)
        if method == Method.LR:
            return _lr_builder
        if method == Method.CON:
            return _con_builder
        return _raw_builder

    def _working_data(self, method: Method, dataset: ConfoundedDataset) -> ConfoundedDataset:
        """交叉验证所用的数据; 残差与增广在构建器内按训练折计算"""
        if method == Method.PLAIN:
            return clean_subsample(dataset, self.g_threshold)
        return dataset

    def fit_path_only(self, method: Method, dataset: ConfoundedDataset) -> BaselineResult:
        """只拟合路径"""
        if method == Method.PLA:
            path = _path_for(self._builder(method), dataset, self.config)
            notes = {"bandwidth": f"{self.kernel.bandwidth:.6g}", "indicator_k": f"{self.indicator.k:.6g}"}
            return BaselineResult(method=Method.PLA, path=path, notes=notes)
        if method == Method.PLAIN:
            return fit_plain_ggm(dataset, self.g_threshold, self.config)
        if method == Method.LR:
            return fit_lr_ggm(dataset, self.config)
        if method == Method.CON:
            return fit_con_ggm(dataset, self.config)
        if method == Method.TV:
            return fit_tv_ggm(dataset, 0.0, self.kernel, self.config, eval_points=self.tv_eval_points)
        raise ValueError(f"unknown method {method}")

    def fit(self, method: Method, dataset: ConfoundedDataset) -> BaselineResult:
        """拟合路径并选择 lambda"""
        logger.info(f"Fitting {method.value} on n={dataset.n}, p={dataset.p}")
        result = self.fit_path_only(method, dataset)
        lambdas = result.path.lambdas
        if lambdas.size == 0:
            return result

        data = self._working_data(method, dataset)
        builder = self._builder(method)
        if self.selection == Selection.AIC:
            # 在工作数据的参数空间上重新计算路径 (CON-GGM 为联合 (G, Z) 空间)
            qf = assemble_quadratic(builder(data, data))
            selected = select_by_aic(fit_path(qf, lambdas, self.config), qf)
            logger.info(f"{method.value}: AIC selected lambda={selected:.4g}")
            return result.model_copy(update={"selected_lambda": selected})

        cv = cross_validate_design(data, builder, lambdas, self.config)
        return result.model_copy(update={"selected_lambda": cv.best_lambda, "cv": cv})


def fit_baseline(
    method: Method,
    dataset: ConfoundedDataset,
    config: SolverConfig,
    kernel: KernelSpec,
    indicator: IndicatorSpec,
    g_threshold: Optional[float] = None,
) -> BaselineResult:
    return BaselineService(config, kernel, indicator, g_threshold=g_threshold).fit(method, dataset)
