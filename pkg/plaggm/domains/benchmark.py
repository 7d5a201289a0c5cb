"""结构恢复基准: 多个随机种子 × 方法的 AUC, 以及样本量增长时的误差收敛趋势."""
import time
from typing import Dict, List, Optional, Sequence

import numpy as np
from loguru import logger
from pydantic import BaseModel

from plaggm.core.exceptions import PlaGgmError
from plaggm.core.models import IndicatorSpec, KernelFamily, KernelSpec, Method, SolverConfig
from plaggm.domains.baselines import BaselineService
from plaggm.domains.evaluation import max_norm_error, roc_auc
from plaggm.domains.kernel_profile import default_bandwidth
from plaggm.domains.simulation import confounder_grid, draw_truth, sample_dataset, simulate_dataset

REFERENCE_N = 800


class BenchmarkRow(BaseModel):
    seed: int
    method: Method
    auc: Optional[float] = None
    degenerate: bool = False
    error: Optional[str] = None
    seconds: float = 0.0


class RateRow(BaseModel):
    seed: int
    n: int
    error: Optional[float] = None
    oracle_lambda: Optional[float] = None


class BenchmarkService:
    def __init__(
        self,
        config: SolverConfig,
        indicator: IndicatorSpec,
        kernel_family: KernelFamily = KernelFamily.EPANECHNIKOV,
        bandwidth: Optional[float] = None,
        g_threshold: Optional[float] = None,
        tv_eval_points: Optional[Sequence[float]] = None,
        grid_step: float = 1.0,
    ):
        self.config = config
        self.indicator = indicator
        self.kernel_family = kernel_family
        self.bandwidth = bandwidth
        self.g_threshold = g_threshold
        self.tv_eval_points = tv_eval_points
        self.grid_step = grid_step

    def _service(self, g, n: int) -> BaselineService:
        h = self.bandwidth if self.bandwidth is not None else default_bandwidth(n, g)
        kernel = KernelSpec(family=self.kernel_family, bandwidth=h)
        return BaselineService(
            self.config,
            kernel,
            self.indicator,
            g_threshold=self.g_threshold,
            tv_eval_points=self.tv_eval_points,
        )

    def run_auc(self, p: int, n: int, seeds: Sequence[int], methods: Sequence[Method]) -> List[BenchmarkRow]:
        """每个种子模拟一次数据, 所有方法在同一数据上比较 AUC"""
        rows: List[BenchmarkRow] = []
        for seed in seeds:
            dataset, truth = simulate_dataset(
                p, n, np.random.default_rng(seed), grid_step=self.grid_step
            )
            service = self._service(dataset.g, dataset.n)
            for method in methods:
                start = time.time()
                try:
                    result = service.fit_path_only(method, dataset)
                    curve = roc_auc(result.path, truth.theta0)
                    row = BenchmarkRow(seed=seed, method=method, auc=curve.auc, degenerate=curve.degenerate)
                except PlaGgmError as e:
                    logger.warning(f"Seed {seed}, method {method.value} failed: {e}")
                    row = BenchmarkRow(seed=seed, method=method, error=str(e))
                row.seconds = time.time() - start
                logger.info(f"Seed {seed} {method.value}: auc={row.auc} ({row.seconds:.1f}s)")
                rows.append(row)
        return rows

    @staticmethod
    def summarize(rows: Sequence[BenchmarkRow]) -> Dict[str, Dict[str, Optional[float]]]:
        """每个方法的平均 AUC 与成功次数; 全部失败时 mean_auc 为 None"""
        summary: Dict[str, Dict[str, Optional[float]]] = {}
        for method in dict.fromkeys(row.method for row in rows):
            aucs = [row.auc for row in rows if row.method == method and row.auc is not None]
            summary[method.value] = {
                "mean_auc": float(np.mean(aucs)) if aucs else None,
                "runs": float(len(aucs)),
                "failures": float(sum(1 for row in rows if row.method == method and row.auc is None)),
            }
        return summary

    def run_rate(self, p: int, sizes: Sequence[int], seeds: Sequence[int]) -> List[RateRow]:
        """固定 p 与真值, 样本量增长时 oracle lambda 下真实支撑上的最大误差"""
        rows: List[RateRow] = []
        half = REFERENCE_N / 2 * self.grid_step
        for seed in seeds:
            # 每个种子只抽一次 Ω_0 与 W, 各样本量只重新采样数据
            truth = draw_truth(p, np.array([-half, half]), np.random.default_rng(seed))
            for n in sizes:
                # 网格按比例缩放, 混杂范围保持不变
                g_grid = confounder_grid(n, self.grid_step * REFERENCE_N / n)
                dataset = sample_dataset(truth, g_grid, np.random.default_rng([seed, n]))
                try:
                    result = self._service(dataset.g, dataset.n).fit_path_only(Method.PLA, dataset)
                except PlaGgmError as e:
                    logger.warning(f"Seed {seed}, n={n} failed: {e}")
                    rows.append(RateRow(seed=seed, n=n))
                    continue
                errors = [max_norm_error(pt.theta, truth.theta0) for pt in result.path.points]
                best = int(np.argmin(errors))
                rows.append(
                    RateRow(seed=seed, n=n, error=errors[best], oracle_lambda=result.path.points[best].lam)
                )
        return rows

    @staticmethod
    def rate_slopes(rows: Sequence[RateRow]) -> Dict[int, Dict[str, Optional[float]]]:
        """每个种子的 log-log 斜率与单调性; 误差为 0 的点不参与斜率拟合"""
        out: Dict[int, Dict[str, Optional[float]]] = {}
        for seed in dict.fromkeys(row.seed for row in rows):
            pts = sorted((row.n, row.error) for row in rows if row.seed == seed and row.error is not None)
            if len(pts) < 2:
                continue
            errs = np.array([e for _, e in pts])
            positive = [(n, e) for n, e in pts if e > 0]
            slope = None
            if len(positive) >= 2:
                slope = float(np.polyfit(np.log([n for n, _ in positive]), np.log([e for _, e in positive]), 1)[0])
            out[seed] = {"slope": slope, "monotone": float(np.all(np.diff(errs) <= 0) and errs[-1] < errs[0])}
        return out
