from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import ValidationError

from plaggm.config import settings
from plaggm.core.exceptions import ConfigError
from plaggm.core.models import (
    ConfoundedDataset,
    IndicatorSpec,
    KernelSpec,
    RunConfig,
    SolverConfig,
)
from plaggm.domains.baselines import BaselineService
from plaggm.domains.benchmark import BenchmarkService
from plaggm.domains.kernel_profile import default_bandwidth, indicator_for_threshold
from plaggm.domains.result_store import ResultStore


@lru_cache()
def get_result_store(root: str = ".") -> ResultStore:
    """获取结果存储实例"""
    return ResultStore(Path(root))


def get_run_config(config_file: Optional[Path] = None, **overrides: Any) -> RunConfig:
    """合并默认值, JSON 配置文件与命令行参数 (后者优先)"""
    values: Dict[str, Any] = {
        "n_lambda": settings.n_lambda,
        "lambda_min_ratio": settings.lambda_min_ratio,
        "folds": settings.cv_folds,
        "g_star": settings.indicator_threshold,
    }
    if config_file is not None:
        payload = get_result_store().read_json(config_file)
        if not isinstance(payload, dict):
            raise ConfigError(f"{config_file}: config must be a JSON object")
        values.update(payload)
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**values)
    except ValidationError as e:
        raise ConfigError(f"invalid run configuration: {e}")


def get_solver_config(config: RunConfig) -> SolverConfig:
    """由运行配置构建求解器配置"""
    return settings.default_solver_config(
        n_lambda=config.n_lambda,
        lambda_min_ratio=config.lambda_min_ratio,
        screening=config.screening,
        folds=config.folds,
        seed=config.seed,
        cv_rule=config.cv_rule,
    )


def get_indicator(config: RunConfig) -> IndicatorSpec:
    """未给定 k 时由 g* 推出"""
    if config.indicator_k is None:
        return indicator_for_threshold(config.g_star)
    return IndicatorSpec(k=config.indicator_k, threshold=config.g_star)


def get_kernel(config: RunConfig, dataset: ConfoundedDataset) -> KernelSpec:
    """bandwidth 为 auto 时按 n^(-1/4) 速率取默认值"""
    if config.bandwidth == "auto":
        h = default_bandwidth(dataset.n, dataset.g)
    else:
        h = float(config.bandwidth)
    return KernelSpec(family=config.kernel, bandwidth=h)


def get_baseline_service(config: RunConfig, dataset: ConfoundedDataset) -> BaselineService:
    return BaselineService(
        get_solver_config(config),
        get_kernel(config, dataset),
        get_indicator(config),
        g_threshold=config.g_threshold,
        ridge=config.ridge,
        selection=config.selection,
        tv_eval_points=config.tv_eval_points,
    )


def get_benchmark_service(config: RunConfig) -> BenchmarkService:
    bandwidth = None if config.bandwidth == "auto" else float(config.bandwidth)
    return BenchmarkService(
        get_solver_config(config),
        get_indicator(config),
        kernel_family=config.kernel,
        bandwidth=bandwidth,
        g_threshold=config.g_threshold,
        tv_eval_points=config.tv_eval_points,
        grid_step=config.grid_step,
    )
