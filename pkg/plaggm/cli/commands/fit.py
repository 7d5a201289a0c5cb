from pathlib import Path
from typing import Annotated, Any, Dict

import typer
from loguru import logger

from plaggm.cli import options
from plaggm.cli.handlers import configure_logging, handle_errors
from plaggm.core.models import BaselineResult, RunConfig
from plaggm.dependencies import (
    get_baseline_service,
    get_indicator,
    get_kernel,
    get_result_store,
    get_run_config,
)
from plaggm.domains.result_store import ResultStore


def _method_summary(result: BaselineResult) -> Dict[str, Any]:
    return {
        "points": len(result.path.points),
        "selected_lambda": result.selected_lambda,
        "screening_repairs": result.path.total_repairs,
        "cv_dropped": result.cv.dropped if result.cv is not None else None,
        "notes": result.notes,
    }


def _write_method(store: ResultStore, out: Path, result: BaselineResult, run: RunConfig) -> None:
    target = out / result.method.value
    store.write_path(target / "path.json", result)
    if result.cv is not None:
        store.write_cv(target / "cv.csv", result.cv)
    selected = result.selected
    if selected is not None:
        store.write_selected(target / "selected.json", selected, result.selected_lambda)
        if run.dense:
            store.write_dense(target / "selected.csv", selected)


@handle_errors
def fit(
    data: Annotated[Path, typer.Argument(help="Dataset CSV with header g,z1..zp")],
    out: options.OutDir,
    methods: options.Methods = None,
    seed: options.Seed = None,
    kernel: options.Kernel = None,
    bandwidth: options.Bandwidth = None,
    indicator_k: options.IndicatorK = None,
    g_star: options.GStar = None,
    g_threshold: options.GThreshold = None,
    n_lambda: options.NLambda = None,
    lambda_min_ratio: options.LambdaMinRatio = None,
    folds: options.Folds = None,
    ridge: options.Ridge = None,
    dense: options.Dense = None,
    screening: options.Screening = None,
    selection: options.SelectionOpt = None,
    cv_rule: options.CvRuleOpt = None,
    tv_eval_points: options.TvEvalPoints = None,
    config: options.ConfigFile = None,
    log_level: options.LogLevel = None,
):
    """
    拟合 PLA-GGM 与对比方法

    每个方法输出 path.json, cv.csv, selected.json; 运行元数据写入 metadata.json
    """
    configure_logging(log_level)
    run = get_run_config(
        config,
        methods=methods,
        seed=seed,
        kernel=kernel,
        bandwidth=bandwidth,
        indicator_k=indicator_k,
        g_star=g_star,
        g_threshold=g_threshold,
        n_lambda=n_lambda,
        lambda_min_ratio=lambda_min_ratio,
        folds=folds,
        ridge=ridge,
        dense=dense,
        screening=screening,
        selection=selection,
        cv_rule=cv_rule,
        tv_eval_points=tv_eval_points,
    )
    store = get_result_store()
    dataset = store.read_dataset(data)
    service = get_baseline_service(run, dataset)
    kernel_spec = get_kernel(run, dataset)

    summaries: Dict[str, Any] = {}
    for method in run.methods:
        result = service.fit(method, dataset)
        _write_method(store, out, result, run)
        summaries[method.value] = _method_summary(result)

    metadata = {
        "n": dataset.n,
        "p": dataset.p,
        "seed": run.seed,
        "kernel": kernel_spec.family.value,
        "bandwidth": kernel_spec.bandwidth,
        "indicator_k": get_indicator(run).k,
        "ridge": run.ridge,
        "ridge_used": run.ridge > 0,
        "n_lambda": run.n_lambda,
        "lambda_min_ratio": run.lambda_min_ratio,
        "folds": run.folds,
        "screening": run.screening,
        "selection": run.selection.value,
        "cv_rule": run.cv_rule.value,
        "tv_eval_points": run.tv_eval_points,
        "methods": summaries,
    }
    store.write_json(out / "metadata.json", metadata)
    logger.info(f"Fitted {', '.join(summaries)} -> {out}")
