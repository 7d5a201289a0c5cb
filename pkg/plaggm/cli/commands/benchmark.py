from typing import Any

from loguru import logger

from plaggm.cli import options
from plaggm.cli.handlers import configure_logging, handle_errors
from plaggm.core.models import Method
from plaggm.dependencies import get_benchmark_service, get_result_store, get_run_config


ALL_METHODS = ",".join(m.value for m in Method)


def _cell(value: Any) -> Any:
    return "" if value is None else value


@handle_errors
def benchmark(
    out: options.OutDir,
    p: options.P = None,
    n: options.N = None,
    seeds: options.Seeds = None,
    methods: options.Methods = None,
    kernel: options.Kernel = None,
    bandwidth: options.Bandwidth = None,
    indicator_k: options.IndicatorK = None,
    g_star: options.GStar = None,
    n_lambda: options.NLambda = None,
    lambda_min_ratio: options.LambdaMinRatio = None,
    screening: options.Screening = None,
    tv_eval_points: options.TvEvalPoints = None,
    grid_step: options.GridStep = None,
    config: options.ConfigFile = None,
    log_level: options.LogLevel = None,
):
    """
    结构恢复基准: 每个种子模拟一次数据, 比较各方法的 AUC

    输出 benchmark.csv 与 summary.json (平均 AUC)
    """
    configure_logging(log_level)
    run = get_run_config(
        config,
        p=p,
        n=n,
        seeds=seeds,
        methods=methods if methods or config else ALL_METHODS,
        kernel=kernel,
        bandwidth=bandwidth,
        indicator_k=indicator_k,
        g_star=g_star,
        n_lambda=n_lambda,
        lambda_min_ratio=lambda_min_ratio,
        screening=screening,
        tv_eval_points=tv_eval_points,
        grid_step=grid_step,
    )
    service = get_benchmark_service(run)
    rows = service.run_auc(run.p, run.n, range(run.seeds), run.methods)

    store = get_result_store()
    store.write_rows(
        out / "benchmark.csv",
        ["seed", "method", "auc", "degenerate", "error", "seconds"],
        (
            [row.seed, row.method.value, _cell(row.auc), row.degenerate, _cell(row.error), row.seconds]
            for row in rows
        ),
    )
    summary = service.summarize(rows)
    store.write_json(out / "summary.json", summary)
    for method, stats in summary.items():
        mean = "n/a" if stats["mean_auc"] is None else f"{stats['mean_auc']:.4f}"
        logger.info(f"{method}: mean AUC={mean} ({stats['runs']:.0f} runs, {stats['failures']:.0f} failed)")


@handle_errors
def rate(
    out: options.OutDir,
    p: options.P = None,
    sizes: options.Sizes = None,
    seeds: options.Seeds = None,
    kernel: options.Kernel = None,
    indicator_k: options.IndicatorK = None,
    g_star: options.GStar = None,
    n_lambda: options.NLambda = None,
    lambda_min_ratio: options.LambdaMinRatio = None,
    grid_step: options.GridStep = None,
    config: options.ConfigFile = None,
    log_level: options.LogLevel = None,
):
    """
    收敛趋势: 样本量增长时 oracle lambda 下支撑上的最大误差

    输出 rate.csv 与 slopes.json (每个种子的 log-log 斜率)
    """
    configure_logging(log_level)
    run = get_run_config(
        config,
        p=p,
        sizes=sizes,
        seeds=seeds,
        kernel=kernel,
        indicator_k=indicator_k,
        g_star=g_star,
        n_lambda=n_lambda,
        lambda_min_ratio=lambda_min_ratio,
        grid_step=grid_step,
    )
    service = get_benchmark_service(run)
    rows = service.run_rate(run.p, run.sizes, range(run.seeds))

    store = get_result_store()
    store.write_rows(
        out / "rate.csv",
        ["seed", "n", "error", "oracle_lambda"],
        ([row.seed, row.n, _cell(row.error), _cell(row.oracle_lambda)] for row in rows),
    )
    slopes = service.rate_slopes(rows)
    store.write_json(out / "slopes.json", {str(seed): stats for seed, stats in slopes.items()})
    monotone = sum(int(stats["monotone"]) for stats in slopes.values())
    logger.info(f"Monotone error decrease in {monotone}/{len(slopes)} seeds")
