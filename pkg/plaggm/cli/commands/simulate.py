import numpy as np
from loguru import logger

from plaggm.cli import options
from plaggm.cli.handlers import configure_logging, handle_errors
from plaggm.dependencies import get_result_store, get_run_config
from plaggm.domains.simulation import simulate_dataset


@handle_errors
def simulate(
    out: options.OutDir,
    p: options.P = None,
    n: options.N = None,
    seed: options.Seed = None,
    config: options.ConfigFile = None,
    log_level: options.LogLevel = None,
):
    """
    模拟混杂数据集

    写出 dataset.csv (g,z1..zp) 与 truth.json (Ω_0 的边列表与缩放信息)
    """
    configure_logging(log_level)
    run = get_run_config(config, p=p, n=n, seed=seed)
    dataset, truth = simulate_dataset(run.p, run.n, np.random.default_rng(run.seed))

    store = get_result_store()
    store.write_dataset(out / "dataset.csv", dataset)
    store.write_truth(out / "truth.json", truth)
    logger.info(
        f"Simulated n={dataset.n}, p={dataset.p}, {len(truth.theta0.edges())} true edges -> {out}"
    )
