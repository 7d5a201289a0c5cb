from pathlib import Path
from typing import Annotated, Any, Dict, List

import typer
from loguru import logger

from plaggm.cli import options
from plaggm.cli.handlers import configure_logging, handle_errors
from plaggm.core.exceptions import DataError
from plaggm.core.models import Method, RocCurve, RocMode, SymmetricParam
from plaggm.dependencies import get_result_store, get_run_config
from plaggm.domains.evaluation import roc_auc, roc_from_magnitudes
from plaggm.domains.result_store import ResultStore


def _discover_methods(fits: Path) -> List[Method]:
    """按固定顺序列出目录中已有 path.json 的方法"""
    found = [m for m in Method if (fits / m.value / "path.json").is_file()]
    if not found:
        raise DataError(f"no <method>/path.json found under {fits}")
    return found


def _curve(store: ResultStore, fits: Path, method: Method, truth: SymmetricParam, mode: RocMode) -> RocCurve:
    if mode == RocMode.MAGNITUDE:
        return roc_from_magnitudes(store.read_selected(fits / method.value / "selected.json"), truth)
    return roc_auc(store.read_path(fits / method.value / "path.json").path, truth)


@handle_errors
def roc(
    fits: Annotated[Path, typer.Argument(help="Output directory of the fit command")],
    truth: Annotated[Path, typer.Option("--truth", help="truth.json written by simulate")],
    out: options.OutDir,
    methods: options.Methods = None,
    roc_mode: options.RocModeOpt = None,
    config: options.ConfigFile = None,
    log_level: options.LogLevel = None,
):
    """
    计算 ROC 曲线与 AUC

    输出 roc.csv (method, lambda, fpr, tpr) 与 summary.json
    """
    configure_logging(log_level)
    run = get_run_config(config, methods=methods, roc_mode=roc_mode)
    store = get_result_store()
    theta0 = store.read_truth(truth)
    selected = run.methods if methods is not None else _discover_methods(fits)

    rows: List[List[Any]] = []
    summary: Dict[str, Dict[str, Any]] = {}
    for method in selected:
        curve = _curve(store, fits, method, theta0, run.roc_mode)
        rows.extend([method.value, lam, fpr, tpr] for lam, fpr, tpr in curve.points)
        summary[method.value] = {
            "auc": curve.auc,
            "degenerate": curve.degenerate,
            "n_points": len(curve.points),
        }
        logger.info(f"{method.value}: AUC={curve.auc:.4f} over {len(curve.points)} points")

    store.write_rows(out / "roc.csv", ["method", "lambda", "fpr", "tpr"], rows)
    store.write_json(out / "summary.json", summary)
