"""结构恢复评估: 非对角支撑的混淆计数, 沿正则化路径的 ROC 与梯形 AUC."""
from typing import Iterable, List, Tuple

import numpy as np
from loguru import logger
from sklearn.metrics import auc as trapezoid_auc

from plaggm.config import settings
from plaggm.core.exceptions import DimensionMismatchError
from plaggm.core.models import Confusion, FitPath, RocCurve, SymmetricParam


def support_confusion(
    est: SymmetricParam, truth: SymmetricParam, zero_tol: float | None = None
) -> Confusion:
    """只统计非对角唯一元素"""
    if est.p != truth.p:
        raise DimensionMismatchError(f"estimate has p={est.p}, truth has p={truth.p}")
    zero_tol = settings.nonzero_tol if zero_tol is None else zero_tol
    predicted = est.support(zero_tol)
    actual = truth.support(zero_tol)
    return Confusion(
        tp=int(np.sum(predicted & actual)),
        fp=int(np.sum(predicted & ~actual)),
        tn=int(np.sum(~predicted & ~actual)),
        fn=int(np.sum(~predicted & actual)),
    )


def _curve(
    labelled: Iterable[Tuple[float, Confusion]], truth: SymmetricParam
) -> RocCurve:
    points: List[Tuple[float, float, float]] = [
        (float(lam), conf.fpr, conf.tpr) for lam, conf in labelled
    ]
    positives = int(truth.support(settings.nonzero_tol).sum())
    negatives = truth.offdiag.size - positives
    degenerate = not points or positives == 0 or negatives == 0
    if degenerate:
        logger.warning(
            f"Degenerate ROC: {len(points)} points, {positives} positives, {negatives} negatives"
        )
        return RocCurve(points=points, auc=0.5, degenerate=True)

    # 同一 FPR 只保留最大 TPR, 加上端点后按 FPR 排序
    best = {0.0: 0.0, 1.0: 1.0}
    for _, fpr, tpr in points:
        best[fpr] = max(best.get(fpr, 0.0), tpr)
    fprs = np.array(sorted(best))
    tprs = np.array([best[f] for f in fprs])
    area = float(np.clip(trapezoid_auc(fprs, tprs), 0.0, 1.0))
    return RocCurve(points=points, auc=area, degenerate=False)


def roc_auc(path: FitPath, truth: SymmetricParam) -> RocCurve:
    """沿 lambda 扫描的 ROC"""
    return _curve(((pt.lam, support_confusion(pt.theta, truth)) for pt in path.points), truth)


def roc_from_magnitudes(est: SymmetricParam, truth: SymmetricParam) -> RocCurve:
    """固定估计下按 |Ω_jj'| 阈值扫描的 ROC; 点的第一列为阈值"""
    magnitudes = np.abs(est.offdiag)
    thresholds = np.unique(magnitudes[magnitudes > 0])[::-1]
    labelled = []
    for threshold in thresholds:
        kept = np.where(magnitudes >= threshold, est.offdiag, 0.0)
        labelled.append((threshold, support_confusion(est.with_offdiag(kept), truth)))
    return _curve(labelled, truth)


def max_norm_error(est: SymmetricParam, truth: SymmetricParam, support_only: bool = True) -> float:
    """非对角元素的最大绝对误差 (默认只在真实支撑上)"""
    if est.p != truth.p:
        raise DimensionMismatchError(f"estimate has p={est.p}, truth has p={truth.p}")
    diff = np.abs(est.offdiag - truth.offdiag)
    if support_only:
        mask = truth.support(settings.nonzero_tol)
        if not mask.any():
            return 0.0
        diff = diff[mask]
    return float(diff.max()) if diff.size else 0.0
