from typing import Any, Optional


class PlaGgmError(Exception):
    """基础异常"""
    pass


class ConfigError(PlaGgmError):
    """配置无效异常"""
    pass


class DataError(PlaGgmError):
    """数据异常"""
    pass


class DatasetFormatError(DataError):
    """数据文件格式异常"""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        super().__init__(f"{location}{message}")
        self.path = path
        self.line = line


class DimensionMismatchError(DataError):
    """维度不匹配异常"""
    pass


class InsufficientCleanSamples(DataError):
    """非混杂样本不足异常"""
    pass


class EffectiveSampleTooSmall(DataError):
    """核加权有效样本不足异常"""
    pass


class NumericalError(PlaGgmError):
    """数值计算异常"""
    pass


class NotPositiveDefinite(NumericalError):
    """矩阵非正定异常"""
    pass


class SingularSmoother(NumericalError):
    """局部线性平滑器 Gram 矩阵奇异"""

    hint = "increase bandwidth or indicator coefficient"

    def __init__(self, sample: int, node: int, rcond: float):
        super().__init__(
            f"Smoother Gram for sample {sample}, node {node} is singular "
            f"(rcond={rcond:.3e}); {self.hint}"
        )
        self.sample = sample
        self.node = node
        self.rcond = rcond


class NonConvergence(NumericalError):
    """坐标下降未收敛"""

    def __init__(self, message: str, best: Any = None, sweeps: int = 0):
        super().__init__(message)
        self.best = best
        self.sweeps = sweeps


class DegenerateDesign(NumericalError):
    """设计矩阵退化 (全零)"""
    pass


class CrossValidationFailed(NumericalError):
    """交叉验证所有 lambda 点均失败"""
    pass
