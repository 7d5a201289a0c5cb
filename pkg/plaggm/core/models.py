from enum import Enum
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeFloat,
    PositiveFloat,
    field_validator,
    model_validator,
)


def _frozen_array(value, ndim: int, name: str) -> np.ndarray:
    arr = np.array(value, dtype=float, copy=True)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


class ArrayModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


class KernelFamily(str, Enum):
    EPANECHNIKOV = "epanechnikov"
    GAUSSIAN = "gaussian"


class IndicatorFamily(str, Enum):
    SOFT = "soft"
    HARD = "hard"


class Method(str, Enum):
    PLA = "pla"
    PLAIN = "plain"
    LR = "lr"
    CON = "con"
    TV = "tv"


class RocMode(str, Enum):
    LAMBDA = "lambda"
    MAGNITUDE = "magnitude"


class CvRule(str, Enum):
    MIN = "min"
    ONE_SE = "one_se"


class Selection(str, Enum):
    CV = "cv"
    AIC = "aic"


class ConfoundedDataset(ArrayModel):
    """观测数据: n 个样本, 每个样本 z_i (p 维) 加标量混杂变量 g_i"""

    g: np.ndarray
    Z: np.ndarray

    @field_validator("g", mode="before")
    @classmethod
    def _check_g(cls, v):
        return _frozen_array(v, 1, "g")

    @field_validator("Z", mode="before")
    @classmethod
    def _check_z(cls, v):
        return _frozen_array(v, 2, "Z")

    @model_validator(mode="after")
    def _check_shapes(self):
        if self.Z.shape[0] != self.g.shape[0]:
            raise ValueError(
                f"g has {self.g.shape[0]} rows but Z has {self.Z.shape[0]}"
            )
        if self.Z.shape[0] < 1:
            raise ValueError("dataset needs at least one sample")
        if self.Z.shape[1] < 2:
            raise ValueError(f"dataset needs p >= 2, got p={self.Z.shape[1]}")
        return self

    @property
    def n(self) -> int:
        return self.Z.shape[0]

    @property
    def p(self) -> int:
        return self.Z.shape[1]

    def subset(self, indices) -> "ConfoundedDataset":
        idx = np.asarray(indices, dtype=int)
        return ConfoundedDataset(g=self.g[idx], Z=self.Z[idx])


class SymmetricParam(ArrayModel):
    """Ω_0 的去重参数化: p 个截距 (对角) + p(p-1)/2 个上三角交互项 (行优先)"""

    p: int = Field(ge=2)
    diag: np.ndarray
    offdiag: np.ndarray

    @field_validator("diag", "offdiag", mode="before")
    @classmethod
    def _check_vectors(cls, v, info):
        return _frozen_array(v, 1, info.field_name)

    @model_validator(mode="after")
    def _check_lengths(self):
        if self.diag.shape[0] != self.p:
            raise ValueError(f"diag must have length {self.p}, got {self.diag.shape[0]}")
        expected = self.p * (self.p - 1) // 2
        if self.offdiag.shape[0] != expected:
            raise ValueError(f"offdiag must have length {expected}, got {self.offdiag.shape[0]}")
        return self

    @classmethod
    def zeros(cls, p: int) -> "SymmetricParam":
        return cls(p=p, diag=np.zeros(p), offdiag=np.zeros(p * (p - 1) // 2))

    @classmethod
    def from_vector(cls, p: int, vector) -> "SymmetricParam":
        v = np.asarray(vector, dtype=float)
        return cls(p=p, diag=v[:p], offdiag=v[p:])

    @classmethod
    def from_matrix(cls, matrix) -> "SymmetricParam":
        """从对称矩阵构造 (对角线为截距项)"""
        m = np.asarray(matrix, dtype=float)
        p = m.shape[0]
        rows, cols = np.triu_indices(p, 1)
        return cls(p=p, diag=np.diag(m).copy(), offdiag=m[rows, cols])

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.diag, self.offdiag])

    def interaction_matrix(self) -> np.ndarray:
        """B: 对角为 0, (j, j') 处为 Ω_jj'"""
        rows, cols = np.triu_indices(self.p, 1)
        b = np.zeros((self.p, self.p))
        b[rows, cols] = self.offdiag
        b[cols, rows] = self.offdiag
        return b

    def matrix(self) -> np.ndarray:
        m = self.interaction_matrix()
        m[np.diag_indices(self.p)] = self.diag
        return m

    def support(self, tol: float = 1e-10) -> np.ndarray:
        return np.abs(self.offdiag) > tol

    def edges(self, tol: float = 0.0) -> List[Tuple[int, int, float]]:
        """非零交互项列表 (0-based 节点下标)"""
        rows, cols = np.triu_indices(self.p, 1)
        keep = np.abs(self.offdiag) > tol
        return [
            (int(j), int(k), float(v))
            for j, k, v in zip(rows[keep], cols[keep], self.offdiag[keep])
        ]

    def with_offdiag(self, offdiag) -> "SymmetricParam":
        return SymmetricParam(p=self.p, diag=self.diag, offdiag=offdiag)


class NodeDesign(ArrayModel):
    """第 j 个节点回归: X 的第 i 行为 z_{i,-j} (第 j 个分量替换为 1), y 为 Z 的第 j 列"""

    j: int = Field(ge=0)
    X: np.ndarray
    y: np.ndarray


class KernelSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    family: KernelFamily = KernelFamily.EPANECHNIKOV
    bandwidth: float = Field(gt=0)


class IndicatorSpec(BaseModel):
    """混杂指示函数: soft 为 1 - exp(-k^2 g^2)/2; hard 在 |g| < g* 时取 floor"""

    model_config = ConfigDict(frozen=True)

    k: float = Field(gt=0)
    family: IndicatorFamily = IndicatorFamily.SOFT
    threshold: Optional[float] = Field(default=None, gt=0)
    floor: float = Field(default=0.5, ge=0, lt=1)

    @model_validator(mode="after")
    def _check_hard(self):
        if self.family == IndicatorFamily.HARD and self.threshold is None:
            raise ValueError("hard indicator requires a threshold")
        return self


class ProfileDesign(ArrayModel):
    """Profile 变换后的设计: Xp[j] 为 n×p, Yp[j] 为长度 n"""

    Xp: np.ndarray
    Yp: np.ndarray
    bandwidth: Optional[float] = None
    kernel: Optional[KernelFamily] = None
    indicator_k: Optional[float] = None
    ridge: float = 0.0
    smoothed: bool = True

    @field_validator("Xp", mode="before")
    @classmethod
    def _check_xp(cls, v):
        return _frozen_array(v, 3, "Xp")

    @field_validator("Yp", mode="before")
    @classmethod
    def _check_yp(cls, v):
        return _frozen_array(v, 2, "Yp")

    @model_validator(mode="after")
    def _check_shapes(self):
        p, n, q = self.Xp.shape
        if q != p or self.Yp.shape != (p, n):
            raise ValueError(
                f"inconsistent profile design shapes Xp={self.Xp.shape}, Yp={self.Yp.shape}"
            )
        return self

    @property
    def n(self) -> int:
        return self.Xp.shape[1]

    @property
    def p(self) -> int:
        return self.Xp.shape[0]


class SolverConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    tol: float = Field(default=1e-7, gt=0)
    max_sweeps: int = Field(default=10000, ge=1)
    n_lambda: int = Field(default=100, ge=1)
    lambda_min_ratio: float = Field(default=0.01, gt=0, lt=1)
    screening: bool = True
    folds: int = Field(default=10, ge=2)
    seed: int = 0
    cv_rule: CvRule = CvRule.MIN


class SingleFit(ArrayModel):
    theta: SymmetricParam
    lam: float
    objective: float
    converged: bool
    sweeps: int
    kkt_violation: float
    repairs: int = 0

    @property
    def active_size(self) -> int:
        return int(np.count_nonzero(self.theta.offdiag))


class PathPoint(ArrayModel):
    lam: float
    theta: SymmetricParam
    objective: float
    active_size: int
    sweeps: int
    kkt_violation: float
    repairs: int
    converged: bool = True


class FitPath(ArrayModel):
    points: List[PathPoint] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_decreasing(self):
        lams = [pt.lam for pt in self.points]
        if any(b >= a for a, b in zip(lams, lams[1:])):
            raise ValueError("path lambdas must be strictly decreasing")
        return self

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([pt.lam for pt in self.points])

    @property
    def total_repairs(self) -> int:
        return sum(pt.repairs for pt in self.points)

    def at(self, lam: float) -> PathPoint:
        """返回最接近给定 lambda 的路径点"""
        if not self.points:
            raise ValueError("empty path")
        idx = int(np.argmin(np.abs(self.lambdas - lam)))
        return self.points[idx]


class CrossValidationResult(ArrayModel):
    lambdas: np.ndarray
    mean: np.ndarray
    sd: np.ndarray
    best_lambda: float
    rule: CvRule = CvRule.MIN
    fold_errors: Dict[int, str] = Field(default_factory=dict)
    dropped: int = 0


class BaselineResult(ArrayModel):
    method: Method
    path: FitPath
    selected_lambda: Optional[float] = None
    cv: Optional[CrossValidationResult] = None
    notes: Dict[str, str] = Field(default_factory=dict)

    @property
    def selected(self) -> Optional[SymmetricParam]:
        if self.selected_lambda is None or not self.path.points:
            return None
        return self.path.at(self.selected_lambda).theta


class SimTruth(ArrayModel):
    theta0: SymmetricParam
    W: np.ndarray
    g_grid: np.ndarray
    scale: Dict[str, float] = Field(default_factory=dict)


class Confusion(BaseModel):
    model_config = ConfigDict(frozen=True)

    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def tpr(self) -> float:
        positives = self.tp + self.fn
        return self.tp / positives if positives else 0.0

    @property
    def fpr(self) -> float:
        negatives = self.fp + self.tn
        return self.fp / negatives if negatives else 0.0


class RocCurve(BaseModel):
    model_config = ConfigDict(frozen=True)

    points: List[Tuple[float, float, float]]
    auc: float = Field(ge=0, le=1)
    degenerate: bool = False


class RunConfig(BaseModel):
    """命令行运行配置, 未知字段直接拒绝"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    p: int = Field(default=10, ge=2)
    n: int = Field(default=800, ge=2)
    seed: int = 0
    seeds: int = Field(default=10, ge=1)
    kernel: KernelFamily = KernelFamily.EPANECHNIKOV
    bandwidth: Union[Literal["auto"], PositiveFloat] = "auto"
    indicator_k: Optional[PositiveFloat] = None
    g_star: PositiveFloat = 10.0
    g_threshold: Optional[NonNegativeFloat] = None
    n_lambda: int = Field(default=100, ge=1)
    lambda_min_ratio: float = Field(default=0.01, gt=0, lt=1)
    folds: int = Field(default=10, ge=2)
    methods: List[Method] = Field(default_factory=lambda: [Method.PLA])
    roc_mode: RocMode = RocMode.LAMBDA
    ridge: NonNegativeFloat = 0.0
    dense: bool = False
    screening: bool = True
    selection: Selection = Selection.CV
    cv_rule: CvRule = CvRule.MIN
    sizes: List[int] = Field(default_factory=lambda: [400, 800, 1600, 3200])
    tv_eval_points: Optional[List[float]] = None
    grid_step: PositiveFloat = 1.0

    @field_validator("tv_eval_points", mode="before")
    @classmethod
    def _split_eval_points(cls, v):
        if isinstance(v, str):
            return [float(s) for s in v.split(",") if s.strip()]
        return v

    @field_validator("tv_eval_points")
    @classmethod
    def _non_empty_eval_points(cls, v):
        if v is not None and not v:
            raise ValueError("tv_eval_points must name at least one point")
        return v

    @field_validator("methods", mode="before")
    @classmethod
    def _split_methods(cls, v):
        if isinstance(v, str):
            return [m.strip() for m in v.split(",") if m.strip()]
        return v

    @field_validator("sizes", mode="before")
    @classmethod
    def _split_sizes(cls, v):
        if isinstance(v, str):
            return [int(s) for s in v.split(",") if s.strip()]
        return v
