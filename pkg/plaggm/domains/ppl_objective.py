"""PPL 损失 F(Ω_0) = −ℓ_PPL / n, 在去重参数上的显式二次型.

F(θ) = (1/n) Σ_j ½‖Xp_j β_j(θ) − Yp_j‖², where β_j(θ) is column j of the
symmetric reconstruction with the node intercept at slot j. Each off-diagonal
coordinate is shared by the regressions of both of its nodes.
"""
from functools import cached_property

import numpy as np

from plaggm.core.exceptions import DegenerateDesign, DimensionMismatchError
from plaggm.core.models import ProfileDesign, SymmetricParam


class FlatIndex:
    """(j, j') 与参数向量位置的双射: 先对角块, 再上三角行优先"""

    def __init__(self, p: int):
        self.p = p
        self.rows, self.cols = np.triu_indices(p, 1)
        slots = np.empty((p, p), dtype=int)
        slots[np.arange(p), np.arange(p)] = np.arange(p)
        offdiag = p + np.arange(self.rows.size)
        slots[self.rows, self.cols] = offdiag
        slots[self.cols, self.rows] = offdiag
        self._slots = slots

    @property
    def size(self) -> int:
        return self.p + self.rows.size

    @property
    def pairs(self):
        return list(zip(self.rows.tolist(), self.cols.tolist()))

    def slot(self, j: int, k: int) -> int:
        return int(self._slots[j, k])

    def node_slots(self, j: int) -> np.ndarray:
        """β_j 各分量对应的参数位置"""
        return self._slots[j]

    @property
    def penalized(self) -> np.ndarray:
        mask = np.zeros(self.size, dtype=bool)
        mask[self.p:] = True
        return mask


def _check_dims(theta: SymmetricParam, pd: ProfileDesign) -> None:
    if theta.p != pd.p:
        raise DimensionMismatchError(f"parameter has p={theta.p}, design has p={pd.p}")


def _node_coefficients(theta: SymmetricParam) -> np.ndarray:
    """第 j 行为 β_j(θ)"""
    return theta.matrix()


def ppl_value(theta: SymmetricParam, pd: ProfileDesign) -> float:
    _check_dims(theta, pd)
    beta = _node_coefficients(theta)
    fitted = np.einsum("jnk,jk->jn", pd.Xp, beta)
    residual = fitted - pd.Yp
    return float(0.5 * np.sum(residual**2) / pd.n)


def ppl_gradient(theta: SymmetricParam, pd: ProfileDesign) -> np.ndarray:
    """∇F, SymmetricParam 布局"""
    _check_dims(theta, pd)
    p, n = pd.p, pd.n
    beta = _node_coefficients(theta)
    residual = np.einsum("jnk,jk->jn", pd.Xp, beta) - pd.Yp
    # per_node[j, k] = ∂/∂β_jk of node j's term
    per_node = np.einsum("jnk,jn->jk", pd.Xp, residual) / n
    rows, cols = np.triu_indices(p, 1)
    diag = np.diag(per_node)
    offdiag = per_node[rows, cols] + per_node[cols, rows]
    return np.concatenate([diag, offdiag])


class QuadraticForm:
    """F(θ) = ½ θᵀHθ − bᵀθ + c"""

    def __init__(self, H: np.ndarray, b: np.ndarray, c: float, index: FlatIndex, n: int):
        self.H = H
        self.b = b
        self.c = c
        self.index = index
        self.n = n

    @property
    def p(self) -> int:
        return self.index.p

    @cached_property
    def curvature(self) -> np.ndarray:
        return np.diag(self.H).copy()

    def value(self, theta_vec: np.ndarray) -> float:
        return float(0.5 * theta_vec @ self.H @ theta_vec - self.b @ theta_vec + self.c)

    def gradient(self, theta_vec: np.ndarray) -> np.ndarray:
        return self.H @ theta_vec - self.b

    def penalized_value(self, theta_vec: np.ndarray, lam: float) -> float:
        return self.value(theta_vec) + lam * float(np.abs(theta_vec[self.p:]).sum())

    def intercept_only(self) -> np.ndarray:
        """非对角为 0 时截距项的无惩罚最优解"""
        theta = np.zeros(self.index.size)
        # diag coordinates never interact with each other, H_DD is diagonal
        a = self.curvature[: self.p]
        nonzero = a > 0
        theta[: self.p][nonzero] = self.b[: self.p][nonzero] / a[nonzero]
        return theta

    def lambda_max(self) -> float:
        if not np.any(self.H):
            raise DegenerateDesign("profile design is identically zero")
        grad = self.gradient(self.intercept_only())
        return float(np.max(np.abs(grad[self.p:])))


def assemble_quadratic(pd: ProfileDesign) -> QuadraticForm:
    """由各节点 Gram 块组装 H, b, c"""
    p, n = pd.p, pd.n
    index = FlatIndex(p)
    H = np.zeros((index.size, index.size))
    b = np.zeros(index.size)
    # 按 j 的固定顺序累加
    for j in range(p):
        slots = index.node_slots(j)
        X = pd.Xp[j]
        H[np.ix_(slots, slots)] += X.T @ X / n
        b[slots] += X.T @ pd.Yp[j] / n
    c = 0.5 * float(np.sum(pd.Yp**2)) / n
    H = 0.5 * (H + H.T)
    return QuadraticForm(H=H, b=b, c=c, index=index, n=n)


def penalized_objective(qf: QuadraticForm, theta: SymmetricParam, lam: float) -> float:
    return qf.penalized_value(theta.vector, lam)
