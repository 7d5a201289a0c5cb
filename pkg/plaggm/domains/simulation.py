"""合成数据生成: 稀疏 Ω_0, 稠密混杂方向 W, 分段函数 f(g), 以及 Ω(g) = Ω_0 + f(g)W 上的采样."""
from typing import Optional, Tuple

import numpy as np
from loguru import logger
from scipy import optimize

from plaggm.core.exceptions import ConfigError
from plaggm.core.models import ConfoundedDataset, SimTruth, SymmetricParam
from plaggm.domains.model_core import sample_ggm

OMEGA0_NORM = 0.5
GRID_NORM = 0.9


def f_of_g(g):
    """分段混杂强度, |g| <= 10 时为 0"""
    g = np.asarray(g, dtype=float)
    value = np.select(
        [g > 12, g > 10, g > -10, g > -12],
        [g - 10, g + (g - 12) ** 2 / 4 - 11, 0.0, g - (g + 12) ** 2 / 4 + 11],
        default=g + 10,
    )
    return value if value.ndim else float(value)


def _spectral_norm(matrix: np.ndarray) -> float:
    return float(np.linalg.norm(matrix, 2))


def _random_signs(rng: np.random.Generator, size: int) -> np.ndarray:
    return rng.choice(np.array([-1.0, 1.0]), size=size)


def _draw_sparse(p: int, density: float, rng: np.random.Generator) -> Tuple[SymmetricParam, float]:
    m = p * (p - 1) // 2
    mask = rng.random(m) < density
    values = _random_signs(rng, m) * rng.uniform(0.1, 0.3, size=m) * mask
    theta = SymmetricParam(p=p, diag=np.zeros(p), offdiag=values)
    norm = _spectral_norm(theta.interaction_matrix())
    factor = OMEGA0_NORM / norm if norm > OMEGA0_NORM else 1.0
    return theta.with_offdiag(values * factor), factor


def gen_sparse_omega0(p: int, density: float = 0.3, rng: Optional[np.random.Generator] = None) -> SymmetricParam:
    """每个上三角元素以概率 density 非零, 幅度 ±U(0.1, 0.3), 整体缩放使 ‖B₀‖₂ <= 0.5"""
    if p < 2:
        raise ConfigError(f"p must be at least 2, got {p}")
    rng = rng if rng is not None else np.random.default_rng()
    return _draw_sparse(p, density, rng)[0]


def gen_dense_W(p: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """稠密对称混杂矩阵, 对角为 0"""
    if p < 2:
        raise ConfigError(f"p must be at least 2, got {p}")
    rng = rng if rng is not None else np.random.default_rng()
    m = p * (p - 1) // 2
    values = _random_signs(rng, m) * rng.uniform(0.5, 1.0, size=m)
    rows, cols = np.triu_indices(p, 1)
    W = np.zeros((p, p))
    W[rows, cols] = values
    W[cols, rows] = values
    return W


def rescale_confounding(B0: np.ndarray, W: np.ndarray, f_values, target: float = GRID_NORM) -> float:
    """最大的 s 使得网格上 max ‖B₀ + f(g)·s·W‖₂ <= target"""
    f_values = np.asarray(f_values, dtype=float)
    f_abs = float(np.max(np.abs(f_values))) if f_values.size else 0.0
    w_norm = _spectral_norm(W)
    if f_abs == 0.0 or w_norm == 0.0:
        return 1.0
    base = _spectral_norm(B0)
    if base >= target:
        raise ConfigError(f"‖B0‖₂={base:.3f} already exceeds the target {target}")

    # ‖B₀ + f·s·W‖ is convex in f, so the grid maximum sits at an extreme of f
    extremes = (float(f_values.min()), float(f_values.max()))

    def excess(s: float) -> float:
        return max(_spectral_norm(B0 + f * s * W) for f in extremes) - target

    upper = (target + base + 1.0) / (f_abs * w_norm)
    root = optimize.brentq(excess, 0.0, upper, xtol=1e-14)
    scale = root
    while excess(scale) > 0:
        scale *= 1.0 - 1e-9
    return scale


def omega_at(truth: SimTruth, g: float) -> SymmetricParam:
    """Ω(g) = Ω_0 + f(g)W"""
    rows, cols = np.triu_indices(truth.theta0.p, 1)
    return truth.theta0.with_offdiag(truth.theta0.offdiag + f_of_g(g) * truth.W[rows, cols])


def confounder_grid(n: int, grid_step: float = 1.0) -> np.ndarray:
    """g = step·{-n/2, ..., n/2-1}"""
    if n < 2 or n % 2:
        raise ConfigError(f"n must be a positive even number, got {n}")
    if grid_step <= 0:
        raise ConfigError(f"grid step must be positive, got {grid_step}")
    return grid_step * np.arange(-n // 2, n // 2)


def draw_truth(
    p: int,
    g_grid,
    rng: Optional[np.random.Generator] = None,
    density: float = 0.3,
    rescale: bool = True,
    w_scale: float = 1.0,
) -> SimTruth:
    """抽取 Ω_0 与 W; W 的缩放只依赖 g_grid 上 f 的取值范围"""
    if p < 2:
        raise ConfigError(f"p must be at least 2, got {p}")
    rng = rng if rng is not None else np.random.default_rng()
    g_grid = np.asarray(g_grid, dtype=float)

    theta0, omega_factor = _draw_sparse(p, density, rng)
    W = gen_dense_W(p, rng)
    f_values = f_of_g(g_grid)

    B0 = theta0.interaction_matrix()
    w_factor = rescale_confounding(B0, W, f_values) if rescale else w_scale
    W = W * w_factor
    max_norm = max(_spectral_norm(B0 + f * W) for f in (f_values.min(), f_values.max()))
    logger.info(
        f"Drew truth p={p}: Omega0 scale {omega_factor:.4g}, W scale {w_factor:.4g}, "
        f"max grid norm {max_norm:.4f}"
    )
    return SimTruth(
        theta0=theta0,
        W=W,
        g_grid=g_grid,
        scale={"omega0": omega_factor, "W": w_factor, "max_norm": max_norm},
    )


def sample_dataset(truth: SimTruth, g_grid, rng: Optional[np.random.Generator] = None) -> ConfoundedDataset:
    """每个 g 抽取一个 Ω(g) 下的样本"""
    rng = rng if rng is not None else np.random.default_rng()
    g_grid = np.asarray(g_grid, dtype=float)
    Z = np.vstack([sample_ggm(omega_at(truth, g), 1, rng) for g in g_grid])
    return ConfoundedDataset(g=g_grid, Z=Z)


def simulate_dataset(
    p: int,
    n: int = 800,
    rng: Optional[np.random.Generator] = None,
    density: float = 0.3,
    grid_step: float = 1.0,
    rescale: bool = True,
    w_scale: float = 1.0,
) -> Tuple[ConfoundedDataset, SimTruth]:
    """混杂网格 g = step·{-n/2, ..., n/2-1}, 每个网格点抽取一个样本"""
    if p < 2:
        raise ConfigError(f"p must be at least 2, got {p}")
    g_grid = confounder_grid(n, grid_step)
    rng = rng if rng is not None else np.random.default_rng()
    truth = draw_truth(p, g_grid, rng, density=density, rescale=rescale, w_scale=w_scale)
    return sample_dataset(truth, g_grid, rng), truth
