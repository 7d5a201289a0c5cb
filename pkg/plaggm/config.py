from pydantic_settings import BaseSettings, SettingsConfigDict

from plaggm.core.models import SolverConfig


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="PLAGGM_", env_file=".env", extra="ignore")

    # Logging
    log_level: str = "INFO"

    # 并发配置 (CV folds / smoother rows)
    max_workers: int = 4

    # Coordinate descent
    solver_tol: float = 1e-7          # 最大坐标变化量
    solver_max_sweeps: int = 10000
    kkt_tol: float = 1e-6

    # Regularization path
    n_lambda: int = 100
    lambda_min_ratio: float = 0.01
    cv_folds: int = 10

    # Kernel smoother
    rcond_threshold: float = 1e-12    # 低于此值视为奇异
    smoother_ridge: float = 0.0       # 0 表示不加岭项
    bandwidth_constant: float = 1.0

    # Indicator: k = indicator_sharpness / g*
    indicator_threshold: float = 10.0
    indicator_sharpness: float = 2.0

    # Baselines
    plain_min_samples: int = 10
    plain_samples_per_node: int = 3
    baseline_clean_threshold: float = 10.0

    # Evaluation
    nonzero_tol: float = 1e-10

    def default_solver_config(self, **overrides) -> SolverConfig:
        """获取默认求解器配置, 可覆盖部分字段"""
        values = {
            'tol': self.solver_tol,
            'max_sweeps': self.solver_max_sweeps,
            'n_lambda': self.n_lambda,
            'lambda_min_ratio': self.lambda_min_ratio,
            'folds': self.cv_folds,
        }
        values.update(overrides)
        return SolverConfig(**values)

    def indicator_k(self, g_star: float | None = None) -> float:
        """根据 g* 计算指示函数的锐度系数 k"""
        g_star = self.indicator_threshold if g_star is None else g_star
        if g_star <= 0:
            raise ValueError(f"g* must be positive, got {g_star}")
        return self.indicator_sharpness / g_star

    def default_workers(self, tasks: int) -> int:
        """根据任务数量计算并发数"""
        if tasks < 2:
            return 1
        return max(1, min(self.max_workers, tasks))


settings = Settings()
