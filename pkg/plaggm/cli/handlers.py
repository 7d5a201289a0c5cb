import functools
import sys
from typing import Callable, List, Tuple, Type

import typer
from loguru import logger
from pydantic import ValidationError

from plaggm.config import settings
from plaggm.core.exceptions import (
    ConfigError,
    DataError,
    NumericalError,
    PlaGgmError,
    SingularSmoother,
)

# 异常类 -> (退出码, 标签), 子类必须排在父类之前
EXIT_CODES: List[Tuple[Type[BaseException], int, str]] = [
    (SingularSmoother, 4, "Singular smoother"),
    (ConfigError, 2, "Configuration error"),
    (ValidationError, 2, "Configuration error"),
    (DataError, 3, "Data error"),
    (OSError, 3, "I/O error"),
    (NumericalError, 4, "Numerical failure"),
    (PlaGgmError, 1, "Estimation error"),
]

_configured = False


def _stderr_sink(message) -> None:
    # 每次写入时取当前 sys.stderr
    sys.stderr.write(message)


def configure_logging(level: str | None = None) -> None:
    """重新配置 loguru 输出 (stderr), 每个进程只配置一次"""
    global _configured
    if _configured and level is None:
        return
    logger.remove()
    logger.add(_stderr_sink, level=(level or settings.log_level).upper())
    _configured = True


def exit_code_for(exc: BaseException) -> Tuple[int, str]:
    for cls, code, label in EXIT_CODES:
        if isinstance(exc, cls):
            return code, label
    return 1, "Unexpected error"


def handle_errors(func: Callable) -> Callable:
    """把领域异常转换为命令行退出码"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except typer.Exit:
            raise
        except Exception as e:
            code, label = exit_code_for(e)
            if code == 1:
                logger.exception(f"{label} in {func.__name__}: {e}")
            else:
                logger.error(f"{label}: {e}")
            typer.echo(f"{label}: {e}", err=True)
            raise typer.Exit(code=code)

    return wrapper
