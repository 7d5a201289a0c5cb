from loguru import logger

from plaggm.cli.app import app
from plaggm.cli.handlers import configure_logging
from plaggm.config import settings


def main() -> None:
    """命令行入口"""
    configure_logging(settings.log_level)
    logger.debug(f"Starting plaggm with max_workers={settings.max_workers}")
    app()


if __name__ == "__main__":
    main()
