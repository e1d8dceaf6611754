"""
Application bootstrap: settings, logging, replicate pool, runner.
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

from loguru import logger

from scorelab.cli.config import RunConfig
from scorelab.cli.report import RunReport
from scorelab.cli.runner import run
from scorelab.config.settings import Settings, load_settings
from scorelab.logging.setup import setup_logging
from scorelab.workers.replicate_worker import ReplicatePool


@dataclass
class Runner:
    settings: Settings
    pool: ReplicatePool

    def execute(self, config: RunConfig) -> Tuple[RunReport, int]:
        # a --jobs override gets its own pool for the run
        if config.jobs is not None and config.jobs != self.pool.jobs:
            return run(config, self.settings)
        return run(config, self.settings, self.pool)

    def close(self) -> None:
        try:
            self.pool.stop()
        except Exception as e:
            logger.warning("Replicate pool shutdown failed: {}", e)


def build_app(log_level: Optional[str] = None) -> Dict[str, Any]:
    settings = load_settings()
    setup_logging(log_level or settings.log_level, settings.app_env, settings.log_dir)

    pool = ReplicatePool(jobs=settings.jobs)
    runner = Runner(settings=settings, pool=pool)

    logger.debug("scorelab bootstrapped (env={}, jobs={})", settings.app_env, settings.jobs)
    return {
        "settings": settings,
        "pool": pool,
        "runner": runner,
    }
