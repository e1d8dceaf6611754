"""
Runtime configuration loader (environment / .env).
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional
import os

from dotenv import load_dotenv


@dataclass(frozen=True)
class Settings:
    app_env: str
    log_level: str
    log_dir: Optional[Path]

    seed: Optional[int]
    jobs: int

    # Quadrature over observations / posterior
    grid_points: int
    grid_halfwidth: float
    posterior_points: int

    # Optimizer
    max_iterations: int
    tolerance: float


def _int(value: str, default: int) -> int:
    try:
        return int(str(value).strip())
    except Exception:
        return default


def _float(value: str, default: float) -> float:
    try:
        return float(str(value).strip())
    except Exception:
        return default


def _optional_int(value: Optional[str]) -> Optional[int]:
    if value is None or not str(value).strip():
        return None
    try:
        return int(str(value).strip())
    except Exception:
        return None


def load_settings() -> Settings:
    load_dotenv()

    log_dir = os.getenv("SCORELAB_LOG_DIR", "").strip()

    return Settings(
        app_env=os.getenv("SCORELAB_ENV", "dev"),
        log_level=os.getenv("SCORELAB_LOG_LEVEL", "INFO"),
        log_dir=Path(log_dir) if log_dir else None,

        seed=_optional_int(os.getenv("SCORELAB_SEED")),
        jobs=max(1, _int(os.getenv("SCORELAB_JOBS", str(os.cpu_count() or 1)), os.cpu_count() or 1)),

        grid_points=_int(os.getenv("SCORELAB_GRID_POINTS", "1601"), 1601),
        grid_halfwidth=_float(os.getenv("SCORELAB_GRID_HALFWIDTH", "8.0"), 8.0),
        posterior_points=_int(os.getenv("SCORELAB_POSTERIOR_POINTS", "201"), 201),

        max_iterations=_int(os.getenv("SCORELAB_MAX_ITERATIONS", "10000"), 10000),
        tolerance=_float(os.getenv("SCORELAB_TOLERANCE", "1e-10"), 1e-10),
    )
