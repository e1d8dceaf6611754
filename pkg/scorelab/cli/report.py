"""
Run reports: one JSON document per run, the single point of output.

Floats are written with Python's shortest round-trip repr (at most 17 significant digits), so
json.loads recovers every number bit for bit. Keys are sorted; only `wall_clock_seconds`
varies between identical runs.
"""

from dataclasses import dataclass, field
from enum import Enum
import json
from pathlib import Path
from typing import Any, Dict, Optional

import click
import numpy as np
from loguru import logger

from scorelab import __version__


def plain(value: Any) -> Any:
    """Convert numpy values, tuples, paths and result objects into JSON-native types."""
    if hasattr(value, "to_dict"):
        return plain(value.to_dict())
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return plain(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    return value


@dataclass
class RunReport:
    command: str
    config: Dict[str, Any]
    inputs: Dict[str, Any] = field(default_factory=dict)
    results: Dict[str, Any] = field(default_factory=dict)
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    status: str = "ok"
    error: Optional[Dict[str, Any]] = None
    wall_clock_seconds: float = 0.0
    version: str = __version__

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs,
            "results": self.results,
            "diagnostics": self.diagnostics,
            "status": self.status,
            "error": self.error,
            "wall_clock_seconds": self.wall_clock_seconds,
            "version": self.version,
        }

    def to_json(self) -> str:
        return json.dumps(plain(self.to_dict()), sort_keys=True, indent=2) + "\n"


def write_report(report: RunReport, out: Optional[Path] = None) -> str:
    text = report.to_json()
    if out is None:
        click.echo(text, nl=False)
        return text
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    logger.info("Report written to {}", out)
    return text


def read_report(path: Path) -> Dict[str, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))
