"""
Run manifests: what was run, with which parameters, and which files it produced.

A manifest can be passed back to ``asgem simulate --config`` to replay a run.
"""

import json
import logging
import os
import tempfile
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, List

from pydantic import BaseModel, Field, ValidationError

from errors import ConfigError

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def package_version() -> str:
    try:
        return metadata.version("asgem")
    except metadata.PackageNotFoundError:
        return "unknown"


class RunManifest(BaseModel):
    command: str
    config: Dict[str, Any] = Field(default_factory=dict)
    outputs: List[str] = Field(default_factory=list)
    version: str = Field(default_factory=package_version)
    timestamp: str = Field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    def write(self, out_dir: Path) -> Path:
        """Write manifest.json into out_dir atomically"""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        target = out_dir / MANIFEST_NAME
        fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=".manifest.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(self.model_dump_json(indent=2))
                handle.write("\n")
            os.replace(tmp, target)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        logger.debug(f"Wrote manifest {target}")
        return target

    @classmethod
    def load(cls, path: Path) -> "RunManifest":
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_NAME
        try:
            return cls.model_validate(json.loads(path.read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError, ValidationError) as e:
            raise ConfigError(f"cannot read run manifest {path}: {e}") from e
