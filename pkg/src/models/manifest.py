from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from .existence import ExistenceReport


class RunManifest(BaseModel):
    """Everything needed to re-run a command: config echo, seeds, version and timings."""

    command: str
    version: str
    config: Dict[str, Any] = Field(default_factory=dict)
    config_digest: str = ""
    seeds: Dict[str, int] = Field(default_factory=dict)
    started_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    wall_seconds: float = 0.0
    timings: Dict[str, float] = Field(default_factory=dict, description="Seconds per stage.")
    existence: Optional[ExistenceReport] = None
    outputs: List[str] = Field(default_factory=list)
    notes: List[str] = Field(default_factory=list)
