from typing import List, Optional

from pydantic import BaseModel, Field

from .enums import CheckStatus, ChecklistRule, ExistenceVerdict


class ExistenceReport(BaseModel):
    """Outcome of the existence checklist run before sampling."""

    verdict: ExistenceVerdict
    matched_rule: Optional[ChecklistRule] = None
    assumption1: CheckStatus = CheckStatus.NOT_NEEDED
    assumption2_proxy: CheckStatus = CheckStatus.NOT_NEEDED
    notes: List[str] = Field(default_factory=list)

    @property
    def guaranteed(self) -> bool:
        return self.verdict != ExistenceVerdict.NOT_GUARANTEED


class CheckOutcome(BaseModel):
    status: CheckStatus
    notes: List[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status == CheckStatus.PASS
