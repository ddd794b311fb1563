"""Archived estimate reports.

Every report of a run can be stored so that constants measured by
different runs (other grids, other solver settings) can be compared later.
"""

from datetime import datetime, timezone
from uuid import UUID, uuid4

from sqlmodel import Field, SQLModel

UTC = timezone.utc


class ReportRecord(SQLModel, table=True):
    """One EstimateReport, flattened.

    Attributes:
        id: Unique identifier (UUID).
        run_id: Identifier shared by the reports of one CLI invocation.
        position: Order of the report within its run.
        check: Checker name.
        params_json: The report's params as deterministic JSON.
        lhs: Left side.
        rhs_core: Right side without constant.
        constant: Empirical constant.
        passed: Checker verdict.
        h: Grid spacing.
        created_at: Insertion time (UTC).
    """

    __tablename__ = "report"

    id: UUID = Field(default_factory=uuid4, primary_key=True)
    run_id: str = Field(index=True)
    position: int = Field(default=0)
    check: str = Field(index=True)
    params_json: str
    lhs: float
    rhs_core: float
    constant: float
    passed: bool
    h: float
    created_at: datetime = Field(default_factory=lambda: datetime.now(UTC))
