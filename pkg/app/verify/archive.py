"""Storing and reading back estimate reports in the SQLite archive."""
import logging
import uuid

from sqlmodel import Session, select

from app.models.archive import ReportRecord
from app.models.report import EstimateReport
from app.verify.export import dumps

logger = logging.getLogger(__name__)


def new_run_id() -> str:
    return uuid.uuid4().hex


def archive_reports(session: Session, reports: list[EstimateReport], run_id: str) -> list[ReportRecord]:
    """Insert one record per report under ``run_id`` and commit."""
    records = [
        ReportRecord(
            run_id=run_id,
            position=position,
            check=r.check,
            params_json=dumps({k: r.params[k] for k in sorted(r.params)}),
            lhs=r.lhs,
            rhs_core=r.rhs_core,
            constant=r.constant,
            passed=r.passed,
            h=r.h,
        )
        for position, r in enumerate(reports)
    ]
    session.add_all(records)
    session.commit()
    for record in records:
        session.refresh(record)
    logger.info(f"archived {len(records)} reports under run {run_id}")
    return records


def load_reports(session: Session, run_id: str) -> list[ReportRecord]:
    """Records of one run in insertion order."""
    statement = (
        select(ReportRecord)
        .where(ReportRecord.run_id == run_id)
        .order_by(ReportRecord.position)
    )
    return list(session.exec(statement).all())
