from app.models.archive import ReportRecord
from app.models.beta import BetaState, BetaTrace
from app.models.exponents import ExponentVector, MoserSchedule, QSequence
from app.models.problem import BoundaryData, ModelParams, SolveConfig, TrigMode
from app.models.report import EstimateReport, RefinementLevel, RefinementStudy

__all__ = [
    "BetaState",
    "BetaTrace",
    "BoundaryData",
    "EstimateReport",
    "ExponentVector",
    "ModelParams",
    "MoserSchedule",
    "QSequence",
    "RefinementLevel",
    "RefinementStudy",
    "ReportRecord",
    "SolveConfig",
    "TrigMode",
]
