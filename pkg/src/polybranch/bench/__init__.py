from .fileformat import ProblemParseError, parse_problem, read_problem, write_problem
from .generator import gen_instance
from .metrics import MetricTable, RunRow, aggregate, geo_mean, pace_lb, performance_profile
from .report import ReportFormatError, read_report, write_report

__all__ = [
    "MetricTable",
    "ProblemParseError",
    "ReportFormatError",
    "RunRow",
    "aggregate",
    "gen_instance",
    "geo_mean",
    "pace_lb",
    "parse_problem",
    "performance_profile",
    "read_problem",
    "read_report",
    "write_problem",
    "write_report",
]
