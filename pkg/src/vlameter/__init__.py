"""Uncertainty and quality metrics engine for robot-manipulation traces."""

from .backend import active_backend_name, available_backends, get_backend
from .model import (
    ObjectDecl,
    ObjectRole,
    Outcome,
    Pose,
    RunTrace,
    StepRecord,
    Task,
    TokenDistribution,
    TraceError,
    TraceHeader,
)
from .oracle import derive_grasped, success_oracle
from .quality import (
    compute_all_series,
    ot,
    ot_distance,
    summarize_run,
    tcp_ai,
    tcp_pi,
    tcp_vi,
    ti,
)
from .series import METRIC_IDS, MetricSeries, RunSummary, SeriesUndefinedError
from .stats import (
    AgreementResult,
    CorrelationResult,
    EffectResult,
    cohen_kappa,
    mann_whitney_u,
    spearman,
    vargha_delaney,
)
from .synth import Profile, generate_synthetic
from .traceio import load_trace, write_trace
from .uncertainty import a_ai, a_pi, a_vi, ev, tb_d, tb_e, tb_pcs, tb_tp

__version__ = "0.1.0"

__all__ = [
    "METRIC_IDS",
    "AgreementResult",
    "CorrelationResult",
    "EffectResult",
    "MetricSeries",
    "ObjectDecl",
    "ObjectRole",
    "Outcome",
    "Pose",
    "Profile",
    "RunSummary",
    "RunTrace",
    "SeriesUndefinedError",
    "StepRecord",
    "Task",
    "TokenDistribution",
    "TraceError",
    "TraceHeader",
    "a_ai",
    "a_pi",
    "a_vi",
    "active_backend_name",
    "available_backends",
    "cohen_kappa",
    "compute_all_series",
    "derive_grasped",
    "ev",
    "generate_synthetic",
    "get_backend",
    "load_trace",
    "mann_whitney_u",
    "ot",
    "ot_distance",
    "spearman",
    "success_oracle",
    "summarize_run",
    "tb_d",
    "tb_e",
    "tb_pcs",
    "tb_tp",
    "tcp_ai",
    "tcp_pi",
    "tcp_vi",
    "ti",
    "vargha_delaney",
    "write_trace",
]
