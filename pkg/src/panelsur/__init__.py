"""Panel EGLS (Period SUR) estimation engine with PCSE, a diagnostics
battery, institutional median clustering, crisis-event dummies, and a
replication CLI."""

from .diagnostics import (
    TestResult,
    bpg_heteroskedasticity,
    breusch_godfrey,
    breusch_pagan_cd,
    hausman,
    jarque_bera,
    multicollinearity_screen,
    pesaran_cd,
    redundant_fixed_effects,
)
from .errors import EstimationError, InputError, PanelSurError, SpecificationError
from .estimators import (
    EstimationResult,
    FitStats,
    PeriodCovariance,
    durbin_watson,
    egls_period_sur,
    estimate,
    estimate_period_omega,
    fixed_effects,
    ols,
    pcse_covariance,
    random_effects,
)
from .io import (
    RunConfig,
    parse_regressor,
    read_config,
    read_events_csv,
    read_panel_csv,
    read_scores_csv,
)
from .numerics import chi2_sf, f_sf, inverse_sqrt, normal_cdf, pearson, spd_solve, t_sf
from .panel import DesignMatrix, ModelSpec, Panel, assemble, build_panel, lag, subset
from .report import bundle_to_dict, emit_report
from .study import (
    ClusterAssignment,
    CrisisCalendar,
    DriftReport,
    ModelReport,
    ReportBundle,
    ScoreRow,
    ScoreTable,
    add_crisis_dummy,
    crisis_dummy,
    median_cluster,
    replicate,
    subindicator_drift,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "PanelSurError",
    "InputError",
    "SpecificationError",
    "EstimationError",
    "Panel",
    "ModelSpec",
    "DesignMatrix",
    "build_panel",
    "lag",
    "subset",
    "assemble",
    "spd_solve",
    "inverse_sqrt",
    "chi2_sf",
    "f_sf",
    "t_sf",
    "normal_cdf",
    "pearson",
    "FitStats",
    "EstimationResult",
    "PeriodCovariance",
    "ols",
    "fixed_effects",
    "random_effects",
    "estimate_period_omega",
    "egls_period_sur",
    "pcse_covariance",
    "durbin_watson",
    "estimate",
    "TestResult",
    "redundant_fixed_effects",
    "hausman",
    "jarque_bera",
    "breusch_pagan_cd",
    "pesaran_cd",
    "bpg_heteroskedasticity",
    "breusch_godfrey",
    "multicollinearity_screen",
    "ScoreRow",
    "ScoreTable",
    "ClusterAssignment",
    "CrisisCalendar",
    "DriftReport",
    "ModelReport",
    "ReportBundle",
    "median_cluster",
    "subindicator_drift",
    "crisis_dummy",
    "add_crisis_dummy",
    "replicate",
    "RunConfig",
    "read_panel_csv",
    "read_scores_csv",
    "read_events_csv",
    "parse_regressor",
    "read_config",
    "emit_report",
    "bundle_to_dict",
]
