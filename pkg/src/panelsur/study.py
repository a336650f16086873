"""Domain layer: institutional clustering, crisis dummies, and the two-cluster
replication pipeline.

Countries are split at the median of an institutions score into "inclusive"
(above) and "extractive" (below) groups; a crisis-event calendar becomes a
0/1 panel variable; `replicate` runs the full estimation and diagnostics
chain for each cluster and packages the outcome in a `ReportBundle`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

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
from .errors import PanelSurError, SpecificationError
from .estimators import EstimationResult, estimate, fixed_effects, ols, random_effects
from .numerics import pearson
from .panel import DesignMatrix, ModelSpec, Panel, assemble, build_panel, subset

if TYPE_CHECKING:
    from .io import RunConfig

__all__ = [
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
]

INCLUSIVE = "inclusive"
EXTRACTIVE = "extractive"


@dataclass(frozen=True)
class ScoreRow:
    country: str
    indicator: str
    score: float
    world_rank: int | None = None
    eu_rank: int | None = None


@dataclass(frozen=True)
class ScoreTable:
    """Country scores on the 1-7 survey scale, one row per (country, indicator)."""

    rows: tuple[ScoreRow, ...]

    def __post_init__(self) -> None:
        seen: set[tuple[str, str]] = set()
        for row in self.rows:
            if not 1.0 <= row.score <= 7.0:
                raise SpecificationError(
                    f"score {row.score!r} for {row.country} outside the 1-7 scale"
                )
            key = (row.country, row.indicator)
            if key in seen:
                raise SpecificationError(f"duplicate score row for {key}")
            seen.add(key)

    def indicators(self) -> tuple[str, ...]:
        out: list[str] = []
        for row in self.rows:
            if row.indicator not in out:
                out.append(row.indicator)
        return tuple(out)

    def scores_for(self, indicator: str) -> dict[str, float]:
        found = {r.country: r.score for r in self.rows if r.indicator == indicator}
        if not found:
            raise SpecificationError(f"no scores for indicator {indicator!r}")
        return found


@dataclass(frozen=True)
class ClusterAssignment:
    """Median split of the scored countries for one indicator."""

    indicator: str
    median: float
    inclusive: frozenset[str]
    extractive: frozenset[str]

    def members(self, label: str) -> frozenset[str]:
        if label == INCLUSIVE:
            return self.inclusive
        if label == EXTRACTIVE:
            return self.extractive
        raise SpecificationError(f"unknown cluster label {label!r}")


@dataclass(frozen=True)
class CrisisCalendar:
    """Per-country crisis intervals; an end year of None means open-ended."""

    intervals: dict[str, tuple[tuple[int, int | None], ...]]
    horizon_end: int | None = None

    def __post_init__(self) -> None:
        for country, spans in self.intervals.items():
            for start, end in spans:
                if end is not None and start > end:
                    raise SpecificationError(
                        f"inverted interval {start}-{end} for {country}"
                    )

    def with_horizon(self, year: int) -> "CrisisCalendar":
        return CrisisCalendar(self.intervals, horizon_end=year)

    def countries(self) -> tuple[str, ...]:
        return tuple(self.intervals)


@dataclass(frozen=True)
class DriftReport:
    """How an alternative clustering compares with the main one."""

    category: int  # 1 identical, 2 similar, 3 significantly different
    label: str
    departures: tuple[str, ...]  # left the inclusive set
    arrivals: tuple[str, ...]  # entered the inclusive set
    replacements: tuple[tuple[str, str], ...]


def median_cluster(scores: ScoreTable, indicator: str) -> ClusterAssignment:
    """Split countries at the median score: above goes inclusive, below extractive.

    The median is the middle value for an odd count, the mean of the two
    middle values for an even count; it is never rounded except for display.
    A country tied exactly at the median goes to the extractive group with a
    prominent warning.
    """
    table = scores.scores_for(indicator)
    if len(table) < 2:
        raise SpecificationError("clustering needs at least 2 scored countries")
    ordered = sorted(table.values())
    n = len(ordered)
    if n % 2:
        median = float(ordered[n // 2])
    else:
        median = 0.5 * (ordered[n // 2 - 1] + ordered[n // 2])
    inclusive = {c for c, s in table.items() if s > median}
    extractive = {c for c, s in table.items() if s < median}
    ties = sorted(set(table) - inclusive - extractive)
    if ties:
        warnings.warn(
            f"countries tied at the median {median!r} assigned to the extractive "
            f"cluster: {', '.join(ties)}",
            stacklevel=2,
        )
        extractive.update(ties)
    return ClusterAssignment(
        indicator=indicator,
        median=median,
        inclusive=frozenset(inclusive),
        extractive=frozenset(extractive),
    )


def subindicator_drift(
    main: ClusterAssignment, alt: ClusterAssignment
) -> DriftReport:
    """Classify how far an alternative clustering drifts from the main one.

    Zero departures from the inclusive set is "identical", one or two is
    "similar", three or more is "significantly different".
    """
    if main.inclusive | main.extractive != alt.inclusive | alt.extractive:
        raise SpecificationError("clusterings cover different country universes")
    departures = tuple(sorted(main.inclusive - alt.inclusive))
    arrivals = tuple(sorted(alt.inclusive - main.inclusive))
    moves = len(departures)
    if moves == 0:
        category, label = 1, "identical"
    elif moves <= 2:
        category, label = 2, "similar"
    else:
        category, label = 3, "significantly different"
    replacements = tuple(zip(departures, arrivals))
    return DriftReport(category, label, departures, arrivals, replacements)


def crisis_dummy(calendar: CrisisCalendar, country: str, year: int) -> int:
    """1 if the year falls inside any crisis interval of the country, else 0.

    Interval endpoints are inclusive; open-ended intervals extend to the
    calendar's horizon year.
    """
    if country not in calendar.intervals:
        raise SpecificationError(f"country {country!r} not in the crisis calendar")
    for start, end in calendar.intervals[country]:
        if end is None:
            if calendar.horizon_end is None:
                raise SpecificationError(
                    f"open-ended interval for {country} needs a horizon year"
                )
            end = calendar.horizon_end
        if start <= year <= end:
            return 1
    return 0


def add_crisis_dummy(panel: Panel, calendar: CrisisCalendar, name: str = "dummy") -> Panel:
    """Materialize the crisis dummy as a panel variable for every cell.

    Generating the dummy before assembly makes listwise deletion treat it
    like any other regressor.
    """
    if name in panel.data:
        raise SpecificationError(f"panel already has a variable named {name!r}")
    rows = [
        (entity, year, name, float(crisis_dummy(calendar, entity, year)))
        for entity in panel.entities
        for year in panel.periods
    ]
    dummy_only = build_panel(rows)
    data = dict(panel.data)
    data[name] = dummy_only.data[name]
    return Panel(panel.entities, panel.periods, data)


@dataclass(frozen=True)
class ModelReport:
    """Everything estimated for one cluster's model."""

    label: str
    dependent: str
    spec: ModelSpec
    design: DesignMatrix
    result: EstimationResult
    tests: tuple[TestResult, ...]
    correlations: tuple[tuple[str, str, float], ...]


@dataclass(frozen=True)
class ReportBundle:
    """Output of a full replication run over one or both clusters."""

    indicator: str
    assignment: ClusterAssignment
    horizon_end: int
    models: tuple[ModelReport, ...]
    warnings: tuple[str, ...] = ()


def _stage(label: str, stage: str):
    class _Context:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and isinstance(exc, PanelSurError):
                raise type(exc)(f"{label} cluster, {stage}: {exc}") from exc
            return False

    return _Context()


def _diagnostics_battery(
    dm: DesignMatrix, result: EstimationResult, label: str, serial_lags: int
) -> tuple[TestResult, ...]:
    tests: list[TestResult] = []
    with _stage(label, "redundant fixed effects test"):
        pooled = ols(dm)
        fe = fixed_effects(dm)
        tests.append(redundant_fixed_effects(pooled, fe))
    with _stage(label, "Hausman test"):
        re = random_effects(dm)
        tests.append(hausman(fe, re))
    residuals = result.residuals_unweighted
    with _stage(label, "normality test"):
        tests.append(jarque_bera(residuals))
    with _stage(label, "cross-section dependence tests"):
        tests.append(breusch_pagan_cd(residuals, dm.obs_index))
        tests.append(pesaran_cd(residuals, dm.obs_index))
    with _stage(label, "heteroskedasticity test"):
        tests.append(bpg_heteroskedasticity(result, dm))
    with _stage(label, "serial correlation test"):
        tests.append(breusch_godfrey(result, dm, serial_lags))
    with _stage(label, "multicollinearity screen"):
        tests.append(multicollinearity_screen(dm, result))
    return tuple(tests)


def _correlations(
    panel: Panel, dependent: str, spec: ModelSpec
) -> tuple[tuple[str, str, float], ...]:
    """Pooled correlations of the dependent with each regressor source series."""
    out: list[tuple[str, str, float]] = []
    dep = panel.data[dependent]
    seen: set[str] = set()
    for name, _ in spec.regressors:
        if name in seen or name == dependent:
            continue
        seen.add(name)
        other = panel.data[name]
        mask = ~(np.isnan(dep) | np.isnan(other))
        out.append((dependent, name, pearson(dep[mask], other[mask])))
    return tuple(out)


def replicate(
    config: "RunConfig",
    *,
    panel: Panel | None = None,
    scores: ScoreTable | None = None,
    calendar: CrisisCalendar | None = None,
) -> ReportBundle:
    """Run the end-to-end two-cluster pipeline described by a run config.

    Clusters countries at the indicator median, injects the crisis dummy,
    assembles each cluster's sample, estimates the configured model, runs the
    diagnostics battery, and computes the pooled correlation table. Inputs
    not supplied are loaded from the config's paths.
    """
    from . import io as _io  # deferred: io depends on the types defined here

    if panel is None:
        panel = _io.read_panel_csv(config.data_path)
    if scores is None:
        scores = _io.read_scores_csv(config.scores_path)
    if calendar is None:
        calendar = _io.read_events_csv(config.events_path)

    horizon = config.horizon_end if config.horizon_end is not None else panel.periods[-1]
    calendar = calendar.with_horizon(horizon)
    assignment = median_cluster(scores, config.indicator)

    labels = (
        (INCLUSIVE, EXTRACTIVE) if config.clusters == "both" else (config.clusters,)
    )
    run_warnings: list[str] = []
    models: list[ModelReport] = []
    for label in labels:
        members = assignment.members(label)
        present = [e for e in panel.entities if e in members]
        absent = sorted(members - set(present))
        if absent:
            message = (
                f"{label} cluster: no panel data for {', '.join(absent)}; "
                "estimating on the remaining countries"
            )
            warnings.warn(message, stacklevel=2)
            run_warnings.append(message)
        with _stage(label, "sample construction"):
            cluster_panel = subset(panel, present)
            cluster_panel = add_crisis_dummy(
                cluster_panel, calendar, config.dummy_variable
            )
            spec = config.model_spec()
            dm = assemble(cluster_panel, spec)
        with _stage(label, "estimation"):
            result = estimate(dm, weighting=spec.weighting, covariance=spec.covariance)
        tests = _diagnostics_battery(dm, result, label, config.serial_correlation_lags)
        with _stage(label, "correlation table"):
            correlations = _correlations(cluster_panel, spec.dependent, spec)
        models.append(
            ModelReport(
                label=label,
                dependent=spec.dependent,
                spec=spec,
                design=dm,
                result=result,
                tests=tests,
                correlations=correlations,
            )
        )
    return ReportBundle(
        indicator=config.indicator,
        assignment=assignment,
        horizon_end=horizon,
        models=tuple(models),
        warnings=tuple(run_warnings),
    )
