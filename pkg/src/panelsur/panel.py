"""Country-by-year panel storage, lagging, and design-matrix assembly.

A `Panel` is a rectangular (entity x year) store for named annual series with
holes allowed. `assemble` turns a panel plus a declarative `ModelSpec` into a
stacked `DesignMatrix` using listwise deletion, with rows ordered entity-major
then year-minor so per-entity covariance blocks stay contiguous.

All three types are immutable after construction and safe to share across
threads; every operation here is a pure function.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import SpecificationError

__all__ = [
    "Panel",
    "ModelSpec",
    "DesignMatrix",
    "build_panel",
    "lag",
    "subset",
    "assemble",
    "regressor_label",
    "INTERCEPT_NAME",
]

INTERCEPT_NAME = "C"


def regressor_label(name: str, lag_length: int) -> str:
    """Display/column label for a regressor, e.g. ``youth(-1)``."""
    return f"{name}(-{lag_length})" if lag_length else name


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Panel:
    """Immutable rectangular observation store, NaN marking a missing cell."""

    entities: tuple[str, ...]
    periods: tuple[int, ...]
    data: dict[str, np.ndarray] = field(repr=False)  # var -> (n_entities, n_periods)

    def __post_init__(self) -> None:
        if len(set(self.entities)) != len(self.entities):
            raise SpecificationError("entity codes must be unique")
        if len(set(self.variables)) != len(self.variables):
            raise SpecificationError("variable names must be unique")
        expected = tuple(range(self.periods[0], self.periods[-1] + 1)) if self.periods else ()
        if self.periods != expected:
            raise SpecificationError("periods must be contiguous increasing integers")
        shape = (len(self.entities), len(self.periods))
        for name, arr in self.data.items():
            if arr.shape != shape:
                raise SpecificationError(f"variable {name!r} has shape {arr.shape}, expected {shape}")

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(self.data)

    def entity_row(self, entity: str) -> int:
        try:
            return self.entities.index(entity)
        except ValueError:
            raise SpecificationError(f"unknown entity {entity!r}") from None

    def period_col(self, year: int) -> int:
        if not self.periods or year < self.periods[0] or year > self.periods[-1]:
            raise SpecificationError(f"year {year} outside panel range {self.periods[0]}..{self.periods[-1]}")
        return year - self.periods[0]

    def series(self, entity: str, variable: str) -> np.ndarray:
        """One entity's series for a variable (NaN where missing)."""
        if variable not in self.data:
            raise SpecificationError(f"unknown variable {variable!r}")
        return self.data[variable][self.entity_row(entity)]

    def value(self, entity: str, year: int, variable: str) -> float | None:
        """Cell lookup; None when the cell is missing."""
        cell = float(self.series(entity, variable)[self.period_col(year)])
        return None if np.isnan(cell) else cell

    def n_cells(self) -> int:
        """Number of populated cells over all variables."""
        return int(sum(np.count_nonzero(~np.isnan(a)) for a in self.data.values()))


def build_panel(rows: Iterable[tuple[str, int, str, float | None]]) -> Panel:
    """Build a panel from (entity, year, variable, value) records.

    The year range is the min..max of the input; unobserved cells stay
    missing. A value of None marks an explicitly missing cell. Re-inserting
    an identical value is idempotent; a conflicting duplicate is rejected.
    """
    records = list(rows)
    if not records:
        raise SpecificationError("cannot build a panel from zero rows")
    entities: list[str] = []
    variables: list[str] = []
    years: list[int] = []
    for entity, year, variable, value in records:
        if not isinstance(year, int) or isinstance(year, bool):
            raise SpecificationError(f"year must be an integer, got {year!r}")
        if value is not None and not np.isfinite(value):
            raise SpecificationError(
                f"value for ({entity}, {year}, {variable}) must be finite or None, got {value!r}"
            )
        if entity not in entities:
            entities.append(entity)
        if variable not in variables:
            variables.append(variable)
        years.append(year)
    entities.sort()
    periods = tuple(range(min(years), max(years) + 1))
    shape = (len(entities), len(periods))
    data = {v: np.full(shape, np.nan) for v in variables}
    entity_pos = {e: i for i, e in enumerate(entities)}
    for entity, year, variable, value in records:
        if value is None:
            continue
        i = entity_pos[entity]
        j = year - periods[0]
        current = data[variable][i, j]
        if not np.isnan(current) and current != float(value):
            raise SpecificationError(
                f"conflicting duplicate for ({entity}, {year}, {variable}): "
                f"{current!r} vs {float(value)!r}"
            )
        data[variable][i, j] = float(value)
    return Panel(tuple(entities), periods, {v: _freeze(a) for v, a in data.items()})


def lag(panel: Panel, variable: str, k: int) -> Panel:
    """Add ``variable(-k)`` whose value at (i, t) is the source at (i, t - k).

    The first ``k`` periods of each entity are missing for the new variable;
    the source series is untouched.
    """
    if variable not in panel.data:
        raise SpecificationError(f"unknown variable {variable!r}")
    if not isinstance(k, int) or k < 1:
        raise SpecificationError(f"lag length must be a positive integer, got {k!r}")
    new_name = regressor_label(variable, k)
    if new_name in panel.data:
        raise SpecificationError(f"variable {new_name!r} already exists")
    source = panel.data[variable]
    shifted = np.full_like(source, np.nan)
    if k < source.shape[1]:
        shifted[:, k:] = source[:, :-k]
    data = dict(panel.data)
    data[new_name] = _freeze(shifted)
    return Panel(panel.entities, panel.periods, data)


def subset(panel: Panel, entities: Sequence[str]) -> Panel:
    """Restrict a panel to the given entities (panel order preserved)."""
    keep = [e for e in panel.entities if e in set(entities)]
    if not keep:
        raise SpecificationError("entity subset is empty")
    rows = [panel.entities.index(e) for e in keep]
    data = {v: _freeze(a[rows].copy()) for v, a in panel.data.items()}
    return Panel(tuple(keep), panel.periods, data)


@dataclass(frozen=True)
class ModelSpec:
    """Declarative regression description.

    ``regressors`` is an ordered list of (variable, lag) pairs; ``sample`` is
    the requested (first_year, last_year) window before lag adjustment.
    """

    dependent: str
    regressors: tuple[tuple[str, int], ...]
    sample: tuple[int, int]
    include_intercept: bool = True
    weighting: str = "none"  # none | period-sur
    covariance: str = "ordinary"  # ordinary | pcse-period-sur

    def __post_init__(self) -> None:
        object.__setattr__(self, "regressors", tuple((str(n), int(k)) for n, k in self.regressors))
        if not self.regressors:
            raise SpecificationError("model needs at least one regressor")
        if len(set(self.regressors)) != len(self.regressors):
            raise SpecificationError("duplicate regressor in model")
        for name, k in self.regressors:
            if k < 0:
                raise SpecificationError(f"regressor {name!r} has negative lag {k}")
            if name == self.dependent and k == 0:
                raise SpecificationError("dependent variable cannot appear as a lag-0 regressor")
        if self.sample[0] > self.sample[1]:
            raise SpecificationError(f"sample window {self.sample} is inverted")
        if self.weighting not in ("none", "period-sur"):
            raise SpecificationError(f"unknown weighting {self.weighting!r}")
        if self.covariance not in ("ordinary", "pcse-period-sur"):
            raise SpecificationError(f"unknown covariance {self.covariance!r}")
        if self.covariance == "pcse-period-sur" and self.weighting != "period-sur":
            raise SpecificationError("pcse-period-sur covariance requires period-sur weighting")

    @property
    def max_lag(self) -> int:
        return max(k for _, k in self.regressors)

    def column_names(self) -> tuple[str, ...]:
        names = [regressor_label(n, k) for n, k in self.regressors]
        if self.include_intercept:
            names = [INTERCEPT_NAME] + names
        return tuple(names)


@dataclass(frozen=True)
class DesignMatrix:
    """Stacked estimation sample with listwise deletion already applied."""

    y: np.ndarray
    x: np.ndarray
    columns: tuple[str, ...]
    obs_index: tuple[tuple[str, int], ...]
    entity_blocks: tuple[tuple[str, int, int], ...]  # (entity, start, stop)
    years: tuple[int, ...]  # distinct years present, ascending
    sample: tuple[int, int]  # adjusted window actually used
    has_intercept: bool
    balanced: bool

    @property
    def n_obs(self) -> int:
        return int(self.y.shape[0])

    @property
    def k_params(self) -> int:
        return int(self.x.shape[1])

    @property
    def n_entities(self) -> int:
        return len(self.entity_blocks)

    def block_rows(self, entity: str) -> slice:
        for name, start, stop in self.entity_blocks:
            if name == entity:
                return slice(start, stop)
        raise SpecificationError(f"entity {entity!r} not in design matrix")


def assemble(panel: Panel, spec: ModelSpec) -> DesignMatrix:
    """Stack the estimation sample for a model specification.

    Rows are exactly the (entity, year) pairs inside the sample window where
    the dependent and every (lagged) regressor are present. The intercept
    column of ones comes first when requested.
    """
    missing = [v for v in {spec.dependent, *(n for n, _ in spec.regressors)} if v not in panel.data]
    if missing:
        raise SpecificationError(f"model variables not in panel: {sorted(missing)}")

    first = max(spec.sample[0], panel.periods[0])
    last = min(spec.sample[1], panel.periods[-1])
    if first > last:
        raise SpecificationError(
            f"sample window {spec.sample} excludes all panel years "
            f"{panel.periods[0]}..{panel.periods[-1]}"
        )

    dep = panel.data[spec.dependent]
    reg_arrays = []
    for name, k in spec.regressors:
        source = panel.data[name]
        if k == 0:
            reg_arrays.append(source)
        else:
            shifted = np.full_like(source, np.nan)
            if k < source.shape[1]:
                shifted[:, k:] = source[:, :-k]
            reg_arrays.append(shifted)

    cols = [panel.period_col(yr) for yr in range(first, last + 1)]
    stack = np.stack([dep] + reg_arrays)  # (1 + n_reg, E, T)
    usable = ~np.isnan(stack).any(axis=0)  # (E, T)

    rows_y: list[float] = []
    rows_x: list[list[float]] = []
    obs_index: list[tuple[str, int]] = []
    entity_blocks: list[tuple[str, int, int]] = []
    year_sets: list[frozenset[int]] = []
    for i, entity in enumerate(panel.entities):
        start = len(obs_index)
        years_i = []
        for j in cols:
            if not usable[i, j]:
                continue
            year = panel.periods[0] + j
            rows_y.append(float(dep[i, j]))
            rows_x.append([float(a[i, j]) for a in reg_arrays])
            obs_index.append((entity, year))
            years_i.append(year)
        if years_i:
            entity_blocks.append((entity, start, len(obs_index)))
            year_sets.append(frozenset(years_i))

    n = len(obs_index)
    if n == 0:
        raise SpecificationError("zero usable observations after listwise deletion")
    x = np.asarray(rows_x, dtype=float)
    if spec.include_intercept:
        x = np.column_stack([np.ones(n), x])
    k = x.shape[1]
    if k >= n:
        raise SpecificationError(
            f"{k} parameters with only {n} observations: rank-deficient by construction"
        )
    years = tuple(sorted({yr for _, yr in obs_index}))
    balanced = all(ys == frozenset(years) for ys in year_sets)
    return DesignMatrix(
        y=_freeze(np.asarray(rows_y, dtype=float)),
        x=_freeze(x),
        columns=spec.column_names(),
        obs_index=tuple(obs_index),
        entity_blocks=tuple(entity_blocks),
        years=years,
        sample=(years[0], years[-1]),
        has_intercept=spec.include_intercept,
        balanced=balanced,
    )
