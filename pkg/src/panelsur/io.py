"""File ingestion: wide panel CSV, score/event tables, and the run config.

All readers report the offending line number on rejection. CSVs must be
UTF-8 with the exact headers documented below; an empty field is a missing
cell. Decimal points only (no locale-dependent parsing); LF and CRLF both
accepted.
"""

from __future__ import annotations

import csv
import re
import warnings
from dataclasses import dataclass
from pathlib import Path

from .errors import InputError
from .panel import ModelSpec, Panel, build_panel
from .study import CrisisCalendar, ScoreRow, ScoreTable

__all__ = [
    "read_panel_csv",
    "read_scores_csv",
    "read_events_csv",
    "parse_regressor",
    "RunConfig",
    "read_config",
]

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_REGRESSOR_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\(\s*-\s*(\d+)\s*\))?\s*$")


def _rows(path: Path | str, expected_header: list[str] | None = None):
    path = Path(path)
    try:
        handle = open(path, newline="", encoding="utf-8-sig")
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc}") from exc
    with handle:
        reader = csv.reader(handle)
        try:
            rows = [(line, row) for line, row in enumerate(reader, start=1)]
        except (csv.Error, UnicodeDecodeError) as exc:
            raise InputError(f"{path}: malformed CSV: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: empty file")
    header = rows[0][1]
    if expected_header is not None and header != expected_header:
        raise InputError(
            f"{path}, line 1: header must be {','.join(expected_header)!r}, "
            f"got {','.join(header)!r}"
        )
    return path, header, rows[1:]


def _parse_int(token: str, path: Path, line: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise InputError(f"{path}, line {line}: {what} must be an integer, got {token!r}") from None


def _parse_float(token: str, path: Path, line: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise InputError(f"{path}, line {line}: {what} must be numeric, got {token!r}") from None
    if value != value or value in (float("inf"), float("-inf")):
        raise InputError(f"{path}, line {line}: {what} must be finite, got {token!r}")
    return value


def read_panel_csv(path: Path | str) -> Panel:
    """Read a wide panel CSV with header ``country,year,<var1>,<var2>,...``.

    One row per (country, year); an empty field marks a missing cell.
    """
    path, header, body = _rows(path)
    if len(header) < 3 or header[0] != "country" or header[1] != "year":
        raise InputError(
            f"{path}, line 1: header must start with 'country,year' and name "
            "at least one variable"
        )
    variables = header[2:]
    for name in variables:
        if not _NAME_RE.match(name):
            raise InputError(f"{path}, line 1: invalid variable name {name!r}")
    if len(set(variables)) != len(variables):
        raise InputError(f"{path}, line 1: duplicate variable names in header")

    records: list[tuple[str, int, str, float | None]] = []
    seen: dict[tuple[str, int], int] = {}
    for line, row in body:
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise InputError(
                f"{path}, line {line}: expected {len(header)} fields, got {len(row)}"
            )
        country = row[0].strip()
        if not country:
            raise InputError(f"{path}, line {line}: empty country code")
        year = _parse_int(row[1].strip(), path, line, "year")
        if (country, year) in seen:
            raise InputError(
                f"{path}, line {line}: duplicate row for ({country}, {year}); "
                f"first seen on line {seen[(country, year)]}"
            )
        seen[(country, year)] = line
        got_value = False
        for name, cell in zip(variables, row[2:]):
            token = cell.strip()
            if not token:
                continue
            records.append((country, year, name, _parse_float(token, path, line, name)))
            got_value = True
        if not got_value:
            # keep the (country, year) coordinates even if every cell is empty
            records.append((country, year, variables[0], None))
    if not records:
        raise InputError(f"{path}: no data rows")
    return build_panel(records)


def read_scores_csv(path: Path | str) -> ScoreTable:
    """Read an indicator score table with header ``country,indicator,score``."""
    path, _, body = _rows(path, expected_header=["country", "indicator", "score"])
    rows: list[ScoreRow] = []
    seen: set[tuple[str, str]] = set()
    for line, row in body:
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 3:
            raise InputError(f"{path}, line {line}: expected 3 fields, got {len(row)}")
        country, indicator = row[0].strip(), row[1].strip()
        if not country or not indicator:
            raise InputError(f"{path}, line {line}: empty country or indicator")
        score = _parse_float(row[2].strip(), path, line, "score")
        if not 1.0 <= score <= 7.0:
            raise InputError(
                f"{path}, line {line}: score {score} outside the 1-7 scale"
            )
        if (country, indicator) in seen:
            raise InputError(
                f"{path}, line {line}: duplicate score for ({country}, {indicator})"
            )
        seen.add((country, indicator))
        rows.append(ScoreRow(country=country, indicator=indicator, score=score))
    if not rows:
        raise InputError(f"{path}: no score rows")
    return ScoreTable(tuple(rows))


def read_events_csv(path: Path | str, horizon_end: int | None = None) -> CrisisCalendar:
    """Read crisis intervals with header ``country,start_year,end_year``.

    ``end_year`` may be the literal token ``ongoing`` for an open-ended
    interval; such intervals extend to the calendar's horizon year.
    """
    path, _, body = _rows(path, expected_header=["country", "start_year", "end_year"])
    intervals: dict[str, list[tuple[int, int | None]]] = {}
    for line, row in body:
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 3:
            raise InputError(f"{path}, line {line}: expected 3 fields, got {len(row)}")
        country = row[0].strip()
        if not country:
            raise InputError(f"{path}, line {line}: empty country code")
        start = _parse_int(row[1].strip(), path, line, "start_year")
        end_token = row[2].strip()
        if end_token == "ongoing":
            end: int | None = None
        else:
            end = _parse_int(end_token, path, line, "end_year")
            if start > end:
                raise InputError(
                    f"{path}, line {line}: inverted interval {start}-{end}"
                )
        intervals.setdefault(country, []).append((start, end))
    if not intervals:
        raise InputError(f"{path}: no event rows")
    return CrisisCalendar(
        {c: tuple(spans) for c, spans in intervals.items()}, horizon_end=horizon_end
    )


def parse_regressor(expr: str) -> tuple[str, int]:
    """Parse ``name`` or ``name(-k)`` into a (variable, lag) pair."""
    match = _REGRESSOR_RE.match(expr)
    if not match:
        raise InputError(f"malformed regressor expression {expr!r}")
    name, lag_token = match.group(1), match.group(2)
    lag_length = int(lag_token) if lag_token is not None else 0
    if lag_token is not None and lag_length == 0:
        warnings.warn(f"regressor {expr!r} has a degenerate lag of 0", stacklevel=2)
    return name, lag_length


_CONFIG_DEFAULTS = {
    "clusters": "both",
    "intercept": "yes",
    "weighting": "period-sur",
    "covariance": "pcse-period-sur",
    "dummy_variable": "dummy",
    "serial_correlation_lags": "2",
}
_REQUIRED_KEYS = ("data", "scores", "events", "indicator", "dependent", "sample")
_KNOWN_KEYS = set(_REQUIRED_KEYS) | set(_CONFIG_DEFAULTS) | {"regressor", "horizon_end"}
_BOOL_TOKENS = {"yes": True, "true": True, "no": False, "false": False}


@dataclass(frozen=True)
class RunConfig:
    """Declarative replication run: input paths plus the model description."""

    data_path: Path
    scores_path: Path
    events_path: Path
    indicator: str
    clusters: str
    dependent: str
    regressors: tuple[tuple[str, int], ...]
    include_intercept: bool
    sample: tuple[int, int]
    weighting: str
    covariance: str
    horizon_end: int | None
    dummy_variable: str
    serial_correlation_lags: int

    def model_spec(self) -> ModelSpec:
        return ModelSpec(
            dependent=self.dependent,
            regressors=self.regressors,
            sample=self.sample,
            include_intercept=self.include_intercept,
            weighting=self.weighting,
            covariance=self.covariance,
        )


def read_config(path: Path | str) -> RunConfig:
    """Parse the flat key-value run config (repeated ``regressor`` keys allowed).

    Paths are resolved relative to the config file and must exist.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc}") from exc

    values: dict[str, str] = {}
    regressors: list[tuple[str, int]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InputError(f"{path}, line {line_no}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if key not in _KNOWN_KEYS:
            raise InputError(f"{path}, line {line_no}: unknown key {key!r}")
        if not value:
            raise InputError(f"{path}, line {line_no}: empty value for {key!r}")
        if key == "regressor":
            try:
                regressors.append(parse_regressor(value))
            except InputError as exc:
                raise InputError(f"{path}, line {line_no}: {exc}") from exc
            continue
        if key in values:
            raise InputError(f"{path}, line {line_no}: duplicate key {key!r}")
        values[key] = value

    missing = [k for k in _REQUIRED_KEYS if k not in values]
    if missing:
        raise InputError(f"{path}: missing required keys: {', '.join(missing)}")
    if not regressors:
        raise InputError(f"{path}: at least one 'regressor' line is required")
    for key, default in _CONFIG_DEFAULTS.items():
        values.setdefault(key, default)

    sample_tokens = values["sample"].split()
    if len(sample_tokens) != 2:
        raise InputError(f"{path}: sample must be two years, e.g. '2004 2017'")
    try:
        sample = (int(sample_tokens[0]), int(sample_tokens[1]))
    except ValueError:
        raise InputError(f"{path}: sample years must be integers") from None

    intercept_token = values["intercept"].lower()
    if intercept_token not in _BOOL_TOKENS:
        raise InputError(f"{path}: intercept must be yes/no, got {values['intercept']!r}")
    clusters = values["clusters"].lower()
    if clusters not in ("both", "inclusive", "extractive"):
        raise InputError(f"{path}: clusters must be both/inclusive/extractive")
    weighting = values["weighting"].lower()
    if weighting not in ("none", "period-sur"):
        raise InputError(f"{path}: weighting must be none or period-sur")
    covariance = values["covariance"].lower()
    if covariance not in ("ordinary", "pcse-period-sur"):
        raise InputError(f"{path}: covariance must be ordinary or pcse-period-sur")
    if covariance == "pcse-period-sur" and weighting != "period-sur":
        raise InputError(f"{path}: pcse-period-sur covariance requires period-sur weighting")
    horizon_end = None
    if "horizon_end" in values:
        try:
            horizon_end = int(values["horizon_end"])
        except ValueError:
            raise InputError(f"{path}: horizon_end must be an integer") from None
    try:
        serial_lags = int(values["serial_correlation_lags"])
    except ValueError:
        raise InputError(f"{path}: serial_correlation_lags must be an integer") from None
    if serial_lags < 1:
        raise InputError(f"{path}: serial_correlation_lags must be >= 1")
    if not _NAME_RE.match(values["dummy_variable"]):
        raise InputError(f"{path}: invalid dummy_variable name {values['dummy_variable']!r}")

    base = path.parent
    paths = {}
    for key in ("data", "scores", "events"):
        candidate = Path(values[key])
        resolved = candidate if candidate.is_absolute() else base / candidate
        if not resolved.exists():
            raise InputError(f"{path}: {key} file not found: {resolved}")
        paths[key] = resolved

    return RunConfig(
        data_path=paths["data"],
        scores_path=paths["scores"],
        events_path=paths["events"],
        indicator=values["indicator"],
        clusters=clusters,
        dependent=values["dependent"],
        regressors=tuple(regressors),
        include_intercept=_BOOL_TOKENS[intercept_token],
        sample=sample,
        weighting=weighting,
        covariance=covariance,
        horizon_end=horizon_end,
        dummy_variable=values["dummy_variable"],
        serial_correlation_lags=serial_lags,
    )
