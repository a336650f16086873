"""Rendering of a `ReportBundle` as fixed-layout text or structured JSON.

Text mode mirrors the familiar regression-printout layout with 6-decimal
fixed formatting; JSON mode carries the same content with stable field names
and full-precision numbers (NaN rendered as null).
"""

from __future__ import annotations

import json
import math

from .errors import InputError
from .estimators import EstimationResult, FitStats
from .study import ModelReport, ReportBundle

__all__ = ["emit_report", "bundle_to_dict"]

_TEST_TITLES = {
    "redundant-fixed-effects": "Redundant fixed effects (likelihood ratio)",
    "hausman": "Hausman (fixed vs random effects)",
    "jarque-bera": "Jarque-Bera normality",
    "breusch-pagan-cd": "Breusch-Pagan cross-section dependence",
    "pesaran-cd": "Pesaran CD cross-section dependence",
    "bpg-heteroskedasticity": "Breusch-Pagan-Godfrey heteroskedasticity",
    "breusch-godfrey": "Breusch-Godfrey serial correlation",
    "multicollinearity-screen": "Multicollinearity screen (max |corr|)",
}

_COVARIANCE_TITLES = {
    "pcse-period-sur": "Period SUR (PCSE) standard errors & covariance (d.f. corrected)",
    "ordinary": "Ordinary standard errors & covariance",
}

_METHOD_TITLES = {
    "egls-period-sur": "Panel EGLS (Period SUR)",
    "pooled-ols": "Panel Least Squares",
}


def _fmt(value: float) -> str:
    if value is None or not math.isfinite(value):
        return "NA"
    return f"{value:.6f}"


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _df_text(df) -> str:
    if df is None:
        return "-"
    if isinstance(df, tuple):
        return ",".join(str(d) for d in df)
    return str(df)


def _section(title: str) -> list[str]:
    return [title, "-" * len(title)]


def _stats_pairs(stats: FitStats, full: bool) -> list[tuple[str, float, str, float]]:
    rows = [
        ("R-squared", stats.r_squared, "Mean dependent var", stats.mean_dep),
    ]
    if full:
        rows += [
            ("Adjusted R-squared", stats.adj_r_squared, "S.D. dependent var", stats.sd_dep),
            ("S.E. of regression", stats.se_regression, "Sum squared resid", stats.ssr),
            ("F-statistic", stats.f_statistic, "Durbin-Watson stat", stats.durbin_watson),
            ("Prob(F-statistic)", stats.prob_f, "", float("nan")),
        ]
    else:
        rows += [
            ("Sum squared resid", stats.ssr, "Durbin-Watson stat", stats.durbin_watson),
        ]
    return rows


def _render_stats_block(title: str, stats: FitStats, full: bool) -> list[str]:
    lines = [title]
    for left, lv, right, rv in _stats_pairs(stats, full):
        line = f"{left:<20}{_fmt(lv):>14}"
        if right:
            line += f"    {right:<20}{_fmt(rv):>14}"
        lines.append(line)
    return lines


def _render_model_text(model: ModelReport) -> list[str]:
    result = model.result
    dm = model.design
    balance = "balanced" if dm.balanced else "unbalanced"
    lines = _section(f"Model: {model.label.capitalize()} institutions cluster")
    lines += [
        f"Dependent Variable: {model.dependent.upper()}",
        f"Method: {_METHOD_TITLES.get(result.method, result.method)}",
        f"Sample (adjusted): {dm.sample[0]} {dm.sample[1]}",
        f"Periods included: {len(dm.years)}",
        f"Cross-sections included: {dm.n_entities}",
        f"Total panel ({balance}) observations: {dm.n_obs}",
    ]
    if result.method == "egls-period-sur":
        lines.append("Linear estimation after one-step weighting matrix")
    lines.append(_COVARIANCE_TITLES.get(result.covariance_method, result.covariance_method))
    lines.append("")
    lines.append(
        f"{'Variable':<16}{'Coefficient':>14}{'Std. Error':>14}{'t-Statistic':>14}{'Prob.':>12}"
    )
    for i, name in enumerate(result.names):
        lines.append(
            f"{name.upper():<16}"
            f"{_fmt(result.coefficients[i]):>14}"
            f"{_fmt(result.std_errors[i]):>14}"
            f"{_fmt(result.t_stats[i]):>14}"
            f"{_fmt(result.p_values[i]):>12}"
        )
    lines.append("")
    lines += _render_stats_block("Weighted Statistics", result.weighted_stats, full=True)
    lines.append("")
    lines += _render_stats_block("Unweighted Statistics", result.unweighted_stats, full=False)
    if model.correlations:
        lines.append("")
        lines.append("Correlations (full panel window)")
        for dep, name, value in model.correlations:
            lines.append(f"{dep.upper()} ~ {name.upper():<12}{_fmt(value):>12}")
    if model.tests:
        lines.append("")
        lines.append("Diagnostics")
        for test in model.tests:
            title = _TEST_TITLES.get(test.name, test.name)
            head = (
                f"{title:<44}stat={_fmt(test.statistic):>12}  "
                f"df={_df_text(test.df):<8}p={_fmt(test.p_value):>8}"
            )
            if test.n_obs is not None:
                head += f"  n={test.n_obs}"
            lines.append(head)
            lines.append(f"  {test.verdict}")
    return lines


def _render_text(bundle: ReportBundle) -> str:
    lines = _section("Institutional clustering")
    inclusive = " ".join(sorted(bundle.assignment.inclusive))
    extractive = " ".join(sorted(bundle.assignment.extractive))
    scored = len(bundle.assignment.inclusive) + len(bundle.assignment.extractive)
    lines += [
        f"Indicator: {bundle.indicator}",
        f"Countries scored: {scored}",
        f"Median score: {_fmt(bundle.assignment.median)}",
        f"Inclusive ({len(bundle.assignment.inclusive)}): {inclusive}",
        f"Extractive ({len(bundle.assignment.extractive)}): {extractive}",
        f"Crisis horizon: {bundle.horizon_end}",
    ]
    for warning in bundle.warnings:
        lines.append(f"Warning: {warning}")
    for model in bundle.models:
        lines.append("")
        lines += _render_model_text(model)
    return "\n".join(lines) + "\n"


def _result_to_dict(result: EstimationResult) -> dict:
    def stats_dict(stats: FitStats) -> dict:
        return {
            "r_squared": _clean(stats.r_squared),
            "adj_r_squared": _clean(stats.adj_r_squared),
            "se_regression": _clean(stats.se_regression),
            "ssr": _clean(stats.ssr),
            "f_statistic": _clean(stats.f_statistic),
            "prob_f": _clean(stats.prob_f),
            "durbin_watson": _clean(stats.durbin_watson),
            "mean_dep": _clean(stats.mean_dep),
            "sd_dep": _clean(stats.sd_dep),
        }

    return {
        "method": result.method,
        "covariance_method": result.covariance_method,
        "n_obs": result.n_obs,
        "k_params": result.k_params,
        "df_resid": result.df_resid,
        "coefficients": [
            {
                "name": name,
                "coefficient": float(result.coefficients[i]),
                "std_error": float(result.std_errors[i]),
                "t_statistic": float(result.t_stats[i]),
                "p_value": float(result.p_values[i]),
            }
            for i, name in enumerate(result.names)
        ],
        "weighted_statistics": stats_dict(result.weighted_stats),
        "unweighted_statistics": stats_dict(result.unweighted_stats),
    }


def _test_to_dict(test) -> dict:
    return {
        "name": test.name,
        "statistic": _clean(float(test.statistic)),
        "df": list(test.df) if isinstance(test.df, tuple) else test.df,
        "p_value": _clean(float(test.p_value)),
        "verdict": test.verdict,
        "n_obs": test.n_obs,
        "details": _sanitize(test.details),
    }


def _sanitize(value):
    if isinstance(value, dict):
        return {k: _sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_sanitize(v) for v in value]
    if isinstance(value, float):
        return _clean(value)
    return value


def bundle_to_dict(bundle: ReportBundle) -> dict:
    """Structured representation of a bundle with full-precision numbers."""
    return {
        "indicator": bundle.indicator,
        "median": _clean(bundle.assignment.median),
        "inclusive": sorted(bundle.assignment.inclusive),
        "extractive": sorted(bundle.assignment.extractive),
        "horizon_end": bundle.horizon_end,
        "warnings": list(bundle.warnings),
        "models": [
            {
                "cluster": model.label,
                "dependent": model.dependent,
                "sample": list(model.design.sample),
                "periods_included": len(model.design.years),
                "cross_sections": model.design.n_entities,
                "observations": model.design.n_obs,
                "balanced": model.design.balanced,
                "result": _result_to_dict(model.result),
                "diagnostics": [_test_to_dict(t) for t in model.tests],
                "correlations": [
                    {"dependent": dep, "variable": name, "value": _clean(value)}
                    for dep, name, value in model.correlations
                ],
            }
            for model in bundle.models
        ],
    }


def emit_report(bundle: ReportBundle, mode: str = "text") -> str:
    """Render a bundle as fixed-layout text or a JSON document."""
    if mode == "text":
        return _render_text(bundle)
    if mode == "json":
        return json.dumps(bundle_to_dict(bundle), indent=2, allow_nan=False) + "\n"
    raise InputError(f"unknown report mode {mode!r}")
