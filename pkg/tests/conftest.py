"""Shared fixtures and panel builders for the test suite."""

from __future__ import annotations

import time
from pathlib import Path

import numpy as np
import pytest

from panelsur.panel import ModelSpec, assemble, build_panel

ROOT = Path(__file__).resolve().parent.parent
GOLDEN_DATA = ROOT / "data" / "golden"
GOLDEN_FILES = ROOT / "tests" / "golden"

_SESSION_START = time.perf_counter()


def session_elapsed() -> float:
    return time.perf_counter() - _SESSION_START


@pytest.fixture(scope="session")
def golden_data_dir() -> Path:
    return GOLDEN_DATA


@pytest.fixture(scope="session")
def golden_files_dir() -> Path:
    return GOLDEN_FILES


def make_panel_rows(rng, entities, years, k_slopes, *, coefs=None, noise=1.0,
                    entity_effects=None, ar=0.0):
    """Random panel rows with a planted linear model y = 1 + x @ coefs + e."""
    if coefs is None:
        coefs = np.linspace(0.5, -0.5, k_slopes)
    rows = []
    for ent in entities:
        shock = 0.0
        effect = 0.0 if entity_effects is None else entity_effects[ent]
        for year in years:
            xs = rng.normal(size=k_slopes)
            shock = ar * shock + rng.normal(scale=noise)
            y = 1.0 + effect + float(xs @ coefs) + shock
            for j in range(k_slopes):
                rows.append((ent, year, f"x{j + 1}", float(xs[j])))
            rows.append((ent, year, "y", float(y)))
    return rows


def make_design(rng, n_entities=4, n_years=5, k_slopes=2, *, drop=(), noise=1.0,
                entity_effects=None, ar=0.0):
    """Assembled design matrix for a random planted-model panel."""
    entities = [f"E{i:02d}" for i in range(n_entities)]
    years = list(range(2000, 2000 + n_years))
    effects = None
    if entity_effects is not None:
        effects = {e: entity_effects[i] for i, e in enumerate(entities)}
    rows = make_panel_rows(rng, entities, years, k_slopes, noise=noise,
                           entity_effects=effects, ar=ar)
    rows = [r for r in rows if (r[0], r[1]) not in set(drop)]
    panel = build_panel(rows)
    spec = ModelSpec(
        dependent="y",
        regressors=tuple((f"x{j + 1}", 0) for j in range(k_slopes)),
        sample=(years[0], years[-1]),
    )
    return assemble(panel, spec)
