"""Log-loss scoring of park-factor models and descriptive park statistics."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .conventional import EPS, aggregate_home_road, conventional_pf_table
from .pa_model import (EVENT_INDEX, MODELED_EVENTS, Dataset, EmptyDatasetError,
                       EventClass, PlateAppearance, check_target)
from .pairwise import FitConfig, FitReport, ParameterSet, fit, predict_probability

log = logging.getLogger(__name__)

BASELINE, CONVENTIONAL, PAIRWISE = "baseline", "conventional", "pairwise"
MODEL_TAGS = (BASELINE, CONVENTIONAL, PAIRWISE)

EVAL_HEADER = ("season", "event", "model", "log_loss", "delta_vs_baseline", "n_pa")
LONG_HEADER = ("event", "season", "model", "delta_vs_baseline")

BASES = {
    EventClass.SINGLE: 1,
    EventClass.DOUBLE: 2,
    EventClass.TRIPLE: 3,
    EventClass.HOME_RUN: 4,
    EventClass.WALK: 1,
}


def clamp(p):
    return np.clip(p, EPS, 1.0 - EPS)


def baseline_rate(ds: Dataset, target: EventClass) -> float:
    """Fraction of plate appearances that produced ``target``."""
    target = check_target(target)
    if len(ds) == 0:
        raise EmptyDatasetError("baseline rate of an empty dataset")
    return int(np.count_nonzero(ds.event == EVENT_INDEX[target])) / len(ds)


def log_loss(probs: Sequence[float], outcomes: Sequence[int]) -> float:
    r"""Mean base-2 log-loss of binary outcomes.

    Parameters
    ----------
    probs : array_like
        Predicted probabilities, each strictly inside (0, 1).
    outcomes : array_like
        Observed 0/1 outcomes, same length as ``probs``.

    Returns
    -------
    float
        :math:`\frac{1}{N}\sum -x\log_2 p - (1-x)\log_2(1-p)`, in bits.
    """
    p = np.asarray(probs, dtype=np.float64)
    x = np.asarray(outcomes, dtype=np.float64)
    if p.shape != x.shape:
        raise ValueError(f"length mismatch: {p.shape} probabilities vs {x.shape} outcomes")
    if p.size == 0:
        raise ValueError("log_loss needs at least one observation")
    if not np.all((p > 0) & (p < 1)):
        raise ValueError("probabilities must lie strictly inside (0, 1)")
    if not np.all((x == 0) | (x == 1)):
        raise ValueError("outcomes must be 0 or 1")
    per_pa = -(x * np.log2(p) + (1.0 - x) * np.log1p(-p) / math.log(2))
    return float(np.mean(per_pa))


def binary_entropy(q: float) -> float:
    if q <= 0 or q >= 1:
        return 0.0
    return -q * math.log2(q) - (1 - q) * math.log2(1 - q)


@dataclass
class ProbabilityModel:
    """Per-PA predictor for one event class.

    ``vector`` maps a dataset to a probability per plate appearance;
    calling the model on a single :class:`PlateAppearance` gives the same
    value for that row.
    """

    tag: str
    event: EventClass
    vector: Callable[[Dataset], np.ndarray]
    scalar: Callable[[PlateAppearance], float]

    def predict(self, ds: Dataset) -> np.ndarray:
        return clamp(self.vector(ds))

    def __call__(self, pa: PlateAppearance) -> float:
        return float(clamp(self.scalar(pa)))


def baseline_model(p_average: float, event: EventClass) -> ProbabilityModel:
    return ProbabilityModel(BASELINE, event,
                            lambda ds: np.full(len(ds), p_average),
                            lambda pa: p_average)


def conventional_model(pf_by_park: Mapping[str, float], parks: Sequence[str],
                       p_average: float, event: EventClass) -> ProbabilityModel:
    """``pf * p_average`` at each park. Parks absent from the table (neutral
    sites, clubs without a defined PF) get a factor of 1."""
    factors = np.array([pf_by_park.get(name, 1.0) for name in parks], dtype=np.float64)
    return ProbabilityModel(CONVENTIONAL, event,
                            lambda ds: factors[ds.park] * p_average,
                            lambda pa: factors[pa.park] * p_average)


def pairwise_model(params: ParameterSet, ds: Dataset) -> ProbabilityModel:
    """Logistic match-up model, re-indexed onto ``ds``'s registries by name."""
    b, d, r = _align(params, ds)
    return ProbabilityModel(PAIRWISE, params.event,
                            lambda data: predict_probability(b[data.batting], d[data.defense], r[data.park]),
                            lambda pa: predict_probability(b[pa.batting_team], d[pa.defense_team], r[pa.park]))


def _align(params: ParameterSet, ds: Dataset):
    if params.teams is None or params.parks is None:
        if params.n_teams != ds.n_teams or params.n_parks != ds.n_parks:
            raise ValueError("unnamed parameters do not match the dataset registries")
        return params.b, params.d, params.r
    t_ix = {t: i for i, t in enumerate(params.teams)}
    p_ix = {p: k for k, p in enumerate(params.parks)}
    missing = [t for t in ds.teams if t not in t_ix] + [p for p in ds.parks if p not in p_ix]
    if missing:
        raise KeyError(f"fitted parameters lack {missing}")
    b = params.b[[t_ix[t] for t in ds.teams]]
    d = params.d[[t_ix[t] for t in ds.teams]]
    r = params.r[[p_ix[p] for p in ds.parks]]
    return b, d, r


def model_log_loss(model: ProbabilityModel, ds: Dataset) -> float:
    return log_loss(model.predict(ds), ds.outcomes(model.event))


def baseline_table(ds: Dataset, seasons: Iterable[int] | None = None,
                   events: Iterable[EventClass] = MODELED_EVENTS) -> dict[int, dict[EventClass, float | None]]:
    """Log-loss of the constant-rate model per season and event; absent seasons give None."""
    seasons = ds.seasons if seasons is None else list(seasons)
    events = [check_target(e) for e in events]
    table: dict[int, dict[EventClass, float | None]] = {}
    for season in seasons:
        mask = ds.season == season
        n = int(np.count_nonzero(mask))
        row: dict[EventClass, float | None] = {}
        for event in events:
            if n == 0:
                row[event] = None
                continue
            x = (ds.event[mask] == EVENT_INDEX[event]).astype(np.float64)
            q = float(x.mean())
            row[event] = log_loss(np.full(n, min(max(q, EPS), 1 - EPS)), x)
        table[season] = row
    return table


@dataclass
class EvalCell:
    season: int
    event: EventClass
    model: str
    log_loss: float
    delta_vs_baseline: float
    n_pa: int


@dataclass
class AbsentCell:
    season: int
    event: EventClass
    model: str
    reason: str


@dataclass
class EvalReport:
    cells: list[EvalCell] = field(default_factory=list)
    absent: list[AbsentCell] = field(default_factory=list)

    def get(self, season: int, event: EventClass, model: str) -> EvalCell | None:
        for cell in self.cells:
            if cell.season == season and cell.event is EventClass(event) and cell.model == model:
                return cell
        return None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(EVAL_HEADER)
        for c in self.cells:
            w.writerow((c.season, c.event.value, c.model, repr(c.log_loss),
                        repr(c.delta_vs_baseline), c.n_pa))
        return buf.getvalue()

    def to_long_csv(self) -> str:
        """One bar per row: grouped by event, then season, then model."""
        order = {e: n for n, e in enumerate(MODELED_EVENTS)}
        cells = sorted(self.cells, key=lambda c: (order[c.event], c.season, MODEL_TAGS.index(c.model)))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(LONG_HEADER)
        for c in cells:
            if c.model != BASELINE:
                w.writerow((c.event.value, c.season, c.model, repr(c.delta_vs_baseline)))
        return buf.getvalue()

    def absent_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("season", "event", "model", "reason"))
        for a in self.absent:
            w.writerow((a.season, a.event.value, a.model, a.reason))
        return buf.getvalue()

    def to_json(self) -> str:
        body = {
            "cells": [{"season": c.season, "event": c.event.value, "model": c.model,
                       "log_loss": c.log_loss, "delta_vs_baseline": c.delta_vs_baseline,
                       "n_pa": c.n_pa} for c in self.cells],
            "absent": [{"season": a.season, "event": a.event.value, "model": a.model,
                        "reason": a.reason} for a in self.absent],
        }
        return json.dumps(body, indent=2) + "\n"


def improvement_report(
    ds: Dataset,
    conventional_pfs: Mapping[tuple[int, EventClass], Mapping[str, float]] | None,
    fit_reports: Mapping[tuple[int, EventClass], FitReport | ParameterSet] | None,
    seasons: Iterable[int] | None = None,
    events: Iterable[EventClass] = MODELED_EVENTS,
) -> EvalReport:
    """In-sample log-loss of each model per (season, event), with deltas against the constant-rate baseline.

    ``conventional_pfs`` maps (season, event) to a ``{park code: pf}`` table;
    ``fit_reports`` maps (season, event) to a fitted model. Missing entries
    produce absent cells rather than errors.
    """
    conventional_pfs = conventional_pfs or {}
    fit_reports = fit_reports or {}
    report = EvalReport()
    for season in (ds.seasons if seasons is None else list(seasons)):
        if season not in ds.seasons:
            for event in events:
                for tag in MODEL_TAGS:
                    report.absent.append(AbsentCell(season, EventClass(event), tag, "season not in data"))
            continue
        sub = ds.select_season(season) if len(ds.seasons) > 1 else ds
        n = len(sub)
        for event in map(check_target, events):
            x = sub.outcomes(event)
            p_avg = baseline_rate(sub, event)
            p_base = min(max(p_avg, EPS), 1 - EPS)
            base_ll = log_loss(np.full(n, p_base), x)
            report.cells.append(EvalCell(season, event, BASELINE, base_ll, 0.0, n))

            pfs = conventional_pfs.get((season, event))
            if pfs is None:
                report.absent.append(AbsentCell(season, event, CONVENTIONAL, "no conventional park factors"))
            elif not 0 < p_avg < 1:
                report.absent.append(AbsentCell(season, event, CONVENTIONAL, "degenerate event rate"))
            else:
                ll = model_log_loss(conventional_model(pfs, sub.parks, p_avg, event), sub)
                report.cells.append(EvalCell(season, event, CONVENTIONAL, ll, ll - base_ll, n))

            fitted = fit_reports.get((season, event))
            if fitted is None:
                report.absent.append(AbsentCell(season, event, PAIRWISE, "no fit report"))
            else:
                params = fitted.params if isinstance(fitted, FitReport) else fitted
                try:
                    model = pairwise_model(params, sub)
                except (KeyError, ValueError) as exc:
                    report.absent.append(AbsentCell(season, event, PAIRWISE, f"fit does not match data: {exc}"))
                    continue
                ll = model_log_loss(model, sub)
                report.cells.append(EvalCell(season, event, PAIRWISE, ll, ll - base_ll, n))
                if ll > base_ll and isinstance(fitted, FitReport) and fitted.converged:
                    log.warning("converged %s %d fit scores worse than the baseline in-sample (delta %.3g)",
                                event.value, season, ll - base_ll)
    return report


def holdout_split(ds: Dataset, fraction: float, rng: np.random.Generator) -> tuple[Dataset, Dataset]:
    """Split by whole games: a ``fraction`` of the games (at least one) is held out."""
    if not 0 < fraction < 1:
        raise ValueError("holdout fraction must lie in (0, 1)")
    games = np.unique(ds.game)
    if games.size < 2:
        raise ValueError("need at least two games to hold some out")
    n_test = min(max(1, int(round(fraction * games.size))), games.size - 1)
    test_games = rng.permutation(games)[:n_test]
    test = np.isin(ds.game, test_games)
    return ds.subset(~test), ds.subset(test)


def holdout_report(
    ds: Dataset,
    fraction: float = 0.2,
    seed: int = 0,
    seasons: Iterable[int] | None = None,
    events: Iterable[EventClass] = MODELED_EVENTS,
    cfg: FitConfig | None = None,
) -> EvalReport:
    """Out-of-sample variant of :func:`improvement_report`.

    Per season, whole games are held out at random (Philox stream seeded by
    ``seed``, drawn season by season in order). All three models, the
    baseline rate included, are estimated on the remaining games and scored
    on the held-out ones.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    report = EvalReport()
    events = [check_target(e) for e in events]
    for season in (ds.seasons if seasons is None else list(seasons)):
        if season not in ds.seasons:
            for event in events:
                for tag in MODEL_TAGS:
                    report.absent.append(AbsentCell(season, event, tag, "season not in data"))
            continue
        sub = ds.select_season(season) if len(ds.seasons) > 1 else ds
        train, test = holdout_split(sub, fraction, rng)
        n = len(test)
        for event in events:
            x = test.outcomes(event)
            p_avg = baseline_rate(train, event)
            base_ll = log_loss(np.full(n, min(max(p_avg, EPS), 1 - EPS)), x)
            report.cells.append(EvalCell(season, event, BASELINE, base_ll, 0.0, n))
            if 0 < p_avg < 1:
                pfs = conventional_pf_table(aggregate_home_road(train, event))
                ll = model_log_loss(conventional_model(pfs, test.parks, p_avg, event), test)
                report.cells.append(EvalCell(season, event, CONVENTIONAL, ll, ll - base_ll, n))
            else:
                report.absent.append(AbsentCell(season, event, CONVENTIONAL, "degenerate event rate"))
            params = fit(train, event, cfg, season=season).params
            ll = model_log_loss(pairwise_model(params, test), test)
            report.cells.append(EvalCell(season, event, PAIRWISE, ll, ll - base_ll, n))
    return report


def bases_walks_per_pa(ds: Dataset) -> dict[str, float]:
    """Total bases plus walks per plate appearance, by park code."""
    if len(ds) == 0:
        raise EmptyDatasetError("no plate appearances")
    weights = np.zeros(len(EVENT_INDEX))
    for event, bases in BASES.items():
        weights[EVENT_INDEX[event]] = bases
    total = np.bincount(ds.park, weights=weights[ds.event], minlength=ds.n_parks)
    pa = np.bincount(ds.park, minlength=ds.n_parks)
    return {ds.parks[k]: float(total[k] / pa[k]) for k in range(ds.n_parks) if pa[k] > 0}


def pearson_r(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d and equally long")
    if x.size < 2:
        raise ValueError("need at least two points")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise ValueError("correlation undefined for zero variance")
    return float(np.clip((dx @ dy) / math.sqrt(sxx * syy), -1.0, 1.0))


def r_squared(x: Sequence[float], y: Sequence[float]) -> float:
    """Coefficient of determination of the least-squares line of y on x."""
    return pearson_r(x, y) ** 2


def pf_scatter_table(proposed_pfs: Mapping[str, float], conventional_pfs: Mapping[str, float]
                     ) -> tuple[list[tuple[str, float, float]], float]:
    """Pair the two park-factor tables park by park and correlate them."""
    a, b = set(proposed_pfs), set(conventional_pfs)
    if a != b:
        raise ValueError(f"park sets differ: only proposed {sorted(a - b)}, only conventional {sorted(b - a)}")
    parks = sorted(a)
    rows = [(p, float(proposed_pfs[p]), float(conventional_pfs[p])) for p in parks]
    r = pearson_r([row[1] for row in rows], [row[2] for row in rows])
    return rows, r
