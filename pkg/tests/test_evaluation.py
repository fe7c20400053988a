import csv
import io
import json
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import mean_log2_loss
from parkfactors.conventional import aggregate_home_road, conventional_pf_table
from parkfactors.evaluation import (
    BASELINE, CONVENTIONAL, EVAL_HEADER, LONG_HEADER, PAIRWISE, baseline_model, baseline_rate,
    baseline_table, bases_walks_per_pa, binary_entropy, conventional_model, holdout_report,
    holdout_split, improvement_report,
    log_loss, model_log_loss, pairwise_model, pearson_r, pf_scatter_table, r_squared,
)
from parkfactors.pa_model import CanonicalRow, Dataset, EmptyDatasetError, EventClass
from parkfactors.pairwise import FitConfig, fit
from test_conventional import _rows

HR = EventClass.HOME_RUN


def test_log_loss_hand_values():
    assert log_loss([0.5, 0.5], [0, 1]) == 1.0
    assert log_loss([0.25], [1]) == 2.0
    assert log_loss([0.25], [0]) == pytest.approx(-math.log2(0.75), rel=1e-15)


@pytest.mark.parametrize("probs,outcomes", [
    ([0.5], [1, 0]), ([0.0], [1]), ([1.0], [0]), ([0.5], [2]), ([], []),
])
def test_log_loss_rejects_bad_input(probs, outcomes):
    with pytest.raises(ValueError):
        log_loss(probs, outcomes)


def test_entropy_identity():
    q = 6105 / 191195
    assert binary_entropy(q) == pytest.approx(mean_log2_loss(q, 6105, 191195), rel=1e-12)
    x = np.zeros(191195)
    x[:6105] = 1
    assert log_loss(np.full(x.size, q), x) == pytest.approx(binary_entropy(q), rel=1e-10)


def test_baseline_rate_and_table():
    ds = Dataset.from_rows(_rows())
    assert baseline_rate(ds, HR) == 6 / 12
    table = baseline_table(ds, seasons=[2017, 2016], events=[HR])
    assert table[2017][HR] == pytest.approx(binary_entropy(6 / 12), rel=1e-12)
    assert table[2016][HR] is None
    with pytest.raises(EmptyDatasetError):
        baseline_rate(Dataset.from_rows([]), HR)


def test_models_scalar_and_vector_agree(small_season):
    ds, planted = small_season
    p = baseline_rate(ds, HR)
    pfs = conventional_pf_table(aggregate_home_road(ds, HR))
    models = [baseline_model(p, HR), conventional_model(pfs, ds.parks, p, HR),
              pairwise_model(planted, ds)]
    pas = ds.plate_appearances[:200]
    for model in models:
        vec = model.predict(ds)[:200]
        assert vec == pytest.approx([model(pa) for pa in pas], rel=1e-15)


def test_conventional_model_defaults_missing_parks_to_one():
    ds = Dataset.from_rows(_rows())
    model = conventional_model({"PA": 2.0}, ds.parks, 0.1, HR)
    preds = model.predict(ds)
    assert set(preds[ds.park == 0]) == {0.2}
    assert set(preds[ds.park != 0]) == {0.1}


def test_pairwise_model_aligns_by_name(small_season):
    ds, planted = small_season
    named = replace(planted, teams=ds.teams, parks=ds.parks)
    rev = replace(named, b=named.b[::-1], d=named.d[::-1], r=named.r[::-1],
                  teams=ds.teams[::-1], parks=ds.parks[::-1])
    np.testing.assert_array_equal(pairwise_model(rev, ds).predict(ds),
                                  pairwise_model(named, ds).predict(ds))
    with pytest.raises(KeyError):
        pairwise_model(replace(named, teams=("X",) + ds.teams[1:]), ds)


def test_improvement_report(small_season):
    ds, _ = small_season
    pfs = conventional_pf_table(aggregate_home_road(ds, HR))
    report_fit = fit(ds, HR)
    report = improvement_report(ds, {(2000, HR): pfs}, {(2000, HR): report_fit},
                                seasons=[2000, 2001], events=[HR])
    base = report.get(2000, HR, BASELINE)
    conv = report.get(2000, HR, CONVENTIONAL)
    pair = report.get(2000, HR, PAIRWISE)
    assert base.delta_vs_baseline == 0.0
    assert conv.delta_vs_baseline == pytest.approx(conv.log_loss - base.log_loss, abs=0)
    assert pair.log_loss < conv.log_loss < base.log_loss
    assert base.log_loss == pytest.approx(binary_entropy(baseline_rate(ds, HR)), rel=1e-12)
    assert {(a.season, a.model) for a in report.absent} == {
        (2001, BASELINE), (2001, CONVENTIONAL), (2001, PAIRWISE)}

    rows = list(csv.reader(io.StringIO(report.to_csv())))
    assert tuple(rows[0]) == EVAL_HEADER and len(rows) == 4
    long_rows = list(csv.reader(io.StringIO(report.to_long_csv())))
    assert tuple(long_rows[0]) == LONG_HEADER
    assert [r[2] for r in long_rows[1:]] == [CONVENTIONAL, PAIRWISE]
    body = json.loads(report.to_json())
    assert len(body["cells"]) == 3 and len(body["absent"]) == 3
    assert "season not in data" in report.absent_csv()


def test_missing_models_become_absent_cells(small_season):
    ds, _ = small_season
    report = improvement_report(ds, None, None, events=[HR])
    assert [c.model for c in report.cells] == [BASELINE]
    assert sorted(a.model for a in report.absent) == [CONVENTIONAL, PAIRWISE]


def test_bases_walks_per_pa_by_hand():
    ds = Dataset.from_rows(_rows())
    assert bases_walks_per_pa(ds) == {"PA": 12 / 5, "PB": 8 / 5, "NEU": 4 / 2}
    rows = [CanonicalRow(2017, "G", "PA", "A", "B", "A", EventClass(e)) for e in ("1B", "2B", "3B", "BB")]
    assert bases_walks_per_pa(Dataset.from_rows(rows))["PA"] == 7 / 4


def test_correlation_helpers():
    x = [1.0, 2.0, 3.0, 5.0]
    y = [2.0, 2.5, 4.0, 4.5]
    assert pearson_r(x, y) == pytest.approx(np.corrcoef(x, y)[0, 1], rel=1e-12)
    assert r_squared(x, y) == pytest.approx(np.corrcoef(x, y)[0, 1] ** 2, rel=1e-12)
    with pytest.raises(ValueError):
        pearson_r([1.0, 1.0], [1.0, 2.0])
    rows, r = pf_scatter_table({"B": 1.1, "A": 0.9, "C": 1.0}, {"A": 0.8, "B": 1.3, "C": 1.0})
    assert [p for p, _, _ in rows] == ["A", "B", "C"]
    assert r == pytest.approx(pearson_r([0.9, 1.1, 1.0], [0.8, 1.3, 1.0]))
    with pytest.raises(ValueError, match="only proposed"):
        pf_scatter_table({"A": 1.0, "Z": 1.0}, {"A": 1.0, "B": 1.0})


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 400), st.integers(0, 400), st.floats(0.01, 0.99))
def test_baseline_beats_any_other_constant(n_events, n_other, q_other):
    n = n_events + n_other
    q = n_events / n
    x = np.r_[np.ones(n_events), np.zeros(n_other)]
    if 0 < q < 1:
        assert log_loss(np.full(n, q), x) <= log_loss(np.full(n, q_other), x) + 1e-12
    assert log_loss(np.full(n, q_other), x) >= 0


def test_log_loss_limits():
    eps = 1e-12
    assert log_loss([1 - eps, eps], [1, 0]) <= 4e-11
    assert log_loss(np.full(10, 0.5), np.r_[np.ones(3), np.zeros(7)]) == 1.0


def test_all_walk_rate_is_one():
    rows = [CanonicalRow(2017, "G", "PA", "A", "B", "A", EventClass.WALK)] * 4
    assert baseline_rate(Dataset.from_rows(rows), EventClass.WALK) == 1.0


def test_neutral_factors_give_zero_delta(small_season):
    ds, _ = small_season
    ones = {p: 1.0 for p in ds.parks}
    report = improvement_report(ds, {(2000, HR): ones}, None, events=[HR])
    assert report.get(2000, HR, CONVENTIONAL).delta_vs_baseline == 0.0


def test_one_pa_park_with_home_run():
    rows = [CanonicalRow(2017, "G", "PA", "A", "B", "A", HR)]
    assert bases_walks_per_pa(Dataset.from_rows(rows)) == {"PA": 4.0}


def test_r_squared_examples():
    x = np.arange(20.0)
    assert r_squared(x, 3 * x - 2) == pytest.approx(1.0, abs=1e-15)
    rng = np.random.default_rng(8)
    assert r_squared(rng.normal(size=10_000), 5 + rng.normal(size=10_000)) < 0.05


def test_scatter_examples():
    pfs = {"A": 0.9, "B": 1.2, "C": 1.0}
    assert pf_scatter_table(pfs, pfs)[1] == pytest.approx(1.0, abs=1e-15)
    flipped = {k: 2 - v for k, v in pfs.items()}
    assert pf_scatter_table(pfs, flipped)[1] < 0


def test_holdout_split_is_by_whole_games(small_season):
    ds, _ = small_season
    rng = np.random.Generator(np.random.Philox(0))
    train, test = holdout_split(ds, 0.25, rng)
    assert len(train) + len(test) == len(ds)
    assert not set(train.game.tolist()) & set(test.game.tolist())
    assert round(0.25 * len(np.unique(ds.game))) == len(np.unique(test.game))
    assert train.teams == ds.teams and test.parks == ds.parks
    with pytest.raises(ValueError):
        holdout_split(ds, 1.0, rng)


def test_holdout_report(small_season):
    ds, _ = small_season
    a = holdout_report(ds, 0.3, seed=5, events=[HR])
    b = holdout_report(ds, 0.3, seed=5, events=[HR])
    assert a.to_csv() == b.to_csv()
    cells = {c.model: c for c in a.cells}
    assert set(cells) == {BASELINE, CONVENTIONAL, PAIRWISE}
    n_test = cells[BASELINE].n_pa
    assert 0 < n_test < len(ds)
    # planted park effects are real, so the pairwise model should still win out of sample
    assert cells[PAIRWISE].delta_vs_baseline < 0
    assert holdout_report(ds, 0.3, seed=6, events=[HR]).to_csv() != a.to_csv()


def test_log_loss_permutation_invariance():
    rng = np.random.default_rng(3)
    p = rng.uniform(0.01, 0.99, 500)
    x = (rng.random(500) < 0.3).astype(float)
    perm = rng.permutation(500)
    assert log_loss(p[perm], x[perm]) == pytest.approx(log_loss(p, x), rel=1e-13)
    q = x.mean()
    assert log_loss(np.full(500, 0.2), x) == pytest.approx(
        -q * math.log2(0.2) - (1 - q) * math.log2(0.8), rel=1e-13)


def test_baseline_minimizes_constant_models_on_grid():
    x = np.r_[np.ones(37), np.zeros(463)]
    best = min(np.linspace(0.001, 0.999, 999), key=lambda c: log_loss(np.full(500, c), x))
    assert abs(best - 37 / 500) <= 0.001


def test_worse_than_baseline_fit_is_flagged(small_season, caplog):
    ds, planted = small_season
    report = fit(ds, HR, FitConfig(max_epochs=200))
    flipped = replace(report, params=replace(report.params, r=-report.params.r * 20))
    with caplog.at_level("WARNING"):
        improvement_report(ds, None, {(2000, HR): flipped}, events=[HR])
    assert "worse than the baseline" in caplog.text
