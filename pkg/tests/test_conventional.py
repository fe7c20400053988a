import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from parkfactors.conventional import (
    EPS, HomeRoadCounts, UndefinedParkFactorError, aggregate_home_road, conventional_pf, conventional_pf_table,
    conventional_probability,
)
from parkfactors.pa_model import CanonicalRow, Dataset, EventClass, InvalidTargetError

HR = EventClass.HOME_RUN


def _rows():
    spec = [
        ("G1", "PA", "A", [("A", "HR"), ("A", "HR"), ("A", "OTHER"), ("B", "HR"), ("B", "OTHER")]),
        ("G2", "PB", "B", [("A", "HR"), ("B", "OTHER"), ("B", "OTHER")]),
        ("G3", "PB", "B", [("A", "OTHER"), ("B", "HR")]),
        ("G4", "NEU", "A", [("A", "HR"), ("B", "OTHER")]),
    ]
    out = []
    for gid, park, home, pas in spec:
        for bat, ev in pas:
            dfn = "B" if bat == "A" else "A"
            out.append(CanonicalRow(2017, gid, park, home, bat, dfn, EventClass(ev)))
    return out


@pytest.fixture
def counts():
    return aggregate_home_road(Dataset.from_rows(_rows()), HR)


def test_tallies_by_hand(counts):
    # team A: home G1; road G2, G3 and the neutral-site G4
    assert counts.games_home.tolist() == [1, 2]
    assert counts.games_road.tolist() == [3, 2]
    assert counts.scored_home.tolist() == [2, 1]
    assert counts.allowed_home.tolist() == [1, 1]
    assert counts.scored_road.tolist() == [2, 1]
    assert counts.allowed_road.tolist() == [1, 3]


def test_pf_by_hand(counts):
    assert conventional_pf(counts, "A") == pytest.approx((3 / 1) / (3 / 3), rel=1e-15)
    assert conventional_pf(counts, "B") == pytest.approx((2 / 2) / (4 / 2), rel=1e-15)
    assert conventional_pf_table(counts) == {"PA": 3.0, "PB": 0.5}


def test_other_rejected():
    with pytest.raises(InvalidTargetError):
        aggregate_home_road(Dataset.from_rows(_rows()), EventClass.OTHER)


def test_undefined_cases(counts, caplog):
    no_road = HomeRoadCounts(counts.teams, counts.parks, HR, counts.scored_home, counts.allowed_home,
                               counts.games_home, counts.scored_road, counts.allowed_road,
                               np.array([0, 2]))
    with pytest.raises(UndefinedParkFactorError):
        conventional_pf(no_road, "A")
    quiet = HomeRoadCounts(counts.teams, counts.parks, HR, counts.scored_home, counts.allowed_home,
                             counts.games_home, np.array([0, 1]), np.array([0, 3]), counts.games_road)
    with pytest.raises(UndefinedParkFactorError, match="no road"):
        conventional_pf(quiet, 0)
    with caplog.at_level(logging.WARNING):
        assert conventional_pf_table(quiet) == {"PB": 0.5}
    assert "excluding A" in caplog.text


def test_probability_example():
    assert conventional_probability(1.195, 0.03193) == pytest.approx(0.03816, abs=5e-5)


def test_probability_clamps():
    assert conventional_probability(0.0, 0.1) == EPS
    assert conventional_probability(50.0, 0.1) == 1 - EPS
    with pytest.raises(ValueError):
        conventional_probability(-1.0, 0.1)
    with pytest.raises(ValueError):
        conventional_probability(1.0, 0.0)


small = st.integers(0, 50)


@settings(max_examples=100, deadline=None)
@given(st.tuples(small, small, st.integers(1, 20), small, small, st.integers(1, 20)),
       st.integers(1, 9))
def test_pf_scale_and_swap_laws(c, factor):
    sh, ah, gh, sr, ar, gr = c
    counts = HomeRoadCounts(("A",), ("PA",), HR, *(np.array([v]) for v in (sh, ah, gh, sr, ar, gr)))
    if sr + ar == 0:
        with pytest.raises(UndefinedParkFactorError):
            conventional_pf(counts, 0)
        return
    pf = conventional_pf(counts, 0)
    assert pf >= 0
    assert conventional_pf(counts.scaled(factor), 0) == pytest.approx(pf, rel=1e-12)
    if sh + ah:
        assert conventional_pf(counts.swapped(), 0) == pytest.approx(1 / pf, rel=1e-12)


def _game_rows(gid, park, home, away, home_events, away_events):
    rows = [CanonicalRow(2017, gid, park, home, home, away, EventClass(e)) for e in home_events]
    rows += [CanonicalRow(2017, gid, park, home, away, home, EventClass(e)) for e in away_events]
    return rows


def test_single_game_counts():
    ds = Dataset.from_rows(_game_rows("G", "PA", "A", "B", ["HR", "HR", "OTHER"], ["HR", "OTHER"]))
    c = aggregate_home_road(ds, HR)
    a = c.team_index("A")
    assert (c.scored_home[a], c.allowed_home[a], c.games_home[a]) == (2, 1, 1)


def test_ratio_examples():
    counts = HomeRoadCounts(("A",), ("PA",), HR, np.array([6]), np.array([4]), np.array([5]),
                            np.array([5]), np.array([3]), np.array([5]))
    assert conventional_pf(counts, 0) == 1.25
    same = HomeRoadCounts(("A",), ("PA",), HR, *(np.array([v]) for v in (3, 3, 4, 3, 3, 4)))
    assert conventional_pf(same, 0) == 1.0


def test_symmetric_schedule_gives_neutral_factors():
    rows = []
    teams = ["A", "B", "C"]
    g = 0
    for h in teams:
        for a in teams:
            if h != a:
                rows += _game_rows(f"G{g}", f"P{h}", h, a, ["HR", "OTHER"], ["HR", "OTHER"])
                g += 1
    assert set(conventional_pf_table(aggregate_home_road(Dataset.from_rows(rows), HR)).values()) == {1.0}


def test_probability_identity_and_clamp():
    assert conventional_probability(1.0, 0.03193) == 0.03193
    assert conventional_probability(40, 0.03) == 1 - 1e-12
