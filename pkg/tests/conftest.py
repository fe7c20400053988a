from pathlib import Path

import numpy as np
import pytest

from parkfactors.pa_model import EVENT_INDEX, Dataset, EventClass
from parkfactors.pairwise import ParameterSet
from parkfactors.synth import Game, SyntheticSpec, balanced_schedule, generate, uniform_planted

FIXTURES = Path(__file__).parent / "fixtures"


def random_dataset(rng, n_pa, n_teams=6, n_neutral=1, event_rate=0.3, season=2017):
    """Random PAs between distinct teams, mostly at the home park, a few at neutral sites."""
    n_parks = n_teams + n_neutral
    home = rng.integers(0, n_teams, n_pa)
    away = (home + rng.integers(1, n_teams, n_pa)) % n_teams
    top = rng.random(n_pa) < 0.5
    bat = np.where(top, away, home)
    dfn = np.where(top, home, away)
    park = home.copy()
    if n_neutral:
        neutral = rng.random(n_pa) < 0.05
        park[neutral] = rng.integers(n_teams, n_parks, neutral.sum())
    events = np.where(rng.random(n_pa) < event_rate, EVENT_INDEX[EventClass.HOME_RUN],
                      EVENT_INDEX[EventClass.OTHER]).astype(np.int8)
    game = np.arange(n_pa) // 20
    teams = [f"T{i}" for i in range(n_teams)]
    parks = [f"P{i}" for i in range(n_teams)] + [f"N{i}" for i in range(n_neutral)]
    return Dataset(teams, parks, bat, dfn, park, home, events, np.full(n_pa, season), game,
                   [f"G{g:05d}" for g in range(game.max() + 1)])


def random_params(rng, n_teams, n_parks, low=-2.0, high=2.0):
    return ParameterSet(rng.uniform(low, high, n_teams), rng.uniform(low, high, n_teams),
                        rng.uniform(low, high, n_parks), event=EventClass.HOME_RUN)


def synthetic_season(seed, n_teams=30, pa_per_side=76, event=EventClass.HOME_RUN,
                     team_width=0.3, park_width=0.3, offset=0.0, season=2000):
    rng = np.random.Generator(np.random.Philox(seed))
    planted = uniform_planted(rng, n_teams, n_teams, event, team_width, park_width, offset)
    spec = SyntheticSpec(n_teams, n_teams, {event: planted},
                         balanced_schedule(n_teams, 162, pa_per_side), seed=seed, season=season)
    ds, ledger = generate(spec)
    return ds, planted, ledger


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def small_season():
    ds, planted, _ = synthetic_season(7, n_teams=8, pa_per_side=38, offset=-1.0, park_width=0.4)
    return ds, planted


__all__ = ["FIXTURES", "VERDICTS", "Game", "random_dataset", "random_params", "synthetic_season"]


# one line per acceptance criterion, echoed in the terminal summary
VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
