"""Ratio-style (home vs. road, per game) park factors."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .pa_model import EVENT_INDEX, Dataset, EventClass, check_target

log = logging.getLogger(__name__)

EPS = 1e-12


class UndefinedParkFactorError(ValueError):
    pass


@dataclass(frozen=True)
class HomeRoadCounts:
    """Per-team home/road tallies of one event class.

    "Scored" counts events while the team bats, "allowed" while it is in the
    field. A game is *home* for a club when it is played in that club's own
    park; neutral-site games are road games for both participants.
    """

    teams: tuple[str, ...]
    parks: tuple[str, ...]
    event: EventClass
    scored_home: np.ndarray
    allowed_home: np.ndarray
    games_home: np.ndarray
    scored_road: np.ndarray
    allowed_road: np.ndarray
    games_road: np.ndarray

    def team_index(self, team: int | str) -> int:
        if isinstance(team, str):
            return self.teams.index(team)
        return int(team)

    def scaled(self, factor: int) -> "HomeRoadCounts":
        return HomeRoadCounts(
            self.teams, self.parks, self.event,
            self.scored_home * factor, self.allowed_home * factor, self.games_home * factor,
            self.scored_road * factor, self.allowed_road * factor, self.games_road * factor,
        )

    def swapped(self) -> "HomeRoadCounts":
        return HomeRoadCounts(
            self.teams, self.parks, self.event,
            self.scored_road, self.allowed_road, self.games_road,
            self.scored_home, self.allowed_home, self.games_home,
        )


def aggregate_home_road(ds: Dataset, target: EventClass) -> HomeRoadCounts:
    target = check_target(target)
    n = ds.n_teams
    hit = (ds.event == EVENT_INDEX[target]).astype(np.int64)

    bat_home = ds.park == ds.batting
    dfn_home = ds.park == ds.defense

    def tally(team_ix, mask):
        return np.bincount(team_ix[mask], weights=hit[mask], minlength=n).astype(np.int64)

    scored_home = tally(ds.batting, bat_home)
    scored_road = tally(ds.batting, ~bat_home)
    allowed_home = tally(ds.defense, dfn_home)
    allowed_road = tally(ds.defense, ~dfn_home)

    # distinct (team, game) appearances, split by venue
    games_home = np.zeros(n, dtype=np.int64)
    games_road = np.zeros(n, dtype=np.int64)
    team_game = np.concatenate([
        np.stack([ds.batting, ds.game, ds.park == ds.batting]),
        np.stack([ds.defense, ds.game, ds.park == ds.defense]),
    ], axis=1).astype(np.intp)
    if team_game.size:
        uniq = np.unique(team_game, axis=1)
        at_home = uniq[2].astype(bool)
        games_home = np.bincount(uniq[0][at_home], minlength=n).astype(np.int64)
        games_road = np.bincount(uniq[0][~at_home], minlength=n).astype(np.int64)

    return HomeRoadCounts(ds.teams, ds.parks[:n], target, scored_home, allowed_home,
                          games_home, scored_road, allowed_road, games_road)


def conventional_pf(counts: HomeRoadCounts, team: int | str) -> float:
    """Home per-game event rate divided by road per-game event rate.

    Raises UndefinedParkFactorError when the team has no home or no road
    games, or when no events occurred in its road games.
    """
    a = counts.team_index(team)
    g_home, g_road = int(counts.games_home[a]), int(counts.games_road[a])
    if g_home == 0 or g_road == 0:
        raise UndefinedParkFactorError(
            f"team {counts.teams[a]!r} has {g_home} home and {g_road} road games")
    road_events = int(counts.scored_road[a] + counts.allowed_road[a])
    if road_events == 0:
        raise UndefinedParkFactorError(f"team {counts.teams[a]!r} has no road {counts.event.value} events")
    home_events = int(counts.scored_home[a] + counts.allowed_home[a])
    return (home_events / g_home) / (road_events / g_road)


def conventional_pf_table(counts: HomeRoadCounts) -> dict[str, float]:
    """PF keyed by home-park code; teams whose PF is undefined are left out with a warning."""
    table = {}
    for a, team in enumerate(counts.teams):
        try:
            table[counts.parks[a]] = conventional_pf(counts, a)
        except UndefinedParkFactorError as exc:
            log.warning("excluding %s from %s park factors: %s", team, counts.event.value, exc)
    return table


def conventional_probability(pf: float, p_average: float) -> float:
    """Per-PA probability implied by a park factor: ``pf * p_average``, clamped into (0, 1)."""
    if not pf >= 0:
        raise ValueError(f"park factor must be nonnegative, got {pf}")
    if not 0 < p_average < 1:
        raise ValueError(f"p_average must lie in (0, 1), got {p_average}")
    return min(max(pf * p_average, EPS), 1 - EPS)
