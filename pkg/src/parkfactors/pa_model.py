"""Plate-appearance domain types and team/park registries."""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np


class EventClass(str, enum.Enum):
    """Outcome of one plate appearance. Values are the canonical CSV codes."""

    HOME_RUN = "HR"
    SINGLE = "1B"
    DOUBLE = "2B"
    TRIPLE = "3B"
    WALK = "BB"
    OTHER = "OTHER"

    @classmethod
    def from_code(cls, code: str) -> "EventClass":
        return cls(code)

    @classmethod
    def from_cli(cls, name: str) -> "EventClass":
        return cls(name.upper())


MODELED_EVENTS: tuple[EventClass, ...] = (
    EventClass.HOME_RUN,
    EventClass.SINGLE,
    EventClass.DOUBLE,
    EventClass.TRIPLE,
    EventClass.WALK,
)

# integer codes used in the array-backed Dataset
EVENT_INDEX: dict[EventClass, int] = {e: i for i, e in enumerate(EventClass)}
EVENT_BY_INDEX: tuple[EventClass, ...] = tuple(EventClass)


class InvalidTargetError(ValueError):
    pass


class EmptyDatasetError(ValueError):
    pass


class RegistryError(ValueError):
    pass


def check_target(target: EventClass) -> EventClass:
    target = EventClass(target)
    if target is EventClass.OTHER:
        raise InvalidTargetError("OTHER is not a modeled event class")
    return target


@dataclass(frozen=True)
class PlateAppearance:
    game_id: str
    batting_team: int
    defense_team: int
    park: int
    home_team: int
    event: EventClass
    season: int

    def __post_init__(self):
        if self.batting_team == self.defense_team:
            raise ValueError("batting_team and defense_team must differ")
        if self.home_team not in (self.batting_team, self.defense_team):
            raise ValueError("home_team must be one of the two clubs")


@dataclass(frozen=True)
class CanonicalRow:
    """One plate appearance in interchange (string-coded) form."""

    season: int
    game_id: str
    park: str
    home_team: str
    batting_team: str
    defense_team: str
    event: EventClass


def binary_outcome(pa: PlateAppearance, target: EventClass) -> int:
    """1 if the plate appearance produced ``target``, else 0."""
    target = check_target(target)
    return int(pa.event is target)


def _assign_home_parks(rows: Sequence[CanonicalRow], teams: list[str]) -> dict[str, str]:
    # home park = the park hosting most of a team's home games; ties go to first seen
    games: dict[str, dict[tuple[int, str], str]] = {t: {} for t in teams}
    for row in rows:
        games[row.home_team].setdefault((row.season, row.game_id), row.park)
    home_park: dict[str, str] = {}
    claimed: set[str] = set()
    for team in teams:
        tally = Counter(games[team].values())
        order = {p: n for n, p in enumerate(dict.fromkeys(games[team].values()))}
        ranked = sorted(tally, key=lambda p: (-tally[p], order[p]))
        for park in ranked:
            if park not in claimed:
                home_park[team] = park
                claimed.add(park)
                break
        else:
            # never hosted in an unclaimed park; give the team a default park named after it
            if team in claimed:
                raise RegistryError(f"cannot assign a home park to team {team!r}")
            home_park[team] = team
            claimed.add(team)
    return home_park


class Dataset:
    """Ordered plate appearances plus dense team and park registries.

    Teams are indexed in first-appearance order. Park ``i < n_teams`` is the
    home park of team ``i``; parks ``>= n_teams`` are neutral sites, also in
    first-appearance order. Internally the data is held column-wise in numpy
    arrays; :attr:`plate_appearances` materializes the row objects on demand.
    """

    def __init__(
        self,
        teams: Sequence[str],
        parks: Sequence[str],
        batting: np.ndarray,
        defense: np.ndarray,
        park: np.ndarray,
        home: np.ndarray,
        event: np.ndarray,
        season: np.ndarray,
        game: np.ndarray,
        game_ids: Sequence[str],
    ):
        self.teams = tuple(teams)
        self.parks = tuple(parks)
        if len(self.parks) < len(self.teams):
            raise RegistryError("every team needs a home park")
        self.batting = np.array(batting, dtype=np.intp)
        self.defense = np.array(defense, dtype=np.intp)
        self.park = np.array(park, dtype=np.intp)
        self.home = np.array(home, dtype=np.intp)
        self.event = np.array(event, dtype=np.int8)
        self.season = np.array(season, dtype=np.int64)
        self.game = np.array(game, dtype=np.intp)
        self.game_ids = tuple(game_ids)
        for arr in (self.batting, self.defense, self.park, self.home,
                    self.event, self.season, self.game):
            arr.setflags(write=False)

    # -- construction -------------------------------------------------
    @classmethod
    def from_rows(
        cls,
        rows: Iterable[CanonicalRow],
        teams: Sequence[str] | None = None,
        parks: Sequence[str] | None = None,
    ) -> "Dataset":
        """Build a dataset, assigning ids densely in first-appearance order.

        ``teams``/``parks`` pin the registries explicitly (used by the
        synthetic generator so planted indices survive); when given, ``parks``
        must list each team's home park at the team's index.
        """
        rows = list(rows)
        if teams is None:
            seen: dict[str, None] = {}
            for row in rows:
                seen.setdefault(row.home_team)
                seen.setdefault(row.batting_team)
                seen.setdefault(row.defense_team)
            teams = list(seen)
        teams = list(teams)
        if parks is None:
            home_park = _assign_home_parks(rows, teams)
            known = dict.fromkeys(home_park[t] for t in teams)
            for row in rows:
                known.setdefault(row.park)
            parks = list(known)
        parks = list(parks)
        team_ix = {t: i for i, t in enumerate(teams)}
        park_ix = {p: i for i, p in enumerate(parks)}
        if len(team_ix) != len(teams) or len(park_ix) != len(parks):
            raise RegistryError("duplicate registry entries")

        n = len(rows)
        cols = {k: np.empty(n, dtype=np.int64) for k in
                ("bat", "dfn", "park", "home", "event", "season", "game")}
        game_index: dict[tuple[int, str], int] = {}
        game_ids: list[str] = []
        event_ix = EVENT_INDEX
        try:
            for n_row, row in enumerate(rows):
                cols["bat"][n_row] = team_ix[row.batting_team]
                cols["dfn"][n_row] = team_ix[row.defense_team]
                cols["park"][n_row] = park_ix[row.park]
                cols["home"][n_row] = team_ix[row.home_team]
                cols["event"][n_row] = event_ix[EventClass(row.event)]
                cols["season"][n_row] = row.season
                key = (row.season, row.game_id)
                g = game_index.get(key)
                if g is None:
                    g = game_index[key] = len(game_ids)
                    game_ids.append(row.game_id)
                cols["game"][n_row] = g
        except KeyError as exc:
            raise RegistryError(f"unregistered identifier {exc.args[0]!r}") from None
        if n and np.any(cols["bat"] == cols["dfn"]):
            raise RegistryError("a team cannot bat against itself")
        if n and np.any((cols["home"] != cols["bat"]) & (cols["home"] != cols["dfn"])):
            raise RegistryError("home_team must be the batting or defending club")
        return cls(teams, parks, cols["bat"], cols["dfn"], cols["park"], cols["home"],
                   cols["event"], cols["season"], cols["game"], game_ids)

    # -- registries -----------------------------------------------------
    @property
    def n_teams(self) -> int:
        return len(self.teams)

    @property
    def n_parks(self) -> int:
        return len(self.parks)

    @property
    def team_registry(self) -> dict[str, int]:
        return {t: i for i, t in enumerate(self.teams)}

    @property
    def park_registry(self) -> dict[str, int]:
        return {p: i for i, p in enumerate(self.parks)}

    def home_park_of(self, team: int) -> int:
        return team

    def is_neutral(self, park: int) -> bool:
        return park >= self.n_teams

    # -- views ------------------------------------------------------------
    def __len__(self) -> int:
        return int(self.event.shape[0])

    @property
    def seasons(self) -> list[int]:
        return sorted(set(self.season.tolist()))

    def outcomes(self, target: EventClass) -> np.ndarray:
        """0/1 float vector of ``target`` occurrences in dataset order."""
        target = check_target(target)
        return (self.event == EVENT_INDEX[target]).astype(np.float64)

    @cached_property
    def plate_appearances(self) -> tuple[PlateAppearance, ...]:
        events = EVENT_BY_INDEX
        return tuple(
            PlateAppearance(self.game_ids[g], b, d, k, h, events[e], s)
            for b, d, k, h, e, s, g in zip(
                self.batting.tolist(), self.defense.tolist(), self.park.tolist(),
                self.home.tolist(), self.event.tolist(), self.season.tolist(),
                self.game.tolist())
        )

    def to_rows(self) -> list[CanonicalRow]:
        teams, parks, events = self.teams, self.parks, EVENT_BY_INDEX
        return [
            CanonicalRow(s, self.game_ids[g], parks[k], teams[h], teams[b], teams[d], events[e])
            for b, d, k, h, e, s, g in zip(
                self.batting.tolist(), self.defense.tolist(), self.park.tolist(),
                self.home.tolist(), self.event.tolist(), self.season.tolist(),
                self.game.tolist())
        ]

    def subset(self, mask: np.ndarray) -> "Dataset":
        """Rows where ``mask`` is true, keeping the registries and game ids unchanged."""
        mask = np.asarray(mask, dtype=bool)
        return Dataset(self.teams, self.parks, self.batting[mask], self.defense[mask],
                       self.park[mask], self.home[mask], self.event[mask], self.season[mask],
                       self.game[mask], self.game_ids)

    def select_season(self, season: int) -> "Dataset":
        """Sub-dataset for one season with registries rebuilt for that season."""
        rows = [r for r in self.to_rows() if r.season == season]
        if not rows:
            raise EmptyDatasetError(f"no plate appearances for season {season}")
        return Dataset.from_rows(rows)

    def __repr__(self) -> str:
        return f"Dataset(n_pa={len(self)}, n_teams={self.n_teams}, n_parks={self.n_parks})"


def dataset_summary(ds: Dataset) -> dict[str, int]:
    """Per-event counts keyed by canonical code, plus ``total``."""
    if len(ds) == 0:
        raise EmptyDatasetError("dataset has no plate appearances")
    counts = np.bincount(ds.event, minlength=len(EVENT_BY_INDEX))
    summary = {e.value: int(counts[EVENT_INDEX[e]]) for e in EventClass}
    summary["total"] = len(ds)
    return summary


def counts_by_event(summary: Mapping[str, int]) -> dict[EventClass, int]:
    return {e: summary[e.value] for e in EventClass}
