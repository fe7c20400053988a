"""Synthetic plate-appearance data drawn from planted match-up parameters.

Every scheduled plate appearance gets a single outcome. Modeled events are
laid out back to back on the unit interval in the order HR, 3B, 2B, 1B, BB,
each with width equal to its own logistic match-up probability, and one
uniform draw picks the event (remainder: OTHER). Marginal per-event rates
therefore match the planted model exactly, and outcomes stay mutually
exclusive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.special import expit

from .pa_model import EVENT_INDEX, CanonicalRow, Dataset, EventClass
from .pairwise import ParameterSet, proposed_pf_vector

SAMPLING_ORDER = (
    EventClass.HOME_RUN,
    EventClass.TRIPLE,
    EventClass.DOUBLE,
    EventClass.SINGLE,
    EventClass.WALK,
)
RNG_ALGORITHM = "numpy.Philox"


class SyntheticSpecError(ValueError):
    pass


@dataclass(frozen=True)
class Game:
    home: int
    away: int
    park: int | None = None  # None: the home team's park
    pa_per_side: int = 38


@dataclass
class SyntheticSpec:
    n_teams: int
    n_parks: int
    planted: Mapping[EventClass, ParameterSet]
    schedule: Sequence[Game]
    seed: int = 0
    season: int = 2000
    team_names: Sequence[str] | None = None
    park_names: Sequence[str] | None = None

    def __post_init__(self):
        if self.n_teams < 2 or self.n_parks < self.n_teams:
            raise SyntheticSpecError("need n_teams >= 2 and n_parks >= n_teams")
        for event, params in self.planted.items():
            if EventClass(event) is EventClass.OTHER:
                raise SyntheticSpecError("OTHER cannot be planted")
            if params.n_teams != self.n_teams or params.n_parks != self.n_parks:
                raise SyntheticSpecError(f"planted {EventClass(event).value} parameters have the wrong shape")
        self.schedule = [g if isinstance(g, Game) else Game(*g) for g in self.schedule]
        for g in self.schedule:
            park = g.home if g.park is None else g.park
            if not (0 <= g.home < self.n_teams and 0 <= g.away < self.n_teams) or g.home == g.away:
                raise SyntheticSpecError(f"bad game {g}")
            if not 0 <= park < self.n_parks or (park < self.n_teams and park != g.home):
                raise SyntheticSpecError(f"game {g} must be at the home park or a neutral site")

    @property
    def teams(self) -> list[str]:
        if self.team_names is not None:
            return list(self.team_names)
        return [f"T{i:02d}" for i in range(self.n_teams)]

    @property
    def parks(self) -> list[str]:
        if self.park_names is not None:
            return list(self.park_names)
        return [f"P{k:02d}" if k < self.n_teams else f"N{k - self.n_teams:02d}"
                for k in range(self.n_parks)]

    def to_dict(self) -> dict:
        return {
            "n_teams": self.n_teams,
            "n_parks": self.n_parks,
            "seed": self.seed,
            "season": self.season,
            "team_names": self.teams,
            "park_names": self.parks,
            "planted": {EventClass(e).value: p.to_dict() for e, p in self.planted.items()},
            "schedule": [[g.home, g.away, g.park, g.pa_per_side] for g in self.schedule],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "SyntheticSpec":
        """Build from the JSON layout used by ``to_dict``.

        Planted parameters may be given either as full ``{"b","d","r"}``
        vectors or, for convenience, as ``{"uniform": half_width}`` with an
        optional ``"offset"`` added to every ``b``; those are drawn from the
        spec seed. ``schedule`` may be a list of games or
        ``{"balanced": {"games_per_team": G, "pa_per_side": n}}``.
        """
        n_teams, n_parks = int(data["n_teams"]), int(data.get("n_parks", data["n_teams"]))
        seed = int(data.get("seed", 0))
        rng = np.random.Generator(np.random.Philox(seed))
        planted = {}
        for code, p in data["planted"].items():
            event = EventClass(code)
            if "uniform" in p:
                w = float(p["uniform"])
                planted[event] = ParameterSet(
                    rng.uniform(-w, w, n_teams) + float(p.get("offset", 0.0)),
                    rng.uniform(-w, w, n_teams),
                    rng.uniform(-float(p.get("park_uniform", w)), float(p.get("park_uniform", w)), n_parks),
                    event=event)
            else:
                planted[event] = ParameterSet(p["b"], p["d"], p["r"], event=event)
        sched = data["schedule"]
        if isinstance(sched, Mapping):
            games = balanced_schedule(n_teams, **sched["balanced"])
        else:
            games = [Game(int(h), int(a), None if k is None else int(k), int(n)) for h, a, k, n in sched]
        return cls(n_teams, n_parks, planted, games, seed=seed, season=int(data.get("season", 2000)),
                   team_names=data.get("team_names"), park_names=data.get("park_names"))


@dataclass
class Ledger:
    """Exact counts per (batting, defense, park) triple and event class."""

    seed: int
    rng: str
    triples: dict[tuple[int, int, int], dict[str, int]] = field(default_factory=dict)

    def totals(self) -> dict[str, int]:
        out = {e.value: 0 for e in EventClass}
        out["total"] = 0
        for counts in self.triples.values():
            for key, n in counts.items():
                out[key] += n
        return out

    def to_json(self) -> str:
        body = {
            "seed": self.seed,
            "rng": self.rng,
            "totals": self.totals(),
            "triples": [
                {"batting": i, "defense": j, "park": k, **counts}
                for (i, j, k), counts in sorted(self.triples.items())
            ],
        }
        return json.dumps(body, indent=2) + "\n"


def balanced_schedule(n_teams: int, games_per_team: int = 162, pa_per_side: int = 38) -> list[Game]:
    """Every team hosts exactly half its games; each ordered pair meets equally often,
    the remainder filled by a rotation so home and road counts stay equal."""
    if games_per_team % 2:
        raise SyntheticSpecError("games_per_team must be even")
    home = games_per_team // 2
    reps, extra = divmod(home, n_teams - 1)
    games = []
    for _ in range(reps):
        for h in range(n_teams):
            for a in range(n_teams):
                if h != a:
                    games.append(Game(h, a, None, pa_per_side))
    for offset in range(1, extra + 1):
        for h in range(n_teams):
            games.append(Game(h, (h + offset) % n_teams, None, pa_per_side))
    return games


def uniform_planted(rng: np.random.Generator, n_teams: int, n_parks: int, event: EventClass,
                    team_width: float, park_width: float, offset: float = 0.0) -> ParameterSet:
    return ParameterSet(
        rng.uniform(-team_width, team_width, n_teams) + offset,
        rng.uniform(-team_width, team_width, n_teams),
        rng.uniform(-park_width, park_width, n_parks),
        event=event,
    )


def generate(spec: SyntheticSpec) -> tuple[Dataset, Ledger]:
    """Sample one season of plate appearances; deterministic for a given seed."""
    teams, parks = spec.teams, spec.parks
    n_games = len(spec.schedule)
    home = np.array([g.home for g in spec.schedule], dtype=np.intp)
    away = np.array([g.away for g in spec.schedule], dtype=np.intp)
    park = np.array([g.home if g.park is None else g.park for g in spec.schedule], dtype=np.intp)
    per_side = np.array([g.pa_per_side for g in spec.schedule], dtype=np.intp)

    # visitors bat first, then the home side
    game_of = np.repeat(np.arange(n_games), 2 * per_side)
    top = np.concatenate([np.r_[np.ones(n, bool), np.zeros(n, bool)] for n in per_side]) \
        if n_games else np.zeros(0, bool)
    bat = np.where(top, away[game_of], home[game_of])
    dfn = np.where(top, home[game_of], away[game_of])
    pk = park[game_of]

    # event probabilities per PA, laid out cumulatively in the sampling order
    widths = np.zeros((len(SAMPLING_ORDER), bat.size))
    for row, event in enumerate(SAMPLING_ORDER):
        params = spec.planted.get(event)
        if params is not None:
            widths[row] = expit(params.b[bat] - params.d[dfn] - params.r[pk])
    cum = np.cumsum(widths, axis=0)
    over = cum[-1] > 1.0 if bat.size else np.zeros(0, bool)
    if np.any(over):
        n = int(np.argmax(over))
        raise SyntheticSpecError(
            f"modeled event probabilities sum to {cum[-1, n]:.6f} > 1 for triple "
            f"(batting={bat[n]}, defense={dfn[n]}, park={pk[n]})")

    rng = np.random.Generator(np.random.Philox(spec.seed))
    u = rng.random(bat.size)
    slot = (u[None, :] >= cum).sum(axis=0)  # 0..4 modeled event, 5 = other
    codes = [EVENT_INDEX[e] for e in SAMPLING_ORDER] + [EVENT_INDEX[EventClass.OTHER]]
    event_ix = np.asarray(codes, dtype=np.int8)[slot]

    ledger = Ledger(seed=spec.seed, rng=RNG_ALGORITHM)
    labels = [e.value for e in SAMPLING_ORDER] + [EventClass.OTHER.value]
    for i, j, k, s in zip(bat.tolist(), dfn.tolist(), pk.tolist(), slot.tolist()):
        counts = ledger.triples.get((i, j, k))
        if counts is None:
            counts = ledger.triples[(i, j, k)] = {"total": 0, **{e.value: 0 for e in EventClass}}
        counts[labels[s]] += 1
        counts["total"] += 1

    game_ids = [f"SYN{spec.season}{g:05d}" for g in range(n_games)]
    ds = Dataset(teams, parks, bat, dfn, pk, home[game_of], event_ix,
                 np.full(bat.size, spec.season), game_of, game_ids)
    return ds, ledger


def recovery_score(planted: ParameterSet, fitted: ParameterSet) -> tuple[float, float]:
    """Pearson correlation and max absolute difference between the two park-factor vectors.

    Park factors are gauge free, so raw parameters are never compared
    directly. The correlation is NaN if either vector is constant and the
    two differ.
    """
    if planted.n_parks != fitted.n_parks or planted.n_teams != fitted.n_teams:
        raise ValueError("planted and fitted parameter sets differ in size")
    a = proposed_pf_vector(planted)
    b = proposed_pf_vector(fitted)
    max_err = float(np.max(np.abs(a - b)))
    if np.array_equal(a, b):
        return 1.0, max_err
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        return float("nan"), max_err
    return float(np.corrcoef(a, b)[0, 1]), max_err


