"""Play-by-play event file parsing and the canonical per-PA CSV format.

Event files follow the Retrosheet layout: one comma-separated record per
line, ``id`` opening a game, ``info`` records naming the clubs and site, and
``play`` records of the form::

    play,<inning>,<half>,<batter>,<count>,<pitches>,<event>

Only the leading code of the event field matters here; modifiers, advances
and fielding credits are ignored.
"""

from __future__ import annotations

import csv
import io
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence

from .pa_model import CanonicalRow, Dataset, EventClass

log = logging.getLogger(__name__)

CANONICAL_HEADER = ("season", "game_id", "park", "home_team", "batting_team",
                    "defense_team", "event")

KNOWN_RECORD_TYPES = frozenset(
    {"id", "version", "info", "start", "sub", "play", "data", "com",
     "badj", "padj", "ladj", "radj", "presadj"}
)

# leading codes of play records that are not plate appearances
NON_PA_CODES = ("POCS", "FLE", "NP", "BK", "CS", "DI", "OA", "PB", "WP", "PO", "SB")

_NON_PA = re.compile("(?:" + "|".join(NON_PA_CODES) + ")")
_HOME_RUN = re.compile(r"HR?(?:\d|$|[/.+!?#])")
_SINGLE = re.compile(r"S(?:\d|$|[/.+!?#])")
_DOUBLE = re.compile(r"D(?:GR|\d|$|[/.+!?#])")
_TRIPLE = re.compile(r"T(?:\d|$|[/.+!?#])")
_WALK = re.compile(r"(?:W|IW?)(?:$|[/.+!?#])")


class ParseError(ValueError):
    pass


class MalformedFileError(ValueError):
    pass


class CanonicalFormatError(ValueError):
    pass


@dataclass
class RowError:
    line_no: int
    line: str
    message: str

    def __str__(self) -> str:
        return f"line {self.line_no}: {self.message}: {self.line}"


@dataclass
class ParseResult:
    rows: list[CanonicalRow]
    errors: list[RowError] = field(default_factory=list)
    skipped_records: Counter = field(default_factory=Counter)

    def error_report(self, source: str = "") -> str:
        prefix = f"{source}: " if source else ""
        return "".join(f"{prefix}{err}\n" for err in self.errors)


def classify_play(event_text: str) -> EventClass | None:
    """Map the event field of a ``play`` record to an EventClass.

    Returns ``None`` for records that are not plate appearances (no-plays,
    stolen bases, wild pitches and other baserunning-only events).

    >>> classify_play("HR/78/F")
    <EventClass.HOME_RUN: 'HR'>
    >>> classify_play("NP") is None
    True
    """
    text = event_text.strip().upper()
    if not text:
        raise ParseError("empty event field")
    if _NON_PA.match(text):
        return None
    if text.startswith("HP"):
        return EventClass.OTHER
    if _HOME_RUN.match(text):
        return EventClass.HOME_RUN
    if _SINGLE.match(text):
        return EventClass.SINGLE
    if _DOUBLE.match(text):
        return EventClass.DOUBLE
    if _TRIPLE.match(text):
        return EventClass.TRIPLE
    if _WALK.match(text):
        return EventClass.WALK
    return EventClass.OTHER


@dataclass
class _Game:
    game_id: str
    line_no: int
    visteam: str | None = None
    hometeam: str | None = None
    site: str | None = None
    plays: list[tuple[int, EventClass]] = field(default_factory=list)


def _finish(game: _Game, season: int, out: list[CanonicalRow]) -> None:
    if not game.visteam or not game.hometeam:
        raise MalformedFileError(
            f"game {game.game_id} (line {game.line_no}) lacks visteam/hometeam info")
    park = game.site or game.hometeam
    for half, event in game.plays:
        if half == 0:
            bat, dfn = game.visteam, game.hometeam
        else:
            bat, dfn = game.hometeam, game.visteam
        out.append(CanonicalRow(season, game.game_id, park, game.hometeam, bat, dfn, event))


def parse_event_file(lines: Iterable[str], season: int) -> ParseResult:
    """Parse one event file into canonical rows, in file order.

    Corrupt ``play`` lines are collected in ``ParseResult.errors`` and
    skipped. A play before any ``id`` record, or a game without both clubs,
    raises :class:`MalformedFileError`.
    """
    result = ParseResult(rows=[])
    game: _Game | None = None
    for line_no, fields in enumerate(csv.reader(lines), start=1):
        if not fields or not "".join(fields).strip():
            continue
        kind = fields[0].strip()
        if kind == "id":
            if game is not None:
                _finish(game, season, result.rows)
            game = _Game(fields[1].strip() if len(fields) > 1 else "", line_no)
        elif kind == "info":
            if game is None or len(fields) < 3:
                continue
            key, value = fields[1].strip(), fields[2].strip()
            if key == "visteam":
                game.visteam = value
            elif key == "hometeam":
                game.hometeam = value
            elif key == "site" and value:
                game.site = value
        elif kind == "play":
            if game is None:
                raise MalformedFileError(f"line {line_no}: play record before any id record")
            raw = ",".join(fields)
            if len(fields) != 7:
                result.errors.append(RowError(line_no, raw, f"expected 7 fields, got {len(fields)}"))
                continue
            half = fields[2].strip()
            if half not in ("0", "1"):
                result.errors.append(RowError(line_no, raw, f"bad half-inning flag {half!r}"))
                continue
            try:
                event = classify_play(fields[6])
            except ParseError as exc:
                result.errors.append(RowError(line_no, raw, str(exc)))
                continue
            if event is not None:
                game.plays.append((int(half), event))
        elif kind not in KNOWN_RECORD_TYPES:
            result.skipped_records[kind] += 1
    if game is not None:
        _finish(game, season, result.rows)
    if result.skipped_records:
        log.warning("skipped unknown record types: %s", dict(result.skipped_records))
    return result


def read_event_path(path, season: int | None = None) -> ParseResult:
    """Parse an event file from disk; the season defaults to the leading digits of its name."""
    path = Path(path)
    if season is None:
        m = re.match(r"(\d{4})", path.name)
        if not m:
            raise MalformedFileError(f"cannot infer season from file name {path.name!r}")
        season = int(m.group(1))
    with open(path, encoding="utf-8", errors="replace", newline="") as fh:
        return parse_event_file(fh, season)


def write_canonical_csv(rows: Iterable[CanonicalRow]) -> bytes:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CANONICAL_HEADER)
    for r in rows:
        writer.writerow((r.season, r.game_id, r.park, r.home_team, r.batting_team,
                         r.defense_team, EventClass(r.event).value))
    return buf.getvalue().encode("utf-8")


def iter_canonical_rows(data: bytes | str | IO) -> Iterator[CanonicalRow]:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    if isinstance(data, str):
        data = io.StringIO(data, newline="")
    reader = csv.reader(data)
    header = next(reader, None)
    if header is None or tuple(header) != CANONICAL_HEADER:
        raise CanonicalFormatError(
            f"bad header {header!r}; expected {','.join(CANONICAL_HEADER)}")
    for line_no, fields in enumerate(reader, start=2):
        if len(fields) != len(CANONICAL_HEADER):
            raise CanonicalFormatError(f"line {line_no}: expected 7 fields, got {len(fields)}")
        season, game_id, park, home, bat, dfn, code = fields
        try:
            event = EventClass(code)
        except ValueError:
            raise CanonicalFormatError(f"line {line_no}: unknown event code {code!r}") from None
        try:
            season_n = int(season)
        except ValueError:
            raise CanonicalFormatError(f"line {line_no}: bad season {season!r}") from None
        yield CanonicalRow(season_n, game_id, park, home, bat, dfn, event)


def read_canonical_csv(data: bytes | str | IO) -> Dataset:
    """Load canonical CSV bytes (or a text stream) into a Dataset."""
    return Dataset.from_rows(iter_canonical_rows(data))


def merge_results(results: Sequence[ParseResult]) -> list[CanonicalRow]:
    """Deterministic merge of per-file parses: by (season, game_id), keeping in-file order."""
    tagged = [(row.season, row.game_id, n_file, n_row, row)
              for n_file, res in enumerate(results)
              for n_row, row in enumerate(res.rows)]
    tagged.sort(key=lambda t: t[:4])
    return [t[4] for t in tagged]
