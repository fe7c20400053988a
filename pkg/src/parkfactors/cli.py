"""Command-line front end: ``parkfactors {ingest,fit,evaluate,synth}``.

Every run writes ``run.json`` to its output directory with the effective
configuration. Outputs contain no timestamps, so identical inputs give
byte-identical files.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical divergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import platform
import sys
from importlib import metadata
from pathlib import Path

from . import __version__
from .conventional import aggregate_home_road, conventional_pf_table
from .evaluation import MODEL_TAGS, holdout_report, improvement_report
from .ingest import (CanonicalFormatError, MalformedFileError, merge_results,
                     read_canonical_csv, read_event_path, write_canonical_csv)
from .pa_model import MODELED_EVENTS, Dataset, EmptyDatasetError, EventClass, RegistryError
from .pairwise import DivergenceError, FitConfig, FitReport, fit, pf_rows
from .synth import SyntheticSpec, SyntheticSpecError, generate

log = logging.getLogger("parkfactors")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3

EVENT_CHOICES = ("hr", "1b", "2b", "3b", "bb", "all")
EVENT_FILES = {EventClass.HOME_RUN: "hr", EventClass.SINGLE: "1b", EventClass.DOUBLE: "2b",
               EventClass.TRIPLE: "3b", EventClass.WALK: "bb"}
REGULAR_SEASON_SUFFIXES = (".EVN", ".EVA")
POSTSEASON_SUFFIXES = (".EVE",)


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _events(choice: str) -> list[EventClass]:
    if choice == "all":
        return list(MODELED_EVENTS)
    return [EventClass.from_cli(choice)]


def _versions() -> dict:
    out = {"parkfactors": __version__, "python": platform.python_version()}
    for pkg in ("numpy", "scipy"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


def _write_run_json(out: Path, command: str, config: dict) -> None:
    body = {"subcommand": command, "config": config, "versions": _versions()}
    (out / "run.json").write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _table(header, rows, fmt: str) -> str:
    if fmt == "json":
        return json.dumps([dict(zip(header, r)) for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _load_csv(path: Path) -> Dataset:
    try:
        return read_canonical_csv(path.read_bytes())
    except FileNotFoundError:
        raise DataError(f"no such file: {path}") from None
    except (CanonicalFormatError, RegistryError) as exc:
        raise DataError(f"{path}: {exc}") from None


def _seasons(ds: Dataset, requested) -> list[int]:
    if not requested:
        return ds.seasons
    missing = sorted(set(requested) - set(ds.seasons))
    if missing:
        raise DataError(f"seasons not in data: {missing}")
    return sorted(set(requested))


def _by_season(ds: Dataset, season: int) -> Dataset:
    return ds if ds.seasons == [season] else ds.select_season(season)


# -- subcommands ------------------------------------------------------------

def cmd_ingest(args) -> int:
    suffixes = REGULAR_SEASON_SUFFIXES + (POSTSEASON_SUFFIXES if args.postseason else ())
    files: list[Path] = []
    for raw in args.input:
        p = Path(raw)
        if p.is_dir():
            # directories contribute regular-season files only unless asked; named files always count
            files.extend(sorted(f for f in p.iterdir() if f.suffix.upper() in suffixes))
        elif p.exists():
            files.append(p)
        else:
            raise DataError(f"no such input: {p}")
    if not files:
        raise DataError("no event files found in the input set")

    results, report, malformed = [], [], []
    for f in files:
        try:
            res = read_event_path(f, args.season)
        except MalformedFileError as exc:
            malformed.append(f.name)
            report.append(f"{f.name}: MALFORMED: {exc}\n")
            continue
        results.append(res)
        report.append(res.error_report(f.name))
    rows = merge_results(results)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "plate_appearances.csv").write_bytes(write_canonical_csv(rows))
    (out / "parse_errors.txt").write_text("".join(report), encoding="utf-8")
    _write_run_json(out, "ingest", {
        "input": [str(f) for f in files], "out": str(out), "season": args.season,
        "postseason": args.postseason,
        "seed": args.seed, "rows": len(rows), "malformed_files": malformed,
        "row_errors": sum(len(r.errors) for r in results),
    })
    if malformed:
        log.error("malformed files: %s", ", ".join(malformed))
        return EXIT_DATA
    return EXIT_OK


def _fit_config(args) -> FitConfig:
    kw = {}
    if args.alpha is not None:
        kw["learning_rate"] = args.alpha
    if args.max_epochs is not None:
        kw["max_epochs"] = args.max_epochs
    if args.tol is not None:
        kw["convergence_tol"] = args.tol
    try:
        return FitConfig(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_fit(args) -> int:
    cfg = _fit_config(args)
    ds = _load_csv(Path(args.input))
    seasons = _seasons(ds, args.season)
    events = _events(args.event)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    pf_table, conv_table = [], []
    for season in seasons:
        sub = _by_season(ds, season)
        for event in events:
            report = fit(sub, event, cfg, season=season)
            (out / f"fit_{season}_{EVENT_FILES[event]}.json").write_text(report.to_json(), encoding="utf-8")
            pf_table.extend(pf_rows(report))
            pfs = conventional_pf_table(aggregate_home_road(sub, event))
            for t, team in enumerate(sub.teams):
                park = sub.parks[t]
                if park in pfs:
                    conv_table.append((season, event.value, team, park, pfs[park]))
    ext = args.format
    (out / f"pf_proposed.{ext}").write_text(
        _table(("season", "event", "park", "r", "pf_proposed"), pf_table, ext), encoding="utf-8")
    (out / f"conventional_pf.{ext}").write_text(
        _table(("season", "event", "team", "park", "pf"), conv_table, ext), encoding="utf-8")
    _write_run_json(out, "fit", {
        "input": str(args.input), "out": str(out), "seasons": seasons,
        "events": [e.value for e in events], "fit_config": cfg.__dict__,
        "seed": args.seed, "format": ext,
    })
    return EXIT_OK


def read_conventional_table(path: Path) -> dict[tuple[int, EventClass], dict[str, float]]:
    """Load ``season,event,team,park,pf`` (CSV or the JSON list form)."""
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        records = json.loads(text)
    else:
        records = list(csv.DictReader(io.StringIO(text)))
    table: dict[tuple[int, EventClass], dict[str, float]] = {}
    try:
        for rec in records:
            key = (int(rec["season"]), EventClass(rec["event"]))
            table.setdefault(key, {})[rec["park"]] = float(rec["pf"])
    except (KeyError, ValueError) as exc:
        raise DataError(f"{path}: bad park-factor table ({exc})") from None
    return table


def cmd_evaluate(args) -> int:
    ds = _load_csv(Path(args.input))
    seasons = _seasons(ds, args.season)
    events = _events(args.event)
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    unknown = set(models) - set(MODEL_TAGS)
    if unknown or "baseline" not in models:
        raise UsageError(f"--models must include baseline and only use {MODEL_TAGS}")

    if args.holdout is not None:
        if args.fits or args.pfs:
            raise UsageError("--holdout fits every model itself; drop --fits/--pfs")
        if not 0 < args.holdout < 1:
            raise UsageError("--holdout must lie strictly between 0 and 1")
        report = holdout_report(ds, args.holdout, args.seed or 0, seasons=seasons, events=events,
                                cfg=_fit_config(args))
        report.cells = [c for c in report.cells if c.model in models]
        report.absent = [a for a in report.absent if a.model in models]
        _write_eval(args, report, seasons, events, models)
        return EXIT_OK

    conv = None
    if "conventional" in models:
        if args.pfs:
            conv = read_conventional_table(Path(args.pfs))
        else:
            conv = {}
            for season in seasons:
                sub = _by_season(ds, season)
                for event in events:
                    conv[(season, event)] = conventional_pf_table(aggregate_home_road(sub, event))
    fits = None
    if "pairwise" in models:
        fits = {}
        fit_dir = Path(args.fits) if args.fits else None
        for season in seasons:
            for event in events:
                if fit_dir is None:
                    continue
                f = fit_dir / f"fit_{season}_{EVENT_FILES[event]}.json"
                if f.exists():
                    fits[(season, event)] = FitReport.from_dict(json.loads(f.read_text(encoding="utf-8")))

    report = improvement_report(ds, conv, fits, seasons=seasons, events=events)
    report.absent = [a for a in report.absent if a.model in models]
    _write_eval(args, report, seasons, events, models)
    return EXIT_OK


def _write_eval(args, report, seasons, events, models) -> None:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.format == "json":
        (out / "eval.json").write_text(report.to_json(), encoding="utf-8")
    else:
        (out / "eval.csv").write_text(report.to_csv(), encoding="utf-8")
        (out / "eval_long.csv").write_text(report.to_long_csv(), encoding="utf-8")
        (out / "eval_absent.csv").write_text(report.absent_csv(), encoding="utf-8")
    _write_run_json(out, "evaluate", {
        "input": str(args.input), "fits": args.fits, "pfs": args.pfs, "out": str(out),
        "seasons": seasons, "events": [e.value for e in events], "models": models,
        "holdout": args.holdout, "seed": args.seed, "format": args.format,
    })


def cmd_synth(args) -> int:
    try:
        data = json.loads(Path(args.input).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"no such file: {args.input}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{args.input}: {exc}") from None
    if args.seed is not None:
        data["seed"] = args.seed
    try:
        spec = SyntheticSpec.from_dict(data)
        ds, ledger = generate(spec)
    except (SyntheticSpecError, KeyError, ValueError) as exc:
        raise DataError(f"bad synthetic spec: {exc}") from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "synthetic.csv").write_bytes(write_canonical_csv(ds.to_rows()))
    (out / "ledger.json").write_text(ledger.to_json(), encoding="utf-8")
    (out / "planted.json").write_text(json.dumps(spec.to_dict()["planted"], indent=2) + "\n", encoding="utf-8")
    _write_run_json(out, "synth", {"input": str(args.input), "out": str(out), "seed": spec.seed,
                                   "rng": ledger.rng, "n_pa": len(ds)})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="parkfactors", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, input_help):
        p.add_argument("--input", required=True, help=input_help)
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("ingest", help="parse event files into canonical CSV")
    p.add_argument("--input", required=True, nargs="+", help="event files or directories")
    p.add_argument("--out", required=True)
    p.add_argument("--season", type=int, default=None, help="override the season inferred from file names")
    p.add_argument("--postseason", action="store_true",
                   help="also pick up .EVE (postseason, all-star) files when scanning directories")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("fit", help="fit pairwise park factors")
    common(p, "canonical CSV")
    p.add_argument("--season", type=int, nargs="*", default=None)
    p.add_argument("--event", choices=EVENT_CHOICES, default="all", type=str.lower)
    p.add_argument("--alpha", type=float, default=None, help="learning rate (default 4/n_pa)")
    p.add_argument("--max-epochs", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("evaluate", help="log-loss comparison against the constant-rate baseline")
    common(p, "canonical CSV")
    p.add_argument("--fits", default=None, help="directory of fit_<season>_<event>.json files")
    p.add_argument("--pfs", default=None, help="conventional PF table; recomputed from data if omitted")
    p.add_argument("--models", default=",".join(MODEL_TAGS))
    p.add_argument("--season", type=int, nargs="*", default=None)
    p.add_argument("--event", choices=EVENT_CHOICES, default="all", type=str.lower)
    p.add_argument("--holdout", type=float, default=None, metavar="FRACTION",
                   help="score on this fraction of held-out games (default: in-sample)")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--max-epochs", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate a synthetic season from a JSON spec")
    common(p, "synthetic spec JSON")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"parkfactors: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, EmptyDatasetError) as exc:
        print(f"parkfactors: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DivergenceError as exc:
        print(f"parkfactors: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
