"""Command-line interface: synth, validate, characterize, train, forecast, evaluate, compare.

Settings resolve as command-line flag, then ``--config`` file, then built-in
default. Exit codes: 0 success, 1 data error, 2 usage or missing artifact,
3 internal error.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from dataclasses import dataclass
from datetime import date, datetime
from pathlib import Path
from typing import Any, Sequence

from . import pipeline, solar
from .errors import HsError, InvalidConfig, IoFailure, UsageError
from .evaluation import emit_report, overall_csv
from .features import FEATURES, GHI_ONLY_FEATURES, characterize
from .hs import forecast
from .ingest import (DAY_END_HOUR, DAY_START_HOUR, SolarSeries, SplitSpec, SynthConfig, apply_day_window,
                     generate_synthetic, parse_csv, write_csv)

DEFAULTS: dict[str, Any] = {
    "site": solar.NREL_GOLDEN.format(),
    "seed": None,
    "k_folds": 10,
    "train_fraction": 0.75,
    "by_day": False,
    "normalizer": "mean",
    "jobs": 1,
    "ghi_only": False,
    "out_dir": "reports",
    "model_dir": "models",
    "formats": "csv",
    "days": 365,
    "start": "2023-01-01",
    "input": None,
    "output": None,
    "issue_time": None,
    "blender": None,
}

_BOOL_KEYS = {"by_day", "ghi_only"}
_INT_KEYS = {"seed", "k_folds", "jobs", "days"}
_FLOAT_KEYS = {"train_fraction"}


@dataclass(frozen=True)
class RunConfig:
    command: str
    site: solar.SiteConfig
    seed: int | None
    k_folds: int
    train_fraction: float
    by_day: bool
    normalizer: str
    jobs: int
    ghi_only: bool
    out_dir: Path
    model_dir: Path
    formats: tuple[str, ...]
    days: int
    start: date
    input: Path | None
    output: Path | None
    issue_time: datetime | None
    blender: str | None

    @property
    def split(self) -> SplitSpec:
        return SplitSpec(self.train_fraction, self.require_seed(), self.by_day)

    def require_seed(self) -> int:
        if self.seed is None:
            raise InvalidConfig("--seed is required")
        return self.seed

    def require_input(self) -> Path:
        if self.input is None:
            raise InvalidConfig("--input is required")
        if not self.input.is_file():
            raise InvalidConfig(f"input file not found: {self.input}")
        return self.input

    def normalizer_value(self) -> float | None:
        if self.normalizer == "mean":
            return None
        kind, _, value = self.normalizer.partition(":")
        try:
            v = float(value)
        except ValueError:
            v = float("nan")
        if kind != "capacity" or not v > 0:
            raise InvalidConfig(f"--normalizer must be 'mean' or 'capacity:<positive W/m2>', got {self.normalizer!r}")
        return v


def read_config_file(path: str | Path) -> dict[str, str]:
    """Key/value settings from an INI file (any section) or bare ``key = value`` lines."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc}") from None
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text if text.lstrip().startswith("[") else "[hsforecast]\n" + text)
    except configparser.Error as exc:
        raise InvalidConfig(f"bad config {path}: {exc}") from None
    values = {}
    for section in parser.sections():
        for key, value in parser[section].items():
            values[key.replace("-", "_")] = value
    unknown = set(values) - set(DEFAULTS)
    if unknown:
        raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
    return values


def _coerce(key: str, value: Any) -> Any:
    if value is None or not isinstance(value, str):
        return value
    try:
        if key in _BOOL_KEYS:
            low = value.strip().lower()
            if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise ValueError(value)
            return low in ("1", "true", "yes", "on")
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
    except ValueError:
        raise InvalidConfig(f"bad value for {key}: {value!r}") from None
    return value


def resolve_config(args: argparse.Namespace) -> RunConfig:
    merged = dict(DEFAULTS)
    if args.config:
        merged.update(read_config_file(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    merged = {k: _coerce(k, v) for k, v in merged.items()}
    try:
        start = date.fromisoformat(str(merged["start"]))
        issue = datetime.fromisoformat(merged["issue_time"]) if merged["issue_time"] else None
    except ValueError as exc:
        raise InvalidConfig(str(exc)) from None
    formats = tuple(f.strip() for f in str(merged["formats"]).split(",") if f.strip())
    if set(formats) - {"csv", "svg"}:
        raise InvalidConfig(f"--formats accepts csv and svg, got {merged['formats']!r}")
    if merged["k_folds"] < 2 or merged["jobs"] < 1 or merged["days"] < 1:
        raise InvalidConfig("k-folds must be >= 2, jobs >= 1 and days >= 1")
    return RunConfig(
        command=args.command,
        site=solar.SiteConfig.parse(merged["site"]),
        seed=merged["seed"],
        k_folds=merged["k_folds"],
        train_fraction=merged["train_fraction"],
        by_day=merged["by_day"],
        normalizer=merged["normalizer"],
        jobs=merged["jobs"],
        ghi_only=merged["ghi_only"],
        out_dir=Path(merged["out_dir"]),
        model_dir=Path(merged["model_dir"]),
        formats=formats,
        days=merged["days"],
        start=start,
        input=Path(merged["input"]) if merged["input"] else None,
        output=Path(merged["output"]) if merged["output"] else None,
        issue_time=issue,
        blender=merged["blender"],
    )


def load_series(cfg: RunConfig) -> SolarSeries:
    with open(cfg.require_input(), "rb") as fh:
        return parse_csv(fh, cfg.site, ghi_only=cfg.ghi_only)


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def cmd_synth(cfg: RunConfig) -> int:
    series = generate_synthetic(SynthConfig(n_days=cfg.days, start_date=cfg.start, site=cfg.site,
                                            seed=cfg.require_seed()))
    if cfg.output is None:
        write_csv(series, sys.stdout)
    else:
        try:
            cfg.output.parent.mkdir(parents=True, exist_ok=True)
            with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
                write_csv(series, fh)
        except OSError as exc:
            raise IoFailure(f"cannot write {cfg.output}: {exc}") from exc
        print(f"wrote {len(series)} records to {cfg.output}")
    return 0


def cmd_validate(cfg: RunConfig) -> int:
    series = load_series(cfg)
    windowed = apply_day_window(series)
    print(f"ok: {len(series)} records, {len(windowed)} in the {DAY_START_HOUR}-{DAY_END_HOUR}h window, "
          f"{series.records[0].timestamp.isoformat()} .. {series.records[-1].timestamp.isoformat()}")
    return 0


def characterize_csv(series: SolarSeries, ghi_only: bool = False) -> str:
    windowed = apply_day_window(series)
    lines = ["feature,periodicity,trend,seasonality"]
    for name in GHI_ONLY_FEATURES if ghi_only else FEATURES:
        tc = characterize(windowed.column(name))
        lines.append(f"{name},{tc.periodicity},{tc.trend:.2f},{tc.seasonality:.2f}")
    return "\n".join(lines) + "\n"


def cmd_characterize(cfg: RunConfig) -> int:
    text = characterize_csv(load_series(cfg), cfg.ghi_only)
    if cfg.output is None:
        sys.stdout.write(text)
    else:
        _write_text(cfg.output, text)
    return 0


def cmd_train(cfg: RunConfig) -> int:
    series = load_series(cfg)
    run = pipeline.train_run(series, cfg.split, cfg.require_seed(), cfg.k_folds, cfg.ghi_only, jobs=cfg.jobs)
    pipeline.save_run(run, cfg.model_dir)
    sys.stdout.write(pipeline.training_report_csv(run.hs))
    return 0


def cmd_forecast(cfg: RunConfig) -> int:
    if cfg.issue_time is None:
        raise InvalidConfig("--issue-time is required")
    run = pipeline.load_run(cfg.model_dir)
    series = load_series(cfg)
    issue = cfg.issue_time
    issue = issue.replace(tzinfo=cfg.site.tz) if issue.tzinfo is None else issue.astimezone(cfg.site.tz)
    target, value = forecast(run.hs, series, issue, cfg.blender)
    print(f"{target.isoformat()}, {value:.2f}")
    return 0


def _evaluate(cfg: RunConfig):
    run = pipeline.load_run(cfg.model_dir)
    series = load_series(cfg)
    return pipeline.evaluate_run(run, series, cfg.normalizer_value())


def cmd_evaluate(cfg: RunConfig) -> int:
    report = _evaluate(cfg)
    for path in emit_report(report, cfg.out_dir, cfg.formats):
        print(path)
    return 0


def cmd_compare(cfg: RunConfig) -> int:
    sys.stdout.write(overall_csv(_evaluate(cfg)))
    return 0


HELP = {
    "synth": "generate a synthetic hourly year",
    "validate": "parse and check an input CSV",
    "characterize": "periodicity/trend/seasonality per feature",
    "train": "train the HS system and the all-in-one group",
    "forecast": "one-hour-ahead forecast for an issue time",
    "evaluate": "write test-split reports for both groups",
    "compare": "print the overall comparison table",
}

COMMANDS = {
    "synth": cmd_synth,
    "validate": cmd_validate,
    "characterize": cmd_characterize,
    "train": cmd_train,
    "forecast": cmd_forecast,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI or key=value settings file")
    common.add_argument("--input", help="hourly CSV: timestamp,ghi[,ghi_clr][,mu,sigma,entropy]")
    common.add_argument("--site", help="lat,lon,elev,utc (default: Golden, CO)")
    common.add_argument("--seed", type=int)
    common.add_argument("--k-folds", dest="k_folds", type=int)
    common.add_argument("--train-fraction", dest="train_fraction", type=float)
    common.add_argument("--by-day", dest="by_day", action="store_const", const=True,
                        help="split whole days instead of single samples")
    common.add_argument("--normalizer", help="mean or capacity:<W/m2>")
    common.add_argument("--jobs", type=int)
    common.add_argument("--ghi-only", dest="ghi_only", action="store_const", const=True,
                        help="use (GHI, GHI_clr, CSI) features only")
    common.add_argument("--out-dir", dest="out_dir")
    common.add_argument("--model-dir", dest="model_dir")
    common.add_argument("--formats", help="comma list of csv,svg")
    common.add_argument("--days", type=int, help="synthetic days")
    common.add_argument("--start", help="synthetic start date (YYYY-MM-DD)")
    common.add_argument("--output", help="output file (stdout if omitted)")
    common.add_argument("--issue-time", dest="issue_time", help="ISO-8601 issue time")
    common.add_argument("--blender", help="force a fixed blender for forecast")

    parser = argparse.ArgumentParser(prog="hsforecast", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HELP[name])
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except HsError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - last-resort exit code
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
