"""Command-line entry point: ``windres analyze|resample|fit|ks|power``.

Exit codes: 0 success, 1 validation or configuration error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .core_types import Mode, ResampleSpec, WindSeries, parse_duration
from .dist_stats import ks_two_sample
from .errors import WindResError
from .ingest import CsvConfig, filter_complete_days, load_power_curve, parse_csv
from .param_fit import fit_gengamma_mle, fit_weibull_mle
from .power_model import generation_error
from .report import (
    AnalysisConfig,
    StageError,
    dumps_json,
    format_series_csv,
    is_series_file,
    read_series_csv,
    run_analysis,
)
from .resample import block_average, subsample_instantaneous

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with status 2, which we reserve for I/O
        raise _UsageError(f"{self.prog}: {message}")


def _csv_list(text: str) -> list[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def _add_csv_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--timestamp-column", default=None, help="timestamp column name (default: first column)")
    p.add_argument("--speed-column", default=None, help="wind speed column name (default: second column)")
    p.add_argument("--time-format", default=None, help="strptime pattern (default: ISO-8601)")
    p.add_argument("--base-step", default="10min", help="cadence of the raw observations (default: 10min)")


def _csv_config(args) -> CsvConfig:
    return CsvConfig(timestamp_column=args.timestamp_column, speed_column=args.speed_column, time_format=args.time_format)


def _load_series(path: str, args) -> WindSeries:
    """Accept either a series file written by this tool or a raw observation CSV."""
    if is_series_file(path):
        return read_series_csv(path)
    records = parse_csv(path, _csv_config(args))
    return filter_complete_days(records, parse_duration(args.base_step)).series


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="windres", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"windres {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="run the full pipeline and write all artifacts")
    p.add_argument("--input", required=True)
    _add_csv_options(p)
    p.add_argument("--resolutions", type=_csv_list, default=["3h", "6h", "1d"])
    p.add_argument("--modes", type=_csv_list, default=["avg", "inst"])
    p.add_argument("--power-curve", default=None)
    p.add_argument("--reference", default="base")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["json", "csv"], default="json")

    p = sub.add_parser("resample", help="block-average or subsample a series")
    p.add_argument("--input", required=True)
    _add_csv_options(p)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--t", type=int, help="block length in steps")
    group.add_argument("--resolution", help="target resolution label, e.g. 3h")
    p.add_argument("--mode", default="avg")
    p.add_argument("--out", default=None)

    p = sub.add_parser("fit", help="fit Weibull and generalized Gamma distributions")
    p.add_argument("--input", required=True)
    _add_csv_options(p)
    p.add_argument("--dist", choices=["weibull", "gengamma", "both"], default="both")
    p.add_argument("--force", action="store_true", help="fit monthly or coarser series anyway")
    p.add_argument("--out", default=None)

    p = sub.add_parser("ks", help="two-sample Kolmogorov-Smirnov test")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    _add_csv_options(p)
    p.add_argument("--out", default=None)

    p = sub.add_parser("power", help="energy of each series; the first --input is the reference")
    p.add_argument("--input", required=True, action="append")
    _add_csv_options(p)
    p.add_argument("--power-curve", required=True)
    p.add_argument("--out", default=None)
    return parser


def _cmd_analyze(args) -> None:
    cfg = AnalysisConfig(
        input=Path(args.input),
        out=Path(args.out),
        base_step=parse_duration(args.base_step),
        resolutions=args.resolutions,
        modes=args.modes,
        power_curve=None if args.power_curve is None else Path(args.power_curve),
        reference=args.reference,
        seed=args.seed,
        fmt=args.format,
        csv_config=_csv_config(args),
    )
    if not cfg.input.is_file():
        raise StageError("ingest", FileNotFoundError(2, "input file not found", str(cfg.input)))
    run_analysis(cfg)


def _cmd_resample(args) -> None:
    series = _load_series(args.input, args)
    mode = Mode.parse(args.mode)
    if args.t is not None:
        t = args.t
    else:
        t = ResampleSpec.from_label(args.resolution, mode, series.step).t
    op = block_average if mode is Mode.AVERAGE else subsample_instantaneous
    result = op(series, t)
    _emit(format_series_csv(result), args.out)


def _cmd_fit(args) -> None:
    series = _load_series(args.input, args)
    out = {"input": args.input, "n": len(series), "step_seconds": series.step}
    if args.dist in ("weibull", "both"):
        out["weibull"] = fit_weibull_mle(series, force=args.force).as_dict()
    if args.dist in ("gengamma", "both"):
        out["gengamma"] = fit_gengamma_mle(series, force=args.force).as_dict()
    _emit(dumps_json(out) + "\n", args.out)


def _cmd_ks(args) -> None:
    res = ks_two_sample(_load_series(args.a, args), _load_series(args.b, args))
    _emit(dumps_json({"a": args.a, "b": args.b, **res.as_dict()}) + "\n", args.out)


def _cmd_power(args) -> None:
    curve = load_power_curve(args.power_curve)
    loaded = {path: _load_series(path, args) for path in args.input}
    ref_path = args.input[0]
    report = generation_error(loaded[ref_path], loaded, curve, reference_label=ref_path)
    _emit(dumps_json(report.as_dict()) + "\n", args.out)


_COMMANDS = {
    "analyze": _cmd_analyze,
    "resample": _cmd_resample,
    "fit": _cmd_fit,
    "ks": _cmd_ks,
    "power": _cmd_power,
}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(f"windres: error in arguments: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    stage = args.command
    try:
        _COMMANDS[args.command](args)
    except StageError as exc:
        stage, err = exc.stage, exc.error
        print(f"windres: error in {stage}: {_describe(err)}", file=sys.stderr)
        return EXIT_IO if isinstance(err, OSError) else EXIT_CONFIG
    except OSError as exc:
        print(f"windres: error in {stage}: {_describe(exc)}", file=sys.stderr)
        return EXIT_IO
    except WindResError as exc:
        print(f"windres: error in {stage}: {_describe(exc)}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def _describe(err: BaseException) -> str:
    if isinstance(err, OSError) and getattr(err, "filename", None):
        return f"{err.strerror or err}: {err.filename}"
    return f"{type(err).__name__}: {err}"


if __name__ == "__main__":
    sys.exit(main())
