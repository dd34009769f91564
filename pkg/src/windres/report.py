"""Serialization of series and results, and the end-to-end analysis run."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .core_types import (
    GenGammaParams,
    Mode,
    Provenance,
    ResampleSpec,
    WeibullParams,
    WindSeries,
    format_duration,
)
from .dist_stats import (
    KdeSpec,
    cdf_difference_curve,
    default_kde_grid,
    ecdf,
    kde_density,
    ks_two_sample,
    summary,
)
from .errors import IngestIOError, ParseError, ValidationError, WindResError
from .ingest import CsvConfig, filter_complete_days, load_power_curve, parse_csv, parse_timestamp
from .param_fit import fit_gengamma_mle, fit_weibull_mle, qq_data
from .power_model import PowerCurve, generation_error
from .resample import resolution_ladder

__all__ = [
    "AnalysisConfig",
    "StageError",
    "dumps_json",
    "format_series_csv",
    "format_float",
    "read_series_csv",
    "run_analysis",
    "write_series_csv",
]


class StageError(WindResError):
    """Wraps a failure with the name of the pipeline stage that raised it."""

    def __init__(self, stage: str, error: Exception):
        super().__init__(f"{stage}: {error}")
        self.stage = stage
        self.error = error


# --------------------------------------------------------------------------- formatting


def format_float(x: float) -> str:
    """17 significant digits, so output bytes do not depend on repr heuristics."""
    if not math.isfinite(x):
        return "null"
    return format(float(x), ".17g")


def _json_scalar(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(float(value))
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    raise TypeError(f"cannot serialise {type(value).__name__}")


def dumps_json(obj, indent: int = 2, _level: int = 0) -> str:
    """Deterministic JSON writer (insertion-ordered keys, fixed float format)."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_json_scalar(str(k))}: {dumps_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [f"{pad}{dumps_json(v, indent, _level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    return _json_scalar(obj)


def _csv_cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return "" if not math.isfinite(value) else format_float(value)
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if value is None:
        return ""
    return str(value)


def _write_text(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8", newline="")
    except OSError as exc:
        raise IngestIOError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_table_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_csv_cell(v) for v in row])
    _write_text(path, buf.getvalue())


def write_json(path: Path, obj) -> None:
    _write_text(path, dumps_json(obj) + "\n")


def _iso(stamp: np.datetime64) -> str:
    return str(np.datetime64(stamp, "s")) + "Z"


# --------------------------------------------------------------------------- series files


def format_series_csv(series: WindSeries) -> str:
    """Series file text: three ``#`` metadata lines, then ``timestamp,wind_speed_mps`` rows."""
    start = series.start_time.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    lines = [
        f"# start_time={start}",
        f"# step_seconds={series.step},source_step_seconds={series.source_step}",
        f"# provenance={series.provenance.value}",
        "timestamp,wind_speed_mps",
    ]
    for stamp, value in zip(series.timestamps(), series.values):
        lines.append(f"{_iso(stamp)},{format_float(value)}")
    return "\n".join(lines) + "\n"


def write_series_csv(path: str | Path, series: WindSeries) -> None:
    _write_text(Path(path), format_series_csv(series))


def is_series_file(path: str | Path) -> bool:
    try:
        with Path(path).open("r", encoding="utf-8") as handle:
            return handle.readline().startswith("# start_time=")
    except OSError as exc:
        raise IngestIOError(f"cannot read {path}: {exc.strerror or exc}") from exc


def read_series_csv(path: str | Path) -> WindSeries:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    lines = text.splitlines()
    meta: dict[str, str] = {}
    for i, line in enumerate(lines[:3]):
        if not line.startswith("# "):
            raise ParseError(i + 1, "series file must start with three '# key=value' lines")
        for part in line[2:].split(","):
            key, _, value = part.partition("=")
            meta[key.strip()] = value.strip()
    try:
        start = parse_timestamp(meta["start_time"])
        step = int(meta["step_seconds"])
        source = int(meta.get("source_step_seconds", step))
        provenance = Provenance(meta["provenance"])
    except (KeyError, ValueError) as exc:
        raise ParseError(1, f"bad series metadata: {exc}") from None
    times: list[np.datetime64] = []
    values: list[float] = []
    for lineno, line in enumerate(lines[4:], start=5):
        if not line.strip():
            continue
        stamp, _, raw = line.partition(",")
        try:
            times.append(np.datetime64(parse_timestamp(stamp).replace(tzinfo=None), "s"))
            values.append(float(raw))
        except ValueError as exc:
            raise ParseError(lineno, str(exc)) from None
    return WindSeries(
        start_time=start,
        step=step,
        values=np.array(values),
        provenance=provenance,
        source_step=source,
        times=np.array(times, dtype="datetime64[s]"),
    )


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


# --------------------------------------------------------------------------- analysis run


def worker_count() -> int:
    raw = os.environ.get("WINDRES_THREADS", "").strip()
    try:
        n = int(raw) if raw else 0
    except ValueError:
        raise ValidationError(f"WINDRES_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValidationError("WINDRES_THREADS must be >= 0")
    return n or min(4, os.cpu_count() or 1)


@dataclass
class AnalysisConfig:
    input: Path
    out: Path
    base_step: int = 600
    resolutions: Sequence[str] = ("3h", "6h", "1d")
    modes: Sequence[str] = ("avg", "inst")
    power_curve: Path | None = None
    reference: str = "base"
    seed: int = 42
    fmt: str = "json"
    csv_config: CsvConfig = field(default_factory=CsvConfig)


def _stage(name: str):
    """Run a callable, re-raising library errors tagged with the stage name."""

    def wrap(fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except StageError:
            raise
        except (WindResError, OSError) as exc:
            raise StageError(name, exc) from exc

    return wrap


def _fit_one(series: WindSeries) -> dict:
    out: dict = {}
    for name, fitter in (("weibull", fit_weibull_mle), ("gengamma", fit_gengamma_mle)):
        try:
            out[name] = fitter(series).as_dict()
        except WindResError as exc:
            out[name] = {"error": f"{type(exc).__name__}: {exc}"}
    return out


def _mode_label(series: WindSeries) -> str:
    return {"raw": "raw", "averaged": "avg", "instantaneous": "inst"}[series.provenance.value]


def _table_output(cfg: AnalysisConfig, stem: str, obj, columns: Sequence[str], rows: list) -> str:
    if cfg.fmt == "csv":
        write_table_csv(cfg.out / f"{stem}.csv", columns, rows)
        return f"{stem}.csv"
    write_json(cfg.out / f"{stem}.json", obj)
    return f"{stem}.json"


def run_analysis(cfg: AnalysisConfig) -> dict:
    """Execute every stage and write the artifacts; returns the manifest."""
    if cfg.fmt not in ("json", "csv"):
        raise StageError("config", ValidationError(f"unknown format {cfg.fmt!r}"))
    base_key = format_duration(cfg.base_step)

    specs = _stage("config")(
        lambda: [ResampleSpec.from_label(r, Mode.parse(m), cfg.base_step) for r in cfg.resolutions for m in cfg.modes]
    )
    keys = [base_key] + [s.key for s in specs]
    ref_key = base_key if cfg.reference in ("base", base_key) else cfg.reference
    if ref_key not in keys:
        raise StageError(
            "config", ValidationError(f"reference {cfg.reference!r} is not one of the produced series {keys}")
        )

    records = _stage("ingest")(parse_csv, cfg.input, cfg.csv_config)
    filtered = _stage("ingest")(filter_complete_days, records, cfg.base_step)
    curve: PowerCurve | None = None
    if cfg.power_curve is not None:
        curve = _stage("power_curve")(load_power_curve, cfg.power_curve)

    ladder = _stage("resample")(resolution_ladder, filtered.series, specs)
    series: dict[str, WindSeries] = {base_key: filtered.series}
    series.update(ladder.series)
    if ref_key not in series:
        raise StageError("resample", ladder.errors.get(ref_key) or ValidationError(f"reference {ref_key} missing"))

    try:
        cfg.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StageError("output", IngestIOError(f"cannot create {cfg.out}: {exc.strerror or exc}")) from exc
    artifacts: list[str] = []
    cdfs = {key: ecdf(s) for key, s in series.items()}

    # KS tables: one per mode, coarsest resolution first, base last
    ks_tables = []
    ks_rows = []
    for mode in dict.fromkeys(Mode.parse(m) for m in cfg.modes):
        labels = [s.key for s in sorted((s for s in specs if s.mode is mode), key=lambda s: -s.t) if s.key in series]
        labels.append(base_key)
        entries = []
        for i, row in enumerate(labels):
            for col in labels[i:]:
                res = ks_two_sample(cdfs[row], cdfs[col])
                entries.append({"row": row, "col": col, **res.as_dict()})
                ks_rows.append([mode.short, row, col, res.d_stat, res.p_value, res.n1, res.n2, res.significant])
        ks_tables.append({"mode": mode.short, "labels": labels, "entries": entries})
    artifacts.append(
        _table_output(
            cfg,
            "ks_matrix",
            {"alpha": 0.05, "tables": ks_tables},
            ["mode", "row", "col", "d_stat", "p_value", "n1", "n2", "significant"],
            ks_rows,
        )
    )

    # moments (variance table)
    var_records = []
    for key, s in series.items():
        entry = {"series": key, "mode": _mode_label(s), "step_seconds": s.step}
        try:
            entry.update(summary(s))
        except WindResError as exc:
            entry["error"] = f"{type(exc).__name__}: {exc}"
        var_records.append(entry)
    var_cols = ["series", "mode", "step_seconds", "n", "mean_mps", "variance_m2ps2", "sample_variance_m2ps2", "min_mps", "max_mps"]
    artifacts.append(
        _table_output(cfg, "variance_table", {"series": var_records}, var_cols, [[r.get(c) for c in var_cols] for r in var_records])
    )

    # parametric fits, possibly in parallel; result order follows series order
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        fit_results = list(pool.map(_fit_one, series.values()))
    fits = {}
    fit_rows = []
    for (key, s), res in zip(series.items(), fit_results):
        fits[key] = {"mode": _mode_label(s), "step_seconds": s.step, **res}
        w, g = res["weibull"], res["gengamma"]
        fit_rows.append(
            [key, _mode_label(s), s.step, w.get("beta"), w.get("lambda_mps"), w.get("theta_mps"), w.get("log_likelihood"),
             g.get("a_mps"), g.get("d"), g.get("p"), g.get("log_likelihood"), w.get("error", "") or g.get("error", "")]
        )
    artifacts.append(
        _table_output(
            cfg,
            "fits",
            {"series": fits},
            ["series", "mode", "step_seconds", "weibull_beta", "weibull_lambda_mps", "weibull_theta_mps", "weibull_log_likelihood",
             "gengamma_a_mps", "gengamma_d", "gengamma_p", "gengamma_log_likelihood", "error"],
            fit_rows,
        )
    )

    # CDF differences against the reference on a shared speed grid
    lo = min(float(s.values.min()) for s in series.values())
    hi = max(float(s.values.max()) for s in series.values())
    grid = np.linspace(lo, hi, 512)
    for key in series:
        if key == ref_key:
            continue
        curve_data = cdf_difference_curve(cdfs[ref_key], cdfs[key], grid)
        name = f"cdf_diff_{key}.csv"
        write_table_csv(cfg.out / name, ["wind_speed_mps", "delta_cdf"], curve_data.tolist())
        artifacts.append(name)

    # KDE and QQ data
    for index, (key, s) in enumerate(series.items()):
        try:
            spec = KdeSpec.scott(s)
        except WindResError:
            spec = None
        if spec is not None:
            dens = kde_density(s, spec, default_kde_grid(s, spec.bandwidth))
            name = f"kde_{key}.csv"
            write_table_csv(
                cfg.out / name,
                ["wind_speed_mps", "density_per_mps", "below_zero"],
                [[x, y, x < 0] for x, y in dens.tolist()],
            )
            artifacts.append(name)
        for dist in ("weibull", "gengamma"):
            fitted = fits[key][dist]
            if "error" in fitted:
                continue
            params = _params_from_dict(dist, fitted)
            pairs = qq_data(s, params, seed=[cfg.seed, index, 0 if dist == "weibull" else 1])
            name = f"qq_{dist}_{key}.csv"
            write_table_csv(cfg.out / name, ["sample_quantile_mps", "model_quantile_mps"], pairs.tolist())
            artifacts.append(name)

    # generation
    if curve is not None:
        candidates = {k: s for k, s in series.items() if k != ref_key}
        report = _stage("power")(generation_error, series[ref_key], candidates, curve, reference_label=ref_key)
        rep = report.as_dict()
        rep["power_curve"] = {"name": curve.name, "cut_in_mps": curve.cut_in, "cut_out_mps": curve.cut_out,
                              "rated_power_kw": curve.rated_power_kw}
        cols = ["label", "mode", "total_energy_kwh", "total_energy_mwh", "relative_error_pct", "absolute_error_kwh", "absolute_error_mwh"]
        artifacts.append(_table_output(cfg, "generation_report", rep, cols, [[e[c] for c in cols] for e in rep["entries"]]))
        for key, entry in report.entries.items():
            name = f"gen_cumulative_{key}.csv"
            write_table_csv(
                cfg.out / name,
                ["end_time", "cumulative_kwh", "fraction_of_reference"],
                [[_iso(t), c, f] for t, c, f in zip(entry.end_times, entry.cumulative_kwh.tolist(), entry.cumulative_fraction.tolist())],
            )
            artifacts.append(name)

    manifest = {
        "tool": "windres",
        "version": __version__,
        "inputs": {
            "input": {"path": str(cfg.input), "sha256": sha256_file(Path(cfg.input))},
            "power_curve": None
            if cfg.power_curve is None
            else {"path": str(cfg.power_curve), "sha256": sha256_file(Path(cfg.power_curve))},
        },
        "parameters": {
            "base_step_seconds": cfg.base_step,
            "resolutions": list(cfg.resolutions),
            "modes": list(cfg.modes),
            "reference": ref_key,
            "seed": cfg.seed,
            "format": cfg.fmt,
        },
        "series": {
            key: {"mode": _mode_label(s), "step_seconds": s.step, "block_length": s.block_factor, "n": len(s)}
            for key, s in series.items()
        },
        "resample_errors": {k: f"{type(e).__name__}: {e}" for k, e in ladder.errors.items()},
        "exclusions": filtered.summary(),
        "artifacts": artifacts + ["run_manifest.json"],
    }
    write_json(cfg.out / "run_manifest.json", manifest)
    return manifest


def _params_from_dict(dist: str, fitted: dict):
    if dist == "weibull":
        return WeibullParams(fitted["beta"], fitted["lambda_mps"], fitted["theta_mps"])
    return GenGammaParams(fitted["a_mps"], fitted["d"], fitted["p"])
