"""Normalized error metrics, improvements, hour/month breakdowns and report files."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import IoFailure, LengthMismatch, ZeroBaseline, ZeroNormalizer

HS_GROUP = "HS"
AIO_GROUP = "all-in-one"
C_OPT = "C_opt"

ModelKey = tuple[str, str]  # (group, model)


@dataclass(frozen=True)
class MetricPair:
    nmae: float
    nrmse: float


def _errors(y, y_hat, normalizer) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape or y.size == 0:
        raise LengthMismatch(f"actuals {y.shape} vs forecasts {y_hat.shape}")
    if not normalizer > 0:
        raise ZeroNormalizer(f"normalizer must be positive, got {normalizer}")
    return y_hat - y


def nmae(y, y_hat, normalizer: float) -> float:
    return 100.0 * float(np.mean(np.abs(_errors(y, y_hat, normalizer)))) / normalizer


def nrmse(y, y_hat, normalizer: float) -> float:
    e = _errors(y, y_hat, normalizer)
    return 100.0 * math.sqrt(float(np.mean(e * e))) / normalizer


def metric_pair(y, y_hat, normalizer: float) -> MetricPair:
    return MetricPair(nmae(y, y_hat, normalizer), nrmse(y, y_hat, normalizer))


def improvement(metric_a: float, metric_h: float) -> float:
    """Relative improvement (%) of the HS metric over the all-in-one metric."""
    if not metric_a > 0:
        raise ZeroBaseline(f"baseline metric must be positive, got {metric_a}")
    return 100.0 * (metric_a - metric_h) / metric_a


def breakdown(y, y_hat, target_timestamps: Sequence[datetime],
              normalizer: float) -> tuple[dict[int, MetricPair], dict[int, MetricPair]]:
    """Metric pairs per target hour and per calendar month; empty groups are omitted."""
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if not (y.size == y_hat.size == len(target_timestamps)):
        raise LengthMismatch("actuals, forecasts and timestamps must align")
    hours = np.array([t.hour for t in target_timestamps])
    months = np.array([t.month for t in target_timestamps])
    by_hour = {int(h): metric_pair(y[hours == h], y_hat[hours == h], normalizer)
               for h in np.unique(hours)}
    by_month = {int(m): metric_pair(y[months == m], y_hat[months == m], normalizer)
                for m in np.unique(months)}
    return by_hour, by_month


def mean_normalizer(y) -> float:
    return float(np.mean(y))


@dataclass
class EvalReport:
    normalizer: float
    overall: dict[ModelKey, MetricPair]
    improvements: dict[ModelKey, tuple[float, float]]
    by_hour: dict[ModelKey, dict[int, MetricPair]]
    by_month: dict[ModelKey, dict[int, MetricPair]]
    counts_by_hour: dict[int, int]
    counts_by_month: dict[int, int]
    # per-hour label of the predictor actually used (e.g. the slot winner)
    predictors: dict[ModelKey, dict[int, str]] = field(default_factory=dict)
    baseline: ModelKey | None = None  # all-in-one model C_opt is compared with


def best_model(overall: Mapping[ModelKey, MetricPair], group: str,
               exclude: Iterable[str] = ()) -> ModelKey:
    """Lowest nRMSE in ``group`` (ties: lower nMAE, then listing order)."""
    exclude = set(exclude)
    keys = [k for k in overall if k[0] == group and k[1] not in exclude]
    return min(keys, key=lambda k: (overall[k].nrmse, overall[k].nmae, keys.index(k)))


def build_report(y, forecasts: Mapping[ModelKey, np.ndarray], target_times: Sequence[datetime],
                 normalizer: float | None = None,
                 predictors: Mapping[ModelKey, Mapping[int, str]] | None = None) -> EvalReport:
    """Evaluate every model on the same targets.

    Each HS model is compared with the all-in-one model of the same name;
    ``C_opt`` is compared with the best all-in-one model.
    """
    y = np.asarray(y, dtype=float)
    if normalizer is None:
        normalizer = mean_normalizer(y)
    overall, by_hour, by_month = {}, {}, {}
    for key, y_hat in forecasts.items():
        overall[key] = metric_pair(y, y_hat, normalizer)
        by_hour[key], by_month[key] = breakdown(y, y_hat, target_times, normalizer)

    improvements = {}
    baseline = None
    for (group, model), mp in overall.items():
        if group != HS_GROUP:
            continue
        if model == C_OPT:
            if any(k[0] == AIO_GROUP for k in overall):
                baseline = best_model(overall, AIO_GROUP)
                ref = overall[baseline]
            else:
                continue
        elif (AIO_GROUP, model) in overall:
            ref = overall[(AIO_GROUP, model)]
        else:
            continue
        improvements[(group, model)] = (improvement(ref.nmae, mp.nmae), improvement(ref.nrmse, mp.nrmse))

    hours = [t.hour for t in target_times]
    months = [t.month for t in target_times]
    return EvalReport(
        normalizer=float(normalizer),
        overall=overall,
        improvements=improvements,
        by_hour=by_hour,
        by_month=by_month,
        counts_by_hour={h: hours.count(h) for h in sorted(set(hours))},
        counts_by_month={m: months.count(m) for m in sorted(set(months))},
        predictors={k: dict(v) for k, v in (predictors or {}).items()},
        baseline=baseline,
    )


def _f2(v: float | None) -> str:
    return "N/A" if v is None else f"{v:.2f}"


def _write(path: Path, text: str) -> Path:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def overall_csv(report: EvalReport) -> str:
    lines = ["model,group,nmae,nrmse,imp_a,imp_r"]
    for key, mp in report.overall.items():
        imp = report.improvements.get(key, (None, None))
        lines.append(f"{key[1]},{key[0]},{_f2(mp.nmae)},{_f2(mp.nrmse)},{_f2(imp[0])},{_f2(imp[1])}")
    return "\n".join(lines) + "\n"


def _breakdown_csv(report: EvalReport, kind: str) -> str:
    table = report.by_hour if kind == "hour" else report.by_month
    counts = report.counts_by_hour if kind == "hour" else report.counts_by_month
    lines = [f"{kind},group,model,predictor,nmae,nrmse,n"]
    for key, rows in table.items():
        for unit in sorted(rows):
            mp = rows[unit]
            if kind == "hour":
                predictor = report.predictors.get(key, {}).get(unit, key[1])
            else:
                predictor = key[1]
            lines.append(f"{unit},{key[0]},{key[1]},{predictor},{_f2(mp.nmae)},{_f2(mp.nrmse)},{counts[unit]}")
    return "\n".join(lines) + "\n"


def figure_models(report: EvalReport) -> list[ModelKey]:
    """The two best models of each group (one free choice, one single-blender MMFF)."""
    keys = []
    if (HS_GROUP, C_OPT) in report.overall:
        keys.append((HS_GROUP, C_OPT))
    if any(k[0] == HS_GROUP and k[1] != C_OPT for k in report.overall):
        keys.append(best_model(report.overall, HS_GROUP, exclude=[C_OPT]))
    if any(k[0] == AIO_GROUP for k in report.overall):
        keys.append(best_model(report.overall, AIO_GROUP))
        others = [k for k in report.overall if k[0] == AIO_GROUP and k not in keys and k[1] != "P"]
        if others:
            keys.append(best_model(report.overall, AIO_GROUP, exclude=["P", keys[-1][1]]))
    return keys


_COLORS = ("#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02")


def line_chart_svg(title: str, xs: Sequence[int], series: Mapping[str, Sequence[float]],
                   x_label: str, y_label: str, width: int = 640, height: int = 360) -> str:
    """Minimal deterministic SVG line chart."""
    left, right, top, bottom = 60, 150, 40, 50
    pw, ph = width - left - right, height - top - bottom
    values = [v for vs in series.values() for v in vs]
    y_max = max(values) if values else 1.0
    y_max = y_max * 1.1 if y_max > 0 else 1.0
    x0, x1 = min(xs), max(xs)
    span = (x1 - x0) or 1

    def px(x):
        return left + pw * (x - x0) / span

    def py(v):
        return top + ph * (1.0 - v / y_max)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{left + pw / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
           f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
           f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>']
    for x in xs:
        out.append(f'<text x="{px(x):.1f}" y="{top + ph + 15}" text-anchor="middle">{x}</text>')
    for i in range(6):
        v = y_max * i / 5
        out.append(f'<text x="{left - 5}" y="{py(v) + 4:.1f}" text-anchor="end">{v:.1f}</text>')
        out.append(f'<line x1="{left}" y1="{py(v):.1f}" x2="{left + pw}" y2="{py(v):.1f}" '
                   f'stroke="#ddd"/>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{x_label}</text>')
    out.append(f'<text x="15" y="{top + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 15 {top + ph / 2:.1f})">{y_label}</text>')
    for i, (name, vs) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{px(x):.1f},{py(v):.1f}" for x, v in zip(xs, vs))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        ly = top + 15 + 18 * i
        out.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 35}" y="{ly + 4}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _chart(report: EvalReport, kind: str, metric: str) -> str:
    table = report.by_hour if kind == "hour" else report.by_month
    keys = figure_models(report)
    units = sorted({u for k in keys for u in table[k]})
    series = {}
    for k in keys:
        label = f"{k[1]} ({'h' if k[0] == HS_GROUP else 'a'})"
        series[label] = [getattr(table[k][u], metric) if u in table[k] else 0.0 for u in units]
    title = f"Forecasting errors by {kind} ({metric})"
    return line_chart_svg(title, units, series, kind, f"{metric} (%)")


def emit_report(report: EvalReport, out_dir: str | Path, formats: Sequence[str] = ("csv",)) -> list[Path]:
    """Write overall/by_hour/by_month CSVs and, with ``"svg"``, line charts."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {out}: {exc}") from exc
    written = []
    if "csv" in formats:
        written.append(_write(out / "overall.csv", overall_csv(report)))
        written.append(_write(out / "by_hour.csv", _breakdown_csv(report, "hour")))
        written.append(_write(out / "by_month.csv", _breakdown_csv(report, "month")))
    if "svg" in formats:
        for kind in ("hour", "month"):
            for metric in ("nmae", "nrmse"):
                written.append(_write(out / f"by_{kind}_{metric}.svg", _chart(report, kind, metric)))
    return written
