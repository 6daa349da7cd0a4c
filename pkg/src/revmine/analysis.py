"""Declarative analyses over datasets: summaries, group-bys, keyword screening.

Everything here is a pure function of an in-memory Dataset. Charts are not
rendered; time series and tables are emitted as chart-data documents the
dashboard consumes verbatim.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from pathlib import Path

from .dataset import Dataset, Table, format_value
from .errors import ArchiveIoError, SpecValidationError
from .timestamps import format_ts

SPEC_VERSION = 1
FILTER_OPS = ("eq", "lt", "gt", "contains")
AGG_FNS = ("count", "sum", "mean", "median", "p90")
BUCKETINGS = ("none", "iso_week", "iso_month")


@dataclass(frozen=True)
class SpecFilter:
    column: str
    op: str
    value: object


@dataclass(frozen=True)
class Aggregation:
    fn: str
    column: str  # "*" only with count


@dataclass(frozen=True)
class AnalysisSpec:
    granularity: str  # table name
    aggregations: tuple[Aggregation, ...]
    output: str  # "table" | "timeseries"
    filters: tuple[SpecFilter, ...] = ()
    group_by: tuple[str, str] | None = None  # (column, bucketing)
    spec_version: int = SPEC_VERSION

    def as_dict(self) -> dict:
        doc: dict = {
            "granularity": self.granularity,
            "aggregations": [{"fn": a.fn, "column": a.column}
                             for a in self.aggregations],
            "output": self.output,
            "spec_version": self.spec_version,
        }
        if self.filters:
            doc["filters"] = [{"column": f.column, "op": f.op, "value": f.value}
                              for f in self.filters]
        if self.group_by is not None:
            doc["group_by"] = {"column": self.group_by[0],
                               "bucket": self.group_by[1]}
        return doc


def spec_from_doc(doc: dict) -> AnalysisSpec:
    try:
        group_by = None
        if doc.get("group_by"):
            group_by = (doc["group_by"]["column"],
                        doc["group_by"].get("bucket", "none"))
        return AnalysisSpec(
            granularity=doc["granularity"],
            aggregations=tuple(Aggregation(a["fn"], a.get("column", "*"))
                               for a in doc["aggregations"]),
            output=doc.get("output", "table"),
            filters=tuple(SpecFilter(f["column"], f["op"], f["value"])
                          for f in doc.get("filters", [])),
            group_by=group_by,
            spec_version=doc.get("spec_version", SPEC_VERSION),
        )
    except (KeyError, TypeError) as exc:
        raise SpecValidationError([f"malformed analysis spec: {exc}"]) from exc


@dataclass(frozen=True)
class TimeSeries:
    bucket_labels: tuple[str, ...]
    values: tuple[float | None, ...]
    name: str = "value"


@dataclass
class TableResult:
    columns: list[str]
    rows: list[tuple]


# --- spec validation -------------------------------------------------------

_NUMERIC_KINDS = {"integer", "float"}


def validate_spec(spec: AnalysisSpec, dataset: Dataset) -> list[str]:
    issues: list[str] = []
    if spec.spec_version != SPEC_VERSION:
        issues.append(f"unsupported spec_version {spec.spec_version}")
    table = dataset.tables.get(spec.granularity)
    if table is None:
        issues.append(f"dataset has no table {spec.granularity!r}")
        return issues
    kinds = {name: kind for name, kind in table.columns}

    for f in spec.filters:
        if f.column not in kinds:
            issues.append(f"unknown filter column {f.column!r}")
        if f.op not in FILTER_OPS:
            issues.append(f"unknown filter op {f.op!r}")

    if not spec.aggregations:
        issues.append("at least one aggregation is required")
    for a in spec.aggregations:
        if a.fn not in AGG_FNS:
            issues.append(f"unknown aggregation {a.fn!r}")
            continue
        if a.fn == "count":
            if a.column != "*" and a.column not in kinds:
                issues.append(f"unknown aggregation column {a.column!r}")
            continue
        if a.column not in kinds:
            issues.append(f"unknown aggregation column {a.column!r}")
        elif kinds[a.column] not in _NUMERIC_KINDS:
            issues.append(f"aggregation {a.fn} needs a numeric column, "
                          f"{a.column!r} is {kinds[a.column]}")

    if spec.group_by is not None:
        column, bucket = spec.group_by
        if column not in kinds:
            issues.append(f"unknown group_by column {column!r}")
        if bucket not in BUCKETINGS:
            issues.append(f"unknown bucketing {bucket!r}")
        elif bucket != "none" and kinds.get(column) not in (None, "timestamp"):
            issues.append(f"time bucketing needs a timestamp column, "
                          f"{column!r} is {kinds.get(column)}")

    if spec.output == "timeseries":
        if spec.group_by is None or spec.group_by[1] == "none":
            issues.append("timeseries output requires time-bucketed group_by")
        if len(spec.aggregations) != 1:
            issues.append("timeseries output supports exactly one aggregation")
    elif spec.output != "table":
        issues.append(f"unknown output {spec.output!r}")
    return issues


# --- aggregation primitives ------------------------------------------------


def median(values: list[float]) -> float:
    """Even-count sets take the mean of the two central values."""
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    if n % 2:
        return float(ordered[mid])
    return (ordered[mid - 1] + ordered[mid]) / 2.0


def p90(values: list[float]) -> float:
    """Nearest-rank 90th percentile."""
    ordered = sorted(values)
    rank = math.ceil(0.9 * len(ordered))
    return float(ordered[max(rank, 1) - 1])


def _aggregate(fn: str, column: str, rows: list[tuple], index: dict[str, int]):
    if fn == "count":
        if column == "*":
            return len(rows)
        i = index[column]
        return sum(1 for r in rows if r[i] is not None)
    i = index[column]
    values = [float(r[i]) for r in rows if r[i] is not None]
    if not values:
        return None
    if fn == "sum":
        return sum(values)
    if fn == "mean":
        return sum(values) / len(values)
    if fn == "median":
        return median(values)
    return p90(values)


# --- bucketing -------------------------------------------------------------


def iso_week_label(dt: datetime) -> str:
    y, w, _ = dt.isocalendar()
    return f"{y}-W{w:02d}"


def iso_month_label(dt: datetime) -> str:
    return f"{dt.year}-{dt.month:02d}"


def _week_start(label: str) -> date:
    y, w = label.split("-W")
    return date.fromisocalendar(int(y), int(w), 1)


def _all_labels_between(bucket: str, lo: str, hi: str) -> list[str]:
    """Materialize every bucket label from lo to hi inclusive."""
    labels = []
    if bucket == "iso_week":
        day = _week_start(lo)
        end = _week_start(hi)
        while day <= end:
            y, w, _ = day.isocalendar()
            labels.append(f"{y}-W{w:02d}")
            day += timedelta(days=7)
    else:
        y, m = (int(p) for p in lo.split("-"))
        ey, em = (int(p) for p in hi.split("-"))
        while (y, m) <= (ey, em):
            labels.append(f"{y}-{m:02d}")
            m += 1
            if m == 13:
                y, m = y + 1, 1
    return labels


# --- operations ------------------------------------------------------------


def _apply_spec_filters(rows: list[tuple], filters, index) -> list[tuple]:
    def keep(row) -> bool:
        for f in filters:
            value = row[index[f.column]]
            if f.op == "eq":
                if not (value == f.value or format_value(value) == str(f.value)):
                    return False
            elif f.op == "lt":
                if value is None or not value < type(value)(f.value):
                    return False
            elif f.op == "gt":
                if value is None or not value > type(value)(f.value):
                    return False
            elif f.op == "contains":
                if value is None or str(f.value).lower() not in str(value).lower():
                    return False
        return True

    return [r for r in rows if keep(r)]


def run_spec(dataset: Dataset, spec: AnalysisSpec) -> TableResult | TimeSeries:
    issues = validate_spec(spec, dataset)
    if issues:
        raise SpecValidationError(issues)
    table = dataset.tables[spec.granularity]
    index = {name: i for i, (name, _) in enumerate(table.columns)}
    rows = _apply_spec_filters(table.rows, spec.filters, index)

    if spec.group_by is None:
        values = tuple(_aggregate(a.fn, a.column, rows, index)
                       for a in spec.aggregations)
        return TableResult(columns=[_agg_name(a) for a in spec.aggregations],
                           rows=[values])

    column, bucket = spec.group_by
    i = index[column]

    def label_of(value):
        if bucket == "iso_week":
            return iso_week_label(value)
        if bucket == "iso_month":
            return iso_month_label(value)
        return format_value(value)

    groups: dict[str, list[tuple]] = {}
    for row in rows:
        if row[i] is None:
            continue
        groups.setdefault(label_of(row[i]), []).append(row)

    if bucket == "none":
        labels = sorted(groups)
    elif groups:
        labels = _all_labels_between(bucket, min(groups), max(groups))
    else:
        labels = []

    if spec.output == "timeseries":
        agg = spec.aggregations[0]
        zero_fill = agg.fn in ("count", "sum")
        values = []
        for label in labels:
            bucket_rows = groups.get(label, [])
            if not bucket_rows:
                values.append(0.0 if zero_fill else None)
                continue
            v = _aggregate(agg.fn, agg.column, bucket_rows, index)
            values.append(float(v) if v is not None else (0.0 if zero_fill else None))
        return TimeSeries(bucket_labels=tuple(labels), values=tuple(values),
                          name=_agg_name(agg))

    out_rows = []
    for label in labels:
        bucket_rows = groups.get(label, [])
        aggs = tuple(_aggregate(a.fn, a.column, bucket_rows, index)
                     for a in spec.aggregations)
        out_rows.append((label,) + aggs)
    return TableResult(columns=[column] + [_agg_name(a) for a in spec.aggregations],
                       rows=out_rows)


def _agg_name(a: Aggregation) -> str:
    return a.fn if a.column == "*" else f"{a.fn}({a.column})"


def summarize(dataset: Dataset) -> dict:
    """High-level summary over the reviews table."""
    table = dataset.tables["reviews"]
    index = {name: i for i, (name, _) in enumerate(table.columns)}
    rows = table.rows

    def column_values(name):
        if name not in index:
            return None
        return [r[index[name]] for r in rows]

    review_count = len(rows)
    report: dict = {"review_count": review_count}

    comment_counts = column_values("comment_count")
    if comment_counts is None and "comments" in dataset.tables:
        ctable = dataset.tables["comments"]
        ci = {name: i for i, (name, _) in enumerate(ctable.columns)}
        per_review: dict[str, int] = {}
        for crow in ctable.rows:
            per_review[crow[ci["review_id"]]] = per_review.get(
                crow[ci["review_id"]], 0) + 1
        rid = column_values("review_id")
        comment_counts = [per_review.get(r, 0) for r in rid] if rid else None

    report["avg_comments_per_review"] = (
        sum(comment_counts) / review_count
        if comment_counts is not None and review_count else None)

    durations = [v for v in (column_values("review_duration_hours") or [])
                 if v is not None]
    report["mean_review_duration_hours"] = (
        sum(durations) / len(durations) if durations else None)
    report["median_review_duration_hours"] = median(durations) if durations else None

    authors = column_values("author")
    report["distinct_authors"] = len(set(authors)) if authors is not None else None

    commenters = None
    if "comments" in dataset.tables:
        ctable = dataset.tables["comments"]
        ci = {name: i for i, (name, _) in enumerate(ctable.columns)}
        if "comment_author" in ci:
            commenters = len({r[ci["comment_author"]] for r in ctable.rows})
    report["distinct_commenters"] = commenters

    def total(col, table_name):
        values = column_values(col)
        if values is not None:
            return sum(v for v in values if v is not None)
        if table_name in dataset.tables:
            return len(dataset.tables[table_name].rows)
        return None

    report["total_commits"] = total("commit_count", "commits")
    report["total_comments"] = total("comment_count", "comments")
    report["total_files_changed"] = total("files_changed", "files")

    created = [v for v in (column_values("created_at") or []) if v is not None]
    report["window"] = (
        {"start": format_ts(min(created)), "end": format_ts(max(created))}
        if created else None)
    return report


def keyword_screen(dataset: Dataset, patterns: list[str]) -> list[dict]:
    """Case-insensitive literal matches over comment bodies, with snippets."""
    if "comments" not in dataset.tables or not patterns:
        return []
    table = dataset.tables["comments"]
    index = {name: i for i, (name, _) in enumerate(table.columns)}
    if "comment_body" not in index:
        return []
    hits = []
    for row in table.rows:
        body = row[index["comment_body"]] or ""
        lowered = body.lower()
        for pattern in patterns:
            pos = lowered.find(pattern.lower())
            if pos < 0:
                continue
            start = max(0, pos - 40)
            end = min(len(body), pos + len(pattern) + 40)
            hits.append({
                "review_id": row[index["review_id"]],
                "comment_id": row[index.get("comment_id", index["review_id"])],
                "pattern": pattern,
                "snippet": body[start:end],
            })
    hits.sort(key=lambda h: (str(h["review_id"]), str(h["comment_id"]), h["pattern"]))
    return hits


# --- export ----------------------------------------------------------------


def chart_data(result: TableResult | TimeSeries) -> dict:
    if isinstance(result, TimeSeries):
        return {
            "kind": "timeseries",
            "labels": list(result.bucket_labels),
            "series": [{"name": result.name, "values": list(result.values)}],
        }
    labels = [str(r[0]) for r in result.rows] if len(result.columns) > 1 else ["all"]
    start = 1 if len(result.columns) > 1 else 0
    series = []
    for j in range(start, len(result.columns)):
        series.append({
            "name": result.columns[j],
            "values": [r[j] for r in result.rows],
        })
    return {"kind": "table", "labels": labels, "series": series}


def export_analysis(result, out_dir, fmt: str = "csv",
                    name: str = "analysis") -> Path:
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if fmt == "chart-data":
            path = out_dir / f"{name}.chart.json"
            path.write_text(json.dumps(chart_data(result), sort_keys=True,
                                       indent=2) + "\n")
            return path
        path = out_dir / f"{name}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
            if isinstance(result, TimeSeries):
                writer.writerow(["bucket", result.name])
                for label, value in zip(result.bucket_labels, result.values):
                    writer.writerow([label, format_value(value)])
            else:
                writer.writerow(result.columns)
                for row in result.rows:
                    writer.writerow([format_value(v) for v in row])
        return path
    except OSError as exc:
        raise ArchiveIoError(str(exc)) from exc
