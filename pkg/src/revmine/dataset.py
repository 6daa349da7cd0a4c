"""Archive -> normalized records -> filtered, metric-projected CSV tables.

The builder never touches the network: it replays the raw archive through
the adapter's normalizers, applies dataset-time filters, and projects the
selected metrics into four foreign-keyed tables (reviews, commits,
comments, files).
"""

from __future__ import annotations

import csv
import json
import re
import secrets
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import adapters, catalog as _catalog
from .errors import ArchiveIoError, UnknownMetric
from .plan import FilterSet, parse_plan
from .records import CommentRecord, CommitRecord, FileChangeRecord, ReviewRecord
from .timestamps import format_ts

GRANULARITY_TABLE = {"review": "reviews", "commit": "commits",
                     "comment": "comments", "file": "files"}


@dataclass
class Table:
    columns: list[tuple[str, str]]  # (name, value_kind)
    rows: list[tuple]


@dataclass
class Dataset:
    dataset_id: str
    source_run_id: str
    tables: dict[str, Table]
    applied_filters: FilterSet
    built_at: datetime
    warnings: list[str] = field(default_factory=list)


# --- archive loading -------------------------------------------------------


def load_archive(run_dir) -> tuple[list[ReviewRecord], list[str]]:
    """Normalize every raw file; returns (records, warnings)."""
    run_dir = Path(run_dir)
    plan = parse_plan((run_dir / "plan.json").read_text())
    platform = plan.platform
    warnings: list[str] = []

    reviews: dict[int, ReviewRecord] = {}
    for page_file in sorted((run_dir / "raw" / "reviews").glob("page-*.json")):
        try:
            items = json.loads(page_file.read_bytes())
        except ValueError as exc:
            warnings.append(f"{page_file.name}: {exc}")
            continue
        for item in items:
            try:
                record = adapters.normalize_review(platform, item)
            except Exception as exc:
                warnings.append(f"{page_file.name}: {exc}")
                continue
            reviews[record.number] = record

    def load_children(entity, normalize):
        out: dict[int, list] = {}
        directory = run_dir / "raw" / entity
        if not directory.is_dir():
            return out
        for child_file in sorted(directory.glob("review-*.json")):
            m = re.match(r"review-(\d+)", child_file.stem)
            if not m:
                continue
            number = int(m.group(1))
            try:
                items = json.loads(child_file.read_bytes())
            except ValueError as exc:
                warnings.append(f"{entity}/{child_file.name}: {exc}")
                continue
            bucket = out.setdefault(number, [])
            for item in items:
                try:
                    record = normalize(platform, item)
                except Exception as exc:
                    warnings.append(f"{entity}/{child_file.name}: {exc}")
                    continue
                if record is not None:
                    bucket.append(record)
        return out

    commits = load_children("commits", adapters.normalize_commit)
    comments = load_children("comments", adapters.normalize_comment)
    files = load_children("files", adapters.normalize_file)

    out = []
    for number in sorted(reviews):
        out.append(reviews[number].with_children(
            commits=commits.get(number, []),
            comments=comments.get(number, []),
            files=files.get(number, []),
        ))
    return out, warnings


# --- filtering -------------------------------------------------------------


def apply_filters(records: list[ReviewRecord], filters: FilterSet) -> list[ReviewRecord]:
    """Keep a review iff every present filter component accepts it."""

    def keep(r: ReviewRecord) -> bool:
        if filters.time_window is not None:
            start, end = filters.time_window
            if not (start <= r.created_at <= end):
                return False
        if filters.states is not None and r.state not in filters.states:
            return False
        if filters.min_comments is not None and len(r.comments) < filters.min_comments:
            return False
        if filters.authors is not None and r.author not in filters.authors:
            return False
        if filters.file_extensions is not None:
            exts = tuple(e.lower() for e in filters.file_extensions)
            if not any(f.path.lower().endswith(exts) for f in r.files):
                return False
        if filters.keywords is not None:
            haystacks = [r.title.lower(), r.description.lower()]
            haystacks.extend(c.body.lower() for c in r.comments)
            if not any(kw.lower() in h for kw in filters.keywords for h in haystacks):
                return False
        return True

    return [r for r in records if keep(r)]


# --- metric computation ----------------------------------------------------

_HOUR = 3600.0


def compute_metric(metric_id: str, record: ReviewRecord):
    """Review-granularity metric value, or None when structurally absent."""
    desc = _catalog.descriptor(metric_id)
    if desc.granularity != "review":
        raise UnknownMetric(metric_id)
    direct = {
        "review_id": record.review_id,
        "title": record.title,
        "description": record.description,
        "state": record.state,
        "created_at": record.created_at,
        "merged_at": record.merged_at,
        "closed_at": record.closed_at,
        "author": record.author,
        "source_branch": record.source_branch,
        "target_branch": record.target_branch,
    }
    if metric_id in direct:
        return direct[metric_id]
    if metric_id == "review_duration_hours":
        if record.state != "merged" or record.merged_at is None:
            return None
        return (record.merged_at - record.created_at).total_seconds() / _HOUR
    if metric_id == "comment_count":
        return len(record.comments)
    if metric_id == "inline_comment_count":
        return sum(1 for c in record.comments if c.kind == "inline")
    if metric_id == "reviewer_count":
        return len({c.author for c in record.comments} - {record.author})
    if metric_id == "commit_count":
        return len(record.commits)
    if metric_id == "files_changed":
        return len(record.files)
    if metric_id == "time_to_first_response_hours":
        if not record.comments:
            return None
        first = min(c.created_at for c in record.comments)
        return (first - record.created_at).total_seconds() / _HOUR
    raise UnknownMetric(metric_id)


def _commit_value(metric_id: str, c: CommitRecord):
    return {
        "commit_sha": c.sha,
        "commit_committed_at": c.committed_at,
        "commit_authored_at": c.authored_at,
        "commit_author": c.author_name,
        "commit_message": c.message,
        "commit_file_diffs": json.dumps(
            [{"path": d.path, "additions": d.additions, "deletions": d.deletions}
             for d in c.diffs], sort_keys=True),
    }[metric_id]


def _comment_value(metric_id: str, c: CommentRecord):
    return {
        "comment_id": c.comment_id,
        "comment_kind": c.kind,
        "comment_author": c.author,
        "comment_body": c.body,
        "comment_created_at": c.created_at,
        "comment_file_path": c.file_path,
        "comment_line": c.line,
    }[metric_id]


def _file_value(metric_id: str, f: FileChangeRecord):
    return {
        "file_path": f.path,
        "file_change_type": f.change_type,
        "file_additions": f.additions,
        "file_deletions": f.deletions,
    }[metric_id]


# --- dataset assembly ------------------------------------------------------


def build_dataset(run_dir, metric_ids: list[str], filters: FilterSet,
                  dataset_id: str | None = None,
                  built_at: datetime | None = None) -> Dataset:
    run_dir = Path(run_dir)
    records, warnings = load_archive(run_dir)
    records = apply_filters(records, filters)

    by_granularity: dict[str, list[str]] = {"review": [], "commit": [],
                                            "comment": [], "file": []}
    for mid in metric_ids:
        desc = _catalog.descriptor(mid)
        if mid not in by_granularity[desc.granularity]:
            by_granularity[desc.granularity].append(mid)

    tables: dict[str, Table] = {}

    review_cols = ["review_id"] + [m for m in by_granularity["review"]
                                   if m != "review_id"]
    tables["reviews"] = Table(
        columns=[(m, _catalog.descriptor(m).value_kind) for m in review_cols],
        rows=[tuple(compute_metric(m, r) for m in review_cols) for r in records],
    )

    child_specs = [
        ("commits", "commit", _commit_value, lambda r: r.commits),
        ("comments", "comment", _comment_value, lambda r: r.comments),
        ("files", "file", _file_value, lambda r: r.files),
    ]
    for table_name, gran, value_fn, children in child_specs:
        mids = by_granularity[gran]
        if not mids:
            continue
        columns = [("review_id", "string")] + [
            (m, _catalog.descriptor(m).value_kind) for m in mids]
        rows = []
        for r in records:
            for child in children(r):
                rows.append((r.review_id,) + tuple(value_fn(m, child) for m in mids))
        tables[table_name] = Table(columns=columns, rows=rows)

    return Dataset(
        dataset_id=dataset_id or ("ds-" + secrets.token_hex(4)),
        source_run_id=run_dir.name,
        tables=tables,
        applied_filters=filters,
        built_at=built_at or datetime.now(timezone.utc).replace(microsecond=0),
        warnings=warnings,
    )


# --- CSV export ------------------------------------------------------------


def format_value(value) -> str:
    """One cell, RFC 4180 pre-quoting: absent -> empty, timestamps Z-suffixed."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, datetime):
        return format_ts(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def export_csv(dataset: Dataset, out_dir) -> list[Path]:
    """One RFC 4180 file per table plus dataset.json metadata."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = []
        for table_name in ("reviews", "commits", "comments", "files"):
            table = dataset.tables.get(table_name)
            if table is None:
                continue
            path = out_dir / f"{table_name}.csv"
            with open(path, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\r\n",
                                    quoting=csv.QUOTE_MINIMAL)
                writer.writerow([name for name, _ in table.columns])
                for row in table.rows:
                    writer.writerow([format_value(v) for v in row])
            paths.append(path)
        meta_path = out_dir / "dataset.json"
        meta_path.write_text(json.dumps(dataset_metadata(dataset),
                                        sort_keys=True, indent=2) + "\n")
        paths.append(meta_path)
        return paths
    except OSError as exc:
        raise ArchiveIoError(str(exc)) from exc


def _json_value(value):
    if isinstance(value, datetime):
        return format_ts(value)
    return value


def dataset_to_doc(dataset: Dataset) -> dict:
    """Full JSON form including rows; reversible via dataset_from_doc."""
    doc = dataset_metadata(dataset)
    for name, table in dataset.tables.items():
        doc["tables"][name]["rows"] = [
            [_json_value(v) for v in row] for row in table.rows]
    return doc


def dataset_from_doc(doc: dict) -> Dataset:
    from .plan import filters_from_doc
    from .timestamps import parse_ts

    tables = {}
    for name, tdoc in doc["tables"].items():
        columns = [(c["name"], c["value_kind"]) for c in tdoc["columns"]]
        rows = []
        for raw_row in tdoc.get("rows", []):
            row = []
            for value, (_, kind) in zip(raw_row, columns):
                if value is not None and kind == "timestamp":
                    value = parse_ts(value)
                row.append(value)
            rows.append(tuple(row))
        tables[name] = Table(columns=columns, rows=rows)
    return Dataset(
        dataset_id=doc["dataset_id"],
        source_run_id=doc["source_run_id"],
        tables=tables,
        applied_filters=filters_from_doc(doc.get("applied_filters") or {}),
        built_at=parse_ts(doc["built_at"]),
        warnings=list(doc.get("warnings", [])),
    )


def dataset_metadata(dataset: Dataset) -> dict:
    from .plan import filters_to_doc

    return {
        "dataset_id": dataset.dataset_id,
        "source_run_id": dataset.source_run_id,
        "applied_filters": filters_to_doc(dataset.applied_filters),
        "built_at": format_ts(dataset.built_at),
        "tables": {
            name: {"columns": [{"name": n, "value_kind": k}
                               for n, k in table.columns],
                   "row_count": len(table.rows)}
            for name, table in dataset.tables.items()
        },
        "warnings": dataset.warnings,
    }
