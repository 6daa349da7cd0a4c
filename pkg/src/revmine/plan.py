"""Collection plans: the declarative contract between intent and execution.

A plan says which platform to mine, which entities to fetch (reviews plus
nested commits/comments/files), which filters to apply, and which metrics
the dataset should carry. Plans are immutable values with one canonical
JSON form (``plan.json``) shared by the CLI, the service, the orchestrator,
and the collector.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

from . import catalog as _catalog
from .errors import PlanParseError, UnknownCategory, UnknownMetric, UnsupportedSchemaVersion
from .timestamps import format_ts, parse_ts

SCHEMA_VERSION = 1
PLATFORMS = ("github", "gitlab")
ENTITY_ORDER = ("reviews", "commits", "comments", "files")
STATES = ("open", "merged", "closed")


@dataclass(frozen=True)
class MetricSelection:
    """Either a whole category or a single metric id; exactly one is set."""

    category: str | None = None
    metric_id: str | None = None

    def __post_init__(self):
        if (self.category is None) == (self.metric_id is None):
            raise ValueError("exactly one of category/metric_id must be set")


@dataclass(frozen=True)
class Provenance:
    kind: str  # "manual" | "llm"
    query: str | None = None
    provider_label: str | None = None


MANUAL = Provenance(kind="manual")


@dataclass(frozen=True)
class FilterSet:
    """Dataset-time row filters; absent components are vacuously true."""

    time_window: tuple[datetime, datetime] | None = None
    states: tuple[str, ...] | None = None
    min_comments: int | None = None
    authors: tuple[str, ...] | None = None
    file_extensions: tuple[str, ...] | None = None
    keywords: tuple[str, ...] | None = None

    def is_empty(self) -> bool:
        return all(
            getattr(self, f) is None
            for f in ("time_window", "states", "min_comments", "authors",
                      "file_extensions", "keywords")
        )


@dataclass(frozen=True)
class CollectionPlan:
    plan_id: str
    platform: str
    entities: frozenset[str]
    metrics: tuple[MetricSelection, ...]
    filters: FilterSet = field(default_factory=FilterSet)
    provenance: Provenance = MANUAL
    created_at: datetime = field(
        default_factory=lambda: datetime.now(timezone.utc).replace(microsecond=0)
    )
    schema_version: int = SCHEMA_VERSION


@dataclass(frozen=True)
class Issue:
    severity: str  # "error" | "warning"
    code: str
    message: str
    path: str

    def as_dict(self) -> dict:
        return {"severity": self.severity, "code": self.code,
                "message": self.message, "path": self.path}


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[Issue, ...]

    @property
    def valid(self) -> bool:
        return not any(i.severity == "error" for i in self.issues)

    def as_dict(self) -> dict:
        return {"valid": self.valid, "issues": [i.as_dict() for i in self.issues]}


def expand_selection(selection: MetricSelection) -> list[str]:
    """Expand a selection to explicit metric ids in catalog order."""
    if selection.category is not None:
        return _catalog.category_members(selection.category)
    _catalog.descriptor(selection.metric_id)
    return [selection.metric_id]


def expanded_metric_ids(plan: CollectionPlan) -> list[str]:
    """All selected metric ids, deduplicated, first-appearance order."""
    seen: list[str] = []
    for sel in plan.metrics:
        for mid in expand_selection(sel):
            if mid not in seen:
                seen.append(mid)
    return seen


_METRIC_ENTITY = {"commits": "commits", "comments": "comments", "files": "files"}
_DERIVED_ENTITY = {
    "comment_count": "comments",
    "inline_comment_count": "comments",
    "reviewer_count": "comments",
    "time_to_first_response_hours": "comments",
    "commit_count": "commits",
    "files_changed": "files",
}


def required_entities(plan: CollectionPlan) -> frozenset[str]:
    """Entities the plan's metrics and filters imply, plus reviews."""
    needed = {"reviews"}
    for mid in expanded_metric_ids(plan):
        desc = _catalog.descriptor(mid)
        if desc.category in _METRIC_ENTITY:
            needed.add(_METRIC_ENTITY[desc.category])
        if mid in _DERIVED_ENTITY:
            needed.add(_DERIVED_ENTITY[mid])
    f = plan.filters
    if f.min_comments is not None or f.keywords:
        needed.add("comments")
    if f.file_extensions:
        needed.add("files")
    return frozenset(needed)


def normalize_plan(plan: CollectionPlan) -> CollectionPlan:
    """Canonical form: explicit metric ids, implied entities, tidy filters.

    Idempotent; raises UnknownMetric/UnknownCategory on bad selections.
    """
    metric_ids = expanded_metric_ids(plan)
    metrics = tuple(MetricSelection(metric_id=m) for m in metric_ids)
    f = plan.filters
    filters = replace(
        f,
        states=tuple(sorted(set(f.states))) if f.states is not None else None,
        authors=tuple(sorted(set(f.authors))) if f.authors is not None else None,
        file_extensions=tuple(sorted({e.lower() for e in f.file_extensions}))
        if f.file_extensions is not None else None,
        keywords=tuple(sorted(set(f.keywords))) if f.keywords is not None else None,
    )
    normalized = replace(plan, metrics=metrics, filters=filters)
    entities = frozenset(plan.entities) | required_entities(normalized)
    return replace(normalized, entities=entities)


def validate_plan(plan: CollectionPlan, now: datetime | None = None) -> ValidationReport:
    issues: list[Issue] = []

    def err(code, message, path):
        issues.append(Issue("error", code, message, path))

    def warn(code, message, path):
        issues.append(Issue("warning", code, message, path))

    if plan.platform not in PLATFORMS:
        err("UNKNOWN_PLATFORM", f"unknown platform {plan.platform!r}", "platform")
    if not plan.entities:
        err("EMPTY_ENTITIES", "plan selects no entities", "entities")
    elif "reviews" not in plan.entities:
        err("MISSING_ROOT_ENTITY", "reviews is the root entity and must be present",
            "entities")
    for e in sorted(plan.entities):
        if e not in ENTITY_ORDER:
            err("UNKNOWN_ENTITY", f"unknown entity {e!r}", "entities")

    for i, sel in enumerate(plan.metrics):
        try:
            expand_selection(sel)
        except UnknownMetric as exc:
            err("UNKNOWN_METRIC", str(exc), f"metrics[{i}]")
        except UnknownCategory as exc:
            err("UNKNOWN_CATEGORY", str(exc), f"metrics[{i}]")
    if not plan.metrics:
        warn("EMPTY_METRICS", "plan selects no metrics", "metrics")

    f = plan.filters
    if f.time_window is not None:
        start, end = f.time_window
        if start > end:
            err("WINDOW_INVERTED", "time window start is after its end",
                "filters.time_window")
        elif start > (now or datetime.now(timezone.utc)):
            warn("FUTURE_WINDOW", "time window lies entirely in the future",
                 "filters.time_window")
    if f.states is not None:
        for s in f.states:
            if s not in STATES:
                err("UNKNOWN_STATE", f"unknown review state {s!r}", "filters.states")
    if f.min_comments is not None and f.min_comments < 0:
        err("NEGATIVE_MIN_COMMENTS", "min_comments must be >= 0",
            "filters.min_comments")
    if f.file_extensions is not None:
        for ext in f.file_extensions:
            if not ext.startswith(".") or "/" in ext:
                err("BAD_EXTENSION",
                    f"extension {ext!r} must start with '.' and contain no '/'",
                    "filters.file_extensions")
    return ValidationReport(tuple(issues))


# --- canonical JSON form ---------------------------------------------------


def filters_to_doc(f: FilterSet) -> dict:
    doc: dict = {}
    if f.time_window is not None:
        doc["time_window"] = {"start": format_ts(f.time_window[0]),
                              "end": format_ts(f.time_window[1])}
    if f.states is not None:
        doc["states"] = list(f.states)
    if f.min_comments is not None:
        doc["min_comments"] = f.min_comments
    if f.authors is not None:
        doc["authors"] = list(f.authors)
    if f.file_extensions is not None:
        doc["file_extensions"] = list(f.file_extensions)
    if f.keywords is not None:
        doc["keywords"] = list(f.keywords)
    return doc


def filters_from_doc(fdoc: dict) -> FilterSet:
    window = None
    if fdoc.get("time_window"):
        window = (parse_ts(fdoc["time_window"]["start"]),
                  parse_ts(fdoc["time_window"]["end"]))
    return FilterSet(
        time_window=window,
        states=tuple(fdoc["states"]) if "states" in fdoc else None,
        min_comments=fdoc.get("min_comments"),
        authors=tuple(fdoc["authors"]) if "authors" in fdoc else None,
        file_extensions=tuple(fdoc["file_extensions"])
        if "file_extensions" in fdoc else None,
        keywords=tuple(fdoc["keywords"]) if "keywords" in fdoc else None,
    )


def plan_to_doc(plan: CollectionPlan) -> dict:
    metrics = []
    for sel in plan.metrics:
        if sel.category is not None:
            metrics.append({"category": sel.category})
        else:
            metrics.append({"metric_id": sel.metric_id})
    prov: dict = {"kind": plan.provenance.kind}
    if plan.provenance.kind == "llm":
        prov["query"] = plan.provenance.query
        prov["provider_label"] = plan.provenance.provider_label
    return {
        "plan_id": plan.plan_id,
        "platform": plan.platform,
        "entities": [e for e in ENTITY_ORDER if e in plan.entities],
        "filters": filters_to_doc(plan.filters),
        "metrics": metrics,
        "provenance": prov,
        "created_at": format_ts(plan.created_at),
        "schema_version": plan.schema_version,
    }


def serialize_plan(plan: CollectionPlan) -> str:
    """Byte-deterministic canonical JSON (sorted keys, Z timestamps)."""
    return json.dumps(plan_to_doc(plan), sort_keys=True, indent=2) + "\n"


def _require(doc: dict, key: str):
    if key not in doc:
        raise PlanParseError(f"missing required field {key!r}")
    return doc[key]


def plan_from_doc(doc: dict, *, default_schema_version: bool = False) -> CollectionPlan:
    if not isinstance(doc, dict):
        raise PlanParseError("plan document must be an object")
    if default_schema_version and "schema_version" not in doc:
        doc = {**doc, "schema_version": SCHEMA_VERSION}
    version = _require(doc, "schema_version")
    if version != SCHEMA_VERSION:
        raise UnsupportedSchemaVersion(version)

    try:
        metrics = []
        for m in _require(doc, "metrics"):
            if "category" in m:
                metrics.append(MetricSelection(category=m["category"]))
            elif "metric_id" in m:
                metrics.append(MetricSelection(metric_id=m["metric_id"]))
            else:
                raise PlanParseError(f"bad metric selection: {m!r}")
        filters = filters_from_doc(doc.get("filters") or {})
        pdoc = doc.get("provenance") or {"kind": "manual"}
        provenance = Provenance(
            kind=_require(pdoc, "kind"),
            query=pdoc.get("query"),
            provider_label=pdoc.get("provider_label"),
        )
        return CollectionPlan(
            plan_id=str(_require(doc, "plan_id")),
            platform=_require(doc, "platform"),
            entities=frozenset(_require(doc, "entities")),
            metrics=tuple(metrics),
            filters=filters,
            provenance=provenance,
            created_at=parse_ts(_require(doc, "created_at")),
            schema_version=version,
        )
    except (PlanParseError, UnsupportedSchemaVersion):
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise PlanParseError(f"malformed plan document: {exc}") from exc


def parse_plan(text: str) -> CollectionPlan:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PlanParseError(exc.msg, line=exc.lineno, column=exc.colno) from exc
    return plan_from_doc(doc)
