"""Built-in metric catalog: the closed vocabulary plans select from.

Categories group related metrics so a plan can pull in a whole family
with one selection; the ``derived`` category holds review-level values
computed from nested records rather than read off the API response.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UnknownCategory, UnknownMetric

CATEGORIES = ("review_meta", "commits", "comments", "files", "derived")
GRANULARITIES = ("review", "commit", "comment", "file")
VALUE_KINDS = ("string", "integer", "float", "timestamp", "boolean")


@dataclass(frozen=True)
class MetricDescriptor:
    metric_id: str
    category: str
    granularity: str
    value_kind: str
    description: str


def _m(metric_id, category, granularity, value_kind, description):
    return MetricDescriptor(metric_id, category, granularity, value_kind, description)


_CATALOG: tuple[MetricDescriptor, ...] = (
    # review metadata
    _m("review_id", "review_meta", "review", "string", "Platform-global review identifier"),
    _m("title", "review_meta", "review", "string", "Review title"),
    _m("description", "review_meta", "review", "string", "Review description body"),
    _m("state", "review_meta", "review", "string", "open, merged, or closed"),
    _m("created_at", "review_meta", "review", "timestamp", "Review creation time (UTC)"),
    _m("merged_at", "review_meta", "review", "timestamp", "Merge time, absent unless merged"),
    _m("closed_at", "review_meta", "review", "timestamp", "Close time, absent while open"),
    _m("author", "review_meta", "review", "string", "Review author username"),
    _m("source_branch", "review_meta", "review", "string", "Branch the change comes from"),
    _m("target_branch", "review_meta", "review", "string", "Branch the change targets"),
    # commits
    _m("commit_sha", "commits", "commit", "string", "Full 40-hex commit SHA"),
    _m("commit_committed_at", "commits", "commit", "timestamp", "Committer timestamp"),
    _m("commit_authored_at", "commits", "commit", "timestamp", "Author timestamp"),
    _m("commit_author", "commits", "commit", "string", "Commit author name"),
    _m("commit_message", "commits", "commit", "string", "Commit message"),
    _m("commit_file_diffs", "commits", "commit", "string", "Per-file additions/deletions as JSON"),
    # comments
    _m("comment_id", "comments", "comment", "string", "Platform comment identifier"),
    _m("comment_kind", "comments", "comment", "string", "inline or general"),
    _m("comment_author", "comments", "comment", "string", "Comment author username"),
    _m("comment_body", "comments", "comment", "string", "Comment text"),
    _m("comment_created_at", "comments", "comment", "timestamp", "Comment creation time"),
    _m("comment_file_path", "comments", "comment", "string", "File an inline comment anchors to"),
    _m("comment_line", "comments", "comment", "integer", "Line an inline comment anchors to"),
    # files
    _m("file_path", "files", "file", "string", "Changed file path"),
    _m("file_change_type", "files", "file", "string", "added, modified, deleted, or renamed"),
    _m("file_additions", "files", "file", "integer", "Lines added in this file"),
    _m("file_deletions", "files", "file", "integer", "Lines deleted in this file"),
    # derived (review granularity)
    _m("review_duration_hours", "derived", "review", "float",
       "Hours from creation to merge; absent unless merged"),
    _m("comment_count", "derived", "review", "integer", "Number of review comments"),
    _m("inline_comment_count", "derived", "review", "integer", "Number of inline comments"),
    _m("reviewer_count", "derived", "review", "integer",
       "Distinct comment authors excluding the review author"),
    _m("commit_count", "derived", "review", "integer", "Number of commits"),
    _m("files_changed", "derived", "review", "integer", "Number of changed files"),
    _m("time_to_first_response_hours", "derived", "review", "float",
       "Hours from creation to the earliest comment; absent with no comments"),
)

_BY_ID = {d.metric_id: d for d in _CATALOG}


def catalog() -> tuple[MetricDescriptor, ...]:
    """Return the fixed built-in catalog in stable order."""
    return _CATALOG


def descriptor(metric_id: str) -> MetricDescriptor:
    try:
        return _BY_ID[metric_id]
    except KeyError:
        raise UnknownMetric(metric_id) from None


def category_members(category: str) -> list[str]:
    """Member metric_ids of a category, in catalog order."""
    if category not in CATEGORIES:
        raise UnknownCategory(category)
    return [d.metric_id for d in _CATALOG if d.category == category]
