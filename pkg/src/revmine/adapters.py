"""GitHub and GitLab adapters: request templates, pagination, normalization.

Each adapter declares the same endpoint_id vocabulary, maps a normalized
plan onto concrete API requests, walks platform pagination, and turns raw
response documents into the unified record model. Everything here is pure;
HTTP execution lives in the collector.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from urllib.parse import quote

from .errors import MalformedPagination, NormalizationError
from .plan import CollectionPlan
from .records import CommentRecord, CommitRecord, DiffStat, FileChangeRecord, ReviewRecord
from .timestamps import format_ts, parse_ts

ENDPOINT_IDS = (
    "identity_probe",
    "project_probe",
    "list_reviews",
    "review_detail",
    "review_commits",
    "review_comments",
    "review_files",
)

_GITHUB_TEMPLATES = {
    "identity_probe": "/user",
    "project_probe": "/repos/{owner}/{repo}",
    "list_reviews": "/repos/{owner}/{repo}/pulls",
    "review_detail": "/repos/{owner}/{repo}/pulls/{number}",
    "review_commits": "/repos/{owner}/{repo}/pulls/{number}/commits",
    "review_comments": "/repos/{owner}/{repo}/pulls/{number}/comments",
    "review_files": "/repos/{owner}/{repo}/pulls/{number}/files",
}
# PRs are issues; discussion-level comments live on the issue resource.
_GITHUB_GENERAL_COMMENTS = "/repos/{owner}/{repo}/issues/{number}/comments"

_GITLAB_TEMPLATES = {
    "identity_probe": "/user",
    "project_probe": "/projects/{project}",
    "list_reviews": "/projects/{project}/merge_requests",
    "review_detail": "/projects/{project}/merge_requests/{iid}",
    "review_commits": "/projects/{project}/merge_requests/{iid}/commits",
    "review_comments": "/projects/{project}/merge_requests/{iid}/notes",
    "review_files": "/projects/{project}/merge_requests/{iid}/diffs",
}

PAGE_SIZE = 100


@dataclass(frozen=True)
class EndpointRequest:
    endpoint_id: str
    path: str
    query: tuple[tuple[str, str], ...] = ()
    method: str = "GET"
    depends_on: str | None = None
    archive_key: str | None = None  # overrides the default raw-file key

    def __post_init__(self):
        if "{" in self.path or "}" in self.path:
            raise ValueError(f"unresolved placeholder in path: {self.path}")


@dataclass(frozen=True)
class PageCursor:
    page: int
    url: str | None = None  # absolute next URL when the platform gives one


def declared_endpoints(platform: str) -> dict[str, str]:
    """endpoint_id -> path template, in fixed order."""
    templates = _GITHUB_TEMPLATES if platform == "github" else _GITLAB_TEMPLATES
    return {eid: templates[eid] for eid in ENDPOINT_IDS}


def _project_parts(platform: str, project: str) -> dict[str, str]:
    if platform == "github":
        owner, repo = project.split("/", 1)
        return {"owner": owner, "repo": repo}
    if project.isdigit() or "%2F" in project:
        return {"project": project}
    return {"project": quote(project, safe="")}


def resolve_path(platform: str, endpoint_id: str, project: str,
                 number: int | None = None) -> str:
    template = declared_endpoints(platform)[endpoint_id]
    parts = _project_parts(platform, project)
    if number is not None:
        parts["number" if platform == "github" else "iid"] = str(number)
    return template.format(**parts)


def auth_headers(platform: str, token: str) -> dict[str, str]:
    if platform == "github":
        return {"Authorization": f"Bearer {token}",
                "Accept": "application/vnd.github+json"}
    return {"PRIVATE-TOKEN": token}


def list_reviews_request(plan: CollectionPlan, project: str) -> EndpointRequest:
    """Root listing request with push-down filters where the API supports them."""
    f = plan.filters
    if plan.platform == "github":
        query: list[tuple[str, str]] = [("per_page", str(PAGE_SIZE)),
                                        ("sort", "created"), ("direction", "asc")]
        if f.states is not None:
            wanted = set(f.states)
            if wanted == {"open"}:
                query.append(("state", "open"))
            elif "open" not in wanted:
                query.append(("state", "closed"))
            else:
                query.append(("state", "all"))
        else:
            query.append(("state", "all"))
    else:
        query = [("per_page", str(PAGE_SIZE)),
                 ("order_by", "created_at"), ("sort", "asc")]
        if f.time_window is not None:
            query.append(("created_after", format_ts(f.time_window[0])))
            query.append(("created_before", format_ts(f.time_window[1])))
        if f.states is not None and len(f.states) == 1:
            state = f.states[0]
            query.append(("state", {"open": "opened"}.get(state, state)))
    return EndpointRequest(
        endpoint_id="list_reviews",
        path=resolve_path(plan.platform, "list_reviews", project),
        query=tuple(query),
    )


def fanout_requests(plan: CollectionPlan, project: str,
                    number: int) -> list[EndpointRequest]:
    """Dependent per-review requests, ordered commits -> comments -> files."""
    out: list[EndpointRequest] = []
    page_q = (("per_page", str(PAGE_SIZE)),)
    for entity, endpoint_id in (("commits", "review_commits"),
                                ("comments", "review_comments"),
                                ("files", "review_files")):
        if entity not in plan.entities:
            continue
        out.append(EndpointRequest(
            endpoint_id=endpoint_id,
            path=resolve_path(plan.platform, endpoint_id, project, number),
            query=page_q,
            depends_on="list_reviews",
            archive_key=f"review-{number}",
        ))
        if entity == "comments" and plan.platform == "github":
            parts = _project_parts("github", project)
            out.append(EndpointRequest(
                endpoint_id="review_comments",
                path=_GITHUB_GENERAL_COMMENTS.format(number=number, **parts),
                query=page_q,
                depends_on="list_reviews",
                archive_key=f"review-{number}-general",
            ))
    return out


def plan_to_requests(plan: CollectionPlan, project: str,
                     review_numbers: list[int] | None = None) -> list[EndpointRequest]:
    """The full request graph; fan-outs appear once review numbers are known."""
    requests = [list_reviews_request(plan, project)]
    for n in review_numbers or []:
        requests.extend(fanout_requests(plan, project, n))
    return requests


_LINK_NEXT = re.compile(r'<([^>]+)>\s*;\s*rel="next"')


def next_page(platform: str, status: int, headers: dict, body,
              current: PageCursor) -> PageCursor | None:
    """Next-page cursor, or None when the listing is exhausted."""
    assert status == 200
    headers = {k.lower(): v for k, v in headers.items()}
    if platform == "github":
        link = headers.get("link")
        if not link:
            return None
        if 'rel="next"' in link:
            m = _LINK_NEXT.search(link)
            if not m:
                raise MalformedPagination(f"unparsable Link header: {link!r}")
            return PageCursor(page=current.page + 1, url=m.group(1))
        return None
    nxt = headers.get("x-next-page", "")
    if nxt.strip() == "":
        return None
    try:
        return PageCursor(page=int(nxt))
    except ValueError:
        raise MalformedPagination(f"bad X-Next-Page: {nxt!r}") from None


# --- normalization ---------------------------------------------------------


def _get(raw: dict, field_name: str, *path):
    node = raw
    for key in path:
        if not isinstance(node, dict) or key not in node or node[key] is None:
            raise NormalizationError(field_name, f"missing {'.'.join(path)}")
        node = node[key]
    return node


def _ts(raw: dict, field_name: str, *path):
    value = _get(raw, field_name, *path)
    try:
        return parse_ts(value)
    except (ValueError, AttributeError) as exc:
        raise NormalizationError(field_name, f"bad timestamp {value!r}") from exc


def normalize_review(platform: str, raw: dict) -> ReviewRecord:
    """Map a list-item/detail document to a ReviewRecord (children empty)."""
    if platform == "github":
        merged_at = raw.get("merged_at")
        raw_state = _get(raw, "state", "state")
        if raw_state == "open":
            state, merged_at, closed_at = "open", None, None
        elif merged_at:
            state, closed_at = "merged", raw.get("closed_at")
        else:
            state, closed_at = "closed", raw.get("closed_at")
        return ReviewRecord(
            platform=platform,
            review_id=str(_get(raw, "review_id", "id")),
            number=int(_get(raw, "number", "number")),
            title=_get(raw, "title", "title"),
            description=raw.get("body") or "",
            state=state,
            created_at=_ts(raw, "created_at", "created_at"),
            merged_at=parse_ts(merged_at) if merged_at else None,
            closed_at=parse_ts(closed_at) if closed_at else None,
            author=_get(raw, "author", "user", "login"),
            source_branch=_get(raw, "source_branch", "head", "ref"),
            target_branch=_get(raw, "target_branch", "base", "ref"),
        )

    raw_state = _get(raw, "state", "state")
    state = {"opened": "open", "merged": "merged", "closed": "closed"}.get(raw_state)
    if state is None:
        raise NormalizationError("state", f"unknown GitLab state {raw_state!r}")
    merged_at = raw.get("merged_at") if state == "merged" else None
    closed_at = raw.get("closed_at") if state != "open" else None
    return ReviewRecord(
        platform=platform,
        review_id=str(_get(raw, "review_id", "id")),
        number=int(_get(raw, "number", "iid")),
        title=_get(raw, "title", "title"),
        description=raw.get("description") or "",
        state=state,
        created_at=_ts(raw, "created_at", "created_at"),
        merged_at=parse_ts(merged_at) if merged_at else None,
        closed_at=parse_ts(closed_at) if closed_at else None,
        author=_get(raw, "author", "author", "username"),
        source_branch=_get(raw, "source_branch", "source_branch"),
        target_branch=_get(raw, "target_branch", "target_branch"),
    )


_SHA_RE = re.compile(r"^[0-9a-f]{40}$")


def normalize_commit(platform: str, raw: dict) -> CommitRecord:
    if platform == "github":
        sha = _get(raw, "sha", "sha")
        diffs = tuple(
            DiffStat(path=f["filename"], additions=int(f.get("additions", 0)),
                     deletions=int(f.get("deletions", 0)))
            for f in raw.get("files") or []
        )
        record = CommitRecord(
            sha=sha,
            authored_at=_ts(raw, "authored_at", "commit", "author", "date"),
            committed_at=_ts(raw, "committed_at", "commit", "committer", "date"),
            author_name=_get(raw, "author_name", "commit", "author", "name"),
            author_email=_get(raw, "author_email", "commit", "author", "email"),
            message=_get(raw, "message", "commit", "message"),
            diffs=diffs,
        )
    else:
        sha = _get(raw, "sha", "id")
        record = CommitRecord(
            sha=sha,
            authored_at=_ts(raw, "authored_at", "authored_date"),
            committed_at=_ts(raw, "committed_at", "committed_date"),
            author_name=_get(raw, "author_name", "author_name"),
            author_email=_get(raw, "author_email", "author_email"),
            message=_get(raw, "message", "message"),
        )
    if not _SHA_RE.match(record.sha):
        raise NormalizationError("sha", f"not a 40-hex sha: {record.sha!r}")
    return record


def normalize_comment(platform: str, raw: dict) -> CommentRecord | None:
    """Returns None for records that are platform events, not reviewer feedback."""
    if platform == "github":
        inline = "path" in raw and raw.get("path") is not None
        line = raw.get("line") or raw.get("original_line")
        return CommentRecord(
            comment_id=str(_get(raw, "comment_id", "id")),
            kind="inline" if inline else "general",
            author=_get(raw, "author", "user", "login"),
            body=_get(raw, "body", "body"),
            created_at=_ts(raw, "created_at", "created_at"),
            file_path=raw.get("path") if inline else None,
            line=int(line) if inline and line else None,
        )
    if raw.get("system"):
        return None
    position = raw.get("position")
    return CommentRecord(
        comment_id=str(_get(raw, "comment_id", "id")),
        kind="inline" if position else "general",
        author=_get(raw, "author", "author", "username"),
        body=_get(raw, "body", "body"),
        created_at=_ts(raw, "created_at", "created_at"),
        file_path=position.get("new_path") if position else None,
        line=(int(position["new_line"]) if position and position.get("new_line")
              else None),
    )


def _count_diff_lines(diff_text: str) -> tuple[int, int]:
    additions = deletions = 0
    for line in diff_text.splitlines():
        if line.startswith("+") and not line.startswith("+++"):
            additions += 1
        elif line.startswith("-") and not line.startswith("---"):
            deletions += 1
    return additions, deletions


def normalize_file(platform: str, raw: dict) -> FileChangeRecord:
    if platform == "github":
        status = _get(raw, "change_type", "status")
        change_type = {"added": "added", "removed": "deleted", "deleted": "deleted",
                       "renamed": "renamed"}.get(status, "modified")
        return FileChangeRecord(
            path=_get(raw, "path", "filename"),
            change_type=change_type,
            additions=int(raw.get("additions", 0)),
            deletions=int(raw.get("deletions", 0)),
            old_path=raw.get("previous_filename") if change_type == "renamed" else None,
        )
    new_path = _get(raw, "path", "new_path")
    if raw.get("new_file"):
        change_type = "added"
    elif raw.get("deleted_file"):
        change_type = "deleted"
    elif raw.get("renamed_file"):
        change_type = "renamed"
    else:
        change_type = "modified"
    additions, deletions = _count_diff_lines(raw.get("diff") or "")
    return FileChangeRecord(
        path=new_path,
        change_type=change_type,
        additions=additions,
        deletions=deletions,
        old_path=raw.get("old_path") if change_type == "renamed" else None,
    )
