"""Platform-neutral review data model.

A "review" unifies GitHub pull requests and GitLab merge requests; nested
commits, comments, and file changes hang off it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime


@dataclass(frozen=True)
class DiffStat:
    path: str
    additions: int
    deletions: int


@dataclass(frozen=True)
class CommitRecord:
    sha: str
    authored_at: datetime
    committed_at: datetime
    author_name: str
    author_email: str
    message: str
    diffs: tuple[DiffStat, ...] = ()


@dataclass(frozen=True)
class CommentRecord:
    comment_id: str
    kind: str  # "inline" | "general"
    author: str
    body: str
    created_at: datetime
    file_path: str | None = None
    line: int | None = None


@dataclass(frozen=True)
class FileChangeRecord:
    path: str
    change_type: str  # added | modified | deleted | renamed
    additions: int
    deletions: int
    old_path: str | None = None


@dataclass(frozen=True)
class ReviewRecord:
    platform: str
    review_id: str
    number: int
    title: str
    description: str
    state: str  # open | merged | closed
    created_at: datetime
    merged_at: datetime | None
    closed_at: datetime | None
    author: str
    source_branch: str
    target_branch: str
    commits: tuple[CommitRecord, ...] = ()
    comments: tuple[CommentRecord, ...] = ()
    files: tuple[FileChangeRecord, ...] = ()

    def with_children(self, commits=None, comments=None, files=None) -> "ReviewRecord":
        """Attach children, keeping the spec's sort orders."""
        from dataclasses import replace

        new = replace(
            self,
            commits=tuple(sorted(commits, key=lambda c: (c.committed_at, c.sha)))
            if commits is not None else self.commits,
            comments=tuple(sorted(comments, key=lambda c: (c.created_at, c.comment_id)))
            if comments is not None else self.comments,
            files=tuple(files) if files is not None else self.files,
        )
        return new
