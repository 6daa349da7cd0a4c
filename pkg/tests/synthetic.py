"""Deterministic synthetic review projects rendered in platform wire shapes.

A seeded logical model is rendered into GitLab and/or GitHub response
documents, so the same project can back both adapters (used by the
platform-equivalence checks) and so oracles can walk the raw documents
independently of the production normalizers.
"""

from __future__ import annotations

import hashlib
import random
from datetime import datetime, timedelta, timezone

AUTHORS = ["alice", "bob", "carol", "dave", "erin"]
EXTENSIONS = [".java", ".py", ".md", ".rs"]
TITLE_WORDS = ["Refactor parser", "Fix flaky test", "Add retry logic",
               "Update docs", "Rename module", 'Handle "quoted", fields',
               "Tune rate limits"]
BODIES = [
    "LGTM, ship it",
    "Please refactor this before merge",
    "nit: rename this variable",
    "Big Refactoring pass,\nwith a newline",
    'He said "LGTM", merge',
    "can you add a test?",
    "looks good",
]


def _ts(dt: datetime) -> str:
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


def _sha(seed: str) -> str:
    return hashlib.sha1(seed.encode()).hexdigest()


def make_logical(n: int, seed: int = 7) -> list[dict]:
    """n abstract reviews spread over 2023."""
    rng = random.Random(seed)
    start = datetime(2023, 1, 2, 10, 0, tzinfo=timezone.utc)
    reviews = []
    for i in range(1, n + 1):
        created = start + timedelta(hours=i * 29)
        state = rng.choices(["open", "merged", "closed"], weights=[2, 5, 2])[0]
        merged = created + timedelta(hours=rng.randint(1, 200)) \
            if state == "merged" else None
        closed = (merged if state == "merged"
                  else created + timedelta(hours=rng.randint(1, 300))
                  if state == "closed" else None)
        author = rng.choice(AUTHORS)
        n_comments = rng.randint(0, 5)
        comments = []
        for j in range(n_comments):
            at = created + timedelta(minutes=30 + 90 * j + rng.randint(0, 50))
            inline = rng.random() < 0.4
            comments.append({
                "id": i * 100 + j,
                "author": rng.choice(AUTHORS),
                "body": rng.choice(BODIES),
                "created_at": at,
                "inline": inline,
                "path": f"src/mod_{j}{rng.choice(EXTENSIONS)}" if inline else None,
                "line": rng.randint(1, 200) if inline else None,
            })
        commits = []
        for j in range(rng.randint(0, 4)):
            authored = created - timedelta(hours=rng.randint(1, 48))
            commits.append({
                "sha": _sha(f"{seed}-{i}-{j}"),
                "authored_at": authored,
                "committed_at": authored + timedelta(minutes=rng.randint(0, 120)),
                "author_name": rng.choice(AUTHORS),
                "message": f"commit {j} for review {i}: {rng.choice(TITLE_WORDS)}",
            })
        files = []
        for j in range(rng.randint(0, 4)):
            change = rng.choice(["added", "modified", "deleted", "renamed"])
            files.append({
                "path": f"src/file_{i}_{j}{rng.choice(EXTENSIONS)}",
                "change_type": change,
                "additions": rng.randint(0, 40),
                "deletions": rng.randint(0, 20),
                "old_path": f"src/old_{i}_{j}.txt" if change == "renamed" else None,
            })
        reviews.append({
            "number": i,
            "title": rng.choice(TITLE_WORDS),
            "description": rng.choice(BODIES) if rng.random() < 0.8 else "",
            "state": state,
            "created_at": created,
            "merged_at": merged,
            "closed_at": closed,
            "author": author,
            "source_branch": f"feature/{i}",
            "target_branch": "main",
            "comments": comments,
            "commits": commits,
            "files": files,
        })
    return reviews


# --- GitLab rendering ------------------------------------------------------


def _gitlab_diff_text(additions: int, deletions: int) -> str:
    lines = ["@@ -1,%d +1,%d @@" % (deletions, additions)]
    lines += [f"+added line {k}" for k in range(additions)]
    lines += [f"-removed line {k}" for k in range(deletions)]
    return "\n".join(lines)


def render_gitlab(logical: list[dict], with_system_notes: bool = True):
    reviews = []
    children = {}
    for r in logical:
        state = {"open": "opened"}.get(r["state"], r["state"])
        reviews.append({
            "id": 5000 + r["number"],
            "iid": r["number"],
            "title": r["title"],
            "description": r["description"] or None,
            "state": state,
            "created_at": _ts(r["created_at"]),
            "merged_at": _ts(r["merged_at"]) if r["merged_at"] else None,
            "closed_at": _ts(r["closed_at"]) if r["closed_at"] else None,
            "author": {"username": r["author"]},
            "source_branch": r["source_branch"],
            "target_branch": r["target_branch"],
        })
        notes = []
        for c in r["comments"]:
            notes.append({
                "id": c["id"],
                "body": c["body"],
                "author": {"username": c["author"]},
                "created_at": _ts(c["created_at"]),
                "system": False,
                "position": ({"new_path": c["path"], "new_line": c["line"]}
                             if c["inline"] else None),
            })
        if with_system_notes and r["state"] == "merged":
            notes.append({
                "id": r["number"] * 100 + 99,
                "body": "merged",
                "author": {"username": "gitlab-bot"},
                "created_at": _ts(r["merged_at"]),
                "system": True,
                "position": None,
            })
        commits = [{
            "id": c["sha"],
            "authored_date": _ts(c["authored_at"]),
            "committed_date": _ts(c["committed_at"]),
            "author_name": c["author_name"],
            "author_email": f"{c['author_name']}@example.org",
            "message": c["message"],
        } for c in r["commits"]]
        diffs = [{
            "new_path": f["path"],
            "old_path": f["old_path"] or f["path"],
            "new_file": f["change_type"] == "added",
            "deleted_file": f["change_type"] == "deleted",
            "renamed_file": f["change_type"] == "renamed",
            "diff": _gitlab_diff_text(f["additions"], f["deletions"]),
        } for f in r["files"]]
        children[r["number"]] = {"comments": notes, "commits": commits,
                                 "files": diffs}
    return reviews, children


# --- GitHub rendering ------------------------------------------------------


def render_github(logical: list[dict]):
    reviews = []
    children = {}
    for r in logical:
        gh_state = "open" if r["state"] == "open" else "closed"
        reviews.append({
            "id": 9000 + r["number"],
            "number": r["number"],
            "title": r["title"],
            "body": r["description"] or None,
            "state": gh_state,
            "created_at": _ts(r["created_at"]),
            "merged_at": _ts(r["merged_at"]) if r["merged_at"] else None,
            "closed_at": _ts(r["closed_at"]) if r["closed_at"] else None,
            "user": {"login": r["author"]},
            "head": {"ref": r["source_branch"]},
            "base": {"ref": r["target_branch"]},
        })
        inline = [{
            "id": c["id"],
            "body": c["body"],
            "user": {"login": c["author"]},
            "created_at": _ts(c["created_at"]),
            "path": c["path"],
            "line": c["line"],
        } for c in r["comments"] if c["inline"]]
        general = [{
            "id": c["id"],
            "body": c["body"],
            "user": {"login": c["author"]},
            "created_at": _ts(c["created_at"]),
        } for c in r["comments"] if not c["inline"]]
        commits = [{
            "sha": c["sha"],
            "commit": {
                "author": {"name": c["author_name"],
                           "email": f"{c['author_name']}@example.org",
                           "date": _ts(c["authored_at"])},
                "committer": {"date": _ts(c["committed_at"])},
                "message": c["message"],
            },
        } for c in r["commits"]]
        files = [{
            "filename": f["path"],
            "status": {"deleted": "removed"}.get(f["change_type"],
                                                 f["change_type"]),
            "additions": f["additions"],
            "deletions": f["deletions"],
            **({"previous_filename": f["old_path"]}
               if f["change_type"] == "renamed" else {}),
        } for f in r["files"]]
        children[r["number"]] = {
            "inline_comments": inline,
            "general_comments": general,
            "commits": commits,
            "files": files,
        }
    return reviews, children
