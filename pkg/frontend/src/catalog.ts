/** Display-only mirror of the server's metric catalog.
 *
 * Used for expansion previews in the plan editor; the server remains the
 * source of truth for what a plan actually selects — submitted plans carry
 * category selections verbatim and the server expands them.
 */

export const METRIC_CATEGORIES: Record<string, string[]> = {
  review_meta: [
    "review_id", "title", "description", "state", "created_at", "merged_at",
    "closed_at", "author", "source_branch", "target_branch",
  ],
  commits: [
    "commit_sha", "commit_committed_at", "commit_authored_at",
    "commit_author", "commit_message", "commit_file_diffs",
  ],
  comments: [
    "comment_id", "comment_kind", "comment_author", "comment_body",
    "comment_created_at", "comment_file_path", "comment_line",
  ],
  files: [
    "file_path", "file_change_type", "file_additions", "file_deletions",
  ],
  derived: [
    "review_duration_hours", "comment_count", "inline_comment_count",
    "reviewer_count", "commit_count", "files_changed",
    "time_to_first_response_hours",
  ],
};

export function categoryMembers(category: string): string[] {
  return METRIC_CATEGORIES[category] ?? [];
}
