"""Command-line surface for the whole pipeline.

Exit codes: 0 success, 1 usage error, 2 auth/permission failure,
3 partial collection, 4 validation failure, 5 runtime/infrastructure.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import analysis as _analysis
from . import collector as _collector
from . import dataset as _dataset
from . import orchestrator as _orchestrator
from . import platform_access as _pa
from .errors import (
    AuthRevoked,
    InvalidUrl,
    MissingField,
    NetworkUnreachable,
    RefinementExhausted,
    RevMineError,
    RunNotFound,
    SpecValidationError,
)
from .plan import (
    expanded_metric_ids,
    filters_from_doc,
    normalize_plan,
    parse_plan,
    plan_to_doc,
    serialize_plan,
    validate_plan,
)
from .service import _offline_manifest, create_app

EXIT_USAGE = 1
EXIT_AUTH = 2
EXIT_PARTIAL = 3
EXIT_VALIDATION = 4
EXIT_RUNTIME = 5


@click.group()
def cli():
    """RevMine: mine and analyze code reviews from GitHub and GitLab."""


def _load_config(config_path, platform, project, base_url):
    overrides = {"kind": platform, "project": project, "base_url": base_url}
    try:
        return _pa.load_config(file_path=config_path, overrides=overrides)
    except (MissingField, InvalidUrl, ValueError) as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_USAGE)


def _provider(mock_llm: str | None):
    if mock_llm:
        return _orchestrator.MockProvider.from_file(mock_llm)
    endpoint = os.environ.get("REVMINE_LLM_ENDPOINT")
    if not endpoint:
        click.echo("no LLM provider configured "
                   "(set REVMINE_LLM_ENDPOINT or pass --mock-llm)", err=True)
        sys.exit(EXIT_USAGE)
    return _orchestrator.HttpProvider(_orchestrator.ProviderConfig(
        endpoint_url=endpoint,
        api_key=os.environ.get("REVMINE_LLM_KEY", ""),
        model_name=os.environ.get("REVMINE_LLM_MODEL", "default"),
    ))


# --- auth ------------------------------------------------------------------


@cli.group()
def auth():
    """Credential and access checks."""


@auth.command("verify")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--platform")
@click.option("--project")
@click.option("--base-url")
@click.option("--json", "as_json", is_flag=True)
def auth_verify(config_path, platform, project, base_url, as_json):
    """Probe token validity, project access, and endpoint availability."""
    config = _load_config(config_path, platform, project, base_url)
    try:
        manifest = _pa.verify_access(config)
    except NetworkUnreachable as exc:
        click.echo(f"network unreachable: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    doc = manifest.as_dict()
    if as_json:
        click.echo(json.dumps(doc, indent=2, sort_keys=True))
    else:
        click.echo(f"token ({_pa.redact(config.token)}): "
                   f"{'valid' if manifest.token_valid else 'INVALID'}")
        click.echo(f"user: {manifest.authenticated_user or '-'}")
        click.echo(f"project {config.project}: "
                   f"{'accessible' if manifest.project_accessible else 'NOT accessible'}")
        for e in manifest.endpoints:
            mark = "ok" if e.available else "unavailable"
            click.echo(f"  {e.endpoint_id}: {mark} ({e.probe_status})")
    if not (manifest.token_valid and manifest.project_accessible):
        sys.exit(EXIT_AUTH)


# --- plan ------------------------------------------------------------------


@cli.group()
def plan():
    """Create and validate collection plans."""


@plan.command("new")
@click.option("--query")
@click.option("--from-file", "from_file", type=click.Path(exists=True))
@click.option("--mock-llm", type=click.Path(exists=True))
@click.option("--out", type=click.Path())
@click.option("--platform", default=None)
def plan_new(query, from_file, mock_llm, out, platform):
    """Generate a plan from a query, or validate a manually written one."""
    if (query is None) == (from_file is None):
        click.echo("exactly one of --query or --from-file is required", err=True)
        sys.exit(EXIT_USAGE)

    if query is not None:
        provider = _provider(mock_llm)
        kind = platform or os.environ.get("REVMINE_PLATFORM", "gitlab")
        manifest = _offline_manifest(kind)
        token = os.environ.get("REVMINE_TOKEN", "")
        try:
            plan_obj, transcript = _orchestrator.generate_plan(
                query, provider, manifest,
                secret_values=(token,) if token else ())
        except RefinementExhausted as exc:
            click.echo(f"plan generation failed after "
                       f"{len(exc.transcript.rounds)} rounds", err=True)
            sys.exit(EXIT_VALIDATION)
        except RevMineError as exc:
            click.echo(str(exc), err=True)
            sys.exit(EXIT_RUNTIME)
    else:
        try:
            plan_obj = normalize_plan(parse_plan(Path(from_file).read_text()))
        except RevMineError as exc:
            click.echo(str(exc), err=True)
            sys.exit(EXIT_VALIDATION)

    report = validate_plan(plan_obj)
    for issue in report.issues:
        click.echo(f"[{issue.severity}] {issue.code}: {issue.message} "
                   f"(at {issue.path})")
    if report.valid:
        text = serialize_plan(plan_obj)
        if out:
            Path(out).write_text(text)
            click.echo(f"plan written to {out}")
        else:
            click.echo(text, nl=False)
    else:
        sys.exit(EXIT_VALIDATION)


# --- collect ---------------------------------------------------------------


@cli.command("collect")
@click.option("--plan", "plan_path", type=click.Path(exists=True))
@click.option("--archive", required=True, type=click.Path())
@click.option("--resume", "resume_id")
@click.option("--parallel", default=4, type=int)
@click.option("--config", "config_path", type=click.Path(exists=True))
def collect(plan_path, archive, resume_id, parallel, config_path):
    """Execute (or resume) a collection run into a raw archive."""
    config = _load_config(config_path, None, None, None)
    executor = _collector.RunExecutor(config, parallelism=parallel)
    try:
        if resume_id:
            manifest = executor.resume_run(resume_id, Path(archive))
        else:
            if not plan_path:
                click.echo("--plan is required unless resuming", err=True)
                sys.exit(EXIT_USAGE)
            plan_obj = normalize_plan(parse_plan(Path(plan_path).read_text()))
            report = validate_plan(plan_obj)
            if not report.valid:
                for issue in report.issues:
                    click.echo(f"[{issue.severity}] {issue.code}: {issue.message}",
                               err=True)
                sys.exit(EXIT_VALIDATION)
            manifest = executor.execute_run(plan_obj, Path(archive))
    except AuthRevoked as exc:
        click.echo(f"authentication failed mid-run: {exc}", err=True)
        sys.exit(EXIT_AUTH)
    except RunNotFound as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_USAGE)
    except RevMineError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_RUNTIME)
    click.echo(json.dumps({"run_id": manifest["run_id"],
                           "status": manifest["status"],
                           "counters": manifest["counters"]}, indent=2))
    sys.exit({"completed": 0, "partial": EXIT_PARTIAL}.get(
        manifest["status"], EXIT_RUNTIME))


# --- dataset ---------------------------------------------------------------


@cli.group("dataset")
def dataset_group():
    """Build metric-projected datasets from raw archives."""


@dataset_group.command("build")
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True))
@click.option("--ext", "extensions", help="comma-separated file extensions")
@click.option("--since")
@click.option("--until")
@click.option("--keyword", "keywords", multiple=True)
@click.option("--state", "states", help="comma-separated states")
@click.option("--author", "authors", multiple=True)
@click.option("--min-comments", type=int)
@click.option("--metric", "metrics", multiple=True,
              help="metric ids; defaults to the run's plan selection")
@click.option("--out", required=True, type=click.Path())
def dataset_build(run_dir, extensions, since, until, keywords, states, authors,
                  min_comments, metrics, out):
    """Export reviews/commits/comments/files CSVs plus dataset.json."""
    fdoc: dict = {}
    if since or until:
        if not (since and until):
            click.echo("--since and --until must be given together", err=True)
            sys.exit(EXIT_USAGE)
        fdoc["time_window"] = {"start": since, "end": until}
    if extensions:
        fdoc["file_extensions"] = [e.strip() for e in extensions.split(",")]
    if keywords:
        fdoc["keywords"] = list(keywords)
    if states:
        fdoc["states"] = [s.strip() for s in states.split(",")]
    if authors:
        fdoc["authors"] = list(authors)
    if min_comments is not None:
        fdoc["min_comments"] = min_comments
    try:
        filters = filters_from_doc(fdoc)
    except (KeyError, ValueError) as exc:
        click.echo(f"bad filters: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    if filters.time_window and filters.time_window[0] > filters.time_window[1]:
        click.echo("[error] WINDOW_INVERTED: time window start is after its end",
                   err=True)
        sys.exit(EXIT_VALIDATION)
    bad_exts = [e for e in (filters.file_extensions or ())
                if not e.startswith(".") or "/" in e]
    if bad_exts:
        click.echo(f"[error] BAD_EXTENSION: {bad_exts}", err=True)
        sys.exit(EXIT_VALIDATION)

    run_path = Path(run_dir)
    metric_ids = list(metrics) or expanded_metric_ids(
        parse_plan((run_path / "plan.json").read_text()))
    try:
        ds = _dataset.build_dataset(run_path, metric_ids, filters)
        paths = _dataset.export_csv(ds, out)
        (Path(out) / "tables.json").write_text(
            json.dumps(_dataset.dataset_to_doc(ds), sort_keys=True) + "\n")
    except RevMineError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_RUNTIME)
    for p in paths:
        click.echo(str(p))
    for w in ds.warnings:
        click.echo(f"warning: {w}", err=True)


# --- analyze ---------------------------------------------------------------


def _load_dataset(dataset_dir) -> _dataset.Dataset:
    path = Path(dataset_dir) / "tables.json"
    if not path.exists():
        click.echo(f"no tables.json under {dataset_dir}", err=True)
        sys.exit(EXIT_USAGE)
    return _dataset.dataset_from_doc(json.loads(path.read_text()))


@cli.group("analyze")
def analyze_group():
    """Summaries, declarative analyses, and keyword screening."""


@analyze_group.command("summary")
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True))
@click.option("--out", type=click.Path())
def analyze_summary(dataset_dir, out):
    ds = _load_dataset(dataset_dir)
    report = _analysis.summarize(ds)
    text = json.dumps(report, indent=2, sort_keys=True)
    click.echo(text)
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / "summary.json").write_text(text + "\n")


@analyze_group.command("spec")
@click.argument("spec_file", type=click.Path(exists=True))
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True))
@click.option("--out", type=click.Path())
@click.option("--format", "fmt", default="csv",
              type=click.Choice(["csv", "chart-data"]))
def analyze_spec(spec_file, dataset_dir, out, fmt):
    ds = _load_dataset(dataset_dir)
    try:
        spec = _analysis.spec_from_doc(json.loads(Path(spec_file).read_text()))
        result = _analysis.run_spec(ds, spec)
    except SpecValidationError as exc:
        for issue in exc.issues:
            click.echo(f"[error] {issue}", err=True)
        sys.exit(EXIT_VALIDATION)
    if out:
        path = _analysis.export_analysis(result, out, fmt)
        click.echo(str(path))
    else:
        click.echo(json.dumps(_analysis.chart_data(result), indent=2,
                              sort_keys=True))


@analyze_group.command("screen")
@click.option("--pattern", "patterns", multiple=True, required=True)
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True))
@click.option("--out", type=click.Path())
def analyze_screen(patterns, dataset_dir, out):
    ds = _load_dataset(dataset_dir)
    hits = _analysis.keyword_screen(ds, list(patterns))
    if out:
        import csv as _csv

        Path(out).mkdir(parents=True, exist_ok=True)
        path = Path(out) / "screen.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = _csv.writer(fh, lineterminator="\r\n")
            writer.writerow(["review_id", "comment_id", "pattern", "snippet"])
            for h in hits:
                writer.writerow([h["review_id"], h["comment_id"], h["pattern"],
                                 h["snippet"]])
        click.echo(str(path))
    else:
        click.echo(json.dumps(hits, indent=2, sort_keys=True))


# --- serve -----------------------------------------------------------------


@cli.command("serve")
@click.option("--root", required=True, type=click.Path())
@click.option("--addr", default="127.0.0.1:8787")
@click.option("--mock-llm", type=click.Path(exists=True))
@click.option("--static-dir", type=click.Path())
def serve(root, addr, mock_llm, static_dir):
    """Run the local HTTP service (dashboard backend)."""
    import uvicorn

    try:
        config = _pa.load_config()
    except (MissingField, ValueError):
        config = None
    provider = _orchestrator.MockProvider.from_file(mock_llm) if mock_llm else None
    if provider is None and os.environ.get("REVMINE_LLM_ENDPOINT"):
        provider = _orchestrator.HttpProvider(_orchestrator.ProviderConfig(
            endpoint_url=os.environ["REVMINE_LLM_ENDPOINT"],
            api_key=os.environ.get("REVMINE_LLM_KEY", ""),
            model_name=os.environ.get("REVMINE_LLM_MODEL", "default"),
        ))
    app = create_app(Path(root), config=config, provider=provider,
                     static_dir=Path(static_dir) if static_dir else None)
    host, _, port = addr.rpartition(":")
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port),
                    log_level="warning")
    except (OSError, SystemExit) as exc:
        if isinstance(exc, SystemExit) and not exc.code:
            return
        click.echo(f"cannot serve on {addr}: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)


def main():
    try:
        cli.main(standalone_mode=False)
    except click.UsageError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_USAGE)
    except click.ClickException as exc:
        exc.show()
        sys.exit(EXIT_USAGE)
    except click.exceptions.Abort:
        sys.exit(EXIT_USAGE)


if __name__ == "__main__":
    main()
