"""LLM orchestration: natural language in, validated declarative artifacts out.

Provider output is never executed. Completions are mined for a single
JSON object (or array), parsed, validated, and fed back through a bounded
refinement loop when invalid. The mock provider replays a fixture table
keyed on the original query, which makes every operation here fully
deterministic in tests.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

import requests

from . import catalog as _catalog
from .analysis import AnalysisSpec, spec_from_doc, validate_spec
from .clock import Clock
from .dataset import Dataset
from .errors import (
    ExtractionFailed,
    ProviderHttpError,
    ProviderTimeout,
    RefinementExhausted,
    SecretLeak,
    SpecValidationError,
)
from .plan import (
    CollectionPlan,
    Provenance,
    ValidationReport,
    normalize_plan,
    plan_from_doc,
    validate_plan,
)
from .platform_access import CapabilityManifest

FEEDBACK_SEPARATOR = "\n\n--- validation feedback ---\n"


@dataclass(frozen=True)
class ProviderConfig:
    endpoint_url: str
    api_key: str
    model_name: str
    timeout: float = 60.0
    max_refinements: int = 2


@dataclass(frozen=True)
class PromptEnvelope:
    system_text: str
    user_text: str


@dataclass(frozen=True)
class Round:
    prompt: PromptEnvelope
    raw_completion: str
    extraction_outcome: str  # "parsed" | "extraction_failed"
    validation: ValidationReport | None


@dataclass
class RefinementTranscript:
    rounds: list[Round] = field(default_factory=list)
    final: str = "exhausted"  # "accepted_plan" | "exhausted"


PLAN_SCHEMA_HINT = """\
Answer with exactly one JSON object and nothing else. Shape:
{
  "platform": "github" | "gitlab",
  "entities": ["reviews", ...],                       // subset of reviews/commits/comments/files
  "filters": {
    "time_window": {"start": "<ISO-8601 Z>", "end": "<ISO-8601 Z>"},   // optional
    "states": ["open"|"merged"|"closed", ...],                          // optional
    "min_comments": <int>,                                              // optional
    "authors": [...], "file_extensions": [".java", ...], "keywords": [...]
  },
  "metrics": [{"category": "<category>"} | {"metric_id": "<metric_id>"}, ...]
}"""


def render_catalog() -> str:
    lines = []
    for d in _catalog.catalog():
        lines.append(f"- {d.metric_id} (category={d.category}, "
                     f"granularity={d.granularity}, kind={d.value_kind})")
    return "\n".join(lines)


def build_prompt(query: str, manifest: CapabilityManifest,
                 secret_values: tuple[str, ...] = ()) -> PromptEnvelope:
    """Deterministic prompt for plan generation; refuses embedded secrets."""
    for secret in secret_values:
        if secret and secret in query:
            raise SecretLeak("query contains a secret value")
    endpoints = "\n".join(
        f"- {e.endpoint_id}: {'available' if e.available else 'unavailable'}"
        for e in manifest.endpoints)
    system_text = (
        "You translate code-review mining requests into declarative collection "
        "plans for a GitHub/GitLab mining pipeline.\n\n"
        f"{PLAN_SCHEMA_HINT}\n\n"
        "Available metrics:\n"
        f"{render_catalog()}\n\n"
        "Platform endpoints:\n"
        f"{endpoints}\n"
    )
    return PromptEnvelope(system_text=system_text, user_text=query)


# --- providers -------------------------------------------------------------


class HttpProvider:
    """Chat-completions style provider over HTTP."""

    def __init__(self, config: ProviderConfig, session: requests.Session | None = None):
        self.config = config
        self.label = config.model_name
        self.max_refinements = config.max_refinements
        self._session = session or requests.Session()

    def complete(self, envelope: PromptEnvelope) -> str:
        body = {
            "model": self.config.model_name,
            "messages": [
                {"role": "system", "content": envelope.system_text},
                {"role": "user", "content": envelope.user_text},
            ],
            "temperature": 0,
        }
        try:
            resp = self._session.post(
                self.config.endpoint_url,
                json=body,
                headers={"Authorization": f"Bearer {self.config.api_key}"},
                timeout=self.config.timeout,
            )
        except requests.Timeout as exc:
            raise ProviderTimeout(str(exc)) from exc
        except requests.ConnectionError as exc:
            raise ProviderHttpError(0, str(exc)) from exc
        if resp.status_code != 200:
            raise ProviderHttpError(resp.status_code, resp.text[:500])
        return resp.json()["choices"][0]["message"]["content"]


class MockProvider:
    """Replays canned completions keyed on the original query string.

    Table values are either one completion or a list consumed round by
    round (the last entry repeats once exhausted).
    """

    def __init__(self, table: dict, label: str = "mock", max_refinements: int = 2):
        self.table = dict(table)
        self.label = label
        self.max_refinements = max_refinements
        self._consumed: dict[str, int] = {}

    @classmethod
    def from_file(cls, path, **kwargs) -> "MockProvider":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh), **kwargs)

    def complete(self, envelope: PromptEnvelope) -> str:
        key = envelope.user_text.split(FEEDBACK_SEPARATOR, 1)[0]
        if key not in self.table:
            raise ProviderHttpError(404, f"no canned completion for query: {key!r}")
        value = self.table[key]
        if isinstance(value, str):
            return value
        i = self._consumed.get(key, 0)
        self._consumed[key] = i + 1
        return value[min(i, len(value) - 1)]


# --- extraction ------------------------------------------------------------


def _strip_fences(raw: str) -> str:
    text = raw.strip()
    if text.startswith("```"):
        lines = text.splitlines()
        if lines and lines[0].startswith("```"):
            lines = lines[1:]
        if lines and lines[-1].strip() == "```":
            lines = lines[:-1]
        text = "\n".join(lines)
    return text


def first_balanced(raw: str, open_ch: str = "{", close_ch: str = "}") -> str:
    """First balanced top-level JSON object/array in free text."""
    text = _strip_fences(raw)
    start = text.find(open_ch)
    if start < 0:
        raise ExtractionFailed(f"no {open_ch!r} found in completion")
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == open_ch:
            depth += 1
        elif ch == close_ch:
            depth -= 1
            if depth == 0:
                return text[start:i + 1]
    raise ExtractionFailed("unbalanced braces in completion")


def extract_plan(raw: str, clock: Clock | None = None) -> CollectionPlan:
    """Tolerant extraction of an unvalidated plan draft."""
    snippet = first_balanced(raw)
    try:
        doc = json.loads(snippet)
    except ValueError as exc:
        raise ExtractionFailed(f"extracted object is not valid JSON: {exc}") from exc
    doc.setdefault("plan_id",
                   "plan-" + hashlib.sha256(raw.encode()).hexdigest()[:12])
    doc.setdefault("entities", ["reviews"])
    doc.setdefault("provenance", {"kind": "manual"})
    if "created_at" not in doc:
        now = (clock or Clock()).now().replace(microsecond=0)
        from .timestamps import format_ts

        doc["created_at"] = format_ts(now)
    try:
        return plan_from_doc(doc, default_schema_version=True)
    except Exception as exc:
        raise ExtractionFailed(str(exc)) from exc


# --- refinement loops ------------------------------------------------------


def _feedback_text(query: str, draft_raw: str, issues: list[str]) -> str:
    bullet = "\n".join(f"- {i}" for i in issues)
    return (f"{query}{FEEDBACK_SEPARATOR}"
            f"Your previous answer:\n{draft_raw}\n\n"
            f"It was rejected for these reasons:\n{bullet}\n"
            "Answer again with exactly one corrected JSON object.")


def generate_plan(query: str, provider, manifest: CapabilityManifest,
                  secret_values: tuple[str, ...] = (),
                  clock: Clock | None = None) -> tuple[CollectionPlan, RefinementTranscript]:
    """Bounded generate -> extract -> validate loop; never auto-executes."""
    transcript = RefinementTranscript()
    max_rounds = 1 + getattr(provider, "max_refinements", 2)
    user_text = query
    for _ in range(max_rounds):
        envelope = replace(build_prompt(query, manifest, secret_values),
                           user_text=user_text)
        raw = provider.complete(envelope)
        try:
            draft = extract_plan(raw, clock)
        except ExtractionFailed as exc:
            transcript.rounds.append(Round(envelope, raw, "extraction_failed", None))
            user_text = _feedback_text(query, raw, [str(exc)])
            continue
        try:
            normalized = normalize_plan(draft)
            report = validate_plan(normalized)
        except Exception as exc:
            transcript.rounds.append(Round(envelope, raw, "parsed", None))
            user_text = _feedback_text(query, raw, [str(exc)])
            continue
        transcript.rounds.append(Round(envelope, raw, "parsed", report))
        if report.valid:
            transcript.final = "accepted_plan"
            accepted = replace(
                normalized,
                provenance=Provenance(kind="llm", query=query,
                                      provider_label=provider.label),
            )
            return accepted, transcript
        user_text = _feedback_text(
            query, raw, [f"{i.code}: {i.message} (at {i.path})"
                         for i in report.issues if i.severity == "error"])
    raise RefinementExhausted(transcript)


def generate_patterns(intent: str, provider) -> list[str]:
    """LLM-suggested literal keywords; deduplicated and lowercased."""
    envelope = PromptEnvelope(
        system_text=(
            "Suggest literal keywords for screening code-review comments. "
            "Answer with exactly one JSON array of strings and nothing else."),
        user_text=intent,
    )
    raw = provider.complete(envelope)
    snippet = first_balanced(raw, "[", "]")
    try:
        values = json.loads(snippet)
    except ValueError as exc:
        raise ExtractionFailed(f"not a JSON array: {exc}") from exc
    if not isinstance(values, list) or not all(isinstance(v, str) for v in values):
        raise ExtractionFailed("expected a JSON array of strings")
    out: list[str] = []
    for v in values:
        lowered = v.lower()
        if lowered and lowered not in out:
            out.append(lowered)
    if not out:
        raise ExtractionFailed("provider returned no keywords")
    return out


def generate_analysis_spec(intent: str, dataset: Dataset,
                           provider) -> AnalysisSpec:
    """Same refine loop as plan generation, targeting the analysis spec schema."""
    if not dataset.tables:
        raise SpecValidationError(["dataset schema is empty"])
    schema_lines = []
    for name, table in dataset.tables.items():
        cols = ", ".join(f"{n}:{k}" for n, k in table.columns)
        schema_lines.append(f"- {name}: {cols}")
    system_text = (
        "You translate analysis intents into declarative analysis specs.\n"
        "Answer with exactly one JSON object: {granularity, filters?, "
        "group_by?: {column, bucket: none|iso_week|iso_month}, "
        "aggregations: [{fn: count|sum|mean|median|p90, column}], "
        "output: table|timeseries}.\n"
        "Dataset tables:\n" + "\n".join(schema_lines))
    max_rounds = 1 + getattr(provider, "max_refinements", 2)
    transcript = RefinementTranscript()
    user_text = intent
    for _ in range(max_rounds):
        envelope = PromptEnvelope(system_text=system_text, user_text=user_text)
        raw = provider.complete(envelope)
        try:
            spec = spec_from_doc(json.loads(first_balanced(raw)))
        except (ExtractionFailed, SpecValidationError, ValueError) as exc:
            transcript.rounds.append(Round(envelope, raw, "extraction_failed", None))
            user_text = _feedback_text(intent, raw, [str(exc)])
            continue
        issues = validate_spec(spec, dataset)
        transcript.rounds.append(Round(envelope, raw, "parsed", None))
        if not issues:
            return spec
        user_text = _feedback_text(intent, raw, issues)
    raise RefinementExhausted(transcript)
