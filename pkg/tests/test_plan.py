import json
import random
from datetime import datetime, timezone

import pytest

from revmine import catalog as cat
from revmine.errors import (
    PlanParseError,
    UnknownCategory,
    UnknownMetric,
    UnsupportedSchemaVersion,
)
from revmine.plan import (
    CollectionPlan,
    FilterSet,
    MetricSelection,
    expand_selection,
    expanded_metric_ids,
    normalize_plan,
    parse_plan,
    required_entities,
    serialize_plan,
    validate_plan,
)
from plangen import random_plan

COMMITS_EXPANSION = ["commit_sha", "commit_committed_at", "commit_authored_at",
                     "commit_author", "commit_message", "commit_file_diffs"]


def simple_plan(**kw):
    defaults = dict(
        plan_id="p1",
        platform="gitlab",
        entities=frozenset({"reviews"}),
        metrics=(MetricSelection(metric_id="comment_count"),),
        created_at=datetime(2024, 1, 1, tzinfo=timezone.utc),
    )
    defaults.update(kw)
    return CollectionPlan(**defaults)


class TestCatalog:
    def test_commit_authored_at_present(self):
        d = cat.descriptor("commit_authored_at")
        assert d.category == "commits"

    def test_unique_ids(self):
        ids = [d.metric_id for d in cat.catalog()]
        assert len(ids) == len(set(ids))

    def test_derived_all_review_granularity(self):
        for d in cat.catalog():
            if d.category == "derived":
                assert d.granularity == "review"

    def test_every_descriptor_has_one_category(self):
        for d in cat.catalog():
            assert d.category in cat.CATEGORIES


class TestExpansion:
    def test_commits_category(self):
        sel = MetricSelection(category="commits")
        assert expand_selection(sel) == COMMITS_EXPANSION

    def test_single_id_identity(self):
        sel = MetricSelection(metric_id="review_duration_hours")
        assert expand_selection(sel) == ["review_duration_hours"]

    def test_unknown_metric(self):
        with pytest.raises(UnknownMetric):
            expand_selection(MetricSelection(metric_id="nonexistent"))

    def test_unknown_category(self):
        with pytest.raises(UnknownCategory):
            expand_selection(MetricSelection(category="nope"))

    def test_exactly_one_side(self):
        with pytest.raises(ValueError):
            MetricSelection(category="commits", metric_id="title")
        with pytest.raises(ValueError):
            MetricSelection()

    def test_expansion_stable(self):
        sel = MetricSelection(category="comments")
        assert expand_selection(sel) == expand_selection(sel)


class TestRequiredEntities:
    def test_comment_count_implies_comments(self):
        plan = simple_plan()
        assert required_entities(plan) == frozenset({"reviews", "comments"})

    def test_extension_filter_implies_files(self):
        plan = simple_plan(metrics=(MetricSelection(metric_id="title"),),
                          filters=FilterSet(file_extensions=(".java",)))
        assert required_entities(plan) == frozenset({"reviews", "files"})

    def test_reference_query_plan_entities(self):
        # commits metrics + presence-of-comments filter
        plan = simple_plan(metrics=(MetricSelection(category="commits"),),
                          filters=FilterSet(min_comments=1))
        assert required_entities(plan) == frozenset(
            {"reviews", "commits", "comments"})


class TestNormalize:
    def test_idempotent(self):
        rng = random.Random(3)
        for _ in range(30):
            p = normalize_plan(random_plan(rng))
            assert normalize_plan(p) == p

    def test_category_expansion_adds_entities(self):
        plan = simple_plan(metrics=(MetricSelection(category="comments"),))
        out = normalize_plan(plan)
        assert "comments" in out.entities
        assert all(s.metric_id for s in out.metrics)

    def test_duplicates_collapse(self):
        plan = simple_plan(metrics=(MetricSelection(metric_id="title"),
                                    MetricSelection(metric_id="title")))
        assert expanded_metric_ids(normalize_plan(plan)) == ["title"]

    def test_extensions_lowercased_sorted(self):
        plan = simple_plan(filters=FilterSet(file_extensions=(".Java", ".py")))
        assert normalize_plan(plan).filters.file_extensions == (".java", ".py")


class TestValidate:
    def test_valid_plan(self):
        report = validate_plan(normalize_plan(simple_plan()))
        assert report.valid and not report.issues

    def test_window_inverted(self):
        plan = simple_plan(filters=FilterSet(time_window=(
            datetime(2024, 1, 1, tzinfo=timezone.utc),
            datetime(2023, 1, 1, tzinfo=timezone.utc))))
        report = validate_plan(plan)
        assert not report.valid
        assert any(i.code == "WINDOW_INVERTED" for i in report.issues)

    def test_empty_metrics_warns_only(self):
        report = validate_plan(simple_plan(metrics=()))
        assert report.valid
        assert any(i.code == "EMPTY_METRICS" for i in report.issues)

    def test_future_window_warns(self):
        plan = simple_plan(filters=FilterSet(time_window=(
            datetime(2999, 1, 1, tzinfo=timezone.utc),
            datetime(2999, 2, 1, tzinfo=timezone.utc))))
        report = validate_plan(plan)
        assert report.valid
        assert any(i.code == "FUTURE_WINDOW" for i in report.issues)

    def test_unknown_metric_is_error(self):
        plan = simple_plan(metrics=(MetricSelection(metric_id="bogus"),))
        report = validate_plan(plan)
        assert not report.valid
        assert any(i.code == "UNKNOWN_METRIC" for i in report.issues)

    def test_bad_extension(self):
        plan = simple_plan(filters=FilterSet(file_extensions=("java",)))
        assert any(i.code == "BAD_EXTENSION" for i in validate_plan(plan).issues)

    def test_missing_reviews_entity(self):
        plan = simple_plan(entities=frozenset({"commits"}))
        assert any(i.code == "MISSING_ROOT_ENTITY"
                   for i in validate_plan(plan).issues)


class TestSerialization:
    def test_round_trip_100_random_plans(self):
        rng = random.Random(42)
        for _ in range(100):
            p = normalize_plan(random_plan(rng))
            text = serialize_plan(p)
            assert parse_plan(text) == p
            assert serialize_plan(parse_plan(text)) == text

    def test_byte_deterministic(self):
        p = normalize_plan(simple_plan())
        assert serialize_plan(p) == serialize_plan(p)

    def test_missing_schema_version(self):
        doc = json.loads(serialize_plan(normalize_plan(simple_plan())))
        del doc["schema_version"]
        with pytest.raises(PlanParseError):
            parse_plan(json.dumps(doc))

    def test_unsupported_schema_version(self):
        doc = json.loads(serialize_plan(normalize_plan(simple_plan())))
        doc["schema_version"] = 999
        with pytest.raises(UnsupportedSchemaVersion):
            parse_plan(json.dumps(doc))

    def test_parse_error_has_position(self):
        with pytest.raises(PlanParseError) as err:
            parse_plan("{not json")
        assert err.value.line is not None
