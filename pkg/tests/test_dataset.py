import csv
import io
import json
import random
from datetime import datetime, timedelta, timezone

import pytest

from revmine.dataset import (
    apply_filters,
    build_dataset,
    compute_metric,
    dataset_from_doc,
    dataset_to_doc,
    export_csv,
    format_value,
    load_archive,
)
from revmine.plan import FilterSet, filters_to_doc

from fixture_server import TOKEN
from oracle import derived_metrics, load_raw, parse_rfc4180, passes_filters, real_notes

ALL_REVIEW_METRICS = [
    "review_id", "title", "description", "state", "created_at", "merged_at",
    "closed_at", "author", "source_branch", "target_branch",
    "review_duration_hours", "comment_count", "inline_comment_count",
    "reviewer_count", "commit_count", "files_changed",
    "time_to_first_response_hours",
]


@pytest.fixture(scope="module")
def records_250(archive_250):
    records, warnings = load_archive(archive_250)
    assert not warnings
    return records


@pytest.fixture(scope="module")
def raw_250(archive_250):
    return load_raw(archive_250)


class TestLoadArchive:
    def test_all_reviews_present_sorted(self, records_250, raw_250):
        assert len(records_250) == 250
        assert [r.number for r in records_250] == [m["iid"] for m in raw_250]

    def test_system_notes_dropped(self, records_250, raw_250):
        for rec, mr in zip(records_250, raw_250):
            assert len(rec.comments) == len(real_notes(mr))

    def test_children_sorted(self, records_250):
        for r in records_250:
            keys = [(c.created_at, c.comment_id) for c in r.comments]
            assert keys == sorted(keys)
            ckeys = [(c.committed_at, c.sha) for c in r.commits]
            assert ckeys == sorted(ckeys)


class TestDerivedOracle:
    def test_all_derived_match_brute_force(self, records_250, raw_250):
        for rec, mr in zip(records_250, raw_250):
            expected = derived_metrics(mr)
            for mid, want in expected.items():
                got = compute_metric(mid, rec)
                if isinstance(want, float) and got is not None:
                    assert abs(got - want) <= 1e-9, (rec.number, mid)
                else:
                    assert got == want, (rec.number, mid)


def random_filters(rng: random.Random) -> FilterSet:
    start = datetime(2023, 1, 1, tzinfo=timezone.utc) + timedelta(
        hours=rng.randint(0, 4000))
    return FilterSet(
        time_window=(start, start + timedelta(hours=rng.randint(24, 6000)))
        if rng.random() < 0.5 else None,
        states=tuple(sorted(rng.sample(["open", "merged", "closed"],
                                       rng.randint(1, 3))))
        if rng.random() < 0.4 else None,
        min_comments=rng.randint(0, 4) if rng.random() < 0.4 else None,
        authors=tuple(sorted(rng.sample(["alice", "bob", "carol", "dave", "erin"],
                                        rng.randint(1, 4))))
        if rng.random() < 0.3 else None,
        file_extensions=tuple(sorted(rng.sample([".java", ".py", ".md", ".rs"],
                                                rng.randint(1, 3))))
        if rng.random() < 0.3 else None,
        keywords=tuple(rng.sample(["fix", "lgtm", "merge", "test"],
                                  rng.randint(1, 2)))
        if rng.random() < 0.3 else None,
    )


def tighten(f: FilterSet, rng: random.Random) -> FilterSet:
    """A strictly-not-looser variant of f (adds or narrows one component)."""
    from dataclasses import replace

    choice = rng.randint(0, 3)
    if choice == 0:
        return replace(f, min_comments=(f.min_comments or 0) + rng.randint(1, 2))
    if choice == 1:
        states = f.states or ("open", "merged", "closed")
        return replace(f, states=tuple(sorted(
            rng.sample(states, max(1, len(states) - 1)))))
    if choice == 2:
        authors = f.authors or ("alice", "bob", "carol", "dave", "erin")
        return replace(f, authors=tuple(sorted(
            rng.sample(authors, max(1, len(authors) - 1)))))
    if f.time_window is None:
        return replace(f, time_window=(
            datetime(2023, 3, 1, tzinfo=timezone.utc),
            datetime(2023, 9, 1, tzinfo=timezone.utc)))
    lo, hi = f.time_window
    span = (hi - lo) / 4
    return replace(f, time_window=(lo + span, hi - span))


class TestFiltering:
    def test_oracle_agreement_random_filters(self, records_250, raw_250):
        rng = random.Random(17)
        for _ in range(60):
            f = random_filters(rng)
            got = {r.number for r in apply_filters(records_250, f)}
            fdoc = filters_to_doc(f)
            want = {mr["iid"] for mr in raw_250 if passes_filters(mr, fdoc)}
            assert got == want, fdoc

    def test_monotonicity_200_pairs(self, records_250):
        rng = random.Random(29)
        for _ in range(200):
            loose = random_filters(rng)
            strict = tighten(loose, rng)
            kept_loose = {r.number for r in apply_filters(records_250, loose)}
            kept_strict = {r.number for r in apply_filters(records_250, strict)}
            assert kept_strict <= kept_loose

    def test_empty_filters_keep_everything(self, records_250):
        assert len(apply_filters(records_250, FilterSet())) == 250

    def test_keyword_case_insensitive(self, records_250):
        lower = {r.number for r in apply_filters(
            records_250, FilterSet(keywords=("lgtm",)))}
        upper = {r.number for r in apply_filters(
            records_250, FilterSet(keywords=("LGTM",)))}
        assert lower == upper and lower


class TestBuildDataset:
    def test_review_id_first_everywhere(self, archive_250):
        ds = build_dataset(archive_250,
                           ["comment_count", "commit_sha", "comment_body",
                            "file_path"], FilterSet())
        for table in ds.tables.values():
            assert table.columns[0][0] == "review_id"

    def test_child_tables_only_when_selected(self, archive_250):
        ds = build_dataset(archive_250, ["comment_count"], FilterSet())
        assert set(ds.tables) == {"reviews"}

    def test_foreign_keys_resolve(self, archive_250):
        ds = build_dataset(archive_250, ["review_id", "comment_body"], FilterSet())
        review_ids = {row[0] for row in ds.tables["reviews"].rows}
        assert {row[0] for row in ds.tables["comments"].rows} <= review_ids

    def test_absent_vs_zero(self, archive_250, records_250):
        silent = next(r for r in records_250 if not r.comments)
        ds = build_dataset(
            archive_250, ["review_id", "comment_count",
                          "time_to_first_response_hours"], FilterSet())
        cols = [c for c, _ in ds.tables["reviews"].columns]
        row = next(r for r in ds.tables["reviews"].rows
                   if r[cols.index("review_id")] == silent.review_id)
        assert row[cols.index("comment_count")] == 0
        assert row[cols.index("time_to_first_response_hours")] is None

    def test_filters_recorded(self, archive_250):
        f = FilterSet(states=("merged",))
        ds = build_dataset(archive_250, ["review_id"], f)
        assert ds.applied_filters == f
        states = {r["state"] for r in load_raw(archive_250)}
        assert "merged" in states


class TestFormatValue:
    def test_none_empty(self):
        assert format_value(None) == ""

    def test_zero_is_zero(self):
        assert format_value(0) == "0"

    def test_float_repr_round_trips(self):
        for v in (0.1, 1 / 3, 17.25, 1e-9, 123456.789):
            assert float(format_value(v)) == v

    def test_timestamp_z(self):
        dt = datetime(2023, 5, 1, 12, 30, tzinfo=timezone.utc)
        assert format_value(dt) == "2023-05-01T12:30:00Z"


@pytest.fixture(scope="module")
def exported(archive_250, tmp_path_factory):
    out = tmp_path_factory.mktemp("csv")
    ds = build_dataset(archive_250, ALL_REVIEW_METRICS + [
        "comment_body", "comment_author", "comment_created_at",
        "commit_sha", "commit_message", "file_path"], FilterSet())
    export_csv(ds, out)
    return ds, out


class TestCsvExport:
    def test_crlf_and_header(self, exported):
        ds, out = exported
        blob = (out / "reviews.csv").read_bytes()
        assert blob.count(b"\r\n") >= len(ds.tables["reviews"].rows) + 1
        assert not blob.startswith(b"\xef\xbb\xbf")
        first = blob.split(b"\r\n", 1)[0].decode()
        assert first.split(",")[0] == "review_id"

    def test_round_trip_hand_rolled_parser(self, exported):
        ds, out = exported
        for name, table in ds.tables.items():
            text = (out / f"{name}.csv").read_text(encoding="utf-8")
            rows = parse_rfc4180(text)
            assert rows[0] == [c for c, _ in table.columns]
            assert len(rows) - 1 == len(table.rows)
            for parsed, original in zip(rows[1:], table.rows):
                assert parsed == [format_value(v) for v in original]

    def test_round_trip_stdlib_reader(self, exported):
        ds, out = exported
        with open(out / "comments.csv", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
        for parsed, original in zip(rows[1:], ds.tables["comments"].rows):
            assert parsed == [format_value(v) for v in original]

    def test_embedded_quotes_commas_newlines_survive(self, exported):
        ds, out = exported
        descriptions = [row[2] for row in ds.tables["reviews"].rows]
        assert any('"' in d for d in descriptions)
        assert any("," in d for d in descriptions)
        assert any("\n" in d for d in descriptions)
        text = (out / "reviews.csv").read_text(encoding="utf-8")
        parsed = parse_rfc4180(text)
        parsed_descriptions = [row[2] for row in parsed[1:]]
        assert parsed_descriptions == descriptions

    def test_metadata_file(self, exported):
        ds, out = exported
        meta = json.loads((out / "dataset.json").read_text())
        assert meta["dataset_id"] == ds.dataset_id
        assert meta["tables"]["reviews"]["row_count"] == len(
            ds.tables["reviews"].rows)
        assert TOKEN not in (out / "dataset.json").read_text()


class TestDocRoundTrip:
    def test_dataset_doc_round_trip(self, archive_250):
        ds = build_dataset(archive_250, ALL_REVIEW_METRICS + ["comment_body"],
                           FilterSet(states=("merged", "open")),
                           dataset_id="ds-fixed")
        doc = json.loads(json.dumps(dataset_to_doc(ds)))
        back = dataset_from_doc(doc)
        assert back.dataset_id == ds.dataset_id
        assert back.applied_filters == ds.applied_filters
        for name, table in ds.tables.items():
            assert back.tables[name].columns == table.columns
            assert back.tables[name].rows == table.rows
