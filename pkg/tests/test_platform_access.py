import pytest

from revmine.errors import InvalidUrl, MissingField, NetworkUnreachable
from revmine.platform_access import (
    CapabilityManifest,
    PlatformConfig,
    load_config,
    redact,
    verify_access,
)

from conftest import config_for
from fixture_server import TOKEN, FixtureServer, FixtureState
from synthetic import make_logical, render_github, render_gitlab


class TestRedact:
    def test_long_token_shows_prefix(self):
        assert redact("ghp_abcdefgh12345") == "ghp_…"

    def test_short_token_fully_hidden(self):
        assert redact("abc") == "…"
        assert redact("12345678") == "…"

    def test_raw_token_absent(self):
        assert TOKEN not in redact(TOKEN)


class TestLoadConfig:
    def test_env_only(self):
        cfg = load_config(env={"REVMINE_PLATFORM": "gitlab",
                               "REVMINE_TOKEN": "t" * 12,
                               "REVMINE_PROJECT": "42"})
        assert cfg.kind == "gitlab"
        assert cfg.base_url == "https://gitlab.com/api/v4"

    def test_file_layer(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("platform: github\ntoken: filetok123456\n"
                        "project: octo/repo\n")
        cfg = load_config(file_path=path, env={})
        assert cfg.kind == "github" and cfg.project == "octo/repo"
        assert cfg.base_url == "https://api.github.com"

    def test_env_beats_file(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("platform: gitlab\ntoken: filetok123456\nproject: 1\n")
        cfg = load_config(file_path=path,
                          env={"REVMINE_TOKEN": "envtok7890123"})
        assert cfg.token == "envtok7890123"

    def test_overrides_beat_env(self, tmp_path):
        cfg = load_config(env={"REVMINE_PLATFORM": "gitlab",
                               "REVMINE_TOKEN": "envtok7890123",
                               "REVMINE_PROJECT": "42"},
                          overrides={"project": "43"})
        assert cfg.project == "43"

    def test_missing_token(self):
        with pytest.raises(MissingField):
            load_config(env={"REVMINE_PLATFORM": "gitlab",
                             "REVMINE_PROJECT": "42"})

    def test_bad_base_url(self):
        with pytest.raises(InvalidUrl):
            load_config(env={"REVMINE_PLATFORM": "gitlab",
                             "REVMINE_TOKEN": "t" * 12,
                             "REVMINE_PROJECT": "42",
                             "REVMINE_BASE_URL": "ftp://nope"})

    def test_trailing_slash_stripped(self):
        cfg = load_config(env={"REVMINE_PLATFORM": "gitlab",
                               "REVMINE_TOKEN": "t" * 12,
                               "REVMINE_PROJECT": "42",
                               "REVMINE_BASE_URL": "http://localhost:9/api/"})
        assert cfg.base_url == "http://localhost:9/api"

    def test_github_project_shape(self):
        with pytest.raises(ValueError):
            PlatformConfig(kind="github", token="t" * 12, project="justname",
                           base_url="https://api.github.com")


def _small_state(platform: str):
    logical = make_logical(3, seed=7)
    if platform == "gitlab":
        reviews, children = render_gitlab(logical)
        return FixtureState("gitlab", reviews, children, project="42")
    reviews, children = render_github(logical)
    return FixtureState("github", reviews, children, project="octo/repo")


class TestVerifyAccess:
    def test_happy_path_gitlab(self):
        with FixtureServer(_small_state("gitlab")) as server:
            manifest = verify_access(config_for(server))
        assert isinstance(manifest, CapabilityManifest)
        assert manifest.token_valid and manifest.project_accessible
        assert manifest.authenticated_user == "miner"
        by_id = {p.endpoint_id: p for p in manifest.endpoints}
        assert len(by_id) == 7
        assert all(p.available for p in manifest.endpoints)

    def test_happy_path_github_scopes(self):
        with FixtureServer(_small_state("github")) as server:
            manifest = verify_access(config_for(server))
        assert manifest.token_valid
        assert "repo" in manifest.scopes

    def test_bad_token_short_circuits(self):
        state = _small_state("gitlab")
        with FixtureServer(state) as server:
            cfg = PlatformConfig(kind="gitlab", token="wrongtoken123",
                                 project="42", base_url=server.base_url)
            manifest = verify_access(cfg)
            # only the identity probe went out
            assert len(state.requests) == 1
        assert not manifest.token_valid and not manifest.project_accessible
        assert all(not p.available for p in manifest.endpoints)

    def test_project_404_kept_in_manifest(self):
        state = _small_state("gitlab")
        state.force_project_status = 404
        with FixtureServer(state) as server:
            manifest = verify_access(config_for(server))
        assert manifest.token_valid and not manifest.project_accessible
        probe = next(p for p in manifest.endpoints
                     if p.endpoint_id == "project_probe")
        assert probe.probe_status == 404

    def test_empty_project_inherits_listing(self):
        state = FixtureState("gitlab", [], {}, project="42")
        with FixtureServer(state) as server:
            manifest = verify_access(config_for(server))
        nested = {p.endpoint_id: p for p in manifest.endpoints}
        for eid in ("review_detail", "review_commits", "review_comments",
                    "review_files"):
            assert nested[eid].available and nested[eid].probe_status == 0

    def test_unreachable_host_raises(self):
        cfg = PlatformConfig(kind="gitlab", token="t" * 12, project="42",
                             base_url="http://127.0.0.1:9")
        with pytest.raises(NetworkUnreachable):
            verify_access(cfg, timeout=1.0)

    def test_manifest_dict_has_no_raw_token(self):
        with FixtureServer(_small_state("gitlab")) as server:
            manifest = verify_access(config_for(server))
        assert TOKEN not in str(manifest.as_dict())
