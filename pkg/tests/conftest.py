import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fixture_server import TOKEN, FixtureServer, FixtureState  # noqa: E402
from synthetic import make_logical, render_github, render_gitlab  # noqa: E402

from revmine.clock import VirtualClock
from revmine.collector import RunExecutor
from revmine.platform_access import PlatformConfig

FIXTURES = Path(__file__).parent / "fixtures"


def pytest_collection_modifyitems(items):
    """Run the acceptance module last so its artifact-wide checks (notably
    the secret-hygiene sweep) see everything the rest of the suite wrote."""
    items.sort(key=lambda item: item.fspath.basename == "test_acceptance.py")


@pytest.fixture(scope="session")
def logical_250():
    return make_logical(250, seed=11)


@pytest.fixture()
def gitlab_state_250(logical_250):
    reviews, children = render_gitlab(logical_250)
    return FixtureState("gitlab", reviews, children, project="42")


@pytest.fixture()
def gitlab_server(gitlab_state_250):
    with FixtureServer(gitlab_state_250) as server:
        yield server


def config_for(server: FixtureServer) -> PlatformConfig:
    state = server.state
    project = state.project
    return PlatformConfig(kind=state.platform, token=TOKEN, project=project,
                          base_url=server.base_url)


@pytest.fixture()
def gitlab_config(gitlab_server):
    return config_for(gitlab_server)


def make_executor(server: FixtureServer, **kwargs) -> RunExecutor:
    kwargs.setdefault("clock", VirtualClock())
    return RunExecutor(config_for(server), **kwargs)


@pytest.fixture(scope="session")
def mock_llm_table():
    return json.loads((FIXTURES / "mock_llm.json").read_text())


@pytest.fixture(scope="session")
def archive_250(tmp_path_factory, logical_250):
    """A completed 250-review gitlab run archive, shared read-only."""
    reviews, children = render_gitlab(logical_250)
    state = FixtureState("gitlab", reviews, children, project="42")
    root = tmp_path_factory.mktemp("archive250")
    with FixtureServer(state) as server:
        executor = make_executor(server)
        from revmine.plan import (CollectionPlan, FilterSet, MetricSelection,
                                  normalize_plan)

        plan = normalize_plan(CollectionPlan(
            plan_id="fixture-250",
            platform="gitlab",
            entities=frozenset({"reviews", "commits", "comments", "files"}),
            metrics=tuple(MetricSelection(category=c)
                          for c in ("review_meta", "commits", "comments",
                                    "files", "derived")),
            filters=FilterSet(),
        ))
        manifest = executor.execute_run(plan, root)
    assert manifest["status"] == "completed"
    return root / manifest["run_id"]
