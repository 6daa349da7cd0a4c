"""Platform credentials and the pre-flight capability check.

Configuration is layered (command line > environment > file) and the
resulting PlatformConfig is immutable. verify_access issues only GET
probes and encodes 4xx outcomes as manifest data; connect/timeout
failures raise NetworkUnreachable instead, since those are environment
problems the user cannot fix by editing credentials.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from urllib.parse import urlparse

import requests
import yaml

from . import adapters
from .errors import InvalidUrl, MissingField, NetworkUnreachable
from .timestamps import format_ts

DEFAULT_BASE_URLS = {
    "github": "https://api.github.com",
    "gitlab": "https://gitlab.com/api/v4",
}

ENV_VARS = {
    "kind": "REVMINE_PLATFORM",
    "token": "REVMINE_TOKEN",
    "project": "REVMINE_PROJECT",
    "base_url": "REVMINE_BASE_URL",
}


@dataclass(frozen=True)
class PlatformConfig:
    kind: str
    token: str
    project: str
    base_url: str
    api_version: str | None = None

    def __post_init__(self):
        if not self.token:
            raise MissingField("token")
        if not self.project:
            raise MissingField("project")
        _check_url(self.base_url)
        if self.kind == "github" and self.project.count("/") != 1:
            raise ValueError(f"GitHub project must be owner/name: {self.project!r}")


def _check_url(url: str) -> str:
    parsed = urlparse(url)
    if parsed.scheme not in ("http", "https") or not parsed.netloc:
        raise InvalidUrl(url)
    return url


def redact(token: str) -> str:
    """Display form of a secret: first 4 chars when long enough, else just ellipsis."""
    if len(token) > 8:
        return token[:4] + "…"
    return "…"


def load_config(
    file_path: str | Path | None = None,
    env: dict[str, str] | None = None,
    overrides: dict[str, str] | None = None,
) -> PlatformConfig:
    """Merge config layers with precedence overrides > env > file."""
    env = os.environ if env is None else env
    layers: dict[str, str] = {}

    if file_path is not None:
        doc = yaml.safe_load(Path(file_path).read_text()) or {}
        for key in ("kind", "token", "project", "base_url", "api_version"):
            # accept "platform" as a friendlier alias for kind in files
            value = doc.get(key) if key != "kind" else doc.get("kind", doc.get("platform"))
            if value is not None:
                layers[key] = str(value)

    for key, var in ENV_VARS.items():
        if env.get(var):
            layers[key] = env[var]

    for key, value in (overrides or {}).items():
        if value is not None:
            layers[key] = value

    for required in ("kind", "token", "project"):
        if not layers.get(required):
            raise MissingField(required)
    kind = layers["kind"]
    if kind not in DEFAULT_BASE_URLS:
        raise ValueError(f"unknown platform kind: {kind!r}")
    base_url = layers.get("base_url") or DEFAULT_BASE_URLS[kind]
    base_url = _check_url(base_url).rstrip("/")
    return PlatformConfig(
        kind=kind,
        token=layers["token"],
        project=layers["project"],
        base_url=base_url,
        api_version=layers.get("api_version"),
    )


@dataclass(frozen=True)
class EndpointProbe:
    endpoint_id: str
    available: bool
    probe_status: int


@dataclass(frozen=True)
class CapabilityManifest:
    token_valid: bool
    authenticated_user: str | None
    scopes: tuple[str, ...]
    project_accessible: bool
    endpoints: tuple[EndpointProbe, ...]
    rate_limit_snapshot: tuple[int, datetime] | None
    checked_at: datetime

    def as_dict(self) -> dict:
        return {
            "token_valid": self.token_valid,
            "authenticated_user": self.authenticated_user,
            "scopes": list(self.scopes),
            "project_accessible": self.project_accessible,
            "endpoints": [
                {"endpoint_id": e.endpoint_id, "available": e.available,
                 "probe_status": e.probe_status}
                for e in self.endpoints
            ],
            "rate_limit_snapshot": (
                {"remaining": self.rate_limit_snapshot[0],
                 "reset_at": format_ts(self.rate_limit_snapshot[1])}
                if self.rate_limit_snapshot else None
            ),
            "checked_at": format_ts(self.checked_at),
        }


def _rate_snapshot(config: PlatformConfig, headers) -> tuple[int, datetime] | None:
    if config.kind == "github":
        remaining, reset = headers.get("X-RateLimit-Remaining"), headers.get("X-RateLimit-Reset")
    else:
        remaining, reset = headers.get("RateLimit-Remaining"), headers.get("RateLimit-Reset")
    if remaining is None or reset is None:
        return None
    try:
        return int(remaining), datetime.fromtimestamp(int(reset), tz=timezone.utc)
    except ValueError:
        return None


def verify_access(config: PlatformConfig, session: requests.Session | None = None,
                  timeout: float = 15.0) -> CapabilityManifest:
    """Probe identity, project access, and every declared collection endpoint.

    4xx results land in the manifest; connect/timeout failures raise
    NetworkUnreachable. Only GET requests are issued.
    """
    session = session or requests.Session()
    headers = adapters.auth_headers(config.kind, config.token)
    templates = adapters.declared_endpoints(config.kind)

    def get(path: str, params=None):
        try:
            return session.get(config.base_url + path, headers=headers,
                               params=params, timeout=timeout)
        except (requests.ConnectionError, requests.Timeout) as exc:
            raise NetworkUnreachable(str(exc)) from exc

    checked_at = datetime.now(timezone.utc)

    identity = get(adapters.resolve_path(config.kind, "identity_probe", config.project))
    token_valid = identity.status_code == 200
    authenticated_user = None
    scopes: tuple[str, ...] = ()
    rate = _rate_snapshot(config, identity.headers)
    if token_valid:
        body = identity.json()
        authenticated_user = body.get("login") or body.get("username")
        if config.kind == "github":
            raw_scopes = identity.headers.get("X-OAuth-Scopes", "")
            scopes = tuple(s.strip() for s in raw_scopes.split(",") if s.strip())

    probes: list[EndpointProbe] = [
        EndpointProbe("identity_probe", token_valid, identity.status_code)
    ]

    if not token_valid:
        # token_valid=false forces project_accessible=false and no availability
        for eid in templates:
            if eid != "identity_probe":
                probes.append(EndpointProbe(eid, False, 0))
        return CapabilityManifest(
            token_valid=False, authenticated_user=None, scopes=(),
            project_accessible=False, endpoints=tuple(probes),
            rate_limit_snapshot=rate, checked_at=checked_at,
        )

    project_resp = get(adapters.resolve_path(config.kind, "project_probe", config.project))
    project_accessible = project_resp.status_code == 200
    probes.append(EndpointProbe("project_probe", project_accessible,
                                project_resp.status_code))
    rate = _rate_snapshot(config, project_resp.headers) or rate

    list_resp = get(adapters.resolve_path(config.kind, "list_reviews", config.project),
                    params={"per_page": 1})
    list_ok = list_resp.status_code == 200
    probes.append(EndpointProbe("list_reviews", list_ok, list_resp.status_code))

    sample_number = None
    if list_ok:
        try:
            items = list_resp.json()
            if items:
                key = "number" if config.kind == "github" else "iid"
                sample_number = items[0].get(key)
        except ValueError:
            sample_number = None

    for eid in ("review_detail", "review_commits", "review_comments", "review_files"):
        if sample_number is None:
            # nothing to probe against; availability follows the listing probe
            probes.append(EndpointProbe(eid, list_ok, 0))
            continue
        resp = get(adapters.resolve_path(config.kind, eid, config.project, sample_number),
                   params={"per_page": 1})
        probes.append(EndpointProbe(eid, resp.status_code == 200, resp.status_code))
        rate = _rate_snapshot(config, resp.headers) or rate

    return CapabilityManifest(
        token_valid=True,
        authenticated_user=authenticated_user,
        scopes=scopes,
        project_accessible=project_accessible,
        endpoints=tuple(probes),
        rate_limit_snapshot=rate,
        checked_at=checked_at,
    )
