"""RevMine: guided code-review mining and analysis for GitHub and GitLab."""

__version__ = "0.1.0"
