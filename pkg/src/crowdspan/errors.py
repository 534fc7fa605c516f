"""Base exception for everything this package raises on bad data or bad state."""


class CrowdspanError(Exception):
    """Common ancestor so callers (and the CLI) can catch domain errors in one place."""
