"""Exception hierarchy mapped to CLI exit codes (config -> 2, numeric -> 3)."""


class MflabError(Exception):
    """Base class for all package-raised failures."""


class ConfigError(MflabError):
    """Invalid or inconsistent configuration; rejected before any compute."""


class NumericError(MflabError):
    """A computation produced non-finite or otherwise unusable values."""
