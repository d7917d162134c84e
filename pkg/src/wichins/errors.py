"""Exception taxonomy; the CLI maps these onto distinct exit codes."""


class WichinsError(Exception):
    """Base class for package errors."""


class ConfigError(WichinsError):
    """Invalid configuration: vehicle layout, run options, trajectory spec."""


class DegenerateGeometryError(ConfigError):
    """Wheel layout cannot determine the requested kinematic solution."""


class DataError(WichinsError):
    """Malformed or inconsistent recording data."""


class DivergenceError(WichinsError):
    """A filter produced non-finite state and cannot continue."""
