"""Exception types shared across the package.

The CLI maps :class:`ConfigError` to exit code 2 and :class:`SolverError`
to exit code 3, so library code should raise one of these rather than a
bare ``RuntimeError``.
"""


class ConfigError(ValueError):
    """Invalid user-supplied input: parameters, files, or grids."""


class SolverError(RuntimeError):
    """A numerical routine could not produce a valid answer."""


class RegimeError(SolverError):
    """A solver was called on a scenario outside the regime it handles."""
