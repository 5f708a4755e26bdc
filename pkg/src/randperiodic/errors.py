"""Error types shared across the package.

ConfigurationError maps to CLI exit code 2 (bad configuration or failed
validation), IntegrationError to exit code 3 (numerical failure at runtime).
"""


class ConfigurationError(Exception):
    """A configuration value or combination of values is unusable."""


class IntegrationError(RuntimeError):
    """The scheme failed numerically: solver divergence or non-finite state."""
