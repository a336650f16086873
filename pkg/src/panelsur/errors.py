"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes: input/specification problems
exit with 2, numerical estimation failures with 3.
"""


class PanelSurError(Exception):
    """Base class for all package errors."""


class InputError(PanelSurError):
    """Malformed file, config, or CLI input."""


class SpecificationError(PanelSurError):
    """Inconsistent panel, model description, or sample selection."""


class EstimationError(PanelSurError):
    """Numerical failure inside an estimator or test."""
