"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: validation problems exit 2, numeric
failures exit 3, infeasible tests exit 4.
"""


class HdgcError(Exception):
    """Base class for all package errors."""


class ValidationError(HdgcError):
    """Invalid inputs or violated data contracts."""


class MissingColumnError(ValidationError):
    """A named column is absent from the input file."""


class CellParseError(ValidationError):
    """A cell could not be parsed as a number; message names the cell."""


class QueryError(ValidationError):
    """Ill-posed Granger-causality query (overlapping or empty blocks, ...)."""


class SampleSizeError(ValidationError):
    """Not enough observations for the requested lag structure."""


class PathOverflowError(ValidationError):
    """Path/cycle enumeration exceeded the configured cap."""


class NumericError(HdgcError):
    """Non-finite inputs or numerically meaningless intermediate results."""


class ConvergenceError(NumericError):
    """Iterative solver failed to converge within its sweep budget."""


class InfeasibleTestError(HdgcError):
    """The post-selection refit has more coefficients than observations."""
