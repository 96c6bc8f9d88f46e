"""Exception types shared across the package.

I/O failures are left to the builtin OSError hierarchy; these classes cover
domain validation and optimizer infeasibility so the CLI can map each family
to a distinct exit code.
"""


class PoolPartError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(PoolPartError, ValueError):
    """Input violates a documented precondition or invariant."""


class InfeasibleError(PoolPartError):
    """The optimization problem has no feasible solution."""
