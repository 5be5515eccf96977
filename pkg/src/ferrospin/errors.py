"""Exception hierarchy shared by all modules.

The CLI maps these onto its exit-code contract: InputError -> 1,
CapacityError -> 2; verification failures are reported, not raised.
"""


class FerrospinError(Exception):
    pass


class InputError(FerrospinError):
    """Malformed input, bad domain, bad parameter, or out-of-regime request."""


class CapacityError(FerrospinError):
    """Request exceeds a desk-scale enumeration cap."""


class NumericError(FerrospinError):
    """Numerical routine failed (bad eigensolver residual, etc.)."""


class NonconvergenceError(NumericError):
    """Iterative computation hit its step cap before converging."""

    def __init__(self, message, steps=None, residual=None):
        super().__init__(message)
        self.steps = steps
        self.residual = residual


class CouplingInvariantError(FerrospinError):
    """The coordinatewise order between coupled chains was violated."""
