"""Exception types raised across the package."""


class BNFError(Exception):
    """Base class for all package errors."""


class DimensionError(BNFError, ValueError):
    """Operands live on tori (or action spaces) of different dimension."""


class NonZeroMean(BNFError, ValueError):
    """Right-hand side of the homological equation has a nonzero average."""


class ResonantMode(BNFError, ArithmeticError):
    """A Fourier mode is (numerically) resonant with the frequency vector."""


class MissingData(BNFError, ValueError):
    """Lower-order data required by a computation is absent."""


class NoConvergence(BNFError, RuntimeError):
    """An iterative solver did not reach its tolerance."""


class DomainError(BNFError, ValueError):
    """An evaluation point lies outside the declared action domain."""


class DegenerateProfile(BNFError, ValueError):
    """Not enough profile data to fit Gevrey constants."""


class SchemaError(BNFError, ValueError):
    """A problem or result file does not follow the expected layout."""
