"""Library specific exception definitions."""
from typing import Optional, Sequence, Tuple


class GkitError(Exception):
    """Base gkit exception that all others inherit.

    This is done to not pollute the built-in exceptions, which *could* result
    in unintended errors being unexpectedly and incorrectly handled within
    implementers code.

    ``exit_code`` is what the command line front end exits with when the
    error reaches it.
    """

    exit_code = 1


class ParseError(GkitError):
    """Input file could not be parsed."""


class ConfigError(GkitError):
    """Run configuration is invalid."""


class DimensionMismatch(GkitError):
    """Operand shapes disagree with their declared spaces."""

    def __init__(self, caller: str, expected, actual):
        """
        :param str caller:
            Calling function
        :param expected:
            The shape (or dimension) the caller required.
        :param actual:
            The shape (or dimension) it was handed.
        """
        super().__init__(f"{caller}: expected {expected}, got {actual}")
        self.caller = caller
        self.expected = expected
        self.actual = actual


class NonFiniteEntries(GkitError):
    """A coefficient array contains nan or inf."""


class InvalidRank(GkitError):
    """Requested factorization rank is below one."""

    def __init__(self, rank: int):
        self.rank = rank
        super().__init__(f"rank must be at least 1, got {rank}")


class NotInfInfDomains(GkitError):
    """Operation is only defined for forms on (LInf, LInf)."""


class InexactNorm(GkitError):
    """Only a norm interval straddling the threshold is available."""

    def __init__(self, lower: float, upper: float, threshold: float):
        self.lower = lower
        self.upper = upper
        self.threshold = threshold
        super().__init__(
            f"norm interval [{lower!r}, {upper!r}] straddles {threshold!r}"
        )


class IndexOutOfRange(GkitError):
    """Tensor mode index outside 1..n."""

    def __init__(self, index: int, order: int):
        self.index = index
        self.order = order
        super().__init__(f"mode {index} is outside 1..{order}")


class InvalidPermutation(GkitError):
    """Sequence is not a permutation of 1..n."""

    def __init__(self, sigma: Sequence[int], order: int):
        self.sigma = tuple(sigma)
        self.order = order
        super().__init__(f"{list(self.sigma)} is not a permutation of 1..{order}")


class InvalidInterval(GkitError):
    """Quadrature interval with a >= b."""

    def __init__(self, a: float, b: float):
        self.a = a
        self.b = b
        super().__init__(f"invalid interval [{a!r}, {b!r}]")


class GridTooSmall(GkitError):
    """Too few quadrature nodes requested."""

    def __init__(self, n: int, minimum: int):
        self.n = n
        self.minimum = minimum
        super().__init__(f"need at least {minimum} nodes, got {n}")


class NonFiniteKernelValue(GkitError):
    """Kernel sample is nan or inf."""

    def __init__(self, index: Tuple[int, int]):
        self.index = index
        super().__init__(f"kernel value at node pair {index} is not finite")


class AsymmetricGrids(GkitError):
    """Symmetric path needs grid_x identical to grid_y."""


class GridMismatch(GkitError):
    """Shared grid of a composition differs between the two kernels."""


class UnknownKernel(GkitError):
    """Built-in kernel name is not registered."""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown kernel {name!r}")


class EnumLimitExceeded(GkitError):
    """Sign enumeration would exceed the configured limit."""

    exit_code = 2

    def __init__(self, dimension: int, limit: int):
        """
        :param int dimension:
            Number of sign variables the exact path needs.
        :param int limit:
            The configured ``enum_limit``.
        """
        self.dimension = dimension
        self.limit = limit
        super().__init__(
            f"sign enumeration over {dimension} variables exceeds "
            f"enum_limit={limit}; raise the limit explicitly"
        )


class TensorTooLarge(GkitError):
    """Dense tensor beyond the supported order or entry count."""

    exit_code = 2


class IdentityViolation(GkitError):
    """Two orders of integration disagree beyond tolerance."""

    exit_code = 3

    def __init__(self, what: str, discrepancy: float, tol: float):
        self.what = what
        self.discrepancy = discrepancy
        self.tol = tol
        super().__init__(f"{what}: discrepancy {discrepancy!r} exceeds {tol!r}")


class BoundViolation(GkitError):
    """A certified bound does not hold."""

    exit_code = 3

    def __init__(self, what: str, value: float, bound: Optional[float] = None):
        self.what = what
        self.value = value
        self.bound = bound
        if bound is None:
            super().__init__(f"{what}: {value!r}")
        else:
            super().__init__(f"{what}: {value!r} exceeds {bound!r}")
