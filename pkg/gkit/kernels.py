"""
Integral operators on quadrature grids.

A kernel ``k`` sampled on nodes ``x_i`` (weights ``w_i``) and ``y_j``
(weights ``w'_j``) acts by the Nystrom rule
``(Tf)(y_j) = sum_i w_i k(x_i, y_j) f(x_i)``. Its form
``phi(f, g) = sum_j w'_j (Tf)(y_j) g(y_j)`` lives on weighted-L2 spaces whose
weights are the quadrature weights.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from gkit.constants import Constants
from gkit.exceptions import (
    AsymmetricGrids,
    BoundViolation,
    DimensionMismatch,
    GridMismatch,
    GridTooSmall,
    IdentityViolation,
    InvalidInterval,
    NonFiniteKernelValue,
    ParseError,
    UnknownKernel,
)
from gkit.helpers import blocks, parallel_map, regex_search, relative_spread
from gkit.spaces import BilinearForm, NormTag, SpaceSpec

logger = logging.getLogger(__name__)

# Rows of kernel values assembled per task.
ROW_BLOCK = 256
SYMMETRY_TOL = 1e-10
GREEN_MIN_NODES = 10
# Relative tolerance of sum(weights) = b - a for generated rules.
WEIGHT_SUM_TOL = 1e-12


class Rule(Enum):
    TRAPEZOID = "Trapezoid"
    GAUSS_LEGENDRE = "GaussLegendre"
    TABULATED = "Tabulated"


def _rule(rule: Union[str, Rule]) -> Rule:
    if isinstance(rule, Rule):
        return rule
    for candidate in Rule:
        if candidate.value.lower() == str(rule).lower().replace("-", "").replace("_", ""):
            return candidate
    raise ParseError(f"unknown quadrature rule {rule!r}")


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Nodes and positive weights on ``[a, b]``; the weights are the measure."""

    points: np.ndarray
    weights: np.ndarray
    rule: Rule
    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise InvalidInterval(self.a, self.b)
        points = np.array(self.points, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if points.ndim != 1 or points.shape != weights.shape:
            raise DimensionMismatch("QuadratureGrid", points.shape, weights.shape)
        if len(points) < 2:
            raise GridTooSmall(len(points), 2)
        if np.any(np.diff(points) <= 0):
            raise ParseError("grid points must be strictly increasing")
        if not np.all(weights > 0) or not np.all(np.isfinite(weights)):
            raise ParseError("grid weights must be finite and positive")
        rule = _rule(self.rule)
        if points[0] < self.a or points[-1] > self.b:
            raise ParseError(f"grid points leave [{self.a}, {self.b}]")
        length = self.b - self.a
        if rule is not Rule.TABULATED and abs(weights.sum() - length) > WEIGHT_SUM_TOL * length:
            raise ParseError(
                f"{rule.value} weights sum to {weights.sum()!r}, not b - a = {length!r}"
            )
        points.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "rule", rule)
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))

    @property
    def n(self) -> int:
        return len(self.points)

    def same_as(self, other: "QuadratureGrid") -> bool:
        """Same nodes and weights, whatever rule produced them."""
        return np.array_equal(self.points, other.points) and np.array_equal(
            self.weights, other.weights
        )

    def space(self) -> SpaceSpec:
        return SpaceSpec(self.n, NormTag.WL2, tuple(self.weights))

    def integrate(self, f) -> float:
        return float(self.weights @ np.asarray(f, dtype=float))

    def to_dict(self) -> dict:
        return {"rule": self.rule.value, "n": self.n, "a": self.a, "b": self.b}


def make_grid(
    n: int, a: float = 0.0, b: float = 1.0, rule: Union[str, Rule] = Rule.GAUSS_LEGENDRE
) -> QuadratureGrid:
    """Trapezoid (uniform, halved end weights) or Gauss-Legendre nodes on ``[a, b]``.

    :param int n:
        Number of nodes, at least 2.
    :param float a:
        Left end of the interval.
    :param float b:
        Right end, strictly greater than ``a``.
    :param rule:
        ``Trapezoid`` or ``GaussLegendre``.
    :rtype: QuadratureGrid
    """
    if not a < b:
        raise InvalidInterval(a, b)
    if n < 2:
        raise GridTooSmall(n, 2)
    rule = _rule(rule)
    if rule is Rule.TRAPEZOID:
        points = np.linspace(a, b, n)
        weights = np.full(n, (b - a) / (n - 1))
        weights[[0, -1]] /= 2
    elif rule is Rule.GAUSS_LEGENDRE:
        nodes, w = np.polynomial.legendre.leggauss(n)
        half = (b - a) / 2
        points = half * nodes + (a + b) / 2
        weights = half * w
    else:
        raise ParseError("tabulated grids come from files, use tabulated_grid()")
    return QuadratureGrid(points, weights, rule, a, b)


def tabulated_grid(
    points: Sequence[float],
    weights: Sequence[float],
    a: Optional[float] = None,
    b: Optional[float] = None,
) -> QuadratureGrid:
    """A grid read from a table; the interval defaults to the node hull."""
    points = np.asarray(points, dtype=float)
    a = float(points[0]) if a is None else a
    b = float(points[-1]) if b is None else b
    return QuadratureGrid(points, weights, Rule.TABULATED, a, b)


@dataclass(frozen=True, eq=False)
class Kernel:
    """``values[i, j] = k(x_i, y_j)`` on ``grid_x x grid_y``."""

    grid_x: QuadratureGrid
    grid_y: QuadratureGrid
    values: np.ndarray
    name: str = "table"

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        expected = (self.grid_x.n, self.grid_y.n)
        if values.shape != expected:
            raise DimensionMismatch("Kernel", expected, values.shape)
        bad = np.argwhere(~np.isfinite(values))
        if len(bad):
            raise NonFiniteKernelValue(tuple(int(i) for i in bad[0]))
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __repr__(self):
        return f"<Kernel {self.name} {self.grid_x.n}x{self.grid_y.n}>"

    def apply(self, f) -> np.ndarray:
        """``(Tf)(y_j)`` for ``f`` sampled on ``grid_x``."""
        f = self.grid_x.space().check(f, "Kernel.apply")
        return self.values.T @ (self.grid_x.weights * f)

    def apply_adjoint(self, g) -> np.ndarray:
        """``(T*g)(x_i) = sum_j w'_j k(x_i, y_j) g(y_j)``."""
        g = self.grid_y.space().check(g, "Kernel.apply_adjoint")
        return self.values @ (self.grid_y.weights * g)

    def form(self, f, g) -> float:
        g = self.grid_y.space().check(g, "Kernel.form")
        return float(self.grid_y.weights @ (self.apply(f) * g))

    def operator_matrix(self) -> np.ndarray:
        """``D_w'^(1/2) values^T D_w^(1/2)``, the operator in orthonormal coordinates."""
        root_x = np.sqrt(self.grid_x.weights)
        root_y = np.sqrt(self.grid_y.weights)
        return root_y[:, None] * self.values.T * root_x[None, :]

    def bilinear_form(self) -> BilinearForm:
        """The form on (weighted-L2, weighted-L2); its norm is :func:`operator_norm`."""
        wx, wy = self.grid_x.weights, self.grid_y.weights
        return BilinearForm(
            wx[:, None] * self.values * wy[None, :], self.grid_x.space(), self.grid_y.space()
        )


def _first_non_finite(values: np.ndarray, row_offset: int):
    bad = np.argwhere(~np.isfinite(values))
    if len(bad):
        i, j = bad[0]
        raise NonFiniteKernelValue((int(i) + row_offset, int(j)))


def discretize(
    k: Union[Callable, np.ndarray, Sequence[Sequence[float]]],
    gx: QuadratureGrid,
    gy: QuadratureGrid,
    threads: int = 1,
    name: Optional[str] = None,
) -> Kernel:
    """Sample ``k`` on ``gx x gy``.

    ``k`` is either a table of values or a broadcasting callable
    ``k(x[:, None], y[None, :])``; callables are assembled in row blocks.
    """
    if not callable(k):
        return Kernel(gx, gy, np.asarray(k, dtype=float), name or "table")

    def assemble(span):
        lo, hi = span
        rows = np.asarray(k(gx.points[lo:hi, None], gy.points[None, :]), dtype=float)
        rows = np.broadcast_to(rows, (hi - lo, gy.n))
        _first_non_finite(rows, lo)
        return rows

    values = np.vstack(parallel_map(assemble, blocks(gx.n, ROW_BLOCK), threads))
    logger.debug("discretized %s on %dx%d nodes", name or "kernel", gx.n, gy.n)
    return Kernel(gx, gy, values, name or getattr(k, "__name__", "kernel"))


def inv1p(x, y):
    return 1.0 / (1.0 + np.abs(x - y))


def green_function(x, y):
    """Green's function of ``-u'' = f`` on ``[0, 1]`` with ``u(0) = u(1) = 0``."""
    return np.minimum(x, y) * (1.0 - np.maximum(x, y))


def gauss(sigma: float = 1.0) -> Callable:
    if not sigma > 0:
        raise ParseError(f"gauss width must be positive, got {sigma!r}")

    def kernel(x, y):
        return np.exp(-(((x - y) / sigma) ** 2))

    kernel.__name__ = f"gauss({sigma:g})"
    return kernel


def const(x, y):
    return np.ones(np.broadcast(x, y).shape)


BUILTIN_KERNELS: Dict[str, Callable[..., Callable]] = {
    "inv1p": lambda: inv1p,
    "green1d": lambda: green_function,
    "gauss": gauss,
    "const": lambda: const,
}

_NAME_PATTERN = r"^\s*([a-z0-9_]+)\s*(?:\(\s*([^()]*?)\s*\))?\s*$"


def builtin_kernel(spec: str) -> Tuple[str, Callable]:
    """Resolve ``name`` or ``name(arg)``, e.g. ``gauss(0.5)``."""
    try:
        name = regex_search(_NAME_PATTERN, spec, group=1)
        arg = regex_search(_NAME_PATTERN, spec, group=2)
    except ParseError:
        raise UnknownKernel(spec)
    if name not in BUILTIN_KERNELS:
        raise UnknownKernel(name)
    factory = BUILTIN_KERNELS[name]
    if not arg:
        return name, factory()
    try:
        return f"{name}({arg})", factory(float(arg))
    except (TypeError, ValueError):
        raise ParseError(f"bad kernel parameter in {spec!r}")


def operator_norm(k: Kernel) -> float:
    """L2 -> L2 norm of the Nystrom operator."""
    if not k.values.any():
        return 0.0
    return float(scipy.linalg.svdvals(k.operator_matrix())[0])


def hs_norm(k: Kernel) -> float:
    """``(sum_ij w_i w'_j k(x_i, y_j)^2)^(1/2)``."""
    return float(np.sqrt(k.grid_x.weights @ (k.values ** 2) @ k.grid_y.weights))


@dataclass(frozen=True)
class KernelFubini:
    order_xy: float
    order_yx: float
    spread: float

    def to_dict(self) -> dict:
        return {"order_xy": self.order_xy, "order_yx": self.order_yx, "spread": self.spread}


def fubini_kernel_check(k: Kernel, f, g) -> KernelFubini:
    """The double sum of ``k f g`` taken x-first and y-first."""
    f = k.grid_x.space().check(f, "fubini_kernel_check")
    g = k.grid_y.space().check(g, "fubini_kernel_check")
    wx, wy = k.grid_x.weights, k.grid_y.weights
    order_xy = float(wy @ (k.apply(f) * g))
    order_yx = float(wx @ (f * k.apply_adjoint(g)))
    scale = float((wx * np.abs(f)) @ np.abs(k.values) @ (wy * np.abs(g)))
    return KernelFubini(order_xy, order_yx, relative_spread((order_xy, order_yx), scale))


@dataclass(frozen=True, eq=False)
class SpectralReport:
    eigenvalues: np.ndarray
    hs_norm: float
    op_norm: float
    symmetric: bool
    psd: bool
    bound_applicable: bool
    contained: Optional[bool]
    eigenvectors: Optional[np.ndarray] = None

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "hs_norm": self.hs_norm,
            "op_norm": self.op_norm,
            "symmetric": self.symmetric,
            "psd": self.psd,
            "bound": "checked" if self.bound_applicable else "not applicable",
            "contained": self.contained,
        }


def spectral_check(
    k: Kernel,
    constants: Constants = Constants(),
    tol: float = 1e-9,
    keep_vectors: bool = False,
) -> SpectralReport:
    """Eigenvalues of the operator and their containment in ``[-K_G, K_G]``.

    The containment is only asserted when the form norm is at most
    ``kg_effective``; PSD kernels must then also have no eigenvalue below
    ``-tol``. A failed containment raises :class:`BoundViolation`.
    """
    if not k.grid_x.same_as(k.grid_y):
        raise AsymmetricGrids("spectral_check needs grid_x identical to grid_y")
    matrix = k.operator_matrix()
    symmetric = bool(np.max(np.abs(k.values - k.values.T)) <= SYMMETRY_TOL)
    vectors = None
    if symmetric:
        eigenvalues, vectors = scipy.linalg.eigh((matrix + matrix.T) / 2)
        order = np.argsort(eigenvalues)[::-1]
        eigenvalues, vectors = eigenvalues[order], vectors[:, order]
    else:
        eigenvalues = np.sort(np.real(scipy.linalg.eigvals(matrix)))[::-1]
    op_norm = operator_norm(k)
    top = float(np.max(eigenvalues))
    psd = symmetric and float(np.min(eigenvalues)) >= -SYMMETRY_TOL * max(top, 0.0)

    kg = constants.kg_effective
    applicable = op_norm <= kg
    contained = None
    if applicable:
        low = -tol if psd else -kg - tol
        contained = bool(np.all(eigenvalues >= low) and np.all(eigenvalues <= kg + tol))
        if not contained:
            raise BoundViolation(
                "spectral containment", float(np.max(np.abs(eigenvalues))), kg
            )
    return SpectralReport(
        eigenvalues=eigenvalues,
        hs_norm=hs_norm(k),
        op_norm=op_norm,
        symmetric=symmetric,
        psd=psd,
        bound_applicable=applicable,
        contained=contained,
        eigenvectors=vectors if keep_vectors else None,
    )


def green_1d(
    n: int, rule: Union[str, Rule] = Rule.TRAPEZOID, threads: int = 1
) -> Kernel:
    """Green's operator of the 1-D Dirichlet Laplacian on an ``n``-node grid.

    On a trapezoid grid the Nystrom matrix is exactly the inverse of the
    interior second-difference operator.
    """
    if n < GREEN_MIN_NODES:
        raise GridTooSmall(n, GREEN_MIN_NODES)
    grid = make_grid(n, 0.0, 1.0, rule)
    return discretize(green_function, grid, grid, threads, name="green1d")


def green_residual(n: int, f: Optional[Callable] = None, stride: int = 1) -> float:
    """Max interior error of ``-D2 (T_G f) - f`` with a ``stride``-wide stencil.

    Stride 1 is exact up to rounding; wider stencils carry an ``O(h^2)``
    truncation error.
    """
    f = f or (lambda x: np.sin(np.pi * x))
    kernel = green_1d(n, Rule.TRAPEZOID)
    x = kernel.grid_x.points
    fx = np.asarray(f(x), dtype=float) * np.ones(n)
    u = kernel.apply(fx)
    step = stride * (x[1] - x[0])
    i = np.arange(stride, n - stride)
    second = (u[i - stride] - 2 * u[i] + u[i + stride]) / step ** 2
    return float(np.max(np.abs(-second - fx[i])))


def observed_order(coarse_error: float, fine_error: float, ratio: float = 2.0) -> float:
    """Convergence order from errors at step ``h`` and ``h / ratio``."""
    return math.log(coarse_error / fine_error) / math.log(ratio)


def weyl_slope(eigenvalues: Sequence[float], j_min: int = 2, j_max: int = 20) -> float:
    """Least-squares slope of ``log lambda_j`` against ``log j``."""
    j = np.arange(j_min, j_max + 1)
    lam = np.asarray(eigenvalues, dtype=float)[j - 1]
    if np.any(lam <= 0):
        raise ParseError("weyl fit needs positive eigenvalues")
    slope, _ = np.polyfit(np.log(j), np.log(lam), 1)
    return float(slope)


@dataclass(frozen=True, eq=False)
class Composition:
    kernel: Kernel
    grouping_x_first: float
    grouping_z_first: float
    direct: float
    discrepancy: float
    ledger_bound: Optional[float]

    def to_dict(self) -> dict:
        return {
            "grouping_x_first": self.grouping_x_first,
            "grouping_z_first": self.grouping_z_first,
            "direct": self.direct,
            "discrepancy": self.discrepancy,
            "ledger_bound": self.ledger_bound,
            "op_norm": operator_norm(self.kernel),
        }


def compose(
    k1: Kernel,
    k2: Kernel,
    f=None,
    h=None,
    constants: Constants = Constants(),
    tol: float = 1e-12,
    check: bool = True,
) -> Composition:
    """``k(x, z) = sum_j w_j k1(x, y_j) k2(y_j, z)`` over the shared grid.

    Also integrates ``f (x) h`` against the composite in both groupings of
    the triple iterated sum (``f`` and ``h`` default to ones) and, when
    ``check`` is set, raises :class:`IdentityViolation` if they disagree by
    more than ``tol`` relative. The ledger bound is ``K_G**2`` when both
    factors have norm at most ``K_G``.
    """
    if not k1.grid_y.same_as(k2.grid_x):
        raise GridMismatch("compose needs k1.grid_y identical to k2.grid_x")
    wy = k1.grid_y.weights
    values = k1.values @ (wy[:, None] * k2.values)
    kernel = Kernel(k1.grid_x, k2.grid_y, values, f"{k1.name}*{k2.name}")

    f = np.ones(k1.grid_x.n) if f is None else k1.grid_x.space().check(f, "compose")
    h = np.ones(k2.grid_y.n) if h is None else k2.grid_y.space().check(h, "compose")
    wx, wz = k1.grid_x.weights, k2.grid_y.weights
    x_first = float(wz @ (k2.apply(k1.apply(f)) * h))
    z_first = float(wx @ (f * k1.apply_adjoint(k2.apply_adjoint(h))))
    direct = float(wz @ (kernel.apply(f) * h))
    scale = float(
        (wx * np.abs(f)) @ np.abs(k1.values) @ (wy[:, None] * np.abs(k2.values)) @ (wz * np.abs(h))
    )
    discrepancy = relative_spread((x_first, z_first, direct), scale)
    if check and discrepancy > tol:
        raise IdentityViolation("iterated integral grouping", discrepancy, tol)

    kg = constants.kg_effective
    bounded = operator_norm(k1) <= kg and operator_norm(k2) <= kg
    return Composition(
        kernel, x_first, z_first, direct, discrepancy, kg ** 2 if bounded else None
    )


@dataclass(frozen=True)
class Refinement:
    ns: Tuple[int, ...]
    norms: Tuple[float, ...]

    @property
    def gaps(self) -> Tuple[float, ...]:
        return tuple(abs(b - a) for a, b in zip(self.norms, self.norms[1:]))

    @property
    def direction(self) -> str:
        """``increasing``, ``decreasing``, ``constant`` or ``mixed``."""
        steps = np.diff(self.norms)
        if not steps.any():
            return "constant"
        if np.all(steps > 0):
            return "increasing"
        if np.all(steps < 0):
            return "decreasing"
        return "mixed"

    def to_dict(self) -> dict:
        return {
            "n": list(self.ns),
            "op_norm": list(self.norms),
            "gaps": list(self.gaps),
            "direction": self.direction,
        }


def refinement(
    kernel: Union[str, Callable],
    ns: Sequence[int] = (64, 128, 256, 512),
    rule: Union[str, Rule] = Rule.GAUSS_LEGENDRE,
    a: float = 0.0,
    b: float = 1.0,
    threads: int = 1,
) -> Refinement:
    """Operator norms of one kernel over a sequence of grid sizes."""
    if isinstance(kernel, str):
        name, kernel = builtin_kernel(kernel)
    else:
        name = getattr(kernel, "__name__", "kernel")
    norms = []
    for n in ns:
        grid = make_grid(n, a, b, rule)
        norms.append(operator_norm(discretize(kernel, grid, grid, threads, name)))
        logger.debug("%s at n=%d: op_norm=%r", name, n, norms[-1])
    return Refinement(tuple(ns), tuple(norms))
