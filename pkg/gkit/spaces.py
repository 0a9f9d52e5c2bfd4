"""
Finite-dimensional normed spaces, bilinear forms and tensor elements.

A :class:`BilinearForm` on ``E x F`` is the same object as the functional
``mu`` it induces on ``E (x)_pi F`` through ``phi(e, f) = mu(e (x) f)``; the
norms of the two coincide. This module computes that norm
(:func:`bilinear_norm`), the projective norm of tensor elements
(:func:`projective_norm`) and the membership test against K_G
(:func:`is_grothendieck`). Norms without a finite algorithm come back as
certified intervals.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from gkit.constants import Constants
from gkit.exceptions import (
    DimensionMismatch,
    EnumLimitExceeded,
    InexactNorm,
    NonFiniteEntries,
    NotInfInfDomains,
    ParseError,
)
from gkit.helpers import sign_enumerate, substream

logger = logging.getLogger(__name__)

DEFAULT_ENUM_LIMIT = 22
DEFAULT_SAMPLES = 64

# Sign enumeration budget for normalizing dual candidates in projective_norm.
_CANDIDATE_ENUM_LIMIT = 12
_ASCENT_STEPS = 100


class NormTag(Enum):
    L1 = "l1"
    L2 = "l2"
    LINF = "linf"
    WL2 = "wl2"


@dataclass(frozen=True)
class SpaceSpec:
    """A finite-dimensional normed space ``(R^dim, ||.||)``.

    Duals are spaces too: L1 and LInf swap, L2 is self-dual, and
    weighted-L2 is dual to weighted-L2 with inverse weights.
    """

    dim: int
    norm: NormTag = NormTag.L2
    weights: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise DimensionMismatch("SpaceSpec", "dim >= 1", self.dim)
        if self.norm is NormTag.WL2:
            if self.weights is None:
                raise ParseError("weighted-l2 space needs weights")
            weights = tuple(float(w) for w in self.weights)
            if len(weights) != self.dim:
                raise DimensionMismatch("SpaceSpec.weights", self.dim, len(weights))
            if not all(np.isfinite(w) and w > 0 for w in weights):
                raise ParseError("weights must be finite and strictly positive")
            object.__setattr__(self, "weights", weights)
        elif self.weights is not None:
            raise ParseError(f"{self.norm.value} space takes no weights")

    @classmethod
    def from_tag(cls, tag: str, dim: int, weights: Optional[Sequence[float]] = None):
        try:
            norm = NormTag(tag.lower())
        except ValueError:
            raise ParseError(f"unknown norm tag {tag!r}")
        return cls(dim, norm, tuple(weights) if weights is not None else None)

    @property
    def tag(self) -> str:
        return self.norm.value

    @property
    def hilbertian(self) -> bool:
        return self.norm in (NormTag.L2, NormTag.WL2)

    @property
    def w(self) -> np.ndarray:
        """Weights as an array (ones for unweighted tags)."""
        if self.weights is None:
            return np.ones(self.dim)
        return np.asarray(self.weights)

    def dual(self) -> "SpaceSpec":
        if self.norm is NormTag.L1:
            return SpaceSpec(self.dim, NormTag.LINF)
        if self.norm is NormTag.LINF:
            return SpaceSpec(self.dim, NormTag.L1)
        if self.norm is NormTag.WL2:
            return SpaceSpec(self.dim, NormTag.WL2, tuple(1.0 / self.w))
        return self

    def check(self, v, caller: str) -> np.ndarray:
        """Coerce ``v`` to a finite vector of this space."""
        arr = np.asarray(v, dtype=float)
        if arr.shape != (self.dim,):
            raise DimensionMismatch(caller, (self.dim,), arr.shape)
        if not np.all(np.isfinite(arr)):
            raise NonFiniteEntries(f"{caller}: vector has non-finite entries")
        return arr

    def norm_of(self, v: np.ndarray) -> np.ndarray:
        """Norm along the last axis."""
        v = np.asarray(v, dtype=float)
        if self.norm is NormTag.L1:
            return np.abs(v).sum(axis=-1)
        if self.norm is NormTag.LINF:
            return np.abs(v).max(axis=-1)
        return np.sqrt((self.w * v * v).sum(axis=-1))

    def dual_norm(self, a: np.ndarray) -> np.ndarray:
        """Norm in the dual space along the last axis."""
        return self.dual().norm_of(a)

    def norming_vector(self, a: np.ndarray) -> np.ndarray:
        """A unit-ball vector ``v`` with ``a . v == dual_norm(a)``."""
        a = np.asarray(a, dtype=float)
        if self.norm is NormTag.LINF:
            return np.where(a >= 0, 1.0, -1.0)
        if self.norm is NormTag.L1:
            v = np.zeros(self.dim)
            i = int(np.argmax(np.abs(a)))
            v[i] = 1.0 if a[i] >= 0 else -1.0
            return v
        scale = float(self.dual_norm(a))
        if scale == 0.0:
            return np.zeros(self.dim)
        return a / self.w / scale

    def norming_functional(self, v: np.ndarray) -> np.ndarray:
        """A dual unit-ball functional ``a`` with ``a . v == norm_of(v)``."""
        return self.dual().norming_vector(v)

    def basis_norms(self) -> np.ndarray:
        """Norms of the standard basis vectors."""
        if self.norm is NormTag.WL2:
            return np.sqrt(self.w)
        return np.ones(self.dim)

    def to_dict(self) -> dict:
        out = {"norm": self.tag, "dim": self.dim}
        if self.weights is not None:
            out["weights"] = list(self.weights)
        return out


def space(tag: str, dim: int, weights: Optional[Sequence[float]] = None) -> SpaceSpec:
    """Shorthand for :meth:`SpaceSpec.from_tag`."""
    return SpaceSpec.from_tag(tag, dim, weights)


class CertMethod(Enum):
    EXACT_SVD = "ExactSVD"
    EXACT_SIGN_ENUM = "ExactSignEnum"
    NUCLEAR_SVD = "NuclearSVD"
    SAMPLED_DUAL = "SampledDual"
    REPRESENTATION_SEARCH = "RepresentationSearch"


EXACT_METHODS = frozenset(
    {CertMethod.EXACT_SVD, CertMethod.EXACT_SIGN_ENUM, CertMethod.NUCLEAR_SVD}
)


@dataclass(frozen=True)
class NormCertificate:
    """Interval ``[lower, upper]`` known to contain a norm.

    ``witness`` attains ``lower``: a vector pair ``(e, f)`` for form norms,
    or a dual coefficient matrix for projective norms.
    """

    lower: float
    upper: float
    method: CertMethod
    witness: Any = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        lower, upper = float(self.lower), float(self.upper)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if lower < 0 or upper < 0:
            raise ValueError(f"negative norm bound in [{lower}, {upper}]")
        if lower > upper + 1e-12 * max(1.0, upper):
            raise ValueError(f"lower {lower!r} exceeds upper {upper!r}")
        if self.exact and upper - lower > 1e-10 * max(1.0, upper):
            raise ValueError(f"{self.method.value} certificate is not tight")

    @property
    def exact(self) -> bool:
        return self.method in EXACT_METHODS

    @property
    def value(self) -> float:
        """The norm itself for exact certificates, else the upper bound."""
        return self.upper

    def scaled(self, c: float) -> "NormCertificate":
        c = abs(float(c))
        return NormCertificate(self.lower * c, self.upper * c, self.method)

    def to_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "method": self.method.value}


@dataclass(frozen=True, eq=False)
class BilinearForm:
    """Bilinear form ``phi(e, f) = e^T coeffs f`` on ``domain_e x domain_f``."""

    coeffs: np.ndarray
    domain_e: SpaceSpec
    domain_f: SpaceSpec

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=float)
        expected = (self.domain_e.dim, self.domain_f.dim)
        if arr.shape != expected:
            raise DimensionMismatch("BilinearForm", expected, arr.shape)
        if not np.all(np.isfinite(arr)):
            raise NonFiniteEntries("BilinearForm: coefficients must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "coeffs", arr)

    @classmethod
    def from_matrix(
        cls,
        coeffs,
        domain_e: str = "linf",
        domain_f: str = "linf",
        weights_e: Optional[Sequence[float]] = None,
        weights_f: Optional[Sequence[float]] = None,
    ) -> "BilinearForm":
        arr = np.atleast_2d(np.asarray(coeffs, dtype=float))
        return cls(
            arr,
            space(domain_e, arr.shape[0], weights_e),
            space(domain_f, arr.shape[1], weights_f),
        )

    @property
    def shape(self) -> Tuple[int, int]:
        return self.coeffs.shape

    @property
    def spaces(self) -> Tuple[SpaceSpec, SpaceSpec]:
        return self.domain_e, self.domain_f

    def __call__(self, e, f) -> float:
        e = self.domain_e.check(e, "BilinearForm")
        f = self.domain_f.check(f, "BilinearForm")
        return float(e @ self.coeffs @ f)

    def __repr__(self):
        return (
            f"<BilinearForm {self.shape[0]}x{self.shape[1]} "
            f"on ({self.domain_e.tag}, {self.domain_f.tag})>"
        )

    def scaled(self, c: float) -> "BilinearForm":
        return BilinearForm(c * self.coeffs, self.domain_e, self.domain_f)


def _as_term(e, f, spaces: Tuple[SpaceSpec, SpaceSpec]):
    e = spaces[0].check(e, "TensorElement")
    f = spaces[1].check(f, "TensorElement")
    e.flags.writeable = False
    f.flags.writeable = False
    return e, f


@dataclass(frozen=True, eq=False)
class TensorElement:
    """A finite representation ``sum_i e_i (x) f_i``.

    Representations are not unique; two elements with the same
    :meth:`matrix` are the same tensor.
    """

    terms: Tuple[Tuple[np.ndarray, np.ndarray], ...]
    spaces: Tuple[SpaceSpec, SpaceSpec]

    def __post_init__(self):
        spaces = tuple(self.spaces)
        if len(spaces) != 2:
            raise DimensionMismatch("TensorElement.spaces", 2, len(spaces))
        object.__setattr__(self, "spaces", spaces)
        object.__setattr__(
            self, "terms", tuple(_as_term(e, f, spaces) for e, f in self.terms)
        )

    @classmethod
    def zero(cls, spaces: Tuple[SpaceSpec, SpaceSpec]) -> "TensorElement":
        return cls((), spaces)

    @classmethod
    def from_matrix(cls, matrix, spaces: Tuple[SpaceSpec, SpaceSpec]) -> "TensorElement":
        """SVD representation ``sum_k s_k p_k (x) q_k`` of a coefficient matrix."""
        matrix = np.asarray(matrix, dtype=float)
        p, s, qt = scipy.linalg.svd(matrix, full_matrices=False)
        return cls(
            tuple((s[k] * p[:, k], qt[k]) for k in range(len(s)) if s[k] > 0),
            spaces,
        )

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def left(self) -> np.ndarray:
        if not self.terms:
            return np.zeros((0, self.spaces[0].dim))
        return np.stack([e for e, _ in self.terms])

    @property
    def right(self) -> np.ndarray:
        if not self.terms:
            return np.zeros((0, self.spaces[1].dim))
        return np.stack([f for _, f in self.terms])

    def matrix(self) -> np.ndarray:
        """Coefficient matrix ``sum_i e_i f_i^T``."""
        return self.left.T @ self.right

    def representation_cost(self) -> float:
        """``sum_i ||e_i|| ||f_i||`` for this particular representation."""
        if not self.terms:
            return 0.0
        de, df = self.spaces
        return float(np.sum(de.norm_of(self.left) * df.norm_of(self.right)))

    def equivalent(self, other: "TensorElement", tol: float = 1e-12) -> bool:
        return np.allclose(self.matrix(), other.matrix(), rtol=0, atol=tol)

    def _check_compatible(self, other: "TensorElement"):
        dims = tuple(s.dim for s in self.spaces)
        other_dims = tuple(s.dim for s in other.spaces)
        if dims != other_dims:
            raise DimensionMismatch("TensorElement", dims, other_dims)

    def __add__(self, other: "TensorElement") -> "TensorElement":
        self._check_compatible(other)
        return TensorElement(self.terms + other.terms, self.spaces)

    def __mul__(self, c: float) -> "TensorElement":
        return TensorElement(tuple((c * e, f) for e, f in self.terms), self.spaces)

    __rmul__ = __mul__

    def __neg__(self) -> "TensorElement":
        return self * -1.0

    def __sub__(self, other: "TensorElement") -> "TensorElement":
        return self + (-other)


def check_pairing(phi: BilinearForm, x: TensorElement, caller: str) -> None:
    expected = (phi.domain_e.dim, phi.domain_f.dim)
    actual = (x.spaces[0].dim, x.spaces[1].dim)
    if expected != actual:
        raise DimensionMismatch(caller, expected, actual)


def evaluate(phi: BilinearForm, x: TensorElement) -> float:
    """The functional integral ``mu(x) = sum_i phi(e_i, f_i)``."""
    check_pairing(phi, x, "evaluate")
    if not x.terms:
        return 0.0
    return float(np.einsum("ti,ij,tj->", x.left, phi.coeffs, x.right))


def magnitude(phi: BilinearForm, x: TensorElement) -> float:
    """``sum_i |e_i|^T |coeffs| |f_i|``, the condition scale of :func:`evaluate`."""
    if not x.terms:
        return 0.0
    return float(
        np.einsum("ti,ij,tj->", np.abs(x.left), np.abs(phi.coeffs), np.abs(x.right))
    )


def _conjugated(coeffs: np.ndarray, de: SpaceSpec, df: SpaceSpec) -> np.ndarray:
    """Coefficients after the isometries weighted-L2 -> L2 on both sides."""
    return coeffs / np.sqrt(de.w)[:, None] / np.sqrt(df.w)[None, :]


def zero_method(*spaces: SpaceSpec) -> CertMethod:
    """Method tag for the zero form: SVD when every factor is Hilbertian."""
    if all(s.hilbertian for s in spaces):
        return CertMethod.EXACT_SVD
    return CertMethod.EXACT_SIGN_ENUM


def _svd_norm(phi: BilinearForm) -> NormCertificate:
    de, df = phi.spaces
    p, s, qt = scipy.linalg.svd(_conjugated(phi.coeffs, de, df))
    e = p[:, 0] / np.sqrt(de.w)
    f = qt[0] / np.sqrt(df.w)
    return NormCertificate(s[0], s[0], CertMethod.EXACT_SVD, witness=(e, f))


def _extreme_point_norm(phi: BilinearForm) -> NormCertificate:
    # the L1 ball is the hull of the signed basis vectors
    a = phi.coeffs
    de, df = phi.spaces
    if de.norm is NormTag.L1:
        values = df.dual_norm(a)
        i = int(np.argmax(values))
        e = np.zeros(de.dim)
        e[i] = 1.0
        f = df.norming_vector(a[i])
    else:
        values = de.dual_norm(a.T)
        j = int(np.argmax(values))
        f = np.zeros(df.dim)
        f[j] = 1.0
        e = de.norming_vector(a[:, j])
    top = float(values.max())
    return NormCertificate(top, top, CertMethod.EXACT_SIGN_ENUM, witness=(e, f))


def _sign_side(phi: BilinearForm) -> str:
    de, df = phi.spaces
    if de.norm is NormTag.LINF and df.norm is NormTag.LINF:
        return "e" if de.dim <= df.dim else "f"
    return "e" if de.norm is NormTag.LINF else "f"


def _sign_enum_norm(phi: BilinearForm, side: str, threads: int) -> NormCertificate:
    a = phi.coeffs
    de, df = phi.spaces
    if side == "e":
        top, e = sign_enumerate(lambda s: df.dual_norm(s @ a), de.dim, threads)
        f = df.norming_vector(a.T @ e)
    else:
        top, f = sign_enumerate(lambda s: de.dual_norm(s @ a.T), df.dim, threads)
        e = de.norming_vector(a @ f)
    return NormCertificate(top, top, CertMethod.EXACT_SIGN_ENUM, witness=(e, f))


def _hilbert_proxy(space_: SpaceSpec) -> Tuple[SpaceSpec, float]:
    # unit ball of LInf^n sits inside sqrt(n) times the L2 unit ball
    if space_.norm is NormTag.LINF:
        return SpaceSpec(space_.dim), float(np.sqrt(space_.dim))
    if space_.norm is NormTag.L1:
        return SpaceSpec(space_.dim), 1.0
    return space_, 1.0


def equivalence_bound(phi: BilinearForm) -> float:
    """Cheap upper bound on ``||phi||`` through Hilbertian proxy norms."""
    pe, ce = _hilbert_proxy(phi.domain_e)
    pf, cf = _hilbert_proxy(phi.domain_f)
    if not phi.coeffs.any():
        return 0.0
    top = scipy.linalg.svdvals(_conjugated(phi.coeffs, pe, pf))[0]
    return float(ce * cf * top)


def alternating_ascent(
    phi: BilinearForm, rng: np.random.Generator, starts: int
) -> Tuple[float, Tuple[np.ndarray, np.ndarray]]:
    """Best ``phi(e, f)`` over unit-ball pairs found by alternating norming steps."""
    a = phi.coeffs
    de, df = phi.spaces
    best = (0.0, (np.zeros(de.dim), np.zeros(df.dim)))
    for _ in range(starts):
        e = de.norming_vector(rng.standard_normal(de.dim))
        value = -np.inf
        for _ in range(_ASCENT_STEPS):
            f = df.norming_vector(a.T @ e)
            e = de.norming_vector(a @ f)
            current = float(e @ a @ f)
            if current <= value:
                break
            value = current
        if value > best[0]:
            best = (value, (e, f))
    return best


def _sampled_dual_norm(phi: BilinearForm, samples: int, seed: int) -> NormCertificate:
    rng = substream(seed, "bilinear_norm")
    lower, witness = alternating_ascent(phi, rng, samples)
    upper = equivalence_bound(phi)
    return NormCertificate(
        min(lower, upper), upper, CertMethod.SAMPLED_DUAL, witness=witness
    )


def bilinear_norm(
    phi: BilinearForm,
    enum_limit: int = DEFAULT_ENUM_LIMIT,
    exact: bool = True,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    threads: int = 1,
) -> NormCertificate:
    """Form norm ``sup{|phi(e, f)| : ||e|| <= 1, ||f|| <= 1}``.

    :param BilinearForm phi:
        The form.
    :param int enum_limit:
        Most sign variables the exact LInf path may enumerate.
    :param bool exact:
        Raise :class:`EnumLimitExceeded` beyond ``enum_limit`` (default)
        instead of returning a SampledDual interval.
    :param int samples:
        Random starts for the SampledDual lower bound.
    :param int seed:
        Seed of the sampling sub-stream.
    :param int threads:
        Workers for the sign enumeration.
    :rtype: NormCertificate
    """
    de, df = phi.spaces
    if not phi.coeffs.any():
        return NormCertificate(0.0, 0.0, zero_method(de, df), witness=(
            np.zeros(de.dim), np.zeros(df.dim)
        ))
    if de.hilbertian and df.hilbertian:
        return _svd_norm(phi)
    if NormTag.L1 in (de.norm, df.norm):
        return _extreme_point_norm(phi)

    side = _sign_side(phi)
    dim = de.dim if side == "e" else df.dim
    if dim > enum_limit:
        if exact:
            raise EnumLimitExceeded(dim, enum_limit)
        logger.debug("sign enumeration over %d > %d, sampling instead", dim, enum_limit)
        return _sampled_dual_norm(phi, samples, seed)
    return _sign_enum_norm(phi, side, threads)


def _rank_one_candidate(p: np.ndarray, q: np.ndarray, de: SpaceSpec, df: SpaceSpec):
    a = de.norming_functional(p)
    b = df.norming_functional(q)
    scale = float(de.dual_norm(a) * df.dual_norm(b))
    return np.outer(a, b), scale


def _representation_costs(x: TensorElement, matrix: np.ndarray) -> List[float]:
    de, df = x.spaces
    costs = []
    if x.terms:
        costs.append(x.representation_cost())
    p, s, qt = scipy.linalg.svd(matrix, full_matrices=False)
    costs.append(float(np.sum(s * de.norm_of(p.T) * df.norm_of(qt))))
    # row and column representations sum_i delta_i (x) M[i, :]
    costs.append(float(np.sum(de.basis_norms() * df.norm_of(matrix))))
    costs.append(float(np.sum(df.basis_norms() * de.norm_of(matrix.T))))
    return costs


def _dual_candidates(
    x: TensorElement, matrix: np.ndarray, samples: int, seed: int
) -> Iterable[Tuple[np.ndarray, Optional[float]]]:
    de, df = x.spaces
    p, s, qt = scipy.linalg.svd(matrix, full_matrices=False)
    for k in range(len(s)):
        if s[k] > 0:
            yield _rank_one_candidate(p[:, k], qt[k], de, df)
    for e, f in x.terms[:32]:
        yield _rank_one_candidate(e, f, de, df)
    rows = np.array([df.norming_functional(row) for row in matrix])
    cols = np.array([de.norming_functional(col) for col in matrix.T]).T
    for candidate in (matrix, np.sign(matrix), p @ qt, rows, cols):
        yield candidate, None
    rng = substream(seed, "projective_norm")
    for _ in range(samples):
        yield rng.standard_normal(matrix.shape), None


def projective_norm(
    x: TensorElement,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    threads: int = 1,
) -> NormCertificate:
    """Projective norm ``inf sum_i ||e_i|| ||f_i||`` over representations of ``x``.

    Exact (NuclearSVD) when both factors are Hilbertian. Otherwise the upper
    bound is the cheapest of the given, SVD, row and column representations
    and the lower bound is the best ``|<psi, x>| / ||psi||`` over a family of
    dual forms ``psi``; the best ``psi`` is returned as the witness.
    """
    de, df = x.spaces
    matrix = x.matrix()
    if not matrix.any():
        method = (
            CertMethod.NUCLEAR_SVD
            if de.hilbertian and df.hilbertian
            else CertMethod.REPRESENTATION_SEARCH
        )
        return NormCertificate(0.0, 0.0, method, witness=np.zeros(matrix.shape))

    if de.hilbertian and df.hilbertian:
        se, sf = np.sqrt(de.w), np.sqrt(df.w)
        p, s, qt = scipy.linalg.svd(
            se[:, None] * matrix * sf[None, :], full_matrices=False
        )
        nuclear = float(s.sum())
        dual = se[:, None] * (p @ qt) * sf[None, :]
        return NormCertificate(nuclear, nuclear, CertMethod.NUCLEAR_SVD, witness=dual)

    upper = min(_representation_costs(x, matrix))
    lower, witness = 0.0, None
    for coeffs, scale in _dual_candidates(x, matrix, samples, seed):
        if scale is None:
            psi = BilinearForm(coeffs, de, df)
            scale = bilinear_norm(
                psi,
                enum_limit=_CANDIDATE_ENUM_LIMIT,
                exact=False,
                samples=8,
                seed=seed,
                threads=threads,
            ).upper
        if scale <= 0:
            continue
        value = abs(float(np.sum(coeffs * matrix))) / scale
        if value > lower:
            lower, witness = value, coeffs / scale
    logger.debug("projective norm interval [%r, %r]", lower, upper)
    return NormCertificate(
        min(lower, upper), upper, CertMethod.REPRESENTATION_SEARCH, witness=witness
    )


def is_grothendieck(
    phi: BilinearForm,
    constants: Constants = Constants(),
    **norm_kwargs,
) -> Tuple[bool, NormCertificate]:
    """Whether ``phi`` induces a Grothendieck functional integral.

    The returned certificate is also ``||mu||_G``. An interval that straddles
    ``kg_effective`` raises :class:`InexactNorm` rather than guessing.
    """
    cert = bilinear_norm(phi, **norm_kwargs)
    kg = constants.kg_effective
    if cert.upper <= kg:
        return True, cert
    if cert.lower > kg:
        return False, cert
    raise InexactNorm(cert.lower, cert.upper, kg)


@dataclass(frozen=True)
class VariationReport:
    tv: float
    norm: float
    ratio: float

    def to_dict(self) -> dict:
        return {"tv": self.tv, "norm": self.norm, "ratio": self.ratio}


def total_variation_vs_norm(
    rho: BilinearForm,
    enum_limit: int = DEFAULT_ENUM_LIMIT,
    threads: int = 1,
) -> VariationReport:
    """Total variation of a discrete bimeasure against its C(S) x C(T) form norm.

    The ratio ``tv / norm`` is at least one and is reported, not bounded.
    The zero measure reports ratio 1.
    """
    if rho.domain_e.norm is not NormTag.LINF or rho.domain_f.norm is not NormTag.LINF:
        raise NotInfInfDomains("total variation needs (linf, linf) domains")
    tv = float(np.abs(rho.coeffs).sum())
    norm = bilinear_norm(rho, enum_limit=enum_limit, threads=threads).value
    ratio = tv / norm if norm > 0 else 1.0
    return VariationReport(tv, norm, ratio)
