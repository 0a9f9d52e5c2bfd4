"""
Partial integration operators and the abstract Fubini theorem.

A form ``phi`` on ``E x F`` can be integrated one factor at a time:
``T(e) = phi(e, .)`` lands in ``F*`` and ``S(f) = phi(., f)`` lands in
``E*``; both orders give the same value on every tensor. The multilinear
part does the same for order-n forms, one mode at a time, in any order.
"""
import functools
import itertools
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from gkit.constants import Constants
from gkit.exceptions import (
    DimensionMismatch,
    EnumLimitExceeded,
    IndexOutOfRange,
    InexactNorm,
    InvalidPermutation,
    NonFiniteEntries,
    TensorTooLarge,
)
from gkit.helpers import parallel_map, relative_spread, sign, sign_enumerate, substream
from gkit.spaces import (
    DEFAULT_ENUM_LIMIT,
    DEFAULT_SAMPLES,
    BilinearForm,
    CertMethod,
    NormCertificate,
    NormTag,
    SpaceSpec,
    TensorElement,
    bilinear_norm,
    check_pairing,
    evaluate,
    magnitude,
    projective_norm,
    zero_method,
)

logger = logging.getLogger(__name__)

MAX_ORDER = 8
MAX_ENTRIES = 10 ** 7

# Floats per batch of partially contracted tensors in the sign sweep.
_SWEEP_BUDGET = 1 << 22
_ALS_STEPS = 200


class Side(Enum):
    LEFT_T = "LeftT"
    RIGHT_S = "RightS"


def _side(side: Union[str, Side]) -> Side:
    if isinstance(side, Side):
        return side
    return Side(side)


@dataclass(frozen=True, eq=False)
class PartialOperator:
    """``v -> matrix @ v``, a functional on ``target_dual_of`` for each source ``v``."""

    matrix: np.ndarray
    source: SpaceSpec
    target_dual_of: SpaceSpec
    side: Side

    @classmethod
    def of(cls, phi: BilinearForm, side: Union[str, Side]) -> "PartialOperator":
        side = _side(side)
        if side is Side.LEFT_T:
            return cls(phi.coeffs.T, phi.domain_e, phi.domain_f, side)
        return cls(phi.coeffs, phi.domain_f, phi.domain_e, side)

    def __call__(self, v) -> np.ndarray:
        return self.matrix @ self.source.check(v, f"PartialOperator[{self.side.value}]")

    def norm(self, enum_limit: int = DEFAULT_ENUM_LIMIT, threads: int = 1) -> float:
        """Operator norm from the source norm to the dual norm of the target.

        Computed from the operator's own side: extreme points of an L1
        source, signs of an LInf source, singular values between Hilbertian
        spaces, and signs of the target otherwise.
        """
        m = self.matrix
        src, tgt = self.source, self.target_dual_of
        if not m.any():
            return 0.0
        if src.norm is NormTag.L1:
            return float(tgt.dual_norm(m.T).max())
        if src.norm is NormTag.LINF:
            if src.dim > enum_limit:
                raise EnumLimitExceeded(src.dim, enum_limit)
            top, _ = sign_enumerate(lambda s: tgt.dual_norm(s @ m.T), src.dim, threads)
            return top
        if tgt.hilbertian:
            conj = m / np.sqrt(src.w)[None, :] / np.sqrt(tgt.w)[:, None]
            return float(scipy.linalg.svdvals(conj)[0])
        if tgt.norm is NormTag.L1:
            # dual of L1 is the max norm: the sup splits over rows
            return float(src.dual_norm(m).max())
        if tgt.dim > enum_limit:
            raise EnumLimitExceeded(tgt.dim, enum_limit)
        top, _ = sign_enumerate(lambda t: src.dual_norm(t @ m), tgt.dim, threads)
        return top


def partial_apply(phi: BilinearForm, side: Union[str, Side], v) -> np.ndarray:
    """Representing vector of ``phi(v, .)`` (LeftT) or ``phi(., v)`` (RightS)."""
    return PartialOperator.of(phi, side)(v)


@dataclass(frozen=True)
class FubiniReport:
    via_T: float
    via_S: float
    direct: float
    spread: float

    @property
    def values(self) -> Tuple[float, float, float]:
        return self.via_T, self.via_S, self.direct

    def to_dict(self) -> dict:
        return {
            "via_T": self.via_T,
            "via_S": self.via_S,
            "direct": self.direct,
            "spread": self.spread,
        }


def fubini_evaluate(phi: BilinearForm, x: TensorElement) -> FubiniReport:
    """Integrate ``x`` against ``phi`` through T, through S and directly."""
    check_pairing(phi, x, "fubini_evaluate")
    t = PartialOperator.of(phi, Side.LEFT_T)
    s = PartialOperator.of(phi, Side.RIGHT_S)
    via_t = sum(float(t(e) @ f) for e, f in x.terms)
    via_s = sum(float(s(f) @ e) for e, f in x.terms)
    direct = evaluate(phi, x)
    spread = relative_spread((via_t, via_s, direct), magnitude(phi, x))
    return FubiniReport(via_t, via_s, direct, spread)


def operator_form_check(phi: BilinearForm, x: TensorElement) -> float:
    """Max discrepancy of the two operator pairings against ``mu(x)``.

    Also rebuilds T from basis values alone and compares it entrywise with
    T_mu: the operator is determined by the form.
    """
    check_pairing(phi, x, "operator_form_check")
    mu = evaluate(phi, x)
    t = PartialOperator.of(phi, Side.LEFT_T)
    s = PartialOperator.of(phi, Side.RIGHT_S)
    left, right = x.left, x.right
    t_pairing = float(np.sum((left @ t.matrix.T) * right)) if x.terms else 0.0
    s_pairing = float(np.sum((right @ s.matrix.T) * left)) if x.terms else 0.0

    n, m = phi.shape
    basis_e, basis_f = np.eye(n), np.eye(m)
    rebuilt = np.array([[phi(basis_e[i], basis_f[j]) for i in range(n)] for j in range(m)])
    uniqueness = float(np.max(np.abs(rebuilt - t.matrix)))
    return max(abs(t_pairing - mu), abs(s_pairing - mu), uniqueness)


def continuity_gaps(
    phi: BilinearForm,
    x: TensorElement,
    approximants: Sequence[TensorElement],
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> List[Tuple[float, float]]:
    """``(|mu(x_n) - mu(x)|, ||phi|| * upper(||x_n - x||_pi))`` per approximant.

    Integration is continuous: the first entry never exceeds the second.
    """
    target = evaluate(phi, x)
    norm = bilinear_norm(phi, exact=False, samples=samples, seed=seed).upper
    out = []
    for xn in approximants:
        gap = abs(evaluate(phi, xn) - target)
        distance = projective_norm(xn - x, samples=samples, seed=seed).upper
        out.append((gap, norm * distance))
    return out


@dataclass(frozen=True)
class ConstantLedger:
    """Advisory bound ``scale * K_G**exponent`` on a multilinear form's norm.

    ``recomputed`` is the exact norm of the form carrying the ledger, when
    sign enumeration could afford it. Contraction only guarantees
    ``||mu(v, ...)|| <= ||mu|| ||v||``, so a recomputed norm can exceed the
    tracked bound; :meth:`holds` reports that.
    """

    scale: float = 1.0
    exponent: int = 0
    recomputed: Optional[float] = None

    def bound(self, constants: Constants = Constants()) -> float:
        return self.scale * constants.kg_power(self.exponent)

    def contracted(self, vector_norm: float) -> "ConstantLedger":
        return ConstantLedger(self.scale * vector_norm, max(self.exponent - 1, 0))

    def with_norm(self, value: Optional[float]) -> "ConstantLedger":
        return replace(self, recomputed=value)

    def holds(self, constants: Constants = Constants(), tol: float = 1e-9) -> bool:
        """False only when a recomputed norm exceeds the tracked bound."""
        if self.recomputed is None:
            return True
        return self.recomputed <= self.bound(constants) + tol

    def to_dict(self, constants: Constants = Constants()) -> dict:
        return {
            "scale": self.scale,
            "exponent": self.exponent,
            "bound": self.bound(constants),
            "recomputed": self.recomputed,
            "holds": self.holds(constants),
        }


@dataclass(frozen=True, eq=False)
class MultilinearForm:
    """Dense order-n form ``mu(v_1, ..., v_n) = T[i_1..i_n] v_1[i_1] ... v_n[i_n]``."""

    tensor: np.ndarray
    spaces: Tuple[SpaceSpec, ...]
    ledger: Optional[ConstantLedger] = field(default=None)

    def __post_init__(self):
        arr = np.array(self.tensor, dtype=float)
        spaces = tuple(self.spaces)
        if arr.ndim > MAX_ORDER:
            raise TensorTooLarge(f"order {arr.ndim} exceeds {MAX_ORDER}")
        if arr.size > MAX_ENTRIES:
            raise TensorTooLarge(f"{arr.size} entries exceed {MAX_ENTRIES}")
        if arr.ndim < 2:
            raise DimensionMismatch("MultilinearForm", "order >= 2", arr.ndim)
        dims = tuple(s.dim for s in spaces)
        if arr.shape != dims:
            raise DimensionMismatch("MultilinearForm", dims, arr.shape)
        if not np.all(np.isfinite(arr)):
            raise NonFiniteEntries("MultilinearForm: entries must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "tensor", arr)
        object.__setattr__(self, "spaces", spaces)

    @classmethod
    def from_bilinear(cls, phi: BilinearForm) -> "MultilinearForm":
        return cls(phi.coeffs, phi.spaces)

    def to_bilinear(self) -> BilinearForm:
        if self.order != 2:
            raise DimensionMismatch("MultilinearForm.to_bilinear", 2, self.order)
        return BilinearForm(self.tensor, *self.spaces)

    @property
    def order(self) -> int:
        return self.tensor.ndim

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.tensor.shape

    def with_ledger(self, ledger: ConstantLedger) -> "MultilinearForm":
        return MultilinearForm(self.tensor, self.spaces, ledger)

    def check_vectors(self, vectors, caller: str) -> List[np.ndarray]:
        vectors = list(vectors)
        if len(vectors) != self.order:
            raise DimensionMismatch(caller, self.order, len(vectors))
        return [s.check(v, caller) for s, v in zip(self.spaces, vectors)]

    def __call__(self, *vectors) -> float:
        vectors = self.check_vectors(vectors, "MultilinearForm")
        return float(functools.reduce(lambda t, v: t @ v, reversed(vectors), self.tensor))

    def __repr__(self):
        tags = ", ".join(s.tag for s in self.spaces)
        return f"<MultilinearForm {'x'.join(map(str, self.shape))} on ({tags})>"


@dataclass(frozen=True, eq=False)
class MultiTensorElement:
    """``sum_k e_1^k (x) ... (x) e_n^k``."""

    terms: Tuple[Tuple[np.ndarray, ...], ...]
    spaces: Tuple[SpaceSpec, ...]

    def __post_init__(self):
        spaces = tuple(self.spaces)
        terms = []
        for term in self.terms:
            if len(term) != len(spaces):
                raise DimensionMismatch("MultiTensorElement", len(spaces), len(term))
            terms.append(tuple(s.check(v, "MultiTensorElement") for s, v in zip(spaces, term)))
        object.__setattr__(self, "spaces", spaces)
        object.__setattr__(self, "terms", tuple(terms))

    def tensor(self) -> np.ndarray:
        out = np.zeros(tuple(s.dim for s in self.spaces))
        for term in self.terms:
            out += functools.reduce(np.multiply.outer, term)
        return out

    def representation_cost(self) -> float:
        return float(
            sum(np.prod([s.norm_of(v) for s, v in zip(self.spaces, term)]) for term in self.terms)
        )


def multi_evaluate(mu: MultilinearForm, elem: MultiTensorElement) -> float:
    """``mu`` integrated against every term of ``elem``."""
    dims = tuple(s.dim for s in elem.spaces)
    if dims != mu.shape:
        raise DimensionMismatch("multi_evaluate", mu.shape, dims)
    return float(sum(mu(*term) for term in elem.terms))


def _exact_norm(mu: MultilinearForm, enum_limit: int) -> Optional[float]:
    """The norm of ``mu`` when an exact path exists within ``enum_limit``."""
    try:
        cert = multilinear_norm(mu, enum_limit=enum_limit, samples=1)
    except EnumLimitExceeded:
        return None
    return cert.value if cert.exact else None


def partial_contract(
    mu: MultilinearForm,
    k: int,
    v,
    constants: Constants = Constants(),
    enum_limit: int = DEFAULT_ENUM_LIMIT,
) -> Union[MultilinearForm, np.ndarray]:
    """Contract mode ``k`` (1-indexed) of ``mu`` with ``v``.

    Returns the order n-1 form, or the representing dual vector once a
    single mode is left. A ledger on ``mu`` is carried over with one less
    power of K_G and the result's exact norm, when one is affordable; a
    recomputed norm above the tracked bound is logged.
    """
    if not 1 <= k <= mu.order:
        raise IndexOutOfRange(k, mu.order)
    space_ = mu.spaces[k - 1]
    v = space_.check(v, "partial_contract")
    tensor = np.tensordot(v, mu.tensor, axes=([0], [k - 1]))
    if tensor.ndim == 1:
        return tensor
    out = MultilinearForm(tensor, mu.spaces[: k - 1] + mu.spaces[k:])
    if mu.ledger is None:
        return out
    ledger = mu.ledger.contracted(float(space_.norm_of(v)))
    ledger = ledger.with_norm(_exact_norm(out, enum_limit))
    if not ledger.holds(constants):
        logger.warning(
            "recomputed norm %r exceeds tracked bound %r",
            ledger.recomputed, ledger.bound(constants),
        )
    return out.with_ledger(ledger)


def _check_permutation(sigma: Sequence[int], order: int) -> Tuple[int, ...]:
    sigma = tuple(int(s) for s in sigma)
    if sorted(sigma) != list(range(1, order + 1)):
        raise InvalidPermutation(sigma, order)
    return sigma


def permutation_evaluate(mu: MultilinearForm, sigma: Sequence[int], elem) -> float:
    """Contract modes ``sigma(1), sigma(2), ...`` one at a time down to a scalar."""
    sigma = _check_permutation(sigma, mu.order)
    vectors = mu.check_vectors(elem, "permutation_evaluate")
    remaining = list(range(1, mu.order + 1))
    current: Union[MultilinearForm, np.ndarray] = mu
    for mode in sigma:
        v = vectors[mode - 1]
        if isinstance(current, np.ndarray):
            return float(current @ v)
        current = partial_contract(current, remaining.index(mode) + 1, v)
        remaining.remove(mode)
    raise AssertionError("contraction ended before the last mode")


@dataclass(frozen=True)
class PermutationSweep:
    orders: Tuple[Tuple[Tuple[int, ...], float], ...]
    direct: float
    spread: float

    def to_dict(self) -> dict:
        return {
            "orders": [{"sigma": list(s), "value": v} for s, v in self.orders],
            "direct": self.direct,
            "spread": self.spread,
        }


def permutation_sweep(mu: MultilinearForm, elem, threads: int = 1) -> PermutationSweep:
    """All ``n!`` contraction orders and their spread relative to ``|T|(|v|...)``."""
    vectors = mu.check_vectors(elem, "permutation_sweep")
    sigmas = list(itertools.permutations(range(1, mu.order + 1)))
    values = parallel_map(lambda s: permutation_evaluate(mu, s, vectors), sigmas, threads)
    direct = mu(*vectors)
    scale = float(
        functools.reduce(lambda t, v: t @ v, reversed([np.abs(v) for v in vectors]), np.abs(mu.tensor))
    )
    spread = relative_spread(values + [direct], scale)
    logger.debug("swept %d orders, spread %r", len(sigmas), spread)
    return PermutationSweep(tuple(zip(sigmas, values)), direct, spread)


def _contract_except(tensor: np.ndarray, vectors: Sequence[np.ndarray], keep: int) -> np.ndarray:
    out = tensor
    for mode in reversed(range(tensor.ndim)):
        if mode != keep:
            out = np.tensordot(out, vectors[mode], axes=([mode], [0]))
    return out


def _slices(mu: MultilinearForm, mode: int):
    for i in range(mu.shape[mode]):
        yield np.take(mu.tensor, i, axis=mode)


def _extreme_point_reduction(mu: MultilinearForm, mode: int, **kwargs) -> NormCertificate:
    # an L1 unit ball is the hull of the signed basis vectors, so the sup is
    # attained on a slice
    rest = mu.spaces[:mode] + mu.spaces[mode + 1:]
    certs = []
    for sl in _slices(mu, mode):
        if sl.ndim == 1:
            top = float(rest[0].dual_norm(sl))
            certs.append(NormCertificate(top, top, CertMethod.EXACT_SIGN_ENUM))
        else:
            certs.append(multilinear_norm(MultilinearForm(sl, rest), **kwargs))
    lower = max(c.lower for c in certs)
    upper = max(c.upper for c in certs)
    exact = all(c.exact for c in certs)
    method = CertMethod.EXACT_SIGN_ENUM if exact else CertMethod.SAMPLED_DUAL
    return NormCertificate(min(lower, upper), upper, method)


def _sign_sweep(mu: MultilinearForm, threads: int) -> NormCertificate:
    # the largest mode is optimized in closed form, the others enumerated
    last = int(np.argmax(mu.shape))
    order = [k for k in range(mu.order) if k != last] + [last]
    tensor = np.transpose(mu.tensor, order)
    dims = tensor.shape[:-1]
    bits = int(sum(dims))
    offsets = np.cumsum((0,) + dims)
    block = max(1, _SWEEP_BUDGET // max(1, tensor.size // dims[0]))

    def contract(signs: np.ndarray) -> np.ndarray:
        out = np.einsum("bi,i...->b...", signs[:, offsets[0]:offsets[1]], tensor)
        for k in range(1, len(dims)):
            out = np.einsum("bi,bi...->b...", signs[:, offsets[k]:offsets[k + 1]], out)
        return out

    top, pattern = sign_enumerate(
        lambda s: np.abs(contract(s)).sum(axis=1), bits, threads, block
    )
    vectors = [pattern[offsets[k]:offsets[k + 1]] for k in range(len(dims))]
    vectors.append(sign(contract(pattern[None, :])[0]))
    witness = [None] * mu.order
    for pos, mode in enumerate(order):
        witness[mode] = vectors[pos]
    return NormCertificate(top, top, CertMethod.EXACT_SIGN_ENUM, witness=tuple(witness))


def _proxy_upper(mu: MultilinearForm) -> float:
    # LInf^d sits inside sqrt(d) times the L2 ball; Frobenius bounds the rest
    tensor = mu.tensor
    factor = 1.0
    for mode, s in enumerate(mu.spaces):
        shape = [1] * mu.order
        shape[mode] = s.dim
        if s.norm is NormTag.WL2:
            tensor = tensor / np.sqrt(s.w).reshape(shape)
        elif s.norm is NormTag.LINF:
            factor *= np.sqrt(s.dim)
    return float(factor * np.linalg.norm(tensor))


def _alternating_ascent(mu: MultilinearForm, samples: int, seed: int):
    rng = substream(seed, "multilinear_norm")
    best, witness = 0.0, None
    for _ in range(samples):
        vectors = [s.norming_vector(rng.standard_normal(s.dim)) for s in mu.spaces]
        value = -np.inf
        for _ in range(_ALS_STEPS):
            for k, s in enumerate(mu.spaces):
                vectors[k] = s.norming_vector(_contract_except(mu.tensor, vectors, k))
            current = abs(mu(*vectors))
            if current <= value * (1 + 1e-14):
                break
            value = current
        if value > best:
            best, witness = value, tuple(vectors)
    return best, witness


def multilinear_norm(
    mu: MultilinearForm,
    enum_limit: int = DEFAULT_ENUM_LIMIT,
    exact: bool = True,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    threads: int = 1,
) -> NormCertificate:
    """Norm ``sup |mu(v_1, ..., v_n)|`` over unit-ball tuples.

    Order two delegates to :func:`gkit.spaces.bilinear_norm`. L1 modes reduce
    to slices, all-LInf forms are swept over signs exactly, and everything
    else gets a SampledDual interval from alternating norming steps.
    """
    kwargs = dict(enum_limit=enum_limit, exact=exact, samples=samples, seed=seed, threads=threads)
    if mu.order == 2:
        return bilinear_norm(mu.to_bilinear(), **kwargs)
    if not mu.tensor.any():
        return NormCertificate(0.0, 0.0, zero_method(*mu.spaces))
    tags = [s.norm for s in mu.spaces]
    if NormTag.L1 in tags:
        return _extreme_point_reduction(mu, tags.index(NormTag.L1), **kwargs)
    if all(t is NormTag.LINF for t in tags):
        bits = sum(mu.shape) - max(mu.shape)
        if bits <= enum_limit:
            return _sign_sweep(mu, threads)
        if exact:
            raise EnumLimitExceeded(bits, enum_limit)
    lower, witness = _alternating_ascent(mu, max(1, samples // 8), seed)
    upper = _proxy_upper(mu)
    return NormCertificate(min(lower, upper), upper, CertMethod.SAMPLED_DUAL, witness=witness)


def is_multi_grothendieck(
    mu: MultilinearForm,
    constants: Constants = Constants(),
    scale: float = 1.0,
    **norm_kwargs,
) -> Tuple[bool, NormCertificate]:
    """Whether ``||mu|| <= scale * K_G**(n-1)``."""
    cert = multilinear_norm(mu, **norm_kwargs)
    threshold = scale * constants.kg_power(mu.order - 1)
    if cert.upper <= threshold:
        return True, cert
    if cert.lower > threshold:
        return False, cert
    raise InexactNorm(cert.lower, cert.upper, threshold)
