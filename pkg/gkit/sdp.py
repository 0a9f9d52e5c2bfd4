"""
The Grothendieck semidefinite relaxation.

Sign variables are replaced by unit vectors in ``R^d``; :func:`sdp_value`
maximizes ``sum_ij a_ij <u_i, v_j>`` by alternating exact block updates on
the product of spheres, :func:`round_signs` pulls sign vectors back out with
random hyperplanes, and :func:`represent` builds an explicit Hilbert-space
factorization of a form.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from gkit.constants import Constants
from gkit.exceptions import (
    ConfigError,
    DimensionMismatch,
    EnumLimitExceeded,
    InvalidRank,
    NotInfInfDomains,
)
from gkit.helpers import best_of, parallel_map, sign, sign_enumerate, substream
from gkit.spaces import (
    DEFAULT_ENUM_LIMIT,
    BilinearForm,
    NormTag,
    SpaceSpec,
    bilinear_norm,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITERS = 5000
DEFAULT_RESTARTS = 8
DEFAULT_ROUNDING_SAMPLES = 64
GRADIENT_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class SdpSolution:
    """Feasible point of the relaxation: unit rows ``U`` (n x d) and ``V`` (m x d)."""

    U: np.ndarray
    V: np.ndarray
    value: float
    rank: int
    restarts_used: int
    converged: bool
    iterations: int = 0

    def to_dict(self) -> dict:
        return {
            "sdp_value": self.value,
            "rank": self.rank,
            "restarts_used": self.restarts_used,
            "converged": self.converged,
        }


def default_rank(n: int, m: int) -> int:
    """``ceil(sqrt(2(n + m))) + 1``, above the rank where stationary points are global."""
    return math.ceil(math.sqrt(2 * (n + m))) + 1


def normalize_rows(target: np.ndarray, previous: np.ndarray) -> np.ndarray:
    """Rows of ``target`` scaled to unit length; zero rows keep ``previous``."""
    norms = np.linalg.norm(target, axis=1)
    out = previous.copy()
    nonzero = norms > 0
    out[nonzero] = target[nonzero] / norms[nonzero, None]
    return out


def _random_sphere(rng: np.random.Generator, rows: int, rank: int) -> np.ndarray:
    start = rng.standard_normal((rows, rank))
    return start / np.linalg.norm(start, axis=1)[:, None]


def riemannian_gradient_norm(a: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
    """Norm of the gradient projected onto the tangent space of the spheres."""
    gu = a @ v
    gv = a.T @ u
    gu -= np.sum(gu * u, axis=1)[:, None] * u
    gv -= np.sum(gv * v, axis=1)[:, None] * v
    return float(np.sqrt(np.sum(gu * gu) + np.sum(gv * gv)))


def _ascend(
    a: np.ndarray, u: np.ndarray, v: np.ndarray, max_iters: int
) -> Tuple[np.ndarray, np.ndarray, bool, int]:
    # each block update is an exact maximization, so the value never drops
    for it in range(1, max_iters + 1):
        u = normalize_rows(a @ v, u)
        v = normalize_rows(a.T @ u, v)
        if riemannian_gradient_norm(a, u, v) < GRADIENT_TOL:
            return u, v, True, it
    return u, v, False, max_iters


def _pad(start: np.ndarray, rows: int, rank: int, caller: str) -> np.ndarray:
    start = np.asarray(start, dtype=float)
    if start.ndim != 2 or start.shape[0] != rows or start.shape[1] > rank:
        raise DimensionMismatch(caller, (rows, rank), start.shape)
    out = np.zeros((rows, rank))
    out[:, : start.shape[1]] = start
    norms = np.linalg.norm(out, axis=1)
    if np.any(norms == 0):
        raise DimensionMismatch(caller, "unit rows", "zero row")
    return out / norms[:, None]


def sdp_value(
    phi: BilinearForm,
    rank: Optional[int] = None,
    max_iters: int = DEFAULT_MAX_ITERS,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    threads: int = 1,
    warm_start: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> SdpSolution:
    """Lower bound on the Grothendieck SDP optimum of ``phi``.

    :param BilinearForm phi:
        The form; only its coefficients matter here.
    :param int rank:
        Dimension ``d`` of the unit vectors (default :func:`default_rank`).
    :param int max_iters:
        Sweeps per restart.
    :param int restarts:
        Seeded random initializations, each on its own sub-stream.
    :param int seed:
        Root seed.
    :param int threads:
        Restarts run concurrently on this many workers.
    :param tuple warm_start:
        (Optional) ``(U0, V0)`` with at most ``rank`` columns, run as one
        extra restart after the random ones.
    :rtype: SdpSolution
    """
    a = phi.coeffs
    n, m = a.shape
    if rank is None:
        rank = default_rank(n, m)
    if rank < 1:
        raise InvalidRank(rank)
    if restarts < 1 and warm_start is None:
        raise ConfigError(f"restarts must be at least 1, got {restarts}")

    starts = list(range(restarts))
    if warm_start is not None:
        u0 = _pad(warm_start[0], n, rank, "sdp_value.warm_start")
        v0 = _pad(warm_start[1], m, rank, "sdp_value.warm_start")
        starts.append(restarts)

    def run(index):
        if index == restarts and warm_start is not None:
            u, v = u0, v0
        else:
            rng = substream(seed, "sdp", index)
            u = _random_sphere(rng, n, rank)
            v = _random_sphere(rng, m, rank)
        u, v, converged, iterations = _ascend(a, u, v, max_iters)
        value = float(np.sum(a * (u @ v.T)))
        logger.debug(
            "sdp restart %d: value=%r converged=%s after %d sweeps",
            index, value, converged, iterations,
        )
        return value, index, (u, v, converged, iterations)

    value, _, (u, v, converged, iterations) = best_of(
        parallel_map(run, starts, threads)
    )
    if not converged:
        logger.warning("sdp ascent did not reach gradient tolerance %g", GRADIENT_TOL)
    return SdpSolution(
        U=u,
        V=v,
        value=value,
        rank=rank,
        restarts_used=len(starts),
        converged=converged,
        iterations=iterations,
    )


def round_signs(
    sol: SdpSolution,
    phi: BilinearForm,
    samples: int = DEFAULT_ROUNDING_SAMPLES,
    seed: int = 0,
) -> Tuple[np.ndarray, np.ndarray, float]:
    """Random-hyperplane rounding ``x = sign(Ug)``, ``y = sign(Vg)``.

    The best of ``samples`` hyperplanes is kept; its value never exceeds the
    sign-enumeration norm of ``phi``.
    """
    a = phi.coeffs
    if sol.U.shape[0] != a.shape[0] or sol.V.shape[0] != a.shape[1]:
        raise DimensionMismatch(
            "round_signs", a.shape, (sol.U.shape[0], sol.V.shape[0])
        )
    rng = substream(seed, "round_signs")
    g = rng.standard_normal((sol.rank, samples))
    xs = sign(sol.U @ g)
    ys = sign(sol.V @ g)
    values = np.einsum("is,ij,js->s", xs, a, ys)
    k = int(np.argmax(np.abs(values)))
    x, y, value = xs[:, k], ys[:, k], float(values[k])
    if value < 0:
        y, value = -y, -value
    return x, y, value


@dataclass(frozen=True, eq=False)
class GrothendieckRatio:
    ratio: float
    sdp: float
    norm: float
    solution: Optional[SdpSolution]
    within_bound: bool

    def to_dict(self) -> dict:
        out = {
            "ratio": self.ratio,
            "sdp_value": self.sdp,
            "norm": self.norm,
            "within_bound": self.within_bound,
        }
        if self.solution is not None:
            out["rank"] = self.solution.rank
            out["converged"] = self.solution.converged
        return out


def _embed_signs(signs: np.ndarray, rank: int) -> np.ndarray:
    out = np.zeros((len(signs), rank))
    out[:, 0] = signs
    return out


def grothendieck_ratio(
    phi: BilinearForm,
    constants: Constants = Constants(),
    rank: Optional[int] = None,
    max_iters: int = DEFAULT_MAX_ITERS,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    threads: int = 1,
    enum_limit: int = DEFAULT_ENUM_LIMIT,
    tol: float = 1e-6,
) -> GrothendieckRatio:
    """SDP value over the exact sign optimum of a form on (LInf, LInf).

    The SDP is warm-started from the sign optimum, so the ratio is at least
    one. A ratio above ``kg_real_upper + tol`` would contradict Grothendieck's
    inequality and is flagged as a solver defect.
    """
    de, df = phi.spaces
    if de.norm is not NormTag.LINF or df.norm is not NormTag.LINF:
        raise NotInfInfDomains("grothendieck_ratio needs (linf, linf) domains")
    cert = bilinear_norm(phi, enum_limit=enum_limit, threads=threads)
    norm = cert.value
    if norm == 0:
        return GrothendieckRatio(1.0, 0.0, 0.0, None, True)

    x, y = cert.witness
    rank = default_rank(*phi.shape) if rank is None else rank
    sol = sdp_value(
        phi,
        rank=rank,
        max_iters=max_iters,
        restarts=restarts,
        seed=seed,
        threads=threads,
        warm_start=(_embed_signs(x, rank), _embed_signs(y, rank)),
    )
    ratio = sol.value / norm
    within = ratio <= constants.kg_real_upper + tol
    if not within:
        logger.warning(
            "grothendieck ratio %r exceeds K_G upper bound %r",
            ratio, constants.kg_real_upper,
        )
    return GrothendieckRatio(ratio, sol.value, norm, sol, within)


@dataclass(frozen=True, eq=False)
class FactorizationWitness:
    """``phi(e_i, f_j) = <u_i, v_j>`` with ``A e = U^T e`` and ``B f = V^T f``."""

    U: np.ndarray
    V: np.ndarray
    norm_A: float
    norm_B: float
    domain_e: SpaceSpec
    domain_f: SpaceSpec

    @property
    def rank(self) -> int:
        return self.U.shape[1]

    @property
    def product(self) -> float:
        return self.norm_A * self.norm_B

    def reconstruct(self) -> np.ndarray:
        return self.U @ self.V.T

    def normalized(self, norm: float) -> "FactorizationWitness":
        """The pair scaled by ``1/sqrt(norm)``, a factorization of ``phi / norm``."""
        if norm <= 0:
            return self
        c = 1.0 / math.sqrt(norm)
        return FactorizationWitness(
            self.U * c,
            self.V * c,
            self.norm_A * c,
            self.norm_B * c,
            self.domain_e,
            self.domain_f,
        )

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "norm_A": self.norm_A,
            "norm_B": self.norm_B,
            "product": self.product,
        }


def factor_norm(
    factor: np.ndarray,
    domain: SpaceSpec,
    enum_limit: int = DEFAULT_ENUM_LIMIT,
    threads: int = 1,
) -> float:
    """Operator norm of ``e -> factor^T e`` from ``domain`` into ``R^d``."""
    if not factor.any():
        return 0.0
    if domain.norm is NormTag.L1:
        return float(np.linalg.norm(factor, axis=1).max())
    if domain.norm is NormTag.LINF:
        if domain.dim > enum_limit:
            raise EnumLimitExceeded(domain.dim, enum_limit)
        top, _ = sign_enumerate(
            lambda s: np.linalg.norm(s @ factor, axis=1), domain.dim, threads
        )
        return top
    scaled = factor / np.sqrt(domain.w)[:, None]
    return float(scipy.linalg.svdvals(scaled)[0])


def represent(
    phi: BilinearForm,
    enum_limit: int = DEFAULT_ENUM_LIMIT,
    threads: int = 1,
) -> FactorizationWitness:
    """Balanced SVD factorization ``U = P S^(1/2)``, ``V = Q S^(1/2)``."""
    p, s, qt = scipy.linalg.svd(phi.coeffs, full_matrices=False)
    root = np.sqrt(s)
    u = p * root[None, :]
    v = qt.T * root[None, :]
    return FactorizationWitness(
        u,
        v,
        factor_norm(u, phi.domain_e, enum_limit, threads),
        factor_norm(v, phi.domain_f, enum_limit, threads),
        phi.domain_e,
        phi.domain_f,
    )


@dataclass(frozen=True)
class WitnessCheck:
    reconstruction_error: float
    product: float
    form_norm: float
    bound: float
    within_bound: bool

    def to_dict(self) -> dict:
        return {
            "reconstruction_error": self.reconstruction_error,
            "product": self.product,
            "form_norm": self.form_norm,
            "bound": self.bound,
            "within_bound": self.within_bound,
        }


def check_witness(
    phi: BilinearForm,
    witness: FactorizationWitness,
    constants: Constants = Constants(),
    enum_limit: int = DEFAULT_ENUM_LIMIT,
    threads: int = 1,
) -> WitnessCheck:
    """Report whether this particular witness meets ``||A|| ||B|| <= K_G ||phi||``.

    Some witness always does; the balanced split is not guaranteed to.
    """
    error = float(np.max(np.abs(witness.reconstruct() - phi.coeffs), initial=0.0))
    form_norm = bilinear_norm(phi, enum_limit=enum_limit, threads=threads).upper
    bound = constants.kg_effective * form_norm
    within = witness.product <= bound + 1e-10 * max(1.0, bound)
    if not within:
        logger.warning(
            "witness product %r exceeds K_G * ||phi|| = %r", witness.product, bound
        )
    return WitnessCheck(error, witness.product, form_norm, bound, within)
