"""Batch drivers that exercise the primary modules over seeded random families."""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from gkit.constants import Constants
from gkit.fubini import (
    MultilinearForm,
    fubini_evaluate,
    operator_form_check,
    permutation_sweep,
)
from gkit.helpers import random_sign_matrix, substream
from gkit.kernels import Refinement, Rule, refinement
from gkit.sdp import grothendieck_ratio
from gkit.spaces import BilinearForm, SpaceSpec, TensorElement

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RatioSweep:
    ratios: Tuple[float, ...]
    shapes: Tuple[Tuple[int, int], ...]
    lower_ok: bool
    upper_ok: bool

    @property
    def passed(self) -> bool:
        return self.lower_ok and self.upper_ok

    def to_dict(self) -> dict:
        return {
            "count": len(self.ratios),
            "min_ratio": min(self.ratios),
            "max_ratio": max(self.ratios),
            "passed": self.passed,
        }


def ratio_sweep(
    count: int = 200,
    sizes: Sequence[int] = tuple(range(2, 9)),
    seed: int = 0,
    constants: Constants = Constants(),
    restarts: int = 8,
    threads: int = 1,
) -> RatioSweep:
    """Grothendieck ratios of ``count`` random sign matrices, sizes cycling through ``sizes``.

    Every ratio must land in ``[1 - 1e-9, kg_real_upper + 1e-6]``.
    """
    ratios, shapes = [], []
    for i in range(count):
        n = sizes[i % len(sizes)]
        m = sizes[(i // len(sizes)) % len(sizes)]
        a = random_sign_matrix(n, m, seed, "ratio_sweep", i)
        phi = BilinearForm.from_matrix(a, "linf", "linf")
        result = grothendieck_ratio(
            phi, constants, restarts=restarts, seed=seed, threads=threads
        )
        ratios.append(result.ratio)
        shapes.append((n, m))
    lower_ok = min(ratios) >= 1 - 1e-9
    upper_ok = max(ratios) <= constants.kg_real_upper + 1e-6
    logger.debug("ratio sweep over %d forms: [%r, %r]", count, min(ratios), max(ratios))
    return RatioSweep(tuple(ratios), tuple(shapes), lower_ok, upper_ok)


@dataclass(frozen=True)
class FubiniSuite:
    bilinear_spread: float
    operator_discrepancy: float
    multilinear_spread: float
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.bilinear_spread, self.multilinear_spread) <= self.tol

    def to_dict(self) -> dict:
        return {
            "bilinear_spread": self.bilinear_spread,
            "operator_discrepancy": self.operator_discrepancy,
            "multilinear_spread": self.multilinear_spread,
            "passed": self.passed,
        }


def _random_element(rng: np.random.Generator, n: int, m: int) -> TensorElement:
    terms = rng.integers(1, 5)
    return TensorElement(
        tuple((rng.standard_normal(n), rng.standard_normal(m)) for _ in range(terms)),
        (SpaceSpec(n), SpaceSpec(m)),
    )


def fubini_suite(
    bilinear: int = 1000,
    multilinear: int = 200,
    seed: int = 0,
    tol: float = 1e-12,
    threads: int = 1,
) -> FubiniSuite:
    """Max relative spread over every integration order on random instances."""
    rng = substream(seed, "fubini_suite", "bilinear")
    spread = discrepancy = 0.0
    for _ in range(bilinear):
        n, m = rng.integers(1, 9, size=2)
        phi = BilinearForm(rng.standard_normal((n, m)), SpaceSpec(n), SpaceSpec(m))
        x = _random_element(rng, n, m)
        spread = max(spread, fubini_evaluate(phi, x).spread)
        discrepancy = max(discrepancy, operator_form_check(phi, x))

    rng = substream(seed, "fubini_suite", "multilinear")
    multi = 0.0
    for i in range(multilinear):
        order = 3 + i % 2
        dims = tuple(int(d) for d in rng.integers(2, 5, size=order))
        mu = MultilinearForm(rng.standard_normal(dims), tuple(SpaceSpec(d) for d in dims))
        vectors = [rng.standard_normal(d) for d in dims]
        multi = max(multi, permutation_sweep(mu, vectors, threads).spread)
    return FubiniSuite(spread, discrepancy, multi, tol)


@dataclass(frozen=True)
class RefinementSuite:
    refinement: Refinement
    bound: float
    within_bound: bool
    gaps_shrink: bool
    expected: Optional[str] = None

    @property
    def direction(self) -> str:
        return self.refinement.direction

    @property
    def monotone(self) -> bool:
        if self.expected is not None:
            return self.direction == self.expected
        return self.direction != "mixed"

    @property
    def passed(self) -> bool:
        return self.within_bound and self.gaps_shrink and self.monotone

    def to_dict(self) -> dict:
        return {
            **self.refinement.to_dict(),
            "bound": self.bound,
            "expected_direction": self.expected,
            "monotone": self.monotone,
            "passed": self.passed,
        }


def refinement_suite(
    kernel: str = "inv1p",
    ns: Sequence[int] = (64, 128, 256, 512),
    rule: Rule = Rule.GAUSS_LEGENDRE,
    bound: float = 2 * np.log(2) + 1e-3,
    threads: int = 1,
    expected: Optional[str] = None,
) -> RefinementSuite:
    """Operator norms under grid doubling stay below ``bound`` and settle.

    The sequence must be monotone with shrinking gaps. ``expected`` pins the
    direction (``"increasing"`` or ``"decreasing"``); without it either
    direction passes and the observed one is reported.
    """
    result = refinement(kernel, ns, rule, threads=threads)
    gaps = result.gaps
    shrink = all(later <= earlier for earlier, later in zip(gaps, gaps[1:]))
    if result.direction != "increasing":
        logger.info("%s refinement is %s, not increasing", kernel, result.direction)
    return RefinementSuite(
        result, float(bound), max(result.norms) <= bound, shrink, expected
    )
