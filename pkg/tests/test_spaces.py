import itertools
from unittest import mock

import numpy as np
import pytest

from gkit import spaces
from gkit.constants import Constants
from gkit.exceptions import (
    DimensionMismatch,
    EnumLimitExceeded,
    InexactNorm,
    NonFiniteEntries,
    NotInfInfDomains,
    ParseError,
)
from gkit.helpers import random_sign_matrix
from gkit.spaces import (
    BilinearForm,
    CertMethod,
    NormCertificate,
    NormTag,
    SpaceSpec,
    TensorElement,
    bilinear_norm,
    evaluate,
    is_grothendieck,
    projective_norm,
    space,
    total_variation_vs_norm,
)

TAGS = ["l1", "l2", "linf", "wl2"]


def make_space(tag, dim, rng):
    weights = rng.uniform(0.5, 2.0, dim) if tag == "wl2" else None
    return space(tag, dim, weights)


def brute_force_linf(a):
    n, m = a.shape
    best = 0.0
    for x in itertools.product([-1.0, 1.0], repeat=n):
        for y in itertools.product([-1.0, 1.0], repeat=m):
            best = max(best, abs(np.array(x) @ a @ np.array(y)))
    return best


def test_space_dual_pairs():
    assert SpaceSpec(3, NormTag.L1).dual().norm is NormTag.LINF
    assert SpaceSpec(3, NormTag.LINF).dual().norm is NormTag.L1
    assert SpaceSpec(3, NormTag.L2).dual().norm is NormTag.L2
    weighted = space("wl2", 2, [2.0, 4.0])
    assert weighted.dual().weights == (0.5, 0.25)


def test_space_rejects_bad_input():
    with pytest.raises(DimensionMismatch):
        SpaceSpec(0)
    with pytest.raises(ParseError):
        space("wl2", 2)
    with pytest.raises(ParseError):
        space("wl2", 2, [1.0, 0.0])
    with pytest.raises(ParseError):
        space("l2", 2, [1.0, 1.0])
    with pytest.raises(ParseError):
        space("l3", 2)


@pytest.mark.parametrize("tag", TAGS)
def test_norming_vector_attains_dual_norm(tag, rng):
    s = make_space(tag, 5, rng)
    a = rng.standard_normal(5)
    v = s.norming_vector(a)
    assert s.norm_of(v) <= 1 + 1e-12
    assert v @ a == pytest.approx(s.dual_norm(a), rel=1e-12)


@pytest.mark.parametrize("tag", TAGS)
def test_norming_functional_attains_norm(tag, rng):
    s = make_space(tag, 4, rng)
    v = rng.standard_normal(4)
    a = s.norming_functional(v)
    assert s.dual_norm(a) <= 1 + 1e-12
    assert a @ v == pytest.approx(s.norm_of(v), rel=1e-12)


def test_bilinear_form_validates_shape_and_entries():
    with pytest.raises(DimensionMismatch):
        BilinearForm(np.ones((2, 3)), SpaceSpec(3), SpaceSpec(3))
    with pytest.raises(NonFiniteEntries):
        BilinearForm.from_matrix([[1.0, np.nan]])


def test_bilinear_form_is_immutable(chsh):
    with pytest.raises(ValueError):
        chsh.coeffs[0, 0] = 5.0


def test_norm_zero(zero_form):
    cert = bilinear_norm(zero_form)
    assert cert.lower == cert.upper == 0


def test_norm_chsh(chsh):
    cert = bilinear_norm(chsh)
    assert cert.method is CertMethod.EXACT_SIGN_ENUM
    assert cert.lower == pytest.approx(2.0)
    assert cert.upper == pytest.approx(2.0)


def test_norm_diag_l2(diag_form):
    cert = bilinear_norm(diag_form)
    assert cert.method is CertMethod.EXACT_SVD
    assert cert.value == pytest.approx(3.0)


def test_norm_weighted_matches_conjugation():
    phi = BilinearForm.from_matrix([[2.0, 0.0], [0.0, 2.0]], "wl2", "l2", [4.0, 1.0])
    # unit vectors of wl2(4, 1) have first coordinate at most 1/2
    assert bilinear_norm(phi).value == pytest.approx(2.0)
    assert bilinear_norm(phi.scaled(0.5)).value == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(5))
def test_norm_linf_matches_brute_force(seed):
    a = np.random.default_rng(seed).standard_normal((4, 3))
    phi = BilinearForm.from_matrix(a, "linf", "linf")
    assert bilinear_norm(phi).value == pytest.approx(brute_force_linf(a), rel=1e-12)


def test_norm_linf_l2_matches_brute_force(rng):
    a = rng.standard_normal((4, 3))
    phi = BilinearForm.from_matrix(a, "linf", "l2")
    expected = max(
        np.linalg.norm(np.array(x) @ a) for x in itertools.product([-1.0, 1.0], repeat=4)
    )
    assert bilinear_norm(phi).value == pytest.approx(expected, rel=1e-12)


def test_norm_l1_pairs_are_row_reductions(rng):
    a = rng.standard_normal((3, 4))
    phi = BilinearForm.from_matrix(a, "l1", "linf")
    cert = bilinear_norm(phi)
    assert cert.exact
    assert cert.value == pytest.approx(np.abs(a).sum(axis=1).max())
    phi = BilinearForm.from_matrix(a, "l2", "l1")
    assert bilinear_norm(phi).value == pytest.approx(np.linalg.norm(a, axis=0).max())


@pytest.mark.parametrize("pair", itertools.product(TAGS, TAGS))
def test_norm_witness_attains_value(pair, rng):
    de, df = make_space(pair[0], 4, rng), make_space(pair[1], 3, rng)
    phi = BilinearForm(rng.standard_normal((4, 3)), de, df)
    cert = bilinear_norm(phi)
    e, f = cert.witness
    assert de.norm_of(e) <= 1 + 1e-9
    assert df.norm_of(f) <= 1 + 1e-9
    assert abs(phi(e, f)) == pytest.approx(cert.lower, rel=1e-9)


@pytest.mark.parametrize("c", [-3.0, 0.5, 2.0])
def test_norm_homogeneity(chsh, c):
    assert bilinear_norm(chsh.scaled(c)).value == pytest.approx(abs(c) * 2.0, rel=1e-12)


def test_enum_limit_raises():
    phi = BilinearForm.from_matrix(np.ones((6, 6)), "linf", "linf")
    with pytest.raises(EnumLimitExceeded) as exc_info:
        bilinear_norm(phi, enum_limit=3)
    assert exc_info.value.dimension == 6
    assert exc_info.value.limit == 3
    assert exc_info.value.exit_code == 2


def test_enum_limit_sampled_interval_contains_norm(rng):
    a = rng.standard_normal((6, 5))
    phi = BilinearForm.from_matrix(a, "linf", "linf")
    exact = bilinear_norm(phi).value
    cert = bilinear_norm(phi, enum_limit=3, exact=False, seed=1)
    assert cert.method is CertMethod.SAMPLED_DUAL
    assert cert.lower <= exact + 1e-12
    assert exact <= cert.upper + 1e-12


def test_sign_enumeration_independent_of_threads(rng):
    phi = BilinearForm.from_matrix(rng.standard_normal((12, 9)), "linf", "linf")
    one = bilinear_norm(phi, threads=1)
    four = bilinear_norm(phi, threads=4)
    assert one.value == four.value
    assert np.array_equal(one.witness[0], four.witness[0])


def test_certificate_invariants():
    with pytest.raises(ValueError):
        NormCertificate(2.0, 1.0, CertMethod.SAMPLED_DUAL)
    with pytest.raises(ValueError):
        NormCertificate(1.0, 2.0, CertMethod.EXACT_SVD)
    cert = NormCertificate(1.0, 2.0, CertMethod.SAMPLED_DUAL)
    assert not cert.exact
    assert cert.to_dict() == {"lower": 1.0, "upper": 2.0, "method": "SampledDual"}


def test_evaluate_examples(chsh, l2_pair):
    empty = TensorElement.zero(chsh.spaces)
    assert evaluate(chsh, empty) == 0
    x = TensorElement((([1.0, 0.0], [0.0, 1.0]),), chsh.spaces)
    assert evaluate(chsh, x) == 1.0
    identity = BilinearForm(np.eye(2), *l2_pair(2, 2))
    trace = TensorElement((([1, 0], [1, 0]), ([0, 1], [0, 1])), l2_pair(2, 2))
    assert evaluate(identity, trace) == 2.0


def test_evaluate_dimension_mismatch(chsh, l2_pair):
    x = TensorElement((([1.0, 0.0, 0.0], [1.0, 0.0]),), l2_pair(3, 2))
    with pytest.raises(DimensionMismatch):
        evaluate(chsh, x)


def test_tensor_element_arithmetic(l2_pair):
    x = TensorElement((([1.0, 2.0], [3.0, 4.0]),), l2_pair(2, 2))
    assert not (x - x).matrix().any()
    assert (2 * x).representation_cost() == pytest.approx(2 * x.representation_cost())
    assert x.equivalent(TensorElement.from_matrix(x.matrix(), x.spaces))
    with pytest.raises(DimensionMismatch):
        TensorElement((([1.0], [1.0, 2.0]),), l2_pair(2, 2))


@pytest.mark.parametrize("pair", [("l1", "linf"), ("linf", "l1"), ("linf", "linf"), ("l2", "linf"), ("wl2", "l1")])
def test_projective_norm_of_simple_tensor(pair, rng):
    spaces_ = (make_space(pair[0], 3, rng), make_space(pair[1], 4, rng))
    e, f = rng.standard_normal(3), rng.standard_normal(4)
    cert = projective_norm(TensorElement(((e, f),), spaces_))
    expected = spaces_[0].norm_of(e) * spaces_[1].norm_of(f)
    assert cert.upper == pytest.approx(expected, rel=1e-10)
    assert cert.lower == pytest.approx(expected, rel=1e-10)


def test_projective_norm_nuclear(chsh, l2_pair):
    spaces_ = l2_pair(2, 2)
    cert = projective_norm(TensorElement.from_matrix(np.eye(3), l2_pair(3, 3)))
    assert cert.method is CertMethod.NUCLEAR_SVD
    assert cert.value == pytest.approx(3.0)
    x = TensorElement.from_matrix(chsh.coeffs, spaces_)
    cert = projective_norm(x)
    assert cert.value == pytest.approx(2 * np.sqrt(2))
    # the dual witness has spectral norm one and attains the norm
    assert np.linalg.norm(cert.witness, 2) == pytest.approx(1.0)
    assert np.sum(cert.witness * x.matrix()) == pytest.approx(cert.value)


def test_projective_norm_representation_invariance(rng, l2_pair):
    spaces_ = l2_pair(3, 4)
    x = TensorElement(
        tuple((rng.standard_normal(3), rng.standard_normal(4)) for _ in range(5)), spaces_
    )
    y = TensorElement.from_matrix(x.matrix(), spaces_)
    phi = BilinearForm(rng.standard_normal((3, 4)), *spaces_)
    assert evaluate(phi, x) == pytest.approx(evaluate(phi, y), rel=1e-12, abs=1e-12)
    assert projective_norm(x).value == pytest.approx(projective_norm(y).value, rel=1e-12)


def test_projective_norm_l1_factor_is_tight(rng):
    spaces_ = (SpaceSpec(3, NormTag.L1), SpaceSpec(4))
    x = TensorElement(
        tuple((rng.standard_normal(3), rng.standard_normal(4)) for _ in range(3)), spaces_
    )
    cert = projective_norm(x)
    expected = np.linalg.norm(x.matrix(), axis=1).sum()
    assert cert.upper == pytest.approx(expected, rel=1e-10)
    assert cert.lower == pytest.approx(expected, rel=1e-10)


def test_projective_norm_duality_sandwich(rng):
    spaces_ = (SpaceSpec(3, NormTag.LINF), SpaceSpec(3, NormTag.LINF))
    x = TensorElement(
        tuple((rng.standard_normal(3), rng.standard_normal(3)) for _ in range(4)), spaces_
    )
    cert = projective_norm(x, samples=16)
    assert cert.lower <= cert.upper
    for _ in range(20):
        psi = BilinearForm(rng.standard_normal((3, 3)), *spaces_)
        unit = psi.scaled(1.0 / bilinear_norm(psi).value)
        assert abs(evaluate(unit, x)) <= cert.upper + 1e-10


def test_projective_norm_of_zero(l2_pair):
    assert projective_norm(TensorElement.zero(l2_pair(2, 3))).value == 0


def test_is_grothendieck_examples(chsh, zero_form):
    member, cert = is_grothendieck(zero_form)
    assert member and cert.value == 0
    member, cert = is_grothendieck(chsh)
    assert not member and cert.value == pytest.approx(2.0)
    member, cert = is_grothendieck(chsh.scaled(0.5))
    assert member and cert.value == pytest.approx(1.0)


@pytest.mark.parametrize("c", [0.0, 0.25, 0.5, 0.89])
def test_is_grothendieck_scale_monotone(chsh, c):
    assert is_grothendieck(chsh.scaled(c), Constants())[0]


@mock.patch("gkit.spaces.bilinear_norm")
def test_is_grothendieck_straddling_interval(bilinear_norm_mock, chsh):
    bilinear_norm_mock.return_value = NormCertificate(1.5, 2.0, CertMethod.SAMPLED_DUAL)
    with pytest.raises(InexactNorm) as exc_info:
        spaces.is_grothendieck(chsh)
    assert exc_info.value.threshold == 1.782


def test_total_variation_examples(chsh, rank_one_signs):
    report = total_variation_vs_norm(chsh)
    assert (report.tv, report.norm, report.ratio) == pytest.approx((4.0, 2.0, 2.0))
    assert total_variation_vs_norm(rank_one_signs).ratio == pytest.approx(1.0)


def test_total_variation_random_signs_deterministic():
    a = random_sign_matrix(4, 4, 0)
    rho = BilinearForm.from_matrix(a, "linf", "linf")
    first = total_variation_vs_norm(rho)
    assert 1.0 <= first.ratio <= 4.0
    assert total_variation_vs_norm(rho) == first


def test_total_variation_hadamard():
    h4 = [[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]]
    report = total_variation_vs_norm(BilinearForm.from_matrix(h4, "linf", "linf"))
    assert (report.tv, report.norm, report.ratio) == pytest.approx((16.0, 8.0, 2.0))


def test_total_variation_needs_linf(diag_form):
    with pytest.raises(NotInfInfDomains):
        total_variation_vs_norm(diag_form)
