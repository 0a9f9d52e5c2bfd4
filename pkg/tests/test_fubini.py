import itertools
import logging

import numpy as np
import pytest

from gkit import parser
from gkit.constants import Constants
from gkit.exceptions import (
    DimensionMismatch,
    EnumLimitExceeded,
    IndexOutOfRange,
    InvalidPermutation,
    TensorTooLarge,
)
from gkit.fubini import (
    ConstantLedger,
    MultilinearForm,
    MultiTensorElement,
    PartialOperator,
    Side,
    continuity_gaps,
    fubini_evaluate,
    is_multi_grothendieck,
    multi_evaluate,
    multilinear_norm,
    operator_form_check,
    partial_apply,
    partial_contract,
    permutation_evaluate,
    permutation_sweep,
)
from gkit.spaces import CertMethod, SpaceSpec, TensorElement, bilinear_norm, space

TAGS = ["l1", "l2", "linf", "wl2"]


def linf_spaces(*dims):
    return tuple(space("linf", d) for d in dims)


def brute_force_multi(tensor):
    best = 0.0
    for signs in itertools.product(
        *[itertools.product([-1.0, 1.0], repeat=d) for d in tensor.shape]
    ):
        value = tensor
        for v in reversed(signs):
            value = value @ np.array(v)
        best = max(best, abs(float(value)))
    return best


def random_element(rng, spaces_, terms=3):
    return TensorElement(
        tuple(
            (rng.standard_normal(spaces_[0].dim), rng.standard_normal(spaces_[1].dim))
            for _ in range(terms)
        ),
        spaces_,
    )


def test_partial_apply_chsh(chsh):
    assert partial_apply(chsh, "LeftT", [1.0, 0.0]).tolist() == [1.0, 1.0]
    assert partial_apply(chsh, Side.RIGHT_S, [0.0, 1.0]).tolist() == [1.0, -1.0]
    with pytest.raises(DimensionMismatch):
        partial_apply(chsh, "LeftT", [1.0, 0.0, 0.0])


@pytest.mark.parametrize("pair", itertools.product(TAGS, TAGS))
@pytest.mark.parametrize("side", list(Side))
def test_partial_operator_norm_equals_form_norm(pair, side, random_form):
    phi = random_form(4, 3, *pair)
    expected = bilinear_norm(phi).value
    assert PartialOperator.of(phi, side).norm() == pytest.approx(expected, rel=1e-10)


def test_partial_operator_norm_zero(zero_form):
    assert PartialOperator.of(zero_form, Side.LEFT_T).norm() == 0.0


def test_partial_operator_norm_enum_limit():
    source = space("linf", 6)
    op = PartialOperator(np.ones((3, 6)), source, space("linf", 3), Side.LEFT_T)
    with pytest.raises(EnumLimitExceeded):
        op.norm(enum_limit=4)


@pytest.mark.parametrize("pair", [("l2", "l2"), ("linf", "l1"), ("wl2", "linf")])
def test_fubini_orders_agree(pair, random_form, rng):
    phi = random_form(5, 4, *pair)
    x = random_element(rng, phi.spaces, terms=6)
    report = fubini_evaluate(phi, x)
    assert report.spread <= 1e-12


def test_fubini_chsh_simple_tensor(chsh, mock_file):
    x = parser.load_element(mock_file("x.json"), chsh.spaces)
    report = fubini_evaluate(chsh, x)
    # (1, 1) A (1, -1)^T = 0 + 2
    assert report.values == (2.0, 2.0, 2.0)
    assert report.spread == 0.0


def test_fubini_empty_element(chsh):
    report = fubini_evaluate(chsh, TensorElement.zero(chsh.spaces))
    assert report.values == (0, 0, 0)


def test_operator_form_check(random_form, rng):
    phi = random_form(4, 6)
    x = random_element(rng, phi.spaces)
    assert operator_form_check(phi, x) <= 1e-12


def test_continuity_gaps(chsh, rng):
    x = random_element(rng, chsh.spaces)
    y = random_element(rng, chsh.spaces)
    approximants = [x + (1.0 / k) * y for k in (1, 10, 100)]
    gaps = continuity_gaps(chsh, x, approximants, samples=8)
    assert len(gaps) == 3
    for gap, bound in gaps:
        assert gap <= bound + 1e-12
    assert gaps[2][1] < gaps[0][1]


def test_ledger():
    ledger = ConstantLedger(2.0, 2)
    assert ledger.bound() == pytest.approx(2.0 * 1.782 ** 2)
    assert ledger.contracted(3.0) == ConstantLedger(6.0, 1)
    assert ConstantLedger(1.0, 0).contracted(2.0) == ConstantLedger(2.0, 0)
    assert ledger.bound(Constants(kg_effective=1.7)) == pytest.approx(2.0 * 2.89)


def test_multilinear_form_value(trilinear):
    mu, vectors = trilinear
    assert mu.order == 3
    assert mu(*vectors) == pytest.approx(-2.5)
    with pytest.raises(DimensionMismatch):
        mu(*vectors[:2])


def test_multilinear_form_validation():
    with pytest.raises(DimensionMismatch):
        MultilinearForm(np.ones(3), linf_spaces(3))
    with pytest.raises(DimensionMismatch):
        MultilinearForm(np.ones((2, 2, 2)), linf_spaces(2, 2, 3))
    with pytest.raises(TensorTooLarge):
        MultilinearForm(np.ones((1,) * 9), linf_spaces(*(1,) * 9))


def test_multilinear_bilinear_round_trip(chsh):
    mu = MultilinearForm.from_bilinear(chsh)
    assert np.array_equal(mu.to_bilinear().coeffs, chsh.coeffs)
    assert multilinear_norm(mu).value == pytest.approx(2.0)


def test_partial_contract(trilinear):
    mu, vectors = trilinear
    once = partial_contract(mu, 2, vectors[1])
    assert isinstance(once, MultilinearForm)
    assert once.shape == (2, 2)
    twice = partial_contract(once, 1, vectors[0])
    assert isinstance(twice, np.ndarray)
    assert float(twice @ vectors[2]) == pytest.approx(-2.5)


@pytest.mark.parametrize("k", [0, 4])
def test_partial_contract_index_out_of_range(trilinear, k):
    mu, vectors = trilinear
    with pytest.raises(IndexOutOfRange):
        partial_contract(mu, k, vectors[0])


def test_partial_contract_tracks_ledger(trilinear):
    mu, vectors = trilinear
    mu = mu.with_ledger(ConstantLedger(2.0, 2))
    contracted = partial_contract(mu, 1, vectors[0])
    ledger = contracted.ledger
    assert (ledger.scale, ledger.exponent) == (4.0, 1)
    # diag(1, 2) on linf x linf
    assert ledger.recomputed == pytest.approx(3.0)
    assert ledger.recomputed <= ledger.bound(Constants())
    assert ledger.holds()


def test_partial_contract_flags_ledger_overrun(caplog):
    kg = Constants().kg_effective
    tensor = np.zeros((2, 2, 2))
    tensor[0, 0, 0] = kg ** 2
    mu = MultilinearForm(tensor, linf_spaces(2, 2, 2), ConstantLedger(1.0, 2))
    with caplog.at_level(logging.WARNING, logger="gkit.fubini"):
        contracted = partial_contract(mu, 1, [1, 1])
    ledger = contracted.ledger
    assert ledger.recomputed == pytest.approx(kg ** 2)
    assert ledger.bound(Constants()) == pytest.approx(kg)
    assert not ledger.holds()
    assert ledger.to_dict(Constants())["holds"] is False
    assert "exceeds tracked bound" in caplog.text


def test_partial_contract_ledger_skips_large_norms():
    mu = MultilinearForm(
        np.ones((2, 3, 3)), linf_spaces(2, 3, 3), ConstantLedger(1.0, 2)
    )
    contracted = partial_contract(mu, 1, [1, 0], enum_limit=2)
    assert contracted.ledger.recomputed is None
    assert contracted.ledger.holds()


def test_partial_contract_order_two_matches_partial_apply(chsh):
    e = np.array([0.5, -1.0])
    mu = MultilinearForm.from_bilinear(chsh)
    np.testing.assert_allclose(
        partial_contract(mu, 1, e), partial_apply(chsh, Side.LEFT_T, e)
    )


def test_partial_contract_delta_tensor():
    delta = np.zeros((3, 3, 3))
    for i in range(3):
        delta[i, i, i] = 1.0
    mu = MultilinearForm(delta, linf_spaces(3, 3, 3))
    contracted = partial_contract(mu, 1, [1, 0, 0])
    expected = np.zeros((3, 3))
    expected[0, 0] = 1.0
    np.testing.assert_array_equal(contracted.tensor, expected)


@pytest.mark.parametrize("sigma", list(itertools.permutations([1, 2, 3])))
def test_permutation_evaluate(trilinear, sigma):
    mu, vectors = trilinear
    assert permutation_evaluate(mu, sigma, vectors) == pytest.approx(-2.5)


@pytest.mark.parametrize("sigma", [(1, 1, 3), (1, 2), (0, 1, 2)])
def test_permutation_evaluate_invalid(trilinear, sigma):
    mu, vectors = trilinear
    with pytest.raises(InvalidPermutation):
        permutation_evaluate(mu, sigma, vectors)


@pytest.mark.parametrize("threads", [1, 4])
def test_permutation_sweep(rng, threads):
    dims = (3, 2, 4, 2)
    mu = MultilinearForm(rng.standard_normal(dims), tuple(SpaceSpec(d) for d in dims))
    vectors = [rng.standard_normal(d) for d in dims]
    sweep = permutation_sweep(mu, vectors, threads)
    assert len(sweep.orders) == 24
    assert sweep.spread <= 1e-12
    assert sweep.direct == pytest.approx(mu(*vectors))


def test_multi_tensor_element(trilinear):
    mu, vectors = trilinear
    elem = MultiTensorElement((tuple(vectors), tuple(vectors)), mu.spaces)
    assert multi_evaluate(mu, elem) == pytest.approx(-5.0)
    assert np.sum(mu.tensor * elem.tensor()) == pytest.approx(-5.0)
    assert elem.representation_cost() == pytest.approx(2 * 2 * 3 * 2)
    with pytest.raises(DimensionMismatch):
        MultiTensorElement((tuple(vectors[:2]),), mu.spaces)


def test_multilinear_norm_diag(trilinear):
    mu, vectors = trilinear
    cert = multilinear_norm(mu)
    assert cert.method is CertMethod.EXACT_SIGN_ENUM
    assert cert.value == pytest.approx(2.0)
    assert abs(mu(*cert.witness)) == pytest.approx(2.0)


@pytest.mark.parametrize("seed", range(3))
def test_multilinear_norm_matches_brute_force(seed):
    tensor = np.random.default_rng(seed).standard_normal((3, 2, 4))
    mu = MultilinearForm(tensor, linf_spaces(3, 2, 4))
    cert = multilinear_norm(mu)
    assert cert.value == pytest.approx(brute_force_multi(tensor), rel=1e-12)
    assert abs(mu(*cert.witness)) == pytest.approx(cert.value, rel=1e-12)


def test_multilinear_norm_l1_reduction(rng):
    tensor = rng.standard_normal((3, 2, 2))
    mu = MultilinearForm(tensor, (space("l1", 3),) + linf_spaces(2, 2))
    cert = multilinear_norm(mu)
    assert cert.exact
    expected = max(brute_force_multi(tensor[i]) for i in range(3))
    assert cert.value == pytest.approx(expected, rel=1e-12)


def test_multilinear_norm_rank_one_l2(rng):
    a, b, c = rng.standard_normal(3), rng.standard_normal(4), rng.standard_normal(2)
    tensor = np.multiply.outer(np.multiply.outer(a, b), c)
    mu = MultilinearForm(tensor, (SpaceSpec(3), SpaceSpec(4), SpaceSpec(2)))
    cert = multilinear_norm(mu)
    expected = np.linalg.norm(a) * np.linalg.norm(b) * np.linalg.norm(c)
    assert cert.method is CertMethod.SAMPLED_DUAL
    assert cert.lower == pytest.approx(expected, rel=1e-9)
    assert cert.upper == pytest.approx(expected, rel=1e-9)


def test_multilinear_norm_enum_limit(rng):
    tensor = rng.standard_normal((3, 3, 3))
    mu = MultilinearForm(tensor, linf_spaces(3, 3, 3))
    with pytest.raises(EnumLimitExceeded) as exc_info:
        multilinear_norm(mu, enum_limit=3)
    assert exc_info.value.dimension == 6
    exact = multilinear_norm(mu).value
    cert = multilinear_norm(mu, enum_limit=3, exact=False)
    assert cert.lower <= exact + 1e-12 <= cert.upper + 2e-12


def test_multilinear_norm_zero():
    mu = MultilinearForm(np.zeros((2, 2, 2)), linf_spaces(2, 2, 2))
    assert multilinear_norm(mu).value == 0.0


def test_is_multi_grothendieck(trilinear):
    mu, _ = trilinear
    member, cert = is_multi_grothendieck(mu)
    assert member
    assert cert.value == pytest.approx(2.0)
    assert not is_multi_grothendieck(mu, scale=0.5)[0]


@pytest.mark.parametrize(
    "tag, method", [("l2", CertMethod.EXACT_SVD), ("linf", CertMethod.EXACT_SIGN_ENUM)]
)
def test_multilinear_norm_zero_method(tag, method):
    mu = MultilinearForm(np.zeros((2, 3, 2)), tuple(space(tag, d) for d in (2, 3, 2)))
    cert = multilinear_norm(mu)
    assert cert.value == 0.0
    assert cert.method is method
