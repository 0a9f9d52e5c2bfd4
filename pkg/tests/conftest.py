"""Reusable dependency injected testing components."""
import os

import numpy as np
import pytest

from gkit import parser
from gkit.spaces import BilinearForm, SpaceSpec


def mock_path(filename):
    """Absolute path of a file under tests/mocks."""
    cur_fp = os.path.realpath(__file__)
    cur_dir = os.path.dirname(cur_fp)
    return os.path.join(cur_dir, "mocks", filename)


def load_form_file(filename):
    return parser.load_form(mock_path(filename))


@pytest.fixture
def chsh():
    """The 2x2 CHSH form [[1, 1], [1, -1]] on (linf, linf)."""
    return load_form_file("chsh.json")


@pytest.fixture
def zero_form():
    return load_form_file("zero.json")


@pytest.fixture
def diag_form():
    """diag(3, 1) on (l2, l2)."""
    return load_form_file("diag.json")


@pytest.fixture
def rank_one_signs():
    """Sign matrix u v^T with u = (1, -1), v = (1, -1, 1) on (linf, linf)."""
    return load_form_file("rank1.json")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def l2_pair():
    def make(n, m):
        return SpaceSpec(n), SpaceSpec(m)

    return make


@pytest.fixture
def random_form(rng):
    """Factory for dense Gaussian forms on the requested norm tags."""

    def make(n, m, e="l2", f="l2"):
        weights_e = rng.uniform(0.5, 2.0, n) if e == "wl2" else None
        weights_f = rng.uniform(0.5, 2.0, m) if f == "wl2" else None
        return BilinearForm.from_matrix(
            rng.standard_normal((n, m)), e, f, weights_e, weights_f
        )

    return make


@pytest.fixture
def mock_file():
    """Resolver for files under tests/mocks."""
    return mock_path


@pytest.fixture
def trilinear():
    """diag(1, 1) of order three on linf^3 with its sample vectors."""
    obj = parser.parse_json(parser.read_text(mock_path("trilinear.json")))
    return parser.multilinear_from_dict(obj), parser.vectors_from_dict(obj)
