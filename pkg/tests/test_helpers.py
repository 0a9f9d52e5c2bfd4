import itertools
from unittest import mock

import numpy as np
import pytest

from gkit import helpers
from gkit.exceptions import ParseError
from gkit.helpers import (
    best_of,
    blocks,
    parallel_map,
    pattern_count,
    random_sign_matrix,
    relative_spread,
    setup_logger,
    sign,
    sign_enumerate,
    sign_patterns,
    substream,
)


def test_regex_search_no_match():
    with pytest.raises(ParseError):
        helpers.regex_search("^a$", "", group=0)


def test_regex_search():
    assert helpers.regex_search(r"^d=(\d+)$", "d=4", group=1) == "4"


@mock.patch("gkit.helpers.logging")
def test_setup_logger(logging):
    # Given
    logger = logging.getLogger.return_value
    # When
    setup_logger(20)
    # Then
    logging.getLogger.assert_called_with("gkit")
    logger.addHandler.assert_called()
    logger.setLevel.assert_called_with(20)


@mock.patch("gkit.helpers.logging")
def test_setup_logger_with_file(logging):
    logger = logging.getLogger.return_value
    setup_logger(10, log_filename="/tmp/gkit.log")
    logging.FileHandler.assert_called_with("/tmp/gkit.log")
    assert logger.addHandler.call_count == 2


def test_substream_is_reproducible():
    a = substream(7, "sdp", 3).standard_normal(4)
    b = substream(7, "sdp", 3).standard_normal(4)
    assert np.array_equal(a, b)


def test_substreams_are_independent():
    a = substream(7, "sdp", 3).standard_normal(4)
    assert not np.array_equal(a, substream(7, "sdp", 4).standard_normal(4))
    assert not np.array_equal(a, substream(8, "sdp", 3).standard_normal(4))


def test_sign_patterns_cover_half_cube():
    patterns = sign_patterns(3, 0, pattern_count(3))
    assert patterns.shape == (4, 3)
    assert (patterns[:, 0] == 1).all()
    rows = {tuple(r) for r in patterns}
    assert rows == {(1.0,) + p for p in itertools.product([1.0, -1.0], repeat=2)}


def test_pattern_count():
    assert pattern_count(1) == 1
    assert pattern_count(5) == 16


def test_blocks():
    assert blocks(5, 2) == [(0, 2), (2, 4), (4, 5)]
    assert blocks(0, 2) == []


@pytest.mark.parametrize("threads", [1, 3])
def test_parallel_map_keeps_order(threads):
    assert parallel_map(lambda x: x * x, range(10), threads) == [x * x for x in range(10)]


def test_best_of_breaks_ties_by_index():
    assert best_of([(1.0, 3, "a"), (2.0, 5, "b"), (2.0, 1, "c")]) == (2.0, 1, "c")
    with pytest.raises(ValueError):
        best_of([])


@pytest.mark.parametrize("block", [1, 2, 1 << 14])
def test_sign_enumerate_independent_of_blocks(block):
    a = np.array([[1.0, 2.0], [-3.0, 1.0], [0.5, -1.0]])
    value, pattern = sign_enumerate(
        lambda s: np.abs(s @ a).sum(axis=-1), 3, threads=2, block=block
    )
    expected = max(
        np.abs(np.array(s) @ a).sum() for s in itertools.product([1.0, -1.0], repeat=3)
    )
    assert value == expected
    assert pattern[0] == 1.0
    assert np.abs(pattern @ a).sum() == value


def test_sign_maps_zero_to_plus():
    assert sign(np.array([-2.0, 0.0, 3.0])).tolist() == [-1.0, 1.0, 1.0]


def test_random_sign_matrix():
    a = random_sign_matrix(3, 5, 0, "ratio_sweep", 1)
    assert a.shape == (3, 5)
    assert set(np.unique(a)) <= {-1.0, 1.0}
    assert np.array_equal(a, random_sign_matrix(3, 5, 0, "ratio_sweep", 1))


def test_relative_spread():
    assert relative_spread([1.0, 1.5, 2.0], 4.0) == 0.25
    assert relative_spread([], 1.0) == 0.0
    assert relative_spread([0.0, 0.0], 0.0) == 0.0
