import numpy as np
import pytest

from ccz_distill.decoder import LookupDecoder, NullDecoder


def _dec(max_weight=2):
    # Three faults on a 3-bit repetition-like syndrome; fault 0 flips the observable.
    out = np.array([[1, 0, 0], [1, 1, 0], [0, 1, 1]], dtype=bool)
    obs = np.array([[1], [0], [0]], dtype=bool)
    return LookupDecoder(out, obs, np.array([0.01, 0.01, 0.01]), max_weight)


def test_weight_one_lookup():
    d = _dec()
    got = d.decode(np.array([[1, 0, 0], [1, 1, 0], [0, 0, 0]], dtype=bool))
    assert got[:, 0].tolist() == [True, False, False]


def test_weight_two_lookup():
    d = _dec()
    # [0,1,0] = fault0 ^ fault1 (obs 1); [1,0,1] = fault1 ^ fault2 (obs 0)
    got = d.decode(np.array([[0, 1, 0], [1, 0, 1]], dtype=bool))
    assert got[:, 0].tolist() == [True, False]
    assert _dec(1).decode(np.array([[0, 1, 0]], dtype=bool))[0, 0] == False  # unknown


def test_min_weight_preferred():
    out = np.array([[1, 0], [0, 1], [1, 1]], dtype=bool)
    obs = np.array([[0], [0], [1]], dtype=bool)
    # [1,1] reachable at weight 1 (obs 1) and weight 2 (obs 0): weight 1 wins.
    d = LookupDecoder(out, obs, np.array([1e-6, 0.1, 0.1]))
    assert d.decode(np.array([[1, 1]], dtype=bool))[0, 0]


def test_probability_tiebreak():
    out = np.array([[1], [1]], dtype=bool)
    obs = np.array([[0], [1]], dtype=bool)
    assert LookupDecoder(out, obs, np.array([0.1, 0.3])).decode(np.array([[1]], dtype=bool))[0, 0]
    assert not LookupDecoder(out, obs, np.array([0.3, 0.1])).decode(np.array([[1]], dtype=bool))[0, 0]


def test_bad_weight():
    with pytest.raises(ValueError):
        _dec(3)


def test_null_decoder():
    assert not NullDecoder(3).decode(np.ones((4, 5), dtype=bool)).any()
    assert NullDecoder(3).decode(np.ones((4, 5), dtype=bool)).shape == (4, 3)
