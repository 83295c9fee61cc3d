import numpy as np
import pytest

from scanspectra.common.exceptions import DomainError, UnsupportedError
from scanspectra.markov.statespace import (Distribution, ProductSpace, decode_state, encode_state,
                                           normalize_weights, tv_distance)


def test_index_order():
    space = ProductSpace([2, 3])
    assert space.total_states == 6
    assert space.n == 2
    # Site 0 is the least significant digit
    assert encode_state(space, (1, 0)) == 1
    assert encode_state(space, (0, 1)) == 2
    assert encode_state(space, (1, 2)) == 5
    assert [decode_state(space, i) for i in range(6)] == [(0, 0), (1, 0), (0, 1), (1, 1), (0, 2), (1, 2)]
    assert space.states().tolist() == [[0, 0], [1, 0], [0, 1], [1, 1], [0, 2], [1, 2]]
    assert space.site_values(1).tolist() == [0, 0, 1, 1, 2, 2]


def test_encode_decode_all_states():
    space = ProductSpace([3, 1, 2, 4])
    for index, state in enumerate(space.states()):
        assert encode_state(space, state) == index
        assert decode_state(space, index) == tuple(state)


def test_bad_spaces():
    with pytest.raises(DomainError):
        ProductSpace([])

    with pytest.raises(DomainError):
        ProductSpace([2, 0])

    with pytest.raises(UnsupportedError):
        ProductSpace([2] * 20, state_cap=2 ** 19)

    # The cap check is exact integer arithmetic
    assert ProductSpace([2] * 19, state_cap=2 ** 19).total_states == 2 ** 19

    space = ProductSpace([2, 2])
    with pytest.raises(DomainError):
        encode_state(space, (2, 0))

    with pytest.raises(DomainError):
        encode_state(space, (0,))

    with pytest.raises(DomainError):
        decode_state(space, 4)

    with pytest.raises(DomainError):
        space.check_site(2)

    with pytest.raises(AttributeError):
        space.total_states = 5


def test_distribution_support():
    space = ProductSpace([2, 2])
    dist = Distribution(space, [0.5, 0.25, 0.25, 0.0])
    assert dist.support.tolist() == [0, 1, 2]
    assert dist.weights.tolist() == [0.5, 0.25, 0.25]
    assert dist.pi_min == 0.25

    with pytest.raises(ValueError):
        dist.probs[0] = 1.0


def test_distribution_validation():
    space = ProductSpace([2])
    with pytest.raises(DomainError):
        Distribution(space, [0.5, 0.6])

    with pytest.raises(DomainError):
        Distribution(space, [1.5, -0.5])

    with pytest.raises(DomainError):
        Distribution(space, [1.0])

    with pytest.raises(DomainError):
        Distribution(space, [np.nan, 1.0])


def test_normalize_weights():
    space = ProductSpace([3])
    dist = normalize_weights(space, [1, 1, 2])
    assert dist.probs.tolist() == [0.25, 0.25, 0.5]

    with pytest.raises(DomainError):
        normalize_weights(space, [0, 0, 0])

    with pytest.raises(DomainError):
        normalize_weights(space, [1, -1, 2])

    with pytest.raises(DomainError):
        normalize_weights(space, [1, np.inf, 2])


def test_tv_distance():
    assert tv_distance([1, 0], [0, 1]) == 1.0
    assert tv_distance([0.5, 0.5], [0.5, 0.5]) == 0.0
    assert tv_distance([0.25, 0.75], [0.5, 0.5]) == pytest.approx(0.25)

    with pytest.raises(DomainError):
        tv_distance([1.0], [0.5, 0.5])

    # Both sides must be probability vectors
    with pytest.raises(DomainError, match="sums to"):
        tv_distance([0.5, 0.6], [0.5, 0.5])

    with pytest.raises(DomainError, match="negative"):
        tv_distance([0.5, 0.5], [1.5, -0.5])

    with pytest.raises(DomainError):
        tv_distance([np.nan, 1.0], [0.5, 0.5])

    assert tv_distance([0.5, 0.5 + 1e-9], [1.0, 0.0], tolerance=1e-6) == pytest.approx(0.5, abs=1e-8)
