import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qjwork.rng import RngStream


def numpy_philox_block(seed, stream, block):
    # numpy bumps its 256-bit counter (with carry) before producing output
    c = (block + (stream << 64) - 1) % 2**256
    words = np.array([(c >> (64 * k)) & (2**64 - 1) for k in range(4)], dtype=np.uint64)
    bg = np.random.Philox(counter=words, key=np.array([seed, 0], dtype=np.uint64))
    return bg.random_raw(4)


def to_uniform(raw):
    return (np.asarray(raw, dtype=np.uint64) >> np.uint64(11)) * 2.0**-53


@pytest.mark.parametrize("seed,stream", [(0, 0), (1, 0), (12345, 7), (2**52 + 3, 2**40)])
def test_matches_numpy_philox(seed, stream):
    rng = RngStream(seed, stream)
    draws = rng.uniforms(12)
    expected = np.concatenate([to_uniform(numpy_philox_block(seed, stream, b))
                               for b in range(3)])
    np.testing.assert_array_equal(draws, expected)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**53 - 1), stream=st.integers(0, 2**63),
       counter=st.integers(0, 1000))
def test_random_access_equals_sequential(seed, stream, counter):
    seq = RngStream(seed, stream).uniforms(counter + 3)
    jumped = RngStream(seed, stream, counter=counter).uniforms(3)
    np.testing.assert_array_equal(seq[counter:], jumped)


def test_uniform_range_and_moments():
    u = RngStream(3, 11).uniforms(200_000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 5 * np.sqrt(1 / 12 / u.size)
    assert abs(u.var() - 1 / 12) < 1e-3


def test_streams_differ():
    a = RngStream(5, 0).uniforms(16)
    b = RngStream(5, 1).uniforms(16)
    assert not np.any(a == b)


def test_counter_advances():
    rng = RngStream(9, 2)
    first = rng.uniform()
    assert rng.counter == 1
    rng.uniforms(5)
    assert rng.counter == 6
    assert RngStream(9, 2).uniform() == first
