import numpy as np
import pytest

from eprb.rng import RandomStream, as_generator


def test_same_seed_same_sequence():
    assert np.array_equal(RandomStream(5).generator().random(10), RandomStream(5).generator().random(10))


def test_substreams_differ():
    s = RandomStream(5)
    a = s.substream(0).random(1000)
    b = s.substream(1).random(1000)
    assert not np.array_equal(a, b)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.15


def test_substream_reproducible():
    assert np.array_equal(RandomStream(9).substream(3).random(5), RandomStream(9).substream(3).random(5))


def test_counter_offsets_the_stream():
    assert not np.array_equal(RandomStream(1, 0).generator().random(4), RandomStream(1, 7).generator().random(4))


def test_validation():
    with pytest.raises(ValueError):
        RandomStream(-1)
    with pytest.raises(ValueError):
        RandomStream(1, 1 << 128)
    with pytest.raises(TypeError):
        as_generator("seed")
