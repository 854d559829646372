import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_image(rng, h=16, w=16, c=3):
    return rng.random((h, w, c))


def gray(value, h=16, w=16):
    return np.full((h, w), float(value))


def flat_image(value, h=16, w=16, c=3):
    return np.full((h, w, c), float(value))
