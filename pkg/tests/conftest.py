import random

import pytest


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)


def seeded(seed: int) -> random.Random:
    return random.Random(seed)
