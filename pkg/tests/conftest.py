import random

import pytest
from hypothesis import HealthCheck, settings

from expsum.charsum import MonicPoly

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_poly(rng: random.Random, d: int, p: int, a: int = 1, constant: bool = True) -> MonicPoly:
    coeffs = [tuple(rng.randrange(p) for _ in range(a)) for _ in range(d)]
    if not constant:
        coeffs[0] = (0,) * a
    return MonicPoly(p, a, tuple(coeffs))


@pytest.fixture
def rng():
    return random.Random(20261014)
