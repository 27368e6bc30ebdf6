import pytest

from fkdv.waves import ModelParams, solve_wave


@pytest.fixture(scope="session")
def wave_cache():
    cache = {}

    def get(alpha, p, a, b=0.0, N=32):
        key = (alpha, p, a, b, N)
        if key not in cache:
            cache[key] = solve_wave(ModelParams(alpha, p), a, b, N=N)
        return cache[key]

    return get
