import pytest

from zfkwave.shooting import build_profile, find_min_speed


@pytest.fixture(scope="session")
def cbar():
    cache = {}

    def get(eps):
        if eps not in cache:
            cache[eps] = find_min_speed(eps, refine=False).cbar
        return cache[eps]

    return get


@pytest.fixture(scope="session")
def profiles(cbar):
    cache = {}

    def get(c, eps):
        key = (c, eps)
        if key not in cache:
            cache[key] = build_profile(cbar(eps) if c == "cbar" else c, eps)
        return cache[key]

    return get
