import functools

import pytest

from gagliardo.geometry import koch_snowflake, make_polygon
from gagliardo.whitney import decompose

UNIT_SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]


@functools.lru_cache(maxsize=None)
def square():
    return make_polygon(UNIT_SQUARE)


@functools.lru_cache(maxsize=None)
def koch(level: int):
    return koch_snowflake(level)


@functools.lru_cache(maxsize=None)
def square_decomposition(depth: int):
    return decompose(square(), depth)


@functools.lru_cache(maxsize=None)
def koch_decomposition(level: int, depth: int):
    return decompose(koch(level), depth)


@pytest.fixture
def unit_square():
    return square()
