"""Property-based checks of the algebraic core."""
import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from schottkyflow.coding import Word
from schottkyflow.geometry import MoebiusMap, apply, derivative, wrap_angle

finite = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False,
                   allow_infinity=False)


@st.composite
def moebius_maps(draw):
    entries = [complex(draw(finite), draw(finite)) for _ in range(4)]
    a, b, c, d = entries
    assume(abs(a * d - b * c) > 1e-3)
    return MoebiusMap(a, b, c, d)


@st.composite
def points_off_pole(draw, map_strategy):
    m = draw(map_strategy)
    z = complex(draw(finite), draw(finite))
    pole = m.pole()
    if pole is not None and abs(z - pole) < 0.2:
        z = pole + 0.5 + 0.5j
    return m, z


@settings(max_examples=200, deadline=None)
@given(points_off_pole(moebius_maps()))
def test_inverse_undoes_apply(mz):
    m, z = mz
    w = apply(m, z)
    inv = m.inverse()
    p = inv.pole()
    if p is not None and abs(w - p) < 1e-6:
        return
    assert abs(apply(inv, w) - z) <= 1e-7 * max(1.0, abs(z))


@settings(max_examples=200, deadline=None)
@given(moebius_maps(), moebius_maps())
def test_composition_associates_with_matrix_product(m1, m2):
    left = m1.compose(m2)
    assert abs(left.det() - 1.0) < 1e-9
    # projective equality with the reversed sign
    flipped = MoebiusMap(-left.a, -left.b, -left.c, -left.d)
    assert left == flipped


@settings(max_examples=200, deadline=None)
@given(points_off_pole(moebius_maps()), moebius_maps())
def test_chain_rule(mz, m1):
    m2, z = mz
    w = apply(m2, z)
    p1 = m1.pole()
    if p1 is not None and abs(w - p1) < 0.05:
        return
    lhs = derivative(m1.compose(m2), z)
    rhs = derivative(m1, w) * derivative(m2, z)
    assert abs(lhs - rhs) <= 1e-6 * max(1.0, abs(rhs))


@settings(max_examples=500, deadline=None)
@given(st.floats(min_value=-50.0, max_value=50.0, allow_nan=False))
def test_wrap_angle_is_a_modular_identity(x):
    w = wrap_angle(x)
    assert -math.pi < w <= math.pi
    assert math.isclose(math.cos(w), math.cos(x), abs_tol=1e-9)
    assert math.isclose(math.sin(w), math.sin(x), abs_tol=1e-9)


@settings(max_examples=300, deadline=None)
@given(st.integers(min_value=2, max_value=4),
       st.lists(st.integers(min_value=0, max_value=7), min_size=1, max_size=12))
def test_word_admissibility_matches_involution(rank, raw):
    symbols = tuple(s % (2 * rank) for s in raw)
    forbidden = any(t == (s + rank) % (2 * rank)
                    for s, t in zip(symbols, symbols[1:]))
    try:
        Word(symbols, rank)
        assert not forbidden
    except ValueError:
        assert forbidden
