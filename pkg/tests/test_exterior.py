import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fermitree.exterior import (Form, interior_product, lp_norm, permutation_sign, random_form, shuffle_bound,
                                top_integral, wedge)


def e(size, *idx, coeff=1.0):
    return Form.basis(size, *idx, coeff=coeff)


def test_repeated_index_vanishes():
    assert len(wedge(e(3, 0), e(3, 0))) == 0


def test_transposition_sign():
    assert wedge(e(3, 1), e(3, 0)).allclose(e(3, 0, 1) * -1)


def test_disjoint_supports_multiply_coefficients():
    out = wedge(e(4, 0, 1, coeff=2.0), e(4, 2, coeff=3.0))
    assert out.allclose(e(4, 0, 1, 2, coeff=6.0))


def test_lp_norms():
    assert lp_norm(e(3, 0) + e(3, 1), 2) == pytest.approx(math.sqrt(2))
    assert lp_norm(e(3, 0, 1, coeff=2.0), 1) == pytest.approx(2)
    f = random_form(np.random.default_rng(0), 5, 2)
    assert lp_norm(f, math.inf) == pytest.approx(max(abs(c) for c in f.terms.values()))
    with pytest.raises(ValueError):
        lp_norm(f, 0.5)


def test_top_integral():
    assert top_integral(e(4, 0, 1, 2, 3)) == 1
    assert top_integral(e(4, 0, 1, 2)) == 0
    assert top_integral(Form.from_tuple(4, (1, 0, 2, 3))) == -1


def test_interior_product_examples():
    assert interior_product(e(3, 0), e(3, 0, 1)).allclose(e(3, 1))
    assert len(interior_product(e(3, 2), e(3, 0, 1))) == 0
    v = e(3, 0) + e(3, 1)
    x = e(3, 0)
    anti = wedge(v, interior_product(v, x)) + interior_product(v, wedge(v, x))
    assert anti.allclose(x * 2)


def test_shuffle_bound_examples():
    assert shuffle_bound((1, 1), 2) == pytest.approx(math.sqrt(2))
    assert shuffle_bound((2, 1), 2) == pytest.approx(math.sqrt(3))
    assert shuffle_bound((1, 1), 1) == 1


def _dense(f: Form, k: int):
    """Antisymmetric dense tensor of a degree-k form, for an independent wedge oracle."""
    t = np.zeros((f.size,) * k, dtype=complex)
    for mask, c in f.terms.items():
        idx = [i for i in range(f.size) if mask >> i & 1]
        for perm in itertools.permutations(range(k)):
            t[tuple(idx[p] for p in perm)] = permutation_sign(perm) * c
    return t


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 3), st.integers(0, 3))
def test_wedge_matches_antisymmetrized_tensor_product(seed, ka, kb):
    rng = np.random.default_rng(seed)
    size = 6
    a, b = random_form(rng, size, ka), random_form(rng, size, kb)
    ab = wedge(a, b)
    k = ka + kb
    ta, tb = _dense(a, ka), _dense(b, kb)
    outer = np.multiply.outer(ta, tb) if k else ta * tb
    for combo in itertools.combinations(range(size), k):
        # coefficient of e_combo is the shuffle sum over splits of combo
        ref = 0j
        for left in itertools.combinations(range(k), ka):
            right = [i for i in range(k) if i not in left]
            sign = permutation_sign(list(left) + right)
            ref += sign * outer[tuple(combo[i] for i in left) + tuple(combo[i] for i in right)]
        assert abs(ab.coefficient(combo) - ref) < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(1.0, 8.0))
def test_submultiplicativity(seed, p):
    rng = np.random.default_rng(seed)
    ka, kb = rng.integers(0, 4, size=2)
    a, b = random_form(rng, 8, int(ka), 0.6), random_form(rng, 8, int(kb), 0.6)
    lhs = lp_norm(wedge(a, b), p)
    assert lhs <= shuffle_bound((ka, kb), p) * lp_norm(a, p) * lp_norm(b, p) * (1 + 1e-12) + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_rank_one_contraction(seed):
    rng = np.random.default_rng(seed)
    size = 7
    vs = [Form.one_form(rng.normal(size=size) + 1j * rng.normal(size=size)) for _ in range(rng.integers(1, 4))]
    a = wedge(*vs)
    b = random_form(rng, size, int(rng.integers(0, 4)))
    assert lp_norm(wedge(a, b)) <= lp_norm(a) * lp_norm(b) * (1 + 1e-12) + 1e-12
