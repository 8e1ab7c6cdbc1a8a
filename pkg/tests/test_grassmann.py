import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fermitree.exterior import permutation_sign
from fermitree.grassmann import (GrassmannPoly, Torus, antisymmetrize, build_interaction, fourier_kernel,
                                 fourier_npoint, free_energy_oracle, gaussian_integral, inverse_fourier_kernel,
                                 pfaffian, pfaffian_elimination, pfaffian_matching, product, random_even_poly)


def skew(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return a - a.T


def test_pfaffian_small_cases():
    assert pfaffian(np.zeros((0, 0))) == 1
    assert pfaffian(np.array([[0, 2.5], [-2.5, 0]])) == pytest.approx(2.5)
    a = skew(np.random.default_rng(0), 4)
    ref = a[0, 1] * a[2, 3] - a[0, 2] * a[1, 3] + a[0, 3] * a[1, 2]
    assert pfaffian(a) == pytest.approx(ref)
    assert pfaffian(skew(np.random.default_rng(1), 5)) == 0


def test_pfaffian_rejects_non_skew():
    with pytest.raises(ValueError):
        pfaffian(np.ones((2, 2)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6))
def test_pfaffian_square_is_determinant(seed, half):
    a = skew(np.random.default_rng(seed), 2 * half)
    pf = pfaffian_elimination(a)
    det = np.linalg.det(a)
    assert abs(pf ** 2 - det) <= 1e-9 * max(1.0, abs(det))
    if half <= 4:
        assert abs(pf - pfaffian_matching(a)) <= 1e-10 * max(1.0, abs(pf))


def test_product_nilpotent_and_ordered():
    g = lambda i: GrassmannPoly.generator(4, i)
    assert len(product(g(0), g(0))) == 0
    out = product(product(g(0), g(1)), product(g(2), g(3)))
    assert out.allclose(GrassmannPoly.monomial(4, [0, 1, 2, 3]))
    assert product(g(1), g(0)).allclose(GrassmannPoly.monomial(4, [0, 1], -1.0))


def test_gaussian_integral_relations():
    rng = np.random.default_rng(2)
    c = skew(rng, 4)
    assert gaussian_integral(GrassmannPoly.monomial(4, [0, 1]), c) == pytest.approx(c[0, 1])
    assert gaussian_integral(GrassmannPoly.monomial(4, [0, 1, 2]), c) == 0
    four = gaussian_integral(GrassmannPoly.monomial(4, [0, 1, 2, 3]), c)
    assert four == pytest.approx(c[0, 1] * c[2, 3] - c[0, 2] * c[1, 3] + c[0, 3] * c[1, 2])
    assert gaussian_integral(GrassmannPoly.constant(4, 3.0), c) == pytest.approx(3.0)


def test_free_energy_vanishes_for_zero_covariance():
    w = random_even_poly(np.random.default_rng(3), 6, 4, 5)
    assert np.allclose(free_energy_oracle(w, np.zeros((6, 6)), 3), 0)


def test_free_energy_of_a_bilinear():
    # log(1 + g c) for W = psi_0 psi_1
    c = skew(np.random.default_rng(4), 2)
    w = GrassmannPoly.monomial(2, [0, 1])
    x = c[0, 1]
    assert np.allclose(free_energy_oracle(w, c, 3), [x, -x ** 2 / 2, x ** 3 / 3])


def test_delta_kernel_transform_is_flat():
    t = Torus((6,))
    pos = np.zeros(6)
    pos[0] = 1
    assert np.allclose(fourier_kernel(pos, t), 1)


def test_fourier_roundtrip_and_convention():
    t = Torus((4, 3))
    rng = np.random.default_rng(5)
    f = rng.normal(size=(2, 2, t.sites)) + 1j * rng.normal(size=(2, 2, t.sites))
    assert np.allclose(inverse_fourier_kernel(fourier_kernel(f, t), t), f, atol=1e-12)
    x = t.coords
    k = t.index((1, 2))
    p = 2 * np.pi * np.array(t.vector(k)) / np.array(t.dims)
    direct = (f[0, 1] * np.exp(1j * x @ p)).sum()
    assert fourier_kernel(f, t)[0, 1, k] == pytest.approx(direct)


def test_antisymmetric_kernel_symmetry():
    t = Torus((5,))
    rng = np.random.default_rng(6)
    f = rng.normal(size=(2, 2, 5))
    f = f - np.transpose(f, (1, 0, 2))[:, :, t.neg_table]
    hat = fourier_kernel(f, t)
    assert np.allclose(hat, -np.transpose(hat, (1, 0, 2))[:, :, t.neg_table])


def test_antisymmetrize_examples():
    rng = np.random.default_rng(7)
    f = antisymmetrize(rng.normal(size=(3, 3, 3)))
    assert np.allclose(antisymmetrize(f), f)
    sym = rng.normal(size=(4, 4))
    assert np.allclose(antisymmetrize(sym + sym.T), 0)
    ind = np.zeros((3, 3))
    ind[0, 2] = 1
    out = antisymmetrize(ind)
    assert out[0, 2] == 0.5 and out[2, 0] == -0.5


def test_antisymmetrize_callable_matches_array():
    rng = np.random.default_rng(8)
    f = rng.normal(size=(3, 3, 3))
    g = antisymmetrize(lambda a, b, c: f[a, b, c])
    arr = antisymmetrize(f)
    for idx in itertools.product(range(3), repeat=3):
        assert g(*idx) == pytest.approx(arr[idx])


def test_fourier_npoint_matches_direct_sum():
    t = Torus((3,))
    rng = np.random.default_rng(9)
    f = rng.normal(size=(3, 3))
    hat = fourier_npoint(f, t)
    x = np.arange(3)
    ref = sum(f[a, b] * np.exp(2j * np.pi * (1 * a + 2 * b) / 3) for a in x for b in x)
    assert hat[1, 2] == pytest.approx(ref)


def test_interaction_kernel():
    t = Torus((4,))
    assert len(build_interaction(np.zeros(4), t).coeffs) == 0
    v = np.zeros(4)
    v[0] = 1.0
    w = build_interaction(v, t)
    assert len(w.coeffs) == 4
    assert np.allclose(w.coeffs, -0.5)
    # a contact potential gives a kernel independent of the momenta (up to the spin pattern)
    vals = [w.evaluate(np.array([[a, b, c, (-a - b - c) % 4]]), np.array([[1, 3, 0, 2]]))[0]
            for a, b, c in itertools.product(range(4), repeat=3)]
    assert np.allclose(vals, vals[0])
    with pytest.raises(ValueError):
        build_interaction(np.array([0, 1.0, 0, 0]), t)
