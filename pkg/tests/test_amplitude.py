import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fermitree.amplitude import (AmplitudeProblem, LineTable, antisymmetrized_direct_kernel, apply_c, apply_w,
                                 fourier_decompose, fundamental_form, ibp_apply, ibp_identity, kernel_hat_A,
                                 oracle_direct_alpha, random_external, recurse_alpha, tree_amplitude_value)
from fermitree.exterior import Form, lp_norm, random_form, wedge
from fermitree.grassmann import Covariance, Torus, random_covariance, random_kernel
from fermitree.trees import Tree, enumerate_trees, path_tree, star_tree

SPINS2 = ("up", "down")


def make_problem(rng, tree, n, L=4, spins=("up",), root=1, terms=2):
    torus = Torus((L,))
    cov = random_covariance(rng, torus, spins)
    kernels = [random_kernel(rng, torus, spins, a, terms) for a in n]
    p = AmplitudeProblem(tree, root, n, cov, kernels)
    return p.with_external(random_external(rng, p))


def random_sigma(rng, p):
    return tuple(int(v) for v in rng.integers(0, p.nspin, p.spin_variable_count))


def test_recursion_matches_oracle_on_two_vertices():
    rng = np.random.default_rng(0)
    p = make_problem(rng, path_tree(2), (2, 2))
    for sigma in p.spin_assignments():
        assert recurse_alpha(p, sigma).allclose(oracle_direct_alpha(p, sigma), atol=1e-10)


@pytest.mark.parametrize("tree, n", [(path_tree(3), (2, 3, 3)), (star_tree(3), (3, 2, 2)),
                                     (path_tree(3), (3, 2, 3))])
def test_recursion_matches_oracle_on_three_vertices(tree, n):
    rng = np.random.default_rng(1)
    p = make_problem(rng, tree, n, L=8, spins=SPINS2)
    for _ in range(5):
        sigma = random_sigma(rng, p)
        assert recurse_alpha(p, sigma).allclose(oracle_direct_alpha(p, sigma), atol=1e-10)


def test_kernel_is_root_independent_and_matches_antisymmetrization():
    rng = np.random.default_rng(2)
    p = make_problem(rng, star_tree(4, center=2), (2, 3, 2, 3), L=8, spins=SPINS2)
    ref = antisymmetrized_direct_kernel(p)
    for root in range(1, 5):
        assert abs(kernel_hat_A(p.with_root(root)) - ref) < 1e-10 * max(1, abs(ref))


def test_nonconserving_momenta_give_zero():
    rng = np.random.default_rng(3)
    p = make_problem(rng, path_tree(2), (2, 3), L=8)
    ext = list(p.external)
    ext[0] = ((ext[0][0] + 1) % 8, ext[0][1])
    q = p.with_external(ext)
    # the delta sits in the kernel; the form itself is still defined
    assert kernel_hat_A(q) == 0
    assert antisymmetrized_direct_kernel(q) == 0
    sigma = random_sigma(rng, q)
    assert recurse_alpha(q, sigma).allclose(oracle_direct_alpha(q, sigma), atol=1e-10)


def test_zero_covariance_gives_zero_form():
    rng = np.random.default_rng(4)
    p = make_problem(rng, path_tree(2), (2, 2))
    zero = Covariance(p.torus, p.covariance.spins, np.zeros_like(p.covariance.table))
    q = AmplitudeProblem(p.tree, p.root, p.n, zero, p.kernels, p.external)
    assert len(recurse_alpha(q, (0,) * q.spin_variable_count)) == 0


def test_single_vertex_is_plain_leg_sum():
    rng = np.random.default_rng(5)
    p = make_problem(rng, Tree(1, ()), (4,), L=4)
    sigma = (0,) * p.spin_variable_count
    assert recurse_alpha(p, sigma).allclose(oracle_direct_alpha(p, sigma), atol=1e-12)


def test_fundamental_form_single_spin_is_all_ones():
    rng = np.random.default_rng(6)
    p = make_problem(rng, path_tree(2), (3, 3))
    alpha = fundamental_form(p, (0,) * p.spin_variable_count, 0)
    assert np.allclose(alpha.one_form_vector(), 1)


@pytest.mark.parametrize("tree, n", [(Tree(1, ()), (4,)), (path_tree(2), (3, 3)), (path_tree(2), (2, 4))])
def test_amplitude_matches_grassmann_integral(tree, n):
    rng = np.random.default_rng(7)
    torus = Torus((3,))
    cov = random_covariance(rng, torus, ("up",))
    kernels = [random_kernel(rng, torus, ("up",), a, 2) for a in n]
    p = AmplitudeProblem(tree, 1, n, cov, kernels)
    ref = tree_amplitude_value(p, "grassmann")
    assert abs(tree_amplitude_value(p, "wick") - ref) < 1e-10 * max(1, abs(ref))
    assert abs(tree_amplitude_value(p, "pairing") - ref) < 1e-10 * max(1, abs(ref))


def test_fourier_decomposition_of_line_map():
    rng = np.random.default_rng(8)
    p = make_problem(rng, path_tree(3), (2, 3, 3), L=4, spins=SPINS2)
    sigma = random_sigma(rng, p)
    N = p.leg_count
    vs = [Form.one_form(rng.normal(size=N) + 1j * rng.normal(size=N)) for _ in range(3)]
    edge = p.edges[0]
    sup = fourier_decompose(p, sigma, ("edge", edge), vs)
    ref = apply_c(p, sigma, edge, wedge(*vs))
    assert sup.to_form().allclose(ref, atol=1e-12)
    assert lp_norm(ref) <= sup.norm_bound() * (1 + 1e-12)


def test_fourier_decomposition_of_vertex_map():
    rng = np.random.default_rng(9)
    p = make_problem(rng, path_tree(3), (2, 3, 3), L=5, spins=SPINS2)
    sigma = random_sigma(rng, p)
    N = p.leg_count
    rt = p.rooted
    for l in range(1, 4):
        children = [[Form.one_form(rng.normal(size=N)) for _ in range(2)] for _ in rt.children[l]]
        legs = [Form.one_form(rng.normal(size=N)) for _ in range(p.free_legs[l - 1])]
        sup = fourier_decompose(p, sigma, ("vertex", l), children, legs)
        ref = apply_w(p, sigma, l, [wedge(*fs) for fs in children] + legs)
        assert sup.to_form().allclose(ref, atol=1e-10)


def _table(rng, lo, width):
    return LineTable(np.r_[0, rng.normal(size=width) + 1j * rng.normal(size=width), 0], lo)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_summation_by_parts_scalar(seed):
    rng = np.random.default_rng(seed)
    f, g = _table(rng, -3, 5), _table(rng, -2, 4)
    p, p2 = (int(v) for v in rng.integers(-3, 4, 2))
    res = ibp_identity(f, g, [p, p2], [Form.basis(2, 0)], Form.basis(2, 1))
    brute = sum(g.diff(t) * f(p + p2 - 1 - t) - g(t) * f.diff(p + p2 - 1 - t) for t in range(-40, p2))
    assert res.lhs.coefficient((0, 1)) == pytest.approx(f(p) * g(p2), abs=1e-14)
    assert abs(brute - f(p) * g(p2)) < 1e-12
    assert res.residual < 1e-12


def test_summation_by_parts_on_a_block():
    # constant on an interior block: only the two boundary differences are nonzero
    f = LineTable(np.r_[0, np.ones(4), 0], -2)
    g = LineTable(np.r_[0, 2 * np.ones(3), 0], -1)
    assert np.count_nonzero(g.diff(np.arange(-5, 5))) == 2
    rng = np.random.default_rng(10)
    a = [Form.one_form(rng.normal(size=5)) for _ in range(2)]
    res = ibp_identity(f, g, rng.integers(-2, 3, 5), a, random_form(rng, 5, 2))
    assert res.residual < 1e-12
    assert lp_norm(res.lhs) <= res.bound_value * (1 + 1e-12) + 1e-12
    assert res.bound_value <= res.c_constant * res.norms[0] * res.norms[1] * (1 + 1e-12) + 1e-12


def test_summation_by_parts_on_problem_lines():
    rng = np.random.default_rng(11)
    torus = Torus((16,))
    table = np.zeros((1, 1, 16), dtype=complex)
    k = np.r_[0:4, 13:16]
    table[0, 0, k] = rng.normal(size=len(k))
    table[0, 0] = table[0, 0] - table[0, 0][torus.neg_table]
    cov = Covariance(torus, ("up",), table)
    kernels = [random_kernel(rng, torus, ("up",), a, 2) for a in (2, 3, 3)]
    p = AmplitudeProblem(path_tree(3), 1, (2, 3, 3), cov, kernels)
    p = p.with_external(random_external(rng, p))
    N = p.leg_count
    a = [Form.one_form(rng.normal(size=N)) for _ in range(2)]
    res = ibp_apply(p, (0,) * p.spin_variable_count, p.edges[0], p.edges[1], a, random_form(rng, N, 2))
    assert res.residual < 1e-12
