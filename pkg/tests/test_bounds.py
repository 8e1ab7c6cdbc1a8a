import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fermitree.bounds import (BoundReport, CovarianceNorms, ScaleModel, build_single_scale, bump,
                              contracted_legs, corollary_effective_norm, covariance_norms, effective_norm,
                              loop_bound, loop_lines, perturbative_bound, reports_to_csv, single_scale_fit,
                              smooth_step, standard_bound, synthetic_fit, theorem1_bound, theorem2_bound)
from fermitree.grassmann import Covariance, Torus
from fermitree.trees import Tree, caterpillar, path_tree, star_tree

ONES = CovarianceNorms(sup_hat=1.0, l1_hat=1.0, l1_pos=1.0, grad_sup=1.0, grad_l1=1.0, volume=1.0, nspin=1, ndim=1)


def scaled(norms, **kw):
    d = {k: getattr(norms, k) for k in ("sup_hat", "l1_hat", "l1_pos", "grad_sup", "grad_l1", "volume",
                                         "nspin", "ndim")}
    d.update(kw)
    return CovarianceNorms(**d)


def test_contracted_legs_and_loop_lines():
    assert contracted_legs(path_tree(2), (4, 4)) == 6
    assert loop_lines(path_tree(3), (2, 4, 2)) == 2
    with pytest.raises(ValueError):
        loop_lines(path_tree(2), (3, 4))


def test_perturbative_examples():
    assert perturbative_bound(scaled(ONES, sup_hat=5.0), Tree(1, ()), (4,), [1.0]) == 16
    # degrees (1, 2, 1): 1!*2^4 * 2!*2^4 * 1!*2^4
    assert perturbative_bound(ONES, path_tree(3), (4, 4, 4), [1, 1, 1]) == 1 * 16 * 2 * 16 * 1 * 16
    base = perturbative_bound(ONES, path_tree(4), (2, 3, 3, 2), [1] * 4)
    assert perturbative_bound(scaled(ONES, sup_hat=2.0), path_tree(4), (2, 3, 3, 2), [1] * 4) == 8 * base


def test_standard_bound_examples():
    # all legs contracted into the tree: prefactor 0^0 / 0! = 1
    assert standard_bound(ONES, path_tree(2), (1, 1), [1, 1]) == 4
    # (4, 4) on two vertices leaves 6 legs: 6^3 / 6!
    b = standard_bound(scaled(ONES, l1_pos=3.0), path_tree(2), (4, 4), [1, 1])
    assert b == pytest.approx(6 ** 3 / math.factorial(6) * 3 * (1 * 16) ** 2)


def test_theorem1_single_vertex():
    norms = CovarianceNorms(sup_hat=7.0, l1_hat=0.5, l1_pos=1.0, grad_sup=0, grad_l1=0, volume=10.0, nspin=2,
                            ndim=1)
    # |T| * 2^2/2! * ||C||_1^2 * 0! 2^4 * 1 * |Sigma|^4 * ||w||
    assert theorem1_bound(norms, Tree(1, ()), (4,), [3.0]) == pytest.approx(10 * 2 * 0.25 * 16 * 16 * 3)


def test_theorem1_path_has_no_branch_factor():
    n = (2, 4, 4, 2)
    b = theorem1_bound(ONES, path_tree(4), n, [1] * 4)
    k = sum(n) // 2 - 3
    assert b == pytest.approx(k ** k / math.factorial(k) * math.prod(math.factorial(d) * 2 ** v
                                                                    for d, v in zip((1, 2, 2, 1), n)))
    star = theorem1_bound(ONES, star_tree(4), (3, 3, 3, 3), [1] * 4)
    assert star == pytest.approx(3 ** 3 / 6 * 6 * 2 ** 12 * 2 ** 3)


def test_theorem2_m1_desk_value():
    n = (2, 4, 2, 4)
    b = theorem2_bound(ONES, 1, n, [1] * 4, [1] * 4, c=1.0)
    # caterpillar(1) degrees (1, 3, 1, 1); three loop lines
    assert b == pytest.approx(27 / 6 * 1 * 2 ** 2 * 6 * 2 ** 4 * 1 * 2 ** 2 * 1 * 2 ** 4)
    with pytest.raises(ValueError):
        theorem2_bound(ONES, 1, (2, 3, 2, 2), [1] * 4, [1] * 4)


def test_loop_bound_examples():
    norms = scaled(ONES, l1_hat=2.0, volume=5.0)
    assert loop_bound(norms, 4.0, 0) == 20
    assert loop_bound(norms, 4.0, 2) == pytest.approx(5 * 3 * 4 * 4)


def test_effective_norm_examples():
    assert effective_norm(ONES, 2, 1.0, 0) == pytest.approx(128)
    out = corollary_effective_norm(ONES, {2: 0.0, 4: 0.0}, 0)
    assert out["total"] == 0 and out["bound"] == 0
    big = corollary_effective_norm(ONES, {2: 1.0}, 0)
    assert not big["defined"] and big["bound"] is None
    with pytest.raises(ValueError):
        effective_norm(ONES, 3, 1.0, 0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 10), st.floats(0.1, 10))
def test_bounds_are_homogeneous(c, w):
    tree, n = path_tree(3), (4, 2, 4)
    norms = CovarianceNorms(1.3, 0.7, 2.1, 0.4, 0.9, 3.0, 2, 1)
    k = loop_lines(tree, n)
    s = scaled(norms, sup_hat=c * norms.sup_hat, l1_hat=c * norms.l1_hat, l1_pos=c * norms.l1_pos)
    r = theorem1_bound(s, tree, n, [w] * 3) / theorem1_bound(norms, tree, n, [1] * 3)
    assert r == pytest.approx(c ** (tree.m - 1 + k) * w ** 3)
    r = perturbative_bound(s, tree, n, [w] * 3) / perturbative_bound(norms, tree, n, [1] * 3)
    assert r == pytest.approx(c ** (tree.m - 1) * w ** 3)
    r = standard_bound(s, tree, n, [w] * 3) / standard_bound(norms, tree, n, [1] * 3)
    assert r == pytest.approx(c ** (tree.m - 1) * w ** 3)


def test_norms_of_constant_covariance():
    t = Torus((6,))
    norms = covariance_norms(Covariance(t, ("u", "d"), np.ones((2, 2, 6))))
    assert norms.sup_hat == 1 and norms.l1_hat == pytest.approx(4)
    assert not norms.compact


def test_norms_of_contact_toy():
    t = Torus((5,))
    pos = np.zeros((2, 2, 5))
    pos[0, 1, 0], pos[1, 0, 0] = 1.0, -1.0
    norms = covariance_norms(Covariance.from_position(t, ("u", "d"), pos))
    assert norms.sup_hat == pytest.approx(1)
    assert norms.l1_hat == pytest.approx(2)
    assert norms.l1_pos == pytest.approx(2)


def test_norms_gradient_on_a_block():
    t = Torus((10,))
    table = np.zeros((1, 1, 10))
    table[0, 0, [1, 2]] = 3.0
    table[0, 0, [8, 9]] = -3.0
    norms = covariance_norms(Covariance(t, ("u",), table))
    assert norms.compact
    # values -3, -3, 0, 3, 3 around zero: four jumps of size 3
    assert norms.grad_sup == pytest.approx(3.0 / t.momentum_step[0])
    assert norms.grad_l1 == pytest.approx(4 * 3 / t.momentum_step[0] / t.volume)
    assert norms.c_lebesgue == pytest.approx(2 * np.pi * norms.c_constant)


def test_smooth_bump():
    assert smooth_step(-1) == 0 and smooth_step(2) == 1
    assert smooth_step(0.5) == pytest.approx(0.5)
    u = np.linspace(0, 3, 301)
    b = bump(u)
    assert np.all(b[(u >= 0.75) & (u <= 1.75)] == 1)
    assert np.all(b[(u <= 0.5) | (u >= 2)] == 0)


def test_single_scale_support():
    model = ScaleModel(2, 3, 1, 8)
    cov = build_single_scale(model)
    norms = covariance_norms(cov)
    assert norms.compact
    # |C_hat| = chi/|den| with |den|^2 between M^-2j/2 and 2 M^-2j
    assert 2 ** 3 / math.sqrt(2) * 0.5 <= norms.sup_hat <= 2 ** 3 * math.sqrt(2) * 0.5
    assert cov.antisymmetry_error() < 1e-12
    with pytest.raises(ValueError, match="need lattice"):
        build_single_scale(ScaleModel(2, 3, 1, 2))


def test_synthetic_slopes_are_exact():
    fit = synthetic_fit()
    assert fit.slopes["sup_hat"] == pytest.approx(1, abs=1e-9)
    assert fit.slopes["l1_hat"] == pytest.approx(-1, abs=1e-9)
    assert fit.slopes["c_constant"] == pytest.approx(2, abs=1e-9)


def test_report_roundtrip():
    r = BoundReport(tree=[[1, 2]], n_per_vertex=[4, 4], contracted_legs=6, theorem1=2.0, amplitude=1.0,
                    standard=3.0, kernel=4.0).finalize()
    assert r.status == "violation" and r.violations() == ["standard"]
    again = BoundReport.from_json(r.to_json())
    assert again == r
    assert json.loads(r.to_json())["schema"] == "fermitree.bounds/1"
    text = reports_to_csv([r])
    assert text.splitlines()[0].startswith("tree,n_per_vertex")
