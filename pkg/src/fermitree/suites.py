"""Seeded verification sweeps shared by the command line and the test suite.

Every suite produces a list of JSON-serializable rows, one per instance, in
instance order. Instance ``i`` of suite ``s`` draws its randomness from
``SeedSequence([seed, SUITE_IDS[s], i])`` so results never depend on how the
instances are scheduled across threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

from .amplitude import (AmplitudeProblem, admissible_leg_counts, antisymmetrized_direct_kernel, ibp_identity,
                        kernel_hat_A, oracle_direct_alpha, oracle_direct_alpha_all, random_external,
                        recurse_alpha, recurse_alpha_all, tree_amplitude_value, tree_expansion_coefficients)
from .amplitude.ibp import LineTable
from .bounds import covariance_norms, theorem1_bound
from .bounds.formulas import contracted_legs
from .exterior import Form, interior_product, lp_norm, random_form, shuffle_bound, wedge
from .grassmann import (GeneratorSet, Torus, antisymmetrize, fourier_npoint, free_energy_oracle, pfaffian,
                        pfaffian_elimination, pfaffian_matching, random_covariance, random_even_poly,
                        random_kernel)
from .trees import Tree, enumerate_trees

SUITE_IDS = {"recursion": 1, "pfaffian": 2, "free-energy": 3, "gram": 4, "ibp": 5, "submult": 6, "bounds": 7}
SUITES = tuple(k for k in SUITE_IDS if k != "bounds")
SPIN_LABELS = ("up", "down")
CCR_SIZE = 6  # anticommutator checked on all 2**6 basis forms per trial


def thread_count(requested: int | None = None) -> int:
    """Requested (default: all cores) worker count, capped by ``FERMITREE_THREADS``."""
    n = requested or os.cpu_count() or 1
    cap = os.environ.get("FERMITREE_THREADS")
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def instance_rng(seed: int, suite: str, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, SUITE_IDS[suite], index]))


def run_indexed(fn: Callable[[int, np.random.Generator], dict], suite: str, count: int, seed: int,
                threads: int | None = None) -> list[dict]:
    """``fn(i, rng_i)`` for ``i < count``; rows come back in index order."""
    work = [(i, instance_rng(seed, suite, i)) for i in range(count)]
    n = thread_count(threads)
    if n == 1:
        return [fn(i, r) for i, r in work]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(lambda args: fn(*args), work))


def _rel(err: float, scale: float) -> float:
    return err / max(1.0, scale)


# -- recursion against the direct sum -----------------------------------------------------------

def recursion_groups(m_max: int = 4, legs: Sequence[int] = (2, 3, 4), n_max: int = 6,
                     spin_counts: Sequence[int] = (1, 2)) -> list[tuple[Tree, tuple[int, ...], int]]:
    """Every ``(tree, n, |Sigma|)`` of the sweep, in a fixed order."""
    out = []
    for S in spin_counts:
        for m in range(1, m_max + 1):
            for tree in enumerate_trees(m):
                for n in admissible_leg_counts(tree, legs, n_max):
                    out.append((tree, n, S))
    return out


def recursion_instance(index: int, rng: np.random.Generator, group, configs: int = 20, lattice: int = 8,
                       tol: float = 1e-10, amplitude: bool = True) -> dict:
    """Draw one covariance and kernel set, then check ``configs`` external configurations.

    The root cycles through the vertices. With ``amplitude`` the contracted
    tree amplitude is also computed (even leg counts) and compared with the
    sup-norm bound.
    """
    tree, n, S = group
    torus = Torus((lattice,))
    spins = SPIN_LABELS[:S]
    cov = random_covariance(rng, torus, spins)
    kernels = [random_kernel(rng, torus, spins, a, 2) for a in n]
    base = AmplitudeProblem(tree, 1, n, cov, kernels)
    alpha_err = kernel_err = sparse_err = 0.0
    worst = None
    for c in range(configs):
        p = base.with_root(1 + c % tree.m)
        p = p.with_external(random_external(rng, p))
        rec = recurse_alpha_all(p)
        ora = oracle_direct_alpha_all(p)
        e1 = float(np.abs(rec - ora).max(initial=0.0))
        sigma = tuple(int(v) for v in rng.integers(0, S, p.spin_variable_count))
        f, g = recurse_alpha(p, sigma), oracle_direct_alpha(p, sigma)
        keys = set(f.terms) | set(g.terms)
        e2 = max((abs(f.terms.get(k, 0) - g.terms.get(k, 0)) for k in keys), default=0.0)
        e3 = abs(kernel_hat_A(p) - antisymmetrized_direct_kernel(p))
        if worst is None or max(e1, e2, e3) > worst[0]:
            worst = (max(e1, e2, e3), p)
        alpha_err, sparse_err, kernel_err = max(alpha_err, e1), max(sparse_err, e2), max(kernel_err, e3)
    ok = max(alpha_err, sparse_err, kernel_err) <= tol
    row = {"suite": "recursion", "index": index, "tree": [list(e) for e in tree.edges], "m": tree.m,
           "n": list(n), "nspin": S, "configs": configs, "alpha_err": alpha_err, "sparse_err": sparse_err,
           "kernel_err": kernel_err}
    legs = contracted_legs(tree, n)
    if amplitude and legs % 2 == 0:
        value = abs(tree_amplitude_value(base))
        bound = theorem1_bound(covariance_norms(cov), tree, n, [k.sup_hat() for k in kernels])
        row.update(amplitude=value, theorem1=bound)
        ok = ok and value <= bound
    row["pass"] = bool(ok)
    if not ok:
        row["replay"] = worst[1].to_json() if worst else base.to_json()
    return row


def recursion_suite(seed: int = 0, threads: int | None = None, m_max: int = 4, n_max: int = 6,
                    lattice: int = 8, configs: int = 20, tol: float = 1e-10, amplitude: bool = True,
                    spin_counts: Sequence[int] = (1, 2)) -> list[dict]:
    groups = recursion_groups(m_max, (2, 3, 4), n_max, spin_counts)
    return run_indexed(lambda i, r: recursion_instance(i, r, groups[i], configs, lattice, tol, amplitude),
                       "recursion", len(groups), seed, threads)


# -- Pfaffians ------------------------------------------------------------------------------------

def random_skew(rng: np.random.Generator, size: int) -> np.ndarray:
    a = rng.normal(size=(size, size)) + 1j * rng.normal(size=(size, size))
    return a - a.T


def pfaffian_instance(index: int, rng: np.random.Generator, tol: float = 1e-10) -> dict:
    size = 2 * (index % 7)  # 0, 2, ..., 12
    a = random_skew(rng, size)
    pf = pfaffian(a)
    det = np.linalg.det(a) if size else 1.0
    sq_err = abs(pf * pf - det) / max(abs(det), 1e-300)
    row = {"suite": "pfaffian", "index": index, "size": size, "square_rel_err": float(sq_err)}
    ok = sq_err <= 1e-9
    if size <= 8:
        m_err = abs(pfaffian_elimination(a) - pfaffian_matching(a))
        row["matching_err"] = float(m_err)
        ok = ok and m_err <= tol
    row["pass"] = bool(ok)
    if not ok:
        row["replay"] = {"matrix_re": a.real.tolist(), "matrix_im": a.imag.tolist()}
    return row


def pfaffian_suite(seed: int = 0, threads: int | None = None, count: int = 100, tol: float = 1e-10) -> list[dict]:
    return run_indexed(lambda i, r: pfaffian_instance(i, r, tol), "pfaffian", count, seed, threads)


# -- free energy against the tree expansion ----------------------------------------------------

def free_energy_instance(index: int, rng: np.random.Generator, sites: int = 3, order: int = 3,
                         tol: float = 1e-8) -> dict:
    torus = Torus((sites,))
    cov = random_covariance(rng, torus, SPIN_LABELS)
    gens = GeneratorSet(torus, SPIN_LABELS, cap=2 * sites)
    mat = cov.position_matrix(gens)
    w = random_even_poly(rng, gens.size, 4, terms=4)
    tree = tree_expansion_coefficients(w, mat, order)
    oracle = free_energy_oracle(w, mat, order)
    err = float(np.abs(np.asarray(tree) - np.asarray(oracle)).max())
    scale = float(np.abs(oracle).max())
    ok = _rel(err, scale) <= tol
    row = {"suite": "free-energy", "index": index, "generators": gens.size, "order": order,
           "tree": [[float(v.real), float(v.imag)] for v in tree], "err": err, "pass": bool(ok)}
    if not ok:
        row["replay"] = {"w": {str(k): [v.real, v.imag] for k, v in w.to_dict().items()},
                         "cov_re": mat.real.tolist(), "cov_im": mat.imag.tolist()}
    return row


def free_energy_suite(seed: int = 0, threads: int | None = None, count: int = 3, sites: int = 3,
                      tol: float = 1e-8) -> list[dict]:
    return run_indexed(lambda i, r: free_energy_instance(i, r, sites, 3, tol), "free-energy", count, seed, threads)


# -- Gram-Hadamard consequence for antisymmetric functions ----------------------------------

def gram_instance(index: int, rng: np.random.Generator, sites: int = 6, n_max: int = 5) -> dict:
    n = 1 + index % n_max
    torus = Torus((sites,))
    raw = rng.normal(size=(sites,) * n) + 1j * rng.normal(size=(sites,) * n)
    raw *= rng.random(size=raw.shape) < 0.3  # sparse kernels make the bound tighter
    pos = antisymmetrize(raw)
    hat = fourier_npoint(pos, torus)
    sup = float(np.abs(hat).max())
    bound = n ** (n / 2) / math.factorial(n) * float(np.abs(pos).sum())
    ok = sup <= bound * (1 + 1e-12)
    row = {"suite": "gram", "index": index, "n": n, "sup": sup, "bound": bound, "ratio": sup / bound if bound else 0.0,
           "pass": bool(ok)}
    if not ok:
        row["replay"] = {"re": pos.real.tolist(), "im": pos.imag.tolist()}
    return row


def gram_suite(seed: int = 0, threads: int | None = None, count: int = 200) -> list[dict]:
    return run_indexed(gram_instance, "gram", count, seed, threads)


# -- summation by parts ----------------------------------------------------------------------

def random_line_table(rng: np.random.Generator, L: int) -> LineTable:
    """Random complex table on a 1-D momentum domain of ``L`` points, zero near the edge.

    The support is centered and spans at least half the domain, so small
    momentum sums land inside it.
    """
    half = L // 2
    width = int(rng.integers(half, 2 * half - 1))
    lo = -(width // 2)
    vals = rng.normal(size=width) + 1j * rng.normal(size=width)
    return LineTable(vals / np.abs(vals).max(), lo)


def ibp_instance(index: int, rng: np.random.Generator, tol: float = 1e-12) -> dict:
    L = int(rng.integers(8, 33))
    f, g = random_line_table(rng, L), random_line_table(rng, L)
    size = int(rng.integers(2, 7))
    momenta = rng.integers(-1, 2, size=size)
    k = int(rng.integers(0, size))
    a = [Form.one_form(rng.normal(size=size) + 1j * rng.normal(size=size)) for _ in range(k)]
    a2 = random_form(rng, size, int(rng.integers(1, size - k + 1)))
    res = ibp_identity(f, g, momenta, a, a2)
    lhs = lp_norm(res.lhs, 2)
    norm_ok = lhs <= res.bound_value * (1 + 1e-12) + 1e-14
    c_ok = res.bound_value <= res.c_constant * res.norms[0] * res.norms[1] * (1 + 1e-12) + 1e-14
    ok = res.residual <= tol and norm_ok and c_ok
    row = {"suite": "ibp", "index": index, "L": L, "legs": size, "rank_one_degree": k,
           "residual": float(res.residual), "lhs_norm": lhs, "bound": res.bound_value,
           "c_bound": res.c_constant * res.norms[0] * res.norms[1], "pass": bool(ok)}
    if not ok:
        row["replay"] = {"f": [f.start, [[v.real, v.imag] for v in f.values]],
                         "g": [g.start, [[v.real, v.imag] for v in g.values]], "momenta": momenta.tolist()}
    return row


def ibp_suite(seed: int = 0, threads: int | None = None, count: int = 100, tol: float = 1e-12) -> list[dict]:
    return run_indexed(lambda i, r: ibp_instance(i, r, tol), "ibp", count, seed, threads)


# -- wedge products ------------------------------------------------------------------------

def submult_instance(index: int, rng: np.random.Generator, size_max: int = 10) -> dict:
    """One submultiplicativity trial, one rank-1 trial and one anticommutator check."""
    size = int(rng.integers(2, size_max + 1))
    count = int(rng.integers(2, 4))
    degs = sorted(rng.integers(1, 4, size=count).tolist())
    while sum(degs) > size:
        degs[-1] -= 1
        degs = [d for d in degs if d > 0] or [1]
    forms = [random_form(rng, size, d, density=0.6) for d in degs]
    p = float(rng.choice([1.0, 1.5, 2.0, 3.0, math.inf]))
    lhs = lp_norm(wedge(*forms), p)
    rhs = shuffle_bound(degs, p) * float(np.prod([lp_norm(f, p) for f in forms]))
    sub_ok = lhs <= rhs * (1 + 1e-12) + 1e-14

    k = int(rng.integers(1, size))
    vs = [Form.one_form(rng.normal(size=size) + 1j * rng.normal(size=size)) for _ in range(k)]
    a = wedge(*vs)
    b = random_form(rng, size, int(rng.integers(0, size - k + 1)))
    r_lhs, r_rhs = lp_norm(wedge(a, b), 2), lp_norm(a, 2) * lp_norm(b, 2)
    rank_ok = r_lhs <= r_rhs * (1 + 1e-12) + 1e-14

    ccr_size = min(size, CCR_SIZE)
    v = Form.one_form(rng.normal(size=ccr_size) + 1j * rng.normal(size=ccr_size))
    nv = lp_norm(v, 2) ** 2
    ccr_err = 0.0
    for mask in range(1 << ccr_size):
        e = Form.from_dict(ccr_size, {mask: 1.0})
        out = wedge(v, interior_product(v, e)) + interior_product(v, wedge(v, e)) - e * nv
        ccr_err = max(ccr_err, max((abs(c) for c in out.terms.values()), default=0.0))
    ccr_ok = ccr_err <= 1e-12
    return {"suite": "submult", "index": index, "size": size, "degrees": degs, "p": p if p != math.inf else "inf",
            "submult_ratio": lhs / rhs if rhs else 0.0, "rank1_ratio": r_lhs / r_rhs if r_rhs else 0.0,
            "ccr_err": ccr_err, "pass": bool(sub_ok and rank_ok and ccr_ok)}


def submult_suite(seed: int = 0, threads: int | None = None, count: int = 500) -> list[dict]:
    return run_indexed(submult_instance, "submult", count, seed, threads)


RUNNERS = {"recursion": recursion_suite, "pfaffian": pfaffian_suite, "free-energy": free_energy_suite,
           "gram": gram_suite, "ibp": ibp_suite, "submult": submult_suite}


# -- bound tables ------------------------------------------------------------------------------

def compact_covariance(rng: np.random.Generator, torus: Torus, spins: Sequence, radius: int = 2):
    """Random antisymmetric covariance supported on centered momenta with ``|k| <= radius``."""
    from .grassmann import Covariance

    S = len(spins)
    raw = rng.normal(size=(S, S, torus.sites)) + 1j * rng.normal(size=(S, S, torus.sites))
    k = np.where(torus.coords >= (np.array(torus.dims) + 1) // 2, torus.coords - np.array(torus.dims), torus.coords)
    raw[:, :, np.any(np.abs(k) > radius, axis=1)] = 0
    table = 0.5 * (raw - np.transpose(raw, (1, 0, 2))[:, :, torus.neg_table])
    return Covariance(torus, tuple(spins), table)


def bound_trees(m_max: int, branches: int | None = None, caterpillars: bool = False) -> list[Tree]:
    from .trees import caterpillar, trees_with_branches

    if caterpillars:
        return [caterpillar(m) for m in range(1, m_max + 1)]
    out = []
    for m in range(1, m_max + 1):
        out += trees_with_branches(m, branches) if branches is not None else enumerate_trees(m)
    return out


def bounds_instance(index: int, rng: np.random.Generator, tree: Tree, n: tuple[int, ...], lattice: int = 8,
                    nspin: int = 1, amp_legs: int = 6, loop_legs: int = 4, branches: int | None = None,
                    caterpillar_m: int | None = None):
    """All bound values for one ``(T, n)`` with random compactly supported data."""
    from .amplitude import kernel_hat_A, paired_kernel_sup
    from .bounds import (BoundReport, corollary_effective_norm, loop_bound, perturbative_bound, standard_bound,
                         theorem2_bound)
    from .bounds.formulas import loop_lines

    torus = Torus((lattice,))
    spins = SPIN_LABELS[:nspin]
    cov = compact_covariance(rng, torus, spins)
    kernels = [random_kernel(rng, torus, spins, a, 4) for a in n]
    norms = covariance_norms(cov)
    w_sup = [k.sup_hat() for k in kernels]
    w_l1 = [k.l1_norm() for k in kernels]
    legs = contracted_legs(tree, n)
    rep = BoundReport(tree=[list(e) for e in tree.edges], n_per_vertex=list(n), contracted_legs=legs,
                      volume=norms.volume, c_constant=norms.c_lebesgue, branches=branches)
    rep.perturbative = perturbative_bound(norms, tree, n, w_sup)
    rep.standard = standard_bound(norms, tree, n, w_l1)
    problem = AmplitudeProblem(tree, 1, n, cov, kernels)
    problem = problem.with_external(random_external(rng, problem))
    rep.kernel = abs(kernel_hat_A(problem))
    if legs % 2 == 0:
        rep.theorem1 = theorem1_bound(norms, tree, n, w_sup)
        if caterpillar_m is not None:
            rep.theorem2 = theorem2_bound(norms, caterpillar_m, n, w_sup, w_l1)
        if legs <= amp_legs:
            rep.amplitude = abs(tree_amplitude_value(problem))
        if legs <= loop_legs:
            rep.loop = loop_bound(norms, paired_kernel_sup(problem), loop_lines(tree, n))
    if branches is not None:
        even = {nl: s for nl, s in zip(n, w_sup) if nl % 2 == 0}
        cor = corollary_effective_norm(norms, even, branches) if even else None
        if cor is not None:
            rep.extra["effective_norm"] = cor["total"]
        positive = [s ** (-1 / nl) for nl, s in zip(n, w_sup) if s > 0]
        rep.alpha_coupling = min(positive) if positive else None
    rep.extra["norms"] = norms.to_dict()
    rep.finalize()
    row = {"suite": "bounds", "index": index}
    row.update(rep.to_dict())
    row["pass"] = rep.status != "violation"
    if not row["pass"]:
        row["replay"] = problem.to_json()
    return row


def bounds_suite(seed: int = 0, threads: int | None = None, m_max: int = 3, legs: Sequence[int] = (2, 3, 4),
                 n_max: int = 6, branches: int | None = None, caterpillars: bool = False, lattice: int = 8,
                 nspin: int = 1) -> list[dict]:
    from .trees import caterpillar

    items = []
    for tree in bound_trees(m_max, branches, caterpillars):
        cat_m = (tree.m - 2) // 2 if caterpillars else None
        if not caterpillars and tree.m >= 4 and tree.m % 2 == 0 and tree == caterpillar((tree.m - 2) // 2):
            cat_m = (tree.m - 2) // 2
        for n in admissible_leg_counts(tree, legs, n_max):
            items.append((tree, n, cat_m))
    return run_indexed(lambda i, r: bounds_instance(i, r, items[i][0], items[i][1], lattice, nspin,
                                                    branches=branches, caterpillar_m=items[i][2]),
                       "bounds", len(items), seed, threads)


def corollary_instance(rng: np.random.Generator, branches: int = 0, m_max: int = 3, sites: int = 3,
                       target: float = 0.25) -> dict:
    """Vacuum (``k = 0``) check of the effective-norm statement, truncated at ``m <= m_max``.

    ``W = w_2 + w_4`` with random kernels on a ``sites``-point torus with two
    spins, each scaled to effective norm ``target``; each tree term is the
    exact interpolated Gaussian integral.
    """
    from .amplitude import interpolation_integral, tree_polynomial
    from .bounds import corollary_effective_norm, effective_norm
    from .grassmann import kernel_polynomial
    from .trees import trees_with_branches

    torus = Torus((sites,))
    cov = random_covariance(rng, torus, SPIN_LABELS)
    norms = covariance_norms(cov)
    ws = {}
    for n in (2, 4):
        k = random_kernel(rng, torus, SPIN_LABELS, n, 2)
        while k.sup_hat() == 0:  # antisymmetrizes to zero; draw again
            k = random_kernel(rng, torus, SPIN_LABELS, n, 2)
        ws[n] = k.scaled(target / effective_norm(norms, n, k.sup_hat(), branches))
    gens = GeneratorSet(torus, SPIN_LABELS, cap=2 * sites)
    mat = cov.position_matrix(gens)
    w = kernel_polynomial(ws[2], gens) + kernel_polynomial(ws[4], gens)
    total = 0.0
    per_m = []
    for m in range(1, m_max + 1):
        acc = 0.0
        for tree in trees_with_branches(m, branches):
            poly = tree_polynomial(tree, [w] * m, mat)
            if len(poly):
                acc += abs(interpolation_integral(tree, poly, mat)) / torus.sites
        per_m.append(float(acc / math.factorial(m)))
        total += acc / math.factorial(m)
    cor = corollary_effective_norm(norms, {n: k.sup_hat() for n, k in ws.items()}, branches, k=0)
    lhs = float(norms.sup_hat / norms.l1_hat * 8 / math.e * total)
    ok = cor["defined"] and lhs <= cor["bound"]
    return {"suite": "corollary", "branches": branches, "m_max": m_max, "per_m": per_m, "lhs": lhs,
            "effective_norm": cor["total"], "rhs": cor["bound"], "pass": bool(ok)}
