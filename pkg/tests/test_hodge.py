import itertools
import math

import numpy as np
import pytest

from feec.errors import InvariantError
from feec.hodge import (
    Hierarchy,
    fortin_error,
    fortin_project,
    fortin_rhs,
    harmonic_basis,
    harmonic_gap_study,
    hodge_decompose,
    inf_sup_constant,
    mass_matrix,
    poincare_constant,
    spectral_constants,
)
from feec.simplicial import (
    AffineRealization,
    book,
    build_closure,
    circle,
    coboundary_matrix,
    donut,
    flat_torus,
    simplex_mesh,
    sphere,
)
from feec.whitney import Cochain


def _whitney1_oracle(P):
    """Mass matrix of the three Whitney 1-forms on a triangle via an edge-midpoint rule."""
    E = (P[1:] - P[0]).T
    grads = np.vstack([-np.linalg.pinv(E).sum(axis=0), np.linalg.pinv(E)])  # rows ∇λ_i
    area = 0.5 * math.sqrt(np.linalg.det(E.T @ E))
    edges = [(0, 1), (0, 2), (1, 2)]
    mids = [np.array([0.5, 0.5, 0]), np.array([0.5, 0, 0.5]), np.array([0, 0.5, 0.5])]
    M = np.zeros((3, 3))
    for lam in mids:
        fields = [lam[i] * grads[j] - lam[j] * grads[i] for i, j in edges]
        M += area / 3 * np.array([[a @ b for b in fields] for a in fields])
    return M


def test_mass_k0_unit_area_triangle():
    K = build_closure([(0, 1, 2)])
    R = AffineRealization({0: (0, 0), 1: (1, 0), 2: (0, 2)})
    M = mass_matrix(K, R, 0).dense
    assert np.allclose(np.diag(M), 1 / 6) and np.allclose(M[~np.eye(3, dtype=bool)], 1 / 12)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_mass_top_degree_closed_form(d):
    K, R = simplex_mesh(d)
    vol = 1 / math.factorial(d)
    M = mass_matrix(K, R, d).dense
    assert M.shape == (1, 1) and M[0, 0] * vol == pytest.approx(1.0, rel=1e-13)


def test_mass_k1_against_midpoint_rule():
    P = np.array([[0.0, 0.0, 0.0], [1.3, 0.2, 0.1], [0.4, 0.9, -0.5]])
    K = build_closure([(0, 1, 2)])
    R = AffineRealization({i: tuple(P[i]) for i in range(3)})
    assert np.allclose(mass_matrix(K, R, 1).dense, _whitney1_oracle(P), rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("mesh", [flat_torus(3, 3), book(), sphere(2), simplex_mesh(3)])
def test_mass_spd(mesh):
    K, R = mesh
    g = np.random.default_rng(0)
    for k in range(K.dim + 1):
        M = mass_matrix(K, R, k).dense
        assert np.allclose(M, M.T, rtol=1e-13, atol=0)
        np.linalg.cholesky(M)
        for _ in range(100):
            x = g.standard_normal(M.shape[0])
            assert x @ M @ x > 0


def test_flat_torus_harmonic_forms_and_cycles():
    m, n = 4, 4
    K, R = flat_torus(m, n)
    H = harmonic_basis(K, R, 1)
    assert H.shape[1] == 2
    vid = lambda i, j: (i % m) * n + (j % n)

    def loop(steps):
        out = np.zeros(K.count(1))
        for a, b in steps:
            e = tuple(sorted((a, b)))
            out[K.index(e)] += 1 if a < b else -1
        return out

    loop_x = loop([(vid(i, 0), vid(i + 1, 0)) for i in range(m)])
    loop_y = loop([(vid(0, j), vid(0, j + 1)) for j in range(n)])
    periods = np.array([[loop_x @ H[:, 0], loop_x @ H[:, 1]], [loop_y @ H[:, 0], loop_y @ H[:, 1]]])
    # rotate into the basis dual to the two loops: it must be (L, 0), (0, L) up to scaling
    coeffs = np.linalg.solve(periods, np.diag([m, n]).astype(float))
    dual = H @ coeffs
    assert loop_x @ dual[:, 0] == pytest.approx(m) and abs(loop_y @ dual[:, 0]) < 1e-10
    assert loop_y @ dual[:, 1] == pytest.approx(n) and abs(loop_x @ dual[:, 1]) < 1e-10
    # on the flat torus the dual basis is exactly the interpolant of dx: every x-edge carries 1
    for e, val in zip(K[1], dual[:, 0]):
        a, b = e
        di = (b // n - a // n) % m
        expect = {0: 0.0, 1: 1.0, m - 1: -1.0}[di]
        assert val == pytest.approx(expect, abs=1e-9)


def test_harmonic_small_cases():
    K, R = sphere(2)
    assert harmonic_basis(K, R, 1).shape[1] == 0
    K, R = simplex_mesh(2)
    H = harmonic_basis(K, R, 0)
    assert H.shape[1] == 1 and np.allclose(H[:, 0], H[0, 0])


def test_harmonic_betti_mismatch_is_an_error():
    K, R = flat_torus(3, 3)
    with pytest.raises(InvariantError, match="harmonic/betti mismatch") as info:
        harmonic_basis(K, R, 1, rel_threshold=1e-30)
    assert info.value.diagnostics["betti"] == 2


@pytest.mark.parametrize("mesh, k", [(flat_torus(4, 4), 1), (flat_torus(4, 4), 0), (donut(3, 4), 1), (book(), 1)])
def test_hodge_decomposition(mesh, k):
    K, R = mesh
    g = np.random.default_rng(1)
    M = mass_matrix(K, R, k).dense
    for _ in range(5):
        p = hodge_decompose(g.standard_normal(K.count(k)), K, R, k)
        assert p.reconstruction_error <= 1e-10
        assert p.orthogonality <= 1e-9
        if k > 0:
            D = coboundary_matrix(K, k - 1).toarray()
            assert np.abs(D.T @ M @ p.harmonic).max() <= 1e-9 * max(p.norms["u"], 1)
        if k < K.dim:
            assert np.abs(coboundary_matrix(K, k) @ p.harmonic).max() <= 1e-10 * max(p.norms["u"], 1)


def test_hodge_exact_and_harmonic_inputs():
    K, R = flat_torus(4, 4)
    g = np.random.default_rng(2)
    a0 = g.standard_normal(K.count(0))
    u = coboundary_matrix(K, 0) @ a0
    p = hodge_decompose(u, K, R, 1)
    assert p.norms["harmonic"] < 1e-10 * p.norms["u"] and p.norms["residual"] < 1e-10 * p.norms["u"]
    h = harmonic_basis(K, R, 1)[:, 0]
    p = hodge_decompose(Cochain(K, 1, h), K, R)
    assert p.norms["exact"] < 1e-10 and p.norms["residual"] < 1e-10


@pytest.mark.parametrize("N", [24, 48])
def test_circle_poincare_constant(N):
    K, R = circle(N)
    C = poincare_constant(K, R, 0)
    assert abs(C * 2 * math.pi / N - 1) <= 0.1
    beta = inf_sup_constant(K, R, 0)
    assert abs(C * beta - 1) < 1e-9
    assert abs(beta / (2 * math.pi / N) - 1) <= 0.1


def test_circle_two_level_consistency():
    c12 = poincare_constant(*circle(12), 0) / 12
    c24 = poincare_constant(*circle(24), 0) / 24
    assert abs(c12 / c24 - 1) < 0.05


def test_vacuous_top_degree():
    K, R = sphere(2)
    sc = spectral_constants(K, R, 2)
    assert sc.vacuous and sc.poincare == 0.0 and math.isinf(sc.infsup)


def test_fortin_projection_property():
    for K, R in [flat_torus(3, 3), book(), donut(3, 3)]:
        H = Hierarchy(K, R, 1)
        g = np.random.default_rng(3)
        for k in range(K.dim + 1):
            u = g.standard_normal(K.count(k))
            F, gg = fortin_rhs(H, 0, 0, k, u)
            res = fortin_project(K, R, k, F, gg)
            M = mass_matrix(K, R, k)
            assert M.norm(res.coarse - u) <= 1e-10 * M.norm(u)
            assert res.constraint_residual < 1e-9


def test_fortin_nestedness_and_refinement():
    K, R = donut(3, 3)
    H = Hierarchy(K, R, 2)
    g = np.random.default_rng(4)
    uc = g.standard_normal(K.count(1))
    uf = H.prolongation(0, 1, 1) @ uc
    F, gg = fortin_rhs(H, 0, 1, 1, uf)
    assert np.allclose(fortin_project(K, R, 1, F, gg).coarse, uc, atol=1e-10)
    H3 = Hierarchy(K, R, 3)
    Kf, Rf = H3.levels[2]
    basis = harmonic_basis(Kf, Rf, 1)
    for j in range(basis.shape[1]):
        assert fortin_error(H3, 1, 2, 1, basis[:, j]) < fortin_error(H3, 0, 2, 1, basis[:, j])


def test_gap_studies():
    rep = harmonic_gap_study(*sphere(2), 3, 1)
    assert [lv["gap"] for lv in rep.levels] == [None, 0.0, 0.0]
    rep = harmonic_gap_study(*circle(6), 3, 0)
    assert all(lv["gap"] < 1e-12 for lv in rep.levels[1:])
    rep = harmonic_gap_study(*donut(3, 3), 3, 1)
    gaps = [lv["gap"] for lv in rep.levels[1:]]
    assert all(g > 0 for g in gaps) and gaps[-1] <= gaps[0]
    assert all(lv["harmonic_dim"] == 2 for lv in rep.levels)
