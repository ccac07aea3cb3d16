"""Acceptance criteria 1-15, at the stated tolerances.

Each test prints ``criterion N: PASS|FAIL <detail>``; the lines are also
collected and repeated in the pytest terminal summary.  Run this file
directly (``python tests/test_acceptance.py``) for the plain listing.
"""

import itertools
import math
import random
import sys
import time
from fractions import Fraction as F

import numpy as np
import sympy

from feec.cohomology import (
    betti,
    highorder_complex,
    mayer_vietoris_check,
    assembly_steps,
    relative_complex,
    whitney_complex,
)
from feec.exact import QMatrix
from feec.hodge import (
    POINCARE_BAND,
    Hierarchy,
    fortin_error,
    fortin_project,
    fortin_rhs,
    harmonic_basis,
    harmonic_gap_study,
    hodge_decompose,
    mass_matrix,
    spectral_constants,
)
from feec.polyform import AmbientForm, PolyForm, koszul, random_polyform, value_at_vertex, wedge, bary
from feec.simplicial import (
    barycentric_subdivision,
    boundary_subcomplex,
    book,
    circle,
    coboundary_matrix,
    donut,
    flat_torus,
    simplex_mesh,
    sphere,
)
from feec.whitney import (
    NOT_IN_SPAN,
    Cochain,
    cochain_to_form,
    highorder_span,
    interpolate,
    membership,
    verify_wedge_closure,
    whitney_component,
    whitney_form,
)

COMPLEXES = {
    "simplex(3)": lambda: simplex_mesh(3),
    "sphere(2)": lambda: sphere(2),
    "flat_torus(3,3)": lambda: flat_torus(3, 3),
    "book": book,
}

RESULTS: list[str] = []


def verdict(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


# -- exact layer ------------------------------------------------------------------------------

def test_criterion_01_duality():
    checked = 0
    bad = []
    for name, make in COMPLEXES.items():
        K, _ = make()
        for k in range(K.dim + 1):
            rows = [list(interpolate(whitney_form(K, T)).values) for T in K[k]]
            n = K.count(k)
            if rows != [[F(int(i == j)) for j in range(n)] for i in range(n)]:
                bad.append((name, k))
            checked += 1
    verdict(1, not bad, f"identity DOF matrices on {checked} (complex, degree) pairs; failures={bad}")


def test_criterion_02_coboundary():
    formula_ok = 0
    bad = []
    for name in ("flat_torus(3,3)", "book"):
        K, _ = COMPLEXES[name]()
        for k in range(K.dim):
            for T in K[k]:
                lhs = whitney_form(K, T).d()
                rhs = cochain_to_form(Cochain.indicator(K, T).coboundary())
                if lhs == rhs:
                    formula_ok += 1
                else:
                    bad.append((name, T))
    dd_bad = []
    for name, make in COMPLEXES.items():
        K, _ = make()
        for k in range(K.dim - 1):
            prod = QMatrix.from_scipy(coboundary_matrix(K, k + 1)) @ QMatrix.from_scipy(coboundary_matrix(K, k))
            if not prod.is_zero():
                dd_bad.append((name, k))
    verdict(2, not bad and not dd_bad,
            f"d(whitney) = sum of incidence-signed forms on {formula_ok} simplices; DD=0 exact; failures={bad + dd_bad}")


def _random_compatible(K, k, rng):
    space = highorder_span(K, k, rng.randint(1, 3))
    coeffs = [F(0)] * len(space.generators)
    for j in rng.sample(range(len(space.generators)), min(6, len(space.generators))):
        coeffs[j] = F(rng.randint(-9, 9), rng.randint(1, 9))
    return space.element(coeffs)


def _trig_forms():
    x0, x1, x2, x3 = sympy.symbols("x0:4")
    return [
        AmbientForm(4, 0, {(): sympy.sin(x0) * sympy.cos(x2)}),
        AmbientForm(4, 0, {(): sympy.exp(x1 / 3) + sympy.cos(x3 - x0)}),
        AmbientForm(4, 0, {(): sympy.sin(2 * x0 + x3)}),
        AmbientForm(4, 0, {(): sympy.cos(x1) * sympy.sin(x2) * x0}),
        AmbientForm(4, 1, {(0,): sympy.sin(x2), (3,): sympy.cos(x0 + x1)}),
        AmbientForm(4, 1, {(1,): sympy.cos(x3) * x0, (2,): sympy.sin(x1)}),
        AmbientForm(4, 1, {(0,): sympy.exp(sympy.sin(x2)), (1,): x3 ** 2}),
        AmbientForm(4, 1, {(2,): sympy.sin(x0) * sympy.sin(x1), (3,): sympy.cos(x2)}),
        AmbientForm(4, 1, {(0,): sympy.cos(x0 * x2), (2,): sympy.sin(x1 - x3)}),
        AmbientForm(4, 1, {(1,): sympy.sin(3 * x0), (3,): sympy.cos(2 * x1) * x2}),
    ]


def test_criterion_03_commuting_diagram():
    rng = random.Random(3)
    exact_bad = []
    for name, make in COMPLEXES.items():
        K, _ = make()
        for _ in range(50):
            k = rng.randrange(K.dim)
            u = _random_compatible(K, k, rng)
            if interpolate(u).coboundary() != interpolate(u.d()):
                exact_bad.append(name)
    K, R = flat_torus(4, 4)
    worst = 0.0
    for u in _trig_forms():
        lhs = interpolate(u.evaluable(K, R)).coboundary().to_float()
        rhs = interpolate(u.d().evaluable(K, R)).to_float() if u.d().components else np.zeros(K.count(u.degree + 1))
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    verdict(3, not exact_bad and worst <= 1e-9,
            f"200 polynomial forms exact (failures={len(exact_bad)}); trig max entry error {worst:.2e} <= 1e-9")


def test_criterion_04_homotopy():
    rng = random.Random(4)
    host = tuple(range(5))
    bad = 0
    for k in range(5):
        for _ in range(100):
            u = random_polyform(host, k, rng, max_degree=3, n_terms=4)
            base = rng.choice(host)
            if k == 0:
                ok = koszul(u.d(), base) == u - PolyForm.constant(host, value_at_vertex(u, base))
            elif k == 4:
                ok = koszul(u, base).d() == u
            else:
                ok = koszul(u.d(), base) + koszul(u, base).d() == u
            bad += not ok
    verdict(4, bad == 0, f"500 forms on simplex(4), degrees 0..4; failures={bad}")


def test_criterion_05_betti():
    cases = []
    for n in range(5):
        cases.append((f"simplex({n})", betti(whitney_complex(simplex_mesh(n)[0])), [1] + [0] * n))
    for n in range(1, 4):
        cases.append((f"sphere({n})", betti(whitney_complex(sphere(n)[0])), [1] + [0] * (n - 1) + [1]))
    for m, n in ((3, 3), (4, 4)):
        cases.append((f"flat_torus({m},{n})", betti(whitney_complex(flat_torus(m, n)[0])), [1, 2, 1]))
    cases.append(("book", betti(whitney_complex(book()[0])), [1, 0, 0]))
    for n in range(5):
        K, _ = simplex_mesh(n)
        cases.append((f"(simplex({n}), boundary)", betti(relative_complex(K, boundary_subcomplex(K))),
                      [0] * n + [1]))
    bad = [(name, got) for name, got, want in cases if got != want]
    verdict(5, not bad, f"{len(cases)} exact Betti vectors; failures={bad}")


def test_criterion_06_subdivision_invariance():
    bad = []
    for name, make in COMPLEXES.items():
        K, R = make()
        want = betti(whitney_complex(K))
        for _ in range(2):
            K, R = barycentric_subdivision(K, R)
            if betti(whitney_complex(K)) != want:
                bad.append(name)
    verdict(6, not bad, f"Betti numbers stable over 2 subdivisions of {len(COMPLEXES)} complexes; failures={bad}")


def test_criterion_07_highorder_cohomology():
    bad = []
    for name, make in (("simplex(2)", lambda: simplex_mesh(2)), ("sphere(1)", lambda: sphere(1)),
                       ("flat_torus(3,3)", lambda: flat_torus(3, 3))):
        K, _ = make()
        want = betti(whitney_complex(K))
        for n in (2, 3):
            got = betti(highorder_complex(K, n))
            if got != want:
                bad.append((name, n, got))
    verdict(7, not bad, f"betti(X_n) = betti(Whitney) for n in (2,3) on 3 complexes; failures={bad}")


def test_criterion_08_wedge_closure():
    K, _ = flat_torus(3, 3)
    configs = [(k, m, l, n) for k in range(3) for l in range(3 - k)
               for m in range(1, 4) for n in range(1, 5 - m)]
    failures = []
    for cfg in configs:
        rep = verify_wedge_closure(K, *cfg, trials=100, seed=8)
        if not rep.ok:
            failures.append(cfg)
    Kt, _ = simplex_mesh(2)
    tri = (0, 1, 2)
    lhs = wedge(whitney_component((0, 1), tri), whitney_component((1, 2), tri))
    worked = lhs == wedge(bary(tri, 1).scale(F(1, 2)), whitney_component(tri, tri))
    verdict(8, not failures and worked and len(configs) == 36,
            f"{len(configs)} configurations x 100 trials, membership failures={failures}; "
            f"worked identity {'holds' if worked else 'fails'}")


def test_criterion_09_mayer_vietoris():
    K, _ = flat_torus(3, 3)
    steps = failed = 0
    for Kp, T in assembly_steps(K):
        rep = mayer_vietoris_check(Kp, T)
        steps += 1
        failed += not rep.ok
    fill = mayer_vietoris_check(sphere(1)[0], (0, 1, 2))
    verdict(9, failed == 0 and steps >= 5 and fill.ok,
            f"{steps} gluing steps assembling flat_torus(3,3), failures={failed}; sphere(1) fill ok={fill.ok}")


# -- metric layer ----------------------------------------------------------------------------

_HIERARCHIES: dict = {}


def hierarchy(name, make, levels=3):
    if name not in _HIERARCHIES:
        _HIERARCHIES[name] = Hierarchy(*make(), levels)
    return _HIERARCHIES[name]


def test_criterion_10_harmonic_dimensions():
    bad = []
    for name, make in (("flat_torus(3,3)", lambda: flat_torus(3, 3)), ("sphere(2)", lambda: sphere(2))):
        H = hierarchy(name, make)
        for lvl, (K, R) in enumerate(H.levels):
            b = betti(whitney_complex(K))
            for k in range(K.dim + 1):
                if harmonic_basis(K, R, k).shape[1] != b[k]:
                    bad.append((name, lvl, k))
    verdict(10, not bad, f"harmonic dimension = Betti number at levels 0..2, every degree; failures={bad}")


def test_criterion_11_hodge_decomposition():
    g = np.random.default_rng(11)
    worst_rec = worst_orth = 0.0
    count = 0
    for name, make in COMPLEXES.items():
        K, R = make()
        for k in range(K.dim + 1):
            for _ in range(50):
                p = hodge_decompose(g.standard_normal(K.count(k)), K, R, k)
                worst_rec = max(worst_rec, p.reconstruction_error)
                worst_orth = max(worst_orth, p.orthogonality)
                count += 1
    verdict(11, worst_rec <= 1e-10 and worst_orth <= 1e-9,
            f"{count} cochains; reconstruction {worst_rec:.2e} <= 1e-10, orthogonality {worst_orth:.2e} <= 1e-9")


def _spectral_runs():
    runs = {}
    for N in (24, 48):
        K, R = circle(N)
        runs[f"circle({N})"] = [spectral_constants(K, R, 0)]
    H = hierarchy("flat_torus(3,3)", lambda: flat_torus(3, 3))
    for k in (0, 1):
        runs[f"flat_torus(3,3) k={k}"] = [spectral_constants(K, R, k) for K, R in H.levels]
    return runs


def test_criterion_12_poincare():
    runs = _spectral_runs()
    circ = {N: abs(runs[f"circle({N})"][0].poincare * 2 * math.pi / N - 1) for N in (24, 48)}
    ratios = {}
    for k in (0, 1):
        cs = [sc.poincare for sc in runs[f"flat_torus(3,3) k={k}"]]
        ratios[k] = max(cs) / min(cs)
    ok = all(v <= 0.1 for v in circ.values()) and all(r <= POINCARE_BAND for r in ratios.values())
    verdict(12, ok, "circle |C*2pi/N - 1| = " + ", ".join(f"{v:.4f}" for v in circ.values())
            + "; torus max/min over 3 levels = " + ", ".join(f"k={k}: {r:.3f}" for k, r in ratios.items()))


def test_criterion_13_inf_sup():
    runs = _spectral_runs()
    recip = max(abs(sc.poincare * sc.infsup - 1) for scs in runs.values() for sc in scs)
    ratios = []
    for k in (0, 1):
        bs = [sc.infsup for sc in runs[f"flat_torus(3,3) k={k}"]]
        ratios.append(max(bs) / min(bs))
    verdict(13, recip <= 1e-9 and all(r <= POINCARE_BAND for r in ratios),
            f"max |beta*C - 1| = {recip:.1e}; beta max/min over levels = "
            + ", ".join(f"{r:.3f}" for r in ratios))


def test_criterion_14_fortin():
    g = np.random.default_rng(14)
    idem = 0.0
    for name, make in (("flat_torus(3,3)", lambda: flat_torus(3, 3)), ("donut(3,3)", lambda: donut(3, 3))):
        K, R = make()
        H = hierarchy(name, make)
        for k in range(K.dim + 1):
            for _ in range(5):
                u = g.standard_normal(K.count(k))
                F_, g_ = fortin_rhs(H, 0, 0, k, u)
                res = fortin_project(K, R, k, F_, g_)
                M = mass_matrix(K, R, k)
                idem = max(idem, M.norm(res.coarse - u) / M.norm(u))
    H = hierarchy("donut(3,3)", lambda: donut(3, 3))
    Kf, Rf = H.levels[2]
    basis = harmonic_basis(Kf, Rf, 1)
    e0 = [fortin_error(H, 0, 2, 1, basis[:, j]) for j in range(basis.shape[1])]
    e1 = [fortin_error(H, 1, 2, 1, basis[:, j]) for j in range(basis.shape[1])]
    decreasing = bool(basis.shape[1]) and all(b < a for a, b in zip(e0, e1))
    verdict(14, idem <= 1e-10 and decreasing,
            f"in-space projection error {idem:.1e} <= 1e-10; donut harmonic error coarse level 0 -> 1 "
            f"(fine level 2): {[round(x, 4) for x in e0]} -> {[round(x, 4) for x in e1]}")


def test_criterion_15_discrete_compactness():
    rep = harmonic_gap_study(None, None, 3, 1, hierarchy=hierarchy("donut(3,3)", lambda: donut(3, 3)))
    gaps = [lv["gap"] for lv in rep.levels if lv["gap"] is not None]
    flat = harmonic_gap_study(None, None, 3, 1, hierarchy=hierarchy("flat_torus(3,3)", lambda: flat_torus(3, 3)))
    flat_gaps = [lv["gap"] for lv in flat.levels if lv["gap"] is not None]
    ok = len(gaps) == 2 and gaps[-1] <= gaps[0]
    verdict(15, ok, f"donut k=1 gaps {[round(x, 4) for x in gaps]} (final <= initial); "
            f"flat torus gaps {[f'{x:.1e}' for x in flat_gaps]} (harmonic space exactly nested)")


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    failed = 0
    for t in tests:
        start = time.time()
        try:
            t()
        except AssertionError:
            failed += 1
        print(f"    ({time.time() - start:.1f} s)")
    sys.exit(1 if failed else 0)
