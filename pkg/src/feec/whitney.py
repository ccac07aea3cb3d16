"""Whitney forms, degrees of freedom, interpolation and the spaces X^k_n."""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from . import exact
from .errors import FeecError
from .polyform import (
    CompatibleForm,
    EvaluableForm,
    PolyForm,
    exterior_derivative,
    integrate_evaluable,
    integrate_poly,
    pullback,
    wedge,
)
from .simplicial import Simplex, SimplicialComplex, Subdivision, faces, simplex

ZERO = Fraction(0)


# -- basis forms ---------------------------------------------------------------------

@lru_cache(maxsize=65536)
def whitney_component(T: Simplex, S: Simplex) -> PolyForm:
    """Component of the Whitney form of ``T`` on a simplex ``S ⊇ T``."""
    loc = {v: i for i, v in enumerate(S)}
    if not set(T) <= loc.keys():
        raise FeecError(f"{T} is not a face of {S}")
    k = len(T) - 1
    idx = [loc[v] for v in T]
    raw = {}
    for i in range(k + 1):
        alpha = [0] * len(S)
        alpha[idx[i]] = 1
        key = (tuple(alpha), tuple(idx[:i] + idx[i + 1:]))
        raw[key] = Fraction((-1) ** i * math.factorial(k))
    return PolyForm(S, k, raw)


def whitney_form(K: SimplicialComplex, T: Sequence[int]) -> CompatibleForm:
    T = simplex(T)
    if T not in K:
        raise FeecError(f"{T} is not in the complex")
    return CompatibleForm(K, len(T) - 1, {S: whitney_component(T, S) for S in K.cofaces(T)})


# -- cochains ------------------------------------------------------------------------

class Cochain:
    """Coefficients over ``K[k]`` in lexicographic simplex order.

    Exact cochains hold a tuple of Fractions; inexact ones a float array.
    """

    __slots__ = ("complex", "degree", "values", "exact")

    def __init__(self, K: SimplicialComplex, degree: int, values, exact: bool | None = None):
        if exact is None:
            exact = not isinstance(values, np.ndarray) and all(isinstance(v, (int, Fraction)) for v in values)
        if exact:
            values = tuple(Fraction(v) for v in values)
        else:
            values = np.array(values, dtype=float)
            values.setflags(write=False)
        if len(values) != K.count(degree):
            raise FeecError(f"cochain has {len(values)} values, expected {K.count(degree)}")
        self.complex = K
        self.degree = degree
        self.values = values
        self.exact = exact

    @classmethod
    def zero(cls, K: SimplicialComplex, degree: int) -> "Cochain":
        return cls(K, degree, [ZERO] * K.count(degree), exact=True)

    @classmethod
    def indicator(cls, K: SimplicialComplex, T: Sequence[int]) -> "Cochain":
        T = simplex(T)
        vals = [ZERO] * K.count(len(T) - 1)
        vals[K.index(T)] = Fraction(1)
        return cls(K, len(T) - 1, vals, exact=True)

    def to_float(self) -> np.ndarray:
        return np.array([float(v) for v in self.values]) if self.exact else np.array(self.values)

    def as_dict(self) -> dict[Simplex, object]:
        return {T: v for T, v in zip(self.complex[self.degree], self.values) if v}

    def coboundary(self) -> "Cochain":
        from .simplicial import coboundary_matrix

        D = coboundary_matrix(self.complex, self.degree)
        if self.exact:
            return Cochain(self.complex, self.degree + 1, exact.QMatrix.from_scipy(D).apply(self.values), True)
        return Cochain(self.complex, self.degree + 1, D @ self.to_float(), False)

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Cochain):
            return NotImplemented
        return (self.degree == other.degree and self.complex == other.complex
                and list(self.values) == list(other.values))

    def __repr__(self) -> str:
        kind = "exact" if self.exact else "float"
        return f"Cochain(deg={self.degree}, n={len(self.values)}, {kind})"


# -- degrees of freedom and interpolation ---------------------------------------------------

AnyForm = Union[CompatibleForm, EvaluableForm]


def dof(u: AnyForm, T: Sequence[int], R=None):
    """Integral of ``u`` over the oriented simplex ``T`` (exact for polynomial forms)."""
    T = simplex(T)
    if u.degree != len(T) - 1:
        raise FeecError(f"a {u.degree}-form has no degree of freedom on the {len(T) - 1}-simplex {T}")
    if isinstance(u, CompatibleForm):
        return integrate_poly(u.component(T))
    return integrate_evaluable(u, T)


def interpolate(u: AnyForm, R=None) -> Cochain:
    """Canonical interpolant: the cochain of degrees of freedom of ``u``."""
    K, k = u.complex, u.degree
    if not 0 <= k <= K.dim:
        raise FeecError(f"degree {k} out of range for a {K.dim}-dimensional complex")
    if isinstance(u, CompatibleForm):
        return Cochain(K, k, [integrate_poly(u.component(T)) for T in K[k]], exact=True)
    return Cochain(K, k, np.array([integrate_evaluable(u, T) for T in K[k]]), exact=False)


def cochain_to_form(c: Cochain) -> CompatibleForm:
    """``Σ c_T λ_T`` as a compatible form."""
    if not c.exact:
        raise FeecError("cochain_to_form needs exact coefficients")
    K, k = c.complex, c.degree
    coef = {T: v for T, v in zip(K[k], c.values) if v}
    comps = {}
    for S in K:
        if len(S) - 1 < k:
            continue
        acc = None
        for T in itertools.combinations(S, k + 1):
            v = coef.get(T)
            if v:
                term = whitney_component(T, S).scale(v)
                acc = term if acc is None else acc + term
        if acc is not None:
            comps[S] = acc
    return CompatibleForm(K, k, comps)


def prolongation_matrix(sub: Subdivision, k: int) -> exact.QMatrix:
    """Exact matrix mapping coarse Whitney k-cochains to fine ones.

    Column ``T`` holds the fine degrees of freedom of the coarse Whitney form
    ``λ_T``, which lies in the fine Whitney space (nestedness).
    """
    fine, coarse = sub.complex, sub.coarse
    cindex = {T: j for j, T in enumerate(coarse[k])}
    rows = []
    for F in fine[k]:
        chain = [sub.parents[v] for v in F]
        S = max(chain, key=len)
        B = [[Fraction(1, len(C)) if v in C else ZERO for C in chain] for v in S]
        row = {}
        for T in itertools.combinations(S, k + 1):
            val = integrate_poly(pullback(whitney_component(T, S), F, B))
            if val:
                row[cindex[T]] = val
        rows.append(row)
    return exact.QMatrix(fine.count(k), coarse.count(k), rows)


# -- high-order spaces -----------------------------------------------------------------

NOT_IN_SPAN = type("NotInSpan", (), {"__repr__": lambda self: "NOT_IN_SPAN", "__bool__": lambda self: False})()
"""Verdict returned by :func:`membership` when a form is outside the span."""

Generator = tuple[tuple[int, ...], Simplex]


class HighOrderSpace:
    """The space X^k_n given by its spanning set.

    Generators are pairs ``(hats, T)`` standing for ``λ_{hats[0]}⋯λ_{hats[-1]} λ_T``
    (for ``k = 0`` the hat list has length ``n`` and ``T`` is empty).  Only
    generators whose vertex set spans a simplex of ``K`` are kept; the
    others vanish identically.  Elements are determined by their components
    on maximal cells, which index the rows of :attr:`matrix`.
    """

    def __init__(self, K: SimplicialComplex, degree: int, order: int):
        if order < 1:
            raise FeecError("order must be >= 1")
        if not 0 <= degree <= K.dim:
            raise FeecError(f"degree {degree} out of range")
        self.complex = K
        self.degree = degree
        self.order = order
        k, n = degree, order
        self.cells = tuple(S for S in K.maximal() if len(S) - 1 >= k)
        gens: set[Generator] = set()
        for S in self.cells:
            if k == 0:
                gens.update((m, ()) for m in itertools.combinations_with_replacement(S, n))
            else:
                for T in itertools.combinations(S, k + 1):
                    gens.update((m, T) for m in itertools.combinations_with_replacement(S, n - 1))
        self.generators: tuple[Generator, ...] = tuple(sorted(gens, key=lambda g: (g[1], g[0])))
        self.frame: dict[tuple[Simplex, tuple], int] = {}
        cols: list[dict[int, Fraction]] = []
        for g in self.generators:
            col = {}
            for S, u in self._generator_cells(g).items():
                for key, c in u.terms.items():
                    r = self.frame.setdefault((S, key), len(self.frame))
                    col[r] = c
            cols.append(col)
        self.matrix = exact.QMatrix.from_columns(len(self.frame), cols)
        self._rank = None
        self._pivots = None

    def _generator_cells(self, g: Generator) -> dict[Simplex, PolyForm]:
        hats, T = g
        support = set(hats) | set(T)
        out = {}
        for S in self.cells:
            if support <= set(S):
                out[S] = self.generator_component(g, S)
        return out

    def generator_component(self, g: Generator, S: Simplex) -> PolyForm:
        hats, T = g
        powers: dict[int, int] = {}
        for v in hats:
            powers[v] = powers.get(v, 0) + 1
        mono = PolyForm.monomial(S, 1, powers)
        return mono if not T else wedge(mono, whitney_component(T, S))

    @property
    def dimension(self) -> int:
        if self._rank is None:
            self._rank = len(self.basis_indices())
        return self._rank

    def basis_indices(self) -> list[int]:
        """Generators forming a basis (first independent ones in generator order)."""
        if self._pivots is None:
            self._pivots = exact.pivot_columns(self.matrix)
        return self._pivots

    def cell_components(self, coeffs: Sequence) -> dict[Simplex, PolyForm]:
        if len(coeffs) != len(self.generators):
            raise FeecError("coefficient vector does not match the spanning set")
        out: dict[Simplex, dict] = {S: {} for S in self.cells}
        for c, col in zip(coeffs, self.matrix.columns()):
            if not c:
                continue
            for r, v in col.items():
                S, key = self._row_keys[r]
                out[S][key] = out[S].get(key, ZERO) + c * v
        return {S: PolyForm(S, self.degree, t, canonical=True) for S, t in out.items()}

    @property
    def _row_keys(self) -> list[tuple[Simplex, tuple]]:
        if not hasattr(self, "_rk"):
            rk = [None] * len(self.frame)
            for key, r in self.frame.items():
                rk[r] = key
            self._rk = rk
        return self._rk

    def element(self, coeffs: Sequence) -> CompatibleForm:
        return CompatibleForm.from_cells(self.complex, self.degree, self.cell_components(coeffs), check=False)

    def random_coefficients(self, rng: random.Random) -> list[Fraction]:
        return [Fraction(rng.randint(-9, 9), rng.randint(1, 9)) for _ in self.generators]

    def frame_vector(self, cells: Mapping[Simplex, PolyForm]) -> dict[int, Fraction] | None:
        """Coordinates over the frame, or None if a term falls outside it."""
        vec = {}
        for S in self.cells:
            u = cells.get(S)
            if u is None:
                continue
            for key, c in u.terms.items():
                r = self.frame.get((S, key))
                if r is None:
                    return None
                vec[r] = c
        return vec

    def __repr__(self) -> str:
        return f"HighOrderSpace(k={self.degree}, n={self.order}, generators={len(self.generators)})"


@lru_cache(maxsize=64)
def highorder_span(K: SimplicialComplex, k: int, n: int) -> HighOrderSpace:
    return HighOrderSpace(K, k, n)


def _max_cell_components(u: CompatibleForm, cells: Iterable[Simplex]) -> dict[Simplex, PolyForm]:
    return {S: u.component(S) for S in cells}


def membership_batch(cells_list: Sequence[Mapping[Simplex, PolyForm]], space: HighOrderSpace) -> list:
    """Membership for many forms given by their maximal-cell components."""
    out: list = [NOT_IN_SPAN] * len(cells_list)
    cols, where = [], []
    for i, cells in enumerate(cells_list):
        vec = space.frame_vector(cells)
        if vec is not None:
            cols.append(vec)
            where.append(i)
    if cols:
        B = exact.QMatrix.from_columns(len(space.frame), cols)
        for i, x in zip(where, exact.solve(space.matrix, B)):
            out[i] = NOT_IN_SPAN if x is None else x
    return out


def membership(u: CompatibleForm, space: HighOrderSpace):
    """Coefficients expressing ``u`` over the spanning set, or ``NOT_IN_SPAN``."""
    if u.degree != space.degree:
        raise FeecError("degree mismatch between form and space")
    return membership_batch([_max_cell_components(u, space.cells)], space)[0]


# -- wedge closure -----------------------------------------------------------------------

def bracket(us: Sequence[PolyForm]) -> PolyForm:
    """``u_[0..m] = Σ_p (-1)^p u_p du_0 ∧ ⋯ (du_p)^ ⋯ ∧ du_m`` for 0-forms ``u_p``."""
    ds = [exterior_derivative(u) for u in us]
    total = None
    for p, u in enumerate(us):
        term = u
        for q, du in enumerate(ds):
            if q != p:
                term = wedge(term, du)
        term = term if p % 2 == 0 else -term
        total = term if total is None else total + term
    return total


def bracket_identity_holds(us: Sequence[PolyForm], k: int) -> bool:
    """``u_[0..k-1] ∧ u_[k..] = (-1)^(k-1) Σ_{i<k} (-1)^i u_i u_[0..î..]``."""
    lhs = wedge(bracket(us[:k]), bracket(us[k:]))
    rhs = None
    for i in range(k):
        term = wedge(us[i], bracket(list(us[:i]) + list(us[i + 1:])))
        term = term if (k - 1 + i) % 2 == 0 else -term
        rhs = term if rhs is None else rhs + term
    return lhs == rhs


@dataclass
class WedgeReport:
    k: int
    m: int
    l: int
    n: int
    trials: int
    seed: int
    failures: list = field(default_factory=list)
    bracket_trials: int = 0
    bracket_failures: int = 0

    @property
    def ok(self) -> bool:
        return not self.failures and not self.bracket_failures

    def to_dict(self) -> dict:
        return {"k": self.k, "m": self.m, "l": self.l, "n": self.n, "trials": self.trials,
                "seed": self.seed, "ok": self.ok, "failures": self.failures,
                "bracket_trials": self.bracket_trials, "bracket_failures": self.bracket_failures}


def verify_wedge_closure(K: SimplicialComplex, k: int, m: int, l: int, n: int,
                         trials: int = 100, seed: int = 0) -> WedgeReport:
    """Check ``X^k_m ∧ X^l_n ⊆ X^{k+l}_{m+n}`` on seeded random elements."""
    if k + l > K.dim:
        raise FeecError(f"k + l = {k + l} exceeds the complex dimension {K.dim}")
    rng = random.Random(seed)
    X, Y, Z = highorder_span(K, k, m), highorder_span(K, l, n), highorder_span(K, k + l, m + n)
    report = WedgeReport(k, m, l, n, trials, seed)
    products, inputs = [], []
    for _ in range(trials):
        a, b = X.random_coefficients(rng), Y.random_coefficients(rng)
        ua, ub = X.cell_components(a), Y.cell_components(b)
        prod = {}
        for S in Z.cells:
            if S in ua and S in ub:
                prod[S] = wedge(ua[S], ub[S])
        products.append(prod)
        inputs.append((a, b))
    for t, verdict in enumerate(membership_batch(products, Z)):
        if verdict is NOT_IN_SPAN:
            a, b = inputs[t]
            report.failures.append({"trial": t, "u": [str(x) for x in a], "v": [str(x) for x in b]})
    # bracket identity on cells large enough for brackets of degree k and l
    kk = k + 1
    big = [S for S in K.maximal() if len(S) - 1 >= kk + l]
    if big:
        for _ in range(trials):
            S = big[rng.randrange(len(big))]
            us = []
            for _ in range(kk + l + 1):
                terms = {}
                for i in range(len(S)):
                    alpha = [0] * len(S)
                    alpha[i] = 1
                    terms[(tuple(alpha), ())] = Fraction(rng.randint(-9, 9), rng.randint(1, 9))
                us.append(PolyForm(S, 0, terms))
            report.bracket_trials += 1
            if not bracket_identity_holds(us, kk):
                report.bracket_failures += 1
    return report
