"""Polynomial differential forms in barycentric coordinates.

A :class:`PolyForm` lives on one simplex ("host") of dimension ``d``.  Its
terms are keyed by ``(alpha, I)`` where ``alpha`` is an exponent vector over
the local barycentric indices ``0..d`` and ``I`` an increasing tuple of local
indices, the term meaning ``c * λ^alpha dλ_I``.  The stored form is always
canonical: local index 0 (the smallest vertex) is eliminated through
``λ_0 = 1 - Σ λ_i`` and ``dλ_0 = -Σ dλ_i``, which makes equality exact.
"""

from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction
from functools import lru_cache
from types import MappingProxyType
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import FeecError
from .quadrature import simplex_rule
from .simplicial import AffineRealization, Simplex, SimplicialComplex, faces, simplex

Key = tuple[tuple[int, ...], tuple[int, ...]]
Terms = dict[Key, Fraction]

ZERO = Fraction(0)


# -- term algebra -------------------------------------------------------------------

def _insert(I: tuple[int, ...], j: int) -> tuple[int, tuple[int, ...]]:
    """Sign and result of ``dλ_j ∧ dλ_I`` (sign 0 if ``j`` already in ``I``)."""
    q = 0
    for x in I:
        if x == j:
            return 0, I
        if x < j:
            q += 1
    return (-1 if q % 2 else 1), I[:q] + (j,) + I[q:]


def _merge(I: tuple[int, ...], J: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    """Sign and result of ``dλ_I ∧ dλ_J``."""
    inv = 0
    for a in I:
        for b in J:
            if a == b:
                return 0, ()
            if a > b:
                inv += 1
    return (-1 if inv % 2 else 1), tuple(sorted(I + J))


def _add(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(x + y for x, y in zip(a, b))


@lru_cache(maxsize=None)
def _one_minus_sum_power(d: int, e: int, n: int) -> tuple[tuple[tuple[int, ...], int], ...]:
    """Expansion of ``(1 - Σ_{j != e} λ_j)**n`` as ``(beta, coef)`` pairs."""
    others = [j for j in range(d + 1) if j != e]
    out = []
    for t in range(n + 1):
        for combo in itertools.combinations_with_replacement(others, t):
            beta = [0] * (d + 1)
            for j in combo:
                beta[j] += 1
            coef = math.factorial(n) // math.factorial(n - t)
            for b in beta:
                coef //= math.factorial(b)
            out.append((tuple(beta), -coef if t % 2 else coef))
    return tuple(out)


def _eliminate(terms: Mapping[Key, Fraction], d: int, e: int) -> Terms:
    """Rewrite terms so that ``λ_e`` and ``dλ_e`` no longer appear."""
    out: Terms = {}
    for (alpha, I), c in terms.items():
        if e in I:
            pos = I.index(e)
            rest = I[:pos] + I[pos + 1:]
            dparts = []
            for j in range(d + 1):
                if j == e or j in rest:
                    continue
                q = sum(1 for x in rest if x < j)
                sign = 1 if (pos - q) % 2 else -1
                dparts.append((rest[:q] + (j,) + rest[q:], sign))
        else:
            dparts = [(I, 1)]
        n = alpha[e]
        if n == 0:
            polys = ((alpha, 1),)
        else:
            base = alpha[:e] + (0,) + alpha[e + 1:]
            polys = tuple((_add(base, beta), pc) for beta, pc in _one_minus_sum_power(d, e, n))
        for a2, pc in polys:
            for J, s in dparts:
                key = (a2, J)
                out[key] = out.get(key, ZERO) + c * (pc * s)
    return {k: v for k, v in out.items() if v}


def _wedge_terms(A: Mapping[Key, Fraction], B: Mapping[Key, Fraction]) -> Terms:
    out: Terms = {}
    for (a1, I), c1 in A.items():
        for (a2, J), c2 in B.items():
            s, K = _merge(I, J)
            if s == 0:
                continue
            key = (_add(a1, a2), K)
            out[key] = out.get(key, ZERO) + (c1 * c2 if s > 0 else -(c1 * c2))
    return {k: v for k, v in out.items() if v}


def basis_indices(d: int, k: int) -> list[tuple[int, ...]]:
    """Canonical ``dλ_I`` basis of k-covectors on a d-simplex (``I ⊆ 1..d``)."""
    return list(itertools.combinations(range(1, d + 1), k))


# -- PolyForm ---------------------------------------------------------------------

class PolyForm:
    """Exact polynomial k-form on a single simplex, in canonical form."""

    __slots__ = ("host", "degree", "terms", "truncated")

    def __init__(self, host: Sequence[int], degree: int, terms: Mapping[Key, object] = (),
                 *, canonical: bool = False, truncated: bool = False):
        host = simplex(host)
        d = len(host) - 1
        terms = {k: Fraction(v) for k, v in dict(terms).items() if v != 0}
        if degree < 0 or (degree > d and terms):
            raise FeecError(f"degree {degree} impossible on a {d}-simplex")
        for alpha, I in terms:
            if len(alpha) != d + 1 or len(I) != degree or list(I) != sorted(set(I)) \
                    or any(not 0 <= i <= d for i in I) or min(alpha, default=0) < 0:
                raise FeecError(f"malformed term key {(alpha, I)}")
        if not canonical:
            terms = _eliminate(terms, d, 0)
        self.host = host
        self.degree = degree
        self.terms = MappingProxyType(terms)
        self.truncated = truncated

    # constructors -----------------------------------------------------------
    @classmethod
    def zero(cls, host, degree: int = 0) -> "PolyForm":
        return cls(host, degree, canonical=True)

    @classmethod
    def constant(cls, host, c=1) -> "PolyForm":
        host = simplex(host)
        return cls(host, 0, {((0,) * len(host), ()): c}, canonical=True)

    @classmethod
    def monomial(cls, host, coef=1, powers: Mapping[int, int] | None = None,
                 diffs: Sequence[int] = ()) -> "PolyForm":
        """``coef * Π λ_v**n * dλ_{w_1} ∧ ... ∧ dλ_{w_k}`` in global vertex ids."""
        host = simplex(host)
        loc = {v: i for i, v in enumerate(host)}
        alpha = [0] * len(host)
        for v, n in (powers or {}).items():
            alpha[loc[v]] += n
        idx = [loc[w] for w in diffs]
        if len(set(idx)) != len(idx):
            return cls.zero(host, len(idx))
        inv = sum(1 for a, b in itertools.combinations(idx, 2) if a > b)
        sign = -1 if inv % 2 else 1
        return cls(host, len(idx), {(tuple(alpha), tuple(sorted(idx))): sign * Fraction(coef)})

    @property
    def dim(self) -> int:
        return len(self.host) - 1

    def local(self, v: int) -> int:
        try:
            return self.host.index(v)
        except ValueError:
            raise FeecError(f"vertex {v} not in host {self.host}") from None

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    # algebra -----------------------------------------------------------------
    def _same_space(self, other: "PolyForm") -> None:
        if self.host != other.host:
            raise FeecError(f"host mismatch {self.host} vs {other.host}")
        if self.degree != other.degree:
            raise FeecError(f"degree mismatch {self.degree} vs {other.degree}")

    def __add__(self, other: "PolyForm") -> "PolyForm":
        if not isinstance(other, PolyForm):
            return NotImplemented
        self._same_space(other)
        t = dict(self.terms)
        for k, v in other.terms.items():
            t[k] = t.get(k, ZERO) + v
        return PolyForm(self.host, self.degree, t, canonical=True)

    def __neg__(self) -> "PolyForm":
        return PolyForm(self.host, self.degree, {k: -v for k, v in self.terms.items()}, canonical=True)

    def __sub__(self, other: "PolyForm") -> "PolyForm":
        return self + (-other)

    def scale(self, c) -> "PolyForm":
        c = Fraction(c)
        return PolyForm(self.host, self.degree, {k: c * v for k, v in self.terms.items()}, canonical=True)

    def __mul__(self, other):
        if isinstance(other, PolyForm):
            return wedge(self, other)
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyForm):
            return NotImplemented
        return self.host == other.host and self.degree == other.degree and dict(self.terms) == dict(other.terms)

    def __hash__(self) -> int:
        return hash((self.host, self.degree, frozenset(self.terms.items())))

    def d(self) -> "PolyForm":
        return exterior_derivative(self)

    def __repr__(self) -> str:
        if not self.terms:
            return f"PolyForm({self.host}, deg={self.degree}, 0)"
        parts = []
        for (alpha, I), c in sorted(self.terms.items()):
            mono = "".join(f"λ{self.host[i]}" + (f"^{a}" if a > 1 else "") for i, a in enumerate(alpha) if a)
            diff = "∧".join(f"dλ{self.host[i]}" for i in I)
            parts.append(f"{c}" + (f"·{mono}" if mono else "") + (f" {diff}" if diff else ""))
        return f"PolyForm({self.host}, deg={self.degree}, " + " + ".join(parts) + ")"

    # numerics ------------------------------------------------------------------
    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Coefficients in the ``dλ_I`` basis at barycentric points ``(q, d+1)``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        basis = basis_indices(self.dim, self.degree)
        col = {I: n for n, I in enumerate(basis)}
        out = np.zeros((points.shape[0], len(basis)))
        for (alpha, I), c in self.terms.items():
            val = np.full(points.shape[0], float(c))
            for i, a in enumerate(alpha):
                if a:
                    val = val * points[:, i] ** a
            out[:, col[I]] += val
        return out


def bary(host, v: int) -> PolyForm:
    """The barycentric coordinate λ_v as a 0-form on ``host``."""
    return PolyForm.monomial(host, 1, {v: 1})


def dbary(host, v: int) -> PolyForm:
    """The 1-form dλ_v on ``host``."""
    return PolyForm.monomial(host, 1, None, (v,))


def wedge(u: PolyForm, v: PolyForm) -> PolyForm:
    if u.host != v.host:
        raise FeecError(f"host mismatch {u.host} vs {v.host}")
    k = u.degree + v.degree
    if k > u.dim:
        return PolyForm(u.host, k, {}, canonical=True, truncated=True)
    return PolyForm(u.host, k, _wedge_terms(u.terms, v.terms), canonical=True)


def exterior_derivative(u: PolyForm) -> PolyForm:
    d = u.dim
    if u.degree + 1 > d:
        return PolyForm(u.host, u.degree + 1, {}, canonical=True)
    out: Terms = {}
    for (alpha, I), c in u.terms.items():
        for j in range(1, d + 1):
            a = alpha[j]
            if not a:
                continue
            s, J = _insert(I, j)
            if s == 0:
                continue
            key = (alpha[:j] + (a - 1,) + alpha[j + 1:], J)
            out[key] = out.get(key, ZERO) + c * (a * s)
    return PolyForm(u.host, u.degree + 1, {k: v for k, v in out.items() if v}, canonical=True)


def trace_to_face(u: PolyForm, face: Sequence[int]) -> PolyForm:
    """Pullback of ``u`` to a face of its host (set the other λ_j, dλ_j to 0)."""
    face = simplex(face)
    if face == u.host:
        return u
    pos = {v: i for i, v in enumerate(face)}
    if not set(face) <= set(u.host):
        raise FeecError(f"{face} is not a face of {u.host}")
    m = [pos.get(v) for v in u.host]
    p = len(face) - 1
    if u.degree > p:
        return PolyForm(face, u.degree, {}, canonical=True)
    raw: Terms = {}
    for (alpha, I), c in u.terms.items():
        if any(a and m[i] is None for i, a in enumerate(alpha)) or any(m[i] is None for i in I):
            continue
        a2 = [0] * (p + 1)
        for i, a in enumerate(alpha):
            if a:
                a2[m[i]] += a
        key = (tuple(a2), tuple(m[i] for i in I))
        raw[key] = raw.get(key, ZERO) + c
    return PolyForm(face, u.degree, raw, canonical=(face[0] == u.host[0]))


def pullback(u: PolyForm, target: Sequence[int], bary_matrix: Sequence[Sequence]) -> PolyForm:
    """Pull ``u`` back along an affine map given in barycentric form.

    ``bary_matrix[i][j]`` is the host coordinate ``λ_i`` evaluated at target
    vertex ``j``; the map sends the target simplex into the host simplex.
    """
    target = simplex(target)
    d, p = u.dim, len(target) - 1
    B = [[Fraction(x) for x in row] for row in bary_matrix]
    if len(B) != d + 1 or any(len(r) != p + 1 for r in B):
        raise FeecError("barycentric matrix has the wrong shape")
    unit = [tuple(1 if i == j else 0 for i in range(p + 1)) for j in range(p + 1)]
    lin = [{(unit[j], ()): B[i][j] for j in range(p + 1) if B[i][j]} for i in range(d + 1)]
    dlin = [{((0,) * (p + 1), (j,)): B[i][j] for j in range(p + 1) if B[i][j]} for i in range(d + 1)]
    powers: dict[tuple[int, int], Terms] = {}

    def power(i: int, n: int) -> Terms:
        if (i, n) not in powers:
            powers[(i, n)] = {((0,) * (p + 1), ()): Fraction(1)} if n == 0 else _wedge_terms(power(i, n - 1), lin[i])
        return powers[(i, n)]

    raw: Terms = {}
    for (alpha, I), c in u.terms.items():
        acc: Terms = {((0,) * (p + 1), ()): c}
        for i, a in enumerate(alpha):
            if a:
                acc = _wedge_terms(acc, power(i, a))
        for i in I:
            acc = _wedge_terms(acc, dlin[i])
        for k, v in acc.items():
            raw[k] = raw.get(k, ZERO) + v
    return PolyForm(target, u.degree, raw)


def integrate_poly(u: PolyForm) -> Fraction:
    """Integral of a top-degree form over its host, oriented by vertex order.

    Uses ``∫ λ^α dλ_1 ∧ ... ∧ dλ_d = Π α_i! / (d + |α|)!``; no metric enters.
    """
    d = u.dim
    if u.degree != d:
        raise FeecError(f"can only integrate {d}-forms over a {d}-simplex, got degree {u.degree}")
    total = ZERO
    for (alpha, _), c in u.terms.items():
        num = 1
        for a in alpha:
            num *= math.factorial(a)
        total += c * Fraction(num, math.factorial(d + sum(alpha)))
    return total


def integrate_scalar(f: PolyForm, R: AffineRealization) -> tuple[Fraction, float]:
    """``∫ f dV`` of a 0-form as ``(exact factor, volume)``; the value is their product."""
    if f.degree != 0:
        raise FeecError("integrate_scalar expects a 0-form")
    d = f.dim
    factor = ZERO
    for (alpha, _), c in f.terms.items():
        num = math.factorial(d)
        for a in alpha:
            num *= math.factorial(a)
        factor += c * Fraction(num, math.factorial(d + sum(alpha)))
    return factor, R.metric(f.host)[0]


def value_at_vertex(u: PolyForm, v: int) -> Fraction:
    """Exact value of a 0-form at a vertex of its host."""
    if u.degree != 0:
        raise FeecError("value_at_vertex expects a 0-form")
    j = u.local(v)
    total = ZERO
    for (alpha, _), c in u.terms.items():
        if sum(alpha) == alpha[j] and (j != 0 or sum(alpha) == 0):
            total += c
    return total


def koszul(u: PolyForm, base: int) -> PolyForm:
    """Cone homotopy operator toward the vertex ``base``.

    Works in the barycentric chart centred at ``base``, where the radial
    field has components ``λ_j`` and the dilation scales each ``λ_j`` by t.
    Satisfies ``koszul(du) + d(koszul(u)) = u`` for degree >= 1.
    """
    if u.degree == 0:
        raise FeecError("koszul is undefined on 0-forms; use the 0-form identity u - u(x0) = A du")
    b = u.local(base)
    terms = _eliminate(u.terms, u.dim, b) if b else dict(u.terms)
    out: Terms = {}
    for (alpha, I), c in terms.items():
        w = Fraction(1, sum(alpha) + len(I))
        for r, i in enumerate(I):
            a2 = alpha[:i] + (alpha[i] + 1,) + alpha[i + 1:]
            key = (a2, I[:r] + I[r + 1:])
            out[key] = out.get(key, ZERO) + (c * w if r % 2 == 0 else -(c * w))
    return PolyForm(u.host, u.degree - 1, {k: v for k, v in out.items() if v})


def random_polyform(host, degree: int, rng: random.Random, max_degree: int = 3,
                    n_terms: int = 4) -> PolyForm:
    """Random exact form built from raw terms (λ_0 included, then canonicalized)."""
    host = simplex(host)
    d = len(host) - 1
    terms: Terms = {}
    for _ in range(n_terms):
        alpha = [0] * (d + 1)
        for _ in range(rng.randint(0, max_degree)):
            alpha[rng.randrange(d + 1)] += 1
        I = tuple(sorted(rng.sample(range(d + 1), degree)))
        c = Fraction(rng.randint(-9, 9), rng.randint(1, 9))
        key = (tuple(alpha), I)
        terms[key] = terms.get(key, ZERO) + c
    return PolyForm(host, degree, terms)


# -- forms on complexes ------------------------------------------------------------

class CompatibleForm:
    """A family of PolyForms, one per simplex of dimension >= degree, agreeing under traces.

    Only non-zero components are stored.
    """

    __slots__ = ("complex", "degree", "components")

    def __init__(self, K: SimplicialComplex, degree: int, components: Mapping[Simplex, PolyForm],
                 check: bool = False):
        comps = {}
        for T, u in components.items():
            T = tuple(T)
            if T not in K:
                raise FeecError(f"component on {T}, which is not in the complex")
            if u.host != T or u.degree != degree:
                raise FeecError(f"component on {T} has host {u.host} and degree {u.degree}")
            if u:
                comps[T] = u
        self.complex = K
        self.degree = degree
        self.components = MappingProxyType(comps)
        if check:
            self.check()

    @classmethod
    def from_cells(cls, K: SimplicialComplex, degree: int, cells: Mapping[Simplex, PolyForm],
                   check: bool = True) -> "CompatibleForm":
        """Extend per-cell forms to every face by traces."""
        comps: dict[Simplex, PolyForm] = {}
        for S, u in cells.items():
            for F in faces(tuple(S)):
                if len(F) - 1 >= degree and F not in comps:
                    comps[F] = trace_to_face(u, F)
        return cls(K, degree, comps, check=check)

    @classmethod
    def zero(cls, K: SimplicialComplex, degree: int) -> "CompatibleForm":
        return cls(K, degree, {})

    def component(self, T: Sequence[int]) -> PolyForm:
        T = tuple(T)
        u = self.components.get(T)
        if u is not None:
            return u
        if T not in self.complex:
            raise FeecError(f"{T} not in complex")
        return PolyForm.zero(T, self.degree)

    def is_compatible(self) -> bool:
        try:
            self.check()
        except FeecError:
            return False
        return True

    def check(self) -> None:
        k = self.degree
        for S in self.complex:
            if len(S) - 2 < k:
                continue
            uS = self.components.get(S)
            for l in range(len(S)):
                F = S[:l] + S[l + 1:]
                tr = trace_to_face(uS, F) if uS is not None else None
                uF = self.components.get(F)
                if (tr is None or tr.is_zero()) and uF is None:
                    continue
                if tr is None or uF is None or tr != uF:
                    raise FeecError(f"not trace-compatible between {S} and {F}")

    def d(self) -> "CompatibleForm":
        k = self.degree
        comps = {T: exterior_derivative(u) for T, u in self.components.items() if len(T) - 1 >= k + 1}
        return CompatibleForm(self.complex, k + 1, comps)

    def wedge(self, other: "CompatibleForm") -> "CompatibleForm":
        if other.complex is not self.complex and other.complex != self.complex:
            raise FeecError("forms live on different complexes")
        k = self.degree + other.degree
        comps = {}
        for T, u in self.components.items():
            v = other.components.get(T)
            if v is not None and len(T) - 1 >= k:
                comps[T] = wedge(u, v)
        return CompatibleForm(self.complex, k, comps)

    def __mul__(self, other):
        if isinstance(other, CompatibleForm):
            return self.wedge(other)
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def scale(self, c) -> "CompatibleForm":
        return CompatibleForm(self.complex, self.degree, {T: u.scale(c) for T, u in self.components.items()})

    def __add__(self, other: "CompatibleForm") -> "CompatibleForm":
        if self.degree != other.degree:
            raise FeecError("degree mismatch")
        comps = dict(self.components)
        for T, v in other.components.items():
            comps[T] = comps[T] + v if T in comps else v
        return CompatibleForm(self.complex, self.degree, comps)

    def __neg__(self) -> "CompatibleForm":
        return self.scale(-1)

    def __sub__(self, other: "CompatibleForm") -> "CompatibleForm":
        return self + (-other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CompatibleForm):
            return NotImplemented
        return (self.degree == other.degree and self.complex == other.complex
                and dict(self.components) == dict(other.components))

    def __repr__(self) -> str:
        return f"CompatibleForm(deg={self.degree}, support={len(self.components)} simplices)"


def _minor_matrix(C: np.ndarray, k: int) -> np.ndarray:
    """Matrix of k x k minors ``det C[J, I]`` (rows J ⊆ rows, cols I ⊆ cols)."""
    rows = list(itertools.combinations(range(C.shape[0]), k))
    cols = list(itertools.combinations(range(C.shape[1]), k))
    out = np.empty((len(rows), len(cols)))
    for a, J in enumerate(rows):
        for b, I in enumerate(cols):
            out[a, b] = np.linalg.det(C[np.ix_(J, I)]) if k else 1.0
    return out


class EvaluableForm:
    """A k-form given by a callback ``fn(simplex, bary_points) -> coefficients``.

    The callback returns, for a simplex of dimension ``p >= k`` and
    barycentric points of shape ``(q, p+1)``, the array ``(q, C(p, k))`` of
    coefficients in the ``dλ_I`` basis (equivalently the values of the form
    on the edge vectors ``x_I - x_0``).  It must be re-entrant.
    """

    def __init__(self, K: SimplicialComplex, degree: int,
                 fn: Callable[[Simplex, np.ndarray], np.ndarray]):
        self.complex = K
        self.degree = degree
        self._fn = fn

    def evaluate(self, T: Simplex, points: np.ndarray) -> np.ndarray:
        p = len(T) - 1
        if p < self.degree:
            raise FeecError(f"a {self.degree}-form has no component on the {p}-simplex {T}")
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.asarray(self._fn(tuple(T), points), dtype=float)
        want = (points.shape[0], math.comb(p, self.degree))
        if out.shape != want:
            raise FeecError(f"callback returned shape {out.shape}, expected {want}")
        return out

    @classmethod
    def from_compatible(cls, u: CompatibleForm) -> "EvaluableForm":
        return cls(u.complex, u.degree, lambda T, pts: u.component(T).evaluate(pts))

    def check_compatibility(self, samples: int = 20, tol: float = 1e-9, seed: int = 0) -> float:
        """Spot-check trace agreement on random points of every shared face."""
        rng = np.random.default_rng(seed)
        k = self.degree
        worst = 0.0
        for S in self.complex:
            d = len(S) - 1
            if d - 1 < k or d == 0:
                continue
            for l in range(d + 1):
                F = S[:l] + S[l + 1:]
                p = d - 1
                pts_F = rng.dirichlet(np.ones(p + 1), size=samples)
                pts_S = np.insert(pts_F, l, 0.0, axis=1)
                sel = [i for i in range(d + 1) if i != l]
                C = np.zeros((d, p))
                for j in range(1, p + 1):
                    if sel[j] > 0:
                        C[sel[j] - 1, j - 1] += 1.0
                    if sel[0] > 0:
                        C[sel[0] - 1, j - 1] -= 1.0
                pulled = self.evaluate(S, pts_S) @ _minor_matrix(C, k)
                worst = max(worst, float(np.max(np.abs(pulled - self.evaluate(F, pts_F)), initial=0.0)))
        if worst > tol:
            raise FeecError(f"evaluable form is not trace-compatible (max discrepancy {worst:.3e})")
        return worst


def integrate_evaluable(u: EvaluableForm, T: Simplex) -> float:
    """Quadrature value of a top-degree evaluable form over the oriented simplex ``T``."""
    d = len(T) - 1
    if u.degree != d:
        raise FeecError(f"can only integrate {d}-forms over a {d}-simplex")
    pts, wts = simplex_rule(d)
    return float(wts @ u.evaluate(T, pts)[:, 0])


class AmbientForm:
    """A smooth k-form on the ambient space of a realization, written with sympy.

    ``components`` maps increasing index tuples ``J`` of ambient coordinates
    to sympy expressions in the symbols ``x0, x1, ...``.
    """

    def __init__(self, ambient_dim: int, degree: int, components: Mapping[tuple[int, ...], object]):
        import sympy

        self.ambient_dim = ambient_dim
        self.degree = degree
        self.symbols = sympy.symbols(f"x0:{ambient_dim}")
        self.components = {tuple(J): sympy.sympify(e) for J, e in components.items()}
        for J in self.components:
            if len(J) != degree or list(J) != sorted(set(J)) or any(not 0 <= j < ambient_dim for j in J):
                raise FeecError(f"bad ambient index tuple {J}")

    def d(self) -> "AmbientForm":
        import sympy

        out: dict[tuple[int, ...], object] = {}
        for J, e in self.components.items():
            for j, x in enumerate(self.symbols):
                s, J2 = _insert(J, j)
                if s == 0:
                    continue
                out[J2] = out.get(J2, 0) + s * sympy.diff(e, x)
        return AmbientForm(self.ambient_dim, self.degree + 1,
                           {J: sympy.simplify(e) for J, e in out.items() if sympy.simplify(e) != 0})

    def evaluable(self, K: SimplicialComplex, R: AffineRealization) -> EvaluableForm:
        import sympy

        if R.ambient_dim != self.ambient_dim:
            raise FeecError("ambient dimension mismatch")
        fns = {J: sympy.lambdify([self.symbols], e, "numpy") for J, e in self.components.items()}
        k = self.degree

        def fn(T, pts):
            P = R.points(T)
            X = pts @ P
            E = (P[1:] - P[0]).T
            minors = _minor_matrix(E, k)
            rows = list(itertools.combinations(range(self.ambient_dim), k))
            vals = np.zeros((pts.shape[0], len(rows)))
            for J, f in fns.items():
                vals[:, rows.index(J)] = np.broadcast_to(f(X.T), (pts.shape[0],))
            return vals @ minors

        return EvaluableForm(K, k, fn)
