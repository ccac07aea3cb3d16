"""Exact cohomology of cochain complexes and Mayer-Vietoris bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import exact
from .errors import FeecError, InvariantError
from .exact import QMatrix
from .polyform import PolyForm, exterior_derivative, koszul
from .simplicial import (
    Simplex,
    SimplicialComplex,
    boundary_complex,
    build_closure,
    coboundary_matrix,
    is_subcomplex,
    simplex,
)
from .whitney import highorder_span


class CochainComplexView:
    """Finite cochain complex ``C^0 -> C^1 -> ... -> C^N`` over the rationals."""

    __slots__ = ("dims", "diffs", "labels", "_ranks")

    def __init__(self, dims: Sequence[int], diffs: Sequence[QMatrix],
                 labels: Sequence[Sequence] | None = None, check: bool = True):
        self.dims = list(dims)
        self.diffs = list(diffs)
        self.labels = [list(x) for x in labels] if labels is not None else None
        self._ranks: list[int | None] = [None] * len(self.diffs)
        if len(self.diffs) != max(len(self.dims) - 1, 0):
            raise FeecError("a complex with N+1 spaces needs N differentials")
        for k, D in enumerate(self.diffs):
            if D.shape != (self.dims[k + 1], self.dims[k]):
                raise FeecError(f"differential {k} has shape {D.shape}, expected {(self.dims[k + 1], self.dims[k])}")
        if check:
            for k in range(len(self.diffs) - 1):
                if not (self.diffs[k + 1] @ self.diffs[k]).is_zero():
                    raise FeecError(f"not a complex: d^{k + 1} d^{k} != 0")

    @property
    def top(self) -> int:
        return len(self.dims) - 1

    def d(self, k: int) -> QMatrix:
        """``d^k`` with zero maps outside the stored range."""
        if 0 <= k < len(self.diffs):
            return self.diffs[k]
        return QMatrix.zeros(self.dim(k + 1), self.dim(k))

    def dim(self, k: int) -> int:
        return self.dims[k] if 0 <= k < len(self.dims) else 0

    def rank(self, k: int) -> int:
        if not 0 <= k < len(self.diffs):
            return 0
        if self._ranks[k] is None:
            self._ranks[k] = exact.rank(self.diffs[k])
        return self._ranks[k]

    def __repr__(self) -> str:
        return f"CochainComplexView(dims={self.dims})"


@dataclass(frozen=True)
class ComplexMorphism:
    """Per-degree maps ``f^k: A^k -> B^k`` commuting with the differentials."""

    source: CochainComplexView
    target: CochainComplexView
    maps: tuple[QMatrix, ...]

    def __post_init__(self):
        for k, f in enumerate(self.maps):
            if f.shape != (self.target.dim(k), self.source.dim(k)):
                raise FeecError(f"morphism component {k} has the wrong shape")

    def f(self, k: int) -> QMatrix:
        if 0 <= k < len(self.maps):
            return self.maps[k]
        return QMatrix.zeros(self.target.dim(k), self.source.dim(k))

    def is_chain_map(self) -> bool:
        n = max(len(self.maps), 1)
        return all((self.f(k + 1) @ self.source.d(k)) == (self.target.d(k) @ self.f(k)) for k in range(n))


def betti(C: CochainComplexView) -> list[int]:
    out = []
    for k in range(len(C.dims)):
        b = C.dims[k] - C.rank(k) - C.rank(k - 1)
        if b < 0:
            raise InvariantError("negative betti number", {"degree": k})
        out.append(b)
    return out


def euler_poincare(C: CochainComplexView) -> tuple[int, int]:
    chi_dims = sum((-1) ** k * n for k, n in enumerate(C.dims))
    chi_betti = sum((-1) ** k * b for k, b in enumerate(betti(C)))
    if chi_dims != chi_betti:
        raise InvariantError("Euler-Poincare identity fails", {"dims": C.dims, "betti": betti(C)})
    return chi_dims, chi_betti


def _coboundary(K: SimplicialComplex, k: int) -> QMatrix:
    if 0 <= k < K.dim:
        return QMatrix.from_scipy(coboundary_matrix(K, k))
    return QMatrix.zeros(K.count(k + 1), K.count(k))


def whitney_complex(K: SimplicialComplex, top: int | None = None) -> CochainComplexView:
    """Coboundary complex of ``K`` (padded with zero spaces up to ``top``)."""
    N = K.dim if top is None else top
    dims = [K.count(k) for k in range(N + 1)]
    diffs = [_coboundary(K, k) for k in range(N)]
    labels = [list(K[k]) for k in range(N + 1)]
    return CochainComplexView(dims, diffs, labels, check=False)


def highorder_complex(K: SimplicialComplex, n: int) -> CochainComplexView:
    """The complex X^0_n -> X^1_n -> ... in the pivot bases of the spanning sets."""
    spaces = [highorder_span(K, k, n) for k in range(K.dim + 1)]
    bases = [sp.basis_indices() for sp in spaces]
    diffs = []
    for k in range(K.dim):
        X, Y = spaces[k], spaces[k + 1]
        A = Y.matrix.select(range(Y.matrix.nrows), bases[k + 1])
        cols = []
        for j in bases[k]:
            g = X.generators[j]
            cells = {}
            support = set(g[0]) | set(g[1])
            for S in Y.cells:
                if support <= set(S):
                    cells[S] = exterior_derivative(X.generator_component(g, S))
            vec = Y.frame_vector(cells)
            if vec is None:
                raise FeecError("span not d-stable")
            cols.append(vec)
        B = QMatrix.from_columns(A.nrows, cols)
        sols = exact.solve(A, B) if cols else []
        if any(x is None for x in sols):
            raise FeecError("span not d-stable")
        diffs.append(QMatrix.from_columns(len(bases[k + 1]), sols))
    labels = [[spaces[k].generators[j] for j in bases[k]] for k in range(K.dim + 1)]
    return CochainComplexView([len(b) for b in bases], diffs, labels)


def relative_complex(K: SimplicialComplex, L: SimplicialComplex) -> CochainComplexView:
    """Cochains of ``K`` vanishing on the subcomplex ``L``."""
    if not is_subcomplex(L, K):
        raise FeecError("L is not a subcomplex of K")
    keep = [[i for i, T in enumerate(K[k]) if T not in L] for k in range(K.dim + 1)]
    diffs = [_coboundary(K, k).select(keep[k + 1], keep[k]) for k in range(K.dim)]
    labels = [[K[k][i] for i in keep[k]] for k in range(K.dim + 1)]
    return CochainComplexView([len(x) for x in keep], diffs, labels, check=False)


def simplex_exactness_witness(u: PolyForm, base: int) -> PolyForm:
    """A primitive ``v`` with ``dv = u`` for a closed form ``u`` of degree >= 1."""
    if u.degree < 1:
        raise FeecError("a witness needs a form of degree >= 1")
    if exterior_derivative(u):
        raise FeecError("form is not closed")
    v = koszul(u, base)
    if exterior_derivative(v) != u:
        raise InvariantError("homotopy witness failed", {"form": repr(u)})
    return v


# -- Mayer-Vietoris ---------------------------------------------------------------------

def _empty() -> SimplicialComplex:
    return SimplicialComplex([])


def _union(A: SimplicialComplex, B: SimplicialComplex) -> SimplicialComplex:
    top = max(A.dim, B.dim)
    return SimplicialComplex([sorted(set(A[k]) | set(B[k])) for k in range(top + 1)])


def _restriction(src: SimplicialComplex, dst: SimplicialComplex, k: int) -> QMatrix:
    """Matrix of ``u ↦ u|dst`` on k-cochains (``dst ⊆ src``)."""
    return QMatrix(dst.count(k), src.count(k), [{src.index(T): 1} for T in dst[k]])


def _stack(blocks: Sequence[Sequence[QMatrix]]) -> QMatrix:
    rows = None
    for br in blocks:
        r = br[0]
        for b in br[1:]:
            r = r.hstack(b)
        rows = r if rows is None else rows.vstack(r)
    return rows


def _span_rank(*mats: QMatrix) -> int:
    """Rank of the horizontal concatenation of matrices with equal row count."""
    M = mats[0]
    for m in mats[1:]:
        M = M.hstack(m)
    return exact.rank(M) if M.nrows and M.ncols else 0


def _kernel(M: QMatrix, n: int) -> QMatrix:
    if M.nrows == 0:
        return QMatrix.identity(n)
    basis = exact.kernel_basis(M)
    return QMatrix.from_columns(n, basis)


@dataclass
class MVReport:
    """Outcome of one Mayer-Vietoris gluing check."""

    added: Simplex
    betti: dict[str, list[int]]
    exactness: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(e["ok"] for e in self.exactness)

    def failures(self) -> list[dict]:
        return [e for e in self.exactness if not e["ok"]]

    def to_dict(self) -> dict:
        return {"added": list(self.added), "ok": self.ok, "betti": self.betti, "exactness": self.exactness}


def mayer_vietoris_check(Kp: SimplicialComplex, T: Sequence[int], top: int | None = None) -> MVReport:
    """Glue the simplex ``T`` onto ``Kp`` along ``∂T`` and certify exactness.

    Checks the short exact sequence ``0 -> A -> B -> C -> 0`` with
    ``A = K``, ``B = Kp ⊕ closure(T)``, ``C = ∂T`` degree by degree, builds
    connecting maps by snake-lemma lifts, and checks the long exact
    sequence in cohomology at every node by exact rank arithmetic.
    """
    T = simplex(T)
    if T in Kp:
        raise FeecError(f"{T} is already in the complex")
    dT = boundary_complex(T)
    if not is_subcomplex(dT, Kp):
        raise FeecError(f"the boundary of {T} is not contained in the complex")
    Tbar = build_closure([T])
    K = _union(Kp, Tbar)
    N = K.dim if top is None else max(top, K.dim)
    A = whitney_complex(K, N)
    Bp, Bt = whitney_complex(Kp, N), whitney_complex(Tbar, N)
    C = whitney_complex(dT, N)

    dimB = [Bp.dim(k) + Bt.dim(k) for k in range(N + 1)]
    dB = []
    for k in range(N):
        dB.append(_stack([[Bp.d(k), QMatrix.zeros(Bp.dim(k + 1), Bt.dim(k))],
                          [QMatrix.zeros(Bt.dim(k + 1), Bp.dim(k)), Bt.d(k)]]))
    B = CochainComplexView(dimB, dB, check=False)
    f = ComplexMorphism(A, B, tuple(_restriction(K, Kp, k).vstack(_restriction(K, Tbar, k)) for k in range(N + 1)))
    g = ComplexMorphism(B, C, tuple(_restriction(Kp, dT, k).hstack(-_restriction(Tbar, dT, k)) for k in range(N + 1)))

    report = MVReport(T, {"K": betti(A), "Kp+T": betti(B), "dT": betti(C)})

    def matrices(*named):
        return {name: [[str(x) for x in row] for row in M.to_dense()] for name, M in named}

    # short exact sequences and chain-map conditions
    for k in range(N + 1):
        fk, gk = f.f(k), g.f(k)
        rf = exact.rank(fk) if fk.nrows and fk.ncols else 0
        rg = exact.rank(gk) if gk.nrows and gk.ncols else 0
        comp_zero = (gk @ fk).is_zero()
        chain = (f.f(k + 1) @ A.d(k) == B.d(k) @ fk) and (g.f(k + 1) @ B.d(k) == C.d(k) @ gk)
        ranks = {"dim_A": A.dim(k), "dim_B": B.dim(k), "dim_C": C.dim(k), "rank_f": rf, "rank_g": rg}
        ok = rf == A.dim(k) and rg == C.dim(k) and rf + rg == B.dim(k) and comp_zero and chain
        entry = {"degree": k, "node": "short", "ok": ok, "ranks": ranks}
        if not ok:
            entry["matrices"] = matrices(("f", fk), ("g", gk))
        report.exactness.append(entry)

    # cocycles and coboundaries
    Z = {name: [_kernel(X.d(k), X.dim(k)) for k in range(N + 1)] for name, X in (("A", A), ("B", B), ("C", C))}
    Bd = {name: [X.d(k - 1) if k > 0 else QMatrix.zeros(X.dim(0), 0) for k in range(N + 1)]
          for name, X in (("A", A), ("B", B), ("C", C))}
    H = {"A": betti(A), "B": betti(B), "C": betti(C)}

    # connecting maps on cocycle bases of C
    delta: list[QMatrix] = []
    for k in range(N + 1):
        zc = Z["C"][k]
        if k == N or zc.ncols == 0:
            delta.append(QMatrix.zeros(A.dim(k + 1), zc.ncols))
            continue
        lifts = exact.solve(g.f(k), zc)
        if any(x is None for x in lifts):
            raise InvariantError("snake lemma: difference map not surjective", {"degree": k})
        b = QMatrix.from_columns(B.dim(k), lifts)
        db = B.d(k) @ b
        a = exact.solve(f.f(k + 1), db)
        if any(x is None for x in a):
            raise InvariantError("snake lemma: lift of d b not in the image of f", {"degree": k})
        delta.append(QMatrix.from_columns(A.dim(k + 1), a))

    def induced_rank(F: QMatrix, z: QMatrix, bd: QMatrix) -> int:
        if z.ncols == 0:
            return 0
        return _span_rank(F @ z, bd) - _span_rank(bd)

    def composite_zero(F: QMatrix, bd: QMatrix) -> bool:
        if F.ncols == 0:
            return True
        return _span_rank(F, bd) == _span_rank(bd)

    # long exact sequence: H^k A -> H^k B -> H^k C -> H^{k+1} A
    for k in range(N + 1):
        r_f = induced_rank(f.f(k), Z["A"][k], Bd["B"][k])
        r_g = induced_rank(g.f(k), Z["B"][k], Bd["C"][k])
        r_in_A = _span_rank(delta[k - 1], Bd["A"][k]) - _span_rank(Bd["A"][k]) if k > 0 and delta[k - 1].ncols else 0
        r_delta = _span_rank(delta[k], Bd["A"][k + 1]) - _span_rank(Bd["A"][k + 1]) \
            if k < N and delta[k].ncols else 0
        nodes = [
            ("H(A)", H["A"][k], r_in_A, r_f,
             composite_zero(f.f(k) @ delta[k - 1], Bd["B"][k]) if k > 0 else True),
            ("H(B)", H["B"][k], r_f, r_g, composite_zero(g.f(k) @ f.f(k) @ Z["A"][k], Bd["C"][k])),
            ("H(C)", H["C"][k], r_g, r_delta,
             composite_zero(delta[k] @ _lift_cocycles(g.f(k) @ Z["B"][k], Z["C"][k]), Bd["A"][k + 1])
             if k < N else True),
        ]
        for name, dim, rin, rout, zero in nodes:
            ok = rin + rout == dim and zero
            report.exactness.append({"degree": k, "node": name, "ok": ok,
                                     "ranks": {"dim": dim, "incoming": rin, "outgoing": rout}})
    return report


def _lift_cocycles(vectors: QMatrix, zc: QMatrix) -> QMatrix:
    """Coordinates of cocycle vectors in the cocycle basis ``zc``."""
    if vectors.ncols == 0 or zc.ncols == 0:
        return QMatrix.zeros(zc.ncols, vectors.ncols)
    sols = exact.solve(zc, vectors)
    if any(x is None for x in sols):
        raise InvariantError("image of a cocycle is not a cocycle")
    return QMatrix.from_columns(zc.ncols, sols)


def assembly_steps(K: SimplicialComplex):
    """Yield ``(partial complex, next simplex)`` building ``K`` in (dim, lex) order."""
    layers: list[list[Simplex]] = []
    for T in K:
        k = len(T) - 1
        yield SimplicialComplex([list(l) for l in layers]), T
        while len(layers) <= k:
            layers.append([])
        layers[k].append(T)


def relative_alternating_sum(K: SimplicialComplex, L: SimplicialComplex) -> int:
    """``Σ (-1)^k (b_k(K) - b_k(L) - b_k(K, L))``; zero by the long exact sequence."""
    bK = betti(whitney_complex(K))
    bL = betti(whitney_complex(L)) if L.dim >= 0 else []
    bKL = betti(relative_complex(K, L))
    total = 0
    for k in range(K.dim + 1):
        total += (-1) ** k * (bK[k] - (bL[k] if k < len(bL) else 0) - bKL[k])
    return total
