"""Metric layer: mass matrices, harmonic forms, Hodge splitting and spectral constants.

Everything here is floating point; the combinatorial inputs (coboundaries,
exact kernels, Betti numbers, prolongations) come from the exact layers.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from . import exact
from .cohomology import betti, whitney_complex
from .errors import FeecError, InvariantError
from .polyform import PolyForm, basis_indices, wedge
from .simplicial import (
    AffineRealization,
    SimplicialComplex,
    coboundary_matrix,
    subdivide,
)
from .whitney import Cochain, prolongation_matrix, whitney_component

NULLSPACE_REL = 1e-8
POINCARE_BAND = 1.5


# -- mass matrices -------------------------------------------------------------------

@lru_cache(maxsize=None)
def _reference_tensor(d: int, k: int) -> np.ndarray:
    """``K[a, b, I, J] = d! ∫_ref p^a_I p^b_J`` for local Whitney forms a, b.

    ``p^a_I`` is the polynomial coefficient of ``dλ_I`` in the local Whitney
    form of the a-th k-face, so ``∫_S λ_a·λ_b = vol Σ K[a,b,I,J] det G[I,J]``.
    """
    host = tuple(range(d + 1))
    locs = list(itertools.combinations(host, k + 1))
    basis = basis_indices(d, k)
    coeffs = []
    for T in locs:
        w = whitney_component(T, host)
        per_I = {I: {} for I in basis}
        for (alpha, I), c in w.terms.items():
            per_I[I][(alpha, ())] = c
        coeffs.append([PolyForm(host, 0, per_I[I], canonical=True) for I in basis])
    n, m = len(locs), len(basis)
    out = np.zeros((n, n, m, m))
    for a in range(n):
        for b in range(a, n):
            for i in range(m):
                for j in range(m):
                    p, q = coeffs[a][i], coeffs[b][j]
                    if p and q:
                        val = float(_ref_factor(wedge(p, q)))
                        out[a, b, i, j] = out[b, a, j, i] = val
    out.setflags(write=False)
    return out


def _ref_factor(f: PolyForm):
    """``d! ∫ f`` over the reference simplex (the exact part of integrate_scalar)."""
    from fractions import Fraction

    d = f.dim
    total = Fraction(0)
    for (alpha, _), c in f.terms.items():
        num = math.factorial(d)
        for a in alpha:
            num *= math.factorial(a)
        total += c * Fraction(num, math.factorial(d + sum(alpha)))
    return total


def _minors(G: np.ndarray, k: int) -> np.ndarray:
    idx = list(itertools.combinations(range(G.shape[0]), k))
    if k == 0:
        return np.ones((1, 1))
    out = np.empty((len(idx), len(idx)))
    for a, I in enumerate(idx):
        for b, J in enumerate(idx):
            out[a, b] = np.linalg.det(G[np.ix_(I, J)])
    return out


@dataclass(frozen=True)
class MassMatrix:
    """L² Gram matrix of the Whitney k-forms under the piecewise-flat metric."""

    degree: int
    matrix: sp.csr_matrix
    volumes: dict
    grams: dict

    @property
    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def inner(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(x @ (self.matrix @ y))

    def norm(self, x: np.ndarray) -> float:
        return math.sqrt(max(self.inner(x, x), 0.0))


def mass_matrix(K: SimplicialComplex, R: AffineRealization, k: int) -> MassMatrix:
    """Assemble ``M[T, T'] = Σ_S ∫_S λ_T · λ_T'`` over the maximal cells S."""
    if not 0 <= k <= K.dim:
        raise FeecError(f"degree {k} out of range")
    key = ("mass", k)
    hit = _cache_get(K, key, R)
    if hit is not None:
        return hit
    rows, cols, vals = [], [], []
    volumes, grams = {}, {}
    for S in K.maximal():
        d = len(S) - 1
        if d < k:
            continue
        vol, G = R.metric(S)
        volumes[S], grams[S] = vol, G
        Kref = _reference_tensor(d, k)
        local = vol * np.einsum("abij,ij->ab", Kref, _minors(G, k))
        ids = [K.index(T) for T in itertools.combinations(S, k + 1)]
        for a, ia in enumerate(ids):
            for b, ib in enumerate(ids):
                rows.append(ia)
                cols.append(ib)
                vals.append(local[a, b])
    n = K.count(k)
    M = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    M = ((M + M.T) * 0.5).tocsr()
    return _cache_put(K, key, R, MassMatrix(k, M, volumes, grams))


def _cache_get(K: SimplicialComplex, key, R):
    hit = K._cache.get(key)
    if hit is not None and hit[0] is R:
        return hit[1]
    return None


def _cache_put(K: SimplicialComplex, key, R, value):
    K._cache[key] = (R, value)
    return value


def _D(K: SimplicialComplex, k: int) -> np.ndarray:
    """Dense float coboundary ``K^k -> K^{k+1}`` (empty outside the range)."""
    if 0 <= k < K.dim:
        return coboundary_matrix(K, k).toarray().astype(float)
    return np.zeros((K.count(k + 1), K.count(k)))


def _m_orthonormalize(X: np.ndarray, M: np.ndarray) -> np.ndarray:
    if X.shape[1] == 0:
        return X
    w, V = np.linalg.eigh(X.T @ M @ X)
    return X @ V @ np.diag(w ** -0.5)


# -- harmonic forms and Hodge decomposition --------------------------------------------------

def harmonic_basis(K: SimplicialComplex, R: AffineRealization, k: int,
                   rel_threshold: float = NULLSPACE_REL) -> np.ndarray:
    """M-orthonormal basis (columns) of the discrete harmonic k-cochains.

    The dimension is certified against the exact Betti number.
    """
    key = ("harmonic", k, rel_threshold)
    hit = _cache_get(K, key, R)
    if hit is not None:
        return hit
    M = mass_matrix(K, R, k).dense
    blocks = []
    if k < K.dim:
        blocks.append(_D(K, k))
    if k > 0:
        blocks.append(_D(K, k - 1).T @ M)
    n = K.count(k)
    # each block is scaled to unit size; this leaves the common nullspace unchanged
    blocks = [b / max(np.abs(b).max(), 1e-300) for b in blocks if b.size]
    A = np.vstack(blocks) if blocks else np.zeros((0, n))
    if A.shape[0]:
        _, s, Vt = la.svd(A, full_matrices=True)
        smax = s[0] if s.size else 0.0
        rank = int(np.sum(s > rel_threshold * smax)) if smax > 0 else 0
        N = Vt[rank:].T
    else:
        s, N = np.zeros(0), np.eye(n)
    b = betti(whitney_complex(K))[k]
    if N.shape[1] != b:
        raise InvariantError("harmonic/betti mismatch", {
            "degree": k, "nullity": int(N.shape[1]), "betti": b,
            "singular_values": [float(x) for x in s], "threshold": rel_threshold,
        })
    H = _m_orthonormalize(N, M)
    H.setflags(write=False)
    return _cache_put(K, key, R, H)


@dataclass
class HodgeParts:
    """``u = dα + h + r`` with the three parts mutually M-orthogonal."""

    u: np.ndarray
    alpha: np.ndarray
    exact: np.ndarray
    harmonic: np.ndarray
    residual: np.ndarray
    norms: dict = field(default_factory=dict)
    reconstruction_error: float = 0.0
    orthogonality: float = 0.0

    def to_dict(self) -> dict:
        return {
            "norms": self.norms,
            "reconstruction_error": self.reconstruction_error,
            "orthogonality": self.orthogonality,
            "exact": self.exact.tolist(),
            "harmonic": self.harmonic.tolist(),
            "residual": self.residual.tolist(),
        }


def _lstsq(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    if A.shape[1] == 0:
        return np.zeros(0)
    # scipy's default cutoff (eps * sigma_max) keeps round-off singular values of
    # rank-deficient coboundary blocks; use the max(m, n) * eps convention instead
    sol, *_ = la.lstsq(A, b, cond=max(A.shape) * np.finfo(float).eps, lapack_driver="gelsd")
    return sol


def hodge_decompose(u, K: SimplicialComplex, R: AffineRealization, k: int | None = None) -> HodgeParts:
    """Split a k-cochain into exact, harmonic and co-exact parts."""
    if isinstance(u, Cochain):
        k = u.degree
        x = u.to_float()
    else:
        if k is None:
            raise FeecError("degree required for a raw vector")
        x = np.asarray(u, dtype=float)
    if x.shape != (K.count(k),):
        raise FeecError("cochain length does not match the complex")
    M = mass_matrix(K, R, k).dense
    L = np.linalg.cholesky(M)
    Lt_x = L.T @ x
    # each part is an independent M-orthogonal projection, so the reconstruction
    # error below genuinely tests that the three ranges exhaust the space
    if k > 0:
        D = _D(K, k - 1)
        alpha = _lstsq(L.T @ D, Lt_x)
        ex = D @ alpha
    else:
        alpha, ex = np.zeros(0), np.zeros_like(x)
    if k < K.dim:
        # range of the adjoint M^{-1} Dᵀ M_{k+1}; in Cholesky coordinates L^{-1} Dᵀ M_{k+1}
        B = _D(K, k).T @ mass_matrix(K, R, k + 1).dense
        LinvB = la.solve_triangular(L, B, lower=True)
        beta = _lstsq(LinvB, Lt_x)
        r = la.solve_triangular(L.T, LinvB @ beta, lower=False)
    else:
        r = np.zeros_like(x)
    H = harmonic_basis(K, R, k)
    h = H @ (H.T @ (M @ x))
    ip = lambda a, b: float(a @ M @ b)
    nu = ip(x, x)
    parts = HodgeParts(x, alpha, ex, h, r)
    parts.norms = {"u": math.sqrt(nu), "exact": math.sqrt(max(ip(ex, ex), 0)),
                   "harmonic": math.sqrt(max(ip(h, h), 0)), "residual": math.sqrt(max(ip(r, r), 0))}
    recon = x - ex - h - r
    parts.reconstruction_error = math.sqrt(max(ip(recon, recon), 0)) / math.sqrt(nu) if nu else 0.0
    parts.orthogonality = (abs(ip(ex, h)) + abs(ip(ex, r)) + abs(ip(h, r))) / nu if nu else 0.0
    return parts


# -- spectral constants ----------------------------------------------------------------

@dataclass(frozen=True)
class SpectralConstants:
    degree: int
    poincare: float
    infsup: float
    vacuous: bool
    lambda_min: float


def spectral_constants(K: SimplicialComplex, R: AffineRealization, k: int) -> SpectralConstants:
    """Smallest eigenvalue of ``DᵀM_{k+1}D`` against ``M_k`` on the complement of ker D.

    ``C = λ_min^{-1/2}`` bounds ``‖v‖ ≤ C‖dv‖`` there and ``β = λ_min^{1/2}``
    is the inf-sup constant of the pairing ``(p, du)``.
    """
    key = ("spectral", k)
    hit = _cache_get(K, key, R)
    if hit is not None:
        return hit
    if k >= K.dim:
        return _cache_put(K, key, R, SpectralConstants(k, 0.0, math.inf, True, math.inf))
    M = mass_matrix(K, R, k).dense
    M1 = mass_matrix(K, R, k + 1).dense
    D = _D(K, k)
    Z = np.array(exact.kernel_basis(exact.QMatrix.from_scipy(coboundary_matrix(K, k))), dtype=float).T
    if Z.size == 0:
        Z = np.zeros((K.count(k), 0))
    V = la.null_space(Z.T @ M) if Z.shape[1] else np.eye(K.count(k))
    if V.shape[1] == 0:
        out = SpectralConstants(k, 0.0, math.inf, True, math.inf)
    else:
        S = V.T @ D.T @ M1 @ D @ V
        Mv = V.T @ M @ V
        w = la.eigh(0.5 * (S + S.T), 0.5 * (Mv + Mv.T), eigvals_only=True, subset_by_index=[0, 0])
        lam = float(w[0])
        if lam <= 0:
            raise InvariantError("non-positive eigenvalue on the complement of the kernel", {"lambda_min": lam})
        out = SpectralConstants(k, lam ** -0.5, lam ** 0.5, False, lam)
    return _cache_put(K, key, R, out)


def poincare_constant(K: SimplicialComplex, R: AffineRealization, k: int) -> float:
    """Discrete Poincaré constant (0.0 when the inequality is vacuous)."""
    return spectral_constants(K, R, k).poincare


def inf_sup_constant(K: SimplicialComplex, R: AffineRealization, k: int) -> float:
    """Inf-sup constant; the reciprocal of :func:`poincare_constant`."""
    return spectral_constants(K, R, k).infsup


# -- refinement hierarchies -------------------------------------------------------------

class Hierarchy:
    """Barycentric refinement chain ``level 0 (given) .. level L``."""

    def __init__(self, K: SimplicialComplex, R: AffineRealization, levels: int):
        if levels < 1:
            raise FeecError("a hierarchy needs at least one level")
        self.levels = [(K, R)]
        self.subdivisions = []
        for _ in range(levels - 1):
            sd = subdivide(*self.levels[-1])
            self.subdivisions.append(sd)
            self.levels.append((sd.complex, sd.realization))
        self._prol: dict = {}

    def __len__(self) -> int:
        return len(self.levels)

    def prolongation(self, i: int, j: int, k: int) -> sp.csr_matrix:
        """Float matrix carrying level-i k-cochains to level j (i <= j)."""
        if not 0 <= i <= j < len(self.levels):
            raise FeecError("bad level pair")
        key = (i, j, k)
        if key not in self._prol:
            if i == j:
                P = sp.identity(self.levels[i][0].count(k), format="csr")
            else:
                step = prolongation_matrix(self.subdivisions[j - 1], k)
                P = sp.csr_matrix(step.to_float()) @ self.prolongation(i, j - 1, k)
            self._prol[key] = P.tocsr()
        return self._prol[key]


@dataclass
class FortinResult:
    coarse: np.ndarray
    multiplier: np.ndarray
    constraint_residual: float


def fortin_project(K: SimplicialComplex, R: AffineRealization, k: int,
                   F: np.ndarray, g: np.ndarray | None = None) -> FortinResult:
    """Solve the Fortin saddle system on ``(K, R)``.

    ``F_i = ⟨u, λ_i⟩`` and ``g_j = ⟨du, p_j⟩`` where ``p_j`` runs over the
    basis of ``d X_h`` made of the pivot columns of the coboundary.
    """
    M = mass_matrix(K, R, k).dense
    n = K.count(k)
    if k >= K.dim:
        x = la.solve(M, F, assume_a="pos")
        return FortinResult(x, np.zeros(0), 0.0)
    M1 = mass_matrix(K, R, k + 1).dense
    D = _D(K, k)
    Pb = D[:, _range_pivots(K, k)]
    B = Pb.T @ M1 @ D
    m = Pb.shape[1]
    A = np.block([[M, B.T], [B, np.zeros((m, m))]])
    rhs = np.concatenate([F, g if g is not None else np.zeros(m)])
    try:
        sol = la.solve(A, rhs)
    except la.LinAlgError as exc:
        raise FeecError(f"singular saddle system: {exc}") from None
    x, y = sol[:n], sol[n:]
    gnorm = max(np.linalg.norm(rhs[n:]), 1.0)
    res = float(np.linalg.norm(B @ x - rhs[n:]) / gnorm)
    return FortinResult(x, y, res)


def _range_pivots(K: SimplicialComplex, k: int) -> list[int]:
    key = ("range_pivots", k)
    if key not in K._cache:
        K._cache[key] = exact.pivot_columns(exact.QMatrix.from_scipy(coboundary_matrix(K, k)))
    return K._cache[key]


def fortin_rhs(H: Hierarchy, coarse: int, fine: int, k: int, u_fine: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand sides of the coarse Fortin system for a fine-level cochain."""
    Kf, Rf = H.levels[fine]
    Kc, _ = H.levels[coarse]
    P = H.prolongation(coarse, fine, k)
    F = P.T @ (mass_matrix(Kf, Rf, k).matrix @ u_fine)
    if k >= Kc.dim:
        return F, np.zeros(0)
    P1 = H.prolongation(coarse, fine, k + 1)
    Pb = _D(Kc, k)[:, _range_pivots(Kc, k)]
    du = _D(Kf, k) @ u_fine
    g = Pb.T @ (P1.T @ (mass_matrix(Kf, Rf, k + 1).matrix @ du))
    return F, g


def fortin_error(H: Hierarchy, coarse: int, fine: int, k: int, u_fine: np.ndarray) -> float:
    """``‖u - Φ_H u‖`` measured in the fine mass norm, relative to ``‖u‖``."""
    Kc, Rc = H.levels[coarse]
    Kf, Rf = H.levels[fine]
    F, g = fortin_rhs(H, coarse, fine, k, u_fine)
    res = fortin_project(Kc, Rc, k, F, g)
    diff = u_fine - H.prolongation(coarse, fine, k) @ res.coarse
    Mf = mass_matrix(Kf, Rf, k)
    return Mf.norm(diff) / Mf.norm(u_fine)


# -- multilevel studies -------------------------------------------------------------------

@dataclass
class SpectralReport:
    degree: int
    levels: list = field(default_factory=list)
    thresholds: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"degree": self.degree, "levels": self.levels, "thresholds": self.thresholds}


def subspace_gap(X: np.ndarray, Y: np.ndarray, M: np.ndarray) -> float:
    """Sine of the largest principal angle between column spans, in the M inner product."""
    if X.shape[1] == 0 and Y.shape[1] == 0:
        return 0.0
    if X.shape[1] == 0 or Y.shape[1] == 0:
        return 1.0
    L = np.linalg.cholesky(M)
    angles = la.subspace_angles(L.T @ X, L.T @ Y)
    return float(np.sin(np.max(angles)))


def harmonic_gap_study(K0: SimplicialComplex, R0: AffineRealization, levels: int, k: int,
                       hierarchy: Hierarchy | None = None) -> SpectralReport:
    """Per-level constants and consecutive-level harmonic gaps under refinement."""
    if levels < 2:
        raise FeecError("a gap study needs at least two levels")
    H = hierarchy or Hierarchy(K0, R0, levels)
    report = SpectralReport(k, thresholds={"nullspace_rel": NULLSPACE_REL, "poincare_band": POINCARE_BAND})
    prev = None
    for j in range(levels):
        K, R = H.levels[j]
        sc = spectral_constants(K, R, k)
        basis = harmonic_basis(K, R, k)
        gap = None
        if prev is not None:
            moved = H.prolongation(j - 1, j, k) @ prev
            gap = subspace_gap(moved, basis, mass_matrix(K, R, k).dense)
        report.levels.append({
            "h": R.max_edge_length(K),
            "poincare": None if sc.vacuous else sc.poincare,
            "infsup": None if sc.vacuous else sc.infsup,
            "harmonic_dim": int(basis.shape[1]),
            "gap": gap,
        })
        prev = basis
    return report


def poincare_study(K0: SimplicialComplex, R0: AffineRealization, levels: int, k: int) -> SpectralReport:
    """Per-level Poincaré and inf-sup constants (no gaps)."""
    H = Hierarchy(K0, R0, levels)
    report = SpectralReport(k, thresholds={"poincare_band": POINCARE_BAND})
    for K, R in H.levels:
        sc = spectral_constants(K, R, k)
        report.levels.append({
            "h": R.max_edge_length(K),
            "poincare": None if sc.vacuous else sc.poincare,
            "infsup": None if sc.vacuous else sc.infsup,
            "harmonic_dim": int(harmonic_basis(K, R, k).shape[1]),
            "gap": None,
        })
    return report
