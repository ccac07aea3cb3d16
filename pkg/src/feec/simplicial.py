"""Finite simplicial complexes, affine realizations and refinement.

Simplices are increasing tuples of non-negative vertex ids; the increasing
order is the orientation of every simplex.  Within each dimension simplices
are indexed lexicographically, and every matrix in the package uses that
indexing.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import FeecError
from .exact import rank_dense

Simplex = tuple[int, ...]


def simplex(vertices: Iterable[int]) -> Simplex:
    """Normalize a vertex collection to an oriented simplex."""
    vs = sorted(int(v) for v in vertices)
    if not vs:
        raise FeecError("empty simplex")
    if len(set(vs)) != len(vs):
        raise FeecError("degenerate cell")
    if vs[0] < 0:
        raise FeecError("vertex ids must be non-negative")
    return tuple(vs)


class SimplicialComplex:
    """An immutable finite simplicial complex.

    Use :func:`build_closure` to construct one from top cells; the
    constructor expects already closed, sorted, deduplicated data.
    """

    __slots__ = ("_simplices", "_index", "_hash", "_cache")

    def __init__(self, simplices: Sequence[Sequence[Simplex]]):
        self._simplices = tuple(tuple(layer) for layer in simplices)
        self._index = tuple({s: i for i, s in enumerate(layer)} for layer in self._simplices)
        self._hash = hash(self._simplices)
        self._cache: dict = {}

    @property
    def simplices(self) -> tuple[tuple[Simplex, ...], ...]:
        return self._simplices

    @property
    def dim(self) -> int:
        return len(self._simplices) - 1

    @property
    def vertices(self) -> list[int]:
        return [s[0] for s in self._simplices[0]] if self._simplices else []

    @property
    def n_vertices(self) -> int:
        return self.count(0)

    def count(self, k: int) -> int:
        return len(self._simplices[k]) if 0 <= k <= self.dim else 0

    def __getitem__(self, k: int) -> tuple[Simplex, ...]:
        return self._simplices[k] if 0 <= k <= self.dim else ()

    def f_vector(self) -> list[int]:
        return [len(layer) for layer in self._simplices]

    def index(self, T: Simplex) -> int:
        try:
            return self._index[len(T) - 1][T]
        except (IndexError, KeyError):
            raise FeecError(f"simplex {T} not in complex") from None

    def __contains__(self, T) -> bool:
        T = tuple(T)
        k = len(T) - 1
        return 0 <= k <= self.dim and T in self._index[k]

    def __iter__(self) -> Iterator[Simplex]:
        for layer in self._simplices:
            yield from layer

    def __len__(self) -> int:
        return sum(self.f_vector())

    def __eq__(self, other) -> bool:
        if not isinstance(other, SimplicialComplex):
            return NotImplemented
        return self._hash == other._hash and self._simplices == other._simplices

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"SimplicialComplex(f={self.f_vector()})"

    def euler_characteristic(self) -> int:
        return sum((-1) ** k * n for k, n in enumerate(self.f_vector()))

    def maximal(self) -> list[Simplex]:
        """Simplices that are not a face of any other simplex."""
        if "maximal" not in self._cache:
            covered = set()
            for layer in self._simplices[1:]:
                for s in layer:
                    for l in range(len(s)):
                        covered.add(s[:l] + s[l + 1:])
            self._cache["maximal"] = [s for s in self if s not in covered]
        return self._cache["maximal"]

    def cofaces(self, T: Simplex) -> list[Simplex]:
        """All simplices containing ``T`` (including ``T``), sorted by dimension."""
        if "by_vertex" not in self._cache:
            by_vertex: dict[int, list[Simplex]] = {}
            for s in self:
                for v in s:
                    by_vertex.setdefault(v, []).append(s)
            self._cache["by_vertex"] = by_vertex
        ts = set(T)
        return [s for s in self._cache["by_vertex"].get(T[0], []) if ts.issubset(s)]

    def is_pure(self) -> bool:
        return all(len(s) == self.dim + 1 for s in self.maximal())


def faces(T: Simplex, k: int | None = None) -> list[Simplex]:
    """Non-empty faces of ``T`` (of dimension ``k`` if given), lexicographic."""
    sizes = range(1, len(T) + 1) if k is None else [k + 1]
    return [c for n in sizes for c in itertools.combinations(T, n)]


def build_closure(cells: Iterable[Iterable[int]]) -> SimplicialComplex:
    """Smallest simplicial complex containing every given cell."""
    cells = [simplex(c) for c in cells]
    if not cells:
        raise FeecError("empty complex")
    top = max(len(c) for c in cells)
    layers: list[set[Simplex]] = [set() for _ in range(top)]
    for c in set(cells):
        if c in layers[len(c) - 1]:
            continue
        for n in range(1, len(c) + 1):
            layers[n - 1].update(itertools.combinations(c, n))
    return SimplicialComplex([sorted(layer) for layer in layers])


def incidence_number(T: Simplex, Tp: Simplex) -> int:
    """``(-1)**l`` if ``Tp`` is ``T`` with its ``l``-th vertex removed, else 0."""
    if len(Tp) != len(T) - 1:
        return 0
    for l in range(len(T)):
        if T[:l] + T[l + 1:] == tuple(Tp):
            return -1 if l % 2 else 1
    return 0


def coboundary_matrix(K: SimplicialComplex, k: int) -> sp.csr_matrix:
    """Integer matrix of the coboundary from k-cochains to (k+1)-cochains."""
    if not 0 <= k < K.dim:
        raise FeecError(f"degree {k} out of range for a complex of dimension {K.dim}")
    key = ("cob", k)
    if key not in K._cache:
        rows, cols, vals = [], [], []
        for i, T in enumerate(K[k + 1]):
            for l in range(k + 2):
                rows.append(i)
                cols.append(K.index(T[:l] + T[l + 1:]))
                vals.append(-1 if l % 2 else 1)
        m = sp.csr_matrix((np.array(vals, dtype=np.int64), (rows, cols)),
                          shape=(K.count(k + 1), K.count(k)))
        K._cache[key] = m
    return K._cache[key]


def star(K: SimplicialComplex, T: Simplex) -> list[Simplex]:
    """Members of ``K`` that share at least one vertex with ``T``."""
    T = tuple(T)
    if T not in K:
        raise FeecError(f"simplex {T} not in complex")
    ts = set(T)
    return [s for s in K if ts.intersection(s)]


def boundary_complex(T: Simplex) -> SimplicialComplex:
    """Complex of proper faces of ``T`` (empty for a vertex)."""
    T = simplex(T)
    if len(T) == 1:
        return SimplicialComplex([])
    return build_closure(faces(T, len(T) - 2))


def boundary_subcomplex(K: SimplicialComplex) -> SimplicialComplex:
    """Closure of the codimension-1 faces lying in exactly one top simplex."""
    if K.dim <= 0:
        return SimplicialComplex([])
    counts: dict[Simplex, int] = {}
    for S in K[K.dim]:
        for F in faces(S, K.dim - 1):
            counts[F] = counts.get(F, 0) + 1
    free = [F for F, c in counts.items() if c == 1]
    return build_closure(free) if free else SimplicialComplex([])


def is_subcomplex(L: SimplicialComplex, K: SimplicialComplex) -> bool:
    return all(s in K for s in L)


# -- realizations ------------------------------------------------------------------

def _rational(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (float, np.floating)):
        return Fraction(repr(float(x)))
    if isinstance(x, np.integer):
        return Fraction(int(x))
    return Fraction(x)


@dataclass(frozen=True)
class AffineRealization:
    """Exact rational coordinates for every vertex in a common space."""

    coords: Mapping[int, tuple[Fraction, ...]]

    def __post_init__(self):
        fixed = {int(v): tuple(_rational(x) for x in p) for v, p in self.coords.items()}
        dims = {len(p) for p in fixed.values()}
        if len(dims) > 1:
            raise FeecError("vertices live in spaces of different dimension")
        object.__setattr__(self, "coords", fixed)

    @property
    def ambient_dim(self) -> int:
        return len(next(iter(self.coords.values()))) if self.coords else 0

    def point(self, v: int) -> tuple[Fraction, ...]:
        return self.coords[v]

    def points(self, T: Simplex) -> np.ndarray:
        return np.array([[float(x) for x in self.coords[v]] for v in T])

    def edge_matrix(self, T: Simplex) -> np.ndarray:
        """Columns ``x_j - x_0`` for the vertices of ``T`` (ambient x dim T)."""
        P = self.points(T)
        return (P[1:] - P[0]).T

    def metric(self, T: Simplex) -> tuple[float, np.ndarray]:
        """Volume of ``T`` and the Gram matrix of its barycentric gradients.

        Entry ``(i, j)`` of the Gram matrix is ``dλ_i · dλ_j`` for the local
        indices ``i, j >= 1``.
        """
        d = len(T) - 1
        if d == 0:
            return 1.0, np.zeros((0, 0))
        E = self.edge_matrix(T)
        g = E.T @ E
        det = np.linalg.det(g)
        if det <= 0.0:
            raise FeecError(f"degenerate simplex {T}")
        return math.sqrt(det) / math.factorial(d), np.linalg.inv(g)

    def validate(self, K: SimplicialComplex) -> None:
        """Check that every simplex spans an affine space of its own dimension."""
        for T in K:
            if any(v not in self.coords for v in T):
                raise FeecError(f"simplex {T} has unrealized vertices")
            if len(T) == 1:
                continue
            p0 = self.coords[T[0]]
            rows = [[a - b for a, b in zip(self.coords[v], p0)] for v in T[1:]]
            if rank_dense(rows) != len(T) - 1:
                raise FeecError(f"realization of {T} is degenerate")

    def max_edge_length(self, K: SimplicialComplex) -> float:
        return max((float(np.linalg.norm(self.edge_matrix(e)[:, 0])) for e in K[1]), default=0.0)


def total_volume(K: SimplicialComplex, R: AffineRealization) -> float:
    return sum(R.metric(S)[0] for S in K.maximal())


# -- refinement ----------------------------------------------------------------------

@dataclass(frozen=True)
class Subdivision:
    """Result of one barycentric subdivision step.

    ``parents[v]`` is the coarse simplex whose barycenter is fine vertex ``v``.
    """

    complex: SimplicialComplex
    realization: AffineRealization
    parents: tuple[Simplex, ...]
    coarse: SimplicialComplex


def subdivide(K: SimplicialComplex, R: AffineRealization) -> Subdivision:
    parents = tuple(K)
    vid = {s: i for i, s in enumerate(parents)}
    cells = []
    for S in K.maximal():
        for perm in itertools.permutations(S):
            cells.append([vid[tuple(sorted(perm[: j + 1]))] for j in range(len(S))])
    fine = build_closure(cells)
    coords = {}
    for s, i in vid.items():
        pts = [R.point(v) for v in s]
        coords[i] = tuple(sum(c) / len(s) for c in zip(*pts))
    return Subdivision(fine, AffineRealization(coords), parents, K)


def barycentric_subdivision(K: SimplicialComplex, R: AffineRealization
                            ) -> tuple[SimplicialComplex, AffineRealization]:
    sd = subdivide(K, R)
    return sd.complex, sd.realization


# -- generators ----------------------------------------------------------------------

def _round12(x: float) -> Fraction:
    return Fraction(f"{x:.12f}")


def simplex_mesh(n: int):
    if n < 0:
        raise FeecError("simplex dimension must be >= 0")
    K = build_closure([range(n + 1)])
    amb = max(n, 1)
    coords = {0: (0,) * amb}
    for i in range(1, n + 1):
        coords[i] = tuple(1 if j == i - 1 else 0 for j in range(amb))
    return K, AffineRealization(coords)


def sphere(n: int):
    if n < 0:
        raise FeecError("sphere dimension must be >= 0")
    K = boundary_complex(tuple(range(n + 2)))
    coords = {0: (0,) * (n + 1)}
    for i in range(1, n + 2):
        coords[i] = tuple(1 if j == i - 1 else 0 for j in range(n + 1))
    return K, AffineRealization(coords)


def circle(N: int):
    """Regular N-gon with (numerically) unit edges."""
    if N < 3:
        raise FeecError("circle needs N >= 3")
    K = build_closure([(i, (i + 1) % N) for i in range(N)])
    r = 1.0 / (2.0 * math.sin(math.pi / N))
    coords = {i: (_round12(r * math.cos(2 * math.pi * i / N)),
                  _round12(r * math.sin(2 * math.pi * i / N))) for i in range(N)}
    return K, AffineRealization(coords)


def _grid_cells(m: int, n: int) -> list[tuple[int, int, int]]:
    vid = lambda i, j: (i % m) * n + (j % n)
    cells = []
    for i in range(m):
        for j in range(n):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)
            cells.append((a, b, d))
            cells.append((a, c, d))
    return cells


def flat_torus(m: int, n: int):
    """Periodic m x n grid of unit squares, each cut along a diagonal.

    Realized in 4-space as a product of two planar polygons, so the induced
    piecewise-flat metric is that of the flat torus [0,m] x [0,n].
    """
    if m < 3 or n < 3:
        raise FeecError("torus needs m, n >= 3")
    K = build_closure(_grid_cells(m, n))
    rm = 1.0 / (2.0 * math.sin(math.pi / m))
    rn = 1.0 / (2.0 * math.sin(math.pi / n))
    coords = {}
    for i in range(m):
        for j in range(n):
            a, b = 2 * math.pi * i / m, 2 * math.pi * j / n
            coords[i * n + j] = tuple(_round12(x) for x in
                                      (rm * math.cos(a), rm * math.sin(a), rn * math.cos(b), rn * math.sin(b)))
    return K, AffineRealization(coords)


def donut(m: int, n: int, major: float = 2.0, minor: float = 1.0):
    """The m x n torus triangulation as a polyhedral surface of revolution in 3-space.

    Same combinatorics as :func:`flat_torus`, but the piecewise-flat metric
    is not flat, so discrete harmonic forms are not exactly representable.
    """
    if m < 3 or n < 3:
        raise FeecError("torus needs m, n >= 3")
    if not major > minor > 0:
        raise FeecError("need major > minor > 0")
    K = build_closure(_grid_cells(m, n))
    coords = {}
    for i in range(m):
        for j in range(n):
            a, b = 2 * math.pi * i / m, 2 * math.pi * j / n
            rho = major + minor * math.cos(b)
            coords[i * n + j] = tuple(_round12(x) for x in
                                      (rho * math.cos(a), rho * math.sin(a), minor * math.sin(b)))
    return K, AffineRealization(coords)


def book():
    """Three triangles glued along the edge {0, 1}, in three distinct planes."""
    K = build_closure([(0, 1, 2), (0, 1, 3), (0, 1, 4)])
    coords = {0: (0, 0, 0), 1: (1, 0, 0), 2: (0, 1, 0), 3: (0, 0, 1), 4: (0, -1, 1)}
    return K, AffineRealization(coords)


GENERATORS = {
    "simplex": simplex_mesh,
    "sphere": sphere,
    "circle": circle,
    "flat_torus": flat_torus,
    "torus": flat_torus,
    "donut": donut,
    "book": book,
}


def generate(kind: str, *params: int):
    """Build one of the named test geometries, e.g. ``generate("flat_torus", 3, 3)``."""
    try:
        fn = GENERATORS[kind]
    except KeyError:
        raise FeecError(f"unknown generator {kind!r}") from None
    try:
        return fn(*params)
    except TypeError as exc:
        raise FeecError(f"bad parameters for {kind}: {params}") from exc
