"""Conical-product Gauss-Jacobi rules on the reference simplex."""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

DEFAULT_POINTS = 8  # per direction; exact for total degree 2*8 - 1 = 15


@lru_cache(maxsize=None)
def simplex_rule(d: int, q: int = DEFAULT_POINTS) -> tuple[np.ndarray, np.ndarray]:
    """Barycentric nodes ``(n, d+1)`` and weights for the reference d-simplex.

    The reference simplex is ``{x >= 0, sum(x) <= 1}`` in the coordinates
    ``λ_1..λ_d``; weights sum to its volume ``1/d!``.  Exact for
    polynomials of total degree ``2q - 1``.
    """
    if d == 0:
        return np.ones((1, 1)), np.ones(1)
    rules = []
    for i in range(d):
        a = d - 1 - i
        x, w = roots_jacobi(q, a, 0)
        rules.append(((1 + x) / 2, w / 2 ** (a + 1)))
    pts, wts = [], []
    for idx in itertools.product(range(q), repeat=d):
        u = [rules[i][0][j] for i, j in enumerate(idx)]
        w = np.prod([rules[i][1][j] for i, j in enumerate(idx)])
        x, rest = [], 1.0
        for ui in u:
            x.append(rest * ui)
            rest *= 1 - ui
        pts.append([1.0 - sum(x)] + x)
        wts.append(w)
    P = np.array(pts)
    P.setflags(write=False)
    W = np.array(wts)
    W.setflags(write=False)
    return P, W
