"""JSON documents for meshes, forms, cochains and reports.

Reports are written by :func:`dumps`, which is deterministic: keys keep
insertion order, floats carry 17 significant digits, rationals become
``"p/q"`` strings and non-finite floats become ``null``.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from .errors import FeecError, ParseError
from .polyform import CompatibleForm, PolyForm
from .simplicial import AffineRealization, SimplicialComplex, build_closure, simplex
from .whitney import Cochain


# -- serialization --------------------------------------------------------------------

def _emit(obj: Any, out: list[str]) -> None:
    if obj is None or obj is True or obj is False:
        out.append(json.dumps(obj))
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        out.append(format(x, ".17g") if math.isfinite(x) else "null")
    elif isinstance(obj, Fraction):
        out.append(json.dumps(str(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(", ")
            out.append(json.dumps(str(k), ensure_ascii=False))
            out.append(": ")
            _emit(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(", ")
            _emit(v, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any) -> str:
    out: list[str] = []
    _emit(obj, out)
    return "".join(out) + "\n"


def _number(x) -> Fraction:
    if isinstance(x, bool):
        raise ParseError("booleans are not numbers")
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"not a rational number: {x!r}") from None
    raise ParseError(f"not a number: {x!r}")


def _load_json(source) -> Any:
    if isinstance(source, (dict, list)):
        return source
    try:
        text = Path(source).read_text() if not str(source).lstrip().startswith("{") else str(source)
        return json.loads(text, parse_float=Fraction)
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        raise ParseError(f"parse: {exc}") from None


def _key(T) -> str:
    return "-".join(str(v) for v in T)


def _parse_key(s: str) -> tuple[int, ...]:
    try:
        return simplex(int(x) for x in s.split("-"))
    except (ValueError, FeecError) as exc:
        raise ParseError(f"bad simplex key {s!r}: {exc}") from None


# -- meshes --------------------------------------------------------------------------

def mesh_from_json(source) -> tuple[SimplicialComplex, AffineRealization]:
    """Read ``{"vertices": [...], "cells": [...]}``; unused vertices are dropped
    and the rest renumbered densely in increasing order."""
    doc = _load_json(source)
    if not isinstance(doc, dict) or "vertices" not in doc or "cells" not in doc:
        raise ParseError("parse: mesh needs 'vertices' and 'cells'")
    verts, cells = doc["vertices"], doc["cells"]
    if not isinstance(verts, list) or not isinstance(cells, list) or not cells:
        raise ParseError("parse: 'vertices' and 'cells' must be non-empty lists")
    try:
        pts = [tuple(_number(x) for x in p) for p in verts]
    except TypeError:
        raise ParseError("parse: vertex entries must be coordinate lists") from None
    used = sorted({int(v) for c in cells for v in c})
    if any(v < 0 or v >= len(pts) for v in used):
        raise ParseError("parse: cell refers to a missing vertex")
    new = {v: i for i, v in enumerate(used)}
    try:
        K = build_closure([[new[int(v)] for v in c] for c in cells])
        R = AffineRealization({new[v]: pts[v] for v in used})
    except FeecError as exc:
        raise ParseError(f"parse: {exc}") from None
    R.validate(K)
    return K, R


def _coord(x: Fraction):
    return int(x) if x.denominator == 1 else str(x)


def mesh_to_json(K: SimplicialComplex, R: AffineRealization) -> dict:
    return {
        "vertices": [[_coord(x) for x in R.point(v)] for v in K.vertices],
        "cells": [list(S) for S in K.maximal()],
    }


# -- forms -----------------------------------------------------------------------------

def form_to_json(u: CompatibleForm) -> dict:
    comps = {}
    for T in sorted(u.components, key=lambda s: (len(s), s)):
        if u.complex.cofaces(T) != [T]:
            continue  # faces follow from the maximal cells by traces
        terms = []
        for (alpha, I), c in sorted(u.components[T].terms.items()):
            terms.append({"alpha": list(alpha[1:]), "I": list(I), "coef": str(c)})
        comps[_key(T)] = terms
    return {"degree": u.degree, "components": comps}


def form_from_json(source, K: SimplicialComplex) -> CompatibleForm:
    """Read a form document.

    ``alpha`` has length ``dim T`` (exponents of λ_1..λ_d, with ``I`` using
    local indices 1..d) or ``dim T + 1`` (all local indices 0..d, any terms).
    """
    doc = _load_json(source)
    try:
        k = int(doc["degree"])
        raw = doc["components"]
    except (KeyError, TypeError, ValueError):
        raise ParseError("parse: form needs 'degree' and 'components'") from None
    given: dict = {}
    for key, terms in raw.items():
        T = _parse_key(key)
        if T not in K:
            raise ParseError(f"parse: {T} is not a simplex of the mesh")
        d = len(T) - 1
        tdict = {}
        try:
            for t in terms:
                alpha = [int(a) for a in t["alpha"]]
                I = tuple(int(i) for i in t["I"])
                if len(alpha) == d:
                    alpha = [0] + alpha
                elif len(alpha) != d + 1:
                    raise ParseError(f"parse: alpha of length {len(alpha)} on a {d}-simplex")
                key2 = (tuple(alpha), tuple(sorted(I)))
                sign = 1
                if len(set(I)) != len(I):
                    continue
                inv = sum(1 for a in range(len(I)) for b in range(a + 1, len(I)) if I[a] > I[b])
                sign = -1 if inv % 2 else 1
                tdict[key2] = tdict.get(key2, Fraction(0)) + sign * _number(t["coef"])
            given[T] = PolyForm(T, k, tdict)
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"parse: bad term on {key}: {exc}") from None
    tops = {T: u for T, u in given.items() if not any(set(T) < set(S) for S in given)}
    u = CompatibleForm.from_cells(K, k, tops, check=True)
    for T, v in given.items():
        if u.component(T) != v:
            raise FeecError(f"not trace-compatible on {T}")
    return u


# -- cochains ---------------------------------------------------------------------------

def cochain_to_json(c: Cochain) -> dict:
    vals = {}
    for T, v in zip(c.complex[c.degree], c.values):
        if v:
            vals[_key(T)] = v if not c.exact else str(v)
    return {"degree": c.degree, "values": vals}


def cochain_from_json(source, K: SimplicialComplex) -> Cochain:
    doc = _load_json(source)
    try:
        k = int(doc["degree"])
        raw = doc["values"]
    except (KeyError, TypeError, ValueError):
        raise ParseError("parse: cochain needs 'degree' and 'values'") from None
    exact = all(isinstance(v, (str, int)) for v in raw.values())
    vals = [Fraction(0)] * K.count(k)
    for key, v in raw.items():
        T = _parse_key(key)
        if len(T) - 1 != k or T not in K:
            raise ParseError(f"parse: {key} is not a {k}-simplex of the mesh")
        vals[K.index(T)] = _number(v)
    if exact:
        return Cochain(K, k, vals, exact=True)
    return Cochain(K, k, np.array([float(v) for v in vals]), exact=False)
