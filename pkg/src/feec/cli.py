"""Command-line front end: ``feec <command> [mesh.json | --generate kind:params] ...``."""

from __future__ import annotations

import argparse
import os
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import cohomology as coh
from . import hodge
from .errors import FeecError, InvariantError, ParseError
from .io import cochain_from_json, cochain_to_json, dumps, form_from_json, mesh_from_json, mesh_to_json
from .simplicial import boundary_subcomplex, build_closure, coboundary_matrix, generate
from .whitney import Cochain, interpolate, verify_wedge_closure

COMMANDS = ("check", "betti", "relative-betti", "mv-check", "wedge-check", "interpolate", "hodge",
            "harmonic", "poincare", "infsup", "fortin", "gap-study", "refine", "generate")

TOLERANCES = {"nullspace": hodge.NULLSPACE_REL, "band": hodge.POINCARE_BAND, "fortin": 1e-10}


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="feec", description="Whitney forms, exact cohomology and discrete Hodge theory.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("mesh", nargs="?", help="mesh JSON file (or use --generate)")
    p.add_argument("-k", type=int, default=None, help="form degree")
    p.add_argument("-n", type=int, default=None, help="polynomial order")
    p.add_argument("--levels", type=int, default=None, help="number of refinement levels, base included")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--generate", metavar="KIND:PARAMS", help="built-in mesh, e.g. torus:3,3 or simplex:2")
    p.add_argument("--rel", metavar="boundary|PATH", help="subcomplex for relative cohomology")
    p.add_argument("-o", "--output", help="write the report here instead of standard output")
    p.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE",
                   help=f"override a tolerance ({', '.join(TOLERANCES)})")
    p.add_argument("--trials", type=int, default=100, help="random trials for wedge-check")
    p.add_argument("--form", help="form JSON file for interpolate")
    p.add_argument("--cochain", help="cochain JSON file for hodge")
    return p


def _mesh(args):
    if args.generate and args.mesh:
        raise UsageError("give either a mesh file or --generate, not both")
    if args.generate:
        kind, _, params = args.generate.partition(":")
        try:
            nums = [int(x) for x in params.split(",") if x.strip()]
        except ValueError:
            raise UsageError(f"bad generator parameters {params!r}") from None
        return generate(kind, *nums)
    if args.mesh:
        return mesh_from_json(args.mesh)
    raise UsageError("a mesh file or --generate is required")


def _tols(args) -> dict:
    tols = dict(TOLERANCES)
    for item in args.tol:
        name, sep, val = item.partition("=")
        if not sep or name not in tols:
            raise UsageError(f"unknown tolerance {item!r}")
        try:
            tols[name] = float(val)
        except ValueError:
            raise UsageError(f"bad tolerance value {val!r}") from None
    return tols


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("FEEC_THREADS", "1")))
    except ValueError:
        return 1


def _degree(args, K, default=None) -> int:
    k = args.k if args.k is not None else default
    if k is None:
        raise UsageError("-k is required")
    if not 0 <= k <= K.dim:
        raise FeecError(f"degree {k} out of range for a {K.dim}-dimensional complex")
    return k


def _cohomology_report(C, seed) -> dict:
    b = coh.betti(C)
    chi, _ = coh.euler_poincare(C)
    def closed(k):
        if k == 0 or k >= len(C.dims):
            return True
        return (C.d(k) @ C.d(k - 1)).is_zero()

    exactness = [{"degree": k, "ok": closed(k),
                  "ranks": {"dim": C.dims[k], "rank_in": C.rank(k - 1), "rank_out": C.rank(k)}}
                 for k in range(len(C.dims))]
    return {"betti": b, "euler": chi, "exactness": exactness, "seed": seed}


# -- commands ---------------------------------------------------------------------------

def cmd_check(args, K, R, tols):
    R.validate(K)
    dd = all((coboundary_matrix(K, k + 1) @ coboundary_matrix(K, k)).count_nonzero() == 0
             for k in range(K.dim - 1))
    return {"dim": K.dim, "f_vector": K.f_vector(), "euler": K.euler_characteristic(), "valid": True,
            "dd_zero": dd, "pure": K.is_pure(), "h": R.max_edge_length(K), "seed": args.seed}


def cmd_betti(args, K, R, tols):
    if args.n is not None and args.n > 1:
        return dict(_cohomology_report(coh.highorder_complex(K, args.n), args.seed), order=args.n)
    return _cohomology_report(coh.whitney_complex(K), args.seed)


def cmd_relative_betti(args, K, R, tols):
    if not args.rel:
        raise UsageError("--rel is required")
    if args.rel == "boundary":
        L = boundary_subcomplex(K)
    else:
        L0, _ = mesh_from_json(args.rel)
        L = build_closure(L0.maximal())
    return dict(_cohomology_report(coh.relative_complex(K, L), args.seed), subcomplex=L.f_vector())


def cmd_mv_check(args, K, R, tols):
    steps = []
    for Kp, T in coh.assembly_steps(K):
        rep = coh.mayer_vietoris_check(Kp, T)
        entry = {"added": list(T), "ok": rep.ok, "betti": rep.betti["K"]}
        if not rep.ok:
            entry["failures"] = rep.failures()
        steps.append(entry)
    C = coh.whitney_complex(K)
    return {"betti": coh.betti(C), "euler": coh.euler_poincare(C)[0], "ok": all(s["ok"] for s in steps),
            "exactness": steps, "seed": args.seed}


def cmd_wedge_check(args, K, R, tols):
    kmax = args.k if args.k is not None else min(K.dim, 2)
    nmax = args.n if args.n is not None else 4
    configs = [(k, m, l, n) for k in range(kmax + 1) for l in range(kmax + 1 - k)
               for m in range(1, nmax) for n in range(1, nmax + 1 - m) if k + l <= K.dim]
    with ThreadPoolExecutor(max_workers=_threads()) as ex:
        reports = list(ex.map(lambda c: verify_wedge_closure(K, *c, trials=args.trials, seed=args.seed), configs))
    return {"ok": all(r.ok for r in reports), "configs": [r.to_dict() for r in reports], "seed": args.seed}


def cmd_interpolate(args, K, R, tols):
    if not args.form:
        raise UsageError("--form is required")
    u = form_from_json(args.form, K)
    c = interpolate(u)
    out = {"cochain": cochain_to_json(c)}
    if u.degree < K.dim:
        out["commutes"] = c.coboundary() == interpolate(u.d())
    out["seed"] = args.seed
    return out


def cmd_hodge(args, K, R, tols):
    if args.cochain:
        c = cochain_from_json(args.cochain, K)
        k = c.degree
        x = c.to_float()
    else:
        k = _degree(args, K)
        x = np.random.default_rng(args.seed).standard_normal(K.count(k))
    parts = hodge.hodge_decompose(x, K, R, k)
    return {"degree": k, "norms": parts.norms, "reconstruction_error": parts.reconstruction_error,
            "orthogonality": parts.orthogonality,
            "parts": {"exact": parts.exact, "harmonic": parts.harmonic, "residual": parts.residual},
            "seed": args.seed}


def cmd_harmonic(args, K, R, tols):
    k = _degree(args, K)
    H = hodge.harmonic_basis(K, R, k, rel_threshold=tols["nullspace"])
    return {"degree": k, "dimension": int(H.shape[1]), "betti": coh.betti(coh.whitney_complex(K))[k],
            "basis": [H[:, j] for j in range(H.shape[1])], "seed": args.seed}


def _spectral(args, K, R, tols, default_levels):
    k = _degree(args, K)
    levels = args.levels or default_levels
    report = hodge.poincare_study(K, R, levels, k).to_dict()
    report["thresholds"]["poincare_band"] = tols["band"]
    cs = [lv["poincare"] for lv in report["levels"] if lv["poincare"]]
    report["summary"] = {
        "poincare_ratio": max(cs) / min(cs) if cs else None,
        "reciprocity": max((abs(lv["poincare"] * lv["infsup"] - 1) for lv in report["levels"] if lv["poincare"]),
                           default=None),
    }
    report["seed"] = args.seed
    return report


def cmd_poincare(args, K, R, tols):
    return _spectral(args, K, R, tols, 1)


def cmd_infsup(args, K, R, tols):
    return _spectral(args, K, R, tols, 1)


def cmd_fortin(args, K, R, tols):
    k = _degree(args, K)
    levels = args.levels or 3
    if levels < 2:
        raise FeecError("fortin needs at least two levels")
    H = hodge.Hierarchy(K, R, levels)
    fine = levels - 1
    Kf, Rf = H.levels[fine]
    basis = hodge.harmonic_basis(Kf, Rf, k)
    errors = []
    for coarse in range(fine):
        errs = [hodge.fortin_error(H, coarse, fine, k, basis[:, j]) for j in range(basis.shape[1])]
        errors.append({"coarse": coarse, "fine": fine, "max_error": max(errs, default=0.0), "errors": errs})
    # projection property on the base level
    u = np.random.default_rng(args.seed).standard_normal(K.count(k))
    F, g = hodge.fortin_rhs(H, 0, 0, k, u)
    res = hodge.fortin_project(K, R, k, F, g)
    M = hodge.mass_matrix(K, R, k)
    idem = M.norm(res.coarse - u) / M.norm(u)
    return {"degree": k, "levels": errors, "idempotence_error": idem,
            "idempotent": idem <= tols["fortin"], "seed": args.seed}


def cmd_gap_study(args, K, R, tols):
    k = _degree(args, K)
    report = hodge.harmonic_gap_study(K, R, args.levels or 3, k).to_dict()
    gaps = [lv["gap"] for lv in report["levels"] if lv["gap"] is not None]
    report["summary"] = {"final_le_initial": gaps[-1] <= gaps[0] if gaps else True}
    report["seed"] = args.seed
    return report


def cmd_refine(args, K, R, tols):
    H = hodge.Hierarchy(K, R, args.levels or 2)
    return mesh_to_json(*H.levels[-1])


def cmd_generate(args, K, R, tols):
    return mesh_to_json(K, R)


HANDLERS = {name: globals()["cmd_" + name.replace("-", "_")] for name in COMMANDS}


# -- entry point ---------------------------------------------------------------------------

def _write(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def run(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        tols = _tols(args)
        K, R = _mesh(args)
        report = HANDLERS[args.command](args, K, R, tols)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"feec: error: {exc}\n")
        return 2
    except InvariantError as exc:
        sidecar = (args.output or "feec") + ".diagnostics.json"
        Path(sidecar).write_text(dumps(exc.diagnostics))
        _write(dumps({"error": {"kind": "invariant", "message": str(exc), "diagnostics": sidecar}}), args.output)
        return 1
    except ParseError as exc:
        _write(dumps({"error": {"kind": "parse", "message": str(exc)}}), args.output)
        return 1
    except FeecError as exc:
        _write(dumps({"error": {"kind": "domain", "message": str(exc)}}), args.output)
        return 1
    _write(dumps(report), args.output)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
