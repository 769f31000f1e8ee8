"""Command-line front end.

Exit codes: 0 success, 1 input error, 2 precondition or invariant failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import complex as cx
from .estimate import EstimatorConfig, PreconditionError, dqc1_qbne, qbne
from .fock import CapExceeded, SamplingFailure
from .graph_complex import (
    FERMION,
    SIMPLICIAL,
    Graph,
    betti_scan,
    clique_complex,
    hardcore_hamiltonian,
    independence_complex,
)
from .io import InputError, complex_to_json, read_graph, read_pauli, read_points
from .operators import exact_sector_rows, nilpotency_residual
from .reduction import constrained_lift, default_penalty, lift_bracket, susy_lift, verify_squared_spectrum
from .vqe import commuting_groups, hardcore_penalty, independent_start, jordan_wigner, jw_dirac, jw_laplacian, number_preserving_ansatz, vqe_run

EXIT_OK, EXIT_INPUT, EXIT_PRECONDITION = 0, 1, 2


class InvariantFailure(RuntimeError):
    pass


def _round(obj):
    """Recursively round floats to 12 significant digits; infinities become null."""
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return float(f"{x:.12g}")
    if isinstance(obj, Fraction):
        return _round(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_round(v) for v in obj]
    return obj


def _table(obj, indent: str = "") -> str:
    lines = []
    for k, v in obj.items():
        if isinstance(v, list) and v and isinstance(v[0], dict):
            lines.append(f"{indent}{k}:")
            keys = list(v[0].keys())
            lines.append(indent + "  " + "\t".join(keys))
            for row in v:
                lines.append(indent + "  " + "\t".join(str(row.get(c)) for c in keys))
        elif isinstance(v, dict):
            lines.append(f"{indent}{k}:")
            lines.append(_table(v, indent + "  "))
        else:
            lines.append(f"{indent}{k}\t{v}")
    return "\n".join(lines)


def _emit(report: dict, fmt: str) -> None:
    report = _round(report)
    if fmt == "table":
        print(_table(report))
    else:
        print(json.dumps(report, sort_keys=True))


def _graph_complex(args):
    G = read_graph(args.graph)
    kind = getattr(args, "complex", "independence")
    return G, (clique_complex(G) if kind == "clique" else independence_complex(G))


def _relabel(betti: list[int], dims: list[int], convention: str) -> list[int]:
    return cx.simplicial_relabel(betti, dims) if convention == SIMPLICIAL else betti


# -- subcommands ----------------------------------------------------------------------
def cmd_betti(args) -> dict:
    _, c = _graph_complex(args)
    dims = c.dims()
    if args.level is None:
        bl = cx.betti_numbers(c, args.method, workers=args.workers)
        return {"betti": _relabel(bl, dims, args.convention), "dims": dims,
                "convention": args.convention, "method": args.method}
    if args.convention == SIMPLICIAL:
        k = args.level
        if not 0 <= k < c.m:
            raise InputError(f"simplicial degree {k} outside 0..{c.m - 1}")
        val = cx.betti(c, k + 1, args.method) + (1 if k == 0 and dims[1] > 0 else 0)
    else:
        if not 0 <= args.level <= c.m:
            raise InputError(f"level {args.level} outside 0..{c.m}")
        val = cx.betti(c, args.level, args.method)
    return {"betti": val, "level": args.level, "convention": args.convention, "method": args.method}


def cmd_spectrum(args) -> dict:
    _, c = _graph_complex(args)
    if not 0 <= args.level <= c.m:
        raise InputError(f"level {args.level} outside 0..{c.m}")
    dim = c.space.dim(args.level)
    ev = c.eigenvalues(args.level) if dim else np.zeros(0)
    gap = cx.spectral_gap((c, args.level)) if dim else math.inf
    return {"level": args.level, "dim": dim, "eigenvalues": ev.tolist(), "gap": gap,
            "betti": cx.betti(c, args.level, "spectral") if dim else 0}


def cmd_witten(args) -> dict:
    _, c = _graph_complex(args)
    rep = cx.spectral_report(c, workers=args.workers)
    out = rep.to_json()
    if args.convention == SIMPLICIAL:
        out["betti"] = _relabel(rep.betti, rep.dims, SIMPLICIAL)
        out["euler"] = 1 - rep.witten if rep.dims[1:] and rep.dims[1] else 0
    out["convention"] = args.convention
    return out


def _parse_eps_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"bad scale list {text!r}") from None


def cmd_tda(args) -> dict:
    pc = read_points(args.points)
    rows = betti_scan(pc, _parse_eps_list(args.eps), args.max_level, args.method, args.convention, args.workers)
    return {"rows": [r.to_json() for r in rows], "convention": args.convention, "points": len(pc)}


def cmd_qbne(args) -> dict:
    _, c = _graph_complex(args)
    cfg = EstimatorConfig(args.b, args.delta, args.eps, args.mu, args.t_bits, args.seed, args.enumerate)
    if args.dqc1:
        floor = Fraction(args.floor) if args.floor else Fraction(1, 32)
        rep = dqc1_qbne(c, args.level, cfg, floor=floor, workers=args.workers)
    else:
        rep = qbne(c, args.level, cfg, workers=args.workers)
    out = rep.to_json()
    out["laplacian_threshold"] = args.b
    out["dirac_threshold"] = math.sqrt(args.b)
    return out


def cmd_reduce(args) -> dict:
    A = read_pauli(args.hamiltonian)
    out = {"qubits": A.n, "variant": args.variant, "locality": A.locality()}
    if args.variant == "constrained":
        c, l = constrained_lift(A)
        out.update({"modes": c.m, "level": l, "dims": c.dims(), "betti": cx.betti(c, l)})
        if args.verify_squares:
            chk = verify_squared_spectrum(A, c, l, args.tol)
            out["squares"] = {"ok": chk.ok, "deviation": chk.deviation}
            if not chk.ok:
                raise InvariantFailure(json.dumps(_round(out)))
    else:
        J = default_penalty(A) if args.J is None else Fraction(args.J)
        c = susy_lift(A, J)
        union = np.sort(np.concatenate([c.eigenvalues(l) for l in range(c.m + 1)]))
        out.update({"modes": c.m, "J": J, "lowest_energies": union[:8].tolist()})
        if args.verify_squares:
            from .operators import full_matrix
            B = full_matrix(lift_bracket(A, J)).toarray()
            sq = np.sort(np.linalg.eigvalsh(B) ** 2)
            dev = float(np.max(np.abs(sq - union)))
            out["squares"] = {"ok": dev <= args.tol, "deviation": dev}
            if dev > args.tol:
                raise InvariantFailure(json.dumps(_round(out)))
    if args.emit_complex:
        out["complex"] = complex_to_json(c)
    return out


def cmd_vqe(args) -> dict:
    G = read_graph(args.graph)
    H = jw_laplacian(G).expand() + hardcore_penalty(G, args.penalty)
    spec = number_preserving_ansatz(G.n, args.layers, zz=args.zz)
    res = vqe_run(H, spec, args.sector, optimizer=args.optimizer, restarts=args.restarts,
                  seed=args.seed, max_sweeps=args.max_sweeps, workers=args.workers,
                  initial=independent_start(G, args.sector))
    out = res.to_json()
    out["trace"] = out["trace"][-1:]
    out["ansatz"] = spec.to_json(res.params, args.seed)
    return out


def run_checks(G: Graph, workers: int = 1) -> dict[str, bool]:
    """Invariant suite on one graph; returns check name -> pass."""
    checks: dict[str, bool] = {}
    c = independence_complex(G, check=False)
    checks["nilpotency"] = nilpotency_residual(c.d, c.space) == 0
    H = hardcore_hamiltonian(G)
    ok = True
    for l in range(G.n + 1):
        if not c.space.dim(l):
            continue
        rows, _, _ = exact_sector_rows(H, c.space, l)
        Hl = {(r, k): v for r, row in rows.items() for k, v in row.items()}
        ok &= Hl == cx.exact_laplacian(c, l)
    checks["hamiltonian_identity"] = bool(ok)
    exact = cx.betti_numbers(c, "exact", workers=workers)
    spectral = cx.betti_numbers(c, "spectral", workers=workers)
    checks["hodge_equivalence"] = exact == spectral
    checks["euler_consistency"] = cx.euler_characteristic(exact) == cx.euler_characteristic(c.dims())
    checks["pairing"] = cx.pairing_report(c).ok
    ranks_ok = all(
        c.coboundary_rank(l) + c.coboundary_rank(l - 1) + exact[l] == c.space.dim(l) for l in range(G.n + 1)
    )
    checks["rank_nullity"] = ranks_ok
    if G.n <= 10:
        B = cx.dirac(c)
        sq = np.sort(cx.spectrum(B) ** 2)
        union = np.sort(np.concatenate([c.eigenvalues(l) for l in range(G.n + 1)]))
        checks["dirac_squares"] = bool(np.allclose(sq, union, atol=1e-8))
        Q = jw_laplacian(G).expand()
        checks["jw_laplacian"] = Q.equals(jordan_wigner(H), 1e-12)
        checks["jw_group_count"] = len(commuting_groups(jw_dirac(G))) <= G.n
        checks["jw_term_count"] = len(jw_laplacian(G)) <= G.n * (G.max_degree() + 1)
    return checks


def cmd_check(args) -> dict:
    G = read_graph(args.graph)
    checks = run_checks(G, args.workers)
    out = {"checks": checks, "ok": all(checks.values()), "n": G.n, "edges": len(G.edges)}
    if not out["ok"]:
        raise InvariantFailure(json.dumps(_round(out), sort_keys=True))
    return out


# -- parser -----------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "table"), default="json")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--convention", choices=(FERMION, SIMPLICIAL), default=FERMION)

    p = argparse.ArgumentParser(prog="susyhom", description="Supersymmetric lattice models and cohomology.")
    sub = p.add_subparsers(dest="command", required=True)

    def graph_cmd(name, help_):
        s = sub.add_parser(name, parents=[common], help=help_)
        s.add_argument("--graph", required=True)
        s.add_argument("--complex", choices=("independence", "clique"), default="independence")
        return s

    s = graph_cmd("betti", "Betti numbers of a graph complex")
    s.add_argument("--level", type=int)
    s.add_argument("--method", choices=("exact", "spectral"), default="exact")
    s.set_defaults(func=cmd_betti)

    s = graph_cmd("spectrum", "sector Laplacian spectrum")
    s.add_argument("--level", type=int, required=True)
    s.set_defaults(func=cmd_spectrum)

    s = graph_cmd("witten", "Witten index and spectral report")
    s.set_defaults(func=cmd_witten)

    s = sub.add_parser("tda", parents=[common], help="Betti numbers across Vietoris-Rips scales")
    s.add_argument("--points", required=True)
    s.add_argument("--eps", required=True, help="comma-separated scales")
    s.add_argument("--max-level", type=int, default=2)
    s.add_argument("--method", choices=("exact", "spectral"), default="exact")
    s.set_defaults(func=cmd_tda)

    s = graph_cmd("qbne", "sampled low-lying spectral density")
    s.add_argument("--level", type=int, required=True)
    s.add_argument("--b", type=float, required=True)
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--mu", type=float, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--t-bits", type=int, default=0)
    s.add_argument("--enumerate", action="store_true", help="exact counting instead of sampling")
    s.add_argument("--dqc1", action="store_true", help="two-stage full-space estimator")
    s.add_argument("--floor", help="density floor for --dqc1 (rational, default 1/32)")
    s.set_defaults(func=cmd_qbne)

    s = sub.add_parser("reduce", parents=[common], help="lift a Pauli Hamiltonian to a complex")
    s.add_argument("--hamiltonian", required=True)
    s.add_argument("--variant", choices=("penalty", "constrained"), default="constrained")
    s.add_argument("--J", help="penalty strength (rational)")
    s.add_argument("--verify-squares", action="store_true")
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--emit-complex", action="store_true")
    s.set_defaults(func=cmd_reduce)

    s = sub.add_parser("vqe", parents=[common], help="variational search for a ground state")
    s.add_argument("--graph", required=True)
    s.add_argument("--sector", type=int, required=True)
    s.add_argument("--layers", type=int, default=1)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--restarts", type=int, default=5)
    s.add_argument("--optimizer", choices=("coordinate-descent", "simplex"), default="coordinate-descent")
    s.add_argument("--max-sweeps", type=int, default=60)
    s.add_argument("--zz", action="store_true", help="add Z_iZ_j groups to the ansatz")
    s.add_argument("--penalty", type=float, default=None,
                   help="weight of the edge-occupancy penalty (default: 1 + Pauli 1-norm)")
    s.set_defaults(func=cmd_vqe)

    s = sub.add_parser("check", parents=[common], help="run the invariant suite on a graph")
    s.add_argument("--graph", required=True)
    s.set_defaults(func=cmd_check)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if args.workers < 1:
        print("error: --workers must be positive", file=sys.stderr)
        return EXIT_INPUT
    try:
        report = args.func(args)
    except (PreconditionError, SamplingFailure) as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except InvariantFailure as exc:
        print(str(exc))
        print("invariant check failed", file=sys.stderr)
        return EXIT_PRECONDITION
    except (InputError, CapExceeded, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _emit(report, args.format)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
