"""Command-line harness: plan building, file transforms, benchmarks, checks.

Exit codes: 0 success, 1 usage or input error, 2 verification failure.
"""
import argparse
import json
import sys
import time

import numpy as np

from .alt import alt_forward, alt_inverse, plan_alt, plan_diagnostics, save_plan
from .bench import (desk_n0, fit_loglog_slope, metric_eps_fwd, metric_eps_inv,
                    parse_m_rule, records_to_csv, records_to_json, run_bench,
                    N0_PAPER)
from .io import load_coeffs, load_grid, save_coeffs, save_grid
from .lowrank import SamplingConfig
from .oracle import DENSE_SHT_GUARD, dense_sht_forward, dense_sht_inverse
from .partition import export_blocks, make_alt_spec, partition, trim_block
from .sht import plan_sht, sht_forward, sht_inverse

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract reserves 2 for
    verification failures, so remap usage errors to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_param_flags(p):
    p.add_argument("--eps", type=float, default=1e-10,
                   help="ID tolerance (default 1e-10)")
    p.add_argument("--n0", type=int, default=None,
                   help="partition stop size (default: 512, scaled down "
                        "below N=1024)")
    p.add_argument("--rk", type=int, default=150,
                   help="adaptive rank bound r_k (default 150)")
    p.add_argument("--rsvd-rank", type=int, default=30,
                   help="low-rank SVD rank (default 30)")
    p.add_argument("--oversample", type=int, default=2,
                   help="sampling oversize factor for ID and SVD (default 2)")
    p.add_argument("--sampling", choices=["cheb", "rand"], default="cheb",
                   help="index sampling scheme (default cheb)")
    p.add_argument("--seed", type=int, default=0)


def _params(args):
    if args.eps <= 0:
        raise ValueError(f"--eps must be positive, got {args.eps}")
    return SamplingConfig(
        mode="mock_chebyshev" if args.sampling == "cheb" else "random",
        tolerance=args.eps, adaptive_rank=args.rk,
        oversampling=args.oversample, rsvd_rank=args.rsvd_rank,
        rsvd_oversample=args.oversample, seed=args.seed)


def _effective_n0(args, n):
    if args.n0 is not None:
        return args.n0
    n0 = desk_n0(n)
    if n0 != N0_PAPER:
        print(f"note: desk-scale n0={n0} for N={n} "
              f"(paper-scale default is {N0_PAPER})", file=sys.stderr)
    return n0


def _order(args, n):
    if args.m is not None:
        return args.m
    return parse_m_rule(args.m_rule, n)


def _out_stream(path):
    return open(path, "w") if path else sys.stdout


def cmd_plan(args):
    params = _params(args)
    m = _order(args, args.n)
    n0 = _effective_n0(args, args.n)
    t0 = time.perf_counter()
    plan = plan_alt(args.n, m, params, n0=n0,
                    workers=4 if args.parallel else 1)
    dt = time.perf_counter() - t0
    if args.out:
        with open(args.out, "wb") as fh:
            save_plan(plan, fh)
    diag = plan_diagnostics(plan)
    diag.pop("per_block")
    diag["wall_seconds"] = dt
    diag["saved_to"] = args.out
    print(json.dumps(diag, indent=2))
    return 0


def cmd_transform(args):
    try:
        with open(args.infile, "rb") as fh:
            magic = fh.read(4)
            fh.seek(0)
            if magic == b"SHTC":
                payload = load_coeffs(fh)
                direction = "forward"
            elif magic == b"SHTG":
                payload = load_grid(fh)
                direction = "inverse"
            else:
                raise ValueError(f"bad magic {magic!r} at offset 0: not a "
                                 "coefficient or grid file")
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.direction != "auto" and args.direction != direction:
        print(f"error: file {args.infile} implies {direction}, "
              f"--direction says {args.direction}", file=sys.stderr)
        return 1

    n = payload.n
    params = _params(args)
    n0 = _effective_n0(args, n)
    t0 = time.perf_counter()
    plan = plan_sht(n, params, n0=n0)
    t_plan = time.perf_counter() - t0
    t0 = time.perf_counter()
    if direction == "forward":
        result = sht_forward(plan, payload)
    else:
        result = sht_inverse(plan, payload)
    t_apply = time.perf_counter() - t0
    with open(args.out, "wb") as fh:
        if direction == "forward":
            save_grid(result, fh)
        else:
            save_coeffs(result, fh)
    print(f"{direction}: N={n} plan {t_plan:.3f}s apply {t_apply:.3f}s "
          f"-> {args.out}")

    if args.verify:
        if n > DENSE_SHT_GUARD:
            print(f"note: --verify skipped, N={n} above dense guard "
                  f"{DENSE_SHT_GUARD}", file=sys.stderr)
            return 0
        if direction == "forward":
            ref = dense_sht_forward(n, payload).values
            err = np.linalg.norm(result.values - ref) / np.linalg.norm(ref)
        else:
            ref = dense_sht_inverse(n, payload)
            num = np.linalg.norm(result.pack() - ref.pack())
            err = num / np.linalg.norm(ref.pack())
        print(f"verify: relative error vs dense {err:.3e}")
        if not err <= 1e-5:
            print("verify: FAIL", file=sys.stderr)
            return 2
    return 0


def cmd_bench(args):
    params = _params(args)
    records = run_bench(args.n, m_rule=args.m_rule, params=params, n0=args.n0,
                        parity=args.parity, trials=args.trials,
                        dense_max=args.dense_max,
                        workers=4 if args.parallel else 1)
    if args.format == "csv":
        text = records_to_csv(records)
    else:
        meta = {"sampling": args.sampling, "eps": args.eps, "rk": args.rk,
                "seed": args.seed, "parallel": bool(args.parallel)}
        text = records_to_json(records, meta=meta)
    out = _out_stream(args.out)
    try:
        out.write(text)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_verify(args):
    params = _params(args)
    m = _order(args, args.n)
    n0 = _effective_n0(args, args.n)
    plan = plan_alt(args.n, m, params, n0=n0)
    rng = np.random.default_rng(params.seed)
    checks = []

    flags = {}
    for parity in ("odd", "even"):
        spec = plan.spec_odd if parity == "odd" else plan.spec_even
        if spec is None:
            continue
        ef = metric_eps_fwd(plan, parity, rng=rng, flags=flags)
        ei = metric_eps_inv(plan, parity, rng=rng, flags=flags)
        checks.append((f"eps_fwd[{parity}]", ef, 1e-5))
        checks.append((f"eps_inv[{parity}]", ei, 1e-5))

    beta = rng.standard_normal(2 * args.n - m)
    rt = alt_inverse(plan, alt_forward(plan, beta).values).values
    checks.append(("roundtrip", float(np.linalg.norm(rt - beta)
                                      / np.linalg.norm(beta)), 1e-6))
    v = rng.standard_normal(2 * args.n)
    lhs = float(np.dot(alt_forward(plan, beta).values, v))
    rhs = float(np.dot(beta, alt_inverse(plan, v / plan.quadrature.weights)
                       .values))
    checks.append(("adjoint", abs(lhs - rhs) / max(abs(lhs), 1e-300), 1e-10))

    failed = False
    for name, value, tol in checks:
        ok = value <= tol
        failed |= not ok
        print(f"{'PASS' if ok else 'FAIL'} {name}: {value:.3e} "
              f"(tolerance {tol:.0e})")
    return 2 if failed else 0


def cmd_export_blocks(args):
    m = _order(args, args.n)
    n0 = _effective_n0(args, args.n)
    parities = ("odd", "even") if args.parity == "both" else (args.parity,)
    doc = {"N": args.n, "m": m, "n0": n0, "halves": {}}
    for parity in parities:
        try:
            spec = make_alt_spec(args.n, m, parity)
        except ValueError:
            doc["halves"][parity] = None
            continue
        tree = partition(spec, n0)
        tree.blocks = [trim_block(spec, blk) for blk in tree.blocks]
        doc["halves"][parity] = {
            "initial_band_rows": tree.initial_band_rows,
            "levels_used": tree.levels_used,
            "blocks": export_blocks(tree),
        }
    out = _out_stream(args.out)
    try:
        out.write(json.dumps(doc, indent=2) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _build_parser():
    parser = _Parser(prog="bfsht",
                     description="Fast Legendre and spherical harmonic "
                                 "transforms via block compression")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("plan", help="build and save one order's plan")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--m-rule", choices=["0", "0.5N", "N", "1.5N"], default="N")
    p.add_argument("--out", default=None, help="plan file to write")
    p.add_argument("--parallel", action="store_true")
    _add_param_flags(p)
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("transform", help="apply the transform to a file")
    p.add_argument("infile", help="coefficient (SHTC) or grid (SHTG) file")
    p.add_argument("--out", required=True)
    p.add_argument("--direction", choices=["auto", "forward", "inverse"],
                   default="auto")
    p.add_argument("--verify", action="store_true",
                   help="compare against the dense oracle (small N only)")
    _add_param_flags(p)
    p.set_defaults(fn=cmd_transform)

    p = sub.add_parser("bench", help="timing/error sweep, CSV or JSON")
    p.add_argument("--n", type=int, action="append", required=True,
                   help="half-size; repeat for a sweep")
    p.add_argument("--m-rule", choices=["0", "0.5N", "N", "1.5N"], default="N")
    p.add_argument("--parity", choices=["odd", "even", "both"], default="both")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--dense-max", type=int, default=4096,
                   help="skip dense reference timing above this N")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", default=None)
    p.add_argument("--parallel", action="store_true",
                   help="factorize blocks in a thread pool")
    _add_param_flags(p)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("verify", help="dense-checked correctness battery")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--m-rule", choices=["0", "0.5N", "N", "1.5N"], default="N")
    _add_param_flags(p)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("export-blocks", help="partition layout as JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--m-rule", choices=["0", "0.5N", "N", "1.5N"], default="N")
    p.add_argument("--parity", choices=["odd", "even", "both"], default="both")
    p.add_argument("--n0", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_export_blocks)

    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "fn", None):
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.fn(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
