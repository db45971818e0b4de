"""Benchmark harness: error metrics and per-parity timing records.

Error metrics follow the sampled-row definitions: a random input goes through
the compressed half-transform and through dense reference rows at up to 256
sampled output positions, and the relative l2 error is computed on that
sample.  Sampling is restricted to output positions covered by retained
blocks (the rest of the output is identically zero in both paths by the
underflow clamp).  Timings and verification never share a timed region.

The block_count column reports the partition's block count for the parity
(before negligible blocks are dropped), the quantity whose near-linear
growth the partition is designed around.
"""
import json
import sys
import time
from dataclasses import dataclass

import numpy as np

from .alt import _apply_half, _apply_half_transpose, plan_alt
from .lowrank import SamplingConfig, derived_rng
from .oracle import DenseAltMatrix, dense_alt_build, dense_matvec
from .partition import entry_oracle

__all__ = [
    "BenchRecord",
    "CSV_HEADER",
    "desk_n0",
    "metric_eps_fwd",
    "metric_eps_inv",
    "run_bench",
    "records_to_csv",
    "records_to_json",
    "fit_loglog_slope",
]

CSV_HEADER = ("N,m,parity,T_fac,T_app,T_mat,T_dir,"
              "eps_fwd,eps_inv,block_count,max_rank,total_nnz")

N0_PAPER = 512
DENSE_MAX_DEFAULT = 4096


@dataclass
class BenchRecord:
    n: int
    m: int
    parity: str
    t_fac: float
    t_app: float
    t_mat: float
    t_dir: float
    eps_fwd: float
    eps_inv: float
    block_count: int
    max_rank: int
    total_nnz: int


def desk_n0(n):
    """Paper block-size floor of 512, scaled down so small N still partitions."""
    return N0_PAPER if n >= 1024 else max(32, n // 8)


def _half(plan, parity):
    if parity == "odd":
        return plan.spec_odd, plan.blocks_odd
    return plan.spec_even, plan.blocks_even


def _covered(blocks, axis):
    ranges = [(b.trim[0], b.trim[1]) if axis == 0 else (b.trim[2], b.trim[3])
              for b in blocks]
    if not ranges:
        return np.zeros(0, dtype=np.intp)
    mask = np.zeros(max(r[1] for r in ranges), dtype=bool)
    for lo, hi in ranges:
        mask[lo:hi] = True
    return np.nonzero(mask)[0].astype(np.intp)


def metric_eps_fwd(plan, parity, dense=None, trials=1, sample_size=256,
                   rng=None, flags=None):
    """Relative l2 forward error on sampled output rows, averaged over trials.

    dense may be a prebuilt DenseAltMatrix; otherwise reference rows are
    gathered from the entry oracle, so no full materialization is needed.
    A persistently zero reference on the sample reports 0 and sets
    flags["zero_denominator"].
    """
    spec, blocks = _half(plan, parity)
    if spec is None:
        return 0.0
    if rng is None:
        rng = np.random.default_rng()
    rows = _covered(blocks, 0)
    if rows.size == 0:
        if flags is not None:
            flags["zero_denominator"] = True
        return 0.0
    oracle = entry_oracle(spec)
    all_cols = np.arange(spec.num_cols, dtype=np.intp)
    vals = []
    for _ in range(trials):
        c = rng.standard_normal(spec.num_cols)
        fast = _apply_half(blocks, c, spec.n)
        for _ in range(8):
            s = rng.choice(rows, size=min(sample_size, rows.size),
                           replace=False)
            if dense is not None:
                ref = dense.data[s] @ c
            else:
                ref = oracle.block(s, all_cols) @ c
            den = float(np.sum(ref * ref))
            if den > 0.0:
                vals.append(np.sqrt(np.sum((fast[s] - ref) ** 2) / den))
                break
        else:
            if flags is not None:
                flags["zero_denominator"] = True
            vals.append(0.0)
    return float(np.mean(vals))


def metric_eps_inv(plan, parity, dense=None, trials=1, sample_size=256,
                   rng=None, flags=None):
    """Relative l2 inverse error on sampled coefficient rows."""
    spec, blocks = _half(plan, parity)
    if spec is None:
        return 0.0
    if rng is None:
        rng = np.random.default_rng()
    cols = _covered(blocks, 1)
    if cols.size == 0:
        if flags is not None:
            flags["zero_denominator"] = True
        return 0.0
    oracle = entry_oracle(spec)
    all_rows = np.arange(spec.n, dtype=np.intp)
    vals = []
    for _ in range(trials):
        u = rng.standard_normal(spec.n)
        fast = _apply_half_transpose(blocks, u, spec.num_cols)
        for _ in range(8):
            s = rng.choice(cols, size=min(sample_size, cols.size),
                           replace=False)
            if dense is not None:
                ref = dense.data[:, s].T @ u
            else:
                ref = oracle.block(all_rows, s).T @ u
            den = float(np.sum(ref * ref))
            if den > 0.0:
                vals.append(np.sqrt(np.sum((fast[s] - ref) ** 2) / den))
                break
        else:
            if flags is not None:
                flags["zero_denominator"] = True
            vals.append(0.0)
    return float(np.mean(vals))


def _median3(fn):
    times = []
    for _ in range(3):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def parse_m_rule(rule, n):
    table = {"0": 0, "0.5N": n // 2, "N": n, "1.5N": min(3 * n // 2, 2 * n - 1)}
    if rule not in table:
        raise ValueError(f"m rule {rule!r} not one of {sorted(table)}")
    return table[rule]


def run_bench(ns, m_rule="N", params=None, n0=None, parity="both", trials=1,
              dense_max=DENSE_MAX_DEFAULT, workers=1, log=sys.stderr):
    """One BenchRecord per (N, m, parity).  Dense columns are NaN above
    dense_max (emitted as empty CSV fields)."""
    if params is None:
        params = SamplingConfig()
    parities = ("odd", "even") if parity == "both" else (parity,)
    records = []
    for n in ns:
        m = parse_m_rule(m_rule, n)
        n0_eff = n0 if n0 is not None else desk_n0(n)
        if n0 is None and n0_eff != N0_PAPER and log is not None:
            print(f"note: desk-scale n0={n0_eff} for N={n} "
                  f"(paper-scale default is {N0_PAPER})", file=log)
        plan = plan_alt(n, m, params, n0=n0_eff, workers=workers)
        for par in parities:
            spec, blocks = _half(plan, par)
            if spec is None:
                if log is not None:
                    print(f"note: N={n} m={m} has no {par} degrees; skipped",
                          file=log)
                continue
            hstat = plan.stats["halves"][par]
            rng = derived_rng(params.seed, 3, n, m, 0 if par == "odd" else 1)
            c = rng.standard_normal(spec.num_cols)
            t_app = _median3(lambda: _apply_half(blocks, c, spec.n))

            dense = None
            t_mat = t_dir = float("nan")
            if n <= dense_max:
                t0 = time.perf_counter()
                dense = dense_alt_build(spec, allow_large=True)
                t_mat = time.perf_counter() - t0
                t_dir = _median3(lambda: dense_matvec(dense, c))

            flags = {}
            eps_fwd = metric_eps_fwd(plan, par, dense=dense, trials=trials,
                                     rng=derived_rng(params.seed, 4, n, m,
                                                     0 if par == "odd" else 1),
                                     flags=flags)
            eps_inv = metric_eps_inv(plan, par, dense=dense, trials=trials,
                                     rng=derived_rng(params.seed, 5, n, m,
                                                     0 if par == "odd" else 1),
                                     flags=flags)
            if flags.get("zero_denominator") and log is not None:
                print(f"note: zero reference denominator at N={n} m={m} {par}",
                      file=log)
            records.append(BenchRecord(
                n=n, m=m, parity=par, t_fac=hstat["t_build"], t_app=t_app,
                t_mat=t_mat, t_dir=t_dir, eps_fwd=eps_fwd, eps_inv=eps_inv,
                block_count=hstat["partition_blocks"],
                max_rank=hstat["max_rank"], total_nnz=hstat["total_nnz"]))
    return records


def _fmt_time(v):
    return "" if np.isnan(v) else f"{v:.6f}"


def records_to_csv(records):
    lines = [CSV_HEADER]
    for r in records:
        lines.append(",".join([
            str(r.n), str(r.m), r.parity,
            _fmt_time(r.t_fac), _fmt_time(r.t_app),
            _fmt_time(r.t_mat), _fmt_time(r.t_dir),
            f"{r.eps_fwd:.6e}", f"{r.eps_inv:.6e}",
            str(r.block_count), str(r.max_rank), str(r.total_nnz)]))
    return "\n".join(lines) + "\n"


def records_to_json(records, meta=None):
    out = []
    for r in records:
        d = {"N": r.n, "m": r.m, "parity": r.parity,
             "T_fac": r.t_fac, "T_app": r.t_app,
             "T_mat": None if np.isnan(r.t_mat) else r.t_mat,
             "T_dir": None if np.isnan(r.t_dir) else r.t_dir,
             "eps_fwd": r.eps_fwd, "eps_inv": r.eps_inv,
             "block_count": r.block_count, "max_rank": r.max_rank,
             "total_nnz": r.total_nnz}
        out.append(d)
    doc = {"records": out}
    if meta:
        doc["meta"] = meta
    return json.dumps(doc, indent=2) + "\n"


def fit_loglog_slope(xs, ys):
    return float(np.polyfit(np.log(np.asarray(xs, dtype=float)),
                            np.log(np.asarray(ys, dtype=float)), 1)[0])
