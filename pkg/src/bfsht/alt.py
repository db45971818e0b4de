"""Compressed forward and inverse Legendre transforms for a single order.

A plan partitions the odd and even half-matrices along the turning-point
curve and gives every surviving block a payload matched to its character:
oscillatory blocks get a butterfly factorization, non-oscillatory blocks a
sampled low-rank SVD on their trimmed rectangle, turning blocks the dense
trimmed submatrix.  Applying the plan sums block contributions; the full
2N-node column is assembled from the half-results by node symmetry, and the
inverse is the weighted transpose, so one plan serves both directions.
"""
import struct
import time
from dataclasses import dataclass

import numpy as np

from .butterfly import (ButterflyFactorization, idbf_factor, idbf_apply,
                        idbf_apply_transpose, save_factorization,
                        load_factorization)
from .lowrank import (LowRankFactor, RankOverflowError, SamplingConfig,
                      derived_rng, sample_indices, rsvd)
from .partition import (TAU_DEFAULT, entry_oracle, make_alt_spec, partition,
                        trim_block)
from .special import QuadratureRule, gauss_legendre

__all__ = [
    "AltPlan",
    "CoeffVector",
    "GridFunctionColumn",
    "plan_alt",
    "alt_forward",
    "alt_inverse",
    "plan_diagnostics",
    "save_plan",
    "load_plan",
]

N0_DEFAULT = 512


@dataclass
class CoeffVector:
    """Coefficients for degrees k = m .. 2N-1, ascending; length 2N - m."""

    m: int
    values: np.ndarray


@dataclass
class GridFunctionColumn:
    """One order's profile at the 2N quadrature angles, node-ascending in x."""

    m: int
    values: np.ndarray


@dataclass
class AltPlan:
    n: int
    m: int
    spec_odd: object
    spec_even: object
    blocks_odd: list
    blocks_even: list
    params: SamplingConfig
    n0: int
    tau: float
    stats: dict

    @property
    def quadrature(self):
        spec = self.spec_even if self.spec_even is not None else self.spec_odd
        return spec.quadrature


def _empty_stats():
    return {"per_block": [], "t_factor": 0.0,
            "t_by_class": {"oscillatory": 0.0, "non_oscillatory": 0.0,
                           "turning": 0.0},
            "block_counts": {"oscillatory": 0, "non_oscillatory": 0,
                             "turning": 0, "dropped": 0},
            "halves": {}, "max_rank": 0, "total_nnz": 0, "levels_used": 0}


def plan_alt(n, m, params=None, n0=N0_DEFAULT, tau=TAU_DEFAULT,
             quadrature=None, workers=1):
    """Build the compressed two-parity plan for order m at half-size n.

    Either parity half can be empty near m = 2N-1; it then contributes
    nothing and is planned as such.  Blocks are independent, so workers > 1
    factorizes each parity's blocks in a thread pool.  Rank overflow inside
    a butterfly block propagates with the block's coordinates attached.
    """
    if not 0 <= m <= 2 * n - 1:
        raise ValueError(f"order {m} outside [0, {2 * n - 1}]")
    if params is None:
        params = SamplingConfig()
    if quadrature is None:
        quadrature = gauss_legendre(2 * n)

    stats = _empty_stats()
    halves = {}
    for parity in ("odd", "even"):
        half = (m + 1) // 2 if parity == "odd" else m // 2
        if n - half < 1:
            halves[parity] = (None, [])
            continue
        t0 = time.perf_counter()
        spec = make_alt_spec(n, m, parity, quadrature)
        oracle = entry_oracle(spec)
        tree = partition(spec, n0)
        stats["levels_used"] = max(stats["levels_used"], tree.levels_used)
        retained = []
        dropped = 0
        for blk in tree.blocks:
            blk = trim_block(spec, blk, tau, oracle)
            if blk.trim is None:
                dropped += 1
            else:
                retained.append(blk)
        if workers > 1 and len(retained) > 1:
            from concurrent.futures import ThreadPoolExecutor
            with ThreadPoolExecutor(max_workers=workers) as pool:
                done = list(pool.map(
                    lambda b: _factorize(spec, b, params, oracle), retained))
        else:
            done = [_factorize(spec, blk, params, oracle) for blk in retained]
        blocks = []
        hstat = {"t_build": 0.0, "max_rank": 0, "total_nnz": 0,
                 "counts": {"oscillatory": 0, "non_oscillatory": 0,
                            "turning": 0, "dropped": dropped},
                 "partition_blocks": len(tree.blocks)}
        for blk, entry in done:
            blocks.append(blk)
            stats["per_block"].append(entry)
            stats["t_factor"] += entry["seconds"]
            stats["t_by_class"][blk.kind] += entry["seconds"]
            stats["block_counts"][blk.kind] += 1
            stats["max_rank"] = max(stats["max_rank"], entry["rank"])
            stats["total_nnz"] += entry["nnz"]
            hstat["counts"][blk.kind] += 1
            hstat["max_rank"] = max(hstat["max_rank"], entry["rank"])
            hstat["total_nnz"] += entry["nnz"]
        stats["block_counts"]["dropped"] += dropped
        hstat["t_build"] = time.perf_counter() - t0
        stats["halves"][parity] = hstat
        halves[parity] = (spec, blocks)

    return AltPlan(n=n, m=m, spec_odd=halves["odd"][0],
                   spec_even=halves["even"][0], blocks_odd=halves["odd"][1],
                   blocks_even=halves["even"][1], params=params, n0=n0,
                   tau=tau, stats=stats)


def _factorize(spec, blk, params, base_oracle=None):
    r0, r1, c0, c1 = blk.trim
    h, w = r1 - r0, c1 - c0
    if base_oracle is None:
        base_oracle = entry_oracle(spec)
    oracle = base_oracle.submatrix(np.arange(r0, r1, dtype=np.intp),
                                   np.arange(c0, c1, dtype=np.intp))
    t0 = time.perf_counter()
    if blk.kind == "oscillatory":
        try:
            payload = idbf_factor(oracle, params)
        except RankOverflowError as exc:
            raise RankOverflowError(
                f"{spec.parity} block rows {blk.row_range} cols "
                f"{blk.col_range}: {exc}", cap=exc.cap,
                tail_ratio=exc.tail_ratio) from exc
        rank, nnz = payload.max_rank, payload.nnz
    elif blk.kind == "non_oscillatory":
        r = int(min(params.rsvd_rank, h, w))
        rng = derived_rng(params.seed, 2, blk.row_range[0], blk.col_range[0])
        rows = sample_indices(min(r * params.rsvd_oversample, h), h,
                              params.mode, rng)
        cols = sample_indices(min(r * params.rsvd_oversample, w), w,
                              params.mode, rng)
        payload = rsvd(oracle, rows, cols, r,
                       oversample=params.rsvd_oversample, rng=rng)
        rank = payload.rank
        nnz = payload.u.size + payload.s.size + payload.v.size
    else:
        payload = np.ascontiguousarray(
            oracle.block(np.arange(h, dtype=np.intp),
                         np.arange(w, dtype=np.intp)))
        rank, nnz = 0, payload.size
    dt = time.perf_counter() - t0
    blk.payload = payload
    entry = {"parity": spec.parity, "class": blk.kind,
             "rows": list(blk.row_range), "cols": list(blk.col_range),
             "trim": list(blk.trim), "rank": rank, "nnz": int(nnz),
             "seconds": dt}
    return blk, entry


def _apply_half(blocks, vec, n_out):
    out = np.zeros(n_out)
    for blk in blocks:
        r0, r1, c0, c1 = blk.trim
        sub = vec[c0:c1]
        if isinstance(blk.payload, ButterflyFactorization):
            out[r0:r1] += idbf_apply(blk.payload, sub)
        elif isinstance(blk.payload, LowRankFactor):
            out[r0:r1] += blk.payload.apply(sub)
        else:
            out[r0:r1] += blk.payload @ sub
    return out


def _apply_half_transpose(blocks, vec, n_out):
    out = np.zeros(n_out)
    for blk in blocks:
        r0, r1, c0, c1 = blk.trim
        sub = vec[r0:r1]
        if isinstance(blk.payload, ButterflyFactorization):
            out[c0:c1] += idbf_apply_transpose(blk.payload, sub)
        elif isinstance(blk.payload, LowRankFactor):
            out[c0:c1] += blk.payload.apply_transpose(sub)
        else:
            out[c0:c1] += blk.payload.T @ sub
    return out


def _forward_real(plan, beta):
    n = plan.n
    g_odd = np.zeros(n)
    g_even = np.zeros(n)
    if plan.spec_odd is not None:
        g_odd = _apply_half(plan.blocks_odd, beta[1::2], n)
    if plan.spec_even is not None:
        g_even = _apply_half(plan.blocks_even, beta[0::2], n)
    out = np.empty(2 * n)
    out[n:] = g_even + g_odd
    out[n - 1::-1] = g_even - g_odd
    return out


def _inverse_real(plan, f):
    n = plan.n
    w_pos = plan.quadrature.weights[n:]
    upper = f[n:]
    lower = f[n - 1::-1]
    beta = np.zeros(2 * n - plan.m)
    if plan.spec_odd is not None:
        beta[1::2] = _apply_half_transpose(plan.blocks_odd,
                                           w_pos * (upper - lower),
                                           plan.spec_odd.num_cols)
    if plan.spec_even is not None:
        beta[0::2] = _apply_half_transpose(plan.blocks_even,
                                           w_pos * (upper + lower),
                                           plan.spec_even.num_cols)
    return beta


def _dispatch(plan, values, kernel):
    values = np.asarray(values)
    if np.iscomplexobj(values):
        return kernel(plan, values.real.astype(np.float64)) \
            + 1j * kernel(plan, values.imag.astype(np.float64))
    return kernel(plan, values.astype(np.float64))


def alt_forward(plan, coeffs):
    """Coefficients beta_k (k = m..2N-1) to values at the 2N nodes."""
    values = coeffs.values if isinstance(coeffs, CoeffVector) else coeffs
    values = np.asarray(values)
    if values.shape != (2 * plan.n - plan.m,):
        raise ValueError(f"expected {2 * plan.n - plan.m} coefficients, "
                         f"got shape {values.shape}")
    return GridFunctionColumn(m=plan.m, values=_dispatch(plan, values,
                                                         _forward_real))


def alt_inverse(plan, column):
    """Values at the 2N nodes back to coefficients via the weighted transpose."""
    values = column.values if isinstance(column, GridFunctionColumn) else column
    values = np.asarray(values)
    if values.shape != (2 * plan.n,):
        raise ValueError(f"expected {2 * plan.n} node values, "
                         f"got shape {values.shape}")
    return CoeffVector(m=plan.m, values=_dispatch(plan, values, _inverse_real))


def plan_diagnostics(plan):
    """Measurables behind the cost model: ranks, nonzeros, counts, times."""
    st = plan.stats
    return {
        "n": plan.n, "m": plan.m, "n0": plan.n0,
        "max_rank": st["max_rank"],
        "total_nnz": st["total_nnz"],
        "block_counts": dict(st["block_counts"]),
        "levels_used": st["levels_used"],
        "t_factor": st["t_factor"],
        "t_by_class": dict(st["t_by_class"]),
        "per_block": list(st["per_block"]),
    }


_MAGIC = b"ALTP"
_VERSION = 1
_KIND_CODE = {"oscillatory": 0, "non_oscillatory": 1, "turning": 2}
_KIND_NAME = {v: k for k, v in _KIND_CODE.items()}


def save_plan(plan, fh):
    """Serialize the plan; loading reproduces apply results bitwise."""
    fh.write(_MAGIC)
    fh.write(struct.pack("<IqqqdI", _VERSION, plan.n, plan.m, plan.n0,
                         plan.tau, 0))
    p = plan.params
    mode_code = 0 if p.mode == "mock_chebyshev" else 1
    fh.write(struct.pack("<Bdqqqqq", mode_code, p.tolerance, p.adaptive_rank,
                         p.oversampling, p.rsvd_rank, p.rsvd_oversample,
                         p.seed))
    for spec, blocks in ((plan.spec_odd, plan.blocks_odd),
                         (plan.spec_even, plan.blocks_even)):
        if spec is None:
            fh.write(struct.pack("<B", 0))
            continue
        fh.write(struct.pack("<B", 1))
        fh.write(struct.pack("<I", len(blocks)))
        for blk in blocks:
            fh.write(struct.pack("<qqqqB", *blk.row_range, *blk.col_range,
                                 _KIND_CODE[blk.kind]))
            fh.write(struct.pack("<qq", blk.level, blk.band))
            fh.write(struct.pack("<qqqq", *blk.trim))
            if isinstance(blk.payload, ButterflyFactorization):
                fh.write(struct.pack("<B", 0))
                save_factorization(blk.payload, fh)
            elif isinstance(blk.payload, LowRankFactor):
                fh.write(struct.pack("<B", 1))
                u, s, v = blk.payload.u, blk.payload.s, blk.payload.v
                fh.write(struct.pack("<qqq", u.shape[0], s.size, v.shape[0]))
                fh.write(u.astype("<f8").tobytes())
                fh.write(s.astype("<f8").tobytes())
                fh.write(v.astype("<f8").tobytes())
            else:
                fh.write(struct.pack("<B", 2))
                fh.write(struct.pack("<qq", *blk.payload.shape))
                fh.write(blk.payload.astype("<f8").tobytes())


def load_plan(fh, quadrature=None):
    from .partition import Block

    magic = fh.read(4)
    if magic != _MAGIC:
        raise ValueError(f"bad magic {magic!r} at offset 0")
    ver, n, m, n0, tau, _ = struct.unpack("<IqqqdI",
                                          fh.read(struct.calcsize("<IqqqdI")))
    if ver != _VERSION:
        raise ValueError(f"unsupported plan version {ver}")
    mode_code, tol, ark, ovs, rr, ro, seed = struct.unpack(
        "<Bdqqqqq", fh.read(struct.calcsize("<Bdqqqqq")))
    params = SamplingConfig(mode="mock_chebyshev" if mode_code == 0 else "random",
                            tolerance=tol, adaptive_rank=ark, oversampling=ovs,
                            rsvd_rank=rr, rsvd_oversample=ro, seed=seed)
    if quadrature is None:
        quadrature = gauss_legendre(2 * n)
    specs = {}
    blocks = {}
    for parity in ("odd", "even"):
        (present,) = struct.unpack("<B", fh.read(1))
        if not present:
            specs[parity] = None
            blocks[parity] = []
            continue
        specs[parity] = make_alt_spec(n, m, parity, quadrature)
        (count,) = struct.unpack("<I", fh.read(4))
        half = []
        for _ in range(count):
            rr0, rr1, cc0, cc1, code = struct.unpack("<qqqqB", fh.read(33))
            level, band = struct.unpack("<qq", fh.read(16))
            trim = struct.unpack("<qqqq", fh.read(32))
            (ptype,) = struct.unpack("<B", fh.read(1))
            if ptype == 0:
                payload = load_factorization(fh)
            elif ptype == 1:
                hu, rs, wv = struct.unpack("<qqq", fh.read(24))
                u = np.frombuffer(fh.read(8 * hu * rs),
                                  dtype="<f8").reshape(hu, rs).copy()
                s = np.frombuffer(fh.read(8 * rs), dtype="<f8").copy()
                v = np.frombuffer(fh.read(8 * wv * rs),
                                  dtype="<f8").reshape(wv, rs).copy()
                payload = LowRankFactor(u=u, s=s, v=v)
            else:
                ph, pw = struct.unpack("<qq", fh.read(16))
                payload = np.frombuffer(fh.read(8 * ph * pw),
                                        dtype="<f8").reshape(ph, pw).copy()
            half.append(Block((rr0, rr1), (cc0, cc1), _KIND_NAME[code],
                              level=level, band=band, trim=trim,
                              payload=payload))
        blocks[parity] = half
    stats = _empty_stats()
    for parity in ("odd", "even"):
        for blk in blocks[parity]:
            if isinstance(blk.payload, ButterflyFactorization):
                rank, nnz = blk.payload.max_rank, blk.payload.nnz
            elif isinstance(blk.payload, LowRankFactor):
                rank = blk.payload.rank
                nnz = blk.payload.u.size + blk.payload.s.size + blk.payload.v.size
            else:
                rank, nnz = 0, blk.payload.size
            stats["block_counts"][blk.kind] += 1
            stats["max_rank"] = max(stats["max_rank"], rank)
            stats["total_nnz"] += int(nnz)
    return AltPlan(n=n, m=m, spec_odd=specs["odd"], spec_even=specs["even"],
                   blocks_odd=blocks["odd"], blocks_even=blocks["even"],
                   params=params, n0=n0, tau=tau, stats=stats)
