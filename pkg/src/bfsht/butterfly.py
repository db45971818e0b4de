"""Interpolative butterfly factorization for complementary low-rank matrices.

A kernel matrix K with the complementary low-rank property factors as

    K ~= U^L ... U^h  S^h  V^h ... V^L

over a pair of dyadic index trees of common depth L with middle level h.
The V chain is built by column interpolative decompositions swept from the
leaf level toward the middle, merging child skeletons at every step; the U
chain is the same sweep run on the transposed oracle.  S^h collects the
kernel entries on the surviving row/column skeleton pairs.  Every factor is
sparse, and only sampled entries of K are ever evaluated.
"""
import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

from .lowrank import RankOverflowError, cid, derived_rng

__all__ = [
    "DyadicTree",
    "SparseFactor",
    "ButterflyFactorization",
    "build_trees",
    "idbf_factor",
    "idbf_apply",
    "idbf_apply_transpose",
    "save_factorization",
    "load_factorization",
]


@dataclass
class DyadicTree:
    """Dyadic bisection of [start, stop); levels[l] lists the 2^l intervals."""

    start: int
    stop: int
    depth: int
    levels: list


@dataclass
class SparseFactor:
    """One factor in triplet form; (row, col) pairs are distinct."""

    shape: tuple
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    _csr: object = field(default=None, repr=False, compare=False)

    @property
    def nnz(self):
        return self.vals.size

    def csr(self):
        if self._csr is None:
            self._csr = scipy.sparse.csr_matrix(
                (self.vals, (self.rows, self.cols)), shape=self.shape)
        return self._csr


@dataclass
class ButterflyFactorization:
    """Sparse factor chain; factors[0] is applied first (the leaf V stage)."""

    shape: tuple
    factors: list
    levels: int
    middle: int
    max_rank: int
    tolerance: float
    adaptive_rank: int

    @property
    def nnz(self):
        return int(sum(f.nnz for f in self.factors))


def build_trees(rows, cols, leaf_max):
    """Row and column dyadic trees of the smallest shared depth keeping every
    leaf at or below leaf_max entries.

    rows and cols are sizes or (start, stop) pairs.  Bisection is as even as
    possible (sibling sizes differ by at most one).  Leaf width must stay
    under the ID sampling cap, which scales with leaf_max, or the leaf-level
    rank probes lose resolution; hence the ceiling, not the floor, of
    log2(min_dim / leaf_max).  Depth is additionally capped at
    floor(log2(min_dim)) so no leaf is ever empty; only leaf_max=1 on a
    ragged size can hit that cap, leaving two entries in some leaves.
    """
    r0, r1 = (0, rows) if np.isscalar(rows) else rows
    c0, c1 = (0, cols) if np.isscalar(cols) else cols
    if r1 <= r0 or c1 <= c0:
        raise ValueError("trees need nonempty index ranges")
    if leaf_max < 1:
        raise ValueError("leaf_max must be >= 1")
    min_dim = min(r1 - r0, c1 - c0)
    depth = max(0, int(np.ceil(np.log2(min_dim / leaf_max)))) if min_dim > leaf_max else 0
    depth = min(depth, int(np.floor(np.log2(min_dim))))
    return _make_tree(r0, r1, depth), _make_tree(c0, c1, depth)


def _make_tree(start, stop, depth):
    levels = [[(start, stop)]]
    for _ in range(depth):
        nxt = []
        for a, b in levels[-1]:
            mid = (a + b) // 2
            nxt.append((a, mid))
            nxt.append((mid, b))
        levels.append(nxt)
    return DyadicTree(start=start, stop=stop, depth=depth, levels=levels)


def idbf_factor(oracle, cfg, leaf_max=None):
    """Butterfly-factor an entry oracle.

    leaf_max defaults to cfg.adaptive_rank, tying leaf width to the working
    ID rank.  Matrices too small for a level-1 split are stored as a single
    dense middle factor.  Raises RankOverflowError (annotated with the
    offending level and node pair) if an inner ID cannot reach tolerance.
    """
    m, n = oracle.shape
    if leaf_max is None:
        leaf_max = cfg.adaptive_rank
    row_tree, col_tree = build_trees(m, n, leaf_max)
    depth = row_tree.depth
    if depth == 0:
        allr = np.arange(m, dtype=np.intp)
        allc = np.arange(n, dtype=np.intp)
        dense = np.asarray(oracle.block(allr, allc))
        rr, cc = np.nonzero(dense)
        s = SparseFactor((m, n), rr.astype(np.intp), cc.astype(np.intp),
                         dense[rr, cc].astype(np.float64))
        return ButterflyFactorization(shape=(m, n), factors=[s], levels=0,
                                      middle=0, max_rank=0,
                                      tolerance=cfg.tolerance,
                                      adaptive_rank=cfg.adaptive_rank)

    h_col = (depth + 1) // 2
    h_row = depth - h_col
    v_factors, col_skel, rank_v = _column_sweep(
        oracle, row_tree, col_tree, h_col, cfg, sweep_id=0)
    u_factors_t, row_skel, rank_u = _column_sweep(
        oracle.transpose(), col_tree, row_tree, h_row, cfg, sweep_id=1)

    middle = _middle_factor(oracle, row_tree, col_tree, h_row, h_col,
                            row_skel, col_skel)
    factors = list(v_factors)        # leaf V stage first
    factors.append(middle)
    # the transposed sweep built leaf-first; its transposes apply middle-first
    for f in reversed(u_factors_t):
        factors.append(_transpose_factor(f))
    return ButterflyFactorization(shape=(m, n), factors=factors, levels=depth,
                                  middle=h_col, max_rank=max(rank_v, rank_u),
                                  tolerance=cfg.tolerance,
                                  adaptive_rank=cfg.adaptive_rank)


def _column_sweep(oracle, row_tree, col_tree, stop_level, cfg, sweep_id):
    """Column-ID sweep from the leaf level down to stop_level.

    Returns the factors in application order (leaf factor first), the final
    skeleton table {(row_node, col_node): absolute column indices}, and the
    largest ID rank seen.
    """
    m, n = oracle.shape
    depth = row_tree.depth
    factors = []
    max_rank = 0
    all_rows = np.arange(m, dtype=np.intp)

    # leaf level: root row node against every column leaf
    skel = {}
    offs = {}
    triplets = []
    pos = 0
    for j, (c0, c1) in enumerate(col_tree.levels[depth]):
        view = oracle.submatrix(all_rows, np.arange(c0, c1, dtype=np.intp))
        dec = _node_cid(view, cfg, sweep_id, depth, 0, j)
        skel[(0, j)] = (c0 + dec.skeleton).astype(np.intp)
        offs[(0, j)] = (pos, dec.rank)
        rr, cc = np.nonzero(dec.interp)
        triplets.append((pos + rr, c0 + cc, dec.interp[rr, cc]))
        pos += dec.rank
        max_rank = max(max_rank, dec.rank)
    factors.append(_factor_from_triplets((pos, n), triplets))

    for lev in range(depth - 1, stop_level - 1, -1):
        lam = depth - lev
        nxt_skel = {}
        nxt_offs = {}
        triplets = []
        new_pos = 0
        for i, (r0, r1) in enumerate(row_tree.levels[lam]):
            p = i // 2
            for j in range(len(col_tree.levels[lev])):
                left, right = 2 * j, 2 * j + 1
                cand = np.concatenate([skel[(p, left)], skel[(p, right)]])
                in_pos = np.concatenate([
                    offs[(p, left)][0] + np.arange(offs[(p, left)][1], dtype=np.intp),
                    offs[(p, right)][0] + np.arange(offs[(p, right)][1], dtype=np.intp),
                ])
                if cand.size == 0:
                    nxt_skel[(i, j)] = cand
                    nxt_offs[(i, j)] = (new_pos, 0)
                    continue
                view = oracle.submatrix(np.arange(r0, r1, dtype=np.intp), cand)
                dec = _node_cid(view, cfg, sweep_id, lev, i, j)
                nxt_skel[(i, j)] = cand[dec.skeleton]
                nxt_offs[(i, j)] = (new_pos, dec.rank)
                rr, cc = np.nonzero(dec.interp)
                triplets.append((new_pos + rr, in_pos[cc], dec.interp[rr, cc]))
                new_pos += dec.rank
                max_rank = max(max_rank, dec.rank)
        factors.append(_factor_from_triplets((new_pos, pos), triplets))
        skel, offs, pos = nxt_skel, nxt_offs, new_pos

    return factors, (skel, offs), max_rank


def _middle_factor(oracle, row_tree, col_tree, h_row, h_col, row_side, col_side):
    row_skel, row_offs = row_side
    col_skel, col_offs = col_side
    n_out = sum(sz for _, sz in row_offs.values())
    n_in = sum(sz for _, sz in col_offs.values())
    triplets = []
    for i in range(len(row_tree.levels[h_row])):
        for j in range(len(col_tree.levels[h_col])):
            rows_abs = row_skel[(j, i)]
            cols_abs = col_skel[(i, j)]
            if rows_abs.size == 0 or cols_abs.size == 0:
                continue
            blk = np.asarray(oracle.block(rows_abs, cols_abs))
            rr, cc = np.nonzero(blk)
            triplets.append((row_offs[(j, i)][0] + rr,
                             col_offs[(i, j)][0] + cc, blk[rr, cc]))
    return _factor_from_triplets((n_out, n_in), triplets)


def _node_cid(view, cfg, sweep_id, level, i, j):
    rng = derived_rng(cfg.seed, sweep_id, level, i, j)
    try:
        return cid(view, cfg, rng=rng)
    except RankOverflowError as exc:
        exc.level = level
        exc.row_node = i
        exc.col_node = j
        raise RankOverflowError(
            f"butterfly ID overflow at level {level}, node pair ({i}, {j}): {exc}",
            cap=exc.cap, tail_ratio=exc.tail_ratio) from exc


def _factor_from_triplets(shape, triplets):
    if triplets:
        rows = np.concatenate([t[0] for t in triplets]).astype(np.intp)
        cols = np.concatenate([t[1] for t in triplets]).astype(np.intp)
        vals = np.concatenate([t[2] for t in triplets]).astype(np.float64)
    else:
        rows = np.zeros(0, dtype=np.intp)
        cols = np.zeros(0, dtype=np.intp)
        vals = np.zeros(0)
    return SparseFactor(shape, rows, cols, vals)


def _transpose_factor(f):
    return SparseFactor((f.shape[1], f.shape[0]), f.cols.copy(), f.rows.copy(),
                        f.vals.copy())


def idbf_apply(fac, x):
    """y = K x through the factor chain."""
    x = np.asarray(x)
    if x.shape[0] != fac.shape[1]:
        raise ValueError(f"length {x.shape[0]} against shape {fac.shape}")
    for f in fac.factors:
        x = f.csr() @ x
    return x


def idbf_apply_transpose(fac, y):
    """x = K^T y through the reversed chain."""
    y = np.asarray(y)
    if y.shape[0] != fac.shape[0]:
        raise ValueError(f"length {y.shape[0]} against shape {fac.shape}")
    for f in reversed(fac.factors):
        y = f.csr().T @ y
    return y


_MAGIC = b"BFAC"
_VERSION = 1


def save_factorization(fac, fh):
    """Write the factor chain to a binary stream (little-endian triplets)."""
    fh.write(_MAGIC)
    fh.write(struct.pack("<IQQiiIdI", _VERSION, fac.shape[0], fac.shape[1],
                         fac.levels, fac.middle, fac.adaptive_rank,
                         fac.tolerance, len(fac.factors)))
    fh.write(struct.pack("<I", fac.max_rank))
    for f in fac.factors:
        fh.write(struct.pack("<QQQ", f.shape[0], f.shape[1], f.nnz))
        fh.write(f.rows.astype("<i8").tobytes())
        fh.write(f.cols.astype("<i8").tobytes())
        fh.write(f.vals.astype("<f8").tobytes())


def load_factorization(fh):
    magic = fh.read(4)
    if magic != _MAGIC:
        raise ValueError(f"bad magic {magic!r} at offset 0")
    ver, m, n, levels, middle, rk, tol, nfac = struct.unpack(
        "<IQQiiIdI", fh.read(struct.calcsize("<IQQiiIdI")))
    if ver != _VERSION:
        raise ValueError(f"unsupported version {ver}")
    (max_rank,) = struct.unpack("<I", fh.read(4))
    factors = []
    for _ in range(nfac):
        fm, fn, nnz = struct.unpack("<QQQ", fh.read(24))
        rows = np.frombuffer(fh.read(8 * nnz), dtype="<i8").astype(np.intp)
        cols = np.frombuffer(fh.read(8 * nnz), dtype="<i8").astype(np.intp)
        vals = np.frombuffer(fh.read(8 * nnz), dtype="<f8").astype(np.float64)
        factors.append(SparseFactor((fm, fn), rows, cols, vals))
    return ButterflyFactorization(shape=(m, n), factors=factors, levels=levels,
                                  middle=middle, max_rank=max_rank,
                                  tolerance=tol, adaptive_rank=rk)
