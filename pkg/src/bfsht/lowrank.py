"""Sampled low-rank approximation: interpolative decompositions and rSVD.

All factorizations work against an EntryOracle, so a matrix never has to be
materialized to be compressed; cost scales with the number of sampled
entries, not the matrix area.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "EntryOracle",
    "MatrixOracle",
    "FunctionOracle",
    "SamplingConfig",
    "InterpDecomp",
    "LowRankFactor",
    "RankOverflowError",
    "sample_indices",
    "pivoted_qr",
    "cid",
    "rid",
    "rsvd",
    "derived_rng",
]


class RankOverflowError(Exception):
    """Interpolative decomposition hit its rank cap without reaching tolerance."""

    def __init__(self, msg, cap=None, tail_ratio=None):
        super().__init__(msg)
        self.cap = cap
        self.tail_ratio = tail_ratio


def derived_rng(seed, *key):
    """Generator for a (seed, key...) slot; independent of evaluation order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


class EntryOracle:
    """Matrix view that can produce single entries and index-set blocks."""

    num_rows: int
    num_cols: int

    @property
    def shape(self):
        return (self.num_rows, self.num_cols)

    def entry(self, i, j):
        raise NotImplementedError

    def block(self, rows, cols):
        rows = np.asarray(rows, dtype=np.intp)
        cols = np.asarray(cols, dtype=np.intp)
        out = np.empty((rows.size, cols.size))
        for a, i in enumerate(rows):
            for b, j in enumerate(cols):
                out[a, b] = self.entry(int(i), int(j))
        return out

    def transpose(self):
        return _TransposeOracle(self)

    def submatrix(self, rows, cols):
        return _SubOracle(self, rows, cols)


class MatrixOracle(EntryOracle):
    """Oracle over an ndarray held in memory."""

    def __init__(self, a):
        self.a = np.asarray(a, dtype=np.float64)
        self.num_rows, self.num_cols = self.a.shape

    def entry(self, i, j):
        return float(self.a[i, j])

    def block(self, rows, cols):
        return self.a[np.ix_(np.asarray(rows, dtype=np.intp), np.asarray(cols, dtype=np.intp))]


class FunctionOracle(EntryOracle):
    """Oracle over a broadcasting entry function fn(i, j)."""

    def __init__(self, fn, shape):
        self.fn = fn
        self.num_rows, self.num_cols = shape

    def entry(self, i, j):
        return float(self.fn(i, j))

    def block(self, rows, cols):
        rows = np.asarray(rows, dtype=np.intp)
        cols = np.asarray(cols, dtype=np.intp)
        return np.asarray(self.fn(rows[:, None], cols[None, :]), dtype=np.float64)


class _TransposeOracle(EntryOracle):
    def __init__(self, parent):
        self.parent = parent
        self.num_rows = parent.num_cols
        self.num_cols = parent.num_rows

    def entry(self, i, j):
        return self.parent.entry(j, i)

    def block(self, rows, cols):
        return np.ascontiguousarray(self.parent.block(cols, rows).T)

    def transpose(self):
        return self.parent


class _SubOracle(EntryOracle):
    def __init__(self, parent, rows, cols):
        self.parent = parent
        self.rows = np.asarray(rows, dtype=np.intp)
        self.cols = np.asarray(cols, dtype=np.intp)
        self.num_rows = self.rows.size
        self.num_cols = self.cols.size

    def entry(self, i, j):
        return self.parent.entry(int(self.rows[i]), int(self.cols[j]))

    def block(self, rows, cols):
        return self.parent.block(self.rows[np.asarray(rows, dtype=np.intp)],
                                 self.cols[np.asarray(cols, dtype=np.intp)])


@dataclass
class SamplingConfig:
    """Knobs shared by every sampled decomposition.

    mode: 'mock_chebyshev' (structured row samples) or 'random'
    tolerance: relative truncation tolerance for interpolative decompositions
    adaptive_rank: working rank r_k for the IDs (doubled on retry)
    oversampling: row-sample multiplier t, the IDs see t*r_k rows
    rsvd_rank: truncation rank of the randomized SVD
    rsvd_oversample: sample multiplier q for the randomized SVD (q >= 2)
    seed: root seed; every random draw in a plan derives from it
    """

    mode: str = "mock_chebyshev"
    tolerance: float = 1e-10
    adaptive_rank: int = 150
    oversampling: int = 2
    rsvd_rank: int = 30
    rsvd_oversample: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("mock_chebyshev", "random"):
            raise ValueError(f"unknown sampling mode {self.mode!r}")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.adaptive_rank < 1:
            raise ValueError("adaptive_rank must be >= 1")
        if self.oversampling < 1:
            raise ValueError("oversampling must be >= 1")
        if self.rsvd_rank < 1:
            raise ValueError("rsvd_rank must be >= 1")
        if self.rsvd_oversample < 2:
            raise ValueError("rsvd_oversample must be >= 2 for stability")


@dataclass
class InterpDecomp:
    """Column ID: A ~= A[:, skeleton] @ interp, interp[:, skeleton] = I.
    Row ID:    A ~= interp @ A[skeleton, :], interp[skeleton, :] = I.
    tail_ratio is the first dropped diagonal ratio (0 when nothing dropped).
    """

    side: str
    skeleton: np.ndarray
    interp: np.ndarray
    rank: int
    tail_ratio: float = 0.0


@dataclass
class LowRankFactor:
    """A ~= u @ diag(s) @ v.T with orthonormal u, v and nonincreasing s."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray

    @property
    def rank(self):
        return self.s.size

    def apply(self, x):
        return self.u @ (self.s[:, None] * (self.v.T @ x) if x.ndim > 1
                         else self.s * (self.v.T @ x))

    def apply_transpose(self, x):
        return self.v @ (self.s[:, None] * (self.u.T @ x) if x.ndim > 1
                         else self.s * (self.u.T @ x))


def sample_indices(count, total, mode="mock_chebyshev", rng=None):
    """min(count, total) distinct indices in [0, total), sorted ascending.

    mock_chebyshev maps the Chebyshev points cos(pi*(2i+1)/(2*count)) onto
    [0, total-1], rounds to nearest, and walks duplicates to the nearest
    unused index.  random draws uniformly without replacement from rng.
    """
    if count <= 0 or total <= 0:
        raise ValueError("count and total must be positive")
    count = min(count, total)
    if count == total:
        return np.arange(total, dtype=np.intp)
    if mode == "random":
        if rng is None:
            raise ValueError("random mode needs an rng")
        return np.sort(rng.choice(total, size=count, replace=False)).astype(np.intp)
    if mode != "mock_chebyshev":
        raise ValueError(f"unknown sampling mode {mode!r}")
    i = np.arange(count, dtype=np.float64)
    t = np.cos(np.pi * (2.0 * i + 1.0) / (2.0 * count))
    raw = np.rint((t + 1.0) * 0.5 * (total - 1)).astype(np.intp)
    if np.unique(raw).size == raw.size:
        return np.sort(raw)
    used = np.zeros(total, dtype=bool)
    picked = np.empty(count, dtype=np.intp)
    npick = 0
    for idx in raw.tolist():
        if not used[idx]:
            used[idx] = True
            picked[npick] = idx
            npick += 1
            continue
        # walk outward, preferring the upper neighbor at equal distance
        for delta in range(1, total):
            cand = idx + delta
            if cand < total and not used[cand]:
                break
            cand = idx - delta
            if cand >= 0 and not used[cand]:
                break
        used[cand] = True
        picked[npick] = cand
        npick += 1
    picked.sort()
    return picked


def pivoted_qr(a):
    """Column-pivoted economic QR; |diag(R)| is nonincreasing."""
    q, r, perm = scipy.linalg.qr(a, mode="economic", pivoting=True)
    return q, r, perm


def _pivoted_r(a):
    # R and pivots only; skips forming Q, which halves the LAPACK work
    r, perm = scipy.linalg.qr(a, mode="r", pivoting=True)
    return r, perm


def _choose_rank(diag_mag, eps):
    # smallest prefix whose first dropped diagonal ratio is <= eps
    if diag_mag.size == 0 or diag_mag[0] == 0.0:
        return 0, 0.0
    ratios = diag_mag / diag_mag[0]
    below = np.nonzero(ratios <= eps)[0]
    if below.size:
        return int(below[0]), float(ratios[below[0]])
    return diag_mag.size, float(ratios[-1])


def cid(oracle, cfg, rng=None):
    """Column interpolative decomposition from t*r_k sampled rows.

    Rows are drawn per cfg.mode, a pivoted QR of the sampled strip picks the
    skeleton columns, and the interpolation matrix comes from the triangular
    solve.  If the diagonal ratio never reaches cfg.tolerance at the rank
    cap, r_k is doubled (up to 4 times) before giving up.
    """
    m, n = oracle.shape
    if m == 0 or n == 0:
        raise ValueError("cid needs a nonempty oracle")
    rk = cfg.adaptive_rank
    last_ratio = np.inf
    for _ in range(5):
        cap = cfg.oversampling * rk
        rows = sample_indices(min(cap, m), m, cfg.mode, rng)
        strip = oracle.block(rows, np.arange(n, dtype=np.intp))
        r, perm = _pivoted_r(strip)
        diag_mag = np.abs(np.diag(r))
        k, tail = _choose_rank(diag_mag, cfg.tolerance)
        if k < diag_mag.size or k >= n or rows.size >= m:
            return _build_col_interp(r, perm, k, n, tail)
        last_ratio = float(diag_mag[-1] / diag_mag[0])
        rk *= 2
    raise RankOverflowError(
        f"column ID did not reach tolerance {cfg.tolerance:g} at cap "
        f"{cfg.oversampling * cfg.adaptive_rank * 16} (last ratio {last_ratio:.3e})",
        cap=cfg.oversampling * cfg.adaptive_rank * 16,
        tail_ratio=last_ratio,
    )


def _build_col_interp(r, perm, k, n, tail):
    if k == 0:
        return InterpDecomp("col", np.zeros(0, dtype=np.intp),
                            np.zeros((0, n)), 0, tail)
    r1 = r[:k, :k]
    d = np.abs(np.diag(r1))
    delta = 1e-15 * d[0]
    if d.min() < delta:
        # nearly singular leading block: clamp tiny diagonal magnitudes
        r1 = r1.copy()
        idx = np.arange(k)
        sgn = np.where(np.diag(r1) < 0, -1.0, 1.0)
        r1[idx, idx] = sgn * np.maximum(d, delta)
    interp = np.zeros((k, n))
    interp[:, perm[:k]] = np.eye(k)
    if k < n:
        t = scipy.linalg.solve_triangular(r1, r[:k, k:])
        interp[:, perm[k:]] = t
    return InterpDecomp("col", perm[:k].astype(np.intp), interp, k, tail)


def rid(oracle, cfg, rng=None):
    """Row interpolative decomposition; the transpose-symmetric twin of cid."""
    d = cid(oracle.transpose(), cfg, rng)
    return InterpDecomp("row", d.skeleton, np.ascontiguousarray(d.interp.T),
                        d.rank, d.tail_ratio)


def rsvd(oracle, row_samples, col_samples, rank, oversample=2, rng=None):
    """Randomized rank-`rank` SVD from sampled rows and columns.

    Pivoted QRs of the sampled row strip and column strip select rank
    important columns/rows; orthonormal bases of those are glued by a small
    least-squares core over the augmented sample sets (fresh random rows and
    columns appended), whose dense SVD yields the factors.  Pseudo-inverses
    truncate singular values below 1e-13 of the largest.
    """
    if rng is None:
        rng = np.random.default_rng()
    m, n = oracle.shape
    r = int(min(rank, m, n))
    if r < 1:
        raise ValueError("rsvd needs rank >= 1 and a nonempty oracle")
    row_samples = np.asarray(row_samples, dtype=np.intp)
    col_samples = np.asarray(col_samples, dtype=np.intp)
    if row_samples.size < r or col_samples.size < r:
        raise ValueError("need at least `rank` sampled rows and columns")
    all_rows = np.arange(m, dtype=np.intp)
    all_cols = np.arange(n, dtype=np.intp)

    _, perm = _pivoted_r(oracle.block(row_samples, all_cols))
    pi_col = perm[:r]
    _, perm = _pivoted_r(oracle.block(all_rows, col_samples).T)
    pi_row = perm[:r]

    q_col, _, _ = pivoted_qr(oracle.block(all_rows, pi_col))
    q_col = q_col[:, :r]
    q_row, _, _ = pivoted_qr(oracle.block(pi_row, all_cols).T)
    q_row = q_row[:, :r]

    rows_aug = np.concatenate([pi_row, rng.choice(m, size=min(row_samples.size, m), replace=False)])
    cols_aug = np.concatenate([pi_col, rng.choice(n, size=min(col_samples.size, n), replace=False)])

    core = np.linalg.pinv(q_col[rows_aug, :], rcond=1e-13) \
        @ oracle.block(rows_aug, cols_aug) \
        @ np.linalg.pinv(q_row[cols_aug, :].T, rcond=1e-13)
    u_m, s, vt_m = np.linalg.svd(core)
    return LowRankFactor(u=q_col @ u_m[:, :r], s=s[:r],
                         v=q_row @ vt_m[:r, :].T)
