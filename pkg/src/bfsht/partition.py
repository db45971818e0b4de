"""Turning-point partition of odd/even Legendre transform matrices.

The half-transform matrix for order m and one parity has rows indexed by the
positive Gauss-Legendre nodes (ascending x, so descending colatitude) and
columns by the degrees of that parity.  Each column's function switches from
exponential decay to oscillation at its turning point; the crossing traces a
monotone curve through the matrix.  Blocks strictly on the oscillatory side
compress with a butterfly factorization, blocks strictly on the decaying side
are numerically low rank, and blocks straddling the curve are kept small and
applied densely.  Trimming removes regions that underflowed to negligible
magnitude before any factorization sees them.
"""
import threading
from dataclasses import dataclass, replace

import numpy as np

from .lowrank import EntryOracle
from .kernels import advance_state, eval_from_state, seed_state
from .kernels.common import recurrence_coefficients
from .special import QuadratureRule, gauss_legendre

__all__ = [
    "AltMatrixSpec",
    "Block",
    "BlockTreeResult",
    "make_alt_spec",
    "entry_oracle",
    "curve_column",
    "partition",
    "trim_block",
    "export_blocks",
]

TAU_DEFAULT = 1e-290


@dataclass
class AltMatrixSpec:
    """Geometry of one parity half of an order-m transform matrix.

    n is the transform half-size: the quadrature has 2n nodes and the matrix
    n rows.  Columns hold degrees m + p(j), p(j) = 2j+1 (odd) or 2j (even).
    """

    n: int
    m: int
    parity: str
    num_cols: int
    quadrature: QuadratureRule

    @property
    def offset(self):
        return 1 if self.parity == "odd" else 0

    @property
    def x_pos(self):
        return self.quadrature.nodes[self.n:]

    @property
    def thetas(self):
        return np.arccos(self.x_pos)

    def col_degrees(self, cols):
        return self.m + self.offset + 2 * np.asarray(cols, dtype=np.int64)


def make_alt_spec(n, m, parity, quadrature=None):
    if parity not in ("odd", "even"):
        raise ValueError(f"parity must be 'odd' or 'even', got {parity!r}")
    if not 0 <= m <= 2 * n - 1:
        raise ValueError(f"order {m} outside [0, {2 * n - 1}]")
    half = (m + 1) // 2 if parity == "odd" else m // 2
    num_cols = n - half
    if num_cols < 1:
        raise ValueError(f"order {m} leaves no {parity} degrees at half-size {n}")
    if quadrature is None:
        quadrature = gauss_legendre(2 * n)
    elif quadrature.order != 2 * n:
        raise ValueError(f"quadrature order {quadrature.order} != {2 * n}")
    return AltMatrixSpec(n=n, m=m, parity=parity, num_cols=num_cols,
                         quadrature=quadrature)


# Degree stride between cached recurrence states.  Each gather replays at
# most this many run-up steps before its first requested degree; the cache
# costs one full-span pass and ~20 bytes per (node, checkpoint).
CHECKPOINT_SPACING = 128


class AltEntryOracle(EntryOracle):
    """Entry access by running the degree recurrence on the requested rows.

    Without help every gather would recur from degree m, which makes the
    sampled factorizations quadratic in practice: blocks far from the main
    diagonal ask for degrees thousands of steps past the seed.  The oracle
    therefore snapshots the recurrence state every CHECKPOINT_SPACING degrees
    for all rows, built lazily on the first deep gather, and resumes from the
    nearest snapshot.  Resumed evaluation replays the identical operation
    sequence, so results match seeded evaluation bitwise.
    """

    def __init__(self, spec):
        self.spec = spec
        self._x = np.ascontiguousarray(spec.x_pos)
        self._coeffs = None
        self._cp = None
        self._lock = threading.Lock()

    @property
    def num_rows(self):
        return self.spec.n

    @property
    def num_cols(self):
        return self.spec.num_cols

    def _coefficients(self):
        if self._coeffs is None:
            k_last = int(self.spec.col_degrees(self.spec.num_cols - 1))
            self._coeffs = recurrence_coefficients(self.spec.m, k_last)
        return self._coeffs

    def _checkpoints(self):
        if self._cp is None:
            with self._lock:
                if self._cp is None:
                    s_max = self.spec.offset + 2 * (self.spec.num_cols - 1)
                    alpha, beta = self._coefficients()
                    state = seed_state(self.spec.m, self._x)
                    cps = []
                    for j in range(s_max // CHECKPOINT_SPACING):
                        advance_state(self._x, alpha, beta, state,
                                      j * CHECKPOINT_SPACING,
                                      CHECKPOINT_SPACING)
                        cps.append(tuple(a.copy() for a in state))
                    self._cp = cps
        return self._cp

    def block(self, rows, cols):
        rows = np.asarray(rows, dtype=np.intp)
        cols = np.asarray(cols, dtype=np.intp)
        if rows.size and (rows.min() < 0 or rows.max() >= self.num_rows):
            raise IndexError("row index out of range")
        if cols.size and (cols.min() < 0 or cols.max() >= self.num_cols):
            raise IndexError("column index out of range")
        if rows.size == 0 or cols.size == 0:
            return np.zeros((rows.size, cols.size))
        # the kernel wants distinct ascending degrees; callers may repeat
        if cols.size == 1 or np.all(cols[1:] > cols[:-1]):
            uniq, inv = cols, slice(None)
        else:
            uniq, inv = np.unique(cols, return_inverse=True)
        degrees = self.spec.col_degrees(uniq)
        xs = np.ascontiguousarray(self._x[rows])
        j = 0
        if int(degrees[0]) - self.spec.m >= CHECKPOINT_SPACING:
            cps = self._checkpoints()
            j = min((int(degrees[0]) - self.spec.m) // CHECKPOINT_SPACING,
                    len(cps))
        if j == 0:
            state = seed_state(self.spec.m, xs)
        else:
            cp = cps[j - 1]
            state = tuple(np.ascontiguousarray(a[rows]) for a in cp)
        alpha, beta = self._coefficients()
        table = eval_from_state(self.spec.m, xs, degrees, alpha, beta,
                                state, j * CHECKPOINT_SPACING)
        return table[:, inv]


def entry_oracle(spec):
    return AltEntryOracle(spec)


def curve_column(spec, i):
    """Fractional column index where row i crosses the turning-point curve.

    Columns below the returned value are non-oscillatory at that row, columns
    above it oscillatory.  Monotone nondecreasing in i.  m = 0 has no curve.
    """
    if spec.m < 1:
        raise ValueError("the m = 0 matrix is oscillatory everywhere")
    theta = np.arccos(spec.x_pos[i])
    k_star = np.sqrt(spec.m**2 - 0.25) / np.sin(theta) - 0.5
    return (k_star - spec.m - spec.offset) / 2.0


@dataclass
class Block:
    """One leaf of the partition; trim and payload are set by later stages."""

    row_range: tuple
    col_range: tuple
    kind: str
    level: int
    band: int
    trim: tuple = None
    payload: object = None

    @property
    def shape(self):
        return (self.row_range[1] - self.row_range[0],
                self.col_range[1] - self.col_range[0])


@dataclass
class BlockTreeResult:
    spec: AltMatrixSpec
    blocks: list
    levels_used: int
    initial_band_rows: int


def partition(spec, n0):
    """Split the matrix into classified blocks along the turning-point curve.

    Starts from b nearly square full-width row bands, b the nearest integer
    to n/num_cols, then recursively quarters any block the curve crosses.
    Crossing blocks with fewer than n0 rows or columns stop as turning
    blocks.  The curve is evaluated once per row.
    """
    if n0 < 2:
        raise ValueError("n0 must be >= 2")
    n, nc = spec.n, spec.num_cols
    if spec.m == 0:
        blocks = [Block((0, n), (0, nc), "oscillatory", level=0, band=0)]
        return BlockTreeResult(spec=spec, blocks=blocks, levels_used=0,
                               initial_band_rows=1)

    jstar = curve_column(spec, np.arange(n))
    b = int(np.floor(n / nc + 0.5))
    bounds = [(i * n) // b for i in range(b + 1)]

    blocks = []
    levels_used = 0
    for band in range(b):
        stack = [(bounds[band], bounds[band + 1], 0, nc, 0)]
        while stack:
            r0, r1, c0, c1, lev = stack.pop()
            levels_used = max(levels_used, lev)
            if c0 >= jstar[r1 - 1]:
                blocks.append(Block((r0, r1), (c0, c1), "oscillatory",
                                    level=lev, band=band))
            elif c1 <= jstar[r0]:
                blocks.append(Block((r0, r1), (c0, c1), "non_oscillatory",
                                    level=lev, band=band))
            elif r1 - r0 < n0 or c1 - c0 < n0:
                blocks.append(Block((r0, r1), (c0, c1), "turning",
                                    level=lev, band=band))
            else:
                rm, cm = (r0 + r1) // 2, (c0 + c1) // 2
                stack.extend([(r0, rm, c0, cm, lev + 1),
                              (r0, rm, cm, c1, lev + 1),
                              (rm, r1, c0, cm, lev + 1),
                              (rm, r1, cm, c1, lev + 1)])
    return BlockTreeResult(spec=spec, blocks=blocks, levels_used=levels_used,
                           initial_band_rows=b)


def _leading_run(mags, tau):
    below = np.nonzero(~(mags > tau))[0]
    return mags.size if below.size == 0 else int(below[0])


def _live_prefix(oracle, r0, r1, col, tau):
    """Length of the leading run of |entries| > tau down one column.

    Matches _leading_run on the gathered column but locates the crossing by
    a geometric ladder plus bracket refinement, so tall blocks cost a few
    dozen probed rows instead of thousands.  Relies on the same monotone
    decay away from the curve that justifies boundary-only probing.
    """
    n = r1 - r0
    if n <= 256:
        vals = np.abs(oracle.block(np.arange(r0, r1, dtype=np.intp),
                                   [col])[:, 0])
        return _leading_run(vals, tau)
    offs = [0]
    while offs[-1] < n - 1:
        offs.append(min(2 * offs[-1] + 1, n - 1))
    offs = np.asarray(offs, dtype=np.intp)
    dead = ~(np.abs(oracle.block(r0 + offs, [col])[:, 0]) > tau)
    if dead[0]:
        return 0
    if not dead.any():
        return n
    j = int(np.argmax(dead))
    lo, hi = int(offs[j - 1]), int(offs[j])
    while hi - lo > 256:
        grid = np.unique(np.linspace(lo, hi, 18).astype(np.intp)[1:-1])
        gdead = ~(np.abs(oracle.block(r0 + grid, [col])[:, 0]) > tau)
        if not gdead.any():
            lo = int(grid[-1])
        elif gdead[0]:
            hi = int(grid[0])
        else:
            k = int(np.argmax(gdead))
            lo, hi = int(grid[k - 1]), int(grid[k])
    span = np.arange(lo + 1, hi + 1, dtype=np.intp)
    vals = np.abs(oracle.block(r0 + span, [col])[:, 0])
    return lo + 1 + _leading_run(vals, tau)


def trim_block(spec, block, tau=TAU_DEFAULT, oracle=None):
    """Shrink a block to the corner rectangle bounding its non-negligible part.

    Magnitudes decay monotonically away from the turning curve, so the set
    of above-tau entries is a staircase region attached to the top-right
    corner: per column the live rows are a prefix whose length grows with
    the degree, per row the live columns are a suffix.  The right column
    therefore carries the longest row prefix and the top row the longest
    column suffix, and probing just those two edges yields a rectangle
    containing every above-tau entry.  The box's far edges may dip below
    tau when a block spans from the curve into deep decay (tall turning
    blocks under a coarse stop size); keeping the oscillatory wedge intact
    is what matters there.  A block whose probes all fall below tau keeps
    trim = None and is dropped by the planner.  Oscillatory blocks are
    retained whole.  Passing a shared oracle reuses its checkpoint cache
    across blocks.
    """
    (r0, r1), (c0, c1) = block.row_range, block.col_range
    if block.kind == "oscillatory":
        return replace(block, trim=(r0, r1, c0, c1))

    if oracle is None:
        oracle = entry_oracle(spec)
    h = _live_prefix(oracle, r0, r1, c1 - 1, tau)
    if h == 0:
        return replace(block, trim=None)
    top = np.abs(oracle.block([r0], np.arange(c0, c1, dtype=np.intp))[0])
    w = _leading_run(top[::-1], tau)
    return replace(block, trim=(r0, r0 + h, c1 - w, c1))


def export_blocks(result):
    """JSON-ready block records for rendering or diffing partitions."""
    recs = []
    for blk in result.blocks:
        recs.append({
            "row0": blk.row_range[0], "row1": blk.row_range[1],
            "col0": blk.col_range[0], "col1": blk.col_range[1],
            "class": blk.kind,
            "level": blk.level,
            "band": blk.band,
            "trim": list(blk.trim) if blk.trim is not None else None,
        })
    return recs
