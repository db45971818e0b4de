"""Pure-numpy fallback for the Legendre recurrence kernel.

Vectorized over evaluation points; the degree loop stays in Python.  Keeps
the exact operation order of the compiled kernel (see _recur_cy.pyx) so the
two backends return bitwise-identical tables.
"""
import numpy as np

from .common import BIG, MAG_MIN, RESCALE, SMALL


def leg_eval_block(x, m, degrees, alpha, beta, prev_mant, cur_mant, exp2,
                   s0, out):
    """Fill out[r, d] = Pbar_{degrees[d]}^m(x[r]) from a recurrence state.

    The state (prev_mant, cur_mant, exp2) holds the scaled pair
    (Pbar_{m+s0-1}, Pbar_{m+s0}) per point; s0 = 0 with prev_mant = 0 is the
    seed state from kernels.common.start_values.  degrees must be sorted
    ascending with degrees[0] >= m + s0, and alpha/beta must cover the steps
    s = s0 .. degrees[-1]-m-1.  The state arrays are left untouched.
    """
    nd = degrees.shape[0]
    p_prev = prev_mant.copy()
    p_cur = cur_mant.copy()
    e = exp2.astype(np.int32, copy=True)

    d = 0
    if degrees[0] == m + s0:
        _emit(p_cur, e, out, 0)
        d = 1
    k_stop = int(degrees[-1])
    for k in range(m + s0, k_stop):
        s = k - m
        p_next = alpha[s] * (x * p_cur) - beta[s] * p_prev
        p_prev = p_cur
        p_cur = p_next
        mx = np.maximum(np.abs(p_cur), np.abs(p_prev))
        big = mx > BIG
        if big.any():
            p_cur[big] = np.ldexp(p_cur[big], -RESCALE)
            p_prev[big] = np.ldexp(p_prev[big], -RESCALE)
            e[big] += RESCALE
        small = (mx < SMALL) & (mx > 0.0)
        if small.any():
            p_cur[small] = np.ldexp(p_cur[small], RESCALE)
            p_prev[small] = np.ldexp(p_prev[small], RESCALE)
            e[small] -= RESCALE
        if d < nd and degrees[d] == k + 1:
            _emit(p_cur, e, out, d)
            d += 1
    return out


def leg_advance(x, alpha, beta, prev_mant, cur_mant, exp2, s0, steps):
    """Advance the recurrence state in place by `steps` degree steps.

    Identical operation order to leg_eval_block minus the emissions, so a
    state advanced here and evaluated later matches one uninterrupted
    evaluation bitwise.
    """
    p_prev = prev_mant.copy()
    p_cur = cur_mant.copy()
    e = exp2.astype(np.int32, copy=True)
    for s in range(s0, s0 + steps):
        p_next = alpha[s] * (x * p_cur) - beta[s] * p_prev
        p_prev = p_cur
        p_cur = p_next
        mx = np.maximum(np.abs(p_cur), np.abs(p_prev))
        big = mx > BIG
        if big.any():
            p_cur[big] = np.ldexp(p_cur[big], -RESCALE)
            p_prev[big] = np.ldexp(p_prev[big], -RESCALE)
            e[big] += RESCALE
        small = (mx < SMALL) & (mx > 0.0)
        if small.any():
            p_cur[small] = np.ldexp(p_cur[small], RESCALE)
            p_prev[small] = np.ldexp(p_prev[small], RESCALE)
            e[small] -= RESCALE
    prev_mant[:] = p_prev
    cur_mant[:] = p_cur
    exp2[:] = e


def _emit(p, e, out, col):
    v = np.ldexp(p, e)
    v[np.abs(v) < MAG_MIN] = 0.0
    out[:, col] = v
