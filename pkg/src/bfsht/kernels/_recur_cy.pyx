# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Legendre recurrence kernel.

Scalar inner loop over (point, degree).  Must mirror _recur_np.py operation
for operation; the build disables FP contraction so both backends produce
bitwise-identical values.
"""
from libc.math cimport fabs, ldexp

from .common import BIG, MAG_MIN, RESCALE, SMALL

cdef double C_BIG = BIG
cdef double C_SMALL = SMALL
cdef double C_MAG_MIN = MAG_MIN
cdef int C_RESCALE = RESCALE


def leg_eval_block(double[::1] x, long m, long[::1] degrees,
                   double[::1] alpha, double[::1] beta,
                   double[::1] prev_mant, double[::1] cur_mant,
                   int[::1] exp2, long s0, double[:, ::1] out):
    """Fill out[r, d] = Pbar_{degrees[d]}^m(x[r]); see _recur_np.leg_eval_block."""
    cdef Py_ssize_t nx = x.shape[0]
    cdef Py_ssize_t nd = degrees.shape[0]
    cdef Py_ssize_t r, d
    cdef long k, s, k_start, k_stop
    cdef int e
    cdef double p_prev, p_cur, p_next, xr, a, b, mx, v

    k_start = m + s0
    k_stop = degrees[nd - 1]
    with nogil:
        for r in range(nx):
            xr = x[r]
            p_prev = prev_mant[r]
            p_cur = cur_mant[r]
            e = exp2[r]
            d = 0
            if degrees[0] == k_start:
                v = ldexp(p_cur, e)
                if fabs(v) < C_MAG_MIN:
                    v = 0.0
                out[r, 0] = v
                d = 1
            for k in range(k_start, k_stop):
                s = k - m
                p_next = alpha[s] * (xr * p_cur) - beta[s] * p_prev
                p_prev = p_cur
                p_cur = p_next
                a = fabs(p_cur)
                b = fabs(p_prev)
                mx = a if a > b else b
                if mx > C_BIG:
                    p_cur = ldexp(p_cur, -C_RESCALE)
                    p_prev = ldexp(p_prev, -C_RESCALE)
                    e = e + C_RESCALE
                elif mx < C_SMALL and mx > 0.0:
                    p_cur = ldexp(p_cur, C_RESCALE)
                    p_prev = ldexp(p_prev, C_RESCALE)
                    e = e - C_RESCALE
                if d < nd and degrees[d] == k + 1:
                    v = ldexp(p_cur, e)
                    if fabs(v) < C_MAG_MIN:
                        v = 0.0
                    out[r, d] = v
                    d = d + 1
    return out


def leg_advance(double[::1] x, double[::1] alpha, double[::1] beta,
                double[::1] prev_mant, double[::1] cur_mant, int[::1] exp2,
                long s0, long steps):
    """Advance the state arrays in place; see _recur_np.leg_advance."""
    cdef Py_ssize_t nx = x.shape[0]
    cdef Py_ssize_t r
    cdef long s, s_stop
    cdef int e
    cdef double p_prev, p_cur, p_next, xr, a, b, mx

    s_stop = s0 + steps
    with nogil:
        for r in range(nx):
            xr = x[r]
            p_prev = prev_mant[r]
            p_cur = cur_mant[r]
            e = exp2[r]
            for s in range(s0, s_stop):
                p_next = alpha[s] * (xr * p_cur) - beta[s] * p_prev
                p_prev = p_cur
                p_cur = p_next
                a = fabs(p_cur)
                b = fabs(p_prev)
                mx = a if a > b else b
                if mx > C_BIG:
                    p_cur = ldexp(p_cur, -C_RESCALE)
                    p_prev = ldexp(p_prev, -C_RESCALE)
                    e = e + C_RESCALE
                elif mx < C_SMALL and mx > 0.0:
                    p_cur = ldexp(p_cur, C_RESCALE)
                    p_prev = ldexp(p_prev, C_RESCALE)
                    e = e - C_RESCALE
            prev_mant[r] = p_prev
            cur_mant[r] = p_cur
            exp2[r] = e
