"""Kernel backend selection.

The hot loop of the whole package is the three-term degree recurrence that
evaluates normalized associated Legendre functions at quadrature nodes;
every matrix entry the factorizations touch goes through it.  A compiled
Cython kernel is used when the extension built, with a numpy fallback
otherwise.  Set BFSHT_KERNEL=numpy (or =compiled) to force a choice.

Both backends implement the same two entry points with identical operation
order and bitwise-identical results, so nothing depends on the build:
leg_eval_block evaluates a table of degrees from a per-point recurrence
state, and leg_advance pushes such a state forward without emitting values.
Starting from the seed state at degree m reproduces a plain evaluation;
starting from a saved mid-stream state skips the run-up, which is what makes
repeated deep-degree sampling affordable.
"""
import os

import numpy as np

from . import _recur_np
from .common import recurrence_coefficients, start_values

try:
    from . import _recur_cy
except ImportError:
    _recur_cy = None

_choice = os.environ.get("BFSHT_KERNEL", "").strip().lower()
if _choice == "numpy":
    _impl = _recur_np
    BACKEND = "numpy"
elif _choice == "compiled":
    if _recur_cy is None:
        raise ImportError("BFSHT_KERNEL=compiled but the extension is not built")
    _impl = _recur_cy
    BACKEND = "compiled"
elif _recur_cy is not None:
    _impl = _recur_cy
    BACKEND = "compiled"
else:
    _impl = _recur_np
    BACKEND = "numpy"


def available_backends():
    mods = {"numpy": _recur_np}
    if _recur_cy is not None:
        mods["compiled"] = _recur_cy
    return mods


def seed_state(m, x):
    """Recurrence state at degree m: scaled (Pbar_{m-1} = 0, Pbar_m) pairs."""
    mant, e2 = start_values(m, x)
    return np.zeros_like(mant), mant, e2


def advance_state(x, alpha, beta, state, s0, steps, backend=None):
    """Push a recurrence state forward `steps` degrees, in place.

    The state sits at degree m + s0 on entry and m + s0 + steps on return;
    alpha/beta index by absolute step and must cover s0 .. s0+steps-1.
    """
    impl = _impl if backend is None else available_backends()[backend]
    impl.leg_advance(x, alpha, beta, state[0], state[1], state[2],
                     int(s0), int(steps))


def eval_from_state(m, x, degrees, alpha, beta, state, s0, backend=None):
    """Table of Pbar_degree^m(x) resumed from a state at degree m + s0.

    degrees must be sorted ascending, distinct, and >= m + s0.  The state is
    read, not consumed, so one saved state serves any number of calls.
    """
    out = np.empty((x.size, degrees.size))
    impl = _impl if backend is None else available_backends()[backend]
    impl.leg_eval_block(x, m, degrees, alpha, beta, state[0], state[1],
                        state[2], int(s0), out)
    return out


def legendre_table(m, x, degrees, backend=None):
    """Table of Pbar_degree^m(x) values, shape (len(x), len(degrees)).

    Parameters
    ----------
    m: order, m >= 0
    x: evaluation points strictly inside (-1, 1)
    degrees: sorted array of distinct degrees, all >= m
    backend: one of available_backends(), default the selected module

    Entries whose magnitude falls below exp(-700) come back as exact zero.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    degrees = np.ascontiguousarray(degrees, dtype=np.int64)
    if degrees.size == 0 or x.size == 0:
        return np.zeros((x.size, degrees.size))
    if degrees[0] < m or np.any(np.diff(degrees) <= 0):
        raise ValueError("degrees must be sorted ascending, distinct, >= m")
    if np.any(np.abs(x) >= 1.0):
        raise ValueError("x must lie strictly inside (-1, 1)")
    alpha, beta = recurrence_coefficients(m, int(degrees[-1]))
    return eval_from_state(m, x, degrees, alpha, beta, seed_state(m, x), 0,
                           backend=backend)
