"""Backend selection for the GF(2) column reduction.

The compiled kernel (``_gf2``) is used when it was built; otherwise, or when
``SINGULOCK_PURE`` is set, the pure-Python reduction below runs. Both take
columns as ascending lists of row indices, where every row index is smaller
than its column index, and return ``(lows, reps)``: ``lows[j]`` is the
pivot row of the reduced column ``j`` (``-1`` if it reduced to zero) and
``reps[j]`` lists the columns summed into each zero column ``j``.
"""

import os


def reduce_columns_py(columns):
    n = len(columns)
    cols = [0] * n
    for j, c in enumerate(columns):
        bits = 0
        for i in c:
            bits ^= 1 << i
        cols[j] = bits
    added = [1 << j for j in range(n)]
    pivot_of = {}
    lows = [-1] * n
    reps = {}
    for j in range(n):
        c = cols[j]
        v = added[j]
        while c:
            k = pivot_of.get(c.bit_length() - 1)
            if k is None:
                break
            c ^= cols[k]
            v ^= added[k]
        cols[j] = c
        added[j] = v
        if c:
            low = c.bit_length() - 1
            pivot_of[low] = j
            lows[j] = low
        else:
            reps[j] = _bits(v)
    return lows, reps


def _bits(x):
    out = []
    while x:
        low = x & -x
        out.append(low.bit_length() - 1)
        x ^= low
    return out


try:
    from ._gf2 import reduce_columns as reduce_columns_ext
except ImportError:  # extension not built
    reduce_columns_ext = None

if reduce_columns_ext is not None and not os.environ.get("SINGULOCK_PURE"):
    BACKEND = "cython"
    reduce_columns = reduce_columns_ext
else:
    BACKEND = "python"
    reduce_columns = reduce_columns_py
