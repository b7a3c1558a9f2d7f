# cython: language_level=3, boundscheck=False, wraparound=False
# distutils: language = c++
"""Compiled GF(2) column reduction over sorted sparse columns."""

from libcpp.vector cimport vector


cdef void _symdiff(vector[int]& a, const vector[int]& b, vector[int]& tmp) noexcept nogil:
    cdef size_t i = 0, j = 0
    tmp.clear()
    while i < a.size() and j < b.size():
        if a[i] < b[j]:
            tmp.push_back(a[i])
            i += 1
        elif b[j] < a[i]:
            tmp.push_back(b[j])
            j += 1
        else:
            i += 1
            j += 1
    while i < a.size():
        tmp.push_back(a[i])
        i += 1
    while j < b.size():
        tmp.push_back(b[j])
        j += 1
    a.swap(tmp)


def reduce_columns(list columns):
    cdef Py_ssize_t n = len(columns)
    cdef vector[vector[int]] cols = vector[vector[int]](n)
    cdef vector[vector[int]] added = vector[vector[int]](n)
    cdef vector[int] pivot_of = vector[int](n, -1)
    cdef vector[int] lows = vector[int](n, -1)
    cdef vector[int] tmp
    cdef Py_ssize_t j
    cdef int k, low
    for j in range(n):
        for i in columns[j]:
            cols[j].push_back(i)
        added[j].push_back(j)
    with nogil:
        for j in range(n):
            while cols[j].size() > 0:
                low = cols[j].back()
                k = pivot_of[low]
                if k < 0:
                    break
                _symdiff(cols[j], cols[k], tmp)
                _symdiff(added[j], added[k], tmp)
            if cols[j].size() > 0:
                low = cols[j].back()
                pivot_of[low] = j
                lows[j] = low
    reps = {}
    for j in range(n):
        if lows[j] < 0:
            reps[j] = list(added[j])
    return list(lows), reps
