# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled LCS kernel over integer-coded token sequences."""

from libc.stdlib cimport calloc, free


def lcs_length(a, b):
    """Length of the longest common subsequence of two integer sequences."""
    cdef Py_ssize_t n = len(a), m = len(b), i, j
    if n < m:
        a, b = b, a
        n, m = m, n
    if m == 0:
        return 0
    cdef long *xs = <long *> calloc(n, sizeof(long))
    cdef long *ys = <long *> calloc(m, sizeof(long))
    cdef long *prev = <long *> calloc(m + 1, sizeof(long))
    cdef long *cur = <long *> calloc(m + 1, sizeof(long))
    cdef long *tmp
    cdef long x, result
    if xs == NULL or ys == NULL or prev == NULL or cur == NULL:
        free(xs); free(ys); free(prev); free(cur)
        raise MemoryError()
    try:
        for i in range(n):
            xs[i] = a[i]
        for j in range(m):
            ys[j] = b[j]
        for i in range(n):
            x = xs[i]
            cur[0] = 0
            for j in range(m):
                if x == ys[j]:
                    cur[j + 1] = prev[j] + 1
                elif cur[j] > prev[j + 1]:
                    cur[j + 1] = cur[j]
                else:
                    cur[j + 1] = prev[j + 1]
            tmp = prev
            prev = cur
            cur = tmp
        result = prev[m]
    finally:
        free(xs); free(ys); free(prev); free(cur)
    return result
