# cython: boundscheck=False, wraparound=False
"""Compiled accuracy kernels; behavioural twin of ``_native.py``."""

from cpython.mem cimport PyMem_Free, PyMem_Malloc

BACKEND = "cython"


def lcs_length(a, b):
    """Length of the longest common subsequence of two token-id sequences."""
    cdef Py_ssize_t la = len(a)
    cdef Py_ssize_t lb = len(b)
    if la == 0 or lb == 0:
        return 0
    if lb > la:
        a, b = b, a
        la, lb = lb, la

    cdef long *ids_a = <long *> PyMem_Malloc(la * sizeof(long))
    cdef long *ids_b = <long *> PyMem_Malloc(lb * sizeof(long))
    cdef long *prev = <long *> PyMem_Malloc((lb + 1) * sizeof(long))
    cdef long *curr = <long *> PyMem_Malloc((lb + 1) * sizeof(long))
    if ids_a == NULL or ids_b == NULL or prev == NULL or curr == NULL:
        PyMem_Free(ids_a)
        PyMem_Free(ids_b)
        PyMem_Free(prev)
        PyMem_Free(curr)
        raise MemoryError()

    cdef Py_ssize_t i, j
    cdef long x, up, left
    cdef long *tmp
    try:
        for i in range(la):
            ids_a[i] = a[i]
        for j in range(lb):
            ids_b[j] = b[j]
        for j in range(lb + 1):
            prev[j] = 0
            curr[j] = 0
        for i in range(la):
            x = ids_a[i]
            for j in range(1, lb + 1):
                if x == ids_b[j - 1]:
                    curr[j] = prev[j - 1] + 1
                else:
                    left = curr[j - 1]
                    up = prev[j]
                    curr[j] = left if left >= up else up
            tmp = prev
            prev = curr
            curr = tmp
        return prev[lb]
    finally:
        PyMem_Free(ids_a)
        PyMem_Free(ids_b)
        PyMem_Free(prev)
        PyMem_Free(curr)
