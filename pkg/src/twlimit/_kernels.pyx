# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled component kernels; see _kernels_py for the reference versions."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef Py_ssize_t _sizes(const long long[:] indptr, const long long[:] indices,
                       unsigned char[:] seen, long long[:] stack, long long[:] out) noexcept nogil:
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t s, u, w, p, top, size, count = 0
    for s in range(n):
        if seen[s]:
            continue
        seen[s] = 1
        stack[0] = s
        top = 1
        size = 0
        while top > 0:
            top -= 1
            u = stack[top]
            size += 1
            for p in range(indptr[u], indptr[u + 1]):
                w = indices[p]
                if not seen[w]:
                    seen[w] = 1
                    stack[top] = w
                    top += 1
        out[count] = size
        count += 1
    return count


def component_sizes(indptr, indices, removed):
    cdef const long long[:] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const long long[:] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef Py_ssize_t n = ip.shape[0] - 1
    seen = np.array(removed, dtype=np.uint8, copy=True)
    stack = np.empty(max(n, 1), dtype=np.int64)
    out = np.empty(max(n, 1), dtype=np.int64)
    cdef Py_ssize_t c = _sizes(ip, ix, seen, stack, out)
    return sorted(out[:c].tolist(), reverse=True)


def largest_after_removal(indptr, indices, removed, candidates):
    cdef const long long[:] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const long long[:] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef Py_ssize_t n = ip.shape[0] - 1
    base = np.array(removed, dtype=np.uint8, copy=True)
    cdef unsigned char[:] b = base
    seen_arr = np.empty(max(n, 1), dtype=np.uint8)
    cdef unsigned char[:] seen = seen_arr
    cdef long long[:] stack = np.empty(max(n, 1), dtype=np.int64)
    cdef long long[:] sizes = np.empty(max(n, 1), dtype=np.int64)
    cdef const long long[:] cand = np.ascontiguousarray(candidates, dtype=np.int64)
    result = np.zeros(cand.shape[0], dtype=np.int64)
    cdef long long[:] res = result
    cdef Py_ssize_t j, i, cnt, best
    with nogil:
        for j in range(cand.shape[0]):
            for i in range(n):
                seen[i] = b[i]
            seen[cand[j]] = 1
            cnt = _sizes(ip, ix, seen, stack, sizes)
            best = 0
            for i in range(cnt):
                if sizes[i] > best:
                    best = sizes[i]
            res[j] = best
    return result.tolist()
