# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled graph kernels over CSR adjacency (int32 indptr/indices).

Every function here has a line-for-line twin in ``_pykernels``; the two are
checked against each other by the test suite and timed by the benchmark.
"""
import numpy as np
cimport numpy as cnp

ctypedef cnp.int32_t i32
ctypedef cnp.uint8_t u8


def bfs(const i32[:] indptr, const i32[:] indices, const i32[:] sources,
        int max_dist=-1, const u8[:] blocked=None):
    """Multi-source BFS distances; -1 for unreached. Blocked vertices are never entered."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    dist_arr = np.full(n, -1, dtype=np.int32)
    cdef i32[:] dist = dist_arr
    cdef i32[:] queue = np.empty(max(n, 1), dtype=np.int32)
    cdef Py_ssize_t head = 0, tail = 0, k
    cdef i32 v, u, dv
    cdef bint use_block = blocked is not None
    for k in range(sources.shape[0]):
        v = sources[k]
        if dist[v] < 0:
            dist[v] = 0
            queue[tail] = v
            tail += 1
    while head < tail:
        v = queue[head]
        head += 1
        dv = dist[v]
        if max_dist >= 0 and dv >= max_dist:
            continue
        for k in range(indptr[v], indptr[v + 1]):
            u = indices[k]
            if dist[u] >= 0:
                continue
            if use_block and blocked[u]:
                continue
            dist[u] = dv + 1
            queue[tail] = u
            tail += 1
    return dist_arr


def components(const i32[:] indptr, const i32[:] indices, const u8[:] mask):
    """Label connected components of the induced subgraph on mask.

    Labels follow the smallest vertex index of each component; -1 outside mask.
    """
    cdef Py_ssize_t n = indptr.shape[0] - 1
    labels_arr = np.full(n, -1, dtype=np.int32)
    cdef i32[:] labels = labels_arr
    cdef i32[:] queue = np.empty(max(n, 1), dtype=np.int32)
    cdef Py_ssize_t s, head, tail, k
    cdef i32 v, u, ncomp = 0
    for s in range(n):
        if not mask[s] or labels[s] >= 0:
            continue
        labels[s] = ncomp
        head = 0
        tail = 1
        queue[0] = <i32>s
        while head < tail:
            v = queue[head]
            head += 1
            for k in range(indptr[v], indptr[v + 1]):
                u = indices[k]
                if mask[u] and labels[u] < 0:
                    labels[u] = ncomp
                    queue[tail] = u
                    tail += 1
        ncomp += 1
    return labels_arr, ncomp


def ball_patch_counts(const i32[:] indptr, const i32[:] indices, const i32[:] centers,
                      int R, const i32[:] vp_ptr, const i32[:] vp_idx, int n_patches):
    """For each center, the number of distinct patches met by its closed R-ball."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t m = centers.shape[0]
    counts_arr = np.zeros(m, dtype=np.int32)
    cdef i32[:] counts = counts_arr
    cdef i32[:] vstamp = np.full(max(n, 1), -1, dtype=np.int32)
    cdef i32[:] pstamp = np.full(max(n_patches, 1), -1, dtype=np.int32)
    cdef i32[:] dist = np.zeros(max(n, 1), dtype=np.int32)
    cdef i32[:] queue = np.empty(max(n, 1), dtype=np.int32)
    cdef Py_ssize_t c, head, tail, k, j
    cdef i32 v, u, p, cnt, st
    for c in range(m):
        st = <i32>c
        v = centers[c]
        vstamp[v] = st
        dist[v] = 0
        queue[0] = v
        head = 0
        tail = 1
        cnt = 0
        while head < tail:
            v = queue[head]
            head += 1
            for j in range(vp_ptr[v], vp_ptr[v + 1]):
                p = vp_idx[j]
                if pstamp[p] != st:
                    pstamp[p] = st
                    cnt += 1
            if dist[v] >= R:
                continue
            for k in range(indptr[v], indptr[v + 1]):
                u = indices[k]
                if vstamp[u] != st:
                    vstamp[u] = st
                    dist[u] = dist[v] + 1
                    queue[tail] = u
                    tail += 1
        counts[c] = cnt
    return counts_arr


def touching(const i32[:] indptr, const i32[:] indices, const i32[:] candidates,
             const u8[:] mask):
    """1 where a candidate has at least one neighbor inside mask."""
    cdef Py_ssize_t m = candidates.shape[0], c, k
    out_arr = np.zeros(m, dtype=np.uint8)
    cdef u8[:] out = out_arr
    cdef i32 v
    for c in range(m):
        v = candidates[c]
        for k in range(indptr[v], indptr[v + 1]):
            if mask[indices[k]]:
                out[c] = 1
                break
    return out_arr


def set_diameter(const i32[:] indptr, const i32[:] indices, const i32[:] members):
    """Max window distance between two members (BFS from each, stopping early)."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t m = members.shape[0]
    if m <= 1:
        return 0
    cdef i32[:] vstamp = np.full(n, -1, dtype=np.int32)
    cdef u8[:] is_member = np.zeros(n, dtype=np.uint8)
    cdef i32[:] dist = np.zeros(n, dtype=np.int32)
    cdef i32[:] queue = np.empty(n, dtype=np.int32)
    cdef Py_ssize_t c, head, tail, k, found
    cdef i32 v, u, best = 0
    for c in range(m):
        is_member[members[c]] = 1
    for c in range(m):
        v = members[c]
        vstamp[v] = <i32>c
        dist[v] = 0
        queue[0] = v
        head = 0
        tail = 1
        found = 1
        while head < tail and found < m:
            v = queue[head]
            head += 1
            for k in range(indptr[v], indptr[v + 1]):
                u = indices[k]
                if vstamp[u] != c:
                    vstamp[u] = <i32>c
                    dist[u] = dist[v] + 1
                    queue[tail] = u
                    tail += 1
                    if is_member[u]:
                        found += 1
                        if dist[u] > best:
                            best = dist[u]
        if found < m:
            return -1
    return best
