"""Pure-Python twins of the compiled kernels in ``_kernels.pyx``.

Same signatures, same outputs. Used when the extension is not built or when
COARSE_SCOPE_PURE=1 is set.
"""
from collections import deque

import numpy as np


def bfs(indptr, indices, sources, max_dist=-1, blocked=None):
    ptr = indptr.tolist()
    idx = indices.tolist()
    n = len(ptr) - 1
    dist = [-1] * n
    block = blocked.tolist() if blocked is not None else None
    queue = deque()
    for v in np.asarray(sources).tolist():
        if dist[v] < 0:
            dist[v] = 0
            queue.append(v)
    while queue:
        v = queue.popleft()
        dv = dist[v]
        if 0 <= max_dist <= dv:
            continue
        for k in range(ptr[v], ptr[v + 1]):
            u = idx[k]
            if dist[u] >= 0 or (block is not None and block[u]):
                continue
            dist[u] = dv + 1
            queue.append(u)
    return np.array(dist, dtype=np.int32)


def components(indptr, indices, mask):
    ptr = indptr.tolist()
    idx = indices.tolist()
    inside = mask.tolist()
    n = len(ptr) - 1
    labels = [-1] * n
    ncomp = 0
    for s in range(n):
        if not inside[s] or labels[s] >= 0:
            continue
        labels[s] = ncomp
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for k in range(ptr[v], ptr[v + 1]):
                u = idx[k]
                if inside[u] and labels[u] < 0:
                    labels[u] = ncomp
                    queue.append(u)
        ncomp += 1
    return np.array(labels, dtype=np.int32), ncomp


def ball_patch_counts(indptr, indices, centers, R, vp_ptr, vp_idx, n_patches):
    ptr = indptr.tolist()
    idx = indices.tolist()
    vptr = vp_ptr.tolist()
    vidx = vp_idx.tolist()
    counts = []
    for c in np.asarray(centers).tolist():
        dist = {c: 0}
        queue = deque([c])
        seen = set()
        while queue:
            v = queue.popleft()
            seen.update(vidx[vptr[v]:vptr[v + 1]])
            if dist[v] >= R:
                continue
            for k in range(ptr[v], ptr[v + 1]):
                u = idx[k]
                if u not in dist:
                    dist[u] = dist[v] + 1
                    queue.append(u)
        counts.append(len(seen))
    return np.array(counts, dtype=np.int32)


def touching(indptr, indices, candidates, mask):
    ptr = indptr.tolist()
    idx = indices.tolist()
    inside = mask.tolist()
    out = [1 if any(inside[idx[k]] for k in range(ptr[v], ptr[v + 1])) else 0
           for v in np.asarray(candidates).tolist()]
    return np.array(out, dtype=np.uint8)


def set_diameter(indptr, indices, members):
    ptr = indptr.tolist()
    idx = indices.tolist()
    mem = np.asarray(members).tolist()
    if len(mem) <= 1:
        return 0
    targets = set(mem)
    best = 0
    for s in mem:
        dist = {s: 0}
        queue = deque([s])
        found = 1
        while queue and found < len(targets):
            v = queue.popleft()
            for k in range(ptr[v], ptr[v + 1]):
                u = idx[k]
                if u not in dist:
                    dist[u] = dist[v] + 1
                    queue.append(u)
                    if u in targets:
                        found += 1
                        best = max(best, dist[u])
        if found < len(targets):
            return -1
    return best
