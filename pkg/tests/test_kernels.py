"""Compiled kernels against the pure-Python fallback on random graphs."""
import json
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coarse_scope import _pykernels, kernels

try:
    from coarse_scope import _kernels
except ImportError:  # extension not built
    _kernels = None

needs_ext = pytest.mark.skipif(_kernels is None, reason="compiled extension not built")


def _csr(n, edges):
    adj = [set() for _ in range(n)]
    for a, b in edges:
        if a != b:
            adj[a].add(b)
            adj[b].add(a)
    indptr = np.zeros(n + 1, dtype=np.int32)
    indptr[1:] = np.cumsum([len(s) for s in adj])
    indices = np.array([u for s in adj for u in sorted(s)], dtype=np.int32)
    return indptr, indices


@st.composite
def graphs(draw):
    n = draw(st.integers(1, 30))
    edges = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)),
                          max_size=3 * n))
    mask = np.array(draw(st.lists(st.booleans(), min_size=n, max_size=n)), dtype=np.uint8)
    srcs = draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=3))
    return n, _csr(n, edges), mask, np.array(sorted(set(srcs)), dtype=np.int32)


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")


@needs_ext
@settings(max_examples=150, deadline=None)
@given(graphs(), st.integers(-1, 5))
def test_bfs_equivalence(g, max_dist):
    n, (ptr, idx), mask, srcs = g
    for blocked in (None, mask):
        a = kernels.bfs(ptr, idx, srcs, max_dist, blocked, impl=_kernels)
        b = kernels.bfs(ptr, idx, srcs, max_dist, blocked, impl=_pykernels)
        assert np.array_equal(a, b)


@needs_ext
@settings(max_examples=150, deadline=None)
@given(graphs())
def test_components_touching_diameter_equivalence(g):
    n, (ptr, idx), mask, srcs = g
    la, na = kernels.components(ptr, idx, mask, impl=_kernels)
    lb, nb = kernels.components(ptr, idx, mask, impl=_pykernels)
    assert na == nb and np.array_equal(la, lb)
    cand = np.arange(n, dtype=np.int32)
    assert np.array_equal(kernels.touching(ptr, idx, cand, mask, impl=_kernels),
                          kernels.touching(ptr, idx, cand, mask, impl=_pykernels))
    assert (kernels.set_diameter(ptr, idx, srcs, impl=_kernels)
            == kernels.set_diameter(ptr, idx, srcs, impl=_pykernels))


@needs_ext
@settings(max_examples=100, deadline=None)
@given(graphs(), st.integers(0, 3), st.integers(1, 5))
def test_ball_patch_counts_equivalence(g, R, k):
    n, (ptr, idx), mask, srcs = g
    pid = (np.arange(n) * 7919) % k  # a partition into k patches
    vp_ptr = np.arange(n + 1, dtype=np.int32)
    vp_idx = pid.astype(np.int32)
    centers = np.arange(n, dtype=np.int32)
    a = kernels.ball_patch_counts(ptr, idx, centers, R, vp_ptr, vp_idx, k, impl=_kernels)
    b = kernels.ball_patch_counts(ptr, idx, centers, R, vp_ptr, vp_idx, k, impl=_pykernels)
    assert np.array_equal(a, b)


def test_bfs_on_path():
    ptr, idx = _csr(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
    d = kernels.bfs(ptr, idx, [0])
    assert d.tolist() == [0, 1, 2, 3, 4]
    blocked = np.array([0, 0, 1, 0, 0], dtype=np.uint8)
    assert kernels.bfs(ptr, idx, [0], -1, blocked).tolist() == [0, 1, -1, -1, -1]
    assert kernels.set_diameter(ptr, idx, np.array([0, 4])) == 4
    ptr2, idx2 = _csr(3, [(0, 1)])
    assert kernels.set_diameter(ptr2, idx2, np.array([0, 2])) == -1


def test_pure_fallback_selected_by_env():
    code = ("import json; from coarse_scope import kernels; "
            "from coarse_scope.windows import extract_window, sphere; "
            "from coarse_scope.covers import brick_cover; "
            "from coarse_scope.descendants import descend; "
            "w = extract_window('zn:2', None, 30); "
            "f = descend(brick_cover(w, 6), sphere(w, 12)); "
            "print(json.dumps([kernels.BACKEND, w.encode_set(f.union())]))")
    out = {}
    for pure in ("0", "1"):
        env = dict(os.environ, COARSE_SCOPE_PURE=pure)
        res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                             text=True, check=True)
        out[pure] = json.loads(res.stdout)
    assert out["1"][0] == "python"
    assert out["0"][1] == out["1"][1]
