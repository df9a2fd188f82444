"""Kernel dispatch: compiled extension when available, pure Python otherwise.

Set COARSE_SCOPE_PURE=1 to force the fallback.
"""
import os

import numpy as np

from . import _pykernels

if os.environ.get("COARSE_SCOPE_PURE") == "1":
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
        BACKEND = "python"


def _i32(a):
    return np.ascontiguousarray(a, dtype=np.int32)


def _u8(a):
    return np.ascontiguousarray(a, dtype=np.uint8)


def bfs(indptr, indices, sources, max_dist=-1, blocked=None, impl=None):
    impl = impl or _impl
    return impl.bfs(indptr, indices, _i32(sources), int(max_dist),
                    None if blocked is None else _u8(blocked))


def components(indptr, indices, mask, impl=None):
    impl = impl or _impl
    return impl.components(indptr, indices, _u8(mask))


def ball_patch_counts(indptr, indices, centers, R, vp_ptr, vp_idx, n_patches, impl=None):
    impl = impl or _impl
    return impl.ball_patch_counts(indptr, indices, _i32(centers), int(R),
                                  _i32(vp_ptr), _i32(vp_idx), int(n_patches))


def touching(indptr, indices, candidates, mask, impl=None):
    impl = impl or _impl
    return impl.touching(indptr, indices, _i32(candidates), _u8(mask)).astype(bool)


def set_diameter(indptr, indices, members, impl=None):
    impl = impl or _impl
    return int(impl.set_diameter(indptr, indices, _i32(members)))
