"""Finite balls of a space as explicit CSR graphs, plus metric primitives.

A VertexSet is a sorted, duplicate-free int32 numpy array of window indices.
Vertex order inside a window is the sorted canonical order of the space.
"""
from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import kernels
from .space_models import CayleyFree, CayleyZn, SpaceModel, build_space

DEFAULT_BUDGET = 25_000_000


class WindowError(ValueError):
    pass


class WindowBudgetError(WindowError):
    def __init__(self, budget: int, reached_radius: int, needed: int | None = None):
        self.budget = budget
        self.reached_radius = reached_radius
        self.needed = needed
        msg = f"window exceeds vertex budget {budget} (reached radius {reached_radius}"
        msg += f", needs {needed} vertices)" if needed is not None else ")"
        super().__init__(msg)


def vertex_budget() -> int:
    return int(os.environ.get("COARSE_SCOPE_BUDGET", DEFAULT_BUDGET))


def vset(indices) -> np.ndarray:
    """Normalize an index collection to a VertexSet."""
    return np.unique(np.asarray(indices, dtype=np.int64)).astype(np.int32)


EMPTY = np.zeros(0, dtype=np.int32)


class LatticeLabels:
    """Read-only sequence view of lattice coordinates as int tuples."""

    def __init__(self, coords: np.ndarray):
        self.coords = coords

    def __len__(self):
        return self.coords.shape[0]

    def __getitem__(self, i):
        return tuple(int(x) for x in self.coords[i])

    def __iter__(self):
        for row in self.coords.tolist():
            yield tuple(row)


@dataclass(eq=False)
class Window:
    space: SpaceModel
    base: object
    radius: int
    labels: object  # list of vertices or LatticeLabels
    indptr: np.ndarray
    indices: np.ndarray
    dist_base: np.ndarray
    boundary: np.ndarray
    coords: np.ndarray | None = None
    _index: dict | None = field(default=None, repr=False)
    _keys: np.ndarray | None = field(default=None, repr=False)
    _key_base: int = 0

    def __len__(self):
        return len(self.dist_base)

    @property
    def n_edges(self) -> int:
        return int(len(self.indices) // 2)

    @property
    def is_lattice(self) -> bool:
        """True for full ℓ1 balls of Z^n, where the window metric is the ℓ1 metric."""
        return self._keys is not None

    def _lattice_key(self, pts: np.ndarray) -> np.ndarray:
        rel = pts.astype(np.int64) - np.asarray(self.base, dtype=np.int64) + self.radius
        key = np.zeros(rel.shape[0], dtype=np.int64)
        for i in range(rel.shape[1]):
            key = key * self._key_base + rel[:, i]
        return key

    def lookup(self, vertices) -> np.ndarray:
        """Indices of the given vertices, -1 where absent."""
        vertices = list(vertices)
        if not vertices:
            return np.zeros(0, dtype=np.int64)
        if self.is_lattice:
            pts = np.asarray(vertices, dtype=np.int64).reshape(len(vertices), -1)
            inside = np.abs(pts - np.asarray(self.base)).sum(axis=1) <= self.radius
            key = self._lattice_key(pts)
            pos = np.searchsorted(self._keys, key)
            pos = np.minimum(pos, len(self._keys) - 1)
            ok = inside & (self._keys[pos] == key)
            return np.where(ok, pos, -1)
        return np.array([self._index.get(v, -1) for v in vertices], dtype=np.int64)

    def lookup_coords(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized lookup for lattice windows: rows of integer coordinates."""
        if not self.is_lattice:
            return self.lookup([tuple(int(x) for x in p) for p in pts])
        pts = np.asarray(pts, dtype=np.int64)
        if len(pts) == 0:
            return np.zeros(0, dtype=np.int64)
        inside = np.abs(pts - np.asarray(self.base)).sum(axis=1) <= self.radius
        key = self._lattice_key(pts)
        pos = np.minimum(np.searchsorted(self._keys, key), len(self._keys) - 1)
        return np.where(inside & (self._keys[pos] == key), pos, -1)

    def has(self, v) -> bool:
        return bool(self.lookup([v])[0] >= 0)

    def index(self, v) -> int:
        i = int(self.lookup([v])[0])
        if i < 0:
            raise WindowError(f"{v!r} is not in the window")
        return i

    def indices_of(self, vertices) -> np.ndarray:
        idx = self.lookup(vertices)
        if (idx < 0).any():
            missing = [v for v, i in zip(vertices, idx) if i < 0][:3]
            raise WindowError(f"vertices outside the window: {missing}")
        return vset(idx)

    def vertex(self, i: int):
        return self.labels[int(i)]

    def vertices(self, idx) -> list:
        return [self.labels[int(i)] for i in idx]

    def encode_set(self, idx) -> list:
        if self.coords is not None:
            return self.coords[np.asarray(idx, dtype=np.int64)].tolist()
        return [self.space.encode(self.labels[int(i)]) for i in idx]

    def neighbors_of(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def safe(self, margin: int) -> np.ndarray:
        """Vertices at distance >= margin from the collar (dist_base <= W - margin)."""
        return np.flatnonzero(self.dist_base <= self.radius - margin).astype(np.int32)

    def ref(self) -> dict:
        return {"space": self.space.spec(), "base": self.space.encode(self.base),
                "radius": self.radius}

    def mask(self, A) -> np.ndarray:
        m = np.zeros(len(self), dtype=bool)
        m[np.asarray(A, dtype=np.int64)] = True
        return m


def _l1_ball_count(n: int, W: int) -> int:
    return sum(2 ** k * comb(n, k) * comb(W, k) for k in range(0, min(n, W) + 1))


def ball_count(space: SpaceModel, W: int) -> int | None:
    """Exact vertex count of a radius-W ball where a closed form exists."""
    if isinstance(space, CayleyZn):
        return _l1_ball_count(space.n, W)
    if isinstance(space, CayleyFree):
        q = 2 * space.k - 1
        return 1 + 2 * space.k * W if q == 1 else 1 + 2 * space.k * (q ** W - 1) // (q - 1)
    return None


def _too_big(space: SpaceModel, W: int, budget: int):
    N = ball_count(space, W)
    if N is not None and N > budget:
        r = W
        while r > 0 and ball_count(space, r) > budget:
            r -= 1
        raise WindowBudgetError(budget, r, N)


def _l1_ball_points(n: int, W: int) -> np.ndarray:
    """All integer points with ℓ1 norm <= W, in lexicographic order."""
    pts = np.zeros((1, 0), dtype=np.int32)
    rem = np.array([W], dtype=np.int64)
    for _ in range(n):
        counts = 2 * rem + 1
        total = int(counts.sum())
        starts = np.repeat(np.cumsum(counts) - counts, counts)
        offs = np.arange(total, dtype=np.int64) - starts
        r = np.repeat(rem, counts)
        coord = offs - r
        pts = np.concatenate([np.repeat(pts, counts, axis=0),
                              coord.astype(np.int32)[:, None]], axis=1)
        rem = r - np.abs(coord)
    return pts


def _lattice_window(space: CayleyZn, base, W: int, budget: int) -> Window:
    n = space.n
    N = _l1_ball_count(n, W)
    _too_big(space, W, budget)
    B = 2 * W + 1
    if B ** n >= 2 ** 62:
        raise WindowError("lattice window too wide for int64 keys")
    rel = _l1_ball_points(n, W)
    coords = rel + np.asarray(base, dtype=np.int32)
    keys = np.zeros(N, dtype=np.int64)
    for i in range(n):
        keys = keys * B + (rel[:, i].astype(np.int64) + W)
    norm = np.abs(rel).sum(axis=1).astype(np.int32)
    nbr = np.full((N, 2 * n), -1, dtype=np.int32)
    col = 0
    for i in range(n):
        step = B ** (n - 1 - i)
        for s in (-1, 1):
            moved = np.abs(rel[:, i] + s).astype(np.int32) - np.abs(rel[:, i])
            ok = norm + moved <= W
            pos = np.searchsorted(keys, keys[ok] + s * step).astype(np.int32)
            nbr[ok, col] = pos
            col += 1
    nbr.sort(axis=1)
    valid = nbr >= 0
    indices = nbr[valid].astype(np.int32)
    indptr = np.zeros(N + 1, dtype=np.int64)
    np.cumsum(valid.sum(axis=1), out=indptr[1:])
    del nbr, valid
    w = Window(space=space, base=tuple(base), radius=W, labels=LatticeLabels(coords),
               indptr=indptr.astype(np.int32), indices=indices, dist_base=norm,
               boundary=norm == W, coords=coords)
    w._keys = keys
    w._key_base = B
    return w


def _generic_window(space: SpaceModel, base, W: int, budget: int) -> Window:
    dist = {base: 0}
    queue = deque([base])
    while queue:
        v = queue.popleft()
        dv = dist[v]
        if dv == W:
            continue
        for u in space.neighbors(v):
            if u not in dist:
                dist[u] = dv + 1
                if len(dist) > budget:
                    raise WindowBudgetError(budget, dv)
                queue.append(u)
    labels = sorted(dist, key=space.key)
    index = {v: i for i, v in enumerate(labels)}
    ptr = [0]
    flat: list[int] = []
    for v in labels:
        nb = sorted(index[u] for u in space.neighbors(v) if u in index)
        flat.extend(nb)
        ptr.append(len(flat))
    dist_base = np.array([dist[v] for v in labels], dtype=np.int32)
    truncated = np.array([space.truncated(v) for v in labels], dtype=bool)
    coords = None
    if space.lattice_dim is not None and labels:
        coords = np.array(labels, dtype=np.int32).reshape(len(labels), -1)
    return Window(space=space, base=base, radius=W, labels=labels,
                  indptr=np.array(ptr, dtype=np.int32), indices=np.array(flat, dtype=np.int32),
                  dist_base=dist_base, boundary=(dist_base == W) | truncated,
                  coords=coords, _index=index)


def extract_window(space, base=None, W: int = 0, budget: int | None = None,
                   generic: bool = False) -> Window:
    """BFS-complete ball of radius W around base (default: the space basepoint)."""
    space = build_space(space)
    if W < 0:
        raise WindowError("window radius must be >= 0")
    base = space.basepoint if base is None else base
    if not space.contains(base):
        raise WindowError(f"base {base!r} is not a vertex of the space")
    budget = vertex_budget() if budget is None else budget
    _too_big(space, W, budget)
    if isinstance(space, CayleyZn) and not generic:
        return _lattice_window(space, base, W, budget)
    return _generic_window(space, base, W, budget)


def distances(w: Window, A, max_dist: int = -1, blocked=None) -> np.ndarray:
    """Multi-source window BFS distances from A (-1 where unreached)."""
    return kernels.bfs(w.indptr, w.indices, np.asarray(A), max_dist, blocked)


def ball(w: Window, d: int) -> np.ndarray:
    return np.flatnonzero(w.dist_base <= d).astype(np.int32)


def sphere(w: Window, d: int) -> np.ndarray:
    if d < 0 or d > w.radius:
        raise WindowError(f"sphere radius {d} outside 0..{w.radius}")
    return np.flatnonzero(w.dist_base == d).astype(np.int32)


def neighborhood(w: Window, A, r: int) -> np.ndarray:
    if r < 0:
        raise WindowError("neighborhood radius must be >= 0")
    A = np.asarray(A)
    if len(A) == 0:
        return EMPTY.copy()
    d = distances(w, A, max_dist=r)
    return np.flatnonzero(d >= 0).astype(np.int32)


def components(w: Window, A) -> list[np.ndarray]:
    """Connected components of the induced subgraph on A, ordered by minimal vertex."""
    labels, ncomp = kernels.components(w.indptr, w.indices, w.mask(A))
    if ncomp == 0:
        return []
    inside = np.flatnonzero(labels >= 0)
    lab = labels[inside]
    order = np.argsort(lab, kind="stable")
    cuts = np.searchsorted(lab[order], np.arange(1, ncomp))
    return [part.astype(np.int32) for part in np.split(inside[order], cuts)]


def component_labels(w: Window, A) -> tuple[np.ndarray, int]:
    return kernels.components(w.indptr, w.indices, w.mask(A))


def geodesic_indices(w: Window, a: int, b: int, blocked=None) -> list[int]:
    """Shortest a->b index path; at each step the smallest admissible index wins."""
    d = distances(w, [b], blocked=blocked)
    if d[a] < 0:
        raise WindowError("target unreachable inside the window")
    path = [int(a)]
    v = int(a)
    while v != b:
        for u in w.neighbors_of(v):  # neighbor lists are sorted by index
            if d[u] == d[v] - 1:
                v = int(u)
                break
        path.append(v)
    return path


def geodesic_segment(w: Window, a, b) -> list:
    return w.vertices(geodesic_indices(w, w.index(a), w.index(b)))


def window_distance(w: Window, a: int, b: int) -> int:
    return int(distances(w, [a])[b])
