"""Covers of a window: mesh and R-multiplicity evaluators, canonical covers, oracle.

Patches are stored as one CSR (patch_ptr, patch_idx) of sorted window
indices. Multiplicity uses closed balls of the window metric.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np

from . import kernels
from .space_models import CayleyFree, CayleyZn, Ray, SpaceModel, WedgeIntervals
from .windows import Window, distances, vset


class CoverError(ValueError):
    pass


class MeshViolation(CoverError):
    def __init__(self, patch_id: int, diameter: int, declared: int):
        self.patch_id, self.diameter, self.declared = patch_id, diameter, declared
        super().__init__(f"patch {patch_id} has diameter {diameter} > declared mesh {declared}")


class MarginError(CoverError):
    pass


@dataclass(frozen=True)
class Patch:
    id: int
    members: np.ndarray
    tags: tuple = ()


@dataclass
class MultiplicityReport:
    R: int
    value: int
    center: int | None  # window index of the witness center
    patches: list[int]  # patch ids met by the witness ball
    region_size: int

    def as_dict(self, w: Window) -> dict:
        return {"R": self.R, "value": self.value,
                "witness": None if self.center is None else
                {"center": w.encode_set([self.center])[0], "patches": self.patches},
                "region_size": self.region_size}


class Cover:
    def __init__(self, window: Window, patch_ptr, patch_idx, declared_mesh: int,
                 tags: list | None = None, name: str = "", vp: tuple | None = None):
        self.window = window
        self.patch_ptr = np.asarray(patch_ptr, dtype=np.int64)
        self.patch_idx = np.asarray(patch_idx, dtype=np.int32)
        self.declared_mesh = int(declared_mesh)
        self.tags = tags
        self.name = name
        self.certificates: dict = {}
        self._vp = vp
        if (np.diff(self.patch_ptr) <= 0).any():
            raise CoverError("patches must be nonempty")

    @classmethod
    def from_sets(cls, window: Window, sets, declared_mesh: int, tags=None, name=""):
        sets = [vset(s) for s in sets]
        ptr = np.zeros(len(sets) + 1, dtype=np.int64)
        np.cumsum([len(s) for s in sets], out=ptr[1:])
        idx = np.concatenate(sets) if sets else np.zeros(0, dtype=np.int32)
        return cls(window, ptr, idx, declared_mesh, tags=tags, name=name)

    @classmethod
    def from_labels(cls, window: Window, lab: np.ndarray, declared_mesh: int, name=""):
        """Partition cover from a per-vertex group code; ids follow minimal vertex."""
        _, first, inv = np.unique(lab, return_index=True, return_inverse=True)
        rank = np.empty(len(first), dtype=np.int64)
        rank[np.argsort(first, kind="stable")] = np.arange(len(first))
        pid = rank[inv.ravel()].astype(np.int32)
        order = np.argsort(pid, kind="stable").astype(np.int32)
        ptr = np.zeros(len(first) + 1, dtype=np.int64)
        np.cumsum(np.bincount(pid, minlength=len(first)), out=ptr[1:])
        vp = (np.arange(len(pid) + 1, dtype=np.int32), pid)
        return cls(window, ptr, order, declared_mesh, name=name, vp=vp)

    def __len__(self):
        return len(self.patch_ptr) - 1

    def members(self, i: int) -> np.ndarray:
        return self.patch_idx[self.patch_ptr[i]:self.patch_ptr[i + 1]]

    def patch(self, i: int) -> Patch:
        tags = tuple(self.tags[i]) if self.tags is not None else ()
        return Patch(i, self.members(i), tags)

    @property
    def patches(self) -> list[Patch]:
        return [self.patch(i) for i in range(len(self))]

    def sizes(self) -> np.ndarray:
        return np.diff(self.patch_ptr)

    def union(self) -> np.ndarray:
        return vset(self.patch_idx)

    def vertex_patches(self) -> tuple[np.ndarray, np.ndarray]:
        """Transpose CSR: for each window vertex, the ids of patches containing it."""
        if self._vp is None:
            pid = np.repeat(np.arange(len(self), dtype=np.int32), self.sizes())
            order = np.lexsort((pid, self.patch_idx))
            counts = np.bincount(self.patch_idx, minlength=len(self.window))
            ptr = np.zeros(len(self.window) + 1, dtype=np.int32)
            np.cumsum(counts, out=ptr[1:])
            self._vp = (ptr, pid[order].astype(np.int32))
        return self._vp

    def patches_at(self, A) -> np.ndarray:
        ptr, idx = self.vertex_patches()
        A = np.asarray(A, dtype=np.int64)
        if len(A) == 0:
            return np.zeros(0, dtype=np.int32)
        if len(idx) == len(self.window) and ptr[-1] == len(idx) and (np.diff(ptr) == 1).all():
            return np.unique(idx[A]).astype(np.int32)  # partition cover
        sel = np.concatenate([idx[s:e] for s, e in zip(ptr[A], ptr[A + 1])])
        return np.unique(sel).astype(np.int32)

    def covers(self, A) -> bool:
        return bool(np.isin(np.asarray(A), self.patch_idx).all())

    def subcover(self, ids, name="") -> "Cover":
        ids = list(ids)
        tags = [self.tags[i] for i in ids] if self.tags is not None else None
        return Cover.from_sets(self.window, [self.members(i) for i in ids],
                               self.declared_mesh, tags=tags, name=name)


def merge_covers(a: Cover, b: Cover, name="") -> Cover:
    if a.window is not b.window:
        raise CoverError("covers live in different windows")
    sets = [a.members(i) for i in range(len(a))] + [b.members(i) for i in range(len(b))]
    return Cover.from_sets(a.window, sets, max(a.declared_mesh, b.declared_mesh), name=name)


# -- evaluators ------------------------------------------------------------

def patch_diameters(c: Cover) -> np.ndarray:
    w = c.window
    if len(c) == 0:
        return np.zeros(0, dtype=np.int64)
    if w.is_lattice:
        pts = w.coords[c.patch_idx].astype(np.int64)
        n = pts.shape[1]
        starts = c.patch_ptr[:-1]
        best = np.zeros(len(c), dtype=np.int64)
        for mask in range(2 ** (n - 1)):
            sigma = np.array([1] + [-1 if (mask >> i) & 1 else 1 for i in range(n - 1)])
            proj = pts @ sigma
            best = np.maximum(best, np.maximum.reduceat(proj, starts) - np.minimum.reduceat(proj, starts))
        return best
    return np.array([kernels.set_diameter(w.indptr, w.indices, c.members(i))
                     for i in range(len(c))], dtype=np.int64)


def mesh(c: Cover, check: bool = True) -> int:
    """Max patch diameter; raises MeshViolation when it exceeds the declared mesh."""
    diam = patch_diameters(c)
    if len(diam) == 0:
        return 0
    if check and diam.max() > c.declared_mesh:
        bad = int(np.flatnonzero(diam > c.declared_mesh)[0])
        raise MeshViolation(bad, int(diam[bad]), c.declared_mesh)
    return int(diam.max())


def safe_region(c: Cover, R: int) -> np.ndarray:
    return c.window.safe(R + c.declared_mesh)


def ball_patches(c: Cover, center: int, R: int) -> list[int]:
    w = c.window
    d = distances(w, [center], max_dist=R)
    return c.patches_at(np.flatnonzero(d >= 0)).tolist()


def r_multiplicity(c: Cover, R: int, region=None, check_margin: bool = True) -> MultiplicityReport:
    """Max number of patches met by a closed R-ball centered in region."""
    if R < 0:
        raise CoverError("R must be >= 0")
    w = c.window
    region = safe_region(c, R) if region is None else vset(region)
    if check_margin and len(region) and (w.dist_base[region] > w.radius - R).any():
        raise MarginError(f"region reaches the untrusted collar: centers must satisfy "
                          f"dist_base <= {w.radius - R}")
    if len(c) == 0 or len(region) == 0:
        return MultiplicityReport(R, 0, None, [], len(region))
    near = distances(w, c.union(), max_dist=R) >= 0
    centers = region[near[region]]
    if len(centers) == 0:
        return MultiplicityReport(R, 0, None, [], len(region))
    vp_ptr, vp_idx = c.vertex_patches()
    counts = kernels.ball_patch_counts(w.indptr, w.indices, centers, R, vp_ptr, vp_idx, len(c))
    k = int(np.argmax(counts))
    center = int(centers[k])
    return MultiplicityReport(R, int(counts[k]), center, ball_patches(c, center, R), len(region))


# -- canonical covers ------------------------------------------------------

def brick_ids(coords: np.ndarray, sides, shifts) -> np.ndarray:
    """Staggered brick index per point: k_i = floor((x_i + s_i·Σ_{j>i} k_j) / L_i)."""
    n = coords.shape[1]
    ks = [None] * n
    tail = np.zeros(coords.shape[0], dtype=np.int64)
    for i in range(n - 1, -1, -1):
        ks[i] = np.floor_divide(coords[:, i].astype(np.int64) + shifts[i] * tail, sides[i])
        tail = tail + ks[i]
    code = np.zeros(coords.shape[0], dtype=np.int64)
    for i in range(n):
        k = ks[i] - ks[i].min() if len(ks[i]) else ks[i]
        span = int(k.max()) + 1 if len(k) else 1
        code = code * span + k
    return code


def brick_cover(w: Window, L: int, sides=None, shift=None) -> Cover:
    """Staggered axis-aligned bricks intersected with the window.

    Default bricks are cubes of side L, staggered by s = ceil(L/(n+1)) times the
    sum of the higher brick indices. ``sides``/``shift`` allow rectangular rows.
    """
    if w.coords is None:
        raise CoverError("brick covers need a lattice window")
    n = w.coords.shape[1]
    sides = [int(L)] * n if sides is None else [int(x) for x in sides]
    if min(sides) < 1:
        raise CoverError("brick sides must be >= 1")
    s = ceil(sides[0] / (n + 1)) if shift is None else int(shift)
    shifts = [s] * (n - 1) + [0]
    code = brick_ids(w.coords, sides, shifts)
    declared = sum(x - 1 for x in sides)
    return Cover.from_labels(w, code, declared, name=f"brick:{'x'.join(map(str, sides))}")


def interval_cover(w: Window, L: int, mirror: bool = False) -> Cover:
    """Cells [kL, kL+L-1] on Z or the ray; ``mirror`` reflects the cells into x <= 0.

    The mirrored cover is symmetric about 0: cells [kL, kL+L-1] for k >= 0 and
    their negatives, overlapping only at 0.
    """
    if w.coords is None and not isinstance(w.space, Ray):
        raise CoverError("interval covers need a one-dimensional window")
    x = (w.coords[:, 0] if w.coords is not None else np.array(list(w.labels))).astype(np.int64)
    if not mirror:
        return Cover.from_labels(w, np.floor_divide(x, L), L - 1, name=f"interval:{L}")
    sets = {}
    for i, xi in enumerate(x.tolist()):
        if xi >= 0:
            sets.setdefault((xi // L), []).append(i)
        if xi <= 0:
            sets.setdefault(-((-xi) // L) - 1, []).append(i)
    keys = sorted(sets, key=lambda k: min(sets[k]))
    return Cover.from_sets(w, [sets[k] for k in keys], L - 1, name=f"interval:{L}:mirror")


def _tree_parents(w: Window) -> np.ndarray:
    parent = np.full(len(w), -1, dtype=np.int64)
    d = w.dist_base
    for v in range(len(w)):
        if d[v] == 0:
            continue
        for u in w.neighbors_of(v):
            if d[u] == d[v] - 1:
                parent[v] = u
                break
    return parent


def tree_annular_cover(w: Window, width: int) -> Cover:
    """Annuli of the given width around the base, split along the tree.

    A vertex in annulus m goes to the patch of its ancestor at level
    max(0, m*width - width//2): the annulus components after thickening the
    annulus downward by width//2, restricted back to the annulus.
    """
    if width < 1:
        raise CoverError("width must be >= 1")
    if w.n_edges != len(w) - 1:
        raise CoverError("annular tree covers need a tree window")
    parent = _tree_parents(w)
    h = width // 2
    level = w.dist_base.astype(np.int64)
    target = np.maximum(0, (level // width) * width - h)
    anc = np.arange(len(w), dtype=np.int64)
    cur = level.copy()
    while True:
        move = cur > target
        if not move.any():
            break
        anc[move] = parent[anc[move]]
        cur[move] -= 1
    code = (level // width) * len(w) + anc
    return Cover.from_labels(w, code, 2 * (width - 1 + h), name=f"annular:{width}")


def singleton_cover(w: Window) -> Cover:
    return Cover.from_labels(w, np.arange(len(w)), 0, name="singletons")


def canonical_mesh(space: SpaceModel, R: int) -> int:
    """Declared mesh of the canonical cover designed for R-multiplicity <= asdim + 1."""
    return canonical_design(space, R)[1]


def canonical_design(space: SpaceModel, R: int):
    R = max(int(R), 1)
    if isinstance(space, CayleyZn):
        n = space.n
        if n == 1:
            return ("brick", [2 * R], None), 2 * R - 1
        if n == 2 and R >= 2:
            sides = [4 * R - 2, 2 * R + 1]
            return ("brick", sides, 2 * R - 1), sum(sides) - 2
        L = 2 if n == 2 else 2 * (n + 1) * R
        return ("brick", [L] * n, None), n * (L - 1)
    if isinstance(space, (CayleyFree, Ray, WedgeIntervals)):
        width = 2 * R + 1
        return ("annular", width), 2 * (width - 1 + width // 2)
    raise CoverError(f"no canonical cover for {space.kind}")


def canonical_cover(w: Window, R: int) -> Cover:
    design, _ = canonical_design(w.space, R)
    if design[0] == "brick":
        return brick_cover(w, design[1][0], sides=design[1], shift=design[2])
    return tree_annular_cover(w, design[1])


def asdim_bound(space: SpaceModel) -> int:
    if isinstance(space, CayleyZn):
        return space.n
    if isinstance(space, (CayleyFree, Ray, WedgeIntervals)):
        return 1
    raise CoverError(f"no asdim bound recorded for {space.kind}")


# -- brute-force oracle ----------------------------------------------------

def _all_pairs(w: Window) -> list[list[int]]:
    return [distances(w, [v]).tolist() for v in range(len(w))]


def _connected_patches(w: Window, dist, D: int) -> list[int]:
    n = len(w)
    nbr = [0] * n
    for v in range(n):
        for u in w.neighbors_of(v):
            nbr[v] |= 1 << int(u)
    out = []

    def members(mask):
        return [i for i in range(n) if mask >> i & 1]

    def rec(S, mem, cand, banned):
        out.append(S)
        cand = list(cand)
        for i, v in enumerate(cand):
            if any(dist[v][u] > D for u in mem):
                continue
            later = set(cand[i + 1:])
            ban = banned | {c for c in cand[:i + 1]}
            ext = later | {u for u in members(nbr[v]) if u > root and u not in ban
                           and not S >> u & 1}
            rec(S | 1 << v, mem + [v], sorted(ext - {v}), ban)

    for root in range(n):
        first = sorted(u for u in members(nbr[root]) if u > root)
        rec(1 << root, [root], first, set())
    return out


def _bounded_patches(w: Window, dist, D: int) -> list[int]:
    n = len(w)
    out = []

    def rec(S, mem, start):
        out.append(S)
        for v in range(start, n):
            if all(dist[v][u] <= D for u in mem):
                rec(S | 1 << v, mem + [v], v + 1)

    for root in range(n):
        rec(1 << root, [root], root + 1)
    return out


def min_multiplicity_oracle(w: Window, D: int, R: int, budget: int = 40,
                            connected_only: bool = True, node_limit: int = 5_000_000):
    """Exact minimal R-multiplicity over covers with mesh <= D (whole window, window metric)."""
    n = len(w)
    if n > budget:
        raise CoverError(f"oracle budget exceeded: {n} > {budget} vertices")
    dist = _all_pairs(w)
    ballmask = [sum(1 << u for u in range(n) if dist[v][u] <= R) for v in range(n)]
    cands = (_connected_patches if connected_only else _bounded_patches)(w, dist, D)
    meets = {}
    for S in cands:
        m = 0
        for v in range(n):
            if S >> v & 1:
                m |= ballmask[v]
        meets.setdefault(m, []).append(S)
    patches = []  # (set mask, meets mask), keep inclusion-maximal per meets class
    for m, group in meets.items():
        group.sort(key=lambda S: -bin(S).count("1"))
        kept: list[int] = []
        for S in group:
            if not any(S & K == S for K in kept):
                kept.append(S)
        patches.extend((S, m) for S in kept)
    patches.sort(key=lambda p: (-bin(p[0]).count("1"), p[0]))
    by_vertex = [[p for p in patches if p[0] >> v & 1] for v in range(n)]
    full = (1 << n) - 1
    nodes = [0]

    def feasible(limit):
        counts = [0] * n
        chosen: list[int] = []
        failed = set()

        def rec(covered):
            if covered == full:
                return True
            key = (covered, tuple(counts))
            if key in failed:
                return False
            nodes[0] += 1
            if nodes[0] > node_limit:
                raise CoverError("oracle node limit exceeded")
            u = (~covered & full & -(~covered & full)).bit_length() - 1
            for S, m in by_vertex[u]:
                hit = [c for c in range(n) if m >> c & 1]
                if any(counts[c] >= limit for c in hit):
                    continue
                for c in hit:
                    counts[c] += 1
                chosen.append(S)
                if rec(covered | S):
                    return True
                chosen.pop()
                for c in hit:
                    counts[c] -= 1
            failed.add(key)
            return False

        return chosen if rec(0) else None

    for limit in range(1, n + 1):
        sol = feasible(limit)
        if sol is not None:
            sets = [[i for i in range(n) if S >> i & 1] for S in sol]
            sets.sort(key=min)
            return limit, Cover.from_sets(w, sets, D, name="oracle")
    raise CoverError("no cover found")  # unreachable: singletons always work
