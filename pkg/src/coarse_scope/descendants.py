"""Descendant families along a separating set, their two claims, and the iteration.

U* for a barrier patch U is the set of vertices of U adjacent to the
component of the origin in window \\ (union of barrier patches); on simple
paths this is exactly the first-entry set of the barrier.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil

import numpy as np

from . import kernels
from .covers import (Cover, Patch, asdim_bound, canonical_cover, canonical_mesh,
                     mesh, patch_diameters, r_multiplicity)
from .space_models import build_space
from .windows import (EMPTY, Window, WindowError, ball, distances, extract_window,
                      neighborhood, sphere, vset)


class DescendError(ValueError):
    pass


class OriginInBarrier(DescendError):
    pass


class SeparationFailure(DescendError):
    def __init__(self, msg: str, path: list[int]):
        self.path = path
        super().__init__(msg)


class AnnulusViolation(DescendError):
    def __init__(self, stage: int, a: int, b: int, d: int):
        self.stage, self.a, self.b, self.d = stage, a, b, d
        super().__init__(f"stage {stage}: norms of E lie in [{a}, {b}], no admissible d "
                         f"(tried {d}) with E inside B(3d/2) minus B(3d/4+1)")


class ScheduleError(ValueError):
    pass


@dataclass
class DescendantFamily:
    source: Cover
    barrier: np.ndarray
    origin: int
    family: Cover  # the U*, tagged with their ancestor ids
    ancestors: np.ndarray
    barrier_ids: np.ndarray
    inner: np.ndarray
    sphere_radius: int | None = None

    @property
    def window(self) -> Window:
        return self.source.window

    @property
    def patches(self) -> list[Patch]:
        return self.family.patches

    def union(self) -> np.ndarray:
        return self.family.union()


def _escape_path(w: Window, dist: np.ndarray, target: int) -> list[int]:
    path = [int(target)]
    v = int(target)
    while dist[v] > 0:
        for u in w.neighbors_of(v):
            if dist[u] == dist[v] - 1:
                v = int(u)
                break
        path.append(v)
    return path[::-1]


def barrier_patches(c: Cover, E) -> list[Patch]:
    return [c.patch(int(i)) for i in c.patches_at(vset(E))]


def separation_check(w: Window, E, o: int) -> None:
    """Raise SeparationFailure unless E cuts o from the window boundary."""
    Emask = w.mask(E)
    if Emask[o]:
        raise OriginInBarrier("origin lies on the separating set")
    d = distances(w, [o], blocked=Emask)
    hit = np.flatnonzero((d >= 0) & w.boundary)
    if len(hit):
        target = hit[np.argmin(d[hit])]
        raise SeparationFailure("separating set does not cut the origin off the window "
                                "boundary", _escape_path(w, d, int(target)))


def descend(c: Cover, E, origin=None, *, origin_index: int | None = None,
            sphere_radius: int | None = None) -> DescendantFamily:
    """Descendants of the barrier patches meeting E, seen from origin (default: window base)."""
    w = c.window
    E = vset(E)
    if origin_index is not None:
        o = int(origin_index)
    else:
        o = w.index(w.base if origin is None else origin)
    separation_check(w, E, o)
    ids = c.patches_at(E)
    Bmask = np.zeros(len(w), dtype=bool)
    for i in ids:
        Bmask[c.members(i)] = True
    if Bmask[o]:
        raise OriginInBarrier("origin lies inside a barrier patch")
    inner_mask = distances(w, [o], blocked=Bmask) >= 0
    sizes = np.array([len(c.members(i)) for i in ids], dtype=np.int64)
    flat = np.concatenate([c.members(i) for i in ids]) if len(ids) else EMPTY
    touch = kernels.touching(w.indptr, w.indices, flat, inner_mask)
    sets, anc = [], []
    start = 0
    for i, sz in zip(ids, sizes):
        part = flat[start:start + sz][touch[start:start + sz]]
        start += sz
        if len(part):
            sets.append(part)
            anc.append(int(i))
    family = Cover.from_sets(w, sets, c.declared_mesh, tags=[("ancestor", a) for a in anc],
                             name="descendants")
    return DescendantFamily(c, E, o, family, np.array(anc, dtype=np.int32), ids,
                            np.flatnonzero(inner_mask).astype(np.int32), sphere_radius)


def first_entry_oracle(w: Window, barrier_union, o: int) -> np.ndarray:
    """First barrier vertex of every simple path from o, by explicit path enumeration."""
    inB = w.mask(barrier_union)
    found = set()
    onpath = np.zeros(len(w), dtype=bool)

    def walk(v):
        onpath[v] = True
        for u in w.neighbors_of(v):
            u = int(u)
            if onpath[u]:
                continue
            if inB[u]:
                found.add(u)
            else:
                walk(u)
        onpath[v] = False

    if not inB[o]:
        walk(o)
    return vset(sorted(found))


def _family_region(w: Window, A, R: int):
    """Centers whose R-ball can meet A, restricted to the trusted part of the window."""
    near = neighborhood(w, A, R)
    ok = w.dist_base[near] <= w.radius - R
    return near[ok], bool(ok.all())


@dataclass
class ClaimReport:
    window_radius: int
    separation: dict
    multiplicity: dict

    @property
    def ok(self) -> bool:
        return self.separation["ok"] and self.multiplicity["ok"]

    def as_dict(self) -> dict:
        return {"window_radius": self.window_radius, "ok": self.ok,
                "separation": self.separation, "multiplicity": self.multiplicity}


def verify_descendant_claims(f: DescendantFamily, R: int, n_bound: int,
                             source_value: int | None = None) -> ClaimReport:
    """Check Claim 1 (separation) and Claim 2 ((R-1)-multiplicity <= n_bound)."""
    w = f.window
    if R < 1:
        raise DescendError("R must be >= 1")
    star = f.union()
    smask = w.mask(star)
    d = distances(w, [f.origin], blocked=smask)
    comp = d >= 0
    outer = w.boundary & ~smask & ~comp
    sep = {"ok": bool(not (comp & w.boundary).any() and outer.any()),
           "origin_component_size": int(comp.sum()),
           "origin_component_touches_boundary": bool((comp & w.boundary).any()),
           "outer_touches_boundary": bool(outer.any())}
    if f.sphere_radius is not None:
        D = mesh(f.source)
        r = f.sphere_radius - (D + 2)
        inside = bool(comp[ball(w, r)].all()) if r >= 0 else True
        sep.update({"ball_radius": r, "ball_contained": inside})
        sep["ok"] = sep["ok"] and inside
    # source multiplicity on the centers the Claim-2 argument uses
    if source_value is None:
        src_region, _ = _family_region(w, star, R - 1)
        src_region = src_region[w.dist_base[src_region] <= w.radius - R]
        src = r_multiplicity(f.source, R, region=src_region)
        source_value = src.value
    if source_value > n_bound + 1:
        raise DescendError(f"source cover is not certified: {R}-multiplicity "
                           f"{source_value} > {n_bound + 1}")
    region, complete = _family_region(w, star, R - 1)
    rep = r_multiplicity(f.family, R - 1, region=region)
    mult = {"ok": rep.value <= n_bound, "R": R - 1, "value": rep.value, "bound": n_bound,
            "source_value": source_value, "region_size": int(len(region)),
            "region_complete": complete, "witness": None}
    if rep.center is not None:
        mult["witness"] = {"center": w.encode_set([rep.center])[0], "patches": rep.patches}
        if rep.value > n_bound:
            from .covers import ball_patches
            mult["enlargement"] = len(ball_patches(f.source, rep.center, R))
    return ClaimReport(w.radius, sep, mult)


# -- schedules and Construction I ------------------------------------------

@dataclass
class ParamSchedule:
    alpha: int
    R: list[int]
    d: list[int]
    D: list[int]
    space: dict
    asdim: int
    k_tube: int = 8

    @property
    def depth(self) -> int:
        return len(self.R)

    @classmethod
    def derive(cls, space, depth: int, alpha: int = 4, R1: int = 1, d1: int | None = None,
               k_tube: int = 8) -> "ParamSchedule":
        space = build_space(space)
        if alpha < 2:
            raise ScheduleError("alpha must be >= 2")
        if depth < 1:
            raise ScheduleError("depth must be >= 1")
        R = [int(R1)]
        D = [canonical_mesh(space, R1)]
        d = [int(d1) if d1 is not None else k_tube * (D[0] + 2)]
        for n in range(2, depth + 1):
            R.append(alpha * (R[-1] + 2 * sum(D) + n))
            D.append(canonical_mesh(space, R[-1]))
            spread = sum(D[1:])
            d.append(max(alpha * (d[-1] + R[-1] + 2 * sum(D[:-1]) + n), 3 * spread + 4))
        return cls(alpha, R, d, D, space.spec(), asdim_bound(space), k_tube)

    def violations(self) -> list[str]:
        out = []
        for n in range(2, self.depth + 1):
            i = n - 1
            s = sum(self.D[:i])
            if self.R[i] < self.alpha * (self.R[i - 1] + 2 * s + n):
                out.append(f"R_{n} below recurrence")
            if self.d[i] < self.alpha * (self.d[i - 1] + self.R[i] + 2 * s + n):
                out.append(f"d_{n} below recurrence")
        return out

    def radius(self, n: int) -> int:
        """Max norm reached by the depth-n union."""
        return self.d[n - 1] + sum(self.D[:n])

    def window_radius(self, n: int) -> int:
        return self.radius(n) + 2 * self.R[n - 1] + 2

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "R": self.R, "d": self.d, "D": self.D,
                "space": self.space, "asdim": self.asdim, "k_tube": self.k_tube}


@dataclass
class StepData:
    level: int
    window: Window
    schedule: ParamSchedule
    covers: dict
    families: list[DescendantFamily]
    parents: list[list[list[int]]]
    tuples: list[list[list[tuple]]]
    claims: list[ClaimReport] = field(default_factory=list)
    checks: list[dict] = field(default_factory=list)

    @property
    def gamma0(self) -> np.ndarray:
        return self.families[-1].union()


def _annulus(stage: int, E_norms: np.ndarray, d_floor: int) -> dict:
    a, b = int(E_norms.min()), int(E_norms.max())
    d = max(ceil(2 * b / 3), d_floor)
    if not (3 * d + 4 < 4 * a and 2 * b <= 3 * d):
        raise AnnulusViolation(stage, a, b, d)
    return {"stage": stage, "a": a, "b": b, "d": d, "ok": True}


def construction_I(space, schedule: ParamSchedule, n: int, covers: dict | None = None,
                   window: Window | None = None, verify: bool = True) -> StepData:
    """Iterated descend: S_{d_n} with cover level n, then each union with the next cover down."""
    space = build_space(space)
    if n < 1 or n > schedule.depth:
        raise ScheduleError(f"depth {n} outside the schedule (1..{schedule.depth})")
    bad = schedule.violations()
    if bad:
        raise ScheduleError("; ".join(bad))
    need = schedule.window_radius(n)
    if window is None:
        window = extract_window(space, space.basepoint, need)
    elif window.radius < need:
        raise WindowError(f"window radius {window.radius} too small for depth {n}; "
                          f"need {need}")
    w = window
    o = w.index(w.base)
    covers = dict(covers or {})
    for s in range(1, n + 1):
        if s not in covers:
            covers[s] = canonical_cover(w, schedule.R[s - 1])
        if covers[s].declared_mesh > schedule.D[s - 1]:
            raise ScheduleError(f"stage cover {s} declares mesh {covers[s].declared_mesh} "
                                f"> D_{s} = {schedule.D[s - 1]}")
    d_n = schedule.d[n - 1]
    families, parents, tuples, claims, checks = [], [], [], [], []
    for k in range(1, n + 1):
        level = n - k + 1
        c = covers[level]
        if k == 1:
            E = sphere(w, d_n)
            f = descend(c, E, origin_index=o, sphere_radius=d_n)
        else:
            E = families[-1].union()
            info = _annulus(k, w.dist_base[E], schedule.d[level - 1])
            f = descend(c, E, origin_index=o)
            far = distances(w, E, max_dist=c.declared_mesh)
            info["within_mesh"] = bool((far[f.union()] >= 0).all())
            checks.append(info)
        families.append(f)
        if verify:
            claims.append(verify_descendant_claims(f, schedule.R[level - 1], schedule.asdim))
        if k == 1:
            parents.append([[] for _ in range(len(f.family))])
            tuples.append([[(j,)] for j in range(len(f.family))])
        else:
            prev = families[-2].family
            par = []
            for a in f.ancestors:
                par.append(prev.patches_at(c.members(int(a))).tolist())
            parents.append(par)
            tuples.append([sorted({t + (j,) for q in par[j] for t in tuples[-1][q]})
                           for j in range(len(f.family))])
    return StepData(n, w, schedule, covers, families, parents, tuples, claims, checks)


def v_families(s: StepData, k: int) -> Cover:
    """Group the deepest patches by their depth-k ancestor tuple, with certificates."""
    n = s.level
    if not 1 <= k <= n:
        raise DescendError(f"k must be in 1..{n}")
    deep = s.families[-1].family
    groups: dict[tuple, set] = {}
    for j, tups in enumerate(s.tuples[-1]):
        for t in tups:
            groups.setdefault(t[:k], set()).add(j)
    sets, seen, tags = [], set(), []
    for key in sorted(groups):
        members = vset(np.concatenate([deep.members(j) for j in sorted(groups[key])]))
        sig = members.tobytes()
        if sig in seen:
            continue
        seen.add(sig)
        sets.append(members)
        tags.append(("prefix",) + key)
    D = s.schedule.D
    bound = D[n - k] + 2 * sum(D[:n - k])
    cover = Cover.from_sets(s.window, sets, bound, tags=tags, name=f"V^{n}_{k}")
    diam = patch_diameters(cover)
    worst = int(np.argmax(diam)) if len(diam) else None
    cover.certificates["mesh"] = {
        "bound": bound, "value": int(diam.max()) if len(diam) else 0,
        "ok": bool(len(diam) == 0 or diam.max() <= bound),
        "witness_patch": worst}
    Rk = s.schedule.R[n - k] - sum(D[:n - k])
    if Rk >= 0:
        region, complete = _family_region(s.window, cover.union(), Rk)
        rep = r_multiplicity(cover, Rk, region=region)
        cover.certificates["multiplicity"] = {
            "R": Rk, "value": rep.value, "bound": s.schedule.asdim,
            "ok": rep.value <= s.schedule.asdim, "region_complete": complete,
            "witness": None if rep.center is None else
            {"center": s.window.encode_set([rep.center])[0], "patches": rep.patches}}
    else:
        cover.certificates["multiplicity"] = {"R": Rk, "ok": False,
                                              "reason": "scale below zero"}
    return cover
