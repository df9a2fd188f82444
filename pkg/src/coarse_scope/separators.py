"""Global separating sets: translated Γ-sequences, tubes, the trimmed union Y,
and the structured subsets of the chain spaces used by the Cantor probes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .covers import Cover, canonical_cover, r_multiplicity
from .descendants import (ParamSchedule, SeparationFailure, StepData,
                          _family_region, construction_I, descend, v_families)
from .space_models import (AnnuliUnion, BallChain, BallsOnRay, CayleyZn, SpaceError,
                           SpaceModel, build_space)
from .windows import (Window, WindowBudgetError, WindowError, ball_count, distances,
                      extract_window, vertex_budget, vset)


class SeparatorError(ValueError):
    pass


def _norm(space: SpaceModel, v) -> int:
    return space.norm(v) if hasattr(space, "norm") else 0


# -- Γ-sequence --------------------------------------------------------------

@dataclass
class GammaStage:
    n: int
    position: int  # axis parameter of x_n
    x: object
    step: StepData
    vertices: list  # Γ_n = x_n · Γ^n_0 as space vertices
    radius: int  # max distance from x_n to Γ_n


@dataclass
class GammaSequence:
    space: SpaceModel
    schedule: ParamSchedule
    stages: list[GammaStage]
    gaps: list[dict]
    homogeneous: bool = True

    def union(self) -> list:
        out = []
        for st in self.stages:
            out.extend(st.vertices)
        return out

    def as_dict(self) -> dict:
        sp = self.space
        return {"schedule": self.schedule.as_dict(), "homogeneous": self.homogeneous,
                "stages": [{"n": st.n, "x": sp.encode(st.x), "position": st.position,
                            "radius": st.radius, "size": len(st.vertices),
                            "gamma": [sp.encode(v) for v in st.vertices]}
                           for st in self.stages],
                "gaps": self.gaps}


def axis_positions(schedule: ParamSchedule, m: int) -> list[int]:
    """t_1 = 0 and t_n = α(n + d_n + d_{n-1} + t_{n-1})."""
    t = [0]
    for n in range(2, m + 1):
        t.append(schedule.alpha * (n + schedule.d[n - 1] + schedule.d[n - 2] + t[-1]))
    return t


def _translate(space, step: StepData, x) -> list:
    w = step.window
    idx = step.gamma0
    if w.coords is not None and isinstance(space, CayleyZn):
        pts = w.coords[idx] + np.asarray(x, dtype=np.int32) - np.asarray(w.base, dtype=np.int32)
        return [tuple(p) for p in pts.tolist()]
    if step.window.base != space.basepoint:  # re-centered run already sits at x
        return w.vertices(idx)
    return [space.translate(x, v) for v in w.vertices(idx)]


def place_gamma_sequence(space, schedule: ParamSchedule, m: int, recenter: bool = False,
                         verify: bool = True) -> GammaSequence:
    space = build_space(space)
    if m < 1 or m > schedule.depth:
        raise SeparatorError(f"m must be in 1..{schedule.depth}")
    if not space.supports_translation and not recenter:
        raise SpaceError("translation undefined; use re-centering")
    pos = axis_positions(schedule, m)
    budget = vertex_budget()
    for n in range(1, m + 1):
        need = schedule.window_radius(n)
        count = ball_count(space, need)
        if count is not None and count > budget:
            raise WindowBudgetError(budget, need, count)
    stages = []
    for n in range(1, m + 1):
        x = space.axis_point(pos[n - 1])
        if recenter or not space.supports_translation:
            w = extract_window(space, x, schedule.window_radius(n))
            step = construction_I(space, schedule, n, window=w, verify=verify)
        else:
            step = construction_I(space, schedule, n, verify=verify)
        verts = _translate(space, step, x)
        radius = int(step.window.dist_base[step.gamma0].max()) if len(step.gamma0) else 0
        stages.append(GammaStage(n, pos[n - 1], x, step, verts, radius))
    gaps = []
    for i in range(m):
        for j in range(i + 1, m):
            a, b = stages[i], stages[j]
            centre = abs(b.position - a.position)
            lower = centre - a.radius - b.radius
            need = schedule.d[i] + schedule.d[j]
            gaps.append({"pair": [i + 1, j + 1], "center_distance": centre,
                         "lower_bound": lower, "required": need,
                         "ok": bool(lower > 0 and centre > need)})
    if not all(g["ok"] for g in gaps):
        bad = next(g for g in gaps if not g["ok"])
        raise SeparatorError(f"Γ_{bad['pair'][0]} and Γ_{bad['pair'][1]} are not certified apart")
    return GammaSequence(space, schedule, stages, gaps,
                         homogeneous=bool(space.supports_translation and not recenter))


@dataclass
class FinalCover:
    R: int
    supported_R: int
    patches: list[list]  # vertex lists; patch 0 is V_0
    tags: list[tuple]
    cases: dict
    value: int
    bound: int

    @property
    def ok(self) -> bool:
        return all(c["ok"] for c in self.cases.values()) and self.value <= self.bound

    def as_dict(self, space) -> dict:
        return {"R": self.R, "supported_R": self.supported_R, "value": self.value,
                "bound": self.bound, "ok": self.ok, "cases": self.cases,
                "patches": [{"id": i, "tags": list(t), "members": [space.encode(v) for v in p]}
                            for i, (p, t) in enumerate(zip(self.patches, self.tags))]}


def final_cover(gs: GammaSequence, n0: int = 0, R: int | None = None) -> FinalCover:
    """V̄ = {V_0} plus x_n·V^n_{n-(2n0+1)} for n >= 2n0+2, with the three disjointness cases."""
    sch = gs.schedule
    m = len(gs.stages)
    head = min(m, 2 * n0 + 1)
    v0 = [v for st in gs.stages[:head] for v in st.vertices]
    patches, tags = [v0], [("V0",)]
    later = gs.stages[head:]
    if later:
        k0 = 2 * n0 + 2
        R_sup = sch.R[k0 - 1] - sum(sch.D[:k0 - 1])
    else:
        R_sup = max(sch.R)
    pos = {st.n: st for st in gs.stages}

    def lower(i, j):
        a, b = pos[i], pos[j]
        return abs(a.position - b.position) - a.radius - b.radius

    first = [lower(i.n, j.n) for i in gs.stages[:head] for j in later]
    second = [lower(a.n, b.n) for ai, a in enumerate(later) for b in later[ai + 1:]]
    gap = min(first + second) if first + second else None
    if gap is not None:
        R_sup = min(R_sup, (gap - 1) // 2)
    R = R_sup if R is None else R
    cases = {
        "first": {"ok": all(g > 2 * R for g in first), "min_gap": min(first) if first else None,
                  "detail": "no R-ball meets V_0 and a later stage"},
        "second": {"ok": all(g > 2 * R for g in second),
                   "min_gap": min(second) if second else None,
                   "detail": "no R-ball meets two later stages"},
    }
    within = []
    value = 1 if v0 else 0
    for st in later:
        k = st.n - (2 * n0 + 1)
        cov = v_families(st.step, k)
        region, complete = _family_region(st.step.window, cov.union(), R)
        rep = r_multiplicity(cov, R, region=region)
        within.append({"n": st.n, "k": k, "value": rep.value, "region_complete": complete,
                       "ok": rep.value <= sch.asdim and complete})
        value = max(value, rep.value)
        w = st.step.window
        for i in range(len(cov)):
            verts = w.vertices(cov.members(i))
            if w.coords is not None and isinstance(gs.space, CayleyZn):
                off = np.asarray(st.x) - np.asarray(w.base)
                verts = [tuple(int(a) + int(b) for a, b in zip(v, off)) for v in verts]
            elif gs.homogeneous:
                verts = [gs.space.translate(st.x, v) for v in verts]
            patches.append(verts)
            tags.append(("stage", st.n) + tuple(cov.tags[i][1:]))
    cases["finally"] = {"ok": all(x["ok"] for x in within), "stages": within,
                        "detail": "within one stage the V-family bound applies"}
    return FinalCover(R, R_sup, patches, tags, cases, value, sch.asdim)


# -- tubes and the assembled separator --------------------------------------

class TubeError(SeparatorError):
    pass


@dataclass
class TubeData:
    window: Window
    segment: np.ndarray  # ordered window indices
    d_prime: int
    tube: np.ndarray
    inner: np.ndarray
    checks: dict


def build_tube(w: Window, segment, d_prime: int, cover: Cover) -> TubeData:
    """Descendants of the level set {d(v, segment) = d'} seen from the segment midpoint."""
    seg = np.asarray(segment, dtype=np.int64)
    if len(seg) == 0:
        raise TubeError("empty segment")
    if d_prime <= cover.declared_mesh:
        raise TubeError(f"tube radius {d_prime} must exceed the cover mesh "
                        f"{cover.declared_mesh}")
    dseg = distances(w, seg, max_dist=d_prime + 1)
    E = np.flatnonzero(dseg == d_prime).astype(np.int32)
    mid = int(seg[len(seg) // 2])
    try:
        f = descend(cover, E, origin_index=mid)
    except SeparationFailure as exc:
        raise TubeError(f"level set fails to enclose the segment: {exc}") from None
    T = f.union()
    core_r = d_prime - cover.declared_mesh - 2
    inner_mask = w.mask(f.inner)
    core = np.flatnonzero((dseg >= 0) & (dseg <= core_r)) if core_r >= 0 else np.zeros(0, int)
    core = core[w.dist_base[core] <= w.radius - cover.declared_mesh]
    reach = distances(w, [mid], blocked=w.mask(T))
    checks = {"core_radius": core_r, "core_contained": bool(inner_mask[core].all()),
              "separates": bool(not ((reach >= 0) & w.boundary).any()),
              "family_size": len(f.family)}
    return TubeData(w, seg.astype(np.int32), d_prime, T, f.inner, checks)


@dataclass
class YAssembly:
    window: Window
    tubes: list[np.ndarray]
    gammas: list[np.ndarray]
    Y: np.ndarray
    radii: dict
    checks: dict
    diagnostics: list[str] = field(default_factory=list)
    report: object = None
    tails: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        w = self.window
        return {"window": w.ref(), "radii": self.radii, "checks": self.checks,
                "diagnostics": self.diagnostics, "tails": self.tails,
                "Y": w.encode_set(self.Y),
                "report": None if self.report is None else self.report.as_dict()}


def _axis_indices(w: Window, t0: int, t1: int) -> np.ndarray:
    lo, hi = sorted((t0, t1))
    ts = range(lo, hi + 1)
    if w.coords is not None:
        n = w.coords.shape[1]
        pts = np.zeros((len(ts), n), dtype=np.int64)
        pts[:, 0] = np.arange(lo, hi + 1)
        idx = w.lookup_coords(pts)
    else:
        idx = w.lookup([w.space.axis_point(t) for t in ts])
    return vset(idx[idx >= 0])


def _within(w: Window, A, r: int) -> np.ndarray:
    """Mask of {v : d(v, A) < r}; empty when r <= 0."""
    if r <= 0 or len(A) == 0:
        return np.zeros(len(w), dtype=bool)
    d = distances(w, A, max_dist=r - 1)
    return d >= 0


def assemble_Y(gs: GammaSequence, tubes: list[TubeData], window: Window | None = None,
               k_a: int | None = 4, k_b: int | None = 16, R: int = 1,
               rho: int | None = None, margin: int | None = None) -> YAssembly:
    """Y = ∪(T_i' ∪ Γ_i') with T_i' trimmed near x_i, x_{i+1} and Γ_i' punctured along the axis.

    A divisor of 0 or None means no trimming (radius 0).
    """
    from .verification import verify_separation

    w = tubes[0].window if tubes else window
    if w is None:
        raise SeparatorError("a global window is needed when no tubes are given")
    sch = gs.schedule
    st = gs.stages
    m = len(st)

    def rad(d, k):
        return d // k if k else 0

    xs = [w.lookup([s.x])[0] for s in st]
    segs = []
    for i in range(m):
        t_next = st[i + 1].position if i + 1 < m else st[i].position + w.radius + w.dist_base.max()
        segs.append(_axis_indices(w, st[i].position, t_next))
    gam, clipped = [], []
    for i, s in enumerate(st):
        idx = w.lookup(s.vertices)
        clipped.append(int((idx < 0).sum()))
        G = vset(idx[idx >= 0])
        cut = _within(w, segs[i], rad(sch.d[i], k_b))
        if i > 0:
            cut |= _within(w, segs[i - 1], rad(sch.d[i - 1], k_b))
        gam.append(G[~cut[G]])
    tub = []
    checks = {"clipped_gamma_vertices": clipped, "tube_set_algebra": []}
    for i, td in enumerate(tubes):
        trim = np.zeros(len(w), dtype=bool)
        for j in (i, i + 1):
            if j < m and xs[j] >= 0:
                trim |= _within(w, [xs[j]], rad(sch.d[j], k_a))
        T = td.tube
        Tp = T[~trim[T]]
        tub.append(Tp)
        rebuilt = vset(np.concatenate([Tp, T[trim[T]]]))
        checks["tube_set_algebra"].append(bool(np.array_equal(rebuilt, T)))
    Y = vset(np.concatenate(gam + tub)) if gam or tub else np.zeros(0, np.int32)
    radii = {"k_a": k_a, "k_b": k_b,
             "ball": [rad(d, k_a) for d in sch.d[:m]],
             "puncture": [rad(d, k_b) for d in sch.d[:m]]}
    diagnostics = []
    near = _within(w, Y, R + 1)
    axis = _axis_indices(w, 0, st[-1].position)
    blocked = axis[near[axis]]
    if len(blocked):
        v = w.vertex(blocked[0])
        pos = w.space.encode(v)
        seg = next((i + 1 for i in range(m - 1)
                    if st[i].position <= (v[0] if isinstance(v, tuple) else 0) <= st[i + 1].position),
                   None)
        diagnostics.append(f"axis corridor blocked at {pos}"
                           + (f" on segment [x_{seg}, x_{seg + 1}]" if seg else ""))
    W = w.radius
    rho = max(R + 1, sch.d[m - 1] // 4) if rho is None else rho
    margin = R + rho if margin is None else margin
    report = verify_separation(w, Y, R, rho, margin=margin)
    tails = {}
    for name, t in (("plus", W - margin), ("minus", -(W - margin))):
        try:
            i = w.index(w.space.axis_point(t))
        except (SpaceError, WindowError):
            tails[name] = None
            continue
        comp = report.component_of(i)
        tails[name] = {"vertex": w.encode_set([i])[0], "component": comp,
                       "class": None if comp is None else report.components[comp]["class"]}
    plus, minus = tails.get("plus"), tails.get("minus")
    tails["separated"] = bool(plus and minus and plus["component"] is not None
                              and minus["component"] is not None
                              and plus["component"] != minus["component"])
    tails["both_deep"] = bool(plus and minus and plus["class"] == "deep"
                              and minus["class"] == "deep")
    tails["deep_on_axis_sides"] = sum(1 for x in (plus, minus) if x and x["class"] == "deep")
    return YAssembly(w, tub, gam, Y, radii, checks, diagnostics, report, tails)


def separator_pipeline(space="zn:2", m: int = 2, alpha: int = 4, R1: int = 1,
                       d1: int | None = None, k_tube: int = 8, k_a: int | None = 4,
                       k_b: int | None = 16, R: int = 1, rho: int | None = None,
                       gs: GammaSequence | None = None, global_window: Window | None = None):
    """Γ-sequence, tubes between consecutive basepoints, and Y in one global window."""
    space = build_space(space)
    if gs is None:
        sch = ParamSchedule.derive(space, m, alpha=alpha, R1=R1, d1=d1, k_tube=k_tube)
        gs = place_gamma_sequence(space, sch, m)
    sch = gs.schedule
    last = gs.stages[-1]
    rho = max(R + 1, sch.d[m - 1] // 4) if rho is None else rho
    r_a = sch.d[m - 1] // k_a if k_a else 0
    if global_window is None:
        W = last.position + R + rho - max(1, r_a // 2)
        global_window = extract_window(space, space.basepoint, W)
    w = global_window
    cover = canonical_cover(w, sch.R[0])
    tubes = []
    for i in range(m - 1):
        a, b = gs.stages[i], gs.stages[i + 1]
        seg = _axis_indices(w, a.position, b.position)
        tubes.append(build_tube(w, seg, sch.d[i] // sch.k_tube, cover))
    Y = assemble_Y(gs, tubes, window=w, k_a=k_a, k_b=k_b, R=R, rho=rho)
    return gs, tubes, Y


# -- chain spaces ----------------------------------------------------------------

@dataclass
class CantorSets:
    space: SpaceModel
    window: Window
    balls: list[dict]  # center, radius, members (window indices)
    segments: list[np.ndarray]
    midpoints: list[int]
    tail: int  # window index of the last axis vertex inside the window
    prefix_extent: int  # axis coordinate where the prefix ends

    def as_dict(self) -> dict:
        w = self.window
        return {"window": w.ref(),
                "balls": [{"center": list(b["center"]), "radius": b["radius"],
                           "size": len(b["members"])} for b in self.balls],
                "segments": [w.encode_set(s) for s in self.segments],
                "midpoints": w.encode_set(self.midpoints),
                "tail": w.encode_set([self.tail])[0], "prefix_extent": self.prefix_extent}


def _chain_layout(space: SpaceModel, prefix: int):
    """(balls as (center_x, radius), gap midpoints, axis coordinate of the window tail)."""
    if isinstance(space, BallChain):
        balls = [(BallChain.center(r), r) for r in range(prefix + 2)]
        origin_x = 4
    elif isinstance(space, BallsOnRay):
        balls = [(BallsOnRay.center(k), k) for k in range(1, prefix + 3)]
        origin_x = 0
    elif isinstance(space, AnnuliUnion) and space.axis:
        first = 0 if space.parity == "even" else 1
        shells = [space.shell(first + 2 * j) for j in range(prefix + 2)]
        mids = [(hi + nxt[0]) // 2 for (lo, hi), nxt in zip(shells, shells[1:])]
        return shells, mids[:prefix], mids[prefix], 0
    else:
        raise SeparatorError(f"{space.kind} is not a chain space with an axis")
    nxt, after = balls[prefix], balls[prefix + 1]
    tail_x = (nxt[0] + nxt[1] + after[0] - after[1]) // 2
    return balls[:prefix], [], tail_x, origin_x


def cantor_space_sets(space, prefix: int, window: Window | None = None) -> CantorSets:
    space = build_space(space)
    if prefix < 1:
        raise SeparatorError("prefix must be >= 1")
    layout, mids, tail_x, origin_x = _chain_layout(space, prefix)
    W = tail_x - origin_x
    if window is None:
        window = extract_window(space, space.basepoint, W)
    w = window
    if isinstance(space, AnnuliUnion):
        shells = layout
        balls = []
        for lo, hi in shells[:prefix]:
            m = (w.dist_base >= 0) & (np.abs(w.coords).sum(axis=1) >= lo - space.thicken) & \
                (np.abs(w.coords).sum(axis=1) <= hi + space.thicken)
            balls.append({"center": (0,) * space.n, "radius": hi, "members": np.flatnonzero(m)})
        segs = [_axis_indices(w, a[1] + space.thicken, b[0] - space.thicken)
                for a, b in zip(shells[:prefix], shells[1:prefix + 1])]
        mid_idx = [int(w.lookup([space.axis_point(y)])[0]) for y in mids]
        extent = shells[prefix - 1][1] + space.thicken
    else:
        balls = []
        for cx, r in layout:
            pts = w.coords
            d = np.abs(pts[:, 0] - cx) + np.abs(pts[:, 1:]).sum(axis=1)
            balls.append({"center": (cx,) + (0,) * (space.n - 1), "radius": r,
                          "members": np.flatnonzero(d <= r).astype(np.int32)})
        segs = []
        for (c0, r0), (c1, r1) in zip(layout, layout[1:]):
            a, b = c0 + r0, c1 - r1
            segs.append(_axis_indices(w, a, b) if a <= b else np.zeros(0, np.int32))
        mid_idx = []
        extent = layout[-1][0] + layout[-1][1]
    if w.radius < extent - origin_x:
        raise SeparatorError(f"chain prefix {prefix} exceeds the window radius {w.radius}")
    tail_pts = _axis_indices(w, extent, origin_x + w.radius)
    if len(tail_pts) == 0:
        raise SeparatorError("window holds no axis vertex beyond the prefix")
    tail = int(tail_pts[np.argmax(w.dist_base[tail_pts])])
    return CantorSets(space, w, balls, segs, mid_idx, tail, extent)
