"""Deep-component classification, depth escalation and sampled separator probes."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import ceil

import numpy as np

from .space_models import AnnuliUnion, build_space
from .windows import (Window, component_labels, distances, extract_window, neighborhood,
                      vset)

DEEP = "deep"
SHALLOW = "shallow"
INDETERMINATE = "indeterminate"

POSSIBLY_DEEP = ("indeterminate-deep", "interior-deep-at-scale")


class VerificationError(ValueError):
    pass


@dataclass
class _Analysis:
    labels: np.ndarray
    ncomp: int
    size: np.ndarray
    first: np.ndarray  # smallest vertex of each component
    touches: np.ndarray
    max_depth: np.ndarray  # -1 encodes "infinite" (K empty)
    depth: np.ndarray | None


def _analyze(w: Window, K, R: int) -> _Analysis:
    K = vset(K)
    if len(K):
        near = np.zeros(len(w), dtype=bool)
        near[neighborhood(w, K, R)] = True
        depth = distances(w, K)
    else:
        near = np.zeros(len(w), dtype=bool)
        depth = None
    labels, ncomp = component_labels(w, np.flatnonzero(~near))
    inside = np.flatnonzero(labels >= 0)
    lab = labels[inside]
    size = np.bincount(lab, minlength=ncomp)
    first = np.full(ncomp, len(w), dtype=np.int64)
    np.minimum.at(first, lab, inside)
    touches = np.zeros(ncomp, dtype=bool)
    np.logical_or.at(touches, lab, w.boundary[inside])
    max_depth = np.full(ncomp, -1, dtype=np.int64)
    if depth is not None:
        np.maximum.at(max_depth, lab, depth[inside])
    return _Analysis(labels, ncomp, size, first, touches, max_depth, depth)


def _witness(w: Window, a: _Analysis, rho: int) -> dict:
    """Smallest-index vertex with depth >= rho in each component."""
    if a.depth is None:
        return {c: int(a.first[c]) for c in range(a.ncomp)}
    cand = np.flatnonzero((a.labels >= 0) & (a.depth >= rho))
    lab, pos = np.unique(a.labels[cand], return_index=True)
    return {int(c): int(cand[p]) for c, p in zip(lab, pos)}


@dataclass
class SeparationReport:
    window: Window
    K: np.ndarray
    R: int
    rho: int
    margin: int
    components: list[dict]
    verdict: str
    labels: np.ndarray = field(repr=False)
    k_clipped: bool = False

    @property
    def deep_count(self) -> int:
        return sum(1 for c in self.components if c["class"] == DEEP)

    def component_of(self, i: int):
        lab = int(self.labels[i])
        return None if lab < 0 else lab

    def members(self, comp: int) -> np.ndarray:
        return np.flatnonzero(self.labels == comp).astype(np.int32)

    def as_dict(self) -> dict:
        w = self.window
        return {"window": w.ref(), "K": w.encode_set(self.K), "R": self.R, "rho": self.rho,
                "margin": self.margin, "verdict": self.verdict,
                "deep_count": self.deep_count, "k_clipped": self.k_clipped,
                "components": self.components}


def _check_scale(w: Window, R: int, rho: int, margin: int):
    if R < 0:
        raise VerificationError("R must be >= 0")
    if rho <= R:
        raise VerificationError(f"rho = {rho} must exceed R = {R}")
    if rho > w.radius - margin:
        raise VerificationError(f"rho = {rho} exceeds window radius {w.radius} minus "
                                f"margin {margin}")


def verify_separation(w: Window, K, R: int, rho: int | None = None,
                      margin: int | None = None) -> SeparationReport:
    """Classify the components of window minus N_R(K) as deep, shallow or indeterminate."""
    rho = ceil(w.radius / 4) if rho is None else int(rho)
    margin = R + rho if margin is None else int(margin)
    _check_scale(w, R, rho, margin)
    K = vset(K)
    a = _analyze(w, K, R)
    wit = _witness(w, a, rho)
    comps = []
    for c in range(a.ncomp):
        md = int(a.max_depth[c])
        infinite = md < 0
        entry = {"id": c, "size": int(a.size[c]),
                 "min_vertex": w.encode_set([a.first[c]])[0],
                 "touches_boundary": bool(a.touches[c]),
                 "max_depth": None if infinite else md}
        if infinite or md >= rho:
            entry["class"] = DEEP
            entry["witness"] = w.encode_set([wit[c]])[0]
            entry["interior"] = not bool(a.touches[c])
        elif a.touches[c]:
            entry["class"] = INDETERMINATE
        else:
            entry["class"] = SHALLOW
            entry["containment_radius"] = md
        comps.append(entry)
    deep = sum(1 for e in comps if e["class"] == DEEP)
    verdict = "coarsely-separated" if deep >= 2 else "not-separated-at-this-scale"
    clipped = bool(len(K) and (w.dist_base[K] > w.radius - R).any())
    return SeparationReport(w, K, R, rho, margin, comps, verdict, a.labels, clipped)


@dataclass
class EscalationReport:
    R: int
    rhos: list[int]
    components: list[dict]

    @property
    def possibly_deep(self) -> int:
        return sum(1 for c in self.components if c["status"] in POSSIBLY_DEEP)

    @property
    def verdict(self) -> str:
        return ("coarsely-separated-at-scale" if self.possibly_deep >= 2
                else "at-most-one-deep-component")

    def as_dict(self) -> dict:
        return {"R": self.R, "rhos": self.rhos, "possibly_deep": self.possibly_deep,
                "verdict": self.verdict, "components": self.components}


def depth_escalation(w: Window, K, R: int, rhos, margin: int | None = None) -> EscalationReport:
    """Track each component's depth across ascending rho; certify finite interior ones."""
    rhos = [int(r) for r in rhos]
    if not rhos or any(b <= a for a, b in zip(rhos, rhos[1:])):
        raise VerificationError("rho list must be nonempty and strictly ascending")
    top = rhos[-1]
    margin = R + top if margin is None else margin
    _check_scale(w, R, rhos[0], margin)
    if top > w.radius - margin:
        raise VerificationError(f"max rho {top} exceeds window radius minus margin")
    a = _analyze(w, K, R)
    comps = []
    for c in range(a.ncomp):
        md = int(a.max_depth[c])
        depth = float("inf") if md < 0 else md
        held = [r for r in rhos if depth >= r]
        level = held[-1] if held else None
        if a.touches[c]:
            status = "indeterminate-deep" if depth >= top else "indeterminate"
        else:
            status = "shallow-in-space" if depth < top else "interior-deep-at-scale"
        comps.append({"id": c, "size": int(a.size[c]),
                      "min_vertex": w.encode_set([a.first[c]])[0],
                      "touches_boundary": bool(a.touches[c]),
                      "max_depth": None if md < 0 else md,
                      "largest_rho": level, "status": status})
    return EscalationReport(R, rhos, comps)


def default_rhos(w: Window, R: int) -> list[int]:
    top = (w.radius - R) // 2
    out, r = [], R + 1
    while r < top:
        out.append(r)
        r *= 2
    out.append(top)
    return sorted(set(x for x in out if x > R))


# -- probes ---------------------------------------------------------------

GENERATORS = ("single-segment-cuts", "random-bounded", "sphere-slices")


@dataclass
class ProbeReport:
    space: dict
    generator: str
    R: int
    seeds: list[int]
    candidates: list[dict]
    violations: list[dict]

    @property
    def conclusion(self) -> str:
        if not self.violations:
            return "no sampled candidate coarsely separates"
        return f"counterexample: {self.violations[0]}"

    @property
    def ok(self) -> bool:
        return not self.violations

    def as_dict(self) -> dict:
        return {"space": self.space, "generator": self.generator, "R": self.R,
                "seeds": self.seeds, "conclusion": self.conclusion,
                "violations": self.violations, "candidates": self.candidates}


def sample_candidate(w: Window, pool: np.ndarray, generator: str, rng, size: int = 5,
                     segments=None) -> np.ndarray:
    if generator == "single-segment-cuts":
        segs = [s for s in (segments or []) if len(s)]
        src = segs[int(rng.integers(len(segs)))] if segs else pool
        return vset([src[int(rng.integers(len(src)))]])
    if generator == "random-bounded":
        c = int(pool[int(rng.integers(len(pool)))])
        near = distances(w, [c], max_dist=size)
        local = np.flatnonzero(near >= 0)
        local = local[np.isin(local, pool)]
        k = int(rng.integers(1, size + 1))
        pick = rng.choice(local, size=min(k, len(local)), replace=False)
        return vset(pick)
    if generator == "sphere-slices":
        c = int(pool[int(rng.integers(len(pool)))])
        r = int(rng.integers(1, size + 1))
        d = distances(w, [c], max_dist=r)
        ring = np.flatnonzero(d == r)
        ring = ring[np.isin(ring, pool)]
        return vset(ring if len(ring) else [c])
    raise VerificationError(f"unknown generator {generator!r}")


def _probe_one(w: Window, pool, generator, R, s, size, rhos, tail, segments) -> dict:
    rng = np.random.default_rng(s)
    K = sample_candidate(w, pool, generator, rng, size, segments)
    rep = verify_separation(w, K, R, rhos[-1])
    esc = depth_escalation(w, K, R, rhos)
    summary = {"seed": s, "K": w.encode_set(K), "verdict": rep.verdict,
               "deep_at_max_rho": rep.deep_count, "possibly_deep": esc.possibly_deep,
               "statuses": [c["status"] for c in esc.components]}
    problems = []
    if esc.possibly_deep > 1:
        problems.append("two or more possibly deep components")
    if tail is not None:
        tc = rep.component_of(tail)
        summary["tail_component"] = tc
        for c in esc.components:
            hits_tail = c["id"] == tc
            if c["touches_boundary"] and not hits_tail:
                problems.append(f"boundary component {c['id']} misses the tail witness")
            if c["status"] in POSSIBLY_DEEP and not hits_tail:
                problems.append(f"possibly deep component {c['id']} misses the tail witness")
    summary["ok"] = not problems
    summary["problems"] = problems
    return summary


def probe_window(w: Window, pool, generator: str, trials: int, R: int, seed: int = 0,
                 size: int = 5, rhos=None, tail: int | None = None, segments=None,
                 space_spec: dict | None = None, workers: int = 1) -> ProbeReport:
    """Sample candidate sets K from pool and check that none has two possible deep sides.

    Candidates are independent (one RNG per seed) and run on a thread pool over the
    shared read-only window; results come back in seed order.
    """
    pool = vset(pool)
    rhos = default_rhos(w, R) if rhos is None else list(rhos)
    seeds = [seed + t for t in range(trials)]

    def one(s):
        return _probe_one(w, pool, generator, R, s, size, rhos, tail, segments)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            cands = list(ex.map(one, seeds))
    else:
        cands = [one(s) for s in seeds]
    bad = [{"seed": c["seed"], "K": c["K"], "problems": c.pop("problems")} for c in cands
           if c["problems"]]
    for c in cands:
        c.pop("problems", None)
    return ProbeReport(space_spec or w.space.spec(), generator, R, seeds, cands, bad)


def cantor_probe(space, generator: str = "random-bounded", trials: int = 20, R: int = 1,
                 seed: int = 0, prefix: int = 4, size: int = 5, workers: int = 1) -> ProbeReport:
    """Probe a chain space: every sampled K inside the prefix leaves at most one deep side,
    and every boundary-touching component contains the tail witness."""
    from .separators import cantor_space_sets

    space = build_space(space)
    if generator not in GENERATORS:
        raise VerificationError(f"generator must be one of {GENERATORS}")
    cs0 = cantor_space_sets(space, prefix, window=_probe_window(space, prefix, R, size))
    w = cs0.window
    x = w.coords[:, 0]
    pool = np.flatnonzero((x <= cs0.prefix_extent) & (w.dist_base <= w.radius - R - size))
    return probe_window(w, pool, generator, trials, R, seed, size, tail=cs0.tail,
                        segments=cs0.segments, space_spec=space.spec(), workers=workers)


def _probe_window(space, prefix: int, R: int, size: int) -> Window:
    """Window holding the prefix, two more chain links, and room for rho above the prefix."""
    from .separators import _chain_layout

    layout, _, tail_x, origin_x = _chain_layout(space, prefix)
    if isinstance(space, AnnuliUnion):
        extent = layout[prefix - 1][1] + space.thicken
    else:
        extent = layout[-1][0] + layout[-1][1]
    W = max(tail_x - origin_x, 2 * (extent - origin_x) + R + size + 2)
    return extract_window(space, space.basepoint, W)


def space_probe(space, generator: str = "random-bounded", trials: int = 20, R: int = 1,
                seed: int = 0, size: int = 5, W: int | None = None,
                pool_radius: int | None = None, workers: int = 1) -> ProbeReport:
    """Probe a space without chain structure; candidates are drawn near the basepoint."""
    space = build_space(space)
    if generator not in GENERATORS:
        raise VerificationError(f"generator must be one of {GENERATORS}")
    if W is None:
        W = 2 * max(getattr(space, "lengths", [32])) + R + size + 2
    w = extract_window(space, space.basepoint, W)
    pool_radius = W // 4 if pool_radius is None else pool_radius
    pool = np.flatnonzero(w.dist_base <= pool_radius)
    return probe_window(w, pool, generator, trials, R, seed, size, space_spec=space.spec(),
                        workers=workers)
