"""Implicit, locally finite graphs for the groups and test spaces.

A space is described by a JSON-able spec ``{"kind": ..., "params": {...}}``
or a short string such as ``"zn:2"``, ``"free:2"``, ``"ray"``,
``"wedge:30"``, ``"ballchain:2"``, ``"ballray:2"`` or ``"annuli:2:1:even"``.
Vertices are plain hashable Python values: int tuples for lattice-based
spaces, reduced words for free groups, ints for the ray and
``(branch, offset)`` pairs for the wedge.
"""
from __future__ import annotations

import json
from collections import deque
from typing import Iterable

LETTERS = "abcdefghijklmnopqrstuvwxyz"


class SpaceError(ValueError):
    pass


class SpaceModel:
    kind = "abstract"
    supports_translation = False
    lattice_dim: int | None = None  # ambient Z^n for lattice-based spaces

    def __init__(self, params: dict):
        self.params = dict(params)

    # -- interface -------------------------------------------------------
    def contains(self, v) -> bool:
        raise NotImplementedError

    def _raw_neighbors(self, v) -> list:
        raise NotImplementedError

    def neighbors(self, v) -> list:
        if not self.contains(v):
            raise SpaceError(f"{v!r} is not a vertex of {self.kind}")
        return sorted(self._raw_neighbors(v), key=self.key)

    def truncated(self, v) -> bool:
        """True when v has space-neighbors that no window can materialize."""
        return False

    def key(self, v):
        return v

    def encode(self, v):
        return v

    def decode(self, x):
        return x

    def axis_point(self, t: int):
        raise SpaceError(f"{self.kind} has no designated axis")

    def spec(self) -> dict:
        return {"kind": self.kind, "params": self.params}

    def spec_id(self) -> str:
        return json.dumps(self.spec(), sort_keys=True, separators=(",", ":"))

    def __eq__(self, other):
        return isinstance(other, SpaceModel) and self.spec_id() == other.spec_id()

    def __hash__(self):
        return hash(self.spec_id())

    def __repr__(self):
        return f"{type(self).__name__}({self.params})"


class _LatticeSpace(SpaceModel):
    """Shared helpers for subsets of Z^n with the induced grid graph."""

    def __init__(self, params: dict, n: int):
        super().__init__(params)
        if n < 1:
            raise SpaceError("ambient dimension n must be >= 1")
        self.n = n
        self.lattice_dim = n

    def _grid_neighbors(self, v):
        out = []
        for i in range(self.n):
            for s in (-1, 1):
                u = v[:i] + (v[i] + s,) + v[i + 1:]
                if self.contains(u):
                    out.append(u)
        return out

    def _raw_neighbors(self, v):
        return self._grid_neighbors(v)

    def _is_point(self, v) -> bool:
        return isinstance(v, tuple) and len(v) == self.n and all(isinstance(x, int) for x in v)

    def encode(self, v):
        return list(v)

    def decode(self, x):
        return tuple(int(t) for t in x)

    def axis_point(self, t: int):
        return (int(t),) + (0,) * (self.n - 1)


class CayleyZn(_LatticeSpace):
    kind = "zn"
    supports_translation = True

    def __init__(self, n: int):
        super().__init__({"n": n}, n)
        self.basepoint = (0,) * n

    def contains(self, v):
        return self._is_point(v)

    def _raw_neighbors(self, v):
        out = []
        for i in range(self.n):
            for s in (-1, 1):
                out.append(v[:i] + (v[i] + s,) + v[i + 1:])
        return out

    def norm(self, v) -> int:
        return sum(abs(x) for x in v)

    def translate(self, g, v):
        return tuple(a + b for a, b in zip(g, v))


def _inverse_letter(x: str) -> str:
    return x.lower() if x.isupper() else x.upper()


def reduce_word(w: str) -> str:
    out: list[str] = []
    for x in w:
        if out and out[-1] == _inverse_letter(x):
            out.pop()
        else:
            out.append(x)
    return "".join(out)


class CayleyFree(SpaceModel):
    kind = "free"
    supports_translation = True

    def __init__(self, k: int):
        if k < 1 or k > len(LETTERS):
            raise SpaceError("free rank k must be in 1..26")
        super().__init__({"k": k})
        self.k = k
        self.gens = [x for a in LETTERS[:k] for x in (a, a.upper())]
        self.basepoint = ""

    def contains(self, v):
        return (isinstance(v, str) and all(x in self.gens for x in v)
                and reduce_word(v) == v)

    def _raw_neighbors(self, v):
        return [reduce_word(v + x) for x in self.gens]

    def key(self, v):
        return (len(v), v)

    def norm(self, v) -> int:
        return len(v)

    def translate(self, g, v):
        return reduce_word(g + v)

    def axis_point(self, t: int):
        return "a" * t if t >= 0 else "A" * (-t)


class Ray(SpaceModel):
    kind = "ray"

    def __init__(self):
        super().__init__({})
        self.basepoint = 0

    def contains(self, v):
        return isinstance(v, int) and not isinstance(v, bool) and v >= 0

    def _raw_neighbors(self, v):
        return [v - 1, v + 1] if v > 0 else [1]

    def axis_point(self, t: int):
        if t < 0:
            raise SpaceError("the ray has no negative axis points")
        return int(t)

    def decode(self, x):
        return int(x)


class WedgeIntervals(SpaceModel):
    """Intervals of lengths a_1 <= a_2 <= ... glued at the wedge point (0, 0).

    Only branches 1..cutoff are materialized; the wedge point is flagged as
    truncated because the true space has infinitely many more branches there.
    """
    kind = "wedge"

    def __init__(self, cutoff: int, slope: int = 1, offset: int = 0, lengths=None):
        if lengths is not None:
            lengths = [int(a) for a in lengths]
            if any(b < a for a, b in zip(lengths, lengths[1:])):
                raise SpaceError("interval lengths a_n must be non-decreasing")
            if not lengths or (len(lengths) > 1 and lengths[-1] == lengths[0]):
                raise SpaceError("interval lengths must grow (a_n -> infinity)")
            cutoff = len(lengths)
            super().__init__({"lengths": lengths})
        else:
            if slope < 1:
                raise SpaceError("slope must be >= 1 so that a_n is monotone and unbounded")
            if cutoff < 1:
                raise SpaceError("branch cutoff must be >= 1")
            super().__init__({"cutoff": cutoff, "slope": slope, "offset": offset})
            lengths = [max(0, slope * m + offset) for m in range(1, cutoff + 1)]
        self.lengths = lengths
        self.cutoff = cutoff
        self.basepoint = (0, 0)

    def length(self, branch: int) -> int:
        return self.lengths[branch - 1]

    def contains(self, v):
        if not (isinstance(v, tuple) and len(v) == 2):
            return False
        b, t = v
        if (b, t) == (0, 0):
            return True
        return 1 <= b <= self.cutoff and 1 <= t <= self.length(b)

    def _raw_neighbors(self, v):
        b, t = v
        if t == 0:
            return [(m, 1) for m in range(1, self.cutoff + 1) if self.length(m) >= 1]
        out = [(b, t - 1) if t > 1 else (0, 0)]
        if t < self.length(b):
            out.append((b, t + 1))
        return out

    def truncated(self, v):
        return v == (0, 0)

    def encode(self, v):
        return list(v)

    def decode(self, x):
        return (int(x[0]), int(x[1]))


class BallChain(_LatticeSpace):
    """Balls B_r((2^(r+2), 0, ..., 0)) of radius r joined along the first axis."""
    kind = "ballchain"

    def __init__(self, n: int):
        super().__init__({"n": n}, n)
        self.basepoint = (4,) + (0,) * (n - 1)

    @staticmethod
    def center(r: int) -> int:
        return 2 ** (r + 2)

    def ball_index(self, v):
        rest = sum(abs(x) for x in v[1:])
        x = v[0]
        for r in range(0, max(2, x.bit_length() + 1)):
            if abs(x - self.center(r)) + rest <= r:
                return r
        return None

    def contains(self, v):
        if not self._is_point(v):
            return False
        if v[0] >= 4 and all(x == 0 for x in v[1:]):
            return True
        return self.ball_index(v) is not None

    def axis_point(self, t: int):
        if t < 0:
            raise SpaceError("the chain has no negative axis points")
        return (4 + int(t),) + (0,) * (self.n - 1)


class BallsOnRay(_LatticeSpace):
    """B = (union of B_m) plus the ray: B_1 = B_1(origin), B_m = B_m(2^m e_1) for m >= 2."""
    kind = "ballray"

    def __init__(self, n: int):
        super().__init__({"n": n}, n)
        self.basepoint = (0,) * n

    @staticmethod
    def center(m: int) -> int:
        return 0 if m == 1 else 2 ** m

    def ball_indices(self, v):
        rest = sum(abs(x) for x in v[1:])
        x = v[0]
        return [m for m in range(1, max(3, x.bit_length() + 2))
                if abs(x - self.center(m)) + rest <= m]

    def contains(self, v):
        if not self._is_point(v):
            return False
        if v[0] >= 0 and all(x == 0 for x in v[1:]):
            return True
        return bool(self.ball_indices(v))

    def axis_point(self, t: int):
        if t < 0:
            raise SpaceError("the ray has no negative axis points")
        return (int(t),) + (0,) * (self.n - 1)


class AnnuliUnion(_LatticeSpace):
    """Union of the annuli A_m = {2^(c(m+1)) <= |x| <= 2^(c(m+2))} of one parity.

    ``thicken`` takes the ℓ1 neighborhood of that union; ``axis`` adds the
    non-negative first axis (the geodesic ray γ).
    """
    kind = "annuli"

    def __init__(self, n: int, c: int, parity: str, thicken: int = 0, axis: bool = False):
        if c < 1:
            raise SpaceError("c must be an integer >= 1")
        if parity not in ("even", "odd"):
            raise SpaceError("parity must be 'even' or 'odd'")
        if thicken < 0:
            raise SpaceError("thicken must be >= 0")
        super().__init__({"n": n, "c": c, "parity": parity, "thicken": thicken,
                          "axis": bool(axis)}, n)
        self.c, self.parity, self.thicken, self.axis = c, parity, thicken, bool(axis)
        first = 0 if parity == "even" else 1
        self.basepoint = (0,) * n if axis else (max(0, 2 ** (c * (first + 1)) - thicken),) + (0,) * (n - 1)

    def shell(self, m: int) -> tuple[int, int]:
        return 2 ** (self.c * (m + 1)), 2 ** (self.c * (m + 2))

    def annulus_index(self, v):
        r = sum(abs(x) for x in v)
        m = 0 if self.parity == "even" else 1
        while True:
            lo, hi = self.shell(m)
            if lo - self.thicken > r:
                return None
            if r <= hi + self.thicken:
                return m
            m += 2

    def contains(self, v):
        if not self._is_point(v):
            return False
        if self.axis and v[0] >= 0 and all(x == 0 for x in v[1:]):
            return True
        return self.annulus_index(v) is not None


class Restriction(SpaceModel):
    kind = "restriction"

    def __init__(self, base: SpaceModel, removed: Iterable):
        removed = sorted(set(removed), key=base.key)
        super().__init__({"base": base.spec(), "removed": [base.encode(v) for v in removed]})
        self.base = base
        self.removed = set(removed)
        if base.basepoint in self.removed:
            raise SpaceError("the basepoint cannot be removed")
        self.basepoint = base.basepoint
        self.lattice_dim = base.lattice_dim

    def contains(self, v):
        return v not in self.removed and self.base.contains(v)

    def _raw_neighbors(self, v):
        return [u for u in self.base.neighbors(v) if u not in self.removed]

    def truncated(self, v):
        return self.base.truncated(v)

    def key(self, v):
        return self.base.key(v)

    def encode(self, v):
        return self.base.encode(v)

    def decode(self, x):
        return self.base.decode(x)

    def axis_point(self, t):
        return self.base.axis_point(t)


class NeighborhoodUnion(SpaceModel):
    """The subspace N_r(core) of a base space, with the induced graph."""
    kind = "neighborhood"

    def __init__(self, base: SpaceModel, core: Iterable, r: int):
        core = sorted(set(core), key=base.key)
        if not core:
            raise SpaceError("core set must be nonempty")
        if r < 0:
            raise SpaceError("r must be >= 0")
        super().__init__({"base": base.spec(), "core": [base.encode(v) for v in core], "r": r})
        self.base = base
        dist = {v: 0 for v in core}
        queue = deque(core)
        while queue:
            v = queue.popleft()
            if dist[v] == r:
                continue
            for u in base.neighbors(v):
                if u not in dist:
                    dist[u] = dist[v] + 1
                    queue.append(u)
        self.members = frozenset(dist)
        self.basepoint = core[0]
        self.lattice_dim = base.lattice_dim

    def contains(self, v):
        return v in self.members

    def _raw_neighbors(self, v):
        return [u for u in self.base.neighbors(v) if u in self.members]

    def key(self, v):
        return self.base.key(v)

    def encode(self, v):
        return self.base.encode(v)

    def decode(self, x):
        return self.base.decode(x)


def _parse_string(text: str) -> dict:
    parts = text.strip().split(":")
    kind = parts[0].lower()
    args = parts[1:]
    try:
        if kind in ("zn", "z"):
            return {"kind": "zn", "params": {"n": int(args[0]) if args else 1}}
        if kind == "free":
            return {"kind": "free", "params": {"k": int(args[0]) if args else 2}}
        if kind == "ray":
            return {"kind": "ray", "params": {}}
        if kind == "wedge":
            p = {"cutoff": int(args[0]) if args else 30}
            if len(args) > 1:
                p["slope"] = int(args[1])
            if len(args) > 2:
                p["offset"] = int(args[2])
            return {"kind": "wedge", "params": p}
        if kind in ("ballchain", "ballray"):
            return {"kind": kind, "params": {"n": int(args[0]) if args else 2}}
        if kind == "annuli":
            p = {"n": int(args[0]), "c": int(args[1]), "parity": args[2]}
            if len(args) > 3:
                p["thicken"] = int(args[3])
            if len(args) > 4:
                p["axis"] = args[4] in ("axis", "1", "true")
            return {"kind": "annuli", "params": p}
    except (IndexError, ValueError) as exc:
        raise SpaceError(f"cannot parse space spec {text!r}: {exc}") from None
    raise SpaceError(f"unknown space kind {kind!r}")


def build_space(spec) -> SpaceModel:
    """Instantiate a space from a spec dict, a short string, or an existing model."""
    if isinstance(spec, SpaceModel):
        return spec
    if isinstance(spec, str):
        spec = _parse_string(spec)
    kind = spec.get("kind")
    p = dict(spec.get("params", {}))
    if kind == "zn":
        return CayleyZn(int(p.get("n", 1)))
    if kind == "free":
        return CayleyFree(int(p.get("k", 2)))
    if kind == "ray":
        return Ray()
    if kind == "wedge":
        if "lengths" in p:
            return WedgeIntervals(0, lengths=p["lengths"])
        if "cutoff" not in p:
            raise SpaceError("wedge spaces need a branch cutoff for materialization")
        return WedgeIntervals(int(p["cutoff"]), int(p.get("slope", 1)), int(p.get("offset", 0)))
    if kind == "ballchain":
        return BallChain(int(p.get("n", 2)))
    if kind == "ballray":
        return BallsOnRay(int(p.get("n", 2)))
    if kind == "annuli":
        return AnnuliUnion(int(p["n"]), int(p["c"]), p["parity"], int(p.get("thicken", 0)),
                           bool(p.get("axis", False)))
    if kind == "restriction":
        base = build_space(p["base"])
        return Restriction(base, [base.decode(x) for x in p.get("removed", [])])
    if kind == "neighborhood":
        base = build_space(p["base"])
        return NeighborhoodUnion(base, [base.decode(x) for x in p["core"]], int(p["r"]))
    raise SpaceError(f"unknown space kind {kind!r}")


def neighbors(space: SpaceModel, v) -> list:
    return space.neighbors(v)


def translate_set(space: SpaceModel, g, A: Iterable) -> list:
    """Left translation g·A, sorted canonically."""
    if not space.supports_translation:
        raise SpaceError("translation undefined; use re-centering")
    if not space.contains(g):
        raise SpaceError(f"{g!r} is not a group element of {space.kind}")
    return sorted({space.translate(g, a) for a in A}, key=space.key)
