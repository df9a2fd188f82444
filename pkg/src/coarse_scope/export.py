"""Deterministic serialization: canonical JSON, digests, DOT and plot data, schema lookup."""
from __future__ import annotations

import hashlib
import json
from importlib import resources

import numpy as np

from .windows import Window

FORMATS = ("json", "dot", "svg-data")
SCHEMA_VERSION = "v1"


def _default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


def jsonable(obj):
    """Round-trip through JSON so tuples become lists and numpy scalars become ints."""
    return json.loads(json.dumps(obj, default=_default))


def canonical_json(obj) -> bytes:
    return (json.dumps(obj, default=_default, sort_keys=True, separators=(",", ":"),
                       ensure_ascii=False) + "\n").encode()


def digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def load_schema(name: str) -> dict:
    path = resources.files("coarse_scope") / "schemas" / f"{name}.{SCHEMA_VERSION}.json"
    return json.loads(path.read_text())


def schema_names() -> list[str]:
    root = resources.files("coarse_scope") / "schemas"
    suffix = f".{SCHEMA_VERSION}.json"
    return sorted(p.name[:-len(suffix)] for p in root.iterdir() if p.name.endswith(suffix))


# -- drawings ---------------------------------------------------------------

def _label(w: Window, i: int) -> str:
    v = w.space.encode(w.vertex(int(i)))
    return json.dumps(v, default=_default).replace('"', "'")


def to_dot(w: Window | None, groups: dict, max_vertices: int = 20000) -> str:
    """DOT graph of the window with one fill color per highlighted group.

    Groups earlier in the dict win when a vertex lies in several. Windows larger
    than max_vertices are cut down to the highlighted vertices.
    """
    if w is None:
        return "graph artifact {\n}\n"
    palette = ["red", "orange", "gold", "green", "cyan", "blue", "violet", "gray"]
    color = np.full(len(w), -1, dtype=np.int64)
    names = list(groups)
    for k in reversed(range(len(names))):
        color[np.asarray(groups[names[k]], dtype=np.int64)] = k
    if len(w) <= max_vertices:
        keep = np.arange(len(w))
    else:
        keep = np.flatnonzero(color >= 0)
    inside = np.zeros(len(w), dtype=bool)
    inside[keep] = True
    lines = ["graph artifact {", "  node [shape=point];"]
    for k, name in enumerate(names):
        lines.append(f"  // group {name}: {palette[k % len(palette)]}")
    for i in keep:
        attrs = f'label="{_label(w, i)}"'
        if color[i] >= 0:
            attrs += f', color={palette[color[i] % len(palette)]}, group="{names[color[i]]}"'
        lines.append(f"  v{i} [{attrs}];")
    for i in keep:
        for j in w.neighbors_of(int(i)):
            if j > i and inside[j]:
                lines.append(f"  v{i} -- v{j};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_svg_data(w: Window | None, groups: dict, plot: dict | None = None) -> dict:
    """Plain coordinate lists for external plotting."""
    out = {"groups": {}}
    if plot:
        out.update(plot)
    if w is None:
        return out
    for name, idx in groups.items():
        idx = np.asarray(idx, dtype=np.int64)
        if w.coords is not None:
            out["groups"][name] = w.coords[idx].tolist()
        else:
            out["groups"][name] = [[w.space.encode(w.vertex(int(i))), int(w.dist_base[i])]
                                   for i in idx]
    return jsonable(out)
