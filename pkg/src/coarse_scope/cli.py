"""coarse-scope: scriptable front end with content-addressed artifacts and replayable manifests."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .covers import (CoverError, MeshViolation, asdim_bound, brick_cover, canonical_cover,
                     interval_cover, mesh, min_multiplicity_oracle,
                     r_multiplicity, singleton_cover, tree_annular_cover)
from .descendants import (AnnulusViolation, DescendError, OriginInBarrier, ParamSchedule,
                          SeparationFailure, descend, verify_descendant_claims)
from .export import FORMATS, canonical_json, digest, jsonable, to_dot, to_svg_data
from .separators import (SeparatorError, TubeError, _axis_indices, build_tube, final_cover,
                         place_gamma_sequence, separator_pipeline)
from .space_models import SpaceError, build_space
from .verification import (GENERATORS, VerificationError, cantor_probe, default_rhos,
                           depth_escalation, space_probe, verify_separation)
from .windows import WindowError, extract_window, neighborhood, sphere, vset

EXIT_OK, EXIT_USAGE, EXIT_VIOLATED = 0, 1, 2
CHAIN_KINDS = ("ballchain", "ballray", "annuli")
ASSERTION_ERRORS = (MeshViolation, SeparationFailure, OriginInBarrier, AnnulusViolation,
                    TubeError)


class UsageError(Exception):
    pass


class Violation(Exception):
    def __init__(self, msg: str, witness=None):
        super().__init__(msg)
        self.witness = witness


@dataclass
class Run:
    result: dict
    ok: bool = True
    summary: list = field(default_factory=list)
    window: object = None
    groups: dict = field(default_factory=dict)
    plot: dict | None = None
    schedule: dict | None = None
    seeds: list | None = None


# -- parameter parsing ----------------------------------------------------

def _window(p):
    space = build_space(p["space"])
    base = None if p.get("base") is None else space.decode(json.loads(p["base"]))
    return extract_window(space, base, int(p["window"]))


def parse_cover(w, spec: str):
    kind, _, rest = spec.partition(":")
    args = [int(x) for x in rest.split(":") if x] if rest else []
    if kind == "brick" and len(args) == 1:
        return brick_cover(w, args[0])
    if kind == "brick" and len(args) == 2:
        return brick_cover(w, args[0], shift=args[1])
    if kind == "rect" and len(args) == 3:
        return brick_cover(w, args[0], sides=args[:2], shift=args[2])
    if kind in ("interval", "mirror") and len(args) == 1:
        return interval_cover(w, args[0], mirror=kind == "mirror")
    if kind == "annular" and len(args) == 1:
        return tree_annular_cover(w, args[0])
    if kind == "singleton" and not args:
        return singleton_cover(w)
    if kind == "canonical" and len(args) == 1:
        return canonical_cover(w, args[0])
    raise UsageError(f"unknown cover spec {spec!r}; use brick:L[:shift], rect:A:B:shift, "
                     "interval:L, mirror:L, annular:w, singleton or canonical:R")


def _read_set_file(path: str):
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    return data, json.loads(data)


def parse_set(w, spec: str):
    kind, _, rest = spec.partition(":")
    if kind == "empty":
        return vset([])
    if kind == "sphere":
        return sphere(w, int(rest))
    if kind in ("file", "points"):
        pts = _read_set_file(rest)[1] if kind == "file" else json.loads(rest)
        if isinstance(pts, dict):
            pts = pts.get("vertices", pts.get("K", []))
        return w.indices_of([w.space.decode(x) for x in pts])
    raise UsageError(f"unknown set spec {spec!r}; use file:PATH, points:JSON, sphere:d or empty")


def _inputs(p) -> dict:
    out = {}
    for key in ("set",):
        spec = p.get(key)
        if spec and spec.startswith("file:"):
            out[key] = {"path": spec[5:], "sha256": digest(_read_set_file(spec[5:])[0])}
    return out


# -- commands ---------------------------------------------------------------

def cmd_space(p) -> Run:
    space = build_space(p["space"])
    w = extract_window(space, None, int(p["window"]))
    try:
        bound = asdim_bound(space)
    except CoverError:
        bound = None
    res = {"space": space.spec(), "basepoint": space.encode(space.basepoint),
           "asdim_bound": bound, "window": w.ref(), "vertices": len(w), "edges": w.n_edges,
           "truncated": w.encode_set(np.flatnonzero(w.boundary & (w.dist_base < w.radius)))}
    return Run(res, summary=[("space", space.spec_id()), ("vertices", len(w)),
                             ("asdim bound", bound)], window=w)


def cmd_window(p) -> Run:
    w = _window(p)
    bnd = np.flatnonzero(w.boundary)
    res = {"window": w.ref(), "vertices": len(w), "edges": w.n_edges, "lattice": w.is_lattice,
           "boundary_size": len(bnd), "degree_max": int(np.diff(w.indptr).max())}
    return Run(res, summary=[("vertices", len(w)), ("edges", w.n_edges),
                             ("boundary", len(bnd))], window=w, groups={"boundary": bnd})


def cmd_cover(p) -> Run:
    w = _window(p)
    c = parse_cover(w, p["cover"])
    R = int(p["r"])
    D = mesh(c)
    rep = r_multiplicity(c, R)
    bound = p.get("assert_mult")
    ok = bound is None or rep.value <= int(bound)
    res = {"window": w.ref(), "cover": c.name, "patches": len(c), "declared_mesh": c.declared_mesh,
           "mesh": D, "multiplicity": rep.as_dict(w), "asserted_bound": bound, "ok": ok}
    groups = {}
    if rep.center is not None:
        groups["center"] = [rep.center]
        for k in rep.patches:
            groups[f"patch{k}"] = c.members(k)
    return Run(res, ok, [("cover", c.name), ("patches", len(c)), ("mesh", D),
                         (f"{R}-multiplicity", rep.value)], w, groups)


def cmd_descend(p) -> Run:
    w = _window(p)
    c = parse_cover(w, p["cover"])
    R = int(p["r"])
    if p.get("sphere") is not None:
        E, radius = sphere(w, int(p["sphere"])), int(p["sphere"])
    elif p.get("set"):
        E, radius = parse_set(w, p["set"]), None
    else:
        raise UsageError("descend needs --sphere or --set")
    n_bound = int(p["n_bound"]) if p.get("n_bound") is not None else asdim_bound(w.space)
    f = descend(c, E, sphere_radius=radius)
    claims = verify_descendant_claims(f, R, n_bound)
    fam = [{"ancestor": int(a), "members": w.encode_set(f.family.members(i))}
           for i, a in enumerate(f.ancestors)]
    res = {"window": w.ref(), "cover": c.name, "E_size": len(E), "R": R, "n_bound": n_bound,
           "barrier_patches": [int(i) for i in f.barrier_ids], "descendants": fam,
           "claims": claims.as_dict()}
    barrier = [c.members(i) for i in f.barrier_ids]
    groups = {"origin": [f.origin], "descendants": f.union(), "E": E,
              "barrier": np.concatenate(barrier) if barrier else vset([])}
    return Run(res, claims.ok, [("barrier patches", len(f.barrier_ids)),
                                ("descendants", len(fam)), ("claim 1", claims.separation["ok"]),
                                ("claim 2", claims.multiplicity["ok"])], w, groups)


def _schedule(p) -> ParamSchedule:
    return ParamSchedule.derive(p["space"], int(p["depth"]), alpha=int(p["alpha"]),
                                R1=int(p["r1"]),
                                d1=None if p.get("d1") is None else int(p["d1"]),
                                k_tube=int(p["k_tube"]))


def cmd_gamma(p) -> Run:
    sch = _schedule(p)
    gs = place_gamma_sequence(p["space"], sch, int(p["depth"]))
    fc = final_cover(gs, n0=int(p["n0"]))
    res = {"gamma": gs.as_dict(), "final_cover": fc.as_dict(gs.space)}
    plot = {"axis": [[st.position, st.radius] for st in gs.stages]}
    return Run(res, fc.ok, [("stages", len(gs.stages)),
                            ("positions", [st.position for st in gs.stages]),
                            ("final R-mult", f"{fc.value} <= {fc.bound} at R={fc.R}")],
               plot=plot, schedule=sch.as_dict())


def cmd_tube(p) -> Run:
    w = _window(p)
    c = parse_cover(w, p["cover"])
    a, b = (int(x) for x in p["segment"].split(":"))
    seg = _axis_indices(w, a, b)
    t = build_tube(w, seg, int(p["d_prime"]), c)
    ok = t.checks["core_contained"] and t.checks["separates"]
    res = {"window": w.ref(), "cover": c.name, "segment": [a, b], "d_prime": t.d_prime,
           "tube_size": len(t.tube), "tube_sha256": digest(canonical_json(w.encode_set(t.tube))),
           "checks": t.checks}
    return Run(res, ok, [("tube size", len(t.tube)), ("checks", t.checks)], w,
               {"segment": seg, "tube": t.tube})


def cmd_assemble_y(p) -> Run:
    trim = not p.get("no_trim")
    gs, tubes, Y = separator_pipeline(p["space"], m=int(p["depth"]), alpha=int(p["alpha"]),
                                      R1=int(p["r1"]), k_tube=int(p["k_tube"]),
                                      k_a=int(p["k_a"]) if trim else None,
                                      k_b=int(p["k_b"]) if trim else None, R=int(p["r"]),
                                      rho=None if p.get("rho") is None else int(p["rho"]))
    d = Y.as_dict()
    ys = d.pop("Y")
    d["Y_size"] = len(ys)
    d["Y_sha256"] = digest(canonical_json(ys))
    rep = d.get("report") or {}
    if rep:
        rep["components"] = [c for c in rep["components"] if c["class"] != "shallow"]
    d["verdict"] = rep.get("verdict")
    expect = p.get("expect")
    ok = expect is None or expect == d["verdict"]
    tails = Y.tails
    return Run(jsonable(d), ok, [("window radius", Y.window.radius), ("|Y|", len(ys)),
                                 ("verdict", d["verdict"]),
                                 ("deep on axis sides", tails.get("deep_on_axis_sides"))],
               plot={"axis": [[st.position, st.radius] for st in gs.stages]},
               schedule=gs.schedule.as_dict())


def cmd_verify(p) -> Run:
    w = _window(p)
    K = parse_set(w, p["set"])
    R = int(p["r"])
    rep = verify_separation(w, K, R, p.get("rho"), p.get("margin"))
    res = rep.as_dict()
    esc = p.get("escalate")
    if esc:
        rhos = default_rhos(w, R) if esc == "auto" else [int(x) for x in esc.split(",")]
        res["escalation"] = depth_escalation(w, K, R, rhos).as_dict()
    expect = p.get("expect")
    ok = expect is None or expect == rep.verdict
    groups = {"K": K, "N_R(K)": neighborhood(w, K, R)}
    for cls in ("deep", "indeterminate", "shallow"):
        ids = [c["id"] for c in rep.components if c["class"] == cls]
        groups[cls] = np.flatnonzero(np.isin(rep.labels, ids))
    return Run(res, ok, [("verdict", rep.verdict), ("deep", rep.deep_count),
                         ("components", len(rep.components))], w, groups)


def cmd_probe(p) -> Run:
    space = build_space(p["space"])
    args = dict(generator=p["generator"], trials=int(p["trials"]), R=int(p["r"]),
                seed=int(p["seed"]), size=int(p["size"]), workers=int(p.get("workers") or 1))
    if space.kind in CHAIN_KINDS:
        rep = cantor_probe(space, prefix=int(p["prefix"]), **args)
    else:
        rep = space_probe(space, W=None if p.get("window") is None else int(p["window"]), **args)
    return Run(jsonable(rep.as_dict()), rep.ok,
               [("trials", len(rep.candidates)), ("violations", len(rep.violations)),
                ("conclusion", rep.conclusion)], seeds=rep.seeds)


def cmd_oracle(p) -> Run:
    w = _window(p)
    D, R = int(p["mesh"]), int(p["r"])
    value, c = min_multiplicity_oracle(w, D, R, budget=int(p["budget"]),
                                       connected_only=not p.get("all_patches"))
    res = {"window": w.ref(), "mesh": D, "R": R, "min_multiplicity": value,
           "connected_only": not p.get("all_patches"),
           "cover": [w.encode_set(c.members(i)) for i in range(len(c))]}
    ok = True
    if p.get("compare"):
        other = parse_cover(w, p["compare"])
        ov = r_multiplicity(other, R, region=np.arange(len(w)), check_margin=False).value
        res["compare"] = {"cover": other.name, "multiplicity": ov, "lower_bound_holds": value <= ov}
        ok = value <= ov
    groups = {f"patch{i}": c.members(i) for i in range(min(len(c), 8))}
    return Run(res, ok, [("min multiplicity", value), ("patches", len(c))], w, groups)


COMMANDS = {"space": cmd_space, "window": cmd_window, "cover": cmd_cover,
            "descend": cmd_descend, "gamma": cmd_gamma, "tube": cmd_tube,
            "assemble-y": cmd_assemble_y, "verify": cmd_verify, "probe": cmd_probe,
            "oracle": cmd_oracle}


# -- artifacts -----------------------------------------------------------------

def manifest_for(command: str, params: dict, run: Run, out_digest: str) -> dict:
    return {"command": command, "params": params, "schedule": run.schedule,
            "seeds": run.seeds, "version": __version__, "schema": f"{command}.v1",
            "inputs": _inputs(params), "output_sha256": out_digest, "ok": run.ok}


def write_artifact(root: Path, command: str, params: dict, run: Run) -> Path:
    data = canonical_json({"command": command, "ok": run.ok, "result": run.result})
    dg = digest(data)
    d = root / f"{command}-{dg[:16]}"
    d.mkdir(parents=True, exist_ok=True)
    (d / "result.json").write_bytes(data)
    (d / "manifest.json").write_bytes(canonical_json(manifest_for(command, params, run, dg)))
    return d


def execute(command: str, params: dict) -> Run:
    try:
        return COMMANDS[command](params)
    except ASSERTION_ERRORS as exc:
        witness = {k: v for k, v in vars(exc).items() if not k.startswith("_")}
        raise Violation(f"{type(exc).__name__}: {exc}", jsonable(witness)) from None
    except (SpaceError, WindowError, CoverError, DescendError, SeparatorError,
            VerificationError, ValueError, KeyError) as exc:
        raise UsageError(f"{type(exc).__name__}: {exc}") from None


def _print(run: Run, fmt: str, where: Path | None, stream=None):
    stream = stream or sys.stdout
    if fmt == "json":
        stream.write(canonical_json(run.result).decode())
        return
    rows = list(run.summary) + [("status", "ok" if run.ok else "ASSERTION VIOLATED")]
    if where is not None:
        rows.append(("artifact", str(where)))
    width = max(len(str(k)) for k, _ in rows)
    for k, v in rows:
        stream.write(f"{str(k):<{width}}  {v}\n")


def replay(manifest_path: Path, root: Path | None = None) -> tuple[bool, str]:
    """Re-run a manifest; returns (reproduced, detail)."""
    man = json.loads(Path(manifest_path).read_text())
    for key, info in man.get("inputs", {}).items():
        cur = digest(_read_set_file(info["path"])[0])
        if cur != info["sha256"]:
            return False, f"input {key} changed: {info['path']}"
    run = execute(man["command"], man["params"])
    data = canonical_json({"command": man["command"], "ok": run.ok, "result": run.result})
    dg = digest(data)
    if root is not None:
        write_artifact(root, man["command"], man["params"], run)
    if dg != man["output_sha256"]:
        return False, f"digest mismatch: {dg} != {man['output_sha256']}"
    orig = Path(manifest_path).parent / "result.json"
    if orig.exists() and orig.read_bytes() != data:
        return False, "result.json differs byte-wise"
    return True, dg


def export(artifact: Path, fmt: str) -> str:
    artifact = Path(artifact)
    man_path = artifact / "manifest.json" if artifact.is_dir() else artifact
    man = json.loads(man_path.read_text())
    res_path = man_path.parent / "result.json"
    if fmt == "json":
        return res_path.read_text()
    run = execute(man["command"], man["params"])
    if fmt == "dot":
        return to_dot(run.window, run.groups)
    return canonical_json(to_svg_data(run.window, run.groups, run.plot)).decode()


# -- argument parsing --------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="coarse-scope", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("table", "json"), default="table")
    common.add_argument("--out", default="coarse-scope-runs",
                        help="artifact root directory")
    common.add_argument("--no-write", action="store_true", help="skip writing artifacts")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    def windowed(sp, window=None):
        sp.add_argument("--space", required=True)
        sp.add_argument("--window", type=int, required=window is None, default=window)
        sp.add_argument("--base", help="basepoint as JSON (default: the space basepoint)")

    def sched(sp, depth):
        sp.add_argument("--space", default="zn:2")
        sp.add_argument("--depth", type=int, default=depth)
        sp.add_argument("--alpha", type=int, default=4)
        sp.add_argument("--r1", type=int, default=1)
        sp.add_argument("--d1", type=int)
        sp.add_argument("--k-tube", type=int, default=8)

    sp = add("space", "describe a space model")
    sp.add_argument("--space", required=True)
    sp.add_argument("--window", type=int, default=3)
    sp = add("window", "extract a window")
    windowed(sp)
    sp = add("cover", "build a cover and certify mesh and R-multiplicity")
    windowed(sp)
    sp.add_argument("--cover", required=True)
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--assert-mult", type=int)
    sp = add("descend", "descendant family and both claim certificates")
    windowed(sp)
    sp.add_argument("--cover", required=True)
    sp.add_argument("--sphere", type=int)
    sp.add_argument("--set")
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--n-bound", type=int)
    sp = add("gamma", "place a Γ-sequence and certify the final cover")
    sched(sp, 2)
    sp.add_argument("--n0", type=int, default=0)
    sp = add("tube", "tube around an axis segment")
    windowed(sp)
    sp.add_argument("--cover", required=True)
    sp.add_argument("--segment", required=True, help="axis interval a:b")
    sp.add_argument("--d-prime", type=int, required=True)
    sp = add("assemble-y", "Γ-sequence, tubes and trimmed union Y")
    sched(sp, 2)
    sp.add_argument("--k-a", type=int, default=4)
    sp.add_argument("--k-b", type=int, default=16)
    sp.add_argument("--no-trim", action="store_true", help="force trimming radii to 0")
    sp.add_argument("--r", type=int, default=1)
    sp.add_argument("--rho", type=int)
    sp.add_argument("--expect")
    sp = add("verify", "classify components of window minus N_R(K)")
    windowed(sp)
    sp.add_argument("--set", required=True)
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--rho", type=int)
    sp.add_argument("--margin", type=int)
    sp.add_argument("--escalate", help="comma-separated rho list or 'auto'")
    sp.add_argument("--expect")
    sp = add("probe", "sampled separator probe")
    sp.add_argument("--space", required=True)
    sp.add_argument("--generator", choices=GENERATORS, default="random-bounded")
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--r", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--prefix", type=int, default=4)
    sp.add_argument("--size", type=int, default=5)
    sp.add_argument("--window", type=int)
    sp.add_argument("--workers", type=int, default=1, help="threads for candidate evaluation")
    sp = add("oracle", "exact minimal R-multiplicity on a tiny window")
    windowed(sp)
    sp.add_argument("--mesh", type=int, required=True)
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--budget", type=int, default=40)
    sp.add_argument("--all-patches", action="store_true")
    sp.add_argument("--compare", help="cover spec to check the lower bound against")
    sp = sub.add_parser("export", help="render an artifact")
    sp.add_argument("artifact")
    sp.add_argument("--format", choices=FORMATS, default="json")
    sp.add_argument("--dest", help="output file (default: stdout)")
    sp = sub.add_parser("replay", help="re-run manifests and compare output digests")
    sp.add_argument("manifests", nargs="+")
    sp.add_argument("--out", help="also write the replayed artifacts here")
    return ap


GLOBAL_KEYS = ("command", "format", "out", "no_write")


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        if args.command == "export":
            text = export(Path(args.artifact), args.format)
            if args.dest:
                Path(args.dest).write_text(text)
            else:
                sys.stdout.write(text)
            return EXIT_OK
        if args.command == "replay":
            root = Path(args.out) if args.out else None
            bad = 0
            for m in args.manifests:
                ok, detail = replay(Path(m), root)
                bad += not ok
                print(f"{'REPRODUCED' if ok else 'MISMATCH':<10}  {m}  {detail}")
            return EXIT_OK if bad == 0 else EXIT_VIOLATED
        params = {k: v for k, v in sorted(vars(args).items()) if k not in GLOBAL_KEYS}
        run = execute(args.command, params)
        where = None if args.no_write else write_artifact(Path(args.out), args.command,
                                                          params, run)
        _print(run, args.format, where)
        return EXIT_OK if run.ok else EXIT_VIOLATED
    except Violation as exc:
        print(json.dumps({"error": str(exc), "witness": exc.witness}, default=str))
        return EXIT_VIOLATED
    except (UsageError, OSError, json.JSONDecodeError) as exc:
        print(f"coarse-scope: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
