import hashlib
import json
from pathlib import Path

import jsonschema
import pytest

from coarse_scope.cli import main
from coarse_scope.export import canonical_json, load_schema, schema_names


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def only_artifact(root: Path) -> Path:
    dirs = sorted(p for p in root.iterdir() if p.is_dir())
    assert len(dirs) == 1
    return dirs[0]


def validate(d: Path):
    res = json.loads((d / "result.json").read_text())
    man = json.loads((d / "manifest.json").read_text())
    jsonschema.validate(res, load_schema(res["command"]))
    jsonschema.validate(man, load_schema("manifest"))
    return res, man


def test_schemas_are_valid_documents():
    for name in schema_names():
        jsonschema.Draft202012Validator.check_schema(load_schema(name))


def test_verify_point_cut(tmp_path, capsys):
    k = tmp_path / "K.json"
    k.write_text("[[0]]")
    out = tmp_path / "runs"
    code, text, _ = run(capsys, "verify", "--space", "zn:1", "--window", "50", "--set",
                        f"file:{k}", "--r", "2", "--rho", "10", "--out", str(out))
    assert code == 0 and "coarsely-separated" in text
    res, man = validate(only_artifact(out))
    assert res["result"]["verdict"] == "coarsely-separated"
    assert man["inputs"]["set"]["path"] == str(k)


def test_expectation_mismatch_exits_2(tmp_path, capsys):
    code, _, _ = run(capsys, "verify", "--space", "zn:1", "--window", "50", "--set",
                     "points:[[0]]", "--r", "2", "--rho", "10", "--expect",
                     "not-separated-at-this-scale", "--out", str(tmp_path))
    assert code == 2


def test_descend_z2_claims(tmp_path, capsys):
    code, text, _ = run(capsys, "descend", "--space", "zn:2", "--window", "60", "--cover",
                        "brick:6", "--sphere", "12", "--r", "1", "--format", "json",
                        "--out", str(tmp_path))
    assert code == 0
    res = json.loads(text)
    assert res["claims"]["ok"] and len(res["descendants"]) == 9
    validate(only_artifact(tmp_path))


def test_descend_failure_embeds_witness(tmp_path, capsys):
    code, text, _ = run(capsys, "descend", "--space", "zn:1", "--window", "30", "--cover",
                        "mirror:5", "--set", "points:[[10]]", "--r", "2", "--out",
                        str(tmp_path))
    assert code == 2
    payload = json.loads(text)
    assert "SeparationFailure" in payload["error"] and payload["witness"]["path"]


def test_cover_assertion(tmp_path, capsys):
    args = ["cover", "--space", "zn:2", "--window", "20", "--cover", "brick:6", "--r", "1",
            "--out", str(tmp_path)]
    assert run(capsys, *args, "--assert-mult", "3")[0] == 0
    assert run(capsys, *args, "--assert-mult", "2")[0] == 2


def test_probe_chain(tmp_path, capsys):
    code, text, _ = run(capsys, "probe", "--space", "ballchain:2", "--trials", "20", "--r", "1",
                        "--out", str(tmp_path))
    assert code == 0 and "no sampled candidate coarsely separates" in text
    validate(only_artifact(tmp_path))


def test_oracle_and_compare(tmp_path, capsys):
    code, text, _ = run(capsys, "oracle", "--space", "zn:2", "--window", "2", "--mesh", "2",
                        "--r", "1", "--compare", "brick:2", "--format", "json",
                        "--out", str(tmp_path))
    assert code == 0
    res = json.loads(text)
    assert res["min_multiplicity"] == 3 and res["compare"]["lower_bound_holds"]


@pytest.mark.parametrize("argv", [["bogus"], ["verify", "--space", "zn:1"],
                                  ["cover", "--space", "zn:1", "--window", "5", "--cover",
                                   "hexagon:3", "--r", "1"],
                                  ["space", "--space", "torus:2"],
                                  ["verify", "--space", "zn:1", "--window", "20", "--set",
                                   "points:[[0]]", "--r", "1", "--rho", "50"]])
def test_usage_errors_exit_1(tmp_path, capsys, argv):
    assert run(capsys, *argv, *([] if argv == ["bogus"] else ["--no-write"]))[0] == 1


def test_export_formats(tmp_path, capsys):
    run(capsys, "descend", "--space", "zn:1", "--window", "30", "--cover", "mirror:5",
        "--sphere", "10", "--r", "2", "--out", str(tmp_path))
    d = only_artifact(tmp_path)
    code, dot, _ = run(capsys, "export", str(d), "--format", "dot")
    assert code == 0 and dot.startswith("graph artifact {") and "group=\"descendants\"" in dot
    code, svg, _ = run(capsys, "export", str(d), "--format", "svg-data")
    data = json.loads(svg)
    assert sorted(data["groups"]["descendants"]) == [[-10], [10]]
    code, js, _ = run(capsys, "export", str(d), "--format", "json")
    assert js == (d / "result.json").read_text()
    dest = tmp_path / "out.dot"
    assert run(capsys, "export", str(d), "--format", "dot", "--dest", str(dest))[0] == 0
    assert dest.read_text() == dot
    assert run(capsys, "export", str(d), "--format", "png")[0] == 1


def test_export_without_window_is_empty_document(tmp_path, capsys):
    run(capsys, "probe", "--space", "ballray:2", "--trials", "2", "--out", str(tmp_path))
    d = only_artifact(tmp_path)
    assert run(capsys, "export", str(d), "--format", "dot")[1] == "graph artifact {\n}\n"
    assert json.loads(run(capsys, "export", str(d), "--format", "svg-data")[1]) == {"groups": {}}


def test_replay_reproduces_and_detects_tampering(tmp_path, capsys):
    run(capsys, "window", "--space", "free:2", "--window", "3", "--out", str(tmp_path))
    d = only_artifact(tmp_path)
    code, text, _ = run(capsys, "replay", str(d / "manifest.json"))
    assert code == 0 and text.startswith("REPRODUCED")
    man = json.loads((d / "manifest.json").read_text())
    man["params"]["window"] = 4
    (d / "manifest.json").write_bytes(canonical_json(man))
    assert run(capsys, "replay", str(d / "manifest.json"))[0] == 2


def test_replay_detects_changed_input(tmp_path, capsys):
    k = tmp_path / "K.json"
    k.write_text("[[0]]")
    out = tmp_path / "runs"
    run(capsys, "verify", "--space", "zn:1", "--window", "30", "--set", f"file:{k}", "--r",
        "1", "--out", str(out))
    k.write_text("[[1]]")
    code, text, _ = run(capsys, "replay", str(only_artifact(out) / "manifest.json"))
    assert code == 2 and "input set changed" in text


def test_artifact_dir_named_by_digest(tmp_path, capsys):
    for _ in range(2):
        run(capsys, "space", "--space", "ray", "--out", str(tmp_path))
    d = only_artifact(tmp_path)
    digest = hashlib.sha256((d / "result.json").read_bytes()).hexdigest()
    assert d.name == f"space-{digest[:16]}"
