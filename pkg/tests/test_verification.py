import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coarse_scope.verification import (VerificationError, cantor_probe, default_rhos,
                                       depth_escalation, space_probe, verify_separation)
from coarse_scope.separators import cantor_space_sets
from coarse_scope.windows import Window, extract_window, sphere


def test_point_cuts_the_line():
    w = extract_window("zn:1", None, 50)
    rep = verify_separation(w, w.indices_of([(0,)]), 2, 10)
    assert rep.verdict == "coarsely-separated"
    assert [c["class"] for c in rep.components] == ["deep", "deep"]
    wit = sorted(c["witness"][0] for c in rep.components)
    assert wit[0] <= -10 and wit[1] >= 10
    assert rep.component_of(w.index((1,))) is None


def test_sphere_leaves_shallow_core_on_z2():
    w = extract_window("zn:2", None, 40)
    rep = verify_separation(w, sphere(w, 5), 1, 10)
    classes = sorted(c["class"] for c in rep.components)
    assert classes == ["deep", "shallow"]
    core = next(c for c in rep.components if c["class"] == "shallow")
    assert core["containment_radius"] == 5 and not core["touches_boundary"]
    assert rep.verdict == "not-separated-at-this-scale"


def test_empty_set_is_one_deep_component():
    w = extract_window("zn:2", None, 8)
    rep = verify_separation(w, [], 1, 3)
    assert len(rep.components) == 1
    assert rep.components[0]["class"] == "deep" and rep.components[0]["max_depth"] is None


def test_scale_preconditions():
    w = extract_window("zn:1", None, 20)
    K = w.indices_of([(0,)])
    with pytest.raises(VerificationError):
        verify_separation(w, K, 3, 3)
    with pytest.raises(VerificationError):
        verify_separation(w, K, 1, 15)
    with pytest.raises(VerificationError):
        depth_escalation(w, K, 1, [4, 2])


def test_default_rho_is_quarter_window():
    w = extract_window("zn:1", None, 50)
    assert verify_separation(w, w.indices_of([(0,)]), 2).rho == 13


def test_indeterminate_and_clipping():
    w = extract_window("zn:1", None, 20)
    K = w.indices_of([(18,)])
    rep = verify_separation(w, K, 1, 5)
    right = [c for c in rep.components if c["min_vertex"] == [20]][0]
    assert right["class"] == "indeterminate"
    assert not rep.k_clipped
    assert verify_separation(w, w.indices_of([(20,)]), 1, 5).k_clipped


def test_ray_escalation_certifies_finite_side():
    w = extract_window("ray", None, 120)
    esc = depth_escalation(w, [w.index(50)], 1, default_rhos(w, 1))
    assert [c["status"] for c in esc.components] == ["shallow-in-space", "indeterminate-deep"]
    assert esc.possibly_deep == 1


def test_ray_escalation_too_small_window_is_honest():
    # the finite side is deeper than any admissible rho, so it stays possibly deep
    w = extract_window("ray", None, 100)
    esc = depth_escalation(w, [w.index(50)], 1, default_rhos(w, 1))
    assert esc.possibly_deep == 2


def test_wedge_point_removal_leaves_shallow_intervals():
    w = extract_window("wedge:6", None, 20)
    esc = depth_escalation(w, [w.index((0, 0))], 0, [1, 2, 4, 8])
    assert {c["status"] for c in esc.components} == {"shallow-in-space"}
    assert esc.possibly_deep == 0


def _permuted(w, seed):
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(w))  # new index -> old index
    inv = np.empty_like(perm)
    inv[perm] = np.arange(len(w))
    labels = [w.vertex(i) for i in perm]
    rows = [np.sort(inv[w.neighbors_of(i)]) for i in perm]
    indptr = np.zeros(len(w) + 1, dtype=np.int32)
    indptr[1:] = np.cumsum([len(r) for r in rows])
    return Window(w.space, w.base, w.radius, labels, indptr,
                  np.concatenate(rows).astype(np.int32), w.dist_base[perm], w.boundary[perm],
                  None, {v: i for i, v in enumerate(labels)})


def _signature(rep):
    w = rep.window
    return sorted((c["class"], c["max_depth"],
                   tuple(sorted(map(tuple, w.encode_set(rep.members(c["id"]))))))
                  for c in rep.components)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_verdict_stable_under_vertex_permutation(seed):
    w = extract_window("zn:2", None, 16)
    K = [(x, 0) for x in range(-16, 17)]
    a = verify_separation(w, w.indices_of(K), 1, 4)
    p = _permuted(w, seed)
    b = verify_separation(p, p.indices_of(K), 1, 4)
    assert a.verdict == b.verdict
    assert _signature(a) == _signature(b)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(-6, 6), st.integers(-6, 6)), min_size=1, max_size=12),
       st.integers(1, 3))
def test_deep_count_non_increasing_in_R(pts, R):
    w = extract_window("zn:2", None, 30)
    K = w.indices_of(sorted(set(pts)))
    a = verify_separation(w, K, R, 8, margin=12).deep_count
    b = verify_separation(w, K, R + 1, 8, margin=12).deep_count
    assert b <= a


def test_probes_are_deterministic_and_parallel_safe():
    a = cantor_probe("ballchain:2", trials=10, seed=3).as_dict()
    b = cantor_probe("ballchain:2", trials=10, seed=3, workers=4).as_dict()
    assert a == b and a["conclusion"] == "no sampled candidate coarsely separates"
    assert a["seeds"] == list(range(3, 13))


def test_probe_rejects_unknown_generator():
    with pytest.raises(VerificationError):
        cantor_probe("ballchain:2", generator="everything")


def test_probe_flags_a_real_separator():
    # on Z a single point separates, so a probe must report it
    rep = space_probe("zn:1", "single-segment-cuts", trials=3, R=1, W=40, pool_radius=2)
    assert not rep.ok
    assert "two or more possibly deep components" in rep.violations[0]["problems"]


@pytest.mark.parametrize("generator", ["single-segment-cuts", "random-bounded", "sphere-slices"])
def test_chain_probe_generators(generator):
    rep = cantor_probe("ballray:2", generator, trials=8, R=2)
    assert rep.ok, rep.violations


def test_ray_window_depth_is_not_true_depth():
    # at a fixed rho the finite left side still looks deep, but it never meets the boundary
    w = extract_window("ray", None, 100)
    rep = verify_separation(w, [w.index(50)], 2, 10)
    assert rep.verdict == "coarsely-separated"
    left, right = sorted(rep.components, key=lambda c: c["min_vertex"])
    assert left["class"] == right["class"] == "deep"
    assert left["max_depth"] == 50 and not left["touches_boundary"]
    assert right["touches_boundary"]


def test_wedge_point_cut_at_fixed_rho():
    w = extract_window("wedge:30", None, 40)
    rep = verify_separation(w, [w.index((0, 0))], 1, 12)
    assert len(rep.components) == 29
    assert not any(c["touches_boundary"] for c in rep.components)
    for c in rep.components:
        n = c["min_vertex"][0]
        assert c["max_depth"] == n
        assert (c["class"] == "deep") == (n >= 12)
    # a window past the longest branch certifies every branch finite
    w = extract_window("wedge:30", None, 70)
    esc = depth_escalation(w, [w.index((0, 0))], 1, default_rhos(w, 1))
    assert {c["status"] for c in esc.components} == {"shallow-in-space"}


def test_ball_chain_segment_cut():
    cs = cantor_space_sets("ballchain:2", 4)
    w = cs.window
    esc = depth_escalation(w, [w.index((11, 0))], 1, default_rhos(w, 1))
    assert [c["status"] for c in esc.components] == ["shallow-in-space", "indeterminate-deep"]
    assert esc.possibly_deep == 1
    assert esc.components[1]["id"] == verify_separation(w, [w.index((11, 0))], 1).component_of(
        cs.tail)


def test_ball_chain_single_segment_cuts():
    rep = cantor_probe("ballchain:2", "single-segment-cuts", trials=20, R=1)
    assert rep.conclusion == "no sampled candidate coarsely separates"
    assert all(c["deep_at_max_rho"] <= 1 for c in rep.candidates)
