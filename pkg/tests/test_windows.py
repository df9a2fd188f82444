import numpy as np
import pytest

from coarse_scope.windows import (WindowBudgetError, WindowError, ball, component_labels,
                                  components, distances, extract_window, geodesic_segment,
                                  neighborhood, sphere, window_distance)


def test_window_sizes():
    assert len(extract_window("zn:2", None, 2)) == 13
    assert len(extract_window("free:2", None, 2)) == 17
    assert len(extract_window("ray", None, 5)) == 6
    assert len(extract_window("zn:3", None, 3)) == 63


@pytest.mark.parametrize("space,base,W", [("zn:2", None, 7), ("zn:3", (2, -1, 0), 4),
                                          ("zn:1", (5,), 9)])
def test_lattice_window_matches_generic_bfs(space, base, W):
    a = extract_window(space, base, W)
    b = extract_window(space, base, W, generic=True)
    assert a.is_lattice and not b.is_lattice
    assert list(a.labels) == list(b.labels)
    assert np.array_equal(a.indptr, b.indptr)
    assert np.array_equal(a.indices, b.indices)
    assert np.array_equal(a.dist_base, b.dist_base)
    assert np.array_equal(a.boundary, b.boundary)


def test_boundary_and_truncation():
    w = extract_window("zn:2", None, 3)
    assert set(np.flatnonzero(w.boundary)) == set(sphere(w, 3))
    wedge = extract_window("wedge:4", None, 10)
    # whole space fits; only the wedge point has unseen branches
    assert len(wedge) == 11
    assert wedge.encode_set(np.flatnonzero(wedge.boundary)) == [[0, 0]]


def test_lookup_and_index():
    w = extract_window("zn:2", (3, 3), 2)
    assert w.has((4, 4)) and not w.has((6, 6))
    assert w.vertex(w.index((5, 3))) == (5, 3)
    with pytest.raises(WindowError):
        w.index((0, 0))
    with pytest.raises(WindowError):
        w.indices_of([(3, 3), (9, 9)])


def test_metric_primitives_on_z2():
    w = extract_window("zn:2", None, 5)
    o = w.index((0, 0))
    assert len(ball(w, 1)) == 5
    assert len(sphere(w, 2)) == 8
    assert len(neighborhood(w, [o], 2)) == 13
    assert window_distance(w, o, w.index((2, -3))) == 5
    assert geodesic_segment(w, (0, 0), (3, 0)) == [(0, 0), (1, 0), (2, 0), (3, 0)]
    d = distances(w, [o], max_dist=2)
    assert d.max() == 2 and (d == -1).sum() == len(w) - 13


def test_components_split_by_sphere():
    w = extract_window("zn:1", None, 10)
    S = sphere(w, 4)
    rest = np.setdiff1d(np.arange(len(w)), S)
    comps = components(w, rest)
    assert [len(c) for c in comps] == [6, 7, 6]
    labels, n = component_labels(w, rest)
    assert n == 3 and (labels[S] == -1).all()


def test_budget_error_reports_radius():
    with pytest.raises(WindowBudgetError) as exc:
        extract_window("zn:2", None, 1000, budget=10_000)
    assert exc.value.needed > 10_000
    with pytest.raises(WindowBudgetError):
        extract_window("free:3", None, 12, budget=10_000)


def test_budget_env(monkeypatch):
    monkeypatch.setenv("COARSE_SCOPE_BUDGET", "100")
    with pytest.raises(WindowBudgetError):
        extract_window("zn:2", None, 20)


def test_base_must_be_vertex():
    with pytest.raises(Exception):
        extract_window("ballchain:2", (0, 0), 3)
