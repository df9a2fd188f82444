import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coarse_scope.covers import (Cover, CoverError, MarginError, MeshViolation, asdim_bound,
                                 brick_cover, canonical_cover, canonical_design, canonical_mesh,
                                 interval_cover, merge_covers, mesh, min_multiplicity_oracle,
                                 patch_diameters, r_multiplicity, singleton_cover,
                                 tree_annular_cover)
from coarse_scope.space_models import CayleyZn
from coarse_scope.windows import extract_window, neighborhood


def _partition_ok(c):
    w = c.window
    counts = np.bincount(c.patch_idx, minlength=len(w))
    return (counts == 1).all()


def test_interval_cover_multiplicities():
    w = extract_window("zn:1", None, 30)
    c = interval_cover(w, 5)
    region = w.indices_of([(x,) for x in range(-15, 16)])
    assert mesh(c) == 4
    assert r_multiplicity(c, 2, region=region).value == 2
    assert r_multiplicity(c, 0, region=region).value == 1
    assert r_multiplicity(singleton_cover(w), 1, region=region).value == 3


def test_mirror_interval_cover_is_symmetric():
    w = extract_window("zn:1", None, 30)
    c = interval_cover(w, 5, mirror=True)
    sets = sorted(tuple(x[0] for x in w.encode_set(c.members(i))) for i in range(len(c)))
    assert (10, 11, 12, 13, 14) in sets and (-14, -13, -12, -11, -10) in sets
    assert (-4, -3, -2, -1, 0) in sets and (0, 1, 2, 3, 4) in sets


def test_brick_cover_on_z2():
    w = extract_window("zn:2", None, 40)
    c = brick_cover(w, 6)
    assert _partition_ok(c)
    assert mesh(c) == 10
    assert r_multiplicity(c, 1).value == 3


@pytest.mark.parametrize("R", [1, 2, 3, 4, 5])
def test_canonical_z2_cover_has_multiplicity_three(R):
    _, D = canonical_design(CayleyZn(2), R)
    W = 8 * R + 2 * D + 8
    w = extract_window("zn:2", None, W)
    c = canonical_cover(w, R)
    assert c.declared_mesh == D == canonical_mesh(w.space, R)
    assert mesh(c) <= D
    assert r_multiplicity(c, R).value == 3


def test_canonical_z3_bricks():
    w = extract_window("zn:3", None, 20)
    c = canonical_cover(w, 1)
    assert mesh(c) <= c.declared_mesh
    assert r_multiplicity(c, 1, region=w.safe(1)).value <= 4


@pytest.mark.parametrize("R", [1, 2, 3])
def test_free_group_annular_cover(R):
    w = extract_window("free:2", None, 2 * R + 4)
    c = tree_annular_cover(w, 2 * R + 1)
    assert mesh(c) <= c.declared_mesh
    assert r_multiplicity(c, R, region=w.safe(R)).value <= 2


def test_free_group_width_four():
    w = extract_window("free:2", None, 6)
    c = tree_annular_cover(w, 4)
    assert r_multiplicity(c, 1, region=w.safe(1)).value == 2


def test_unit_ball_diameter():
    w = extract_window("zn:2", None, 5)
    ball1 = neighborhood(w, [w.index((0, 0))], 1)
    assert patch_diameters(Cover.from_sets(w, [ball1], 2)).tolist() == [2]


def test_tree_cover_rejects_non_tree():
    with pytest.raises(CoverError):
        tree_annular_cover(extract_window("zn:2", None, 3), 2)


def test_mesh_violation_reports_patch():
    w = extract_window("zn:1", None, 10)
    c = Cover.from_sets(w, [np.arange(len(w))], 3)
    with pytest.raises(MeshViolation) as exc:
        mesh(c)
    assert exc.value.diameter == 20 and exc.value.declared == 3


def test_margin_check():
    w = extract_window("zn:1", None, 10)
    c = interval_cover(w, 3)
    with pytest.raises(MarginError):
        r_multiplicity(c, 2, region=np.arange(len(w)))
    assert r_multiplicity(c, 2, region=np.arange(len(w)), check_margin=False).value >= 2


def test_empty_cover_and_merge():
    w = extract_window("zn:1", None, 5)
    empty = Cover.from_sets(w, [], 0)
    assert r_multiplicity(empty, 1).value == 0 and mesh(empty) == 0
    m = merge_covers(interval_cover(w, 2), singleton_cover(w))
    assert len(m) == len(interval_cover(w, 2)) + len(w)


def test_patch_diameters_agree_between_paths():
    lat = extract_window("zn:2", None, 12)
    gen = extract_window("zn:2", None, 12, generic=True)
    a = patch_diameters(brick_cover(lat, 5))
    c = Cover.from_sets(gen, [brick_cover(lat, 5).members(i) for i in range(len(a))], 8)
    assert np.array_equal(a, patch_diameters(c))


def test_asdim_bounds():
    assert asdim_bound(extract_window("zn:3", None, 1).space) == 3
    assert asdim_bound(extract_window("free:2", None, 1).space) == 1


def test_oracle_regression_values():
    # frozen evaluator values
    assert min_multiplicity_oracle(extract_window("zn:1", None, 6), 3, 1)[0] == 2
    w = extract_window("zn:2", None, 2)
    assert min_multiplicity_oracle(w, 2, 1)[0] == 3
    assert min_multiplicity_oracle(w, 2, 1, connected_only=False)[0] == 3


def test_oracle_budget():
    with pytest.raises(CoverError):
        min_multiplicity_oracle(extract_window("zn:2", None, 5), 2, 1)


def test_oracle_cover_is_valid():
    w = extract_window("ray", None, 9)
    value, c = min_multiplicity_oracle(w, 2, 1)
    assert c.covers(np.arange(len(w)))
    assert mesh(c) <= 2
    assert r_multiplicity(c, 1, region=np.arange(len(w)), check_margin=False).value == value


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 9), st.integers(0, 4))
def test_multiplicity_monotone_in_R(L, R):
    w = extract_window("zn:2", None, 30)
    c = brick_cover(w, L)
    region = w.safe(R + 1 + c.declared_mesh)
    a = r_multiplicity(c, R, region=region).value
    b = r_multiplicity(c, R + 1, region=region).value
    assert 1 <= a <= b


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 7), st.integers(1, 7), st.integers(0, 6))
def test_brick_covers_partition_and_respect_mesh(a, b, shift):
    w = extract_window("zn:2", None, 15)
    c = brick_cover(w, a, sides=[a, b], shift=shift)
    assert _partition_ok(c)
    assert mesh(c) <= c.declared_mesh


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(0, 3))
def test_oracle_lower_bounds_interval_covers(L, R):
    w = extract_window("zn:1", None, 8)
    c = interval_cover(w, L)
    everything = np.arange(len(w))
    value, _ = min_multiplicity_oracle(w, mesh(c), R)
    assert value <= r_multiplicity(c, R, region=everything, check_margin=False).value
