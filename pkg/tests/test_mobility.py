import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uavgroup.mobility import (UserTrack, distribution_radius, generate_tracks, group_heading,
                               load_track_csv, save_track_csv, step_bound)
from uavgroup.scenario import default_config


def test_static_group_does_not_move():
    c = default_config().replace(Ve=0.0, perturbation_radius=0.0)
    tr = generate_tracks(c)
    assert np.array_equal(tr.positions, np.repeat(tr.positions[:, :1], c.N, axis=1))


def test_symmetric_pair_follows_the_reference():
    d = 150.0
    c = default_config().replace(K=2, perturbation_radius=0.0)
    tr = generate_tracks(c, offsets=[(d, 0.0), (-d, 0.0)])
    h = group_heading(c)
    ref = c.Ve * c.delta * np.arange(c.N)[:, None] * np.array([np.cos(h), np.sin(h)])
    assert np.allclose(tr.centroids, ref, atol=1e-9)
    assert np.allclose(tr.radii, d, atol=1e-9)


def test_centroid_travels_in_a_straight_line():
    c = default_config()
    tr = generate_tracks(c)
    # straight-line kinematics: displacement over N-1 slots at speed Ve
    travelled = np.linalg.norm(tr.centroids[-1] - tr.centroids[0])
    assert abs(travelled - c.Ve * (c.N - 1) * c.delta) <= 1e-6


def test_group_starts_at_origin():
    tr = generate_tracks(default_config())
    assert np.allclose(tr.centroids[0], 0.0, atol=1e-9)


def test_single_user_has_zero_radius():
    tr = generate_tracks(default_config().replace(K=1))
    assert distribution_radius(tr, 1) == 0.0
    assert distribution_radius(tr, tr.N) == 0.0


def test_radius_of_symmetric_pair():
    pos = np.zeros((2, 3, 2))
    pos[0, :, 0], pos[1, :, 0] = 40.0, -40.0
    assert distribution_radius(UserTrack.from_positions(pos), 2) == pytest.approx(40.0)


def test_radius_matches_brute_force_scan():
    tr = generate_tracks(default_config())
    for n in (1, 37, tr.N):
        cen = [sum(tr.positions[k, n - 1, j] for k in range(tr.K)) / tr.K for j in (0, 1)]
        far = max(np.hypot(tr.positions[k, n - 1, 0] - cen[0], tr.positions[k, n - 1, 1] - cen[1])
                  for k in range(tr.K))
        assert abs(distribution_radius(tr, n) - far) <= 1e-9


def test_slot_index_is_checked():
    tr = generate_tracks(default_config())
    for bad in (0, tr.N + 1):
        with pytest.raises(IndexError):
            distribution_radius(tr, bad)


@given(seed=st.integers(0, 2**32), K=st.integers(1, 12), ve=st.floats(0.0, 30.0),
       rp=st.floats(0.0, 10.0))
def test_track_invariants(seed, K, ve, rp):
    c = default_config().replace(seed=seed, K=K, Ve=ve, perturbation_radius=rp, T=40.0)
    tr = generate_tracks(c)
    assert np.allclose(tr.centroids, tr.positions.mean(axis=0), atol=1e-9)
    far = np.linalg.norm(tr.positions - tr.centroids[None], axis=2).max(axis=0)
    assert np.allclose(tr.radii, far, atol=1e-9)
    steps = np.linalg.norm(np.diff(tr.positions, axis=1), axis=2)
    assert steps.max(initial=0.0) <= step_bound(c) + 1e-9
    # cohesion: spread changes by at most the jitter envelope
    n = np.arange(1, c.N + 1)
    assert np.all(tr.radii <= tr.radii[0] + n * 4 * rp + 1e-9)
    again = generate_tracks(c)
    assert np.array_equal(tr.positions, again.positions)


def test_user_streams_do_not_depend_on_group_size():
    c = default_config().replace(perturbation_radius=0.0, Ve=0.0)
    a = generate_tracks(c.replace(K=4)).positions
    b = generate_tracks(c.replace(K=6)).positions
    # offsets only differ by the re-centring shift
    shift_a = a[:, 0] - a[0, 0]
    shift_b = b[:4, 0] - b[0, 0]
    assert np.allclose(shift_a, shift_b, atol=1e-9)


def test_csv_round_trip(tmp_path):
    tr = generate_tracks(default_config().replace(T=10.0))
    save_track_csv(tr, tmp_path / "t.csv")
    back = load_track_csv(tmp_path / "t.csv")
    assert np.array_equal(back.positions, tr.positions)
    header = (tmp_path / "t.csv").read_text().splitlines()[0]
    assert header == "k,n,x,y"


def test_csv_with_missing_rows_is_rejected(tmp_path):
    (tmp_path / "t.csv").write_text("k,n,x,y\n1,1,0,0\n2,2,1,1\n")
    with pytest.raises(ValueError):
        load_track_csv(tmp_path / "t.csv")
