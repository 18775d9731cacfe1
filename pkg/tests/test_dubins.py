import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from _oracles import external_tangent_lines, point_line_distance
from uavgroup.dubins import (Circle, GeometryError, InfeasiblePlanError, NoRSRTangentError,
                             OffCircleError, arc_length, build_plan, clockwise_departure,
                             feasible_velocities, rsr_tangent, sample_trajectory,
                             save_plan_json, save_trajectory_csv, validate_trajectory)
from uavgroup.mobility import UserTrack, generate_tracks
from uavgroup.scenario import default_config


def test_arc_of_identical_points_is_zero():
    assert arc_length((-5.0, 0.0), (-5.0, 0.0), 5.0) == 0.0


def test_quarter_circle():
    r = 200.0
    assert abs(arc_length((-r, 0.0), (0.0, r), r) - math.pi * r / 2) <= 1e-12 * r


def test_short_chord_matches_series():
    r = 300.0
    chord = 1e-3 * r
    ang = 2 * math.asin(chord / (2 * r))
    a = (r, 0.0)
    b = (r * math.cos(ang), r * math.sin(ang))
    series = chord * (1 + chord**2 / (24 * r**2))
    assert abs(arc_length(a, b, r) - series) <= 1e-7 * series


def test_arc_rejects_points_off_the_circle():
    with pytest.raises(OffCircleError):
        arc_length((0.0, 0.0), (1.0, 0.0), 1.0)


def test_arc_of_antipodes_is_half_circle():
    assert arc_length((1.0, 0.0), (-1.0, 0.0), 1.0) == pytest.approx(math.pi)


@given(a=st.floats(0, 2 * math.pi), b=st.floats(0, 2 * math.pi), c=st.floats(0, 2 * math.pi))
def test_arc_symmetric_and_monotone_in_chord(a, b, c):
    r = 250.0
    P = [(r * math.cos(t), r * math.sin(t)) for t in (a, b, c)]
    assert arc_length(P[0], P[1], r) == pytest.approx(arc_length(P[1], P[0], r), abs=1e-9)
    ch1, ch2 = math.dist(P[0], P[1]), math.dist(P[0], P[2])
    s1, s2 = arc_length(P[0], P[1], r), arc_length(P[0], P[2], r)
    if ch1 < ch2 - 1e-9:
        assert s1 <= s2 + 1e-9


def test_equal_radius_tangent():
    sol = rsr_tangent(Circle((0.0, 0.0), 200.0), Circle((1000.0, 0.0), 200.0))
    assert sol.A == pytest.approx(0.0, abs=1e-12)
    assert sol.Bline == pytest.approx(200.0)
    assert sol.F[0] == pytest.approx(0.0, abs=1e-9)
    assert sol.F[1] == pytest.approx(200.0)
    assert sol.theta == pytest.approx(math.pi / 2)


def test_coincident_circles_degenerate_to_circling():
    sol = rsr_tangent(Circle((3.0, 4.0), 200.0), Circle((3.0, 4.0), 200.0))
    assert sol.degenerate and sol.theta == 0.0
    assert sol.F == (3.0 - 200.0, 4.0)


def test_nested_circles_have_no_tangent():
    with pytest.raises(NoRSRTangentError):
        rsr_tangent(Circle((0.0, 0.0), 400.0), Circle((50.0, 0.0), 200.0))


def random_pair(rng):
    ci = rng.uniform(-1e3, 1e3, 2)
    ri, rf = rng.uniform(200, 400, 2)
    h = rng.uniform(-math.pi / 3, math.pi / 3)
    L = rng.uniform(abs(ri - rf) + 400, 3000)
    cf = ci + L * np.array([math.cos(h), math.sin(h)])
    return Circle(tuple(ci), float(ri)), Circle(tuple(cf), float(rf))


def check_tangent(ci: Circle, cf: Circle):
    sol = rsr_tangent(ci, cf)
    (xi, yi), (xf, yf) = ci.center, cf.center
    assert abs(math.dist(sol.F, ci.center) - ci.radius) <= 1e-9 * ci.radius
    assert abs(point_line_distance(ci.center, sol.A, sol.Bline) - ci.radius) <= 1e-9 * ci.radius
    assert abs(point_line_distance(cf.center, sol.A, sol.Bline) - cf.radius) <= 1e-9 * cf.radius
    assert yi - sol.A * xi - sol.Bline < 0 and yf - sol.A * xf - sol.Bline < 0
    assert 0 <= sol.theta < math.pi
    return sol


def test_random_unequal_pairs_match_angle_bisection_oracle(rng):
    for _ in range(25):
        ci, cf = random_pair(rng)
        sol = check_tangent(ci, cf)
        n = np.array([-sol.A, 1.0]) / math.hypot(sol.A, 1.0)
        c = sol.Bline / math.hypot(sol.A, 1.0)
        lines = external_tangent_lines(ci.center, ci.radius, cf.center, cf.radius)
        assert any(np.allclose(n, m, atol=1e-9) and abs(c - cc) <= 1e-9 * abs(cc) + 1e-6
                   for m, cc in lines)


def test_translation_invariance(rng):
    for _ in range(20):
        ci, cf = random_pair(rng)
        shift = rng.uniform(-5e3, 5e3, 2)
        a = rsr_tangent(ci, cf)
        b = rsr_tangent(Circle(tuple(np.add(ci.center, shift)), ci.radius),
                        Circle(tuple(np.add(cf.center, shift)), cf.radius))
        assert np.allclose(np.subtract(b.F, shift), a.F, atol=1e-9 * 5e3)
        assert b.theta == pytest.approx(a.theta, abs=1e-9)


def test_fallback_departure_agrees_with_tangent(rng):
    for _ in range(20):
        ci, cf = random_pair(rng)
        a = rsr_tangent(ci, cf)
        b = clockwise_departure(ci, cf)
        assert np.allclose(a.F, b.F, atol=1e-6)
        assert a.theta == pytest.approx(b.theta, abs=1e-9)


def test_fallback_covers_steep_headings():
    ci, cf = Circle((0.0, 0.0), 200.0), Circle((-300.0, 800.0), 200.0)
    sol = clockwise_departure(ci, cf)
    assert 0 <= sol.theta < 2 * math.pi
    assert abs(math.dist(sol.F, ci.center) - 200.0) < 1e-9


def static_track(radius_first, radius_last, N=60, shift=(0.0, 0.0)):
    pos = np.zeros((2, N, 2))
    spread = np.linspace(radius_first, radius_last, N)
    drift = np.linspace(0, 1, N)[:, None] * np.asarray(shift)[None, :]
    pos[0, :, 0], pos[1, :, 0] = spread, -spread
    return UserTrack.from_positions(pos + drift[None])


def test_radius_never_below_safety_radius():
    c = default_config().replace(T=60.0)
    plan = build_plan(static_track(100.0, 100.0, shift=(400.0, 0.0)), c)
    assert plan.r_I == 200.0


def test_sixty_second_plan_velocities():
    # hand enumeration: v = (pi/2 + 2 pi Cir) * 200 / 60 within [20, 100]
    vs = feasible_velocities(math.pi / 2, 200.0, 60.0, 20.0, 100.0)
    assert [c for _, c in vs] == [1, 2, 3, 4]
    assert [round(v, 2) for v, _ in vs] == [26.18, 47.12, 68.07, 89.01]


def test_spacing_is_one_lap_per_period():
    vs = feasible_velocities(0.3, 278.4, 120.0, 20.0, 100.0)
    diffs = np.diff([v for v, _ in vs])
    assert np.allclose(diffs, 2 * math.pi * 278.4 / 120.0, rtol=1e-12)


@given(theta=st.floats(0, math.pi - 1e-9), r=st.floats(200, 600), T=st.floats(30, 300))
def test_listed_speeds_satisfy_lap_equation(theta, r, T):
    for v, cir in feasible_velocities(theta, r, T, 20.0, 100.0):
        assert 20.0 * (1 - 1e-9) <= v <= 100.0 * (1 + 1e-9)
        k = (T * v - theta * r) / (2 * math.pi * r)
        assert abs(k - round(k)) <= 1e-9 and round(k) == cir


def test_empty_speed_set_is_reported():
    c = default_config().replace(Vmin=20.0, Vmax=20.5, T=60.0)
    with pytest.raises(InfeasiblePlanError):
        build_plan(static_track(100.0, 100.0, shift=(400.0, 0.0)), c)


@pytest.fixture(scope="module")
def plan60():
    c = default_config().replace(T=60.0)
    tr = generate_tracks(c)
    return build_plan(tr, c), c


def test_first_sample_is_start_point(plan60):
    plan, c = plan60
    for v in plan.velocities:
        s = sample_trajectory(plan, v, c)
        assert np.allclose(s.q[0], plan.q_I, atol=1e-12)


def test_swept_angle_reaches_switch_phase(plan60):
    plan, c = plan60
    for v, cir in plan.feasible_velocities:
        swept = v * c.T * (c.N - 1) / (c.N * plan.r_I)
        assert abs(swept - (plan.theta + 2 * math.pi * cir)) <= v * c.delta / plan.r_I + 1e-9


def test_chords_match_circle_formula(plan60, rng):
    plan, c = plan60
    v = plan.velocities[-1]
    q = sample_trajectory(plan, v, c).q
    for n in rng.integers(0, c.N - 1, 3):
        expected = 2 * plan.r_I * math.sin(v * c.delta / (2 * plan.r_I))
        assert math.dist(q[n], q[n + 1]) == pytest.approx(expected, rel=1e-12)


def test_infeasible_speed_is_rejected(plan60):
    plan, c = plan60
    with pytest.raises(GeometryError):
        sample_trajectory(plan, plan.velocities[0] + 1.0, c)


def test_every_feasible_speed_validates(plan60):
    plan, c = plan60
    for v in plan.velocities:
        s = sample_trajectory(plan, v, c)
        report = validate_trajectory(s, plan, c)
        assert report.ok, report.violations
        arcs = [arc_length(s.q[n], s.q[n + 1], plan.r_I, plan.circle_I.center)
                for n in range(c.N - 1)]
        assert np.allclose(arcs, v * c.delta, rtol=1e-9)


def test_minimum_speed_sits_on_the_lower_step_bound():
    theta = 20.0 * 60.0 / 200.0 - 2 * math.pi  # makes Vmin reachable with one lap
    vs = feasible_velocities(theta, 200.0, 60.0, 20.0, 100.0)
    assert vs[0][0] == pytest.approx(20.0)


def test_injected_double_step_is_reported(plan60):
    plan, c = plan60
    v = plan.velocities[-1]
    s = sample_trajectory(plan, v, c)
    q = s.q.copy()
    phi = 2 * v * c.delta * 10 / plan.r_I
    q[10:] = [(plan.circle_I.center[0] - plan.r_I * math.cos(phi + v * c.delta * i / plan.r_I),
               plan.circle_I.center[1] + plan.r_I * math.sin(phi + v * c.delta * i / plan.r_I))
              for i in range(c.N - 10)]
    report = validate_trajectory(type(s)(q=q, v=v), plan, c)
    assert 10 in report.slots()


def test_exports(plan60, tmp_path):
    import json
    plan, c = plan60
    s = sample_trajectory(plan, plan.velocities[0], c)
    save_trajectory_csv(s, tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "n,x,y" and len(lines) == c.N + 1
    save_plan_json(plan, tmp_path / "p.json")
    data = json.loads((tmp_path / "p.json").read_text())
    assert data["r_I"] == plan.r_I and len(data["feasible_velocities"]) == len(plan.velocities)
