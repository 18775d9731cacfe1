import dataclasses
import math

import numpy as np
import pytest

from uavgroup.channel import average_throughput, compute_gains, gains_from_positions
from uavgroup.dubins import build_plan, circle_positions, sample_trajectory
from uavgroup.mobility import UserTrack, generate_tracks
from uavgroup.scenario import default_config
from uavgroup.trajectory import (SCAInfeasible, enumerate_velocity_oracle, optimize_trajectory,
                                 phase_cosines, polar_constants, rate_density, sca_lower_bound,
                                 solve_sca_subproblem, throughput_of_velocity)


def even_allocation(c, alpha_level=1.0):
    K, N = c.K, c.N
    return (np.full((K, N), alpha_level), np.full((K, N), c.Bmax / K), np.full((K, N), c.Pmax / K))


def test_centered_user_has_no_phase_term():
    c = default_config().replace(K=1, T=10.0)
    tr = UserTrack.from_positions(np.zeros((1, c.N, 2)))
    k = polar_constants(300.0, tr, *even_allocation(c), c)
    assert np.all(k.sig == 0)
    assert np.allclose(k.lam, c.H**2 + 300.0**2)


def test_user_on_the_x_axis():
    c = default_config().replace(K=1, T=10.0)
    pos = np.zeros((1, c.N, 2))
    pos[..., 0] = 250.0
    k = polar_constants(300.0, UserTrack.from_positions(pos), *even_allocation(c), c)
    assert np.allclose(k.sig, 2 * 300.0 * 250.0)
    assert np.allclose(k.lam, c.H**2 + 300.0**2 + 250.0**2)


def test_log_argument_stays_above_altitude(rng):
    c = default_config().replace(K=3, T=10.0)
    tr = UserTrack.from_positions(rng.uniform(-2e3, 2e3, (3, c.N, 2)))
    k = polar_constants(250.0, tr, *even_allocation(c), c, center=(100.0, -40.0))
    assert np.all(k.lam >= k.sig + c.H**2 - 1e-6)


def test_polar_identity_against_direct_distance(rng):
    c = default_config().replace(K=4, T=20.0)
    center = (37.0, -12.0)
    tr = UserTrack.from_positions(rng.uniform(-1500, 1500, (4, c.N, 2)))
    k = polar_constants(260.0, tr, *even_allocation(c), c, center=center)
    for _ in range(100):
        v = rng.uniform(20, 100)
        kk, n = int(rng.integers(0, 4)), int(rng.integers(0, c.N))
        q = circle_positions(center, 260.0, v, c.delta, c.N)[n]
        direct = c.H**2 + float(np.sum((q - tr.positions[kk, n]) ** 2))
        polar = k.lam[kk, n] + k.sig[kk, n] * phase_cosines(v, k)[kk, n]
        assert abs(polar - direct) <= 1e-9 * direct


@pytest.fixture(scope="module")
def scenario():
    c = default_config()
    tr = generate_tracks(c)
    plan = build_plan(tr, c)
    alpha, b, p = even_allocation(c, 1.0 / c.K)
    consts = polar_constants(plan.r_I, tr, alpha, b, p, c, plan.circle_I.center)
    return c, tr, plan, (alpha, b, p), consts


def test_polar_throughput_equals_direct_pipeline(scenario):
    c, tr, plan, (alpha, b, p), consts = scenario
    for v in plan.velocities:
        g = compute_gains(sample_trajectory(plan, v, c), tr, c)
        direct = average_throughput(alpha, b, p, g)
        assert np.allclose(throughput_of_velocity(v, consts), direct, rtol=1e-9)


def test_centered_user_throughput_ignores_speed():
    c = default_config().replace(K=1, T=10.0)
    tr = UserTrack.from_positions(np.zeros((1, c.N, 2)))
    k = polar_constants(300.0, tr, *even_allocation(c), c)
    vals = [throughput_of_velocity(v, k)[0] for v in (20.0, 55.0, 90.0)]
    assert np.allclose(vals, vals[0], rtol=1e-14)


def test_zero_weight_gives_zero_throughput(scenario):
    c, tr, plan, (alpha, b, p), _ = scenario
    k = polar_constants(plan.r_I, tr, np.zeros_like(alpha), b, p, c, plan.circle_I.center)
    assert np.all(throughput_of_velocity(plan.velocities[0], k) == 0)


def test_nonpositive_speed_is_rejected(scenario):
    with pytest.raises(ValueError):
        throughput_of_velocity(0.0, scenario[4])


def test_surrogate_bounds_rate_density_from_below(scenario, rng):
    consts = scenario[4]
    shape = consts.shape
    for _ in range(5):
        X = rng.uniform(-1, 1, shape)
        Xl = rng.uniform(-1, 1, shape)
        lb = sca_lower_bound(X, Xl, consts)
        F = rate_density(X, consts)
        assert np.all(lb <= F + 1e-12)
        assert np.allclose(sca_lower_bound(Xl, Xl, consts), rate_density(Xl, consts),
                           rtol=0, atol=1e-12)


def test_surrogate_is_exact_without_phase_term(rng):
    c = default_config().replace(K=1, T=10.0)
    tr = UserTrack.from_positions(np.zeros((1, c.N, 2)))
    k = polar_constants(300.0, tr, *even_allocation(c), c)
    X, Xl = rng.uniform(-1, 1, (2, 1, c.N))
    assert np.allclose(sca_lower_bound(X, Xl, k), rate_density(X, k), rtol=1e-12, atol=0)


def test_subproblem_solution_satisfies_box_optimality(scenario, rng):
    consts = scenario[4]
    Xl = rng.uniform(-1, 1, consts.shape)
    X = solve_sca_subproblem(Xl, consts).X
    # derivative of the surrogate in X
    d = consts.sig / ((consts.lam + consts.sig * X + consts.chi) * math.log(2)) \
        - consts.sig / ((consts.lam + consts.sig * Xl) * math.log(2))
    scale = consts.sig / (consts.lam * math.log(2))
    inner = (X > -1) & (X < 1)
    assert np.all(np.abs(d[inner]) <= 1e-9 * scale[inner])
    assert np.all(d[X == -1] <= 1e-12 * scale[X == -1])
    assert np.all(d[X == 1] >= -1e-12 * scale[X == 1])


def two_slot_constants(c, rng):
    c1 = c.replace(K=1, N=2, T=2.0)
    tr = UserTrack.from_positions(rng.uniform(-800, 800, (1, 2, 2)))
    return polar_constants(250.0, tr, *even_allocation(c1), c1)


def test_subproblem_matches_two_slot_lattice(rng):
    c = default_config()
    for _ in range(5):
        k = two_slot_constants(c, rng)
        Xl = rng.uniform(-1, 1, (1, 2))
        step = solve_sca_subproblem(Xl, k)
        grid = np.linspace(-1, 1, 2001)
        A, B = np.meshgrid(grid, grid, indexing="ij")
        X = np.stack([A.ravel(), B.ravel()], axis=1)[:, None, :]
        lb = sca_lower_bound(X, np.broadcast_to(Xl, X.shape), k)
        oracle = float(((k.theta_w * lb).mean(axis=2)).max())
        assert step.objective >= oracle * (1 - 1e-12)
        assert step.objective == pytest.approx(oracle, rel=1e-3)


def test_subproblem_reports_empty_qos_interval():
    c = default_config().replace(K=1, T=10.0, gamma_th=1e12)
    tr = UserTrack.from_positions(np.full((1, c.N, 2), 400.0))
    k = polar_constants(300.0, tr, *even_allocation(c), c)
    with pytest.raises(SCAInfeasible):
        solve_sca_subproblem(np.zeros((1, c.N)), k)


def test_sca_iterates_never_decrease(scenario):
    consts = scenario[4]
    X = phase_cosines(scenario[2].velocities[0], consts)
    prev = -np.inf
    for _ in range(10):
        step = solve_sca_subproblem(X, consts)
        exact = float((consts.theta_w * rate_density(step.X, consts)).mean(axis=1).min())
        assert exact >= prev - 1e-9 * abs(exact)
        assert exact >= step.objective - 1e-9 * abs(exact)
        prev = exact
        X = step.X


def test_single_speed_is_returned(scenario):
    c, tr, plan, _, consts = scenario
    one = dataclasses.replace(plan, feasible_velocities=plan.feasible_velocities[2:3])
    assert enumerate_velocity_oracle(one, consts, c).v == one.velocities[0]


def test_centered_users_tie_to_slowest_speed(scenario):
    c, _, plan, (alpha, b, p), _ = scenario
    tr = UserTrack.from_positions(np.zeros((c.K, c.N, 2)) + np.asarray(plan.circle_I.center))
    k = polar_constants(plan.r_I, tr, alpha, b, p, c, plan.circle_I.center)
    assert enumerate_velocity_oracle(plan, k, c).v == plan.velocities.min()


def test_four_candidates_at_sixty_seconds():
    c = default_config().replace(T=60.0)
    tr = generate_tracks(c)
    plan = build_plan(tr, c)
    plan = dataclasses.replace(plan, circle_I=dataclasses.replace(plan.circle_I, radius=200.0),
                               tangent=dataclasses.replace(plan.tangent, theta=math.pi / 2))
    from uavgroup.dubins import feasible_velocities
    plan = dataclasses.replace(plan, feasible_velocities=tuple(
        feasible_velocities(math.pi / 2, 200.0, 60.0, c.Vmin, c.Vmax)))
    alpha, b, p = even_allocation(c, 1.0 / c.K)
    consts = polar_constants(200.0, tr, alpha, b, p, c, plan.circle_I.center)
    choice = enumerate_velocity_oracle(plan, consts, c)
    assert len(choice.scores) == 4
    assert choice.v in plan.velocities.tolist()
    assert choice.eta == max(e for e, _ in choice.scores.values())


def test_optimized_speed_equals_enumeration(scenario):
    c, tr, plan, (alpha, b, p), consts = scenario
    res = optimize_trajectory(plan, alpha, b, p, tr, c)
    choice = enumerate_velocity_oracle(plan, consts, c)
    assert res.v == choice.v
    for v in plan.velocities:
        assert res.eta >= float(throughput_of_velocity(v, consts).min())
    assert np.allclose(res.samples.q, sample_trajectory(plan, res.v, c).q)


def test_optimal_incumbent_stays_put(scenario):
    c, tr, plan, (alpha, b, p), _ = scenario
    first = optimize_trajectory(plan, alpha, b, p, tr, c)
    again = optimize_trajectory(plan, alpha, b, p, tr, c, v_incumbent=first.v)
    assert again.v == first.v


def test_recovery_never_degrades_the_incumbent(scenario):
    c, tr, plan, (alpha, b, p), consts = scenario
    for v0 in plan.velocities:
        res = optimize_trajectory(plan, alpha, b, p, tr, c, v_incumbent=float(v0))
        assert res.eta >= float(throughput_of_velocity(v0, consts).min()) - 1e-12


def test_polar_and_gain_module_share_geometry(scenario):
    c, tr, plan, _, _ = scenario
    v = plan.velocities[0]
    q = sample_trajectory(plan, v, c).q
    direct = gains_from_positions(q, tr.positions, c).d ** 2
    k = polar_constants(plan.r_I, tr, *even_allocation(c), c, plan.circle_I.center)
    assert np.allclose(k.lam + k.sig * phase_cosines(v, k), direct, rtol=1e-9)
