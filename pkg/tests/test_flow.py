import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crossflow.ambient import curvature_tensor, parse_space, tangential_coupling_batch
from crossflow.flow import (
    FlowIntegrationError,
    StopPolicy,
    Termination,
    central_difference,
    comparison_lower_bound,
    evolution_residuals,
    evolve,
    monitor_report,
)
from crossflow.profiles import frame_diagonal, geodesic_sphere, hopf_frame, log_volume_profile, tube
from crossflow.shape import PinchingParams

CP4 = parse_space("cp4")
T_EXACT = math.log(7 / 3) / 16


@pytest.fixture(scope="module")
def sphere_traj():
    return evolve(geodesic_sphere(CP4), math.pi / 4)


@pytest.fixture(scope="module")
def tube_traj():
    return evolve(tube(CP4, 1), math.pi / 4)


def test_comparison_examples():
    assert comparison_lower_bound(6.0, 7, 0.0) == 6.0
    assert comparison_lower_bound(6.0, 7, 7 / 144) == pytest.approx(6 * math.sqrt(2), rel=1e-14)
    with pytest.raises(ValueError):
        comparison_lower_bound(6.0, 7, 7 / 72)
    with pytest.raises(ValueError):
        comparison_lower_bound(0.0, 7, 0.0)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_central_difference_exact_on_quadratics(seed):
    rng = np.random.default_rng(seed)
    t = np.cumsum(rng.uniform(0.01, 1.0, 20))
    a, b, c = rng.standard_normal(3)
    d = central_difference(t, a * t * t + b * t + c)
    assert np.allclose(d, 2 * a * t[1:-1] + b, rtol=1e-9, atol=1e-9)


def test_sphere_sample_order(sphere_traj):
    tr = sphere_traj
    assert np.all(np.diff(tr.t) > 0)
    assert np.all(np.diff(tr.r) < 0)
    assert np.all(tr.H > 0)
    assert tr.termination is Termination.CURVATURE_CAP
    assert tr.H[-1] >= 1e6


def test_sphere_matches_exact_radius(sphere_traj):
    # dr/dt = -(7 cot r - tan r) integrates to cos^2 r = (3 e^{16 t} + 1) / 8
    tr = sphere_traj
    exact = np.arccos(np.sqrt((3 * np.exp(16 * tr.t) + 1) / 8))
    assert np.max(np.abs(tr.r - exact)) < 1e-9


def test_sphere_singular_time(sphere_traj):
    assert sphere_traj.t_singular_estimate == pytest.approx(T_EXACT, abs=1e-9)
    assert sphere_traj.t_singular_estimate <= 7 / 72 + 1e-8


def test_sphere_comparison(sphere_traj):
    tr = sphere_traj
    lower = comparison_lower_bound(tr.H[0], tr.m, tr.t)
    assert np.all(tr.H - lower >= -1e-8)


def test_sphere_pinching_preserved(sphere_traj):
    mon = monitor_report(sphere_traj)
    assert mon.Q0 < 0
    assert mon.max_Q <= 1e-10
    assert mon.pinching_preserved


def test_sphere_convex_limit(sphere_traj):
    tr = sphere_traj
    late = tr.H >= 1e3
    assert np.all(np.abs(tr.normA2[late] / tr.H[late] ** 2 - 1 / 7) <= 1e-3)


def test_log_volume_against_profile(sphere_traj):
    tr = sphere_traj
    fam = tr.family
    closed = log_volume_profile(fam, tr.r, check=False) - log_volume_profile(fam, tr.r[0])
    assert np.max(np.abs(tr.log_volume - closed)) < 1e-7


@pytest.mark.parametrize("which", ["sphere_traj", "tube_traj"])
def test_residuals(which, request):
    tr = request.getfixturevalue(which)
    res = evolution_residuals(tr, curvature_tensor(CP4))
    assert res.resH <= 1e-6
    assert res.resA2 <= 1e-6
    assert res.resVol <= 1e-6
    assert res.grad_norm_sq == pytest.approx(12.0)
    assert res.simons <= 1e-12


def test_parallel_second_fundamental_form_would_fail(sphere_traj):
    # dropping the |nabla A|^2 term leaves a mismatch of order one
    tr = sphere_traj
    R = curvature_tensor(CP4)
    frame = hopf_frame(tr.family, tr.r[0])
    diag = frame_diagonal(tr.family, tr.r[1:-1])
    E = np.broadcast_to(frame.tangent.T, (diag.shape[0],) + frame.tangent.T.shape)
    T = tangential_coupling_batch(R, E, diag[:, :, None] * np.eye(7))
    A2 = tr.normA2[1:-1]
    d = central_difference(tr.t, tr.normA2)
    naive = np.abs(d - (2 * A2 * (A2 + 10) - 4 * T)) / (1 + np.abs(d))
    assert naive[0] > 0.1


def test_residuals_need_matching_space(sphere_traj):
    with pytest.raises(ValueError):
        evolution_residuals(sphere_traj, curvature_tensor(parse_space("hp4")))


def test_hp4_sphere_residuals():
    tr = evolve(geodesic_sphere(parse_space("hp4")), math.pi / 4)
    res = evolution_residuals(tr, curvature_tensor(parse_space("hp4")))
    assert max(res.resH, res.resA2, res.resVol) <= 1e-6
    assert res.grad_norm_sq == pytest.approx(72.0)
    assert monitor_report(tr).max_Q <= 1e-10


def test_step_halving_is_second_order():
    fam = geodesic_sphere(CP4)
    R = curvature_tensor(CP4)
    coarse = evolution_residuals(evolve(fam, math.pi / 4, stop=StopPolicy(step_fraction=4e-4)), R)
    fine = evolution_residuals(evolve(fam, math.pi / 4, stop=StopPolicy(step_fraction=2e-4)), R)
    order = math.log2(coarse.resH / fine.resH)
    assert 1.9 <= order <= 2.1


@pytest.mark.xfail(strict=True, reason="second-order differencing gives a ratio just under 4; see README")
def test_step_halving_at_least_four():
    fam = geodesic_sphere(CP4)
    R = curvature_tensor(CP4)
    coarse = evolution_residuals(evolve(fam, math.pi / 4, stop=StopPolicy(step_fraction=4e-4)), R)
    fine = evolution_residuals(evolve(fam, math.pi / 4, stop=StopPolicy(step_fraction=2e-4)), R)
    assert coarse.resH / fine.resH >= 4.0


def test_tube_cylindrical_monitor(tube_traj):
    mon = monitor_report(tube_traj)
    assert mon.final_H >= 1e3
    assert mon.lambda1_ratio[-1] <= 1e-3
    assert mon.gap_ratio_above_lowest_class[-1] <= 1e-4
    # lambda_2 sits in the repeated lowest class, so the literal gap tends to 1/25
    assert mon.gap_ratio[-1] == pytest.approx(1 / 25, rel=1e-6)


def test_tube_not_pinched_start(tube_traj):
    mon = monitor_report(tube_traj)
    assert mon.Q0 > 0
    assert mon.pinching_preserved


def test_stop_policies():
    fam = geodesic_sphere(CP4)
    tr = evolve(fam, math.pi / 4, stop=StopPolicy(time_cap=0.01))
    assert tr.termination is Termination.TIME_CAP
    assert tr.t[-1] == pytest.approx(0.01)
    tr = evolve(fam, math.pi / 4, stop=StopPolicy(radius_floor=0.1))
    assert tr.termination is Termination.RADIUS_FLOOR
    assert tr.r[-1] <= 0.1


def test_rejects_nonpositive_start():
    fam = tube(CP4, 3)
    with pytest.raises(ValueError):
        evolve(fam, 1.2)
    with pytest.raises(ValueError):
        evolve(geodesic_sphere(CP4), 2.0)


def test_params_recorded():
    params = PinchingParams(7, epsilon=0.1, eta=0.1, sigma=0.1)
    tr = evolve(geodesic_sphere(CP4), 1.0, params, StopPolicy(curvature_cap=1e3))
    assert tr.params is params
    assert set(tr.columns()) == {
        "t", "r", "H", "normA2", "normAo2", "Z", "Q", "f_sigma_eta",
        "lambda1", "lambda1_plus_lambda2", "gap_ratio", "log_volume",
    }
    assert np.all(tr.f_sigma_eta <= (params.alpha * tr.H**2 + params.beta) ** params.sigma + 1e-10)


def test_integration_error_type():
    assert issubclass(FlowIntegrationError, RuntimeError)
