import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crossflow.ambient import curvature_coupling, curvature_tensor, parse_space, random_adapted_frame, spectrum_h
from crossflow.lab import (
    CERTIFIED,
    EXPLORATORY,
    TrialReport,
    certify_f_bound,
    certify_identity_2001,
    certify_negative_Z,
    certify_normao2_identity,
    certify_stimaI,
    certify_two_convexity,
    explore_bound_Z,
    explore_pinched_tubes,
    merge_reports,
    overall_pass,
    run_suite,
    scan_alpha_window,
    scan_dimension_gate,
    validate_ambient,
    witness_negative_Z,
)
from crossflow.shape import mean_curvature, pinching_q


def report(claim="c", trials=1, violations=0, slack=0.0, witness=None):
    return TrialReport(claim, trials, violations, slack, 0, witness=witness)


@settings(max_examples=50)
@given(
    parts=st.lists(
        st.tuples(st.integers(1, 100), st.integers(0, 5), st.floats(-10, 10)), min_size=3, max_size=3
    )
)
def test_merge_associative(parts):
    a, b, c = (report(trials=t, violations=v, slack=s) for t, v, s in parts)
    left = merge_reports(merge_reports(a, b), c)
    right = merge_reports(a, merge_reports(b, c))
    assert left == right
    assert left.trials == sum(p[0] for p in parts)
    assert left.min_slack == min(p[2] for p in parts)


def test_merge_keeps_first_witness():
    merged = merge_reports(report(witness=None), report(witness=[1.0]))
    assert merged.witness == [1.0]
    with pytest.raises(ValueError):
        merge_reports(report("a"), report("b"))


def test_overall_pass_ignores_exploratory():
    bad = TrialReport("x", 1, 1, -1.0, 0, EXPLORATORY)
    good = TrialReport("y", 1, 0, 1.0, 0, CERTIFIED)
    assert overall_pass([bad, good])
    assert not overall_pass([good, TrialReport("z", 1, 1, -1.0, 0, CERTIFIED)])


def test_to_dict_json_safe():
    d = TrialReport("x", 1, 0, float("nan"), 3).to_dict()
    assert d["min_slack"] is None
    assert {"claim_id", "trials", "violations", "min_slack", "seed"} <= set(d)


@pytest.mark.parametrize("label", ["cp3", "hp2"])
def test_validate_ambient(label):
    reports = validate_ambient(parse_space(label), 2000, 1)
    assert all(r.passed for r in reports)


@pytest.mark.parametrize("label", ["cp4", "hp2"])
def test_stimaI_small_run(label):
    rep = certify_stimaI(parse_space(label), 3000, 5)
    assert rep.trials == 3000
    assert rep.violations == 0
    assert rep.min_slack >= -1e-9


@pytest.mark.parametrize("label", ["cp4", "hp4"])
def test_stimaI_umbilic_equality(label):
    space = parse_space(label)
    R = curvature_tensor(space)
    m = space.m
    for seed in range(3):
        frame = random_adapted_frame(space, seed, spectrum_h(np.full(m, 1.7)))
        T, _ = curvature_coupling(R, frame)
        assert abs(T) <= 1e-10


def test_certify_deterministic():
    space = parse_space("cp3")
    a = certify_stimaI(space, 2500, 9)
    b = certify_stimaI(space, 2500, 9)
    assert a == b
    c = certify_stimaI(space, 2500, 10)
    assert c.min_slack != a.min_slack


@pytest.mark.parametrize("m", [7, 15])
def test_identity_claims(m):
    assert certify_identity_2001(m, 20_000, 2).violations == 0
    assert certify_normao2_identity(m, 20_000, 2).violations == 0


@pytest.mark.parametrize("eta,sigma", [(1e-3, 0.0), (1e-1, 0.1)])
def test_f_bound_claim(eta, sigma):
    rep = certify_f_bound(7, 1e-2, eta, sigma, 20_000, 3)
    assert rep.violations == 0


def test_f_bound_needs_window():
    with pytest.raises(ValueError):
        certify_f_bound(4, 1e-2, 0.0, 0.0, 10, 0)


def test_two_convexity_claim():
    rep = certify_two_convexity(15, 1e-3, 50_000, 4)
    assert rep.violations == 0 and rep.min_slack >= -1e-10


@pytest.mark.parametrize("m", [7, 15])
def test_negative_z_witness(m):
    w = witness_negative_Z(m, 1e-2, 10_000, 0)
    assert w is not None
    assert w.Z < 0 and w.H > 0
    assert pinching_q(w.lambdas, 1e-2) < 0


def test_negative_z_zero_budget():
    assert witness_negative_Z(7, 1e-2, 0, 0) is None
    assert certify_negative_Z(7, 1e-2, 0, 0).violations == 1


def test_bound_z_table():
    rows = explore_bound_Z(7, 1e-2, 1e-2, [0.01, 1.0], 4000, 1)
    assert [r["gamma"] for r in rows] == [0.01, 1.0]
    for r in rows:
        assert np.isfinite(r["K"])
        assert r["K"] == max(r["K_low_curvature"], r["K_high_curvature"])


def test_bound_z_witness_lower_bound():
    # the hand witness alone forces K above this value
    gamma, eta = 1.0, 1e-2
    K_witness = (gamma * 0.04 * (1.24 - 0.04 / 6 - eta * 0.04) + 1.728) / (0.008 + 1)
    lam = np.array([-1.0] + [0.2] * 6)
    H = mean_curvature(lam)
    Z = H * np.sum(lam**3) - np.sum(lam**2) ** 2
    K = (gamma * H**2 * (np.sum(lam**2) - H**2 / 6 - eta * H**2) - Z) / (H**3 + 1)
    assert K == pytest.approx(K_witness, rel=1e-12)


def test_dimension_gate_scan():
    rep = scan_dimension_gate(range(2, 9), [1e-3, 1e-2, 1e-1])
    assert rep.violations == 0
    fails = {(row["field"], row["n"]) for row in rep.data if not row["pass"]}
    assert fails == {(f, n) for f in ("C", "H") for n in (2, 3)}


def test_alpha_window_scan():
    assert scan_alpha_window().violations == 0
    assert scan_alpha_window(range(4, 51)).violations == 1


def test_pinched_tubes_exploratory():
    rep = explore_pinched_tubes(parse_space("cp4"), 1e-2, grid=500)
    assert rep.tier == EXPLORATORY
    assert [row["k"] for row in rep.data] == [1, 2, 3]


def test_run_suite_small():
    grid = {"eps": [1e-2], "eta": [1e-2], "sigma": [0.0, 0.1]}
    reports = run_suite(parse_space("cp4"), grid, 2000, 11, witness_budget=2000)
    ids = [r.claim_id for r in reports]
    assert len(ids) == len(set(ids))
    assert overall_pass(reports)
    assert any(i.startswith("f_le_W_sigma") for i in ids)
    again = run_suite(parse_space("cp4"), grid, 2000, 11, witness_budget=2000)
    assert [r.to_dict() for r in reports] == [r.to_dict() for r in again]


def test_run_suite_cp3_gate_flagged():
    grid = {"eps": [1e-2], "eta": [1e-2], "sigma": [0.0]}
    reports = run_suite(parse_space("cp3"), grid, 1000, 0, witness_budget=1000)
    gate = next(r for r in reports if r.claim_id == "dimension_gate[cp3]")
    assert gate.tier == EXPLORATORY and gate.violations == 1
    assert overall_pass(reports)


def test_run_suite_rejects_empty_grid():
    with pytest.raises(ValueError):
        run_suite(parse_space("cp4"), {"eps": [], "eta": [1e-2], "sigma": [0.0]}, 10, 0)
