import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsqkd import (
    BobEveJoint,
    binary_entropy,
    build_reduced,
    evaluate_point,
    find_threshold,
    ibe_bound,
    mutual_info_ab,
    report_for,
    solve,
    verify_guessing_bound,
    werner_correlations,
)
from nsqkd.exceptions import NoSignChange
from nsqkd.keyrate import LOCAL_BOUNDARY, KeyRateReport
from nsqkd.protocol import CorrelationTable, ProtocolConfig
from nsqkd.testkit import perfect_copy_joint, product_joint, random_bob_eve_joint


def brute_mi(joint):
    """Mutual information summed term by term from the definition."""
    joint = np.asarray(joint)
    pa, pb = joint.sum(axis=1), joint.sum(axis=0)
    return sum(
        joint[i, j] * math.log2(joint[i, j] / (pa[i] * pb[j]))
        for i in range(joint.shape[0])
        for j in range(joint.shape[1])
        if joint[i, j] > 0
    )


def test_binary_entropy_values():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0 == binary_entropy(1.0)
    assert binary_entropy((1 - 0.9038) / 2) == pytest.approx(0.27826, abs=5e-5)
    with pytest.raises(ValueError):
        binary_entropy(1.5)


@given(st.floats(0, 1))
def test_binary_entropy_symmetric(q):
    assert binary_entropy(q) == pytest.approx(binary_entropy(1 - q), abs=1e-12)
    assert 0 <= binary_entropy(q) <= 1


def test_mutual_info_examples():
    assert mutual_info_ab(werner_correlations(1.0)) == pytest.approx(1.0, abs=1e-15)
    assert mutual_info_ab(werner_correlations(0.0)) == pytest.approx(0.0, abs=1e-15)
    assert mutual_info_ab(werner_correlations(0.9038)) == pytest.approx(0.7217, abs=1e-4)


@given(st.floats(0, 1))
@settings(max_examples=100)
def test_mutual_info_werner_closed_form(p):
    t = werner_correlations(p)
    assert mutual_info_ab(t) == pytest.approx(1 - binary_entropy((1 - p) / 2), abs=1e-12)
    assert mutual_info_ab(t) == pytest.approx(brute_mi(t.probs[0, 0]), abs=1e-12)


def test_ibe_bound():
    assert ibe_bound(1.0) == 1.0
    assert ibe_bound(0.5) == 0.0
    assert ibe_bound((3 - math.sqrt(2)) / 2) == pytest.approx(2 - math.sqrt(2), abs=1e-15)
    assert ibe_bound((3 - math.sqrt(2)) / 2) == pytest.approx(0.586, abs=5e-4)
    with pytest.raises(ValueError):
        ibe_bound(0.4)
    with pytest.raises(ValueError):
        ibe_bound(1.1)


def test_guessing_bound_product_joint():
    chk = verify_guessing_bound(product_joint([0.2, 0.3, 0.5]))
    assert chk.i_be == pytest.approx(0, abs=1e-15) and chk.p_e == pytest.approx(0.5) and chk.holds
    assert chk.slack == pytest.approx(0, abs=1e-15)


def test_guessing_bound_perfect_copy():
    chk = verify_guessing_bound(perfect_copy_joint())
    assert chk.i_be == 1.0 and chk.p_e == 1.0 and chk.slack == 0.0


def test_guessing_bound_matches_definition(rng):
    for seed in range(200):
        j = random_bob_eve_joint(int(rng.integers(1, 7)), seed=seed)
        chk = verify_guessing_bound(j)
        assert chk.i_be == pytest.approx(brute_mi(j.R), abs=1e-12)
        cond = j.R / j.eve_marginal
        assert chk.p_e == pytest.approx(sum(j.eve_marginal * cond.max(axis=0)), abs=1e-12)


def test_guessing_bound_requires_uniform_bob():
    with pytest.raises(ValueError, match="uniform"):
        verify_guessing_bound(BobEveJoint([[0.6, 0.1], [0.1, 0.2]]))


def test_guessing_bound_many_random_joints():
    for seed in range(10_000):
        chk = verify_guessing_bound(random_bob_eve_joint(2 + seed % 5, seed=seed))
        assert chk.holds, f"seed={seed}"


@pytest.mark.parametrize("p", [0.0, 0.5, 0.7])
def test_local_region_report(p):
    rep = evaluate_point(p)
    assert rep.guessing_prob == pytest.approx(1.0, abs=1e-12)
    assert rep.I_BE_bound == pytest.approx(1.0, abs=1e-12)
    assert rep.K == 0.0


def test_noiseless_report():
    rep = evaluate_point(1.0)
    assert rep.K == pytest.approx(math.sqrt(2) - 1, abs=1e-12)
    assert rep.K == pytest.approx(0.414, abs=5e-4)
    assert rep.certificate_gap is not None and abs(rep.certificate_gap) <= 1e-8


def test_report_near_threshold():
    assert abs(evaluate_point(0.9038).K_raw) <= 1e-3


def test_report_echoes_config_without_using_it():
    t = werner_correlations(0.95)
    sol = solve(build_reduced(t))
    a = report_for(0.95, t, sol)
    b = report_for(0.95, t, sol, config=ProtocolConfig(q=0.9, q_prime=0.7))
    assert b.q == 0.9 and b.q_prime == 0.7
    assert a.row() == b.row()


def test_report_check_catches_bad_record():
    bad = KeyRateReport(p=1, guessing_prob=0.8, I_AB=1, I_BE_bound=0.5, K_raw=0.5, K=0.5)
    with pytest.raises(ValueError, match="2 P_E - 1"):
        bad.check()


def test_find_threshold():
    res = find_threshold(tol=1e-6)
    assert res.width <= 1e-6
    assert res.p_star == pytest.approx(0.9038, abs=5e-4)
    assert evaluate_point(res.lo).K_raw < 0 <= evaluate_point(res.hi).K_raw


def test_threshold_matches_closed_form_root():
    # K_raw = sqrt2 p - 1 - H((1-p)/2) on [1/sqrt2, 1]; bisect it without any LP.
    f = lambda p: math.sqrt(2) * p - 1 - binary_entropy((1 - p) / 2)
    lo, hi = LOCAL_BOUNDARY, 1.0
    for _ in range(60):
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if f(mid) < 0 else (lo, mid)
    assert find_threshold(tol=1e-9).p_star == pytest.approx(lo, abs=1e-8)


def test_threshold_bracket_ends():
    assert evaluate_point(LOCAL_BOUNDARY).K_raw < 0
    assert evaluate_point(1.0).K_raw > 0


def test_threshold_no_sign_change():
    with pytest.raises(NoSignChange):
        find_threshold(bracket=(0.95, 1.0))
    with pytest.raises(ValueError):
        find_threshold(tol=0)


def test_threshold_for_ingested_model():
    t = CorrelationTable(werner_correlations(1.0).probs)
    res = find_threshold(model=t.mix_with_noise, tol=1e-6)
    assert res.p_star == pytest.approx(find_threshold(tol=1e-6).p_star, abs=1e-9)


def test_grid_invariants():
    reps = [evaluate_point(p) for p in np.linspace(0, 1, 1001)]
    for r in reps:
        r.check()
        assert 0.5 <= r.guessing_prob <= 1
        assert r.guessing_prob == pytest.approx(min(1, 1.5 - r.p / math.sqrt(2)), abs=1e-6)
        if r.p <= LOCAL_BOUNDARY:
            assert r.K == 0.0
    k = np.array([r.K_raw for r in reps])
    assert np.max(np.abs(np.diff(k))) <= 10 * 1e-3
