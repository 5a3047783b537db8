from __future__ import annotations

import math
import random

import pytest

from spot_eval.timeliness import DEFAULT_EPSILON, is_temporally_valid, timeliness_score

from oracle import ref_tscore

INTERVAL = (97.5, 102.5)


def test_inside_interval_scores_exactly_one() -> None:
    assert timeliness_score(101.0, *INTERVAL, 5.0, 2.5) == 1.0
    assert timeliness_score(97.5, *INTERVAL, 5.0, 2.5) == 1.0
    assert timeliness_score(102.5, *INTERVAL, 5.0, 2.5) == 1.0


def test_late_branch_spot_value() -> None:
    # exp(-(1.0)^2 / (2 * 2.5^2)) = exp(-0.08)
    got = timeliness_score(103.5, *INTERVAL, 5.0, 2.5)
    assert got == pytest.approx(math.exp(-0.08), abs=1e-12)
    assert got == pytest.approx(0.923116, abs=1e-6)


def test_early_branch_spot_value() -> None:
    # exp(-1 / (2 * 25)) = exp(-0.02)
    got = timeliness_score(96.5, *INTERVAL, 5.0, 2.5)
    assert got == pytest.approx(math.exp(-0.02), abs=1e-12)
    assert got == pytest.approx(0.980199, abs=1e-6)


def test_continuity_at_interval_edges() -> None:
    for edge in INTERVAL:
        for delta in (1e-9, 1e-12):
            assert timeliness_score(edge - delta, *INTERVAL, 5.0, 2.5) == pytest.approx(
                1.0, abs=1e-12
            )
            assert timeliness_score(edge + delta, *INTERVAL, 5.0, 2.5) == pytest.approx(
                1.0, abs=1e-12
            )


def test_monotone_rise_before_and_fall_after() -> None:
    taus_before = [80.0, 85.0, 90.0, 95.0, 97.0]
    scores = [timeliness_score(t, *INTERVAL, 5.0, 2.5) for t in taus_before]
    assert scores == sorted(scores)
    taus_after = [103.0, 105.0, 110.0, 120.0]
    scores = [timeliness_score(t, *INTERVAL, 5.0, 2.5) for t in taus_after]
    assert scores == sorted(scores, reverse=True)


def test_early_beats_late_at_equal_distance() -> None:
    rng = random.Random(7)
    for _ in range(100):
        sigma_late = rng.uniform(0.5, 5.0)
        sigma_early = sigma_late * rng.uniform(1.01, 4.0)
        # keep the late tail clear of float underflow: distances stay < 11 sigma
        delta = rng.uniform(1e-3, 10.0 * sigma_late)
        early = timeliness_score(INTERVAL[0] - delta, *INTERVAL, sigma_early, sigma_late)
        late = timeliness_score(INTERVAL[1] + delta, *INTERVAL, sigma_early, sigma_late)
        assert early > late


def test_scores_stay_in_unit_interval_and_match_reference() -> None:
    # strictly positive mathematically; the far tails may underflow to 0.0
    rng = random.Random(11)
    for _ in range(200):
        tau = rng.uniform(-100.0, 200.0)
        got = timeliness_score(tau, *INTERVAL, 5.0, 2.5)
        assert 0.0 <= got <= 1.0
        assert got == ref_tscore(tau, *INTERVAL, 5.0, 2.5)


def test_invalid_arguments_are_rejected() -> None:
    with pytest.raises(ValueError):
        timeliness_score(1.0, 5.0, 4.0, 2.0, 1.0)
    with pytest.raises(ValueError):
        timeliness_score(1.0, 0.0, 1.0, 1.0, 2.0)  # early must exceed late
    with pytest.raises(ValueError):
        timeliness_score(1.0, 0.0, 1.0, 1.0, 0.0)


def test_validity_gate() -> None:
    assert not is_temporally_valid(0.0)
    assert is_temporally_valid(1.0)
    # tau = t_e + 4 * sigma_late -> exp(-8), still above the default epsilon
    score = timeliness_score(INTERVAL[1] + 4 * 2.5, *INTERVAL, 5.0, 2.5)
    assert score == pytest.approx(math.exp(-8.0), rel=1e-12)
    assert is_temporally_valid(score, DEFAULT_EPSILON)
    assert not is_temporally_valid(DEFAULT_EPSILON, DEFAULT_EPSILON)
