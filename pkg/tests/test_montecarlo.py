import math

import numpy as np
import pytest

from percept.montecarlo import (CalibrationError, calibration_length, censored_exponential_arl, first_crossing,
                                threshold_grid)


def test_calibration_length_clips():
    assert calibration_length(50) == 100
    assert calibration_length(501) == 251
    assert calibration_length(10_000) == 500


def test_first_crossing_and_censoring():
    stats = np.array([[0.0, 2.0, 3.0], [0.0, 0.0, 0.5], [5.0, 0.0, 0.0]])
    first, cens = first_crossing(stats, 1.0)
    assert first.tolist() == [2, 3, 1]
    assert cens.tolist() == [False, True, False]


def test_threshold_grid_range():
    maxima = np.arange(1.0, 1001.0)
    g = threshold_grid(maxima)
    assert g.size == 60
    assert g[0] == pytest.approx(np.percentile(maxima, 50))
    assert g[-1] == pytest.approx(np.percentile(maxima, 99.9))
    assert np.all(np.diff(np.log(g)) == pytest.approx(np.diff(np.log(g))[0]))


def test_threshold_grid_needs_finite_maxima():
    with pytest.raises(CalibrationError):
        threshold_grid([-np.inf, np.nan])


def test_censored_exponential_recovers_mean():
    rng = np.random.default_rng(0)
    true = rng.exponential(300.0, 20_000)
    cap = 400.0
    lengths, cens = np.minimum(true, cap), true > cap
    assert censored_exponential_arl(lengths, cens) == pytest.approx(300.0, rel=0.03)


def test_censored_exponential_without_alarms_is_infinite():
    assert censored_exponential_arl([10, 10], [True, True]) == math.inf
    assert censored_exponential_arl([3, 5], [False, False]) == 4.0
