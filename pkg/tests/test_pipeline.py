import math

import numpy as np
import pytest

from percept.datagen import Scenario, generate_scenario
from percept.pipeline import (Calibration, ConfigError, FiltrationConfig, PartitionConfig, WeightsConfig, calibrate,
                              compute_diagrams, detect)


@pytest.fixture(scope="module")
def diagrams():
    sc = Scenario.shape_change(T=80, t_star=40, n_points=30, seed=1)
    return compute_diagrams(generate_scenario(sc), FiltrationConfig())


def test_filtration_validation():
    with pytest.raises(ConfigError):
        FiltrationConfig(kind="cubical")
    with pytest.raises(ConfigError):
        FiltrationConfig(max_dim=3)
    with pytest.raises(ConfigError):
        FiltrationConfig(essential="keep")
    assert FiltrationConfig(max_dim=0).homology_dims == (0,)


def test_timeseries_windowing():
    t = np.arange(50)
    series = np.column_stack([np.sin(t / 3), np.cos(t / 3)])
    ds = compute_diagrams(series, FiltrationConfig(window=10, max_radius=math.inf))
    assert len(ds) == 41


def test_histogram_partition_has_requested_bins(diagrams):
    cal = calibrate(diagrams[:30], diagrams[50:], PartitionConfig(kind="histogram", bins=10), WeightsConfig(),
                    threshold=1.0)
    assert cal.partition.n_bins == 20  # ten per homology dimension
    assert all(b.size == 10 for b in cal.partition.breakpoints.values())
    np.testing.assert_array_equal(cal.detector.weights, np.ones(20))


def test_voronoi_needs_post_data(diagrams):
    with pytest.raises(ConfigError):
        calibrate(diagrams[:30], [], PartitionConfig(), WeightsConfig(), threshold=1.0)


def test_file_weights_length_checked(diagrams):
    with pytest.raises(ConfigError):
        calibrate(diagrams[:30], diagrams[50:], PartitionConfig(kind="histogram", bins=3),
                  WeightsConfig(source="file", values=(1.0, 1.0)), threshold=1.0)


def test_threshold_or_target_required(diagrams):
    with pytest.raises(ConfigError):
        calibrate(diagrams[:30], diagrams[50:], PartitionConfig(kind="histogram", bins=3), WeightsConfig(),
                  target_arl=None)


def test_calibration_round_trip(diagrams, tmp_path):
    cal = calibrate(diagrams[:30], diagrams[50:], PartitionConfig(k_pre=3, k_post=3), WeightsConfig(source="optimize"),
                    target_arl=200, m0=5, m1=15, n_sequences=50, seed=2)
    cal.save(tmp_path / "c.json")
    back = Calibration.load(tmp_path / "c.json")
    assert back.to_dict() == cal.to_dict()
    t1, t2 = detect(diagrams, cal), detect(diagrams, back)
    np.testing.assert_array_equal(t1.chi_max, t2.chi_max)


def test_calibration_deterministic(diagrams):
    args = (diagrams[:30], diagrams[50:], PartitionConfig(kind="histogram", bins=4), WeightsConfig())
    a = calibrate(*args, target_arl=200, m0=5, m1=15, n_sequences=50, seed=4)
    b = calibrate(*args, target_arl=200, m0=5, m1=15, n_sequences=50, seed=4)
    assert a.to_dict() == b.to_dict()


def test_infinite_threshold_never_alarms(diagrams):
    cal = calibrate(diagrams[:30], diagrams[50:], PartitionConfig(kind="histogram", bins=4), WeightsConfig(),
                    threshold=math.inf, m0=5, m1=15)
    trace = detect(diagrams, cal)
    assert trace.stopping_time is None
    assert np.isfinite(trace.chi_max[-1])


def test_bin_count_selection_needs_post(diagrams):
    with pytest.raises(ConfigError):
        calibrate(diagrams[:30], [], PartitionConfig(kind="histogram"),
                  WeightsConfig(source="optimize", candidates=(2, 4)), threshold=1.0)
