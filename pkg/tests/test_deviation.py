"""Indicator matrix construction, summaries, histogram, CSV round-trips."""

from datetime import date, datetime, timezone

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ntlscan.deviation import (
    DailyVoltageStats,
    INDICATORS,
    IndicatorMatrix,
    compute_indicators,
    daily_stats_measured,
    daily_stats_simulated,
    histogram,
    layer_from_csv,
    layer_to_csv,
    matrix_from_csv_layers,
    matrix_to_document,
    summary_statistics,
)
from ntlscan.ingest import MeterSeries, VoltageReading
from ntlscan.powerflow import VoltageSolution

UTC = timezone.utc
D1, D2 = date(2021, 1, 1), date(2021, 1, 2)


def _stat(meter, day, v_min, v_mean, v_max, source):
    return DailyVoltageStats(meter, day, v_min, v_mean, v_max, 24, source)


def _sim(meter, day, v_min, v_mean, v_max):
    return {(meter, day): _stat(meter, day, v_min, v_mean, v_max, "simulated")}


def _meas(meter, day, v_min, v_mean, v_max):
    return {(meter, day): _stat(meter, day, v_min, v_mean, v_max, "measured")}


def test_indicators_are_sim_minus_meas():
    sim = _sim("m1", D1, 0.95, 0.98, 1.00)
    meas = _meas("m1", D1, 0.94, 0.97, 1.01)
    matrix = compute_indicators(sim, meas)
    assert matrix.layers["dv_min"][0, 0] == pytest.approx(0.01)
    assert matrix.layers["dv_mean"][0, 0] == pytest.approx(0.01)
    assert matrix.layers["dv_max"][0, 0] == pytest.approx(-0.01)


def test_cells_require_both_sides():
    sim = {**_sim("m1", D1, 0.95, 0.98, 1.0), **_sim("m1", D2, 0.95, 0.98, 1.0)}
    meas = _meas("m1", D2, 0.94, 0.97, 1.0)
    matrix = compute_indicators(sim, meas)
    assert np.isnan(matrix.layers["dv_min"][0, 0])
    assert not np.isnan(matrix.layers["dv_min"][0, 1])
    assert matrix.present_count("dv_min") == 1


def test_day_axis_is_contiguous_even_with_gaps():
    sim = {**_sim("m1", D1, 0.95, 0.98, 1.0), **_sim("m1", date(2021, 1, 5), 0.9, 0.95, 1.0)}
    meas = {**_meas("m1", D1, 0.95, 0.98, 1.0), **_meas("m1", date(2021, 1, 5), 0.9, 0.95, 1.0)}
    matrix = compute_indicators(sim, meas)
    assert len(matrix.days) == 5  # Jan 1 through Jan 5 inclusive
    assert matrix.days[0] == D1 and matrix.days[-1] == date(2021, 1, 5)


def test_meter_axis_can_be_pinned():
    sim = _sim("m2", D1, 0.95, 0.98, 1.0)
    meas = _meas("m2", D1, 0.95, 0.98, 1.0)
    matrix = compute_indicators(sim, meas, meters=["m1", "m2", "m3"])
    assert matrix.meters == ["m1", "m2", "m3"]
    assert np.isnan(matrix.layers["dv_min"][0, 0])
    assert matrix.layers["dv_min"][1, 0] == 0.0


def test_matrix_shape_validation():
    with pytest.raises(ValueError, match="shape"):
        IndicatorMatrix(["m1"], [D1, D2], {"dv_min": np.zeros((1, 3))})


def test_antisymmetry_under_side_swap():
    rng = np.random.default_rng(5)
    sim, meas = {}, {}
    for i in range(4):
        day = date(2021, 1, 1 + i)
        a = sorted(rng.uniform(0.9, 1.05, 3))
        b = sorted(rng.uniform(0.9, 1.05, 3))
        sim.update(_sim("m1", day, *a))
        meas.update(_meas("m1", day, *b))
    fwd = compute_indicators(sim, meas)
    rev = compute_indicators(meas, sim)
    for name in INDICATORS:
        assert np.allclose(fwd.layers[name], -rev.layers[name], equal_nan=True)


def test_daily_stats_simulated_skips_nonconverged_hours(chain_network_pu):
    mk = lambda h, conv, v: VoltageSolution(
        timestamp=datetime(2021, 1, 1, h, tzinfo=UTC),
        voltages={"slack": (1.0,) * 3, "a": (v,) * 3, "b": (v,) * 3, "c": (v,) * 3},
        iterations=3,
        converged=conv,
        max_mismatch=0.0,
    )
    sols = [mk(0, True, 0.98), mk(1, False, 0.5), mk(2, True, 0.96)]
    stats = daily_stats_simulated(sols, chain_network_pu)
    s = stats[("m_b", D1)]
    assert (s.v_min, s.v_max, s.sample_count) == (0.96, 0.98, 2)


def test_daily_stats_measured_enforces_min_samples():
    readings = [
        VoltageReading("m1", datetime(2021, 1, 1, h, tzinfo=UTC), 230.0 * (1 - 0.01 * h))
        for h in range(3)
    ]
    series = MeterSeries("m1", voltage=readings)
    assert daily_stats_measured(series, min_samples=4) == {}
    stats = daily_stats_measured(series, min_samples=3)
    s = stats[("m1", D1)]
    assert s.v_max == pytest.approx(1.0)
    assert s.v_min == pytest.approx(0.98)
    assert s.sample_count == 3


def test_measured_stats_normalize_by_nominal_voltage():
    readings = [
        VoltageReading("m1", datetime(2021, 1, 1, h, tzinfo=UTC), 120.0) for h in range(4)
    ]
    stats = daily_stats_measured(MeterSeries("m1", voltage=readings), nominal_voltage=120.0)
    assert stats[("m1", D1)].v_mean == pytest.approx(1.0)


def test_summary_uses_population_std():
    layer = np.array([[0.0, 0.02, np.nan, -0.02]])
    matrix = IndicatorMatrix(
        ["m1"], [date(2021, 1, 1 + i) for i in range(4)],
        {n: layer.copy() for n in INDICATORS},
    )
    summary = summary_statistics(matrix)
    s = summary.per_indicator["dv_min"]
    assert s.count == 3
    assert s.average == pytest.approx(0.0)
    assert s.std == pytest.approx(np.std([0.0, 0.02, -0.02]))  # ddof=0


def test_histogram_bins_align_to_multiples_of_width():
    layer = np.array([[0.004, 0.005, -0.0125, np.nan]])
    matrix = IndicatorMatrix(
        ["m1"], [date(2021, 1, 1 + i) for i in range(4)],
        {n: layer.copy() for n in INDICATORS},
    )
    h = histogram(matrix, "dv_min", bin_width=0.005)
    assert h.counts.sum() == 3
    assert h.edges[0] == pytest.approx(-0.015)
    # 0.005 sits exactly on an edge and belongs to the upper bin
    upper = np.searchsorted(h.edges, 0.005, side="right") - 1
    assert h.counts[upper] == 1


def test_layer_csv_round_trip_is_lossless():
    rng = np.random.default_rng(17)
    values = rng.standard_normal((3, 5)) * 0.037
    values[1, 2] = np.nan
    values[2, 0] = np.nan
    matrix = IndicatorMatrix(
        ["m1", "m2", "m3"],
        [date(2021, 2, 1 + i) for i in range(5)],
        {n: values.copy() for n in INDICATORS},
    )
    doc = layer_to_csv(matrix, "dv_min")
    meters, days, restored = layer_from_csv(doc)
    assert meters == matrix.meters and days == matrix.days
    assert np.array_equal(restored, values, equal_nan=True)  # bit-exact

    rebuilt = matrix_from_csv_layers({n: layer_to_csv(matrix, n) for n in INDICATORS})
    for n in INDICATORS:
        assert np.array_equal(rebuilt.layers[n], values, equal_nan=True)


def test_csv_layers_must_agree_on_axes():
    m1 = IndicatorMatrix(["m1"], [D1], {n: np.zeros((1, 1)) for n in INDICATORS})
    m2 = IndicatorMatrix(["m2"], [D1], {n: np.zeros((1, 1)) for n in INDICATORS})
    docs = {n: layer_to_csv(m1, n) for n in INDICATORS}
    docs["dv_max"] = layer_to_csv(m2, "dv_max")
    with pytest.raises(ValueError, match="disagree"):
        matrix_from_csv_layers(docs)


def test_matrix_document_uses_null_for_missing():
    layer = np.array([[0.01, np.nan]])
    matrix = IndicatorMatrix(["m1"], [D1, D2], {n: layer.copy() for n in INDICATORS})
    doc = matrix_to_document(matrix)
    assert doc["layers"]["dv_min"][0] == [0.01, None]
    assert doc["days"] == ["2021-01-01", "2021-01-02"]


@settings(max_examples=30, deadline=None)
@given(
    values=arrays(
        np.float64,
        (2, 4),
        elements=st.floats(-0.5, 0.5, allow_nan=False) | st.just(np.nan),
    )
)
def test_csv_round_trip_property(values):
    matrix = IndicatorMatrix(
        ["a", "b"],
        [date(2021, 3, 1 + i) for i in range(4)],
        {n: values.copy() for n in INDICATORS},
    )
    _, _, restored = layer_from_csv(layer_to_csv(matrix, "dv_mean"))
    assert np.array_equal(restored, values, equal_nan=True)
