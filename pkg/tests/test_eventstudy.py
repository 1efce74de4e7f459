"""Abnormal-activity construction and CAA bands."""
import numpy as np
import pandas as pd
import pytest

from pmshock.errors import DataError
from pmshock.eventstudy import (
    abnormal_activity,
    aggregate_abnormal,
    compute_baselines,
    cumulative_abnormal,
    newcomer_counts,
    trader_bin_outcomes,
)
from pmshock.series import EventSpec

from conftest import T0, make_trades

EVT = EventSpec("e", T0)


def _grid():
    trades = make_trades([
        # estimation window bins -3..-1 for traders a, b (b always idle)
        {"ts": T0 - 2 * 300 - 10, "maker": "lp", "taker": "a", "value": 8.0,
         "price": 0.5},                                     # k = -2
        {"ts": T0 - 10, "maker": "lp", "taker": "a", "value": 4.0,
         "price": 0.5},                                     # k = 0
        {"ts": T0 + 10, "maker": "lp", "taker": "a", "value": 6.0,
         "price": 0.5},                                     # k = 1
        {"ts": T0 + 20, "maker": "a", "taker": "b", "value": 2.0,
         "price": 0.5},                                     # k = 1, both legs
    ])
    return trader_bin_outcomes(trades, EVT, -3, 1, traders={"a", "b"})


def test_trader_bin_outcomes_dense_grid():
    out = _grid()
    assert len(out) == 2 * 5  # 2 traders x bins -3..1
    a = out[out["trader"] == "a"].set_index("k")
    assert a.loc[-2, "V"] == 8.0 and a.loc[-2, "F"] == 1 and a.loc[-2, "D"] == 1
    assert a.loc[1, "V"] == 8.0 and a.loc[1, "F"] == 2  # 6.0 + both-legs 2.0
    assert a.loc[-3, "V"] == 0.0 and a.loc[-3, "D"] == 0
    b = out[out["trader"] == "b"].set_index("k")
    assert b.loc[1, "V"] == 2.0 and b.loc[1, "D"] == 1


def test_baselines_include_zero_bins():
    base = compute_baselines(_grid(), (-3, -1)).set_index("trader")
    # a traded 8.0 in one of three estimation bins
    assert base.loc["a", "V_bar"] == pytest.approx(8.0 / 3)
    assert base.loc["a", "F_bar"] == pytest.approx(1 / 3)
    assert base.loc["a", "D_bar"] == pytest.approx(1 / 3)
    assert base.loc["b", "V_bar"] == 0.0


def test_baselines_require_dense_grid():
    sparse = _grid().query("V > 0")
    with pytest.raises(DataError, match="not dense"):
        compute_baselines(sparse, (-3, -1))


def test_abnormal_zero_override_and_formulas():
    out = _grid()
    base = compute_baselines(out, (-3, -1))
    ab = abnormal_activity(out, base, (0, 1)).set_index(["trader", "k"])
    # AV = asinh(V) - asinh(V_bar) when V > 0, exactly 0 when V = 0
    assert ab.loc[("a", 1), "AV"] == pytest.approx(
        np.arcsinh(8.0) - np.arcsinh(8.0 / 3)
    )
    assert ab.loc[("b", 0), "AV"] == 0.0
    # AF keeps the baseline subtraction even at F = 0
    assert ab.loc[("b", 0), "AF"] == pytest.approx(np.arcsinh(0) - np.arcsinh(0.0))
    assert ab.loc[("a", 0), "AP"] == pytest.approx(1 - 1 / 3)
    assert ab.loc[("b", 0), "AP"] == pytest.approx(0.0)


def test_caa_accumulates_and_bands():
    out = _grid()
    base = compute_baselines(out, (-3, -1))
    agg = aggregate_abnormal(abnormal_activity(out, base, (0, 1)))
    caa = cumulative_abnormal(agg["participation"])
    mu = agg["participation"]["mu"]
    sd = agg["participation"]["sd"]
    assert caa.loc[1, "caa"] == pytest.approx(mu.loc[0] + mu.loc[1])
    se_expected = np.sqrt((sd.loc[0] / np.sqrt(2)) ** 2 + (sd.loc[1] / np.sqrt(2)) ** 2)
    assert caa.loc[1, "se"] == pytest.approx(se_expected)
    assert caa.loc[1, "lo95"] == pytest.approx(caa.loc[1, "caa"] - 1.96 * se_expected)


def test_caa_rejects_empty_cross_section():
    agg = pd.DataFrame({"mu": [0.1], "sd": [0.0], "n": [0]}, index=[0])
    with pytest.raises(DataError, match="empty cross-section"):
        cumulative_abnormal(agg)


def test_newcomer_counts_first_trade_global():
    trades = make_trades([
        {"ts": T0 - 5000, "maker": "lp", "taker": "old"},
        {"ts": T0 + 10, "maker": "lp", "taker": "old"},   # not a newcomer
        {"ts": T0 + 20, "maker": "lp", "taker": "fresh"},  # newcomer at k=1
        {"ts": T0 + 320, "maker": "lp2", "taker": "fresh"},
    ])
    counts = newcomer_counts(trades, EVT, 0, 2, exclude={"lp", "lp2"})
    by_k = counts.set_index("k")["newcomers"]
    assert by_k.loc[1] == 1 and by_k.loc[0] == 0 and by_k.loc[2] == 0
