"""Binning conventions, tick signing, VWAP series, price-response summary."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmshock.errors import DataError, ValidationError
from pmshock.series import (
    BIN_WIDTH,
    EventSpec,
    bin_index,
    build_bin_series,
    classify_ticks,
    last_price_before,
    price_response_summary,
)

from conftest import T0, make_trades

EVT = EventSpec("e", T0)


def test_bin_index_ceiling_convention():
    # bin k covers ((k-1)*w, k*w]: the event instant closes bin 0
    assert bin_index(T0, T0) == 0
    assert bin_index(T0 - 299, T0) == 0
    assert bin_index(T0 - 300, T0) == -1  # right edge of the previous bin
    assert bin_index(T0 - 600, T0) == -2
    assert bin_index(T0 + 1, T0) == 1
    assert bin_index(T0 + 300, T0) == 1
    assert bin_index(T0 + 301, T0) == 2


@settings(max_examples=100, deadline=None)
@given(st.integers(-10**6, 10**6))
def test_bin_index_matches_math_ceil(tau):
    import math

    assert bin_index(T0 + tau, T0) == math.ceil(tau / BIN_WIDTH)


def test_event_spec_windows():
    ev = EventSpec("e", T0, trading_window=(1800, 1800),
                   price_window=(7200, 14400), estimation_window=10800)
    ev.validate()
    assert ev.trading_bins() == (-5, 6)
    assert ev.price_bins() == (-23, 48)
    assert ev.estimation_bins() == (-41, -6)


def test_event_spec_rejects_bad_windows():
    with pytest.raises(ValidationError):
        EventSpec("e", T0, trading_window=(1700, 1800)).validate()
    with pytest.raises(ValidationError):
        EventSpec("e", T0, estimation_window=-300).validate()


def test_classify_ticks_oracle():
    prices = [0.50, 0.51, 0.51, 0.50, 0.50, 0.52]
    trades = make_trades([{"ts": T0 + i, "price": p, "quantity": 2}
                          for i, p in enumerate(prices)])
    signed = classify_ticks(trades)
    # warm-up +1; zero change carries the last non-zero direction
    assert list(signed["direction"]) == [1, 1, 1, -1, -1, 1]
    expected_q = signed["direction"] * signed["value"] / 1e6
    assert np.allclose(signed["q_millions"], expected_q)


def test_classify_ticks_warmup_override():
    trades = make_trades([{"ts": T0, "price": 0.5}, {"ts": T0 + 1, "price": 0.5}])
    signed = classify_ticks(trades, warmup_direction=-1)
    assert list(signed["direction"]) == [-1, -1]
    with pytest.raises(ValidationError):
        classify_ticks(trades, warmup_direction=0)


def test_build_bin_series_hand_oracle():
    trades = make_trades([
        {"ts": T0 - 400, "price": 0.50, "value": 100.0},  # k = -1
        {"ts": T0 + 10, "price": 0.60, "value": 300.0},   # k = 1
        {"ts": T0 + 20, "price": 0.55, "value": 100.0},   # k = 1
    ])
    bins = build_bin_series(classify_ticks(trades), EVT, k_min=-2, k_max=2,
                            prior_price=0.4)
    assert list(bins.index) == [-2, -1, 0, 1, 2]
    # vwap: value-weighted; k=1 has (0.6*300 + 0.55*100) / 400
    assert bins.loc[1, "vwap"] == pytest.approx((0.6 * 300 + 0.55 * 100) / 400)
    # empty bins carry forward; head seeded with the prior price
    assert bins.loc[-2, "vwap"] == 0.4
    assert bins.loc[0, "vwap"] == 0.5
    assert bins.loc[2, "vwap"] == bins.loc[1, "vwap"]
    # flow: directions are +1 (warmup), +1 (up), -1 (down)
    assert bins.loc[1, "buy_usdc"] == 300.0
    assert bins.loc[1, "sell_usdc"] == 100.0
    assert bins.loc[1, "q_millions"] == pytest.approx(200.0 / 1e6)
    assert bins.loc[1, "trade_count"] == 2
    assert bins.loc[0, "volume_usdc"] == 0.0 and bins.loc[0, "trade_count"] == 0


def test_flow_identity_buy_minus_sell():
    rng = np.random.default_rng(3)
    rows = [{"ts": T0 + i, "price": float(p), "value": float(v)}
            for i, (p, v) in enumerate(zip(rng.uniform(0.3, 0.7, 60),
                                           rng.uniform(1, 500, 60)))]
    bins = build_bin_series(classify_ticks(make_trades(rows)), EVT,
                            k_min=0, k_max=1)
    assert np.allclose(
        bins["q_millions"], (bins["buy_usdc"] - bins["sell_usdc"]) / 1e6
    )


def test_last_price_before():
    trades = make_trades([{"ts": T0, "price": 0.5}, {"ts": T0 + 5, "price": 0.6}])
    assert last_price_before(trades, T0 + 4) == 0.5
    assert last_price_before(trades, T0 - 1) is None


def _summary_from_path(pre: float, path: list[float]) -> dict:
    rows = [{"ts": T0 - 400, "price": pre, "value": 100.0}]  # k = -1
    rows += [{"ts": T0 + 1 + 300 * i, "price": p, "value": 100.0}
             for i, p in enumerate(path)]
    ev = EventSpec("e", T0, price_window=(7200, 300 * len(path)))
    bins = build_bin_series(classify_ticks(make_trades(rows)), ev)
    return price_response_summary(bins, ev)


def test_price_response_summary_debate_row():
    # pre 0.6100, peak 0.7213, end 0.6300 -> deltas 0.1113 and 0.0200
    s = _summary_from_path(0.6100, [0.6500, 0.7213, 0.7000, 0.6300])
    assert abs(s["peak_delta"] - 0.1113) < 1e-12
    assert abs(s["total_delta"] - 0.0200) < 1e-12
    assert s["trough"] == 0.6300


def test_price_response_requires_pre_price():
    rows = [{"ts": T0 + 1, "price": 0.5, "value": 1.0}]
    ev = EventSpec("e", T0, price_window=(7200, 300))
    bins = build_bin_series(classify_ticks(make_trades(rows)), ev)
    with pytest.raises(DataError, match="no pre-event price"):
        price_response_summary(bins, ev)
