"""Event-time bin series: ceiling-convention binning, tick-rule signing, VWAP.

Bin ``k`` covers the half-open interval ``((k-1)*w, k*w]`` relative to the
event instant, so the event instant itself sits at the right edge of bin 0
and a trade one second later falls in bin 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import DataError, ValidationError

BIN_WIDTH = 300  # seconds

DAY = 86400


@dataclass(frozen=True)
class EventSpec:
    """An event timestamp plus the windows used around it (all in seconds)."""

    name: str
    event_time: int  # epoch seconds UTC
    trading_window: tuple[int, int] = (1800, 1800)
    price_window: tuple[int, int] = (7200, 14400)
    estimation_window: int = 10800
    characteristics_window: int = 30 * DAY

    def validate(self, bin_width: int = BIN_WIDTH) -> None:
        durations = (*self.trading_window, *self.price_window, self.estimation_window,
                     self.characteristics_window)
        for d in durations:
            if d <= 0:
                raise ValidationError(f"event {self.name}: non-positive window {d}")
            if d % bin_width:
                raise ValidationError(
                    f"event {self.name}: window {d}s is not a multiple of the "
                    f"{bin_width}s bin width"
                )

    # bin ranges implied by the windows (inclusive)
    def trading_bins(self, bin_width: int = BIN_WIDTH) -> tuple[int, int]:
        pre, post = self.trading_window
        return (-(pre // bin_width) + 1, post // bin_width)

    def price_bins(self, bin_width: int = BIN_WIDTH) -> tuple[int, int]:
        pre, post = self.price_window
        return (-(pre // bin_width) + 1, post // bin_width)

    def estimation_bins(self, bin_width: int = BIN_WIDTH) -> tuple[int, int]:
        pre, _ = self.trading_window
        n_est = self.estimation_window // bin_width
        k_first_evt = -(pre // bin_width) + 1
        return (k_first_evt - n_est, k_first_evt - 1)


def bin_index(ts, event_time: int, bin_width: int = BIN_WIDTH):
    """Ceiling-convention bin index: k = ceil((ts - event_time) / width)."""
    tau = np.asarray(ts, dtype=np.int64) - np.int64(event_time)
    k = -((-tau) // bin_width)
    return k if k.ndim else int(k)


def classify_ticks(trades: pd.DataFrame, warmup_direction: int = 1) -> pd.DataFrame:
    """Tick-rule signing for a single token's time-sorted trades.

    Direction is the sign of the last price change; zero changes inherit the
    most recent non-zero direction; trades before the first price change take
    ``warmup_direction``. Adds ``direction`` and ``q_millions`` columns.
    """
    if warmup_direction not in (1, -1):
        raise ValidationError("warmup_direction must be +1 or -1")
    out = trades.copy()
    if out.empty:
        out["direction"] = pd.Series(dtype=np.int8)
        out["q_millions"] = pd.Series(dtype=float)
        return out
    p = out["price"].to_numpy()
    d = np.sign(np.diff(p, prepend=p[0]))
    d_series = pd.Series(d).replace(0.0, np.nan).ffill().fillna(float(warmup_direction))
    out["direction"] = d_series.to_numpy().astype(np.int8)
    out["q_millions"] = out["direction"] * out["value"] / 1e6
    return out


def last_price_before(trades: pd.DataFrame, ts: int) -> float | None:
    """Most recent trade price at or before ``ts`` (None if no trade yet)."""
    prior = trades[trades["ts"] <= ts]
    if prior.empty:
        return None
    return float(prior["price"].iloc[-1])


def build_bin_series(
    signed_trades: pd.DataFrame,
    event: EventSpec,
    bin_width: int = BIN_WIDTH,
    k_min: int | None = None,
    k_max: int | None = None,
    prior_price: float | None = None,
) -> pd.DataFrame:
    """Aggregate one token's signed trades into per-bin VWAP/volume/flow.

    Empty bins carry the last VWAP forward (seeded with ``prior_price``) and
    have zero volume and flow. Net flow is (buy - sell) / 1e6 by construction.
    """
    if k_min is None or k_max is None:
        lo, hi = event.price_bins(bin_width)
        k_min = lo if k_min is None else k_min
        k_max = hi if k_max is None else k_max

    df = signed_trades.copy()
    df["k"] = bin_index(df["ts"].to_numpy(), event.event_time, bin_width)
    df = df[(df["k"] >= k_min) & (df["k"] <= k_max)]

    idx = pd.RangeIndex(k_min, k_max + 1, name="k")
    if df.empty:
        bins = pd.DataFrame(index=idx)
        bins["vwap"] = np.nan
        for col in ("volume_usdc", "buy_usdc", "sell_usdc", "q_millions"):
            bins[col] = 0.0
        bins["trade_count"] = 0
    else:
        df["pv"] = df["price"] * df["value"]
        buys = df["direction"] > 0
        g = df.groupby("k")
        bins = pd.DataFrame(
            {
                "pv": g["pv"].sum(),
                "volume_usdc": g["value"].sum(),
                "buy_usdc": df.loc[buys].groupby("k")["value"].sum(),
                "trade_count": g.size(),
            }
        ).reindex(idx)
        bins["trade_count"] = bins["trade_count"].fillna(0).astype(int)
        for col in ("pv", "volume_usdc", "buy_usdc"):
            bins[col] = bins[col].fillna(0.0)
        bins["sell_usdc"] = bins["volume_usdc"] - bins["buy_usdc"]
        bins["q_millions"] = (bins["buy_usdc"] - bins["sell_usdc"]) / 1e6
        with np.errstate(invalid="ignore"):
            bins["vwap"] = np.where(
                bins["volume_usdc"] > 0, bins["pv"] / bins["volume_usdc"], np.nan
            )
        bins = bins.drop(columns="pv")

    vwap = bins["vwap"].copy()
    if prior_price is not None and np.isnan(vwap.iloc[0]):
        # seed carry-forward with the last price before the window
        first = vwap.first_valid_index()
        stop = len(vwap) if first is None else vwap.index.get_loc(first)
        vwap.iloc[:stop] = np.where(
            np.isnan(vwap.iloc[:stop]), prior_price, vwap.iloc[:stop]
        )
    bins["vwap"] = vwap.ffill()
    cols = ["vwap", "volume_usdc", "buy_usdc", "sell_usdc", "q_millions", "trade_count"]
    return bins[cols]


def price_response_summary(
    bins: pd.DataFrame, event: EventSpec, bin_width: int = BIN_WIDTH
) -> dict[str, float]:
    """Pre/peak/trough/end prices and deltas over the price window.

    Pre is the VWAP of the last bin strictly before the event bin (k <= -1);
    peak/trough/end are taken over post-event bins k >= 1.
    """
    _, k_end = event.price_bins(bin_width)
    pre_bins = bins.loc[bins.index <= -1, "vwap"].dropna()
    if pre_bins.empty:
        raise DataError("no pre-event price")
    pre = float(pre_bins.iloc[-1])

    post = bins.loc[(bins.index >= 1) & (bins.index <= k_end), "vwap"].dropna()
    if post.empty:
        raise DataError("no post-event prices")
    peak = float(post.max())
    trough = float(post.min())
    end = float(post.loc[post.index.max()]) if k_end not in post.index else float(post.loc[k_end])
    return {
        "pre": pre,
        "peak": peak,
        "trough": trough,
        "end": end,
        "peak_delta": peak - pre,
        "trough_delta": trough - pre,
        "total_delta": end - pre,
    }
