"""Matched-placebo randomization inference.

Pseudo-event instants share the real event's weekday and clock time: the
candidate pool is every timestamp in the sample congruent to the event epoch
modulo one week, restricted to 5-minute bins with at least one trade in the
analyzed token and at least 24 hours away from any real event. Statistics
are recomputed on windows around each draw and the two-sided randomization
p-value uses the add-one rule, so its floor is 1/(M+1).
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable

import numpy as np
import pandas as pd

from .diagnostics import rolling_variance_ratio, two_sidedness
from .errors import DataError, NumericalError, ValidationError
from .impact import fit_kyle, log_odds_series
from .series import BIN_WIDTH, EventSpec, build_bin_series

WEEK = 7 * 86400
Statistic = Callable[[pd.DataFrame, int], float]


@dataclass(frozen=True)
class PlaceboSpec:
    n_draws: int = 500
    seed: int = 0
    exclusion_radius: int = 86400
    min_pool_size: int = 20

    def validate(self) -> None:
        if self.n_draws < 1:
            raise ValidationError("n_draws must be positive")
        if self.exclusion_radius < 0:
            raise ValidationError("exclusion_radius must be non-negative")


def substream_seed(seed: int, statistic: str, event: str) -> int:
    """Deterministic per-(statistic, event) RNG seed."""
    digest = hashlib.sha256(f"{seed}|{statistic}|{event}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def matched_pool(
    token_trades: pd.DataFrame,
    event_time: int,
    real_event_times: list[int],
    exclusion_radius: int = 86400,
    bin_width: int = BIN_WIDTH,
) -> np.ndarray:
    """Candidate pseudo-event instants matched on weekday and clock time.

    Candidates are instants within the sample span congruent to the event
    time modulo one week whose containing bin has at least one trade in the
    analyzed token, excluding instants within the radius of any real event.
    """
    ts = token_trades["ts"].to_numpy()
    if len(ts) == 0:
        raise DataError("no trades for placebo pool")
    t_lo, t_hi = int(ts.min()), int(ts.max())
    phase = event_time % WEEK
    first = t_lo + (phase - t_lo) % WEEK
    candidates = np.arange(first, t_hi + 1, WEEK, dtype=np.int64)

    # keep candidates whose own bin ((c - w, c]) contains a trade
    traded_bins = np.unique(-((-ts) // bin_width))
    cand_bins = -((-candidates) // bin_width)
    keep = np.isin(cand_bins, traded_bins)
    candidates = candidates[keep]

    for t_real in real_event_times:
        candidates = candidates[np.abs(candidates - t_real) > exclusion_radius]
    return candidates


def randomization_p(real_value: float, placebo_values: np.ndarray) -> float:
    """Two-sided add-one randomization p-value."""
    pl = np.asarray(placebo_values, dtype=float)
    pl = pl[~np.isnan(pl)]
    m = len(pl)
    if m == 0:
        raise DataError("no usable placebo draws")
    return (1.0 + int((np.abs(pl) >= abs(real_value)).sum())) / (1.0 + m)


def run_placebo(
    token_trades: pd.DataFrame,
    event: EventSpec,
    statistic: Statistic,
    statistic_name: str,
    real_event_times: list[int],
    spec: PlaceboSpec = PlaceboSpec(),
) -> dict:
    """Full randomization test for one statistic at one event."""
    spec.validate()
    pool = matched_pool(
        token_trades, event.event_time, real_event_times, spec.exclusion_radius
    )
    if len(pool) < spec.min_pool_size:
        raise DataError(
            f"placebo pool too small: {len(pool)} < {spec.min_pool_size}"
        )
    real_value = statistic(token_trades, event.event_time)

    rng = np.random.default_rng(substream_seed(spec.seed, statistic_name, event.name))
    draws = rng.choice(pool, size=spec.n_draws, replace=True)
    values = np.full(spec.n_draws, np.nan)
    cache: dict[int, float] = {}
    for i, t in enumerate(draws):
        t = int(t)
        if t not in cache:
            try:
                cache[t] = statistic(token_trades, t)
            except (DataError, NumericalError):
                cache[t] = np.nan
        values[i] = cache[t]
    usable = int(np.isfinite(values).sum())
    p = randomization_p(real_value, values)
    return {
        "event": event.name,
        "statistic": statistic_name,
        "real_value": float(real_value),
        "p_value": float(p),
        "usable_draws": usable,
        "n_draws": spec.n_draws,
        "seed": spec.seed,
        "placebo_values": values,
    }


def _window_bins(
    token_trades: pd.DataFrame, event_time: int, k_min: int, k_max: int
) -> pd.DataFrame:
    lo = event_time + (k_min - 1) * BIN_WIDTH
    hi = event_time + k_max * BIN_WIDTH
    ts = token_trades["ts"].to_numpy()
    i_lo, i_hi = np.searchsorted(ts, lo, "right"), np.searchsorted(ts, hi, "right")
    sub = token_trades.iloc[i_lo:i_hi]
    prior = float(token_trades["price"].iloc[i_lo - 1]) if i_lo > 0 else None
    ev = EventSpec(name="placebo", event_time=event_time)
    return build_bin_series(sub, ev, BIN_WIDTH, k_min, k_max, prior_price=prior)


def make_kyle_change_statistic(pre_bins: int = 24, post_bins: int = 24) -> Statistic:
    """Post-window Kyle lambda minus pre-window Kyle lambda."""

    def stat(token_trades: pd.DataFrame, event_time: int) -> float:
        bins = _window_bins(token_trades, event_time, -pre_bins, post_bins)
        if bins["vwap"].isna().all():
            raise DataError("no prices in placebo window")
        series = log_odds_series(bins.dropna(subset=["vwap"]))
        pre = series.loc[series.index <= 0]
        post = series.loc[series.index > 0]
        return float(
            fit_kyle(post).params["lambda"] - fit_kyle(pre).params["lambda"]
        )

    return stat


def make_vr_max_statistic(
    q: int = 6, window: int = 36, post_bins: int = 48
) -> Statistic:
    """Maximum post-event rolling VR(q) minus one."""

    def stat(token_trades: pd.DataFrame, event_time: int) -> float:
        bins = _window_bins(token_trades, event_time, -window, post_bins)
        if bins["vwap"].isna().any():
            bins = bins.assign(vwap=bins["vwap"].ffill().bfill())
        series = log_odds_series(bins)
        roll = rolling_variance_ratio(series["theta"], q=q, window=window)
        post = roll[roll["k"] >= 0]
        if post.empty:
            raise DataError("no post-event variance ratios")
        return float(post["vr"].max() - 1.0)

    return stat


def make_two_sidedness_change_statistic(
    pre_bins: int = 24, post_bins: int = 24
) -> Statistic:
    """Mean post-event two-sidedness minus mean pre-event two-sidedness."""

    def stat(token_trades: pd.DataFrame, event_time: int) -> float:
        bins = _window_bins(token_trades, event_time, -pre_bins, post_bins)
        ts = two_sidedness(bins)["two_sidedness"]
        pre = ts.loc[ts.index <= 0].dropna()
        post = ts.loc[ts.index > 0].dropna()
        if pre.empty or post.empty:
            raise DataError("no traded bins on one side of the placebo instant")
        return float(post.mean() - pre.mean())

    return stat


def make_volume_jump_statistic(
    pre_bins: int = 36, post_bins: int = 6
) -> Statistic:
    """Asinh dollar volume right after the instant minus the pre-window mean."""

    def stat(token_trades: pd.DataFrame, event_time: int) -> float:
        bins = _window_bins(token_trades, event_time, -pre_bins, post_bins)
        v = bins["volume_usdc"]
        pre = np.arcsinh(v.loc[v.index <= 0].to_numpy(float))
        post = np.arcsinh(v.loc[v.index > 0].to_numpy(float))
        if len(pre) == 0 or len(post) == 0:
            raise DataError("empty placebo window")
        return float(post.mean() - pre.mean())

    return stat


DEFAULT_STATISTICS: dict[str, Callable[[], Statistic]] = {
    "kyle_lambda_change": make_kyle_change_statistic,
    "vr_post_max": make_vr_max_statistic,
    "two_sidedness_change": make_two_sidedness_change_statistic,
    "volume_jump": make_volume_jump_statistic,
}


def run_placebo_suite(
    token_trades: pd.DataFrame,
    events: list[EventSpec],
    spec: PlaceboSpec = PlaceboSpec(),
    statistics: dict[str, Statistic] | None = None,
) -> pd.DataFrame:
    """All statistics at all events; one row per (event, statistic)."""
    if statistics is None:
        statistics = {name: factory() for name, factory in DEFAULT_STATISTICS.items()}
    real_times = [e.event_time for e in events]
    rows = []
    for event in events:
        for name, stat in statistics.items():
            res = run_placebo(token_trades, event, stat, name, real_times, spec)
            rows.append({k: v for k, v in res.items() if k != "placebo_values"})
    return pd.DataFrame(rows)
