"""Trader-level event study: baselines, abnormal activity, CAA, entry counts.

Volume and frequency are transformed with the inverse hyperbolic sine so
that zero bins can be kept; abnormal volume is forced to zero in bins with
no trading. Confidence bands propagate cross-sectional dispersion through
the cumulative sum assuming independence across bins.
"""
from __future__ import annotations


import numpy as np
import pandas as pd

from .errors import DataError
from .series import BIN_WIDTH, EventSpec, bin_index

OUTCOMES = ("volume", "frequency", "participation")


def asinh(x):
    """ln(x + sqrt(x^2 + 1)); strictly increasing, asinh(0) = 0."""
    return np.arcsinh(x)


def trader_bin_outcomes(
    trades: pd.DataFrame,
    event: EventSpec,
    k_min: int,
    k_max: int,
    bin_width: int = BIN_WIDTH,
    traders: set[str] | None = None,
) -> pd.DataFrame:
    """Dense trader-by-bin grid of volume V, trade count F and participation D.

    A trade counts for both counterparties. When ``traders`` is given the
    grid covers exactly that set (zero-filled); otherwise it covers every
    address active in the window.
    """
    k = bin_index(trades["ts"].to_numpy(), event.event_time, bin_width)
    in_win = (k >= k_min) & (k <= k_max)
    sub = trades.loc[in_win]
    ks = k[in_win]

    legs = pd.DataFrame(
        {
            "trader": np.concatenate([sub["maker"].to_numpy(), sub["taker"].to_numpy()]),
            "k": np.concatenate([ks, ks]),
            "value": np.concatenate([sub["value"].to_numpy()] * 2),
        }
    )
    if traders is not None:
        legs = legs[legs["trader"].isin(traders)]
        universe = sorted(traders)
    else:
        universe = sorted(legs["trader"].unique())

    agg = legs.groupby(["trader", "k"]).agg(V=("value", "sum"), F=("value", "size"))
    grid = pd.MultiIndex.from_product(
        [universe, range(k_min, k_max + 1)], names=["trader", "k"]
    )
    out = agg.reindex(grid, fill_value=0).reset_index()
    out["V"] = out["V"].astype(float)
    out["F"] = out["F"].astype(int)
    out["D"] = (out["V"] > 0).astype(int)
    return out


def compute_baselines(outcomes: pd.DataFrame, est_bins: tuple[int, int]) -> pd.DataFrame:
    """Per-trader means of V, F, D over the estimation window, zeros included.

    The denominator is the full bin count of the estimation window, so the
    input grid must be dense over it.
    """
    lo, hi = est_bins
    n_bins = hi - lo + 1
    if n_bins <= 0:
        raise DataError("empty estimation window")
    est = outcomes[(outcomes["k"] >= lo) & (outcomes["k"] <= hi)]
    g = est.groupby("trader")
    base = pd.DataFrame(
        {
            "V_bar": g["V"].sum() / n_bins,
            "F_bar": g["F"].sum() / n_bins,
            "D_bar": g["D"].sum() / n_bins,
            "n_est_bins": g.size(),
        }
    )
    short = base[base["n_est_bins"] != n_bins]
    if len(short):
        raise DataError("outcome grid is not dense over the estimation window")
    return base.drop(columns="n_est_bins").reset_index()


def abnormal_activity(
    outcomes: pd.DataFrame, baselines: pd.DataFrame, event_bins: tuple[int, int]
) -> pd.DataFrame:
    """Abnormal volume/frequency/participation per trader-bin in the event window.

    AV = asinh(V) - asinh(V_bar), forced to 0 where V = 0; AF is the analogue
    for trade counts without the zero override; AP = D - D_bar.
    """
    lo, hi = event_bins
    df = outcomes[(outcomes["k"] >= lo) & (outcomes["k"] <= hi)].merge(
        baselines, on="trader", how="inner"
    )
    av = asinh(df["V"]) - asinh(df["V_bar"])
    df["AV"] = np.where(df["V"] > 0, av, 0.0)
    df["AF"] = asinh(df["F"]) - asinh(df["F_bar"])
    df["AP"] = df["D"] - df["D_bar"]
    return df


def aggregate_abnormal(abnormal: pd.DataFrame) -> dict[str, pd.DataFrame]:
    """Cross-sectional mean, sd and count per bin, for each abnormal outcome."""
    out = {}
    for name, col in (("volume", "AV"), ("frequency", "AF"), ("participation", "AP")):
        g = abnormal.groupby("k")[col]
        out[name] = pd.DataFrame(
            {"mu": g.mean(), "sd": g.std(ddof=1), "n": g.size()}
        )
    return out


def cumulative_abnormal(agg: pd.DataFrame, z: float = 1.96) -> pd.DataFrame:
    """CAA path with standard errors and normal confidence bands.

    CAA_tau = sum_{k<=tau} mu_k; se_tau = sqrt(sum (sd_k/sqrt(n_k))^2).
    """
    if (agg["n"] == 0).any():
        raise DataError("empty cross-section")
    caa = agg["mu"].cumsum()
    se = np.sqrt(((agg["sd"] / np.sqrt(agg["n"])) ** 2).cumsum())
    return pd.DataFrame(
        {
            "caa": caa,
            "se": se,
            "lo95": caa - z * se,
            "hi95": caa + z * se,
            "n": agg["n"],
        }
    )


def newcomer_counts(
    trades: pd.DataFrame,
    event: EventSpec,
    k_min: int,
    k_max: int,
    bin_width: int = BIN_WIDTH,
    exclude: set[str] = frozenset(),
) -> pd.DataFrame:
    """Per-bin count of addresses whose first-ever trade falls in that bin.

    First trades are global over the full input, not window-local.
    ``exclude`` drops flagged operator addresses from the count.
    """
    legs = pd.DataFrame(
        {
            "address": np.concatenate(
                [trades["maker"].to_numpy(), trades["taker"].to_numpy()]
            ),
            "ts": np.concatenate([trades["ts"].to_numpy()] * 2),
        }
    )
    first = legs.groupby("address")["ts"].min()
    if exclude:
        first = first[~first.index.isin(exclude)]
    k = bin_index(first.to_numpy(), event.event_time, bin_width)
    counts = pd.Series(k).value_counts()
    idx = pd.RangeIndex(k_min, k_max + 1, name="k")
    return counts.reindex(idx, fill_value=0).rename("newcomers").reset_index()
