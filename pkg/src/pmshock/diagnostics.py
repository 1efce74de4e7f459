"""Market-quality diagnostics: variance ratios and two-sidedness.

Variance ratios follow the overlapping-observations construction with the
unbiased q-period variance and the homoskedastic asymptotic standard error.
Two-sidedness is 1 - |B - S| / (B + S) per bin, smoothed over a 15-minute
window.
"""
from __future__ import annotations

import numpy as np
import pandas as pd

from .errors import DataError


def variance_ratio(returns: np.ndarray, q: int) -> dict:
    """Lo-MacKinlay VR(q) on a vector of one-period returns.

    Returns the ratio, its asymptotic standard error under homoskedasticity,
    and the standard normal test statistic.
    """
    r = np.asarray(returns, dtype=float)
    r = r[~np.isnan(r)]
    T = len(r)
    if q < 1:
        raise ValueError("q must be >= 1")
    if T <= q:
        raise DataError("too few returns for variance ratio")
    mu = r.mean()
    var_a = float(((r - mu) ** 2).sum()) / (T - 1)
    if var_a == 0:
        raise DataError("zero return variance")
    csum = np.concatenate([[0.0], np.cumsum(r)])
    rq = csum[q:] - csum[:-q]  # overlapping q-period sums
    m = q * (T - q + 1) * (1.0 - q / T)
    var_c = float(((rq - q * mu) ** 2).sum()) / m
    vr = var_c / var_a
    if q == 1:
        se = 0.0
        z = 0.0
    else:
        se = float(np.sqrt(2.0 * (2 * q - 1) * (q - 1) / (3.0 * q * T)))
        z = (vr - 1.0) / se
    return {"vr": vr, "se": se, "z": z, "nobs": T, "q": q}


def rolling_variance_ratio(
    theta: pd.Series, q: int = 6, window: int = 36
) -> pd.DataFrame:
    """VR(q) over trailing windows of ``window`` log-odds returns.

    ``theta`` is the per-bin log-odds level indexed by k; returns are its
    first differences. Rows are indexed by the window's last bin.
    """
    r = theta.diff().dropna()
    ks = r.index.to_numpy()
    rows = []
    for end in range(window - 1, len(r)):
        sub = r.iloc[end - window + 1 : end + 1].to_numpy()
        try:
            res = variance_ratio(sub, q)
        except DataError:
            continue
        rows.append(
            {
                "k": int(ks[end]),
                "vr": res["vr"],
                "se": res["se"],
                "lo95": res["vr"] - 1.96 * res["se"],
                "hi95": res["vr"] + 1.96 * res["se"],
                "nobs": res["nobs"],
            }
        )
    return pd.DataFrame(rows)


def two_sidedness(bins: pd.DataFrame, smooth_bins: int = 3) -> pd.DataFrame:
    """Per-bin two-sidedness with a short rolling mean over traded bins.

    TS = 1 - |B - S| / (B + S); bins without trades are NaN and are skipped
    (not zero-filled) by the smoother.
    """
    b = bins["buy_usdc"].to_numpy(float)
    s = bins["sell_usdc"].to_numpy(float)
    tot = b + s
    with np.errstate(invalid="ignore", divide="ignore"):
        ts = np.where(tot > 0, 1.0 - np.abs(b - s) / tot, np.nan)
    out = pd.DataFrame({"two_sidedness": ts}, index=bins.index)
    out["smoothed"] = (
        out["two_sidedness"].rolling(smooth_bins, min_periods=1).mean()
    )
    return out


def post_event_stats(
    diag: pd.DataFrame, value_col: str, k_from: int = 0, k_to: int | None = None
) -> dict:
    """Max / min / mean of a diagnostic over the post-event bins."""
    sub = diag[diag["k"] >= k_from] if "k" in diag.columns else diag.loc[diag.index >= k_from]
    if k_to is not None:
        sub = sub[sub["k"] <= k_to] if "k" in sub.columns else sub.loc[sub.index <= k_to]
    vals = sub[value_col].dropna()
    if vals.empty:
        raise DataError("no post-event diagnostic values")
    return {
        "max": float(vals.max()),
        "min": float(vals.min()),
        "mean": float(vals.mean()),
        "n": int(len(vals)),
    }
