"""Price-impact estimators on the log-odds scale.

Kyle's lambda regresses the per-bin log-odds change on signed order flow in
millions of USDC with no intercept; the Glosten-Harris decomposition adds an
intercept and the first difference of flow to split permanent and transitory
impact. Standard errors are heteroskedasticity- and autocorrelation-robust
with a Bartlett kernel.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import DataError, NumericalError
from .regression import hac_cov, newey_west_lag, ols_beta

PRICE_CLAMP = 1e-6


def to_log_odds(prices: np.ndarray, clamp: float = PRICE_CLAMP) -> tuple[np.ndarray, int]:
    """ln(p/(1-p)) with prices clamped to [clamp, 1-clamp].

    Returns the transformed array and the number of clamped observations.
    """
    p = np.asarray(prices, dtype=float)
    clipped = np.clip(p, clamp, 1.0 - clamp)
    n_clamped = int((clipped != p).sum())
    return np.log(clipped / (1.0 - clipped)), n_clamped


def log_odds_series(bins: pd.DataFrame, clamp: float = PRICE_CLAMP) -> pd.DataFrame:
    """Per-bin log-odds level, change, flow and flow change from a bin series.

    Requires a dense, forward-filled vwap column; the first bin is lost to
    differencing.
    """
    if bins["vwap"].isna().any():
        raise DataError("vwap series has gaps; seed a prior price")
    theta, n_clamped = to_log_odds(bins["vwap"].to_numpy(), clamp)
    out = pd.DataFrame(index=bins.index)
    out["theta"] = theta
    out["d_theta"] = out["theta"].diff()
    out["q"] = bins["q_millions"]
    out["d_q"] = out["q"].diff()
    out = out.iloc[1:]
    out.attrs["n_clamped"] = n_clamped
    return out


@dataclass(frozen=True)
class ImpactEstimate:
    estimator: str  # "kyle" | "glosten_harris"
    params: pd.Series
    se: pd.Series
    nobs: int
    hac_lag: int

    def conf_int(self, z: float = 1.96) -> pd.DataFrame:
        return pd.DataFrame(
            {"lo95": self.params - z * self.se, "hi95": self.params + z * self.se}
        )


def fit_kyle(series: pd.DataFrame, hac_lag: int | None = None) -> ImpactEstimate:
    """No-intercept regression d_theta = lambda * q."""
    df = series.dropna(subset=["d_theta", "q"])
    q = df["q"].to_numpy(float)
    dth = df["d_theta"].to_numpy(float)
    T = len(df)
    if T < 2:
        raise DataError("too few observations for impact estimation")
    denom = float(q @ q)
    if denom == 0:
        raise NumericalError("no signed flow variation")
    lam = float(q @ dth) / denom
    resid = dth - lam * q
    lag = newey_west_lag(T) if hac_lag is None else hac_lag
    X = q[:, None]
    cov = hac_cov(X, resid, lag)
    return ImpactEstimate(
        estimator="kyle",
        params=pd.Series([lam], index=["lambda"]),
        se=pd.Series([float(np.sqrt(cov[0, 0]))], index=["lambda"]),
        nobs=T,
        hac_lag=lag,
    )


def fit_glosten_harris(series: pd.DataFrame, hac_lag: int | None = None) -> ImpactEstimate:
    """d_theta = alpha + lambda_perm * q + lambda_trans * d_q."""
    df = series.dropna(subset=["d_theta", "q", "d_q"])
    T = len(df)
    if T < 4:
        raise DataError("too few observations for impact estimation")
    X = np.column_stack(
        [np.ones(T), df["q"].to_numpy(float), df["d_q"].to_numpy(float)]
    )
    y = df["d_theta"].to_numpy(float)
    names = ["alpha", "lambda_perm", "lambda_trans"]
    for j, nm in enumerate(names[1:], start=1):
        if np.ptp(X[:, j]) == 0:
            raise NumericalError(f"no variation in regressor: {nm}")
    beta = ols_beta(X, y)
    resid = y - X @ beta
    lag = newey_west_lag(T) if hac_lag is None else hac_lag
    cov = hac_cov(X, resid, lag)
    return ImpactEstimate(
        estimator="glosten_harris",
        params=pd.Series(beta, index=names),
        se=pd.Series(np.sqrt(np.diag(cov)), index=names),
        nobs=T,
        hac_lag=lag,
    )


def rolling_estimates(
    series: pd.DataFrame,
    window: int = 24,
    estimator: str = "kyle",
    min_nonzero_flow: int = 3,
) -> pd.DataFrame:
    """Rolling impact estimates over trailing windows of ``window`` bins.

    Each row is indexed by the window's last bin k; windows with too little
    flow variation are skipped.
    """
    fit = {"kyle": fit_kyle, "glosten_harris": fit_glosten_harris}.get(estimator)
    if fit is None:
        raise ValueError(f"unknown estimator: {estimator}")
    rows = []
    ks = series.index.to_numpy()
    for end in range(window - 1, len(series)):
        sub = series.iloc[end - window + 1 : end + 1]
        if int((sub["q"] != 0).sum()) < min_nonzero_flow:
            continue
        try:
            est = fit(sub)
        except (DataError, NumericalError):
            continue
        row = {"k": int(ks[end]), "window_start_k": int(ks[end - window + 1]),
               "nobs": est.nobs}
        for nm in est.params.index:
            row[nm] = est.params[nm]
            row[f"se_{nm}"] = est.se[nm]
        rows.append(row)
    return pd.DataFrame(rows)
