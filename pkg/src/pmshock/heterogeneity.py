"""Trader characteristics and the three regression designs.

Characteristics are measured in the month before each event. The stacked
panel uses trader-by-event and relative-bin fixed effects via alternating
demeaning; pooled OLS adds event dummies and main effects; the position-flip
model is a logit fitted by IRLS. All covariances are cluster-robust.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.special import expit

from .errors import DataError, NumericalError, SeparationError
from .ingest import build_holdings, compute_exposure
from .regression import (
    RegressionFit,
    check_full_rank,
    cluster_cov,
    ols_beta,
)
from .series import BIN_WIDTH, EventSpec

CHARACTERISTIC_COLUMNS = [
    "trad_vol_high",
    "trad_freq_high",
    "trad_int_multi",
    "neg_trump_win",
    "single_market",
    "contrarian",
    "momentum",
]


@dataclass(frozen=True)
class CharacteristicsConfig:
    """Knobs the source text leaves open."""

    corr_threshold: float = 0.2
    min_trades_for_type: int = 10
    trend_horizon: int = 3600  # trailing window for the price trend, seconds


def _participant_legs(trades: pd.DataFrame) -> pd.DataFrame:
    """One row per (trade, counterparty) with the trader's own buy/sell sign."""
    taker_buys = (trades["taker_direction"] == "Buy").to_numpy()
    sign_taker = np.where(taker_buys, 1.0, -1.0)
    n = len(trades)
    return pd.DataFrame(
        {
            "trader": np.concatenate(
                [trades["maker"].to_numpy(), trades["taker"].to_numpy()]
            ),
            "ts": np.concatenate([trades["ts"].to_numpy()] * 2),
            "token": np.concatenate([trades["token"].to_numpy()] * 2),
            "market": np.concatenate([trades["market"].to_numpy()] * 2),
            "value": np.concatenate([trades["value"].to_numpy()] * 2),
            "signed_value": np.concatenate(
                [-sign_taker * trades["value"].to_numpy(),
                 sign_taker * trades["value"].to_numpy()]
            ),
        }
    )


def _price_trend_at(trades: pd.DataFrame, legs: pd.DataFrame, horizon: int) -> np.ndarray:
    """Trailing price change of each leg's token over ``horizon`` seconds.

    Prices come from 5-minute calendar-binned VWAPs carried forward.
    """
    cal = trades.copy()
    cal["bin"] = cal["ts"] // BIN_WIDTH
    cal["pv"] = cal["price"] * cal["value"]
    g = cal.groupby(["token", "bin"])
    vwap = (g["pv"].sum() / g["value"].sum()).rename("vwap")

    h_bins = horizon // BIN_WIDTH
    trend = np.full(len(legs), np.nan)
    leg_bins = legs["ts"].to_numpy() // BIN_WIDTH
    for token, sub in vwap.groupby(level="token"):
        sub = sub.droplevel("token")
        lo, hi = int(sub.index.min()), int(sub.index.max())
        dense = sub.reindex(range(lo, hi + 1)).ffill()
        mask = (legs["token"] == token).to_numpy()
        b_now = np.clip(leg_bins[mask], lo, hi) - lo
        b_then = np.clip(leg_bins[mask] - h_bins, lo, hi) - lo
        arr = dense.to_numpy()
        trend[mask] = arr[b_now] - arr[b_then]
    return trend


def build_characteristics(
    trades: pd.DataFrame,
    event: EventSpec,
    operator_addresses: set[str] = frozenset(),
    config: CharacteristicsConfig = CharacteristicsConfig(),
) -> pd.DataFrame:
    """Table of binary pre-event trader characteristics for one event.

    The universe is incumbents: addresses with at least one trade in the
    30-day characteristics window and not operator-flagged. Trader type
    (contrarian/momentum) and single-market use the full sample.
    """
    t_evt = event.event_time
    t_lo = t_evt - event.characteristics_window

    legs = _participant_legs(trades)
    legs = legs[~legs["trader"].isin(operator_addresses)]

    win = legs[(legs["ts"] > t_lo) & (legs["ts"] <= t_evt)]
    if win.empty:
        return pd.DataFrame(columns=["trader", *CHARACTERISTIC_COLUMNS])

    g = win.groupby("trader")
    base = pd.DataFrame({"volume": g["value"].sum(), "frequency": g.size()})

    vol_med = base["volume"].median()
    freq_med = base["frequency"].median()
    base["trad_vol_high"] = (base["volume"] > vol_med).astype(int)
    base["trad_freq_high"] = (base["frequency"] > freq_med).astype(int)

    win_bins = win.assign(bin=win["ts"] // BIN_WIDTH)
    n_bins = win_bins.groupby("trader")["bin"].nunique()
    base["trad_int_multi"] = (n_bins.reindex(base.index).fillna(0) >= 2).astype(int)

    ledger = build_holdings(trades, as_of=t_evt)
    expo = compute_exposure(ledger).set_index("address")["net_trump_win"]
    expo = expo.reindex(base.index).fillna(0.0)
    # zero exposure is grouped with the positive side
    base["neg_trump_win"] = (expo < 0).astype(int)

    n_markets = legs.groupby("trader")["market"].nunique()
    base["single_market"] = (n_markets.reindex(base.index) == 1).astype(int)

    base["contrarian"] = 0
    base["momentum"] = 0
    typed = legs.copy()
    typed["trend"] = _price_trend_at(trades, legs, config.trend_horizon)
    typed = typed.dropna(subset=["trend"])
    for trader, sub in typed.groupby("trader"):
        if trader not in base.index or len(sub) < config.min_trades_for_type:
            continue
        sv = sub["signed_value"].to_numpy()
        tr = sub["trend"].to_numpy()
        if sv.std() == 0 or tr.std() == 0:
            continue
        corr = float(np.corrcoef(sv, tr)[0, 1])
        if corr < -config.corr_threshold:
            base.loc[trader, "contrarian"] = 1
        elif corr > config.corr_threshold:
            base.loc[trader, "momentum"] = 1

    out = base[CHARACTERISTIC_COLUMNS].reset_index()
    out = out.rename(columns={"index": "trader"})
    out.columns = ["trader", *CHARACTERISTIC_COLUMNS]
    return out


def build_panel_cells(
    outcomes_by_event: dict[str, pd.DataFrame],
    characteristics_by_event: dict[str, pd.DataFrame],
    interactions: list[str],
) -> pd.DataFrame:
    """Stack trader-by-event-by-bin cells with outcomes and interaction terms.

    post = 1 for bins at and after the event bin (k >= 0). Entities are
    trader-event pairs; only traders present in the characteristics table
    (incumbents) enter.
    """
    frames = []
    for ev, outcomes in outcomes_by_event.items():
        chars = characteristics_by_event[ev]
        df = outcomes.merge(chars, on="trader", how="inner")
        df["event"] = ev
        frames.append(df)
    cells = pd.concat(frames, ignore_index=True)
    cells["entity"] = cells["trader"] + "|" + cells["event"]
    cells["post"] = (cells["k"] >= 0).astype(float)
    cells["y_volume"] = np.arcsinh(cells["V"])
    cells["y_frequency"] = np.arcsinh(cells["F"])
    cells["y_participation"] = cells["D"].astype(float)
    for c in interactions:
        cells[f"post_x_{c}"] = cells["post"] * cells[c]
    return cells


def _group_demean(z: np.ndarray, codes: np.ndarray, n_groups: int) -> np.ndarray:
    sums = np.zeros((n_groups, z.shape[1]))
    np.add.at(sums, codes, z)
    counts = np.bincount(codes, minlength=n_groups)[:, None]
    return z - (sums / counts)[codes]


def two_way_demean(
    Z: np.ndarray,
    entity_codes: np.ndarray,
    time_codes: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 2000,
) -> np.ndarray:
    """Alternating projections onto entity and time demeaning, to convergence."""
    n_e = int(entity_codes.max()) + 1
    n_t = int(time_codes.max()) + 1
    Z = Z.astype(float).copy()
    for _ in range(max_iter):
        Z_new = _group_demean(Z, entity_codes, n_e)
        Z_new = _group_demean(Z_new, time_codes, n_t)
        delta = np.abs(Z_new - Z).max()
        Z = Z_new
        if delta < tol:
            return Z
    raise NumericalError("two-way demeaning did not converge")


def _r2_block(y: np.ndarray, fitted: np.ndarray) -> float:
    """1 - SSR/SST with both sides centered; may be negative."""
    yc = y - y.mean()
    fc = fitted - fitted.mean()
    sst = float(yc @ yc)
    if sst == 0:
        return 0.0
    resid = yc - fc
    return 1.0 - float(resid @ resid) / sst


def fit_panel_fe(
    cells: pd.DataFrame,
    y_col: str,
    x_cols: list[str],
    entity_col: str = "entity",
    time_col: str = "k",
    cluster_col: str | None = None,
    demean_tol: float = 1e-10,
) -> RegressionFit:
    """Two-way within estimator with trader-event clustered standard errors.

    Singleton entities are dropped; the reported coefficients are on the
    interaction regressors only (main effects are absorbed by the fixed
    effects).
    """
    df = cells.copy()
    sizes = df.groupby(entity_col)[entity_col].transform("size")
    n_singletons = int((sizes == 1).sum())
    df = df[sizes > 1]
    if df.empty:
        raise DataError("no entities with >=2 observations")

    e_codes, _ = pd.factorize(df[entity_col])
    t_codes, _ = pd.factorize(df[time_col])
    y = df[y_col].to_numpy(float)
    X = df[x_cols].to_numpy(float)

    Z = two_way_demean(np.column_stack([y, X]), e_codes, t_codes, tol=demean_tol)
    yd, Xd = Z[:, 0], Z[:, 1:]
    check_full_rank(Xd, x_cols)

    beta = ols_beta(Xd, yd)
    resid = yd - Xd @ beta

    groups = df[cluster_col if cluster_col else entity_col].to_numpy()
    cov, g = cluster_cov(Xd, resid, groups)

    fitted = X @ beta
    ent = pd.DataFrame({"y": y, "f": fitted, "e": e_codes}).groupby("e").mean()
    r2 = {
        "within": _r2_block(yd, Xd @ beta),
        "between": _r2_block(ent["y"].to_numpy(), ent["f"].to_numpy()),
        "overall": _r2_block(y, fitted),
    }
    fit = RegressionFit(
        params=pd.Series(beta, index=x_cols),
        cov=pd.DataFrame(cov, index=x_cols, columns=x_cols),
        nobs=len(df),
        n_clusters=g,
        r2=r2,
        method="panel_fe",
    )
    fit.n_dropped_singletons = n_singletons
    return fit


def _design(
    df: pd.DataFrame, x_cols: list[str], event_col: str | None, add_intercept: bool
) -> tuple[np.ndarray, list[str]]:
    parts, names = [], []
    if add_intercept:
        parts.append(np.ones(len(df)))
        names.append("intercept")
    if event_col is not None:
        events = sorted(df[event_col].unique())
        for ev in events[1:]:  # first event absorbed by the intercept
            parts.append((df[event_col] == ev).to_numpy(float))
            names.append(f"event[{ev}]")
    for c in x_cols:
        parts.append(df[c].to_numpy(float))
        names.append(c)
    return np.column_stack(parts), names


def fit_pooled_ols(
    cells: pd.DataFrame,
    y_col: str,
    x_cols: list[str],
    event_col: str | None = "event",
    cluster_col: str = "trader",
) -> RegressionFit:
    """Pooled OLS with event fixed effects and trader-clustered errors."""
    y = cells[y_col].to_numpy(float)
    X, names = _design(cells, x_cols, event_col, add_intercept=True)

    if np.ptp(y) == 0 and y[0] == 0:
        # degenerate all-zero outcome: exact zero fit
        k = X.shape[1]
        return RegressionFit(
            params=pd.Series(np.zeros(k), index=names),
            cov=pd.DataFrame(np.zeros((k, k)), index=names, columns=names),
            nobs=len(y),
            n_clusters=cells[cluster_col].nunique(),
            r2={"plain": 0.0, "adjusted": 0.0},
            method="pooled_ols",
        )

    check_full_rank(X, names)
    beta = ols_beta(X, y)
    resid = y - X @ beta
    cov, g = cluster_cov(X, resid, cells[cluster_col].to_numpy())

    sst = float(((y - y.mean()) ** 2).sum())
    ssr = float(resid @ resid)
    n, k = X.shape
    r2 = 1.0 - ssr / sst if sst > 0 else 0.0
    adj = 1.0 - (1.0 - r2) * (n - 1) / (n - k) if n > k else np.nan
    return RegressionFit(
        params=pd.Series(beta, index=names),
        cov=pd.DataFrame(cov, index=names, columns=names),
        nobs=n,
        n_clusters=g,
        r2={"plain": r2, "adjusted": adj},
        method="pooled_ols",
    )


def detect_flips(pre_exposure: pd.Series, post_exposure: pd.Series) -> pd.Series:
    """PF = 1 iff the exposure sign changes, counting moves to or from zero."""
    pre, post = pre_exposure.align(post_exposure, fill_value=0.0)
    return (np.sign(pre) != np.sign(post)).astype(int)


def fit_logit(
    data: pd.DataFrame,
    y_col: str,
    x_cols: list[str],
    event_col: str | None = None,
    cluster_col: str = "trader",
    tol: float = 1e-8,
    max_iter: int = 100,
    separation_bound: float = 30.0,
) -> RegressionFit:
    """Binomial GLM with logit link via IRLS, cluster-robust sandwich errors.

    Raises SeparationError when a coefficient diverges past the bound while
    the score has not vanished; warns on converged near-separation.
    """
    y = data[y_col].to_numpy(float)
    if y.min() == y.max():
        raise NumericalError("no variation in outcome")
    X, names = _design(data, x_cols, event_col, add_intercept=True)
    check_full_rank(X, names)

    n, k = X.shape
    beta = np.zeros(k)
    converged = False
    for _ in range(max_iter):
        eta = X @ beta
        p = expit(eta)
        score = X.T @ (y - p)
        if np.abs(score).max() < tol:
            converged = True
            break
        w = np.clip(p * (1 - p), 1e-10, None)
        H = (X * w[:, None]).T @ X
        try:
            step = np.linalg.solve(H, score)
        except np.linalg.LinAlgError:
            raise SeparationError("singular information matrix")
        # damped Newton: halve until the log-likelihood does not decrease
        ll_old = _logit_ll(y, eta)
        scale = 1.0
        for _ in range(30):
            cand = beta + scale * step
            if _logit_ll(y, X @ cand) >= ll_old - 1e-12:
                break
            scale /= 2
        beta = beta + scale * step
        if np.abs(beta).max() > separation_bound:
            raise SeparationError("separation")
    if not converged:
        eta = X @ beta
        if np.abs(X.T @ (y - expit(eta))).max() >= tol:
            raise SeparationError("separation")
    if np.abs(beta).max() > separation_bound / 2:
        warnings.warn(
            "near-separation: a coefficient is very large; interpret with care",
            RuntimeWarning,
        )

    p = expit(X @ beta)
    w = p * (1 - p)
    H = (X * w[:, None]).T @ X
    bread = np.linalg.pinv(H)
    scores_obs = X * (y - p)[:, None]
    codes, uniques = pd.factorize(data[cluster_col].to_numpy())
    g = len(uniques)
    if g < 2:
        raise NumericalError("clustered covariance requires >=2 clusters")
    agg = np.zeros((g, k))
    np.add.at(agg, codes, scores_obs)
    cov = bread @ (agg.T @ agg) @ bread * (g / (g - 1))

    ll = _logit_ll(y, X @ beta)
    p_bar = y.mean()
    ll_null = float(n * (p_bar * np.log(p_bar) + (1 - p_bar) * np.log(1 - p_bar)))
    pseudo = 1.0 - ll / ll_null if ll_null != 0 else np.nan
    return RegressionFit(
        params=pd.Series(beta, index=names),
        cov=pd.DataFrame(cov, index=names, columns=names),
        nobs=n,
        n_clusters=g,
        r2={"pseudo": pseudo},
        loglik=ll,
        method="logit",
    )


def _logit_ll(y: np.ndarray, eta: np.ndarray) -> float:
    # log-likelihood via logaddexp for stability
    return float((y * eta - np.logaddexp(0.0, eta)).sum())
