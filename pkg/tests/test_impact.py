"""Kyle lambda and Glosten-Harris estimators on the log-odds scale."""
import numpy as np
import pandas as pd
import pytest

from pmshock.errors import DataError, NumericalError
from pmshock.impact import (
    fit_glosten_harris,
    fit_kyle,
    log_odds_series,
    rolling_estimates,
    to_log_odds,
)


def _exact_series(lam=0.25, T=48, seed=0):
    rng = np.random.default_rng(seed)
    q = rng.normal(size=T)
    d_theta = lam * q
    return pd.DataFrame({"d_theta": d_theta, "q": q,
                         "d_q": np.diff(q, prepend=0.0)},
                        index=pd.RangeIndex(1, T + 1, name="k"))


def test_log_odds_exact_values():
    theta, n_clamped = to_log_odds(np.array([0.5, 0.75]))
    assert theta[0] == 0.0  # exactly
    assert theta[1] == pytest.approx(np.log(3.0))
    assert n_clamped == 0


def test_log_odds_clamps_and_counts():
    theta, n_clamped = to_log_odds(np.array([0.0, 1.0, 0.5]))
    assert n_clamped == 2
    assert theta[0] == pytest.approx(np.log(1e-6 / (1 - 1e-6)))
    assert np.isfinite(theta).all()


def test_log_odds_series_from_bins():
    bins = pd.DataFrame(
        {"vwap": [0.5, 0.6, 0.6], "q_millions": [0.1, 0.3, -0.2]},
        index=pd.RangeIndex(-1, 2, name="k"),
    )
    s = log_odds_series(bins)
    assert list(s.index) == [0, 1]  # first bin lost to differencing
    assert s.loc[0, "d_theta"] == pytest.approx(np.log(1.5) - 0.0)
    assert s.loc[1, "d_theta"] == 0.0
    assert s.loc[1, "d_q"] == pytest.approx(-0.5)
    assert s.attrs["n_clamped"] == 0


def test_log_odds_series_rejects_gaps():
    bins = pd.DataFrame({"vwap": [0.5, np.nan], "q_millions": [0.0, 0.0]})
    with pytest.raises(DataError, match="gaps"):
        log_odds_series(bins)


def test_kyle_exact_fit_zero_residual():
    s = _exact_series(lam=0.25)
    est = fit_kyle(s)
    assert est.params["lambda"] == pytest.approx(0.25, abs=1e-14)
    resid = s["d_theta"] - est.params["lambda"] * s["q"]
    assert np.max(np.abs(resid)) < 1e-14
    assert est.se["lambda"] == pytest.approx(0.0, abs=1e-12)


def test_kyle_closed_form():
    s = pd.DataFrame({"d_theta": [0.2, -0.1, 0.4], "q": [1.0, -0.5, 2.0]})
    est = fit_kyle(s, hac_lag=0)
    num = 0.2 * 1.0 + (-0.1) * (-0.5) + 0.4 * 2.0
    den = 1.0 + 0.25 + 4.0
    assert est.params["lambda"] == pytest.approx(num / den)


def test_kyle_requires_flow_variation():
    s = pd.DataFrame({"d_theta": [0.1, 0.2], "q": [0.0, 0.0]})
    with pytest.raises(NumericalError, match="no signed flow"):
        fit_kyle(s)


def test_glosten_harris_matches_lstsq():
    rng = np.random.default_rng(4)
    T = 60
    q = rng.normal(size=T)
    dq = np.diff(q, prepend=0.0)
    y = 0.01 + 0.25 * q + 0.10 * dq + rng.normal(scale=0.02, size=T)
    s = pd.DataFrame({"d_theta": y, "q": q, "d_q": dq})
    est = fit_glosten_harris(s)
    X = np.column_stack([np.ones(T), q, dq])
    beta = np.linalg.lstsq(X, y, rcond=None)[0]
    assert np.allclose(est.params.to_numpy(), beta)
    assert est.estimator == "glosten_harris"
    assert (est.se > 0).all()
    ci = est.conf_int()
    assert (ci["lo95"] < est.params).all() and (ci["hi95"] > est.params).all()


def test_default_hac_lag_follows_plugin_rule():
    s = _exact_series(T=100, seed=2)
    assert fit_kyle(s).hac_lag == 4
    assert fit_kyle(s, hac_lag=1).hac_lag == 1


def test_rolling_estimates_windows():
    s = _exact_series(lam=0.3, T=40)
    roll = rolling_estimates(s, window=10)
    assert len(roll) == 31
    assert (roll["window_start_k"] == roll["k"] - 9).all()
    assert np.allclose(roll["lambda"], 0.3)
    with pytest.raises(ValueError, match="unknown estimator"):
        rolling_estimates(s, estimator="nope")


def test_rolling_skips_flow_dead_windows():
    s = _exact_series(T=30)
    s.loc[s.index <= 12, "q"] = 0.0
    s.loc[s.index <= 12, "d_theta"] = 0.0
    roll = rolling_estimates(s, window=10, min_nonzero_flow=3)
    assert roll["k"].min() >= 15
