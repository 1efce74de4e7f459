"""Characteristics, panel FE vs brute force, pooled OLS, flips, logit."""
import numpy as np
import pandas as pd
import pytest
from scipy.special import expit

from pmshock.errors import NumericalError, SeparationError
from pmshock.heterogeneity import (
    build_characteristics,
    build_panel_cells,
    detect_flips,
    fit_logit,
    fit_panel_fe,
    fit_pooled_ols,
    two_way_demean,
)
from pmshock.series import EventSpec

from conftest import T0, make_trades


def _random_panel(rng, n_entities=20, n_times=8, n_x=2):
    rows = []
    for e in range(n_entities):
        for t in range(n_times):
            rows.append({"entity": f"e{e}", "k": t})
    df = pd.DataFrame(rows)
    for j in range(n_x):
        df[f"x{j}"] = rng.normal(size=len(df))
    fe_e = dict(zip(df["entity"].unique(), rng.normal(size=n_entities)))
    fe_t = dict(zip(range(n_times), rng.normal(size=n_times)))
    signs = [(-0.5) ** j for j in range(n_x)]
    df["y"] = (
        sum(s * df[f"x{j}"] for j, s in enumerate(signs))
        + df["entity"].map(fe_e) + df["k"].map(fe_t)
        + rng.normal(scale=0.3, size=len(df))
    )
    return df


def _brute_force_fe(df, y_col, x_cols):
    """Explicit entity and time dummies, absorbing one of each."""
    ents = sorted(df["entity"].unique())
    times = sorted(df["k"].unique())
    cols = [df[c].to_numpy(float) for c in x_cols]
    cols.append(np.ones(len(df)))
    for e in ents[1:]:
        cols.append((df["entity"] == e).to_numpy(float))
    for t in times[1:]:
        cols.append((df["k"] == t).to_numpy(float))
    X = np.column_stack(cols)
    beta = np.linalg.lstsq(X, df[y_col].to_numpy(float), rcond=None)[0]
    return beta[: len(x_cols)]


def test_panel_fe_matches_explicit_dummies():
    rng = np.random.default_rng(5)
    df = _random_panel(rng)  # 160 cells
    fit = fit_panel_fe(df, "y", ["x0", "x1"])
    brute = _brute_force_fe(df, "y", ["x0", "x1"])
    assert np.max(np.abs(fit.params.to_numpy() - brute)) < 1e-8


def test_panel_fe_drops_singletons_and_reports_r2():
    rng = np.random.default_rng(6)
    df = _random_panel(rng, n_entities=10, n_times=5)
    df = pd.concat(
        [df, pd.DataFrame([{"entity": "lone", "k": 0, "x0": 1.0, "x1": 0.0,
                            "y": 3.0}])],
        ignore_index=True,
    )
    fit = fit_panel_fe(df, "y", ["x0", "x1"])
    assert fit.n_dropped_singletons == 1
    assert fit.nobs == 50
    assert set(fit.r2) == {"within", "between", "overall"}
    assert -1.0 <= fit.r2["within"] <= 1.0


def test_two_way_demean_kills_fixed_effects():
    rng = np.random.default_rng(7)
    df = _random_panel(rng, n_entities=6, n_times=4, n_x=1)
    e_codes = pd.factorize(df["entity"])[0]
    t_codes = pd.factorize(df["k"])[0]
    Z = two_way_demean(df[["y"]].to_numpy(), e_codes, t_codes)
    for codes in (e_codes, t_codes):
        means = pd.Series(Z[:, 0]).groupby(codes).mean()
        assert np.max(np.abs(means.to_numpy())) < 1e-9


def test_pooled_ols_matches_numpy():
    rng = np.random.default_rng(8)
    n = 120
    df = pd.DataFrame({
        "trader": np.repeat([f"t{i}" for i in range(30)], 4),
        "event": np.tile(["a", "b"], 60),
        "x": rng.normal(size=n),
    })
    df["y"] = 2.0 + df["x"] + (df["event"] == "b") * 0.5 + rng.normal(size=n)
    fit = fit_pooled_ols(df, "y", ["x"])
    X = np.column_stack([np.ones(n), (df["event"] == "b").to_numpy(float),
                         df["x"].to_numpy()])
    beta = np.linalg.lstsq(X, df["y"].to_numpy(), rcond=None)[0]
    assert fit.params["intercept"] == pytest.approx(beta[0], abs=1e-10)
    assert fit.params["event[b]"] == pytest.approx(beta[1], abs=1e-10)
    assert fit.params["x"] == pytest.approx(beta[2], abs=1e-10)
    assert fit.n_clusters == 30
    assert 0.0 <= fit.r2["plain"] <= 1.0


def test_detect_flips_sign_and_zero_transitions():
    pre = pd.Series({"a": 5.0, "b": -2.0, "c": 0.0, "d": 3.0, "e": -1.0})
    post = pd.Series({"a": -1.0, "b": -4.0, "c": 2.0, "d": 0.0, "e": -0.5})
    flips = detect_flips(pre, post)
    assert flips.to_dict() == {"a": 1, "b": 0, "c": 1, "d": 1, "e": 0}


def test_detect_flips_aligns_missing_as_zero():
    pre = pd.Series({"a": 1.0})
    post = pd.Series({"b": 1.0})
    flips = detect_flips(pre, post)
    assert flips["a"] == 1 and flips["b"] == 1


def test_logit_intercept_only_matches_closed_form():
    y = np.array([1] * 30 + [0] * 70)
    df = pd.DataFrame({"y": y, "trader": [f"t{i}" for i in range(100)]})
    df["z"] = 0.0
    fit = fit_logit(df, "y", [], cluster_col="trader")
    p_hat = 0.3
    assert fit.params["intercept"] == pytest.approx(np.log(p_hat / (1 - p_hat)),
                                                    abs=1e-6)
    assert fit.r2["pseudo"] == pytest.approx(0.0, abs=1e-8)


def test_logit_recovers_true_coefficients():
    rng = np.random.default_rng(9)
    hits = 0
    for _ in range(40):
        n = 400
        x0 = rng.normal(size=n)
        x1 = rng.normal(size=n)
        eta = x0 - x1
        y = (rng.random(n) < expit(eta)).astype(float)
        df = pd.DataFrame({"y": y, "x0": x0, "x1": x1,
                           "trader": [f"t{i}" for i in range(n)]})
        fit = fit_logit(df, "y", ["x0", "x1"], cluster_col="trader")
        ok = (abs(fit.params["x0"] - 1.0) <= 3 * fit.se["x0"]
              and abs(fit.params["x1"] + 1.0) <= 3 * fit.se["x1"])
        hits += ok
    assert hits >= 36  # ~99.3% nominal joint coverage


def test_logit_separation_raises():
    # unit-scale perfectly separated regressor: the coefficient must diverge
    x = np.concatenate([np.linspace(-1.0, -0.1, 10), np.linspace(0.1, 1.0, 10)])
    df = pd.DataFrame({
        "y": [0] * 10 + [1] * 10,
        "x": x,
        "trader": [f"t{i}" for i in range(20)],
    })
    with pytest.raises(SeparationError):
        fit_logit(df, "y", ["x"], cluster_col="trader")


def test_logit_requires_outcome_variation():
    df = pd.DataFrame({"y": [1.0] * 5, "x": range(5),
                       "trader": [f"t{i}" for i in range(5)]})
    with pytest.raises(NumericalError, match="no variation"):
        fit_logit(df, "y", ["x"], cluster_col="trader")


def _chars_trades():
    rows = []
    # heavy trader: many trades across two bins and two markets
    for i in range(12):
        rows.append({"ts": T0 - 86400 + i * 400, "maker": "lp", "taker": "heavy",
                     "value": 100.0, "market": "Trump" if i % 2 else "Biden",
                     "side": "YES"})
    # light trader: one small trade
    rows.append({"ts": T0 - 3600, "maker": "lp", "taker": "light",
                 "value": 1.0, "price": 0.5})
    # negative-exposure trader: buys Trump NO
    rows.append({"ts": T0 - 7200, "maker": "lp", "taker": "bear",
                 "side": "NO", "value": 50.0, "quantity": 100.0})
    return make_trades(rows)


def test_build_characteristics_small_oracle():
    ev = EventSpec("e", T0)
    chars = build_characteristics(_chars_trades(), ev,
                                  operator_addresses={"lp"}).set_index("trader")
    assert "lp" not in chars.index
    assert chars.loc["heavy", "trad_vol_high"] == 1
    assert chars.loc["light", "trad_vol_high"] == 0
    assert chars.loc["heavy", "trad_int_multi"] == 1
    assert chars.loc["light", "trad_int_multi"] == 0
    assert chars.loc["bear", "neg_trump_win"] == 1
    assert chars.loc["light", "neg_trump_win"] == 0  # zero grouped with positive
    assert chars.loc["heavy", "single_market"] == 0
    assert chars.loc["light", "single_market"] == 1


def test_median_split_exactly_half_of_100():
    # 100 traders with distinct volumes -> exactly 50 high-volume
    rows = [{"ts": T0 - 1000 - i, "maker": "lp", "taker": f"t{i:03d}",
             "value": float(i + 1)} for i in range(100)]
    chars = build_characteristics(make_trades(rows), EventSpec("e", T0),
                                  operator_addresses={"lp"})
    assert chars["trad_vol_high"].sum() == 50


def test_build_panel_cells_outcomes_and_post():
    outcomes = pd.DataFrame({
        "trader": ["a", "a", "b", "b"],
        "k": [-1, 0, -1, 0],
        "V": [0.0, 3.0, 1.0, 0.0],
        "F": [0, 2, 1, 0],
        "D": [0, 1, 1, 0],
    })
    chars = pd.DataFrame({
        "trader": ["a", "b"], "trad_vol_high": [1, 0], "trad_freq_high": [0, 1],
        "trad_int_multi": [0, 0], "neg_trump_win": [0, 1],
        "single_market": [1, 1], "contrarian": [0, 0], "momentum": [0, 0],
    })
    cells = build_panel_cells({"e": outcomes}, {"e": chars}, ["neg_trump_win"])
    assert list(cells["post"]) == [0.0, 1.0, 0.0, 1.0]
    assert cells["y_volume"].iloc[1] == pytest.approx(np.arcsinh(3.0))
    assert cells["post_x_neg_trump_win"].iloc[3] == 1.0
    assert cells["entity"].iloc[0] == "a|e"
