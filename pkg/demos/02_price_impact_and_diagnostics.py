"""Walk-through: price impact and market-quality diagnostics.

Fits Kyle's lambda and the Glosten-Harris decomposition on a market with
known permanent and transitory impact, then inspects rolling variance
ratios and two-sidedness around a liquidity shock.

Run:  python3 demos/02_price_impact_and_diagnostics.py
"""
import pandas as pd

from pmshock.diagnostics import rolling_variance_ratio, two_sidedness
from pmshock.impact import fit_glosten_harris, fit_kyle, log_odds_series
from pmshock.series import EventSpec, build_bin_series, classify_ticks
from pmshock.synth import ShockSpec, SynthConfig, generate

pd.set_option("display.width", 100)

LAM_PERM, LAM_TRANS = 0.25, 0.10
cfg = SynthConfig(
    seed=3,
    n_bins=144,
    base_rate=30.0,
    sigma_theta=0.01,
    lambda_perm=LAM_PERM,
    lambda_trans=LAM_TRANS,
    shocks=(ShockSpec(bin=72, arrival_multiplier=4.0,
                      two_sidedness_target=0.35),),
)
trades, truth = generate(cfg)
event = EventSpec(name="demo", event_time=truth["event_time"],
                  price_window=(14400, 14400))

signed = classify_ticks(trades)
bins = build_bin_series(signed, event, prior_price=cfg.initial_price)
series = log_odds_series(bins)

kyle = fit_kyle(series)
gh = fit_glosten_harris(series)
print(f"true impact: lambda_perm={LAM_PERM}, lambda_trans={LAM_TRANS}")
print(f"Kyle lambda: {kyle.params['lambda']:.4f} "
      f"(se {kyle.se['lambda']:.4f}, HAC lag {kyle.hac_lag})")
print("Glosten-Harris:")
print(gh.params.round(4).to_string())
print("standard errors:")
print(gh.se.round(4).to_string())

# Rolling variance ratios: values near 1 are consistent with a random walk;
# a burst of transitory impact pushes VR below 1.
roll = rolling_variance_ratio(series["theta"], q=6, window=36)
post = roll[roll["k"] >= 0]
print(f"\nrolling VR(6): pre-event mean "
      f"{roll[roll['k'] < 0]['vr'].mean():.3f}, "
      f"post-event min {post['vr'].min():.3f}")

# Two-sidedness: 1 means balanced buy/sell flow, 0 fully one-sided. The
# shock schedules a two-sidedness target of 0.35 for an hour.
ts = two_sidedness(bins, smooth_bins=3)["smoothed"]
print(f"two-sidedness: pre-event {ts.loc[:-1].mean():.3f}, "
      f"shock hour {ts.loc[0:11].mean():.3f}, "
      f"after recovery {ts.loc[12:].mean():.3f}")
