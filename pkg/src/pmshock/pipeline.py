"""End-to-end orchestration: parse once, then per-event analysis stages.

Each stage writes its artifacts under ``<output_dir>/events/<event>/`` and
returns the file paths; ``run`` collects everything into a manifest written
last. Module errors propagate with the stage and (event, token) context
after an incomplete manifest has been written.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from . import eventstudy, heterogeneity, impact, placebo, report
from .config import RunConfig
from .diagnostics import rolling_variance_ratio, two_sidedness
from .errors import (
    CollinearityError,
    DataError,
    NumericalError,
    PmshockError,
    SeparationError,
)
from .ingest import (
    build_holdings,
    compute_exposure,
    flag_addresses,
    operator_addresses,
    parse_trades,
    read_address_list,
    read_transfer_pairs,
)
from .series import EventSpec, build_bin_series, classify_ticks, last_price_before, \
    price_response_summary

INTERACTION_SOURCES = list(heterogeneity.CHARACTERISTIC_COLUMNS)


@dataclass
class PipelineContext:
    config: RunConfig
    trades: pd.DataFrame  # all markets, parsed
    token_trades: pd.DataFrame  # analyzed token, tick-signed
    operators: set[str]
    n_rejected: int


def prepare(config: RunConfig) -> PipelineContext:
    """Parse the log, flag operators and sign the analyzed token's trades."""
    config.validate()
    result = parse_trades(config.trades, fmt=config.trades_format)
    trades = result.trades
    if trades.empty:
        raise DataError("no valid trades in input")

    platform = read_address_list(config.platform_addresses) \
        if config.platform_addresses else set()
    conversion = read_address_list(config.conversion_actors) \
        if config.conversion_actors else set()
    transfers = read_transfer_pairs(config.transfer_pairs) \
        if config.transfer_pairs else []
    profiles = flag_addresses(trades, platform, conversion, transfers)
    operators = operator_addresses(profiles) if config.exclude_operators else set()

    token_trades = trades[trades["token"] == config.token]
    if token_trades.empty:
        raise DataError(f"no trades in analyzed token: {config.token}")
    token_trades = classify_ticks(token_trades.reset_index(drop=True))
    return PipelineContext(config, trades, token_trades, operators,
                           result.n_rejected)


def _event_bins(ctx: PipelineContext, event: EventSpec) -> pd.DataFrame:
    """Dense bin series over the price window, VWAP seeded from history."""
    w = ctx.config.bin_width
    k_lo, k_hi = event.price_bins(w)
    window_start = event.event_time + (k_lo - 1) * w
    prior = last_price_before(ctx.token_trades, window_start)
    return build_bin_series(
        ctx.token_trades, event, w, k_lo, k_hi, prior_price=prior
    )


def stage_series(ctx: PipelineContext, event: EventSpec, outdir: Path) -> list[str]:
    bins = _event_bins(ctx, event)
    files = [report.write_csv(
        report.bins_frame(ctx.config.token, event.name, bins),
        outdir / "bins.csv",
    )]
    summary = price_response_summary(bins, event, ctx.config.bin_width)
    files.append(report.write_csv(
        report.summary_frame(event.name, summary), outdir / "price_response.csv"
    ))
    if ctx.config.figures:
        files.append(report.plot_price(bins, event.name, outdir / "price.svg"))
    return files


def _event_universe(ctx: PipelineContext, event: EventSpec) -> pd.DataFrame:
    return heterogeneity.build_characteristics(
        ctx.trades, event, operator_addresses=ctx.operators
    )


def stage_eventstudy(
    ctx: PipelineContext, event: EventSpec, outdir: Path,
    chars: pd.DataFrame | None = None,
) -> list[str]:
    w = ctx.config.bin_width
    chars = _event_universe(ctx, event) if chars is None else chars
    universe = set(chars["trader"])
    if not universe:
        raise DataError("no incumbent traders for the event study")
    est_lo, est_hi = event.estimation_bins(w)
    trd_lo, trd_hi = event.trading_bins(w)
    outcomes = eventstudy.trader_bin_outcomes(
        ctx.trades, event, est_lo, trd_hi, w, traders=universe
    )
    baselines = eventstudy.compute_baselines(outcomes, (est_lo, est_hi))
    abnormal = eventstudy.abnormal_activity(outcomes, baselines, (trd_lo, trd_hi))
    agg = eventstudy.aggregate_abnormal(abnormal)
    files = []
    for outcome, frame in agg.items():
        caa = eventstudy.cumulative_abnormal(frame)
        files.append(report.write_csv(
            report.caa_frame(event.name, outcome, caa),
            outdir / f"caa_{outcome}.csv",
        ))
        if ctx.config.figures:
            files.append(report.plot_caa(
                caa, event.name, outcome, outdir / f"caa_{outcome}.svg"
            ))
    newcomers = eventstudy.newcomer_counts(
        ctx.trades, event, trd_lo, trd_hi, w, exclude=ctx.operators
    )
    files.append(report.write_csv(
        report.newcomer_frame(event.name, newcomers), outdir / "newcomers.csv"
    ))
    return files


def _write_fit_or_skip(fit_call, path_base: Path, title: str, files: list[str]) -> None:
    try:
        fit = fit_call()
    except (CollinearityError, NumericalError, SeparationError) as err:
        _skip_note(path_base, str(err), files)
        return
    files.append(report.write_csv(report.regression_frame(fit),
                                  path_base.with_suffix(".csv")))
    txt = path_base.with_suffix(".txt")
    txt.write_text(fit.render_text(title) + "\n")
    files.append(str(txt))


def _independent_characteristics(chars: pd.DataFrame) -> list[str]:
    """Characteristics with variation, deduplicated when columns coincide."""
    usable, seen = [], []
    for c in INTERACTION_SOURCES:
        col = chars[c].to_numpy()
        if chars[c].nunique() < 2:
            continue
        if any((col == other).all() for other in seen):
            continue
        usable.append(c)
        seen.append(col)
    return usable


def _skip_note(path_base: Path, message: str, files: list[str]) -> None:
    path = path_base.with_suffix(".txt")
    path.write_text(f"skipped: {message}\n")
    files.append(str(path))


def stage_regress(
    ctx: PipelineContext, event: EventSpec, outdir: Path,
    chars: pd.DataFrame | None = None,
) -> list[str]:
    w = ctx.config.bin_width
    chars = _event_universe(ctx, event) if chars is None else chars
    files = [report.write_csv(
        report.characteristics_share_frame(chars), outdir / "characteristics.csv"
    )]
    if chars.empty:
        _skip_note(outdir / "regressions", "no incumbent traders", files)
        return files

    # interactions need cross-sectional variation in the characteristic
    usable = _independent_characteristics(chars)
    trd_lo, trd_hi = event.trading_bins(w)
    outcomes = eventstudy.trader_bin_outcomes(
        ctx.trades, event, trd_lo, trd_hi, w, traders=set(chars["trader"])
    )
    cells = heterogeneity.build_panel_cells(
        {event.name: outcomes}, {event.name: chars}, usable
    )
    inter = [f"post_x_{c}" for c in usable]
    for outcome in ("volume", "frequency", "participation"):
        y = f"y_{outcome}"
        base = outdir / f"panel_{outcome}"
        if not usable:
            _skip_note(base, "no characteristic variation", files)
        elif cells[y].nunique() < 2:
            _skip_note(base, f"no variation in {outcome}", files)
        else:
            _write_fit_or_skip(
                lambda: heterogeneity.fit_panel_fe(cells, y, inter),
                base, f"Panel FE: abnormal {outcome}", files,
            )
        base = outdir / f"pooled_{outcome}"
        x_cols = ["post", *usable, *inter]
        if cells[y].nunique() < 2:
            _skip_note(base, f"no variation in {outcome}", files)
        else:
            _write_fit_or_skip(
                lambda: heterogeneity.fit_pooled_ols(cells, y, x_cols,
                                                     event_col=None),
                base, f"Pooled OLS: {outcome}", files,
            )

    # position flips over the trading window
    pre = compute_exposure(
        build_holdings(ctx.trades, as_of=event.event_time)
    ).set_index("address")["net_trump_win"]
    post_ts = event.event_time + event.trading_window[1]
    post = compute_exposure(
        build_holdings(ctx.trades, as_of=post_ts)
    ).set_index("address")["net_trump_win"]
    flips = heterogeneity.detect_flips(pre, post)
    flip_df = chars.copy()
    flip_df["flip"] = flips.reindex(flip_df["trader"]).fillna(0).to_numpy()
    base = outdir / "logit_flip"
    if flip_df["flip"].nunique() < 2:
        _skip_note(base, "no variation in position flips", files)
    elif not usable:
        _skip_note(base, "no characteristic variation", files)
    else:
        _write_fit_or_skip(
            lambda: heterogeneity.fit_logit(flip_df, "flip", usable,
                                            cluster_col="trader"),
            base, "Logit: position flip", files,
        )
    return files


def stage_impact(ctx: PipelineContext, event: EventSpec, outdir: Path) -> list[str]:
    bins = _event_bins(ctx, event)
    series = impact.log_odds_series(bins)
    lag = ctx.config.hac_lag
    rows = []
    pre = series.loc[series.index <= 0]
    post = series.loc[series.index >= 1]
    for label, sub in (("pre", pre), ("post", post)):
        if sub.empty:
            continue
        start_k = int(sub.index.min())
        for fitter in (impact.fit_kyle, impact.fit_glosten_harris):
            try:
                est = fitter(sub, hac_lag=lag)
            except PmshockError:
                continue
            for param in est.params.index:
                rows.append({
                    "window_start_k": start_k,
                    "estimator": f"{est.estimator}_{label}",
                    "param": param,
                    "estimate": float(est.params[param]),
                    "se": float(est.se[param]),
                    "nobs": est.nobs,
                })
    rolling = impact.rolling_estimates(series, window=ctx.config.rolling_window)
    for _, r in rolling.iterrows():
        rows.append({
            "window_start_k": int(r["window_start_k"]),
            "estimator": "kyle_rolling",
            "param": "lambda",
            "estimate": float(r["lambda"]),
            "se": float(r["se_lambda"]),
            "nobs": int(r["nobs"]),
        })
    if not rows:
        raise DataError("no estimable impact windows")
    files = [report.write_csv(report.impact_frame(event.name, rows),
                              outdir / "impact.csv")]
    if ctx.config.figures and not rolling.empty:
        roll_df = pd.DataFrame({
            "k": rolling["k"],
            "value": rolling["lambda"],
            "lo95": rolling["lambda"] - 1.96 * rolling["se_lambda"],
            "hi95": rolling["lambda"] + 1.96 * rolling["se_lambda"],
        })
        files.append(report.plot_diagnostic(
            roll_df, event.name, "rolling Kyle lambda",
            outdir / "impact_rolling.svg", hline=0.0,
        ))
    return files


def stage_diagnostics(ctx: PipelineContext, event: EventSpec, outdir: Path) -> list[str]:
    bins = _event_bins(ctx, event)
    series = impact.log_odds_series(bins)
    files = []

    vr = rolling_variance_ratio(series["theta"], q=ctx.config.vr_q,
                                window=ctx.config.vr_window)
    if not vr.empty:
        vr_df = vr.rename(columns={"vr": "value"})[["k", "value", "lo95", "hi95"]]
        files.append(report.write_csv(
            report.diagnostics_frame(event.name, vr_df), outdir / "vr.csv"
        ))
        if ctx.config.figures:
            files.append(report.plot_diagnostic(
                vr_df, event.name, f"VR({ctx.config.vr_q})",
                outdir / "vr.svg", hline=1.0,
            ))

    ts = two_sidedness(bins)
    ts_df = pd.DataFrame({"k": bins.index, "value": ts["smoothed"].to_numpy()})
    files.append(report.write_csv(
        report.diagnostics_frame(event.name, ts_df), outdir / "two_sidedness.csv"
    ))
    if ctx.config.figures:
        files.append(report.plot_diagnostic(
            ts_df.dropna(subset=["value"]), event.name, "two-sidedness",
            outdir / "two_sidedness.svg",
        ))
    return files


def stage_placebo(ctx: PipelineContext, event: EventSpec, outdir: Path) -> list[str]:
    cfg = ctx.config
    if cfg.placebo_draws == 0:
        return []
    spec = placebo.PlaceboSpec(n_draws=cfg.placebo_draws, seed=cfg.seed,
                               min_pool_size=cfg.placebo_min_pool)
    stats = {
        name: placebo.DEFAULT_STATISTICS[name]()
        for name in cfg.placebo_statistics
    }
    results = placebo.run_placebo_suite(
        ctx.token_trades, [event], spec=spec, statistics=stats
    )
    return [report.write_csv(report.placebo_frame(results), outdir / "placebo.csv")]


STAGES = {
    "series": stage_series,
    "eventstudy": stage_eventstudy,
    "regress": stage_regress,
    "impact": stage_impact,
    "diagnostics": stage_diagnostics,
    "placebo": stage_placebo,
}


def run(config: RunConfig, stages: list[str] | None = None) -> dict:
    """Run the configured stages for every event and write the manifest."""
    ctx = prepare(config)
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    stage_names = list(STAGES) if stages is None else stages
    files: list[str] = []
    try:
        for event in config.events:
            evdir = outdir / "events" / event.name
            evdir.mkdir(parents=True, exist_ok=True)
            chars = None
            for name in stage_names:
                if name in ("eventstudy", "regress"):
                    if chars is None:
                        chars = _event_universe(ctx, event)
                    files += STAGES[name](ctx, event, evdir, chars=chars)
                else:
                    files += STAGES[name](ctx, event, evdir)
    except PmshockError as err:
        err.args = (f"{event.name} ({config.token}): {err}",)
        report.write_manifest(outdir, files, config.config_hash(), config.seed,
                              status="incomplete", error=str(err))
        raise
    manifest = report.write_manifest(
        outdir, files, config.config_hash(), config.seed
    )
    return {"manifest": manifest, "files": files, "n_rejected": ctx.n_rejected}
