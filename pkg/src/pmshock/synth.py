"""Seeded synthetic market generator used as the estimation oracle.

The log-odds price follows Δθ_t = λ_perm·Q_t + λ_trans·ΔQ_t + η_t plus any
scheduled shock jumps, with Q_t the realized signed flow of the main trading
crowd. Trade prices snap to the bin's θ-implied center with a one-tick nudge
in the trade's direction, so the tick rule recovers every generated
direction and re-binning the emitted log reproduces the generator's
per-bin aggregates.

With an exposure configuration the generator layers on endowment trades
(that fix each trader's pre-event net exposure sign), a per-trader
participation process whose post-event probability shifts for
negative-exposure traders, and optional explicit position-flip trades.
Liquidity-provider counterparties are reported as platform addresses.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.special import expit, logit

from .errors import NumericalError, ValidationError
from .series import bin_index

CENTER_BUDGET = 1e-4  # θ-implied centers must stay this far inside (0, 1)


@dataclass(frozen=True)
class ShockSpec:
    """One scheduled event: a θ jump plus temporary arrival/flow changes."""

    bin: int
    jump: float = 0.0
    pulse: float = 0.0  # one-bin transitory θ move, reversed in the next bin
    arrival_multiplier: float = 1.0
    duration_bins: int = 12
    two_sidedness_target: float | None = None  # 1 - |2b - 1| for buy prob b


@dataclass(frozen=True)
class ExposureConfig:
    """Trader endowments and the post-event behavioral response."""

    n_negative: int
    endowment_yes: float = 1e4  # YES tokens endowed to every trader
    endowment_no: float = 3e4  # NO tokens endowed to negative-exposure traders
    participation_base: float = 0.25
    participation_gamma: float = 0.0  # post-event shift for negative exposure
    flip_alpha: float | None = None  # logit intercept; None disables flips
    flip_beta_negative: float = 0.0


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    n_bins: int = 72
    bin_width: int = 300
    start_time: int = 1719792000  # 2024-07-01T00:00:00Z
    market: str = "Trump"  # token names feed the net-exposure mapping
    n_traders: int = 50
    n_lps: int = 2
    base_rate: float = 20.0  # expected trades per bin
    value_scale: float = 100.0  # USDC scale of trade values
    initial_price: float = 0.6
    sigma_theta: float = 0.0
    lambda_perm: float = 0.0
    lambda_trans: float = 0.0
    tick_jitter: float = 1e-6  # 0 pins prices to the bin center exactly
    event_bin: int | None = None
    shocks: tuple[ShockSpec, ...] = ()
    exposure: ExposureConfig | None = None

    def validate(self) -> None:
        if self.n_bins < 1 or self.bin_width < 1:
            raise ValidationError("n_bins and bin_width must be positive")
        if self.base_rate < 0 or self.sigma_theta < 0 or self.tick_jitter < 0:
            raise ValidationError("rates, volatility and jitter must be >= 0")
        if not 0.0 < self.initial_price < 1.0:
            raise ValidationError("initial_price must lie in (0, 1)")
        if self.n_traders < 2 or self.n_lps < 1:
            raise ValidationError("need at least 2 traders and 1 liquidity provider")
        for sh in self.shocks:
            if not 0 <= sh.bin < self.n_bins:
                raise ValidationError("shock bin outside the sample")
            if sh.arrival_multiplier < 0 or sh.duration_bins < 1:
                raise ValidationError("bad shock schedule")
            if sh.two_sidedness_target is not None and not (
                0.0 <= sh.two_sidedness_target <= 1.0
            ):
                raise ValidationError("two_sidedness_target must lie in [0, 1]")
        exp = self.exposure
        if exp is not None:
            if not 0 < exp.n_negative < self.n_traders:
                raise ValidationError("degenerate exposure distribution")
            if exp.endowment_no <= exp.endowment_yes:
                raise ValidationError(
                    "endowment_no must exceed endowment_yes for negative exposure"
                )
            if not 0.0 <= exp.participation_base <= 1.0:
                raise ValidationError("participation_base must lie in [0, 1]")

    def resolved_event_bin(self) -> int:
        if self.event_bin is not None:
            return self.event_bin
        if self.shocks:
            return self.shocks[0].bin
        return self.n_bins // 2


def _snap_prices(centers: np.ndarray, directions: np.ndarray, jitter: float) -> np.ndarray:
    """Sequential trade prices: at the center, nudged one tick along d.

    Guarantees sign(p_n - p_{n-1}) == d_n when jitter > 0; with jitter 0,
    prices sit exactly on the bin center.
    """
    p = np.empty(len(centers))
    last = np.nan
    for i in range(len(centers)):
        c = centers[i]
        if np.isnan(last) or jitter == 0.0:
            p[i] = c
        elif directions[i] > 0:
            p[i] = max(c, last + jitter)
        else:
            p[i] = min(c, last - jitter)
        last = p[i]
    return p


def generate(config: SynthConfig) -> tuple[pd.DataFrame, dict]:
    """Emit a full trade log and the ground-truth record, deterministically."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    w, n = config.bin_width, config.n_bins
    s = config.resolved_event_bin()
    start = config.start_time
    event_time = start + (s + 1) * w
    traders = np.array([f"trader-{i:04d}" for i in range(config.n_traders)])
    lps = np.array([f"lp-{i:02d}" for i in range(config.n_lps)])
    exp = config.exposure

    neg = np.zeros(config.n_traders, dtype=bool)
    if exp is not None:
        neg[rng.choice(config.n_traders, exp.n_negative, replace=False)] = True

    # per-bin arrival rate, buy probability, scheduled θ moves
    rate = np.full(n, float(config.base_rate))
    p_buy = np.full(n, 0.5)
    sched = np.zeros(n)
    for sh in config.shocks:
        lo, hi = sh.bin, min(n, sh.bin + sh.duration_bins)
        rate[lo:hi] *= sh.arrival_multiplier
        if sh.two_sidedness_target is not None:
            p_buy[lo:hi] = (2.0 - sh.two_sidedness_target) / 2.0
        sched[sh.bin] += sh.jump + sh.pulse
        if sh.bin + 1 < n:
            sched[sh.bin + 1] -= sh.pulse

    # main-flow trades
    if exp is None:
        counts = rng.poisson(rate)
        m_bin = np.repeat(np.arange(n), counts)
        m_trader = rng.integers(0, config.n_traders, len(m_bin))
    else:
        # one Bernoulli participation draw per trader per bin
        post = (np.arange(n) >= s)[:, None]
        p_mat = exp.participation_base + exp.participation_gamma * (neg[None, :] & post)
        if (p_mat > 1.0).any():
            raise ValidationError("participation probability exceeds 1")
        hit_bin, hit_trader = np.nonzero(rng.random((n, config.n_traders)) < p_mat)
        m_bin, m_trader = hit_bin, hit_trader
    m = len(m_bin)
    m_dir = np.where(rng.random(m) < p_buy[m_bin], 1, -1).astype(np.int64)
    m_value = config.value_scale * rng.lognormal(0.0, 1.0, m)
    m_ts = start + m_bin * w + rng.integers(1, w + 1, m)
    order = np.lexsort((np.arange(m), m_ts))
    m_bin, m_trader, m_dir = m_bin[order], m_trader[order], m_dir[order]
    m_value, m_ts = m_value[order], m_ts[order]
    if m and exp is None:
        m_dir[0] = 1  # the tick rule's warm-up convention is a buy

    # flow and the θ path driven by the main crowd
    q = np.zeros(n)
    np.add.at(q, m_bin, m_dir * m_value / 1e6)
    dq = np.diff(q, prepend=0.0)
    eta = rng.normal(0.0, config.sigma_theta, n) if config.sigma_theta > 0 else np.zeros(n)
    dtheta = config.lambda_perm * q + config.lambda_trans * dq + eta + sched
    theta0 = float(logit(config.initial_price))
    theta = theta0 + np.cumsum(dtheta)
    center = expit(theta)
    if (center < CENTER_BUDGET).any() or (center > 1.0 - CENTER_BUDGET).any():
        raise NumericalError(
            "price escape from (0,1): reduce shock sizes, impact or volatility"
        )

    yes_side = np.full(len(m_bin), "YES", dtype=object)
    parts = [
        pd.DataFrame(
            {
                "ts": m_ts,
                "side": yes_side,
                "true_direction": m_dir,
                "value": m_value,
                "quantity": np.nan,
                "center": center[m_bin] if len(m_bin) else np.empty(0),
                "taker": traders[m_trader] if len(m_bin) else np.empty(0, object),
            }
        )
    ]

    flip_truth = None
    if exp is not None:
        # endowment trades in a pre-sample block: every trader buys YES,
        # negative-exposure traders additionally buy a larger NO position
        n_endow = config.n_traders + int(neg.sum())
        e_bins = -(-(n_endow + 1) // w) + 1
        e_ts = start - e_bins * w + 1 + np.arange(n_endow)
        parts.append(
            pd.DataFrame(
                {
                    "ts": e_ts[: config.n_traders],
                    "side": "YES",
                    "true_direction": 1,
                    "value": np.nan,
                    "quantity": exp.endowment_yes,
                    "center": config.initial_price,
                    "taker": traders,
                }
            )
        )
        parts.append(
            pd.DataFrame(
                {
                    "ts": e_ts[config.n_traders :],
                    "side": "NO",
                    "true_direction": 1,
                    "value": np.nan,
                    "quantity": exp.endowment_no,
                    "center": 1.0 - config.initial_price,
                    "taker": traders[neg],
                }
            )
        )
        if exp.flip_alpha is not None:
            p_flip = expit(exp.flip_alpha + exp.flip_beta_negative * neg)
            flips = rng.random(config.n_traders) < p_flip
            flip_truth = {
                "flip_alpha": exp.flip_alpha,
                "flip_beta_negative": exp.flip_beta_negative,
                "flipped": {t: bool(f) for t, f in zip(traders, flips)},
            }
            f_idx = np.flatnonzero(flips)
            if len(f_idx):
                f_bin = rng.integers(s, n, len(f_idx))
                f_u = rng.integers(1, w + 1, len(f_idx))
                f_neg = neg[f_idx]
                # buy the opposite token for twice the net exposure magnitude
                f_qty = np.where(
                    f_neg,
                    2.0 * (exp.endowment_no - exp.endowment_yes),
                    2.0 * exp.endowment_yes,
                )
                f_side = np.where(f_neg, "YES", "NO").astype(object)
                f_center = np.where(f_neg, center[f_bin], 1.0 - center[f_bin])
                parts.append(
                    pd.DataFrame(
                        {
                            "ts": start + f_bin * w + f_u,
                            "side": f_side,
                            "true_direction": 1,
                            "value": np.nan,
                            "quantity": f_qty,
                            "center": f_center,
                            "taker": traders[f_idx],
                        }
                    )
                )

    raw = pd.concat(parts, ignore_index=True)
    raw = raw.sort_values("ts", kind="stable").reset_index(drop=True)

    # per-token sequential snap prices, then fill the missing leg of
    # value = price * quantity
    raw["price"] = np.nan
    for side in ("YES", "NO"):
        mask = (raw["side"] == side).to_numpy()
        if not mask.any():
            continue
        raw.loc[mask, "price"] = _snap_prices(
            raw.loc[mask, "center"].to_numpy(),
            raw.loc[mask, "true_direction"].to_numpy(),
            config.tick_jitter,
        )
    if (raw["price"] <= 0).any() or (raw["price"] >= 1).any():
        raise NumericalError("price escape from (0,1): too many one-sided trades")
    no_qty = raw["quantity"].isna()
    raw.loc[no_qty, "quantity"] = raw.loc[no_qty, "value"] / raw.loc[no_qty, "price"]
    no_val = raw["value"].isna()
    raw.loc[no_val, "value"] = raw.loc[no_val, "quantity"] * raw.loc[no_val, "price"]

    makers = lps[rng.integers(0, config.n_lps, len(raw))]
    n_digits = max(8, len(str(len(raw))))
    trades = pd.DataFrame(
        {
            "trade_id": [f"t{i:0{n_digits}d}" for i in range(len(raw))],
            "ts": raw["ts"].astype(np.int64),
            "market": config.market,
            "side": raw["side"].astype(str),
            "price": raw["price"].astype(float),
            "quantity": raw["quantity"].astype(float),
            "value": raw["value"].astype(float),
            "maker": makers,
            "taker": raw["taker"].astype(str),
            "taker_direction": np.where(raw["true_direction"].to_numpy() > 0, "Buy", "Sell"),
        }
    )
    trades["token"] = trades["market"] + "_" + trades["side"]
    trades["true_direction"] = raw["true_direction"].astype(np.int64)

    truth = _build_truth(config, trades, s, event_time, theta, center, q, lps)
    if flip_truth is not None:
        truth["exposure"]["flips"] = flip_truth
    return trades, truth


def _build_truth(
    config: SynthConfig,
    trades: pd.DataFrame,
    event_bin: int,
    event_time: int,
    theta: np.ndarray,
    center: np.ndarray,
    dgp_q: np.ndarray,
    lps: np.ndarray,
) -> dict:
    """Ground-truth record with per-bin aggregates over the emitted trades."""
    yes_token = f"{config.market}_YES"
    yes = trades[trades["token"] == yes_token].copy()
    yes["k"] = bin_index(yes["ts"].to_numpy(), event_time, config.bin_width)
    k_lo, k_hi = -event_bin, config.n_bins - 1 - event_bin
    yes = yes[(yes["k"] >= k_lo) & (yes["k"] <= k_hi)]
    yes["pv"] = yes["price"] * yes["value"]
    yes["buy_v"] = yes["value"].where(yes["true_direction"] > 0, 0.0)
    g = yes.groupby("k")
    agg = pd.DataFrame(
        {
            "volume_usdc": g["value"].sum(),
            "pv": g["pv"].sum(),
            "buy_usdc": g["buy_v"].sum(),
            "trade_count": g.size(),
        }
    ).reindex(range(k_lo, k_hi + 1), fill_value=0.0)
    agg["vwap"] = np.where(agg["volume_usdc"] > 0, agg["pv"] / agg["volume_usdc"], np.nan)
    agg["sell_usdc"] = agg["volume_usdc"] - agg["buy_usdc"]
    agg["q_millions"] = (agg["buy_usdc"] - agg["sell_usdc"]) / 1e6

    cfg = asdict(config)
    cfg["shocks"] = [asdict(sh) for sh in config.shocks]
    truth = {
        "seed": config.seed,
        "config": cfg,
        "market": config.market,
        "token": yes_token,
        "event_bin": event_bin,
        "event_time": int(event_time),
        "bin_width": config.bin_width,
        "lambda_perm": config.lambda_perm,
        "lambda_trans": config.lambda_trans,
        "sigma_theta": config.sigma_theta,
        "theta": [float(x) for x in theta],
        "center_price": [float(x) for x in center],
        "dgp_q_millions": [float(x) for x in dgp_q],
        "bins": {
            "k": [int(k) for k in agg.index],
            "vwap": [None if np.isnan(x) else float(x) for x in agg["vwap"]],
            "volume_usdc": [float(x) for x in agg["volume_usdc"]],
            "buy_usdc": [float(x) for x in agg["buy_usdc"]],
            "sell_usdc": [float(x) for x in agg["sell_usdc"]],
            "q_millions": [float(x) for x in agg["q_millions"]],
            "trade_count": [int(x) for x in agg["trade_count"]],
        },
        "true_directions": "".join(
            "B" if d > 0 else "S" for d in trades["true_direction"]
        ),
        "platform_addresses": [str(a) for a in lps],
        "n_trades": int(len(trades)),
    }
    if config.exposure is not None:
        exp = config.exposure
        neg_traders = sorted(
            trades.loc[
                (trades["token"] == f"{config.market}_NO")
                & (trades["taker"].str.startswith("trader-"))
                & (trades["ts"] < config.start_time),
                "taker",
            ].unique()
        )
        truth["exposure"] = {
            "n_negative": exp.n_negative,
            "negative_traders": neg_traders,
            "participation_base": exp.participation_base,
            "participation_gamma": exp.participation_gamma,
            "endowment_yes": exp.endowment_yes,
            "endowment_no": exp.endowment_no,
        }
    return truth


def trades_to_csv_frame(trades: pd.DataFrame) -> pd.DataFrame:
    """Map the internal trade frame onto the external CSV schema."""
    stamp = np.datetime_as_string(
        trades["ts"].to_numpy().astype("datetime64[s]"), timezone="UTC"
    )
    return pd.DataFrame(
        {
            "trade_id": trades["trade_id"],
            "timestamp_utc": stamp,
            "market": trades["market"],
            "side_token": trades["side"],
            "price": trades["price"],
            "quantity": trades["quantity"],
            "value": trades["value"],
            "maker": trades["maker"],
            "taker": trades["taker"],
            "taker_direction": trades["taker_direction"],
        }
    )


def write_outputs(trades: pd.DataFrame, truth: dict, outdir: str | Path) -> dict:
    """Write trades.csv, truth.json and platform_addresses.txt; return paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    trades_path = outdir / "trades.csv"
    truth_path = outdir / "truth.json"
    platform_path = outdir / "platform_addresses.txt"
    trades_to_csv_frame(trades).to_csv(trades_path, index=False)
    with open(truth_path, "w") as fh:
        json.dump(truth, fh, sort_keys=True, indent=1)
        fh.write("\n")
    platform_path.write_text("".join(a + "\n" for a in truth["platform_addresses"]))
    return {
        "trades": str(trades_path),
        "truth": str(truth_path),
        "platform_addresses": str(platform_path),
    }
