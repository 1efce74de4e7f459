"""Deterministic CSV writers and vector figures for pipeline artifacts."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import matplotlib
import numpy as np
import pandas as pd

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams["svg.hashsalt"] = "pmshock"  # reproducible SVG element ids


def write_csv(df: pd.DataFrame, path: str | Path) -> str:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, lineterminator="\n")
    return str(path)


def bins_frame(token: str, event: str, bins: pd.DataFrame) -> pd.DataFrame:
    out = bins.reset_index()
    out.insert(0, "event", event)
    out.insert(0, "token", token)
    return out[
        ["token", "event", "k", "vwap", "volume_usdc", "buy_usdc", "sell_usdc",
         "q_millions", "trade_count"]
    ]


def caa_frame(event: str, outcome: str, caa: pd.DataFrame) -> pd.DataFrame:
    out = caa.reset_index()
    out.insert(0, "outcome", outcome)
    out.insert(0, "event", event)
    return out[["event", "outcome", "k", "caa", "se", "lo95", "hi95", "n"]]


def newcomer_frame(event: str, counts: pd.DataFrame) -> pd.DataFrame:
    out = counts.copy()
    out.insert(0, "event", event)
    return out[["event", "k", "newcomers"]]


def regression_frame(fit) -> pd.DataFrame:
    out = fit.summary_frame().reset_index().rename(columns={"index": "term"})
    return out[["term", "estimate", "se", "t", "p", "stars"]]


def impact_frame(event: str, rows: list[dict]) -> pd.DataFrame:
    """Rows: dicts with window_start_k, estimator, param, estimate, se, nobs."""
    out = pd.DataFrame(rows)
    out["lo95"] = out["estimate"] - 1.96 * out["se"]
    out["hi95"] = out["estimate"] + 1.96 * out["se"]
    out.insert(0, "event", event)
    return out[
        ["event", "window_start_k", "estimator", "param", "estimate", "se",
         "lo95", "hi95", "nobs"]
    ]


def diagnostics_frame(event: str, df: pd.DataFrame) -> pd.DataFrame:
    """Expects columns k, value and optionally lo95/hi95."""
    out = df.copy()
    for col in ("lo95", "hi95"):
        if col not in out.columns:
            out[col] = np.nan
    out.insert(0, "event", event)
    return out[["event", "k", "value", "lo95", "hi95"]]


def placebo_frame(results: pd.DataFrame) -> pd.DataFrame:
    return results[
        ["event", "statistic", "real_value", "p_value", "usable_draws", "seed"]
    ]


def summary_frame(event: str, summary: dict) -> pd.DataFrame:
    return pd.DataFrame(
        [{"event": event, **{k: summary[k] for k in
          ("pre", "peak", "trough", "end", "peak_delta", "trough_delta",
           "total_delta")}}]
    )


def characteristics_share_frame(chars: pd.DataFrame) -> pd.DataFrame:
    cols = [c for c in chars.columns if c != "trader"]
    n = len(chars)
    rows = [
        {"characteristic": c,
         "count": int(chars[c].sum()),
         "share": float(chars[c].mean()) if n else np.nan}
        for c in cols
    ]
    out = pd.DataFrame(rows)
    out.insert(0, "n_traders", n)
    return out[["characteristic", "count", "share", "n_traders"]]


def _save(fig, path: str | Path) -> str:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return str(path)


def plot_price(bins: pd.DataFrame, event: str, path: str | Path) -> str:
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.step(bins.index, bins["vwap"], where="post", lw=1.2)
    ax.axvline(0, color="0.4", ls="--", lw=0.8)
    ax.set_xlabel("5-minute bins from event")
    ax.set_ylabel("VWAP")
    ax.set_title(f"{event}: price path")
    fig.tight_layout()
    return _save(fig, path)


def plot_caa(caa: pd.DataFrame, event: str, outcome: str, path: str | Path) -> str:
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(caa.index, caa["caa"], lw=1.4)
    ax.fill_between(caa.index, caa["lo95"], caa["hi95"], alpha=0.25, lw=0)
    ax.axhline(0, color="0.4", lw=0.8)
    ax.axvline(0, color="0.4", ls="--", lw=0.8)
    ax.set_xlabel("5-minute bins from event")
    ax.set_ylabel("cumulative abnormal " + outcome)
    ax.set_title(f"{event}: CAA ({outcome})")
    fig.tight_layout()
    return _save(fig, path)


def plot_diagnostic(
    df: pd.DataFrame, event: str, label: str, path: str | Path,
    hline: float | None = None,
) -> str:
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(df["k"], df["value"], lw=1.2)
    if "lo95" in df.columns and df["lo95"].notna().any():
        ax.fill_between(df["k"], df["lo95"], df["hi95"], alpha=0.25, lw=0)
    if hline is not None:
        ax.axhline(hline, color="0.4", lw=0.8)
    ax.axvline(0, color="0.4", ls="--", lw=0.8)
    ax.set_xlabel("5-minute bins from event")
    ax.set_ylabel(label)
    ax.set_title(f"{event}: {label}")
    fig.tight_layout()
    return _save(fig, path)


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(
    outdir: str | Path,
    files: list[str],
    config_hash: str,
    seed: int,
    status: str = "complete",
    error: str | None = None,
) -> str:
    """Manifest of every artifact with content hashes; written last."""
    outdir = Path(outdir)
    entries = {
        str(Path(f).relative_to(outdir)): file_sha256(f) for f in sorted(files)
    }
    manifest = {
        "config_hash": config_hash,
        "seed": seed,
        "status": status,
        "files": entries,
    }
    if error is not None:
        manifest["error"] = error
    path = outdir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return str(path)
