"""Shared fixtures and trade-frame builders."""
from __future__ import annotations

import pandas as pd
import pytest

T0 = 1719792000  # 2024-07-01T00:00:00Z

COLUMNS = [
    "trade_id", "ts", "market", "side", "price", "quantity", "value",
    "maker", "taker", "taker_direction",
]


def make_trades(rows: list[dict]) -> pd.DataFrame:
    """Internal-schema trade frame from terse row dicts."""
    out = []
    for i, row in enumerate(rows):
        price = float(row.get("price", 0.5))
        value = float(row.get("value", row.get("quantity", 1.0) * price))
        quantity = float(row.get("quantity", value / price))
        out.append(
            {
                "trade_id": row.get("trade_id", f"t{i:06d}"),
                "ts": int(row.get("ts", T0 + i)),
                "market": row.get("market", "Trump"),
                "side": row.get("side", "YES"),
                "price": price,
                "quantity": quantity,
                "value": value,
                "maker": row.get("maker", "mkr"),
                "taker": row.get("taker", "tkr"),
                "taker_direction": row.get("taker_direction", "Buy"),
            }
        )
    df = pd.DataFrame(out, columns=COLUMNS)
    df["token"] = df["market"] + "_" + df["side"]
    return df.sort_values(["ts", "trade_id"], kind="stable").reset_index(drop=True)


def to_csv_text(trades: pd.DataFrame) -> str:
    """External CSV schema text for parser tests."""
    from pmshock.synth import trades_to_csv_frame

    return trades_to_csv_frame(trades).to_csv(index=False)


@pytest.fixture(scope="session")
def small_synth():
    """One deterministic synthetic market with impact, reused across tests."""
    from pmshock import synth

    cfg = synth.SynthConfig(
        seed=11, n_bins=73, base_rate=30.0, lambda_perm=0.25,
        lambda_trans=0.10, sigma_theta=0.01,
    )
    trades, truth = synth.generate(cfg)
    return cfg, trades, truth
