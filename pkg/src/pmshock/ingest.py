"""Trade-log ingestion: parsing, address screening, holdings replay, exposure.

Trades are carried around as a pandas DataFrame with canonical columns

    trade_id, ts (int64 epoch seconds UTC), market, side, price, quantity,
    value, maker, taker, taker_direction, token

sorted by (ts, trade_id). ``token`` is ``{market}_{side}``, e.g. ``Trump_YES``.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
import pandas as pd

from .errors import DataError

TRADE_COLUMNS = [
    "trade_id",
    "timestamp_utc",
    "market",
    "side_token",
    "price",
    "quantity",
    "value",
    "maker",
    "taker",
    "taker_direction",
]

CANDIDATES = ("Trump", "Biden", "Harris")

#: sign of each token leg in the net "Trump wins" exposure
EXPOSURE_SIGNS = {
    "Trump_YES": 1.0,
    "Biden_NO": 1.0,
    "Harris_NO": 1.0,
    "Trump_NO": -1.0,
    "Biden_YES": -1.0,
    "Harris_YES": -1.0,
}

#: tolerance for "holdings ever went negative" (raw logs store 6-decimal fixed point)
NEG_HOLDINGS_TOL = 1e-9


@dataclass
class RowError:
    line: int
    message: str


@dataclass
class ParseResult:
    """Parsed trades plus per-row rejections (with 1-based source line numbers)."""

    trades: pd.DataFrame
    errors: list[RowError] = field(default_factory=list)

    @property
    def n_rejected(self) -> int:
        return len(self.errors)


@dataclass
class AddressProfile:
    address: str
    is_platform: bool = False
    is_advanced_operator: bool = False
    cluster_id: str | None = None
    first_trade_time: int | None = None


@dataclass
class HoldingsLedger:
    """Signed per-address token balances replayed from trades up to ``as_of``."""

    balances: pd.DataFrame  # columns: address, token, balance
    as_of: int | None = None

    def balance(self, address: str, token: str) -> float:
        m = (self.balances["address"] == address) & (self.balances["token"] == token)
        sel = self.balances.loc[m, "balance"]
        return float(sel.iloc[0]) if len(sel) else 0.0


def _empty_trades() -> pd.DataFrame:
    return pd.DataFrame(
        {
            "trade_id": pd.Series(dtype=str),
            "ts": pd.Series(dtype=np.int64),
            "market": pd.Series(dtype=str),
            "side": pd.Series(dtype=str),
            "price": pd.Series(dtype=float),
            "quantity": pd.Series(dtype=float),
            "value": pd.Series(dtype=float),
            "maker": pd.Series(dtype=str),
            "taker": pd.Series(dtype=str),
            "taker_direction": pd.Series(dtype=str),
            "token": pd.Series(dtype=str),
        }
    )


def parse_trades(source, fmt: str = "csv") -> ParseResult:
    """Parse a trade log from a path or file-like object.

    Malformed rows are rejected individually and reported with their source
    line number; an empty input yields an empty frame. A missing column is a
    schema violation and raises :class:`DataError`.
    """
    fmt = fmt.lower()
    if fmt == "csv":
        try:
            raw = pd.read_csv(source, dtype=str, keep_default_na=False)
        except pd.errors.EmptyDataError:
            return ParseResult(_empty_trades())
        line0 = 2  # line 1 is the header
    elif fmt == "jsonl":
        raw = pd.read_json(source, lines=True, dtype=str)
        if raw.empty:
            return ParseResult(_empty_trades())
        line0 = 1
    else:
        raise DataError(f"unknown trade log format: {fmt}")

    missing = [c for c in TRADE_COLUMNS if c not in raw.columns]
    if missing:
        raise DataError(f"missing column: {', '.join(missing)}")
    if raw.empty:
        return ParseResult(_empty_trades())

    raw = raw.reset_index(drop=True)
    n = len(raw)
    lines = np.arange(n) + line0

    ts = pd.to_datetime(raw["timestamp_utc"], utc=True, errors="coerce")
    price = pd.to_numeric(raw["price"], errors="coerce")
    quantity = pd.to_numeric(raw["quantity"], errors="coerce")
    value = pd.to_numeric(raw["value"], errors="coerce")

    # first failing check wins, checked in schema order
    checks = [
        (ts.isna().to_numpy(), "unparseable timestamp"),
        (price.isna().to_numpy(), "unparseable price"),
        (~((price > 0) & (price < 1)).fillna(False).to_numpy(), "price out of range"),
        (quantity.isna().to_numpy(), "unparseable quantity"),
        ((quantity < 0).fillna(False).to_numpy(), "negative quantity"),
        (value.isna().to_numpy(), "unparseable value"),
        ((value < 0).fillna(False).to_numpy(), "negative value"),
        (
            (
                (value - price * quantity).abs() > 1e-6 * value.abs() + 1e-9
            ).fillna(True).to_numpy(),
            "value does not match price*quantity",
        ),
        ((raw["maker"] == raw["taker"]).to_numpy(), "maker equals taker"),
        (~raw["side_token"].isin(["YES", "NO"]).to_numpy(), "bad side_token"),
        (~raw["taker_direction"].isin(["Buy", "Sell"]).to_numpy(), "bad taker_direction"),
    ]
    bad = np.zeros(n, dtype=bool)
    reason = np.full(n, "", dtype=object)
    for mask, msg in checks:
        fresh = mask & ~bad
        reason[fresh] = msg
        bad |= mask

    errors = [RowError(int(l), str(r)) for l, r in zip(lines[bad], reason[bad])]

    ok = ~bad
    trades = pd.DataFrame(
        {
            "trade_id": raw.loc[ok, "trade_id"].astype(str).to_numpy(),
            "ts": (ts[ok].astype("int64") // 10**9).to_numpy(),
            "market": raw.loc[ok, "market"].astype(str).to_numpy(),
            "side": raw.loc[ok, "side_token"].astype(str).to_numpy(),
            "price": price[ok].to_numpy(),
            "quantity": quantity[ok].to_numpy(),
            "value": value[ok].to_numpy(),
            "maker": raw.loc[ok, "maker"].astype(str).to_numpy(),
            "taker": raw.loc[ok, "taker"].astype(str).to_numpy(),
            "taker_direction": raw.loc[ok, "taker_direction"].astype(str).to_numpy(),
        }
    )
    trades["token"] = trades["market"] + "_" + trades["side"]
    trades = trades.sort_values(["ts", "trade_id"], kind="stable").reset_index(drop=True)
    return ParseResult(trades, errors)


def buyer_seller(trades: pd.DataFrame) -> tuple[pd.Series, pd.Series]:
    """Addresses buying / selling ``side_token`` in each trade."""
    taker_buys = trades["taker_direction"] == "Buy"
    buyer = trades["taker"].where(taker_buys, trades["maker"])
    seller = trades["maker"].where(taker_buys, trades["taker"])
    return buyer, seller


def _position_deltas(trades: pd.DataFrame) -> pd.DataFrame:
    """One row per trade leg: signed token quantity, in trade order."""
    buyer, seller = buyer_seller(trades)
    n = len(trades)
    out = pd.DataFrame(
        {
            "seq": np.repeat(np.arange(n), 2),
            "address": np.column_stack([buyer.to_numpy(), seller.to_numpy()]).ravel(),
            "token": np.repeat(trades["token"].to_numpy(), 2),
            "delta": np.column_stack(
                [trades["quantity"].to_numpy(), -trades["quantity"].to_numpy()]
            ).ravel(),
        }
    )
    return out


def negative_holdings_addresses(trades: pd.DataFrame, tol: float = NEG_HOLDINGS_TOL) -> set[str]:
    """Addresses whose replayed balance in any token ever dips below -tol."""
    if trades.empty:
        return set()
    deltas = _position_deltas(trades)
    deltas = deltas.sort_values(["address", "token", "seq"], kind="stable")
    running = deltas.groupby(["address", "token"], sort=False)["delta"].cumsum()
    bad = deltas.loc[running.to_numpy() < -tol, "address"]
    return set(bad.unique())


def _transfer_clusters(pairs: Iterable[tuple[str, str]]) -> dict[str, str]:
    """Union-find over transfer pairs; cluster id is the smallest member."""
    parent: dict[str, str] = {}

    def find(a: str) -> str:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in pairs:
        parent.setdefault(a, a)
        parent.setdefault(b, b)
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    roots: dict[str, list[str]] = {}
    for a in parent:
        roots.setdefault(find(a), []).append(a)
    out = {}
    for members in roots.values():
        cid = "cluster-" + min(members)
        for m in members:
            out[m] = cid
    return out


def flag_addresses(
    trades: pd.DataFrame,
    known_platform: Iterable[str] = (),
    conversion_actors: Iterable[str] = (),
    offexchange_transfers: Iterable[tuple[str, str]] = (),
) -> dict[str, AddressProfile]:
    """Classify addresses as advanced operators.

    An address is flagged iff it is a known platform wallet, a conversion
    actor, its replayed holdings ever go negative, or it belongs to a
    connected component of the off-exchange transfer graph. Empty auxiliary
    inputs simply disable the corresponding filter.
    """
    platform = set(known_platform)
    conversion = set(conversion_actors)
    clusters = _transfer_clusters(offexchange_transfers)
    negative = negative_holdings_addresses(trades)

    first_ts: dict[str, int] = {}
    if not trades.empty:
        buyer, seller = buyer_seller(trades)
        both = pd.DataFrame(
            {
                "address": np.concatenate([buyer.to_numpy(), seller.to_numpy()]),
                "ts": np.concatenate([trades["ts"].to_numpy()] * 2),
            }
        )
        first_ts = both.groupby("address")["ts"].min().astype(int).to_dict()

    addresses = set(first_ts) | platform | conversion | set(clusters)
    profiles = {}
    for addr in sorted(addresses):
        is_platform = addr in platform
        flagged = (
            is_platform
            or addr in conversion
            or addr in negative
            or addr in clusters
        )
        profiles[addr] = AddressProfile(
            address=addr,
            is_platform=is_platform,
            is_advanced_operator=flagged,
            cluster_id=clusters.get(addr),
            first_trade_time=first_ts.get(addr),
        )
    return profiles


def operator_addresses(profiles: Mapping[str, AddressProfile]) -> set[str]:
    return {a for a, p in profiles.items() if p.is_advanced_operator}


def build_holdings(trades: pd.DataFrame, as_of: int | None = None) -> HoldingsLedger:
    """Replay trades into signed per-address token balances."""
    df = trades if as_of is None else trades[trades["ts"] <= as_of]
    if df.empty:
        return HoldingsLedger(
            pd.DataFrame({"address": [], "token": [], "balance": []}), as_of
        )
    deltas = _position_deltas(df)
    bal = (
        deltas.groupby(["address", "token"], sort=True)["delta"]
        .sum()
        .rename("balance")
        .reset_index()
    )
    return HoldingsLedger(bal, as_of)


def compute_exposure(ledger: HoldingsLedger) -> pd.DataFrame:
    """Net exposure to the "Trump wins" state per address.

    net_trump_win = TrumpYES + BidenNO + HarrisNO - TrumpNO - BidenYES - HarrisYES.
    Addresses with no position in any of the six legs get 0.
    """
    bal = ledger.balances
    if bal.empty:
        return pd.DataFrame({"address": pd.Series(dtype=str), "net_trump_win": pd.Series(dtype=float)})
    sign = bal["token"].map(EXPOSURE_SIGNS).fillna(0.0)
    signed = bal["balance"] * sign
    out = (
        signed.groupby(bal["address"]).sum().rename("net_trump_win").reset_index()
    )
    out.columns = ["address", "net_trump_win"]
    return out


def read_address_list(path) -> set[str]:
    """One address per line; blank lines ignored."""
    text = Path(path).read_text()
    return {line.strip() for line in text.splitlines() if line.strip()}


def read_transfer_pairs(path) -> list[tuple[str, str]]:
    """CSV with header addr_a,addr_b."""
    df = pd.read_csv(path, dtype=str)
    for col in ("addr_a", "addr_b"):
        if col not in df.columns:
            raise DataError(f"missing column: {col}")
    return list(zip(df["addr_a"], df["addr_b"]))
