"""Run configuration: one human-editable YAML file drives the pipeline."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import pandas as pd
import yaml

from .errors import ValidationError
from .series import EventSpec


@dataclass(frozen=True)
class RunConfig:
    trades: str
    output_dir: str
    token: str
    events: tuple[EventSpec, ...]
    trades_format: str = "csv"
    bin_width: int = 300
    hac_lag: int | None = None  # None -> Newey-West plug-in rule
    rolling_window: int = 24
    vr_q: int = 6
    vr_window: int = 36
    placebo_draws: int = 500
    placebo_min_pool: int = 20
    placebo_statistics: tuple[str, ...] = (
        "kyle_lambda_change",
        "vr_post_max",
        "two_sidedness_change",
        "volume_jump",
    )
    seed: int = 0
    platform_addresses: str | None = None
    conversion_actors: str | None = None
    transfer_pairs: str | None = None
    exclude_operators: bool = True
    figures: bool = True

    def validate(self) -> None:
        if not Path(self.trades).exists():
            raise ValidationError(f"trades file not found: {self.trades}")
        for attr in ("platform_addresses", "conversion_actors", "transfer_pairs"):
            p = getattr(self, attr)
            if p is not None and not Path(p).exists():
                raise ValidationError(f"{attr} file not found: {p}")
        if self.bin_width < 1:
            raise ValidationError("bin_width must be positive")
        if not self.events:
            raise ValidationError("no events configured")
        for ev in self.events:
            ev.validate(self.bin_width)
        names = [ev.name for ev in self.events]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate event names")
        if self.placebo_draws < 0 or self.placebo_min_pool < 1 or self.rolling_window < 2:
            raise ValidationError("bad estimator knobs")
        if self.vr_q < 2 or self.vr_window <= self.vr_q:
            raise ValidationError("vr_window must exceed vr_q (>= 2)")
        unknown = set(self.placebo_statistics) - {
            "kyle_lambda_change", "vr_post_max", "two_sidedness_change",
            "volume_jump",
        }
        if unknown:
            raise ValidationError(f"unknown placebo statistics: {sorted(unknown)}")

    def config_hash(self) -> str:
        """Hash of the semantically meaningful fields (not the output path)."""
        payload = asdict(self)
        payload.pop("output_dir")
        payload["events"] = [asdict(ev) for ev in self.events]
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


_EVENT_KEYS = {
    "name", "timestamp_utc", "trading_window", "price_window",
    "estimation_window", "characteristics_window",
}
_RUN_KEYS = {
    "trades", "output_dir", "token", "events", "trades_format", "bin_width",
    "hac_lag", "rolling_window", "vr_q", "vr_window", "placebo_draws", "placebo_min_pool",
    "placebo_statistics", "seed", "platform_addresses", "conversion_actors",
    "transfer_pairs", "exclude_operators", "figures",
}


def _parse_event(raw: dict) -> EventSpec:
    unknown = set(raw) - _EVENT_KEYS
    if unknown:
        raise ValidationError(f"unknown event keys: {sorted(unknown)}")
    for key in ("name", "timestamp_utc"):
        if key not in raw:
            raise ValidationError(f"event missing required key: {key}")
    stamp = pd.to_datetime(raw["timestamp_utc"], utc=True, errors="coerce")
    if pd.isna(stamp):
        raise ValidationError(
            f"event {raw['name']}: unparseable timestamp_utc "
            f"{raw['timestamp_utc']!r}"
        )
    kwargs = {"name": str(raw["name"]), "event_time": int(stamp.timestamp())}
    for key in ("trading_window", "price_window"):
        if key in raw:
            pair = raw[key]
            if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                raise ValidationError(f"event {raw['name']}: {key} must be [pre, post]")
            kwargs[key] = (int(pair[0]), int(pair[1]))
    if "estimation_window" in raw:
        kwargs["estimation_window"] = int(raw["estimation_window"])
    if "characteristics_window" in raw:
        kwargs["characteristics_window"] = int(raw["characteristics_window"])
    return EventSpec(**kwargs)


def load_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    """Read a YAML RunConfig; ``overrides`` wins over file values."""
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ValidationError("config file must hold a mapping")
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = set(raw) - _RUN_KEYS
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    for key in ("trades", "output_dir", "token", "events"):
        if key not in raw:
            raise ValidationError(f"config missing required key: {key}")
    events = tuple(_parse_event(e) for e in raw.pop("events"))
    if "placebo_statistics" in raw:
        raw["placebo_statistics"] = tuple(raw["placebo_statistics"])
    cfg = RunConfig(events=events, **raw)
    cfg.validate()
    return cfg
