"""Command-line entry points for the analysis pipeline.

Exit codes: 0 success, 1 validation error, 2 data error, 3 numerical
failure.
"""
from __future__ import annotations

import sys
from pathlib import Path

import click
import pandas as pd

from . import pipeline, synth
from .config import load_config
from .errors import DataError, NumericalError, PmshockError, ValidationError
from .ingest import parse_trades


def _exit_code(err: PmshockError) -> int:
    if isinstance(err, ValidationError):
        return 1
    if isinstance(err, DataError):
        return 2
    if isinstance(err, NumericalError):
        return 3
    return 1


def _guard(fn):
    try:
        fn()
    except PmshockError as err:
        click.echo(f"error: {err}", err=True)
        sys.exit(_exit_code(err))


@click.group()
def main() -> None:
    """Prediction-market shock analysis pipeline."""


_config_opt = click.option("--config", "config_path", required=True,
                           type=click.Path(exists=True),
                           help="YAML run configuration.")
_override_opts = [
    click.option("--trades", default=None, help="Trade log path override."),
    click.option("--output-dir", default=None, help="Output directory override."),
    click.option("--token", default=None, help="Analyzed token override."),
    click.option("--bin-width", type=int, default=None),
    click.option("--hac-lag", type=int, default=None),
    click.option("--rolling-window", type=int, default=None),
    click.option("--vr-q", type=int, default=None),
    click.option("--vr-window", type=int, default=None),
    click.option("--placebo-draws", type=int, default=None),
    click.option("--seed", type=int, default=None),
    click.option("--exclude-operators/--no-exclude-operators", default=None),
    click.option("--figures/--no-figures", default=None),
]


def _with_overrides(fn):
    for opt in reversed(_override_opts):
        fn = opt(fn)
    return _config_opt(fn)


def _load(config_path: str, **overrides):
    return load_config(config_path, overrides=overrides)


def _stage_command(name: str, stage: str):
    @main.command(name=name, help=f"Run the {stage} stage for every event.")
    @_with_overrides
    def cmd(config_path: str, **overrides) -> None:
        def go() -> None:
            cfg = _load(config_path, **overrides)
            result = pipeline.run(cfg, stages=[stage])
            click.echo(f"wrote {len(result['files'])} files; "
                       f"manifest: {result['manifest']}")
        _guard(go)

    return cmd


_stage_command("series", "series")
_stage_command("eventstudy", "eventstudy")
_stage_command("regress", "regress")
_stage_command("impact", "impact")
_stage_command("diagnostics", "diagnostics")
_stage_command("placebo", "placebo")


@main.command(name="run-all")
@_with_overrides
def run_all(config_path: str, **overrides) -> None:
    """Run every stage and write the manifest."""
    def go() -> None:
        cfg = _load(config_path, **overrides)
        result = pipeline.run(cfg)
        click.echo(f"wrote {len(result['files'])} files; "
                   f"manifest: {result['manifest']}")
    _guard(go)


@main.command()
@click.option("--trades", "trades_path", required=True,
              type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"]),
              default="csv")
@click.option("--out", default=None, help="Write the parsed trades as CSV.")
@click.option("--errors-out", default=None, help="Write row rejections as CSV.")
def ingest(trades_path: str, fmt: str, out: str | None,
           errors_out: str | None) -> None:
    """Parse and validate a raw trade log; report rejections."""
    def go() -> None:
        result = parse_trades(trades_path, fmt=fmt)
        click.echo(f"accepted {len(result.trades)} trades, "
                   f"rejected {result.n_rejected} rows")
        if out:
            result.trades.to_csv(out, index=False, lineterminator="\n")
            click.echo(f"parsed trades: {out}")
        if errors_out:
            pd.DataFrame(
                [{"line": e.line, "message": e.message} for e in result.errors]
            ).to_csv(errors_out, index=False, lineterminator="\n")
            click.echo(f"rejections: {errors_out}")
    _guard(go)


@main.command(name="synth")
@click.option("--out", "outdir", required=True, help="Output directory.")
@click.option("--seed", type=int, default=0)
@click.option("--n-bins", type=int, default=72)
@click.option("--bin-width", type=int, default=300)
@click.option("--n-traders", type=int, default=50)
@click.option("--base-rate", type=float, default=20.0)
@click.option("--initial-price", type=float, default=0.6)
@click.option("--sigma-theta", type=float, default=0.0)
@click.option("--lambda-perm", type=float, default=0.0)
@click.option("--lambda-trans", type=float, default=0.0)
@click.option("--shock-bin", type=int, default=None,
              help="Add one shock at this generator bin.")
@click.option("--shock-jump", type=float, default=0.0)
@click.option("--shock-arrival-multiplier", type=float, default=1.0)
def synth_cmd(outdir: str, seed: int, n_bins: int, bin_width: int,
              n_traders: int, base_rate: float, initial_price: float,
              sigma_theta: float, lambda_perm: float, lambda_trans: float,
              shock_bin: int | None, shock_jump: float,
              shock_arrival_multiplier: float) -> None:
    """Generate a synthetic market log with known ground truth."""
    def go() -> None:
        shocks = ()
        if shock_bin is not None:
            shocks = (synth.ShockSpec(
                bin=shock_bin, jump=shock_jump,
                arrival_multiplier=shock_arrival_multiplier,
            ),)
        cfg = synth.SynthConfig(
            seed=seed, n_bins=n_bins, bin_width=bin_width,
            n_traders=n_traders, base_rate=base_rate,
            initial_price=initial_price, sigma_theta=sigma_theta,
            lambda_perm=lambda_perm, lambda_trans=lambda_trans, shocks=shocks,
        )
        trades, truth = synth.generate(cfg)
        paths = synth.write_outputs(trades, truth, outdir)
        click.echo(f"generated {len(trades)} trades")
        for label, path in paths.items():
            click.echo(f"{label}: {path}")
    _guard(go)


if __name__ == "__main__":
    main()
