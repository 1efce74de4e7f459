"""End-to-end pipeline runs over a synthetic market."""
import json
from pathlib import Path

import pytest

from pmshock import pipeline
from pmshock.config import RunConfig
from pmshock.errors import DataError
from pmshock.report import file_sha256
from pmshock.series import EventSpec
from pmshock.synth import ExposureConfig, ShockSpec, SynthConfig, generate, write_outputs

START = 1719792000


@pytest.fixture(scope="module")
def market(tmp_path_factory):
    """Shock market with exposure heterogeneity, written to disk."""
    outdir = tmp_path_factory.mktemp("pipeline_market")
    cfg = SynthConfig(
        seed=17, n_bins=96, base_rate=25.0, sigma_theta=0.005,
        lambda_perm=0.2, lambda_trans=0.08, n_traders=40,
        shocks=(ShockSpec(bin=48, jump=0.3, arrival_multiplier=2.0),),
        exposure=ExposureConfig(n_negative=15, participation_gamma=0.2),
    )
    trades, truth = generate(cfg)
    paths = write_outputs(trades, truth, outdir)
    return {"paths": paths, "truth": truth}


def _run_config(market, outdir, **kw):
    truth = market["truth"]
    event = EventSpec(
        name="shock",
        event_time=truth["event_time"],
        trading_window=(1800, 1800),
        price_window=(3600, 7200),
        estimation_window=7200,
    )
    defaults = dict(
        trades=str(market["paths"]["trades"]),
        output_dir=str(outdir),
        token=truth["token"],
        events=(event,),
        placebo_draws=0,
        vr_q=4,
        vr_window=12,
        figures=False,
        platform_addresses=str(market["paths"]["platform_addresses"]),
    )
    defaults.update(kw)
    return RunConfig(**defaults)


def test_run_all_manifest_is_complete_both_ways(market, tmp_path):
    cfg = _run_config(market, tmp_path / "out")
    result = pipeline.run(cfg)
    manifest = json.loads(Path(result["manifest"]).read_text())
    assert manifest["status"] == "complete"
    assert manifest["config_hash"] == cfg.config_hash()
    outdir = Path(cfg.output_dir)
    listed = set(manifest["files"])
    on_disk = {
        str(p.relative_to(outdir))
        for p in outdir.rglob("*")
        if p.is_file() and p.name != "manifest.json"
    }
    assert listed == on_disk
    for rel, digest in manifest["files"].items():
        assert file_sha256(outdir / rel) == digest
    # the essential artifacts exist
    ev = outdir / "events" / "shock"
    for name in ("bins.csv", "price_response.csv", "caa_volume.csv",
                 "characteristics.csv", "impact.csv", "vr.csv",
                 "two_sidedness.csv"):
        assert (ev / name).exists(), name


def test_identical_configs_byte_identical_manifests(market, tmp_path):
    run_a = pipeline.run(_run_config(market, tmp_path / "a"))
    run_b = pipeline.run(_run_config(market, tmp_path / "b"))
    assert Path(run_a["manifest"]).read_bytes() == Path(run_b["manifest"]).read_bytes()


def test_missing_token_raises_before_any_output(market, tmp_path):
    out = tmp_path / "absent"
    cfg = _run_config(market, out, token="Nobody_YES")
    with pytest.raises(DataError, match="Nobody_YES"):
        pipeline.run(cfg)


def test_error_writes_incomplete_manifest_with_context(market, tmp_path):
    out = tmp_path / "broken"
    # an event before the sample has no pre-event price and fails mid-run
    bad = EventSpec(name="too_early", event_time=START - 10**6,
                    trading_window=(1800, 1800), price_window=(3600, 7200),
                    estimation_window=7200)
    cfg = _run_config(market, out, events=(bad,))
    with pytest.raises(DataError, match=r"too_early \(Trump_YES\)"):
        pipeline.run(cfg)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "incomplete"
    assert "too_early" in manifest["error"]


def test_stage_subset_only_writes_those_artifacts(market, tmp_path):
    out = tmp_path / "subset"
    result = pipeline.run(_run_config(market, out), stages=["series"])
    names = {Path(f).name for f in result["files"]}
    assert names == {"bins.csv", "price_response.csv"}
