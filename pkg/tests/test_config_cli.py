import json
import xml.dom.minidom
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from qflux import cli
from qflux.config import ConfigError, ExperimentConfig
from qflux.svgplot import heatmap, loglog

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_defaults_validate_and_round_trip():
    cfg = ExperimentConfig.defaults()
    cfg.validate()
    back = ExperimentConfig.from_text(cfg.to_text())
    assert back.values == cfg.values


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**64 - 1), N=st.sampled_from([8, 64, 256]),
       eps=st.lists(st.floats(0.01, 0.2), min_size=1, max_size=4, unique=True))
def test_round_trip_property(seed, N, eps):
    cfg = ExperimentConfig.defaults()
    cfg.set("run.seed", seed)
    cfg.set("geometry.N", N)
    cfg.set("cutoff.eps_list", sorted(eps, reverse=True))
    cfg.task_overrides["grauert"] = {"refine": 16.0, "h_list": (0.2, 0.1)}
    cfg.validate()
    back = ExperimentConfig.from_text(cfg.to_text())
    assert back.values == cfg.values
    assert back.task_overrides == cfg.task_overrides


@pytest.mark.parametrize("text,field", [
    ("[cutoff]\neps_list = 0.1, 0.2\n", "cutoff.eps_list"),
    ("[geometry]\nN = 12\n", "geometry.N"),
    ("[geometry]\nn = 3\n", "geometry.n"),
    ("[geometry]\nV = cos(x1)\n", "geometry.V"),
    ("[run]\nseed = -4\n", "run.seed"),
    ("[run]\ncampaign = everything\n", "run.campaign"),
    ("[cutoff]\ndelta_rule = 0.5\n", "cutoff.delta_rule"),
    ("[cutoff]\nprofile = tophat\n", "cutoff.profile"),
    ("[bogus]\nx = 1\n", "bogus"),
    ("[geometry]\nNN = 1\n", "geometry.NN"),
    ("[geometry]\nN = many\n", "geometry.N"),
    ("[task.grauert]\nrefine = [\n", "task.grauert.refine"),
])
def test_validation_names_field(text, field):
    with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
        ExperimentConfig.from_text(text)


def test_shipped_configs_parse():
    for p in sorted(CONFIGS.glob("*.cfg")):
        cfg = ExperimentConfig.from_file(p)
        assert cli.task_list(cfg)


def test_resolved_seed_inheritance():
    cfg = ExperimentConfig.from_text("[run]\nseed = 9\n")
    assert cfg.resolved()["ensemble"]["seed"] == 9


def test_jsonable():
    out = cli.jsonable({"a": float("inf"), "b": 1 + 2j, "c": (1, 2)})
    assert out == {"a": "inf", "b": {"re": 1.0, "im": 2.0}, "c": [1, 2]}


def test_svg_output_is_well_formed():
    s = loglog([0.1, 0.05, 0.025], [1e-2, 2.5e-3, 6e-4], [1e-3, 1e-4, 1e-5], slope=2.03, title="a < b")
    doc = xml.dom.minidom.parseString(s)
    assert doc.documentElement.tagName == "svg"
    assert "slope 2.030" in s
    xml.dom.minidom.parseString(heatmap([0, 1], [0, 1], [[0.0, 1.0], [0.5, 0.2]]))


def test_cli_exit_code_for_bad_config(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[cutoff]\neps_list = 0.1, 0.2\n")
    assert cli.main(["run", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "cutoff.eps_list" in capsys.readouterr().err
    assert cli.main(["run", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert cli.main(["run", "--config", str(CONFIGS / "smoke.cfg"), "--threads", "0"]) == 2


def test_smoke_run_outputs_and_determinism(tmp_path, capsys):
    outs = []
    for threads, cache in ((1, "off"), (2, str(tmp_path / "cache")), (2, str(tmp_path / "cache"))):
        out = tmp_path / f"run{len(outs)}"
        code = cli.main(["run", "--config", str(CONFIGS / "smoke.cfg"), "--out", str(out),
                         "--threads", str(threads), "--cache", cache])
        assert code in (0, 1)
        outs.append(out)
    texts = [(o / "report.json").read_bytes() for o in outs]
    assert texts[0] == texts[1] == texts[2]
    rep = json.loads(texts[0])
    assert rep["schema"] == cli.SCHEMA_VERSION
    man = json.loads((outs[2] / "manifest.json").read_text())
    assert man["cache"]["hits"] >= 1
    for f in man["files"]:
        assert (outs[2] / f["path"]).exists()
    assert (outs[0] / "checks.csv").read_text().startswith("task,check,value")
    printed = capsys.readouterr().out
    assert "PASS" in printed or "FAIL" in printed
    assert cli.main(["plot", str(outs[0] / "report.json"), "--out", str(tmp_path / "p")]) == 0
    assert cli.main(["cache-info", "--cache", str(tmp_path / "cache")]) == 0
    assert "entries" in capsys.readouterr().out
