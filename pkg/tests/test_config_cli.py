import json
from pathlib import Path

import numpy as np
import pytest

from oqs.cli import fmt, main
from oqs.config import (
    ConfigError,
    build_scenario,
    load_config,
    parse_config,
    sweep_values,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

# first CSV row (t = 0) of every shipped scenario; it does not depend on t_max
FIRST_ROWS = {
    "example1_nsl": "0,0.25,0.5,0.25,0.5,0.562335145,0,0",
    "example1_sl": "0,0.25,0.5,0.25,0.5,0,0,0",
    "example2_nsl": "0,0.65,0.35,-0.3,0.647446639,0,0",
    "example2_sl": "0,0.65,0.35,-0.3,0.119309943,0,2.22044605e-16",
    "example2_dc": "0,0.5,0.5,0,0,0,2.22044605e-16",
    "example3_nsl": "0,0.5,0.5,-1.11022302e-16,0.693147181,0,4.4408921e-16",
    "example3_sl": "0,0.5,0.5,0,0,0,4.4408921e-16",
    "explicit_vacuum_coherence": "0,0.5,0.5,0,0,0,0",
}


def _write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def _short(name, t_max=0.05):
    data = json.loads((CONFIGS / f"{name}.json").read_text())
    data["evolve"]["t_max"] = t_max
    return data


def test_fmt_is_stable():
    assert fmt(-0.0) == "0"
    assert fmt(0.1) == "0.1"
    assert fmt(1 / 3) == "0.333333333"
    assert fmt(np.float64(2.5e-17)) == "2.5e-17"


def test_round_trip_of_every_shipped_config():
    for path in sorted(CONFIGS.glob("*.json")):
        cfg = load_config(path)
        again = parse_config(json.loads(cfg.dumps()))
        assert again == cfg, path.name
        build_scenario(cfg)


def test_defaults_are_filled_in():
    cfg = parse_config({"initial": {"preset": "example3", "kind": "SL"}})
    assert cfg.bath.alpha == 0.005 and cfg.bath.n_modes == 300 and cfg.bath.omega_max == 100.0
    assert cfg.evolve.dt == 2.5e-3 and cfg.evolve.t_max == 10.0
    assert cfg.system.type == "two_level"


@pytest.mark.parametrize(
    "data,where",
    [
        ({"initial": {"preset": "example3", "kind": "SL", "sigmaa": 1.0}}, "initial.sigmaa"),
        ({"bath": {"alpha": -1.0}, "initial": {"preset": "example3", "kind": "SL"}}, "bath.alpha"),
        ({"bath": {"n_modes": 2.5}, "initial": {"preset": "example3", "kind": "SL"}}, "bath.n_modes"),
        ({"initial": {"preset": "example3", "kind": "DC"}}, "initial.kind"),
        ({"initial": {"preset": "example9", "kind": "SL"}}, "initial.preset"),
        ({"initial": {"preset": "example1", "kind": "SL"}}, "system.type"),
        ({"initial": {"preset": "example3", "kind": "SL", "A2": 0.5}}, "initial.A2"),
        ({"system": {"omega1": 1.0, "colour": 2}, "initial": {"preset": "example3", "kind": "SL"}}, "system.colour"),
        ({"extra": {}, "initial": {"preset": "example3", "kind": "SL"}}, "extra"),
        ({"evolve": {"reduced_path": "fast"}, "initial": {"preset": "example3", "kind": "SL"}}, "evolve.reduced_path"),
        ({"initial": {}}, "initial"),
    ],
)
def test_validation_names_the_field(data, where):
    with pytest.raises(ConfigError) as info:
        parse_config(data)
    assert str(info.value).startswith(where)


def test_explicit_terms_validation():
    base = json.loads((CONFIGS / "explicit_vacuum_coherence.json").read_text())
    bad = json.loads(json.dumps(base))
    bad["initial"]["terms"][0]["phi_b"][0]["ket"] = {"31": 1}
    with pytest.raises(ConfigError, match=r"initial\.terms\[0\]\.phi_b\[0\]\.ket: mode 31 outside 1\.\.30"):
        parse_config(bad)
    bad = json.loads(json.dumps(base))
    bad["initial"]["terms"][0]["phi_s"] = [[1.0]]
    with pytest.raises(ConfigError, match="phi_s"):
        parse_config(bad)
    bad = json.loads(json.dumps(base))
    bad["initial"]["terms"][0]["phi_b"][0]["ket"] = {"1": 3}
    with pytest.raises(ConfigError, match="exceed max_exc"):
        parse_config(bad)


def test_json_syntax_error_reports_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "system": {"omega1": 1.0,}\n}\n')
    with pytest.raises(ConfigError, match=r"line 2, column \d+"):
        load_config(path)


def test_complex_parameters():
    cfg = parse_config({"system": {"type": "v_atom"},
                        "initial": {"preset": "example1", "kind": "NSL", "C": [0.0, 0.5]}})
    _, _, state = build_scenario(cfg)
    assert np.trace(state.rho_s0()).real == pytest.approx(1.0)
    with pytest.raises(ConfigError, match="initial.C"):
        parse_config({"system": {"type": "v_atom"},
                      "initial": {"preset": "example1", "kind": "NSL", "C": [0.0, 0.5, 1.0]}})


def test_sweep_values():
    assert len(sweep_values(0.1, 3.1, 0.2)) == 16
    assert sweep_values(0.1, 3.1, 0.2)[-1] == 3.1
    v = sweep_values(0.0, 0.02, 0.001)
    assert len(v) == 21 and v[7] == 0.007
    assert sweep_values(1.0, 1.0, 0.5) == [1.0]
    with pytest.raises(ConfigError):
        sweep_values(0.0, 1.0, 0.0)
    with pytest.raises(ConfigError):
        sweep_values(1.0, 0.0, 0.1)


@pytest.mark.parametrize("name", sorted(FIRST_ROWS))
def test_pinned_first_rows(tmp_path, name):
    out = tmp_path / "out.csv"
    assert main(["run", "--config", _write(tmp_path, _short(name)), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    d = 3 if name.startswith("example1") else 2
    assert lines[0] == ",".join(["t"] + [f"pop_{i}" for i in range(d)] + ["sigma_z", "entropy", "rate", "trace_err"])
    assert lines[1] == FIRST_ROWS[name]


def test_run_is_byte_identical(tmp_path):
    cfg = _write(tmp_path, _short("example3_nsl", 0.5))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["run", "--config", cfg, "--out", str(a)]) == 0
    assert main(["run", "--config", cfg, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 1 + 200 // 20 + 1


def test_sweep_writes_index_and_files(tmp_path):
    cfg = _write(tmp_path, _short("example2_dc", 0.02))
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", cfg, "--param", "omega1", "--from", "0.1", "--to", "0.5",
                 "--step", "0.2", "--out-dir", str(out)]) == 0
    index = (out / "sweep_index.csv").read_text().splitlines()
    assert index == ["value,filename", "0.1,omega1_000.csv", "0.3,omega1_001.csv", "0.5,omega1_002.csv"]
    for line in index[1:]:
        assert (out / line.split(",")[1]).exists()


def test_parallel_sweep_matches_serial(tmp_path):
    cfg = _write(tmp_path, _short("example2_dc", 0.02))
    args = ["--config", cfg, "--param", "alpha", "--from", "0.001", "--to", "0.003", "--step", "0.001"]
    assert main(["sweep", *args, "--out-dir", str(tmp_path / "s")]) == 0
    assert main(["sweep", *args, "--out-dir", str(tmp_path / "p"), "--jobs", "2"]) == 0
    for i in range(3):
        name = f"alpha_{i:03d}.csv"
        assert (tmp_path / "s" / name).read_bytes() == (tmp_path / "p" / name).read_bytes()


def test_classify_output(capsys):
    assert main(["classify", "--config", str(CONFIGS / "example1_nsl.json")]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "SL=no NSL=yes equilibrium=no lindblad=no"
    block = json.loads(out.split("--- json ---", 1)[1])
    assert block["NSL"] is True and block["lindblad"] is False
    assert any("V_A" in v for items in block["violations"].values() for v in items)
    assert main(["classify", "--config", str(CONFIGS / "example2_dc.json")]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "SL=yes NSL=no equilibrium=yes lindblad=yes"


def test_rates_rows(tmp_path, capsys):
    assert main(["rates", "--config", str(CONFIGS / "example2_dc.json"), "--omega", "1.0,2.5"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "omega,re_gamma,im_gamma,re_gamma_b_eq"
    omega, re, im, bre = (float(x) for x in lines[1].split(","))
    assert omega == 1.0 and re == pytest.approx(0.012861, abs=1e-6) and bre == 0.0
    assert im == pytest.approx(0.0128669425, abs=1e-9)
    assert main(["rates", "--config", str(CONFIGS / "example2_dc.json"), "--omega", "150"]) == 2
    assert main(["rates", "--config", str(CONFIGS / "example2_dc.json"), "--omega", "x"]) == 2


def test_oracle_command(tmp_path):
    cfg = _short("oracle_dc_small", 1.0)
    out = tmp_path / "oracle.csv"
    assert main(["oracle", "--config", _write(tmp_path, cfg), "--modes", "8", "--out", str(out), "--scaling"]) == 0
    text = out.read_text()
    assert text.startswith("t,trace_distance\n")
    assert "# max_trace_distance=" in text and "# scaling_factor=" in text
    rows = [line for line in text.splitlines()[1:] if not line.startswith("#")]
    assert len(rows) == 11


def test_exit_codes(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "x.csv")]) == 2
    bad = _write(tmp_path, {"initial": {"preset": "example3", "kind": "SL", "sigmaa": 1}}, "bad.json")
    assert main(["run", "--config", bad, "--out", str(tmp_path / "x.csv")]) == 2
    assert "initial.sigmaa" in capsys.readouterr().err
    cap = str(CONFIGS / "oracle_dc_small.json")
    assert main(["oracle", "--config", cap, "--modes", "300", "--max-exc", "3"]) == 4
    unstable = _write(tmp_path, {
        "system": {"omega1": 1.0},
        "bath": {"alpha": 50.0, "omega_max": 10.0, "n_modes": 10},
        "initial": {"preset": "example2", "kind": "DC"},
        "evolve": {"dt": 1.0, "t_max": 2000.0, "record_stride": 100},
    }, "unstable.json")
    assert main(["run", "--config", unstable, "--out", str(tmp_path / "x.csv")]) == 3
    assert "numerical failure" in capsys.readouterr().err
