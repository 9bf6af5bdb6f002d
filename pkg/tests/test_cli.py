import csv
import io
import json

import pytest

from ocdm_tdr import __version__, cli
from ocdm_tdr.chanmodel import V_P_LV, V_P_MV
from ocdm_tdr.config import ConfigError, config_from_dict, parse_config
from ocdm_tdr.metrics import max_unambiguous_range, measurement_rates, range_resolution


def write_config(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def read_table(path):
    text = path.read_text()
    comments = [line for line in text.splitlines() if line.startswith("#")]
    body = "\n".join(line for line in text.splitlines() if not line.startswith("#"))
    return comments, list(csv.DictReader(io.StringIO(body)))


def run(tmp_path, command, data, *extra):
    cfg = write_config(tmp_path, data)
    out = tmp_path / "out"
    code = cli.main([command, "--config", str(cfg), "--out", str(out), "--quiet", *extra])
    return code, out


# ------------------------------------------------------------------ config


def test_minimal_config_uses_defaults():
    cfg = config_from_dict({"seed": 1})
    s = cfg.system
    assert (s.bandwidth, s.sample_rate, s.frame_size, s.cp_length, s.n_plm) == (500e3, 1e6, 256, 30, 1)
    assert s.tx_psd_dbm_hz == -40.0
    assert cfg.scenario.kind == "reference"


def test_seed_is_required():
    with pytest.raises(ConfigError, match="seed"):
        config_from_dict({})


def test_cdma_needs_power_of_two():
    with pytest.raises(ConfigError, match="power of two"):
        config_from_dict({"seed": 1, "system": {"n_plm": 3}, "schemes": ["cdma"]})
    config_from_dict({"seed": 1, "system": {"n_plm": 4}, "schemes": ["cdma"]})


@pytest.mark.parametrize(
    "data, path",
    [
        ({"seed": 1, "bandwith": 5}, "bandwith"),
        ({"seed": 1, "system": {"bandwith_hz": 5}}, "system.bandwith_hz"),
        ({"seed": 1, "sweep": {"n_plm": []}}, "sweep.n_plm"),
        ({"seed": 1, "sweep": {"cp_length": [30, "x"]}}, "sweep.cp_length[1]"),
        ({"seed": -1}, "seed"),
        ({"seed": 1, "schemes": ["ofdm"]}, "schemes[0]"),
        ({"seed": 1, "noise": {"kind": "pink"}}, "noise.kind"),
        ({"seed": 1, "cables": ["hv"]}, "cables[0]"),
        ({"seed": 1, "scenario": {"kind": "mtl"}}, "scenario.kind"),
        ({"seed": 1, "scenario": {"kind": "two_segment"}}, "system.n_plm"),
        ({"seed": 1, "trials": 0}, "trials"),
    ],
)
def test_errors_name_the_key(data, path):
    with pytest.raises(ConfigError) as info:
        config_from_dict(data)
    assert info.value.path == path
    assert str(info.value).startswith(path)


def test_taps_scenario_validation():
    base = {"seed": 1, "system": {"n_plm": 2}, "schemes": ["ocdm"]}
    channel = lambda i, j: {"observer": i, "injector": j, "taps": [[0.0, 0.1 * (i + j + 1)]]}
    ok = dict(base, scenario={"kind": "taps", "channels": [channel(i, j) for i in range(2) for j in range(2)]})
    scn = config_from_dict(ok).scenario.build(config_from_dict(ok).system)
    assert scn.n_plm == 2 and scn.h(1, 1).h[0] == pytest.approx(0.3)

    missing = dict(base, scenario={"kind": "taps", "channels": [channel(0, 0)]})
    with pytest.raises(ConfigError, match="missing pairs"):
        config_from_dict(missing)
    bad = dict(base, scenario={"kind": "taps", "channels": [channel(0, 2)]})
    with pytest.raises(ConfigError) as info:
        config_from_dict(bad)
    assert info.value.path == "scenario.channels[0].injector"


def test_two_segment_scenario_builds():
    cfg = config_from_dict(
        {
            "seed": 1,
            "system": {"n_plm": 2},
            "scenario": {"kind": "two_segment", "d_a_m": 1000, "d_b_m": 1730, "v_p": "mv",
                         "reflection_coeffs": [0.2, 0.3, 0.5], "bounce_order": 2, "direct_coupling": 0.1},
        }
    )
    scn = cfg.scenario.build(cfg.system)
    assert scn.h(0, 0).h[0] == pytest.approx(0.1)
    assert scn.h(0, 0).h[8] == pytest.approx(0.3)


def test_parse_config_file_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        parse_config(tmp_path / "nope.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{seed: 1")
    with pytest.raises(ConfigError, match="invalid JSON"):
        parse_config(bad)


def test_digest_ignores_output_dir_but_not_seed():
    a = config_from_dict({"seed": 1})
    assert a.digest() == a.with_overrides(output_dir="elsewhere").digest()
    assert a.digest() != a.with_overrides(seed=2).digest()


# --------------------------------------------------------------------- CLI


def test_resolution_sweep(tmp_path):
    code, out = run(tmp_path, "resolution-sweep", {"seed": 3, "cables": ["lv"], "sweep": {"bandwidth_khz": [10, 100, 500]}})
    assert code == 0
    comments, rows = read_table(out / "resolution.csv")
    assert [float(r["delta_d_m"]) for r in rows] == [3750.0, 375.0, 75.0]
    assert comments[0] == f"# tool: ocdm_tdr {__version__}"
    assert any(c.startswith("# config_sha256: ") for c in comments)
    assert "# seed: 3" in comments
    for r in rows:
        assert float(r["delta_d_m"]) == range_resolution(float(r["v_p_m_per_s"]), float(r["bandwidth_hz"]))


def test_rates_ocdm_row_constant(tmp_path):
    code, out = run(tmp_path, "rates", {"seed": 0, "sweep": {"cp_length": [30], "n_plm": list(range(1, 17))}})
    assert code == 0
    _, rows = read_table(out / "rates.csv")
    ocdm = [r for r in rows if r["scheme"] == "ocdm"]
    assert len(ocdm) == 16
    assert all(float(r["n_rho_per_s"]) == pytest.approx(3496.5, abs=0.01) for r in ocdm)
    cdma = [int(r["n_plm"]) for r in rows if r["scheme"] == "cdma"]
    assert cdma == [1, 2, 4, 8, 16]
    from ocdm_tdr.tdr import SystemParams

    for r in rows:
        rep = measurement_rates(r["scheme"], SystemParams(cp_length=int(r["cp_length"])), n_plm=int(r["n_plm"]))
        assert float(r["n_tau_per_s"]) == rep.n_tau


def test_range_sweep(tmp_path):
    code, out = run(tmp_path, "range-sweep", {"seed": 0, "cables": ["mv"], "sweep": {"cp_length": [30], "n_plm": [4, 16]}})
    assert code == 0
    _, rows = read_table(out / "range.csv")
    assert [float(r["d_max_rho_m"]) for r in rows] == pytest.approx([3840.0, 2048.0])
    for r in rows:
        args = (V_P_MV, 1e6, float(r["l_rho"]), int(r["cp_length"]))
        assert float(r["d_max_tau_m"]) == max_unambiguous_range(*args, "transferogram")


def test_compare_sinr_table(tmp_path):
    data = {"seed": 5, "system": {"n_plm": 4}, "trials": 500}
    code, out = run(tmp_path, "compare-sinr", data, "--trials", "20")
    assert code == 0
    comments, rows = read_table(out / "sinr.csv")
    assert len(rows) == 16
    assert {r["scheme"] for r in rows} == {"ocdm", "tdma", "fdma", "cdma"}
    for r in rows:
        assert r["trials"] == "20"
        assert float(r["ci95_low_db"]) <= float(r["mean_sinr_db"]) <= float(r["ci95_high_db"])


def test_simulate_writes_one_trace_per_pair(tmp_path):
    data = {"seed": 9, "system": {"n_plm": 2}, "schemes": ["ocdm", "fdma"], "sweep": {"n_symbols": [3]}}
    code, out = run(tmp_path, "simulate", data)
    assert code == 0
    files = sorted(p.relative_to(out).as_posix() for p in out.rglob("*.csv"))
    assert len(files) == 8 and "traces/ocdm/trace_obs1_inj0.csv" in files
    _, rows = read_table(out / "traces" / "ocdm" / "trace_obs0_inj0.csv")
    assert list(rows[0]) == ["symbol_index", "sample_index", "amplitude"]
    assert len(rows) == 3 * 128


def test_simulate_is_byte_deterministic(tmp_path):
    data = {"seed": 11, "system": {"n_plm": 4}, "sweep": {"n_symbols": [4]}}
    cfg = write_config(tmp_path, data)
    outputs = []
    for name in ("a", "b"):
        assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / name), "--quiet"]) == 0
        outputs.append({p.relative_to(tmp_path / name): p.read_bytes() for p in (tmp_path / name).rglob("*.csv")})
    assert outputs[0] == outputs[1]


def test_seed_override_changes_output(tmp_path):
    data = {"seed": 11, "schemes": ["ocdm"], "sweep": {"n_symbols": [1]}}
    cfg = write_config(tmp_path, data)
    cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "a"), "--quiet"])
    cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "b"), "--seed", "12", "--quiet"])
    path = "traces/ocdm/trace_obs0_inj0.csv"
    assert (tmp_path / "a" / path).read_bytes() != (tmp_path / "b" / path).read_bytes()


def test_exit_codes(tmp_path, monkeypatch, capsys):
    code, _ = run(tmp_path, "rates", {"seed": 1, "bandwith": 3})
    assert code == cli.EXIT_INVALID
    assert "bandwith" in capsys.readouterr().err
    assert cli.main(["rates", "--config", str(tmp_path / "missing.json")]) == cli.EXIT_INVALID
    with pytest.raises(SystemExit) as info:
        cli.main(["no-such-command"])
    assert info.value.code == cli.EXIT_INVALID

    def boom(*_):
        raise RuntimeError("disk on fire")

    monkeypatch.setitem(cli.COMMANDS, "rates", (boom, "broken"))
    code, _ = run(tmp_path, "rates", {"seed": 1})
    assert code == cli.EXIT_RUNTIME


def test_workers_do_not_change_results(tmp_path):
    data = {"seed": 2, "system": {"n_plm": 2}, "schemes": ["ocdm", "tdma"], "trials": 6}
    cfg = write_config(tmp_path, data)
    for name, workers in (("a", "1"), ("b", "2")):
        assert cli.main(["compare-sinr", "--config", str(cfg), "--out", str(tmp_path / name), "--workers", workers, "--quiet"]) == 0
    assert (tmp_path / "a" / "sinr.csv").read_bytes() == (tmp_path / "b" / "sinr.csv").read_bytes()


def test_lv_preset_value():
    assert config_from_dict({"seed": 0, "cables": ["lv"]}).cable_velocities() == {"lv": V_P_LV}
