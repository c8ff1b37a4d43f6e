import json

import pytest

from cli import main, parse_config, resolve_params, run
from errors import ConfigError
from experiments import EXPERIMENTS
from reporting import read_table


def test_parse_config_comments_and_overrides():
    entries = parse_config("# header\nL = 4  # code size\n\nA=0.2\nL = 6\n", "lab.cfg")
    assert entries == {"L": ("6", 5), "A": ("0.2", 4)}


def test_parse_config_malformed_line():
    with pytest.raises(ConfigError, match="lab.cfg:3:"):
        parse_config("L = 4\nA = 0.1\njust words\n", "lab.cfg")


def test_command_line_wins_over_file():
    experiment = EXPERIMENTS["coupling-matrix"]
    params = resolve_params(experiment, {"L": ("4", 1), "A": ("0.2", 2)}, {"L": "5"}, "lab.cfg")
    assert params.L == 5
    assert params.A == 0.2


def test_bad_value_reports_config_line():
    with pytest.raises(ConfigError, match="lab.cfg:2:"):
        resolve_params(EXPERIMENTS["coupling-matrix"], {"A": ("0.2", 1), "L": ("many", 2)}, {}, "lab.cfg")


def test_list_values_from_text():
    params = resolve_params(EXPERIMENTS["thermo"], {"L_values": ("8, 16", 1)}, {})
    assert params.L_values == [8, 16]


def test_unknown_config_key(tmp_path, capsys):
    config = tmp_path / "lab.cfg"
    config.write_text("epsilon = 0.02\nwobble = 3\n", encoding="utf-8")
    assert run("gadget-verify", str(config), output_dir=str(tmp_path / "out")) == 2
    err = capsys.readouterr().err
    assert "wobble" in err
    assert ":2:" in err


def test_empty_backaction_series(tmp_path, capsys):
    assert main(["backaction", "--regime", "fresnel", "--t-max", "0", "--output-dir", str(tmp_path)]) == 1
    assert "at least one time" in capsys.readouterr().err


def test_type_mismatch_exit_code(tmp_path):
    assert main(["coupling-matrix", "--L", "abc", "--output-dir", str(tmp_path)]) == 2


def test_gadget_verify_outputs(tmp_path):
    assert main(["gadget-verify", "--output-dir", str(tmp_path)]) == 0
    csv_path = tmp_path / "gadget-verify_coefficients.csv"
    first_line = csv_path.read_text(encoding="utf-8").splitlines()[0]
    assert first_line.startswith("# manifest: ")
    assert json.loads(first_line[len("# manifest: "):])["parameters"]["epsilon"] == 0.02

    table = read_table(str(csv_path))
    assert len(table) == 6
    assert set(table["coefficient"]) == {"c_const", "c_sx", "c_r", "c_rsx", "c_w", "c_wsx"}

    manifest = json.loads((tmp_path / "gadget-verify_manifest.json").read_text(encoding="utf-8"))
    assert set(manifest["checksums"]) == {"gadget-verify_coefficients.csv", "gadget-verify_fit_summary.csv"}


def test_gadget_verify_tuned_suppresses_pair_terms(tmp_path):
    fitted = {}
    for tune in ("false", "true"):
        out = tmp_path / tune
        args = ["gadget-verify", "--alpha", "0.01", "--gamma", "0.01", "--tune", tune, "--output-dir", str(out)]
        assert main(args) == 0
        table = read_table(str(out / "gadget-verify_coefficients.csv")).set_index("coefficient")
        fitted[tune] = table["exact_fit"]
    assert abs(fitted["false"]["c_rsx"]) >= 50 * abs(fitted["true"]["c_rsx"])
    assert abs(fitted["false"]["c_r"]) >= 50 * abs(fitted["true"]["c_r"])


def test_rerun_is_bit_identical(tmp_path):
    for name in ("first", "second"):
        assert main(["coupling-matrix", "--L", "3", "--output-dir", str(tmp_path / name)]) == 0
    first = (tmp_path / "first" / "coupling-matrix_coupling_matrix.csv").read_bytes()
    second = (tmp_path / "second" / "coupling-matrix_coupling_matrix.csv").read_bytes()
    assert first == second
    assert b"\r\n" not in first


def test_thermo_runs(tmp_path):
    assert main(["thermo", "--L-values", "8,16", "--output-dir", str(tmp_path)]) == 0
    assert len(read_table(str(tmp_path / "thermo_mu.csv"))) == 2


def test_gadget_sweep_runs(tmp_path):
    assert main(["gadget-sweep", "--key", "epsilon", "--values", "0.01,0.02", "--output-dir", str(tmp_path)]) == 0
    sweep = read_table(str(tmp_path / "gadget-sweep_sweep.csv"))
    assert list(sweep["epsilon"]) == [0.01, 0.02]


def test_help_lists_options(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["metropolis-fig4", "--help"])
    assert excinfo.value.code == 0
    out = capsys.readouterr().out
    assert "--sweeps-measure" in out
    assert "--L-values" in out
