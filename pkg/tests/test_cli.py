import csv
import math

import pytest

from cvtomo import cli
from cvtomo.config import ExperimentConfig
from cvtomo.errors import ConfigError


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_print_defaults_roundtrip(tmp_path, capsys):
    assert cli.main(["--print-defaults"]) == 0
    text = capsys.readouterr().out
    path = tmp_path / "cfg.toml"
    path.write_text(text)
    cfg = ExperimentConfig.from_toml(path)
    assert cfg == ExperimentConfig.defaults()
    assert cfg.to_toml() == text


def test_config_validation_messages(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text('family = "gaussian"\nparams = [0.5]\n')
    with pytest.raises(ConfigError) as err:
        ExperimentConfig.from_toml(path)
    assert err.value.field == "params"
    path2 = tmp_path / "bad2.toml"
    path2.write_text('methods = []\n')
    with pytest.raises(ConfigError) as err2:
        ExperimentConfig.from_toml(path2)
    assert err2.value.field == "methods"
    path3 = tmp_path / "bad3.toml"
    path3.write_text("unknown_key = 3\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_toml(path3)


def test_cli_exit_code_on_bad_config(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("methods = []\n")
    code = cli.main(["--config", str(bad), "--out", str(tmp_path / "x.csv"), "scrb-table"])
    assert code == 2


def _write_cfg(tmp_path, body):
    path = tmp_path / "cfg.toml"
    path.write_text(body)
    return str(path)


def test_scrb_table_small(tmp_path):
    cfg = _write_cfg(
        tmp_path,
        'family = "fock"\nparams = [0, 1]\norders = [1, 2]\n'
        'methods = ["HET", "UHOM", "BHOMOPT"]\n\n[grid]\npoints = 121\n',
    )
    out = tmp_path / "table.csv"
    assert cli.main(["--config", cfg, "--out", str(out), "scrb-table"]) == 0
    rows = read_csv(out)
    header, body = rows[0], rows[1:]
    assert header == ["family", "param", "method", "order", "provenance", "value",
                      "rel_dev", "uhom_over_bhomopt"]
    # 2 params x 2 orders x (3 closed + 2 numeric) rows
    assert len(body) == 2 * 2 * 5
    idx = {name: i for i, name in enumerate(header)}
    devs = [float(r[idx["rel_dev"]]) for r in body if r[idx["rel_dev"]]]
    assert devs and max(devs) < 1e-3
    ratio_rows = [
        r for r in body
        if r[idx["method"]] == "UHOM" and r[idx["provenance"]] == "closed_form"
        and r[idx["param"]] == "0" and r[idx["order"]] == "2"
    ]
    assert len(ratio_rows) == 1
    assert float(ratio_rows[0][idx["uhom_over_bhomopt"]]) == pytest.approx(33.0 / 32.0)
    assert body == sorted(body, key=lambda r: tuple(r[:5]))


def test_scrb_table_deterministic(tmp_path):
    cfg = _write_cfg(
        tmp_path,
        'family = "gaussian"\nparams = [1.5]\norders = [1]\n\n[grid]\npoints = 101\n',
    )
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["--config", cfg, "--out", str(out1), "scrb-table"]) == 0
    assert cli.main(["--config", cfg, "--out", str(out2), "scrb-table"]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_figure_fig4_theory_only(tmp_path):
    cfg = _write_cfg(
        tmp_path,
        'family = "fock"\nparams = [0, 1, 2]\norders = [1, 2]\n'
        'methods = ["HET", "UHOM", "BHOMOPT"]\nreplications = 0\n'
        "\n[grid]\npoints = 101\n",
    )
    out = tmp_path / "fig4.csv"
    assert cli.main(["--config", cfg, "--out", str(out), "figure", "fig4"]) == 0
    rows = read_csv(out)
    idx = {name: i for i, name in enumerate(rows[0])}
    body = rows[1:]
    assert len(body) == 3 * 2 * 3
    vac_m2 = {
        r[idx["method"]]: float(r[idx["theory"]])
        for r in body if r[idx["param"]] == "0" and r[idx["order"]] == "2"
    }
    assert vac_m2["BHOMOPT"] == pytest.approx(4.0)
    assert vac_m2["HET"] == pytest.approx(5.0)
    assert vac_m2["BHOMOPT"] < vac_m2["HET"]
    # UHOM theory below HET theory for every point
    for param in ("0", "1", "2"):
        for order in ("1", "2"):
            sel = {
                r[idx["method"]]: float(r[idx["theory"]])
                for r in body if r[idx["param"]] == param and r[idx["order"]] == order
            }
            assert sel["UHOM"] < sel["HET"]
    # MC columns stay empty when replications = 0
    assert all(r[idx["mc_scaled_mse"]] == "" for r in body)


def test_figure_fig3_monotone_ordering(tmp_path):
    cfg = _write_cfg(
        tmp_path,
        'family = "gaussian"\nparams = [1.0, 1.5, 2.0]\norders = [1]\n'
        'methods = ["HET", "UHOM"]\nreplications = 0\n\n[grid]\npoints = 101\n',
    )
    out = tmp_path / "fig3.csv"
    assert cli.main(["--config", cfg, "--out", str(out), "figure", "fig3"]) == 0
    rows = read_csv(out)
    idx = {name: i for i, name in enumerate(rows[0])}
    for param in ("1", "1.5", "2"):
        sel = {
            r[idx["method"]]: float(r[idx["theory"]])
            for r in rows[1:] if r[idx["param"]] == param
        }
        assert sel["UHOM"] < sel["HET"]


def test_figure_with_markers(tmp_path):
    cfg = _write_cfg(
        tmp_path,
        'family = "fock"\nparams = [1]\norders = [1]\nmethods = ["HET"]\n'
        "replications = 60\nseed = 7\n\n[grid]\npoints = 101\n"
        "\n[sampler]\nn_het = 20000\n",
    )
    out = tmp_path / "fig4.csv"
    assert cli.main(["--config", cfg, "--out", str(out), "figure", "fig4"]) == 0
    rows = read_csv(out)
    idx = {name: i for i, name in enumerate(rows[0])}
    row = rows[1]
    ratio = float(row[idx["mc_ratio"]])
    assert 0.5 < ratio < 1.5
    assert float(row[idx["mc_stderr"]]) > 0


def test_mse_command(tmp_path):
    cfg = _write_cfg(
        tmp_path,
        'family = "fock"\nparams = [0]\norders = [1]\nmethods = ["HET", "UHOM"]\n'
        "replications = 80\nseed = 11\n\n[grid]\npoints = 101\n"
        "\n[sampler]\nn_het = 20000\nevents_per_point = 200\n",
    )
    out = tmp_path / "mse.csv"
    assert cli.main(["--config", cfg, "--out", str(out), "mse"]) == 0
    rows = read_csv(out)
    assert rows[0][0] == "method"
    assert len(rows) == 3
    idx = {name: i for i, name in enumerate(rows[0])}
    for row in rows[1:]:
        assert 0.7 < float(row[idx["ratio"]]) < 1.3
        assert row[idx["failure_rate"]] == "0"


def test_figure_include_bhom(tmp_path):
    cfg = _write_cfg(
        tmp_path,
        'family = "fock"\nparams = [0]\norders = [1]\nmethods = ["BHOM", "UHOM"]\n'
        "replications = 20\nseed = 3\n\n[grid]\npoints = 41\nextent = 6.0\n"
        "\n[sampler]\nn_theta = 8\nper_phase_total = 2000\nn_x = 121\n"
        "events_per_point = 200\n",
    )
    out = tmp_path / "fig.csv"
    # without the flag the BHOM rows are skipped
    assert cli.main(["--config", cfg, "--out", str(out), "figure", "fig4"]) == 0
    rows = read_csv(out)
    assert {r[3] for r in rows[1:]} == {"UHOM"}
    assert cli.main(
        ["--config", cfg, "--out", str(out), "--include-bhom", "figure", "fig4"]
    ) == 0
    rows = read_csv(out)
    idx = {name: i for i, name in enumerate(rows[0])}
    methods = {r[idx["method"]] for r in rows[1:]}
    assert methods == {"BHOM", "UHOM"}
    bhom_row = next(r for r in rows[1:] if r[idx["method"]] == "BHOM")
    assert float(bhom_row[idx["theory"]]) > 0
    assert bhom_row[idx["mc_failure_rate"]] != ""


def test_validate_crossovers_and_exit_codes(tmp_path):
    out = tmp_path / "val.csv"
    code = cli.main(["--out", str(out), "validate", "crossovers"])
    assert code == 0
    rows = read_csv(out)
    assert [r[0] for r in rows[1:]] == ["crossovers"] * 4
    assert all(r[5] == "true" for r in rows[1:])


def test_validate_conventions(tmp_path):
    out = tmp_path / "conv.csv"
    assert cli.main(["--out", str(out), "validate", "conventions"]) == 0
    rows = read_csv(out)
    assert all(r[5] == "true" for r in rows[1:])
    names = {r[1] for r in rows[1:]}
    assert "vacuum_ratio_m2_dev" in names
