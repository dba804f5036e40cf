import json

import numpy as np
import pytest

from hdgc.cli import emit_heatmap_data, main, pvalue_bin


@pytest.fixture
def panel_csv(tmp_path):
    """Three-series CSV with a strong y1 -> y2 link."""
    rng = np.random.default_rng(0)
    T = 200
    y = np.zeros((T + 50, 3))
    shocks = rng.standard_normal((T + 50, 3))
    for t in range(1, T + 50):
        y[t, 0] = 0.5 * y[t - 1, 0] + shocks[t, 0]
        y[t, 1] = 0.4 * y[t - 1, 1] + 0.5 * y[t - 1, 0] + shocks[t, 1]
        y[t, 2] = 0.3 * y[t - 1, 2] + shocks[t, 2]
    rows = ["year,a,b,c"]
    for i in range(T):
        rows.append(
            f"{1800 + i},{y[50 + i, 0]:.12g},{y[50 + i, 1]:.12g},{y[50 + i, 2]:.12g}"
        )
    path = tmp_path / "panel.csv"
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return path


class TestTestSubcommand:
    def test_json_schema(self, panel_csv, tmp_path, capsys):
        out = tmp_path / "result.json"
        code = main([
            "test", "--data", str(panel_csv), "--demean",
            "--caused", "b", "--causing", "a",
            "--p", "1", "--d", "1", "--alpha", "0.1",
            "--json", str(out),
        ])
        assert code == 0
        payload = json.loads(out.read_text())
        assert set(payload) == {
            "caused", "causing", "p", "d", "lm", "df", "p_chi2", "p_f",
            "s_hat", "long_run_effect", "reject",
        }
        assert payload["caused"] == ["b"]
        assert payload["causing"] == ["a"]
        assert payload["reject"] is True
        assert payload["df"] == 1

    def test_auto_lag_selection(self, panel_csv, capsys):
        code = main([
            "test", "--data", str(panel_csv), "--demean",
            "--caused", "b", "--causing", "a",
            "--p-auto", "--p-max", "3", "--d", "1",
        ])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["p"] >= 1

    def test_p_and_p_auto_exclusive(self, panel_csv):
        with pytest.raises(SystemExit):
            main([
                "test", "--data", str(panel_csv),
                "--caused", "b", "--causing", "a",
                "--p", "2", "--p-auto",
            ])

    def test_missing_file_exits_2(self, tmp_path, capsys):
        code = main([
            "test", "--data", str(tmp_path / "absent.csv"),
            "--caused", "a", "--causing", "b", "--p", "1",
        ])
        assert code == 2
        assert "not found" in capsys.readouterr().err

    def test_missing_column_exits_2(self, panel_csv, capsys):
        code = main([
            "test", "--data", str(panel_csv),
            "--caused", "zz", "--causing", "a", "--p", "1",
        ])
        assert code == 2
        assert "error" in capsys.readouterr().err

    def test_overlapping_query_exits_2_and_cleans_json(self, panel_csv, tmp_path, capsys):
        out = tmp_path / "r.json"
        code = main([
            "test", "--data", str(panel_csv),
            "--caused", "a", "--causing", "a", "--p", "1",
            "--json", str(out),
        ])
        assert code == 2
        assert not out.exists()

    def test_infeasible_exits_4(self, tmp_path, capsys):
        rows = ["year,a,b"] + [f"{2000 + i},{i * 0.5},{i % 3}" for i in range(9)]
        small = tmp_path / "small.csv"
        small.write_text("\n".join(rows) + "\n", encoding="utf-8")
        code = main([
            "test", "--data", str(small), "--demean",
            "--caused", "a", "--causing", "b",
            "--p", "3", "--d", "1", "--adaptive", "none",
        ])
        assert code == 4

    def test_difference_flag(self, panel_csv, capsys):
        code = main([
            "test", "--data", str(panel_csv), "--demean",
            "--difference", "a:1,b:1,c:1",
            "--caused", "b", "--causing", "a", "--p", "1", "--d", "0",
        ])
        assert code == 0


class TestNetworkSubcommand:
    def run_network(self, panel_csv, out_dir, extra=()):
        return main([
            "network", "--data", str(panel_csv), "--demean",
            "--p", "1", "--d", "1", "--alpha", "0.1",
            "--out-dir", str(out_dir), *extra,
        ])

    def test_emits_all_artifacts(self, panel_csv, tmp_path):
        out = tmp_path / "net"
        assert self.run_network(panel_csv, out) == 0
        for name in (
            "network.json", "network.dot",
            "pvalues.csv", "pvalues_raw.csv", "pvalues_bins.csv",
            "longrun.csv", "longrun_raw.csv",
        ):
            assert (out / name).exists(), name
        payload = json.loads((out / "network.json").read_text())
        assert payload["nodes"] == ["a", "b", "c"]
        assert any(e["from"] == "a" and e["to"] == "b" for e in payload["edges"])
        dot = (out / "network.dot").read_text()
        assert '"a" -> "b"' in dot

    def test_byte_identical_reruns(self, panel_csv, tmp_path):
        out1, out2 = tmp_path / "n1", tmp_path / "n2"
        self.run_network(panel_csv, out1)
        self.run_network(panel_csv, out2)
        for name in ("network.json", "pvalues_raw.csv", "longrun_raw.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_round_trip_through_paths(self, panel_csv, tmp_path, capsys):
        out = tmp_path / "net"
        self.run_network(panel_csv, out)
        capsys.readouterr()  # drain the network run's status line
        code = main([
            "paths", "--network", str(out / "network.json"),
            "--from", "a", "--to", "b",
        ])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["count"] >= 1
        assert ["a", "b"] in payload["paths"]

    def test_cycles_and_cluster_subcommands(self, panel_csv, tmp_path, capsys):
        out = tmp_path / "net"
        self.run_network(panel_csv, out)
        capsys.readouterr()  # drain the network run's status line
        assert main(["cycles", "--network", str(out / "network.json"), "--via", "a"]) == 0
        cyc = json.loads(capsys.readouterr().out)
        assert "cycles" in cyc
        assert main(["cluster", "--network", str(out / "network.json")]) == 0
        clu = json.loads(capsys.readouterr().out)
        assert "modularity" in clu and "communities" in clu

    def test_threads_env_fallback(self, panel_csv, tmp_path, monkeypatch):
        monkeypatch.setenv("HDGC_THREADS", "2")
        out = tmp_path / "net"
        assert self.run_network(panel_csv, out) == 0


class TestSimulateSubcommand:
    def test_summary_schema(self, capsys):
        code = main([
            "simulate", "--dgp", "h0", "--reps", "10", "--T", "120",
            "--alpha", "0.05", "--d", "1", "--seed", "3",
        ])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert set(payload) == {"rejection_rate", "reps", "settings"}
        assert payload["reps"] == 10


class TestConvertSubcommand:
    def test_co2_baseline_is_zero(self, capsys):
        assert main(["convert", "--gas", "co2", "--ppm", "280"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["forcing_w_m2"] == pytest.approx(0.0, abs=1e-12)

    def test_ch4_needs_ppb(self, capsys):
        assert main(["convert", "--gas", "ch4", "--ppb", "1800"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["forcing_w_m2"] > 0.4

    def test_custom_baseline(self, capsys):
        assert main([
            "convert", "--gas", "co2", "--ppm", "277", "--co2-baseline", "277",
        ]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["forcing_w_m2"] == pytest.approx(0.0, abs=1e-12)

    def test_nonpositive_exits_2(self, capsys):
        assert main(["convert", "--gas", "co2", "--ppm", "-1"]) == 2


class TestHeatmapEmission:
    def test_two_by_two_layout(self, tmp_path):
        path = tmp_path / "m.csv"
        emit_heatmap_data(np.array([[1.0, 2.0], [3.0, 4.0]]), ["x", "y"], path)
        lines = path.read_text().strip().split("\n")
        assert len(lines) == 3
        assert lines[0] == ",x,y"
        assert lines[1] == "x,1.0000,2.0000"
        assert lines[2] == "y,3.0000,4.0000"

    def test_display_rounds_to_four_decimals(self, tmp_path):
        path = tmp_path / "m.csv"
        emit_heatmap_data(np.array([[0.051234]]), ["a"], path)
        assert "0.0512" in path.read_text()
        raw = (tmp_path / "m_raw.csv").read_text()
        assert "0.051234" in raw

    def test_nan_cells_blank(self, tmp_path):
        path = tmp_path / "m.csv"
        emit_heatmap_data(np.array([[np.nan, 1.0], [2.0, np.nan]]), ["a", "b"], path)
        lines = path.read_text().strip().split("\n")
        assert lines[1] == "a,,1.0000"

    def test_pvalue_bins(self):
        assert pvalue_bin(0.16) == "white"
        assert pvalue_bin(0.15) == "white"
        assert pvalue_bin(0.149) == "<0.15"
        assert pvalue_bin(0.06) == "<0.10"
        assert pvalue_bin(0.02) == "<0.05"
        assert pvalue_bin(0.005) == "<0.01"
        assert pvalue_bin(float("nan")) == "na"
