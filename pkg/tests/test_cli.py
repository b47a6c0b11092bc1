import csv
import hashlib
import json
import os

import numpy as np
import pytest

from delaycond.cli import main
from delaycond.config import build_flow, build_samples, load_config, parse_origin
from delaycond.errors import ConfigError, InvalidArgumentError
from delaycond.runner import run_full_report, run_lemma_check, run_scaling_study


def write_config(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def minimal_shift_config(tmp_path, **overrides):
    spec = {
        "kind": "shift",
        "ambient_dim": "8",
        "num_samples": "8",
        "delays": "4",
        "ensemble": "rademacher",
        "num_draws": "10",
        "base_seed": "7",
        "outputs": str(tmp_path / "out"),
    }
    spec.update(overrides)
    lines = [f"{k} = {v}" for k, v in spec.items() if v is not None]
    return write_config(tmp_path / "exp.cfg", "\n".join(lines) + "\n")


class TestLoadConfig:
    def test_minimal_shift_config_loads(self, tmp_path):
        config = load_config(minimal_shift_config(tmp_path))
        assert config.kind == "shift"
        assert config.ambient_dim == 8
        assert config.delays == [4]
        assert config.base_seed == 7

    def test_comments_and_blank_lines_ignored(self, tmp_path):
        path = write_config(
            tmp_path / "c.cfg",
            "# experiment\nkind = shift\n\nambient_dim = 4  # small\n"
            "num_samples = 4\ndelays = 2\n",
        )
        config = load_config(path)
        assert config.ambient_dim == 4

    def test_zero_delays_names_the_key(self, tmp_path):
        with pytest.raises(ConfigError, match="delays"):
            load_config(minimal_shift_config(tmp_path, delays="0"))

    def test_unknown_ensemble_is_an_enumerated_choice_error(self, tmp_path):
        with pytest.raises(ConfigError, match="ensemble"):
            load_config(minimal_shift_config(tmp_path, ensemble="uniform"))

    def test_unknown_key_rejected(self, tmp_path):
        path = write_config(tmp_path / "c.cfg", "kind = shift\nbogus_key = 1\n")
        with pytest.raises(ConfigError, match="bogus_key"):
            load_config(path)

    def test_duplicate_key_rejected(self, tmp_path):
        path = write_config(tmp_path / "c.cfg", "kind = shift\nkind = linear\n")
        with pytest.raises(ConfigError, match="duplicate"):
            load_config(path)

    def test_parse_error_names_the_line(self, tmp_path):
        path = write_config(tmp_path / "c.cfg", "kind = shift\nnot a key value\n")
        with pytest.raises(ConfigError, match="line 2"):
            load_config(path)

    def test_missing_matrix_path_for_linear(self, tmp_path):
        path = write_config(tmp_path / "c.cfg", "kind = linear\nnum_samples = 4\ndelays = 2\n")
        with pytest.raises(ConfigError, match="matrix_path"):
            load_config(path)

    def test_unresolvable_matrix_path(self, tmp_path):
        path = write_config(
            tmp_path / "c.cfg",
            "kind = linear\nmatrix_path = missing.csv\nnum_samples = 4\ndelays = 2\n",
        )
        with pytest.raises(ConfigError, match="matrix_path"):
            load_config(path)

    def test_theorem_constants_come_in_pairs(self, tmp_path):
        with pytest.raises(ConfigError, match="c_user"):
            load_config(minimal_shift_config(tmp_path, c_user="1.0"))

    def test_samples_path_excludes_origin(self, tmp_path):
        samples = tmp_path / "samples.csv"
        np.savetxt(samples, np.eye(8), delimiter=",")
        with pytest.raises(ConfigError, match="samples_path"):
            load_config(
                minimal_shift_config(
                    tmp_path, samples_path=str(samples), origin="e1"
                )
            )

    def test_empty_value_rejected(self, tmp_path):
        path = write_config(tmp_path / "c.cfg", "kind =\n")
        with pytest.raises(ConfigError, match="empty"):
            load_config(path)


class TestParseOrigin:
    def test_basis_shorthand_is_one_based(self):
        origin = parse_origin("e1", 4)
        assert np.array_equal(origin, [1.0, 0.0, 0.0, 0.0])
        assert np.array_equal(parse_origin("e4", 4), [0.0, 0.0, 0.0, 1.0])

    def test_coordinate_list(self):
        assert np.array_equal(parse_origin("1.5, -2, 0", 3), [1.5, -2.0, 0.0])

    def test_out_of_range_axis(self):
        with pytest.raises(ConfigError, match="origin"):
            parse_origin("e5", 4)

    def test_wrong_length_list(self):
        with pytest.raises(ConfigError, match="origin"):
            parse_origin("1, 2", 3)


class TestBuildPieces:
    def test_linear_flow_from_csv(self, tmp_path):
        matrix_file = tmp_path / "m.csv"
        np.savetxt(matrix_file, np.diag([2.0, 0.5]), delimiter=",")
        path = write_config(
            tmp_path / "c.cfg",
            f"kind = linear\nmatrix_path = {matrix_file}\n"
            "origin = 1, 1\nnum_samples = 5\ndelays = 2\n",
        )
        config = load_config(path)
        flow = build_flow(config)
        assert np.array_equal(flow.matrix, np.diag([2.0, 0.5]))
        samples, desc, period = build_samples(config, flow)
        assert samples.shape == (5, 2)
        assert period is None
        assert "orbit" in desc

    def test_shift_orbit_samples_are_basis_states(self, tmp_path):
        config = load_config(minimal_shift_config(tmp_path))
        flow = build_flow(config)
        samples, _, period = build_samples(config, flow)
        assert period == 8
        assert sorted(int(np.argmax(s)) for s in samples) == list(range(8))

    def test_explicit_samples_file(self, tmp_path):
        samples_file = tmp_path / "samples.csv"
        np.savetxt(samples_file, np.eye(8)[:4], delimiter=",")
        config = load_config(
            minimal_shift_config(tmp_path, samples_path=str(samples_file), num_samples=None)
        )
        flow = build_flow(config)
        samples, desc, period = build_samples(config, flow)
        assert samples.shape == (4, 8)
        assert period is None
        assert desc.startswith("file:")


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.reader(handle))


class TestRunLemmaCheck:
    def test_shift8_all_bounds_hold(self, tmp_path):
        config = load_config(minimal_shift_config(tmp_path, delays="2,4"))
        out = str(tmp_path / "out")
        summary = run_lemma_check(config, out)
        assert summary["passed"]
        rows = read_csv(os.path.join(out, "lemma_check_M4.csv"))
        assert rows[0] == [
            "i", "j", "d", "soft_rank", "oracle_value", "bound_M_over_2", "satisfied",
        ]
        assert len(rows) - 1 == 28  # C(8, 2)
        assert all(row[6] == "true" for row in rows[1:])
        for row in rows[1:]:
            assert abs(float(row[3]) - float(row[4])) <= 1e-10
            assert float(row[3]) >= float(row[5]) - 1e-9
        summary_path = os.path.join(out, "lemma_summary.json")
        with open(summary_path, encoding="utf-8") as handle:
            payload = json.load(handle)
        assert payload["passed"]
        assert [e["num_delays"] for e in payload["per_m"]] == [2, 4]

    def test_non_shift_system_rejected(self, tmp_path):
        matrix_file = tmp_path / "m.csv"
        np.savetxt(matrix_file, np.diag([2.0, 0.5]), delimiter=",")
        path = write_config(
            tmp_path / "c.cfg",
            f"kind = linear\nmatrix_path = {matrix_file}\n"
            "origin = 1, 1\nnum_samples = 5\ndelays = 2\n",
        )
        with pytest.raises(InvalidArgumentError, match="shift"):
            run_lemma_check(load_config(path), str(tmp_path / "out"))

    def test_half_window_rows_attain_the_bound_exactly(self, tmp_path):
        # at M = N the pairs separated by N/2 reach soft rank M/2 on the nose
        config = load_config(
            minimal_shift_config(
                tmp_path, ambient_dim="16", num_samples="16", delays="16"
            )
        )
        out = str(tmp_path / "out")
        summary = run_lemma_check(config, out)
        assert summary["passed"]
        rows = read_csv(os.path.join(out, "lemma_check_M16.csv"))
        half_window = [row for row in rows[1:] if row[2] == "8"]
        assert len(half_window) == 8
        for row in half_window:
            assert float(row[4]) == 8.0  # oracle value is exact
            assert abs(float(row[3]) - 8.0) <= 1e-10
            assert row[6] == "true"

    def test_manifest_checksums_cover_data_files(self, tmp_path):
        config = load_config(minimal_shift_config(tmp_path))
        out = str(tmp_path / "out")
        run_lemma_check(config, out)
        with open(os.path.join(out, "run_manifest.json"), encoding="utf-8") as handle:
            manifest = json.load(handle)
        for name, digest in manifest["checksums"].items():
            with open(os.path.join(out, name), "rb") as data:
                assert hashlib.sha256(data.read()).hexdigest() == digest


class TestRunScalingStudy:
    def test_needs_three_delay_counts(self, tmp_path):
        config = load_config(minimal_shift_config(tmp_path, delays="2,4"))
        with pytest.raises(ConfigError, match="delays"):
            run_scaling_study(config, str(tmp_path / "out"))

    def test_writes_table_and_slope(self, tmp_path):
        config = load_config(
            minimal_shift_config(
                tmp_path, ambient_dim="16", num_samples="16", delays="2,4,8"
            )
        )
        out = str(tmp_path / "out")
        summary = run_scaling_study(config, out)
        rows = read_csv(os.path.join(out, "scaling.csv"))
        assert rows[0] == [
            "M", "infimum_soft_rank", "eps_median", "eps_q05", "eps_q95", "eps_max",
        ]
        assert [int(r[0]) for r in rows[1:]] == [2, 4, 8]
        assert summary["slope"] == pytest.approx(summary["slope"])  # finite
        for row in rows[1:]:
            assert float(row[1]) >= int(row[0]) / 2.0 - 1e-9


class TestRunFullReport:
    def test_report_files_and_determinism(self, tmp_path):
        config = load_config(
            minimal_shift_config(
                tmp_path, ambient_dim="16", num_samples="16", delays="4",
                num_draws="20",
            )
        )
        out_a = str(tmp_path / "a")
        out_b = str(tmp_path / "b")
        run_full_report(config, out_a)
        run_full_report(config, out_b, threads=4)
        names = ["embedding_report.json", "per_pair.csv", "geometry.json"]
        for name in names:
            with open(os.path.join(out_a, name), "rb") as fa:
                digest_a = hashlib.sha256(fa.read()).hexdigest()
            with open(os.path.join(out_b, name), "rb") as fb:
                digest_b = hashlib.sha256(fb.read()).hexdigest()
            assert digest_a == digest_b, f"{name} differs between reruns"
        assert not os.path.exists(os.path.join(out_a, "theorem_check.json"))

    def test_report_content(self, tmp_path):
        config = load_config(
            minimal_shift_config(
                tmp_path, ambient_dim="16", num_samples="16", delays="4",
                num_draws="20",
            )
        )
        out = str(tmp_path / "out")
        payload = run_full_report(config, out)
        assert payload["num_draws"] == 20
        assert payload["params"]["ambient_dim"] == 16
        assert len(payload["per_draw"]) == 20
        rates = payload["failure_rate_curve"]["rate"]
        assert all(a >= b for a, b in zip(rates, rates[1:]))

        rows = read_csv(os.path.join(out, "per_pair.csv"))
        assert len(rows) - 1 == 16 * 15 // 2
        header = rows[0]
        assert header[:5] == ["i", "j", "state_dist_sq", "traj_dist_sq", "soft_rank"]

        with open(os.path.join(out, "geometry.json"), encoding="utf-8") as handle:
            geometry = json.load(handle)
        manifold = geometry["trajectory_manifold"]
        assert manifold["closed_curve"] is True
        assert manifold["volume"] > 0.0
        assert manifold["reach"] > 0.0
        assert geometry["inverse_flow_lyapunov"]["exponent"] == pytest.approx(0.0, abs=1e-10)

    def test_theorem_check_emitted_when_constants_present(self, tmp_path):
        config = load_config(
            minimal_shift_config(
                tmp_path, ambient_dim="16", num_samples="16", delays="4",
                num_draws="10", c_user="1.0", manifold_dim="1.0",
            )
        )
        out = str(tmp_path / "out")
        run_full_report(config, out)
        with open(os.path.join(out, "theorem_check.json"), encoding="utf-8") as handle:
            check = json.load(handle)
        assert set(check) >= {
            "infimum_soft_rank", "epsilon", "satisfied", "degenerate", "c_user",
        }

    def test_explicit_samples_skip_orbit_geometry(self, tmp_path):
        samples_file = tmp_path / "samples.csv"
        np.savetxt(samples_file, np.eye(8)[:5], delimiter=",")
        config = load_config(
            minimal_shift_config(
                tmp_path, samples_path=str(samples_file), num_samples=None,
                num_draws="5",
            )
        )
        out = str(tmp_path / "out")
        run_full_report(config, out)
        with open(os.path.join(out, "geometry.json"), encoding="utf-8") as handle:
            geometry = json.load(handle)
        assert "note" in geometry["trajectory_manifold"]
        assert "volume" not in geometry["trajectory_manifold"]
        assert "exponent" in geometry["inverse_flow_lyapunov"]

    def test_theorem_check_needs_orbit_samples(self, tmp_path):
        samples_file = tmp_path / "samples.csv"
        np.savetxt(samples_file, np.eye(8)[:5], delimiter=",")
        config = load_config(
            minimal_shift_config(
                tmp_path, samples_path=str(samples_file), num_samples=None,
                num_draws="5", c_user="1.0", manifold_dim="1.0",
            )
        )
        with pytest.raises(ConfigError, match="c_user"):
            run_full_report(config, str(tmp_path / "out"))

    def test_gaussian_ensemble_labeled(self, tmp_path):
        config = load_config(
            minimal_shift_config(tmp_path, ensemble="gaussian", num_draws="5")
        )
        payload = run_full_report(config, str(tmp_path / "out"))
        assert payload["ensemble"] == "gaussian"

    def test_single_delay_count_required(self, tmp_path):
        config = load_config(minimal_shift_config(tmp_path, delays="2,4"))
        with pytest.raises(ConfigError, match="delays"):
            run_full_report(config, str(tmp_path / "out"))


class TestSchemaReference:
    @staticmethod
    def _collect_keys(obj, found):
        if isinstance(obj, dict):
            for key, value in obj.items():
                try:
                    float(key)
                    continue  # numeric keys (quantile levels) are values, not schema
                except ValueError:
                    pass
                found.add(key)
                if key not in ("checksums", "config"):  # file names / config echo
                    TestSchemaReference._collect_keys(value, found)
        elif isinstance(obj, list):
            for item in obj:
                TestSchemaReference._collect_keys(item, found)

    def test_every_emitted_column_and_field_is_documented(self, tmp_path):
        schema_doc = os.path.join(
            os.path.dirname(__file__), "..", "docs", "report_schema.md"
        )
        with open(schema_doc, encoding="utf-8") as handle:
            documented = handle.read()

        # the config file is reloaded before each run, so reuse is safe
        lemma_cfg = load_config(minimal_shift_config(tmp_path, delays="2,4"))
        run_lemma_check(lemma_cfg, str(tmp_path / "lemma"))
        scaling_cfg = load_config(
            minimal_shift_config(
                tmp_path, ambient_dim="16", num_samples="16", delays="2,4,8"
            )
        )
        run_scaling_study(scaling_cfg, str(tmp_path / "scaling"))
        report_cfg = load_config(
            minimal_shift_config(
                tmp_path, ambient_dim="16", num_samples="16", delays="4",
                num_draws="10", c_user="1.0", manifold_dim="1.0",
            )
        )
        run_full_report(report_cfg, str(tmp_path / "report"))

        missing = set()
        for out in ("lemma", "scaling", "report"):
            out_dir = tmp_path / out
            for name in os.listdir(out_dir):
                path = os.path.join(out_dir, name)
                if name.endswith(".csv"):
                    for column in read_csv(path)[0]:
                        if column not in documented:
                            missing.add(f"{name}:{column}")
                else:
                    with open(path, encoding="utf-8") as handle:
                        keys = set()
                        self._collect_keys(json.load(handle), keys)
                    for key in keys:
                        if key not in documented:
                            missing.add(f"{name}:{key}")
        assert not missing, f"undocumented report fields: {sorted(missing)}"


class TestCliMain:
    def test_lemma_check_exit_zero(self, tmp_path, capsys):
        config_path = minimal_shift_config(tmp_path)
        out = str(tmp_path / "cli_out")
        code = main(["lemma-check", "--config", config_path, "--out", out])
        assert code == 0
        assert os.path.exists(os.path.join(out, "lemma_summary.json"))
        assert "passed" in capsys.readouterr().out

    def test_bad_config_exit_one(self, tmp_path, capsys):
        config_path = write_config(tmp_path / "bad.cfg", "kind = warp\n")
        assert main(["report", "--config", config_path]) == 1
        assert "error:" in capsys.readouterr().err

    def test_missing_config_exit_one(self, tmp_path):
        assert main(["report", "--config", str(tmp_path / "nope.cfg")]) == 1

    def test_bad_usage_exit_one(self, capsys):
        assert main(["report", "--no-such-flag"]) == 1
        assert main(["--help"]) == 0
        capsys.readouterr()

    def test_assertion_failure_exit_two(self, tmp_path, monkeypatch, capsys):
        # exit-code contract: a failed lemma assertion maps to 2
        import delaycond.cli as cli_module

        def fake_run(config, out_dir, threads=1):
            return {
                "per_m": [
                    {
                        "num_delays": 4,
                        "infimum": 1.0,
                        "num_pairs": 1,
                        "all_bounds_satisfied": False,
                        "oracle_agreement_ok": True,
                    }
                ],
                "passed": False,
            }

        monkeypatch.setattr(cli_module, "run_lemma_check", fake_run)
        config_path = minimal_shift_config(tmp_path)
        assert main(["lemma-check", "--config", config_path]) == 2

    def test_seed_override_changes_results(self, tmp_path):
        config_path = minimal_shift_config(
            tmp_path, ambient_dim="16", num_samples="16", num_draws="5",
            ensemble="gaussian",
        )
        out_a = str(tmp_path / "a")
        out_b = str(tmp_path / "b")
        assert main(["report", "--config", config_path, "--out", out_a, "--seed", "1"]) == 0
        assert main(["report", "--config", config_path, "--out", out_b, "--seed", "2"]) == 0
        with open(os.path.join(out_a, "embedding_report.json")) as fa:
            payload_a = json.load(fa)
        with open(os.path.join(out_b, "embedding_report.json")) as fb:
            payload_b = json.load(fb)
        assert payload_a["base_seed"] == 1 and payload_b["base_seed"] == 2
        seeds_a = [d["alpha_seed"] for d in payload_a["per_draw"]]
        seeds_b = [d["alpha_seed"] for d in payload_b["per_draw"]]
        assert set(seeds_a).isdisjoint(seeds_b)
        assert payload_a["eps_median"] != payload_b["eps_median"]

    def test_scaling_subcommand(self, tmp_path):
        config_path = minimal_shift_config(
            tmp_path, ambient_dim="16", num_samples="16", delays="2,4,8", num_draws="10"
        )
        out = str(tmp_path / "s")
        assert main(["scaling", "--config", config_path, "--out", out]) == 0
        assert os.path.exists(os.path.join(out, "scaling.csv"))
