"""Unit tests for configuration loading and the command-line front end."""

import json
import os

import numpy as np
import pytest

from npzsde.cli import main
from npzsde.config import OUT_DIR_ENV, load_config, parse_axis
from npzsde.engine import SimConfig, simulate_full3d
from npzsde.errors import ConfigError
from npzsde.model import ModelParams, constant


def base_config(**sim_overrides):
    sim = {
        "dt": 0.005, "t_end": 20.0, "burn_in": 2.0, "subsample_every": 10,
        "seed": 42, "n_paths": 2,
    }
    sim.update(sim_overrides)
    return {
        "model": {
            "lambda_input": 2.0, "alpha1": 1.0, "alpha2": 1.0, "alpha3": 0.4,
            "alpha4": 0.5, "alpha5": 0.2, "sigma1": 1.0, "sigma2": 1.0,
            "sigma3": 0.2,
        },
        "responses": {
            "f1": {"kind": "Constant", "a": 1.0},
            "f2": {"kind": "Constant", "a": 1.0},
        },
        "sim": sim,
        "experiment": {},
        "output": {"out_dir": "out", "formats": ["csv", "json"]},
    }


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg, indent=2))
    return str(path)


class TestLoadConfig:
    def test_values_arrive_in_typed_form(self, tmp_path):
        rc = load_config(write_config(tmp_path, base_config()))
        assert rc.params.lambda_input == 2.0
        assert rc.f1.kind == "Constant" and rc.f1.a == 1.0
        assert rc.sim == SimConfig(dt=0.005, t_end=20.0, burn_in=2.0,
                                   subsample_every=10, seed=42, n_paths=2)
        assert rc.output.out_dir == "out"
        assert rc.output.formats == ("csv", "json")

    def test_defaults_for_optional_blocks(self, tmp_path):
        cfg = base_config()
        del cfg["experiment"], cfg["output"]
        rc = load_config(write_config(tmp_path, cfg))
        assert rc.experiment == {}
        assert rc.output.out_dir == "out"

    @pytest.mark.parametrize("mutate", [
        lambda c: c.update(extra=1),
        lambda c: c["model"].update(alpha9=1.0),
        lambda c: c["sim"].update(step=0.1),
        lambda c: c["responses"].update(f3={"kind": "Constant", "a": 1.0}),
        lambda c: c["responses"]["f1"].update(h=0.5),
        lambda c: c["experiment"].update(mystery=True),
        lambda c: c["output"].update(compression="gzip"),
    ])
    def test_unknown_keys_rejected_at_every_level(self, tmp_path, mutate):
        cfg = base_config()
        mutate(cfg)
        with pytest.raises(ConfigError):
            load_config(write_config(tmp_path, cfg))

    def test_missing_required_pieces(self, tmp_path):
        cfg = base_config()
        del cfg["model"]["sigma1"]
        with pytest.raises(ConfigError, match="sigma1"):
            load_config(write_config(tmp_path, cfg))
        cfg = base_config()
        del cfg["sim"]["seed"]
        with pytest.raises(ConfigError, match="seed"):
            load_config(write_config(tmp_path, cfg))
        cfg = base_config()
        del cfg["responses"]["f2"]
        with pytest.raises(ConfigError, match="f2"):
            load_config(write_config(tmp_path, cfg))

    def test_shape_keys_follow_the_kind(self, tmp_path):
        cfg = base_config()
        cfg["responses"]["f2"] = {"kind": "HollingII", "a": 2.0, "h": 0.5}
        rc = load_config(write_config(tmp_path, cfg))
        assert rc.f2.kind == "HollingII" and rc.f2.h == 0.5
        cfg["responses"]["f2"] = {"kind": "HollingII", "a": 2.0}
        with pytest.raises(ConfigError, match="missing"):
            load_config(write_config(tmp_path, cfg))
        cfg["responses"]["f2"] = {"kind": "Squared", "a": 2.0}
        with pytest.raises(ConfigError, match="kind"):
            load_config(write_config(tmp_path, cfg))

    def test_booleans_are_not_numbers(self, tmp_path):
        cfg = base_config()
        cfg["model"]["alpha1"] = True
        with pytest.raises(ConfigError, match="alpha1"):
            load_config(write_config(tmp_path, cfg))

    def test_out_of_range_sim_values_are_config_errors(self, tmp_path):
        with pytest.raises(ConfigError, match="dt"):
            load_config(write_config(tmp_path, base_config(dt=0.5)))

    def test_assumption_violations_still_load(self, tmp_path):
        # alpha4 >= alpha2 breaks a model assumption, not the file format;
        # the validation command must be able to report it.
        cfg = base_config()
        cfg["model"]["alpha4"] = 1.5
        rc = load_config(write_config(tmp_path, cfg))
        assert rc.params.alpha4 == 1.5

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="malformed"):
            load_config(str(path))

    def test_env_var_overrides_out_dir_only(self, tmp_path, monkeypatch):
        monkeypatch.setenv(OUT_DIR_ENV, "/elsewhere")
        rc = load_config(write_config(tmp_path, base_config()))
        assert rc.output.out_dir == "/elsewhere"
        assert rc.sim.seed == 42  # nothing else is touched


class TestParseAxis:
    def test_inclusive_endpoints(self):
        name, values = parse_axis("a=0.5:2.5:5")
        assert name == "a"
        assert values == (0.5, 1.0, 1.5, 2.0, 2.5)

    def test_single_point(self):
        assert parse_axis("alpha3=1.5:1.5:1") == ("alpha3", (1.5,))

    @pytest.mark.parametrize("text", [
        "a0.5:2.5:5", "a=0.5:2.5", "a=0.5:2.5:0", "a=x:y:3", "a=1:2:1",
    ])
    def test_rejects_malformed_axes(self, text):
        with pytest.raises(ConfigError):
            parse_axis(text)


class TestExitCodes:
    def test_validate_passes(self, tmp_path, capsys):
        code = main(["validate", "--config", write_config(tmp_path, base_config())])
        assert code == 0
        out = json.loads(capsys.readouterr().out)
        assert out["all_passed"] is True
        assert out["derived"]["q0"] > 1.0

    def test_validate_reports_violation(self, tmp_path, capsys):
        cfg = base_config()
        cfg["model"]["alpha4"] = 1.5
        code = main(["validate", "--config", write_config(tmp_path, cfg)])
        assert code == 1
        out = json.loads(capsys.readouterr().out)
        names = {c["name"]: c["passed"] for c in out["checks"]}
        assert names["alpha4 < alpha2"] is False

    def test_malformed_config_is_usage_error(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert main(["validate", "--config", str(path)]) == 2

    def test_unknown_key_is_usage_error(self, tmp_path):
        cfg = base_config()
        cfg["model"]["alpha9"] = 1.0
        assert main(["validate", "--config", write_config(tmp_path, cfg)]) == 2

    def test_violation_blocks_other_commands(self, tmp_path):
        cfg = base_config()
        cfg["model"]["alpha4"] = 1.5
        path = write_config(tmp_path, cfg)
        assert main(["simulate", "--config", path,
                     "--out-dir", str(tmp_path / "o")]) == 1

    def test_q_above_ceiling_is_usage_error(self, tmp_path):
        cfg = base_config(t_end=5.0, burn_in=1.0, n_paths=1)
        cfg["experiment"] = {"check": "moments", "q": 3.5}
        path = write_config(tmp_path, cfg)
        assert main(["diagnose", "--config", path, "--check", "moments"]) == 2

    def test_oversized_grid_is_usage_error(self, tmp_path):
        path = write_config(tmp_path, base_config())
        assert main([
            "regime-map", "--config", path, "--out-dir", str(tmp_path / "o"),
            "--axis1", "a=0.5:2.5:101", "--axis2", "b=0.2:1.8:101",
        ]) == 2

    def test_duplicate_axes_is_usage_error(self, tmp_path):
        path = write_config(tmp_path, base_config())
        assert main([
            "regime-map", "--config", path, "--out-dir", str(tmp_path / "o"),
            "--axis1", "a=0.5:2.5:3", "--axis2", "a=0.2:1.8:3",
        ]) == 2


class TestSimulateCommand:
    def test_writes_expected_files(self, tmp_path, capsys):
        out = tmp_path / "run"
        path = write_config(tmp_path, base_config())
        assert main(["simulate", "--config", path, "--out-dir", str(out),
                     "--format", "csv,json,svg"]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert (out / "trajectory.csv").exists()
        assert (out / "run_meta.json").exists()
        assert (out / "trajectory.svg").exists()
        assert summary["recorded_steps"] == 401
        assert summary["clamp_events"] / 4000 < 0.001  # coexistence set
        meta = json.loads((out / "run_meta.json").read_text())
        assert meta["seed"] == 42 and meta["dt"] == 0.005
        assert meta["scheme"] == "HybridLogEuler"
        assert set(meta["versions"]) == {"python", "numpy", "scipy", "numba", "npzsde"}

    def test_csv_round_trips_the_exact_trajectory(self, tmp_path):
        out = tmp_path / "run"
        path = write_config(tmp_path, base_config())
        main(["simulate", "--config", path, "--out-dir", str(out)])
        rows = (out / "trajectory.csv").read_text().strip().split("\n")
        assert rows[0] == "t,x,y,z"
        parsed = np.array([[float(v) for v in r.split(",")] for r in rows[1:]])
        rc = load_config(path)
        traj = simulate_full3d(rc.params, (rc.f1, rc.f2), (1.0, 1.0, 1.0),
                               rc.sim, path_id=0)
        assert np.array_equal(parsed[:, 0], traj.times)
        assert np.array_equal(parsed[:, 1:], traj.states)

    def test_zero_zooplankton_start_stays_zero(self, tmp_path):
        cfg = base_config()
        cfg["experiment"] = {"initial": [1.0, 1.0, 0.0]}
        out = tmp_path / "run"
        main(["simulate", "--config", write_config(tmp_path, cfg),
              "--out-dir", str(out)])
        rows = (out / "trajectory.csv").read_text().strip().split("\n")[1:]
        assert all(r.rsplit(",", 1)[1] == "0.0" for r in rows)

    def test_byte_identical_reruns(self, tmp_path):
        path = write_config(tmp_path, base_config())
        for d in ("a", "b"):
            main(["simulate", "--config", path, "--format", "csv,json,svg",
                  "--out-dir", str(tmp_path / d)])
        for name in ("trajectory.csv", "run_meta.json", "trajectory.svg"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_seed_flag_changes_the_trajectory(self, tmp_path):
        path = write_config(tmp_path, base_config())
        main(["simulate", "--config", path, "--out-dir", str(tmp_path / "a")])
        main(["simulate", "--config", path, "--out-dir", str(tmp_path / "b"),
              "--seed", "43"])
        assert (tmp_path / "a" / "trajectory.csv").read_bytes() != (
            tmp_path / "b" / "trajectory.csv"
        ).read_bytes()


class TestClassifyCommand:
    def test_coexistence_report_fields(self, tmp_path, capsys):
        cfg = base_config(t_end=60.0, burn_in=10.0, n_paths=4)
        code = main(["classify", "--config", write_config(tmp_path, cfg)])
        assert code == 0
        out = json.loads(capsys.readouterr().out)
        assert out["lambda1"] == 0.5
        assert out["lambda1_method"] == "closed_form"
        assert out["lambda2"] == pytest.approx(0.58)
        assert out["regime"] == "Coexistence"
        assert out["lambda2_closed_form"] == out["lambda2"]
        assert out["lambda2_mc_ci"][0] <= out["lambda2_mc"] <= out["lambda2_mc_ci"][1]
        assert out["lambda2_discrepancy"] == pytest.approx(
            abs(out["lambda2_mc"] - out["lambda2"])
        )

    def test_extinction_reports_null_lambda2(self, tmp_path, capsys):
        cfg = base_config()
        cfg["model"].update(lambda_input=1.0, alpha1=2.0, alpha2=0.8,
                            alpha4=0.4, sigma2=0.6)
        code = main(["classify", "--config", write_config(tmp_path, cfg)])
        assert code == 0
        out = json.loads(capsys.readouterr().out)
        assert out["lambda1"] == pytest.approx(-0.48)
        assert out["lambda2"] is None
        assert out["regime"] == "TotalExtinction"

    def test_deterministic_stdout(self, tmp_path, capsys):
        cfg = base_config(t_end=40.0, burn_in=8.0, n_paths=4)
        path = write_config(tmp_path, cfg)
        main(["classify", "--config", path])
        first = capsys.readouterr().out
        main(["classify", "--config", path])
        assert capsys.readouterr().out == first


class TestRegimeMapCommand:
    def test_grid_csv_matches_closed_forms(self, tmp_path, capsys):
        path = write_config(tmp_path, base_config())
        out = tmp_path / "map"
        code = main([
            "regime-map", "--config", path, "--out-dir", str(out),
            "--axis1", "a=0.5:1.5:3", "--axis2", "b=0.2:1.0:3",
        ])
        assert code == 0
        rows = (out / "regime_map.csv").read_text().strip().split("\n")
        assert rows[0] == "axis1,axis2,lambda1,lambda2,regime"
        assert len(rows) == 10
        for row in rows[1:]:
            a, b, lam1, lam2, regime = row.split(",")
            a, b, lam1 = float(a), float(b), float(lam1)
            assert lam1 == pytest.approx(2.0 * a - 1.5)
            if lam1 < 0:
                assert lam2 == "" and regime == "TotalExtinction"
            else:
                want = 2.0 * b * (2.0 - 1.5 / a) - 0.42
                assert float(lam2) == pytest.approx(want)
                assert regime == ("Coexistence" if want > 0 else "PhytoplanktonOnly")

    def test_svg_heatmap_written_on_request(self, tmp_path, capsys):
        path = write_config(tmp_path, base_config())
        out = tmp_path / "map"
        main(["regime-map", "--config", path, "--out-dir", str(out),
              "--format", "csv,svg",
              "--axis1", "a=0.5:1.5:2", "--axis2", "b=0.2:1.0:2"])
        svg = (out / "regime_map.svg").read_text()
        assert svg.startswith("<svg ") and "TotalExtinction" in svg

    def test_byte_identical_reruns(self, tmp_path):
        path = write_config(tmp_path, base_config())
        for d in ("a", "b"):
            main(["regime-map", "--config", path, "--out-dir", str(tmp_path / d),
                  "--axis1", "a=0.5:1.5:3", "--axis2", "b=0.2:1.0:3"])
        assert (tmp_path / "a" / "regime_map.csv").read_bytes() == (
            tmp_path / "b" / "regime_map.csv"
        ).read_bytes()


class TestReportSerialization:
    @pytest.mark.parametrize("argv", [
        ["validate"],
        ["classify"],
    ])
    def test_report_json_round_trips_to_identical_bytes(self, tmp_path, capsys, argv):
        path = write_config(tmp_path, base_config(t_end=10.0, burn_in=1.0))
        main(argv + ["--config", path])
        out = capsys.readouterr().out
        assert json.dumps(json.loads(out), indent=2, sort_keys=True) + "\n" == out


class TestDiagnoseCommand:
    def _extinction_config(self, tmp_path, **experiment):
        cfg = base_config(dt=0.002, t_end=100.0, burn_in=10.0,
                          subsample_every=20, seed=21, n_paths=16)
        cfg["model"].update(lambda_input=1.0, alpha1=2.0, alpha2=0.8,
                            alpha4=0.4, sigma2=0.6)
        cfg["experiment"] = {"check": "extinction", "window": [20.0, 100.0],
                             **experiment}
        return write_config(tmp_path, cfg)

    def test_extinction_check_passes(self, tmp_path, capsys):
        code = main(["diagnose", "--config", self._extinction_config(tmp_path)])
        assert code == 0
        out = json.loads(capsys.readouterr().out)
        assert out["check"] == "extinction"
        assert out["regime"] == "TotalExtinction"
        assert out["passed"] is True

    def test_deliberately_wrong_target_fails(self, tmp_path, capsys):
        # Same run, but the phytoplankton slope target is shifted by +1.
        path = self._extinction_config(tmp_path, targets={"y": 0.52, "z": -0.42})
        code = main(["diagnose", "--config", path])
        assert code == 1
        out = json.loads(capsys.readouterr().out)
        flags = {c["component"]: c["passed"] for c in out["components"]}
        assert flags == {"y": False, "z": True}

    def test_extinction_on_coexistence_is_usage_error(self, tmp_path):
        cfg = base_config()
        cfg["experiment"] = {"check": "extinction"}
        assert main(["diagnose", "--config", write_config(tmp_path, cfg)]) == 2

    def test_check_flag_required_somewhere(self, tmp_path):
        assert main(["diagnose", "--config",
                     write_config(tmp_path, base_config())]) == 2

    def test_convergence_identical_runs_give_zero_tv(self, tmp_path, capsys):
        cfg = base_config(t_end=40.0, burn_in=8.0, n_paths=4)
        cfg["experiment"] = {
            "check": "convergence", "initial": [1.0, 1.0, 1.0],
            "initial_b": [1.0, 1.0, 1.0], "n_windows": 3, "dims": 2,
        }
        # Convergence uses fresh path ids for the second ensemble, so even
        # identical initials see independent noise; TV small but not 0.
        code = main(["diagnose", "--config", write_config(tmp_path, cfg)])
        out = json.loads(capsys.readouterr().out)
        assert out["check"] == "convergence"
        assert code in (0, 1)

    def test_negmoment_extinction_blowup_fails(self, tmp_path, capsys):
        path = self._extinction_config(tmp_path)
        cfg = json.loads(open(path).read())
        cfg["experiment"] = {"check": "negmoment", "theta": 0.3}
        code = main(["diagnose", "--config", write_config(tmp_path, cfg, "nm.json")])
        out = json.loads(capsys.readouterr().out)
        assert out["hypothesis_met"] is False
        assert code == 1
