import json
import math

import numpy as np
import pytest
import yaml

from lcklab import parallel
from lcklab.cli import main
from lcklab.errors import ConfigError
from lcklab.pipeline import RunConfig, run_pipeline, sample_points, build_shell
from lcklab.linalg_core import principal_log, spectral_check
from lcklab.reports import parse_report

from conftest import radial_config


def write(tmp_path, d, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(d) if name.endswith(".yaml") else json.dumps(d))
    return str(p)


def run(argv, capsys):
    code = main(argv)
    return code, capsys.readouterr()


class TestConfig:
    def test_round_trip(self):
        cfg = RunConfig.from_dict(radial_config())
        assert RunConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()

    def test_nested_rows_accepted(self):
        cfg = RunConfig.from_dict(radial_config(matrix=[[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]]))
        assert np.allclose(cfg.A, 0.5 * np.eye(2))

    @pytest.mark.parametrize("patch", [
        {"n": 1}, {"n": 9}, {"matrix": [[0.5, 0]]}, {"lambda": -1.0}, {"lambda": "big"},
        {"sampling": {"count": 10}}, {"sampling": {"count": 0, "seed": 1}},
        {"checks": ["nope"]}, {"tolerances": {"tol_nonsense": 1}},
        {"shell": {"type": "torus"}}, {"shell": {"type": "ellipsoid"}},
    ])
    def test_invalid(self, patch):
        with pytest.raises(ConfigError):
            RunConfig.from_dict(radial_config(**patch))


class TestSampling:
    def setup_method(self):
        self.cfg = RunConfig.from_dict(radial_config())
        C = spectral_check(self.cfg.A)
        self.flow = principal_log(C)
        self.S, _ = build_shell(self.cfg, self.flow)

    def test_single_shell_point(self):
        self.cfg.count, self.cfg.t_range = 1, (0.0, 0.0)
        Z, _, _ = sample_points(self.cfg, self.flow, self.S)
        assert abs(self.S.value(Z[0]) - 1.0) < 1e-10

    def test_deterministic(self):
        a, _, _ = sample_points(self.cfg, self.flow, self.S)
        b, _, _ = sample_points(self.cfg, self.flow, self.S, threads=4)
        assert np.array_equal(a, b)

    def test_annulus_bounds(self):
        self.cfg.t_range = (-2.0, 2.0)
        Z, _, _ = sample_points(self.cfg, self.flow, self.S)
        r = np.linalg.norm(Z, axis=1)
        assert r.min() >= 0.25 - 1e-12 and r.max() <= 4 + 1e-12


class TestPipeline:
    def test_radial_all_pass(self):
        res = run_pipeline(RunConfig.from_dict(radial_config()))
        assert res.exit_code == 0, [(c.name, c.status) for c in res.report.checks]
        assert res.report.overall == "pass"

    def test_every_check_exactly_once(self):
        checks = ["psh", "automorphy", "vaisman"]
        res = run_pipeline(RunConfig.from_dict(radial_config(checks=checks)))
        assert [c.name for c in res.report.checks] == checks

    def test_jordan_auto(self):
        cfg = radial_config(matrix=[[0.5, 0], [0.5, 0], [0, 0], [0.5, 0]], **{"lambda": "auto"})
        res = run_pipeline(RunConfig.from_dict(cfg))
        assert res.exit_code == 0
        assert res.report.lam == pytest.approx(2 * res.report.lam_star)
        assert res.report.check("vaisman").status == "inapplicable"
        assert res.report.check("lck_identity").passed

    def test_not_contraction(self):
        cfg = radial_config(matrix=[[0.5, 0], [0, 0], [0, 0], [1.2, 0]])
        res = run_pipeline(RunConfig.from_dict(cfg))
        assert res.exit_code == 2
        assert res.report.error["type"] == "NotContraction"
        assert all(c.status == "inapplicable" for c in res.report.checks)

    def test_inadmissible_sphere_is_precondition_error(self):
        cfg = radial_config(matrix=[[0.5, 0], [2, 0], [0, 0], [0.5, 0]])
        res = run_pipeline(RunConfig.from_dict(cfg))
        assert res.exit_code == 2 and res.report.error["type"] == "Inadmissible"

    def test_lyapunov_fallback(self):
        cfg = radial_config(matrix=[[0.5, 0], [2, 0], [0, 0], [0.5, 0]],
                            shell={"type": "lyapunov"}, **{"lambda": "auto"})
        cfg["sampling"]["count"] = 60
        res = run_pipeline(RunConfig.from_dict(cfg))
        assert res.report.shell["type"] == "ellipsoid"
        assert res.exit_code == 0, [(c.name, c.status) for c in res.report.checks]

    def test_failing_check_gives_exit_1(self):
        # an impossible automorphy tolerance must fail, not be skipped
        cfg = radial_config(tolerances={"check_automorphy": 0.0}, checks=["automorphy"])
        cfg["matrix"] = [[0.5, 0], [0.5, 0], [0, 0], [0.5, 0]]
        res = run_pipeline(RunConfig.from_dict(cfg))
        assert res.exit_code == 1 and res.report.overall == "fail"


class TestCommands:
    def test_analyze_json(self, tmp_path, capsys):
        code, out = run(["analyze", "--config", write(tmp_path, radial_config())], capsys)
        assert code == 0
        assert parse_report(out.out).overall == "pass"

    def test_analyze_json_config_and_out_file(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        code, _ = run(["analyze", "--config", write(tmp_path, radial_config(), "c.json"),
                       "--out", str(out)], capsys)
        assert code == 0 and parse_report(out.read_bytes()).overall == "pass"

    def test_seed_flag_overrides(self, tmp_path, capsys):
        p = write(tmp_path, radial_config(checks=["psh"]))
        _, a = run(["analyze", "--config", p, "--seed", "1"], capsys)
        _, b = run(["analyze", "--config", p, "--seed", "2"], capsys)
        assert json.loads(a.out)["config"]["sampling"]["seed"] == 1
        assert json.loads(a.out)["checks"][0]["worst_sample"] != json.loads(b.out)["checks"][0]["worst_sample"]

    def test_bad_config_exit_2(self, tmp_path, capsys):
        code, out = run(["analyze", "--config", write(tmp_path, {"n": 2})], capsys)
        assert code == 2 and "configuration" in out.err

    def test_missing_file_exit_2(self, capsys):
        code, _ = run(["analyze", "--config", "/nonexistent.yaml"], capsys)
        assert code == 2

    def test_not_contraction_exit_2(self, tmp_path, capsys):
        cfg = radial_config(matrix=[[0.5, 0], [0, 0], [0, 0], [1.2, 0]])
        code, out = run(["analyze", "--config", write(tmp_path, cfg)], capsys)
        assert code == 2 and json.loads(out.out)["error"]["type"] == "NotContraction"

    def test_min_lambda(self, tmp_path, capsys):
        cfg = radial_config(matrix=[[0.5, 0], [0.5, 0], [0, 0], [0.5, 0]])
        code, out = run(["min-lambda", "--config", write(tmp_path, cfg)], capsys)
        d = json.loads(out.out)
        assert code == 0 and d["found"] and 0.5 < d["lambda_star"] < 2

    def test_check_vaisman(self, tmp_path, capsys):
        code, out = run(["check-vaisman", "--config", write(tmp_path, radial_config())], capsys)
        d = json.loads(out.out)
        assert code == 0 and d["verdict"] == "satisfied"
        assert d["homothety"]["c"] == pytest.approx(-2 * math.log(2), abs=1e-8)

    def test_shell_suggest(self, tmp_path, capsys):
        cfg = radial_config(matrix=[[0.5, 0], [2, 0], [0, 0], [0.5, 0]])
        code, out = run(["shell-suggest", "--config", write(tmp_path, cfg)], capsys)
        d = json.loads(out.out)
        assert code == 0 and d["lyapunov_residual"] <= 1e-10 and d["levi"]["passed"]

    def test_potential_dump(self, tmp_path, capsys):
        cfg = radial_config()
        cfg["sampling"]["count"] = 5
        code, out = run(["potential-dump", "--config", write(tmp_path, cfg)], capsys)
        lines = out.out.splitlines()
        assert code == 0 and len(lines) == 6
        assert lines[0] == "re_z1,im_z1,re_z2,im_z2,t,phi,min_eig"

    def test_threads_flag_beats_env(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("LCKLAB_THREADS", "3")
        seen = []
        import lcklab.cli as cli
        monkeypatch.setitem(cli.COMMANDS, "analyze",
                            (lambda args: seen.append(parallel.default_threads()) or 0, ""))
        main(["analyze", "--config", "x", "--threads", "2"])
        main(["analyze", "--config", "x"])
        assert seen == [2, 3]
