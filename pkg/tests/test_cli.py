import json

import numpy as np
import pytest

from hierpoll.cli import main
from hierpoll.errors import ParseError
from hierpoll.fileio import (
    channel_from_dict,
    channel_to_dict,
    load_matrix,
    model_from_dict,
    model_to_dict,
    render_table,
    save_matrix,
)
from hierpoll.presets import EXAMPLE1_O1, EXAMPLE1_O2, example1_model, example2_model

from conftest import hmm_sample


@pytest.fixture
def channel_files(tmp_path):
    paths = []
    for name, M in (("o1", EXAMPLE1_O1), ("o2", EXAMPLE1_O2), ("ident", np.eye(3))):
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(M.tolist()))
        paths.append(str(p))
    return paths


@pytest.fixture
def model_config(tmp_path):
    p = tmp_path / "model.json"
    p.write_text(json.dumps(model_to_dict(example1_model(0.5))))
    return str(p)


class TestFileFormats:
    def test_matrix_csv_round_trip(self, tmp_path):
        p = tmp_path / "m.csv"
        save_matrix(p, EXAMPLE1_O1)
        assert np.array_equal(load_matrix(p), EXAMPLE1_O1)

    def test_matrix_csv_with_header(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("# comment\na,b\n0.5,0.5\n0.25,0.75\n")
        assert np.array_equal(load_matrix(p), [[0.5, 0.5], [0.25, 0.75]])

    def test_matrix_parse_error(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("0.5,oops\n")
        with pytest.raises(ParseError):
            load_matrix(p)

    def test_channel_round_trip(self, tmp_path):
        from hierpoll.channels import friendship_channel
        ch = friendship_channel(EXAMPLE1_O1, 2)
        back = channel_from_dict(channel_to_dict(ch))
        assert back.output_labels == ch.output_labels
        assert np.array_equal(back.matrix.entries, ch.matrix.entries)

    def test_channel_recipes(self):
        intent = channel_from_dict({"type": "intent", "B": EXAMPLE1_O1.tolist(),
                                    "beta": [0.0, 1.0]})
        assert np.abs(intent.matrix.entries - EXAMPLE1_O2).max() < 5e-4
        exp = channel_from_dict({"type": "expectation", "B": EXAMPLE1_O1.tolist(),
                                 "polled_depth": 2, "target_depth": 2})
        assert np.abs(exp.matrix.entries - EXAMPLE1_O2).max() < 5e-4
        friend = channel_from_dict({"type": "friendship",
                                    "B_level": EXAMPLE1_O1.tolist(), "n_friends": 1})
        assert np.abs(friend.matrix.entries - EXAMPLE1_O1).max() < 1e-15

    def test_model_round_trip(self):
        model = example1_model(0.5)
        back = model_from_dict(model_to_dict(model))
        assert np.array_equal(back.P.entries, model.P.entries)
        assert back.rho == model.rho
        assert back.costs.equivalent(model.costs)
        intent = example2_model(0.3, X=4, seed=2)
        back = model_from_dict(model_to_dict(intent))
        assert back.costs.equivalent(intent.costs)

    def test_render_table_deterministic(self):
        rows = [(0.1, 1 / 3), (0.2, 2 / 7)]
        a = render_table(("x", "y"), rows, "csv", {"seed": 1})
        b = render_table(("x", "y"), rows, "csv", {"seed": 1})
        assert a == b
        assert a.startswith("# seed=1\nx,y\n")


class TestDominanceCommand:
    def test_certified_chain_exit_zero(self, channel_files, capsys):
        o1, o2, _ = channel_files
        assert main(["dominance", o1, o2, "--format", "json"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["certified"]
        assert report["pairwise_deficiency"][0][1] <= 1e-8

    def test_identity_vs_uniform_reverse_deficiency(self, tmp_path, capsys):
        ident = tmp_path / "i.json"
        ident.write_text(json.dumps(np.eye(2).tolist()))
        unif = tmp_path / "u.json"
        unif.write_text(json.dumps([[0.5, 0.5], [0.5, 0.5]]))
        assert main(["dominance", str(ident), str(unif), "--format", "json"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["pairwise_deficiency"][0][1] == pytest.approx(0.0, abs=1e-9)
        assert report["pairwise_deficiency"][1][0] == pytest.approx(1.0, abs=1e-8)

    def test_identical_files_zero_both_ways(self, channel_files, capsys):
        o1, _, _ = channel_files
        assert main(["dominance", o1, o1, "--format", "json"]) == 0
        report = json.loads(capsys.readouterr().out)
        flat = np.asarray(report["pairwise_deficiency"])
        assert flat.max() <= 1e-9


class TestExampleCommands:
    def test_example1_small_sweep(self, tmp_path, capsys):
        out = tmp_path / "l1.csv"
        rc = main(["example1", "--rho-list", "0,0.4", "--grid-m", "16",
                   "--runs", "80", "--horizon", "25", "--out", str(out)])
        assert rc == 0
        err = capsys.readouterr().err
        assert "0 violations" in err
        lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert lines[0] == "rho,metric,value,stderr,runs,horizon,seed"
        rows = [l.split(",") for l in lines[1:]]
        assert rows[0][1] == "L1"
        assert float(rows[0][2]) == pytest.approx(0.0, abs=1e-12)

    def test_example1_deterministic_bytes(self, tmp_path):
        outs = []
        for name in ("a.csv", "b.csv"):
            out = tmp_path / name
            main(["example1", "--rho-list", "0.3", "--grid-m", "12",
                  "--runs", "40", "--horizon", "15", "--seed", "7",
                  "--out", str(out)])
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_example2_small_sweep(self, tmp_path, capsys):
        out = tmp_path / "l2.csv"
        rc = main(["example2", "--rho-list", "0,0.5", "--states", "4",
                   "--pairs", "2", "--runs", "60", "--horizon", "20",
                   "--out", str(out)])
        assert rc == 0
        err = capsys.readouterr().err
        assert "all convex Hurwitz: True" in err
        assert "weight audit" in err
        lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        rows = {float(parts[0]): float(parts[2]) for parts in
                (l.split(",") for l in lines[1:])}
        assert rows[0.0] == pytest.approx(0.0, abs=1e-12)
        assert np.isfinite(rows[0.5])


class TestSolveSimulate:
    def test_solve_emits_grid(self, model_config, capsys):
        assert main(["solve", "--config", model_config, "--grid-m", "6"]) == 0
        lines = [l for l in capsys.readouterr().out.splitlines()
                 if not l.startswith("#")]
        assert lines[0] == "pi_1,pi_2,pi_3,value,action"
        assert len(lines) - 1 == 28  # C(8, 2) grid points

    def test_simulate_matches_library_call(self, model_config, capsys):
        from hierpoll.sim import MyopicPolicy, estimate_cost, uniform_belief
        assert main(["simulate", "--config", model_config, "--runs", "30",
                     "--horizon", "12", "--seed", "5"]) == 0
        lines = [l for l in capsys.readouterr().out.splitlines()
                 if not l.startswith("#")]
        mean = float(lines[1].split(",")[0])
        est = estimate_cost(example1_model(0.5), MyopicPolicy(),
                            uniform_belief(3), 12, 30, 5)
        assert mean == pytest.approx(est.mean, rel=1e-12)

    def test_simulate_fixed_policy(self, model_config, capsys):
        assert main(["simulate", "--config", model_config, "--policy", "fixed:2",
                     "--runs", "10", "--horizon", "5"]) == 0


class TestInfoCommands:
    def test_capacity_identity(self, channel_files, capsys):
        *_, ident = channel_files
        assert main(["capacity", ident]) == 0
        lines = [l for l in capsys.readouterr().out.splitlines()
                 if not l.startswith("#")]
        assert float(lines[1].split(",")[1]) == pytest.approx(1.58496, abs=1e-5)

    def test_renyi_rows(self, channel_files, capsys):
        o1, *_ = channel_files
        assert main(["renyi", o1, "--alphas", "0.25,0.75"]) == 0
        lines = [l for l in capsys.readouterr().out.splitlines()
                 if not l.startswith("#")]
        assert len(lines) - 1 == 6 * 2


class TestEstimateCommand:
    def test_estimate_json_trace(self, tmp_path, capsys):
        y = hmm_sample(np.asarray(example1_model(0.5).P),
                       EXAMPLE1_O1, 3000, seed=21)
        f = tmp_path / "obs.csv"
        f.write_text("a,b,c\n" + ",".join("abc"[i] for i in y) + "\n")
        rc = main(["estimate", str(f), "--states", "3", "--max-iter", "15",
                   "--format", "json"])
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        trace = payload["log_likelihoods"]
        assert np.all(np.diff(trace) >= -1e-8)

    def test_parse_failure_exit_code(self, tmp_path, capsys):
        f = tmp_path / "bad.json"
        f.write_text("{broken")
        assert main(["estimate", str(f), "--states", "3"]) == 2
