import json
import os

import pytest

from consolenav.agent import TrainConfig
from consolenav.cli import dispatch, run_eval
from consolenav.scoring import load_scoring_params
from consolenav.agent import load_predictor
from consolenav.simenv import load_world


def synth_args(out, extra=()):
    return ["synth", "--out", str(out), "--seed", "7", "--nodes", "14",
            "--train-episodes", "4", "--eval-episodes", "2",
            "--path-min", "2", "--path-max", "3", "--dim", "16",
            "--noise", "0.05", "--distractor-rate", "0.4", *extra]


class TestSynth:
    def test_deterministic_bundles(self, tmp_path):
        assert dispatch(synth_args(tmp_path / "a")) == 0
        assert dispatch(synth_args(tmp_path / "b")) == 0
        for name in os.listdir(tmp_path / "a"):
            assert (tmp_path / "a" / name).read_bytes() == \
                   (tmp_path / "b" / name).read_bytes(), name

    def test_infeasible_config_is_runtime_error(self, tmp_path, capsys):
        code = dispatch(["synth", "--out", str(tmp_path / "w"), "--nodes", "6",
                         "--path-min", "8", "--path-max", "9"])
        assert code == 2
        assert "InfeasibleConfig" in capsys.readouterr().err


class TestUsageErrors:
    def test_missing_required_flag(self, capsys):
        assert dispatch(["train"]) == 1
        err = capsys.readouterr().err
        assert err.startswith("usage error:")
        assert len(err.strip().splitlines()) == 1

    def test_unknown_flag(self, capsys):
        assert dispatch(["synth", "--out", "x", "--bogus"]) == 1

    def test_unknown_subcommand(self, capsys):
        assert dispatch(["frobnicate"]) == 1


class TestTrainEval:
    @pytest.fixture()
    def world_dir(self, tmp_path):
        out = tmp_path / "w"
        assert dispatch(synth_args(out)) == 0
        return out

    def test_train_then_eval(self, world_dir, tmp_path, capsys):
        ckpt = tmp_path / "ckpt"
        code = dispatch(["train", "--world", str(world_dir), "--out", str(ckpt),
                         "--epochs", "2", "--seed", "3"])
        assert code == 0
        assert (ckpt / "scoring.bin").exists()
        assert (ckpt / "agent.bin").exists()
        log_rows = [json.loads(l) for l in
                    (ckpt / "train_log.jsonl").read_text().splitlines()]
        assert len(log_rows) == 2
        assert set(log_rows[0]) == {"epoch", "mean_il", "mean_cs", "mean_ct",
                                    "eval_sr"}

        metrics_path = tmp_path / "metrics.json"
        code = dispatch(["eval", "--world", str(world_dir), "--ckpt", str(ckpt),
                         "--out", str(metrics_path)])
        assert code == 0
        doc = json.loads(metrics_path.read_text())
        assert set(doc["metrics"]) == {"TL", "NE", "SR", "SPL", "CLS",
                                       "nDTW", "SDTW"}
        assert len(doc["per_episode"]) == 2

    def test_eval_cli_equals_library_call(self, world_dir, tmp_path):
        ckpt = tmp_path / "ckpt"
        dispatch(["train", "--world", str(world_dir), "--out", str(ckpt),
                  "--epochs", "1", "--seed", "3"])
        metrics_path = tmp_path / "m.json"
        dispatch(["eval", "--world", str(world_dir), "--ckpt", str(ckpt),
                  "--out", str(metrics_path)])
        doc = json.loads(metrics_path.read_text())

        world = load_world(world_dir)
        params = load_scoring_params(ckpt / "scoring.bin")
        predictor = load_predictor(ckpt / "agent.bin")
        report = run_eval(world, world.split("eval"), params, predictor,
                          TrainConfig())
        assert doc["metrics"]["SR"] == report.sr
        assert doc["metrics"]["nDTW"] == report.ndtw

    def test_eval_jobs_parity(self, world_dir, tmp_path):
        ckpt = tmp_path / "ckpt"
        dispatch(["train", "--world", str(world_dir), "--out", str(ckpt),
                  "--epochs", "1", "--seed", "3"])
        outs = []
        for jobs in ("1", "2"):
            path = tmp_path / f"m{jobs}.json"
            code = dispatch(["eval", "--world", str(world_dir), "--ckpt",
                             str(ckpt), "--out", str(path), "--jobs", jobs])
            assert code == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]

    def test_text_report_to_stdout(self, world_dir, tmp_path, capsys):
        ckpt = tmp_path / "ckpt"
        dispatch(["train", "--world", str(world_dir), "--out", str(ckpt),
                  "--epochs", "1"])
        capsys.readouterr()
        code = dispatch(["eval", "--world", str(world_dir), "--ckpt", str(ckpt),
                         "--report", "text"])
        assert code == 0
        out = capsys.readouterr().out
        assert out.startswith("metric")
        assert "nDTW" in out


class TestGenPriors:
    def test_replay_round_trip(self, tmp_path):
        world_dir = tmp_path / "w"
        assert dispatch(synth_args(world_dir)) == 0
        world = load_world(world_dir)
        instr_file = tmp_path / "instructions.jsonl"
        with open(instr_file, "w") as fh:
            for e in world.episodes:
                fh.write(json.dumps({"instruction_id": e.instruction_id,
                                     "instruction": e.instruction}) + "\n")
        out_file = tmp_path / "priors.jsonl"
        code = dispatch(["gen-priors", "--instructions", str(instr_file),
                         "--out", str(out_file),
                         "--llm", f"replay:{world_dir / 'transcripts.jsonl'}"])
        assert code == 0
        derived = {json.loads(l)["instruction_id"]: json.loads(l)
                   for l in out_file.read_text().splitlines()}
        for e in world.episodes:
            assert derived[e.instruction_id]["landmarks"] == \
                   world.priors[e.instruction_id].landmarks

    def test_missing_replay_file_is_runtime_error(self, tmp_path, capsys):
        instr = tmp_path / "i.jsonl"
        instr.write_text('{"instruction_id": "x", "instruction": "walk."}\n')
        code = dispatch(["gen-priors", "--instructions", str(instr),
                         "--out", str(tmp_path / "p.jsonl"),
                         "--llm", "replay:/nonexistent.jsonl"])
        assert code == 2


class TestReport:
    def test_table_and_plots(self, tmp_path, capsys):
        log = tmp_path / "log.jsonl"
        rows = [{"epoch": i, "mean_il": 1.0 / (i + 1), "mean_cs": 0.5,
                 "mean_ct": 2.0, "eval_sr": 0.5 + 0.1 * i} for i in range(3)]
        log.write_text("".join(json.dumps(r) + "\n" for r in rows))
        code = dispatch(["report", "--log", str(log), "--plots",
                         "--out", str(tmp_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "epoch" in out and "eval_sr" in out
        png = tmp_path / "training_curves.png"
        assert png.exists()
        assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
