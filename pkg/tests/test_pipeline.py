import json
import shutil

import pytest

from bimbehavior.cli import main
from bimbehavior.learn import SplitConfig
from bimbehavior.pipeline import (
    DataError, InfeasibleError, PipelineConfig, SweepConfig, corpus_fingerprint, ingest_corpus,
    run_pipeline, run_sweep, score_sheet, sweep_means,
)
from bimbehavior.quality import read_sheet
from bimbehavior.sessionize import CleaningPolicy
from bimbehavior.synth import GenConfig, gen_corpus
from bimbehavior.windows import WindowConfig, window_count

FAST_MODELS = {"Bagging": {"n_trees": 8}, "RandomForest": {"n_trees": 8}, "ExtraTrees": {"n_trees": 8}}


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    gen_corpus(GenConfig.small(n_designers=10, events_per_designer=(1200, 2000)), 3, root)
    return root


def config(corpus, workspace, **kw):
    base = dict(corpus=str(corpus), workspace=str(workspace),
                cleaning=CleaningPolicy(min_journal_bytes=0),
                window=WindowConfig(600, 300), model_params=FAST_MODELS, repeats=2,
                sweep=SweepConfig(fixed_length=600, steps=(150, 600), fixed_step=300,
                                  lengths=(300, 900), seeds=(0, 1)))
    base.update(kw)
    return PipelineConfig(**base)


CLI_BASE = ["--min-journal-bytes", "0", "--length", "600", "--step", "300"]


def test_config_round_trip_and_partial_sections(corpus, tmp_path):
    cfg = config(corpus, tmp_path)
    assert PipelineConfig.from_dict(cfg.to_dict()) == cfg
    part = PipelineConfig.from_dict({"window": {"length": 1000, "step": 500}, "split": {"seed": 4}})
    assert part.split.test_fraction == 0.2 and part.split.seed == 4
    with pytest.raises(ValueError):
        PipelineConfig.from_dict({"nonsense": 1})
    with pytest.raises(ValueError):
        PipelineConfig(models=("GPT",))


def test_run_is_reproducible_and_worker_invariant(corpus, tmp_path):
    a = run_pipeline(config(corpus, tmp_path / "a"))
    b = run_pipeline(config(corpus, tmp_path / "b", workers=2))
    assert a.run_dir.name == b.run_dir.name
    for name in ("report.json", "features.csv", "windows.csv", "leaderboard.csv",
                 "importance.json", "beeswarm.csv"):
        assert (a.run_dir / name).read_bytes() == (b.run_dir / name).read_bytes(), name
    rep = a.report
    assert rep["samples"]["n_samples"] == rep["samples"]["expected"]
    assert rep["chosen_model"] == rep["leaderboard_mean"][0]["name"]
    assert len(rep["leaderboard"]) == 2 and len(rep["leaderboard"][0]) == 7
    assert rep["importance"]["max_local_accuracy_gap"] < 1e-8
    assert "timings" not in rep and (a.run_dir / "timings.json").is_file()


def test_run_hash_tracks_config_and_corpus(corpus, tmp_path):
    a = run_pipeline(config(corpus, tmp_path, repeats=1))
    b = run_pipeline(config(corpus, tmp_path, repeats=1, split=SplitConfig(seed=9)))
    assert a.run_dir != b.run_dir
    copy = tmp_path / "copy"
    shutil.copytree(corpus, copy)
    assert corpus_fingerprint(copy) == corpus_fingerprint(corpus)
    with open(copy / "scores.csv", "a", encoding="utf-8") as fh:
        fh.write("\n")
    assert corpus_fingerprint(copy) != corpus_fingerprint(corpus)


def test_staged_cli_equals_composed_run(corpus, tmp_path):
    cfg = config(corpus, tmp_path / "ws", models=("OLS", "CART", "ExtraTrees"), repeats=1,
                 model_params={})
    run = run_pipeline(cfg)
    s = tmp_path / "staged"
    s.mkdir()
    common = ["--min-journal-bytes", "0"]
    assert main(["integrate", "--corpus", str(corpus), "--out", str(s / "sessions"), *common]) == 0
    assert main(["window", "--sessions", str(s / "sessions"), "--scores", str(corpus / "scores.csv"),
                 "--out", str(s / "windows.csv"), "--length", "600", "--step", "300"]) == 0
    assert main(["features", "--sessions", str(s / "sessions"), "--windows", str(s / "windows.csv"),
                 "--out", str(s / "features.csv"), "--length", "600", "--step", "300"]) == 0
    chosen = run.report["chosen_model"]
    assert main(["train", "--features", str(s / "features.csv"), "--model", chosen,
                 "--out", str(s / "model.json")]) == 0
    assert main(["explain", "--features", str(s / "features.csv"), "--model-file",
                 str(s / "model.json"), "--out", str(s / "explain")]) == 0
    assert main(["evaluate", "--features", str(s / "features.csv"), "--model-file",
                 str(s / "model.json"), "--out", str(s / "metrics.json")]) == 0
    r = run.run_dir
    assert (s / "windows.csv").read_bytes() == (r / "windows.csv").read_bytes()
    assert (s / "features.csv").read_bytes() == (r / "features.csv").read_bytes()
    assert (s / "model.json").read_bytes() == (r / "models" / f"{chosen}.json").read_bytes()
    assert (s / "explain" / "importance.json").read_bytes() == (r / "importance.json").read_bytes()
    for session in (r / "sessions").glob("*.csv"):
        assert (s / "sessions" / session.name).read_bytes() == session.read_bytes()
    metrics = json.loads((s / "metrics.json").read_text())
    board = next(row for row in run.report["leaderboard"][0] if row["name"] == chosen)
    assert metrics["test"]["r2"] == board["test_r2"]


def test_cli_run_with_config_file(corpus, tmp_path):
    cfg = config(corpus, tmp_path / "ws", models=("OLS", "Ridge"), repeats=1)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert main(["run", "--config", str(path)]) == 0
    # a flag overrides the file
    assert main(["run", "--config", str(path), "--seed", "5"]) == 0
    runs = sorted((tmp_path / "ws").glob("run-*"))
    assert len(runs) == 2
    seeds = {json.loads((d / "config.json").read_text())["split"]["seed"] for d in runs}
    assert seeds == {0, 5}


# exit codes

def test_empty_corpus_is_a_data_error(tmp_path, capsys):
    (tmp_path / "corpus").mkdir()
    code = main(["run", "--corpus", str(tmp_path / "corpus"), "--workspace", str(tmp_path / "ws")])
    assert code == 2
    assert "[parse]" in capsys.readouterr().err
    assert not list((tmp_path / "ws").rglob("models"))
    with pytest.raises(DataError):
        ingest_corpus(tmp_path / "corpus")


def test_missing_tracker_names_the_file(corpus, tmp_path, capsys):
    broken = tmp_path / "broken"
    shutil.copytree(corpus, broken)
    (broken / "D002" / "session_1.tracker.csv").unlink()
    assert main(["parse", "--corpus", str(broken), "--out", str(tmp_path / "p.json")]) == 2
    assert "D002" in capsys.readouterr().err


def test_missing_score_is_a_data_error(corpus, tmp_path):
    broken = tmp_path / "broken"
    shutil.copytree(corpus, broken)
    lines = (broken / "scores.csv").read_text().splitlines()
    (broken / "scores.csv").write_text("\n".join(lines[:-1]) + "\n")
    assert main(["run", "--corpus", str(broken), "--workspace", str(tmp_path / "ws"), *CLI_BASE]) == 2


def test_usage_errors_exit_1(corpus, tmp_path):
    assert main([]) == 1
    assert main(["run", "--no-such-flag"]) == 1
    assert main(["run", "--corpus", str(corpus), "--length", "10", "--step", "50"]) == 1
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 1
    assert main(["run", "--corpus", str(corpus), "--models", "OLS,Bogus"]) == 1


def test_window_longer_than_every_sequence_is_infeasible(corpus, tmp_path):
    args = ["run", "--corpus", str(corpus), "--workspace", str(tmp_path), "--min-journal-bytes", "0",
            "--length", "100000", "--step", "100", "--no-keep-short"]
    assert main(args) == 3


def test_too_few_samples_to_split_is_infeasible(tmp_path):
    gen_corpus(GenConfig.small(n_designers=1, events_per_designer=(300, 300),
                               sessions_per_designer=(1, 1)), 0, tmp_path / "c")
    cfg = config(tmp_path / "c", tmp_path / "ws", window=WindowConfig(300, 300), repeats=1)
    with pytest.raises(InfeasibleError):
        run_pipeline(cfg)


# sweep

def test_sweep_counts_match_formula(corpus, tmp_path):
    cfg = config(corpus, tmp_path, sweep=SweepConfig(fixed_length=600, steps=(100, 250, 600),
                                                     fixed_step=200, lengths=(200, 1000, 10**6),
                                                     models=("ExtraTrees",), seeds=(0,)),
                 model_params=FAST_MODELS)
    sequences, _ = ingest_corpus(corpus, cfg.cleaning)
    result = run_sweep(cfg, sequences=sequences)
    assert len(result["points"]) == 6
    for p in result["points"]:
        wcfg = WindowConfig(p["length"], p["step"])
        expected = sum(window_count(len(s.events), wcfg) for s in sequences.values())
        assert p["n_samples"] == p["expected_samples"] == expected
        if p["feasible"]:
            assert len(p["runs"]) == 1
    # keep_short leaves one window per designer even for a huge length
    assert result["points"][-1]["n_samples"] == len(sequences)


def test_sweep_infeasible_point_does_not_stop_the_rest(corpus, tmp_path):
    cfg = config(corpus, tmp_path, window=WindowConfig(600, 300, keep_short=False),
                 sweep=SweepConfig(fixed_length=600, steps=(300,), fixed_step=300,
                                   lengths=(10**6, 900), models=("Bagging",), seeds=(0,)))
    result = run_sweep(cfg)
    feasible = [p["feasible"] for p in result["points"]]
    assert feasible == [True, False, True]
    means = sweep_means(result, "Bagging")
    assert means[1]["mean_test_r2"] is None and means[2]["mean_test_r2"] is not None


def test_single_point_sweep(corpus, tmp_path):
    cfg = config(corpus, tmp_path, sweep=SweepConfig(fixed_length=600, steps=(300,), fixed_step=300,
                                                     lengths=(), models=("ExtraTrees",), seeds=(0,)))
    assert len(run_sweep(cfg)["points"]) == 1


def test_cli_sweep_writes_table(corpus, tmp_path):
    code = main(["sweep", "--corpus", str(corpus), "--workspace", str(tmp_path), "--min-journal-bytes",
                 "0", "--sweep-length", "600", "--sweep-steps", "300", "--sweep-lengths", "900",
                 "--sweep-step", "300", "--sweep-seeds", "0"])
    assert code == 0
    (out,) = tmp_path.glob("sweep-*")
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0].startswith("axis,length,step,n_samples")
    assert len(lines) == 1 + 2 * 2


# score sheet

def test_score_sheet_examples(tmp_path):
    src = tmp_path / "assessments.csv"
    src.write_text("designer_id,arch_completeness_delta,arch_error_delta,complexity_adjustment,struct_delta\n"
                   "bench,0,0,0,0\nrow2,0,1,2,-1\nbad,0,0,11,0\n")
    errors = score_sheet(src, tmp_path / "scores.csv")
    assert [line for line, _ in errors] == [4]
    with open(tmp_path / "scores.csv", encoding="utf-8") as fh:
        assert read_sheet(fh) == {"bench": 70, "row2": 68}
    assert main(["score", "--assessments", str(src), "--out", str(tmp_path / "s2.csv")]) == 2


def test_empty_assessment_file_gives_empty_sheet(tmp_path):
    (tmp_path / "a.csv").write_text("")
    assert score_sheet(tmp_path / "a.csv", tmp_path / "s.csv") == []
    with open(tmp_path / "s.csv", encoding="utf-8") as fh:
        assert read_sheet(fh) == {}
