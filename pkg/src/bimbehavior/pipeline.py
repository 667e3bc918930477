"""End-to-end runs over a corpus directory, with every stage persisted.

A run lives in ``<workspace>/run-<hash>`` where the hash covers the
configuration and the corpus content, so identical inputs always land in the
same place and produce byte-identical files. Wall-clock timings are kept in
``timings.json`` beside the report rather than inside it.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import re
import time
import warnings
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .explain import default_background, explain_matrix, aggregate, importance_report, write_beeswarm
from .features import FEATURE_NAMES, feature_matrix, read_matrix, write_matrix
from .ingest import parse_journal, parse_tracker, TrackerFormatError
from .learn import Dataset, SplitConfig, compare_models, load_model, save_model, split_indices
from .learn.metrics import evaluate
from .learn.suite import MODEL_KINDS, ModelSpec, default_suite, fit_model
from .quality import read_assessments, read_sheet, score, write_sheet
from .sessionize import (
    CleaningPolicy, EmptySessionError, NonMonotoneError, ParsedFile, SessionOverlapWarning,
    SessionsNotChronologicalError, clean, concat_sessions, integrate, read_session, write_session,
)
from .windows import WindowConfig, attach_labels, make_windows, read_manifest, window_count, write_manifest

SESSION_FILE = re.compile(r"session_(\d+)\.journal\.txt")
SWEEP_HEADER = ("axis", "length", "step", "n_samples", "expected_samples", "feasible", "model",
                "seed", "train_rmse", "test_rmse", "train_r2", "test_r2")


class StageError(Exception):
    exit_code = 2

    def __init__(self, stage: str, path, message: str):
        self.stage, self.path = stage, str(path)
        super().__init__(f"[{stage}] {path}: {message}")


class DataError(StageError):
    exit_code = 2


class InfeasibleError(StageError):
    exit_code = 3


# configuration

@dataclass(frozen=True)
class ExplainConfig:
    model: str = "best"
    max_samples: int = 256
    background_cap: int = 512
    n_permutations: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.max_samples < 1 or self.background_cap < 1 or self.n_permutations < 1:
            raise ValueError("explainer sizes must be >= 1")


@dataclass(frozen=True)
class SweepConfig:
    fixed_length: int = 30_000
    steps: tuple[int, ...] = (500, 1_000, 2_500, 5_000, 10_000, 15_000)
    fixed_step: int = 1_000
    lengths: tuple[int, ...] = (10_000, 20_000, 30_000, 40_000)
    models: tuple[str, ...] = ("ExtraTrees", "Bagging")
    seeds: tuple[int, ...] = (0, 1, 2)

    def __post_init__(self):
        for name in ("steps", "lengths", "models", "seeds"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        unknown = set(self.models) - set(MODEL_KINDS)
        if unknown:
            raise ValueError(f"unknown sweep models {sorted(unknown)}")
        if not self.seeds:
            raise ValueError("sweep needs at least one seed")

    def points(self) -> list[tuple[str, int, int]]:
        return ([("step", self.fixed_length, s) for s in self.steps]
                + [("length", n, self.fixed_step) for n in self.lengths])


@dataclass(frozen=True)
class PipelineConfig:
    corpus: str = "corpus"
    workspace: str = "workspace"
    cleaning: CleaningPolicy = CleaningPolicy()
    window: WindowConfig = WindowConfig(30_000, 5_000)
    models: tuple[str, ...] = tuple(s.name for s in default_suite())
    model_params: dict = field(default_factory=dict)
    split: SplitConfig = SplitConfig()
    repeats: int = 5
    explain: ExplainConfig = ExplainConfig()
    sweep: SweepConfig = SweepConfig()
    workers: int = 1

    # fields that never change results, so they stay out of hashes and reports
    _RUNTIME = ("corpus", "workspace", "workers")
    _NESTED = {"cleaning": CleaningPolicy, "window": WindowConfig, "split": SplitConfig,
               "explain": ExplainConfig, "sweep": SweepConfig}

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(self.models))
        if not self.models:
            raise ValueError("model suite is empty")
        known = {s.name for s in default_suite()}
        if set(self.models) - known:
            raise ValueError(f"unknown models {sorted(set(self.models) - known)}")
        if self.repeats < 1 or self.workers < 1:
            raise ValueError("repeats and workers must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        kw = {}
        names = {f.name for f in fields(cls)}
        for key, value in d.items():
            if key not in names:
                raise ValueError(f"unknown config key {key!r}")
            if key in cls._NESTED and isinstance(value, dict):
                # a partial section keeps the defaults of the fields it leaves out
                default = next(f for f in fields(cls) if f.name == key).default
                value = cls._NESTED[key](**{**asdict(default), **value})
            kw[key] = value
        return cls(**kw)

    def to_dict(self, runtime: bool = True) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        out = {k: (asdict(v) if k in self._NESTED else v) for k, v in d.items()}
        out["models"] = list(self.models)
        if not runtime:
            for k in self._RUNTIME:
                out.pop(k)
        return json.loads(json.dumps(out))

    def suite(self, n_features: int = len(FEATURE_NAMES)) -> list[ModelSpec]:
        by_name = {s.name: s for s in default_suite(n_features)}
        out = []
        for name in self.models:
            base = by_name[name]
            out.append(ModelSpec(name, base.kind, {**base.params, **self.model_params.get(name, {})}))
        return out

    def split_for(self, repeat: int) -> SplitConfig:
        return replace(self.split, seed=self.split.seed + repeat)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def corpus_fingerprint(corpus) -> str:
    root = Path(corpus)
    h = hashlib.sha256()
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        h.update(path.relative_to(root).as_posix().encode())
        h.update(b"\0")
        h.update(path.read_bytes())
    return h.hexdigest()


def run_hash(config: PipelineConfig, fingerprint: str, kind: str = "run") -> str:
    payload = _dump({"kind": kind, "config": config.to_dict(runtime=False), "corpus": fingerprint,
                     "version": __version__})
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


# stages

def _designer_dirs(corpus: Path) -> list[Path]:
    if not corpus.is_dir():
        raise DataError("parse", corpus, "corpus directory does not exist")
    dirs = sorted(p for p in corpus.iterdir() if p.is_dir() and not p.name.startswith("."))
    if not dirs:
        raise DataError("parse", corpus, "no designer directories")
    return dirs


def _session_pairs(folder: Path) -> list[tuple[str, Path, Path]]:
    pairs = []
    for p in folder.iterdir():
        m = SESSION_FILE.fullmatch(p.name)
        if m:
            tracker = folder / f"session_{m.group(1)}.tracker.csv"
            if not tracker.is_file():
                raise DataError("parse", tracker, "journal has no matching tracker file")
            pairs.append((int(m.group(1)), f"session_{m.group(1)}", p, tracker))
    return [(sid, j, t) for _, sid, j, t in sorted(pairs)]


def ingest_corpus(corpus, policy: CleaningPolicy = CleaningPolicy()) -> tuple[dict, dict]:
    """Parse, clean and integrate a corpus: ({designer: DesignerSequence}, parse report)."""
    corpus = Path(corpus)
    sequences, report = {}, {"designers": {}, "totals": {}}
    totals = dict.fromkeys(("sessions", "accepted", "journal_malformed", "tracker_malformed"), 0)
    for folder in _designer_dirs(corpus):
        did = folder.name
        entries, sessions = [], []
        for sid, jpath, tpath in _session_pairs(folder):
            with open(jpath, encoding="utf-8", newline="") as fh:
                jrec, jrep = parse_journal(fh)
            try:
                with open(tpath, encoding="utf-8", newline="") as fh:
                    trec, trep = parse_tracker(fh)
            except TrackerFormatError as exc:
                raise DataError("parse", tpath, str(exc)) from None
            decision = clean(ParsedFile(str(jpath), jpath.stat().st_size, jrec, jrep),
                             ParsedFile(str(tpath), tpath.stat().st_size, trec, trep), policy)
            entries.append({"session": sid, "accepted": decision.accepted,
                            "reasons": [r.value for r in decision.reasons],
                            "journal": jrep.to_dict(), "tracker": trep.to_dict()})
            totals["sessions"] += 1
            totals["journal_malformed"] += jrep.lines_malformed
            totals["tracker_malformed"] += trep.lines_malformed
            if decision.accepted:
                totals["accepted"] += 1
                try:
                    sessions.append(integrate(jrec, trec, sid, did))
                except (EmptySessionError, NonMonotoneError) as exc:
                    raise DataError("integrate", jpath, str(exc)) from None
        notes = []
        if sessions:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", SessionOverlapWarning)
                try:
                    seq = concat_sessions(sessions)
                except SessionsNotChronologicalError as exc:
                    raise DataError("integrate", folder, str(exc)) from None
            notes = [str(w.message) for w in caught]
            sequences[did] = seq
        report["designers"][did] = {"sessions": entries, "notes": notes,
                                    "events": len(sequences[did].events) if did in sequences else 0}
    totals["designers_kept"] = len(sequences)
    report["totals"] = totals
    if not sequences:
        raise DataError("parse", corpus, "no session survived cleaning")
    return sequences, report


def write_sessions(sequences: dict, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for did, seq in sequences.items():
        with open(out / f"{did}.csv", "w", encoding="utf-8", newline="") as fh:
            write_session(seq.events, fh)


def read_sessions(sessions_dir) -> dict:
    folder = Path(sessions_dir)
    files = sorted(folder.glob("*.csv"))
    if not files:
        raise DataError("window", folder, "no integrated session files")
    out = {}
    for path in files:
        with open(path, encoding="utf-8") as fh:
            try:
                out[path.stem] = read_session(fh)
            except ValueError as exc:
                raise DataError("window", path, str(exc)) from None
    return out


def read_scores(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return read_sheet(fh)
    except FileNotFoundError:
        raise DataError("window", path, "score sheet not found") from None
    except ValueError as exc:
        raise DataError("window", path, str(exc)) from None


def window_stage(lengths: dict, scores: dict, config: WindowConfig, path=None) -> list:
    ranges = {did: make_windows(n, config) for did, n in lengths.items()}
    missing = sorted(set(ranges) - set(scores))
    if missing:
        raise DataError("window", path or "scores", f"no score for designers {missing}")
    samples = attach_labels(ranges, scores)
    if not samples:
        raise InfeasibleError("window", path or "windows",
                              f"window length {config.length} yields no samples")
    return samples


def feature_stage(events: dict, samples) -> list[tuple[str, int, float, np.ndarray]]:
    by_designer: dict[str, list] = {}
    for s in samples:
        by_designer.setdefault(s.designer_id, []).append(s)
    rows = []
    for did, group in by_designer.items():
        if did not in events:
            raise DataError("features", did, "window refers to a designer without a session file")
        X = feature_matrix(events[did], [(s.start, s.end) for s in group])
        rows.extend((did, s.start, s.label, x) for s, x in zip(group, X))
    return rows


def load_dataset(features_path) -> tuple[Dataset, list[str], np.ndarray]:
    try:
        with open(features_path, encoding="utf-8") as fh:
            ids, starts, labels, X = read_matrix(fh)
    except (OSError, ValueError) as exc:
        raise DataError("train", features_path, str(exc)) from None
    return Dataset(X, labels, np.array(ids)), ids, starts


def _check_split(data: Dataset, split: SplitConfig, stage: str, path) -> tuple[np.ndarray, np.ndarray]:
    try:
        return split_indices(data, split)
    except ValueError as exc:
        raise InfeasibleError(stage, path, str(exc)) from None


LEADERBOARD_HEADER = ("repeat", "split_seed", "rank", "name", "kind", "train_rmse", "test_rmse",
                      "train_r2", "test_r2", "error", "note")
MEAN_HEADER = ("rank", "name", "kind", "mean_train_rmse", "mean_test_rmse", "mean_train_r2",
               "mean_test_r2", "failures")


def _num(v):
    return "" if v is None else repr(float(v))


def learn_stage(data: Dataset, config: PipelineConfig, path="features.csv"):
    """Per-repeat leaderboards, the mean table, and the primary-repeat models."""
    suite = config.suite(data.X.shape[1])
    boards = []
    for r in range(config.repeats):
        split = config.split_for(r)
        _check_split(data, split, "train", path)
        boards.append(compare_models(data, suite, split, workers=config.workers))
    order = {s.name: i for i, s in enumerate(suite)}
    table = []
    for spec in suite:
        rows = [next(row for row in b if row.name == spec.name) for b in boards]
        ok = [row for row in rows if row.error is None]
        mean = (lambda key: float(np.mean([getattr(row, key) for row in ok])) if ok else None)
        table.append({"name": spec.name, "kind": spec.kind, "mean_train_rmse": mean("train_rmse"),
                      "mean_test_rmse": mean("test_rmse"), "mean_train_r2": mean("train_r2"),
                      "mean_test_r2": mean("test_r2"), "failures": len(rows) - len(ok)})
    table.sort(key=lambda t: (t["failures"] > 0 or t["mean_test_r2"] is None,
                              -(t["mean_test_r2"] or 0.0), t["mean_test_rmse"] or 0.0,
                              order[t["name"]]))
    for i, t in enumerate(table, start=1):
        t["rank"] = i
    return boards, table


def write_leaderboards(boards, table, config: PipelineConfig, out_dir: Path) -> None:
    with open(out_dir / "leaderboard.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LEADERBOARD_HEADER)
        for r, board in enumerate(boards):
            for rank, row in enumerate(board, start=1):
                w.writerow((r, config.split_for(r).seed, rank, row.name, row.kind,
                            _num(row.train_rmse), _num(row.test_rmse), _num(row.train_r2),
                            _num(row.test_r2), row.error or "", row.note or ""))
    with open(out_dir / "leaderboard_mean.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MEAN_HEADER)
        for t in table:
            w.writerow((t["rank"], t["name"], t["kind"], _num(t["mean_train_rmse"]),
                        _num(t["mean_test_rmse"]), _num(t["mean_train_r2"]),
                        _num(t["mean_test_r2"]), t["failures"]))


def choose_model(table, wanted: str = "best") -> str:
    if wanted != "best":
        if wanted not in {t["name"] for t in table}:
            raise ValueError(f"model {wanted!r} is not in the suite")
        return wanted
    for t in table:
        if t["failures"] == 0:
            return t["name"]
    raise InfeasibleError("train", "suite", "every model failed")


def explain_stage(model, data: Dataset, ids, starts, split: SplitConfig, config: ExplainConfig,
                  path="features.csv"):
    """Attributions for (a seeded subsample of) the test rows."""
    train, test = _check_split(data, split, "explain", path)
    rows = test
    if len(rows) > config.max_samples:
        rng = np.random.default_rng(config.seed)
        rows = np.sort(rng.choice(rows, size=config.max_samples, replace=False))
    background = default_background(data.X[train], config.background_cap, config.seed)
    phi, base, pred = explain_matrix(model, data.X[rows], background, config.n_permutations,
                                     config.seed)
    imp = aggregate(phi, data.X[rows])
    sample_ids = [f"{ids[i]}@{int(starts[i])}" for i in rows]
    gap = float(np.max(np.abs(base + phi.sum(axis=1) - pred))) if len(rows) else 0.0
    return imp, sample_ids, float(np.mean(base)), gap


def _signed_summary(imp) -> dict:
    """Correlation between each feature's value and its attribution."""
    out = {}
    for j, name in enumerate(imp.feature_names):
        x, p = imp.values[:, j], imp.phi[:, j]
        if len(x) > 1 and np.std(x) > 0 and np.std(p) > 0:
            out[name] = float(np.corrcoef(x, p)[0, 1])
        else:
            out[name] = None
    return out


def semantics_for(model) -> str:
    from .learn.forest import ForestModel
    from .learn.linear import LinearModel
    if isinstance(model, ForestModel):
        return "path-conditional (tree)"
    if isinstance(model, LinearModel):
        return "background substitution (exact, linear)"
    return "background substitution (permutation sampling)"


def write_explanation(imp, sample_ids, base, out_dir: Path, semantics: str) -> dict:
    report = importance_report(imp, base_value=base, semantics=semantics)
    report["signed_correlation"] = _signed_summary(imp)
    (out_dir / "importance.json").write_text(_dump(report), encoding="utf-8")
    with open(out_dir / "beeswarm.csv", "w", encoding="utf-8", newline="") as fh:
        write_beeswarm(imp, fh, sample_ids)
    return report


# orchestration

@dataclass
class RunResult:
    run_dir: Path
    report: dict
    timings: dict


def run_pipeline(config: PipelineConfig) -> RunResult:
    """ingest -> sessionize -> windows -> features -> learn -> explain, all persisted."""
    timings = {}
    clock = time.perf_counter()

    def tick(stage):
        nonlocal clock
        now = time.perf_counter()
        timings[stage] = round(now - clock, 3)
        clock = now

    corpus = Path(config.corpus)
    _designer_dirs(corpus)
    fingerprint = corpus_fingerprint(corpus)
    run_dir = Path(config.workspace) / f"run-{run_hash(config, fingerprint)}"
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.json").write_text(_dump(config.to_dict(runtime=False)), encoding="utf-8")
    tick("fingerprint")

    sequences, parse_report = ingest_corpus(corpus, config.cleaning)
    (run_dir / "parse.json").write_text(_dump(parse_report), encoding="utf-8")
    write_sessions(sequences, run_dir / "sessions")
    tick("ingest")

    events = read_sessions(run_dir / "sessions")
    scores = read_scores(corpus / "scores.csv")
    samples = window_stage({d: len(e) for d, e in events.items()}, scores, config.window,
                           corpus / "scores.csv")
    with open(run_dir / "windows.csv", "w", encoding="utf-8", newline="") as fh:
        write_manifest(samples, fh)
    tick("windows")

    with open(run_dir / "windows.csv", encoding="utf-8") as fh:
        manifest = read_manifest(fh, config.window.length)
    with open(run_dir / "features.csv", "w", encoding="utf-8", newline="") as fh:
        write_matrix(feature_stage(events, manifest), fh)
    tick("features")

    data, ids, starts = load_dataset(run_dir / "features.csv")
    boards, table = learn_stage(data, config, run_dir / "features.csv")
    write_leaderboards(boards, table, config, run_dir)
    chosen = choose_model(table, config.explain.model)
    model = next(row for row in boards[0] if row.name == chosen).model
    if model is None:
        raise InfeasibleError("train", chosen, "chosen model failed on the primary split")
    (run_dir / "models").mkdir(exist_ok=True)
    save_model(model, run_dir / "models" / f"{chosen}.json")
    tick("learn")

    model = load_model(run_dir / "models" / f"{chosen}.json")
    imp, sample_ids, base, gap = explain_stage(model, data, ids, starts, config.split_for(0),
                                               config.explain, run_dir / "features.csv")
    importance = write_explanation(imp, sample_ids, base, run_dir, semantics_for(model))
    tick("explain")

    n_expected = sum(window_count(len(e), config.window) for e in events.values())
    report = {
        "version": __version__,
        "run": run_dir.name,
        "config": config.to_dict(runtime=False),
        "corpus_sha256": fingerprint,
        "corpus": parse_report["totals"],
        "samples": {"n_samples": len(data), "expected": n_expected,
                    "designers": len(events),
                    "short_windows": sum(1 for s in manifest if s.short),
                    "label_mean": float(np.mean(data.y)), "label_sd": float(np.std(data.y, ddof=1))
                    if len(data) > 1 else 0.0},
        "leaderboard": [[{**row.to_dict(), "rank": i + 1} for i, row in enumerate(b)] for b in boards],
        "leaderboard_mean": table,
        "chosen_model": chosen,
        # wall-clock times would break byte-identical reports, so they live beside it
        "timings_file": "timings.json",
        "importance": {"semantics": importance["semantics"], "base_value": base,
                       "n_explained": len(sample_ids), "max_local_accuracy_gap": gap,
                       "ranking": importance["ranking"],
                       "signed_correlation": importance["signed_correlation"]},
    }
    (run_dir / "report.json").write_text(_dump(report), encoding="utf-8")
    (run_dir / "timings.json").write_text(_dump(timings), encoding="utf-8")
    return RunResult(run_dir, report, timings)


def run_sweep(config: PipelineConfig, sequences: dict | None = None,
              scores: dict | None = None) -> dict:
    """Controlled sweeps: vary the step at a fixed length, then the length at a fixed step.

    Each grid point records its sample count next to the window-count formula
    and, when a split is possible, per-seed metrics of the sweep models.
    """
    corpus = Path(config.corpus)
    if sequences is None:
        sequences, _ = ingest_corpus(corpus, config.cleaning)
    if scores is None:
        scores = read_scores(corpus / "scores.csv")
    events = {d: s.events if hasattr(s, "events") else s for d, s in sequences.items()}
    specs = {s.name: s for s in config.suite()}
    by_kind = {s.kind: s for s in specs.values()}
    points = []
    for axis, length, step in config.sweep.points():
        try:
            wcfg = WindowConfig(length, step, config.window.keep_short)
        except ValueError as exc:
            points.append({"axis": axis, "length": length, "step": step, "n_samples": 0,
                           "expected_samples": 0, "feasible": False, "reason": str(exc), "runs": []})
            continue
        expected = sum(window_count(len(e), wcfg) for e in events.values())
        point = {"axis": axis, "length": length, "step": step, "expected_samples": expected,
                 "feasible": True, "reason": "", "runs": []}
        try:
            samples = window_stage({d: len(e) for d, e in events.items()}, scores, wcfg)
        except InfeasibleError as exc:
            point.update(n_samples=0, feasible=False, reason=str(exc))
            points.append(point)
            continue
        rows = feature_stage(events, samples)
        data = Dataset(np.array([r[3] for r in rows]), np.array([r[2] for r in rows]),
                       np.array([r[0] for r in rows]))
        point["n_samples"] = len(data)
        for seed in config.sweep.seeds:
            split = replace(config.split, seed=seed)
            try:
                train, test = split_indices(data, split)
                if len(train) < 2:
                    raise ValueError("fewer than two training rows")
            except ValueError as exc:
                point.update(feasible=False, reason=str(exc))
                break
            for name in config.sweep.models:
                spec = specs.get(name) or by_kind.get(name) or ModelSpec(name, name)
                model = fit_model(spec, data.X[train], data.y[train], seed=seed,
                                  workers=config.workers)
                tr = evaluate(data.y[train], model.predict(data.X[train]))
                te = evaluate(data.y[test], model.predict(data.X[test]))
                point["runs"].append({"model": name, "seed": seed, "train_rmse": tr.rmse,
                                      "test_rmse": te.rmse, "train_r2": tr.r2, "test_r2": te.r2})
        if not point["feasible"]:
            point["runs"] = []
        points.append(point)
    return {"config": config.to_dict(runtime=False), "points": points}


def sweep_means(result: dict, model: str) -> list[dict]:
    """Seed-averaged test R^2 per grid point for one model."""
    out = []
    for p in result["points"]:
        vals = [r["test_r2"] for r in p["runs"] if r["model"] == model and r["test_r2"] is not None]
        out.append({"axis": p["axis"], "length": p["length"], "step": p["step"],
                    "n_samples": p["n_samples"], "feasible": p["feasible"],
                    "mean_test_r2": float(np.mean(vals)) if vals else None})
    return out


def write_sweep(result: dict, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.json").write_text(_dump(result), encoding="utf-8")
    with open(out / "sweep.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for p in result["points"]:
            base = (p["axis"], p["length"], p["step"], p["n_samples"], p["expected_samples"],
                    int(p["feasible"]))
            if not p["runs"]:
                w.writerow(base + ("", "", "", "", "", ""))
            for r in p["runs"]:
                w.writerow(base + (r["model"], r["seed"], _num(r["train_rmse"]), _num(r["test_rmse"]),
                                   _num(r["train_r2"]), _num(r["test_r2"])))


def score_sheet(assessment_path, out_path) -> list[tuple[int, str]]:
    """Score every valid assessment row; returns the (line, error) list for the rest."""
    with open(assessment_path, encoding="utf-8") as fh:
        text = fh.read()
    rows, errors = read_assessments(io.StringIO(text)) if text.strip() else ([], [])
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        write_sheet([(d, score(a)) for d, a in rows], fh)
    return errors
