"""Command line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 infeasible configuration (for example a window longer than every sequence).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .features import write_matrix
from .learn import load_model, save_model
from .learn.data import split_indices
from .learn.metrics import evaluate
from .learn.suite import fit_model
from .pipeline import (
    DataError, InfeasibleError, PipelineConfig, StageError, _dump,
    corpus_fingerprint, explain_stage, feature_stage, ingest_corpus, load_dataset, read_scores,
    read_sessions, run_hash, run_pipeline, run_sweep, score_sheet, semantics_for, sweep_means,
    window_stage, write_explanation, write_sessions, write_sweep,
)
from .windows import read_manifest, write_manifest

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INFEASIBLE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for data errors here
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _names(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


# flag -> (config section or None, field)
_OVERRIDES = {
    "corpus": (None, "corpus"), "workspace": (None, "workspace"), "workers": (None, "workers"),
    "models": (None, "models"), "repeats": (None, "repeats"),
    "min_journal_bytes": ("cleaning", "min_journal_bytes"), "min_rows": ("cleaning", "min_rows"),
    "max_coverage_deficit": ("cleaning", "max_tracker_coverage_deficit"),
    "length": ("window", "length"), "step": ("window", "step"), "keep_short": ("window", "keep_short"),
    "test_fraction": ("split", "test_fraction"), "seed": ("split", "seed"), "grouped": ("split", "grouped"),
    "explain_model": ("explain", "model"), "explain_samples": ("explain", "max_samples"),
    "background_cap": ("explain", "background_cap"), "permutations": ("explain", "n_permutations"),
    "sweep_length": ("sweep", "fixed_length"), "sweep_steps": ("sweep", "steps"),
    "sweep_step": ("sweep", "fixed_step"), "sweep_lengths": ("sweep", "lengths"),
    "sweep_models": ("sweep", "models"), "sweep_seeds": ("sweep", "seeds"),
}


def build_config(args) -> PipelineConfig:
    """Config file first, then any flag given on the command line."""
    base = {}
    if getattr(args, "config", None):
        try:
            base = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(base, dict):
            raise UsageError("config file must hold a JSON object")
    top, nested = {}, {}
    for flag, (section, name) in _OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is None:
            continue
        if section is None:
            top[name] = value
        else:
            nested.setdefault(section, {})[name] = value
    merged = {**base, **top}
    for section, values in nested.items():
        merged[section] = {**base.get(section, {}), **values}
    try:
        return PipelineConfig.from_dict(merged)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid configuration: {exc}") from None


def _add_config(p, *groups):
    p.add_argument("--config", help="JSON configuration file; flags override it")
    if "corpus" in groups:
        p.add_argument("--corpus", help="corpus directory (one folder per designer)")
    if "cleaning" in groups:
        p.add_argument("--min-journal-bytes", type=int)
        p.add_argument("--min-rows", type=int)
        p.add_argument("--max-coverage-deficit", type=float)
    if "window" in groups:
        p.add_argument("--length", type=int, help="window length N in events")
        p.add_argument("--step", type=int, help="window step s in events")
        p.add_argument("--no-keep-short", dest="keep_short", action="store_const", const=False,
                       help="drop designers shorter than one window")
    if "split" in groups:
        p.add_argument("--test-fraction", type=float)
        p.add_argument("--seed", type=int, help="split seed (models reuse it)")
        p.add_argument("--grouped", action="store_const", const=True,
                       help="keep each designer's windows on one side of the split")
    if "learn" in groups:
        p.add_argument("--models", type=_names, help="comma-separated suite subset")
        p.add_argument("--repeats", type=int, help="number of consecutive split seeds")
    if "explain" in groups:
        p.add_argument("--explain-model", help='model to explain, or "best"')
        p.add_argument("--explain-samples", type=int)
        p.add_argument("--background-cap", type=int)
        p.add_argument("--permutations", type=int)
    if "sweep" in groups:
        p.add_argument("--sweep-length", type=int, help="fixed N while the step varies")
        p.add_argument("--sweep-steps", type=_ints)
        p.add_argument("--sweep-step", type=int, help="fixed s while the length varies")
        p.add_argument("--sweep-lengths", type=_ints)
        p.add_argument("--sweep-models", type=_names)
        p.add_argument("--sweep-seeds", type=_ints)
    p.add_argument("--workers", type=int)


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bimbehavior", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic corpus with planted links")
    p.add_argument("--out", required=True)
    p.add_argument("--designers", type=int, default=68)
    p.add_argument("--preset", choices=("full", "small"), default="full")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-sd", type=float, default=2.0)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("parse", help="parse and clean every session, write a report")
    _add_config(p, "corpus", "cleaning")
    p.add_argument("--out", required=True, help="report file (JSON)")

    p = sub.add_parser("integrate", help="merge journal and tracker streams per designer")
    _add_config(p, "corpus", "cleaning")
    p.add_argument("--out", required=True, help="directory for per-designer session files")

    p = sub.add_parser("window", help="cut integrated sequences into labelled windows")
    _add_config(p, "window")
    p.add_argument("--sessions", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("features", help="compute the feature matrix for a window manifest")
    _add_config(p, "window")
    p.add_argument("--sessions", required=True)
    p.add_argument("--windows", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("score", help="turn an assessment file into a score sheet")
    p.add_argument("--assessments", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="fit one model of the suite on the training split")
    _add_config(p, "split", "learn")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True, help="suite member name, e.g. ExtraTrees")
    p.add_argument("--out", required=True, help="model file (JSON)")

    p = sub.add_parser("evaluate", help="score a saved model on both sides of the split")
    _add_config(p, "split")
    p.add_argument("--features", required=True)
    p.add_argument("--model-file", required=True)
    p.add_argument("--out", help="metrics file (JSON); printed when omitted")

    p = sub.add_parser("explain", help="attribute a saved model's test predictions")
    _add_config(p, "split", "explain")
    p.add_argument("--features", required=True)
    p.add_argument("--model-file", required=True)
    p.add_argument("--out", required=True, help="directory for importance.json and beeswarm.csv")

    p = sub.add_parser("sweep", help="vary window length and step, record test R^2")
    _add_config(p, "corpus", "cleaning", "split", "sweep")
    p.add_argument("--no-keep-short", dest="keep_short", action="store_const", const=False)
    p.add_argument("--workspace")

    p = sub.add_parser("run", help="the whole pipeline into a content-addressed run directory")
    _add_config(p, "corpus", "cleaning", "window", "split", "learn", "explain")
    p.add_argument("--workspace")
    return parser


# commands

def cmd_synth(args) -> int:
    from .synth import GenConfig, gen_corpus
    try:
        cfg = GenConfig(n_designers=args.designers, preset=args.preset, noise_sd=args.noise_sd)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    truths = gen_corpus(cfg, args.seed, args.out, workers=args.workers)
    print(f"wrote {len(truths)} designers to {args.out}")
    return EXIT_OK


def cmd_parse(args) -> int:
    cfg = build_config(args)
    _, report = ingest_corpus(cfg.corpus, cfg.cleaning)
    Path(args.out).write_text(_dump(report), encoding="utf-8")
    t = report["totals"]
    print(f"{t['accepted']}/{t['sessions']} sessions accepted, {t['designers_kept']} designers kept")
    return EXIT_OK


def cmd_integrate(args) -> int:
    cfg = build_config(args)
    sequences, report = ingest_corpus(cfg.corpus, cfg.cleaning)
    write_sessions(sequences, args.out)
    (Path(args.out) / "parse.json").write_text(_dump(report), encoding="utf-8")
    print(f"wrote {len(sequences)} designer sequences to {args.out}")
    return EXIT_OK


def cmd_window(args) -> int:
    cfg = build_config(args)
    events = read_sessions(args.sessions)
    samples = window_stage({d: len(e) for d, e in events.items()}, read_scores(args.scores),
                           cfg.window, args.scores)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        write_manifest(samples, fh)
    print(f"{len(samples)} windows")
    return EXIT_OK


def cmd_features(args) -> int:
    cfg = build_config(args)
    events = read_sessions(args.sessions)
    try:
        with open(args.windows, encoding="utf-8") as fh:
            manifest = read_manifest(fh, cfg.window.length)
    except (OSError, ValueError) as exc:
        raise DataError("features", args.windows, str(exc)) from None
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        write_matrix(feature_stage(events, manifest), fh)
    print(f"{len(manifest)} feature rows")
    return EXIT_OK


def cmd_score(args) -> int:
    try:
        errors = score_sheet(args.assessments, args.out)
    except (OSError, ValueError) as exc:
        raise DataError("score", args.assessments, str(exc)) from None
    for line, message in errors:
        print(f"{args.assessments}:{line}: {message}", file=sys.stderr)
    return EXIT_DATA if errors else EXIT_OK


def _split(data, cfg, stage, path):
    try:
        return split_indices(data, cfg.split)
    except ValueError as exc:
        raise InfeasibleError(stage, path, str(exc)) from None


def cmd_train(args) -> int:
    cfg = build_config(args)
    data, _, _ = load_dataset(args.features)
    specs = {s.name: s for s in cfg.suite(data.X.shape[1])}
    if args.model not in specs:
        raise UsageError(f"unknown model {args.model!r}; choose from {sorted(specs)}")
    train, _ = _split(data, cfg, "train", args.features)
    model = fit_model(specs[args.model], data.X[train], data.y[train], seed=cfg.split.seed,
                      workers=cfg.workers)
    save_model(model, args.out)
    print(f"saved {args.model} to {args.out}")
    return EXIT_OK


def _load_model(path):
    try:
        return load_model(path)
    except (OSError, ValueError, KeyError) as exc:
        raise DataError("evaluate", path, str(exc)) from None


def cmd_evaluate(args) -> int:
    cfg = build_config(args)
    data, _, _ = load_dataset(args.features)
    model = _load_model(args.model_file)
    train, test = _split(data, cfg, "evaluate", args.features)
    out = {}
    for side, rows in (("train", train), ("test", test)):
        rep = evaluate(data.y[rows], model.predict(data.X[rows]))
        out[side] = {"n": int(len(rows)), "rmse": rep.rmse, "r2": rep.r2}
    text = _dump(out)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    return EXIT_OK


def cmd_explain(args) -> int:
    cfg = build_config(args)
    data, ids, starts = load_dataset(args.features)
    model = _load_model(args.model_file)
    imp, sample_ids, base, gap = explain_stage(model, data, ids, starts, cfg.split, cfg.explain,
                                               args.features)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_explanation(imp, sample_ids, base, out, semantics_for(model))
    print("top features: " + ", ".join(name for name, _ in imp.ranked()[:5]))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = build_config(args)
    result = run_sweep(cfg)
    out = Path(cfg.workspace) / f"sweep-{run_hash(cfg, corpus_fingerprint(cfg.corpus), 'sweep')}"
    write_sweep(result, out)
    for model in cfg.sweep.models:
        for row in sweep_means(result, model):
            r2 = "infeasible" if row["mean_test_r2"] is None else f"{row['mean_test_r2']:.3f}"
            print(f"{model:12s} N={row['length']:>6d} s={row['step']:>6d} "
                  f"samples={row['n_samples']:>5d} test_r2={r2}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_run(args) -> int:
    result = run_pipeline(build_config(args))
    rep = result.report
    print(f"run directory: {result.run_dir}")
    print(f"samples: {rep['samples']['n_samples']}")
    for row in rep["leaderboard_mean"]:
        r2 = "failed" if row["mean_test_r2"] is None else f"{row['mean_test_r2']:.3f}"
        print(f"  {row['rank']}. {row['name']:12s} mean test R^2 {r2}")
    top = ", ".join(r["feature"] for r in rep["importance"]["ranking"][:5])
    print(f"explained {rep['chosen_model']}; top features: {top}")
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "parse": cmd_parse, "integrate": cmd_integrate,
            "window": cmd_window, "features": cmd_features, "score": cmd_score,
            "train": cmd_train, "evaluate": cmd_evaluate, "explain": cmd_explain,
            "sweep": cmd_sweep, "run": cmd_run}


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
