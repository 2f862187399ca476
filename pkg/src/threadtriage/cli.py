"""Command-line pipeline: synth -> ingest -> extract -> lda-fit -> featurize
-> cv -> (ablate | strategies | proc) -> report.

Every subcommand reads declared inputs and writes its outputs atomically into
the --out directory; nothing mutates its inputs. Artifacts embed content
fingerprints of the resources they were built from, and downstream stages
refuse mismatched inputs. Exit codes: 0 success, 1 usage/config error,
2 data error.
"""

import argparse
import csv
import io
import logging
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from types import SimpleNamespace

from . import evalx, features, learn, plots, synth, textproc, threadex, topics
from .config import PipelineConfig, load_config, load_stopwords
from .corpus import Corpus, load_corpus_file
from .errors import DataError, UsageError
from .fileio import atomic_write_json, atomic_write_text, read_json, sha256_file
from .threadex import FlaggedThread

log = logging.getLogger("threadtriage")

ABLATION_SUBSETS = (
    ("liwc",),
    ("liwc", "sentiment"),
    ("liwc", "sentiment", "lda"),
    ("liwc", "sentiment", "lda", "tokens"),
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class Workspace:
    cfg: PipelineConfig
    out: Path
    strict: bool = False

    @property
    def corpus_path(self) -> Path:
        return self.cfg.corpus_path or self.out / "posts.jsonl"

    @property
    def model_dir(self) -> Path:
        return self.cfg.model_dir or self.out

    @property
    def report_dir(self) -> Path:
        return self.cfg.report_dir or self.out

    @property
    def lda_model_path(self) -> Path:
        return self.model_dir / "lda_model.json"

    @property
    def features_dir(self) -> Path:
        return self.out / "features"

    def require(self, path: Path, produced_by: str) -> Path:
        if not path.exists():
            raise DataError(f"missing input {path}; run `{produced_by}` first")
        return path


def _check_fingerprints(expected: dict, actual: dict, context: str) -> None:
    for key in sorted(set(expected) & set(actual)):
        if expected[key] != actual[key]:
            raise DataError(
                f"{context}: fingerprint mismatch for {key!r}; regenerate the stale stage"
            )


def _load_corpus(ws: Workspace) -> Corpus:
    ws.require(ws.corpus_path, "synth (or supply [paths] corpus)")
    return load_corpus_file(ws.corpus_path, strict=ws.strict)


def _extract(ws: Workspace, corpus: Corpus) -> list[FlaggedThread]:
    threads = threadex.extract_flagged(corpus, ws.cfg.labeling)
    if not threads:
        raise DataError("no threads survived extraction")
    return threads


def _resource_fingerprints(ws: Workspace) -> dict:
    return {
        "corpus": sha256_file(ws.corpus_path),
        "category_lexicon": sha256_file(ws.cfg.category_lexicon),
        "sentiment_lexicon": sha256_file(ws.cfg.sentiment_lexicon),
        "stopwords": sha256_file(ws.cfg.stopwords_path),
    }


def _load_resources(ws: Workspace, corpus: Corpus) -> features.FeatureResources:
    cfg = ws.cfg
    ws.require(ws.lda_model_path, "lda-fit")
    model = topics.load_model(ws.lda_model_path)
    stopwords = load_stopwords(cfg.stopwords_path)
    vocab = features.build_tfidf_vocab(
        (textproc.tokenize(p.body) for p in corpus.iter_posts()),
        min_df=cfg.min_df,
        stopwords=stopwords,
    )
    return features.FeatureResources(
        category_lexicon=textproc.load_dic(cfg.category_lexicon),
        sentiment_lexicon=textproc.load_sentiment_csv(cfg.sentiment_lexicon),
        lda_model=model,
        tfidf_vocab=vocab,
        lda_infer_sweeps=cfg.lda_infer_sweeps,
        lda_infer_seed=cfg.seed,
    )


def _cv_config(ws: Workspace) -> evalx.CvConfig:
    cfg = ws.cfg
    spec = learn.ModelSpec(
        kind=cfg.model_kind, reg_lambda=cfg.reg_lambda, epochs=cfg.svm_epochs
    )
    return evalx.CvConfig(spec=spec, k=cfg.folds, seed=cfg.seed)


def _harness_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["label", "pr", "re", "f1"])
    for r in rows:
        writer.writerow(
            [r.label, f"{100 * r.precision:.2f}", f"{100 * r.recall:.2f}", f"{100 * r.f1:.2f}"]
        )
    return buf.getvalue()


# ---------------------------------------------------------------- subcommands


def cmd_synth(ws: Workspace, args) -> int:
    jsonl, truth = synth.generate_corpus(ws.cfg.synth, tau=ws.cfg.labeling.tau)
    atomic_write_text(ws.out / "posts.jsonl", jsonl)
    atomic_write_text(ws.out / "ground_truth.csv", truth.posts_csv())
    atomic_write_text(ws.out / "thread_truth.csv", truth.threads_csv())
    log.info("synth: wrote %d threads to %s", ws.cfg.synth.n_threads, ws.out / "posts.jsonl")
    print(f"synth: {ws.cfg.synth.n_threads} threads -> {ws.out / 'posts.jsonl'}")
    return 0


def cmd_ingest(ws: Workspace, args) -> int:
    corpus = _load_corpus(ws)
    payload = {
        "n_posts": corpus.n_posts,
        "n_threads": corpus.n_threads,
        "fingerprints": {"corpus": sha256_file(ws.corpus_path)},
    }
    atomic_write_json(ws.out / "ingest.json", payload)
    print(f"ingest: {corpus.n_posts} posts in {corpus.n_threads} threads")
    return 0


def cmd_extract(ws: Workspace, args) -> int:
    corpus = _load_corpus(ws)
    threads = _extract(ws, corpus)
    stats = threadex.describe_threads(threads)
    rows, rho, p = threadex.engagement_green_rate(threads)
    payload = {
        "labeling": {"tau": ws.cfg.labeling.tau, "prefer_manual": ws.cfg.labeling.prefer_manual},
        "fingerprints": {"corpus": sha256_file(ws.corpus_path)},
        "threads": [
            {
                "thread_id": t.thread.thread_id,
                "target_user_id": t.target_user_id,
                "prediction_index": t.prediction_index,
                "y": t.y,
                "y_q": t.y_q,
            }
            for t in threads
        ],
    }
    atomic_write_json(ws.out / "extracted.json", payload)
    stats_payload = {
        "target_posts": stats.target_posts.to_dict(),
        "replies": stats.replies.to_dict(),
        "participants": stats.participants.to_dict(),
        "histogram": {str(k): v for k, v in sorted(stats.target_posts.histogram.items())},
        "rho": rho,
        "p": p,
    }
    atomic_write_json(ws.out / "stats.json", stats_payload)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["level", "threads", "green_fraction"])
    for level, count, frac in rows:
        writer.writerow([level, count, repr(frac)])
    atomic_write_text(ws.out / "engagement.csv", buf.getvalue())
    print(f"extract: kept {len(threads)} of {corpus.n_threads} threads")
    return 0


def cmd_lda_fit(ws: Workspace, args) -> int:
    cfg = ws.cfg
    corpus = _load_corpus(ws)
    stopwords = load_stopwords(cfg.stopwords_path)
    docs = []
    for post in corpus.iter_posts():
        if post.board in cfg.exclude_boards:
            continue
        tokens = [
            t
            for t in textproc.tokenize(post.body)
            if t not in stopwords and not textproc.is_numeric_token(t)
        ]
        docs.append(tokens)
    started = time.perf_counter()
    model = topics.fit_lda(
        docs,
        n_topics=cfg.lda_topics,
        alpha=cfg.lda_alpha,
        beta=cfg.lda_beta,
        sweeps=cfg.lda_sweeps,
        seed=cfg.seed,
    )
    topics.save_model(model, ws.lda_model_path)
    print(
        f"lda-fit: {model.n_topics} topics over {len(model.vocab)} terms "
        f"({len(docs)} docs, {time.perf_counter() - started:.1f}s)"
    )
    return 0


def cmd_featurize(ws: Workspace, args) -> int:
    cfg = ws.cfg
    corpus = _load_corpus(ws)
    threads = _extract(ws, corpus)
    resources = _load_resources(ws, corpus)
    fingerprints = _resource_fingerprints(ws)
    fingerprints["lda_model"] = sha256_file(ws.lda_model_path)
    fm = features.assemble_dataset(
        threads,
        resources,
        cfg.strategy,
        include_shared=cfg.include_shared,
        fingerprints=fingerprints,
    )
    features.save_feature_matrix(fm, ws.features_dir)
    print(
        f"featurize: {fm.n_rows} threads x {fm.X.shape[1]} features "
        f"({cfg.strategy.value}) -> {ws.features_dir}"
    )
    return 0


def _metrics_dict(report: learn.MetricsReport) -> dict:
    return report.to_dict()


def _run_cv_with_majority(ws: Workspace, fm: features.FeatureMatrix):
    cfg = ws.cfg
    cv_cfg = _cv_config(ws)
    main_folds = []
    majority_folds = []
    main_result = None
    majority_result = None
    for rep in range(cfg.repeats):
        seed = cfg.seed + rep
        result = learn.kfold_cv(
            fm.X, fm.y, cv_cfg.spec, k=cfg.folds, seed=seed, y_q=fm.y_q
        )
        baseline = learn.kfold_cv(
            fm.X, fm.y, learn.ModelSpec(kind="majority"), k=cfg.folds, seed=seed, y_q=fm.y_q
        )
        main_folds.extend(result.macro_f1_per_fold)
        majority_folds.extend(baseline.macro_f1_per_fold)
        if rep == 0:
            main_result, majority_result = result, baseline
    t, p, p_adj = learn.compare_models(main_folds, majority_folds, m_comparisons=1)
    return main_result, majority_result, {"t": t, "p": p, "p_bonferroni": p_adj}


def cmd_cv(ws: Workspace, args) -> int:
    fm = features.load_feature_matrix(ws.require(ws.features_dir, "featurize"))
    ws.require(ws.features_dir / "header.json", "featurize")
    result, baseline, significance = _run_cv_with_majority(ws, fm)
    payload = {
        "model": ws.cfg.model_kind,
        "k": ws.cfg.folds,
        "seed": ws.cfg.seed,
        "repeats": ws.cfg.repeats,
        "strategy": fm.strategy,
        "fold_metrics": [_metrics_dict(m) for m in result.fold_metrics],
        "mean": _metrics_dict(result.mean_metrics),
        "majority_mean": _metrics_dict(baseline.mean_metrics),
        "majority_fold_f1": baseline.macro_f1_per_fold,
        "significance_vs_majority": significance,
        "oof": {
            "thread_ids": fm.thread_ids,
            "y": fm.y,
            "y_q": [float(v) for v in fm.y_q],
            "scores": [float(v) for v in result.oof_scores],
            "pred": result.oof_pred,
            "fold": [int(v) for v in result.fold_of],
        },
        "fingerprints": {
            **fm.fingerprints,
            "features": sha256_file(ws.features_dir / "header.json"),
        },
    }
    atomic_write_json(ws.out / "cv.json", payload)
    m = result.mean_metrics
    print(
        f"cv: {ws.cfg.model_kind} macro P/R/F1 = "
        f"{100 * m.macro_precision:.2f}/{100 * m.macro_recall:.2f}/{100 * m.macro_f1:.2f} "
        f"(majority F1 {100 * baseline.mean_metrics.macro_f1:.2f})"
    )
    return 0


def cmd_ablate(ws: Workspace, args) -> int:
    fm = features.load_feature_matrix(ws.require(ws.features_dir, "featurize"))
    rows = evalx.ablation_run(fm, ABLATION_SUBSETS, _cv_config(ws))
    atomic_write_text(ws.out / "ablation.csv", _harness_csv(rows))
    atomic_write_json(ws.out / "ablation.json", [r.to_dict() for r in rows])
    for r in rows:
        print(f"ablate: {r.label}: F1 {100 * r.f1:.2f}")
    return 0


def cmd_strategies(ws: Workspace, args) -> int:
    corpus = _load_corpus(ws)
    threads = _extract(ws, corpus)
    resources = _load_resources(ws, corpus)
    rows, _ = evalx.strategy_run(
        threads, resources, _cv_config(ws), include_shared=ws.cfg.include_shared
    )
    atomic_write_text(ws.out / "strategies.csv", _harness_csv(rows))
    atomic_write_json(ws.out / "strategies.json", [r.to_dict() for r in rows])
    for r in rows:
        print(f"strategies: {r.label}: F1 {100 * r.f1:.2f}")
    return 0


def _proc_from_cv(cv_payload: dict):
    oof = cv_payload["oof"]
    return evalx.proc_analyze(oof["scores"], oof["y_q"])


def _roc_csv(curve: evalx.ProcCurve) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["threshold", "fpr", "tpr"])
    for threshold, (fpr, tpr) in zip(curve.thresholds, curve.points):
        writer.writerow([repr(threshold), repr(fpr), repr(tpr)])
    return buf.getvalue()


def cmd_proc(ws: Workspace, args) -> int:
    cv_payload = read_json(ws.require(ws.out / "cv.json", "cv"))
    curve, optimal = _proc_from_cv(cv_payload)
    atomic_write_text(ws.out / "roc.csv", _roc_csv(curve))
    atomic_write_json(
        ws.out / "roc_summary.json",
        {"auc": curve.auc, "optimal_auc": optimal.auc,
         "auc_ratio": curve.auc / optimal.auc if optimal.auc else None},
    )
    print(f"proc: AUC {curve.auc:.4f} (optimal {optimal.auc:.4f})")
    return 0


def cmd_report(ws: Workspace, args) -> int:
    cfg = ws.cfg
    corpus = _load_corpus(ws)
    corpus_hash = sha256_file(ws.corpus_path)
    threads = _extract(ws, corpus)

    fm = features.load_feature_matrix(ws.require(ws.features_dir, "featurize"))
    _check_fingerprints(fm.fingerprints, {"corpus": corpus_hash}, "features vs corpus")
    cv_payload = read_json(ws.require(ws.out / "cv.json", "cv"))
    _check_fingerprints(
        cv_payload.get("fingerprints", {}),
        {"features": sha256_file(ws.features_dir / "header.json"), "corpus": corpus_hash},
        "cv vs features",
    )
    if cv_payload["oof"]["thread_ids"] != fm.thread_ids or fm.thread_ids != [
        t.thread.thread_id for t in threads
    ]:
        raise DataError("thread alignment mismatch between corpus, features, and cv")

    stats = threadex.describe_threads(threads)
    engagement_rows, rho, p = threadex.engagement_green_rate(threads)

    curve, optimal = _proc_from_cv(cv_payload)

    resources = _load_resources(ws, corpus)
    ablation_rows = evalx.ablation_run(fm, ABLATION_SUBSETS, _cv_config(ws))
    strategy_rows, _ = evalx.strategy_run(
        threads, resources, _cv_config(ws), include_shared=cfg.include_shared
    )
    best = max(strategy_rows, key=lambda r: r.f1)
    strategy_significance = {}
    for row in strategy_rows:
        if row.label == best.label:
            continue
        t, p_raw, p_adj = learn.compare_models(
            list(best.fold_f1), list(row.fold_f1), m_comparisons=len(strategy_rows) - 1
        )
        strategy_significance[row.label] = {"t": t, "p": p_raw, "p_bonferroni": p_adj}

    # Full-data model for the feature analysis (standardized on all rows).
    scaler = learn.Standardizer.fit(fm.X)
    full_model = learn.train_model(
        _cv_config(ws).spec, scaler.transform(fm.X), learn.labels_to_signs(fm.y), seed=cfg.seed
    )
    importance = evalx.top_features(full_model, fm.group_map, fm.feature_names, k=3)
    model_payload = {
        "kind": full_model.kind,
        "weights": [float(w) for w in full_model.weights],
        "bias": full_model.bias,
        "lambda": full_model.reg_lambda,
        "seed": full_model.seed,
        "standardizer": {
            "mean": [float(v) for v in scaler.mean],
            "std": [float(v) for v in scaler.std],
        },
        "group_map_fingerprint": sha256_file(ws.features_dir / "header.json"),
    }
    atomic_write_json(ws.model_dir / "model.json", model_payload)

    diag_view = SimpleNamespace(
        oof_pred=list(cv_payload["oof"]["pred"]),
        y_true=list(cv_payload["oof"]["y"]),
    )
    diagnostics = evalx.thread_diagnostics(diag_view, threads)

    report = {
        "version": 1,
        "generated_at": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
        "seed": cfg.seed,
        "config": cfg.echo(),
        "fingerprints": {
            **fm.fingerprints,
            "features": sha256_file(ws.features_dir / "header.json"),
        },
        "thread_stats": {
            "n_extracted": len(threads),
            "target_posts": stats.target_posts.to_dict(),
            "replies": stats.replies.to_dict(),
            "participants": stats.participants.to_dict(),
            "histogram": {str(k): v for k, v in sorted(stats.target_posts.histogram.items())},
            "rho": rho,
            "p": p,
        },
        "cv": {
            "model": cv_payload["model"],
            "k": cv_payload["k"],
            "mean": cv_payload["mean"],
            "fold_metrics": cv_payload["fold_metrics"],
            "majority_mean": cv_payload["majority_mean"],
            "significance_vs_majority": cv_payload["significance_vs_majority"],
        },
        "proc": {
            "auc": curve.auc,
            "optimal_auc": optimal.auc,
            "auc_ratio": curve.auc / optimal.auc if optimal.auc else None,
        },
        "ablation": [r.to_dict() for r in ablation_rows],
        "strategies": {
            "rows": [r.to_dict() for r in strategy_rows],
            "best": best.label,
            "significance_vs_best": strategy_significance,
        },
        "importance": {
            name: {
                "top_positive": [[n, w] for n, w in gi.top_positive],
                "top_negative": [[n, w] for n, w in gi.top_negative],
            }
            for name, gi in sorted(importance.groups.items())
        },
        "diagnostics": diagnostics.to_dict(),
    }

    report_dir = ws.report_dir
    atomic_write_json(report_dir / "report.json", report)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["level", "threads", "green_fraction"])
    for level, count, frac in engagement_rows:
        writer.writerow([level, count, repr(frac)])
    atomic_write_text(report_dir / "engagement.csv", buf.getvalue())
    atomic_write_text(report_dir / "roc.csv", _roc_csv(curve))
    atomic_write_text(report_dir / "ablation.csv", _harness_csv(ablation_rows))
    atomic_write_text(report_dir / "strategies.csv", _harness_csv(strategy_rows))

    figures = report_dir / "figures"
    figures.mkdir(parents=True, exist_ok=True)
    plots.save_thread_distribution(stats.target_posts.histogram, figures / "thread_distribution.png")
    plots.save_engagement(engagement_rows, rho, figures / "engagement.png")
    plots.save_roc({cv_payload["model"]: curve, "optimal": optimal}, figures / "roc.png")
    plots.save_harness_table(ablation_rows, figures / "ablation.png", "Feature-group ablation")
    plots.save_harness_table(strategy_rows, figures / "strategies.png", "Assembly strategies")

    print(f"report: wrote {report_dir / 'report.json'} and figures/")
    return 0


COMMANDS = {
    "synth": (cmd_synth, "generate a synthetic corpus with ground truth"),
    "ingest": (cmd_ingest, "validate the corpus and report counts"),
    "extract": (cmd_extract, "select flagged-initiated threads and write stats"),
    "lda-fit": (cmd_lda_fit, "fit the topic model on non-excluded boards"),
    "featurize": (cmd_featurize, "assemble the feature matrix for the configured strategy"),
    "cv": (cmd_cv, "run cross-validation and store out-of-fold scores"),
    "ablate": (cmd_ablate, "compare feature-group subsets on identical folds"),
    "strategies": (cmd_strategies, "compare assembly strategies on identical folds"),
    "proc": (cmd_proc, "ROC analysis over probabilistic labels"),
    "report": (cmd_report, "bundle stats, CV, ablation, strategies, and figures"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI config file")
    common.add_argument("--seed", type=int, help="override every stage seed")
    common.add_argument("--out", type=Path, default=Path("out"), help="artifact directory")
    common.add_argument("--strict", action="store_true",
                        help="reject unknown fields in input records")
    parser = _Parser(
        prog="threadtriage",
        description="Thread-level triage pipeline for at-risk forum users.",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    for name, (fn, help_text) in COMMANDS.items():
        cmd = sub.add_parser(name, help=help_text, parents=[common])
        cmd.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("THREADTRIAGE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            raise UsageError("missing subcommand")
        cfg = load_config(args.config, seed_override=args.seed)
        ws = Workspace(cfg=cfg, out=args.out, strict=args.strict)
        ws.out.mkdir(parents=True, exist_ok=True)
        return args.func(ws, args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("run `threadtriage --help` for usage", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
