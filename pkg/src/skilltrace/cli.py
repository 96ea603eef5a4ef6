"""skilltrace command line: ingest, train, vet, squat and report.

Every flag can also be set through an environment variable named
``SKILLTRACE_<FLAG>`` (for example ``SKILLTRACE_SEED``); explicit flags win.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from . import analytics, corpus, phonetics, traceability
from .classifier import TrainingConfig, cross_validate, load_ensemble, save_ensemble, train_ensemble
from .classifier.linear import DEFAULT_ALPHA, DEFAULT_EPOCHS, DEFAULT_SEED
from .errors import ContractViolation, SkillTraceError
from .synthetic import synthetic_corpus
from .textprep import FilterList

log = logging.getLogger("skilltrace")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_IO = 0, 1, 2, 3

VERDICT_COLUMNS = ["skill_id", "market", "developer", "subcategory", "requested", "verdict",
                   "reason", "rules"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    subcommand: str
    inputs: list[Path] = field(default_factory=list)
    model: Path | None = None
    seed: int = DEFAULT_SEED
    out: Path = Path("skilltrace-out")
    filters: Path | None = None
    providers: Path | None = None
    thresholds: tuple[float, ...] = phonetics.DEFAULT_THRESHOLDS
    alpha: float = DEFAULT_ALPHA
    epochs: int = DEFAULT_EPOCHS


def _env(name, default):
    return os.environ.get(f"SKILLTRACE_{name}", default)


def _thresholds(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(x) for x in str(text).split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad threshold list {text!r}") from None
    if not values or any(not 0 <= v <= 1 for v in values):
        raise argparse.ArgumentTypeError("thresholds must be comma-separated values in [0, 1]")
    return values


def _common_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("shared options (env SKILLTRACE_<NAME> overrides the default)")
    g.add_argument("--seed", type=int, default=None, help=f"random seed (default {DEFAULT_SEED})")
    g.add_argument("--alpha", type=float, default=None,
                   help=f"SGD regularization strength (default {DEFAULT_ALPHA})")
    g.add_argument("--epochs", type=int, default=None, help=f"SGD epochs (default {DEFAULT_EPOCHS})")
    g.add_argument("--filters", type=Path, default=None,
                   help="contact/negation phrase file (default: bundled list)")
    g.add_argument("--providers", type=Path, default=None,
                   help="OAuth provider list (default: bundled list)")
    g.add_argument("--thresholds", type=_thresholds, default=None,
                   help="phonetic distance thresholds (default 0.1,0.2)")
    g.add_argument("--out", type=Path, default=None, help="output directory (default skilltrace-out)")
    g.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = _Parser(prog="skilltrace", description=__doc__.splitlines()[0],
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", parents=[common], help="load and deduplicate snapshot files")
    p.add_argument("snapshots", nargs="+", type=Path, help="JSONL snapshot files")

    p = sub.add_parser("train", parents=[common], help="cross-validate and train the classifier")
    p.add_argument("pbsd", nargs="*", type=Path, help="labeled sentence files (JSONL)")
    p.add_argument("--synthetic", type=int, metavar="N", default=None,
                   help="train on N template sentences per class instead of PBSD files")
    p.add_argument("--folds", type=int, default=5, help="cross-validation folds (default 5)")
    p.add_argument("--no-cv", action="store_true", help="skip cross-validation")
    p.add_argument("--workers", type=int, default=4, help="training threads (default 4)")

    p = sub.add_parser("vet", parents=[common], help="traceability verdicts for every skill")
    p.add_argument("corpus", type=Path, help="snapshot file, or a gold TBPD file with --gold")
    p.add_argument("--model", type=Path, required=True, help="model file written by train")
    p.add_argument("--gold", action="store_true",
                   help="input carries gold verdicts; also writes a confusion matrix")

    p = sub.add_parser("squat", parents=[common], help="phonetic similarity of invocation names")
    p.add_argument("corpus", type=Path, help="snapshot file")
    p.add_argument("--cmudict", type=Path, required=True, help="CMU Pronouncing Dictionary file")

    p = sub.add_parser("report", parents=[common], help="aggregate table-style reports")
    p.add_argument("--snapshot", type=Path, nargs="*", default=None,
                   help="raw snapshot files (before deduplication)")
    p.add_argument("--verdicts", type=Path, default=None, help="verdicts.csv from vet")
    p.add_argument("--gold-eval", type=Path, default=None, help="gold_eval.csv from vet --gold")
    p.add_argument("--similarity", type=Path, default=None, help="similarity.csv from squat")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = RunConfig(subcommand=args.subcommand)
    try:
        cfg.seed = args.seed if args.seed is not None else int(_env("SEED", DEFAULT_SEED))
        cfg.alpha = args.alpha if args.alpha is not None else float(_env("ALPHA", DEFAULT_ALPHA))
        cfg.epochs = args.epochs if args.epochs is not None else int(_env("EPOCHS", DEFAULT_EPOCHS))
        env_thr = _env("THRESHOLDS", None)
        cfg.thresholds = args.thresholds or (_thresholds(env_thr) if env_thr else cfg.thresholds)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        raise UsageError(f"bad environment override: {exc}") from None
    cfg.out = args.out or Path(_env("OUT", "skilltrace-out"))
    env_filters, env_providers = _env("FILTERS", None), _env("PROVIDERS", None)
    cfg.filters = args.filters or (Path(env_filters) if env_filters else None)
    cfg.providers = args.providers or (Path(env_providers) if env_providers else None)
    cfg.model = getattr(args, "model", None)
    return cfg


def _filters(cfg: RunConfig) -> FilterList:
    return FilterList.load(cfg.filters) if cfg.filters else FilterList.default()


def _providers(cfg: RunConfig) -> analytics.OAuthProviderList:
    if cfg.providers:
        return analytics.OAuthProviderList.load(cfg.providers)
    return analytics.OAuthProviderList.default()


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8")


def _read_csv(path: Path) -> list[dict]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def cmd_ingest(args, cfg: RunConfig) -> int:
    records, per_file = [], []
    for path in args.snapshots:
        issues: list = []
        recs = corpus.load_snapshot(path, issues)
        records.extend(recs)
        per_file.append((path, len(recs), len(issues)))
    unique = corpus.deduplicate(records)
    cfg.out.mkdir(parents=True, exist_ok=True)
    corpus.write_snapshot(unique, cfg.out / "corpus.jsonl")

    by_market = Counter(r.market for r in records)
    rows = [[m, by_market[m]] for m in corpus.MARKETS if by_market[m]]
    rows.append(["Total", len(records)])
    rows.append(["Unique", len(unique)])
    _write_csv(cfg.out / "ingest_report.csv", ["market", "skills"], rows)

    for path, n, bad in per_file:
        print(f"{path}: {n} records, {bad} malformed lines skipped")
    for m, n in rows:
        print(f"{m:>8} {n:>8}")
    print(f"duplicates removed: {len(records) - len(unique)}")
    return EXIT_OK


def _training_corpus(args):
    if args.synthetic is not None:
        if args.pbsd:
            raise UsageError("give PBSD files or --synthetic, not both")
        return synthetic_corpus(per_class=args.synthetic)
    if not args.pbsd:
        raise UsageError("train needs PBSD files or --synthetic N")
    return corpus.load_pbsd(*args.pbsd)


def cmd_train(args, cfg: RunConfig) -> int:
    sentences = _training_corpus(args)
    config = TrainingConfig(alpha=cfg.alpha, epochs=cfg.epochs, rng_seed=cfg.seed)
    cfg.out.mkdir(parents=True, exist_ok=True)
    counts = corpus.class_counts(sentences)
    print(f"{len(sentences)} sentences: "
          + ", ".join(f"{c}={n}" for c, n in counts.items()))

    if not args.no_cv:
        started = time.perf_counter()
        report = cross_validate(sentences, config, k=args.folds, workers=args.workers)
        rows = [[str(c), f"{f1:.4f}", f"{acc:.4f}", counts[c]] for c, f1, acc in report.rows()]
        _write_csv(cfg.out / "cv_report.csv", ["class", "f1", "accuracy", "sentences"], rows)
        for r in rows:
            print(f"{r[0]:<24} F1 {r[1]}  accuracy {r[2]}")
        print(f"cross-validation ({args.folds} folds): {time.perf_counter() - started:.1f} s")

    started = time.perf_counter()
    ensemble = train_ensemble(sentences, config, workers=args.workers)
    save_ensemble(ensemble, cfg.out / "model.json")
    print(f"model written to {cfg.out / 'model.json'} ({time.perf_counter() - started:.1f} s)")
    return EXIT_OK


def _verdict_row(rec, result: traceability.TraceabilityVerdict):
    requested = ";".join(str(r.requested) for r in result.rows)
    rules = ";".join(f"{r.requested}={r.justification}" for r in result.rows)
    return [rec.skill_id, rec.market, rec.developer, rec.subcategory or rec.category or "",
            requested, result.verdict.value, result.reason, rules]


def cmd_vet(args, cfg: RunConfig) -> int:
    ensemble = load_ensemble(args.model)
    filters = _filters(cfg)
    cfg.out.mkdir(parents=True, exist_ok=True)
    rows, timings = [], []
    if args.gold:
        gold = corpus.load_tbpd(args.corpus)
        pairs = []
        started = time.perf_counter()
        evaluation = traceability.evaluate_against_gold(gold, ensemble, filters, verdicts_out=pairs)
        elapsed = time.perf_counter() - started
        timings = [elapsed / len(gold)] * len(gold)
        for g, result in pairs:
            rows.append(_verdict_row(g.as_skill(), result) + [g.gold_verdict.value])
        _write_csv(cfg.out / "verdicts.csv", VERDICT_COLUMNS + ["gold"], rows)
        matrix = [[p.value, g.value, evaluation.count(p, g)]
                  for p in traceability.Verdict for g in corpus.GoldVerdict]
        _write_csv(cfg.out / "gold_eval.csv", ["predicted", "gold", "count"], matrix)
        print(f"gold agreement: {evaluation.correct}/{evaluation.total} "
              f"({evaluation.accuracy:.4f}); broken recall "
              f"{evaluation.recall(corpus.GoldVerdict.BROKEN):.4f}")
    else:
        records = corpus.load_snapshot(args.corpus)
        for rec in records:
            if not rec.permissions:
                continue
            started = time.perf_counter()
            result = traceability.vet_skill(rec, ensemble, filters)
            timings.append(time.perf_counter() - started)
            rows.append(_verdict_row(rec, result))
        _write_csv(cfg.out / "verdicts.csv", VERDICT_COLUMNS, rows)
    tally = Counter(r[5] for r in rows)
    print("verdicts: " + ", ".join(f"{v.value}={tally[v.value]}" for v in traceability.Verdict))
    if timings:
        print(f"vetted {len(timings)} skills in {sum(timings):.2f} s "
              f"(mean {sum(timings) / len(timings):.4f} s per skill)")
    return EXIT_OK


def cmd_squat(args, cfg: RunConfig) -> int:
    if not args.cmudict.is_file():
        raise FileNotFoundError(f"cmudict file not found: {args.cmudict}")
    dictionary = phonetics.load_cmudict(args.cmudict)
    records = corpus.load_snapshot(args.corpus)
    names = phonetics.phonetic_names(records, dictionary)
    by_id = {(n.market, n.skill_id): n for n in names}
    cfg.out.mkdir(parents=True, exist_ok=True)

    sim_rows, bucket_rows = [], []
    markets = [m for m in corpus.MARKETS if any(n.market == m for n in names)]
    for market in markets:
        transcribable = sum(1 for n in names if n.market == market and n.transcribable)
        if transcribable < 2:
            print(f"{market}: fewer than 2 transcribable names, skipped")
            continue
        started = time.perf_counter()
        hits = phonetics.nearest_neighbors(names, market)
        row = phonetics.threshold_buckets(hits, market, cfg.thresholds)
        bucket_rows.append(row)
        for h in hits:
            a, b = by_id[(market, h.a)], by_id[(market, h.b)]
            sim_rows.append([market, h.a, a.normalized, h.b, b.normalized, f"{h.distance:.6f}"])
        parts = ", ".join(f"<={t}: {row.within[t]} ({100 * row.share(t):.2f}%)"
                          for t in cfg.thresholds)
        print(f"{market}: {row.total} names, {parts} [{time.perf_counter() - started:.1f} s]")
    _write_csv(cfg.out / "similarity.csv",
               ["market", "skill_id", "name", "nearest_skill_id", "nearest_name", "distance"], sim_rows)
    header, table = analytics.phonetic_threshold_table(bucket_rows, cfg.thresholds)
    _write_csv(cfg.out / "phonetic_thresholds.csv", header, table)

    reuse = phonetics.name_reuse_report(records)
    reuse_rows = [[m, name, n] for m, names_ in reuse.per_market.items() for name, n in names_.items()]
    _write_csv(cfg.out / "name_reuse.csv", ["market", "name", "skills"], reuse_rows)
    print(f"shared invocation names: {len(reuse.cross_market)} names over "
          f"{reuse.skills_sharing_name} skills")
    return EXIT_OK


def _load_verdict_rows(path) -> list[analytics.VerdictRow]:
    out = []
    for row in _read_csv(path):
        try:
            out.append(analytics.VerdictRow(row["skill_id"], row["market"], row["developer"],
                                            row["subcategory"], traceability.Verdict(row["verdict"])))
        except (KeyError, ValueError) as exc:
            raise SkillTraceError(f"{path}: bad verdict row ({exc})") from None
    return out


def _load_gold_eval(path) -> traceability.GoldEvaluation:
    matrix = {}
    try:
        for row in _read_csv(path):
            n = int(row["count"])
            if n:
                matrix[(traceability.Verdict(row["predicted"]), corpus.GoldVerdict(row["gold"]))] = n
    except (KeyError, ValueError) as exc:
        raise SkillTraceError(f"{path}: bad gold evaluation row ({exc})") from None
    total = sum(matrix.values())
    correct = sum(n for (p, g), n in matrix.items() if p.value == g.value)
    return traceability.GoldEvaluation(matrix, total, correct)


def _load_buckets(path, thresholds) -> list[phonetics.BucketRow]:
    hits = {}
    try:
        for row in _read_csv(path):
            hits.setdefault(row["market"], []).append(
                phonetics.SimilarityHit(row["skill_id"], row["nearest_skill_id"], float(row["distance"])))
    except (KeyError, ValueError) as exc:
        raise SkillTraceError(f"{path}: bad similarity row ({exc})") from None
    return [phonetics.threshold_buckets(hits[m], m, thresholds) for m in corpus.MARKETS if m in hits]


def cmd_report(args, cfg: RunConfig) -> int:
    inputs = analytics.ReportInputs(providers=_providers(cfg), thresholds=cfg.thresholds)
    if args.snapshot:
        inputs.records = []
        for path in args.snapshot:
            inputs.records.extend(corpus.load_snapshot(path))
    if args.verdicts:
        inputs.verdicts = _load_verdict_rows(args.verdicts)
    if args.gold_eval:
        inputs.gold = _load_gold_eval(args.gold_eval)
    if args.similarity:
        inputs.phonetic_buckets = _load_buckets(args.similarity, cfg.thresholds)
    written, skipped = analytics.render_reports(inputs, cfg.out)
    for path in written:
        print(f"wrote {path}")
    for notice in skipped:
        print(f"skipped {notice}")
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "train": cmd_train,
    "vet": cmd_vet,
    "squat": cmd_squat,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.subcommand](args, cfg)
    except UsageError as exc:
        print(f"skilltrace: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SkillTraceError, ContractViolation) as exc:
        print(f"skilltrace: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"skilltrace: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
