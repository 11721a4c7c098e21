"""Command-line front door: extraction, WEAT/SEAT/CEAT/log-prob runs, reports.

Every command is driven by a JSON config file plus flag overrides (flags
win).  Reruns with identical config and inputs emit byte-identical outputs;
diagnostics go to stderr, results to files or stdout.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import archive as archive_mod
from . import ceat as ceat_mod
from . import extract as extract_mod
from . import mlm as mlm_mod
from . import stats as stats_mod
from .errors import BiaskitError, NoContextsError, ValidationError
from .lexicon import Category, Lexicon, load_lexicon

WEAT_LEVEL = 0.05
CEAT_LEVEL = ceat_mod.CEAT_SIGNIFICANCE_LEVEL

ROWS_HEADER = "category,method,bin,mode,effect_size,p_value,significant,magnitude"
CEAT_HEADER = "category,bin,mode,n,ces,se,p,significant,magnitude"

_MODE_ALIASES = {"f": "fixed", "fixed": "fixed", "r": "random", "random": "random"}
_MODE_SHORT = {"fixed": "f", "random": "r"}


@dataclass(frozen=True)
class ResultRow:
    category: str
    method: str  # weat | seat | ceat | logprob
    bin: str  # ceat only, else ""
    mode: str  # ceat only ("f"/"r"), else ""
    effect_size: float
    p_value: float
    significant: bool
    magnitude: str

    def csv_line(self) -> str:
        return ",".join([
            self.category, self.method, self.bin, self.mode,
            repr(self.effect_size), repr(self.p_value),
            "true" if self.significant else "false", self.magnitude,
        ])


def _fmt_bool(flag: bool) -> str:
    return "true" if flag else "false"


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        config = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: config is not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise ValidationError(f"{path}: config must be a JSON object")
    return config


def _opt(args: argparse.Namespace, config: dict, section: str, key: str,
         default=None, flag: str | None = None):
    """Resolution order: CLI flag, config[section][key], config[key], default."""
    flag_value = getattr(args, flag if flag is not None else key.replace("-", "_"), None)
    if flag_value is not None:
        return flag_value
    sub = config.get(section, {})
    if isinstance(sub, dict) and key in sub:
        return sub[key]
    if key in config:
        return config[key]
    return default


def _require(value, name: str):
    if value is None:
        raise ValidationError(f"missing required option {name!r} (flag or config)")
    return value


def _emit(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
    else:
        Path(out_path).write_text(text, encoding="utf-8", newline="\n")


def _select_categories(lexicon: Lexicon, selection) -> list[Category]:
    if selection is None:
        return list(lexicon.categories)
    if isinstance(selection, str):
        wanted = [c.strip() for c in selection.split(",") if c.strip()]
    else:
        wanted = list(selection)
    return [lexicon.category(cid) for cid in wanted]


def _surfaces(category: Category, role: str) -> list[str]:
    return [s.surface for s in category.role(role)]


def _write_rows(rows: list[ResultRow], out_path: str | None) -> None:
    _emit(ROWS_HEADER + "\n" + "".join(r.csv_line() + "\n" for r in rows), out_path)


# ---------------------------------------------------------------- extract


def cmd_extract(args: argparse.Namespace, config: dict) -> int:
    lexicon = load_lexicon(_require(_opt(args, config, "extract", "lexicon"), "lexicon"))
    corpus = _require(_opt(args, config, "extract", "corpus"), "corpus")
    out = _require(_opt(args, config, "extract", "out"), "out")
    threshold = int(_opt(args, config, "extract", "threshold", extract_mod.DEFAULT_MIN_CONTEXTS))
    workers = int(_opt(args, config, "extract", "workers", 1))
    supplement = _opt(args, config, "extract", "supplement")
    report_out = _opt(args, config, "extract", "report", flag="report_out")

    index = extract_mod.build_variant_index(lexicon)
    store = extract_mod.extract_corpus(corpus, index, workers=workers)
    if supplement is not None:
        extract_mod.ingest_supplement(store, supplement, index)
    store.save(out)
    rep = extract_mod.report(store, threshold=threshold)
    rep_text = json.dumps(rep.to_dict(), ensure_ascii=False, indent=2) + "\n"
    if report_out is not None:
        _emit(rep_text, report_out)
    else:
        sys.stdout.write(rep_text)
    print(
        f"extract: {rep.total_records} records, {len(rep.below_threshold)} "
        f"stimuli below threshold {threshold}, {rep.skipped_lines} lines skipped",
        file=sys.stderr,
    )
    return 0


# ---------------------------------------------------------- weat and seat


def _word_table(args, config, section: str) -> stats_mod.EmbeddingTable:
    vectors = _opt(args, config, section, "vectors")
    archive = _opt(args, config, section, "archive")
    if (vectors is None) == (archive is None):
        raise ValidationError(f"{section}: exactly one of 'vectors' or 'archive' is required")
    if vectors is not None:
        return stats_mod.load_word_vectors(vectors)
    records, matrix = archive_mod.read_archive(archive)
    rows = archive_mod.stimulus_mean_vectors(records, matrix)
    return stats_mod.EmbeddingTable(dim=matrix.shape[1], rows=rows)


def cmd_weat(args: argparse.Namespace, config: dict) -> int:
    lexicon = load_lexicon(_require(_opt(args, config, "weat", "lexicon"), "lexicon"))
    table = _word_table(args, config, "weat")
    level = float(_opt(args, config, "weat", "level", WEAT_LEVEL))
    seed = int(_opt(args, config, "weat", "seed", 0))
    categories = _select_categories(lexicon, _opt(args, config, "weat", "categories"))

    rows = []
    for cat in categories:
        result = stats_mod.association_test(
            table.select(_surfaces(cat, "targets_x")),
            table.select(_surfaces(cat, "targets_y")),
            table.select(_surfaces(cat, "attributes_a")),
            table.select(_surfaces(cat, "attributes_b")),
            seed=ceat_mod.derive_seed(seed, "weat", cat.id),
        )
        rows.append(ResultRow(cat.id, "weat", "", "", result.d, result.p_value,
                              result.p_value < level, result.magnitude))
    _write_rows(rows, _opt(args, config, "weat", "out"))
    return 0


def cmd_seat(args: argparse.Namespace, config: dict) -> int:
    lexicon = load_lexicon(_require(_opt(args, config, "seat", "lexicon"), "lexicon"))
    archive = _require(_opt(args, config, "seat", "archive"), "archive")
    level = float(_opt(args, config, "seat", "level", WEAT_LEVEL))
    seed = int(_opt(args, config, "seat", "seed", 0))
    categories = _select_categories(lexicon, _opt(args, config, "seat", "categories"))

    store = archive_mod.ContextStore.from_archive(archive)

    def role_vectors(cat: Category, role: str):
        vectors = []
        for surface in _surfaces(cat, role):
            rows = store.rows_for(surface)
            if rows.size == 0:
                raise ValidationError(
                    f"seat: no sentence embeddings for stimulus {surface!r}"
                )
            vectors.extend(store.matrix[rows].astype(float))
        return vectors

    rows = []
    for cat in categories:
        result = stats_mod.seat_effect_size(
            {
                "x": role_vectors(cat, "targets_x"),
                "y": role_vectors(cat, "targets_y"),
                "a": role_vectors(cat, "attributes_a"),
                "b": role_vectors(cat, "attributes_b"),
            },
            seed=ceat_mod.derive_seed(seed, "seat", cat.id),
        )
        rows.append(ResultRow(cat.id, "seat", "", "", result.d, result.p_value,
                              result.p_value < level, result.magnitude))
    _write_rows(rows, _opt(args, config, "seat", "out"))
    return 0


# ------------------------------------------------------------------ ceat


def cmd_ceat(args: argparse.Namespace, config: dict) -> int:
    lexicon = load_lexicon(_require(_opt(args, config, "ceat", "lexicon"), "lexicon"))
    archive = _require(_opt(args, config, "ceat", "archive"), "archive")
    level = float(_opt(args, config, "ceat", "level", CEAT_LEVEL))
    n_samples = int(_opt(args, config, "ceat", "n_samples", 1000, flag="n_samples"))
    workers = int(_opt(args, config, "ceat", "workers", 1))
    categories = _select_categories(lexicon, _opt(args, config, "ceat", "categories"))
    json_out = _opt(args, config, "ceat", "json", flag="json_out")

    raw_modes = _opt(args, config, "ceat", "mode", "f")
    mode_names = raw_modes.split(",") if isinstance(raw_modes, str) else list(raw_modes)
    if mode_names == ["both"]:
        mode_names = ["f", "r"]
    modes = []
    for name in mode_names:
        if name not in _MODE_ALIASES:
            raise ValidationError(f"unknown sampling mode {name!r}")
        modes.append(_MODE_ALIASES[name])

    seed = _opt(args, config, "ceat", "seed")
    if seed is None:
        if "fixed" in modes:
            raise ValidationError("fixed-mode sampling requires an explicit seed")
        seed = int.from_bytes(os.urandom(8), "little")
        print(f"ceat: drew fresh seed {seed}", file=sys.stderr)
    seed = int(seed)

    bins_choice = _opt(args, config, "ceat", "bins", "auto")
    explicit_bins = None
    if bins_choice != "auto":
        labels = bins_choice.split(",") if isinstance(bins_choice, str) else list(bins_choice)
        explicit_bins = [ceat_mod.bin_by_label(label.strip()) for label in labels]

    store = archive_mod.ContextStore.from_archive(archive)
    lines = [CEAT_HEADER]
    results = []
    for cat in categories:
        surfaces = [s.surface for s in cat.all_stimuli()]
        if explicit_bins is None:
            cat_bins = [b for b in ceat_mod.SEGMENT_BINS if store.covers(surfaces, b)]
        else:
            cat_bins = explicit_bins
        for seg_bin in cat_bins:
            for mode in modes:
                plan = ceat_mod.SamplingPlan(
                    n_samples=n_samples, mode=mode, seed=seed, bin=seg_bin
                )
                result = ceat_mod.run_ceat(cat, store, plan, level=level, workers=workers)
                magnitude = stats_mod.classify_magnitude(result.ces)
                lines.append(",".join([
                    cat.id, seg_bin.label, _MODE_SHORT[mode], str(result.n),
                    repr(result.ces), repr(result.se), repr(result.p_two_tailed),
                    _fmt_bool(bool(result.significant)), magnitude,
                ]))
                results.append({
                    "category": cat.id, "bin": seg_bin.label, "mode": _MODE_SHORT[mode],
                    "n_samples": result.n, "ces": result.ces, "se": result.se,
                    "p_two_tailed": result.p_two_tailed,
                    "sigma2_between": result.sigma2_between,
                    "q": result.q, "c": result.c,
                    "significant": bool(result.significant),
                    "magnitude": magnitude,
                })
    _emit("".join(line + "\n" for line in lines), _opt(args, config, "ceat", "out"))
    if json_out is not None:
        _emit(json.dumps({"results": results}, ensure_ascii=False, indent=2) + "\n", json_out)
    return 0


# --------------------------------------------------------------- logprob


def _logprob_parts(args, config):
    lexicon = load_lexicon(_require(_opt(args, config, "logprob", "lexicon"), "lexicon"))
    templates_path = _opt(args, config, "logprob", "templates")
    if templates_path is None:
        templates_path = mlm_mod.sample_templates_path()
        print(f"logprob: using packaged sample templates {templates_path}", file=sys.stderr)
    templates = mlm_mod.load_templates(templates_path)
    categories = _select_categories(lexicon, _opt(args, config, "logprob", "categories"))
    return lexicon, templates, categories


def cmd_logprob_emit(args: argparse.Namespace, config: dict) -> int:
    _, templates, categories = _logprob_parts(args, config)
    out = _require(_opt(args, config, "logprob", "queries", flag="out"), "out")
    queries = []
    for cat in categories:
        targets = _surfaces(cat, "targets_x") + _surfaces(cat, "targets_y")
        attributes = _surfaces(cat, "attributes_a") + _surfaces(cat, "attributes_b")
        for template in templates:
            queries.extend(
                mlm_mod.build_queries(template, targets, attributes, id_prefix=f"{cat.id}|")
            )
    mlm_mod.write_queries(queries, out)
    print(f"logprob emit: {len(queries)} queries", file=sys.stderr)
    return 0


def cmd_logprob_score(args: argparse.Namespace, config: dict) -> int:
    _, templates, categories = _logprob_parts(args, config)
    answers_path = _require(_opt(args, config, "logprob", "answers"), "answers")
    level = float(_opt(args, config, "logprob", "level", WEAT_LEVEL))
    seed = int(_opt(args, config, "logprob", "seed", 0))
    scatter_out = _opt(args, config, "logprob", "scatter", flag="scatter_out")

    answers = mlm_mod.read_answers(answers_path)
    rows = []
    all_scores = []
    for cat in categories:
        targets = _surfaces(cat, "targets_x") + _surfaces(cat, "targets_y")
        attributes = _surfaces(cat, "attributes_a") + _surfaces(cat, "attributes_b")
        scores = mlm_mod.collect_scores(
            templates, targets, attributes, answers, id_prefix=f"{cat.id}|"
        )
        all_scores.extend(scores)
        result = mlm_mod.aggregate(
            scores,
            _surfaces(cat, "targets_x"), _surfaces(cat, "targets_y"),
            _surfaces(cat, "attributes_a"), _surfaces(cat, "attributes_b"),
            seed=ceat_mod.derive_seed(seed, "logprob", cat.id),
        )
        rows.append(ResultRow(cat.id, "logprob", "", "", result.d, result.p_value,
                              result.p_value < level, result.magnitude))
    _write_rows(rows, _opt(args, config, "logprob", "out"))
    if scatter_out is not None:
        mlm_mod.write_scatter(mlm_mod.scatter_data(all_scores), scatter_out)
    return 0


# ---------------------------------------------------------------- report


def _read_result_csv(path: str) -> list[ResultRow]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        return []
    header, rows = lines[0], lines[1:]
    out = []
    if header == ROWS_HEADER:
        for line in rows:
            if not line:
                continue
            cat, method, seg, mode, d, p, sig, mag = line.split(",")
            out.append(ResultRow(cat, method, seg, mode, float(d), float(p),
                                 sig == "true", mag))
    elif header == CEAT_HEADER:
        for line in rows:
            if not line:
                continue
            cat, seg, mode, _n, ces, se, p, sig, mag = line.split(",")
            out.append(ResultRow(cat, "ceat", seg, mode, float(ces), float(p),
                                 sig == "true", mag))
    else:
        raise ValidationError(f"{path}: unrecognized result header {header!r}")
    return out


def cmd_report(args: argparse.Namespace, config: dict) -> int:
    inputs = _opt(args, config, "report", "inputs")
    if inputs is None:
        inputs = []
    if isinstance(inputs, str):
        inputs = [p for p in inputs.split(",") if p]
    rows: list[ResultRow] = []
    for path in inputs:
        rows.extend(_read_result_csv(path))
    bin_order = {seg.label: i for i, seg in enumerate(ceat_mod.SEGMENT_BINS)}
    rows.sort(key=lambda r: (r.category, r.method, bin_order.get(r.bin, -1), r.mode))

    header = f"{'category':<10}{'method':<9}{'bin':<7}{'mode':<6}{'effect':>9}  {'p':>9}  {'magnitude':<11}"
    out_lines = [header, "-" * len(header)]
    for row in rows:
        star = "*" if row.significant else " "
        out_lines.append(
            f"{row.category:<10}{row.method:<9}{row.bin:<7}{row.mode:<6}"
            f"{row.effect_size:>9.4f}{star} {row.p_value:>9.5f}  {row.magnitude:<11}"
        )
    _emit("".join(line + "\n" for line in out_lines), _opt(args, config, "report", "out"))
    return 0


# ------------------------------------------------------------------ main


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="biaskit",
        description="Association-bias measurement over embeddings and masked LMs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="RNG seed")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--level", type=float, help="significance level")
        p.add_argument("--lexicon", help="lexicon JSON path")
        p.add_argument("--categories", help="comma-separated category ids")

    p = sub.add_parser("extract", help="extract matching sentences from a corpus")
    common(p)
    p.add_argument("--corpus", help="corpus file, one sentence per line")
    p.add_argument("--supplement", help="supplemental sentences file")
    p.add_argument("--threshold", type=int, help="minimum contexts per stimulus")
    p.add_argument("--workers", type=int, help="shard/thread count")
    p.add_argument("--report-out", help="write the extraction report here")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("weat", help="word-level association test")
    common(p)
    p.add_argument("--vectors", help="static word-vector text file")
    p.add_argument("--archive", help="embedding archive (rows mean-pooled per stimulus)")
    p.set_defaults(func=cmd_weat)

    p = sub.add_parser("seat", help="sentence-level association test")
    common(p)
    p.add_argument("--archive", help="sentence-embedding archive")
    p.set_defaults(func=cmd_seat)

    p = sub.add_parser("ceat", help="context-sampled association test")
    common(p)
    p.add_argument("--archive", help="contextual word-embedding archive")
    p.add_argument("--bins", help="comma-separated bin labels, or 'auto'")
    p.add_argument("--mode", help="sampling mode: f, r, or both")
    p.add_argument("--n-samples", type=int, help="samples per (category, bin)")
    p.add_argument("--workers", type=int, help="draw-evaluation thread count")
    p.add_argument("--json-out", help="write full pooled results as JSON here")
    p.set_defaults(func=cmd_ceat)

    p = sub.add_parser("logprob", help="masked-template log-probability test")
    logprob_sub = p.add_subparsers(dest="phase", required=True)
    pe = logprob_sub.add_parser("emit", help="write the probability query file")
    common(pe)
    pe.add_argument("--templates", help="template JSON file")
    pe.set_defaults(func=cmd_logprob_emit)
    ps = logprob_sub.add_parser("score", help="score an answered query file")
    common(ps)
    ps.add_argument("--templates", help="template JSON file")
    ps.add_argument("--answers", help="answer JSONL file")
    ps.add_argument("--scatter-out", help="write scatter CSV here")
    ps.set_defaults(func=cmd_logprob_score)

    p = sub.add_parser("report", help="merge result CSVs into a readable table")
    common(p)
    p.add_argument("--inputs", help="comma-separated result CSV paths")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        return args.func(args, config)
    except (BiaskitError, OSError) as exc:
        print(f"biaskit {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
