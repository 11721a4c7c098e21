"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines.  Expected values come from independent oracles (plain-Python brute
force, mpmath, construction) computed inside this module.
"""
import json
import math
import time
from itertools import combinations

import mpmath
import numpy as np
import pytest

from synthdata import (
    biased_vector_file,
    make_category,
    noise_store,
    planted_prototypes,
    store_from_prototypes,
    stub_answers,
    two_bin_store,
    write_store_archive,
)

from biaskit import cli, stats
from biaskit.archive import read_archive, write_archive
from biaskit.ceat import (
    SampleEffect,
    SamplingPlan,
    between_variance,
    bin_by_label,
    combined_effect,
    normal_cdf,
    run_ceat,
)
from biaskit.extract import build_variant_index, extract_corpus
from biaskit.lexicon import Category, Lexicon, Stimulus, SuffixGroup, save_lexicon
from biaskit.mlm import collect_scores, corrected_score, load_templates
from biaskit.mlm import LogProbScore, aggregate, build_queries


def _pass(name: str) -> None:
    print(f"[PASS] {name}")


# --------------------------------------------------------------------------
# Criterion 1: effect-size oracle equivalence + exact antisymmetry, < 5 s.
# --------------------------------------------------------------------------


def brute_force_effect_size(X, Y, A, B):
    def cos(u, v):
        dot = math.fsum(ui * vi for ui, vi in zip(u, v))
        nu = math.sqrt(math.fsum(ui * ui for ui in u))
        nv = math.sqrt(math.fsum(vi * vi for vi in v))
        return dot / (nu * nv)

    def assoc(w):
        return (math.fsum(cos(w, a) for a in A) / len(A)
                - math.fsum(cos(w, b) for b in B) / len(B))

    sx = [assoc(x) for x in X]
    sy = [assoc(y) for y in Y]
    union = sx + sy
    mean = math.fsum(union) / len(union)
    var = math.fsum((v - mean) ** 2 for v in union) / len(union)
    return (math.fsum(sx) / len(sx) - math.fsum(sy) / len(sy)) / math.sqrt(var)


def test_weat_oracle_equivalence():
    started = time.monotonic()
    rng = np.random.default_rng(20240501)
    for trial in range(50):
        dim = int(rng.integers(2, 17))
        sizes = rng.integers(1, 9, size=4)
        X, Y, A, B = (rng.standard_normal((int(n), dim)) for n in sizes)
        d = stats.effect_size(X, Y, A, B)
        oracle = brute_force_effect_size(X.tolist(), Y.tolist(), A.tolist(), B.tolist())
        assert abs(d - oracle) <= 1e-9, (trial, d, oracle)
        assert stats.effect_size(Y, X, A, B) == -d
        assert stats.effect_size(X, Y, B, A) == -d
    elapsed = time.monotonic() - started
    assert elapsed < 5.0, f"took {elapsed:.2f}s"
    _pass(f"WEAT oracle equivalence + exact antisymmetry (50 fixtures, {elapsed:.2f}s)")


# --------------------------------------------------------------------------
# Criterion 2: Monte-Carlo permutation p within 0.02 of the exhaustive p.
# --------------------------------------------------------------------------


def test_permutation_exactness():
    rng = np.random.default_rng(77)
    checked = 0
    while checked < 20:
        dim = int(rng.integers(2, 9))
        nx = int(rng.integers(2, 6))
        ny = int(rng.integers(2, 11 - nx))
        X = rng.standard_normal((nx, dim))
        Y = rng.standard_normal((ny, dim))
        A = rng.standard_normal((int(rng.integers(1, 5)), dim))
        B = rng.standard_normal((int(rng.integers(1, 5)), dim))
        exhaustive = stats.permutation_p(X, Y, A, B)
        assert exhaustive.mode == "exhaustive"
        monte = stats.permutation_p(X, Y, A, B, max_exhaustive=1,
                                    n_samples=10_000, seed=checked)
        assert monte.mode == "monte_carlo"
        assert abs(monte.p_value - exhaustive.p_value) <= 0.02, (
            checked, monte.p_value, exhaustive.p_value)
        checked += 1
    _pass("permutation Monte-Carlo p within 0.02 of exhaustive (20 fixtures)")


# --------------------------------------------------------------------------
# Criterion 3: pooling worked fixtures + bounds over 10,000 random lists.
# --------------------------------------------------------------------------


def test_ceat_pooling_oracle():
    samples = [SampleEffect(0.0, 0.5, 2.0), SampleEffect(2.0, 0.5, 2.0)]
    bv = between_variance(samples)
    assert abs(bv.sigma2 - 1.5) <= 1e-6
    res = combined_effect(samples)
    assert abs(res.ces - 1.0) <= 1e-6
    assert abs(res.se - 1.0) <= 1e-6
    with mpmath.workdps(30):
        p_target = float(2 * (1 - mpmath.ncdf(1)))
    assert abs(res.p_two_tailed - p_target) <= 1e-6
    assert abs(res.p_two_tailed - 0.31731) <= 1e-5

    samples2 = [SampleEffect(0.0, 1.0, 1.0), SampleEffect(1.0, 1.0, 1.0)]
    assert between_variance(samples2).sigma2 == 0.0

    rng = np.random.default_rng(31337)
    for _ in range(10_000):
        n = int(rng.integers(2, 13))
        es = rng.normal(scale=rng.uniform(0.1, 3.0), size=n)
        v = rng.uniform(0.01, 4.0, size=n)
        pool = combined_effect(
            [SampleEffect(float(e), float(vi), 1.0 / float(vi))
             for e, vi in zip(es, v)]
        )
        assert pool.sigma2_between >= 0.0
        assert es.min() <= pool.ces <= es.max()
    _pass("CEAT pooling oracle fixtures + bounds over 10,000 random sample lists")


# --------------------------------------------------------------------------
# Criterion 4: normal CDF accuracy against a high-precision oracle.
# --------------------------------------------------------------------------


def test_normal_cdf_accuracy():
    grid = np.linspace(-8.0, 8.0, 1000)
    with mpmath.workdps(40):
        for z in grid:
            oracle = float(mpmath.ncdf(mpmath.mpf(float(z))))
            assert abs(normal_cdf(float(z)) - oracle) <= 1e-7, z
    assert abs(normal_cdf(0.0) - 0.5) <= 1e-12
    _pass("normal CDF within 1e-7 of mpmath on 1000-point grid, phi(0) = 0.5")


# --------------------------------------------------------------------------
# Criterion 5: byte-identical reruns for fixed-mode CEAT and every command.
# --------------------------------------------------------------------------


def _run_cli(args):
    code = cli.main([str(a) for a in args])
    assert code == 0, args
    return code


def test_cli_determinism(tmp_path):
    cat = make_category("SYN", n_per_set=4)
    lex_path = tmp_path / "lexicon.json"
    save_lexicon(Lexicon(categories=(cat,), suffix_groups={}), lex_path)
    rng = np.random.default_rng(8)
    protos = planted_prototypes(cat, rng, dim=8, gap=0.9)
    store = store_from_prototypes(cat, protos, rng, contexts_per_stimulus=12, noise=0.4)
    adir = write_store_archive(store, tmp_path / "arch")
    vec_path = biased_vector_file(cat, tmp_path / "vectors.txt", rng)
    corpus = tmp_path / "corpus.txt"
    corpus.write_text(
        "".join(f"{stim.surface} filler words here\n" for stim in cat.all_stimuli()) * 40,
        encoding="utf-8",
    )
    templates = tmp_path / "templates.json"
    templates.write_text(json.dumps([
        {"id": "t1", "structure": "S1", "text": "[TARGET] is [ATTRIBUTE].",
         "polarity": "none"}]), encoding="utf-8")

    def outputs(tag, workers):
        d = tmp_path / tag
        d.mkdir()
        _run_cli(["extract", "--lexicon", lex_path, "--corpus", corpus,
                  "--out", d / "store.jsonl", "--report-out", d / "report.json",
                  "--workers", workers])
        _run_cli(["weat", "--lexicon", lex_path, "--vectors", vec_path,
                  "--out", d / "weat.csv"])
        _run_cli(["seat", "--lexicon", lex_path, "--archive", adir,
                  "--out", d / "seat.csv"])
        _run_cli(["ceat", "--lexicon", lex_path, "--archive", adir, "--seed", 4,
                  "--mode", "both", "--n-samples", 30, "--workers", workers,
                  "--out", d / "ceat.csv", "--json-out", d / "ceat.json"])
        _run_cli(["logprob", "emit", "--lexicon", lex_path, "--templates", templates,
                  "--out", d / "queries.jsonl"])
        answers = stub_answers(load_templates(templates), cat, d / "answers.jsonl")
        _run_cli(["logprob", "score", "--lexicon", lex_path, "--templates", templates,
                  "--answers", answers, "--out", d / "logprob.csv",
                  "--scatter-out", d / "scatter.csv"])
        _run_cli(["report", "--inputs", f"{d / 'weat.csv'},{d / 'ceat.csv'}",
                  "--out", d / "table.txt"])
        return {p.name: p.read_bytes() for p in sorted(d.iterdir())}

    first = outputs("run1", workers=1)
    second = outputs("run2", workers=1)
    threaded = outputs("run8", workers=8)
    assert first == second
    assert first == threaded
    _pass("byte-identical CLI outputs across reruns and 1 vs 8 worker threads")


# --------------------------------------------------------------------------
# Criterion 6: planted association gap recovered; null stays quiet.  < 60 s.
# --------------------------------------------------------------------------


def test_synthetic_direction_recovery():
    started = time.monotonic()
    cat = make_category(n_per_set=8)
    for sign in (+1.0, -1.0):
        rng = np.random.default_rng(1000 if sign > 0 else 1001)
        protos = planted_prototypes(cat, rng, dim=16, gap=sign * 1.0, residual=0.4)
        store = store_from_prototypes(cat, protos, rng, contexts_per_stimulus=64,
                                      noise=0.8)
        plan = SamplingPlan(n_samples=1000, mode="fixed", seed=42,
                            bin=bin_by_label("<=9"))
        res = run_ceat(cat, store, plan)
        assert math.copysign(1.0, res.ces) == sign
        assert res.p_two_tailed < 0.005
        assert res.significant is True

    quiet = 0
    for seed in range(20):
        rng = np.random.default_rng(10_000 + seed)
        store = noise_store(cat, rng, dim=16, contexts_per_stimulus=512)
        plan = SamplingPlan(n_samples=1000, mode="random", seed=seed,
                            bin=bin_by_label("<=9"))
        res = run_ceat(cat, store, plan)
        if abs(res.ces) < 0.1 and res.p_two_tailed > 0.005:
            quiet += 1
    assert quiet >= 18, f"only {quiet}/20 null runs stayed quiet"
    elapsed = time.monotonic() - started
    assert elapsed < 60.0, f"took {elapsed:.1f}s"
    _pass(f"planted gap recovered both signs at N=1000; null quiet in "
          f"{quiet}/20 runs ({elapsed:.1f}s)")


# --------------------------------------------------------------------------
# Criterion 7: longer (lower-noise) segments track the true gap better.
# --------------------------------------------------------------------------


def test_context_length_convergence():
    cat = make_category(n_per_set=8)
    closer = 0
    for seed in range(20):
        rng = np.random.default_rng(20_000 + seed)
        protos = planted_prototypes(cat, rng, dim=16, gap=1.0, residual=0.4)
        true_gap = stats.effect_size(
            [protos[s.surface] for s in cat.targets_x],
            [protos[s.surface] for s in cat.targets_y],
            [protos[s.surface] for s in cat.attributes_a],
            [protos[s.surface] for s in cat.attributes_b],
        )
        store = two_bin_store(cat, protos, rng, contexts_per_bin=48,
                              short_noise=1.2, long_noise=0.05)
        ces = {}
        for label in ("<=9", ">75"):
            plan = SamplingPlan(n_samples=300, mode="fixed", seed=seed,
                                bin=bin_by_label(label))
            ces[label] = run_ceat(cat, store, plan).ces
        if abs(ces[">75"] - true_gap) <= abs(ces["<=9"] - true_gap):
            closer += 1
    assert closer >= 16, f"long bin closer in only {closer}/20 runs"
    _pass(f"long-segment CES closer to the true gap in {closer}/20 runs")


# --------------------------------------------------------------------------
# Criterion 8: log-prob pipeline against stub answers.
# --------------------------------------------------------------------------


def test_logprob_stub_pipeline(tmp_path):
    for p in (0.1, 0.5, 1.0, 2.0 ** -20):
        assert corrected_score(p, p) == 0.0

    cat = make_category("SYN", n_per_set=4)
    templates = load_templates(tmp_path_templates(tmp_path))
    answers_path = stub_answers(templates, cat, tmp_path / "answers.jsonl")
    answers = {}
    for line in answers_path.read_text(encoding="utf-8").splitlines():
        obj = json.loads(line)
        answers[obj["id"]] = obj["probability"]

    targets = [s.surface for s in cat.targets_x + cat.targets_y]
    attributes = [s.surface for s in cat.attributes_a + cat.attributes_b]
    scores = collect_scores(templates, targets, attributes, answers,
                            id_prefix=f"{cat.id}|")

    male = {s.surface for s in cat.targets_x}
    set_a = [s.surface for s in cat.attributes_a]
    set_b = [s.surface for s in cat.attributes_b]
    by_key = {(s.template_id, s.target, s.attribute): s.corrected for s in scores}
    for template in templates:
        for attribute in set_a:
            for m_term, f_term in zip(sorted(male), [s.surface for s in cat.targets_y]):
                diff = (by_key[(template.id, m_term, attribute)]
                        - by_key[(template.id, f_term, attribute)])
                assert diff == 1.0, (template.id, m_term, f_term, attribute, diff)

    result = aggregate(scores, [s.surface for s in cat.targets_x],
                       [s.surface for s in cat.targets_y], set_a, set_b)
    assert result.d > 0
    assert abs(result.d - 2.0) <= 1e-12  # gaps are {1 x4, 0 x4}

    shifted = [LogProbScore(s.template_id, s.structure, s.target, s.attribute,
                            s.p_tgt, s.p_prior, s.corrected + 3.75) for s in scores]
    result2 = aggregate(shifted, [s.surface for s in cat.targets_x],
                        [s.surface for s in cat.targets_y], set_a, set_b)
    assert abs(result2.d - result.d) <= 1e-9
    _pass("log-prob stub pipeline: zero self-score, unit pair gap, positive d, "
          "shift-invariant d")


def tmp_path_templates(tmp_path):
    path = tmp_path / "templates.json"
    path.write_text(json.dumps([
        {"id": "t1", "structure": "S1", "text": "[TARGET] is [ATTRIBUTE].",
         "polarity": "none"},
        {"id": "t3", "structure": "S3", "text": "being [ATTRIBUTE] suits [TARGET].",
         "polarity": "none"},
    ]), encoding="utf-8")
    return path


# --------------------------------------------------------------------------
# Criterion 9: extraction over a 10,000-line corpus + archive round trip.
# --------------------------------------------------------------------------


def test_extraction_correctness(tmp_path):
    groups = {"g1": SuffixGroup("g1", ("s", "ly"))}
    cat = Category(
        id="C1", label="",
        targets_x=(Stimulus("flower", suffix_group="g1"), Stimulus("tulip")),
        targets_y=(Stimulus("stone", suffix_group="g1"), Stimulus("cloud")),
        attributes_a=(Stimulus("bright"),), attributes_b=(Stimulus("dull"),),
    )
    lex = Lexicon(categories=(cat,), suffix_groups=groups)
    index = build_variant_index(lex)
    variants = sorted(index.variant_to_stimulus)

    rng = np.random.default_rng(99)
    junk = ["qq", "zzz", "wwww", "mmmm", "vv", "kkk"]
    lines, expected = [], set()
    for i in range(10_000):
        words = [junk[int(rng.integers(len(junk)))]
                 for _ in range(int(rng.integers(2, 14)))]
        roll = rng.random()
        if roll < 0.5:
            variant = variants[int(rng.integers(len(variants)))]
            style = rng.random()
            if style < 0.4:
                token = variant
            elif style < 0.7:
                token = variant + ","
            else:
                token = f"«{variant}»"
            words.insert(int(rng.integers(len(words) + 1)), token)
            expected.add((i, index.variant_to_stimulus[variant]))
        elif roll < 0.75:
            # superstrings must never match under the whole-token rule
            variant = variants[int(rng.integers(len(variants)))]
            decoy = variant + "pot" if rng.random() < 0.5 else "xx" + variant
            words.insert(int(rng.integers(len(words) + 1)), decoy)
        lines.append(" ".join(words))
    corpus = tmp_path / "corpus.txt"
    corpus.write_text("\n".join(lines) + "\n", encoding="utf-8")

    offsets, pos = {}, 0
    for i, line in enumerate(lines):
        offsets[pos] = i
        pos += len(line.encode("utf-8")) + 1

    store = extract_corpus(corpus, index)
    got = {(offsets[r.sentence_id], r.stimulus) for r in store.records}
    assert got == expected  # no false negatives, no whole-token false positives

    baseline = store.records
    for workers in (4, 8):
        assert extract_corpus(corpus, index, workers=workers).records == baseline

    matrix = rng.standard_normal((64, 12)).astype(np.float32)
    records = [(f"s{i % 7}", i, int(rng.integers(1, 200))) for i in range(64)]
    adir = tmp_path / "arch"
    write_archive(adir, matrix, records)
    back_records, back = read_archive(adir)
    assert back.tobytes() == matrix.tobytes()
    adir2 = tmp_path / "arch2"
    write_archive(adir2, back, [(r.stimulus, r.sentence_id, r.word_count)
                                for r in back_records])
    assert (adir2 / "matrix.bin").read_bytes() == (adir / "matrix.bin").read_bytes()
    assert (adir2 / "manifest.json").read_bytes() == (adir / "manifest.json").read_bytes()
    _pass(f"extraction exact on 10,000 lines ({len(expected)} planted matches), "
          "shard-invariant, archive bit-exact")
