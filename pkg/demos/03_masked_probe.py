"""Masked-template probing end to end with a stand-in answer generator.

Emits probability queries for the gendered-terms category of the sample
lexicon, fills them with synthetic probabilities (a real run would send the
query file to a model bridge), and computes corrected scores, the
category-level effect size, and the scatter table.
"""
import hashlib
import json
import math
import tempfile
from pathlib import Path

from biaskit import mlm
from biaskit.lexicon import load_lexicon, sample_lexicon_path

lexicon = load_lexicon(sample_lexicon_path())
cat = lexicon.category("C5")
print(f"category {cat.id}: {cat.label}")

templates = mlm.load_templates(mlm.sample_templates_path())
targets = [s.surface for s in cat.targets_x + cat.targets_y]
attributes = [s.surface for s in cat.attributes_a + cat.attributes_b]

queries = []
for template in templates:
    queries.extend(mlm.build_queries(template, targets, attributes,
                                     id_prefix=f"{cat.id}|"))
print(f"{len(queries)} queries "
      f"({len(templates)} templates x {len(targets)}x{len(attributes)} pairs x 2 roles)")
print("example fill query: ", queries[0].masked_text)
print("example prior query:", queries[1].masked_text)

# Stand-in answers: male terms get a mild boost on career words.  A real
# pipeline writes queries.jsonl, runs the bridge, and reads answers.jsonl.
male = {s.surface for s in cat.targets_x}
career = {s.surface for s in cat.attributes_a}


def fake_probability(query: mlm.ProbQuery) -> float:
    digest = hashlib.sha256(query.id.encode()).digest()
    base = 0.05 + 0.2 * digest[0] / 255
    pair_index = int(query.id.split("|")[-2])
    attribute = attributes[pair_index % len(attributes)]
    boost = 1.0
    if query.mask_role == mlm.ROLE_TARGET_ONLY and query.candidate in male:
        boost = 1.6 if attribute in career else 0.9
    return min(1.0, base * boost)


workdir = Path(tempfile.mkdtemp(prefix="biaskit-demo-"))
queries_path = workdir / "queries.jsonl"
answers_path = workdir / "answers.jsonl"
mlm.write_queries(queries, queries_path)

base_of = {}
with answers_path.open("w", encoding="utf-8") as out:
    for query in queries:
        # share the prior's base within a pair so corrected scores are clean
        key = query.id.rsplit("|", 1)[0]
        if query.mask_role == mlm.ROLE_BOTH:
            base_of[key] = fake_probability(query)
        out.write(json.dumps({"id": query.id, "probability": fake_probability(query)})
                  + "\n")

answers = mlm.read_answers(answers_path)
scores = mlm.collect_scores(templates, targets, attributes, answers,
                            id_prefix=f"{cat.id}|")
print(f"\n{len(scores)} scored pairs; first few corrected scores:")
for s in scores[:4]:
    print(f"  {s.target:<9} {s.attribute:<9} p_tgt={s.p_tgt:.4f} "
          f"p_prior={s.p_prior:.4f} corrected={s.corrected:+.4f}")

result = mlm.aggregate(
    scores,
    [s.surface for s in cat.targets_x], [s.surface for s in cat.targets_y],
    [s.surface for s in cat.attributes_a], [s.surface for s in cat.attributes_b],
)
print(f"\naggregate effect size d = {result.d:+.3f} ({result.magnitude}), "
      f"p = {result.p_value:.4f}")

scatter = mlm.scatter_data(scores)
mlm.write_scatter(scatter, workdir / "scatter.csv")
spread = {}
for row in scatter:
    spread.setdefault(row.structure, []).append(abs(row.corrected))
print("\nmean |corrected| per sentence structure:")
for structure in sorted(spread):
    values = spread[structure]
    print(f"  {structure}: {math.fsum(values) / len(values):.4f}")
print(f"\nartifacts under {workdir}")
