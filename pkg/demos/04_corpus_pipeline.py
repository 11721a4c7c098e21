"""Suffix-aware extraction: corpus to record store to embedding archive.

Generates a toy corpus with inflected stimulus occurrences, extracts the
matching sentences with whole-token matching, inspects the coverage report,
tops up a scarce stimulus from a supplement file, and round-trips a fake
embedding archive for the extracted records.
"""
import tempfile
from pathlib import Path

import numpy as np

from biaskit.archive import read_archive, write_archive
from biaskit.extract import (
    build_variant_index,
    extract_corpus,
    generate_variants,
    ingest_supplement,
    report,
)
from biaskit.lexicon import load_lexicon, sample_lexicon_path

lexicon = load_lexicon(sample_lexicon_path())
index = build_variant_index(lexicon)
print(f"{len(index.stimuli)} stimuli expand to {len(index)} surface variants")
rose = next(s for s in lexicon.category("C1").targets_x if s.surface == "rose")
print(f"variants of 'rose': {sorted(generate_variants(rose, lexicon.suffix_groups))}")

rng = np.random.default_rng(3)
filler = ["the", "a", "very", "quiet", "evening", "light", "wind", "roseate"]
variants = sorted(index.variant_to_stimulus)
lines = []
for i in range(2000):
    words = [filler[int(rng.integers(len(filler)))]
             for _ in range(int(rng.integers(3, 30)))]
    if rng.random() < 0.4:
        words.insert(int(rng.integers(len(words) + 1)),
                     variants[int(rng.integers(len(variants)))] + ("," if rng.random() < 0.3 else ""))
    lines.append(" ".join(words))

workdir = Path(tempfile.mkdtemp(prefix="biaskit-demo-"))
corpus = workdir / "corpus.txt"
corpus.write_text("\n".join(lines) + "\n", encoding="utf-8")

store = extract_corpus(corpus, index, workers=4)
print(f"\nextracted {len(store.records)} records "
      f"(note: 'roseate' never matches 'rose' under whole-token matching)")

coverage = report(store, threshold=5)
print(f"stimuli below threshold 5: {len(coverage.below_threshold)}")
worst = sorted(coverage.below_threshold, key=lambda e: e[1])[:5]
for stim, total, deficit in worst:
    print(f"  {stim:<12} total={total} deficit={deficit}")

if worst:
    scarce = worst[0][0]
    supplement = workdir / "supplement.txt"
    supplement.write_text(
        "".join(f"{scarce} appears in this added sentence number {k}\n" for k in range(5)),
        encoding="utf-8",
    )
    added = ingest_supplement(store, supplement, index)
    total_after = report(store, threshold=5).totals[scarce]
    print(f"\nsupplemented {scarce!r} with {added} sentences; total now {total_after}")

store_path = workdir / "records.jsonl"
store.save(store_path)
print(f"record store saved to {store_path}")

# A bridge would embed each record's matched token; fake the vectors here
# to show the archive round trip the analysis side consumes.
dim = 8
vectors = rng.standard_normal((len(store.records), dim)).astype(np.float32)
archive_dir = workdir / "archive"
write_archive(archive_dir, vectors,
              [(r.stimulus, r.sentence_id, r.word_count) for r in store.records])
back_records, back_matrix = read_archive(archive_dir)
print(f"archive round trip bit-exact: {back_matrix.tobytes() == vectors.tobytes()}")
print(f"artifacts under {workdir}")
