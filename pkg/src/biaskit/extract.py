"""Suffix-aware sentence extraction over large line-oriented corpora.

Each stimulus expands to a variant set (its root plus root+suffix for every
suffix in its group).  A sentence matches a stimulus when any variant
equals a whole whitespace token after NFC normalization and edge-punctuation
stripping; prefix matches like "flowerpot" never count.  One record is
emitted per (sentence, stimulus) pair at the first matching token.

Sentence ids are the byte offsets of line starts, which makes the record
stream identical no matter how the corpus is sharded.  Corpora are streamed
shard-by-shard, so memory stays bounded by the variant index.
"""
from __future__ import annotations

import json
import logging
import unicodedata
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .ceat import SEGMENT_BINS, bin_segment
from .errors import DanglingGroupError, ParseError, VariantCollisionError
from .lexicon import Lexicon, Stimulus, SuffixGroup

log = logging.getLogger(__name__)

DEFAULT_MIN_CONTEXTS = 5

# First id handed to supplement records; far above any realistic byte offset.
_SUPPLEMENT_ID_BASE = 1 << 62

# Edge punctuation: general punctuation categories plus the danda marks
# common in South-Asian scripts (already category Po, listed for clarity).
_EDGE_CATEGORIES = frozenset({"Po", "Ps", "Pe", "Pi", "Pf", "Pd"})
_EDGE_EXTRA = frozenset({"।", "॥"})


def _nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def _is_edge_punct(ch: str) -> bool:
    return ch in _EDGE_EXTRA or unicodedata.category(ch) in _EDGE_CATEGORIES


def strip_edge_punctuation(token: str) -> str:
    """Remove leading/trailing punctuation; interior punctuation is preserved."""
    start, end = 0, len(token)
    while start < end and _is_edge_punct(token[start]):
        start += 1
    while end > start and _is_edge_punct(token[end - 1]):
        end -= 1
    return token[start:end]


def generate_variants(stimulus: Stimulus, groups: Mapping[str, SuffixGroup]) -> set[str]:
    """The stimulus root plus every root+suffix form, NFC-normalized."""
    root = _nfc(stimulus.surface)
    variants = {root}
    if stimulus.suffix_group is not None:
        group = groups.get(stimulus.suffix_group)
        if group is None:
            raise DanglingGroupError(
                f"stimulus {stimulus.surface!r} references unknown group "
                f"{stimulus.suffix_group!r}"
            )
        variants.update(_nfc(root + suffix) for suffix in group.suffixes)
    return variants


@dataclass(frozen=True)
class VariantIndex:
    """Immutable variant -> stimulus surface map shared by all shards."""

    variant_to_stimulus: dict[str, str]
    stimuli: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.variant_to_stimulus)


def build_variant_index(lexicon: Lexicon) -> VariantIndex:
    """Expand every stimulus in the lexicon; colliding variants are an error."""
    groups_of: dict[str, str | None] = {}
    ordered: list[str] = []
    for cat in lexicon.categories:
        for stim in cat.all_stimuli():
            prior = groups_of.get(stim.surface, stim.suffix_group)
            if stim.surface in groups_of and prior != stim.suffix_group:
                raise VariantCollisionError(
                    f"stimulus {stim.surface!r} is linked to groups "
                    f"{prior!r} and {stim.suffix_group!r} in different categories"
                )
            if stim.surface not in groups_of:
                ordered.append(stim.surface)
            groups_of[stim.surface] = stim.suffix_group
    index: dict[str, str] = {}
    for surface in ordered:
        stim = Stimulus(surface=surface, suffix_group=groups_of[surface])
        for variant in sorted(generate_variants(stim, lexicon.suffix_groups)):
            owner = index.get(variant)
            if owner is not None and owner != surface:
                raise VariantCollisionError(
                    f"variant {variant!r} generated by both {owner!r} and {surface!r}"
                )
            index[variant] = surface
    return VariantIndex(variant_to_stimulus=index, stimuli=tuple(ordered))


@dataclass(frozen=True)
class SentenceRecord:
    sentence_id: int
    text: str
    stimulus: str
    matched_variant: str
    token_index: int
    word_count: int
    source: str  # "corpus" | "supplement"

    def to_dict(self) -> dict:
        return {
            "sentence_id": self.sentence_id,
            "text": self.text,
            "stimulus": self.stimulus,
            "matched_variant": self.matched_variant,
            "token_index": self.token_index,
            "word_count": self.word_count,
            "source": self.source,
        }


def match_sentence(text: str, index: VariantIndex, sentence_id: int,
                   source: str = "corpus") -> list[SentenceRecord]:
    """All records for one sentence: first matching token per stimulus."""
    normalized = _nfc(text)
    tokens = normalized.split()
    records: list[SentenceRecord] = []
    seen: set[str] = set()
    for position, token in enumerate(tokens):
        cleaned = strip_edge_punctuation(token)
        if not cleaned:
            continue
        stimulus = index.variant_to_stimulus.get(cleaned)
        if stimulus is None or stimulus in seen:
            continue
        seen.add(stimulus)
        records.append(
            SentenceRecord(
                sentence_id=sentence_id, text=normalized, stimulus=stimulus,
                matched_variant=cleaned, token_index=position,
                word_count=len(tokens), source=source,
            )
        )
    return records


class RecordStore:
    """Mutable collection of sentence records for a fixed stimulus universe."""

    def __init__(self, stimuli: Iterable[str]):
        self.stimuli = tuple(stimuli)
        self.records: list[SentenceRecord] = []
        self.skipped_lines = 0
        self.unmatched_supplement = 0
        self._next_supplement_id = _SUPPLEMENT_ID_BASE

    def add(self, record: SentenceRecord) -> None:
        self.records.append(record)

    def next_supplement_id(self) -> int:
        sid = self._next_supplement_id
        self._next_supplement_id += 1
        return sid

    def save(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="\n") as out:
            for rec in self.records:
                out.write(json.dumps(rec.to_dict(), ensure_ascii=False) + "\n")

    @classmethod
    def load(cls, path: str | Path, stimuli: Iterable[str]) -> "RecordStore":
        store = cls(stimuli)
        with Path(path).open(encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    store.add(SentenceRecord(
                        sentence_id=int(obj["sentence_id"]), text=obj["text"],
                        stimulus=obj["stimulus"], matched_variant=obj["matched_variant"],
                        token_index=int(obj["token_index"]),
                        word_count=int(obj["word_count"]), source=obj["source"],
                    ))
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise ParseError(f"{path}:{lineno}: bad record: {exc}") from exc
        supplement_ids = [r.sentence_id for r in store.records if r.source == "supplement"]
        if supplement_ids:
            store._next_supplement_id = max(supplement_ids) + 1
        return store


def _shard_ranges(size: int, shards: int) -> list[tuple[int, int]]:
    shards = max(1, min(shards, max(1, size)))
    step = size // shards
    bounds = [i * step for i in range(shards)] + [size]
    return [(bounds[i], bounds[i + 1]) for i in range(shards)]


def _extract_range(path: Path, index: VariantIndex, start: int, end: int
                   ) -> tuple[list[SentenceRecord], int]:
    """Records for lines *starting* within [start, end); offsets are global."""
    records: list[SentenceRecord] = []
    skipped = 0
    with path.open("rb") as handle:
        if start > 0:
            handle.seek(start - 1)
            if handle.read(1) != b"\n":
                handle.readline()  # partial line owned by the previous shard
        pos = handle.tell()
        while pos < end:
            raw = handle.readline()
            if not raw:
                break
            offset = pos
            pos += len(raw)
            try:
                text = raw.decode("utf-8").rstrip("\n").rstrip("\r")
            except UnicodeDecodeError:
                skipped += 1
                continue
            records.extend(match_sentence(text, index, sentence_id=offset))
    return records, skipped


def extract_corpus(
    corpus_path: str | Path,
    index: VariantIndex,
    *,
    workers: int = 1,
    store: RecordStore | None = None,
) -> RecordStore:
    """Stream a corpus file into a record store.

    The corpus is split into byte-range shards aligned to line boundaries
    and processed by ``workers`` threads; output order (and content) is
    independent of the shard count.
    """
    corpus_path = Path(corpus_path)
    size = corpus_path.stat().st_size
    if store is None:
        store = RecordStore(index.stimuli)
    ranges = _shard_ranges(size, workers)
    if len(ranges) == 1:
        results = [_extract_range(corpus_path, index, *ranges[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(ranges)) as pool:
            results = list(pool.map(lambda r: _extract_range(corpus_path, index, *r), ranges))
    for records, skipped in results:
        store.records.extend(records)
        store.skipped_lines += skipped
    return store


def ingest_supplement(store: RecordStore, path: str | Path, index: VariantIndex) -> int:
    """Add user-provided sentences (one per line) that match a variant.

    Non-matching lines are counted and logged; matching ones are appended
    as distinct records tagged source="supplement".  Returns the number of
    records added.
    """
    added = 0
    with Path(path).open(encoding="utf-8") as handle:
        for line in handle:
            text = line.rstrip("\n").rstrip("\r")
            if not text.strip():
                continue
            matches = match_sentence(text, index, sentence_id=0, source="supplement")
            if not matches:
                store.unmatched_supplement += 1
                continue
            for rec in matches:
                store.add(
                    SentenceRecord(
                        sentence_id=store.next_supplement_id(), text=rec.text,
                        stimulus=rec.stimulus, matched_variant=rec.matched_variant,
                        token_index=rec.token_index, word_count=rec.word_count,
                        source="supplement",
                    )
                )
                added += 1
    if store.unmatched_supplement:
        log.warning("%d supplement line(s) matched no variant", store.unmatched_supplement)
    return added


@dataclass(frozen=True)
class ExtractionReport:
    """Per-stimulus, per-bin context counts plus the deficit list."""

    counts: dict[str, dict[str, int]]
    totals: dict[str, int]
    below_threshold: tuple[tuple[str, int, int], ...]  # (stimulus, total, deficit)
    threshold: int
    total_records: int
    skipped_lines: int

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "total_records": self.total_records,
            "skipped_lines": self.skipped_lines,
            "counts": self.counts,
            "totals": self.totals,
            "below_threshold": [
                {"stimulus": s, "total": t, "deficit": d} for s, t, d in self.below_threshold
            ],
        }


def report(store: RecordStore, threshold: int = DEFAULT_MIN_CONTEXTS) -> ExtractionReport:
    """Summarize coverage and flag stimuli below the context threshold."""
    bin_labels = [seg.label for seg in SEGMENT_BINS]
    counts = {stim: {label: 0 for label in bin_labels} for stim in store.stimuli}
    for rec in store.records:
        label = bin_segment(rec.word_count).label
        counts.setdefault(rec.stimulus, {l: 0 for l in bin_labels})[label] += 1
    totals = {stim: sum(per.values()) for stim, per in counts.items()}
    below = tuple(
        (stim, totals[stim], threshold - totals[stim])
        for stim in store.stimuli
        if totals.get(stim, 0) < threshold
    )
    return ExtractionReport(
        counts=counts, totals=totals, below_threshold=below, threshold=threshold,
        total_records=len(store.records), skipped_lines=store.skipped_lines,
    )


def iter_records(path: str | Path) -> Iterator[SentenceRecord]:
    """Stream records from a saved store file without building a RecordStore."""
    with Path(path).open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                yield SentenceRecord(
                    sentence_id=int(obj["sentence_id"]), text=obj["text"],
                    stimulus=obj["stimulus"], matched_variant=obj["matched_variant"],
                    token_index=int(obj["token_index"]),
                    word_count=int(obj["word_count"]), source=obj["source"],
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"{path}:{lineno}: bad record: {exc}") from exc
