"""Masked-template probing: query generation and log-probability bias scores.

For a template holding one [TARGET] and one [ATTRIBUTE] slot and a
(target, attribute) pair, two probabilities are requested from a model
bridge:

    p_tgt   target slot masked, attribute filled in   (fill bias score)
    p_prior both slots masked                         (prior bias score)

and the bias measure is the prior-corrected score ln(p_tgt / p_prior).
Queries and answers travel as JSON-lines files; the query/answer exchange
is batch-oriented, with no model run in-process.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import stats
from .errors import (
    MissingScoreError,
    NonPositiveProbabilityError,
    ParseError,
    PlaceholderError,
    ValidationError,
)

TARGET_SLOT = "[TARGET]"
ATTRIBUTE_SLOT = "[ATTRIBUTE]"
MASK = "[MASK]"

ROLE_TARGET_ONLY = "target_only"
ROLE_BOTH = "target_and_attribute"

# Sentence-structure taxonomy: subject/object slot order and context amount
# rise from S1 to S5 (S5 drawing on naturally occurring text).
STRUCTURES = {
    "S1": "subject(target) & object(attribute), no context",
    "S2": "subject(target) & object(attribute), minimal context",
    "S3": "object(attribute) & subject(target), some context",
    "S4": "object(attribute) & subject(target), significant multi-sentence context",
    "S5": "object(attribute) & subject(target), significant context from natural text",
}

POLARITIES = ("positive_trait", "negative_trait", "none")


@dataclass(frozen=True)
class Template:
    id: str
    structure: str
    text: str
    polarity: str = "none"

    def __post_init__(self) -> None:
        if self.structure not in STRUCTURES:
            raise ValidationError(f"unknown structure {self.structure!r}")
        if self.polarity not in POLARITIES:
            raise ValidationError(f"unknown polarity {self.polarity!r}")
        for slot in (TARGET_SLOT, ATTRIBUTE_SLOT):
            n = self.text.count(slot)
            if n != 1:
                raise PlaceholderError(
                    f"template {self.id!r} must contain exactly one {slot}, found {n}"
                )


def load_templates(path: str | Path) -> list[Template]:
    """Read a JSON list of {"id","structure","text","polarity"} objects."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise ParseError(f"{path}: expected a JSON list of templates")
    templates = []
    seen: set[str] = set()
    for i, obj in enumerate(raw):
        try:
            tpl = Template(
                id=obj["id"], structure=obj["structure"],
                text=obj["text"], polarity=obj.get("polarity", "none"),
            )
        except (KeyError, TypeError) as exc:
            raise ParseError(f"{path}: template [{i}] malformed: {exc}") from exc
        if tpl.id in seen:
            raise ValidationError(f"{path}: duplicate template id {tpl.id!r}")
        seen.add(tpl.id)
        templates.append(tpl)
    return templates


def sample_templates_path() -> Path:
    """Demonstration templates (S1..S5) shipped with the package."""
    return Path(__file__).parent / "data" / "sample_templates.json"


def instantiate(template: Template, target: str, attribute: str) -> str:
    """Fill both slots literally; no other text is altered."""
    if template.text.count(TARGET_SLOT) != 1 or template.text.count(ATTRIBUTE_SLOT) != 1:
        raise PlaceholderError(f"template {template.id!r} has malformed placeholders")
    return template.text.replace(TARGET_SLOT, target).replace(ATTRIBUTE_SLOT, attribute)


@dataclass(frozen=True)
class ProbQuery:
    id: str
    masked_text: str
    candidate: str
    mask_role: str  # ROLE_TARGET_ONLY | ROLE_BOTH
    # Zero-based position of the target mask among the [MASK] markers in
    # reading order; lets a bridge score the right mask of two-mask queries.
    target_mask_index: int

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "masked_text": self.masked_text,
            "candidate": self.candidate,
            "mask_role": self.mask_role,
            "target_mask_index": self.target_mask_index,
        }


def build_queries(template: Template, targets: Sequence[str],
                  attributes: Sequence[str], id_prefix: str = "") -> list[ProbQuery]:
    """Two queries per (target, attribute) pair with deterministic ids.

    The fill query masks only the target; the prior query masks both slots.
    """
    if not targets or not attributes:
        raise ValidationError("targets and attributes must be non-empty")
    target_first = template.text.index(TARGET_SLOT) < template.text.index(ATTRIBUTE_SLOT)
    queries: list[ProbQuery] = []
    for i, (target, attribute) in enumerate(product(targets, attributes)):
        base = f"{id_prefix}{template.id}|{i:05d}"
        queries.append(
            ProbQuery(
                id=f"{base}|{ROLE_TARGET_ONLY}",
                masked_text=template.text.replace(TARGET_SLOT, MASK)
                                         .replace(ATTRIBUTE_SLOT, attribute),
                candidate=target, mask_role=ROLE_TARGET_ONLY, target_mask_index=0,
            )
        )
        queries.append(
            ProbQuery(
                id=f"{base}|{ROLE_BOTH}",
                masked_text=template.text.replace(TARGET_SLOT, MASK)
                                         .replace(ATTRIBUTE_SLOT, MASK),
                candidate=target, mask_role=ROLE_BOTH,
                target_mask_index=0 if target_first else 1,
            )
        )
    return queries


def write_queries(queries: Iterable[ProbQuery], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as out:
        for query in queries:
            out.write(json.dumps(query.to_dict(), ensure_ascii=False) + "\n")


def read_answers(path: str | Path) -> dict[str, float]:
    """Parse an answer file into id -> probability; probabilities must be in (0, 1].

    Lines carrying an "error" field instead of a probability (a bridge's
    in-band per-query failure reports) are skipped; the affected pairs then
    surface as MissingScoreError during scoring.
    """
    answers: dict[str, float] = {}
    with Path(path).open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                if "error" in obj and "probability" not in obj:
                    continue
                qid, prob = obj["id"], float(obj["probability"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"{path}:{lineno}: bad answer: {exc}") from exc
            if qid in answers:
                raise ValidationError(f"{path}:{lineno}: duplicate answer id {qid!r}")
            if not 0.0 < prob <= 1.0:
                raise NonPositiveProbabilityError(
                    f"{path}:{lineno}: probability {prob!r} outside (0, 1] for {qid!r}"
                )
            answers[qid] = prob
    return answers


def corrected_score(p_tgt: float, p_prior: float) -> float:
    """Natural log of p_tgt / p_prior; both probabilities must be in (0, 1]."""
    for name, p in (("p_tgt", p_tgt), ("p_prior", p_prior)):
        if not 0.0 < p <= 1.0:
            raise NonPositiveProbabilityError(f"{name} must be in (0, 1], got {p!r}")
    return math.log(p_tgt / p_prior)


@dataclass(frozen=True)
class LogProbScore:
    template_id: str
    structure: str
    target: str
    attribute: str
    p_tgt: float
    p_prior: float
    corrected: float


def collect_scores(
    templates: Sequence[Template],
    targets: Sequence[str],
    attributes: Sequence[str],
    answers: Mapping[str, float],
    id_prefix: str = "",
) -> list[LogProbScore]:
    """Join regenerated query ids against an answer map into scores.

    Raises MissingScoreError naming the first (template, target, attribute,
    role) whose answer is absent.
    """
    scores: list[LogProbScore] = []
    for template in templates:
        queries = build_queries(template, targets, attributes, id_prefix=id_prefix)
        pairs = list(product(targets, attributes))
        for i, (target, attribute) in enumerate(pairs):
            fill_query, prior_query = queries[2 * i], queries[2 * i + 1]
            for query in (fill_query, prior_query):
                if query.id not in answers:
                    raise MissingScoreError(
                        f"no answer for template {template.id!r}, target {target!r}, "
                        f"attribute {attribute!r}, role {query.mask_role!r}"
                    )
            p_tgt = answers[fill_query.id]
            p_prior = answers[prior_query.id]
            scores.append(
                LogProbScore(
                    template_id=template.id, structure=template.structure,
                    target=target, attribute=attribute,
                    p_tgt=p_tgt, p_prior=p_prior,
                    corrected=corrected_score(p_tgt, p_prior),
                )
            )
    return scores


def _mean(values: list[float]) -> float:
    return math.fsum(values) / len(values)


def aggregate(
    scores: Sequence[LogProbScore],
    male_terms: Iterable[str],
    female_terms: Iterable[str],
    attributes_a: Sequence[str],
    attributes_b: Sequence[str],
    *,
    seed: int = 0,
    max_exhaustive: int = stats.DEFAULT_MAX_EXHAUSTIVE,
    n_samples: int = stats.DEFAULT_N_SAMPLES,
) -> stats.EffectSizeResult:
    """Category-level effect size over corrected scores.

    Per attribute word w, its gendered association is the mean corrected
    score over one term group minus the mean over the other; Cohen's d is
    then taken between attribute sets A and B over those associations, with
    a permutation test that reassigns attribute-set membership.
    """
    male = list(dict.fromkeys(male_terms))
    female = list(dict.fromkeys(female_terms))
    set_a = list(dict.fromkeys(attributes_a))
    set_b = list(dict.fromkeys(attributes_b))
    if not (male and female and set_a and set_b):
        raise ValidationError("all four aggregation sets must be non-empty")

    by_pair: dict[tuple[str, str], list[float]] = {}
    for score in scores:
        by_pair.setdefault((score.target, score.attribute), []).append(score.corrected)

    def gender_gap(attribute: str) -> float:
        per_group = []
        for terms in (male, female):
            values: list[float] = []
            for term in terms:
                pair = (term, attribute)
                if pair not in by_pair:
                    raise MissingScoreError(
                        f"no score for target {term!r} with attribute {attribute!r}"
                    )
                values.extend(by_pair[pair])
            per_group.append(_mean(values))
        return per_group[0] - per_group[1]

    gaps_a = [gender_gap(w) for w in set_a]
    gaps_b = [gender_gap(w) for w in set_b]
    d = stats.cohens_d(gaps_a, gaps_b)
    perm = stats.permutation_p_scores(
        gaps_a, gaps_b, seed=seed, max_exhaustive=max_exhaustive, n_samples=n_samples,
    )
    return stats.EffectSizeResult(
        d, perm.p_value, perm.n, perm.mode, stats.classify_magnitude(d)
    )


@dataclass(frozen=True)
class ScatterRow:
    structure: str
    p_prior: float
    corrected: float


def scatter_data(scores: Sequence[LogProbScore]) -> list[ScatterRow]:
    """One row per score, ordered by (structure, template id, target, attribute)."""
    ordered = sorted(scores, key=lambda s: (s.structure, s.template_id, s.target, s.attribute))
    return [ScatterRow(s.structure, s.p_prior, s.corrected) for s in ordered]


def write_scatter(rows: Sequence[ScatterRow], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as out:
        out.write("structure,p_prior,corrected\n")
        for row in rows:
            out.write(f"{row.structure},{row.p_prior!r},{row.corrected!r}\n")
