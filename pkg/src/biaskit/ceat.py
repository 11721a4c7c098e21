"""Context-sampled association tests pooled with a random-effects model.

One *sample* draws a single contextual embedding for every stimulus of a
category (sampling sentence contexts with replacement when a stimulus has
fewer stored contexts than requested) and computes the association effect
size over the drawn vectors.  N samples are then pooled:

    ES_i  per-sample effect size
    V_i   in-sample variance = squared population std of the association
          scores over X u Y for that draw
    W_i   = 1 / V_i
    c     = sum(W) - sum(W^2) / sum(W)
    Q     = sum(W * ES^2) - (sum(W * ES))^2 / sum(W)
    sigma2_between = (Q - (N - 1)) / c   if Q >= N - 1 else 0
    v_i   = 1 / (V_i + sigma2_between)
    CES   = sum(v * ES) / sum(v)
    SE    = sqrt(1 / sum(v))
    p     = 2 * (1 - Phi(|CES / SE|))    (two-tailed)

Sentence contexts are keyed by (seed, mode, category id, stimulus surface),
so fixed-mode runs give every model evaluated on the same extraction the
same sentence selections.  All pooling reductions use math.fsum, so pooled
values are exactly independent of sample ordering.
"""
from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import stats
from .errors import (
    DegenerateSpreadError,
    InsufficientSamplesError,
    NoContextsError,
    NonFiniteError,
    ValidationError,
    ZeroVarianceError,
)
from .lexicon import Category

DEGENERATE_REDRAW_LIMIT = 100
CEAT_SIGNIFICANCE_LEVEL = 0.005


@dataclass(frozen=True)
class SegmentBin:
    """A half-open word-count range; the four bins partition the positive ints."""

    label: str
    lower: int
    upper: int | None  # None = unbounded

    def contains(self, word_count: int) -> bool:
        if word_count < self.lower:
            return False
        return self.upper is None or word_count <= self.upper


SEGMENT_BINS: tuple[SegmentBin, ...] = (
    SegmentBin("≤9", 1, 9),
    SegmentBin("10–25", 10, 25),
    SegmentBin("26–75", 26, 75),
    SegmentBin(">75", 76, None),
)

_BIN_ALIASES = {
    "≤9": "≤9", "<=9": "≤9", "9": "≤9",
    "10–25": "10–25", "10-25": "10–25", "25": "10–25",
    "26–75": "26–75", "26-75": "26–75", "75": "26–75",
    ">75": ">75",
}


def bin_segment(word_count: int) -> SegmentBin:
    """Map a sentence word count to its segment bin."""
    if word_count < 1:
        raise ValidationError(f"word count must be >= 1, got {word_count}")
    for seg in SEGMENT_BINS:
        if seg.contains(word_count):
            return seg
    raise AssertionError("segment bins must cover all positive integers")


def bin_by_label(label: str) -> SegmentBin:
    """Look up a bin by its label; ASCII aliases like '<=9' are accepted."""
    canonical = _BIN_ALIASES.get(label)
    if canonical is None:
        raise ValidationError(f"unknown segment bin {label!r}")
    return next(seg for seg in SEGMENT_BINS if seg.label == canonical)


@dataclass(frozen=True)
class SamplingPlan:
    """How many samples to draw, on which bin, and under which seeding mode."""

    n_samples: int
    mode: str  # "fixed" | "random"
    seed: int
    bin: SegmentBin

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise ValidationError("n_samples must be >= 1")
        if self.mode not in ("fixed", "random"):
            raise ValidationError(f"mode must be 'fixed' or 'random', got {self.mode!r}")
        if not isinstance(self.seed, int):
            raise ValidationError("an explicit integer seed is required")


@dataclass
class SampleEffect:
    es: float
    v_in: float
    w: float
    weight: float | None = None  # filled during pooling


@dataclass
class CeatResult:
    ces: float
    se: float
    p_two_tailed: float
    sigma2_between: float
    q: float
    c: float
    n: int
    samples: list[SampleEffect] = field(default_factory=list, repr=False)
    significant: bool | None = None


def normal_cdf(z: float) -> float:
    """Standard normal CDF via the error function (abs error well under 1e-7)."""
    if not math.isfinite(z):
        raise NonFiniteError(f"normal_cdf needs a finite argument, got {z!r}")
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def derive_rng(seed: int, *parts) -> np.random.Generator:
    """A generator keyed by (seed, *parts); parts are hashed, not Python-hashed,
    so streams are stable across processes and runs."""
    digest = hashlib.sha256()
    for part in parts:
        digest.update(str(part).encode("utf-8"))
        digest.update(b"\x1f")
    entropy = int.from_bytes(digest.digest()[:16], "little")
    return np.random.default_rng(np.random.SeedSequence([seed % 2**64, entropy]))


def derive_seed(seed: int, *parts) -> int:
    """A 63-bit integer seed keyed like derive_rng; handy for sub-tests."""
    return int(derive_rng(seed, *parts).integers(0, 2**63 - 1))


def sample_contexts(available: Sequence, n: int, rng: np.random.Generator) -> list:
    """Draw n context ids: without replacement when enough are available,
    with replacement otherwise."""
    if len(available) == 0:
        raise NoContextsError("no contexts available to sample from")
    if len(available) >= n:
        picks = rng.permutation(len(available))[:n]
    else:
        picks = rng.integers(0, len(available), size=n)
    return [available[int(i)] for i in picks]


def _selection_rows(category: Category, store, plan: SamplingPlan) -> dict[str, np.ndarray]:
    """Per-stimulus arrays of N store row indices, keyed deterministically."""
    selections: dict[str, np.ndarray] = {}
    for stim in category.all_stimuli():
        if stim.surface in selections:
            continue
        rows = store.rows_for(stim.surface, plan.bin)
        if rows.size == 0:
            raise NoContextsError(
                f"stimulus {stim.surface!r} has no contexts in bin {plan.bin.label!r}"
            )
        rng = derive_rng(plan.seed, plan.mode, category.id, stim.surface)
        selections[stim.surface] = np.asarray(
            sample_contexts(rows, plan.n_samples, rng), dtype=np.int64
        )
    return selections


def _role_surfaces(category: Category) -> tuple[list[str], list[str], list[str], list[str]]:
    return (
        [s.surface for s in category.targets_x],
        [s.surface for s in category.targets_y],
        [s.surface for s in category.attributes_a],
        [s.surface for s in category.attributes_b],
    )


def _draw_effect(unit: np.ndarray, roles, rows_of) -> tuple[float, float]:
    xs, ys, as_, bs = roles
    xu = unit[[rows_of(s) for s in xs]]
    yu = unit[[rows_of(s) for s in ys]]
    au = unit[[rows_of(s) for s in as_]]
    bu = unit[[rows_of(s) for s in bs]]
    sx = stats.unit_association_values(xu, au, bu)
    sy = stats.unit_association_values(yu, au, bu)
    return stats.association_gap(sx, sy)


def ceat_sample(category: Category, store, draw_index: int, plan: SamplingPlan) -> SampleEffect:
    """The effect size and in-sample variance of one context draw.

    Equivalent to the draw_index-th sample produced by run_ceat with the
    same plan (run_ceat just evaluates all draws in one pass).
    """
    if not 0 <= draw_index < plan.n_samples:
        raise ValidationError(f"draw_index must be in [0, {plan.n_samples})")
    selections = _selection_rows(category, store, plan)
    return _evaluate_draw(category, store, selections, draw_index, plan)


def _evaluate_draw(
    category: Category, store, selections: dict[str, np.ndarray],
    draw_index: int, plan: SamplingPlan,
) -> SampleEffect:
    unit = store.unit_vectors
    roles = _role_surfaces(category)
    try:
        es, v_in = _draw_effect(unit, roles, lambda s: int(selections[s][draw_index]))
        return SampleEffect(es=es, v_in=v_in, w=1.0 / v_in)
    except DegenerateSpreadError:
        pass
    # Zero-spread draws have an undefined effect size; redraw rather than
    # silently skip, so the pool is not biased toward spread-y draws.
    redraw_rng = derive_rng(plan.seed, plan.mode, category.id, "redraw", draw_index)
    available = _available_rows(category, store, plan)
    for _ in range(DEGENERATE_REDRAW_LIMIT):
        picks = {
            surface: int(rows[redraw_rng.integers(0, rows.size)])
            for surface, rows in available.items()
        }
        try:
            es, v_in = _draw_effect(unit, roles, lambda s: picks[s])
            return SampleEffect(es=es, v_in=v_in, w=1.0 / v_in)
        except DegenerateSpreadError:
            continue
    raise DegenerateSpreadError(
        f"draw {draw_index} of category {category.id!r} stayed degenerate "
        f"after {DEGENERATE_REDRAW_LIMIT} redraws"
    )


def _available_rows(category: Category, store, plan: SamplingPlan) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    for stim in category.all_stimuli():
        if stim.surface not in out:
            out[stim.surface] = store.rows_for(stim.surface, plan.bin)
    return out


@dataclass(frozen=True)
class BetweenVariance:
    sigma2: float
    q: float
    c: float


def between_variance(samples: Sequence[SampleEffect]) -> BetweenVariance:
    """ANOVA-style between-sample variance estimate from per-sample effects."""
    n = len(samples)
    if n < 2:
        raise InsufficientSamplesError(f"need at least 2 samples, got {n}")
    for i, s in enumerate(samples):
        if s.v_in <= 0.0:
            raise ZeroVarianceError(f"sample {i} has non-positive in-sample variance")
    w = [1.0 / s.v_in for s in samples]
    sum_w = math.fsum(w)
    sum_w2 = math.fsum(wi * wi for wi in w)
    sum_wes = math.fsum(wi * s.es for wi, s in zip(w, samples))
    sum_wes2 = math.fsum(wi * s.es * s.es for wi, s in zip(w, samples))
    c = sum_w - sum_w2 / sum_w
    q = sum_wes2 - sum_wes * sum_wes / sum_w
    df = n - 1
    sigma2 = max(0.0, (q - df) / c) if q >= df else 0.0
    return BetweenVariance(sigma2=sigma2, q=q, c=c)


def combined_effect(samples: Sequence[SampleEffect]) -> CeatResult:
    """Pool per-sample effects into a combined effect size with SE and p."""
    bv = between_variance(samples)
    weights = [1.0 / (s.v_in + bv.sigma2) for s in samples]
    sum_v = math.fsum(weights)
    sum_ves = math.fsum(vi * s.es for vi, s in zip(weights, samples))
    ces = sum_ves / sum_v
    se = math.sqrt(1.0 / sum_v)
    p = 2.0 * (1.0 - normal_cdf(abs(ces / se)))
    filled = [
        SampleEffect(es=s.es, v_in=s.v_in, w=1.0 / s.v_in, weight=vi)
        for s, vi in zip(samples, weights)
    ]
    return CeatResult(
        ces=ces, se=se, p_two_tailed=p,
        sigma2_between=bv.sigma2, q=bv.q, c=bv.c,
        n=len(samples), samples=filled,
    )


def run_ceat(
    category: Category,
    store,
    plan: SamplingPlan,
    *,
    level: float = CEAT_SIGNIFICANCE_LEVEL,
    workers: int = 1,
) -> CeatResult:
    """Draw plan.n_samples context samples and pool them.

    Results are bitwise reproducible for a given (plan, store) regardless
    of worker count: selections are precomputed from the keyed streams and
    pooling reduces with fsum over draw-index order.
    """
    selections = _selection_rows(category, store, plan)

    def evaluate(i: int) -> SampleEffect:
        return _evaluate_draw(category, store, selections, i, plan)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            samples = list(pool.map(evaluate, range(plan.n_samples)))
    else:
        samples = [evaluate(i) for i in range(plan.n_samples)]

    result = combined_effect(samples)
    result.significant = result.p_two_tailed < level
    return result
