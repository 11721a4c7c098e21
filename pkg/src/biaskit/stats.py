"""Cosine association scores, standardized association gaps, permutation tests.

The central quantity is the association of a word vector w with two
attribute vector sets A and B::

    s(w, A, B) = mean_{a in A} cos(w, a) - mean_{b in B} cos(w, b)

and the effect size between two target sets X and Y::

    d = (mean_{x in X} s(x) - mean_{y in Y} s(y)) / std_{w in X u Y} s(w)

reported as Cohen's d with a population standard deviation by default.
All mean/variance reductions are arranged so that swapping X with Y (or A
with B) negates d *exactly* in floating point, not just approximately.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DegenerateSpreadError,
    DimMismatchError,
    EmptySetError,
    NonFiniteError,
    ParseError,
    ValidationError,
    ZeroNormError,
)

MAGNITUDES = ("negligible", "small", "medium", "large")

DEFAULT_MAX_EXHAUSTIVE = 200_000
DEFAULT_N_SAMPLES = 10_000

# Partitions whose effect size is within this band of the observed one are
# counted as ties; absorbs summation-order noise far below any real gap.
_TIE_EPS = 1e-12


def classify_magnitude(d: float) -> str:
    """Bucket |d|: >=0.8 large, >=0.5 medium, >=0.2 small, else negligible."""
    if not math.isfinite(d):
        raise NonFiniteError(f"effect size is not finite: {d!r}")
    a = abs(d)
    if a >= 0.8:
        return "large"
    if a >= 0.5:
        return "medium"
    if a >= 0.2:
        return "small"
    return "negligible"


def _as_matrix(vectors, name: str) -> np.ndarray:
    """Stack a non-empty sequence of equal-dimension vectors into float64 rows."""
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        mat = np.asarray(vectors, dtype=np.float64)
    else:
        rows = [np.asarray(v, dtype=np.float64) for v in vectors]
        if not rows:
            raise EmptySetError(f"{name}: empty vector set")
        dims = {row.shape for row in rows}
        if len(dims) != 1 or rows[0].ndim != 1:
            raise DimMismatchError(f"{name}: inconsistent vector shapes {sorted(map(str, dims))}")
        mat = np.stack(rows)
    if mat.shape[0] == 0:
        raise EmptySetError(f"{name}: empty vector set")
    if not np.all(np.isfinite(mat)):
        raise NonFiniteError(f"{name}: vectors contain non-finite values")
    return mat


def _unit_rows(mat: np.ndarray, name: str) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=1)
    if np.any(norms == 0.0):
        raise ZeroNormError(f"{name}: vector with zero norm at row {int(np.argmin(norms))}")
    return mat / norms[:, None]


def cosine(u, v) -> float:
    """Cosine similarity of two vectors, accumulated in float64, clamped to [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.ndim != 1 or v.ndim != 1:
        raise DimMismatchError("cosine expects 1-D vectors")
    if u.shape != v.shape:
        raise DimMismatchError(f"dimension mismatch: {u.shape[0]} vs {v.shape[0]}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroNormError("cosine undefined for zero-norm vectors")
    return min(1.0, max(-1.0, float(np.dot(u, v)) / (nu * nv)))


def unit_association_values(xu: np.ndarray, au: np.ndarray, bu: np.ndarray) -> np.ndarray:
    """s(w, A, B) for every row of xu; all inputs must already be unit rows."""
    ca = xu @ au.T
    np.clip(ca, -1.0, 1.0, out=ca)
    cb = xu @ bu.T
    np.clip(cb, -1.0, 1.0, out=cb)
    return ca.mean(axis=1) - cb.mean(axis=1)


def _role_units(x, y, a, b) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    mats = [_as_matrix(v, name) for v, name in ((x, "X"), (y, "Y"), (a, "A"), (b, "B"))]
    dims = {m.shape[1] for m in mats}
    if len(dims) != 1:
        raise DimMismatchError(f"dimension mismatch across roles: {sorted(dims)}")
    xu, yu, au, bu = (_unit_rows(m, n) for m, n in zip(mats, ("X", "Y", "A", "B")))
    return xu, yu, au, bu


def association(w, a, b) -> float:
    """Mean cosine of w to the A vectors minus mean cosine to the B vectors."""
    au = _unit_rows(_as_matrix(a, "A"), "A")
    bu = _unit_rows(_as_matrix(b, "B"), "B")
    wu = _unit_rows(_as_matrix([w], "w"), "w")
    if au.shape[1] != wu.shape[1] or bu.shape[1] != wu.shape[1]:
        raise DimMismatchError("dimension mismatch between w and attribute sets")
    return float(unit_association_values(wu, au, bu)[0])


def _pooled_spread(sx: np.ndarray, sy: np.ndarray, population_std: bool) -> tuple[float, float]:
    """(total sum, variance) of the combined scores, symmetric under X<->Y swap."""
    n = sx.size + sy.size
    total = float(sx.sum()) + float(sy.sum())
    mean_all = total / n
    ssq = float(((sx - mean_all) ** 2).sum()) + float(((sy - mean_all) ** 2).sum())
    denom = n if population_std else n - 1
    if denom <= 0:
        raise DegenerateSpreadError("sample standard deviation needs at least 2 scores")
    return total, ssq / denom


def _is_constant(sx: np.ndarray, sy: np.ndarray) -> bool:
    first = sx[0]
    return bool(np.all(sx == first) and np.all(sy == first))


def association_gap(scores_x, scores_y, *, population_std: bool = True) -> tuple[float, float]:
    """Standardized gap between two score sets plus the pooled variance.

    Returns (d, var) where d = (mean(scores_x) - mean(scores_y)) / sqrt(var)
    and var is the pooled variance over the union.  Raises
    DegenerateSpreadError when the union has zero spread.
    """
    sx = np.asarray(scores_x, dtype=np.float64)
    sy = np.asarray(scores_y, dtype=np.float64)
    if sx.size == 0 or sy.size == 0:
        raise EmptySetError("both score sets must be non-empty")
    if not (np.all(np.isfinite(sx)) and np.all(np.isfinite(sy))):
        raise NonFiniteError("scores contain non-finite values")
    _, var = _pooled_spread(sx, sy, population_std)
    if var <= 0.0 or _is_constant(sx, sy):
        raise DegenerateSpreadError("association scores have zero spread")
    return (float(sx.mean()) - float(sy.mean())) / math.sqrt(var), var


def cohens_d(scores_x, scores_y, *, population_std: bool = True) -> float:
    """Cohen's d between two score sets, standardized by the pooled spread."""
    return association_gap(scores_x, scores_y, population_std=population_std)[0]


def effect_size(x, y, a, b, *, population_std: bool = True) -> float:
    """Association effect size between target sets X, Y over attribute sets A, B.

    Positive d means X is more associated with A (relative to B) than Y is.
    """
    xu, yu, au, bu = _role_units(x, y, a, b)
    sx = unit_association_values(xu, au, bu)
    sy = unit_association_values(yu, au, bu)
    return cohens_d(sx, sy, population_std=population_std)


@dataclass(frozen=True)
class PermutationResult:
    p_value: float
    mode: str  # "exhaustive" | "monte_carlo"
    n: int  # partitions enumerated or samples drawn


def permutation_p_scores(
    scores_x,
    scores_y,
    *,
    max_exhaustive: int = DEFAULT_MAX_EXHAUSTIVE,
    n_samples: int = DEFAULT_N_SAMPLES,
    seed: int = 0,
    population_std: bool = True,
) -> PermutationResult:
    """One-sided partition test on precomputed association scores.

    All reassignments of the combined scores into groups of the original
    sizes are enumerated when their count is at most ``max_exhaustive``
    (exact proportion); otherwise ``n_samples`` random partitions are drawn
    with add-one smoothing.  Counts partitions whose gap >= the observed gap.
    """
    sx = np.asarray(scores_x, dtype=np.float64)
    sy = np.asarray(scores_y, dtype=np.float64)
    d_obs, var = association_gap(sx, sy, population_std=population_std)
    nx, ny = sx.size, sy.size
    n = nx + ny
    values = np.concatenate([sx, sy])
    total_sum = float(sx.sum()) + float(sy.sum())
    sd = math.sqrt(var)  # invariant under reassignment: same combined multiset

    def gap_from_group_sum(s1: float) -> float:
        return (s1 / nx - (total_sum - s1) / ny) / sd

    threshold = d_obs - _TIE_EPS
    n_partitions = math.comb(n, nx)
    if n_partitions <= max_exhaustive:
        count = 0
        for idx in combinations(range(n), nx):
            if gap_from_group_sum(float(values[list(idx)].sum())) >= threshold:
                count += 1
        return PermutationResult(count / n_partitions, "exhaustive", n_partitions)

    rng = np.random.default_rng(seed)
    order = np.argsort(rng.random((n_samples, n)), axis=1)[:, :nx]
    sums = values[order].sum(axis=1)
    gaps = (sums / nx - (total_sum - sums) / ny) / sd
    count = int((gaps >= threshold).sum())
    return PermutationResult((count + 1) / (n_samples + 1), "monte_carlo", n_samples)


def permutation_p(
    x, y, a, b,
    *,
    max_exhaustive: int = DEFAULT_MAX_EXHAUSTIVE,
    n_samples: int = DEFAULT_N_SAMPLES,
    seed: int = 0,
    population_std: bool = True,
) -> PermutationResult:
    """Partition significance test for the effect size of (X, Y, A, B)."""
    xu, yu, au, bu = _role_units(x, y, a, b)
    sx = unit_association_values(xu, au, bu)
    sy = unit_association_values(yu, au, bu)
    return permutation_p_scores(
        sx, sy,
        max_exhaustive=max_exhaustive, n_samples=n_samples,
        seed=seed, population_std=population_std,
    )


@dataclass(frozen=True)
class EffectSizeResult:
    d: float
    p_value: float
    n_permutations: int
    permutation_mode: str
    magnitude: str


def association_test(
    x, y, a, b,
    *,
    max_exhaustive: int = DEFAULT_MAX_EXHAUSTIVE,
    n_samples: int = DEFAULT_N_SAMPLES,
    seed: int = 0,
    population_std: bool = True,
) -> EffectSizeResult:
    """Effect size plus permutation significance in one pass."""
    xu, yu, au, bu = _role_units(x, y, a, b)
    sx = unit_association_values(xu, au, bu)
    sy = unit_association_values(yu, au, bu)
    d = cohens_d(sx, sy, population_std=population_std)
    perm = permutation_p_scores(
        sx, sy,
        max_exhaustive=max_exhaustive, n_samples=n_samples,
        seed=seed, population_std=population_std,
    )
    return EffectSizeResult(d, perm.p_value, perm.n, perm.mode, classify_magnitude(d))


def seat_effect_size(groups: Mapping[str, Sequence], **kwargs) -> EffectSizeResult:
    """Association test over sentence embeddings grouped by role.

    ``groups`` maps the role names "x", "y", "a", "b" to sequences of
    sentence vectors, one vector per (stimulus, instantiated template).
    """
    expected = {"x", "y", "a", "b"}
    if set(groups) != expected:
        raise ValidationError(f"groups must have exactly the keys {sorted(expected)}")
    return association_test(groups["x"], groups["y"], groups["a"], groups["b"], **kwargs)


@dataclass(frozen=True)
class EmbeddingTable:
    """A fixed-dimension table of named vectors (e.g. static word embeddings)."""

    dim: int
    rows: dict[str, np.ndarray]

    def select(self, keys: Iterable[str]) -> np.ndarray:
        keys = list(keys)
        missing = sorted(k for k in keys if k not in self.rows)
        if missing:
            raise ValidationError(f"no vector for: {', '.join(missing)}")
        return np.stack([self.rows[k] for k in keys])


def load_word_vectors(path: str | Path) -> EmbeddingTable:
    """Read the line-oriented text vector format: ``word f1 f2 ... fD``.

    An optional first line ``count dim`` declares the table shape.  Rejects
    inconsistent dimensions, duplicate words, and zero vectors.
    """
    path = Path(path)
    rows: dict[str, np.ndarray] = {}
    dim: int | None = None
    declared: tuple[int, int] | None = None
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            parts = line.split()
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2:
                try:
                    declared = (int(parts[0]), int(parts[1]))
                    continue
                except ValueError:
                    pass
            word = parts[0]
            try:
                vec = np.array(parts[1:], dtype=np.float32)
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: bad float field: {exc}") from exc
            if vec.size == 0:
                raise ParseError(f"{path}:{lineno}: record has no vector components")
            if dim is None:
                dim = vec.size
                if declared is not None and declared[1] != dim:
                    raise ParseError(
                        f"{path}: declared dim {declared[1]} but records have {dim}"
                    )
            elif vec.size != dim:
                raise ParseError(
                    f"{path}:{lineno}: dim {vec.size} inconsistent with {dim}"
                )
            if word in rows:
                raise ParseError(f"{path}:{lineno}: duplicate word {word!r}")
            if not np.any(vec):
                raise ZeroNormError(f"{path}:{lineno}: zero vector for {word!r}")
            rows[word] = vec
    if dim is None:
        raise ParseError(f"{path}: no vector records found")
    if declared is not None and declared[0] != len(rows):
        raise ParseError(f"{path}: declared count {declared[0]} but found {len(rows)}")
    return EmbeddingTable(dim=dim, rows=rows)
