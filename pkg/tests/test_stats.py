import math
from itertools import combinations

import numpy as np
import pytest

from biaskit.errors import (
    DegenerateSpreadError,
    DimMismatchError,
    EmptySetError,
    NonFiniteError,
    ParseError,
    ValidationError,
    ZeroNormError,
)
from biaskit.stats import (
    EmbeddingTable,
    association,
    association_test,
    classify_magnitude,
    cohens_d,
    cosine,
    effect_size,
    load_word_vectors,
    permutation_p,
    seat_effect_size,
)

# ------------------------------------------------------------------ oracle
# Independent brute-force evaluation of the effect-size formula: plain
# Python loops and fsum, no shared code with the implementation.


def oracle_cosine(u, v):
    dot = math.fsum(ui * vi for ui, vi in zip(u, v))
    nu = math.sqrt(math.fsum(ui * ui for ui in u))
    nv = math.sqrt(math.fsum(vi * vi for vi in v))
    return dot / (nu * nv)


def oracle_assoc(w, A, B):
    return (math.fsum(oracle_cosine(w, a) for a in A) / len(A)
            - math.fsum(oracle_cosine(w, b) for b in B) / len(B))


def oracle_effect_size(X, Y, A, B):
    sx = [oracle_assoc(x, A, B) for x in X]
    sy = [oracle_assoc(y, A, B) for y in Y]
    union = sx + sy
    mean = math.fsum(union) / len(union)
    var = math.fsum((v - mean) ** 2 for v in union) / len(union)
    return (math.fsum(sx) / len(sx) - math.fsum(sy) / len(sy)) / math.sqrt(var)


def oracle_exhaustive_p(X, Y, A, B):
    """Enumerate every reassignment of X u Y and count gaps >= observed."""
    pool = list(X) + list(Y)
    sw = [oracle_assoc(w, A, B) for w in pool]
    nx = len(X)
    mean = math.fsum(sw) / len(sw)
    sd = math.sqrt(math.fsum((v - mean) ** 2 for v in sw) / len(sw))
    d_obs = (math.fsum(sw[:nx]) / nx - math.fsum(sw[nx:]) / (len(sw) - nx)) / sd
    count = total = 0
    for idx in combinations(range(len(pool)), nx):
        chosen = set(idx)
        s1 = [sw[i] for i in chosen]
        s2 = [sw[i] for i in range(len(pool)) if i not in chosen]
        d = (math.fsum(s1) / len(s1) - math.fsum(s2) / len(s2)) / sd
        total += 1
        if d >= d_obs - 1e-12:
            count += 1
    return count / total


def random_fixture(rng, max_side=4, dim_range=(2, 8)):
    dim = int(rng.integers(*dim_range))

    def side():
        n = int(rng.integers(1, max_side + 1))
        return rng.standard_normal((n, dim))

    return side(), side(), side(), side()


# ------------------------------------------------------------------ cosine


def test_cosine_examples():
    assert cosine([1, 0], [1, 0]) == 1.0
    assert cosine([1, 0], [0, 1]) == 0.0
    assert cosine([1, 2], [2, 1]) == pytest.approx(0.8, abs=1e-12)


def test_cosine_errors():
    with pytest.raises(ZeroNormError):
        cosine([0, 0], [1, 0])
    with pytest.raises(DimMismatchError):
        cosine([1, 0], [1, 0, 0])


def test_cosine_clamped():
    v = [1.0, 1e-8]
    assert -1.0 <= cosine(v, v) <= 1.0


# -------------------------------------------------------------- association


def test_association_examples():
    assert association([1, 0], [[1, 0]], [[0, 1]]) == pytest.approx(1.0)
    vecs = [[0.3, 0.7], [2.0, 1.0]]
    assert association([1, 1], vecs, vecs) == pytest.approx(0.0, abs=1e-15)
    assert association([1, 1], [[1, 0], [0, 1]], [[-1, 0]]) == pytest.approx(
        math.sqrt(2), abs=1e-12
    )


def test_association_empty_set():
    with pytest.raises(EmptySetError):
        association([1, 0], [], [[0, 1]])


# -------------------------------------------------------------- effect size


def test_effect_size_two_dim_fixture_matches_oracle():
    X, Y, A, B = [[1, 0]], [[0, 1]], [[1, 0]], [[0, 1]]
    assert effect_size(X, Y, A, B) == pytest.approx(oracle_effect_size(X, Y, A, B), abs=1e-12)
    assert effect_size(X, Y, A, B) == pytest.approx(2.0)


def test_effect_size_zero_when_association_multisets_match():
    # X and Y both sit symmetrically between A and B, with spread inside sets.
    X = [[1, 0.2], [0.2, 1]]
    Y = [[1, 0.2], [0.2, 1]]
    A = [[1, 0]]
    B = [[0, 1]]
    assert effect_size(X, Y, A, B) == pytest.approx(0.0, abs=1e-15)


def test_effect_size_degenerate_spread():
    with pytest.raises(DegenerateSpreadError):
        effect_size([[1, 0]], [[1, 0]], [[1, 0]], [[0, 1]])


def test_effect_size_matches_oracle_on_random_fixtures():
    rng = np.random.default_rng(7)
    for _ in range(50):
        X, Y, A, B = random_fixture(rng)
        assert effect_size(X, Y, A, B) == pytest.approx(
            oracle_effect_size(X, Y, A, B), abs=1e-9
        )


def test_scale_invariance():
    rng = np.random.default_rng(11)
    for _ in range(20):
        X, Y, A, B = random_fixture(rng)
        d0 = effect_size(X, Y, A, B)
        X2 = X.copy()
        X2[0] = X2[0] * 37.5  # positive rescale of a single vector
        assert effect_size(X2, Y, A, B) == pytest.approx(d0, abs=1e-9)
        assert cosine(X[0], A[0]) == pytest.approx(cosine(X[0] * 2.0, A[0]), abs=1e-12)


def test_antisymmetry_exact():
    rng = np.random.default_rng(13)
    for _ in range(25):
        X, Y, A, B = random_fixture(rng)
        try:
            d = effect_size(X, Y, A, B)
        except DegenerateSpreadError:
            continue
        assert effect_size(Y, X, A, B) == -d
        assert effect_size(X, Y, B, A) == -d


def test_population_vs_sample_std_flag():
    rng = np.random.default_rng(17)
    X, Y, A, B = rng.standard_normal((3, 4)), rng.standard_normal((3, 4)), \
        rng.standard_normal((2, 4)), rng.standard_normal((2, 4))
    d_pop = effect_size(X, Y, A, B, population_std=True)
    d_smp = effect_size(X, Y, A, B, population_std=False)
    n = 6
    assert d_smp == pytest.approx(d_pop * math.sqrt((n - 1) / n), abs=1e-12)


# -------------------------------------------------------------- permutation


def test_permutation_two_partitions():
    # |X| = |Y| = 1 with symmetric vectors: swapping X and Y negates d.
    res = permutation_p([[1, 0]], [[0, 1]], [[1, 0]], [[0, 1]])
    assert res.mode == "exhaustive"
    assert res.n == 2
    assert res.p_value == 0.5


def test_permutation_observed_maximal():
    rng = np.random.default_rng(5)
    base = np.eye(4)
    X = [base[0] + 0.05 * rng.standard_normal(4) for _ in range(3)]
    Y = [base[1] + 0.05 * rng.standard_normal(4) for _ in range(3)]
    A = [base[0]]
    B = [base[1]]
    res = permutation_p(X, Y, A, B)
    assert res.mode == "exhaustive"
    assert res.n == math.comb(6, 3)
    assert res.p_value == pytest.approx(1 / res.n)


def test_permutation_matches_oracle():
    rng = np.random.default_rng(23)
    for _ in range(10):
        X, Y, A, B = random_fixture(rng, max_side=3)
        try:
            res = permutation_p(X, Y, A, B)
        except DegenerateSpreadError:
            continue
        assert res.p_value == pytest.approx(oracle_exhaustive_p(X, Y, A, B), abs=1e-12)


def test_permutation_exhaustive_invariant_to_order_and_seed():
    rng = np.random.default_rng(29)
    X, Y, A, B = random_fixture(rng, max_side=3)
    ref = permutation_p(X, Y, A, B, seed=1)
    assert permutation_p(X, Y, A, B, seed=999).p_value == ref.p_value
    perm = np.random.default_rng(0).permutation(len(X))
    assert permutation_p([X[i] for i in perm], Y, A, B, seed=5).p_value == ref.p_value


def test_permutation_monte_carlo_deterministic_and_smoothed():
    rng = np.random.default_rng(31)
    X = rng.standard_normal((6, 4))
    Y = rng.standard_normal((6, 4))
    A = rng.standard_normal((3, 4))
    B = rng.standard_normal((3, 4))
    res1 = permutation_p(X, Y, A, B, max_exhaustive=10, n_samples=2000, seed=42)
    res2 = permutation_p(X, Y, A, B, max_exhaustive=10, n_samples=2000, seed=42)
    assert res1.mode == "monte_carlo"
    assert res1.p_value == res2.p_value
    assert 0 < res1.p_value <= 1
    # add-one smoothing: numerator and denominator both shifted
    assert (res1.p_value * 2001) == pytest.approx(round(res1.p_value * 2001))


# ---------------------------------------------------------------- magnitude


def test_magnitude_thresholds():
    assert classify_magnitude(0.55) == "medium"
    assert classify_magnitude(0.85) == "large"
    assert classify_magnitude(0.1) == "negligible"
    assert classify_magnitude(-0.3) == "small"
    assert classify_magnitude(0.8) == "large"
    assert classify_magnitude(0.5) == "medium"
    assert classify_magnitude(0.2) == "small"
    with pytest.raises(NonFiniteError):
        classify_magnitude(float("nan"))


# --------------------------------------------------------------------- seat


def test_seat_identical_roles_give_zero():
    rng = np.random.default_rng(37)
    sent = rng.standard_normal((4, 8))
    A = rng.standard_normal((3, 8))
    B = rng.standard_normal((3, 8))
    res = seat_effect_size({"x": sent, "y": sent.copy(), "a": A, "b": B})
    assert res.d == pytest.approx(0.0, abs=1e-15)


def test_seat_single_template_reduces_to_effect_size():
    rng = np.random.default_rng(41)
    X, Y, A, B = (rng.standard_normal((3, 6)) for _ in range(4))
    res = seat_effect_size({"x": X, "y": Y, "a": A, "b": B}, seed=3)
    assert res.d == effect_size(X, Y, A, B)
    assert res.magnitude == classify_magnitude(res.d)


def test_seat_multi_template_matches_oracle():
    rng = np.random.default_rng(43)
    X = rng.standard_normal((6, 5))  # 3 stimuli x 2 templates
    Y = rng.standard_normal((6, 5))
    A = rng.standard_normal((4, 5))
    B = rng.standard_normal((4, 5))
    res = seat_effect_size({"x": X, "y": Y, "a": A, "b": B})
    assert res.d == pytest.approx(oracle_effect_size(X, Y, A, B), abs=1e-9)


def test_seat_requires_role_keys():
    with pytest.raises(ValidationError):
        seat_effect_size({"x": [[1.0]], "y": [[1.0]]})


def test_association_test_result_fields():
    rng = np.random.default_rng(47)
    X, Y, A, B = (rng.standard_normal((3, 4)) for _ in range(4))
    res = association_test(X, Y, A, B, seed=0)
    assert res.permutation_mode == "exhaustive"
    assert res.n_permutations == math.comb(6, 3)
    assert 0.0 <= res.p_value <= 1.0
    assert res.magnitude in ("negligible", "small", "medium", "large")


# ------------------------------------------------------------ vector loader


def test_load_word_vectors_round_trip(tmp_path):
    path = tmp_path / "vecs.txt"
    path.write_text("2 3\nfoo 1.0 2.0 3.0\nbar -1.0 0.5 0.25\n", encoding="utf-8")
    table = load_word_vectors(path)
    assert table.dim == 3
    assert set(table.rows) == {"foo", "bar"}
    assert table.rows["foo"].tolist() == [1.0, 2.0, 3.0]
    sel = table.select(["bar", "foo"])
    assert sel.shape == (2, 3)


def test_load_word_vectors_without_header(tmp_path):
    path = tmp_path / "vecs.txt"
    path.write_text("foo 1 0\nbar 0 1\n", encoding="utf-8")
    assert load_word_vectors(path).dim == 2


def test_load_word_vectors_rejects_inconsistent_dims(tmp_path):
    path = tmp_path / "vecs.txt"
    path.write_text("foo 1 0\nbar 0 1 2\n", encoding="utf-8")
    with pytest.raises(ParseError, match="inconsistent"):
        load_word_vectors(path)


def test_load_word_vectors_rejects_duplicates_and_zero(tmp_path):
    path = tmp_path / "dup.txt"
    path.write_text("foo 1 0\nfoo 0 1\n", encoding="utf-8")
    with pytest.raises(ParseError, match="duplicate"):
        load_word_vectors(path)
    path2 = tmp_path / "zero.txt"
    path2.write_text("foo 0 0\n", encoding="utf-8")
    with pytest.raises(ZeroNormError):
        load_word_vectors(path2)


def test_table_select_names_missing():
    table = EmbeddingTable(dim=2, rows={"a": np.ones(2, dtype=np.float32)})
    with pytest.raises(ValidationError, match="missing"):
        table.select(["a", "missing"])
