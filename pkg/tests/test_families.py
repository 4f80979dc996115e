import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from minicrush import families as fam
from minicrush.families import (
    Classification,
    ClassificationPolicy,
    Family,
    ParameterError,
    TestId,
    classify,
)
from minicrush.generators import ArrayStream, GeneratorKind, Stream
from minicrush.special import linear_complexity_profile

import oracles

P, S, X = Classification.PASS, Classification.SUSPICIOUS, Classification.EXTREME_FAIL


class CountingStream:
    """Wraps a stream and counts every word handed out."""

    def __init__(self, inner):
        self.inner = inner
        self.drawn = 0

    def words(self, n):
        self.drawn += n
        return self.inner.words(n)

    def uniforms(self, n):
        self.drawn += n
        return self.inner.uniforms(n)


def pcg(seed=1):
    return Stream.from_seed(GeneratorKind.PCG32, seed)


# -- classification -----------------------------------------------------------

def test_classify_examples():
    assert classify(0.5) is P
    assert classify(0.0005) is S
    assert classify(0.9995) is S
    assert classify(1e-16) is X
    assert classify(1 - 1e-16) is X
    assert classify(0.001) is P and classify(0.999) is P


@given(a=st.floats(0, 0.5), b=st.floats(0, 0.5))
def test_classify_monotone_toward_tails(a, b):
    rank = {P: 0, S: 1, X: 2}
    lo, hi = sorted((a, b))
    assert rank[classify(lo)] >= rank[classify(hi)]
    assert rank[classify(1 - lo)] >= rank[classify(1 - hi)]


@given(p=st.floats(0, 1))
def test_strict_policy_only_flags_extremes(p):
    c = classify(p, ClassificationPolicy.strict())
    assert c in (P, X)
    assert (c is X) == (classify(p) is X)


def test_policy_validation():
    with pytest.raises(ValueError):
        ClassificationPolicy(0.5, 0.4)
    with pytest.raises(ValueError):
        ClassificationPolicy(0.001, 0.999, 0.01)


def test_test_id_label_and_equality():
    a = TestId(Family.LINEAR_COMP, 1, "jumps", (81,))
    assert a.label == "LinearComp[1].jumps"
    assert a == TestId(Family.LINEAR_COMP, 1, "jumps")
    assert TestId(Family.SERIAL_OVER).label == "SerialOver[0]"


# -- bit extraction -----------------------------------------------------------

@given(words=st.lists(st.integers(0, 2**32 - 1), min_size=1, max_size=50),
       logd=st.integers(1, 32), r=st.integers(0, 31))
def test_word_cells_definition(words, logd, r):
    d = 2 ** logd
    got = fam.word_cells(np.array(words, dtype=np.uint32), d, r).tolist()
    want = [(((w << r) & 0xFFFFFFFF) * d) >> 32 for w in words]
    assert got == want


@given(words=st.lists(st.integers(0, 2**32 - 1), min_size=1, max_size=50), r=st.integers(0, 31))
def test_word_bits_definition(words, r):
    got = fam.word_bits(np.array(words, dtype=np.uint32), r).tolist()
    assert got == [(w >> (31 - r)) & 1 for w in words]


# -- SerialOver -----------------------------------------------------------------

def test_serial_over_hand_example():
    cells = [(i % 4) // 2 for i in range(16)]  # u_i = (i mod 4)/4, d = 2
    assert fam.serial_over_statistic(cells, 2, 2) == oracles.serial_over_brute(cells, 2, 2) == 0.0


@given(seed=st.integers(0, 10**6), d=st.integers(2, 6), t=st.integers(2, 3), n=st.integers(5, 300))
def test_serial_over_matches_tuple_enumeration(seed, d, t, n):
    rng = random.Random(seed)
    cells = [rng.randrange(d) for _ in range(n)]
    assert fam.serial_over_statistic(np.array(cells), d, t) == pytest.approx(
        oracles.serial_over_brute(cells, d, t), rel=1e-9, abs=1e-9)


def test_serial_over_constant_stream_fails():
    r = fam.serial_over(ArrayStream(np.zeros(100, dtype=np.uint32)), 100, 2, 2)
    assert r.classification is X


def test_serial_over_density_precondition():
    with pytest.raises(ParameterError):
        fam.serial_over(pcg(), 100, 8, 2)


def test_serial_over_mt_5489_desk_passes():
    r = fam.serial_over(Stream.from_seed(GeneratorKind.MT19937, 5489), 2**22, 64, 2)
    assert 0.001 < r.p_value < 0.999


# -- CollisionOver --------------------------------------------------------------

def test_collision_count_same_cell():
    assert fam.collision_count([7, 7, 7, 7, 7]) == 4


def test_collision_over_single_point():
    r = fam.collision_over(pcg(), 1, 64, 2)
    assert r.statistic == 0 and r.classification is P


@given(seed=st.integers(0, 10**6), n=st.integers(1, 1000))
def test_collision_over_matches_hash_set(seed, n):
    rng = np.random.default_rng(seed)
    cells = rng.integers(0, 256, size=n)
    idx = fam.overlapping_indices(cells.astype(np.uint32), 256, 2)
    assert fam.collision_count(idx) == oracles.collision_brute(cells.tolist(), 2)


def test_collision_over_small_instance_fixed_seed():
    words = pcg(77).words(64)
    r = fam.collision_over(ArrayStream(words), 64, 256, 2)
    cells = fam.word_cells(words, 256).tolist()
    assert r.statistic == oracles.collision_brute(cells, 2)


@given(n=st.integers(0, 400), k=st.integers(2, 10**7))
def test_expected_collisions_exact(n, k):
    assert fam.expected_collisions(n, k) == pytest.approx(
        oracles.expected_collisions_exact(n, k), rel=1e-9, abs=1e-12)


def test_collision_over_sparse_precondition():
    with pytest.raises(ParameterError):
        fam.collision_over(pcg(), 1000, 16, 2)


# -- BirthdaySpacings -------------------------------------------------------------

def test_birthday_examples():
    assert fam.birthday_duplicates([0, 5, 10, 15]) == 2
    assert fam.birthday_duplicates([3, 9]) == 0
    assert fam.birthday_lambda(1024, 2**21) == 128.0


@given(days=st.lists(st.integers(0, 5000), min_size=0, max_size=1000))
def test_birthday_matches_brute(days):
    assert fam.birthday_duplicates(days) == (oracles.birthday_brute(days) if len(days) >= 2 else 0)


def test_birthday_lambda_range():
    with pytest.raises(ParameterError):
        fam.birthday_spacings(pcg(), 16, 2**10, 2)


# -- ClosePairs -----------------------------------------------------------------

def test_close_pairs_identical_points():
    pts = [0.25, 0.25, 0.25, 0.25, 0.7, 0.1]
    r = fam.close_pairs(ArrayStream.from_uniforms(pts), 3, 2)
    assert r.statistic == 0.0 and r.p_value == 1.0 and r.classification is X


def test_close_pairs_hand_geometry():
    square = [[0.0, 0.0], [0.5, 0.0], [0.0, 0.5], [0.5, 0.5]]
    assert fam.min_torus_distance(square) == pytest.approx(0.5)
    wrapped = [[0.01, 0.5], [0.99, 0.5], [0.5, 0.0]]
    assert fam.min_torus_distance(wrapped) == pytest.approx(0.02)


@given(seed=st.integers(0, 10**6), n=st.integers(2, 120), t=st.integers(2, 5))
def test_close_pairs_matches_all_pairs(seed, n, t):
    pts = np.random.default_rng(seed).random((n, t))
    assert fam.min_torus_distance(pts) == pytest.approx(
        oracles.torus_min_distance_brute(pts.tolist()), rel=1e-9)


def test_close_pairs_statistic_formula():
    y, p = fam.close_pairs_p_value(10, 2, 0.1)
    assert y == pytest.approx(45 * math.pi * 0.01)
    assert p == pytest.approx(math.exp(-y))
    assert fam.ball_volume(3, 1.0) == pytest.approx(4 / 3 * math.pi)


# -- RandomWalk -------------------------------------------------------------------

def test_walk_max_example():
    assert fam.walk_statistics([[1, 1, 0, 1]])["M"][0] == 2


@given(seed=st.integers(0, 10**6), half=st.integers(1, 15), m=st.integers(1, 20))
def test_walk_statistics_match_brute(seed, half, m):
    bits = np.random.default_rng(seed).integers(0, 2, size=(m, 2 * half))
    got = fam.walk_statistics(bits)
    for i, row in enumerate(bits.tolist()):
        want = oracles.walk_stats_brute(row)
        assert {k: int(v[i]) for k, v in got.items()} == want


@pytest.mark.parametrize("ell", [2, 4, 6, 8, 10, 12])
def test_walk_laws_match_enumeration(ell):
    laws = fam.walk_distributions(ell)
    enum = oracles.walk_laws_enumerated(ell)
    for name in fam.WALK_STATISTICS:
        for v, prob in enumerate(laws[name]):
            assert prob == pytest.approx(float(enum[name].get(v, Fraction(0))), abs=1e-15)
        assert sum(laws[name]) == pytest.approx(1.0)
        assert set(enum[name]) <= set(range(len(laws[name])))


def test_walk_final_position_binomial_ell4():
    h = fam.walk_distributions(4)["H"]
    assert [round(x * 16) for x in h] == [1, 4, 6, 4, 1]


def test_random_walk_all_ones_fails():
    words = np.full(10 * 1000, 0xFFFFFFFF, dtype=np.uint32)
    results = fam.random_walk(ArrayStream(words), 10, 1000)
    assert [r.id.statistic for r in results] == list(fam.WALK_STATISTICS)
    assert results[0].classification is X


@given(counts=st.lists(st.integers(0, 200), min_size=2, max_size=12),
       raw=st.lists(st.floats(0.01, 1), min_size=12, max_size=12))
def test_chi_square_merged_matches_direct(counts, raw):
    probs = np.array(raw[:len(counts)])
    probs /= probs.sum()
    stat, dof = fam.chi_square_merged(counts, probs, min_expected=0.0)
    total = sum(counts)
    if total == 0:
        return
    exp = [p * total for p in probs]
    assert stat == pytest.approx(oracles.chi_square_direct(counts, exp), rel=1e-9)
    assert dof == len(counts) - 1


def test_chi_square_merged_groups_have_min_expectation():
    # expectations 50, 30, 10, 5, 3, 1, 1: the last three merge into one cell of 5
    stat, dof = fam.chi_square_merged([50, 30, 10, 5, 3, 1, 1], [0.5, 0.3, 0.1, 0.05, 0.03, 0.01, 0.01])
    assert stat == 0.0 and dof == 4
    assert fam.chi_square_merged([0, 0], [0.5, 0.5]) == (0.0, 0)


# -- LinearComp -----------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 5, 9, 12])
def test_jump_count_moments_by_enumeration(n):
    counts = [len(linear_complexity_profile(bits)[1]) for bits in itertools.product((0, 1), repeat=n)]
    mean = Fraction(sum(counts), 2 ** n)
    var = Fraction(sum(c * c for c in counts), 2 ** n) - mean ** 2
    got_mean, got_var = fam.jump_count_moments(n)
    assert got_mean == pytest.approx(float(mean), rel=1e-12)
    assert got_var == pytest.approx(float(var), rel=1e-12)


def test_jump_count_moments_large_n_asymptotics():
    mean, var = fam.jump_count_moments(5000)
    assert mean == pytest.approx(5000 / 4, abs=1)
    assert var == pytest.approx(5000 / 8, rel=0.01)


def test_jump_sizes_law_sums_to_one():
    for m in range(2, 12):
        assert sum(fam.jump_sizes_law(m)) == pytest.approx(1.0)


def test_linear_comp_all_zero_source():
    results = fam.linear_comp(ArrayStream(np.zeros(5000, dtype=np.uint32)), 5000)
    assert results[0].id.statistic == "jumps" and results[0].classification is X
    assert results[1].p_value == 0.5


def test_linear_comp_philox_passes():
    results = fam.linear_comp(Stream.from_seed(GeneratorKind.PHILOX4X32_10, 11), 5000)
    assert all(r.classification is P for r in results)


def test_linear_comp_mt_needs_more_than_twice_19937_bits():
    short = fam.linear_comp(Stream.from_seed(GeneratorKind.MT19937, 3), 5000)
    assert short[0].classification is not X
    long = fam.linear_comp(Stream.from_seed(GeneratorKind.MT19937, 3), 50_000)
    assert long[0].classification is X and long[0].p_value > 1 - 1e-15


def test_linear_comp_min_length():
    with pytest.raises(ParameterError):
        fam.linear_comp(pcg(), 10)


# -- bookkeeping ----------------------------------------------------------------

@pytest.mark.parametrize("call,words", [
    (lambda s: [fam.serial_over(s, 640, 8, 2)], 640),
    (lambda s: [fam.collision_over(s, 500, 64, 2)], 500),
    (lambda s: [fam.birthday_spacings(s, 256, 2**10, 2)], 512),
    (lambda s: [fam.close_pairs(s, 50, 3)], 150),
    (lambda s: fam.random_walk(s, 8, 100), 800),
    (lambda s: fam.linear_comp(s, 300), 300),
])
def test_samples_consumed_equals_words_drawn(call, words):
    s = CountingStream(pcg(5))
    results = call(s)
    assert s.drawn == words
    assert all(r.samples_consumed == words for r in results)
