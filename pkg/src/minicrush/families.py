"""Desk-scale versions of the BigCrush test families.

Every family is split in two: a pure core that turns already-extracted
cells, points or bits into the raw statistic (these are what the
brute-force oracles in the test-suite check), and a wrapper that draws
words from a stream, calls the core and converts the statistic into a
:class:`TestResult`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.spatial import cKDTree

from . import special

MASK32 = 0xFFFFFFFF


class Family(enum.Enum):
    SERIAL_OVER = "SerialOver"
    COLLISION_OVER = "CollisionOver"
    BIRTHDAY_SPACINGS = "BirthdaySpacings"
    CLOSE_PAIRS = "ClosePairs"
    RANDOM_WALK = "RandomWalk"
    LINEAR_COMP = "LinearComp"

    @classmethod
    def parse(cls, text: str) -> "Family":
        for fam in cls:
            if text in (fam.value, fam.name):
                return fam
        raise ValueError(f"unknown test family {text!r}")


class Classification(enum.Enum):
    PASS = "Pass"
    SUSPICIOUS = "Suspicious"
    EXTREME_FAIL = "ExtremeFail"


@dataclass(frozen=True)
class ClassificationPolicy:
    suspicious_low: float = 0.001
    suspicious_high: float = 0.999
    extreme_eps: float = 1e-15

    def __post_init__(self):
        if not 0 < self.suspicious_low < self.suspicious_high < 1:
            raise ValueError("need 0 < suspicious_low < suspicious_high < 1")
        if not 0 < self.extreme_eps <= self.suspicious_low:
            raise ValueError("extreme_eps must be positive and no larger than suspicious_low")

    @classmethod
    def strict(cls, extreme_eps: float = 1e-15) -> "ClassificationPolicy":
        """Only extreme p-values count as failures (suspicious band collapsed onto eps)."""
        return cls(extreme_eps, 1.0 - extreme_eps, extreme_eps)


DEFAULT_POLICY = ClassificationPolicy()


def classify(p: float, policy: ClassificationPolicy = DEFAULT_POLICY) -> Classification:
    if p < policy.extreme_eps or p > 1.0 - policy.extreme_eps:
        return Classification.EXTREME_FAIL
    if p < policy.suspicious_low or p > policy.suspicious_high:
        return Classification.SUSPICIOUS
    return Classification.PASS


@dataclass(frozen=True)
class TestId:
    """(family, variant, statistic) identifies one reported p-value.

    ``bigcrush_indices`` only documents which BigCrush tests the variant
    mirrors; it takes no part in equality.
    """

    family: Family
    variant: int = 0
    statistic: str = ""
    bigcrush_indices: tuple[int, ...] = field(default=(), compare=False)

    __test__ = False

    def sort_key(self):
        return (list(Family).index(self.family), self.variant, self.statistic)

    @property
    def label(self) -> str:
        base = f"{self.family.value}[{self.variant}]"
        return f"{base}.{self.statistic}" if self.statistic else base


@dataclass(frozen=True)
class TestResult:
    __test__ = False

    id: TestId
    statistic: float
    p_value: float
    classification: Classification
    samples_consumed: int

    def reclassified(self, policy: ClassificationPolicy) -> "TestResult":
        return TestResult(self.id, self.statistic, self.p_value,
                          classify(self.p_value, policy), self.samples_consumed)


class ParameterError(ValueError):
    """Test parameters outside the range where the statistic is valid."""


def _result(test_id, statistic, p, samples, policy):
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise ArithmeticError(f"{test_id.label}: p-value {p} outside [0, 1]")
    return TestResult(test_id, float(statistic), float(p), classify(p, policy), samples)


# --------------------------------------------------------------------------
# word -> cell / bit extraction


def word_cells(words: np.ndarray, d: int, bit_offset: int = 0) -> np.ndarray:
    """floor(u * d) where u uses the word with its top ``bit_offset`` bits dropped."""
    if not 2 <= d <= 1 << 32:
        raise ParameterError(f"d must be in [2, 2**32], got {d}")
    if not 0 <= bit_offset < 32:
        raise ParameterError(f"bit offset must be in [0, 32), got {bit_offset}")
    w = (words.astype(np.uint64) << np.uint64(bit_offset)) & np.uint64(MASK32)
    if d == 1 << 32:
        return w
    return (w * np.uint64(d)) >> np.uint64(32)


def word_bits(words: np.ndarray, bit_offset: int = 0) -> np.ndarray:
    """One bit per word, ``bit_offset`` positions below the most significant bit."""
    if not 0 <= bit_offset < 32:
        raise ParameterError(f"bit offset must be in [0, 32), got {bit_offset}")
    return ((words >> np.uint32(31 - bit_offset)) & np.uint32(1)).astype(np.uint8)


def _cell_total(d: int, t: int) -> int:
    k = d ** t
    if k >= 1 << 63:
        raise ParameterError(f"cell count d**t = {d}**{t} does not fit in 63 bits")
    return k


def overlapping_indices(cells: np.ndarray, d: int, t: int) -> np.ndarray:
    """Cell numbers of the n circular overlapping t-tuples of ``cells``."""
    n = len(cells)
    idx = np.zeros(n, dtype=np.uint64)
    c = cells.astype(np.uint64)
    for j in range(t):
        idx = idx * np.uint64(d) + np.roll(c, -j)
    return idx


# --------------------------------------------------------------------------
# SerialOver


def serial_over_statistic(cells, d: int, t: int) -> float:
    """Overlapping serial statistic psi2_t - psi2_{t-1} over circular tuples."""
    cells = np.asarray(cells)
    n = len(cells)
    if t < 2:
        raise ParameterError("SerialOver needs t >= 2")
    k = _cell_total(d, t)

    def psi2(tt, cells_total):
        counts = np.bincount(overlapping_indices(cells, d, tt).astype(np.int64),
                             minlength=cells_total)
        sq = float(np.dot(counts.astype(np.float64), counts.astype(np.float64)))
        return cells_total * sq / n - n

    return max(0.0, psi2(t, k) - psi2(t - 1, k // d))


def serial_over(stream, n: int, d: int, t: int, bit_offset: int = 0, variant: int = 0,
                policy: ClassificationPolicy = DEFAULT_POLICY,
                bigcrush_indices=(1, 2)) -> TestResult:
    k = _cell_total(d, t)
    if t < 2:
        raise ParameterError("SerialOver needs t >= 2")
    if n < 10 * k:
        raise ParameterError(f"SerialOver needs n >= 10*d**t = {10 * k}, got n = {n}")
    cells = word_cells(stream.words(n), d, bit_offset)
    stat = serial_over_statistic(cells, d, t)
    p = special.chi_square_sf(stat, k - k // d)
    return _result(TestId(Family.SERIAL_OVER, variant, "", tuple(bigcrush_indices)), stat, p, n, policy)


# --------------------------------------------------------------------------
# CollisionOver


def collision_count(indices) -> int:
    """Throws landing in an already occupied cell."""
    indices = np.asarray(indices)
    return int(len(indices) - len(np.unique(indices)))


def expected_collisions(n: int, k: int) -> float:
    """E[C] = n - k + k(1 - 1/k)**n, summed as a series to avoid cancellation."""
    if n <= 1:
        return 0.0
    if 4 * n >= k:
        # dense: no catastrophic cancellation, and the series below would not shrink
        return n - k + k * math.exp(n * math.log1p(-1.0 / k))
    # k * sum_{j>=2} C(n, j) (-1/k)**j
    term = n * (n - 1) / (2.0 * k)
    total = term
    j = 2
    while j < n:
        term *= -(n - j) / ((j + 1) * k)
        total += term
        j += 1
        if abs(term) < 1e-17 * abs(total):
            break
    return total


def collision_over(stream, n: int, d: int, t: int, bit_offset: int = 0, variant: int = 0,
                   policy: ClassificationPolicy = DEFAULT_POLICY,
                   bigcrush_indices=(9, 10, 11, 12)) -> TestResult:
    k = _cell_total(d, t)
    if n >= k / 4:
        raise ParameterError(f"CollisionOver needs n < k/4 (sparse regime); n={n}, k={k}")
    if n < 1:
        raise ParameterError("CollisionOver needs n >= 1")
    cells = word_cells(stream.words(n), d, bit_offset)
    c = collision_count(overlapping_indices(cells, d, t))
    lam = expected_collisions(n, k)
    if lam <= 0.0:
        p = special.discrete_p_value(1.0, 1.0)
    else:
        p = special.discrete_p_value(*special.poisson_tail(lam, c))
    return _result(TestId(Family.COLLISION_OVER, variant, "", tuple(bigcrush_indices)), c, p, n, policy)


# --------------------------------------------------------------------------
# BirthdaySpacings


def birthday_duplicates(birthdays) -> int:
    """Number of spacings equal to the preceding one after sorting the spacings."""
    b = np.sort(np.asarray(birthdays, dtype=np.uint64))
    if len(b) < 3:
        return 0
    spacings = np.sort(np.diff(b))
    return int(np.count_nonzero(spacings[1:] == spacings[:-1]))


def birthday_lambda(n: int, k: int) -> float:
    return n ** 3 / (4.0 * k)


def birthday_spacings(stream, n: int, d: int, t: int, bit_offset: int = 0, variant: int = 0,
                      policy: ClassificationPolicy = DEFAULT_POLICY,
                      bigcrush_indices=()) -> TestResult:
    k = _cell_total(d, t)
    lam = birthday_lambda(n, k)
    if not 1.0 <= lam <= 1e4:
        raise ParameterError(f"BirthdaySpacings lambda = n^3/(4k) = {lam} outside [1, 1e4]")
    cells = word_cells(stream.words(n * t), d, bit_offset).reshape(n, t)
    days = np.zeros(n, dtype=np.uint64)
    for j in range(t):
        days = days * np.uint64(d) + cells[:, j]
    y = birthday_duplicates(days)
    p = special.discrete_p_value(*special.poisson_tail(lam, y))
    return _result(TestId(Family.BIRTHDAY_SPACINGS, variant, "", tuple(bigcrush_indices)), y, p,
                   n * t, policy)


# --------------------------------------------------------------------------
# ClosePairs


def min_torus_distance(points) -> float:
    """Smallest Euclidean distance between two points on the unit torus."""
    pts = np.asarray(points, dtype=np.float64)
    if len(pts) < 2:
        raise ParameterError("need at least two points")
    tree = cKDTree(pts, boxsize=1.0)
    dist, _ = tree.query(pts, k=2)
    return float(dist[:, 1].min())


def ball_volume(t: int, radius: float) -> float:
    return math.pi ** (t / 2.0) * radius ** t / math.gamma(t / 2.0 + 1.0)


def close_pairs_p_value(n: int, t: int, dist: float) -> tuple[float, float]:
    """Return (statistic, p) with statistic = n(n-1)/2 * V_t(dist), p = exp(-statistic).

    p close to 1 means the closest pair is too close; close to 0, too far apart.
    """
    y = n * (n - 1) / 2.0 * ball_volume(t, dist)
    return y, math.exp(-y)


def close_pairs(stream, n: int, t: int, variant: int = 0,
                policy: ClassificationPolicy = DEFAULT_POLICY,
                bigcrush_indices=(22, 23, 24, 25)) -> TestResult:
    if not 2 <= t <= 9:
        raise ParameterError(f"ClosePairs supports t in [2, 9], got {t}")
    if n < 2:
        raise ParameterError("ClosePairs needs n >= 2")
    pts = stream.uniforms(n * t).reshape(n, t)
    dist = min_torus_distance(pts)
    y, p = close_pairs_p_value(n, t, dist)
    return _result(TestId(Family.CLOSE_PAIRS, variant, "", tuple(bigcrush_indices)), y, p, n * t, policy)


# --------------------------------------------------------------------------
# RandomWalk

WALK_STATISTICS = ("H", "M", "J", "R", "C")


def walk_statistics(bits) -> dict[str, np.ndarray]:
    """Per-walk statistics for an (m, l) array of 0/1 steps (1 = up).

    H  number of up-steps
    M  maximum of S_0..S_l
    J  twice the number of odd times with S_i > 0
    R  number of returns to zero at times 2..l
    C  number of sign changes: even i in [2, l-2] with S_i = 0, S_{i-1} S_{i+1} < 0
    """
    bits = np.atleast_2d(np.asarray(bits, dtype=np.int8))
    length = bits.shape[1]
    if length < 2 or length % 2:
        raise ParameterError(f"walk length must be even and >= 2, got {length}")
    s = np.cumsum(2 * bits.astype(np.int16) - 1, axis=1, dtype=np.int16)
    out = {
        "H": bits.sum(axis=1, dtype=np.int64),
        "M": np.maximum(s.max(axis=1), 0).astype(np.int64),
        "J": 2 * (s[:, 0::2] > 0).sum(axis=1, dtype=np.int64),
        "R": (s[:, 1::2] == 0).sum(axis=1, dtype=np.int64),
    }
    if length >= 4:
        before = s[:, 0:length - 3:2]
        at = s[:, 1:length - 2:2]
        after = s[:, 2:length - 1:2]
        out["C"] = ((at == 0) & (before != after)).sum(axis=1, dtype=np.int64)
    else:
        out["C"] = np.zeros(bits.shape[0], dtype=np.int64)
    return out


@lru_cache(maxsize=16)
def walk_distributions(length: int) -> dict[str, list[float]]:
    """Exact laws of H, M, J, R, C for a symmetric walk of even ``length``.

    Entry v of each list is P(statistic = v).  Counts are exact integers over
    the 2**length equally likely walks.
    """
    if length < 2 or length % 2:
        raise ParameterError(f"walk length must be even and >= 2, got {length}")
    l, half = length, length // 2
    total = 1 << l
    comb = math.comb

    def prob(count, denom=total):
        return count / denom

    h = [prob(comb(l, v)) for v in range(l + 1)]

    # P(S_l = s) counts: s = 2*up - l
    def s_count(s):
        if (s + l) % 2 or abs(s) > l:
            return 0
        return comb(l, (s + l) // 2)

    tail_gt = [0] * (l + 2)  # tail_gt[y] = #walks with S_l > y
    acc = 0
    for y in range(l, -1, -1):
        tail_gt[y] = acc
        acc += s_count(y)
    ge = [total] + [s_count(y) + 2 * tail_gt[y] for y in range(1, l + 1)] + [0]
    m = [prob(ge[y] - ge[y + 1]) for y in range(l + 1)]

    j = [0.0] * (l + 1)
    for kk in range(half + 1):
        j[2 * kk] = prob(comb(2 * kk, kk) * comb(l - 2 * kk, half - kk))

    r = [prob(comb(l - v, half), 1 << (l - v)) for v in range(half + 1)]

    # sign changes up to epoch l-1: P(C = c) = 2 P(S_{l-1} = 2c + 1)
    c = [prob(2 * comb(l - 1, (2 * v + 1 + l - 1) // 2), 1 << (l - 1)) for v in range(half)]
    return {"H": h, "M": m, "J": j, "R": r, "C": c}


def chi_square_merged(counts, probs, min_expected: float = 5.0) -> tuple[float, int]:
    """Pearson chi-square after merging adjacent cells so each expects >= ``min_expected``.

    Returns (statistic, degrees of freedom).  Degrees of freedom is zero when
    everything collapses into one cell.
    """
    counts = np.asarray(counts, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    total = counts.sum()
    if total == 0:
        return 0.0, 0
    expected = probs * total
    groups_obs, groups_exp = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(counts, expected):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            groups_obs.append(acc_o)
            groups_exp.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if groups_obs:
            groups_obs[-1] += acc_o
            groups_exp[-1] += acc_e
        else:
            groups_obs.append(acc_o)
            groups_exp.append(acc_e)
    obs = np.array(groups_obs)
    exp = np.array(groups_exp)
    if len(obs) < 2:
        return 0.0, 0
    return float(np.sum((obs - exp) ** 2 / exp)), len(obs) - 1


def random_walk(stream, walk_length: int, walks: int, bit_offset: int = 0, variant: int = 0,
                policy: ClassificationPolicy = DEFAULT_POLICY,
                bigcrush_indices=(74, 75, 76, 77, 78, 79)) -> list[TestResult]:
    if walk_length < 2 or walk_length % 2:
        raise ParameterError(f"walk length must be even and >= 2, got {walk_length}")
    if walks < 1:
        raise ParameterError("RandomWalk needs at least one walk")
    samples = walks * walk_length
    bits = word_bits(stream.words(samples), bit_offset).reshape(walks, walk_length)
    stats = walk_statistics(bits)
    laws = walk_distributions(walk_length)
    results = []
    for name in WALK_STATISTICS:
        law = laws[name]
        counts = np.bincount(stats[name], minlength=len(law))[:len(law)]
        x, dof = chi_square_merged(counts, law)
        p = special.chi_square_sf(x, dof) if dof else 0.5
        tid = TestId(Family.RANDOM_WALK, variant, name, tuple(bigcrush_indices))
        results.append(_result(tid, x, p, samples, policy))
    return results


# --------------------------------------------------------------------------
# LinearComp

_JUMP_STATE_CAP = 96


@lru_cache(maxsize=16)
def jump_count_moments(length: int) -> tuple[float, float]:
    """Exact mean and variance of the number of complexity jumps in ``length`` random bits.

    The Berlekamp-Massey profile of a random sequence is a Markov chain in
    k = 2L - n: for k <= 0 a fair discrepancy bit either jumps to 1 - k (one
    complexity change) or moves to k - 1; for k > 0 it moves to k - 1.
    States below -_JUMP_STATE_CAP carry probability 2**-96 and are folded in.
    """
    cap = _JUMP_STATE_CAP
    size = 2 * cap + 3
    off = cap + 1  # array index of k = 0
    p = np.zeros(size)
    e1 = np.zeros(size)
    e2 = np.zeros(size)
    p[off] = 1.0
    nonpos = slice(1, off + 1)     # k in [-cap, 0]
    for _ in range(length):
        np_, n1, n2 = np.zeros(size), np.zeros(size), np.zeros(size)
        # k > 0: deterministic step down
        np_[off:size - 1] += p[off + 1:]
        n1[off:size - 1] += e1[off + 1:]
        n2[off:size - 1] += e2[off + 1:]
        # k <= 0, no discrepancy: k -> k-1 (clamped at the cap)
        pp, q1, q2 = 0.5 * p[nonpos], 0.5 * e1[nonpos], 0.5 * e2[nonpos]
        np_[0:off] += pp
        n1[0:off] += q1
        n2[0:off] += q2
        # k <= 0, discrepancy: jump to 1-k, count + 1
        ks = np.arange(-cap, 1)
        dest = (1 - ks) + off
        np_[dest] += pp
        n1[dest] += q1 + pp
        n2[dest] += q2 + 2 * q1 + pp
        # fold the overflow cell back into k = -cap
        np_[1] += np_[0]
        n1[1] += n1[0]
        n2[1] += n2[0]
        np_[0] = n1[0] = n2[0] = 0.0
        p, e1, e2 = np_, n1, n2
    mean = e1.sum()
    return float(mean), float(e2.sum() - mean * mean)


def jump_sizes_law(max_size: int) -> list[float]:
    """P(size = h) = 2**-h for h < max_size, remaining mass on max_size."""
    law = [0.0] + [2.0 ** -h for h in range(1, max_size)]
    law.append(2.0 ** -(max_size - 1))
    return law


def linear_comp(stream, l_bits: int, bit_offset: int = 0, variant: int = 0,
                policy: ClassificationPolicy = DEFAULT_POLICY,
                bigcrush_indices=()) -> list[TestResult]:
    """Jump-count (normal) and jump-size (chi-square) statistics of the BM profile.

    The jump-count p-value is the upper tail P(Z >= z): a generator whose
    complexity stops growing yields too few jumps and a p-value near 1.
    """
    if l_bits < 64:
        raise ParameterError(f"LinearComp needs at least 64 bits, got {l_bits}")
    bits = word_bits(stream.words(l_bits), bit_offset)
    _, jumps = special.linear_complexity_profile(bits.tolist())
    count = len(jumps)
    mean, var = jump_count_moments(l_bits)
    z = (count - mean) / math.sqrt(var)
    p_count = special.normal_sf(z)

    sizes = np.array([s for _, s in jumps], dtype=np.int64)
    max_size = max(2, int(math.floor(math.log2(max(count, 1) / 5.0))) + 1)
    if count >= 10:
        counts = np.bincount(np.minimum(sizes, max_size), minlength=max_size + 1)
        x, dof = chi_square_merged(counts, jump_sizes_law(max_size))
    else:
        x, dof = 0.0, 0
    # too few jumps to say anything about their sizes: neutral p-value
    p_size = special.chi_square_sf(x, dof) if dof else 0.5

    indices = tuple(bigcrush_indices)
    return [
        _result(TestId(Family.LINEAR_COMP, variant, "jumps", indices), z, p_count, l_bits, policy),
        _result(TestId(Family.LINEAR_COMP, variant, "sizes", indices), x, p_size, l_bits, policy),
    ]
