"""Slow, obviously-correct reference computations used only by the tests."""

from __future__ import annotations

import itertools
import math
from collections import Counter
from fractions import Fraction

M32 = 0xFFFFFFFF
M64 = 0xFFFFFFFFFFFFFFFF


# --------------------------------------------------------------------------
# generators, transcribed from the reference C sources


def mt19937_ref(seed: int, n: int) -> list[int]:
    mt = [0] * 624
    mt[0] = seed & M32
    for i in range(1, 624):
        mt[i] = (1812433253 * (mt[i - 1] ^ (mt[i - 1] >> 30)) + i) & M32
    idx = 624
    out = []
    for _ in range(n):
        if idx >= 624:
            for kk in range(624):
                y = (mt[kk] & 0x80000000) | (mt[(kk + 1) % 624] & 0x7FFFFFFF)
                mt[kk] = mt[(kk + 397) % 624] ^ (y >> 1) ^ (0x9908B0DF if y & 1 else 0)
            idx = 0
        y = mt[idx]
        idx += 1
        y ^= y >> 11
        y ^= (y << 7) & 0x9D2C5680
        y ^= (y << 15) & 0xEFC60000
        y ^= y >> 18
        out.append(y)
    return out


def pcg32_ref(initstate: int, initseq: int, n: int) -> list[int]:
    mult = 6364136223846793005
    inc = ((initseq << 1) | 1) & M64
    state = 0

    def step(s):
        return (s * mult + inc) & M64

    state = step(state)
    state = (state + initstate) & M64
    state = step(state)
    out = []
    for _ in range(n):
        old = state
        state = step(state)
        xorshifted = (((old >> 18) ^ old) >> 27) & M32
        rot = old >> 59
        out.append(((xorshifted >> rot) | (xorshifted << ((-rot) & 31))) & M32)
    return out


def philox_ref(counter, key, rounds: int = 10) -> list[int]:
    c = list(counter)
    k = list(key)
    for r in range(rounds):
        if r:
            k = [(k[0] + 0x9E3779B9) & M32, (k[1] + 0xBB67AE85) & M32]
        p0 = 0xD2511F53 * c[0]
        p1 = 0xCD9E8D57 * c[2]
        c = [((p1 >> 32) ^ c[1] ^ k[0]) & M32, p1 & M32,
             ((p0 >> 32) ^ c[3] ^ k[1]) & M32, p0 & M32]
    return c


# --------------------------------------------------------------------------
# test statistics by direct counting


def circular_tuples(cells, t):
    n = len(cells)
    return [tuple(cells[(i + j) % n] for j in range(t)) for i in range(n)]


def serial_over_brute(cells, d, t) -> float:
    n = len(cells)

    def psi2(tt):
        k = d ** tt
        counts = Counter(circular_tuples(cells, tt))
        return Fraction(k, n) * sum(c * c for c in counts.values()) - n

    return float(max(Fraction(0), psi2(t) - psi2(t - 1)))


def collision_brute(cells, t) -> int:
    seen, c = set(), 0
    for tup in circular_tuples(cells, t):
        if tup in seen:
            c += 1
        seen.add(tup)
    return c


def expected_collisions_exact(n, k) -> float:
    return float(n - k + k * (1 - Fraction(1, k)) ** n)


def birthday_brute(days) -> int:
    b = sorted(days)
    s = sorted(b[i + 1] - b[i] for i in range(len(b) - 1))
    return sum(1 for i in range(1, len(s)) if s[i] == s[i - 1])


def torus_min_distance_brute(points) -> float:
    best = math.inf
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            sq = 0.0
            for a, b in zip(points[i], points[j]):
                delta = abs(a - b)
                delta = min(delta, 1.0 - delta)
                sq += delta * delta
            best = min(best, sq)
    return math.sqrt(best)


def walk_stats_brute(steps) -> dict[str, int]:
    s = [0]
    for b in steps:
        s.append(s[-1] + (1 if b else -1))
    ell = len(steps)
    return {
        "H": sum(steps),
        "M": max(s),
        "J": 2 * sum(1 for i in range(1, ell + 1, 2) if s[i] > 0),
        "R": sum(1 for i in range(2, ell + 1, 2) if s[i] == 0),
        "C": sum(1 for i in range(2, ell - 1, 2) if s[i] == 0 and s[i - 1] * s[i + 1] < 0),
    }


def walk_laws_enumerated(ell) -> dict[str, list[Fraction]]:
    tallies = {name: Counter() for name in "HMJRC"}
    for steps in itertools.product((0, 1), repeat=ell):
        for name, v in walk_stats_brute(steps).items():
            tallies[name][v] += 1
    total = 2 ** ell
    return {name: {v: Fraction(c, total) for v, c in t.items()} for name, t in tallies.items()}


def chi_square_direct(obs, exp) -> float:
    return sum((o - e) ** 2 / e for o, e in zip(obs, exp))


# --------------------------------------------------------------------------
# linear complexity by exhaustive LFSR search


def lfsr_generates(bits, taps) -> bool:
    L = len(taps)
    return all(bits[i] == sum(taps[j] * bits[i - 1 - j] for j in range(L)) % 2
               for i in range(L, len(bits)))


def linear_complexity_brute(bits) -> int:
    if not any(bits):
        return 0
    for L in range(1, len(bits) + 1):
        for taps in itertools.product((0, 1), repeat=L):
            if lfsr_generates(bits, taps):
                return L
    return len(bits)


def profile_brute(bits) -> list[int]:
    return [linear_complexity_brute(bits[: i + 1]) for i in range(len(bits))]
