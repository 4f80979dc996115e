"""Distribution tails for the battery's statistics, and Berlekamp-Massey."""

from __future__ import annotations

import math

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 100_000


def _check_p(p: float) -> float:
    if math.isnan(p):
        raise ArithmeticError("p-value evaluated to NaN")
    return min(1.0, max(0.0, p))


def _gamma_log_prefactor(a: float, x: float) -> float:
    return -x + a * math.log(x) - math.lgamma(a)


def _gamma_series(a: float, x: float) -> float:
    # Regularised lower incomplete gamma P(a, x), valid for x < a + 1.
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise ArithmeticError(f"gamma series did not converge (a={a}, x={x})")
    return total * math.exp(_gamma_log_prefactor(a, x))


def _gamma_cont_frac(a: float, x: float) -> float:
    # Regularised upper incomplete gamma Q(a, x) by modified Lentz, x >= a + 1.
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise ArithmeticError(f"gamma continued fraction did not converge (a={a}, x={x})")
    return h * math.exp(_gamma_log_prefactor(a, x))


def gamma_p(a: float, x: float) -> float:
    """Regularised lower incomplete gamma P(a, x)."""
    if a <= 0 or x < 0:
        raise ValueError("gamma_p needs a > 0 and x >= 0")
    if x == 0:
        return 0.0
    if x < a + 1.0:
        return _gamma_series(a, x)
    return 1.0 - _gamma_cont_frac(a, x)


def gamma_q(a: float, x: float) -> float:
    """Regularised upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    if a <= 0 or x < 0:
        raise ValueError("gamma_q needs a > 0 and x >= 0")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_cont_frac(a, x)


def chi_square_sf(x: float, dof: int) -> float:
    """Upper tail P(X >= x) of a chi-square variable with ``dof`` degrees of freedom."""
    if dof < 1 or int(dof) != dof:
        raise ValueError(f"degrees of freedom must be a positive integer, got {dof}")
    if not x >= 0:
        raise ValueError(f"chi-square statistic must be >= 0, got {x}")
    if math.isinf(x):
        return 0.0
    return _check_p(gamma_q(dof / 2.0, x / 2.0))


def normal_cdf(z: float) -> float:
    if math.isnan(z):
        raise ValueError("normal_cdf of NaN")
    return _check_p(0.5 * math.erfc(-z / math.sqrt(2.0)))


def normal_sf(z: float) -> float:
    """1 - normal_cdf(z), without cancellation in the upper tail."""
    return normal_cdf(-z)


def _sum_down(lam: float, k: int) -> float:
    # sum_{j<k} pmf(j)/pmf(k)
    total, w, j = 0.0, 1.0, k
    while j > 0:
        w *= j / lam
        j -= 1
        total += w
        if j < lam and w < total * 1e-18:
            break
    return total


def _sum_up(lam: float, k: int) -> float:
    # sum_{j>k} pmf(j)/pmf(k)
    total, w, j = 0.0, 1.0, k
    while True:
        j += 1
        w *= lam / j
        total += w
        if j > lam and w < total * 1e-18:
            return total


def poisson_tail(lam: float, k: int) -> tuple[float, float]:
    """Return (P(X <= k), P(X >= k)) for X ~ Poisson(lam).

    Terms come from ratio recurrences outward from ``k``.  Away from the far
    tails both sides are summed and normalised by their joint total, so
    ``left + right - pmf(k)`` is 1 up to rounding even where ``lgamma`` loses
    digits at large ``lam``.
    """
    if not lam > 0 or math.isinf(lam):
        raise ValueError(f"Poisson mean must be positive and finite, got {lam}")
    if k < 0:
        return 0.0, 1.0
    k = int(k)
    log_pk = -lam + k * math.log(lam) - math.lgamma(k + 1)
    if log_pk < -690.0:
        # pmf(k) is below ~1e-300: the tail away from the mode is tiny and
        # the ratio sums toward the mode would overflow.
        if k > lam:
            right = math.exp(log_pk + math.log1p(_sum_up(lam, k)))
            return _check_p(1.0 - right), _check_p(right)
        left = math.exp(log_pk + math.log1p(_sum_down(lam, k)))
        return _check_p(left), _check_p(1.0 - left)
    below = _sum_down(lam, k)
    above = _sum_up(lam, k)
    total = below + 1.0 + above
    return _check_p((below + 1.0) / total), _check_p((above + 1.0) / total)


def poisson_pmf(lam: float, k: int) -> float:
    if k < 0:
        return 0.0
    return math.exp(-lam + k * math.log(lam) - math.lgamma(k + 1))


def discrete_p_value(p_left: float, p_right: float) -> float:
    """Single p-value for a discrete statistic, following TestU01's ``gofw_pDisc``.

    The right tail is reported when it is the smaller one; otherwise the
    complement of the left tail, capped at 0.5 when neither tail is small.
    """
    if p_right < p_left:
        return p_right
    if p_left > 0.5:
        return 0.5
    return 1.0 - p_left


# --------------------------------------------------------------------------
# Berlekamp-Massey over GF(2)


def _as_bit_list(bits) -> list[int]:
    out = [int(b) for b in bits]
    if any(b not in (0, 1) for b in out):
        raise ValueError("bit sequence must contain only 0 and 1")
    return out


def linear_complexity_profile(bits) -> tuple[int, list[tuple[int, int]]]:
    """Run Berlekamp-Massey and record every complexity change.

    Returns the final linear complexity and a list of ``(position, size)``
    jumps, where ``position`` is the 0-based index of the bit that caused
    the jump and ``size`` is the increase in complexity.

    Polynomials are Python ints (bit i = coefficient of x**i); ``window``
    holds the bits seen so far with the newest at bit 0, so the discrepancy
    is the parity of ``conn & window``.
    """
    seq = _as_bit_list(bits)
    if not seq:
        raise ValueError("berlekamp_massey needs a nonempty bit sequence")
    conn, prev = 1, 1
    length, last = 0, -1
    window = 0
    jumps = []
    for n, bit in enumerate(seq):
        window = (window << 1) | bit
        if (conn & window).bit_count() & 1:
            old = conn
            conn ^= prev << (n - last)
            if 2 * length <= n:
                new_length = n + 1 - length
                jumps.append((n, new_length - length))
                length = new_length
                prev = old
                last = n
    return length, jumps


def berlekamp_massey(bits) -> int:
    """Length of the shortest LFSR that generates ``bits``."""
    return linear_complexity_profile(bits)[0]
