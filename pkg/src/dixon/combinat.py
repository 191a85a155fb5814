"""Faa di Bruno partitions and derivatives of integer powers.

The r-th derivative of g(s)^n is

    sum over b_1 + 2 b_2 + ... + r b_r = r of
        r! n! / ((n-l)! b_1! ... b_r!) * g^(n-l) * prod_j (g^(j) / j!)^(b_j),

with l = b_1 + ... + b_r. Terms with l > n vanish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_ORDER = 40


@dataclass(frozen=True)
class FdBPartition:
    r: int
    b: tuple
    l: int
    weight: int  # r! / prod_j (b_j! (j!)^b_j)


def _multiplicity_vectors(r: int):
    # partitions of r as multiplicity vectors, largest part first
    def rec(remaining, largest):
        if remaining == 0:
            yield {}
            return
        for part in range(min(remaining, largest), 0, -1):
            for rest in rec(remaining - part, part):
                out = dict(rest)
                out[part] = out.get(part, 0) + 1
                yield out

    for mult in rec(r, r):
        yield tuple(mult.get(j, 0) for j in range(1, r + 1))


@lru_cache(maxsize=None)
def enumerate_partitions(r: int) -> tuple:
    """All solutions of b_1 + 2 b_2 + ... + r b_r = r, descending lexicographic in b."""
    if not 1 <= r <= MAX_ORDER:
        raise ValueError(f"partition order must be in [1, {MAX_ORDER}], got {r}")
    fact_r = math.factorial(r)
    parts = []
    for b in sorted(_multiplicity_vectors(r), reverse=True):
        denom = 1
        for j, bj in enumerate(b, start=1):
            denom *= math.factorial(bj) * math.factorial(j) ** bj
        parts.append(FdBPartition(r=r, b=b, l=sum(b), weight=fact_r // denom))
    return tuple(parts)


def falling_factorial(n: int, l: int) -> int:
    """n (n-1) ... (n-l+1); zero once l > n."""
    if l > n:
        return 0
    return math.perm(n, l)


def power_derivative(g_derivs, n: int, r: int):
    """r-th derivative of g^n from g_derivs = (g, g', ..., g^(r)), summed over partitions.

    Works with any numeric type supporting + * ** (float, complex, mpf).
    """
    if n < 1:
        raise ValueError("power must be a positive integer")
    if r < 0:
        raise ValueError("derivative order must be nonnegative")
    if len(g_derivs) < r + 1:
        raise ValueError(f"need {r + 1} derivative values, got {len(g_derivs)}")
    g = g_derivs[0]
    if r == 0:
        return g**n
    total = 0
    for part in enumerate_partitions(r):
        ff = falling_factorial(n, part.l)
        if ff == 0:
            continue
        term = part.weight * ff * g ** (n - part.l)
        for j, bj in enumerate(part.b, start=1):
            if bj:
                term = term * g_derivs[j] ** bj
        total = total + term
    return total


@lru_cache(maxsize=None)
def _partition_arrays(r: int):
    parts = enumerate_partitions(r)
    b = np.array([p.b for p in parts], dtype=np.int64)
    l = np.array([p.l for p in parts], dtype=np.int64)
    w = np.array([float(p.weight) for p in parts])
    return b, l, w


def bell_sums(g_derivs, r: int, *, exact_weights: bool = False):
    """Per-l sums S[l] = sum_{partitions with l parts} weight * prod_j g^(j)^(b_j).

    These are the n-independent pieces of the power rule, so
    d^r/ds^r g^n = sum_l n!/(n-l)! g^(n-l) S[l]. Index 0 is unused for r >= 1.
    With ``exact_weights`` the integer weights stay Python ints (use for mpf).
    """
    if r == 0:
        return [1]
    if exact_weights:
        out = [0] * (r + 1)
        for part in enumerate_partitions(r):
            term = part.weight
            for j, bj in enumerate(part.b, start=1):
                if bj:
                    term = term * g_derivs[j] ** bj
            out[part.l] = out[part.l] + term
        return out
    b, l, w = _partition_arrays(r)
    vals = np.asarray(g_derivs[1 : r + 1])
    vals = vals.astype(float if np.isrealobj(vals) else complex)
    prods = np.prod(vals[None, :] ** b, axis=1) * w
    out = np.zeros(r + 1, dtype=vals.dtype)
    np.add.at(out, l, prods)
    return out


def power_derivatives_from_bell(bell, g0, n: int):
    """Combine precomputed ``bell_sums`` for one order r into d^r g^n."""
    total = 0
    for l in range(1, len(bell)):
        if l > n:
            break
        total = total + math.perm(n, l) * g0 ** (n - l) * bell[l]
    if len(bell) == 1:
        return g0**n
    return total
