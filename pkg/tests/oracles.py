"""Slow, obviously-correct reference implementations used as test oracles."""

from fractions import Fraction


def ecdf_exact(y, t):
    return Fraction(sum(1 for v in y if v <= t), len(y))


def top_k_set(x, k):
    """The k largest positions; among values tied at the threshold the earliest win."""
    n = len(x)
    tau = sorted(x)[n - k]
    chosen = [i for i in range(n) if x[i] > tau]
    for i in range(n):
        if len(chosen) == k:
            break
        if x[i] == tau:
            chosen.append(i)
    return sorted(chosen)


def gamma_bruteforce(x, y, p, k, no_instantaneous=False, renormalize=False):
    """Double loop over extremes and window positions in exact rational arithmetic."""
    n = len(x)
    start = 1 if no_instantaneous else 0
    total = Fraction(0)
    used = 0
    for i in top_k_set(x, k):
        if i > n - 1 - p:
            continue
        best = Fraction(0)
        for j in range(start, p + 1):
            best = max(best, ecdf_exact(y, y[i + j]))
        total += best
        used += 1
    if renormalize:
        return None if used == 0 else total / used
    return total / k


def hill_bruteforce(x, k):
    import math

    s = sorted(x)
    n = len(s)
    base = s[n - k - 1]
    return sum(math.log(s[n - 1 - i] / base) for i in range(k)) / k
