"""Division-free linear algebra over an arbitrary commutative ring.

Everything here only uses ``+``, ``-`` and ``*`` on the entries, so the
same code runs on ints, Fractions and truncated p-adic elements.
"""
from __future__ import annotations

from itertools import permutations
from typing import Sequence


def _zero_like(one):
    return one - one


def charpoly(M: Sequence[Sequence], one=1) -> list:
    """Coefficients ``[1, k_1, ..., k_m]`` with det(x I - M) = sum k_i x^(m-i).

    Berkowitz's algorithm.  The same list is the coefficient vector of
    det(I - T M) in increasing powers of T.
    """
    m = len(M)
    if m == 0:
        return [one]
    zero = _zero_like(one)
    vect = [one, -M[m - 1][m - 1]]
    for r in range(m - 2, -1, -1):
        size = m - r - 1
        R = [M[r][c] for c in range(r + 1, m)]
        C = [M[c][r] for c in range(r + 1, m)]
        A1 = [[M[i][j] for j in range(r + 1, m)] for i in range(r + 1, m)]
        toep = [one, -M[r][r]]
        col = C
        for _ in range(size):
            s = zero
            for x, y in zip(R, col):
                s = s + x * y
            toep.append(-s)
            col = [_dot(row, col, zero) for row in A1]
        new = []
        for i in range(size + 2):
            s = zero
            for j in range(min(i, size) + 1):
                s = s + toep[i - j] * vect[j]
            new.append(s)
        vect = new
    return vect


def _dot(u, v, zero):
    s = zero
    for x, y in zip(u, v):
        s = s + x * y
    return s


def det(M: Sequence[Sequence], one=1):
    m = len(M)
    if m == 0:
        return one
    if m == 1:
        return M[0][0]
    if m == 2:
        return M[0][0] * M[1][1] - M[0][1] * M[1][0]
    k = charpoly(M, one)[-1]
    return k if m % 2 == 0 else -k


def det_by_permutations(M: Sequence[Sequence], one=1):
    """Leibniz expansion; exponential, used as an independent check."""
    m = len(M)
    total = _zero_like(one)
    for perm in permutations(range(m)):
        term = one
        for i, j in enumerate(perm):
            term = term * M[i][j]
        if permutation_sign(perm) < 0:
            total = total - term
        else:
            total = total + term
    return total


def permutation_sign(perm: Sequence[int]) -> int:
    perm = list(perm)
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if not seen[i]:
            j, length = i, 0
            while not seen[j]:
                seen[j] = True
                j = perm[j]
                length += 1
            if length % 2 == 0:
                sign = -sign
    return sign


def minor(M, i: int, j: int):
    return [[x for c, x in enumerate(row) if c != j] for r, row in enumerate(M) if r != i]


def adjugate(M: Sequence[Sequence], one=1) -> list[list]:
    """Transpose of the cofactor matrix, via signed minors."""
    m = len(M)
    if m == 1:
        return [[one]]
    adj = [[None] * m for _ in range(m)]
    for i in range(m):
        for j in range(m):
            c = det(minor(M, j, i), one)
            adj[i][j] = c if (i + j) % 2 == 0 else -c
    return adj


def matmul(A, B, zero=0):
    n, k, m = len(A), len(B), len(B[0])
    return [[_dot(A[i], [B[t][j] for t in range(k)], zero) for j in range(m)] for i in range(n)]
