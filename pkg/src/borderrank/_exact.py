"""Exact rational linear algebra on ``object`` arrays of ``Fraction``."""

from fractions import Fraction

import numpy as np


def is_exact(a):
    return isinstance(a, np.ndarray) and a.dtype == object


def to_fraction(x):
    """Convert a scalar to ``Fraction``.

    Floats are converted by their exact binary value, strings may be
    ``"p/q"`` or decimal literals.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, (float, np.floating)):
        if not np.isfinite(x):
            raise ValueError(f"cannot represent {x!r} exactly")
        return Fraction(float(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


def fraction_array(a):
    arr = np.asarray(a, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = to_fraction(v)
    return out


def zeros(shape):
    out = np.empty(shape, dtype=object)
    out.fill(Fraction(0))
    return out


def identity(n):
    out = zeros((n, n))
    for i in range(n):
        out[i, i] = Fraction(1)
    return out


def rank(M):
    """Exact rank by fraction-free (Bareiss) elimination."""
    A = np.asarray(M, dtype=object)
    if A.ndim != 2 or A.size == 0:
        return 0
    # clear denominators row by row so elimination stays in the integers
    rows = []
    for row in A.tolist():
        fr = [to_fraction(v) for v in row]
        den = 1
        for v in fr:
            den = den * v.denominator // _gcd(den, v.denominator)
        rows.append([int(v * den) for v in fr])
    m, n = len(rows), len(rows[0])
    r = 0
    prev = 1
    for c in range(n):
        piv = next((i for i in range(r, m) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(r + 1, m):
            for j in range(c + 1, n):
                rows[i][j] = (rows[i][j] * rows[r][c] - rows[i][c] * rows[r][j]) // prev
            rows[i][c] = 0
        prev = rows[r][c]
        r += 1
        if r == m:
            break
    return r


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return abs(a)


def det(M):
    M = fraction_array(M)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError("det needs a square matrix")
    A = M.copy()
    d = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if A[i, c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            A[[c, piv]] = A[[piv, c]]
            d = -d
        d *= A[c, c]
        for i in range(c + 1, n):
            f = A[i, c] / A[c, c]
            if f:
                A[i, c:] = A[i, c:] - f * A[c, c:]
    return d


def inv(M):
    """Gauss-Jordan inverse; raises ``ZeroDivisionError`` if singular."""
    M = fraction_array(M)
    n = M.shape[0]
    A = np.concatenate([M, identity(n)], axis=1)
    for c in range(n):
        piv = next((i for i in range(c, n) if A[i, c] != 0), None)
        if piv is None:
            raise ZeroDivisionError("matrix is singular")
        if piv != c:
            A[[c, piv]] = A[[piv, c]]
        A[c] = A[c] / A[c, c]
        for i in range(n):
            if i != c and A[i, c] != 0:
                A[i] = A[i] - A[i, c] * A[c]
    return A[:, n:]


def independent_columns(M):
    """Indices of a maximal set of linearly independent columns (greedy)."""
    M = fraction_array(M)
    chosen = []
    for j in range(M.shape[1]):
        trial = chosen + [j]
        if rank(M[:, trial]) == len(trial):
            chosen = trial
    return chosen


def column_basis(M):
    """Columns of ``M`` forming a basis of its column space."""
    M = fraction_array(M)
    return M[:, independent_columns(M)]
