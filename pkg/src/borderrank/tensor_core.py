"""Dense k-way tensors and the multilinear operations on them.

Layout is row-major (last index fastest).  Two scalar backends are
supported: ``float64`` arrays, and ``object`` arrays holding
:class:`fractions.Fraction` for exact ("rational") work.  Integer input is
promoted to rational so that integer examples stay exact.

Modes are numbered from 0, like numpy axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _exact
from .errors import DimensionError

DEFAULT_TOL = 1e-10

FLOAT64 = "float64"
RATIONAL = "rational"


def _coerce_array(data, exact=None):
    if isinstance(data, DenseTensor):
        arr = data.array
    else:
        arr = np.asarray(data)
    if exact is None:
        exact = arr.dtype == object or np.issubdtype(arr.dtype, np.integer) or arr.dtype == bool
    if exact:
        return _exact.fraction_array(arr)
    if arr.dtype == object:
        return np.array([float(v) for v in arr.ravel()], dtype=np.float64).reshape(arr.shape)
    return np.asarray(arr, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class DenseTensor:
    """An order-k real array.

    ``array`` is either a float64 ndarray or an object ndarray of ``Fraction``.
    Use :func:`tensor` to build one from nested lists.
    """

    array: np.ndarray

    def __post_init__(self):
        a = self.array
        if not isinstance(a, np.ndarray):
            raise TypeError("DenseTensor wraps an ndarray; use tensor() to build one")
        if a.ndim < 1:
            raise DimensionError("tensor order must be at least 1")
        if any(d < 1 for d in a.shape):
            raise DimensionError(f"every dimension must be positive, got {a.shape}")
        if a.dtype == object:
            for v in a.flat:
                if not isinstance(v, Fraction):
                    raise TypeError("rational tensors must hold Fraction entries")
        elif a.dtype != np.float64:
            raise TypeError(f"unsupported dtype {a.dtype}")
        if a.flags.writeable:
            a = a.copy()
            a.setflags(write=False)
            object.__setattr__(self, "array", a)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.array.shape

    @property
    def order(self) -> int:
        return self.array.ndim

    @property
    def size(self) -> int:
        return self.array.size

    @property
    def scalar_kind(self) -> str:
        return RATIONAL if self.array.dtype == object else FLOAT64

    @property
    def is_exact(self) -> bool:
        return self.array.dtype == object

    @property
    def data(self) -> list:
        """Entries flattened in row-major order."""
        return self.array.ravel().tolist()

    def to_float(self) -> "DenseTensor":
        if not self.is_exact:
            return self
        return DenseTensor(_coerce_array(self.array, exact=False))

    def to_exact(self) -> "DenseTensor":
        if self.is_exact:
            return self
        return DenseTensor(_exact.fraction_array(self.array))

    def sqnorm(self):
        """Squared Frobenius norm; exact for rational tensors."""
        return frobenius(self, self)

    def norm(self) -> float:
        if self.is_exact:
            return math.sqrt(self.sqnorm())
        return float(np.linalg.norm(self.array.ravel()))

    def is_zero(self) -> bool:
        return not np.any(self.array != 0)

    def __getitem__(self, idx):
        return self.array[idx]

    def __add__(self, other):
        a, b = _align(self, other)
        return DenseTensor(a + b)

    def __sub__(self, other):
        a, b = _align(self, other)
        return DenseTensor(a - b)

    def __neg__(self):
        return DenseTensor(-self.array)

    def __mul__(self, scalar):
        if isinstance(scalar, DenseTensor):
            raise TypeError("use tensor_otimes or frobenius for tensor products")
        if self.is_exact and isinstance(scalar, (int, Fraction, np.integer)):
            return DenseTensor(self.array * Fraction(scalar))
        return DenseTensor(self.to_float().array * float(scalar))

    __rmul__ = __mul__

    def __repr__(self):
        return f"DenseTensor(shape={self.shape}, scalar={self.scalar_kind})"


def tensor(data, exact=None) -> DenseTensor:
    """Build a :class:`DenseTensor` from array-like data.

    ``exact=None`` keeps integer and Fraction input rational and everything
    else float64.
    """
    if isinstance(data, DenseTensor) and exact is None:
        return data
    return DenseTensor(_coerce_array(data, exact))


def from_flat(shape: Sequence[int], data: Sequence, exact=None) -> DenseTensor:
    shape = tuple(int(d) for d in shape)
    if len(data) != math.prod(shape):
        raise DimensionError(f"expected {math.prod(shape)} entries for shape {shape}, got {len(data)}")
    return tensor(np.array(list(data), dtype=object).reshape(shape), exact=exact)


def zeros(shape, exact=False) -> DenseTensor:
    if exact:
        return DenseTensor(_exact.zeros(tuple(shape)))
    return DenseTensor(np.zeros(tuple(shape)))


def as_tensor(A) -> DenseTensor:
    return A if isinstance(A, DenseTensor) else tensor(A)


def _align(A, B):
    A, B = as_tensor(A), as_tensor(B)
    if A.shape != B.shape:
        raise DimensionError(f"shape mismatch {A.shape} vs {B.shape}")
    if A.is_exact and B.is_exact:
        return A.array, B.array
    return A.to_float().array, B.to_float().array


def _matrix(M, exact):
    M = np.asarray(M)
    if M.ndim != 2:
        raise DimensionError("multilinear factors must be matrices")
    return _coerce_array(M, exact)


def _is_exact_matrix(M):
    M = np.asarray(M)
    return M.dtype == object or np.issubdtype(M.dtype, np.integer)


@dataclass(frozen=True, eq=False)
class MultilinearMap:
    """A tuple of matrices acting mode-wise on tensors."""

    factors: tuple

    def __init__(self, factors):
        factors = tuple(np.asarray(f) for f in factors)
        for f in factors:
            if f.ndim != 2:
                raise DimensionError("multilinear factors must be matrices")
        object.__setattr__(self, "factors", factors)

    @property
    def order(self):
        return len(self.factors)

    @property
    def is_exact(self):
        return all(_is_exact_matrix(f) for f in self.factors)

    @property
    def invertible(self) -> bool:
        for f in self.factors:
            if f.shape[0] != f.shape[1]:
                return False
            if _is_exact_matrix(f):
                if _exact.det(f) == 0:
                    return False
            elif matrix_rank_tol(f) < f.shape[0]:
                return False
        return True

    def compose(self, inner: "MultilinearMap") -> "MultilinearMap":
        """``self o inner``: apply ``inner`` first, then ``self``."""
        if self.order != inner.order:
            raise DimensionError("cannot compose maps of different orders")
        exact = self.is_exact and inner.is_exact
        return MultilinearMap(
            [_matrix(a, exact) @ _matrix(b, exact) for a, b in zip(self.factors, inner.factors)]
        )

    def inverse(self) -> "MultilinearMap":
        if self.is_exact:
            return MultilinearMap([_exact.inv(f) for f in self.factors])
        return MultilinearMap([np.linalg.inv(np.asarray(f, dtype=float)) for f in self.factors])

    def determinants(self):
        if self.is_exact:
            return [_exact.det(f) for f in self.factors]
        return [float(np.linalg.det(np.asarray(f, dtype=float))) for f in self.factors]

    def scale(self) -> float:
        """Product of factor spectral norms; bounds the map's operator norm."""
        return float(np.prod([np.linalg.norm(np.asarray(f, dtype=float), 2) for f in self.factors]))

    def to_lists(self):
        return [[[_scalar_json(v) for v in row] for row in f.tolist()] for f in self.factors]

    @classmethod
    def identity(cls, shape, exact=True):
        if exact:
            return cls([_exact.identity(d) for d in shape])
        return cls([np.eye(d) for d in shape])


def _scalar_json(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else str(v.numerator)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return float(v)


class MlRank(tuple):
    """Multilinear rank ``(r_1, ..., r_k)``; compares equal to a plain tuple."""

    def __new__(cls, ranks):
        return super().__new__(cls, (int(r) for r in ranks))

    def dominated_by(self, other) -> bool:
        return len(self) == len(other) and all(a <= b for a, b in zip(self, other))

    def __repr__(self):
        return f"MlRank{tuple(self)}"


@dataclass(frozen=True, eq=False)
class Projector:
    """Per-mode orthogonal projections ``(pi_1, ..., pi_k)``."""

    matrices: tuple

    def as_map(self) -> MultilinearMap:
        return MultilinearMap(self.matrices)

    def traces(self):
        return [sum(np.diag(P)) for P in self.matrices]

    def check(self, tol=1e-10) -> bool:
        """Symmetric and idempotent (exactly for rational matrices)."""
        for P in self.matrices:
            if P.dtype == object:
                if not (np.all(P == P.T) and np.all(P.dot(P) == P)):
                    return False
            else:
                s = max(1.0, np.linalg.norm(P))
                if np.linalg.norm(P - P.T) > tol * s or np.linalg.norm(P @ P - P) > tol * s:
                    return False
        return True


# ---------------------------------------------------------------------------
# multilinear multiplication and composition
# ---------------------------------------------------------------------------

def mode_product(A, M, mode):
    """Multiply tensor ``A`` by matrix ``M`` along one mode."""
    A = as_tensor(A)
    M = np.asarray(M)
    if not 0 <= mode < A.order:
        raise DimensionError(f"mode {mode} out of range for order {A.order}")
    if M.ndim != 2 or M.shape[1] != A.shape[mode]:
        raise DimensionError(
            f"factor for mode {mode} has shape {M.shape}, tensor dimension is {A.shape[mode]}"
        )
    exact = A.is_exact and _is_exact_matrix(M)
    arr = A.array if exact else A.to_float().array
    out = np.tensordot(_matrix(M, exact), arr, axes=([1], [mode]))
    return DenseTensor(np.moveaxis(out, 0, mode))


def mmm(A, M) -> DenseTensor:
    """Multilinear multiplication ``(L_1, ..., L_k) . A``.

    Entry ``(p, q, r)`` of the result is ``sum L1[p,i] L2[q,j] L3[r,k] A[i,j,k]``
    (and likewise for other orders).  Accepts a :class:`MultilinearMap` or a
    plain sequence of matrices.
    """
    A = as_tensor(A)
    factors = M.factors if isinstance(M, MultilinearMap) else tuple(M)
    if len(factors) != A.order:
        raise DimensionError(f"map has {len(factors)} factors, tensor has order {A.order}")
    out = A
    for mode, L in enumerate(factors):
        out = mode_product(out, L, mode)
    return out


def outer_product(vectors) -> DenseTensor:
    """``x_1 o x_2 o ... o x_k`` for a non-empty list of non-empty vectors."""
    vectors = list(vectors)
    if not vectors:
        raise DimensionError("outer_product needs at least one vector")
    arrs = [np.asarray(v) for v in vectors]
    if any(a.ndim != 1 or a.size == 0 for a in arrs):
        raise DimensionError("outer_product needs non-empty 1-d vectors")
    exact = all(a.dtype == object or np.issubdtype(a.dtype, np.integer) for a in arrs)
    arrs = [_coerce_array(a, exact) for a in arrs]
    out = arrs[0]
    for a in arrs[1:]:
        out = np.multiply.outer(out, a)
    return DenseTensor(out)


def tensor_otimes(A, B) -> DenseTensor:
    """Tensor product of an order-k and an order-l tensor (order k + l)."""
    a, b = as_tensor(A), as_tensor(B)
    if not (a.is_exact and b.is_exact):
        a, b = a.to_float(), b.to_float()
    return DenseTensor(np.multiply.outer(a.array, b.array))


def direct_sum(A, B) -> DenseTensor:
    """Block-diagonal placement: ``A`` in the leading block, ``B`` in the trailing one."""
    a, b = as_tensor(A), as_tensor(B)
    if a.order != b.order:
        raise DimensionError(f"direct sum needs equal orders, got {a.order} and {b.order}")
    exact = a.is_exact and b.is_exact
    if not exact:
        a, b = a.to_float(), b.to_float()
    shape = tuple(x + y for x, y in zip(a.shape, b.shape))
    out = _exact.zeros(shape) if exact else np.zeros(shape)
    out[tuple(slice(0, d) for d in a.shape)] = a.array
    out[tuple(slice(d, None) for d in a.shape)] = b.array
    return DenseTensor(out)


def permute_modes(A, perm) -> DenseTensor:
    """Reorder modes: output mode ``m`` is input mode ``perm[m]``."""
    A = as_tensor(A)
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(A.order)):
        raise DimensionError(f"{perm} is not a permutation of 0..{A.order - 1}")
    return DenseTensor(np.transpose(A.array, perm))


def frobenius(A, B):
    """Frobenius inner product ``sum a_i b_i``."""
    a, b = _align(A, B)
    if a.dtype == object:
        return sum((x * y for x, y in zip(a.flat, b.flat)), Fraction(0))
    return float(np.dot(a.ravel(), b.ravel()))


def flatten(A, mode) -> np.ndarray:
    """Mode-``mode`` unfolding: ``d_mode x prod(other dims)``.

    Column ``c`` is the fiber whose remaining indices, read in increasing mode
    order, have row-major position ``c``.
    """
    A = as_tensor(A)
    if not 0 <= mode < A.order:
        raise DimensionError(f"mode {mode} out of range for order {A.order}")
    return np.moveaxis(A.array, mode, 0).reshape(A.shape[mode], -1)


def matrix_rank_tol(M, tol=DEFAULT_TOL) -> int:
    """Numerical rank: singular values above ``tol * s_max * max(m, n)``.

    Object (Fraction) and integer matrices get their exact rank instead and
    ``tol`` is ignored.
    """
    if tol < 0:
        raise ValueError("tol must be non-negative")
    M = np.asarray(M)
    if M.size == 0:
        return 0
    if M.dtype == object or np.issubdtype(M.dtype, np.integer):
        return _exact.rank(M)
    s = np.linalg.svd(M.astype(float), compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0] * max(M.shape)))


def mrank(A, tol=DEFAULT_TOL) -> MlRank:
    """Multilinear rank: ranks of all mode unfoldings."""
    A = as_tensor(A)
    return MlRank(matrix_rank_tol(flatten(A, m), tol) for m in range(A.order))


def _float_support_basis(A, mode, tol):
    F = flatten(A, mode).astype(float)
    r = matrix_rank_tol(F, tol)
    U, _, _ = np.linalg.svd(F, full_matrices=False)
    return U[:, :r]


def support_bases(A, tol=DEFAULT_TOL):
    """Per-mode bases of the supporting subspaces.

    Float tensors get orthonormal bases (leading left singular vectors);
    rational tensors get exact bases made of independent fibers.
    """
    A = as_tensor(A)
    if A.is_exact:
        return [_exact.column_basis(flatten(A, m)) for m in range(A.order)]
    return [_float_support_basis(A, m, tol) for m in range(A.order)]


def _projector_from_basis(X):
    if X.shape[1] == 0:
        return _exact.zeros((X.shape[0],) * 2) if X.dtype == object else np.zeros((X.shape[0],) * 2)
    if X.dtype == object:
        G = _exact.inv(X.T.dot(X))
        return X.dot(G).dot(X.T)
    return X @ np.linalg.solve(X.T @ X, X.T)


def supporting_projector(A, tol=DEFAULT_TOL, method="svd") -> Projector:
    """Orthogonal projectors onto the supporting subspaces of ``A``.

    ``method="svd"`` (default) uses singular vectors.  ``method="fibers"``
    picks independent fibers ``X`` and forms ``X (X^T X)^{-1} X^T``; this is
    what rational tensors always use.
    """
    A = as_tensor(A)
    if A.is_exact:
        return Projector(tuple(_projector_from_basis(X) for X in support_bases(A)))
    mats = []
    for m in range(A.order):
        if method == "svd":
            U = _float_support_basis(A, m, tol)
            mats.append(U @ U.T)
        elif method == "fibers":
            F = flatten(A, m).astype(float)
            r = matrix_rank_tol(F, tol)
            # pivoted QR picks r well-conditioned fibers
            from scipy.linalg import qr

            _, _, piv = qr(F, pivoting=True, mode="economic")
            mats.append(_projector_from_basis(F[:, np.sort(piv[:r])]))
        else:
            raise ValueError(f"unknown method {method!r}")
    return Projector(tuple(mats))


def project_onto_support(B, P: Projector) -> DenseTensor:
    B = as_tensor(B)
    if len(P.matrices) != B.order or any(
        M.shape != (d, d) for M, d in zip(P.matrices, B.shape)
    ):
        raise DimensionError("projector does not match tensor shape")
    return mmm(B, P.as_map())


def embed_pad(A, new_shape) -> DenseTensor:
    """Place ``A`` in the leading block of a zero tensor of ``new_shape``."""
    A = as_tensor(A)
    new_shape = tuple(int(d) for d in new_shape)
    if len(new_shape) != A.order:
        raise DimensionError("embedding must preserve the order")
    if any(n < d for n, d in zip(new_shape, A.shape)):
        raise DimensionError(f"cannot embed shape {A.shape} into smaller {new_shape}")
    out = _exact.zeros(new_shape) if A.is_exact else np.zeros(new_shape)
    out[tuple(slice(0, d) for d in A.shape)] = A.array
    return DenseTensor(out)


def leading_block(A, shape) -> DenseTensor:
    """Inverse of :func:`embed_pad`: the leading ``shape`` block of ``A``."""
    A = as_tensor(A)
    return DenseTensor(A.array[tuple(slice(0, int(d)) for d in shape)].copy())
