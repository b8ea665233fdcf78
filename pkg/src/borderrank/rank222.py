"""Hyperdeterminant, orbit classification and canonical reduction of 2x2x2 tensors.

A 2x2x2 tensor is viewed as two 2x2 slabs ``[A1 | A2]`` with ``A1 = A[0]``
and ``A2 = A[1]``; inside a slab the row index is mode 1 and the column
index is mode 2.  Under ``GL2 x GL2 x GL2`` there are exactly eight orbits,
told apart by the sign of the hyperdeterminant together with the
multilinear rank.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import _exact
from .errors import DimensionError, ToleranceError
from .tensor_core import (
    DEFAULT_TOL,
    DenseTensor,
    MlRank,
    MultilinearMap,
    as_tensor,
    embed_pad,
    flatten,
    mmm,
    mrank,
    outer_product,
    support_bases,
    tensor,
)

DELTA_EPS = 1e-10


class MultilinearRankError(ValueError):
    """The tensor's multilinear rank exceeds what the operation supports."""


class OrbitClass(enum.Enum):
    D0 = "D0"
    D1 = "D1"
    D2 = "D2"
    D2p = "D2'"
    D2pp = "D2''"
    G2 = "G2"
    D3 = "D3"
    G3 = "G3"

    @property
    def label(self):
        return self.value

    @classmethod
    def parse(cls, name):
        key = str(name).strip().replace("′", "'").replace("″", "''")
        aliases = {"D2P": "D2'", "D2PP": "D2''", "D2PRIME": "D2'", "D2DPRIME": "D2''"}
        key = aliases.get(key.upper(), key)
        for c in cls:
            if c.value.upper() == key.upper():
                return c
        raise ValueError(f"unknown orbit class {name!r}")

    @property
    def info(self) -> "_ClassInfo":
        return _TABLE[self]

    def canonical(self) -> DenseTensor:
        return tensor(np.array(self.info.slabs, dtype=int))

    @property
    def sign_delta(self) -> int:
        return self.info.sign

    @property
    def mlrank(self) -> MlRank:
        return MlRank(self.info.mlrank)

    @property
    def outer_rank(self) -> int:
        return self.info.outer_rank

    @property
    def border_rank(self) -> int:
        return self.info.border_rank


@dataclass(frozen=True)
class _ClassInfo:
    slabs: tuple
    sign: int
    mlrank: tuple
    outer_rank: int
    border_rank: int
    # rank-1 terms (u, v, w) over e1/e2 whose sum is the canonical array
    terms: tuple


_e1, _e2 = (1, 0), (0, 1)

_TABLE = {
    OrbitClass.D0: _ClassInfo((((0, 0), (0, 0)), ((0, 0), (0, 0))), 0, (0, 0, 0), 0, 0, ()),
    OrbitClass.D1: _ClassInfo(
        (((1, 0), (0, 0)), ((0, 0), (0, 0))), 0, (1, 1, 1), 1, 1, ((_e1, _e1, _e1),)
    ),
    OrbitClass.D2: _ClassInfo(
        (((1, 0), (0, 1)), ((0, 0), (0, 0))), 0, (1, 2, 2), 2, 2,
        ((_e1, _e1, _e1), (_e1, _e2, _e2)),
    ),
    OrbitClass.D2p: _ClassInfo(
        (((1, 0), (0, 0)), ((0, 1), (0, 0))), 0, (2, 1, 2), 2, 2,
        ((_e1, _e1, _e1), (_e2, _e1, _e2)),
    ),
    OrbitClass.D2pp: _ClassInfo(
        (((1, 0), (0, 0)), ((0, 0), (1, 0))), 0, (2, 2, 1), 2, 2,
        ((_e1, _e1, _e1), (_e2, _e2, _e1)),
    ),
    OrbitClass.G2: _ClassInfo(
        (((1, 0), (0, 0)), ((0, 0), (0, 1))), 1, (2, 2, 2), 2, 2,
        ((_e1, _e1, _e1), (_e2, _e2, _e2)),
    ),
    OrbitClass.D3: _ClassInfo(
        (((1, 0), (0, 0)), ((0, 1), (1, 0))), 0, (2, 2, 2), 3, 2,
        ((_e1, _e1, _e1), (_e2, _e1, _e2), (_e2, _e2, _e1)),
    ),
    OrbitClass.G3: _ClassInfo(
        (((1, 0), (0, 1)), ((0, -1), (1, 0))), -1, (2, 2, 2), 3, 3,
        (((1, 1), _e2, _e2), ((1, -1), _e1, _e1), (_e2, (1, 1), (1, -1))),
    ),
}

_BY_MLRANK = {
    (1, 1, 1): OrbitClass.D1,
    (1, 2, 2): OrbitClass.D2,
    (2, 1, 2): OrbitClass.D2p,
    (2, 2, 1): OrbitClass.D2pp,
}


def canonical_terms(cls: OrbitClass):
    """Rank-1 terms ``(u, v, w)`` (integer vectors) summing to the canonical array."""
    return [tuple(np.array(v, dtype=int) for v in t) for t in cls.info.terms]


# ---------------------------------------------------------------------------
# polynomial invariants
# ---------------------------------------------------------------------------

def _check222(A):
    A = as_tensor(A)
    if A.shape != (2, 2, 2):
        raise DimensionError(f"expected a 2x2x2 tensor, got shape {A.shape}")
    return A


def delta(A):
    """Cayley hyperdeterminant of a 2x2x2 tensor (exact for rational input)."""
    A = _check222(A)
    a = A.array
    a111, a112, a121, a122 = a[0, 0, 0], a[0, 0, 1], a[0, 1, 0], a[0, 1, 1]
    a211, a212, a221, a222 = a[1, 0, 0], a[1, 0, 1], a[1, 1, 0], a[1, 1, 1]
    val = (
        (a111 * a222) ** 2 + (a112 * a221) ** 2 + (a121 * a212) ** 2 + (a122 * a211) ** 2
        - 2 * (
            a111 * a112 * a221 * a222
            + a111 * a121 * a212 * a222
            + a111 * a122 * a211 * a222
            + a112 * a121 * a212 * a221
            + a112 * a122 * a221 * a211
            + a121 * a122 * a212 * a211
        )
        + 4 * (a111 * a122 * a212 * a221 + a112 * a121 * a211 * a222)
    )
    return val if A.is_exact else float(val)


def _det2(M):
    return M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]


def delta_from_slabs(A):
    """Discriminant of the slab pencil ``det(s A1 + t A2)``.

    Algebraically identical to :func:`delta`; kept as an independent route.
    """
    A = _check222(A)
    A1, A2 = A.array[0], A.array[1]
    mid = _det2(A1 + A2) - _det2(A1 - A2)
    half = mid / 2 if not A.is_exact else Fraction(mid) / 2
    val = half**2 - 4 * _det2(A1) * _det2(A2)
    return val if A.is_exact else float(val)


def is_zero_delta(value, A, eps=DELTA_EPS) -> bool:
    """Zero test for a degree-4 invariant, scaled by ``||A||^4`` in float mode."""
    A = as_tensor(A)
    if A.is_exact and isinstance(value, Fraction):
        return value == 0
    return abs(value) <= eps * A.norm() ** 4


def sign_delta(A, eps=DELTA_EPS) -> int:
    A = _check222(A)
    d = delta(A)
    if is_zero_delta(d, A, eps):
        return 0
    return 1 if d > 0 else -1


# The six 2x2 minors of each mode unfolding, as index pairs (lhs, rhs) with
# lhs_0 * lhs_1 == rhs_0 * rhs_1 when the mode rank drops to one.  Indices
# are 0-based (i, j, k).
MINOR_EQUATIONS = {
    0: [
        (((0, 0, 0), (1, 0, 1)), ((1, 0, 0), (0, 0, 1))),
        (((0, 0, 0), (1, 1, 0)), ((1, 0, 0), (0, 1, 0))),
        (((0, 0, 0), (1, 1, 1)), ((1, 0, 0), (0, 1, 1))),
        (((0, 0, 1), (1, 1, 0)), ((1, 0, 1), (0, 1, 0))),
        (((0, 0, 1), (1, 1, 1)), ((1, 0, 1), (0, 1, 1))),
        (((0, 1, 0), (1, 1, 1)), ((1, 1, 0), (0, 1, 1))),
    ],
    1: [
        (((0, 0, 0), (0, 1, 1)), ((0, 1, 0), (0, 0, 1))),
        (((0, 0, 0), (1, 1, 0)), ((0, 1, 0), (1, 0, 0))),
        (((0, 0, 0), (1, 1, 1)), ((0, 1, 0), (1, 0, 1))),
        (((0, 0, 1), (1, 1, 0)), ((0, 1, 1), (1, 0, 0))),
        (((0, 0, 1), (1, 1, 1)), ((0, 1, 1), (1, 0, 1))),
        (((1, 0, 0), (1, 1, 1)), ((1, 1, 0), (1, 0, 1))),
    ],
    2: [
        (((0, 0, 0), (0, 1, 1)), ((0, 0, 1), (0, 1, 0))),
        (((0, 0, 0), (1, 0, 1)), ((0, 0, 1), (1, 0, 0))),
        (((0, 0, 0), (1, 1, 1)), ((0, 0, 1), (1, 1, 0))),
        (((0, 1, 0), (1, 0, 1)), ((0, 1, 1), (1, 0, 0))),
        (((0, 1, 0), (1, 1, 1)), ((0, 1, 1), (1, 1, 0))),
        (((1, 0, 0), (1, 1, 1)), ((1, 0, 1), (1, 1, 0))),
    ],
}


def minor_values(A, mode):
    """``lhs - rhs`` for the six minor equations of ``mode``."""
    A = _check222(A)
    if mode not in MINOR_EQUATIONS:
        raise DimensionError(f"mode must be 0, 1 or 2, got {mode}")
    a = A.array
    return [a[p] * a[q] - a[r] * a[s] for (p, q), (r, s) in MINOR_EQUATIONS[mode]]


def minors_vanish(A, mode, tol=DEFAULT_TOL) -> bool:
    """True iff all six minors of the mode unfolding vanish, i.e. ``r_mode <= 1``.

    Exact for rational input; float input uses ``|m| <= tol * ||A||^2``.
    """
    A = _check222(A)
    vals = minor_values(A, mode)
    if A.is_exact:
        return all(v == 0 for v in vals)
    bound = tol * A.norm() ** 2
    return all(abs(v) <= bound for v in vals)


def mrank_by_minors(A, tol=DEFAULT_TOL) -> MlRank:
    A = _check222(A)
    if A.is_zero():
        return MlRank((0, 0, 0))
    return MlRank(1 if minors_vanish(A, m, tol) else 2 for m in range(3))


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class OrbitReport:
    cls: OrbitClass
    delta: object
    mlrank: MlRank
    outer_rank: int
    border_rank: int
    witness: Optional[MultilinearMap] = None
    witness_exact: Optional[bool] = None

    @property
    def classified(self):
        return True

    def to_json(self) -> dict:
        out = {
            "class": self.cls.label,
            "delta": _json_scalar(self.delta),
            "sign_delta": self.cls.sign_delta,
            "mlrank": list(self.mlrank),
            "outer_rank": self.outer_rank,
            "border_rank": self.border_rank,
            "witness": self.witness.to_lists() if self.witness is not None else None,
        }
        if self.witness is not None:
            out["witness_exact"] = bool(self.witness_exact)
        return out


@dataclass
class Unclassified:
    """Outcome for order-3 tensors whose multilinear rank exceeds (2, 2, 2)."""

    mlrank: MlRank
    reason: str = "unclassified: multilinear rank exceeds (2,2,2)"
    cls: None = field(default=None, init=False)

    @property
    def classified(self):
        return False

    def to_json(self) -> dict:
        return {"class": None, "mlrank": list(self.mlrank), "reason": self.reason}


def _json_scalar(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else str(v.numerator)
    return float(v)


def _report(cls, dval, ml, witness=None, witness_exact=None):
    return OrbitReport(cls, dval, MlRank(ml), cls.outer_rank, cls.border_rank, witness, witness_exact)


def classify222(A, tol=DEFAULT_TOL, eps=DELTA_EPS) -> OrbitReport:
    """Orbit class of a 2x2x2 tensor from ``sign(delta)`` and the multilinear rank.

    Exact for rational input.  In float mode the minors use ``tol`` and the
    hyperdeterminant uses ``eps``, both relative to powers of ``||A||``.
    """
    A = _check222(A)
    dval = delta(A)
    if A.is_zero():
        return _report(OrbitClass.D0, dval, (0, 0, 0))
    ml = mrank_by_minors(A, tol)
    if ml == (2, 2, 2):
        if is_zero_delta(dval, A, eps):
            cls = OrbitClass.D3
        else:
            cls = OrbitClass.G2 if dval > 0 else OrbitClass.G3
        return _report(cls, dval, ml)
    if ml not in _BY_MLRANK:
        raise ToleranceError(f"multilinear rank {tuple(ml)} cannot occur for a real 2x2x2 tensor")
    return _report(_BY_MLRANK[ml], dval, ml)


# ---------------------------------------------------------------------------
# constructive reduction to canonical form
# ---------------------------------------------------------------------------

_SWAP = ((0, 1), (1, 0))


class _Reducer:
    """Applies GL moves to a 2x2x2 tensor while accumulating them.

    Invariant: ``T == (P, Q, R) . A`` for the accumulated ``P, Q, R``.
    """

    def __init__(self, A: DenseTensor, tol: float, eps: float):
        self.exact = A.is_exact
        self.tol = tol
        self.eps = eps
        self.scale = A.norm()
        self.T = A.array.copy() if self.exact else np.array(A.array, dtype=float)
        self.acc = [self._eye(), self._eye(), self._eye()]

    # -- scalar helpers --------------------------------------------------
    def _eye(self):
        return _exact.identity(2) if self.exact else np.eye(2)

    def _mat(self, rows):
        if self.exact:
            return _exact.fraction_array(rows)
        return np.array([[float(v) for v in r] for r in rows])

    def _to_float(self):
        self.exact = False
        self.T = np.array(self.T.tolist(), dtype=float)
        self.acc = [np.array(M.tolist(), dtype=float) for M in self.acc]

    def sqrt(self, q):
        """Square root of a positive scalar; leaves exact mode if irrational."""
        if self.exact:
            q = Fraction(q)
            rn, rd = math.isqrt(q.numerator), math.isqrt(q.denominator)
            if rn * rn == q.numerator and rd * rd == q.denominator:
                return Fraction(rn, rd)
            self._to_float()
        return math.sqrt(float(q))

    def zero(self, x, degree):
        if self.exact:
            return x == 0
        return abs(x) <= self.eps * max(self.scale, 1e-300) ** degree

    def slab_rank(self, S):
        if self.exact:
            return _exact.rank(S)
        if np.linalg.norm(S) <= self.tol * self.scale:
            return 0
        return 1 if self.zero(_det2(S), 2) else 2

    def inv(self, M):
        return _exact.inv(M) if self.exact else np.linalg.inv(M)

    # -- moves ------------------------------------------------------------
    def apply(self, P=None, Q=None, R=None):
        mats = [self._mat(M) if M is not None else self._eye() for M in (P, Q, R)]
        if self.exact:
            out = self.T
            for mode, M in enumerate(mats):
                out = np.moveaxis(np.tensordot(M, out, axes=([1], [mode])), 0, mode)
            self.T = out
        else:
            self.T = np.einsum("ai,bj,ck,ijk->abc", *mats, self.T)
            self.scale = float(np.linalg.norm(self.T))
        self.acc = [M.dot(a) for M, a in zip(mats, self.acc)]

    def conjugate_slabs(self, Minv):
        """Replace each slab ``S`` by ``M^{-1} S M`` where ``M = Minv^{-1}``...

        i.e. apply ``(I, L, L^{-T})`` with ``L = Minv^{-1}`` so that slab
        ``S`` becomes ``L S L^{-1}``.
        """
        Minv = self._mat(Minv)
        L = self.inv(Minv)
        self.apply(Q=L.tolist(), R=Minv.T.tolist())

    def witness(self):
        mm = MultilinearMap(self.acc)
        return mm.inverse()


def _null_vector(M, zero):
    """A nonzero vector in the kernel of a singular nonzero 2x2 matrix."""
    if not (zero(M[0, 0]) and zero(M[0, 1])):
        return [-M[0, 1], M[0, 0]]
    return [-M[1, 1], M[1, 0]]


def _complete_rank1(u):
    """Columns ``[u, e_c]`` forming an invertible 2x2 matrix."""
    if u[0] != 0:
        return [[u[0], 0], [u[1], 1]]
    return [[u[0], 1], [u[1], 0]]


def reduce222(A, tol=DEFAULT_TOL, eps=DELTA_EPS) -> OrbitReport:
    """Classify a 2x2x2 tensor and return a witness map.

    The witness ``(L, M, N)`` satisfies ``(L, M, N) . canonical(class) == A``,
    exactly when it is rational.  When the reduction needs an irrational
    scalar (distinct irrational eigenvalues for G2, a non-square scale for
    G3) the witness is computed in floats and ``witness_exact`` is False.
    """
    A = _check222(A)
    red = _Reducer(A, tol, eps)
    zero1 = lambda x: red.zero(x, 1)  # noqa: E731

    T = red.T
    if red.slab_rank(T[0]) < red.slab_rank(T[1]):
        red.apply(P=_SWAP)
    r1 = red.slab_rank(red.T[0])

    if r1 == 0:
        cls = OrbitClass.D0
    elif r1 == 1:
        S = red.T[0]
        j = 0 if not (zero1(S[0, 0]) and zero1(S[1, 0])) else 1
        u = [S[0, j], S[1, j]]
        i = 0 if not zero1(u[0]) else 1
        v = [S[i, 0] / u[i], S[i, 1] / u[i]]
        if not red.exact:
            u = [0.0 if zero1(x) else x for x in u]
            v = [0.0 if zero1(x) else x for x in v]
        red.apply(Q=red.inv(red._mat(_complete_rank1(u))).tolist(),
                  R=red.inv(red._mat(_complete_rank1(v))).tolist())
        a, b = red.T[1, 0, 0], red.T[1, 0, 1]
        c, d = red.T[1, 1, 0], red.T[1, 1, 1]
        if not red.zero(d, 1):
            red.apply(Q=[[1, -b / d], [0, 1]], R=[[1, -c / d], [0, 1]])
            a2 = red.T[1, 0, 0]
            red.apply(P=[[1, 0], [-a2, 1]])
            red.apply(P=[[1, 0], [0, 1 / red.T[1, 1, 1]]])
            cls = OrbitClass.G2
        else:
            red.apply(P=[[1, 0], [-a, 1]])
            bnz, cnz = not red.zero(b, 1), not red.zero(c, 1)
            red.apply(Q=[[1, 0], [0, 1 / c if cnz else 1]], R=[[1, 0], [0, 1 / b if bnz else 1]])
            cls = {
                (False, False): OrbitClass.D1,
                (True, False): OrbitClass.D2p,
                (False, True): OrbitClass.D2pp,
                (True, True): OrbitClass.D3,
            }[(bnz, cnz)]
    else:
        red.apply(Q=red.inv(red.T[0]).tolist())
        B = red.T[1]
        tr = B[0, 0] + B[1, 1]
        dt = _det2(B)
        disc = tr * tr - 4 * dt
        bscale = np.linalg.norm(np.array(B.tolist(), dtype=float)) ** 2
        if red.exact:
            disc_zero = disc == 0
        else:
            disc_zero = abs(disc) <= eps * max(bscale, 1e-300)
        if disc_zero:
            lam = tr / 2
            red.apply(P=[[1, 0], [-lam, 1]])
            N = red.T[1]
            if red.slab_rank(N) == 0:
                cls = OrbitClass.D2
            else:
                j = int(np.argmax([abs(float(N[0, 0])) + abs(float(N[1, 0])),
                                   abs(float(N[0, 1])) + abs(float(N[1, 1]))]))
                w = [1, 0] if j == 0 else [0, 1]
                Nw = [N[0, j], N[1, j]]
                red.conjugate_slabs([[Nw[0], w[0]], [Nw[1], w[1]]])
                red.apply(P=_SWAP, R=_SWAP)
                cls = OrbitClass.D3
        elif disc > 0:
            root = red.sqrt(disc)
            if not red.exact:
                B = red.T[1]
                tr = float(tr)
            lam, mu = (tr - root) / 2, (tr + root) / 2
            zero_e = lambda x: red.zero(x, 1)  # noqa: E731
            vl = _null_vector(B - lam * red._eye(), zero_e)
            vm = _null_vector(B - mu * red._eye(), zero_e)
            red.conjugate_slabs([[vl[0], vm[0]], [vl[1], vm[1]]])
            red.apply(P=[[1, 0], [-red.T[1, 0, 0], 1]])
            red.apply(P=[[1, 0], [0, 1 / red.T[1, 1, 1]]])
            red.apply(P=[[1, -1], [0, 1]])
            cls = OrbitClass.G2
        else:
            half = tr / 2
            red.apply(P=[[1, 0], [-half, 1]])
            Bp = red.T[1]
            red.conjugate_slabs([[1, Bp[0, 0]], [0, Bp[1, 0]]])
            q = -red.T[1, 0, 1]
            s = red.sqrt(q)
            red.apply(Q=[[1, 0], [0, s]], R=[[1, 0], [0, 1 / s]])
            red.apply(P=[[1, 0], [0, 1 / s]])
            cls = OrbitClass.G3

    canon = np.array(cls.info.slabs, dtype=float)
    final = np.array(red.T.tolist(), dtype=float)
    if red.exact:
        ok = np.all(red.T == _exact.fraction_array(np.array(cls.info.slabs, dtype=int)))
    else:
        ok = np.linalg.norm(final - canon) <= 1e-8 * max(1.0, np.linalg.norm(canon))
    if not ok:
        raise ToleranceError(f"reduction ended at a non-canonical array for {cls.label}")

    witness = red.witness()
    if not red.exact:
        recon = mmm(tensor(canon), witness).array
        err = np.linalg.norm(recon - A.to_float().array)
        if err > 1e-9 * max(A.norm(), 1e-300):
            raise ToleranceError(f"witness reconstruction error {err:.3e} too large")
    return _report(cls, delta(A), cls.mlrank, witness, red.exact)


# ---------------------------------------------------------------------------
# tensors of larger format with multilinear rank <= (2, 2, 2)
# ---------------------------------------------------------------------------

def _complete_float(U, d):
    """Extend orthonormal columns to two by Gram-Schmidt on e_1, e_2, ..."""
    cols = [U[:, i] for i in range(U.shape[1])]
    for c in range(d):
        if len(cols) >= 2:
            break
        e = np.zeros(d)
        e[c] = 1.0
        for q in cols:
            e -= (q @ e) * q
        n = np.linalg.norm(e)
        if n > 1e-8:
            cols.append(e / n)
    return np.column_stack(cols)


def _complete_exact(X, d):
    """Extend to two columns by exact (unnormalised) Gram-Schmidt on e_1, e_2, ..."""
    cols = [X[:, i] for i in range(X.shape[1])]
    for c in range(d):
        if len(cols) >= 2:
            break
        e = _exact.zeros(d)
        e[c] = Fraction(1)
        # orthogonalise against an orthogonal copy of the current span
        ortho = []
        for v in cols:
            w = v.copy()
            for q in ortho:
                w = w - (q.dot(w) / q.dot(q)) * q
            ortho.append(w)
        for q in ortho:
            e = e - (q.dot(e) / q.dot(q)) * q
        if any(x != 0 for x in e):
            cols.append(e)
    return np.column_stack(cols)


def _compress(A, tol):
    """Core of ``A`` on 2-dimensional bases containing its supporting subspaces.

    Returns ``(core, gram_factor)`` where ``gram_factor`` converts the core's
    hyperdeterminant to the orthonormal-basis value (1 for float input).
    """
    A = as_tensor(A)
    if A.order != 3:
        raise DimensionError(f"expected an order-3 tensor, got order {A.order}")
    if any(d < 2 for d in A.shape):
        A = embed_pad(A, tuple(max(d, 2) for d in A.shape))
    ml = mrank(A, tol)
    if any(r > 2 for r in ml):
        raise MultilinearRankError(f"multilinear rank {tuple(ml)} exceeds (2, 2, 2)")
    bases = support_bases(A, tol)
    if A.is_exact:
        full = [_complete_exact(X, d) for X, d in zip(bases, A.shape)]
        pinv = [_exact.inv(X.T.dot(X)).dot(X.T) for X in full]
        gram = Fraction(1)
        for X in full:
            gram *= _exact.det(X.T.dot(X))
        return mmm(A, pinv), gram
    full = [_complete_float(U, d) for U, d in zip(bases, A.shape)]
    return mmm(A, [U.T for U in full]), 1.0


def delta_extended(A, tol=DEFAULT_TOL):
    """Hyperdeterminant of an order-3 tensor with multilinear rank <= (2, 2, 2).

    The tensor is compressed onto orthonormal bases of its supporting
    subspaces (completed to dimension two) and the 2x2x2 core is evaluated.
    Rational input gives the exact value.
    """
    core, gram = _compress(A, tol)
    return gram * delta(core)


def classify_general(A, tol=DEFAULT_TOL, eps=DELTA_EPS):
    """Orbit type of an order-3 tensor with multilinear rank <= (2, 2, 2).

    Returns an :class:`Unclassified` outcome when some ``r_i`` exceeds two.
    """
    A = as_tensor(A)
    if A.order != 3:
        raise DimensionError(f"expected an order-3 tensor, got order {A.order}")
    ml = mrank(A, tol)
    if any(r > 2 for r in ml):
        return Unclassified(ml)
    if A.shape == (2, 2, 2):
        return classify222(A, tol, eps)
    core, gram = _compress(A, tol)
    rep = classify222(core, tol, eps)
    rep.delta = gram * rep.delta
    return rep


# ---------------------------------------------------------------------------
# computed version of the orbit table
# ---------------------------------------------------------------------------

def certified_decomposition(A, report: Optional[OrbitReport] = None):
    """Rank-1 terms summing to ``A``, mapped from the canonical decomposition.

    Uses the witness of :func:`reduce222`; returns ``(terms, exact)``.
    """
    rep = report if report is not None and report.witness is not None else reduce222(A)
    L, M, N = rep.witness.factors
    terms = []
    for u, v, w in canonical_terms(rep.cls):
        if rep.witness_exact:
            terms.append((L.dot(_exact.fraction_array(u)), M.dot(_exact.fraction_array(v)),
                          N.dot(_exact.fraction_array(w))))
        else:
            terms.append((np.asarray(L, float) @ u, np.asarray(M, float) @ v, np.asarray(N, float) @ w))
    return terms, bool(rep.witness_exact)


def sum_terms(terms, shape):
    out = None
    for t in terms:
        x = outer_product(t)
        out = x if out is None else out + x
    if out is None:
        return tensor(np.zeros(shape, dtype=int))
    return out


def _dsl_border_certificate(A, rep):
    """Exact check that ``A`` (on the delta = 0 hypersurface) is a limit of rank-2 tensors.

    Writes ``A`` in three-term form via the witness and verifies that the
    rank-2 tensors ``A_n = n (x + y/n)^3 - n x^3`` (mode-wise) satisfy
    ``A_n - A = C/n + D/n^2`` with fixed ``C, D``.  Both sides are polynomials
    of degree two in ``1/n``, so agreement at three values of ``n`` proves it
    for every ``n``.
    """
    L, M, N = rep.witness.factors
    e1, e2 = _exact.fraction_array([1, 0]), _exact.fraction_array([0, 1])
    # D3 = x1 x2 y3 + x1 y2 x3 + y1 x2 x3 with x1=e2, y1=e1, x2=x3=e1, y2=y3=e2
    x = (L.dot(e2), M.dot(e1), N.dot(e1))
    y = (L.dot(e1), M.dot(e2), N.dot(e2))
    C = outer_product((y[0], y[1], x[2])) + outer_product((y[0], x[1], y[2])) + outer_product((x[0], y[1], y[2]))
    D = outer_product(y)
    for n in (1, 2, 3):
        f = Fraction(1, n)
        An = outer_product([xi + f * yi for xi, yi in zip(x, y)]) * n - outer_product(x) * n
        if not np.all((An - A).array == (C * f + D * (f * f)).array):
            return False
    return True


def rank_bounds(A):
    """Certified bounds on outer-product and border rank of a 2x2x2 tensor.

    Upper bounds come from explicit decompositions checked exactly, and for
    the border rank on the delta = 0 hypersurface from an explicit convergent
    rank-2 sequence.  Lower bounds use ``rank >= max r_i``, the closedness of
    rank <= 1, ``rank <= 2 => delta >= 0`` (so delta < 0 also forces border
    rank 3, delta being continuous), and the fact that rank-2 tensors with
    delta = 0 have some ``r_i <= 1``.
    """
    A = as_tensor(A)
    A = _check222(A if A.is_exact else A.to_exact())
    rep = reduce222(A)
    if not rep.witness_exact:
        raise ArithmeticError("rank certificates need a rational witness")
    terms, _ = certified_decomposition(A, rep)
    if not np.all(sum_terms(terms, A.shape).array == A.array):
        raise ArithmeticError("decomposition failed to reconstruct the tensor")
    ml = mrank(A)
    dval = delta(A)
    lower, upper = max(ml), len(terms)
    if dval < 0 or (dval == 0 and ml == (2, 2, 2)):
        lower = max(lower, 3)
    if upper <= 2:
        b_lower = b_upper = upper
    else:
        b_lower, b_upper = 2, upper
        if dval < 0:
            b_lower = 3
        elif dval == 0 and ml == (2, 2, 2) and _dsl_border_certificate(A, rep):
            b_upper = 2
    return {"outer": (lower, upper), "border": (b_lower, b_upper), "delta": dval, "mlrank": ml}


def table1():
    """Recompute the orbit table: sign(delta), mlrank, rank and border rank per class."""
    rows = []
    for cls in OrbitClass:
        A = cls.canonical()
        b = rank_bounds(A)
        lo, hi = b["outer"]
        blo, bhi = b["border"]
        if lo != hi or blo != bhi:
            raise ArithmeticError(f"rank bounds for {cls.label} do not close: {b}")
        d = b["delta"]
        rows.append({
            "class": cls.label,
            "sign_delta": (d > 0) - (d < 0),
            "mlrank": tuple(b["mlrank"]),
            "outer_rank": lo,
            "border_rank": blo,
        })
    return rows
