"""Generators for rank-jumping tensor families.

Every sequence generator returns a :class:`SequenceHandle` whose terms ship
with an explicit CP witness, so rank upper bounds are certified by
reconstruction rather than trusted.  Rank claims on limits carry a
provenance tag: ``"verified-in-2x2x2"`` when the orbit classifier confirms
them, ``"asserted-from-paper"`` when they rest on published results the
library cannot check (direct-sum rank additivity beyond 2x2x2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Callable, Optional, Sequence

import numpy as np

from . import _exact
from .errors import DimensionError
from .rank222 import OrbitClass, classify_general
from .tensor_core import (
    DenseTensor,
    MultilinearMap,
    matrix_rank_tol,
    mmm,
    outer_product,
    tensor,
)

VERIFIED = "verified-in-2x2x2"
ASSERTED = "asserted-from-paper"


def _is_exact_vec(v):
    a = np.asarray(v)
    return a.dtype == object or np.issubdtype(a.dtype, np.integer)


def _vecs(vectors):
    """Coerce vectors to a common backend: Fraction arrays if all are exact."""
    arrs = [np.asarray(v) for v in vectors]
    if all(_is_exact_vec(a) for a in arrs):
        return [_exact.fraction_array(a) for a in arrs], True
    return [np.asarray(a, dtype=float) for a in arrs], False


def _step(n, exact):
    return Fraction(1, n) if exact else 1.0 / n


def evaluate_terms(terms, shape=None) -> DenseTensor:
    """Sum ``coef * v_1 o ... o v_k`` over ``(coef, vectors)`` pairs."""
    out = None
    for coef, vecs in terms:
        t = outer_product(vecs) * coef
        out = t if out is None else out + t
    if out is None:
        if shape is None:
            raise ValueError("empty term list needs an explicit shape")
        return tensor(np.zeros(shape, dtype=int))
    return out


@dataclass
class SequenceHandle:
    """A convergent sequence ``A_n -> A`` with certified rank bounds.

    ``term(n)`` and ``witness(n)`` are pure functions of ``n >= 1``.
    """

    name: str
    limit: DenseTensor
    term_fn: Callable[[int], DenseTensor]
    witness_fn: Callable[[int], list]
    rank_bound: int
    limit_rank: int
    limit_provenance: str
    n_max: Optional[int] = None
    error_constants: Optional[tuple] = None
    meta: dict = field(default_factory=dict)

    def term(self, n: int) -> DenseTensor:
        if n < 1:
            raise ValueError("sequence index starts at 1")
        return self.term_fn(n)

    def witness(self, n: int) -> list:
        """CP terms ``[(coef, [v_1, ..., v_k]), ...]`` summing to ``term(n)``."""
        return self.witness_fn(n)

    def error(self, n: int) -> float:
        return (self.term(n) - self.limit).norm()

    def error_bound(self, n: int) -> Optional[float]:
        """``C1/n + C2/n^2`` when the family has explicit constants."""
        if self.error_constants is None:
            return None
        c1, c2 = self.error_constants
        return c1 / n + c2 / n**2

    def witness_matches(self, n: int, tol: float = 1e-10) -> bool:
        A = self.term(n)
        W = evaluate_terms(self.witness(n), A.shape)
        if A.is_exact and W.is_exact:
            return bool(np.all(A.array == W.array))
        return (A - W).norm() <= tol * max(1.0, A.norm())

    def labels(self) -> dict:
        return {
            "family": self.name,
            "rank_bound": self.rank_bound,
            "rank_bound_provenance": "cp-witness",
            "limit_rank": self.limit_rank,
            "limit_rank_provenance": self.limit_provenance,
            **self.meta,
        }


# ---------------------------------------------------------------------------
# the three-term boundary tensor
# ---------------------------------------------------------------------------

def dsl_tensor(x1, y1, x2, y2, x3, y3) -> DenseTensor:
    """``x1 o x2 o y3 + x1 o y2 o x3 + y1 o x2 o x3``."""
    (x1, y1, x2, y2, x3, y3), _ = _vecs([x1, y1, x2, y2, x3, y3])
    for a, b in ((x1, y1), (x2, y2), (x3, y3)):
        if a.shape != b.shape:
            raise DimensionError("x_i and y_i must have the same dimension")
    return outer_product([x1, x2, y3]) + outer_product([x1, y2, x3]) + outer_product([y1, x2, x3])


def _pairs_independent(pairs):
    return all(matrix_rank_tol(np.column_stack([np.asarray(a), np.asarray(b)])) == 2 for a, b in pairs)


def dsl_sequence(x1, y1, x2, y2, x3, y3) -> SequenceHandle:
    """``A_n = n (x1 + y1/n) o (x2 + y2/n) o (x3 + y3/n) - n x1 o x2 o x3``.

    Each ``A_n`` has a two-term CP witness and ``||A_n - A|| <= C1/n + C2/n^2``
    with ``C1 = ||y1 y2 x3 + y1 x2 y3 + x1 y2 y3||`` and ``C2 = ||y1 y2 y3||``.
    """
    (x1, y1, x2, y2, x3, y3), exact = _vecs([x1, y1, x2, y2, x3, y3])
    xs, ys = (x1, x2, x3), (y1, y2, y3)
    limit = dsl_tensor(x1, y1, x2, y2, x3, y3)

    def witness(n):
        h = _step(n, exact)
        return [(n, [x + h * y for x, y in zip(xs, ys)]), (-n, list(xs))]

    def term(n):
        return evaluate_terms(witness(n))

    c1 = (outer_product([y1, y2, x3]) + outer_product([y1, x2, y3]) + outer_product([x1, y2, y3])).norm()
    c2 = outer_product([y1, y2, y3]).norm()
    indep = _pairs_independent(zip(xs, ys))
    if indep:
        rep = classify_general(limit)
        limit_rank = 3
        prov = VERIFIED if rep.classified and rep.cls is OrbitClass.D3 else ASSERTED
    else:
        limit_rank, prov = 2, VERIFIED
    return SequenceHandle(
        "dsl", limit, term, witness, 2, limit_rank, prov, error_constants=(c1, c2)
    )


# ---------------------------------------------------------------------------
# Leibniz tensors and difference quotients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LeibnizSpec:
    """``L_k(a_1, ..., a_j)`` built from base ``x`` and directions ``y_1 .. y_j``."""

    k: int
    exponents: tuple
    x: object
    ys: tuple

    def __post_init__(self):
        object.__setattr__(self, "exponents", tuple(int(a) for a in self.exponents))
        object.__setattr__(self, "ys", tuple(self.ys))
        if self.k < 1:
            raise ValueError("order k must be positive")
        if not self.exponents or any(a < 1 for a in self.exponents):
            raise ValueError("exponents must be positive integers")
        if len(self.ys) != len(self.exponents):
            raise ValueError("need one direction vector per exponent")
        if self.a > self.k:
            raise ValueError(f"sum of exponents {self.a} exceeds order {self.k}")
        d = len(np.asarray(self.x))
        if any(len(np.asarray(y)) != d for y in self.ys):
            raise DimensionError("x and all y_i must share one dimension")

    @property
    def a(self) -> int:
        return sum(self.exponents)

    @property
    def limit_term_count(self) -> int:
        """Multinomial ``k! / ((k-a)! a_1! ... a_j!)``."""
        out = math.factorial(self.k) // math.factorial(self.k - self.a)
        for e in self.exponents:
            out //= math.factorial(e)
        return out

    @property
    def quotient_term_count(self) -> int:
        return math.prod(e + 1 for e in self.exponents)

    @classmethod
    def standard(cls, k, exponents, d=None):
        """``x = e_1`` and ``y_i = e_{i+1}`` in dimension ``d`` (default ``j + 1``)."""
        exponents = tuple(exponents)
        d = d or len(exponents) + 1
        eye = np.eye(d, dtype=int)
        return cls(k, exponents, eye[0], tuple(eye[i + 1] for i in range(len(exponents))))


def _distinct_words(counts):
    """All distinct arrangements of a multiset given as ``{symbol: count}``."""
    total = sum(counts.values())
    if total == 0:
        yield ()
        return
    for s in sorted(counts):
        if counts[s]:
            counts[s] -= 1
            for rest in _distinct_words(counts):
                yield (s,) + rest
            counts[s] += 1


def leibniz_tensor(spec: LeibnizSpec) -> DenseTensor:
    """Symmetric sum of ``x^(k-a) o y_1^(a_1) o ... o y_j^(a_j)`` over distinct orderings."""
    vecs, _ = _vecs([spec.x, *spec.ys])
    counts = {0: spec.k - spec.a}
    counts.update({i + 1: e for i, e in enumerate(spec.exponents)})
    out = None
    for word in _distinct_words(counts):
        t = outer_product([vecs[s] for s in word])
        out = t if out is None else out + t
    return out


def leibniz_quotient_terms(spec: LeibnizSpec, t) -> list:
    """Veronese terms ``(coef, [v]*k)`` of the forward-difference quotient.

    The stencil is the tensor product of ``a_i``-th forward differences with
    step ``t`` in each direction, divided by ``t^a a_1! ... a_j!``.
    """
    if t == 0:
        raise ValueError("step t must be nonzero")
    vecs, exact = _vecs([spec.x, *spec.ys])
    if exact and isinstance(t, (int, Fraction)):
        t = Fraction(t)
    else:
        vecs = [np.asarray(v, dtype=float) for v in vecs]
        t = float(t)
        exact = False
    x, ys = vecs[0], vecs[1:]
    scale = t**spec.a
    for e in spec.exponents:
        scale *= math.factorial(e)
    terms = []
    for ms in product(*[range(e + 1) for e in spec.exponents]):
        c = 1
        point = x
        for m, e, y in zip(ms, spec.exponents, ys):
            c *= (-1) ** (e - m) * math.comb(e, m)
            point = point + (m * t) * y
        terms.append((Fraction(c) / scale if exact else c / scale, [point] * spec.k))
    return terms


def leibniz_quotient(spec: LeibnizSpec, t) -> DenseTensor:
    """Difference quotient with ``prod(a_i + 1)`` Veronese terms; tends to ``L_k`` as ``t -> 0``."""
    return evaluate_terms(leibniz_quotient_terms(spec, t))


def leibniz_sequence(spec: LeibnizSpec) -> SequenceHandle:
    """Quotients at ``t = 1/n``; the rank bound is the Veronese term count."""
    limit = leibniz_tensor(spec)

    def witness(n):
        return leibniz_quotient_terms(spec, Fraction(1, n) if limit.is_exact else 1.0 / n)

    def term(n):
        return evaluate_terms(witness(n))

    if spec.k == 3 and spec.exponents == (1,) and len(np.asarray(spec.x)) == 2:
        limit_rank, prov = 3, VERIFIED
    else:
        # only the term count of the limit is known; its rank is open in general
        limit_rank, prov = spec.limit_term_count, "term-count-only"
    return SequenceHandle(
        "leibniz", limit, term, witness, spec.quotient_term_count, limit_rank, prov,
        meta={"k": spec.k, "exponents": list(spec.exponents)},
    )


# ---------------------------------------------------------------------------
# diagonal, gap and rank+1 families
# ---------------------------------------------------------------------------

def build_diag_rank(vectors: Sequence[Sequence]) -> DenseTensor:
    """``sum_j x_j^(1) o ... o x_j^(k)`` from ``k`` lists of ``r`` independent vectors."""
    vectors = [list(vs) for vs in vectors]
    if not vectors:
        raise ValueError("need at least one mode")
    r = len(vectors[0])
    if r == 0 or any(len(vs) != r for vs in vectors):
        raise ValueError("every mode needs the same positive number of vectors")
    for m, vs in enumerate(vectors):
        if matrix_rank_tol(np.column_stack([np.asarray(v) for v in vs])) != r:
            raise ValueError(f"vectors for mode {m} are linearly dependent")
    return evaluate_terms([(1, [vectors[m][j] for m in range(len(vectors))]) for j in range(r)])


def _embed_vec(v, offset, dim, exact):
    out = _exact.zeros(dim) if exact else np.zeros(dim)
    out[offset: offset + len(v)] = v
    return out


def _unit(dim, i, exact):
    out = _exact.zeros(dim) if exact else np.zeros(dim)
    out[i] = Fraction(1) if exact else 1.0
    return out


_E1, _E2 = np.array([1, 0]), np.array([0, 1])


def _dsl_222():
    return dsl_sequence(_E1, _E2, _E1, _E2, _E1, _E2)


def _block_terms(diag_count, diag_offset, shape3, block_offsets, block_terms_n, extra_dims):
    """CP terms for a diagonal part plus 2x2x2 blocks, padded and extended by e_1."""
    terms = []
    tails = [_unit(d, 0, True) for d in extra_dims]
    for j in range(diag_count):
        vecs = [_unit(shape3[m], diag_offset[m] + j, True) for m in range(3)]
        terms.append((1, vecs + tails))
    for offs in block_offsets:
        for coef, vecs in block_terms_n:
            padded = [_embed_vec(v, offs[m], shape3[m], True) for m, v in enumerate(vecs)]
            terms.append((coef, padded + tails))
    return terms


def gap_sequence(r: int, s: int, n_max: int = 1000) -> SequenceHandle:
    """``B_n = C + A_n + ... + A_n`` (direct sum, ``s`` copies of the 2x2x2 dsl sequence).

    ``C`` is the diagonal rank-``(r - 2s)`` tensor (absent when ``r == 2s``),
    so every ``B_n`` lives in ``r x r x r`` with a CP witness of length ``r``.
    The limit has rank ``r + s`` by rank additivity of direct sums.
    """
    if s < 1 or r < 2 * s:
        raise ValueError(f"need r >= 2s >= 2, got r={r}, s={s}")
    d = r - 2 * s
    base = _dsl_222()
    shape = (r, r, r)
    offsets = [(d + 2 * c,) * 3 for c in range(s)]

    def assemble(block):
        out = _exact.zeros(shape)
        for j in range(d):
            out[j, j, j] = Fraction(1)
        for o in offsets:
            out[o[0]: o[0] + 2, o[1]: o[1] + 2, o[2]: o[2] + 2] = block.array
        return tensor(out)

    def witness(n):
        return _block_terms(d, (0, 0, 0), shape, offsets, base.witness(n), ())

    limit = assemble(base.limit)
    prov = VERIFIED if (r, s) == (2, 1) else ASSERTED
    return SequenceHandle(
        "gap", limit, lambda n: assemble(base.term(n)), witness, r, r + s, prov, n_max=n_max,
        error_constants=tuple(c * math.sqrt(s) for c in base.error_constants),
        meta={"r": r, "s": s, "diagonal_rank": d},
    )


def rank_plus_one_instance(shape: Sequence[int], r: int) -> SequenceHandle:
    """Rank-``r`` sequence converging to a rank-``(r + 1)`` tensor in ``shape``.

    Diagonal rank-``(r - 2)`` part in the leading block plus the 2x2x2 dsl
    sequence in the trailing block of the first three modes, tensored with
    ``e_1`` in every further mode.
    """
    shape = tuple(int(d) for d in shape)
    k = len(shape)
    if k < 3 or any(d < 2 for d in shape):
        raise ValueError("need order >= 3 and every dimension >= 2")
    if not 2 <= r <= min(shape):
        raise ValueError(f"r must lie in [2, {min(shape)}], got {r}")
    base = _dsl_222()
    shape3, extra = shape[:3], shape[3:]
    off = tuple(d - 2 for d in shape3)

    def assemble(block):
        out = _exact.zeros(shape3)
        for j in range(r - 2):
            out[j, j, j] = Fraction(1)
        out[off[0]:, off[1]:, off[2]:] = block.array
        for d in extra:
            out = np.multiply.outer(out, _unit(d, 0, True))
        return tensor(out)

    def witness(n):
        return _block_terms(r - 2, (0, 0, 0), shape3, [off], base.witness(n), extra)

    prov = VERIFIED if shape == (2, 2, 2) else ASSERTED
    return SequenceHandle(
        "rank-plus-one", assemble(base.limit), lambda n: assemble(base.term(n)), witness,
        r, r + 1, prov, error_constants=base.error_constants,
        meta={"shape": list(shape), "r": r},
    )


def core_block(handle: SequenceHandle, block: int = 0) -> DenseTensor:
    """The trailing (rank-plus-one) or ``block``-th (gap) 2x2x2 block of a limit."""
    A = handle.limit
    if handle.name == "gap":
        o = handle.meta["diagonal_rank"] + 2 * block
        return tensor(A.array[o: o + 2, o: o + 2, o: o + 2].copy())
    if handle.name == "rank-plus-one":
        arr = A.array
        while arr.ndim > 3:
            arr = arr[..., 0]
        return tensor(arr[-2:, -2:, -2:].copy())
    raise ValueError(f"no 2x2x2 core for family {handle.name!r}")


# ---------------------------------------------------------------------------
# random orbit samples
# ---------------------------------------------------------------------------

def random_invertible_integer(rng, n=2, lo=-3, hi=3):
    while True:
        M = rng.integers(lo, hi + 1, size=(n, n))
        if _exact.det(M) != 0:
            return M


def random_orbit_sample(cls, seed) -> tuple[DenseTensor, MultilinearMap]:
    """``(L, M, N) . canonical(cls)`` for integer maps with entries in [-3, 3]."""
    cls = cls if isinstance(cls, OrbitClass) else OrbitClass.parse(cls)
    rng = np.random.default_rng(seed)
    maps = MultilinearMap([random_invertible_integer(rng) for _ in range(3)])
    return mmm(cls.canonical(), maps), maps

