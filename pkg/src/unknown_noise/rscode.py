"""Message polynomials, Reed-Solomon evaluation and robust reconstruction.

A message of L bits becomes a polynomial of degree at most d over GF(q):
the bits are cut into little-endian chunks of log q bits, and chunk i becomes
the coefficient of x**i. Evaluation point number i is the field element whose
integer representation is ``i mod q``.

:func:`get_polynomial` recovers the polynomial from a set of (x, y) pairs, some
of them corrupted. Whenever the agreeing points ``g`` and the bad points ``b``
satisfy ``g > b + d`` the answer is exact. Otherwise it is the best-supported
polynomial we can find, so callers must check it by other means.
"""

from __future__ import annotations

from collections import Counter, OrderedDict
from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .bits import as_bits, chunk_ints, ints_to_bits
from .field import GF, FieldElement

# Upper limit on (subsets examined) * (d+1)**2 for the exhaustive search.
EXHAUSTIVE_WORK = 50_000


class InsufficientPointsError(ValueError):
    """Fewer than d+1 points were supplied."""


class CapacityError(ValueError):
    """The message does not fit in d+1 coefficients."""


@dataclass(frozen=True)
class Polynomial:
    """Polynomial of degree at most ``len(coeffs) - 1`` over ``field``.

    ``coeffs[i]`` is the coefficient of ``x**i`` as an int.
    """

    coeffs: tuple
    field: GF

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(int(c) for c in self.coeffs))
        for c in self.coeffs:
            self.field.check(c)

    @property
    def d(self) -> int:
        return len(self.coeffs) - 1

    @property
    def elements(self) -> tuple[FieldElement, ...]:
        return tuple(FieldElement(c, self.field) for c in self.coeffs)

    def __call__(self, x: int) -> int:
        return evaluate(self, x)

    def to_bits(self) -> np.ndarray:
        """Canonical serialization: coefficients in order, ``k`` bits each."""
        return ints_to_bits(self.coeffs, self.field.k)


@dataclass(frozen=True, order=True)
class EvaluationTuple:
    x: int
    y: int


class TupleMultiset:
    """The multiset of evaluation tuples Bob has received."""

    def __init__(self, entries=()):
        self._counts = Counter()
        self._n = 0
        for e in entries:
            self.add(*e)

    def add(self, x: int, y: int):
        self._counts[(int(x), int(y))] += 1
        self._n += 1

    def __len__(self):
        return self._n

    def items(self):
        """``((x, y), multiplicity)`` pairs in sorted order."""
        return sorted(self._counts.items())

    def count(self, x: int, y: int) -> int:
        return self._counts[(x, y)]

    def __iter__(self):
        for (x, y), m in self.items():
            for _ in range(m):
                yield EvaluationTuple(x, y)


def evaluation_point(index: int, field: GF) -> int:
    """The ``index``-th evaluation point, taken cyclically over the field."""
    return index % field.order


def pack_message(M, d: int, field: GF) -> Polynomial:
    """Encode a bit string as a polynomial with ``d + 1`` coefficients."""
    M = as_bits(M)
    if (d + 1) * field.k < M.size:
        raise CapacityError(f"{M.size} bits do not fit in {d + 1} coefficients of {field.k} bits")
    chunks = chunk_ints(M, field.k)
    return Polynomial(tuple(chunks) + (0,) * (d + 1 - len(chunks)), field)


def unpack_message(P: Polynomial, L: int) -> np.ndarray:
    """Inverse of :func:`pack_message`; padding beyond ``L`` bits is dropped."""
    if (P.d + 1) * P.field.k < L:
        raise CapacityError(f"polynomial holds fewer than {L} bits")
    return P.to_bits()[:L]


def evaluate(P: Polynomial, x: int) -> int:
    """Horner evaluation of ``P`` at one point."""
    F = P.field
    acc = 0
    for c in reversed(P.coeffs):
        acc = F.mul(acc, x) ^ c
    return acc


def evaluate_many(P: Polynomial, xs) -> np.ndarray:
    """Evaluate ``P`` at every point of ``xs`` (vectorised)."""
    F = P.field
    xs = F.array(xs)
    if F._tables and xs.size >= len(P.coeffs) >= 8:
        return _point_set(F, xs).eval(F, P.coeffs)
    return _peval(F, np.asarray(P.coeffs, dtype=np.int64 if F.k <= 62 else object), xs)


def _peval(F: GF, coeffs, xs):
    xs = F.array(xs)
    if F._tables and len(coeffs) and xs.size:
        return _xor_rows(F, _powers(F, xs, len(coeffs)), np.asarray(coeffs, dtype=np.int64))
    acc = F.zeros(xs.size)
    for c in coeffs[::-1]:
        acc = F.vmul(acc, xs) ^ c
    return acc


# log-table kernels (fields with tables only)

def _powers(F: GF, xs, m: int):
    """Matrix ``P[i, e] = xs[i] ** e`` for ``e < m``."""
    n1 = F.order - 1
    e = np.arange(m, dtype=np.int64)
    out = F._exp[(F._log[xs][:, None] * e[None, :]) % n1] if n1 > 1 else np.ones((xs.size, m), np.int64)
    zero = xs == 0
    if zero.any():
        out[zero, :] = 0
        out[zero, 0] = 1
    return out


def _xor_rows(F: GF, mat, vec):
    """``XOR_e mat[i, e] * vec[e]`` for every row ``i``."""
    prod = F._exp[F._log[mat] + F._log[vec][None, :]]
    prod[(mat == 0) | (vec == 0)[None, :]] = 0
    return np.bitwise_xor.reduce(prod, axis=1)


class _PointSet:
    """Per-point-set data reused across decodes (fields with tables only).

    Holds the master polynomial ``G = prod (x - x_i)``, the logs of the
    barycentric weights, the log power matrix and the log Toeplitz matrix of
    ``G`` used by interpolation.
    """

    def __init__(self, F: GF, xs):
        n = xs.size
        n1 = F.order - 1
        self.xs = xs
        self.G = G = _master_poly(F, xs)
        diff = xs[:, None] ^ xs[None, :]
        np.fill_diagonal(diff, 1)
        self.logw = F._log[diff].sum(axis=1) % n1 if n1 > 1 else np.zeros(n, np.int64)
        self.zero_row = np.flatnonzero(xs == 0)
        e = np.arange(n, dtype=np.int64)
        self.logP = ((F._log[xs][:, None] * e[None, :]) % max(n1, 1)).astype(np.int32)
        gi = e[:, None] + 1 + e[None, :]
        gm = np.where(gi <= n, G[np.minimum(gi, n)], 0)
        self.gm_zero = gm == 0
        self.logGm = F._log[gm].astype(np.int32)
        self.nbytes = self.logP.nbytes + self.logGm.nbytes + self.gm_zero.nbytes

    def eval(self, F: GF, coeffs):
        """Values of the polynomial with ``coeffs`` at every point."""
        coeffs = np.asarray(coeffs, dtype=np.int64)
        m = coeffs.size
        if m == 0:
            return F.zeros(self.xs.size)
        if m > self.xs.size:
            return _xor_rows(F, _powers(F, self.xs, m), coeffs)
        prod = F._exp[self.logP[:, :m] + F._log[coeffs][None, :]]
        prod[:, coeffs == 0] = 0
        if self.zero_row.size:
            prod[self.zero_row, :] = 0
            prod[self.zero_row, 0] = coeffs[0]
        return np.bitwise_xor.reduce(prod, axis=1)

    def interpolate(self, F: GF, ys):
        """Coefficients of the interpolant of degree < n through ``ys``."""
        n1 = F.order - 1
        c = np.where(ys == 0, 0, F._exp[(F._log[ys] - self.logw) % n1] if n1 > 1 else ys)
        # power sums p_s = sum_i c_i x_i**s, then coefficient k = sum_s G[k+1+s] p_s
        prod = F._exp[self.logP + F._log[c][:, None]]
        prod[c == 0, :] = 0
        if self.zero_row.size:
            prod[self.zero_row, :] = 0
            prod[self.zero_row, 0] = c[self.zero_row]
        p = np.bitwise_xor.reduce(prod, axis=0)
        prod = F._exp[self.logGm + F._log[p][None, :]]
        prod[self.gm_zero | (p == 0)[None, :]] = 0
        return np.bitwise_xor.reduce(prod, axis=1)


def _master_poly(F: GF, xs):
    """Coefficients of ``prod (x - x_i)``."""
    g = F.array([1])
    for x in xs.tolist():
        nxt = F.zeros(len(g) + 1)
        nxt[1:] = g
        nxt[:-1] ^= F.vmul(g, x)
        g = nxt
    return g


# Point sets recur across rounds and runs (round j always uses the first
# d + 1 + 2j points), so their matrices are kept in a byte-bounded LRU.
_POINT_CACHE: OrderedDict = OrderedDict()
_POINT_CACHE_BYTES = 1 << 27
_point_cache_used = 0


def _point_set(F: GF, xs) -> _PointSet:
    key = (F.k, F.modulus, xs.tobytes())
    ps = _POINT_CACHE.get(key)
    if ps is not None:
        _POINT_CACHE.move_to_end(key)
        return ps
    global _point_cache_used
    ps = _PointSet(F, xs)
    _POINT_CACHE[key] = ps
    _point_cache_used += ps.nbytes
    while _point_cache_used > _POINT_CACHE_BYTES and len(_POINT_CACHE) > 1:
        _, old = _POINT_CACHE.popitem(last=False)
        _point_cache_used -= old.nbytes
    return ps


def _master(F: GF, xs):
    return _point_set(F, xs).G if F._tables else _master_poly(F, xs)


def majority_filter(B) -> list[EvaluationTuple]:
    """Keep, for every x, the most frequent y (ties go to the least y)."""
    if isinstance(B, TupleMultiset):
        counts = B.items()
    else:
        counts = sorted(Counter((int(t[0]), int(t[1])) for t in B).items())
    best = {}
    for (x, y), m in counts:
        if x not in best or m > best[x][1]:
            best[x] = (y, m)
    return [EvaluationTuple(x, y) for x, (y, _) in sorted(best.items())]


# polynomial arithmetic on coefficient arrays (index i = coefficient of x**i)

def _trim(p):
    nz = np.flatnonzero(p)
    return p[: nz[-1] + 1] if nz.size else p[:0]


def _deg(p) -> int:
    return len(p) - 1


def _pmul(F: GF, a, b):
    if len(a) == 0 or len(b) == 0:
        return F.zeros(0)
    if len(a) < len(b):
        a, b = b, a
    out = F.zeros(len(a) + len(b) - 1)
    for i, c in enumerate(b):
        if c:
            out[i: i + len(a)] ^= F.vmul(a, c)
    return out


def _padd(F: GF, a, b):
    if len(a) < len(b):
        a, b = b, a
    out = a.copy()
    out[: len(b)] ^= b
    return _trim(out)


def _pdivmod(F: GF, a, b):
    a = _trim(a.copy())
    b = _trim(b)
    if len(b) == 0:
        raise ZeroDivisionError("polynomial division by zero")
    db = _deg(b)
    if len(a) <= db:
        return F.zeros(0), a
    inv_lead = F.inv(int(b[-1]))
    quot = F.zeros(len(a) - db)
    for top in range(len(a) - 1, db - 1, -1):
        c = int(a[top])
        if c:
            c = F.mul(c, inv_lead)
            quot[top - db] = c
            a[top - db: top + 1] ^= F.vmul(b, c)
    return _trim(quot), _trim(a[:db])


def _interpolate(F: GF, xs, ys):
    """Interpolation through distinct points, returned in monomial form."""
    xs = F.array(xs)
    if F._tables:
        return _point_set(F, xs).interpolate(F, F.array(ys))
    dd = F.array(ys).copy()
    n = len(xs)
    coef = [int(dd[0])]
    for j in range(1, n):
        num = dd[1:] ^ dd[:-1]
        den = xs[j:] ^ xs[:-j]
        dd = F.vmul(num, F.vinv(den))
        coef.append(int(dd[0]))
    # Horner in Newton basis: p = c0 + (x - x0)(c1 + (x - x1)(c2 + ...))
    p = F.array([coef[-1]])
    for j in range(n - 2, -1, -1):
        shifted = F.zeros(len(p) + 1)
        shifted[1:] = p
        shifted[:-1] ^= F.vmul(p, int(xs[j]))
        shifted[0] ^= coef[j]
        p = shifted
    return p


def interpolate(points, field: GF) -> Polynomial:
    """Unique polynomial of degree < len(points) through ``points``."""
    xs = [p[0] for p in points]
    if len(set(xs)) != len(xs):
        raise ValueError("interpolation points must have distinct x")
    coeffs = _interpolate(field, xs, [p[1] for p in points])
    return Polynomial(tuple(coeffs), field)


def _gao(F: GF, xs, ys, d: int):
    """Gao's unique decoder; returns coefficients of length d+1 or None."""
    n = len(xs)
    g0 = _master(F, xs)
    g1 = _trim(_interpolate(F, xs, ys))
    stop = (n + d + 1) / 2
    r0, r1 = g0, g1
    v0, v1 = F.zeros(0), F.array([1])
    while len(r1) and _deg(r1) >= stop:
        qt, rem = _pdivmod(F, r0, r1)
        r0, r1 = r1, rem
        v0, v1 = v1, _padd(F, v0, _pmul(F, qt, v1))
    if len(v1) == 0:
        return None
    f, rem = _pdivmod(F, r1, v1)
    if len(rem) or len(f) > d + 1:
        return None
    out = F.zeros(d + 1)
    out[: len(f)] = f
    return out


def _support(F: GF, coeffs, xs, ys) -> int:
    vals = _point_set(F, xs).eval(F, coeffs) if F._tables else _peval(F, coeffs, xs)
    return int(np.count_nonzero(vals == ys))


def _lex_key(coeffs):
    return tuple(int(c) for c in coeffs[::-1])


def get_polynomial(S, d: int, field: GF, hint: Polynomial | None = None) -> Polynomial:
    """Recover a degree-``d`` polynomial from possibly corrupted evaluations.

    Parameters
    ----------
    S : iterable of EvaluationTuple or (x, y) pairs
        At most one pair per x.
    d : int
        Degree bound.
    field : GF
    hint : Polynomial, optional
        A candidate (e.g. the previous answer). It is returned directly if it
        agrees with enough points to be the unique best fit.

    Returns
    -------
    Polynomial
        The polynomial that agrees with the most points, with ties broken by
        the least coefficient vector (highest degree first). When the set is
        too large for exhaustive search and unique decoding fails, the
        interpolant through the ``d + 1`` least-x points.
    """
    pts = sorted((int(t[0]), int(t[1])) if not isinstance(t, EvaluationTuple) else (t.x, t.y) for t in S)
    n = len(pts)
    if n < d + 1:
        raise InsufficientPointsError(f"need at least {d + 1} points, got {n}")
    xs = field.array([p[0] for p in pts])
    ys = field.array([p[1] for p in pts])
    if len(set(xs.tolist())) != n:
        raise ValueError("at most one tuple per x is allowed")

    # any polynomial agreeing on g points with 2g > n + d is the unique best fit
    def certified(coeffs) -> bool:
        return 2 * _support(field, coeffs, xs, ys) > n + d

    if hint is not None and hint.d == d and hint.field == field:
        hc = field.array(hint.coeffs)
        if certified(hc):
            return hint
    cand = _gao(field, xs, ys, d)
    if cand is not None and certified(cand):
        return Polynomial(tuple(cand), field)

    if comb(n, d + 1) * (d + 1) ** 2 <= EXHAUSTIVE_WORK:
        best, best_key = None, None
        for idx in combinations(range(n), d + 1):
            idx = list(idx)
            coeffs = _interpolate(field, xs[idx], ys[idx])
            key = (-_support(field, coeffs, xs, ys), _lex_key(coeffs))
            if best_key is None or key < best_key:
                best, best_key = coeffs, key
        return Polynomial(tuple(best), field)

    return Polynomial(tuple(_interpolate(field, xs[: d + 1], ys[: d + 1])), field)
