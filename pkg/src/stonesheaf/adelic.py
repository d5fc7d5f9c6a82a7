"""Splicing rings, the cube maps, and the augmented adelic complex.

For a height flag A = (a_0 > a_1 > ... > a_s) over a presented space the
splicing ring mixes the strata of those heights: a product over the a_0
stratum of localizations of products over the a_1 stratum, and so on down to
rational values over the a_s stratum.  We implement the constructible
subring generated by the idempotents of clopen sets and the rational
scalars.  Over the Finite/Sum/Cone grammar this subring has a finite normal
form:

  * flag () : locally constant functions (finitely many exceptional copies
    per cone, a constant on the tail copies and the apex);
  * a_0 equal to the rank of a cone: a single rational (the germ of a
    constructible family at the apex is its eventual uniform value);
  * a_0 below the rank of a cone: finitely many exceptional copies carrying
    nested data, all remaining copies carrying one uniform scalar.

Every operation canonicalizes, so equality of ring elements is syntactic.
The augmented complex places the ring of locally constant functions in
degree -1 and the product of flag-size-(i+1) rings in degree i; its
exactness is witnessed constructively by `exactness_witness`, which peels
one cone level at a time.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction

from .linalg import Rat, rat, ZERO, ONE
from .space import Finite, SpaceExpr, Sum, cb_rank, ClopenSet, SpaceMismatch

Flag = tuple[int, ...]


class FlagError(ValueError):
    pass


def check_flag(space: SpaceExpr, flag: Flag):
    if any(flag[i] <= flag[i + 1] for i in range(len(flag) - 1)):
        raise FlagError(f"flag {flag} is not strictly decreasing")
    if flag and (flag[0] > cb_rank(space) or flag[-1] < 0):
        raise FlagError(f"flag {flag} does not fit a rank-{cb_rank(space)} space")


def insert_height(flag: Flag, b: int) -> Flag:
    if b in flag:
        raise FlagError(f"height {b} already in flag {flag}")
    return tuple(sorted(flag + (b,), reverse=True))


def sign_pos(flag: Flag, b: int) -> int:
    """Position of b relative to the flag: the number of entries above it.

    >>> sign_pos((3, 1), 4), sign_pos((3, 1), 2), sign_pos((3, 1), 0)
    (0, 1, 2)
    """
    if b in flag:
        raise FlagError(f"height {b} lies in flag {flag}")
    return sum(1 for a in flag if a > b)


def all_flags(rank: int) -> list[Flag]:
    """All nonempty flags on heights [0..rank], by size then lexicographically."""
    out = []
    for size in range(1, rank + 2):
        for comb in itertools.combinations(range(rank, -1, -1), size):
            out.append(tuple(comb))
    return out


def flags_of_size(rank: int, size: int) -> list[Flag]:
    return [tuple(c) for c in itertools.combinations(range(rank, -1, -1), size)]


# ---------------------------------------------------------------------------
# constructible data
#
# data(space, flag):
#   Finite(n), flag () or (0,): tuple of n rationals
#   Sum(l, r): pair (left data, right data); a side whose rank is below the
#       top of the flag holds the zero-ring marker None
#   Cone(Y), flag whose top is the rank: a single rational
#   Cone(Y), otherwise: ("cone", {copy: data}, tail scalar)


def _is_zero_ring(space, flag) -> bool:
    return bool(flag) and flag[0] > cb_rank(space)


def const_data(space: SpaceExpr, flag: Flag, c: Rat):
    """The element c * unit."""
    if _is_zero_ring(space, flag):
        return None
    if isinstance(space, Finite):
        return (c,) * space.n
    if isinstance(space, Sum):
        return (const_data(space.left, flag, c), const_data(space.right, flag, c))
    if flag and flag[0] == cb_rank(space):
        return c
    return ("cone", {}, c)


def _canon(space, flag, data):
    if data is None:
        return None
    if isinstance(space, Finite):
        return tuple(data)
    if isinstance(space, Sum):
        return (_canon(space.left, flag, data[0]), _canon(space.right, flag, data[1]))
    if flag and flag[0] == cb_rank(space):
        return data
    _, exc, tail = data
    default = const_data(space.base, flag, tail)
    cleaned = {}
    for k, v in exc.items():
        vc = _canon(space.base, flag, v)
        if vc != default:
            cleaned[k] = vc
    return ("cone", cleaned, tail)


def _zip_data(space, flag, x, y, op):
    if x is None:
        return None
    if isinstance(space, Finite):
        return tuple(op(a, b) for a, b in zip(x, y, strict=True))
    if isinstance(space, Sum):
        return (_zip_data(space.left, flag, x[0], y[0], op),
                _zip_data(space.right, flag, x[1], y[1], op))
    if flag and flag[0] == cb_rank(space):
        return op(x, y)
    _, ex, tx = x
    _, ey, ty = y
    keys = set(ex) | set(ey)
    exc = {}
    for k in keys:
        xv = ex.get(k, const_data(space.base, flag, tx))
        yv = ey.get(k, const_data(space.base, flag, ty))
        exc[k] = _zip_data(space.base, flag, xv, yv, op)
    return _canon(space, flag, ("cone", exc, op(tx, ty)))


def _map_data(space, flag, x, op):
    if x is None:
        return None
    if isinstance(space, Finite):
        return tuple(op(a) for a in x)
    if isinstance(space, Sum):
        return (_map_data(space.left, flag, x[0], op), _map_data(space.right, flag, x[1], op))
    if flag and flag[0] == cb_rank(space):
        return op(x)
    _, exc, tail = x
    return _canon(space, flag, ("cone", {k: _map_data(space.base, flag, v, op) for k, v in exc.items()}, op(tail)))


@dataclass(frozen=True)
class CFun:
    """A constructible element of the splicing ring for (space, flag)."""

    space: SpaceExpr
    flag: Flag
    data: object

    @staticmethod
    def unit(space: SpaceExpr, flag: Flag) -> "CFun":
        check_flag(space, flag)
        return CFun(space, flag, const_data(space, flag, ONE))

    @staticmethod
    def zero(space: SpaceExpr, flag: Flag) -> "CFun":
        check_flag(space, flag)
        return CFun(space, flag, const_data(space, flag, ZERO))

    @staticmethod
    def scalar(space: SpaceExpr, flag: Flag, c) -> "CFun":
        check_flag(space, flag)
        return CFun(space, flag, const_data(space, flag, rat(c)))

    def _check_same(self, other: "CFun"):
        if self.space != other.space or self.flag != other.flag:
            raise SpaceMismatch("ring elements live over different (space, flag)")

    def add(self, other: "CFun") -> "CFun":
        self._check_same(other)
        return CFun(self.space, self.flag, _zip_data(self.space, self.flag, self.data, other.data, lambda a, b: a + b))

    def sub(self, other: "CFun") -> "CFun":
        self._check_same(other)
        return CFun(self.space, self.flag, _zip_data(self.space, self.flag, self.data, other.data, lambda a, b: a - b))

    def mul(self, other: "CFun") -> "CFun":
        self._check_same(other)
        return CFun(self.space, self.flag, _zip_data(self.space, self.flag, self.data, other.data, lambda a, b: a * b))

    def scale(self, c) -> "CFun":
        c = rat(c)
        return CFun(self.space, self.flag, _map_data(self.space, self.flag, self.data, lambda a: c * a))

    def neg(self) -> "CFun":
        return self.scale(-1)

    def is_zero(self) -> bool:
        return self == CFun.zero(self.space, self.flag)

    def __add__(self, other):
        return self.add(other)

    def __sub__(self, other):
        return self.sub(other)

    def __mul__(self, other):
        return self.mul(other)


def indicator(space: SpaceExpr, flag: Flag, u: ClopenSet) -> CFun:
    """The idempotent supported on the clopen set u, as a ring element."""
    check_flag(space, flag)
    return CFun(space, flag, _indicator_data(space, flag, u))


def _indicator_data(space, flag, u):
    if _is_zero_ring(space, flag):
        return None
    if isinstance(space, Finite):
        return tuple(ONE if i in u.members else ZERO for i in range(space.n))
    if isinstance(space, Sum):
        return (_indicator_data(space.left, flag, u.left),
                _indicator_data(space.right, flag, u.right))
    if flag and flag[0] == cb_rank(space):
        return ONE if u.apex else ZERO
    exc = {k: _indicator_data(space.base, flag, w) for k, w in u.exc}
    tail = ONE if u.apex else ZERO
    return _canon(space, flag, ("cone", exc, tail))


# ---------------------------------------------------------------------------
# cube maps


def dmap(b: int, f: CFun) -> CFun:
    """The cube map inserting height b into the flag of f.

    Inserting below the flag spreads values diagonally onto the new stratum
    (a pure uniform tail); inserting the top height of a cone extracts the
    germ at its apex, which for constructible data is the eventual value.
    """
    new_flag = insert_height(f.flag, b)
    check_flag(f.space, new_flag)
    return CFun(f.space, new_flag, _dmap_data(f.space, f.flag, b, f.data))


def _dmap_data(space, flag, b, data):
    new_flag = insert_height(flag, b)
    if _is_zero_ring(space, new_flag):
        return None
    if data is None:
        return None
    if isinstance(space, Finite):
        return tuple(data)
    if isinstance(space, Sum):
        return (_dmap_data(space.left, flag, b, data[0]),
                _dmap_data(space.right, flag, b, data[1]))
    r = cb_rank(space)
    if b == r:
        # germ at the apex of a constructible family: the tail value
        if flag and flag[0] == r:
            raise FlagError("height already present")
        _, _exc, tail = data
        return tail
    if flag and flag[0] == r:
        # scalar germ data: inserting a lower height spreads the constant
        return data
    _, exc, tail = data
    return _canon(space, new_flag,
                  ("cone", {k: _dmap_data(space.base, flag, b, v) for k, v in exc.items()}, tail))


# ---------------------------------------------------------------------------
# the augmented complex


@dataclass(frozen=True)
class AdelicComplex:
    """The augmented adelic cochain complex of a presented space.

    Degree -1 holds the locally constant functions; degree i holds one
    constructible splicing ring per flag with i+1 heights.  Cochains are
    dictionaries mapping flags to ring elements ('()' in degree -1).
    """

    space: SpaceExpr

    @property
    def rank(self) -> int:
        return cb_rank(self.space)

    def degrees(self) -> list[int]:
        return list(range(-1, self.rank + 1))

    def flags(self, degree: int) -> list[Flag]:
        if degree == -1:
            return [()]
        return flags_of_size(self.rank, degree + 1)

    def zero_cochain(self, degree: int) -> dict:
        return {A: CFun.zero(self.space, A) for A in self.flags(degree)}

    def differential(self, cochain: dict, degree: int) -> dict:
        """Apply d from the given degree; degree -1 is the augmentation."""
        out = {}
        for B in self.flags(degree + 1):
            acc = CFun.zero(self.space, B)
            for b in B:
                A = tuple(a for a in B if a != b)
                if A not in cochain and degree == -1:
                    A = ()
                term = dmap(b, cochain[A])
                if sign_pos(A, b) % 2 == 1:
                    term = term.neg()
                acc = acc.add(term)
            out[B] = acc
        return out

    def is_cocycle(self, cochain: dict, degree: int) -> bool:
        if degree >= self.rank:
            return True
        return all(v.is_zero() for v in self.differential(cochain, degree).values())

    def exactness_witness(self, cochain: dict, degree: int) -> dict:
        """A preimage of a cocycle under d (a locally constant function when
        degree is 0).  Raises ValueError when the input is not a cocycle."""
        if not self.is_cocycle(cochain, degree):
            raise ValueError("input cochain is not a cocycle")
        data = {A: f.data for A, f in cochain.items()}
        wdata = _witness(self.space, degree, data)
        wflags = self.flags(degree - 1)
        witness = {A: CFun(self.space, A, wdata[A]) for A in wflags}
        check = self.differential(witness, degree - 1)
        if any(check[A] != cochain[A] for A in self.flags(degree)):
            raise AssertionError("witness construction failed to hit the cocycle")
        return witness


def _witness(space, degree, data):
    """Witness recursion on raw data dictionaries (flag -> data).

    The complex of a cone is assembled from the per-copy complexes of the
    base together with an apex part holding the scalar germ coordinates, so
    a cocycle is hit by: recursive witnesses on the exceptional copies, the
    apex cochain reused as the uniform tail of one degree lower, and zero in
    the apex coordinates of the witness itself.
    """
    r = cb_rank(space)
    if isinstance(space, Finite):
        if degree != 0:
            return {}
        return {(): tuple(data[(0,)])}
    if isinstance(space, Sum):
        halves = []
        for side, part in ((0, space.left), (1, space.right)):
            pdata = {A: data[A][side] for A in data if not _is_zero_ring(part, A)}
            halves.append(_witness(part, degree, pdata) if (degree == 0 or pdata) else {})
        out = {}
        for A in (flags_of_size(r, degree) if degree >= 1 else [()]):
            parts = []
            for side, part in ((0, space.left), (1, space.right)):
                if _is_zero_ring(part, A):
                    parts.append(None)
                else:
                    parts.append(halves[side].get(A, const_data(part, A, ZERO)))
            out[A] = (parts[0], parts[1])
        return out
    base = space.base
    copies_flags = [A for A in data if A and A[0] != r]
    exc_keys = set()
    for A in copies_flags:
        exc_keys |= set(data[A][1])
    if degree == 0:
        v = data[(r,)]
        out_exc = {}
        for k in sorted(exc_keys):
            sub = {A: _cone_slice(base, A, data[A], k) for A in copies_flags}
            out_exc[k] = _witness(base, 0, sub)[()]
        return {(): _canon(space, (), ("cone", out_exc, v))}
    witness_exc = {}
    for k in sorted(exc_keys):
        sub = {A: _cone_slice(base, A, data[A], k) for A in copies_flags}
        witness_exc[k] = _witness(base, degree, sub)
    out = {}
    for A in flags_of_size(r, degree):
        if A[0] == r:
            out[A] = ZERO
        else:
            tail = data[(r,) + A]
            exc = {k: witness_exc[k][A] for k in witness_exc}
            out[A] = _canon(space, A, ("cone", exc, tail))
    return out


def _cone_slice(base, flag, data, k):
    """The copy-k component of cone data over a flag not containing the rank."""
    _, exc, tail = data
    return exc.get(k, const_data(base, flag, tail))


# ---------------------------------------------------------------------------
# randomized constructible elements (seeded; used by tests and the CLI)


def random_rat(rng: random.Random) -> Rat:
    return Fraction(rng.randint(-4, 4), rng.choice([1, 1, 2, 3]))


def random_cfun(space: SpaceExpr, flag: Flag, rng: random.Random, exc_bound: int = 2) -> CFun:
    check_flag(space, flag)
    return CFun(space, flag, _canon(space, flag, _random_data(space, flag, rng, exc_bound)))


def _random_data(space, flag, rng, exc_bound):
    if _is_zero_ring(space, flag):
        return None
    if isinstance(space, Finite):
        return tuple(random_rat(rng) for _ in range(space.n))
    if isinstance(space, Sum):
        return (_random_data(space.left, flag, rng, exc_bound),
                _random_data(space.right, flag, rng, exc_bound))
    if flag and flag[0] == cb_rank(space):
        return random_rat(rng)
    nexc = rng.randint(0, exc_bound)
    exc = {k: _random_data(space.base, flag, rng, exc_bound) for k in range(nexc)}
    return ("cone", exc, random_rat(rng))


# ---------------------------------------------------------------------------
# flattening constructible cochains to coordinates (for sampling cocycles)


def _enumerate_slots(space, flag, exc_bound):
    """Coordinate slots of the bounded-exception subspace of a splicing ring."""
    if _is_zero_ring(space, flag):
        return []
    if isinstance(space, Finite):
        return [("fin", i) for i in range(space.n)]
    if isinstance(space, Sum):
        return ([("L",) + s for s in _enumerate_slots(space.left, flag, exc_bound)] +
                [("R",) + s for s in _enumerate_slots(space.right, flag, exc_bound)])
    if flag and flag[0] == cb_rank(space):
        return [("germ",)]
    slots = [("tail",)]
    for k in range(exc_bound):
        slots.extend(("copy", k) + s for s in _enumerate_slots(space.base, flag, exc_bound))
    return slots


def _data_from_coords(space, flag, exc_bound, values, pos):
    if _is_zero_ring(space, flag):
        return None, pos
    if isinstance(space, Finite):
        out = tuple(values[pos + i] for i in range(space.n))
        return out, pos + space.n
    if isinstance(space, Sum):
        l, pos = _data_from_coords(space.left, flag, exc_bound, values, pos)
        r, pos = _data_from_coords(space.right, flag, exc_bound, values, pos)
        return (l, r), pos
    if flag and flag[0] == cb_rank(space):
        return values[pos], pos + 1
    tail = values[pos]
    pos += 1
    exc = {}
    for k in range(exc_bound):
        exc[k], pos = _data_from_coords(space.base, flag, exc_bound, values, pos)
    return _canon(space, flag, ("cone", exc, tail)), pos


def _coords_from_data(space, flag, exc_bound, data, out):
    if data is None:
        return
    if isinstance(space, Finite):
        out.extend(data)
        return
    if isinstance(space, Sum):
        _coords_from_data(space.left, flag, exc_bound, data[0], out)
        _coords_from_data(space.right, flag, exc_bound, data[1], out)
        return
    if flag and flag[0] == cb_rank(space):
        out.append(data)
        return
    _, exc, tail = data
    if any(k >= exc_bound for k in exc):
        raise ValueError("exception support exceeds the chosen bound")
    out.append(tail)
    for k in range(exc_bound):
        _coords_from_data(space.base, flag, exc_bound, exc.get(k, const_data(space.base, flag, tail)), out)


def cochain_coordinates(cx: AdelicComplex, degree: int, exc_bound: int = 2):
    """Dimension bookkeeping for the bounded-exception cochain space."""
    dims = []
    for A in cx.flags(degree):
        dims.append(len(_enumerate_slots(cx.space, A, exc_bound)))
    return dims


def cochain_from_coords(cx: AdelicComplex, degree: int, values, exc_bound: int = 2) -> dict:
    out = {}
    pos = 0
    for A in cx.flags(degree):
        data, pos2 = _data_from_coords(cx.space, A, exc_bound, values, pos)
        n = len(_enumerate_slots(cx.space, A, exc_bound))
        assert pos2 - pos == n
        pos = pos2
        out[A] = CFun(cx.space, A, data)
    return out


def coords_from_cochain(cx: AdelicComplex, degree: int, cochain: dict, exc_bound: int = 2):
    out: list[Rat] = []
    for A in cx.flags(degree):
        _coords_from_data(cx.space, A, exc_bound, cochain[A].data, out)
    return tuple(out)


def random_cocycle(cx: AdelicComplex, degree: int, rng: random.Random, exc_bound: int = 2) -> dict:
    """A uniform-ish random constructible cocycle with bounded exceptions.

    The kernel of the differential restricted to the bounded-exception
    subspace is computed exactly; a random rational combination of its basis
    is returned.  This samples cocycles independently of the witness search.
    """
    from .linalg import LinMap, VectQ, kernel_basis

    dims = cochain_coordinates(cx, degree, exc_bound)
    n = sum(dims)
    if degree >= cx.rank:
        values = tuple(random_rat(rng) for _ in range(n))
        return cochain_from_coords(cx, degree, values, exc_bound)
    target_bound = exc_bound  # dmap never enlarges exception support
    src = VectQ.make(n, "c")
    cols = []
    for i in range(n):
        basis_vals = tuple(ONE if j == i else ZERO for j in range(n))
        coch = cochain_from_coords(cx, degree, basis_vals, exc_bound)
        img = cx.differential(coch, degree)
        cols.append(coords_from_cochain(cx, degree + 1, img, target_bound))
    m = sum(len(_enumerate_slots(cx.space, A, target_bound)) for A in cx.flags(degree + 1))
    tgt = VectQ.make(m, "d")
    mat = LinMap.from_cols(src, tgt, cols)
    basis = kernel_basis(mat)
    values = [ZERO] * n
    for b in basis:
        c = random_rat(rng)
        values = [v + c * x for v, x in zip(values, b)]
    return cochain_from_coords(cx, degree, tuple(values), exc_bound)


def build_complex(space: SpaceExpr) -> AdelicComplex:
    return AdelicComplex(space)
