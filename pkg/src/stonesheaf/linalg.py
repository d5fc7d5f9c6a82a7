"""Exact rational linear algebra.

Everything is done over Q with `fractions.Fraction`; there is no floating
point and no tolerance anywhere in the package.  Vector spaces carry ordered
opaque basis labels so that stalks can be named after points or group
elements; two spaces are equal exactly when their dimensions and label lists
agree.  Matrices are stored dense as tuples of tuples (rows = target
coordinates), which is plenty for the small spaces that arise here.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

Rat = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


def rat(x) -> Rat:
    """Coerce an int, string like '2/3', or Fraction to an exact rational."""
    return Fraction(x)


class DimensionError(ValueError):
    pass


class ComplexError(ValueError):
    """A would-be cochain complex fails d∘d = 0; carries the bad degree."""

    def __init__(self, degree, message=None):
        self.degree = degree
        super().__init__(message or f"d∘d != 0 leaving degree {degree}")


@dataclass(frozen=True)
class VectQ:
    """A finite-dimensional Q-vector space with an ordered, labelled basis."""

    dim: int
    labels: tuple[str, ...]

    def __post_init__(self):
        if self.dim < 0:
            raise DimensionError("negative dimension")
        if len(self.labels) != self.dim:
            raise DimensionError("label count does not match dimension")
        if len(set(self.labels)) != self.dim:
            raise DimensionError("duplicate basis labels")

    @staticmethod
    def make(dim: int, prefix: str = "e") -> "VectQ":
        return VectQ(dim, tuple(f"{prefix}{i}" for i in range(dim)))

    @staticmethod
    def labelled(labels: Sequence[str]) -> "VectQ":
        return VectQ(len(labels), tuple(labels))

    def zero_vec(self) -> tuple[Rat, ...]:
        return (ZERO,) * self.dim

    def basis_vec(self, i: int) -> tuple[Rat, ...]:
        return tuple(ONE if j == i else ZERO for j in range(self.dim))


QQ = VectQ.make(1)


def vec_add(u: Sequence[Rat], v: Sequence[Rat]) -> tuple[Rat, ...]:
    return tuple(a + b for a, b in zip(u, v, strict=True))


def vec_sub(u: Sequence[Rat], v: Sequence[Rat]) -> tuple[Rat, ...]:
    return tuple(a - b for a, b in zip(u, v, strict=True))


def vec_scale(c: Rat, v: Sequence[Rat]) -> tuple[Rat, ...]:
    return tuple(c * a for a in v)


def is_zero_vec(v: Sequence[Rat]) -> bool:
    return all(a == 0 for a in v)


@dataclass(frozen=True)
class LinMap:
    """A Q-linear map; matrix has target.dim rows and source.dim columns."""

    source: VectQ
    target: VectQ
    matrix: tuple[tuple[Rat, ...], ...]

    def __post_init__(self):
        if len(self.matrix) != self.target.dim:
            raise DimensionError("row count does not match target dimension")
        for row in self.matrix:
            if len(row) != self.source.dim:
                raise DimensionError("column count does not match source dimension")

    @staticmethod
    def from_rows(source: VectQ, target: VectQ, rows) -> "LinMap":
        mat = tuple(tuple(rat(x) for x in row) for row in rows)
        return LinMap(source, target, mat)

    @staticmethod
    def from_cols(source: VectQ, target: VectQ, cols) -> "LinMap":
        cols = [tuple(rat(x) for x in col) for col in cols]
        if len(cols) != source.dim:
            raise DimensionError("column count does not match source dimension")
        rows = tuple(tuple(col[i] for col in cols) for i in range(target.dim))
        return LinMap(source, target, rows)

    @staticmethod
    def zero(source: VectQ, target: VectQ) -> "LinMap":
        return LinMap(source, target, tuple((ZERO,) * source.dim for _ in range(target.dim)))

    @staticmethod
    def identity(space: VectQ) -> "LinMap":
        return LinMap(space, space, tuple(space.basis_vec(i) for i in range(space.dim)))

    @staticmethod
    def scalar(space: VectQ, c) -> "LinMap":
        c = rat(c)
        return LinMap(space, space, tuple(vec_scale(c, space.basis_vec(i)) for i in range(space.dim)))

    def apply(self, v: Sequence[Rat]) -> tuple[Rat, ...]:
        if len(v) != self.source.dim:
            raise DimensionError("vector does not lie in the source space")
        return tuple(sum((row[j] * v[j] for j in range(self.source.dim)), ZERO) for row in self.matrix)

    def col(self, j: int) -> tuple[Rat, ...]:
        return tuple(row[j] for row in self.matrix)

    def cols(self) -> list[tuple[Rat, ...]]:
        return [self.col(j) for j in range(self.source.dim)]

    def then(self, other: "LinMap") -> "LinMap":
        """self followed by other (other ∘ self)."""
        if other.source != self.target:
            raise DimensionError("composition mismatch")
        return LinMap.from_cols(self.source, other.target, [other.apply(c) for c in self.cols()])

    def add(self, other: "LinMap") -> "LinMap":
        if (self.source, self.target) != (other.source, other.target):
            raise DimensionError("addition mismatch")
        return LinMap(self.source, self.target,
                      tuple(vec_add(r, s) for r, s in zip(self.matrix, other.matrix)))

    def sub(self, other: "LinMap") -> "LinMap":
        return self.add(other.scale(-1))

    def scale(self, c) -> "LinMap":
        c = rat(c)
        return LinMap(self.source, self.target, tuple(vec_scale(c, r) for r in self.matrix))

    def is_zero(self) -> bool:
        return all(is_zero_vec(r) for r in self.matrix)


def direct_sum_space(spaces: Sequence[VectQ], tags: Sequence[str] | None = None) -> VectQ:
    labels = []
    for idx, sp in enumerate(spaces):
        tag = tags[idx] if tags is not None else str(idx)
        labels.extend(f"{tag}.{l}" for l in sp.labels)
    return VectQ.labelled(labels)


def block_diag(maps: Sequence[LinMap], source: VectQ, target: VectQ) -> LinMap:
    """Block-diagonal map between pre-built direct sums (order as given)."""
    rows = []
    col_off = 0
    row_offsets = []
    r = 0
    for m in maps:
        row_offsets.append(r)
        r += m.target.dim
    total_rows = target.dim
    total_cols = source.dim
    mat = [[ZERO] * total_cols for _ in range(total_rows)]
    c = 0
    r = 0
    for m in maps:
        for i in range(m.target.dim):
            for j in range(m.source.dim):
                mat[r + i][c + j] = m.matrix[i][j]
        r += m.target.dim
        c += m.source.dim
    if r != total_rows or c != total_cols:
        raise DimensionError("block sizes do not fill the direct sum")
    return LinMap(source, target, tuple(tuple(row) for row in mat))


def rref(rows: list[list[Rat]]) -> tuple[list[list[Rat]], list[int]]:
    """Reduced row echelon form (exact Gaussian elimination) and pivot columns."""
    rows = [list(r) for r in rows]
    if not rows:
        return rows, []
    ncols = len(rows[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pivot = None
        for i in range(r, len(rows)):
            if rows[i][c] != 0:
                pivot = i
                break
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        pv = rows[r][c]
        rows[r] = [x / pv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows, pivots


def kernel_basis(m: LinMap) -> list[tuple[Rat, ...]]:
    """A canonical basis of ker(m), as vectors in the source space."""
    rows = [list(r) for r in m.matrix]
    red, pivots = rref(rows)
    free = [j for j in range(m.source.dim) if j not in pivots]
    basis = []
    for f in free:
        v = [ZERO] * m.source.dim
        v[f] = ONE
        for r_idx, p in enumerate(pivots):
            v[p] = -red[r_idx][f]
        basis.append(tuple(v))
    return basis


def row_space_basis(vectors: Iterable[Sequence[Rat]], dim: int) -> list[tuple[Rat, ...]]:
    """Canonical (rref echelon) basis of the span of the given vectors."""
    rows = [list(v) for v in vectors if not is_zero_vec(v)]
    if not rows:
        return []
    red, pivots = rref(rows)
    return [tuple(red[i]) for i in range(len(pivots))]


def image_basis(m: LinMap) -> list[tuple[Rat, ...]]:
    """Canonical basis of im(m), as vectors in the target space."""
    return row_space_basis(m.cols(), m.target.dim)


def rank(m: LinMap) -> int:
    return len(image_basis(m))


def solve(m: LinMap, v: Sequence[Rat]):
    """Some x with m(x) = v, or None when v is not in the image."""
    if len(v) != m.target.dim:
        raise DimensionError("right-hand side does not lie in the target space")
    aug = [list(m.matrix[i]) + [rat(v[i])] for i in range(m.target.dim)]
    red, pivots = rref(aug)
    n = m.source.dim
    x = [ZERO] * n
    for r_idx, p in enumerate(pivots):
        if p == n:
            return None
        x[p] = red[r_idx][n]
    return tuple(x)


def is_injective(m: LinMap) -> bool:
    return rank(m) == m.source.dim


def is_surjective(m: LinMap) -> bool:
    return rank(m) == m.target.dim


def is_iso(m: LinMap) -> bool:
    return m.source.dim == m.target.dim and rank(m) == m.source.dim


def invert(m: LinMap) -> LinMap:
    if not is_iso(m):
        raise DimensionError("map is not invertible")
    cols = [solve(m, m.target.basis_vec(i)) for i in range(m.target.dim)]
    return LinMap.from_cols(m.target, m.source, cols)


def coords_in_span(basis: Sequence[Sequence[Rat]], v: Sequence[Rat]):
    """Coordinates of v in the given (independent) spanning set, or None."""
    if not basis:
        return () if is_zero_vec(v) else None
    dim = len(basis[0])
    space = VectQ.make(dim, "a")
    src = VectQ.make(len(basis), "c")
    m = LinMap.from_cols(src, space, [tuple(b) for b in basis])
    return solve(m, tuple(v))


def pullback(f: LinMap, g: LinMap) -> tuple[VectQ, LinMap, LinMap]:
    """Fiber product of f: A→C and g: B→C: returns (P, P→A, P→B)."""
    if f.target != g.target:
        raise DimensionError("pullback targets differ")
    na, nb = f.source.dim, g.source.dim
    big_src = VectQ.make(na + nb, "p")
    rows = []
    for i in range(f.target.dim):
        rows.append(tuple(f.matrix[i]) + tuple(-x for x in g.matrix[i]))
    diff = LinMap(big_src, f.target, tuple(rows))
    ker = kernel_basis(diff)
    P = VectQ.make(len(ker), "pb")
    to_a = LinMap.from_cols(P, f.source, [tuple(k[:na]) for k in ker])
    to_b = LinMap.from_cols(P, g.source, [tuple(k[na:]) for k in ker])
    return P, to_a, to_b


@dataclass(frozen=True)
class FDComplex:
    """A finite cochain complex of labelled Q-vector spaces.

    `spaces` maps a degree to its space and `diffs[i]` is the differential
    from degree i to degree i+1.  Degrees not present are zero.
    """

    spaces: dict
    diffs: dict

    def degrees(self) -> list[int]:
        return sorted(self.spaces)

    def validate(self):
        for i, d in self.diffs.items():
            if d.source != self.spaces[i]:
                raise ComplexError(i, f"differential source mismatch at degree {i}")
            if i + 1 in self.spaces and d.target != self.spaces[i + 1]:
                raise ComplexError(i, f"differential target mismatch at degree {i}")
            nxt = self.diffs.get(i + 1)
            if nxt is not None and not d.then(nxt).is_zero():
                raise ComplexError(i)

    def homology_dims(self) -> dict:
        self.validate()
        out = {}
        for i in self.degrees():
            d_out = self.diffs.get(i)
            dim_ker = len(kernel_basis(d_out)) if d_out is not None else self.spaces[i].dim
            d_in = self.diffs.get(i - 1)
            dim_im = rank(d_in) if d_in is not None else 0
            out[i] = dim_ker - dim_im
        return out


def homology_dims(c: FDComplex) -> dict:
    return c.homology_dims()
