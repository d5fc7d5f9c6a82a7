"""The cube of ring sheaves and the open-stratum pushforward calculus.

For each height flag there is a sheaf of rings supported on the points of
height at least the flag's top, with one-dimensional stalks there and germ
maps spreading a value uniformly.  Taking constructible global sections of
these sheaves recovers exactly the splicing rings, flag by flag, and the
stalkwise complexes of the cube are exact with an explicit degeneracy
pattern: the stalk at a point of height a vanishes unless the flag starts
at or below a, and adding any unused height at or below a changes nothing.

`restrict_open`/`pushforward_open` give the underlying adjoint calculus for
the opens formed by the points of height at most a fixed level: restriction
drops the higher strata, the pushforward re-attaches apex stalks as the
finite-data sections of the tail family (the tail-constant truncation of
the germ colimit).
"""

from __future__ import annotations

from dataclasses import dataclass

from .linalg import LinMap, VectQ, FDComplex, ZERO, ONE, direct_sum_space
from .space import (
    Finite, SpaceExpr, Sum, cb_rank, Point, validate_point, height)
from .adelic import (
    CFun, Flag, check_flag, insert_height, flags_of_size, sign_pos, all_flags)
from .sheaf import (
    CSheaf, Section, SheafMap, constant, make_cone_sheaf, make_sum_sheaf,
    make_cone_map, make_fin_map, make_sum_map, sec_space, sec_from_coords,
    sec_to_coords, sec_dim, zero_sheaf, zero_map, stalk, stalk_map,
    sec_canonical)


def _is_zero_flag(space, flag) -> bool:
    return bool(flag) and flag[0] > cb_rank(space)


# ---------------------------------------------------------------------------
# the ring sheaves


def ring_sheaf(space: SpaceExpr, flag: Flag) -> CSheaf:
    """The sheaf of rings attached to a height flag (constructible model)."""
    check_flag(space, flag)
    return _ring_sheaf(space, flag)


def _ring_sheaf(space, flag):
    if _is_zero_flag(space, flag):
        return zero_sheaf(space)
    if isinstance(space, Finite):
        return constant(space, 1)
    if isinstance(space, Sum):
        return make_sum_sheaf(space, _ring_sheaf(space.left, flag),
                              _ring_sheaf(space.right, flag))
    r = cb_rank(space)
    Q = VectQ.make(1)
    if flag and flag[0] == r:
        tail = zero_sheaf(space.base)
        return make_cone_sheaf(space, {}, tail, Q, LinMap.zero(Q, sec_space(tail)))
    tail = _ring_sheaf(space.base, flag)
    coords = sec_to_coords(tail, ring_unit_section(space.base, flag))
    germ = LinMap.from_cols(Q, sec_space(tail), [coords])
    return make_cone_sheaf(space, {}, tail, Q, germ)


def ring_unit_section(space: SpaceExpr, flag: Flag) -> Section:
    """The unit of the ring of sections of the flag's ring sheaf."""
    F = _ring_sheaf(space, flag)
    return sec_from_coords(F, (ONE,) * sec_dim(F))


def ring_cube_map(space: SpaceExpr, flag: Flag, b: int) -> SheafMap:
    """The unit map of ring sheaves inserting one height into a flag."""
    new_flag = insert_height(flag, b)
    check_flag(space, new_flag)
    return _ring_cube_map(space, flag, b)


def _ring_cube_map(space, flag, b):
    F = _ring_sheaf(space, flag)
    G = _ring_sheaf(space, insert_height(flag, b))
    if _is_zero_flag(space, insert_height(flag, b)):
        return zero_map(F, G)
    if isinstance(space, Finite):
        return make_fin_map(F, G, [LinMap.identity(sp) for sp in F.data])
    if isinstance(space, Sum):
        return make_sum_map(F, G, _ring_cube_map(space.left, flag, b),
                            _ring_cube_map(space.right, flag, b))
    r = cb_rank(space)
    if b == r:
        tailmap = zero_map(F.tail, G.tail)
        return make_cone_map(F, G, {}, tailmap, LinMap.identity(F.apex))
    if flag and flag[0] == r:
        return make_cone_map(F, G, {}, zero_map(F.tail, G.tail), LinMap.identity(F.apex))
    return make_cone_map(F, G, {}, _ring_cube_map(space.base, flag, b),
                         LinMap.identity(F.apex))


def sheaf_cube(space: SpaceExpr) -> dict:
    """All ring sheaves indexed by nonempty flags, plus the constant sheaf at
    the empty flag; `edges` maps (flag, b) to the unit sheaf map."""
    r = cb_rank(space)
    sheaves = {(): constant(space, 1)}
    for A in all_flags(r):
        sheaves[A] = ring_sheaf(space, A)
    edges = {}
    for A in [()] + all_flags(r):
        for b in range(r + 1):
            if b in A:
                continue
            if len(A) == r + 1:
                continue
            edges[(A, b)] = ring_cube_map(space, A, b)
    return {"sheaves": sheaves, "edges": edges}


# ---------------------------------------------------------------------------
# sections of the ring sheaves versus the splicing rings


def section_to_cfun(space: SpaceExpr, flag: Flag, s: Section) -> CFun:
    """The canonical ring isomorphism from constructible sections of the
    flag's ring sheaf onto the constructible splicing ring."""
    return CFun(space, flag, _stc(space, flag, s.data))


def _stc(space, flag, data):
    if _is_zero_flag(space, flag):
        return None
    if isinstance(space, Finite):
        return tuple(v[0] for v in data)
    if isinstance(space, Sum):
        return (_stc(space.left, flag, data[0]), _stc(space.right, flag, data[1]))
    r = cb_rank(space)
    _, exc, apexv = data
    if flag and flag[0] == r:
        return apexv[0]
    tail_scalar = apexv[0] if apexv else ZERO
    exc_out = {}
    for k, sub in exc:
        exc_out[k] = _stc(space.base, flag, sub)
    from .adelic import _canon
    return _canon(space, flag, ("cone", exc_out, tail_scalar))


def cfun_to_section(f: CFun) -> Section:
    F = _ring_sheaf(f.space, f.flag)
    return sec_canonical(Section(F, _cts(f.space, f.flag, f.data)))


def _cts(space, flag, data):
    if isinstance(space, Finite):
        return tuple((v,) for v in data)
    if isinstance(space, Sum):
        return (_cts(space.left, flag, data[0]), _cts(space.right, flag, data[1]))
    r = cb_rank(space)
    if flag and flag[0] == r:
        return ("sec", (), (data,))
    _, exc, tail = data
    out = tuple(sorted((k, _cts(space.base, flag, v)) for k, v in exc.items()))
    return ("sec", out, (tail,))


# ---------------------------------------------------------------------------
# open-stratum restriction and pushforward


@dataclass(frozen=True)
class OpenSheaf:
    """A sheaf on the open subspace of points of height at most `level`."""

    space: SpaceExpr
    level: int
    data: object  # ("whole", CSheaf) | (left, right) | ("cone", exc tuple, tail)


def restrict_open(F: CSheaf, level: int) -> OpenSheaf:
    """Restriction to the open union of strata of height <= level."""
    if level < 0:
        raise ValueError("level must be a height")
    space = F.space
    if cb_rank(space) <= level:
        return OpenSheaf(space, level, ("whole", F))
    if isinstance(space, Sum):
        return OpenSheaf(space, level, (restrict_open(F.data[0], level),
                                        restrict_open(F.data[1], level)))
    exc = tuple((k, restrict_open(G, level)) for k, G in F.data[1])
    return OpenSheaf(space, level, ("cone", exc, restrict_open(F.tail, level)))


def open_copy(O: OpenSheaf, k: int) -> OpenSheaf:
    _, exc, tail = O.data
    return dict(exc).get(k, tail)


def pushforward_open(O: OpenSheaf) -> CSheaf:
    """Re-attach the higher strata: each new apex stalk is the space of
    finite-data sections of the pushed tail family (tail-constant germs),
    with the identity as germ map."""
    space = O.space
    if O.data[0] == "whole":
        return O.data[1]
    if isinstance(space, Sum):
        return make_sum_sheaf(space, pushforward_open(O.data[0]),
                              pushforward_open(O.data[1]))
    _, exc, tail = O.data
    pushed_tail = pushforward_open(tail)
    pushed_exc = {k: pushforward_open(G) for k, G in exc}
    apex = VectQ.make(sec_dim(pushed_tail), "g")
    germ = LinMap.from_cols(apex, sec_space(pushed_tail),
                            [sec_space(pushed_tail).basis_vec(i) for i in range(apex.dim)])
    return make_cone_sheaf(space, pushed_exc, pushed_tail, apex, germ)


# ---------------------------------------------------------------------------
# stalkwise acyclicity of the cube


def cube_stalk_complex(space: SpaceExpr, x: Point) -> FDComplex:
    """The augmented complex of cube stalks at a point, with signs."""
    validate_point(space, x)
    r = cb_rank(space)
    cube = sheaf_cube(space)
    sheaves, edges = cube["sheaves"], cube["edges"]
    spaces = {}
    stalks = {A: stalk(sheaves[A], x) for A in sheaves}
    flag_lists = {-1: [()]}
    for i in range(r + 1):
        flag_lists[i] = flags_of_size(r, i + 1)
    offsets = {}
    for i in range(-1, r + 1):
        spaces[i] = direct_sum_space([stalks[A] for A in flag_lists[i]],
                                     [str(A) for A in flag_lists[i]])
    diffs = {}
    for i in range(-1, r):
        rows = []
        src, tgt = spaces[i], spaces[i + 1]
        mat = [[ZERO] * src.dim for _ in range(tgt.dim)]
        col_off = {}
        off = 0
        for A in flag_lists[i]:
            col_off[A] = off
            off += stalks[A].dim
        row_off = {}
        off = 0
        for B in flag_lists[i + 1]:
            row_off[B] = off
            off += stalks[B].dim
        for B in flag_lists[i + 1]:
            for b in B:
                A = tuple(a for a in B if a != b)
                comp = stalk_map(edges[(A, b)], x)
                sign = -1 if sign_pos(A, b) % 2 else 1
                for ii in range(comp.target.dim):
                    for jj in range(comp.source.dim):
                        mat[row_off[B] + ii][col_off[A] + jj] += sign * comp.matrix[ii][jj]
        diffs[i] = LinMap(src, tgt, tuple(tuple(row) for row in mat))
    return FDComplex(spaces, diffs)


def stalkwise_cube_check(space: SpaceExpr, x: Point) -> dict:
    """Stalk dimensions of every cube sheaf at x, the degeneracy pattern,
    and exactness of the augmented stalk complex."""
    h = height(space, x)
    r = cb_rank(space)
    report = {"point": str(x), "height": h, "stalk_dims": {}, "degeneracy_ok": True}
    cube = sheaf_cube(space)
    for A, F in cube["sheaves"].items():
        d = stalk(F, x).dim
        report["stalk_dims"][A] = d
        expected = 1 if (not A or A[0] <= h) else 0
        if d != expected:
            report["degeneracy_ok"] = False
    cx = cube_stalk_complex(space, x)
    hd = cx.homology_dims()
    report["homology"] = hd
    report["exact"] = all(v == 0 for v in hd.values())
    return report


def ring_section_mul(space: SpaceExpr, flag: Flag, s: Section, t: Section) -> Section:
    """Pointwise product of sections of a ring sheaf (stalks are at most one
    dimensional, so values multiply coordinatewise)."""
    F = _ring_sheaf(space, flag)
    return sec_canonical(Section(F, _rsm(space, flag, F, s.data, t.data)))


def _rsm(space, flag, F, a, b):
    if isinstance(space, Finite):
        return tuple(tuple(x * y for x, y in zip(u, v)) for u, v in zip(a, b, strict=True))
    if isinstance(space, Sum):
        return (_rsm(space.left, flag, F.data[0], a[0], b[0]),
                _rsm(space.right, flag, F.data[1], a[1], b[1]))
    _, exca, va = a
    _, excb, vb = b
    da, db = dict(exca), dict(excb)
    keys = set(da) | set(db)
    from .sheaf import _copy_default
    out = []
    for k in sorted(keys):
        xa = da.get(k, _copy_default(F, k, va))
        xb = db.get(k, _copy_default(F, k, vb))
        out.append((k, _rsm(space.base, flag, F.copy_sheaf(k), xa, xb)))
    prod_apex = tuple(x * y for x, y in zip(va, vb))
    return ("sec", tuple(out), prod_apex)
