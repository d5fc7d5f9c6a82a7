"""Constructible sheaves of finite-dimensional Q-vector spaces.

A sheaf over a presented space is stored recursively: stalks over a finite
space, a pair over a disjoint union, and over a cone a finite family of
exceptional copies, one tail sheaf governing all remaining copies, an apex
stalk, and a germ-spreading map from the apex stalk into the finite-data
global sections of the tail sheaf.  The germ target is the constructibility
restriction: a section through the apex is eventually one fixed section of
the tail sheaf, so all data stays finite while the examples that matter
(constants, skyscrapers, the ring cube, group-ring sheaves) are represented
faithfully.

Global sections over the whole space still form an infinite-dimensional
space, because a section may deviate from the tail on any finite set of
copies; individual sections are finite records.  The fixed-format subspace
with deviations only at the stored exceptional copies is the "finite-data"
section space `sec_space`, which is what germ maps land in.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .linalg import (
    LinMap, Rat, VectQ, ZERO, ONE, rat, direct_sum_space, kernel_basis,
    image_basis, rref, solve, vec_add, vec_scale)
from .space import (
    Cone, Finite, SpaceExpr, Sum, cb_rank, Point, ClopenSet, validate_point,
    SpaceMismatch, enumerate_finite, set_is_finite, cone_member_set)


# ---------------------------------------------------------------------------
# sheaves


@dataclass(frozen=True)
class CSheaf:
    """A constructible sheaf; `data` mirrors the space expression."""

    space: SpaceExpr
    data: object

    # -- cone accessors ----------------------------------------------------
    def exc_dict(self) -> dict:
        _, exc, _tail, _apex, _germ = self.data
        return dict(exc)

    @property
    def tail(self) -> "CSheaf":
        return self.data[2]

    @property
    def apex(self) -> VectQ:
        return self.data[3]

    @property
    def germ(self) -> LinMap:
        return self.data[4]

    def copy_sheaf(self, k: int) -> "CSheaf":
        """The sheaf on copy k of a cone (stored exception or the tail)."""
        return self.exc_dict().get(k, self.tail)

    def stored_keys(self) -> tuple:
        return tuple(k for k, _ in self.data[1])


def make_cone_sheaf(space: Cone, exc: dict, tail: CSheaf, apex: VectQ, germ: LinMap) -> CSheaf:
    """Assemble a cone sheaf; stored copies may coincide with the tail (they
    then contribute finite-data section slots; `canonical` minimizes them)."""
    if germ.source != apex or germ.target != sec_space(tail):
        raise SpaceMismatch("germ map must go from the apex stalk to the tail sections")
    return CSheaf(space, ("cone", tuple(sorted(exc.items())), tail, apex, germ))


def make_fin_sheaf(space: Finite, stalks) -> CSheaf:
    stalks = tuple(stalks)
    if len(stalks) != space.n:
        raise SpaceMismatch("stalk count mismatch")
    return CSheaf(space, stalks)


def make_sum_sheaf(space: Sum, left: CSheaf, right: CSheaf) -> CSheaf:
    return CSheaf(space, (left, right))


def zero_sheaf(space: SpaceExpr) -> CSheaf:
    return constant(space, 0)


def constant(space: SpaceExpr, d: int) -> CSheaf:
    """The constant sheaf with d-dimensional stalks."""
    if d < 0:
        raise ValueError("negative dimension")
    V = VectQ.make(d)
    if isinstance(space, Finite):
        return make_fin_sheaf(space, [V] * space.n)
    if isinstance(space, Sum):
        return make_sum_sheaf(space, constant(space.left, d), constant(space.right, d))
    tail = constant(space.base, d)
    germ = LinMap.from_cols(V, sec_space(tail),
                            [sec_to_coords(tail, constant_section(tail, V.basis_vec(i)))
                             for i in range(d)])
    return make_cone_sheaf(space, {}, tail, V, germ)


def constant_section(F: CSheaf, value) -> "Section":
    """The section of a constant-shaped sheaf taking the given stalk value."""
    if isinstance(F.space, Finite):
        return Section(F, tuple(tuple(value) for _ in range(F.space.n)))
    if isinstance(F.space, Sum):
        l, r = F.data
        return Section(F, (constant_section(l, value).data, constant_section(r, value).data))
    return Section(F, ("sec", (), tuple(value)))


def skyscraper(space: SpaceExpr, x: Point, d: int) -> CSheaf:
    """The sheaf with stalk Q^d at x and zero elsewhere."""
    validate_point(space, x)
    return _sky(space, x.addr, d)


def _sky(space, addr, d):
    V = VectQ.make(d)
    if isinstance(space, Finite):
        return make_fin_sheaf(space, [V if i == addr[1] else VectQ.make(0) for i in range(space.n)])
    if isinstance(space, Sum):
        if addr[0] == "L":
            return make_sum_sheaf(space, _sky(space.left, addr[1], d), zero_sheaf(space.right))
        return make_sum_sheaf(space, zero_sheaf(space.left), _sky(space.right, addr[1], d))
    tail = zero_sheaf(space.base)
    if addr[0] == "apex":
        return make_cone_sheaf(space, {}, tail, V, LinMap.zero(V, sec_space(tail)))
    exc = {addr[1]: _sky(space.base, addr[2], d)}
    return make_cone_sheaf(space, exc, tail, VectQ.make(0),
                           LinMap.zero(VectQ.make(0), sec_space(tail)))


def stalk(F: CSheaf, x: Point) -> VectQ:
    validate_point(F.space, x)
    return _stalk_addr(F, x.addr)


def _stalk_addr(F, addr):
    if isinstance(F.space, Finite):
        return F.data[addr[1]]
    if isinstance(F.space, Sum):
        return _stalk_addr(F.data[0] if addr[0] == "L" else F.data[1], addr[1])
    if addr[0] == "apex":
        return F.apex
    return _stalk_addr(F.copy_sheaf(addr[1]), addr[2])


# ---------------------------------------------------------------------------
# sections


@dataclass(frozen=True)
class Section:
    """A constructible global section; may deviate from the tail pattern at
    finitely many copies of each cone, listed or not in the sheaf itself."""

    sheaf: CSheaf
    data: object


def zero_section(F: CSheaf) -> Section:
    if isinstance(F.space, Finite):
        return Section(F, tuple(sp.zero_vec() for sp in F.data))
    if isinstance(F.space, Sum):
        return Section(F, (zero_section(F.data[0]).data, zero_section(F.data[1]).data))
    return Section(F, ("sec", (), F.apex.zero_vec()))


def sec_dim(F: CSheaf) -> int:
    if isinstance(F.space, Finite):
        return sum(sp.dim for sp in F.data)
    if isinstance(F.space, Sum):
        return sec_dim(F.data[0]) + sec_dim(F.data[1])
    return sum(sec_dim(G) for _, G in F.data[1]) + F.apex.dim


def sec_space(F: CSheaf) -> VectQ:
    return VectQ.make(sec_dim(F), "s")


def sec_to_coords(F: CSheaf, s: Section):
    """Coordinates in the finite-data section space; the section must not
    deviate outside the sheaf's stored exceptional copies."""
    out: list[Rat] = []
    _sec_coords(F, s.data, out)
    return tuple(out)


def _sec_coords(F, data, out):
    if isinstance(F.space, Finite):
        for v in data:
            out.extend(v)
        return
    if isinstance(F.space, Sum):
        _sec_coords(F.data[0], data[0], out)
        _sec_coords(F.data[1], data[1], out)
        return
    _, exc, apexv = data
    excd = dict(exc)
    stored = F.stored_keys()
    for k in excd:
        if k not in stored:
            got = sec_canonical(Section(F.tail, excd[k])).data
            want = sec_canonical(Section(F.tail, _copy_default(F, k, apexv))).data
            if got != want:
                raise ValueError("section deviates outside the stored copies")
    for k, G in F.data[1]:
        sub = excd.get(k)
        if sub is None:
            sub = _copy_default(F, k, apexv)
        _sec_coords(G, sub, out)
    out.extend(apexv)


def sec_from_coords(F: CSheaf, coords) -> Section:
    data, pos = _sec_build(F, coords, 0)
    if pos != len(coords):
        raise ValueError("coordinate length mismatch")
    return Section(F, data)


def _sec_build(F, coords, pos):
    if isinstance(F.space, Finite):
        vals = []
        for sp in F.data:
            vals.append(tuple(coords[pos:pos + sp.dim]))
            pos += sp.dim
        return tuple(vals), pos
    if isinstance(F.space, Sum):
        l, pos = _sec_build(F.data[0], coords, pos)
        r, pos = _sec_build(F.data[1], coords, pos)
        return (l, r), pos
    exc = []
    for k, G in F.data[1]:
        sub, pos = _sec_build(G, coords, pos)
        exc.append((k, sub))
    apexv = tuple(coords[pos:pos + F.apex.dim])
    pos += F.apex.dim
    return ("sec", tuple(exc), apexv), pos


def germ_section(F: CSheaf, apexv) -> Section:
    """The tail section spread from an apex value (the germ representative)."""
    coords = F.germ.apply(tuple(apexv))
    return sec_from_coords(F.tail, coords)


def section_of_copy(F: CSheaf, k: int, apexv) -> Section:
    """The value of the spread section on copy k; only copies carrying the
    tail sheaf have a default, genuinely exceptional ones need explicit data."""
    if F.copy_sheaf(k) != F.tail:
        raise ValueError("section must list genuinely exceptional copies")
    return germ_section(F, apexv)


def sec_canonical(s: Section) -> Section:
    F = s.sheaf
    if isinstance(F.space, Finite):
        return s
    if isinstance(F.space, Sum):
        return Section(F, (sec_canonical(Section(F.data[0], s.data[0])).data,
                           sec_canonical(Section(F.data[1], s.data[1])).data))
    _, exc, apexv = s.data
    stored = set(F.stored_keys())
    default = sec_canonical(germ_section(F, apexv))
    cleaned = []
    for k, sub in sorted(exc):
        G = F.copy_sheaf(k)
        subs = sec_canonical(Section(G, sub))
        if k in stored or subs.data != default.data:
            cleaned.append((k, subs.data))
    return Section(F, ("sec", tuple(cleaned), tuple(apexv)))


def sec_add(s: Section, t: Section) -> Section:
    if s.sheaf != t.sheaf:
        raise SpaceMismatch("sections of different sheaves")
    return Section(s.sheaf, _sec_zip(s.sheaf, s.data, t.data, vec_add))


def sec_scale(c, s: Section) -> Section:
    c = rat(c)
    return Section(s.sheaf, _sec_map_values(s.sheaf, s.data, lambda v: vec_scale(c, v)))


def _sec_zip(F, a, b, op):
    if isinstance(F.space, Finite):
        return tuple(op(x, y) for x, y in zip(a, b, strict=True))
    if isinstance(F.space, Sum):
        return (_sec_zip(F.data[0], a[0], b[0], op), _sec_zip(F.data[1], a[1], b[1], op))
    _, exca, va = a
    _, excb, vb = b
    da, db = dict(exca), dict(excb)
    keys = set(da) | set(db)
    out = []
    for k in sorted(keys):
        G = F.copy_sheaf(k)
        xa = da.get(k, _copy_default(F, k, va))
        xb = db.get(k, _copy_default(F, k, vb))
        out.append((k, _sec_zip(G, xa, xb, op)))
    return ("sec", tuple(out), op(va, vb))


def sec_reencode(T_old: CSheaf, T_new: CSheaf, data):
    """Re-express a section record of one presentation of a sheaf over
    another presentation (same sheaf, possibly different stored copies)."""
    if T_old == T_new:
        return data
    if isinstance(T_old.space, Finite):
        return data
    if isinstance(T_old.space, Sum):
        return (sec_reencode(T_old.data[0], T_new.data[0], data[0]),
                sec_reencode(T_old.data[1], T_new.data[1], data[1]))
    _, exc, v = data
    excd = dict(exc)
    out = []
    for k in sorted(set(excd) | set(T_new.stored_keys())):
        sub = excd.get(k)
        old_rec = T_old.copy_sheaf(k)
        if sub is None:
            sub = _copy_default(T_old, k, v)
            old_rec = T_old.tail
        out.append((k, sec_reencode(old_rec, T_new.copy_sheaf(k), sub)))
    return ("sec", tuple(out), v)


def _copy_default(F, k, apexv):
    """The section value of a tail-carrying copy, spread from the apex."""
    rec = F.copy_sheaf(k)
    base = germ_section(F, apexv).data
    if rec == F.tail:
        return base
    if canonical(rec) != canonical(F.tail):
        raise ValueError("section must list genuinely exceptional copies")
    return sec_reencode(F.tail, rec, base)


def _sec_map_values(F, data, op):
    if isinstance(F.space, Finite):
        return tuple(op(v) for v in data)
    if isinstance(F.space, Sum):
        return (_sec_map_values(F.data[0], data[0], op), _sec_map_values(F.data[1], data[1], op))
    _, exc, v = data
    return ("sec", tuple((k, _sec_map_values(F.copy_sheaf(k), sub, op)) for k, sub in exc), op(v))


def sec_eval(F: CSheaf, s: Section, x: Point):
    """The value of a section at a point."""
    validate_point(F.space, x)
    return _sec_eval(F, s.data, x.addr)


def _sec_eval(F, data, addr):
    if isinstance(F.space, Finite):
        return data[addr[1]]
    if isinstance(F.space, Sum):
        if addr[0] == "L":
            return _sec_eval(F.data[0], data[0], addr[1])
        return _sec_eval(F.data[1], data[1], addr[1])
    _, exc, apexv = data
    if addr[0] == "apex":
        return apexv
    k = addr[1]
    d = dict(exc)
    sub = d.get(k)
    if sub is None:
        sub = _copy_default(F, k, apexv)
    return _sec_eval(F.copy_sheaf(k), sub, addr[2])


def eval_map(F: CSheaf, x: Point) -> LinMap:
    """Evaluation of finite-data sections at x, as a linear map."""
    validate_point(F.space, x)
    S = sec_space(F)
    cols = []
    for i in range(S.dim):
        s = sec_from_coords(F, S.basis_vec(i))
        cols.append(_sec_eval(F, s.data, x.addr))
    return LinMap.from_cols(S, _stalk_addr(F, x.addr), cols)


# ---------------------------------------------------------------------------
# sheaf maps


@dataclass(frozen=True)
class SheafMap:
    """A map of constructible sheaves.

    Components mirror the cone structure: one map per copy listed in either
    sheaf, one tail map, one apex map.  The apex square must commute: taking
    finite-data sections of the tail map and precomposing with the source
    germ equals the target germ after the apex map.
    """

    source: CSheaf
    target: CSheaf
    data: object

    def exc_dict(self) -> dict:
        return dict(self.data[1])

    @property
    def tail_map(self) -> "SheafMap":
        return self.data[2]

    @property
    def apex_map(self) -> LinMap:
        return self.data[3]

    def copy_map(self, k: int) -> "SheafMap":
        return self.exc_dict().get(k, self.tail_map)


class GermSquareError(ValueError):
    pass


def make_cone_map(F: CSheaf, G: CSheaf, exc: dict, tail: "SheafMap", apex: LinMap,
                  check: bool = True) -> SheafMap:
    keys = set(F.stored_keys()) | set(G.stored_keys()) | set(exc)
    comps = {}
    for k in sorted(keys):
        m = exc.get(k)
        if m is None:
            if k in F.stored_keys() or k in G.stored_keys():
                raise SpaceMismatch(f"missing map component at stored copy {k}")
            m = tail
        if m.source != F.copy_sheaf(k) or m.target != G.copy_sheaf(k):
            raise SpaceMismatch(f"copy {k} component has wrong endpoints")
        comps[k] = m
    if check:
        lhs = F.germ.then(sec_functor(tail))
        rhs = apex.then(G.germ)
        if lhs != rhs:
            raise GermSquareError("apex square does not commute")
    cleaned = tuple(sorted((k, m) for k, m in comps.items()
                           if not (m == tail and k not in F.stored_keys() and k not in G.stored_keys())))
    return SheafMap(F, G, ("conemap", cleaned, tail, apex))


def make_fin_map(F: CSheaf, G: CSheaf, maps) -> SheafMap:
    maps = tuple(maps)
    for i, m in enumerate(maps):
        if m.source != F.data[i] or m.target != G.data[i]:
            raise SpaceMismatch(f"stalk map {i} has wrong endpoints")
    return SheafMap(F, G, maps)


def make_sum_map(F: CSheaf, G: CSheaf, left: SheafMap, right: SheafMap) -> SheafMap:
    return SheafMap(F, G, (left, right))


def zero_map(F: CSheaf, G: CSheaf) -> SheafMap:
    if isinstance(F.space, Finite):
        return make_fin_map(F, G, [LinMap.zero(F.data[i], G.data[i]) for i in range(F.space.n)])
    if isinstance(F.space, Sum):
        return make_sum_map(F, G, zero_map(F.data[0], G.data[0]), zero_map(F.data[1], G.data[1]))
    exc = {k: zero_map(F.copy_sheaf(k), G.copy_sheaf(k))
           for k in set(F.stored_keys()) | set(G.stored_keys())}
    return make_cone_map(F, G, exc, zero_map(F.tail, G.tail),
                         LinMap.zero(F.apex, G.apex))


def identity_map(F: CSheaf) -> SheafMap:
    if isinstance(F.space, Finite):
        return make_fin_map(F, F, [LinMap.identity(sp) for sp in F.data])
    if isinstance(F.space, Sum):
        return make_sum_map(F, F, identity_map(F.data[0]), identity_map(F.data[1]))
    exc = {k: identity_map(G) for k, G in F.data[1]}
    return make_cone_map(F, F, exc, identity_map(F.tail), LinMap.identity(F.apex))


def compose(f: SheafMap, g: SheafMap) -> SheafMap:
    """f followed by g."""
    if f.target != g.source:
        raise SpaceMismatch("composition mismatch")
    F, H = f.source, g.target
    if isinstance(F.space, Finite):
        return make_fin_map(F, H, [a.then(b) for a, b in zip(f.data, g.data, strict=True)])
    if isinstance(F.space, Sum):
        return make_sum_map(F, H, compose(f.data[0], g.data[0]), compose(f.data[1], g.data[1]))
    keys = set(dict(f.data[1])) | set(dict(g.data[1])) | set(F.stored_keys()) | set(H.stored_keys())
    exc = {k: compose(f.copy_map(k), g.copy_map(k)) for k in keys}
    return make_cone_map(F, H, exc, compose(f.tail_map, g.tail_map),
                         f.apex_map.then(g.apex_map), check=False)


def map_add(f: SheafMap, g: SheafMap) -> SheafMap:
    if f.source != g.source or f.target != g.target:
        raise SpaceMismatch("sum mismatch")
    F, G = f.source, f.target
    if isinstance(F.space, Finite):
        return make_fin_map(F, G, [a.add(b) for a, b in zip(f.data, g.data, strict=True)])
    if isinstance(F.space, Sum):
        return make_sum_map(F, G, map_add(f.data[0], g.data[0]), map_add(f.data[1], g.data[1]))
    keys = set(dict(f.data[1])) | set(dict(g.data[1]))
    exc = {k: map_add(f.copy_map(k), g.copy_map(k)) for k in keys}
    return make_cone_map(F, G, exc, map_add(f.tail_map, g.tail_map),
                         f.apex_map.add(g.apex_map), check=False)


def map_scale(c, f: SheafMap) -> SheafMap:
    F, G = f.source, f.target
    if isinstance(F.space, Finite):
        return make_fin_map(F, G, [m.scale(c) for m in f.data])
    if isinstance(F.space, Sum):
        return make_sum_map(F, G, map_scale(c, f.data[0]), map_scale(c, f.data[1]))
    exc = {k: map_scale(c, m) for k, m in f.data[1]}
    return make_cone_map(F, G, exc, map_scale(c, f.tail_map), f.apex_map.scale(c), check=False)


def sec_functor(f: SheafMap) -> LinMap:
    """The induced map on finite-data section spaces.

    Requires the source's stored copies to be stored in the target as well
    (operations align sheaves so this holds).
    """
    F, G = f.source, f.target
    cols = []
    S = sec_space(F)
    for i in range(S.dim):
        s = sec_from_coords(F, S.basis_vec(i))
        cols.append(sec_to_coords(G, apply_map(f, s)))
    return LinMap.from_cols(S, sec_space(G), cols)


def apply_map(f: SheafMap, s: Section) -> Section:
    if s.sheaf != f.source:
        raise SpaceMismatch("section does not live in the map's source")
    return Section(f.target, _apply_map(f, s.data))


def _apply_map(f, data):
    F = f.source
    if isinstance(F.space, Finite):
        return tuple(m.apply(v) for m, v in zip(f.data, data, strict=True))
    if isinstance(F.space, Sum):
        return (_apply_map(f.data[0], data[0]), _apply_map(f.data[1], data[1]))
    _, exc, apexv = data
    out = []
    for k, sub in exc:
        out.append((k, _apply_map(f.copy_map(k), sub)))
    return ("sec", tuple(out), f.apex_map.apply(apexv))


def stalk_map(f: SheafMap, x: Point) -> LinMap:
    validate_point(f.source.space, x)
    return _stalk_map(f, x.addr)


def _stalk_map(f, addr):
    F = f.source
    if isinstance(F.space, Finite):
        return f.data[addr[1]]
    if isinstance(F.space, Sum):
        return _stalk_map(f.data[0] if addr[0] == "L" else f.data[1], addr[1])
    if addr[0] == "apex":
        return f.apex_map
    return _stalk_map(f.copy_map(addr[1]), addr[2])


def check_sheaf_map(f: SheafMap) -> bool:
    """Validate all apex squares (used for maps assembled with check=False)."""
    F = f.source
    if isinstance(F.space, Finite):
        return True
    if isinstance(F.space, Sum):
        return check_sheaf_map(f.data[0]) and check_sheaf_map(f.data[1])
    ok = F.germ.then(sec_functor(f.tail_map)) == f.apex_map.then(f.target.germ)
    return ok and all(check_sheaf_map(m) for _, m in f.data[1]) and check_sheaf_map(f.tail_map)


# ---------------------------------------------------------------------------
# alignment
#
# Binary operations require both sheaves to store the same exceptional copy
# keys at every cone level (so that the section functor and componentwise
# maps are total).  A key tree records the nesting of stored keys; sheaves
# are conformed to a merged tree by materializing copies of the tail and
# re-coordinatizing germ maps where the tail itself grows.


def key_tree(F: CSheaf):
    if isinstance(F.space, Finite):
        return ("fin",)
    if isinstance(F.space, Sum):
        return ("sum", key_tree(F.data[0]), key_tree(F.data[1]))
    tail_tree = key_tree(F.tail)
    copies = {k: key_tree(G) for k, G in F.data[1]}
    return ("cone", copies, tail_tree)


def merge_trees(t1, t2):
    if t1[0] == "fin":
        return t1
    if t1[0] == "sum":
        return ("sum", merge_trees(t1[1], t2[1]), merge_trees(t1[2], t2[2]))
    tail = merge_trees(t1[2], t2[2])
    keys = set(t1[1]) | set(t2[1])
    copies = {k: merge_trees(t1[1].get(k, t1[2]), t2[1].get(k, t2[2])) for k in keys}
    return ("cone", copies, tail)


def conform(F: CSheaf, tree) -> CSheaf:
    """Materialize exceptional copies to match the key tree (which must
    refine the sheaf's own tree).  Records are intentionally non-canonical."""
    if isinstance(F.space, Finite):
        return F
    if isinstance(F.space, Sum):
        return CSheaf(F.space, (conform(F.data[0], tree[1]), conform(F.data[1], tree[2])))
    _, copies, tail_tree = tree
    new_tail = conform(F.tail, tail_tree)
    exc = tuple(sorted((k, conform(F.copy_sheaf(k), copies[k])) for k in copies))
    germ = _reencode_germ(F, new_tail)
    return CSheaf(F.space, ("cone", exc, new_tail, F.apex, germ))


def _reencode_germ(F: CSheaf, new_tail: CSheaf) -> LinMap:
    """Express the germ map in the (possibly enlarged) tail section space."""
    if new_tail == F.tail:
        return F.germ
    cols = []
    for i in range(F.apex.dim):
        s = germ_section(F, F.apex.basis_vec(i))
        cols.append(sec_to_coords(new_tail, Section(new_tail, s.data)))
    return LinMap.from_cols(F.apex, sec_space(new_tail), cols)


def align_pair(F: CSheaf, G: CSheaf) -> tuple[CSheaf, CSheaf]:
    """Conform both sheaves to the merged key tree (deep alignment)."""
    tree = merge_trees(key_tree(F), key_tree(G))
    return conform(F, tree), conform(G, tree)


def conform_map(f: SheafMap, tree) -> SheafMap:
    """Restate a sheaf map over conformed source and target."""
    F2 = conform(f.source, tree)
    G2 = conform(f.target, tree)
    return SheafMap(F2, G2, _conform_map_data(f, F2, G2, tree))


def _conform_map_data(f, F2, G2, tree):
    if isinstance(F2.space, Finite):
        return f.data
    if isinstance(F2.space, Sum):
        l = SheafMap(F2.data[0], G2.data[0], _conform_map_data(f.data[0], F2.data[0], G2.data[0], tree[1]))
        r = SheafMap(F2.data[1], G2.data[1], _conform_map_data(f.data[1], F2.data[1], G2.data[1], tree[2]))
        return (l, r)
    _, copies, tail_tree = tree
    tail2 = SheafMap(F2.tail, G2.tail, _conform_map_data(f.tail_map, F2.tail, G2.tail, tail_tree))
    exc = []
    for k in sorted(copies):
        mk = f.copy_map(k)
        sub = SheafMap(F2.copy_sheaf(k), G2.copy_sheaf(k),
                       _conform_map_data(mk, F2.copy_sheaf(k), G2.copy_sheaf(k), copies[k]))
        exc.append((k, sub))
    return ("conemap", tuple(exc), tail2, f.apex_map)


def align_map(f: SheafMap) -> SheafMap:
    """Conform a map so source and target share one key tree everywhere."""
    tree = merge_trees(key_tree(f.source), key_tree(f.target))
    return conform_map(f, tree)


def sec_strict_canonical(T: CSheaf, data):
    """Section record with every default-valued copy entry removed (whether
    or not the sheaf stores the copy); records the true deviation keys."""
    if isinstance(T.space, Finite):
        return data
    if isinstance(T.space, Sum):
        return (sec_strict_canonical(T.data[0], data[0]),
                sec_strict_canonical(T.data[1], data[1]))
    _, exc, apexv = data
    cleaned = []
    for k, sub in sorted(exc):
        G = T.copy_sheaf(k)
        subc = sec_strict_canonical(G, sub)
        if G != T.tail or subc != sec_strict_canonical(T.tail, _copy_default(T, k, apexv)):
            cleaned.append((k, subc))
    return ("sec", tuple(cleaned), tuple(apexv))


def _dev_tree(T: CSheaf, data):
    """Key tree spanned by a strict-canonical section record."""
    if isinstance(T.space, Finite):
        return ("fin",)
    if isinstance(T.space, Sum):
        return ("sum", _dev_tree(T.data[0], data[0]), _dev_tree(T.data[1], data[1]))
    _, exc, _v = data
    copies = {k: _dev_tree(T.copy_sheaf(k), sub) for k, sub in exc}
    return ("cone", copies, _min_tree(T.tail))


def _min_tree(T: CSheaf):
    if isinstance(T.space, Finite):
        return ("fin",)
    if isinstance(T.space, Sum):
        return ("sum", _min_tree(T.data[0]), _min_tree(T.data[1]))
    return ("cone", {}, _min_tree(T.tail))


def canonical(F: CSheaf) -> CSheaf:
    """The minimal-threshold normal form: a stored copy is dropped when its
    record matches the tail and no germ section deviates there."""
    if isinstance(F.space, Finite):
        return F
    if isinstance(F.space, Sum):
        return CSheaf(F.space, (canonical(F.data[0]), canonical(F.data[1])))
    tail_c = canonical(F.tail)
    germ_recs = [sec_strict_canonical(F.tail, germ_section(F, F.apex.basis_vec(i)).data)
                 for i in range(F.apex.dim)]
    tree = key_tree(tail_c)
    for rec in germ_recs:
        tree = merge_trees(tree, _dev_tree(F.tail, rec))
    tail_f = conform(tail_c, tree)
    cols = [sec_to_coords(tail_f, Section(tail_f, rec)) for rec in germ_recs]
    germ = LinMap.from_cols(F.apex, sec_space(tail_f), cols)
    exc = {}
    for k, G in F.data[1]:
        Gc = canonical(G)
        if Gc != tail_f:
            exc[k] = Gc
    return CSheaf(F.space, ("cone", tuple(sorted(exc.items())), tail_f, F.apex, germ))


def sheaves_equal(F: CSheaf, G: CSheaf) -> bool:
    return canonical(F) == canonical(G)


# ---------------------------------------------------------------------------
# abelian-category structure


def direct_sum(F: CSheaf, G: CSheaf):
    """Returns (F⊕G, include_F, include_G, project_F, project_G)."""
    if F.space != G.space:
        raise SpaceMismatch("direct sum over different spaces")
    F, G = align_pair(F, G)
    if isinstance(F.space, Finite):
        stalks = []
        for a, b in zip(F.data, G.data, strict=True):
            stalks.append(direct_sum_space([a, b], ["l", "r"]))
        S = make_fin_sheaf(F.space, stalks)
        inf = make_fin_map(F, S, [_incl_first(a, b, st) for a, b, st in zip(F.data, G.data, stalks)])
        ing = make_fin_map(G, S, [_incl_second(a, b, st) for a, b, st in zip(F.data, G.data, stalks)])
        prf = make_fin_map(S, F, [_proj_first(a, b, st) for a, b, st in zip(F.data, G.data, stalks)])
        prg = make_fin_map(S, G, [_proj_second(a, b, st) for a, b, st in zip(F.data, G.data, stalks)])
        return S, inf, ing, prf, prg
    if isinstance(F.space, Sum):
        ls, li1, li2, lp1, lp2 = direct_sum(F.data[0], G.data[0])
        rs, ri1, ri2, rp1, rp2 = direct_sum(F.data[1], G.data[1])
        S = make_sum_sheaf(F.space, ls, rs)
        return (S, make_sum_map(F, S, li1, ri1), make_sum_map(G, S, li2, ri2),
                make_sum_map(S, F, lp1, rp1), make_sum_map(S, G, lp2, rp2))
    tail_S, t_i1, t_i2, t_p1, t_p2 = direct_sum(F.tail, G.tail)
    apex = direct_sum_space([F.apex, G.apex], ["l", "r"])
    exc_parts = {k: direct_sum(F.copy_sheaf(k), G.copy_sheaf(k)) for k in F.stored_keys()}
    i1s, i2s = sec_functor(t_i1), sec_functor(t_i2)
    cols = []
    for i in range(F.apex.dim):
        cols.append(i1s.apply(F.germ.apply(F.apex.basis_vec(i))))
    for i in range(G.apex.dim):
        cols.append(i2s.apply(G.germ.apply(G.apex.basis_vec(i))))
    germ = LinMap.from_cols(apex, sec_space(tail_S), cols)
    S = make_cone_sheaf(F.space, {k: v[0] for k, v in exc_parts.items()}, tail_S, apex, germ)
    inf = make_cone_map(F, S, {k: v[1] for k, v in exc_parts.items()}, t_i1,
                        _incl_first(F.apex, G.apex, apex))
    ing = make_cone_map(G, S, {k: v[2] for k, v in exc_parts.items()}, t_i2,
                        _incl_second(F.apex, G.apex, apex))
    prf = make_cone_map(S, F, {k: v[3] for k, v in exc_parts.items()}, t_p1,
                        _proj_first(F.apex, G.apex, apex))
    prg = make_cone_map(S, G, {k: v[4] for k, v in exc_parts.items()}, t_p2,
                        _proj_second(F.apex, G.apex, apex))
    return S, inf, ing, prf, prg


def _incl_first(a: VectQ, b: VectQ, s: VectQ) -> LinMap:
    cols = [tuple(list(a.basis_vec(i)) + [ZERO] * b.dim) for i in range(a.dim)]
    return LinMap.from_cols(a, s, cols)


def _incl_second(a: VectQ, b: VectQ, s: VectQ) -> LinMap:
    cols = [tuple([ZERO] * a.dim + list(b.basis_vec(i))) for i in range(b.dim)]
    return LinMap.from_cols(b, s, cols)


def _proj_first(a: VectQ, b: VectQ, s: VectQ) -> LinMap:
    rows = [tuple(list(a.basis_vec(i)) + [ZERO] * b.dim) for i in range(a.dim)]
    return LinMap.from_rows(s, a, rows)


def _proj_second(a: VectQ, b: VectQ, s: VectQ) -> LinMap:
    rows = [tuple([ZERO] * a.dim + list(b.basis_vec(i))) for i in range(b.dim)]
    return LinMap.from_rows(s, b, rows)


def _subspace(amb: VectQ, basis, prefix="k") -> tuple[VectQ, LinMap]:
    K = VectQ.make(len(basis), prefix)
    return K, LinMap.from_cols(K, amb, [tuple(b) for b in basis])


def _quotient(amb: VectQ, basis, prefix="q") -> tuple[VectQ, LinMap]:
    """Quotient of amb by the span of basis; returns (Q, projection)."""
    red, pivots = rref([list(b) for b in basis])
    free = [j for j in range(amb.dim) if j not in pivots]
    Q = VectQ.make(len(free), prefix)
    rows = []
    for idx, j in enumerate(free):
        row = [ZERO] * amb.dim
        row[j] = ONE
        for r_i, p in enumerate(pivots):
            row[p] = -red[r_i][j]
        rows.append(tuple(row))
    return Q, LinMap.from_rows(amb, Q, rows)


def kernel(f: SheafMap) -> tuple[CSheaf, SheafMap]:
    """The kernel sheaf with its inclusion; stalks are kernels stalkwise."""
    f = align_map(f)
    return _kernel(f)


def _kernel(f: SheafMap) -> tuple[CSheaf, SheafMap]:
    F, G = f.source, f.target
    if isinstance(F.space, Finite):
        stalks, incls = [], []
        for m in f.data:
            K, incl = _subspace(m.source, kernel_basis(m))
            stalks.append(K)
            incls.append(incl)
        KF = make_fin_sheaf(F.space, stalks)
        return KF, make_fin_map(KF, F, incls)
    if isinstance(F.space, Sum):
        lk, li = _kernel(f.data[0])
        rk, ri = _kernel(f.data[1])
        KF = make_sum_sheaf(F.space, lk, rk)
        return KF, make_sum_map(KF, F, li, ri)
    kt, it_ = _kernel(f.tail_map)
    exc = {k: _kernel(f.copy_map(k)) for k in F.stored_keys()}
    Ka, ia = _subspace(F.apex, kernel_basis(f.apex_map))
    sec_incl = sec_functor(it_)
    cols = []
    for i in range(Ka.dim):
        target_vec = F.germ.apply(ia.apply(Ka.basis_vec(i)))
        x = solve(sec_incl, target_vec)
        if x is None:
            raise AssertionError("kernel germ does not factor through kernel sections")
        cols.append(x)
    germ = LinMap.from_cols(Ka, sec_space(kt), cols)
    KF = make_cone_sheaf(F.space, {k: v[0] for k, v in exc.items()}, kt, Ka, germ)
    incl = make_cone_map(KF, F, {k: v[1] for k, v in exc.items()}, it_, ia, check=False)
    return KF, incl


def cokernel(f: SheafMap) -> tuple[CSheaf, SheafMap]:
    """The cokernel sheaf with its projection."""
    f = align_map(f)
    return _cokernel(f)


def _cokernel(f: SheafMap) -> tuple[CSheaf, SheafMap]:
    F, G = f.source, f.target
    if isinstance(G.space, Finite):
        stalks, projs = [], []
        for m in f.data:
            Q, pr = _quotient(m.target, image_basis(m))
            stalks.append(Q)
            projs.append(pr)
        QF = make_fin_sheaf(G.space, stalks)
        return QF, make_fin_map(G, QF, projs)
    if isinstance(G.space, Sum):
        lq, lp = _cokernel(f.data[0])
        rq, rp = _cokernel(f.data[1])
        QF = make_sum_sheaf(G.space, lq, rq)
        return QF, make_sum_map(G, QF, lp, rp)
    qt, pt = _cokernel(f.tail_map)
    exc = {k: _cokernel(f.copy_map(k)) for k in G.stored_keys()}
    Qa, pa = _quotient(G.apex, image_basis(f.apex_map))
    sec_proj = sec_functor(pt)
    cols = []
    for i in range(Qa.dim):
        lift = solve(pa, Qa.basis_vec(i))
        cols.append(sec_proj.apply(G.germ.apply(lift)))
    germ = LinMap.from_cols(Qa, sec_space(qt), cols)
    QF = make_cone_sheaf(G.space, {k: v[0] for k, v in exc.items()}, qt, Qa, germ)
    proj = make_cone_map(G, QF, {k: v[1] for k, v in exc.items()}, pt, pa, check=False)
    return QF, proj


def tensor(F: CSheaf, G: CSheaf) -> CSheaf:
    if F.space != G.space:
        raise SpaceMismatch("tensor over different spaces")
    F, G = align_pair(F, G)
    if isinstance(F.space, Finite):
        return make_fin_sheaf(F.space, [_tensor_space(a, b) for a, b in zip(F.data, G.data, strict=True)])
    if isinstance(F.space, Sum):
        return make_sum_sheaf(F.space, tensor(F.data[0], G.data[0]), tensor(F.data[1], G.data[1]))
    tail = tensor(F.tail, G.tail)
    apex = _tensor_space(F.apex, G.apex)
    cols = []
    for i in range(F.apex.dim):
        si = germ_section(F, F.apex.basis_vec(i))
        for j in range(G.apex.dim):
            tj = germ_section(G, G.apex.basis_vec(j))
            cols.append(sec_to_coords(tail, tensor_section(F.tail, G.tail, si, tj)))
    germ = LinMap.from_cols(apex, sec_space(tail), cols)
    exc = {k: tensor(F.copy_sheaf(k), G.copy_sheaf(k)) for k in F.stored_keys()}
    return make_cone_sheaf(F.space, exc, tail, apex, germ)


def _tensor_space(a: VectQ, b: VectQ) -> VectQ:
    labels = tuple(f"{x}*{y}" for x in a.labels for y in b.labels)
    return VectQ.labelled(labels)


def _tensor_vec(a, b):
    return tuple(x * y for x in a for y in b)


def tensor_section(F: CSheaf, G: CSheaf, s: Section, t: Section) -> Section:
    """The pointwise tensor of sections, a section of the tensor sheaf."""
    T = tensor(F, G)
    return Section(T, _tensor_sec(F, G, T, s.data, t.data))


def _tensor_sec(F, G, T, a, b):
    if isinstance(F.space, Finite):
        return tuple(_tensor_vec(x, y) for x, y in zip(a, b, strict=True))
    if isinstance(F.space, Sum):
        return (_tensor_sec(F.data[0], G.data[0], T.data[0], a[0], b[0]),
                _tensor_sec(F.data[1], G.data[1], T.data[1], a[1], b[1]))
    _, exca, va = a
    _, excb, vb = b
    keys = set(dict(exca)) | set(dict(excb))
    out = []
    for k in sorted(keys):
        xa = dict(exca).get(k, _copy_default(F, k, va))
        xb = dict(excb).get(k, _copy_default(G, k, vb))
        out.append((k, _tensor_sec(F.copy_sheaf(k), G.copy_sheaf(k), T.copy_sheaf(k), xa, xb)))
    return ("sec", tuple(out), _tensor_vec(va, vb))


# ---------------------------------------------------------------------------
# sections over clopen sets, softness


@dataclass(frozen=True)
class SectionModule:
    """Finite-exception presentation of the sections over an infinite clopen
    set: section spaces of the stored exceptional copies, the space available
    on each generic copy independently, and the apex-coupled part."""

    exceptional: dict
    generic_copy: VectQ
    coupled: VectQ


@dataclass(frozen=True)
class SumSections:
    """Sections over a clopen set of a disjoint union, one part each."""

    left: object
    right: object


def sections(F: CSheaf, U: ClopenSet):
    """Sections over a clopen set: a labelled space when U is finite, the
    finite-exception module presentation when U is infinite."""
    if set_is_finite(F.space, U):
        pts = enumerate_finite(F.space, U)
        spaces = [stalk(F, p) for p in pts]
        return direct_sum_space(spaces, [str(p) for p in pts])
    return _section_module(F, U)


def _section_module(F, U):
    if isinstance(F.space, Sum):
        return SumSections(sections(F.data[0], U.left), sections(F.data[1], U.right))
    exc = {}
    for k, G in F.data[1]:
        V = cone_member_set(U, F.space, k)
        exc[k] = sections(G, V)
    gen = sec_space(F.tail) if U.apex else VectQ.make(0)
    coupled = F.apex if U.apex else VectQ.make(0)
    return SectionModule(exc, gen, coupled)


def mask_section(F: CSheaf, s: Section, U: ClopenSet) -> Section:
    """Zero the section outside the clopen set U; always yields a valid
    global section (clopen splitting of the space)."""
    return sec_canonical(Section(F, _mask(F, s.data, F.space, U)))


def _mask(F, data, space, U):
    if isinstance(space, Finite):
        return tuple(v if i in U.members else F.data[i].zero_vec()
                     for i, v in enumerate(data))
    if isinstance(space, Sum):
        return (_mask(F.data[0], data[0], space.left, U.left),
                _mask(F.data[1], data[1], space.right, U.right))
    _, exc, apexv = data
    new_apex = apexv if U.apex else F.apex.zero_vec()
    keys = set(dict(exc)) | {k for k, _ in U.exc}
    out = []
    for k in sorted(keys):
        G = F.copy_sheaf(k)
        sub = dict(exc).get(k)
        if sub is None:
            sub = _copy_default(F, k, apexv)
        Uk = cone_member_set(U, space, k)
        out.append((k, _mask(G, sub, space.base, Uk)))
    return ("sec", tuple(out), new_apex)


def extend_section(F: CSheaf, U: ClopenSet, s: Section) -> Section:
    """Extend a section given over the clopen U by zero to a global section.

    The input is a global-shaped record whose values outside U are ignored;
    closed sets are handled by passing a clopen representative containing
    them.  Sections over these spaces always extend (softness).
    """
    return mask_section(F, s, U)


def restrict_section(F: CSheaf, s: Section, U: ClopenSet) -> Section:
    return mask_section(F, s, U)


# ---------------------------------------------------------------------------
# randomized constructible sheaves and sections (seeded)


def random_csheaf(space: SpaceExpr, rng: random.Random, dim_bound: int = 2,
                  exc_bound: int = 1) -> CSheaf:
    if isinstance(space, Finite):
        return make_fin_sheaf(space, [VectQ.make(rng.randint(0, dim_bound))
                                      for _ in range(space.n)])
    if isinstance(space, Sum):
        return make_sum_sheaf(space, random_csheaf(space.left, rng, dim_bound, exc_bound),
                              random_csheaf(space.right, rng, dim_bound, exc_bound))
    tail = random_csheaf(space.base, rng, dim_bound, exc_bound)
    nexc = rng.randint(0, exc_bound)
    exc = {k: random_csheaf(space.base, rng, dim_bound, exc_bound) for k in range(nexc)}
    apex = VectQ.make(rng.randint(0, dim_bound))
    st = sec_space(tail)
    germ = LinMap.from_rows(apex, st,
                            [[Fraction(rng.randint(-2, 2)) for _ in range(apex.dim)]
                             for _ in range(st.dim)])
    return make_cone_sheaf(space, exc, tail, apex, germ)


def random_section(F: CSheaf, rng: random.Random, deviate: int = 1) -> Section:
    """A random constructible section, possibly deviating beyond the stored
    copies of each cone."""
    coords = tuple(Fraction(rng.randint(-3, 3)) for _ in range(sec_dim(F)))
    s = sec_from_coords(F, coords)
    data = _sec_deviate(F, s.data, rng, deviate)
    return sec_canonical(Section(F, data))


def _sec_deviate(F, data, rng, deviate):
    if isinstance(F.space, Finite) or deviate <= 0:
        return data
    if isinstance(F.space, Sum):
        return (_sec_deviate(F.data[0], data[0], rng, deviate),
                _sec_deviate(F.data[1], data[1], rng, deviate))
    _, exc, apexv = data
    out = dict(exc)
    stored = set(F.stored_keys())
    for _ in range(rng.randint(0, deviate)):
        k = rng.randint(0, 3 + len(stored))
        if k in stored or k in out:
            continue
        coords = tuple(Fraction(rng.randint(-3, 3)) for _ in range(sec_dim(F.tail)))
        out[k] = sec_from_coords(F.tail, coords).data
    return ("sec", tuple(sorted(out.items())), apexv)
