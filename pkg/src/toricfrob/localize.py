"""Genus-zero torus localization on toric targets.

Fixed loci are labelled by decorated trees: vertices sit at fixed points,
edges cover compact invariant curves with a degree.  Contributions use the
standard toric rules; see ``edge_factor`` and ``vertex_factor``.

Invariant sums never enumerate marked graphs up to isomorphism.  A marked
graph is an unmarked tree plus a labelled assignment of the marks, and
summing over all labelled assignments divided by |Aut| of the unmarked tree
gives the same total.  ``enumerate_graphs`` with ``n > 0`` still produces
the marked graphs explicitly, which the tests use as a second code path.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import factorial
from typing import Iterable, Sequence

from .exactalg import ONE, ZERO, RationalFn, u1
from .toric import Cone, CurveClassLattice, Fan3, Fan4, SmoothFan, curve_lattice


class NonGenericWeight(ZeroDivisionError):
    """A weight in a localization denominator vanished identically."""


class ClassNotEffective(ValueError):
    pass


@dataclass(frozen=True)
class Insertion:
    """``kind`` is "phi" (idempotent class phi_index) or "D" (the divisor D~)."""

    kind: str
    index: int = 0

    def __str__(self):
        return f"phi{self.index}" if self.kind == "phi" else "D"


def phi(i: int) -> Insertion:
    return Insertion("phi", i)


DIVISOR = Insertion("D")


class Target:
    """A toric target with its fixed points, compact curves and class coordinates."""

    def __init__(self, name: str, fan: SmoothFan, points: Sequence[Cone], classes: dict, rank: int,
                 divisor_point: int | None = None):
        self.name = name
        self.fan = fan
        self.points = tuple(points)
        self.index = {p: k for k, p in enumerate(self.points, 1)}
        self.curve_class = dict(classes)
        self.rank = rank
        self.divisor_point = divisor_point
        self._euler = {p: fan.euler(p) for p in self.points}
        self._graphs: dict[tuple[int, ...], list[Tree]] = {}
        self._evaluated: dict[tuple[int, ...], list] = {}

    @property
    def m(self) -> int:
        return len(self.points)

    def euler(self, i: int) -> RationalFn:
        return self._euler[self.points[i - 1]]

    def restrict(self, ins: Insertion, point: int) -> RationalFn:
        """Restriction of an insertion class to the fixed point with index ``point``."""
        if ins.kind == "phi":
            return ONE if ins.index == point else ZERO
        if ins.kind == "D":
            if self.divisor_point is None:
                raise ValueError(f"target {self.name} has no divisor D~")
            return -u1 if point == self.divisor_point else ZERO
        raise ValueError(f"unknown insertion {ins}")

    def zero_class(self) -> tuple[int, ...]:
        return (0,) * self.rank


def target3(X: Fan3, lattice: CurveClassLattice | None = None) -> Target:
    if lattice is None:
        from .toric import build_4fold
        lattice = curve_lattice(build_4fold(X))
    return Target("X", X.fan, X.points, lattice.curve_coords3, lattice.rank)


def target4(X4: Fan4, lattice: CurveClassLattice | None = None) -> Target:
    if lattice is None:
        lattice = curve_lattice(X4)
    return Target("X~", X4.fan, X4.points, lattice.curve_coords4, lattice.rank + 1,
                  divisor_point=X4.m + 1)


# trees

@dataclass(frozen=True)
class Tree:
    """Unmarked decorated tree: vertex points and edges (a, b, curve, degree)."""

    points: tuple[Cone, ...]
    edges: tuple[tuple[int, int, Cone, int], ...]
    aut: int

    def flags(self, v: int) -> list[tuple[Cone, int]]:
        out = []
        for a, b, tau, d in self.edges:
            if a == v or b == v:
                out.append((tau, d))
        return out


@dataclass(frozen=True)
class DecoratedGraph:
    """A fixed-locus label: tree plus the vertex carrying each marking."""

    tree: Tree
    marks: tuple[int, ...]
    aut: int

    @property
    def points(self):
        return self.tree.points

    @property
    def edges(self):
        return self.tree.edges


def _adjacency(points, edges):
    adj = defaultdict(list)
    for k, (a, b, tau, d) in enumerate(edges):
        adj[a].append((b, tau, d))
        adj[b].append((a, tau, d))
    return adj


def _rooted(v, parent, adj, labels):
    """Canonical string and automorphism count of the subtree at v away from parent."""
    subs = []
    aut = 1
    for w, tau, d in adj[v]:
        if w == parent:
            continue
        s, a = _rooted(w, v, adj, labels)
        subs.append(f"[{tau}:{d}]{s}")
        aut *= a
    subs.sort()
    run = 1
    for k in range(1, len(subs) + 1):
        if k < len(subs) and subs[k] == subs[k - 1]:
            run += 1
        else:
            aut *= factorial(run)
            run = 1
    return f"({labels[v]}{''.join(subs)})", aut


def _centers(n, adj) -> list[int]:
    if n == 1:
        return [0]
    deg = {v: len(adj[v]) for v in range(n)}
    leaves = [v for v in range(n) if deg[v] <= 1]
    remaining = n
    while remaining > 2:
        remaining -= len(leaves)
        nxt = []
        for v in leaves:
            for w, _, _ in adj[v]:
                deg[w] -= 1
                if deg[w] == 1:
                    nxt.append(w)
            deg[v] = 0
        leaves = nxt
    return sorted(leaves)


def canonical_form(points, edges, labels=None) -> tuple[str, int]:
    """Canonical string of a labelled tree and the size of its automorphism group."""
    n = len(points)
    if labels is None:
        labels = [str(p) for p in points]
    adj = _adjacency(points, edges)
    cs = _centers(n, adj)
    if len(cs) == 1:
        s, a = _rooted(cs[0], None, adj, labels)
        return "V" + s, a
    x, y = cs
    (tau, d), = [(t, dd) for w, t, dd in adj[x] if w == y]
    sx, ax = _rooted(x, y, adj, labels)
    sy, ay = _rooted(y, x, adj, labels)
    aut = ax * ay * (2 if sx == sy else 1)
    lo, hi = sorted([sx, sy])
    return f"E[{tau}:{d}]{lo}{hi}", aut


def _sub(c, e):
    return tuple(x - y for x, y in zip(c, e))


def enumerate_trees(target: Target, cls: tuple[int, ...]) -> list[Tree]:
    """All unmarked decorated trees of class cls up to isomorphism, sorted canonically."""
    cls = tuple(cls)
    if cls in target._graphs:
        return target._graphs[cls]
    if any(c < 0 for c in cls):
        return []
    found: dict[str, Tree] = {}
    if all(c == 0 for c in cls):
        for p in target.points:
            key, aut = canonical_form((p,), ())
            found[key] = Tree((p,), (), aut)
    else:
        for tau, coords in sorted(target.curve_class.items()):
            d = 1
            while True:
                rest = _sub(cls, tuple(d * c for c in coords))
                if any(c < 0 for c in rest):
                    break
                ends = target.fan.facets[tau]
                for smaller in enumerate_trees(target, rest):
                    for v, p in enumerate(smaller.points):
                        if p not in ends:
                            continue
                        q = ends[1] if p == ends[0] else ends[0]
                        pts = smaller.points + (q,)
                        eds = smaller.edges + ((v, len(smaller.points), tau, d),)
                        key, aut = canonical_form(pts, eds)
                        if key not in found:
                            found[key] = Tree(pts, eds, aut)
                d += 1
    out = [found[k] for k in sorted(found)]
    target._graphs[cls] = out
    return out


def enumerate_graphs(target: Target, cls: tuple[int, ...], n: int) -> list[DecoratedGraph]:
    """Marked decorated graphs of class cls with n labelled marks, up to isomorphism."""
    cls = tuple(cls)
    if not any(cls) and n < 3:
        raise ValueError("class 0 needs at least three marked points")
    if any(cls) and not enumerate_trees(target, cls):
        raise ClassNotEffective(f"class {cls} is not a nonnegative sum of compact-curve classes")
    found: dict[str, DecoratedGraph] = {}
    for tree in enumerate_trees(target, cls):
        nv = len(tree.points)
        for marks in product(range(nv), repeat=n):
            labels = []
            for v, p in enumerate(tree.points):
                ms = [str(k) for k, w in enumerate(marks) if w == v]
                labels.append(f"{p}{{{','.join(ms)}}}")
            key, aut = canonical_form(tree.points, tree.edges, labels)
            if key not in found:
                found[key] = DecoratedGraph(tree, tuple(marks), aut)
    return [found[k] for k in sorted(found)]


# contributions

def _nonzero(w: RationalFn, what: str) -> RationalFn:
    if w.is_zero():
        raise NonGenericWeight(f"weight of {what} vanishes")
    return w


def edge_factor(fan: SmoothFan, tau: Cone, d: int) -> RationalFn:
    """Ratio of H^1 to H^0 moving weights for a degree-d cover of V(tau)."""
    sigma = fan.facets[tau][0]
    w = _nonzero(fan.tangent_weight(tau, sigma), f"flag {tau},{sigma}")
    lam = fan.weights_at(sigma)
    out = ONE
    for k in range(1, d + 1):
        # pair k and -k: (k w/d)(-k w/d)
        out = out / (-(Fraction(k, d) ** 2) * w * w)
    for j, a in fan.normal_degrees(tau):
        ad = a * d
        if ad >= 0:
            for k in range(0, ad + 1):
                out = out / _nonzero(lam[j] - Fraction(k, d) * w, f"normal direction {j} of {tau}")
        elif ad <= -2:
            for k in range(ad + 1, 0):
                out = out * (lam[j] - Fraction(k, d) * w)
    return out


def vertex_factor(delta: RationalFn, omegas: Sequence[RationalFn], n_marks: int) -> RationalFn:
    """Euler class power times the genus-zero psi integral at a vertex.

    ``omegas`` are the flag weights divided by the edge degrees.
    """
    val = len(omegas)
    total = val + n_marks
    if val == 0:
        if total < 3:
            raise ValueError("unstable contracted component")
        return delta.inverse() if total == 3 else ZERO
    if val == 1 and n_marks == 0:
        return omegas[0]
    if val == 1 and n_marks == 1:
        return ONE
    if val == 2 and n_marks == 0:
        return delta / _nonzero(omegas[0] + omegas[1], "two-valent vertex")
    inv = [o.inverse() for o in omegas]
    out = delta ** (val - 1)
    s = ZERO
    for x in inv:
        out = out * x
        s = s + x
    return out * s ** (total - 3)


@dataclass
class _Evaluated:
    """Per-tree data reused across insertion patterns."""

    tree: Tree
    base: RationalFn
    vertex_point: tuple[int, ...]
    vertex_data: tuple


def _evaluate(target: Target, cls: tuple[int, ...]) -> list[_Evaluated]:
    cls = tuple(cls)
    if cls in target._evaluated:
        return target._evaluated[cls]
    fan = target.fan
    out = []
    edge_cache: dict = {}
    for tree in enumerate_trees(target, cls):
        base = RationalFn.const(Fraction(1, tree.aut))
        for a, b, tau, d in tree.edges:
            if (tau, d) not in edge_cache:
                edge_cache[(tau, d)] = edge_factor(fan, tau, d)
            base = base * edge_cache[(tau, d)] / d
        vdata = []
        for v, p in enumerate(tree.points):
            omegas = [fan.tangent_weight(tau, p) / d for tau, d in tree.flags(v)]
            vdata.append((target._euler[p], tuple(omegas)))
        out.append(_Evaluated(tree, base, tuple(target.index[p] for p in tree.points), tuple(vdata)))
    target._evaluated[cls] = out
    return out


def graph_contribution(target: Target, graph: DecoratedGraph, insertions: Sequence[Insertion]) -> RationalFn:
    """Contribution of one marked graph; insertion k sits at vertex graph.marks[k]."""
    if len(insertions) != len(graph.marks):
        raise ValueError("insertion count does not match the marking count")
    tree = graph.tree
    fan = target.fan
    out = RationalFn.const(Fraction(1, graph.aut))
    for k, ins in enumerate(insertions):
        out = out * target.restrict(ins, target.index[tree.points[graph.marks[k]]])
        if out.is_zero():
            return ZERO
    for a, b, tau, d in tree.edges:
        out = out * edge_factor(fan, tau, d) / d
    for v, p in enumerate(tree.points):
        omegas = [fan.tangent_weight(tau, p) / d for tau, d in tree.flags(v)]
        n_v = sum(1 for w in graph.marks if w == v)
        out = out * vertex_factor(target._euler[p], omegas, n_v)
    return out


def gw_invariant(target: Target, cls: tuple[int, ...], insertions: Sequence[Insertion]) -> RationalFn:
    """Genus-zero invariant with the given insertions, summed over labelled mark placements."""
    cls = tuple(cls)
    n = len(insertions)
    if not any(cls) and n < 3:
        raise ValueError("class 0 needs at least three insertions")
    if not any(cls) and n > 3:
        if all(i.kind == "phi" for i in insertions):
            return ZERO
    total = ZERO
    for ev in _evaluate(target, cls):
        nv = len(ev.vertex_point)
        # candidate vertices per insertion, with the restriction value
        options = []
        for ins in insertions:
            opts = []
            for v in range(nv):
                r = target.restrict(ins, ev.vertex_point[v])
                if not r.is_zero():
                    opts.append((v, r))
            options.append(opts)
        if any(not o for o in options):
            continue
        vf_cache: dict = {}
        for choice in product(*options):
            counts = [0] * nv
            value = ev.base
            for v, r in choice:
                counts[v] += 1
                value = value * r
            for v in range(nv):
                key = (v, counts[v])
                if key not in vf_cache:
                    delta, omegas = ev.vertex_data[v]
                    vf_cache[key] = vertex_factor(delta, omegas, counts[v])
                value = value * vf_cache[key]
            total = total + value
    return total


def _compositions(total: int, parts: int):
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for k in range(total + 1):
        for rest in _compositions(total - k, parts - 1):
            yield (k,) + rest


def potential_coefficient(target: Target, cls: tuple[int, ...], alpha: Sequence[int]) -> RationalFn:
    """Coefficient of t^alpha (phi insertions, divided by alpha!) in the genus-zero potential.

    alpha is indexed by fixed points 1..len(alpha); later points get no marks.
    """
    cls = tuple(cls)
    n = sum(alpha)
    if not any(cls):
        if n != 3:
            return ZERO
        nz = [i for i, a in enumerate(alpha, 1) if a]
        if len(nz) != 1:
            return ZERO
        return target.euler(nz[0]).inverse() / 6
    total = ZERO
    for ev in _evaluate(target, cls):
        by_point = defaultdict(list)
        for v, i in enumerate(ev.vertex_point):
            by_point[i].append(v)
        per_point = []
        ok = True
        for i, a in enumerate(alpha, 1):
            vs = by_point.get(i, [])
            if a and not vs:
                ok = False
                break
            per_point.append((vs, a))
        if not ok:
            continue
        nv = len(ev.vertex_point)
        vf: dict = {}
        choices = [list(_compositions(a, len(vs))) for vs, a in per_point]
        for combo in product(*choices):
            counts = [0] * nv
            weight = Fraction(1)
            for (vs, _), comp in zip(per_point, combo):
                for v, c in zip(vs, comp):
                    counts[v] = c
                    weight /= factorial(c)
            value = ev.base * weight
            for v in range(nv):
                key = (v, counts[v])
                if key not in vf:
                    delta, omegas = ev.vertex_data[v]
                    vf[key] = vertex_factor(delta, omegas, counts[v])
                value = value * vf[key]
            total = total + value
    return total


def format_invariant_rows(target: Target, rows: Iterable[tuple[tuple[int, ...], Sequence[Insertion], RationalFn]]) -> list[str]:
    """Structured-text rows: target, class coordinates, n, insertion multi-index, value."""
    out = []
    for cls, ins, value in rows:
        cl = ",".join(str(c) for c in cls)
        idx = ",".join(str(i) for i in ins)
        out.append(f"{target.name}\t({cl})\t{len(ins)}\t[{idx}]\t{value}")
    return out
