"""Homomorphism counts and densities, and the algebra of quantum graphs.

A quantum graph is a finite rational combination of graphs; the product
of two graphs is their disjoint union and ``K1`` is the unit.  Evaluation
extends the homomorphism density ``t(F, G) = hom(F, G) / |G|^|F|`` linearly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Iterable, Sequence

from .canon import canonical_form
from .errors import CapExceeded, FolimError, StructureError
from .logic import EDGE, TOP, Formula, Rel, conjunction, x
from .rational import format_fraction, to_fraction
from .structures import GRAPH_SIGNATURE, Structure, disjoint_union, graph, structure_from_dict, structure_to_dict

DEFAULT_HOM_NODE_CAP = 10**8


def _require_graph(G: Structure, what: str) -> None:
    if G.signature != GRAPH_SIGNATURE:
        raise StructureError(f"{what} must be a plain graph (single binary relation E)")


def _neighbors(G: Structure) -> list[set[int]]:
    out = [set() for _ in range(G.n)]
    for u, v in G.relations[EDGE]:
        out[u].add(v)
        out[v].add(u)
    return out


def degeneracy_order(F: Structure) -> list[int]:
    """Vertices in reverse min-degree elimination order (dense core first)."""
    nbrs = _neighbors(F)
    live = set(range(F.n))
    deg = {v: len(nbrs[v] - {v}) for v in live}
    removed = []
    while live:
        v = min(live, key=lambda u: (deg[u], u))
        removed.append(v)
        live.discard(v)
        for w in nbrs[v]:
            if w in live and w != v:
                deg[w] -= 1
    return removed[::-1]


def hom_count(F: Structure, G: Structure, node_cap: int = DEFAULT_HOM_NODE_CAP) -> int:
    """Number of edge-preserving maps ``V(F) -> V(G)``, by backtracking.

    Each pattern vertex is placed after as many of its neighbours as the
    degeneracy order allows; its candidates are the common neighbourhood
    of the images of already-placed neighbours.
    """
    _require_graph(F, "pattern")
    _require_graph(G, "target")
    order = degeneracy_order(F)
    pos = {v: i for i, v in enumerate(order)}
    f_nbrs = _neighbors(F)
    g_nbrs = _neighbors(G)
    loops_f = {u for u, v in F.relations[EDGE] if u == v}
    loops_g = frozenset(u for u, v in G.relations[EDGE] if u == v)
    everything = frozenset(range(G.n))
    earlier = [[w for w in f_nbrs[v] if w != v and pos[w] < pos[v]] for v in order]
    needs_loop = [v in loops_f for v in order]
    image = [0] * F.n
    nodes = 0
    last = len(order) - 1

    def candidates(i: int):
        prev = earlier[i]
        if prev:
            cand = g_nbrs[image[prev[0]]]
            for w in prev[1:]:
                cand = cand & g_nbrs[image[w]]
        else:
            cand = everything
        if needs_loop[i]:
            cand = cand & loops_g
        return cand

    def count(i: int) -> int:
        nonlocal nodes
        nodes += 1
        if nodes > node_cap:
            raise CapExceeded(f"homomorphism search exceeded {node_cap} nodes")
        cand = candidates(i)
        if i == last:
            return len(cand)
        total = 0
        v = order[i]
        for c in cand:
            image[v] = c
            total += count(i + 1)
        return total

    return count(0)


def hom_density(F: Structure, G: Structure) -> Fraction:
    return Fraction(hom_count(F, G), G.n**F.n)


def canonical_formula(F: Structure) -> Formula:
    """Equality-free quantifier-free formula whose pairing at arity |F| is t(F, .)."""
    _require_graph(F, "pattern")
    edges = sorted({(min(u, v), max(u, v)) for u, v in F.relations[EDGE]})
    if not edges:
        return TOP
    return conjunction(Rel(EDGE, (x(u + 1), x(v + 1))) for u, v in edges)


# ---------------------------------------------------------------------------
# Quantum graphs

K1 = graph(1, [])


def is_basis_graph(F: Structure) -> bool:
    """K1, or a graph without isolated vertices."""
    if F.n == 1 and not F.relations[EDGE]:
        return True
    touched = {u for t in F.relations[EDGE] for u in t}
    return len(touched) == F.n


def _is_k1(F: Structure) -> bool:
    return F.n == 1 and not F.relations[EDGE]


@dataclass(frozen=True)
class QuantumGraph:
    """Canonical rational combination of pairwise non-isomorphic basis graphs."""

    terms: tuple[tuple[Fraction, Structure], ...] = ()

    @classmethod
    def of(cls, items: Iterable[tuple[object, Structure]]) -> "QuantumGraph":
        merged: dict = {}
        for coef, F in items:
            coef = to_fraction(coef)
            _require_graph(F, "quantum-graph term")
            if not is_basis_graph(F):
                raise StructureError("quantum-graph terms must be K1 or graphs without isolated vertices")
            key = canonical_form(F)
            if key in merged:
                merged[key] = (merged[key][0] + coef, merged[key][1])
            else:
                merged[key] = (coef, F)
        terms = tuple(merged[k] for k in sorted(merged) if merged[k][0] != 0)
        return cls(terms)

    @classmethod
    def single(cls, F: Structure, coef=1) -> "QuantumGraph":
        return cls.of([(coef, F)])

    def __add__(self, other: "QuantumGraph") -> "QuantumGraph":
        return QuantumGraph.of(list(self.terms) + list(other.terms))

    def __neg__(self) -> "QuantumGraph":
        return self.scale(-1)

    def __sub__(self, other: "QuantumGraph") -> "QuantumGraph":
        return self + (-other)

    def scale(self, a) -> "QuantumGraph":
        a = to_fraction(a)
        return QuantumGraph.of((a * c, F) for c, F in self.terms)

    def __mul__(self, other: "QuantumGraph") -> "QuantumGraph":
        items = []
        for a, F in self.terms:
            for b, H in other.terms:
                items.append((a * b, graph_product(F, H)))
        return QuantumGraph.of(items)

    def __eq__(self, other):
        if not isinstance(other, QuantumGraph):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def _key(self):
        return tuple((c, canonical_form(F)) for c, F in self.terms)

    def to_dict(self) -> dict:
        return {"terms": [{"coef": format_fraction(c), "graph": structure_to_dict(F)} for c, F in self.terms]}

    @classmethod
    def from_dict(cls, data) -> "QuantumGraph":
        try:
            return cls.of((to_fraction(t["coef"]), structure_from_dict(t["graph"])) for t in data["terms"])
        except KeyError as exc:
            raise FolimError(f"malformed quantum graph: missing key {exc}") from None
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise FolimError(f"malformed quantum graph: {exc}") from None


def graph_product(F: Structure, H: Structure) -> Structure:
    if _is_k1(F):
        return H
    if _is_k1(H):
        return F
    return disjoint_union([F, H])


def qg_combine(op: str, *args) -> QuantumGraph:
    """``add`` (any number of quantum graphs), ``scale`` (scalar, qg) or ``multiply`` (any number)."""
    if op == "add":
        out = QuantumGraph()
        for q in args:
            out = out + q
        return out
    if op == "scale":
        a, q = args
        return q.scale(a)
    if op == "multiply":
        out = QuantumGraph.single(K1)
        for q in args:
            out = out * q
        return out
    raise ValueError(f"unknown quantum-graph operation {op!r}")


def qg_evaluate(Q: QuantumGraph, G: Structure) -> Fraction:
    return sum((c * hom_density(F, G) for c, F in Q.terms), Fraction(0))


def qg_corpus_norm(Q: QuantumGraph, corpus: Sequence[Structure]) -> tuple[Fraction, int | None]:
    """``max |Q(G)|`` over the corpus and the least index attaining it.

    Only a lower bound on the sup over all graphs.
    """
    if not corpus:
        raise ValueError("corpus must be non-empty")
    best, arg = Fraction(-1), None
    for i, G in enumerate(corpus):
        v = abs(qg_evaluate(Q, G))
        if v > best:
            best, arg = v, i
    return best, arg


# ---------------------------------------------------------------------------
# Exact rank


def bareiss_rank(rows: Sequence[Sequence[Fraction]]) -> int:
    """Rank by fraction-free elimination (rows are scaled to integers first)."""
    mat = []
    for row in rows:
        row = [to_fraction(v) for v in row]
        den = lcm(*(v.denominator for v in row)) if row else 1
        mat.append([int(v * den) for v in row])
    if not mat or not mat[0]:
        return 0
    m, n = len(mat), len(mat[0])
    rank = 0
    prev = 1
    for col in range(n):
        pivot = next((r for r in range(rank, m) if mat[r][col] != 0), None)
        if pivot is None:
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        for r in range(rank + 1, m):
            for c in range(col + 1, n):
                mat[r][c] = (mat[r][c] * mat[rank][col] - mat[rank][c] * mat[r][col]) // prev
            mat[r][col] = 0
        prev = mat[rank][col]
        rank += 1
        if rank == m:
            break
    return rank


def hom_matrix_rank(patterns: Sequence[Structure], corpus: Sequence[Structure]) -> tuple[list[list[Fraction]], int]:
    matrix = [[hom_density(F, G) for G in corpus] for F in patterns]
    return matrix, bareiss_rank(matrix)
