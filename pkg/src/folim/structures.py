"""Finite structures, finite modelings and Gaifman-graph metric operations.

A structure has universe ``0..n-1``.  Relations are sets of tuples,
functions are total tables listed lexicographically over argument tuples,
constants name vertices.  An optional list of positive rational weights
summing to one turns the structure into a finite modeling.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Mapping, Sequence

from .errors import CapExceeded, StructureError
from .rational import format_fraction, to_fraction

__all__ = [
    "Signature",
    "Structure",
    "GaifmanGraph",
    "GRAPH_SIGNATURE",
    "load_structure",
    "dump_structure",
    "structure_to_dict",
    "structure_from_dict",
    "graph",
    "gaifman_graph",
    "ball",
    "ball_measure",
    "connected_components",
    "scattered_set",
    "is_vertex_transitive",
    "induced_substructure",
    "disjoint_union",
    "generate",
    "FAMILIES",
]


@dataclass(frozen=True)
class Signature:
    relations: tuple[tuple[str, int], ...] = ()
    functions: tuple[tuple[str, int], ...] = ()
    constants: tuple[str, ...] = ()

    def __post_init__(self):
        names = [r for r, _ in self.relations] + [f for f, _ in self.functions] + list(self.constants)
        seen = set()
        for name in names:
            if name in seen:
                raise StructureError(f"duplicate symbol {name!r} in signature")
            seen.add(name)
        for name, arity in self.relations + self.functions:
            if not isinstance(arity, int) or arity < 1:
                raise StructureError(f"symbol {name!r} has invalid arity {arity!r}")

    @property
    def relation_arity(self) -> dict[str, int]:
        return dict(self.relations)

    @property
    def function_arity(self) -> dict[str, int]:
        return dict(self.functions)

    def to_dict(self) -> dict:
        return {
            "relations": [{"name": r, "arity": a} for r, a in self.relations],
            "functions": [{"name": f, "arity": a} for f, a in self.functions],
            "constants": list(self.constants),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Signature":
        try:
            rels = tuple((str(r["name"]), int(r["arity"])) for r in data.get("relations", []))
            funs = tuple((str(f["name"]), int(f["arity"])) for f in data.get("functions", []))
            consts = tuple(str(c) for c in data.get("constants", []))
        except (KeyError, TypeError, ValueError) as exc:
            raise StructureError(f"malformed signature: {exc}") from None
        return cls(rels, funs, consts)


GRAPH_SIGNATURE = Signature(relations=(("E", 2),))


class Structure:
    """A finite structure over an explicit signature, optionally weighted.

    Instances are treated as immutable; derived data (Gaifman adjacency,
    BFS distances) is cached on first use.
    """

    __slots__ = ("signature", "n", "relations", "functions", "constants", "weights", "_adj", "_dist")

    def __init__(
        self,
        signature: Signature,
        n: int,
        relations: Mapping[str, Iterable[Sequence[int]]] | None = None,
        functions: Mapping[str, Sequence[int]] | None = None,
        constants: Mapping[str, int] | None = None,
        weights: Sequence | None = None,
    ):
        if not isinstance(n, int) or n < 1:
            raise StructureError(f"universe size must be a positive integer, got {n!r}")
        self.signature = signature
        self.n = n
        relations = dict(relations or {})
        functions = dict(functions or {})
        constants = dict(constants or {})

        rel_ar = signature.relation_arity
        for name in relations:
            if name not in rel_ar:
                raise StructureError(f"relation {name!r} not in signature")
        self.relations: dict[str, frozenset[tuple[int, ...]]] = {}
        for name, arity in signature.relations:
            tuples = set()
            for t in relations.get(name, ()):
                t = tuple(t)
                if len(t) != arity:
                    raise StructureError(f"relation {name!r}: tuple {list(t)} has length {len(t)}, expected {arity}")
                for x in t:
                    if not isinstance(x, int) or isinstance(x, bool) or not 0 <= x < n:
                        raise StructureError(f"relation {name!r}: tuple {list(t)} has index out of range (n={n})")
                tuples.add(t)
            self.relations[name] = frozenset(tuples)

        fun_ar = signature.function_arity
        for name in functions:
            if name not in fun_ar:
                raise StructureError(f"function {name!r} not in signature")
        self.functions: dict[str, tuple[int, ...]] = {}
        for name, arity in signature.functions:
            if name not in functions:
                raise StructureError(f"function {name!r} has no table (functions must be total)")
            table = tuple(functions[name])
            if len(table) != n**arity:
                raise StructureError(
                    f"function {name!r}: table has {len(table)} entries, expected {n**arity} (not total)"
                )
            for x in table:
                if not isinstance(x, int) or isinstance(x, bool) or not 0 <= x < n:
                    raise StructureError(f"function {name!r}: value {x!r} index out of range (n={n})")
            self.functions[name] = table

        for name in constants:
            if name not in signature.constants:
                raise StructureError(f"constant {name!r} not in signature")
        self.constants: dict[str, int] = {}
        for name in signature.constants:
            if name not in constants:
                raise StructureError(f"constant {name!r} has no interpretation")
            v = constants[name]
            if not isinstance(v, int) or isinstance(v, bool) or not 0 <= v < n:
                raise StructureError(f"constant {name!r}: index {v!r} out of range (n={n})")
            self.constants[name] = v

        if weights is not None:
            ws = tuple(to_fraction(w) for w in weights)
            if len(ws) != n:
                raise StructureError(f"weights: {len(ws)} entries for {n} vertices")
            for i, w in enumerate(ws):
                if w <= 0:
                    raise StructureError(f"weights: weight of vertex {i} is {format_fraction(w)}, must be > 0")
            total = sum(ws, Fraction(0))
            if total != 1:
                raise StructureError(f"weights sum to {format_fraction(total)}, not 1")
            self.weights: tuple[Fraction, ...] | None = ws
        else:
            self.weights = None
        self._adj = None
        self._dist = {}

    # -- measure -------------------------------------------------------

    @property
    def is_weighted(self) -> bool:
        return self.weights is not None

    def weight(self, v: int) -> Fraction:
        if self.weights is None:
            return Fraction(1, self.n)
        return self.weights[v]

    def measure(self, vertices: Iterable[int]) -> Fraction:
        if self.weights is None:
            return Fraction(len(set(vertices)), self.n)
        return sum((self.weights[v] for v in set(vertices)), Fraction(0))

    # -- function tables -------------------------------------------------

    def apply(self, name: str, args: Sequence[int]) -> int:
        idx = 0
        for a in args:
            idx = idx * self.n + a
        return self.functions[name][idx]

    # -- Gaifman metric --------------------------------------------------

    @property
    def adjacency(self) -> tuple[frozenset[int], ...]:
        if self._adj is None:
            nbrs = [set() for _ in range(self.n)]

            def link(items):
                items = set(items)
                if len(items) < 2:
                    return
                for u in items:
                    nbrs[u].update(items)

            for tuples in self.relations.values():
                for t in tuples:
                    link(t)
            for name, arity in self.signature.functions:
                table = self.functions[name]
                for idx, args in enumerate(product(range(self.n), repeat=arity)):
                    link(args + (table[idx],))
            for u in range(self.n):
                nbrs[u].discard(u)
            self._adj = tuple(frozenset(s) for s in nbrs)
        return self._adj

    def distances_from(self, v: int) -> dict[int, int]:
        """BFS distances from ``v``; unreachable vertices are absent."""
        self._check_vertex(v)
        cached = self._dist.get(v)
        if cached is None:
            adj = self.adjacency
            cached = {v: 0}
            queue = deque([v])
            while queue:
                u = queue.popleft()
                for w in adj[u]:
                    if w not in cached:
                        cached[w] = cached[u] + 1
                        queue.append(w)
            self._dist[v] = cached
        return cached

    def distance(self, u: int, v: int) -> float:
        return self.distances_from(u).get(v, float("inf"))

    def _check_vertex(self, v: int) -> None:
        if not isinstance(v, int) or not 0 <= v < self.n:
            raise StructureError(f"vertex {v!r} out of range (n={self.n})")

    # -- comparison ------------------------------------------------------

    def _key(self):
        return (
            self.signature,
            self.n,
            tuple(sorted((k, tuple(sorted(v))) for k, v in self.relations.items())),
            tuple(sorted(self.functions.items())),
            tuple(sorted(self.constants.items())),
            self.weights,
        )

    def __eq__(self, other):
        if not isinstance(other, Structure):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        sizes = ", ".join(f"{k}:{len(v)}" for k, v in self.relations.items())
        w = " weighted" if self.weights is not None else ""
        return f"<Structure n={self.n} {sizes}{w}>"

    def with_weights(self, weights: Sequence | None) -> "Structure":
        return Structure(self.signature, self.n, self.relations, self.functions, self.constants, weights)


def graph(n: int, edges: Iterable[tuple[int, int]]) -> Structure:
    """Plain undirected graph on 0..n-1 (edge relation ``E`` stored symmetrically)."""
    rel = set()
    for u, v in edges:
        rel.add((u, v))
        rel.add((v, u))
    return Structure(GRAPH_SIGNATURE, n, {"E": rel})


# -- serialization -------------------------------------------------------


def structure_to_dict(A: Structure) -> dict:
    data: dict = {
        "signature": A.signature.to_dict(),
        "n": A.n,
        "relations": {name: sorted(list(t) for t in A.relations[name]) for name, _ in A.signature.relations},
    }
    if A.signature.functions:
        data["functions"] = {name: list(A.functions[name]) for name, _ in A.signature.functions}
    if A.signature.constants:
        data["constants"] = dict(A.constants)
    if A.weights is not None:
        data["weights"] = [format_fraction(w) for w in A.weights]
    return data


def structure_from_dict(data: Mapping) -> Structure:
    if not isinstance(data, Mapping):
        raise StructureError("structure must be a JSON object")
    if "signature" not in data or "n" not in data:
        raise StructureError("structure needs 'signature' and 'n'")
    sig = Signature.from_dict(data["signature"])
    n = data["n"]
    weights = data.get("weights")
    if weights is not None:
        try:
            weights = [to_fraction(w) for w in weights]
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise StructureError(f"weights: {exc}") from None
    return Structure(
        sig,
        n,
        relations=data.get("relations", {}),
        functions=data.get("functions", {}),
        constants=data.get("constants", {}),
        weights=weights,
    )


def load_structure(text: str) -> Structure:
    """Parse and validate a structure from its JSON text."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StructureError(f"parse error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return structure_from_dict(data)


def dump_structure(A: Structure) -> str:
    return json.dumps(structure_to_dict(A), sort_keys=True)


# -- Gaifman graph -------------------------------------------------------


@dataclass(frozen=True)
class GaifmanGraph:
    n: int
    edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def neighbors(self, v: int) -> set[int]:
        return {b for a, b in self.edges if a == v} | {a for a, b in self.edges if b == v}

    def as_structure(self) -> Structure:
        return graph(self.n, self.edges)


def gaifman_graph(A: Structure) -> GaifmanGraph:
    """Gaifman graph; edges are stored once as ``(u, v)`` with ``u < v``."""
    edges = frozenset((u, v) for u in range(A.n) for v in A.adjacency[u] if u < v)
    return GaifmanGraph(A.n, edges)


def ball(A: Structure, v: int, d: int) -> frozenset[int]:
    dist = A.distances_from(v)
    return frozenset(u for u, k in dist.items() if k <= d)


def ball_measure(A: Structure, v: int, d: int) -> Fraction:
    return A.measure(ball(A, v, d))


def connected_components(A: Structure) -> list[list[int]]:
    """Components sorted internally, ordered by size descending then least vertex."""
    seen: set[int] = set()
    comps = []
    for v in range(A.n):
        if v in seen:
            continue
        comp = sorted(A.distances_from(v))
        seen.update(comp)
        comps.append(comp)
    comps.sort(key=lambda c: (-len(c), c[0]))
    return comps


def scattered_set(A: Structure, d: int, m: int, candidates: Iterable[int] | None = None) -> tuple[int, ...] | None:
    """Find ``m`` vertices pairwise at Gaifman distance >= ``d``, or ``None``.

    Vertices in different components are at infinite distance.  A greedy
    pass runs first; if it falls short, an exact backtracking search decides.
    ``candidates`` restricts the vertices that may be chosen.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    pool = sorted(set(range(A.n)) if candidates is None else set(candidates))
    if len(pool) < m:
        return None

    def far(u, v):
        return A.distances_from(u).get(v, d) >= d if d > 0 else u != v

    chosen: list[int] = []
    for v in pool:
        if all(far(u, v) for u in chosen):
            chosen.append(v)
            if len(chosen) == m:
                return tuple(chosen)

    def search(start: int, picked: list[int]) -> list[int] | None:
        if len(picked) == m:
            return picked
        for i in range(start, len(pool)):
            if len(pool) - i < m - len(picked):
                return None
            v = pool[i]
            if all(far(u, v) for u in picked):
                found = search(i + 1, picked + [v])
                if found is not None:
                    return found
        return None

    found = search(0, [])
    return tuple(found) if found is not None else None


def induced_substructure(A: Structure, vertices: Iterable[int], keep_weights: bool = False) -> tuple[Structure, list[int]]:
    """Structure induced on ``vertices``, re-indexed in increasing order.

    Functions are kept only if the vertex set is closed under them;
    otherwise they are dropped and their graphs become relations named
    ``<f>`` (arity + 1).  Constants outside the set are dropped.  Returns
    the substructure and the list mapping new indices to old ones.
    """
    old = sorted(set(vertices))
    if not old:
        raise StructureError("cannot induce on an empty vertex set")
    new_of = {v: i for i, v in enumerate(old)}
    keep = set(old)
    rels = [(name, ar) for name, ar in A.signature.relations]
    relations = {name: [tuple(new_of[x] for x in t) for t in A.relations[name] if keep.issuperset(t)] for name, _ in rels}
    funs = []
    functions = {}
    for name, arity in A.signature.functions:
        rows = []
        closed = True
        for args in product(old, repeat=arity):
            val = A.apply(name, args)
            if val not in keep:
                closed = False
            rows.append((args, val))
        if closed:
            funs.append((name, arity))
            functions[name] = [new_of[val] for _, val in rows]
        else:
            gname = f"<{name}>"
            rels.append((gname, arity + 1))
            relations[gname] = [
                tuple(new_of[a] for a in args) + (new_of[val],) for args, val in rows if val in keep
            ]
    consts = {c: new_of[v] for c, v in A.constants.items() if v in keep}
    sig = Signature(tuple(rels), tuple(funs), tuple(c for c in A.signature.constants if c in consts))
    weights = None
    if keep_weights and A.weights is not None:
        total = A.measure(old)
        weights = [A.weights[v] / total for v in old]
    return Structure(sig, len(old), relations, functions, consts, weights), old


def disjoint_union(parts: Sequence[Structure]) -> Structure:
    """Disjoint union of unweighted, constant-free structures with one signature."""
    if not parts:
        raise StructureError("disjoint union of no structures")
    sig = parts[0].signature
    for P in parts:
        if P.signature != sig:
            raise StructureError("disjoint union needs identical signatures")
    if sig.constants:
        raise StructureError("disjoint union is undefined for signatures with constants")
    n = sum(P.n for P in parts)
    relations: dict[str, list] = {name: [] for name, _ in sig.relations}
    functions: dict[str, list] = {}
    offsets = []
    off = 0
    for P in parts:
        offsets.append(off)
        for name in relations:
            relations[name].extend(tuple(x + off for x in t) for t in P.relations[name])
        off += P.n
    # Mixed-part argument tuples need a value; any arity-1 table is exact,
    # higher arities map a mixed tuple to its first argument.
    for name, arity in sig.functions:
        table = []
        part_of = []
        for i, P in enumerate(parts):
            part_of.extend([i] * P.n)
        for args in product(range(n), repeat=arity):
            owners = {part_of[a] for a in args}
            if len(owners) == 1:
                i = owners.pop()
                table.append(parts[i].apply(name, [a - offsets[i] for a in args]) + offsets[i])
            else:
                table.append(args[0])
        functions[name] = table
    return Structure(sig, n, relations, functions)


# -- vertex transitivity ---------------------------------------------------


def _fact_index(A: Structure):
    facts: set[tuple] = set()
    for name, tuples in A.relations.items():
        facts.update((name,) + t for t in tuples)
    for name, arity in A.signature.functions:
        for idx, args in enumerate(product(range(A.n), repeat=arity)):
            facts.add(("()" + name,) + args + (A.functions[name][idx],))
    for name, v in A.constants.items():
        facts.add(("=" + name, v))
    by_vertex: list[list[tuple]] = [[] for _ in range(A.n)]
    for f in facts:
        for x in set(f[1:]):
            by_vertex[x].append(f)
    return facts, by_vertex


def is_vertex_transitive(A: Structure, cap: int = 12) -> bool:
    """Whether Aut(A) acts transitively, by exhaustive automorphism search.

    For each vertex outside the current orbit of 0 we look for an
    automorphism sending 0 there; every automorphism found also closes the
    orbit under itself, so the loop stops as soon as the orbit is everything.
    """
    if A.weights is not None:
        raise StructureError("vertex transitivity is defined here for unweighted structures")
    if A.n > cap:
        raise CapExceeded(f"n={A.n} exceeds the vertex-transitivity cap {cap}")
    from .canon import stable_coloring

    n = A.n
    if n == 1:
        return True
    facts, by_vertex = _fact_index(A)
    colors = stable_coloring(A)
    adj = A.adjacency
    # Search order: BFS from 0 so each new vertex has mapped neighbours.
    order = []
    seen = set()
    for s in range(n):
        if s in seen:
            continue
        seen.add(s)
        q = deque([s])
        while q:
            u = q.popleft()
            order.append(u)
            for w in sorted(adj[u]):
                if w not in seen:
                    seen.add(w)
                    q.append(w)

    def consistent(mapping: dict[int, int], v: int) -> bool:
        for f in by_vertex[v]:
            args = f[1:]
            if all(a in mapping for a in args):
                if (f[0],) + tuple(mapping[a] for a in args) not in facts:
                    return False
        return True

    def extend(mapping: dict[int, int], used: set[int], i: int) -> dict[int, int] | None:
        if i == len(order):
            return dict(mapping)
        v = order[i]
        if v in mapping:
            return extend(mapping, used, i + 1)
        for w in range(n):
            if w in used or colors[w] != colors[v]:
                continue
            mapping[v] = w
            used.add(w)
            if consistent(mapping, v):
                found = extend(mapping, used, i + 1)
                if found is not None:
                    return found
            del mapping[v]
            used.discard(w)
        return None

    start = order[0]
    orbit = {start}
    gens: list[dict[int, int]] = []
    for target in range(n):
        if target in orbit:
            continue
        if colors[target] != colors[start]:
            return False
        sigma = extend({start: target}, {target}, 0) if consistent({start: target}, start) else None
        if sigma is None:
            return False
        gens.append(sigma)
        frontier = list(orbit)
        while frontier:
            u = frontier.pop()
            for g in gens:
                w = g[u]
                if w not in orbit:
                    orbit.add(w)
                    frontier.append(w)
        if len(orbit) == n:
            return True
    return len(orbit) == n


# -- generators ----------------------------------------------------------


def _path(n: int) -> Structure:
    return graph(n, [(i, i + 1) for i in range(n - 1)])


def _cycle(n: int) -> Structure:
    if n < 3:
        raise StructureError("cycle needs n >= 3")
    return graph(n, [(i, (i + 1) % n) for i in range(n)])


def _clique(n: int) -> Structure:
    return graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def _star(leaves: int) -> Structure:
    return graph(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def _rooted_tree_random(n: int, seed: int = 0) -> Structure:
    rng = random.Random(seed)
    edges = [(rng.randrange(i), i) for i in range(1, n)]
    rel = {(u, v) for u, v in edges} | {(v, u) for u, v in edges}
    sig = Signature(relations=(("E", 2), ("Root", 1)))
    return Structure(sig, n, {"E": rel, "Root": [(0,)]})


def _transitive_tournament_colored(n: int, colors: str) -> Structure:
    if len(colors) != n or set(colors) - {"B", "W"}:
        raise StructureError("colors must be a string of n letters from {B, W}")
    sig = Signature(relations=(("E", 2), ("Black", 1), ("White", 1)))
    return Structure(
        sig,
        n,
        {
            "E": [(i, j) for i in range(n) for j in range(i + 1, n)],
            "Black": [(i,) for i, c in enumerate(colors) if c == "B"],
            "White": [(i,) for i, c in enumerate(colors) if c == "W"],
        },
    )


FAMILIES = {
    "path": _path,
    "cycle": _cycle,
    "clique": _clique,
    "star": _star,
    "rooted_tree_random": _rooted_tree_random,
    "transitive_tournament_colored": _transitive_tournament_colored,
    "disjoint_union": None,
}


def generate(family: str, **params) -> Structure:
    """Build a named structure family.

    ``path``/``cycle``/``clique`` take ``n``; ``star`` takes ``leaves``;
    ``rooted_tree_random`` takes ``n`` and ``seed`` (unary ``Root`` = {0});
    ``transitive_tournament_colored`` takes ``n`` and ``colors`` ("BWB");
    ``disjoint_union`` takes ``parts`` (a list of structures).
    """
    if family not in FAMILIES:
        raise StructureError(f"unknown family {family!r}")
    if family == "disjoint_union":
        return disjoint_union(params.get("parts", []))
    try:
        return FAMILIES[family](**params)
    except TypeError as exc:
        raise StructureError(f"invalid parameters for {family}: {exc}") from None
