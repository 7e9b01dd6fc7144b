"""Canonical forms of small structures by colour refinement and backtracking.

Colours are computed from labelling-independent data only, so the order
of cells is an isomorphism invariant.  The canonical encoding is the
lexicographically least relation encoding over all leaves of the
individualisation-refinement tree; exact, and fast enough for balls and
quantum-graph terms of a dozen vertices.
"""

from __future__ import annotations

import json
from itertools import product

from .errors import CapExceeded
from .structures import Structure, connected_components, induced_substructure

DEFAULT_LEAF_CAP = 200_000


def _facts(A: Structure) -> dict[str, list[tuple[int, ...]]]:
    facts: dict[str, list[tuple[int, ...]]] = {}
    for name, tuples in A.relations.items():
        facts["R:" + name] = list(tuples)
    for name, arity in A.signature.functions:
        table = A.functions[name]
        facts["F:" + name] = [args + (table[i],) for i, args in enumerate(product(range(A.n), repeat=arity))]
    for name, v in A.constants.items():
        facts["C:" + name] = [(v,)]
    return facts


def _refine(n: int, facts: dict[str, list[tuple[int, ...]]], colors: list[int]) -> list[int]:
    """Refine to the coarsest equitable colouring; colours are ranks 0..k-1."""
    occurrences: list[list[tuple[str, int, tuple[int, ...]]]] = [[] for _ in range(n)]
    for name, tuples in facts.items():
        for t in tuples:
            for pos, x in enumerate(t):
                occurrences[x].append((name, pos, t))
    num = len(set(colors))
    while True:
        sigs = []
        for v in range(n):
            sig = sorted((name, pos, tuple(colors[x] for x in t)) for name, pos, t in occurrences[v])
            sigs.append((colors[v], tuple(sig)))
        ranks = {s: i for i, s in enumerate(sorted(set(sigs)))}
        new = [ranks[s] for s in sigs]
        if len(ranks) == num:
            return new
        colors, num = new, len(ranks)


def _normalize(colors: list[int]) -> list[int]:
    ranks = {c: i for i, c in enumerate(sorted(set(colors)))}
    return [ranks[c] for c in colors]


def stable_coloring(A: Structure, root: int | None = None) -> list[int]:
    """Coarsest equitable colouring of ``A`` (root, if given, singled out)."""
    initial = [0] * A.n
    if root is not None:
        initial[root] = 1
    return _refine(A.n, _facts(A), initial)


def _encode(A_facts: dict[str, list[tuple[int, ...]]], perm: list[int], n: int, rooted_at) -> tuple:
    body = tuple(
        (name, tuple(sorted(tuple(perm[x] for x in t) for t in A_facts[name]))) for name in sorted(A_facts)
    )
    return (n, rooted_at if rooted_at is None else perm[rooted_at], body)


def _connected_canonical(A: Structure, root: int | None, leaf_cap: int) -> tuple:
    n = A.n
    facts = _facts(A)
    initial = [0] * n
    if root is not None:
        initial[root] = 1
    start = _refine(n, facts, initial)
    best = None
    leaves = 0

    def descend(colors: list[int]):
        nonlocal best, leaves
        counts: dict[int, int] = {}
        for c in colors:
            counts[c] = counts.get(c, 0) + 1
        cell = min((c for c, k in counts.items() if k > 1), default=None)
        if cell is None:
            leaves += 1
            if leaves > leaf_cap:
                raise CapExceeded(f"canonical labelling exceeded {leaf_cap} leaves (n={n})")
            enc = _encode(facts, colors, n, root)
            if best is None or enc < best:
                best = enc
            return
        for v in range(n):
            if colors[v] != cell:
                continue
            split = [2 * c + (1 if c > cell or (c == cell and u != v) else 0) for u, c in enumerate(colors)]
            descend(_refine(n, facts, _normalize(split)))

    descend(start)
    return best


def canonical_form(A: Structure, root: int | None = None, leaf_cap: int = DEFAULT_LEAF_CAP) -> tuple:
    """Hashable canonical encoding; equal iff the (rooted) structures are isomorphic.

    Weights are ignored.  Unrooted disconnected structures are encoded as the
    sorted multiset of their component encodings, which avoids the
    factorial blow-up on repeated components.
    """
    sig = (A.signature.relations, A.signature.functions, A.signature.constants)
    if root is None:
        comps = connected_components(A)
        if len(comps) > 1 and not A.signature.functions and not A.signature.constants:
            parts = []
            for comp in comps:
                sub, _ = induced_substructure(A, comp)
                parts.append(_connected_canonical(sub, None, leaf_cap))
            return ("union", sig, tuple(sorted(parts)))
    return ("single", sig, _connected_canonical(A, root, leaf_cap))


def certificate(A: Structure, root: int | None = None, leaf_cap: int = DEFAULT_LEAF_CAP) -> str:
    """Canonical form as a hex string of its compact JSON bytes."""
    data = json.dumps(canonical_form(A, root, leaf_cap), separators=(",", ":"))
    return data.encode("utf-8").hex()


def is_isomorphic(A: Structure, B: Structure, leaf_cap: int = DEFAULT_LEAF_CAP) -> bool:
    if A.n != B.n or A.signature != B.signature:
        return False
    return canonical_form(A, None, leaf_cap) == canonical_form(B, None, leaf_cap)
