"""First-order interpretation schemes and formula transport.

A basic scheme of exponent ``k`` builds a structure on ``A^k`` (tuples
indexed lexicographically) whose relation ``R`` of arity ``r`` holds on
``(v_1..v_r)`` iff ``theta_R`` holds on the flattened ``k*r`` tuple.  A full
scheme further restricts to tuples satisfying ``theta0`` and quotients by
the definable equivalence ``E``; both side conditions are checked
exhaustively at application time.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Mapping, Sequence

from .errors import CapExceeded, SchemeError, SignatureError
from .evaluation import Compiled, default_cap, stone_pairing
from .logic import (
    BINARY,
    Bottom,
    Dist,
    Eq,
    Formula,
    Implies,
    Not,
    Quant,
    Rel,
    Top,
    Var,
    check_signature,
    conjunction,
    free_variables,
    min_arity,
    normalize,
    parse_formula,
    substitute,
    to_text,
)
from .structures import Signature, Structure


@dataclass(frozen=True)
class BasicScheme:
    k: int
    source: Signature
    target: Signature
    theta: Mapping[str, Formula]

    def __post_init__(self):
        if self.k < 1:
            raise SchemeError("exponent k must be at least 1")
        if self.target.functions or self.target.constants:
            raise SchemeError("target signature must be relational")
        for name, arity in self.target.relations:
            if name not in self.theta:
                raise SchemeError(f"no defining formula for target relation {name!r}")
            f = self.theta[name]
            check_signature(f, self.source)
            fv = free_variables(f)
            if fv and max(fv) > self.k * arity:
                raise SchemeError(f"theta for {name!r} uses x{max(fv)}, beyond k*arity = {self.k * arity}")
        extra = set(self.theta) - {r for r, _ in self.target.relations}
        if extra:
            raise SchemeError(f"formulas given for unknown target relations {sorted(extra)}")

    @property
    def is_full(self) -> bool:
        return False


@dataclass(frozen=True)
class FullScheme(BasicScheme):
    E: Formula = field(default=None)
    theta0: Formula = field(default=None)

    def __post_init__(self):
        super().__post_init__()
        for label, f, bound in (("E", self.E, 2 * self.k), ("theta0", self.theta0, self.k)):
            if f is None:
                raise SchemeError(f"full scheme needs {label}")
            check_signature(f, self.source)
            fv = free_variables(f)
            if fv and max(fv) > bound:
                raise SchemeError(f"{label} uses x{max(fv)}, beyond {bound}")

    @property
    def is_full(self) -> bool:
        return True


def load_scheme(text: str):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemeError(f"parse error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return scheme_from_dict(data)


def scheme_from_dict(data: Mapping):
    try:
        kind = data.get("kind", "basic")
        k = int(data["k"])
        source = Signature.from_dict(data["source"])
        target = Signature.from_dict(data["target"])
        theta = {name: parse_formula(text, source) for name, text in data["theta"].items()}
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise SchemeError(f"malformed scheme: {exc}") from None
    if kind == "basic":
        return BasicScheme(k, source, target, theta)
    if kind == "full":
        if "E" not in data or "theta0" not in data:
            raise SchemeError("full scheme needs 'E' and 'theta0'")
        return FullScheme(k, source, target, theta, parse_formula(data["E"], source), parse_formula(data["theta0"], source))
    raise SchemeError(f"unknown scheme kind {kind!r}")


def scheme_to_dict(I: BasicScheme) -> dict:
    data = {
        "kind": "full" if I.is_full else "basic",
        "k": I.k,
        "source": I.source.to_dict(),
        "target": I.target.to_dict(),
        "theta": {name: to_text(f) for name, f in I.theta.items()},
    }
    if I.is_full:
        data["E"] = to_text(I.E)
        data["theta0"] = to_text(I.theta0)
    return data


def _index(block: Sequence[int], n: int) -> int:
    idx = 0
    for a in block:
        idx = idx * n + a
    return idx


def _check_source(I: BasicScheme, A: Structure) -> None:
    if A.signature != I.source:
        raise SignatureError("structure signature differs from the scheme's source signature")


def _guard(count: int, cap: int | None) -> None:
    cap = default_cap() if cap is None else cap
    if count > cap:
        raise CapExceeded(f"{count} tuples exceed the enumeration cap {cap}")


def apply_basic(I: BasicScheme, A: Structure, cap: int | None = None) -> Structure:
    """The structure on ``A^k`` defined by the scheme; weights become k-fold products."""
    _check_source(I, A)
    n, k = A.n, I.k
    relations = {}
    for name, r in I.target.relations:
        _guard(n ** (k * r), cap)
        ev = Compiled(A, I.theta[name], k * r)
        rows = []
        for flat in product(range(n), repeat=k * r):
            if ev(flat):
                rows.append(tuple(_index(flat[j * k : (j + 1) * k], n) for j in range(r)))
        relations[name] = rows
    weights = None
    if A.weights is not None:
        weights = []
        for block in product(range(n), repeat=k):
            w = Fraction(1)
            for a in block:
                w *= A.weights[a]
            weights.append(w)
    return Structure(I.target, n**k, relations, weights=weights)


def _classes(I: FullScheme, A: Structure, cap: int | None):
    """Verify E is an equivalence on A^k; return (class id per tuple, tuples)."""
    n, k = A.n, I.k
    tuples = list(product(range(n), repeat=k))
    N = len(tuples)
    _guard(N * N, cap)
    ev = Compiled(A, I.E, 2 * k)
    rel = [[ev(s + t) for t in tuples] for s in tuples]
    for i in range(N):
        if not rel[i][i]:
            raise SchemeError("E is not reflexive", {"tuple": list(tuples[i])})
    for i in range(N):
        for j in range(N):
            if rel[i][j] and not rel[j][i]:
                raise SchemeError("E is not symmetric", {"pair": [list(tuples[i]), list(tuples[j])]})
    for i in range(N):
        for j in range(N):
            if rel[i][j] and rel[i] != rel[j]:
                m = next(m for m in range(N) if rel[i][m] != rel[j][m])
                a, b, c = (i, j, m) if rel[j][m] else (j, i, m)
                raise SchemeError(
                    "E is not transitive",
                    {"triple": [list(tuples[a]), list(tuples[b]), list(tuples[c])]},
                )
    cls = [-1] * N
    nxt = 0
    for i in range(N):
        if cls[i] < 0:
            for j in range(N):
                if rel[i][j]:
                    cls[j] = nxt
            nxt += 1
    return cls, tuples


def _check_compatible(label: str, f: Formula, A: Structure, k: int, r: int, cls: list[int], cap) -> None:
    n = A.n
    _guard(n ** (k * r), cap)
    ev = Compiled(A, f, k * r)
    seen: dict[tuple, tuple[bool, tuple]] = {}
    for flat in product(range(n), repeat=k * r):
        key = tuple(cls[_index(flat[j * k : (j + 1) * k], n)] for j in range(r))
        val = ev(flat)
        if key in seen:
            if seen[key][0] != val:
                raise SchemeError(
                    f"{label} is not compatible with E",
                    {"tuples": [list(seen[key][1]), list(flat)]},
                )
        else:
            seen[key] = (val, flat)


def apply_full(I: FullScheme, A: Structure, cap: int | None = None) -> Structure:
    """Quotient of the theta0-tuples by E; classes are represented by their least tuple.

    Returns the (unweighted) structure; :func:`full_domain` exposes the
    representatives.
    """
    return _apply_full(I, A, cap)[0]


def full_domain(I: FullScheme, A: Structure, cap: int | None = None) -> list[tuple[int, ...]]:
    return _apply_full(I, A, cap)[1]


def _apply_full(I: FullScheme, A: Structure, cap):
    _check_source(I, A)
    k = I.k
    cls, tuples = _classes(I, A, cap)
    _check_compatible("theta0", I.theta0, A, k, 1, cls, cap)
    for name, r in I.target.relations:
        _check_compatible(f"theta[{name}]", I.theta[name], A, k, r, cls, cap)
    ev0 = Compiled(A, I.theta0, k)
    reps: dict[int, tuple[int, ...]] = {}
    for i, t in enumerate(tuples):
        if cls[i] not in reps and ev0(t):
            reps[cls[i]] = t
    domain = sorted(reps.values())
    if not domain:
        raise SchemeError("the interpreted structure is empty (no tuple satisfies theta0)")
    relations = {}
    for name, r in I.target.relations:
        ev = Compiled(A, I.theta[name], k * r)
        rows = []
        for idxs in product(range(len(domain)), repeat=r):
            flat = tuple(a for i in idxs for a in domain[i])
            if ev(flat):
                rows.append(idxs)
        relations[name] = rows
    return Structure(I.target, len(domain), relations), domain


def apply_scheme(I: BasicScheme, A: Structure, cap: int | None = None) -> Structure:
    return apply_full(I, A, cap) if I.is_full else apply_basic(I, A, cap)


# ---------------------------------------------------------------------------
# Formula transport


def transport_formula(I: BasicScheme, f: Formula) -> Formula:
    """The source-signature formula equivalent to ``f`` on the interpreted structure.

    Free ``x_i`` becomes the block ``x_{(i-1)k+1} .. x_{ik}``.  Counting
    quantifiers count E-classes (or k-tuples), expanded to pairwise-distinct
    witnesses unless the scheme is basic with ``k = 1``.
    """
    check_signature(f, I.target)
    k = I.k
    counter = [0]

    def fresh_block() -> list[Var]:
        counter[0] += 1
        return [Var(f"_t{counter[0]}_{l}") for l in range(1, k + 1)]

    def plug(theta: Formula, blocks: Sequence[Sequence[Var]]) -> Formula:
        mapping = {}
        for j, block in enumerate(blocks):
            for l, v in enumerate(block):
                mapping[f"x{j * k + l + 1}"] = v
        return substitute(theta, mapping)

    def same(a: Sequence[Var], b: Sequence[Var]) -> Formula:
        if I.is_full:
            return plug(I.E, [a, b])
        return conjunction(Eq(u, v) for u, v in zip(a, b))

    def block_of(t, env) -> list[Var]:
        if not isinstance(t, Var):
            raise SignatureError("only variables may appear as terms over a relational target")
        if t.name in env:
            return env[t.name]
        if t.name.startswith("x") and t.name[1:].isdigit():
            i = int(t.name[1:])
            return [Var(f"x{(i - 1) * k + l}") for l in range(1, k + 1)]
        raise SignatureError(f"unbound variable {t.name!r}")

    def wrap_exists(block: Sequence[Var], body: Formula) -> Formula:
        for v in reversed(block):
            body = Quant("exists", v.name, body)
        return body

    def wrap_forall(block: Sequence[Var], body: Formula) -> Formula:
        for v in reversed(block):
            body = Quant("forall", v.name, body)
        return body

    def at_least(q: Quant, c: int, env) -> Formula:
        if c <= 0:
            return Top()
        blocks = [fresh_block() for _ in range(c)]
        parts = []
        for i in range(c):
            for j in range(i + 1, c):
                parts.append(Not(same(blocks[i], blocks[j])))
        for b in blocks:
            if I.is_full:
                parts.append(plug(I.theta0, [b]))
            parts.append(go(q.body, {**env, q.var: b}))
        body = conjunction(parts)
        for b in reversed(blocks):
            body = wrap_exists(b, body)
        return body

    def go(g: Formula, env) -> Formula:
        if isinstance(g, (Top, Bottom)):
            return g
        if isinstance(g, Dist):
            raise SchemeError("dist guards do not transport through interpretations")
        if isinstance(g, Rel):
            return plug(I.theta[g.name], [block_of(t, env) for t in g.args])
        if isinstance(g, Eq):
            return same(block_of(g.left, env), block_of(g.right, env))
        if isinstance(g, Not):
            return Not(go(g.body, env))
        if type(g) in BINARY:
            return type(g)(go(g.left, env), go(g.right, env))
        if isinstance(g, Quant):
            if g.kind in ("atleast", "atmost") and (I.is_full or k > 1):
                if g.kind == "atleast":
                    return at_least(g, g.count, env)
                return Not(at_least(g, g.count + 1, env))
            b = fresh_block()
            body = go(g.body, {**env, g.var: b})
            if g.kind in ("atleast", "atmost"):
                return Quant(g.kind, b[0].name, body, g.count)
            if g.kind == "exists":
                if I.is_full:
                    body = plug(I.theta0, [b]) & body
                return wrap_exists(b, body)
            if I.is_full:
                body = Implies(plug(I.theta0, [b]), body)
            return wrap_forall(b, body)
        raise TypeError(f"not a formula: {g!r}")

    return normalize(go(f, {}))


def compose(I: BasicScheme, J: BasicScheme) -> BasicScheme:
    """Basic scheme equivalent to applying ``I`` and then ``J``."""
    if I.is_full or J.is_full:
        raise SchemeError("composition is implemented for basic schemes")
    if J.source != I.target:
        raise SchemeError("J's source signature must be I's target signature")
    theta = {name: transport_formula(I, J.theta[name]) for name, _ in J.target.relations}
    return BasicScheme(I.k * J.k, I.source, J.target, theta)


# ---------------------------------------------------------------------------
# Verification


@dataclass
class TransportCheck:
    pointwise: bool
    checked: int
    pairing_identity: bool | None = None
    interpreted_pairing: Fraction | None = None
    transported_pairing: Fraction | None = None
    counterexample: dict | None = None

    @property
    def ok(self) -> bool:
        return self.pointwise and self.pairing_identity is not False

    def __bool__(self) -> bool:
        return self.ok


def verify_transport(
    I: BasicScheme,
    A: Structure,
    f: Formula,
    p: int | None = None,
    exhaustive: bool = True,
    trials: int = 1000,
    seed: int = 0,
    cap: int | None = None,
) -> TransportCheck:
    """Check ``I(A) |= f([v]) <=> A |= I~(f)(v)`` tuple by tuple, and for basic
    schemes the exact pairing identity ``<f, I(A)> = <I~(f), A>``."""
    p = min_arity(f) if p is None else p
    k = I.k
    g = transport_formula(I, f)
    if I.is_full:
        B, domain = _apply_full(I, A, cap)
    else:
        B = apply_basic(I, A, cap)
        domain = list(product(range(A.n), repeat=k))
    lhs = Compiled(B, f, p)
    rhs = Compiled(A, g, k * p)
    if exhaustive:
        _guard(B.n**p, cap)
        tuples = product(range(B.n), repeat=p)
    else:
        rng = random.Random(seed)
        tuples = (tuple(rng.randrange(B.n) for _ in range(p)) for _ in range(trials))
    checked = 0
    for t in tuples:
        flat = tuple(a for i in t for a in domain[i])
        checked += 1
        if lhs(t) != rhs(flat):
            return TransportCheck(
                False,
                checked,
                counterexample={
                    "interpreted_tuple": list(t),
                    "source_tuple": list(flat),
                    "interpreted_value": lhs(t),
                    "transported_value": rhs(flat),
                },
            )
    result = TransportCheck(True, checked)
    if not I.is_full:
        a = stone_pairing(B, f, p, cap).value
        b = stone_pairing(A, g, k * p, cap).value
        result.pairing_identity = a == b
        result.interpreted_pairing = a
        result.transported_pairing = b
        if a != b:
            result.counterexample = {"interpreted_pairing": str(a), "transported_pairing": str(b)}
    return result
