"""Model checking, satisfying sets and Stone pairings.

Formulas are compiled once per structure into closures over a flat
environment list: free slot ``x_i`` lives at index ``i-1`` and the binder
at depth ``d`` at index ``p+d-1``.  Each quantified subformula memoises its
truth value on the values of its own free variables, so enumerating
``n^p`` tuples does not redo inner quantifier work.
"""

from __future__ import annotations

import math
import os
import random
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Mapping, Sequence

from .errors import CapExceeded, EvaluationError, FolimError, SignatureError
from .logic import (
    App,
    Const,
    Dist,
    Eq,
    Formula,
    Not,
    Quant,
    Rel,
    Top,
    Bottom,
    And,
    Or,
    Implies,
    Iff,
    Var,
    check_signature,
    free_variable_names,
    free_variables,
    min_arity,
    children,
    normalize,
    to_text,
)
from .structures import Structure, scattered_set

DEFAULT_CAP_TUPLES = 10**7
PRNG_NAME = "python-random-mt19937/randrange-v1"


def default_cap() -> int:
    """Enumeration cap, overridable through ``FOLIM_CAP_TUPLES``."""
    raw = os.environ.get("FOLIM_CAP_TUPLES")
    if raw:
        try:
            return int(raw)
        except ValueError:
            raise FolimError(f"FOLIM_CAP_TUPLES must be an integer, got {raw!r}") from None
    return DEFAULT_CAP_TUPLES


# ---------------------------------------------------------------------------
# Compilation


class _Compiler:
    def __init__(self, A: Structure, p: int):
        self.A = A
        self.p = p
        self.slots: dict[str, int] = {}

    def slot(self, name: str) -> int:
        if name in self.slots:
            return self.slots[name]
        if name.startswith("x") and name[1:].isdigit():
            i = int(name[1:])
            if i > self.p:
                raise EvaluationError(f"free variable {name} exceeds arity {self.p}")
            return i - 1
        raise EvaluationError(f"unbound variable {name!r}")

    def term(self, t):
        A = self.A
        if isinstance(t, Var):
            s = self.slot(t.name)
            return lambda env: env[s]
        if isinstance(t, Const):
            v = A.constants[t.name]
            return lambda env: v
        if isinstance(t, App):
            args = [self.term(a) for a in t.args]
            table = A.functions[t.func]
            n = A.n
            if len(args) == 1:
                a0 = args[0]
                return lambda env: table[a0(env)]

            def apply(env):
                idx = 0
                for a in args:
                    idx = idx * n + a(env)
                return table[idx]

            return apply
        raise TypeError(f"not a term: {t!r}")

    def formula(self, f: Formula, depth: int):
        A = self.A
        if isinstance(f, Top):
            return lambda env: True
        if isinstance(f, Bottom):
            return lambda env: False
        if isinstance(f, Rel):
            tuples = A.relations[f.name]
            args = [self.term(a) for a in f.args]
            if len(args) == 1:
                a0 = args[0]
                return lambda env: (a0(env),) in tuples
            if len(args) == 2:
                a0, a1 = args
                return lambda env: (a0(env), a1(env)) in tuples
            return lambda env: tuple(a(env) for a in args) in tuples
        if isinstance(f, Eq):
            a, b = self.term(f.left), self.term(f.right)
            return lambda env: a(env) == b(env)
        if isinstance(f, Dist):
            a, b = self.term(f.left), self.term(f.right)
            k = f.bound
            dist = A.distances_from
            return lambda env: dist(a(env)).get(b(env), k + 1) <= k
        if isinstance(f, Not):
            g = self.formula(f.body, depth)
            return lambda env: not g(env)
        if isinstance(f, And):
            g, h = self.formula(f.left, depth), self.formula(f.right, depth)
            return lambda env: g(env) and h(env)
        if isinstance(f, Or):
            g, h = self.formula(f.left, depth), self.formula(f.right, depth)
            return lambda env: g(env) or h(env)
        if isinstance(f, Implies):
            g, h = self.formula(f.left, depth), self.formula(f.right, depth)
            return lambda env: (not g(env)) or h(env)
        if isinstance(f, Iff):
            g, h = self.formula(f.left, depth), self.formula(f.right, depth)
            return lambda env: g(env) == h(env)
        if isinstance(f, Quant):
            return self.quant(f, depth)
        raise TypeError(f"not a formula: {f!r}")

    def quant(self, f: Quant, depth: int):
        s = self.p + depth
        key_slots = tuple(sorted(self.slot(v) for v in free_variable_names(f)))
        saved = self.slots.get(f.var)
        self.slots[f.var] = s
        body = self.formula(f.body, depth + 1)
        if saved is None:
            del self.slots[f.var]
        else:
            self.slots[f.var] = saved
        domain = range(self.A.n)
        kind, count = f.kind, f.count

        if kind == "exists":
            def decide(env):
                for v in domain:
                    env[s] = v
                    if body(env):
                        return True
                return False
        elif kind == "forall":
            def decide(env):
                for v in domain:
                    env[s] = v
                    if not body(env):
                        return False
                return True
        elif kind == "atleast":
            def decide(env):
                if count <= 0:
                    return True
                hits = 0
                for v in domain:
                    env[s] = v
                    if body(env):
                        hits += 1
                        if hits >= count:
                            return True
                return False
        else:
            def decide(env):
                hits = 0
                for v in domain:
                    env[s] = v
                    if body(env):
                        hits += 1
                        if hits > count:
                            return False
                return True

        memo: dict = {}

        def run(env):
            key = tuple(env[i] for i in key_slots)
            hit = memo.get(key)
            if hit is None:
                hit = decide(env)
                memo[key] = hit
            return hit

        return run


class Compiled:
    """A formula compiled against one structure for arity ``p``."""

    def __init__(self, A: Structure, f: Formula, p: int):
        check_signature(f, A.signature)
        fv = free_variables(f)
        if fv and max(fv) > p:
            raise EvaluationError(f"arity {p} is too small for free variables {sorted(fv)}")
        self.A = A
        self.formula = normalize(f)
        self.p = p
        self.fn = _Compiler(A, p).formula(self.formula, 0)
        self.env = [0] * (p + _depth(self.formula))

    def __call__(self, values: Sequence[int]) -> bool:
        env = self.env
        env[: self.p] = values
        return self.fn(env)


def _depth(f: Formula) -> int:
    if isinstance(f, Quant):
        return 1 + _depth(f.body)
    return max((_depth(c) for c in children(f)), default=0)


def compile_formula(A: Structure, f: Formula, p: int | None = None) -> Compiled:
    return Compiled(A, f, min_arity(f) if p is None else p)


# ---------------------------------------------------------------------------
# Operations


def models(A: Structure, f: Formula, assignment: Mapping[int, int] | Sequence[int] = ()) -> bool:
    """``A |= f(assignment)``; ``assignment`` maps slot index -> vertex (or is a tuple for x1..xp)."""
    if not isinstance(assignment, Mapping):
        assignment = {i + 1: v for i, v in enumerate(assignment)}
    fv = free_variables(f)
    missing = fv - set(assignment)
    if missing:
        raise EvaluationError(f"assignment misses free variables {sorted(missing)}")
    p = max(list(fv) + list(assignment) + [0])
    values = [0] * p
    for i, v in assignment.items():
        if not isinstance(v, int) or not 0 <= v < A.n:
            raise EvaluationError(f"vertex {v!r} for x{i} out of range (n={A.n})")
        values[i - 1] = v
    return Compiled(A, f, p)(values)


def _check_cap(A: Structure, p: int, cap: int | None) -> None:
    cap = default_cap() if cap is None else cap
    if A.n**p > cap:
        raise CapExceeded(f"{A.n}^{p} tuples exceed the enumeration cap {cap}; sample instead")


def satisfying_set(A: Structure, f: Formula, p: int | None = None, cap: int | None = None) -> list[tuple[int, ...]]:
    """All ``p``-tuples satisfying ``f``, in lexicographic order."""
    p = min_arity(f) if p is None else p
    _check_cap(A, p, cap)
    ev = Compiled(A, f, p)
    return [t for t in product(range(A.n), repeat=p) if ev(t)]


@dataclass(frozen=True)
class PairingResult:
    formula: str
    arity: int
    value: Fraction | None = None
    point: float | None = None
    half_width: float | None = None
    confidence: float | None = None
    samples: int | None = None
    seed: int | None = None
    prng: str | None = None
    structure_id: str | None = None

    @property
    def exact(self) -> bool:
        return self.value is not None


def stone_pairing(
    A: Structure, f: Formula, p: int | None = None, cap: int | None = None, structure_id: str | None = None
) -> PairingResult:
    """Exact pairing: the product-measure mass of the satisfying set."""
    p = min_arity(f) if p is None else p
    _check_cap(A, p, cap)
    ev = Compiled(A, f, p)
    if A.weights is None:
        hits = sum(1 for t in product(range(A.n), repeat=p) if ev(t))
        value = Fraction(hits, A.n**p)
    else:
        w = A.weights
        total = Fraction(0)
        for t in product(range(A.n), repeat=p):
            if ev(t):
                m = Fraction(1)
                for v in t:
                    m *= w[v]
                total += m
        value = total
    return PairingResult(formula=to_text(f), arity=p, value=value, structure_id=structure_id)


def pairing(A: Structure, f: Formula, p: int | None = None, cap: int | None = None) -> Fraction:
    """Shorthand for ``stone_pairing(...).value``."""
    return stone_pairing(A, f, p, cap).value


def hoeffding_half_width(samples: int, confidence: float) -> float:
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * samples))


class _Sampler:
    """Exact sampling of vertices under the structure's measure."""

    def __init__(self, A: Structure, rng: random.Random):
        self.rng = rng
        self.n = A.n
        if A.weights is None:
            self.cum = None
        else:
            denom = math.lcm(*(w.denominator for w in A.weights))
            acc = 0
            self.cum = []
            for w in A.weights:
                acc += w.numerator * (denom // w.denominator)
                self.cum.append(acc)
            self.denom = denom

    def draw(self) -> int:
        if self.cum is None:
            return self.rng.randrange(self.n)
        return bisect_right(self.cum, self.rng.randrange(self.denom))


def estimate_stone_pairing(
    A: Structure,
    f: Formula,
    p: int | None = None,
    samples: int = 10_000,
    seed: int = 0,
    confidence: float = 0.99,
    structure_id: str | None = None,
) -> PairingResult:
    """Monte-Carlo pairing with a two-sided Hoeffding half-width."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    p = min_arity(f) if p is None else p
    ev = Compiled(A, f, p)
    sampler = _Sampler(A, random.Random(seed))
    draw = sampler.draw
    hits = 0
    for _ in range(samples):
        if ev([draw() for _ in range(p)]):
            hits += 1
    return PairingResult(
        formula=to_text(f),
        arity=p,
        point=hits / samples,
        half_width=hoeffding_half_width(samples, confidence),
        confidence=confidence,
        samples=samples,
        seed=seed,
        prng=PRNG_NAME,
        structure_id=structure_id,
    )


def eval_gaifman_sentence(A: Structure, psi: Formula, r: int, m: int) -> bool:
    """Whether ``m`` vertices pairwise farther than ``2r`` apart all satisfy ``psi``."""
    if free_variables(psi) != {1}:
        raise EvaluationError("psi must have exactly one free variable, x1")
    if m < 1:
        raise ValueError("m must be at least 1")
    ev = Compiled(A, psi, 1)
    witnesses = [v for v in range(A.n) if ev((v,))]
    return scattered_set(A, 2 * r + 1, m, candidates=witnesses) is not None


def profile(A: Structure, formulas: Sequence[tuple[Formula, int | None]], cap: int | None = None) -> list[Fraction]:
    """Exact pairings of each ``(formula, arity)`` in order."""
    out = []
    for i, (f, p) in enumerate(formulas):
        try:
            out.append(stone_pairing(A, f, p, cap).value)
        except (EvaluationError, CapExceeded, SignatureError) as exc:
            raise type(exc)(f"entry {i}: {exc}") from exc
    return out
