"""First-order formulas with counting quantifiers and distance guards.

Free variable slots are always named ``x1, x2, ...``.  Bound variables are
alpha-normalised on construction by the parser (and by :func:`normalize`)
to ``y<d>`` where ``d`` is the binder's nesting depth, so two parses of
alpha-equivalent text give equal ASTs and no path binds a name twice.

Grammar (ASCII)::

    iff   := imp ('<->' iff)?
    imp   := or ('->' imp)?
    or    := and ('|' and)*
    and   := unary ('&' unary)*
    unary := '!' unary | quant | primary
    quant := ('exists' | 'exists>=' NUM | 'exists<=' NUM | 'forall') IDENT unary
    primary := '(' iff ')' | 'true' | 'false'
             | 'dist' '(' term ',' term ')' ('<=' | '>') NUM
             | term '=' term | term '~' term | IDENT '(' term, ... ')'

A quantifier binds as tightly as ``!``: ``exists y A & B`` is
``(exists y A) & B``.  ``t ~ u`` is sugar for ``E(t, u)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Union

from .errors import FormulaSyntaxError, SignatureError

# ---------------------------------------------------------------------------
# AST

EDGE = "E"


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class App:
    func: str
    args: tuple


Term = Union[Var, Const, App]


class Formula:
    """Marker base class for formula nodes."""

    __slots__ = ()

    def __str__(self) -> str:
        return to_text(self)

    def __and__(self, other: "Formula") -> "Formula":
        return And(self, other)

    def __or__(self, other: "Formula") -> "Formula":
        return Or(self, other)

    def __invert__(self) -> "Formula":
        return Not(self)


@dataclass(frozen=True, repr=False)
class Top(Formula):
    pass


@dataclass(frozen=True, repr=False)
class Bottom(Formula):
    pass


@dataclass(frozen=True, repr=False)
class Rel(Formula):
    name: str
    args: tuple


@dataclass(frozen=True, repr=False)
class Eq(Formula):
    left: Term
    right: Term


@dataclass(frozen=True, repr=False)
class Dist(Formula):
    """``dist(left, right) <= bound`` in the Gaifman graph."""

    left: Term
    right: Term
    bound: int


@dataclass(frozen=True, repr=False)
class Not(Formula):
    body: Formula


@dataclass(frozen=True, repr=False)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, repr=False)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, repr=False)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, repr=False)
class Iff(Formula):
    left: Formula
    right: Formula


QUANTIFIER_KINDS = ("exists", "forall", "atleast", "atmost")


@dataclass(frozen=True, repr=False)
class Quant(Formula):
    """``kind`` is exists / forall / atleast / atmost; ``count`` only for the last two."""

    kind: str
    var: str
    body: Formula
    count: int = 0


for _cls in (Top, Bottom, Rel, Eq, Dist, Not, And, Or, Implies, Iff, Quant):
    _cls.__repr__ = lambda self: f"Formula({to_text(self)!r})"

TOP = Top()
BOTTOM = Bottom()

BINARY = {And: "&", Or: "|", Implies: "->", Iff: "<->"}
_PREC = {Iff: 1, Implies: 2, Or: 3, And: 4}

FREE_RE = re.compile(r"x([1-9][0-9]*)\Z")
BOUND_RE = re.compile(r"y([1-9][0-9]*)\Z")


def x(i: int) -> Var:
    return Var(f"x{i}")


def conjunction(items: Iterable[Formula]) -> Formula:
    out = None
    for f in items:
        out = f if out is None else And(out, f)
    return TOP if out is None else out


def disjunction(items: Iterable[Formula]) -> Formula:
    out = None
    for f in items:
        out = f if out is None else Or(out, f)
    return BOTTOM if out is None else out


# ---------------------------------------------------------------------------
# Tokenizer and parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>[0-9]+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op><->|->|<=|>=|[()!&|=~,>]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, signature=None):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.sig = signature
        self.scope: list[tuple[str, str]] = []

    # token helpers
    def peek(self, k: int = 0):
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def at(self, value: str) -> bool:
        kind, val, _ = self.peek()
        return kind in ("op", "ident") and val == value

    def expect(self, value: str):
        kind, val, pos = self.peek()
        if val != value or kind not in ("op", "ident"):
            raise FormulaSyntaxError(f"expected {value!r}, found {val or 'end of input'!r}", pos, self.text)
        self.i += 1

    def error(self, msg: str):
        raise FormulaSyntaxError(msg, self.peek()[2], self.text)

    # grammar
    def parse(self) -> Formula:
        f = self.iff()
        if self.peek()[0] != "eof":
            self.error(f"unexpected token {self.peek()[1]!r}")
        return f

    def iff(self) -> Formula:
        left = self.imp()
        if self.at("<->"):
            self.i += 1
            return Iff(left, self.iff())
        return left

    def imp(self) -> Formula:
        left = self.disj()
        if self.at("->"):
            self.i += 1
            return Implies(left, self.imp())
        return left

    def disj(self) -> Formula:
        left = self.conj()
        while self.at("|"):
            self.i += 1
            left = Or(left, self.conj())
        return left

    def conj(self) -> Formula:
        left = self.unary()
        while self.at("&"):
            self.i += 1
            left = And(left, self.unary())
        return left

    def unary(self) -> Formula:
        if self.at("!"):
            self.i += 1
            return Not(self.unary())
        if self.at("exists") or self.at("forall"):
            return self.quant()
        return self.primary()

    def quant(self) -> Formula:
        word = self.peek()[1]
        self.i += 1
        kind, count = ("forall", 0) if word == "forall" else ("exists", 0)
        if word == "exists" and (self.at(">=") or self.at("<=")):
            kind = "atleast" if self.peek()[1] == ">=" else "atmost"
            self.i += 1
            tk, tv, tp = self.peek()
            if tk != "num":
                raise FormulaSyntaxError("expected a count after the counting quantifier", tp, self.text)
            count = int(tv)
            self.i += 1
        tk, name, tp = self.peek()
        if tk != "ident" or name in _KEYWORDS:
            raise FormulaSyntaxError("expected a variable after quantifier", tp, self.text)
        self.i += 1
        bound = f"y{len(self.scope) + 1}"
        self.scope.append((name, bound))
        body = self.unary()
        self.scope.pop()
        return Quant(kind, bound, body, count)

    def primary(self) -> Formula:
        kind, val, pos = self.peek()
        if self.at("("):
            self.i += 1
            f = self.iff()
            self.expect(")")
            return f
        if kind == "ident" and val == "true":
            self.i += 1
            return TOP
        if kind == "ident" and val == "false":
            self.i += 1
            return BOTTOM
        if kind == "ident" and val == "dist" and self.peek(1)[1] == "(":
            self.i += 2
            a = self.term()
            self.expect(",")
            b = self.term()
            self.expect(")")
            if self.at("<=") or self.at(">"):
                neg = self.peek()[1] == ">"
                self.i += 1
            else:
                self.error("expected '<=' or '>' after dist(...)")
            nk, nv, np_ = self.peek()
            if nk != "num":
                raise FormulaSyntaxError("expected a distance bound", np_, self.text)
            self.i += 1
            d = Dist(a, b, int(nv))
            return Not(d) if neg else d
        if kind != "ident":
            self.error(f"unexpected token {val or 'end of input'!r}")
        # atom: term (op term)?, or relation application
        if self.peek(1)[1] == "(" and self.peek(1)[0] == "op":
            name = val
            self.i += 2
            args = [] if self.at(")") else self.term_list()
            self.expect(")")
            if self.at("=") or self.at("~"):
                return self.binary_atom(self.make_app(name, args, pos))
            return self.make_rel(name, tuple(args), pos)
        left = self.term()
        if self.at("=") or self.at("~"):
            return self.binary_atom(left)
        self.error("expected '=' or '~' after term")

    def binary_atom(self, left) -> Formula:
        op = self.peek()[1]
        pos = self.peek()[2]
        self.i += 1
        right = self.term()
        if op == "=":
            return Eq(left, right)
        return self.make_rel(EDGE, (left, right), pos)

    def term_list(self) -> list:
        args = [self.term()]
        while self.at(","):
            self.i += 1
            args.append(self.term())
        return args

    def term(self):
        kind, val, pos = self.peek()
        if kind != "ident" or val in _KEYWORDS:
            raise FormulaSyntaxError(f"expected a term, found {val or 'end of input'!r}", pos, self.text)
        self.i += 1
        if self.at("("):
            self.i += 1
            args = [] if self.at(")") else self.term_list()
            self.expect(")")
            return self.make_app(val, args, pos)
        for user, bound in reversed(self.scope):
            if user == val:
                return Var(bound)
        if FREE_RE.match(val):
            return Var(val)
        if BOUND_RE.match(val):
            raise FormulaSyntaxError(f"unbound variable {val!r} (y<n> names are reserved for bound variables)", pos, self.text)
        if self.sig is not None and val not in self.sig.constants:
            raise SignatureError(f"unknown constant {val!r} at position {pos}")
        return Const(val)

    def make_app(self, name, args, pos):
        if self.sig is not None:
            ar = self.sig.function_arity.get(name)
            if ar is None:
                raise SignatureError(f"unknown function symbol {name!r} at position {pos}")
            if ar != len(args):
                raise SignatureError(f"function {name!r} has arity {ar}, used with {len(args)} arguments")
        return App(name, tuple(args))

    def make_rel(self, name, args, pos):
        if self.sig is not None:
            ar = self.sig.relation_arity.get(name)
            if ar is None:
                raise SignatureError(f"unknown relation symbol {name!r} at position {pos}")
            if ar != len(args):
                raise SignatureError(f"relation {name!r} has arity {ar}, used with {len(args)} arguments")
        if not args:
            raise FormulaSyntaxError(f"relation {name!r} needs arguments", pos, self.text)
        return Rel(name, tuple(args))


_KEYWORDS = {"exists", "forall", "true", "false", "dist"}


def parse_formula(text: str, signature=None) -> Formula:
    """Parse formula text; with ``signature`` every symbol is checked against it."""
    if not isinstance(text, str):
        raise TypeError("formula text must be a string")
    return _Parser(text, signature).parse()


def read_formula_file(text: str, signature=None) -> list[tuple[Formula, int | None]]:
    """One formula per line, ``#`` comments; an optional trailing ``@p`` fixes the arity."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        arity = None
        if "@" in line:
            line, _, a = line.rpartition("@")
            try:
                arity = int(a.strip())
            except ValueError:
                raise FormulaSyntaxError(f"line {lineno}: bad arity {a.strip()!r}") from None
            line = line.strip()
        try:
            out.append((parse_formula(line, signature), arity))
        except FormulaSyntaxError as exc:
            raise FormulaSyntaxError(f"line {lineno}: {exc}") from None
    return out


# ---------------------------------------------------------------------------
# Printing


def term_text(t) -> str:
    if isinstance(t, (Var, Const)):
        return t.name
    return f"{t.func}({', '.join(term_text(a) for a in t.args)})"


def to_text(f: Formula, prec: int = 0) -> str:
    """Render ``f`` in the input grammar; re-parsing yields an equal AST."""
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bottom):
        return "false"
    if isinstance(f, Rel):
        if f.name == EDGE and len(f.args) == 2:
            return f"{term_text(f.args[0])} ~ {term_text(f.args[1])}"
        return f"{f.name}({', '.join(term_text(a) for a in f.args)})"
    if isinstance(f, Eq):
        return f"{term_text(f.left)} = {term_text(f.right)}"
    if isinstance(f, Dist):
        return f"dist({term_text(f.left)}, {term_text(f.right)}) <= {f.bound}"
    if isinstance(f, Not):
        return "!" + _operand_text(f.body)
    if isinstance(f, Quant):
        head = {"exists": "exists", "forall": "forall", "atleast": f"exists>={f.count}", "atmost": f"exists<={f.count}"}[f.kind]
        return f"{head} {f.var} {_operand_text(f.body)}"
    p = _PREC[type(f)]
    op = BINARY[type(f)]
    if isinstance(f, (And, Or)):
        s = f"{to_text(f.left, p)} {op} {to_text(f.right, p + 1)}"
    else:
        s = f"{to_text(f.left, p + 1)} {op} {to_text(f.right, p)}"
    return f"({s})" if p < prec else s


def _operand_text(f: Formula) -> str:
    # infix atoms read badly after a prefix operator, so bracket them
    if isinstance(f, (Eq, Dist)) or (isinstance(f, Rel) and f.name == EDGE and len(f.args) == 2):
        return f"({to_text(f)})"
    return to_text(f, 5)


# ---------------------------------------------------------------------------
# Traversal helpers


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, (Not, Quant)):
        return (f.body,)
    if type(f) in BINARY:
        return (f.left, f.right)
    return ()


def atom_terms(f: Formula) -> tuple:
    if isinstance(f, Rel):
        return f.args
    if isinstance(f, (Eq, Dist)):
        return (f.left, f.right)
    return ()


def subformulas(f: Formula) -> Iterable[Formula]:
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(children(g))


def _term_vars(t) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, App):
        out = set()
        for a in t.args:
            out |= _term_vars(a)
        return out
    return set()


def _iter_terms(t):
    yield t
    if isinstance(t, App):
        for a in t.args:
            yield from _iter_terms(a)


@lru_cache(maxsize=65536)
def free_variable_names(f: Formula) -> frozenset[str]:
    if isinstance(f, Quant):
        return free_variable_names(f.body) - {f.var}
    out: set[str] = set()
    for t in atom_terms(f):
        out |= _term_vars(t)
    for c in children(f):
        out |= free_variable_names(c)
    return frozenset(out)


def free_variables(f: Formula) -> frozenset[int]:
    """Indices ``i`` of free ``x_i`` occurring in ``f``."""
    out = set()
    for name in free_variable_names(f):
        m = FREE_RE.match(name)
        if m is None:
            raise SignatureError(f"free variable {name!r} is not a slot variable x<i>")
        out.add(int(m.group(1)))
    return frozenset(out)


def min_arity(f: Formula) -> int:
    fv = free_variables(f)
    return max(fv) if fv else 0


@lru_cache(maxsize=65536)
def quantifier_rank(f: Formula) -> int:
    if isinstance(f, Quant):
        return 1 + quantifier_rank(f.body)
    return max((quantifier_rank(c) for c in children(f)), default=0)


def symbols(f: Formula) -> dict[str, set]:
    """Relation, function and constant names used by ``f`` (with arities)."""
    rels, funs, consts = set(), set(), set()
    for g in subformulas(f):
        if isinstance(g, Rel):
            rels.add((g.name, len(g.args)))
        for t in atom_terms(g):
            for s in _iter_terms(t):
                if isinstance(s, App):
                    funs.add((s.func, len(s.args)))
                elif isinstance(s, Const):
                    consts.add(s.name)
    return {"relations": rels, "functions": funs, "constants": consts}


def check_signature(f: Formula, signature) -> None:
    used = symbols(f)
    rel_ar = signature.relation_arity
    fun_ar = signature.function_arity
    for name, ar in used["relations"]:
        if rel_ar.get(name) != ar:
            raise SignatureError(f"relation {name}/{ar} is not in the signature")
    for name, ar in used["functions"]:
        if fun_ar.get(name) != ar:
            raise SignatureError(f"function {name}/{ar} is not in the signature")
    for name in used["constants"]:
        if name not in signature.constants:
            raise SignatureError(f"constant {name} is not in the signature")


# ---------------------------------------------------------------------------
# Substitution and normalisation


def _subst_term(t, mapping: Mapping[str, object]):
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    if isinstance(t, App):
        return App(t.func, tuple(_subst_term(a, mapping) for a in t.args))
    return t


def substitute(f: Formula, mapping: Mapping[str, object]) -> Formula:
    """Capture-avoiding substitution of terms for free variable names."""
    counter = [0]
    incoming: set[str] = set()
    for t in mapping.values():
        incoming |= _term_vars(t)

    def go(g: Formula, m: Mapping[str, object]) -> Formula:
        if isinstance(g, Rel):
            return Rel(g.name, tuple(_subst_term(a, m) for a in g.args))
        if isinstance(g, Eq):
            return Eq(_subst_term(g.left, m), _subst_term(g.right, m))
        if isinstance(g, Dist):
            return Dist(_subst_term(g.left, m), _subst_term(g.right, m), g.bound)
        if isinstance(g, Not):
            return Not(go(g.body, m))
        if isinstance(g, Quant):
            inner = {k: v for k, v in m.items() if k != g.var}
            var = g.var
            if var in incoming:
                counter[0] += 1
                var = f"_a{counter[0]}"
                inner[g.var] = Var(var)
            return Quant(g.kind, var, go(g.body, inner), g.count)
        if type(g) in BINARY:
            return type(g)(go(g.left, m), go(g.right, m))
        return g

    return go(f, dict(mapping))


def normalize(f: Formula) -> Formula:
    """Rename every binder to ``y<depth>`` (alpha-normalisation)."""

    def go(g: Formula, m: dict, depth: int) -> Formula:
        if isinstance(g, Rel):
            return Rel(g.name, tuple(_subst_term(a, m) for a in g.args))
        if isinstance(g, Eq):
            return Eq(_subst_term(g.left, m), _subst_term(g.right, m))
        if isinstance(g, Dist):
            return Dist(_subst_term(g.left, m), _subst_term(g.right, m), g.bound)
        if isinstance(g, Not):
            return Not(go(g.body, m, depth))
        if isinstance(g, Quant):
            new = f"y{depth + 1}"
            inner = dict(m)
            inner[g.var] = Var(new)
            return Quant(g.kind, new, go(g.body, inner, depth + 1), g.count)
        if type(g) in BINARY:
            return type(g)(go(g.left, m, depth), go(g.right, m, depth))
        return g

    return go(f, {}, 0)


def permute_variables(f: Formula, tau: Mapping[int, int]) -> Formula:
    """Rename free slots ``x_i -> x_tau(i)``; indices not in ``tau`` stay put.

    ``tau`` must be injective on the free variables of ``f`` (after
    completing it with the identity on unmapped indices).
    """
    fv = free_variables(f)
    image = {i: tau.get(i, i) for i in fv}
    if len(set(image.values())) != len(image):
        raise ValueError("variable map is not injective on the free variables")
    for j in image.values():
        if not isinstance(j, int) or j < 1:
            raise ValueError(f"invalid variable index {j!r}")
    return substitute(f, {f"x{i}": x(j) for i, j in image.items()})


# ---------------------------------------------------------------------------
# Fragment classification


@dataclass(frozen=True)
class FragmentInfo:
    is_sentence: bool
    min_p: int
    quantifier_free: bool
    equality_free: bool
    locality_radius: int | None
    uses_dist_guards: bool
    uses_counting: bool


def _conjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        return _conjuncts(f.left) + _conjuncts(f.right)
    return [f]


def _guard_radius(q: Quant, radii: Mapping[str, int]) -> int | None:
    if q.kind == "forall":
        if not isinstance(q.body, Implies):
            return None
        guards = _conjuncts(q.body.left)
    else:
        guards = _conjuncts(q.body)
    best = None
    for g in guards:
        if not isinstance(g, Dist):
            continue
        for a, b in ((g.left, g.right), (g.right, g.left)):
            if isinstance(b, Var) and b.name == q.var and isinstance(a, Var) and a.name in radii:
                r = radii[a.name] + g.bound
                best = r if best is None else min(best, r)
    return best


def locality_radius(f: Formula) -> int | None:
    """Syntactic locality radius, or ``None`` if some quantifier is unguarded.

    A quantifier over ``y`` is guarded when its body is ``dist(u, y) <= k & ...``
    (``->`` for ``forall``) with ``u`` a free variable (radius 0) or an
    already-guarded bound variable of radius ``r``; ``y`` then has radius
    ``r + k``.  The formula's radius is the largest radius of any binder.
    """
    radii = {name: 0 for name in free_variable_names(f)}

    def go(g: Formula, radii: dict) -> int | None:
        if isinstance(g, Quant):
            r = _guard_radius(g, radii)
            if r is None:
                return None
            inner = dict(radii)
            inner[g.var] = r
            sub = go(g.body, inner)
            return None if sub is None else max(r, sub)
        best = 0
        for c in children(g):
            sub = go(c, radii)
            if sub is None:
                return None
            best = max(best, sub)
        return best

    return go(f, radii)


def classify_fragment(f: Formula) -> FragmentInfo:
    fv = free_variables(f)
    nodes = list(subformulas(f))
    qf = not any(isinstance(g, Quant) for g in nodes)
    return FragmentInfo(
        is_sentence=not fv,
        min_p=max(fv) if fv else 0,
        quantifier_free=qf,
        equality_free=not any(isinstance(g, Eq) for g in nodes),
        locality_radius=0 if qf else locality_radius(f),
        uses_dist_guards=any(isinstance(g, Dist) for g in nodes),
        uses_counting=any(isinstance(g, Quant) and g.kind in ("atleast", "atmost") for g in nodes),
    )


# ---------------------------------------------------------------------------
# Normal form for deduplication


def nnf(f: Formula) -> Formula:
    """Negation normal form; ``->`` and ``<->`` are expanded."""

    def pos(g):
        if isinstance(g, Not):
            return neg(g.body)
        if isinstance(g, And):
            return And(pos(g.left), pos(g.right))
        if isinstance(g, Or):
            return Or(pos(g.left), pos(g.right))
        if isinstance(g, Implies):
            return Or(neg(g.left), pos(g.right))
        if isinstance(g, Iff):
            return Or(And(pos(g.left), pos(g.right)), And(neg(g.left), neg(g.right)))
        if isinstance(g, Quant):
            return Quant(g.kind, g.var, pos(g.body), g.count)
        return g

    def neg(g):
        if isinstance(g, Not):
            return pos(g.body)
        if isinstance(g, Top):
            return BOTTOM
        if isinstance(g, Bottom):
            return TOP
        if isinstance(g, And):
            return Or(neg(g.left), neg(g.right))
        if isinstance(g, Or):
            return And(neg(g.left), neg(g.right))
        if isinstance(g, Implies):
            return And(pos(g.left), neg(g.right))
        if isinstance(g, Iff):
            return Or(And(pos(g.left), neg(g.right)), And(neg(g.left), pos(g.right)))
        if isinstance(g, Quant):
            if g.kind == "exists":
                return Quant("forall", g.var, neg(g.body))
            if g.kind == "forall":
                return Quant("exists", g.var, neg(g.body))
            if g.kind == "atleast":
                return Quant("atmost", g.var, pos(g.body), g.count - 1) if g.count > 0 else BOTTOM
            return Quant("atleast", g.var, pos(g.body), g.count + 1)
        return Not(g)

    return pos(f)


def normal_form(f: Formula) -> Formula:
    """NNF with flattened, sorted and deduplicated ``&``/``|`` operands.

    Syntactic only: equal normal forms imply equivalence, not conversely.
    """

    def go(g):
        if isinstance(g, (And, Or)):
            cls = type(g)
            items = []
            stack = [g]
            while stack:
                h = stack.pop()
                if isinstance(h, cls):
                    stack.extend([h.left, h.right])
                else:
                    items.append(go(h))
            uniq = sorted(set(items), key=to_text)
            out = uniq[0]
            for h in uniq[1:]:
                out = cls(out, h)
            return out
        if isinstance(g, Quant):
            return Quant(g.kind, g.var, go(g.body), g.count)
        return g

    return go(normalize(nnf(f)))


# ---------------------------------------------------------------------------
# Bounds and expansions


def gaifman_bounds(q: int, n: int) -> tuple[int, int, int]:
    """Locality bounds ``(r, t, m)`` for a formula of rank ``q`` with ``n`` free variables."""
    if q < 1:
        raise ValueError("quantifier rank must be at least 1")
    if n < 0:
        raise ValueError("free-variable count must be non-negative")
    r = 7 ** (q - 1)
    return r, (r - 1) // 2, n + q


def bsr_model_bound(f: Formula) -> int | None:
    """Model-size bound for an exists*forall* sentence, else ``None``.

    The matrix must be quantifier-free, function-free and dist-free.  The
    bound is the number of leading existentials plus the number of distinct
    constants, but never below 1 (structures are non-empty).
    """
    if free_variables(f):
        return None
    g = f
    n_exists = 0
    while isinstance(g, Quant) and g.kind == "exists":
        n_exists += 1
        g = g.body
    while isinstance(g, Quant) and g.kind == "forall":
        g = g.body
    used = symbols(g)
    if used["functions"]:
        return None
    for h in subformulas(g):
        if isinstance(h, (Quant, Dist)):
            return None
    return max(1, n_exists + len(used["constants"]))


def basic_local_sentence(psi: Formula, r: int, m: int) -> Formula:
    """``exists y1..ym (pairwise dist > 2r & psi(y_i) for all i)`` for unary ``psi``."""
    if free_variables(psi) != {1}:
        raise ValueError("psi must have exactly the free variable x1")
    names = [f"_g{i}" for i in range(1, m + 1)]
    parts = []
    for i in range(m):
        for j in range(i + 1, m):
            parts.append(Not(Dist(Var(names[i]), Var(names[j]), 2 * r)))
    for v in names:
        parts.append(substitute(psi, {"x1": Var(v)}))
    body = conjunction(parts)
    for v in reversed(names):
        body = Quant("exists", v, body)
    return normalize(body)


def expand_distance_atoms(f: Formula, signature=None, edge: str = EDGE) -> Formula:
    """Replace every ``dist(a, b) <= k`` by its path formula over ``edge``.

    Valid on graphs whose edge relation is symmetric and loop-free.  The
    expansion of ``dist(a,b) <= k`` is ``a = b | E(a,b) | exists z1 (E(a,z1)
    & E(z1,b)) | ...`` up to paths of length ``k``, adding rank ``k - 1``.
    """
    if signature is not None:
        if len(signature.relations) != 1 or signature.relations[0][1] != 2 or signature.functions:
            raise SignatureError("distance expansion needs a plain graph signature (one binary relation)")
        edge = signature.relations[0][0]
    for name, ar in symbols(f)["relations"]:
        if name != edge or ar != 2:
            raise SignatureError(f"distance expansion needs a plain graph signature, found {name}/{ar}")
    counter = [0]

    def path(a, b, length: int) -> Formula:
        if length == 1:
            return Rel(edge, (a, b))
        counter[0] += 1
        z = Var(f"_p{counter[0]}")
        return Quant("exists", z.name, And(Rel(edge, (a, z)), path(z, b, length - 1)))

    def go(g: Formula) -> Formula:
        if isinstance(g, Dist):
            return disjunction([Eq(g.left, g.right)] + [path(g.left, g.right, j) for j in range(1, g.bound + 1)])
        if isinstance(g, Not):
            return Not(go(g.body))
        if isinstance(g, Quant):
            return Quant(g.kind, g.var, go(g.body), g.count)
        if type(g) in BINARY:
            return type(g)(go(g.left), go(g.right))
        return g

    if not any(isinstance(g, Dist) for g in subformulas(f)):
        return f
    return normalize(go(f))
