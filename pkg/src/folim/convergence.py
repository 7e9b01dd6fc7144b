"""Finite-prefix diagnostics for sequences of structures.

No finite computation certifies a limit: traces and tail oscillations are
reported raw, and the only verdict is "window-stable" (the oscillation
over the last ``window`` entries is at most ``epsilon``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .canon import DEFAULT_LEAF_CAP, certificate
from .errors import EvaluationError, FolimError, StructureError
from .evaluation import Compiled, stone_pairing
from .logic import Formula, free_variables, min_arity, to_text
from .rational import to_fraction
from .structures import Structure, ball, ball_measure, connected_components, induced_substructure

# ---------------------------------------------------------------------------
# Traces and reports


def pairing_trace(seq: Sequence[Structure], f: Formula, p: int | None = None, cap: int | None = None) -> list[Fraction]:
    p = min_arity(f) if p is None else p
    out = []
    for i, A in enumerate(seq):
        try:
            out.append(stone_pairing(A, f, p, cap).value)
        except FolimError as exc:
            raise type(exc)(f"structure {i}: {exc}") from exc
    return out


def tail_oscillations(trace: Sequence[Fraction]) -> list[Fraction]:
    """``osc[k] = max - min`` of ``trace[k:]``; non-increasing in ``k``."""
    out = []
    lo = hi = None
    for v in reversed(trace):
        lo = v if lo is None else min(lo, v)
        hi = v if hi is None else max(hi, v)
        out.append(hi - lo)
    return out[::-1]


@dataclass
class FormulaTrace:
    formula: str
    arity: int
    values: list[Fraction]
    oscillations: list[Fraction]
    window_stable: bool
    is_sentence: bool
    eventually_constant: bool | None = None


@dataclass
class ConvergenceReport:
    epsilon: Fraction
    window: int
    entries: list[FormulaTrace] = field(default_factory=list)
    sequence_id: str | None = None
    formula_set_id: str | None = None

    @property
    def all_window_stable(self) -> bool:
        return all(e.window_stable for e in self.entries)


def convergence_report(
    seq: Sequence[Structure],
    formulas: Sequence[tuple[Formula, int | None]],
    epsilon,
    window: int,
    cap: int | None = None,
    sequence_id: str | None = None,
    formula_set_id: str | None = None,
) -> ConvergenceReport:
    if not seq:
        raise ValueError("sequence must be non-empty")
    if not 1 <= window <= len(seq):
        raise ValueError(f"window must lie in 1..{len(seq)}")
    eps = to_fraction(epsilon) if not isinstance(epsilon, float) else Fraction(str(epsilon))
    start = len(seq) - window
    report = ConvergenceReport(eps, window, sequence_id=sequence_id, formula_set_id=formula_set_id)
    for f, p in formulas:
        p = min_arity(f) if p is None else p
        values = pairing_trace(seq, f, p, cap)
        osc = tail_oscillations(values)
        sentence = not free_variables(f)
        tail = values[start:]
        report.entries.append(
            FormulaTrace(
                formula=to_text(f),
                arity=p,
                values=values,
                oscillations=osc,
                window_stable=osc[start] <= eps,
                is_sentence=sentence,
                eventually_constant=(len(set(tail)) == 1) if sentence else None,
            )
        )
    return report


# ---------------------------------------------------------------------------
# Local (ball-type) statistics


@dataclass(frozen=True)
class NeighborhoodDistribution:
    radius: int
    masses: dict[str, Fraction]
    structure_id: str | None = None


def ball_type(A: Structure, v: int, r: int, leaf_cap: int = DEFAULT_LEAF_CAP) -> str:
    """Certificate of the substructure induced on the r-ball around ``v``, rooted at ``v``."""
    sub, old = induced_substructure(A, ball(A, v, r))
    return certificate(sub, root=old.index(v), leaf_cap=leaf_cap)


def ball_type_distribution(
    A: Structure, r: int, leaf_cap: int = DEFAULT_LEAF_CAP, structure_id: str | None = None
) -> NeighborhoodDistribution:
    masses: dict[str, Fraction] = {}
    for v in range(A.n):
        key = ball_type(A, v, r, leaf_cap)
        masses[key] = masses.get(key, Fraction(0)) + A.weight(v)
    return NeighborhoodDistribution(r, dict(sorted(masses.items())), structure_id)


def local_distance(A: Structure, B: Structure, r: int, leaf_cap: int = DEFAULT_LEAF_CAP) -> Fraction:
    """Total-variation distance between the r-ball type distributions."""
    da = ball_type_distribution(A, r, leaf_cap).masses
    db = ball_type_distribution(B, r, leaf_cap).masses
    zero = Fraction(0)
    return sum((abs(da.get(k, zero) - db.get(k, zero)) for k in set(da) | set(db)), zero) / 2


def ball_sup_measure(A: Structure, d: int) -> tuple[Fraction, int]:
    best, arg = Fraction(-1), 0
    for v in range(A.n):
        m = ball_measure(A, v, d)
        if m > best:
            best, arg = m, v
    return best, arg


def dispersion_report(seq: Sequence[Structure], d_max: int) -> list[list[Fraction]]:
    """Rows ``d = 0..d_max``, columns follow the sequence: largest d-ball mass."""
    return [[ball_sup_measure(A, d)[0] for A in seq] for d in range(d_max + 1)]


def comb_decompose(A: Structure) -> list[tuple[Structure, Fraction]]:
    """Connected components with their masses, heaviest first.

    Components of a weighted structure carry the conditional weights;
    components of an unweighted one stay unweighted.
    """
    parts = []
    for comp in connected_components(A):
        sub, _ = induced_substructure(A, comp, keep_weights=A.is_weighted)
        parts.append((sub, A.measure(comp), comp[0]))
    parts.sort(key=lambda t: (-t[1], t[2]))
    return [(sub, mass) for sub, mass, _ in parts]


# ---------------------------------------------------------------------------
# Mass transport


@dataclass(frozen=True)
class FMTPVerdict:
    premise_at_least: bool
    premise_at_most: bool
    inequality: bool
    lhs: Fraction
    rhs: Fraction

    @property
    def premises_hold(self) -> bool:
        return self.premise_at_least and self.premise_at_most

    @property
    def vacuous(self) -> bool:
        return not self.premises_hold

    @property
    def verdict(self) -> bool:
        return (not self.premises_hold) or self.inequality


def _unary_set(A: Structure, f: Formula, label: str) -> set[int]:
    if free_variables(f) != {1}:
        raise EvaluationError(f"{label} must have exactly the free variable x1")
    ev = Compiled(A, f, 1)
    return {v for v in range(A.n) if ev((v,))}


def _transport(A: Structure, X: set[int], Y: set[int], a: int, b: int) -> FMTPVerdict:
    adj = A.adjacency
    p1 = all(len(adj[v] & Y) >= a for v in X)
    p2 = all(len(adj[v] & X) <= b for v in Y)
    lhs = a * A.measure(X)
    rhs = b * A.measure(Y)
    return FMTPVerdict(p1, p2, lhs <= rhs, lhs, rhs)


def check_fmtp(A: Structure, phi: Formula, psi: Formula, a: int, b: int) -> FMTPVerdict:
    """Check the mass-transport premises semantically in ``A`` and the inequality a<phi> <= b<psi>."""
    return _transport(A, _unary_set(A, phi, "phi"), _unary_set(A, psi, "psi"), a, b)


def check_strong_fmtp(A: Structure, X: Iterable[int], Y: Iterable[int], a: int, b: int) -> FMTPVerdict:
    X, Y = set(X), set(Y)
    for v in X | Y:
        if not isinstance(v, int) or not 0 <= v < A.n:
            raise StructureError(f"vertex {v!r} out of range (n={A.n})")
    return _transport(A, X, Y, a, b)


# ---------------------------------------------------------------------------
# Convex combinations and homogeneity


def convex_combine(parts: Sequence[tuple[Structure, object]]) -> Structure:
    """Disjoint union whose vertex weights are ``alpha_i`` times the part's weights."""
    if not parts:
        raise StructureError("convex combination of no parts")
    alphas = [to_fraction(a) for _, a in parts]
    if any(a <= 0 for a in alphas):
        raise StructureError("convex-combination weights must be positive")
    if sum(alphas) != 1:
        raise StructureError(f"convex-combination weights sum to {sum(alphas)}, not 1")
    sig = parts[0][0].signature
    if any(H.signature != sig for H, _ in parts):
        raise StructureError("convex combination needs identical signatures")
    if sig.constants:
        raise StructureError("convex combination is undefined for signatures with constants")
    if any(ar > 1 for _, ar in sig.functions):
        raise StructureError("convex combination supports unary function symbols only")
    n = 0
    relations: dict[str, list] = {name: [] for name, _ in sig.relations}
    functions: dict[str, list] = {name: [] for name, _ in sig.functions}
    weights: list[Fraction] = []
    for (H, _), alpha in zip(parts, alphas):
        for name in relations:
            relations[name].extend(tuple(v + n for v in t) for t in H.relations[name])
        for name in functions:
            functions[name].extend(v + n for v in H.functions[name])
        weights.extend(alpha * H.weight(v) for v in range(H.n))
        n += H.n
    return Structure(sig, n, relations, functions, weights=weights)


def homogeneity_test(A: Structure, formulas: Sequence[Formula]) -> tuple[bool, tuple[str, int, int] | None]:
    """Whether each unary formula holds everywhere or nowhere; else a witness (formula, u, v)."""
    for f in formulas:
        sat = _unary_set(A, f, "formula")
        if sat and len(sat) < A.n:
            u = min(sat)
            v = min(set(range(A.n)) - sat)
            return False, (to_text(f), u, v)
    return True, None
