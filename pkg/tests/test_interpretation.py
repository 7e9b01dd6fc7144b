import json
import random
from fractions import Fraction
from itertools import product

import pytest

from folim.errors import SchemeError, SignatureError
from folim.evaluation import pairing
from folim.interpretation import (
    BasicScheme,
    FullScheme,
    apply_basic,
    apply_full,
    apply_scheme,
    compose,
    full_domain,
    load_scheme,
    scheme_to_dict,
    transport_formula,
    verify_transport,
)
from folim.logic import min_arity, parse_formula
from folim.structures import GRAPH_SIGNATURE, Structure, generate

from _support import COLORED, five_schemes, oracle_holds, random_colored, random_weights, target_formulas

P = parse_formula


def oracle_apply(I, A):
    """Build I(A) from the definition with the recursive oracle."""
    n, k = A.n, I.k
    blocks = list(product(range(n), repeat=k))
    rels = {}
    for name, r in I.target.relations:
        rows = []
        for idxs in product(range(len(blocks)), repeat=r):
            flat = [a for i in idxs for a in blocks[i]]
            if oracle_holds(A, I.theta[name], {f"x{j + 1}": v for j, v in enumerate(flat)}):
                rows.append(idxs)
        rels[name] = rows
    return Structure(I.target, len(blocks), rels)


def graph_scheme(k, **theta):
    return BasicScheme(k, GRAPH_SIGNATURE, GRAPH_SIGNATURE, {n: P(t) for n, t in theta.items()})


def test_apply_matches_oracle():
    rng = random.Random(5)
    for I in five_schemes().values():
        for n in (1, 2, 3):
            A = random_colored(rng, n)
            assert apply_basic(I, A) == oracle_apply(I, A)


def test_complement_of_triangle_is_empty():
    comp = graph_scheme(1, E="!(x1~x2) & !(x1=x2)")
    B = apply_scheme(comp, generate("clique", n=3))
    assert B.n == 3 and not B.relations["E"]


def test_weights_multiply():
    sq = five_schemes()["square"]
    rng = random.Random(2)
    A = random_colored(rng, 3).with_weights([Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)])
    B = apply_basic(sq, A)
    assert B.weights[0 * 3 + 1] == Fraction(1, 6)
    assert sum(B.weights) == 1


def test_transport_of_five_schemes():
    rng = random.Random(9)
    structures = [random_colored(rng, n) for n in (2, 3, 4)]
    for name, I in five_schemes().items():
        for A in structures:
            for text in target_formulas(name):
                check = verify_transport(I, A, P(text, I.target))
                assert check.ok, (name, text, check.counterexample)


def test_pairing_identity_on_modelings():
    rng = random.Random(4)
    for name, I in five_schemes().items():
        A = random_colored(rng, 3)
        A = A.with_weights(random_weights(rng, 3))
        for text in target_formulas(name)[:4]:
            f = P(text, I.target)
            p = max(1, min_arity(f))
            assert pairing(apply_basic(I, A), f, p) == pairing(A, transport_formula(I, f), I.k * p)


def test_transport_rejects_distance_atoms_and_foreign_symbols():
    I = five_schemes()["identity"]
    with pytest.raises(SchemeError):
        transport_formula(I, P("dist(x1,x2) <= 1"))
    with pytest.raises(SignatureError):
        transport_formula(I, P("Red(x1)"))


def test_composition():
    schemes = five_schemes()
    rng = random.Random(1)
    A = random_colored(rng, 3)
    IJ = compose(schemes["complement"], schemes["square"])
    assert IJ.k == 2
    assert apply_basic(IJ, A) == apply_basic(schemes["square"], apply_basic(schemes["complement"], A))
    swap_twice = compose(schemes["color-swap"], schemes["color-swap"])
    assert apply_basic(swap_twice, A) == A


def test_scheme_validation():
    with pytest.raises(SchemeError):
        BasicScheme(0, GRAPH_SIGNATURE, GRAPH_SIGNATURE, {"E": P("x1~x2")})
    with pytest.raises(SchemeError):
        BasicScheme(1, GRAPH_SIGNATURE, GRAPH_SIGNATURE, {})
    with pytest.raises(SchemeError):
        BasicScheme(1, GRAPH_SIGNATURE, GRAPH_SIGNATURE, {"E": P("x1~x3")})
    with pytest.raises(SignatureError):
        apply_basic(graph_scheme(1, E="x1~x2"), random_colored(random.Random(0), 2))


def test_scheme_serialization():
    I = five_schemes()["subdivision"]
    J = load_scheme(json.dumps(scheme_to_dict(I)))
    assert J == I
    with pytest.raises(SchemeError):
        load_scheme("{")
    with pytest.raises(SchemeError):
        load_scheme(json.dumps({"k": 1}))


# -- full schemes ---------------------------------------------------------------------

UNORDERED_PAIRS = dict(
    E=P("(x1=x3 & x2=x4) | (x1=x4 & x2=x3)"),
    theta0=P("!(x1=x2)"),
)


def pairs_scheme(theta_e: str) -> FullScheme:
    return FullScheme(2, GRAPH_SIGNATURE, GRAPH_SIGNATURE, {"E": P(theta_e)}, **UNORDERED_PAIRS)


def test_full_scheme_builds_kneser_like_graph():
    # Unordered pairs of a 4-set, adjacent when they share exactly one element.
    I = pairs_scheme("(x1=x3 | x1=x4 | x2=x3 | x2=x4) & !((x1=x3 & x2=x4) | (x1=x4 & x2=x3))")
    A = generate("clique", n=4)
    B = apply_full(I, A)
    assert B.n == 6 and len(B.relations["E"]) == 6 * 4
    assert full_domain(I, A) == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    assert B.weights is None
    for text in ("x1 ~ x2", "exists>=2 y (x1 ~ y & y ~ x2)", "forall y (x1 = y | x1 ~ y | exists z (x1 ~ z & z ~ y))"):
        check = verify_transport(I, A, P(text))
        assert check.pointwise and check.pairing_identity is None


def test_full_scheme_rejects_non_equivalence():
    I = FullScheme(1, GRAPH_SIGNATURE, GRAPH_SIGNATURE, {"E": P("x1~x2")}, E=P("x1~x2 | x1=x2"), theta0=P("x1=x1"))
    with pytest.raises(SchemeError) as info:
        apply_full(I, generate("path", n=3))
    assert "transitive" in str(info.value) and info.value.counterexample


def test_full_scheme_rejects_incompatible_theta():
    I = pairs_scheme("x1 ~ x3")
    with pytest.raises(SchemeError, match="compatible"):
        apply_full(I, generate("path", n=3))


def test_full_scheme_with_empty_domain():
    I = FullScheme(1, COLORED, GRAPH_SIGNATURE, {"E": P("x1~x2")}, E=P("x1=x2"), theta0=P("Black(x1)"))
    with pytest.raises(SchemeError):
        apply_full(I, Structure(COLORED, 2, {"E": [], "Black": [], "White": []}))
