import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from folim.errors import FormulaSyntaxError, SignatureError
from folim.logic import (
    And,
    Not,
    Quant,
    Rel,
    Var,
    basic_local_sentence,
    bsr_model_bound,
    classify_fragment,
    expand_distance_atoms,
    free_variables,
    gaifman_bounds,
    min_arity,
    nnf,
    normal_form,
    parse_formula,
    permute_variables,
    quantifier_rank,
    read_formula_file,
    substitute,
    to_text,
    x,
)
from folim.structures import GRAPH_SIGNATURE

from _support import COLORED, atlas, oracle_holds, random_colored, random_formula_text


def agree_everywhere(structures, f, g, p):
    for A in structures:
        for t in itertools.product(range(A.n), repeat=p):
            env = {f"x{i + 1}": v for i, v in enumerate(t)}
            if oracle_holds(A, f, env) != oracle_holds(A, g, env):
                return False
    return True


# -- parsing ---------------------------------------------------------------------


def test_precedence():
    f = parse_formula("!x1~x2 & x2~x3 | x1=x3 -> x1=x1 <-> x2=x2")
    assert to_text(f) == "!(x1 ~ x2) & x2 ~ x3 | x1 = x3 -> x1 = x1 <-> x2 = x2"
    assert parse_formula("x1=x1 -> x2=x2 -> x3=x3") == parse_formula("x1=x1 -> (x2=x2 -> x3=x3)")


def test_quantifier_binds_tightly():
    f = parse_formula("exists y x1~y & x1=x1")
    assert isinstance(f, And) and isinstance(f.left, Quant)


def test_bound_variables_are_normalized():
    assert parse_formula("exists u (x1 ~ u)") == parse_formula("exists w (x1 ~ w)")
    f = parse_formula("exists>=2 z (x1~z & !z=x2)")
    assert to_text(f) == "exists>=2 y1 (x1 ~ y1 & !(y1 = x2))"
    assert f.kind == "atleast" and f.count == 2


def test_dist_sugar():
    f = parse_formula("dist(x1,x2) > 3")
    assert isinstance(f, Not)
    assert to_text(f) == "!(dist(x1, x2) <= 3)"


@pytest.mark.parametrize(
    "text, pos",
    [("x1 ~", 4), ("x1 ~ x2)", 7), ("exists (x1~x2)", 7), ("x1 $ x2", 3), ("exists>= y x1~y", 9), ("y3 ~ x1", 0)],
)
def test_syntax_errors_report_positions(text, pos):
    with pytest.raises(FormulaSyntaxError) as info:
        parse_formula(text)
    assert info.value.position == pos


def test_signature_checks():
    parse_formula("Black(x1) & x1 ~ x2", COLORED)
    with pytest.raises(SignatureError):
        parse_formula("Red(x1)", COLORED)
    with pytest.raises(SignatureError):
        parse_formula("Black(x1, x2)", COLORED)
    with pytest.raises(SignatureError):
        parse_formula("f(x1) = x1", GRAPH_SIGNATURE)


def test_formula_file():
    entries = read_formula_file("# comment\nx1~x2 @3\n\nexists y x1~y  # trailing\n")
    assert [(to_text(f), p) for f, p in entries] == [("x1 ~ x2", 3), ("exists y1 (x1 ~ y1)", None)]
    with pytest.raises(FormulaSyntaxError):
        read_formula_file("x1~x2\nx1 ~\n")


def test_round_trip_random_formulas():
    rng = random.Random(0)
    for _ in range(250):
        free = [f"x{i}" for i in range(1, rng.randint(1, 3) + 1)]
        text = random_formula_text(rng, free, rng.randint(0, 3), size=rng.randint(1, 9), unary=("Black", "White"))
        f = parse_formula(text)
        assert parse_formula(to_text(f)) == f, text


# -- syntactic analyses -----------------------------------------------------------


def test_free_variables_and_rank():
    f = parse_formula("forall a exists b a~b -> x1=x3")
    assert free_variables(f) == {1, 3}
    assert min_arity(f) == 3
    assert quantifier_rank(f) == 2
    assert min_arity(parse_formula("true")) == 0


def test_substitute_avoids_capture():
    f = parse_formula("exists y (x1 ~ y)")
    g = substitute(f, {"x1": Var("y1")})
    assert "y1" in {t.name for t in g.body.args}
    assert g.body.args[0] != g.body.args[1]


def test_permute_variables():
    f = parse_formula("x1~x2 & x3=x3")
    assert to_text(permute_variables(f, {1: 2, 2: 3, 3: 1})) == "x2 ~ x3 & x1 = x1"
    with pytest.raises(ValueError):
        permute_variables(f, {1: 2, 2: 2, 3: 1})


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False))
def test_normal_forms_are_equivalent(rnd):
    text = random_formula_text(rnd, ["x1", "x2"], 2, size=rnd.randint(1, 7))
    f = parse_formula(text)
    structures = [random_colored(rnd, n) for n in (1, 2, 3)]
    assert agree_everywhere(structures, f, nnf(f), 2)
    assert agree_everywhere(structures, f, normal_form(f), 2)


def test_nnf_pushes_negation_to_atoms():
    g = nnf(parse_formula("!(forall y (x1~y -> exists>=2 z y~z))"))
    assert to_text(g) == "exists y1 (x1 ~ y1 & exists<=1 y2 (y1 ~ y2))"


def test_classify_fragment():
    info = classify_fragment(parse_formula("exists y (dist(x1,y)<=2 & forall z (dist(y,z)<=1 -> y~z))"))
    assert not info.is_sentence and info.min_p == 1
    assert info.locality_radius == 3
    assert info.uses_dist_guards and not info.uses_counting
    assert classify_fragment(parse_formula("exists y x1~y")).locality_radius is None
    assert classify_fragment(parse_formula("x1~x2")).locality_radius == 0
    assert classify_fragment(parse_formula("exists>=2 y (dist(x1,y)<=1 & x1~y)")).uses_counting


# -- locality bounds --------------------------------------------------------------


@pytest.mark.parametrize("q", [1, 2, 3, 4])
@pytest.mark.parametrize("n", [0, 1, 5])
def test_gaifman_bounds(q, n):
    r, t, m = gaifman_bounds(q, n)
    assert r == 7 ** (q - 1)
    assert t == (7 ** (q - 1) - 1) // 2
    assert m == n + q


def test_gaifman_bounds_rejects_rank_zero():
    with pytest.raises(ValueError):
        gaifman_bounds(0, 1)


def test_bsr_bound():
    assert bsr_model_bound(parse_formula("exists a exists b forall c (a~c | b~c)")) == 2
    assert bsr_model_bound(parse_formula("forall a forall b (a~b)")) == 1
    assert bsr_model_bound(parse_formula("forall a exists b a~b")) is None


def test_basic_local_sentence_shape():
    psi = parse_formula("exists y (dist(x1,y)<=1 & x1~y)")
    s = basic_local_sentence(psi, 1, 2)
    assert not free_variables(s)
    assert quantifier_rank(s) == 3
    with pytest.raises(ValueError):
        basic_local_sentence(parse_formula("x1~x2"), 1, 2)


def test_distance_expansion_matches_bfs():
    graphs = atlas(5)
    for k in (0, 1, 2, 3):
        f = parse_formula(f"dist(x1,x2) <= {k}")
        g = expand_distance_atoms(f)
        assert agree_everywhere(graphs, f, g, 2)
    f = parse_formula("exists y (dist(x1,y)<=2 & !x1~y & !(x1=y))")
    assert agree_everywhere(graphs, f, expand_distance_atoms(f), 1)


def test_distance_expansion_needs_plain_graphs():
    with pytest.raises(SignatureError):
        expand_distance_atoms(parse_formula("dist(x1,x2)<=1 & Black(x1)"))


def test_x_helper():
    assert to_text(Rel("E", (x(1), x(2)))) == "x1 ~ x2"
