import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from folim.errors import CapExceeded, EvaluationError, SignatureError
from folim.evaluation import (
    default_cap,
    estimate_stone_pairing,
    eval_gaifman_sentence,
    hoeffding_half_width,
    models,
    pairing,
    profile,
    satisfying_set,
    stone_pairing,
)
from folim.logic import And, Not, Or, min_arity, parse_formula
from folim.structures import Structure, generate, graph

from _support import COLORED, oracle_pairing, random_colored, random_formula_text, random_weights

K3 = generate("clique", n=3)
P = parse_formula


# -- spec examples -----------------------------------------------------------


def test_models_examples():
    assert models(K3, P("x1~x2"), {1: 0, 2: 1})
    assert not models(K3, P("exists>=3 y (y~x1)"), {1: 0})
    assert models(K3, P("exists>=2 y (y~x1)"), [0])
    assert models(generate("path", n=4), P("x1=x1"), [3])


def test_models_errors():
    with pytest.raises(EvaluationError):
        models(K3, P("x1~x2"), [0])
    with pytest.raises(EvaluationError):
        models(K3, P("x1~x2"), [0, 3])
    with pytest.raises(SignatureError):
        models(K3, P("Black(x1)"), [0])


def test_satisfying_set_examples():
    edge = graph(2, [(0, 1)])
    assert satisfying_set(edge, P("x1~x2"), 2) == [(0, 1), (1, 0)]
    assert satisfying_set(K3, P("!(x1=x1)"), 1) == []
    triples = satisfying_set(K3, P("x1~x2"), 3)
    assert len(triples) == 18 and triples == sorted(triples)
    with pytest.raises(EvaluationError):
        satisfying_set(K3, P("x1~x3"), 2)


def test_pairing_examples():
    assert pairing(K3, P("x1~x2"), 2) == Fraction(2, 3)
    assert pairing(generate("path", n=3), P("x1~x2"), 2) == Fraction(4, 9)
    assert pairing(generate("cycle", n=5), P("x1=x1"), 1) == 1
    W = Structure(COLORED, 3, {"E": [], "Black": [(0,)], "White": []}, weights=[Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)])
    assert pairing(W, P("Black(x1)"), 1) == Fraction(1, 2)


def test_profile():
    assert profile(K3, [(P("x1~x2"), 2), (P("x1=x1"), 1)]) == [Fraction(2, 3), 1]
    assert profile(K3, []) == []
    assert profile(generate("clique", n=2), [(P("x1~x2"), 2)]) == [Fraction(1, 2)]
    with pytest.raises(EvaluationError, match="entry 1"):
        profile(K3, [(P("x1~x2"), 2), (P("x1~x2"), 1)])


def test_cap(monkeypatch):
    with pytest.raises(CapExceeded):
        stone_pairing(generate("path", n=10), P("x1~x2"), 3, cap=999)
    monkeypatch.setenv("FOLIM_CAP_TUPLES", "50")
    assert default_cap() == 50
    with pytest.raises(CapExceeded):
        satisfying_set(generate("path", n=10), P("x1~x2"), 2)


# -- agreement with the recursive oracle ------------------------------------------


@settings(max_examples=120, deadline=None)
@given(st.randoms(use_true_random=False), st.booleans())
def test_pairing_matches_oracle(rnd, weighted):
    n = rnd.randint(1, 5)
    A = random_colored(rnd, n)
    if weighted:
        A = A.with_weights(random_weights(rnd, n))
    p = rnd.randint(0, 3)
    f = P(random_formula_text(rnd, [f"x{i}" for i in range(1, p + 1)] or ["x1"], 2, rnd.randint(1, 7), ("Black", "White")))
    p = max(p, min_arity(f))
    assert stone_pairing(A, f, p).value == oracle_pairing(A, f, p)


def test_dist_atoms_match_oracle():
    rng = random.Random(8)
    f = P("exists y (dist(x1,y) <= 2 & !(dist(x1,y) <= 1) & Black(y))")
    for _ in range(40):
        A = random_colored(rng, rng.randint(1, 7), p=0.3)
        assert stone_pairing(A, f, 1).value == oracle_pairing(A, f, 1)


# -- valuation properties -----------------------------------------------------


@settings(max_examples=80, deadline=None)
@given(st.randoms(use_true_random=False))
def test_valuation_and_complement(rnd):
    A = random_colored(rnd, rnd.randint(1, 5))
    free = ["x1", "x2"]
    phi = P(random_formula_text(rnd, free, 2, rnd.randint(1, 6), ("Black",)))
    psi = P(random_formula_text(rnd, free, 2, rnd.randint(1, 6), ("White",)))
    v = lambda f: pairing(A, f, 2)  # noqa: E731
    assert v(Or(phi, psi)) + v(And(phi, psi)) == v(phi) + v(psi)
    assert v(Not(phi)) == 1 - v(phi)


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False), st.integers(0, 2))
def test_padding(rnd, extra):
    n = rnd.randint(1, 4)
    A = random_colored(rnd, n).with_weights(random_weights(rnd, n))
    f = P(random_formula_text(rnd, ["x1", "x2"], 1, rnd.randint(1, 6)))
    assert pairing(A, f, 2) == pairing(A, f, 2 + extra)


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False))
def test_sentences_are_zero_one(rnd):
    A = random_colored(rnd, rnd.randint(1, 5))
    f = P(random_sentence(rnd))
    assert pairing(A, f, 0) in (0, 1)
    assert pairing(A, f, 2) in (0, 1)


def random_sentence(rnd) -> str:
    body = random_formula_text(rnd, ["u"], 1, rnd.randint(1, 5), ("Black",))
    return f"{rnd.choice(['exists', 'forall', 'exists>=2'])} u ({body})"


# -- sampling -----------------------------------------------------------------


def test_estimate_is_reproducible():
    a = estimate_stone_pairing(K3, P("x1~x2"), 2, 10_000, seed=1)
    b = estimate_stone_pairing(K3, P("x1~x2"), 2, 10_000, seed=1)
    assert a == b
    assert abs(a.point - 2 / 3) <= a.half_width
    assert a.half_width == pytest.approx(hoeffding_half_width(10_000, 0.99))
    assert a.prng and a.seed == 1 and a.value is None


def test_estimate_trivial_cases():
    for seed in range(3):
        assert estimate_stone_pairing(K3, P("x1=x1"), 1, 50, seed).point == 1
        assert estimate_stone_pairing(K3, P("x1~x1"), 1, 50, seed).point == 0


def test_weighted_sampling_follows_measure():
    W = Structure(COLORED, 3, {"E": [], "Black": [(0,)], "White": []}, weights=[Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)])
    est = estimate_stone_pairing(W, P("Black(x1)"), 1, 20_000, seed=5)
    assert abs(est.point - 0.5) <= est.half_width


def test_estimate_rejects_bad_parameters():
    with pytest.raises(ValueError):
        estimate_stone_pairing(K3, P("x1~x2"), 2, 0)
    with pytest.raises(ValueError):
        estimate_stone_pairing(K3, P("x1~x2"), 2, 10, confidence=1.0)


# -- Gaifman sentences --------------------------------------------------------


def test_gaifman_sentence_examples():
    assert eval_gaifman_sentence(generate("cycle", n=10), P("x1=x1"), 1, 3)
    assert not eval_gaifman_sentence(generate("clique", n=4), P("x1=x1"), 1, 2)
    star = generate("star", leaves=3)
    center = P("exists>=2 y x1~y")
    assert eval_gaifman_sentence(star, center, 3, 1)
    assert not eval_gaifman_sentence(star, P("exists>=4 y x1~y"), 0, 1)
    with pytest.raises(EvaluationError):
        eval_gaifman_sentence(star, P("x1~x2"), 1, 1)
