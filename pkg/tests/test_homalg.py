import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from folim.errors import FolimError, StructureError
from folim.evaluation import pairing
from folim.homalg import (
    K1,
    QuantumGraph,
    bareiss_rank,
    canonical_formula,
    degeneracy_order,
    hom_count,
    hom_density,
    hom_matrix_rank,
    qg_combine,
    qg_corpus_norm,
    qg_evaluate,
)
from folim.structures import GRAPH_SIGNATURE, Structure, disjoint_union, generate, graph

from _support import atlas, corpus12, oracle_hom, random_colored, random_graph

K2 = generate("clique", n=2)
K3 = generate("clique", n=3)
P3 = generate("path", n=3)


def test_hom_examples():
    assert hom_count(K2, K3) == 6
    assert hom_density(K2, K3) == Fraction(2, 3)
    assert hom_count(K3, generate("cycle", n=4)) == 0
    assert hom_count(K1, P3) == 3
    assert hom_count(P3, P3) == 6


def test_hom_matches_enumeration_oracle():
    patterns = atlas(4)
    rng = random.Random(1)
    targets = corpus12()[:8] + [random_graph(rng, 6, 0.4) for _ in range(4)]
    for F in patterns:
        for G in targets:
            assert hom_count(F, G) == oracle_hom(F, G)


def test_hom_handles_loops():
    looped = Structure(GRAPH_SIGNATURE, 2, {"E": [(0, 1), (1, 0), (0, 0)]})
    assert hom_count(K3, looped) == oracle_hom(K3, looped)


def test_hom_requires_graphs():
    with pytest.raises(StructureError):
        hom_count(random_colored(random.Random(0), 3), K3)


def test_degeneracy_order_is_a_permutation():
    for F in atlas(5):
        assert sorted(degeneracy_order(F)) == list(range(F.n))


def test_bridge_identity_on_small_graphs():
    for F in atlas(3):
        for G in atlas(4):
            assert pairing(G, canonical_formula(F), F.n) == hom_density(F, G)


# -- quantum graphs ------------------------------------------------------------


def test_quantum_graph_merges_isomorphic_terms():
    a = QuantumGraph.single(P3)
    b = QuantumGraph.single(graph(3, [(1, 0), (0, 2)]), "1/2")
    assert len((a + b).terms) == 1
    assert (a + b).terms[0][0] == Fraction(3, 2)
    assert (a - a).terms == ()


def test_quantum_graph_product_and_unit():
    q = QuantumGraph.of([(1, K2), (-2, K3)])
    one = QuantumGraph.single(K1)
    assert q * one == q
    sq = q * q
    for G in corpus12():
        assert qg_evaluate(sq, G) == qg_evaluate(q, G) ** 2
    assert qg_combine("multiply", q, q) == sq
    assert qg_combine("add", q, q) == q.scale(2)
    assert qg_combine("scale", "1/3", q) == q.scale(Fraction(1, 3))
    with pytest.raises(ValueError):
        qg_combine("divide", q)


def test_quantum_graph_rejects_isolated_vertices():
    with pytest.raises(StructureError):
        QuantumGraph.single(graph(3, [(0, 1)]))


def test_quantum_graph_serialization():
    q = QuantumGraph.of([("2/3", K2), (-1, P3)])
    assert QuantumGraph.from_dict(q.to_dict()) == q
    with pytest.raises(FolimError):
        QuantumGraph.from_dict({"terms": [{"graph": {}}]})


def test_corpus_norm():
    q = QuantumGraph.of([(1, K2), (-1, K3)])
    corpus = corpus12()
    value, arg = qg_corpus_norm(q, corpus)
    values = [abs(qg_evaluate(q, G)) for G in corpus]
    assert value == max(values) and arg == values.index(value)


# -- rank -----------------------------------------------------------------------


@settings(max_examples=80, deadline=None)
@given(
    st.integers(1, 5).flatmap(
        lambda cols: st.lists(
            st.lists(st.fractions(min_value=-3, max_value=3, max_denominator=4), min_size=cols, max_size=cols),
            min_size=1,
            max_size=5,
        )
    )
)
def test_bareiss_rank_matches_sympy(rows):
    assert bareiss_rank(rows) == sympy.Matrix([[sympy.Rational(v.numerator, v.denominator) for v in r] for r in rows]).rank()


def test_bareiss_rank_degenerate_rows():
    assert bareiss_rank([[0, 0], [0, 0]]) == 0
    assert bareiss_rank([[0, 1, 2], [0, 2, 4], [0, 0, 1]]) == 2


def test_hom_matrix_rank_detects_dependence():
    # K2 and the disjoint union of two edges are dependent on a single-row corpus.
    matrix, rank = hom_matrix_rank([K2, disjoint_union([K2, K2])], [K3])
    assert rank == 1
    assert matrix[1][0] == matrix[0][0] ** 2
