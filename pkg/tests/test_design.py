"""Quadrature, polynomial basis, index sets, and the factored row sampler.

Frozen values:
  2-point rule on [-1, 1] has nodes +/- 1/sqrt(3); normalized to
  total weight 1 each weight is 1/2.
  psi_2(0) = sqrt(5) P_2(0) = -sqrt(5)/2.
  Cardinalities: total degree (q=2, zeta=4) -> 15, (q=4, zeta=2) -> 15;
  hyperbolic cross (q=2, zeta=4) -> 10, (q=4, zeta=2) -> 9.
"""

import math
from functools import reduce
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bfboost.design import (
    IndexSet,
    StructuredDesign,
    assemble_data_vector,
    build_design,
    exact_row_distribution,
    gauss_legendre_rule,
    index_set,
    kron_leverage_sample,
    normalized_legendre,
    sample_rows_given_column,
)
from bfboost.errors import MemoryCapError
from bfboost.rng import make_rng

INV_SQRT3 = 1.0 / math.sqrt(3.0)


def test_two_point_rule_frozen():
    rule = gauss_legendre_rule(2)
    assert rule.nodes == pytest.approx([-INV_SQRT3, INV_SQRT3], abs=1e-15)
    assert rule.weights == pytest.approx([0.5, 0.5], abs=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 16, 40])
def test_rule_matches_reference_implementation(n):
    rule = gauss_legendre_rule(n)
    ref_nodes, ref_weights = np.polynomial.legendre.leggauss(n)
    assert rule.nodes == pytest.approx(ref_nodes, abs=1e-13)
    assert rule.weights == pytest.approx(ref_weights / 2.0, abs=1e-13)
    assert float(np.sum(rule.weights)) == pytest.approx(1.0, abs=1e-14)


def test_rule_integrates_polynomials_exactly():
    # n nodes are exact through degree 2n - 1; mean of x^4 on [-1, 1] is 1/5
    rule = gauss_legendre_rule(3)
    assert float(rule.weights @ rule.nodes ** 4) == pytest.approx(0.2, rel=1e-14)
    assert float(rule.weights @ rule.nodes ** 5) == pytest.approx(0.0, abs=1e-15)


def test_mapped_nodes_affine():
    rule = gauss_legendre_rule(2)
    mapped = rule.mapped_nodes(0.0, 2.0)
    assert mapped == pytest.approx(1.0 + np.array([-INV_SQRT3, INV_SQRT3]),
                                   abs=1e-15)


def test_normalized_legendre_frozen_value():
    assert normalized_legendre(2, 0.0) == pytest.approx(-math.sqrt(5.0) / 2.0,
                                                        rel=1e-15)
    assert normalized_legendre(0, 0.37) == pytest.approx(1.0, rel=1e-15)
    assert normalized_legendre(1, 0.5) == pytest.approx(math.sqrt(3.0) * 0.5,
                                                        rel=1e-15)


def test_normalized_legendre_orthonormal_under_rule():
    rule = gauss_legendre_rule(12)
    vals = np.column_stack([normalized_legendre(j, rule.nodes) for j in range(8)])
    gram = (vals * rule.weights[:, None]).T @ vals
    assert np.allclose(gram, np.eye(8), atol=1e-12)


def test_index_set_frozen_cardinalities():
    assert index_set(2, 4, "total_degree").d == 15
    assert index_set(2, 4, "hyperbolic_cross").d == 10
    assert index_set(4, 2, "total_degree").d == 15
    assert index_set(4, 2, "hyperbolic_cross").d == 9


def test_index_set_validation():
    with pytest.raises(ValueError):
        index_set(2, 2, "sparse_grid")
    with pytest.raises(ValueError):
        index_set(0, 2, "total_degree")


@settings(deadline=None, max_examples=40)
@given(q=st.integers(1, 4), zeta=st.integers(0, 6))
def test_total_degree_cardinality_formula(q, zeta):
    assert index_set(q, zeta, "total_degree").d == math.comb(q + zeta, zeta)


@settings(deadline=None, max_examples=40)
@given(q=st.integers(1, 4), zeta=st.integers(0, 6))
def test_hyperbolic_cross_subset_of_total_degree(q, zeta):
    hyper = set(index_set(q, zeta, "hyperbolic_cross").members)
    total = set(index_set(q, zeta, "total_degree").members)
    assert hyper <= total
    # the all-zero index and the pure powers are always present
    assert (0,) * q in hyper
    if zeta >= 1:
        assert tuple(zeta if k == 0 else 0 for k in range(q)) in hyper


def test_kron_columns_are_ascending_and_correct():
    iset = index_set(2, 2, "total_degree")
    cols = iset.kron_columns()
    base = 3
    expected = [m[0] * base + m[1] for m in iset.members]
    assert cols.tolist() == expected
    assert np.all(np.diff(cols) > 0)


@pytest.mark.parametrize("q,zeta,kind", [
    (2, 4, "total_degree"), (2, 4, "hyperbolic_cross"),
    (4, 2, "total_degree"), (4, 2, "hyperbolic_cross"),
])
def test_assembled_design_orthonormal(q, zeta, kind):
    design = build_design(q, zeta, kind, zeta + 2)
    a = design.assembled()
    assert a.shape == ((zeta + 2) ** q, design.n_cols)
    assert np.max(np.abs(a.T @ a - np.eye(design.n_cols))) < 1e-12


def test_assembled_matches_explicit_kron_subset():
    # ground truth: build the full product design column by column
    design = build_design(2, 2, "total_degree", 4)
    full = np.column_stack([
        reduce(np.kron, [design.factors[k][:, j[k]] for k in range(2)])
        for j in product(range(3), repeat=2)
    ])
    assert np.allclose(design.assembled(),
                       full[:, design.iset.kron_columns()], atol=1e-15)


def test_assembled_entry_by_hand():
    design = build_design(2, 1, "total_degree", 2)
    a = design.assembled()
    rules = design.rules
    pts = design.grid_points()
    # row 3 = node pair (1, 1); column for member (1, 0) is psi_1(x_0)
    member = design.iset.members.index((1, 0))
    expect = (math.sqrt(rules[0].weights[1] * rules[1].weights[1])
              * normalized_legendre(1, pts[3, 0]))
    assert a[3, member] == pytest.approx(expect, rel=1e-14)


def test_build_design_validates_node_counts():
    with pytest.raises(ValueError):
        build_design(2, 4, "total_degree", 4)  # needs zeta + 1 = 5
    with pytest.raises(ValueError):
        build_design(2, 2, "total_degree", [4, 4, 4])


def test_memory_cap_enforced():
    design = build_design(2, 2, "total_degree", 10, max_entries=100)
    with pytest.raises(MemoryCapError):
        design.assembled()
    # factored queries stay available
    assert design.n_rows == 100
    assert design.sqrt_weights().shape == (100,)


def test_sqrt_weights_square_to_one():
    design = build_design(3, 2, "total_degree", 4)
    w = design.sqrt_weights()
    assert float(np.sum(w ** 2)) == pytest.approx(1.0, rel=1e-13)


def test_assemble_data_vector_order_and_weighting():
    design = build_design(2, 1, "total_degree", 2)
    b = assemble_data_vector(design, lambda p: p[0] + 10.0 * p[1])
    pts = design.grid_points()
    expect = design.sqrt_weights() * (pts[:, 0] + 10.0 * pts[:, 1])
    assert np.allclose(b, expect, atol=1e-15)
    with pytest.raises(ValueError):
        assemble_data_vector(design, lambda p: math.inf)


def test_exact_row_distribution_is_leverage_over_d():
    design = build_design(2, 3, "total_degree", 5)
    p = exact_row_distribution(design)
    assert float(p.sum()) == pytest.approx(1.0, rel=1e-12)
    a = design.assembled()
    # A already has orthonormal columns, so scores are row norms squared
    assert np.allclose(p, np.sum(a * a, axis=1) / design.n_cols, atol=1e-12)


def test_sample_rows_given_column_marginal_law(rng):
    design = build_design(2, 2, "total_degree", 4)
    member = (2, 1)
    qs = design.factor_orths()
    draws = sample_rows_given_column(design, member, 4000, rng)
    for k in range(2):
        pk = qs[k][:, member[k]] ** 2
        pk = pk / pk.sum()
        freq = np.bincount(draws[:, k], minlength=pk.size) / draws.shape[0]
        assert 0.5 * np.sum(np.abs(freq - pk)) < 0.05


def test_kron_sampler_matches_exact_distribution():
    design = build_design(2, 4, "total_degree", 8)
    p = exact_row_distribution(design)
    # 64 cells: a perfect sampler lands TV ~ 0.02 at this size, noise ~ 0.005
    m = 20000
    s = kron_leverage_sample(design, m, seed=5)
    freq = np.bincount(s.indices, minlength=design.n_rows) / m
    assert 0.5 * np.sum(np.abs(freq - p)) < 0.05
    assert s.spec.kind == "leverage" and s.spec.m == m and s.spec.seed == 5


def test_kron_sampler_weights_match_assembled_oracle():
    design = build_design(2, 3, "hyperbolic_cross", 6)
    p = exact_row_distribution(design)
    s = kron_leverage_sample(design, 50, seed=9)
    assert np.allclose(s.weights, 1.0 / np.sqrt(50 * p[s.indices]), rtol=1e-10)


def test_kron_sampler_deterministic():
    design = build_design(3, 2, "total_degree", 4)
    s1 = kron_leverage_sample(design, 20, seed=3)
    s2 = kron_leverage_sample(design, 20, seed=3)
    assert np.array_equal(s1.indices, s2.indices)
    assert np.array_equal(s1.weights, s2.weights)


def test_kron_sampler_rejects_unordered_index_set():
    design = build_design(2, 2, "total_degree", 4)
    shuffled = IndexSet(q=2, zeta=2, kind="total_degree",
                        members=tuple(reversed(design.iset.members)))
    broken = StructuredDesign(factors=design.factors, rules=design.rules,
                              iset=shuffled)
    with pytest.raises(ValueError):
        kron_leverage_sample(broken, 10, seed=0)
