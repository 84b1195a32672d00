import numpy as np
import pytest
from hypothesis import given, strategies as st

from sectorial.absorption import (
    AbsorptionProblem,
    MismatchWithFormB,
    MissingBoundConstants,
    NotClosableError,
    absorbed_subspace,
    absorption_graphs,
    example_4_3_scenario,
    from_forms,
    from_operators,
    limit_graph_absorption,
    neumann_dirichlet_scenario,
    projection_thm_4_1,
    projection_thm_4_2,
    projector_from_form_b,
    verify_absorption,
)
from sectorial.association import graph_of_closed_form
from sectorial.forms import SesqForm
from sectorial.generators import complex_normal, random_bounded_absorption, random_unit, rng_for
from sectorial.hilbert import HSpace, null_space
from sectorial.relations import domain, from_operator, multivalued_part, resolvent, same_relation
from sectorial.semigroups import trotter_product
from sectorial.series import ConstantTail, FormSequence, limit_form

seeds = st.integers(0, 2 ** 32 - 1)


def test_absorption_graph_examples(rng):
    d = 3
    M = complex_normal(rng, d, d)
    M = M @ M.conj().T
    p = from_operators(M, np.zeros((d, d)))
    for n in (1, 2, 7):
        assert same_relation(absorption_graphs(p, n), from_operator(M))
    q = from_operators(np.zeros((d, d)), np.eye(d))
    for n in (1, 2, 5):
        assert same_relation(absorption_graphs(q, n), from_operator((n - 1) * np.eye(d)))
    ex = example_4_3_scenario(3)
    assert same_relation(absorption_graphs(ex.problem, 1), from_operator(np.zeros((3, 3))))
    with pytest.raises(ValueError):
        absorption_graphs(p, 0)


def test_limit_examples(rng):
    d = 3
    M = complex_normal(rng, d, d)
    M = M @ M.conj().T + np.eye(d)
    p = from_operators(M, np.eye(d))
    A_inf = limit_graph_absorption(p)
    assert domain(A_inf).dim == 0 and multivalued_part(A_inf).dim == d
    assert np.allclose(resolvent(A_inf, -1.0), 0.0)
    z = from_operators(M, np.zeros((d, d)))
    assert same_relation(limit_graph_absorption(z), from_operator(M))


def test_limit_needs_bound_constants():
    a = SesqForm(HSpace(2).full(), np.eye(2))
    p = from_forms(a, a, with_constants=False)
    with pytest.raises(MissingBoundConstants):
        limit_graph_absorption(p)
    assert p.with_bound_constants().bound_constants


def test_b_must_have_vertex_zero():
    a = from_operators(np.eye(2), np.zeros((2, 2)), with_constants=False)
    with pytest.raises(ValueError):
        AbsorptionProblem(a.a, -np.eye(2))


def test_non_injective_j_has_no_projection():
    ex = example_4_3_scenario(3)
    with pytest.raises(NotClosableError):
        projection_thm_4_1(ex.problem)
    assert ex.P0 @ ex.P0 == pytest.approx(ex.P0)
    assert absorbed_subspace(ex.problem).shape[1] == 1


def test_kernel_of_j_on_absorbed_subspace():
    ex = example_4_3_scenario(4, random_unit(rng_for(2), 4))
    p = ex.problem
    Z = absorbed_subspace(p)
    left = null_space(p.a.J @ Z, 1e-10, scale=1.0)
    kerJ = null_space(p.a.J, 1e-10, scale=1.0)
    # ker j ∩ Z_∞ via stacked complementary projectors in V coordinates
    both = np.vstack([np.eye(p.a.m) - kerJ @ kerJ.conj().T, np.eye(p.a.m) - Z @ Z.conj().T])
    right = null_space(both, 1e-10, scale=1.0)
    assert left.shape[1] == right.shape[1] == 0


def test_projection_from_operator_examples(rng):
    d = 4
    assert np.allclose(projection_thm_4_2(np.zeros((d, d))), np.eye(d))
    assert np.allclose(projection_thm_4_2(np.eye(d)), 0.0)
    phi = random_unit(rng, d)
    P = projection_thm_4_2(0.5 * np.outer(phi, phi.conj()))
    assert np.allclose(P, np.eye(d) - np.outer(phi, phi.conj()))
    p = from_operators(np.eye(d), np.eye(d))
    with pytest.raises(MismatchWithFormB):
        projection_thm_4_2(2 * np.eye(d), p)


@pytest.mark.parametrize("weighted", [False, True])
def test_boundary_penalty_projects_onto_interior(weighted):
    d = 7
    h = np.linspace(0.5, 1.5, d) if weighted else None
    nd = neumann_dirichlet_scenario(d, h)
    assert np.allclose(projection_thm_4_1(nd.problem), nd.interior_projector, atol=1e-10)
    assert np.allclose(projector_from_form_b(nd.problem), nd.interior_projector, atol=1e-10)


@given(seeds, st.booleans())
def test_both_projection_routes_agree(seed, weighted):
    rng = rng_for(seed)
    d = int(rng.integers(2, 6))
    p, B = random_bounded_absorption(rng, d, weighted=weighted)
    P1 = projection_thm_4_1(p)
    assert np.allclose(P1, projection_thm_4_2(B, p, p.H), atol=1e-8)
    assert np.allclose(P1, projector_from_form_b(p), atol=1e-8)


@given(seeds, st.booleans())
def test_absorption_limit_matches_series_limit(seed, weighted):
    rng = rng_for(seed)
    d = int(rng.integers(2, 6))
    p, B = random_bounded_absorption(rng, d, weighted=weighted)
    full = p.H.full()
    W = full.basis
    # recover the coordinate forms of a and b on the full domain
    a = SesqForm(full, W.conj().T @ p.H.G @ _operator_of(p.a) @ W)
    b = SesqForm(full, W.conj().T @ p.H.G @ B @ W)
    seq = FormSequence((a, b), ConstantTail())
    assert same_relation(limit_graph_absorption(from_forms(a, b)), graph_of_closed_form(limit_form(seq)), 1e-7)


def _operator_of(rf):
    Ji = np.linalg.inv(rf.J)
    return np.linalg.solve(rf.H.G, Ji.conj().T @ rf.Atil @ Ji)


@given(seeds)
def test_symmetric_resolvents_decrease(seed):
    rng = rng_for(seed)
    d = int(rng.integers(2, 6))
    X = complex_normal(rng, d, d)
    Y = complex_normal(rng, d, d - 1)
    p = from_operators(X @ X.conj().T, Y @ Y.conj().T)
    f = complex_normal(rng, d)
    vals = [np.vdot(f, resolvent(absorption_graphs(p, n), -1.0) @ f).real for n in (1, 2, 4, 8, 64)]
    assert all(b <= a + 1e-10 for a, b in zip(vals, vals[1:]))


def test_zero_b_product_formula_is_exact(rng):
    d = 4
    M = complex_normal(rng, d, d)
    p = from_operators(M @ M.conj().T + 0.5j * np.diag(np.arange(d)), np.zeros((d, d)))
    P = projection_thm_4_1(p)
    assert np.allclose(P, np.eye(d))
    rep = verify_absorption(p, P, 1.0, [1, 2, 4, 8])
    assert max(rep.resolvent.errors) <= 1e-12
    assert max(rep.product.errors) <= 1e-10


def test_example_projectionless_limit():
    ex = example_4_3_scenario(3)
    claims = ex.claims()
    for key in ("A_is_zero", "Z_inf_is_span_phi_1", "domain_is_span_phi", "multivalued_is_phi_perp",
                "pair_phi_phi", "semigroup"):
        assert claims[key] <= 1e-12, key
    assert claims["no_projection_gap"] > 1e-5
    A = ex.A()
    for P in (ex.P1, np.eye(3)):
        # the zero generator makes every product equal P itself
        assert np.allclose(trotter_product(A, P, 1.0, 16), P)


def test_bounded_absorption_reaches_tolerance_on_long_schedule():
    rng = rng_for(0)
    schedule = [2 ** k for k in range(0, 25, 4)]
    for _ in range(3):
        p, _ = random_bounded_absorption(rng, 4)
        rep = verify_absorption(p, projection_thm_4_1(p), 1.0, schedule)
        er, ep = rep.final_errors
        assert er <= 1e-6 and ep <= 1e-6
        assert rep.resolvent.fitted_rate < -0.8
