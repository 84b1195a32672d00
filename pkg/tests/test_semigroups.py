import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sectorial.generators import complex_normal, random_m_sectorial, random_unit, rng_for
from sectorial.hilbert import HSpace, op_norm, ortho_complement, orthonormalize, projector
from sectorial.relations import (
    domain,
    from_operator,
    is_m_sectorial,
    multivalued_relation,
    shift,
    single_valued_part,
)
from sectorial.semigroups import (
    ConvergenceReport,
    NotMSectorialError,
    ProjectorViolation,
    check_projector,
    fit_rate,
    probe_vectors,
    product_formula_report,
    resolvent_power_approx,
    semigroup,
    strong_error,
    trotter_product,
)

seeds = st.integers(0, 2 ** 32 - 1)
times = st.floats(0.05, 3.0)


def accretive(seed, weighted=False, d=None):
    rng = rng_for(seed)
    A = random_m_sectorial(rng, d or int(rng.integers(1, 7)), weighted)
    return shift(A, max(0.0, -is_m_sectorial(A).vertex))


def test_semigroup_examples():
    t = 0.7
    assert np.allclose(semigroup(from_operator(np.eye(3)), t), math.exp(-t) * np.eye(3))
    assert np.allclose(semigroup(multivalued_relation(HSpace(3)), t), 0)
    with pytest.raises(ValueError):
        semigroup(from_operator(np.eye(2)), 0.0)


def test_semigroup_rejects_non_m_sectorial_when_checked():
    from sectorial.relations import from_pairs

    A = from_pairs(HSpace(2), np.array([[1.0], [0.0]]), np.array([[1.0], [0.0]]))
    with pytest.raises(NotMSectorialError):
        semigroup(A, 1.0, check=True)


def test_semigroup_of_limit_in_the_example(rng):
    from sectorial.absorption import example_4_3_scenario

    phi = random_unit(rng, 4)
    ex = example_4_3_scenario(4, phi)
    for t in (0.1, 1.0, 10.0):
        assert np.abs(semigroup(ex.A_inf(), t) - math.exp(-t) * ex.P1).max() <= 1e-12


def test_resolvent_power_examples():
    for n in (1, 5, 100):
        assert np.allclose(resolvent_power_approx(from_operator(np.zeros((2, 2))), 1.0, n), np.eye(2))
    assert resolvent_power_approx(from_operator(np.array([[1.0]])), 1.0, 1)[0, 0] == pytest.approx(0.5)


def test_trotter_examples(rng):
    A = random_m_sectorial(rng, 4)
    I = np.eye(4)
    for n in (1, 3, 16):
        assert np.abs(trotter_product(A, I, 1.3, n) - semigroup(A, 1.3)).max() <= 1e-10
    P = projector(orthonormalize(complex_normal(rng, 4, 2), HSpace(4)))
    Z = from_operator(np.zeros((4, 4)))
    for n in (1, 7):
        assert np.allclose(trotter_product(Z, P, 2.0, n), P)


def test_projector_violation():
    A = from_operator(np.eye(2))
    with pytest.raises(ProjectorViolation):
        trotter_product(A, np.array([[1.0, 1.0], [0.0, 0.0]]), 1.0, 2)
    with pytest.raises(ProjectorViolation):
        check_projector(2 * np.eye(2), HSpace(2))


@given(seeds, st.booleans(), times, times)
def test_semigroup_law(seed, weighted, s, t):
    A = random_m_sectorial(rng_for(seed), 4, weighted)
    E = semigroup(A, s + t)
    assert np.abs(semigroup(A, s) @ semigroup(A, t) - E).max() <= 1e-8 * max(1, np.abs(E).max())


@given(seeds, st.booleans())
def test_resolvent_powers_converge_to_semigroup(seed, weighted):
    A = accretive(seed, weighted)
    Ao = single_valued_part(A)[0]
    E = semigroup(A, 1.0)
    errs = [op_norm(resolvent_power_approx(A, 1.0, 2 ** k) - E, A.space) for k in (4, 6, 8, 10, 12)]
    assert all(b <= 1.1 * a + 1e-14 for a, b in zip(errs, errs[1:]))
    assert errs[-1] <= 1e-4 * (1 + op_norm(Ao) ** 2)


@given(seeds, st.booleans(), times)
def test_semigroup_range_and_kernel(seed, weighted, t):
    A = random_m_sectorial(rng_for(seed), 5, weighted)
    E = semigroup(A, t)
    D = domain(A)
    C = ortho_complement(D)
    assert np.abs(E @ C.basis).max(initial=0) <= 1e-12 * max(1, np.abs(E).max())
    P = projector(D)
    assert np.abs(P @ E - E).max(initial=0) <= 1e-10 * max(1, np.abs(E).max())


@given(seeds, st.booleans(), times)
def test_contractive_for_nonnegative_vertex(seed, weighted, t):
    A = accretive(seed, weighted)
    assert op_norm(semigroup(A, t), A.space) <= 1 + 1e-10


def test_probe_vectors_are_deterministic_unit_columns():
    P = probe_vectors(3, seed=7)
    assert P.shape == (3, 19)
    assert np.allclose(np.linalg.norm(P, axis=0), 1)
    assert np.array_equal(P, probe_vectors(3, seed=7))


def test_strong_error_uses_the_gram():
    H = HSpace(2, np.diag([4.0, 1.0]))
    assert strong_error(np.eye(2), np.zeros((2, 2)), np.eye(2), H) == pytest.approx(2.0)


def test_report_validation_and_rate():
    rep = ConvergenceReport.build([1, 2, 4, 8], [1.0, 0.5, 0.25, 0.125])
    assert rep.fitted_rate == pytest.approx(-1.0)
    assert rep.final_error == 0.125
    with pytest.raises(ValueError):
        ConvergenceReport.build([1, 1], [1.0, 1.0])
    with pytest.raises(ValueError):
        ConvergenceReport.build([1, 2], [1.0])
    assert math.isnan(fit_rate([1, 2], [0.0, 0.0]))


def test_product_formula_report_examples(rng):
    A = random_m_sectorial(rng, 3)
    rep = product_formula_report(A, np.eye(3), A, 1.0, [1, 2, 4])
    assert max(rep.errors) <= 1e-10
    from sectorial.absorption import example_4_3_scenario

    ex = example_4_3_scenario(3, random_unit(rng, 3))
    rep = product_formula_report(ex.A(), ex.P1, ex.A_inf(), 1.0, [2 ** k for k in range(11)])
    plateau = (1 - math.exp(-1.0)) * np.linalg.norm(ex.P1 @ probe_vectors(3), axis=0).max()
    assert min(rep.errors) == pytest.approx(plateau, rel=1e-10)
