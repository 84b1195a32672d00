import numpy as np
import pytest
from hypothesis import given, strategies as st

from sectorial.forms import SectorParams
from sectorial.generators import complex_normal, random_m_sectorial, random_relation, rng_for
from sectorial.hilbert import HSpace, same_subspace
from sectorial.relations import (
    NotInResolventSet,
    domain,
    from_operator,
    from_pairs,
    invert,
    is_m_sectorial,
    is_single_valued,
    kernel,
    multivalued_part,
    multivalued_relation,
    reflect,
    relation_distance,
    resolvent,
    same_relation,
    shift,
    single_valued_part,
)

seeds = st.integers(0, 2 ** 32 - 1)


def test_from_operator_examples(rng):
    H = HSpace(3)
    Z = from_operator(np.zeros((3, 3)))
    assert Z.dim == 3 and Z.contains([1, 2, 3], [0, 0, 0])
    D = from_operator(np.eye(3))
    assert D.contains([1, 2j, 0], [1, 2j, 0]) and not D.contains([1, 0, 0], [0, 1, 0])
    M = complex_normal(rng, 3, 3)
    A = from_operator(M)
    assert is_single_valued(A)[0] and same_subspace(domain(A), H.full())


def test_domain_and_multivalued_examples():
    H = HSpace(3)
    mv = multivalued_relation(H)
    assert domain(mv).dim == 0
    ok, mul = is_single_valued(mv)
    assert not ok and mul.dim == 3


def test_shift_examples(rng):
    M = complex_normal(rng, 3, 3)
    lam = 0.5 - 2j
    assert same_relation(shift(from_operator(M), lam), from_operator(M + lam * np.eye(3)))
    mv = multivalued_relation(HSpace(3))
    assert same_relation(shift(mv, lam), mv)
    assert same_relation(shift(from_operator(M), 0), from_operator(M))


def test_invert_examples():
    ok, R = invert(from_operator(np.eye(2)))
    assert ok and np.allclose(R, np.eye(2))
    ok, refl = invert(from_operator(np.zeros((2, 2))))
    assert not ok and same_relation(refl, reflect(from_operator(np.zeros((2, 2)))))
    ok, R = invert(shift(from_operator(np.zeros((2, 2))), 1.0))
    assert ok and np.allclose(R, np.eye(2))


def test_resolvent_examples():
    H = HSpace(2)
    assert np.allclose(resolvent(from_operator(np.zeros((2, 2))), -1), np.eye(2))
    assert np.allclose(resolvent(multivalued_relation(H), -1), 0)
    assert np.allclose(resolvent(from_operator(np.diag([1.0, 2.0])), -1), np.diag([1 / 2, 1 / 3]))
    with pytest.raises(NotInResolventSet):
        resolvent(from_operator(np.diag([1.0, 2.0])), 2.0)


def test_multivalued_resolvent_by_brute_force():
    # (A + I)^{-1} for A = {0} x H: pairs (y, 0), so the inverse sends every y to 0
    H = HSpace(3)
    shifted = shift(multivalued_relation(H), 1.0)
    assert np.allclose(shifted.X, 0)
    assert np.allclose(resolvent(multivalued_relation(H), -1), np.zeros((3, 3)))


def test_m_sectorial_examples():
    s = is_m_sectorial(from_operator(np.eye(2)))
    assert (s.vertex, s.tan_theta) == pytest.approx((1.0, 0.0))
    s = is_m_sectorial(multivalued_relation(HSpace(2)))
    assert (s.vertex, s.tan_theta) == (0.0, 0.0)


def test_m_sectorial_nilpotent_matches_sampling_oracle(rng):
    M = np.array([[0.0, 1.0], [0.0, 0.0]])
    s = is_m_sectorial(from_operator(M))
    assert isinstance(s, SectorParams)
    X = complex_normal(rng, 2, 50000)
    X /= np.linalg.norm(X, axis=0)
    z = np.einsum("ij,ik,kj->j", X.conj(), M, X)
    assert z.real.min() >= s.vertex - 1e-12
    assert np.max(np.abs(z.imag) / (z.real - s.vertex)) <= s.tan_theta * (1 + 1e-9)
    assert np.max(np.abs(z.imag) / (z.real - s.vertex)) >= 0.99 * s.tan_theta


def test_not_m_sectorial_when_not_maximal():
    H = HSpace(2)
    A = from_pairs(H, np.array([[1.0], [0.0]]), np.array([[1.0], [0.0]]))
    assert not is_m_sectorial(A)
    # multivalued direction not orthogonal to the domain
    B = from_pairs(H, np.array([[1.0, 0.0], [0.0, 0.0]]), np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert not is_m_sectorial(B)


def test_single_valued_part_examples(rng):
    M = complex_normal(rng, 3, 3)
    Ao, D, ok = single_valued_part(from_operator(M))
    assert ok and np.allclose(D.basis @ Ao @ D.basis.conj().T, M)
    Ao, D, ok = single_valued_part(multivalued_relation(HSpace(3)))
    assert Ao.shape == (0, 0) and D.dim == 0


@given(seeds, st.booleans())
def test_reflection_is_an_involution(seed, weighted):
    A = random_relation(rng_for(seed), 4, weighted)
    assert same_relation(reflect(reflect(A)), A)


@given(seeds, st.booleans())
def test_dimension_identity(seed, weighted):
    A = random_relation(rng_for(seed), int(rng_for(seed).integers(1, 6)), weighted)
    assert A.dim == domain(A).dim + multivalued_part(A).dim


@given(seeds, st.booleans())
def test_kernel_dimension_identity(seed, weighted):
    A = random_relation(rng_for(seed), 4, weighted)
    # graph = range dimension + kernel dimension
    from sectorial.relations import range_

    assert A.dim == range_(A).dim + kernel(A).dim


@given(seeds, st.booleans(), st.complex_numbers(max_magnitude=3), st.complex_numbers(max_magnitude=3))
def test_shift_composes(seed, weighted, lam, mu):
    A = random_relation(rng_for(seed), 4, weighted)
    assert same_relation(shift(shift(A, lam), mu), shift(A, lam + mu), 1e-7)


@given(seeds, st.booleans())
def test_resolvent_identity(seed, weighted):
    rng = rng_for(seed)
    A = random_m_sectorial(rng, int(rng.integers(1, 7)), weighted)
    shift0 = min(0.0, is_m_sectorial(A).vertex) - 1.0
    lam, mu = shift0 - 1.0, shift0 - 2.0
    Rl, Rm = resolvent(A, lam), resolvent(A, mu)
    assert np.abs(Rl - Rm - (lam - mu) * Rl @ Rm).max() <= 1e-8 * max(1, np.abs(Rl).max() * np.abs(Rm).max())


@given(seeds, st.booleans())
def test_resolvent_matches_pseudoinverse_oracle(seed, weighted):
    rng = rng_for(seed)
    A = random_m_sectorial(rng, int(rng.integers(1, 7)), weighted)
    lam = min(0.0, is_m_sectorial(A).vertex) - 1.5
    oracle = A.X @ np.linalg.pinv(A.Y - lam * A.X)
    assert np.abs(resolvent(A, lam) - oracle).max() <= 1e-9 * max(1, np.abs(oracle).max())


@given(seeds, st.booleans())
def test_reconstruction_from_single_valued_part(seed, weighted):
    A = random_m_sectorial(rng_for(seed), 5, weighted)
    Ao, D, ok = single_valued_part(A)
    assert ok
    # every pair (d, A°d) lies in A and every (0, w) with w ⊥ D(A) as well
    for i in range(D.dim):
        assert A.contains(D.basis[:, i], D.basis @ Ao[:, i], 1e-9)
    from sectorial.hilbert import ortho_complement

    C = ortho_complement(D)
    for i in range(C.dim):
        assert A.contains(np.zeros(A.d), C.basis[:, i], 1e-9)


@given(seeds, st.booleans())
def test_m_sectorial_certificate_on_random_graphs(seed, weighted):
    A = random_m_sectorial(rng_for(seed), 5, weighted)
    s = is_m_sectorial(A)
    assert isinstance(s, SectorParams)
    ok, _ = invert(shift(A, -(s.vertex - 1.0)))
    assert ok


def test_relation_distance_symmetry(rng):
    A, B = random_relation(rng, 3), random_relation(rng, 3)
    assert relation_distance(A, B) == relation_distance(B, A)
    assert relation_distance(A, A) <= 1e-12
