import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

from sectorial.association import (
    EllipticityFailure,
    HypothesisViolation,
    RepresentedForm,
    check_j_elliptic,
    graph_of_closed_form,
    graph_of_represented_form,
    is_j_elliptic_pair,
    lemma_3_1_consistency,
    norm_equivalence_constant,
    represent_form,
    represented_graph_bruteforce,
    sequential_characterization_check,
    witnesses,
)
from sectorial.forms import SesqForm, working_sector, zero_form
from sectorial.generators import complex_normal, random_matrix_form, random_space, rng_for
from sectorial.hilbert import HSpace, orthonormalize
from sectorial.relations import from_operator, from_pairs, is_m_sectorial, same_relation, single_valued_part

seeds = st.integers(0, 2 ** 32 - 1)


def example_data(d, phi):
    J = np.hstack([np.eye(d), np.zeros((d, 1))])
    At = np.zeros((d + 1, d + 1), dtype=complex)
    At[d, d] = 1
    return RepresentedForm(HSpace(d), HSpace(d + 1), J, At)


def test_closed_form_examples():
    H = HSpace(2)
    assert same_relation(graph_of_closed_form(zero_form(H.full())), from_operator(np.zeros((2, 2))))
    assert same_relation(graph_of_closed_form(SesqForm(H.full(), np.eye(2))), from_operator(np.eye(2)))
    line = orthonormalize([np.array([1.0, 0.0])], H)
    A = graph_of_closed_form(SesqForm(line, np.array([[1.0]])))
    # brute force: (u, f) with u = c e1 and (f, e1) = c, i.e. f = c e1 + β e2
    assert A.dim == 2 and A.contains([2, 0], [2, 5]) and not A.contains([2, 0], [1, 0])


@given(seeds, st.booleans())
def test_closed_form_graph_solves_defining_system(seed, weighted):
    rng = rng_for(seed)
    H = random_space(rng, 4, weighted)
    a = random_matrix_form(rng, H, int(rng.integers(0, 5)))
    A = graph_of_closed_form(a, check=True)
    # brute force: (B x, f) with B^* G f = M x, solved through scipy's null space
    k, d = a.domain.dim, H.dim
    C = np.hstack([a.matrix, -a.domain.basis.conj().T @ H.G])
    N = scipy.linalg.null_space(C) if C.size else np.eye(k + d)
    oracle = from_pairs(H, a.domain.basis @ N[:k], N[k:])
    assert same_relation(A, oracle)


@given(seeds, st.booleans())
def test_closed_form_graph_vertex_and_reconstruction(seed, weighted):
    rng = rng_for(seed)
    H = random_space(rng, 4, weighted)
    a = random_matrix_form(rng, H, int(rng.integers(1, 5)))
    A = graph_of_closed_form(a)
    assert is_m_sectorial(A).vertex == pytest.approx(working_sector(a).vertex, abs=1e-8)
    Ao, D, _ = single_valued_part(A)
    T = D.basis.conj().T @ H.G @ a.domain.basis
    assert np.abs(T @ a.matrix @ T.conj().T - Ao).max() <= 1e-8 * max(1, np.abs(a.matrix).max())


def test_represented_examples(rng):
    H = HSpace(3)
    a = random_matrix_form(rng, H, 3)
    rf = RepresentedForm(H, HSpace(3), a.domain.basis, a.matrix)
    assert same_relation(graph_of_represented_form(rf), graph_of_closed_form(a))
    phi = complex_normal(rng, 3)
    A = graph_of_represented_form(example_data(3, phi / np.linalg.norm(phi)))
    assert same_relation(A, from_operator(np.zeros((3, 3))))


@given(seeds)
def test_non_injective_j_gives_m_sectorial_graph(seed):
    rng = rng_for(seed)
    d, m = 3, 5
    J = complex_normal(rng, d, m)
    L = complex_normal(rng, m, m)
    At = L @ L.conj().T + 0.1 * np.eye(m) + 0.5j * (L + L.conj().T)
    rf = RepresentedForm(HSpace(d), HSpace(m), J, At)
    A = graph_of_represented_form(rf)
    assert is_m_sectorial(A)
    assert same_relation(A, represented_graph_bruteforce(rf))


@given(seeds)
def test_elliptic_shift_needed_when_form_degenerate(seed):
    rng = rng_for(seed)
    d, m = 3, 4
    J = complex_normal(rng, d, m)
    ker = scipy.linalg.null_space(J)
    L = complex_normal(rng, m, m)
    # Re ã vanishes on a complement of ker J but is coercive on ker J
    At = ker @ (L[:1, :1] @ L[:1, :1].conj() + 1) @ ker.conj().T
    rf = RepresentedForm(HSpace(d), HSpace(m), J, At)
    ell = check_j_elliptic(rf)
    assert ell and ell[0] > 0
    assert is_j_elliptic_pair(rf, *ell)
    assert same_relation(graph_of_represented_form(rf), represented_graph_bruteforce(rf))


def test_ellipticity_examples(rng):
    J = complex_normal(rng, 2, 3)
    rf = RepresentedForm(HSpace(2), HSpace(3), J, np.eye(3))
    assert check_j_elliptic(rf) == pytest.approx((0.0, 1.0))
    assert not check_j_elliptic(RepresentedForm(HSpace(2), HSpace(3), np.zeros((2, 3)), np.zeros((3, 3))))
    ex = example_data(4, np.eye(4)[0])
    assert is_j_elliptic_pair(ex, 1.0, 0.5)
    omega, mu = check_j_elliptic(ex)
    assert is_j_elliptic_pair(ex, omega, mu) and mu > 0
    with pytest.raises(EllipticityFailure):
        graph_of_represented_form(RepresentedForm(HSpace(2), HSpace(3), np.zeros((2, 3)), np.zeros((3, 3))))


@given(seeds, st.booleans())
def test_continuity_and_ellipticity_hold_on_samples(seed, weighted):
    rng = rng_for(seed)
    m = 4
    GV = random_space(rng, m, True).G if weighted else np.eye(m)
    J = complex_normal(rng, 3, m)
    L = complex_normal(rng, m, m)
    rf = RepresentedForm(HSpace(3), HSpace(m, GV), J, L @ L.conj().T + complex_normal(rng, m, m) * 0.3)
    ell = rf.ellipticity
    for _ in range(20):
        u, v = complex_normal(rng, m), complex_normal(rng, m)
        nu, nv = rf.V.norm(u), rf.V.norm(v)
        assert abs(rf.evaluate(u, v)) <= rf.continuity_constant * nu * nv * (1 + 1e-10)
        if ell:
            omega, mu = ell
            lhs = rf.evaluate(u, u).real + omega * rf.H.norm(J @ u) ** 2
            assert lhs >= mu * nu ** 2 * (1 - 1e-9)


@given(seeds)
def test_association_invariant_under_rebasing_v(seed):
    rng = rng_for(seed)
    m = 4
    J = complex_normal(rng, 3, m)
    L = complex_normal(rng, m, m)
    rf = RepresentedForm(HSpace(3), HSpace(m), J, L @ L.conj().T + 0.2 * np.eye(m))
    Q = np.linalg.qr(complex_normal(rng, m, m))[0]
    rf2 = RepresentedForm(HSpace(3), HSpace(m), J @ Q, Q.conj().T @ rf.Atil @ Q)
    assert same_relation(graph_of_represented_form(rf), graph_of_represented_form(rf2))


def test_sequential_characterization(rng):
    H = HSpace(3)
    a = random_matrix_form(rng, H, 2)
    A = graph_of_closed_form(a)
    assert sequential_characterization_check(a, A)
    ex = example_data(3, np.eye(3)[0])
    A0 = graph_of_represented_form(ex)
    full0 = zero_form(H.full())
    assert witnesses(full0, [1, 2, 3], [0, 0, 0])
    assert not witnesses(full0, [1, 2, 3], [1, 0, 0])
    assert A0.contains([1, 2, 3], [0, 0, 0]) and not A0.contains([1, 2, 3], [1, 0, 0])


def test_represented_consistency_examples(rng):
    H = HSpace(3)
    a = random_matrix_form(rng, H, 2)
    rf = represent_form(a)
    assert lemma_3_1_consistency(a, rf, np.eye(2))
    # same V with a Gram scaled by 4 (c = 2 with respect to the original norm)
    rf4 = RepresentedForm(H, HSpace(2, 4 * rf.V.G), rf.J, rf.Atil)
    assert lemma_3_1_consistency(a, rf4, np.eye(2))
    assert norm_equivalence_constant(a, rf4, np.eye(2)) == pytest.approx(2.0)
    bad = RepresentedForm(H, rf.V, 2 * rf.J, rf.Atil)
    with pytest.raises(HypothesisViolation) as exc:
        lemma_3_1_consistency(a, bad, np.eye(2))
    assert exc.value.hypothesis == "jq"


def test_represented_consistency_hypotheses(rng):
    H = HSpace(3)
    a = random_matrix_form(rng, H, 2)
    rf = represent_form(a)
    with pytest.raises(HypothesisViolation) as exc:
        lemma_3_1_consistency(a, rf.with_form(rf.Atil + 1), np.eye(2))
    assert exc.value.hypothesis == "form"
    big = RepresentedForm(H, HSpace(3), np.hstack([rf.J, np.zeros((3, 1))]), np.pad(rf.Atil, ((0, 1), (0, 1))))
    with pytest.raises(HypothesisViolation) as exc:
        lemma_3_1_consistency(a, big, np.vstack([np.eye(2), np.zeros((1, 2))]))
    assert exc.value.hypothesis == "dense"


@given(seeds, st.booleans())
def test_represented_consistency_with_injective_j(seed, weighted):
    rng = rng_for(seed)
    H = random_space(rng, 4, weighted)
    a = random_matrix_form(rng, H, 3)
    rf = represent_form(a)
    Q = complex_normal(rng, 3, 3) + 3 * np.eye(3)
    q = np.linalg.inv(Q)
    rf2 = RepresentedForm(H, HSpace(3, Q.conj().T @ rf.V.G @ Q), rf.J @ Q, Q.conj().T @ rf.Atil @ Q)
    assert lemma_3_1_consistency(a, rf2, q)
