"""Absorption: the limit of ``a_n = a + (n-1) b`` and its product formula.

Indexing is shifted so that ``A_1 = A`` is the graph of ``a`` itself; the
unshifted sum ``a + n b`` is ``a_{n+1}`` here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .association import (
    RepresentedForm,
    graph_of_represented_form,
    represent_form,
)
from .forms import SectorParams, SesqForm, bound_constants, hermitian_parts, restrict, sector_of_matrix
from .hilbert import DEFAULT_TOL, HSpace, null_space, orthonormalize, projector
from .relations import LinearRelation, resolvent
from .semigroups import ConvergenceReport, probe_vectors, semigroup, strong_error, trotter_product


class MissingBoundConstants(ValueError):
    pass


class NotClosableError(ValueError):
    pass


class MismatchWithFormB(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class AbsorptionProblem:
    """``a`` as a represented form on ``V`` and ``b`` as a matrix on the same ``V``."""

    a: RepresentedForm
    b: np.ndarray
    bound_constants: tuple[float, float] | None = None

    def __post_init__(self):
        b = np.asarray(self.b, dtype=complex)
        if b.shape != (self.a.m, self.a.m):
            raise ValueError(f"b has shape {b.shape}, V has dimension {self.a.m}")
        s = sector_of_matrix(b, vertex=0.0, tol=self.a.tol)
        if not isinstance(s, SectorParams):
            raise ValueError("b must be sectorial with vertex 0")
        object.__setattr__(self, "b", b)

    @property
    def H(self) -> HSpace:
        return self.a.H

    def with_bound_constants(self) -> AbsorptionProblem:
        c = compute_bound_constants(self.a, self.b)
        if not c:
            raise MissingBoundConstants(c.reason)
        return AbsorptionProblem(self.a, self.b, c)


def compute_bound_constants(a: RepresentedForm, b: np.ndarray, tol: float = DEFAULT_TOL):
    """``(c1, c2)`` with ``|b(u)| <= c1 Re ã(u) + c2 |j u|^2``, or :class:`Unbounded`."""
    return bound_constants(b, hermitian_parts(a.Atil)[0], a.K, tol)


def from_forms(a: SesqForm, b: SesqForm, with_constants: bool = True) -> AbsorptionProblem:
    """Wrap a pair of forms; ``b`` is restricted to ``D(a)``."""
    rf = represent_form(a)
    p = AbsorptionProblem(rf, restrict(b, a.domain).matrix)
    return p.with_bound_constants() if with_constants else p


def from_operators(A_op: np.ndarray, B_op: np.ndarray, space: HSpace | None = None,
                   with_constants: bool = True) -> AbsorptionProblem:
    """``a(u, v) = (A u, v)`` and ``b(u, v) = (B u, v)`` on all of ``H``."""
    from .forms import form_from_operator

    space = HSpace(np.shape(A_op)[0]) if space is None else space
    full = space.full()
    return from_forms(form_from_operator(A_op, full), form_from_operator(B_op, full), with_constants)


def absorption_graphs(p: AbsorptionProblem, n: int) -> LinearRelation:
    """Graph of ``(ã + (n-1) b~, j)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return graph_of_represented_form(p.a.with_form(p.a.Atil + (n - 1) * p.b))


def absorbed_subspace(p: AbsorptionProblem) -> np.ndarray:
    """Columns spanning ``Z_∞ = ker Re b~`` in V coordinates."""
    R = hermitian_parts(p.b)[0]
    return null_space(R, p.a.tol, scale=1.0) if p.a.m else np.zeros((0, 0), dtype=complex)


def limit_graph_absorption(p: AbsorptionProblem) -> LinearRelation:
    if p.bound_constants is None:
        raise MissingBoundConstants("the limit needs |b(u)| <= c1 Re a(u) + c2 |u|^2")
    return graph_of_represented_form(p.a.restricted(absorbed_subspace(p)))


def _j_injective(p: AbsorptionProblem) -> bool:
    if p.a.m == 0:
        return True
    s = np.linalg.svd(p.a.J, compute_uv=False)
    return bool(s.size == p.a.m and s[-1] > p.a.tol * max(s[0], 1.0))


def projection_thm_4_1(p: AbsorptionProblem) -> np.ndarray:
    """Orthogonal projector onto ``j(Z_∞) = {u ∈ D(a) : b(u) = 0}``."""
    if not _j_injective(p):
        raise NotClosableError(
            "j is not injective, so b is not a form on D(a) ⊆ H; "
            "use limit_graph_absorption, which needs no projection"
        )
    Z = absorbed_subspace(p)
    return projector(orthonormalize(p.a.J @ Z, p.H, p.a.tol, scale=1.0))


def projection_thm_4_2(B: np.ndarray, p: AbsorptionProblem | None = None, space: HSpace | None = None,
                       tol: float = 1e-8) -> np.ndarray:
    """Orthogonal projector onto ``ker(B + B^*)``.

    With ``p`` given, first checks ``b(u, v) = (B j u, j v)_H`` on ``V``.
    """
    B = np.asarray(B, dtype=complex)
    space = (p.H if p is not None else HSpace(B.shape[0])) if space is None else space
    if p is not None:
        induced = p.a.J.conj().T @ space.G @ B @ p.a.J
        scale = max(1.0, np.abs(p.b).max(initial=0.0))
        if np.abs(induced - p.b).max(initial=0.0) > tol * scale:
            raise MismatchWithFormB("b(u, v) differs from (B j u, j v)_H")
    C = B + space.adjoint(B)
    ker = null_space(C, DEFAULT_TOL, scale=1.0)
    return projector(orthonormalize(ker, space, DEFAULT_TOL, scale=1.0)) if ker.shape[1] else np.zeros_like(C)


def projector_from_form_b(p: AbsorptionProblem) -> np.ndarray:
    """Projector of the bounded-``B`` route with ``B = G^{-1} J^{-*} b~ J^{-1}``; needs ``V ≅ H`` via ``j``."""
    if p.a.m != p.H.dim or not _j_injective(p):
        raise MismatchWithFormB("b is not induced by a bounded operator on H")
    Ji = np.linalg.inv(p.a.J)
    B = np.linalg.solve(p.H.G, Ji.conj().T @ p.b @ Ji)
    return projection_thm_4_2(B, p)


@dataclass(frozen=True)
class AbsorptionReport:
    t: float
    resolvent: ConvergenceReport
    product: ConvergenceReport

    @property
    def schedule(self) -> tuple[int, ...]:
        return self.resolvent.schedule

    @property
    def final_errors(self) -> tuple[float, float]:
        return self.resolvent.final_error, self.product.final_error

    def rows(self):
        for n, er, ep in zip(self.schedule, self.resolvent.errors, self.product.errors):
            yield n, self.t, er, ep


def resolvent_track(p: AbsorptionProblem, A_inf: LinearRelation, schedule, probes: np.ndarray) -> ConvergenceReport:
    target = resolvent(A_inf, -1.0)
    errs = [strong_error(resolvent(absorption_graphs(p, n), -1.0), target, probes, p.H) for n in schedule]
    return ConvergenceReport.build(schedule, errs, track="resolvent")


def verify_absorption(p: AbsorptionProblem, P: np.ndarray, t: float, schedule,
                      probes: np.ndarray | None = None) -> AbsorptionReport:
    """Resolvent errors ``|(A_n+I)^{-1}f - (A_∞+I)^{-1}f|`` and product-formula errors
    ``|(e^{-(t/n)A} P)^n f - e^{-t A_∞} f|`` over the schedule."""
    probes = probe_vectors(p.H.dim) if probes is None else probes
    A = absorption_graphs(p, 1)
    A_inf = limit_graph_absorption(p)
    target = semigroup(A_inf, t)
    prod = [strong_error(trotter_product(A, P, t, n), target, probes, p.H) for n in schedule]
    return AbsorptionReport(
        t,
        resolvent_track(p, A_inf, schedule, probes),
        ConvergenceReport.build(schedule, prod, track="product", t=t),
    )


# --- scenarios ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NonClosableExample:
    """``Z = H × C``, ``j(u, λ) = u``, ``ã = λ1 conj(λ2)``, ``b~ = I - P0`` with ``P0`` onto ``(φ, 1)``."""

    phi: np.ndarray
    problem: AbsorptionProblem

    @property
    def d(self) -> int:
        return self.phi.shape[0]

    @property
    def P1(self) -> np.ndarray:
        return np.outer(self.phi, self.phi.conj())

    @property
    def P0(self) -> np.ndarray:
        w = np.append(self.phi, 1.0)
        return 0.5 * np.outer(w, w.conj())

    def A(self) -> LinearRelation:
        return absorption_graphs(self.problem, 1)

    def A_inf(self) -> LinearRelation:
        return limit_graph_absorption(self.problem)

    def Z_inf(self) -> np.ndarray:
        return absorbed_subspace(self.problem)

    def expected_semigroup(self, t: float) -> np.ndarray:
        return math.exp(-t) * self.P1

    def claims(self, ts=(0.1, 1.0, 10.0)) -> dict[str, float]:
        """Deviation of each stated property, in order; all vanish to rounding."""
        from .hilbert import subspace_distance
        from .relations import domain, multivalued_part, single_valued_part

        d = self.d
        out = {}
        Ao, D, _ = single_valued_part(self.A())
        out["A_is_zero"] = float(np.abs(Ao).max(initial=0.0)) if D.dim == d else math.inf
        Z = self.Z_inf()
        w = np.append(self.phi, 1.0) / math.sqrt(2.0)
        out["Z_inf_is_span_phi_1"] = float(np.abs(Z @ Z.conj().T - np.outer(w, w.conj())).max()) if Z.shape[1] == 1 else math.inf
        A_inf = self.A_inf()
        H = self.problem.H
        span_phi = orthonormalize(self.phi[:, None], H)
        from .hilbert import ortho_complement

        dom, mul = domain(A_inf), multivalued_part(A_inf)
        out["domain_is_span_phi"] = subspace_distance(dom, span_phi)
        out["multivalued_is_phi_perp"] = subspace_distance(mul, ortho_complement(span_phi))
        out["pair_phi_phi"] = 0.0 if A_inf.contains(self.phi, self.phi, 1e-10) else math.inf
        out["semigroup"] = max(float(np.linalg.norm(semigroup(A_inf, t) - self.expected_semigroup(t), 2)) for t in ts)
        # lim (e^{-(t/n)·0} P)^n = P, which never equals e^{-t} P1
        out["no_projection_gap"] = min(
            float(np.linalg.norm(P - self.expected_semigroup(t), 2)) for P in (self.P1, np.eye(d), np.zeros((d, d)))
            for t in ts
        )
        return out


def example_4_3_scenario(d: int, phi: np.ndarray | None = None) -> NonClosableExample:
    phi = np.eye(d, dtype=complex)[0] if phi is None else np.asarray(phi, dtype=complex)
    if phi.shape != (d,) or abs(np.linalg.norm(phi) - 1.0) > 1e-12:
        raise ValueError("phi must be a unit vector in C^d")
    H = HSpace(d)
    m = d + 1
    J = np.hstack([np.eye(d), np.zeros((d, 1))])
    Atil = np.zeros((m, m), dtype=complex)
    Atil[d, d] = 1.0
    w = np.append(phi, 1.0)
    b = np.eye(m) - 0.5 * np.outer(w, w.conj())
    rf = RepresentedForm(H, HSpace(m), J, Atil)
    return NonClosableExample(phi, AbsorptionProblem(rf, b, (1.0, 1.0)))


@dataclass(frozen=True, eq=False)
class NeumannDirichlet:
    """Second-difference form with free ends, absorbed by a boundary penalty."""

    problem: AbsorptionProblem
    weights: np.ndarray

    @property
    def interior_projector(self) -> np.ndarray:
        P = np.eye(len(self.weights), dtype=complex)
        P[0, 0] = P[-1, -1] = 0.0
        return P


def neumann_dirichlet_scenario(d: int, weights: np.ndarray | None = None) -> NeumannDirichlet:
    """``a(u) = sum |u_{i+1} - u_i|^2`` and ``b(u) = |u_1|^2 + |u_d|^2`` on ``(C^d, diag(h))``."""
    if d < 3:
        raise ValueError("need at least three grid points")
    h = np.ones(d) if weights is None else np.asarray(weights, dtype=float)
    space = HSpace(d) if weights is None else HSpace(d, np.diag(h))
    Dm = np.diff(np.eye(d), axis=0)
    Ma = Dm.T @ Dm
    Mb = np.zeros((d, d))
    Mb[0, 0] = Mb[-1, -1] = 1.0
    full = space.full()
    Bb = full.basis
    a = SesqForm(full, Bb.conj().T @ Ma @ Bb)
    b = SesqForm(full, Bb.conj().T @ Mb @ Bb)
    return NeumannDirichlet(from_forms(a, b), h)
