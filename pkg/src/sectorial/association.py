"""m-sectorial graphs associated with forms.

Two routes: a form ``a`` on a subspace ``D(a) ⊆ H`` (every such form is closed
in finite dimension), and a triple ``(V, j, ã)`` where ``ã`` lives on an
auxiliary space ``V`` and ``j: V -> H`` need not be injective.  The second
route is how non-closable behaviour survives at finite dimension.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .forms import SesqForm, hermitian_parts, working_sector
from .hilbert import DEFAULT_TOL, HSpace, null_space, ortho_complement
from .relations import LinearRelation, from_pairs, same_relation


class EllipticityFailure(ValueError):
    pass


class HypothesisViolation(ValueError):
    def __init__(self, hypothesis: str, detail: str = ""):
        super().__init__(f"{hypothesis}: {detail}" if detail else hypothesis)
        self.hypothesis = hypothesis


@dataclass(frozen=True)
class NotElliptic:
    reason: str = ""

    def __bool__(self):
        return False


def _whitener(G: np.ndarray) -> np.ndarray:
    """``L^{-1}`` for ``G = L L^*``."""
    return np.linalg.inv(np.linalg.cholesky(G))


@dataclass(frozen=True, eq=False)
class RepresentedForm:
    """``ã(u, v) = v^* Atil u`` on ``V = (C^m, G_V)`` with ``j = J: V -> H``."""

    H: HSpace
    V: HSpace
    J: np.ndarray
    Atil: np.ndarray
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        J = np.asarray(self.J, dtype=complex).reshape(self.H.dim, self.V.dim)
        A = np.asarray(self.Atil, dtype=complex)
        if A.shape != (self.V.dim, self.V.dim):
            raise ValueError(f"Atil has shape {A.shape}, V has dimension {self.V.dim}")
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "Atil", A)

    @property
    def m(self) -> int:
        return self.V.dim

    @cached_property
    def K(self) -> np.ndarray:
        """Gram of ``u -> |j(u)|_H^2`` in V coordinates."""
        return self.J.conj().T @ self.H.G @ self.J

    @cached_property
    def continuity_constant(self) -> float:
        if self.m == 0:
            return 0.0
        Li = _whitener(self.V.G)
        return float(np.linalg.norm(Li @ self.Atil @ Li.conj().T, 2))

    @cached_property
    def ellipticity(self):
        return check_j_elliptic(self)

    def evaluate(self, u, v) -> complex:
        return complex(np.asarray(v).conj() @ self.Atil @ np.asarray(u))

    def with_form(self, Atil: np.ndarray) -> RepresentedForm:
        return RepresentedForm(self.H, self.V, self.J, Atil, self.tol)

    def restricted(self, Z: np.ndarray) -> RepresentedForm:
        """Restriction to the subspace of V spanned by the columns of ``Z``."""
        Z = np.asarray(Z, dtype=complex)
        V = HSpace(Z.shape[1], Z.conj().T @ self.V.G @ Z) if Z.shape[1] else HSpace(0)
        return RepresentedForm(self.H, V, self.J @ Z, Z.conj().T @ self.Atil @ Z, self.tol)


def represent_form(a: SesqForm) -> RepresentedForm:
    """``a`` on ``V = D(a)`` (graph-norm Gram) with ``j`` the inclusion."""
    k = a.domain.dim
    gamma = working_sector(a).vertex
    R = hermitian_parts(a.matrix)[0]
    GV = R + (1.0 - gamma) * np.eye(k)
    V = HSpace(k, GV) if k else HSpace(0)
    return RepresentedForm(a.space, V, a.domain.basis, a.matrix, a.domain.tol)


def is_j_elliptic_pair(rf: RepresentedForm, omega: float, mu: float, tol: float = 1e-10) -> bool:
    """Exact check of ``Re ã(u) + ω|ju|^2 >= μ|u|_V^2`` via the smallest eigenvalue."""
    if rf.m == 0:
        return mu > 0
    Li = _whitener(rf.V.G)
    R = hermitian_parts(rf.Atil)[0]
    T = Li @ (R + omega * rf.K - mu * rf.V.G) @ Li.conj().T
    scale = max(np.linalg.norm(Li @ R @ Li.conj().T, 2), abs(omega) * np.linalg.norm(Li @ rf.K @ Li.conj().T, 2), mu, 1e-300)
    return mu > 0 and np.linalg.eigvalsh(0.5 * (T + T.conj().T))[0] >= -tol * scale


def check_j_elliptic(rf: RepresentedForm, fraction: float = 0.5):
    """A certified ``(ω, μ)``, or :class:`NotElliptic`.

    When ``Re ã`` alone is coercive the pair is ``(0, λ_min)``.  Otherwise
    ``μ`` is ``fraction`` of the coercivity of ``Re ã`` on ``ker j`` and ``ω``
    the smallest non-negative value making the pair feasible.
    """
    m = rf.m
    if m == 0:
        return 0.0, 1.0
    Li = _whitener(rf.V.G)
    R = Li @ hermitian_parts(rf.Atil)[0] @ Li.conj().T
    K = Li @ rf.K @ Li.conj().T
    R = 0.5 * (R + R.conj().T)
    K = 0.5 * (K + K.conj().T)
    scale = max(np.linalg.norm(R, 2), np.linalg.norm(K, 2), 1e-300)
    eps = rf.tol * scale
    lam = np.linalg.eigvalsh(R)[0]
    if lam > eps:
        return 0.0, float(lam)
    wK, QK = np.linalg.eigh(K)
    N = QK[:, wK <= eps]
    if N.shape[1]:
        cap = float(np.linalg.eigvalsh(N.conj().T @ R @ N)[0])
        if cap <= eps:
            return NotElliptic("Re ã is not coercive on ker j")
    else:
        cap = float(wK[0])
    mu = fraction * cap

    def feasible(omega):
        return np.linalg.eigvalsh(R + omega * K - mu * np.eye(m))[0] >= 0.0

    hi = 1.0
    while not feasible(hi):
        hi *= 2.0
        if hi > 1e300:  # pragma: no cover
            return NotElliptic("no finite ω found")
    lo = 0.0
    if feasible(lo):
        return 0.0, mu
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-13 * max(hi, 1.0):
            break
    return float(hi), float(mu)


def graph_of_closed_form(a: SesqForm, check: bool = False) -> LinearRelation:
    """``{(u, f) ∈ D(a) × H : a(u, v) = (f, v) for all v ∈ D(a)}``.

    The solution set is ``{(Bx, BMx + w) : w ⊥ D(a)}``.
    """
    B = a.domain.basis
    comp = ortho_complement(a.domain)
    d = a.space.dim
    X = np.hstack([B, np.zeros((d, comp.dim))])
    Y = np.hstack([B @ a.matrix, comp.basis])
    A = from_pairs(a.space, X, Y, a.domain.tol)
    if check:
        from .relations import is_m_sectorial

        s = is_m_sectorial(A)
        if not s:  # pragma: no cover - holds by construction
            raise EllipticityFailure(f"associated graph is not m-sectorial: {s.reason}")
    return A


def graph_of_represented_form(rf: RepresentedForm) -> LinearRelation:
    """``{(ju, f) : ã(u, v) = (f, jv)_H for all v ∈ V}``.

    With ``(ω, μ)`` certified, ``Atil + ωK`` is invertible and the graph is
    ``{(JSg, g - ωJSg) : g ∈ H}`` with ``S = (Atil + ωK)^{-1} J^* G``.
    """
    ell = rf.ellipticity
    if not ell:
        raise EllipticityFailure(ell.reason)
    omega, _ = ell
    d = rf.H.dim
    if rf.m == 0:
        return from_pairs(rf.H, np.zeros((d, d)), np.eye(d), rf.tol)
    S = np.linalg.solve(rf.Atil + omega * rf.K, rf.J.conj().T @ rf.H.G)
    JS = rf.J @ S
    return from_pairs(rf.H, JS, np.eye(d) - omega * JS, rf.tol)


def represented_graph_bruteforce(rf: RepresentedForm) -> LinearRelation:
    """Same graph from the null space of ``[Atil, -J^* G]`` (no ellipticity shift)."""
    m = rf.m
    C = np.hstack([rf.Atil, -rf.J.conj().T @ rf.H.G])
    Nb = null_space(C, rf.tol)
    return from_pairs(rf.H, rf.J @ Nb[:m], Nb[m:], rf.tol)


def witnesses(a: SesqForm, x, f, tol: float = 1e-8) -> bool:
    """Whether the constant sequence ``u_n = x`` witnesses ``(x, f)`` for ``a``."""
    x = np.asarray(x, dtype=complex)
    f = np.asarray(f, dtype=complex)
    if not a.domain.contains(x, tol):
        return False
    c = a.domain.coords(x)
    lhs = a.matrix @ c  # a(x, b_i) for basis vectors b_i
    rhs = a.domain.coords(f)  # (f, b_i)
    scale = max(np.linalg.norm(lhs), np.linalg.norm(f), 1.0)
    return bool(np.linalg.norm(lhs - rhs) <= tol * scale)


def sequential_characterization_check(a: SesqForm, A: LinearRelation, trials: int = 20, seed: int = 0) -> bool:
    """Pairs of ``A`` are witnessed by constant sequences; perturbed pairs are not."""
    rng = np.random.default_rng(seed)
    k = a.domain.dim
    for _ in range(trials):
        c = rng.standard_normal(A.dim) + 1j * rng.standard_normal(A.dim)
        x, f = A.X @ c, A.Y @ c
        if not witnesses(a, x, f):
            return False
        if k:
            w = a.domain.basis @ (rng.standard_normal(k) + 1j * rng.standard_normal(k))
            if witnesses(a, x, f + w) or A.contains(x, f + w, 1e-8):
                return False
        comp = ortho_complement(a.domain)
        if comp.dim:
            z = comp.basis @ (rng.standard_normal(comp.dim) + 1j * rng.standard_normal(comp.dim))
            if witnesses(a, x + z, f):
                return False
    return True


def lemma_3_1_consistency(a: SesqForm, rf: RepresentedForm, q: np.ndarray, tol: float = 1e-8) -> bool:
    """Check the bridge hypotheses for ``q: D(a) -> V``, then compare graphs.

    Raises :class:`HypothesisViolation` naming the failed hypothesis: ``dense``,
    ``norm``, ``jq``, ``form`` or ``elliptic``.
    """
    q = np.asarray(q, dtype=complex)
    k, m = a.domain.dim, rf.m
    if q.shape != (m, k):
        raise ValueError(f"q has shape {q.shape}, expected ({m}, {k})")
    if m and np.linalg.matrix_rank(q, tol=rf.tol * max(np.linalg.norm(q, 2), 1.0)) < m:
        raise HypothesisViolation("dense", "q(D(a)) does not span V")
    gamma = working_sector(a).vertex
    Na = hermitian_parts(a.matrix)[0] + (1.0 - gamma) * np.eye(k)
    Nq = q.conj().T @ rf.V.G @ q
    if k:
        Li = _whitener(Na)
        w = np.linalg.eigvalsh(Li @ Nq @ Li.conj().T)
        if w[0] <= rf.tol * w[-1]:
            raise HypothesisViolation("norm", "no c with c^-1 |q(u)|_V <= |u|_D(a)")
    if np.abs(rf.J @ q - a.domain.basis).max(initial=0.0) > tol:
        raise HypothesisViolation("jq", "j(q(u)) != u")
    if np.abs(q.conj().T @ rf.Atil @ q - a.matrix).max(initial=0.0) > tol * max(1.0, np.abs(a.matrix).max(initial=0.0)):
        raise HypothesisViolation("form", "ã(q(u), q(v)) != a(u, v)")
    if not rf.ellipticity:
        raise HypothesisViolation("elliptic", rf.ellipticity.reason)
    return same_relation(graph_of_closed_form(a), graph_of_represented_form(rf), tol)


def norm_equivalence_constant(a: SesqForm, rf: RepresentedForm, q: np.ndarray) -> float:
    """Smallest ``c`` with ``c^-1 |q(u)|_V <= |u|_D(a) <= c |q(u)|_V``."""
    k = a.domain.dim
    if k == 0:
        return 1.0
    gamma = working_sector(a).vertex
    Na = hermitian_parts(a.matrix)[0] + (1.0 - gamma) * np.eye(k)
    Nq = np.asarray(q).conj().T @ rf.V.G @ np.asarray(q)
    Li = _whitener(Na)
    w = np.linalg.eigvalsh(Li @ Nq @ Li.conj().T)
    return math.sqrt(max(w[-1], 1.0 / w[0]))
