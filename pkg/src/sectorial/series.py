"""Series of vertex-0 sectorial forms and their strong-resolvent limits.

A sequence ``b_1, b_2, ...`` is a finite head ``b_1..b_N`` followed by a
tail rule for ``n > N``:

* :class:`ZeroTail`      ``b_n = 0`` on ``H``
* :class:`ConstantTail`  ``b_n = b_N``
* :class:`GeometricTail` ``b_n = ρ^{n-N} b_N``

All three have closed-form partial sums and limits, so the infinite series
is handled exactly.  The weighted tower ``V_0, V_1, ...`` over the partial
sums is built level by level up to ``N``; levels beyond ``N`` are fixed by
the tail rule and enter only through closed-form tail sums.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .association import RepresentedForm, graph_of_closed_form, graph_of_represented_form
from .forms import (
    SectorParams,
    SesqForm,
    add,
    hermitian_parts,
    restrict,
    sector_params,
    zero_form,
)
from .hilbert import HSpace, Subspace, orthonormalize
from .relations import LinearRelation, is_single_valued, domain, resolvent
from .semigroups import ConvergenceReport, probe_vectors, strong_error


@dataclass(frozen=True)
class ZeroTail:
    def coefficient(self, steps: int) -> float:
        return 0.0

    def limit_coefficient(self) -> float:
        return 0.0


@dataclass(frozen=True)
class ConstantTail:
    def coefficient(self, steps: int) -> float:
        return float(steps)

    def limit_coefficient(self) -> float:
        return math.inf


@dataclass(frozen=True)
class GeometricTail:
    rho: float

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")

    def coefficient(self, steps: int) -> float:
        """``sum_{s=1}^{steps} ρ^s``."""
        return self.rho * (1.0 - self.rho ** steps) / (1.0 - self.rho)

    def limit_coefficient(self) -> float:
        return self.rho / (1.0 - self.rho)


TailRule = ZeroTail | ConstantTail | GeometricTail


class SequenceError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FormSequence:
    head: tuple[SesqForm, ...]
    tail: TailRule = field(default_factory=ZeroTail)

    def __post_init__(self):
        head = tuple(self.head)
        if not head:
            raise SequenceError("the head must contain at least one form")
        space = head[0].space
        tans = []
        for i, b in enumerate(head, 1):
            if not b.space.same_as(space):
                raise SequenceError("forms act in different spaces")
            s = sector_params(b, vertex=0.0)
            if not isinstance(s, SectorParams):
                raise SequenceError(f"b_{i} does not have vertex 0: {s.reason}")
            tans.append(s.tan_theta)
        object.__setattr__(self, "head", head)
        object.__setattr__(self, "_tans", tuple(tans))

    @property
    def N(self) -> int:
        return len(self.head)

    @property
    def space(self) -> HSpace:
        return self.head[0].space

    @property
    def tan_theta(self) -> float:
        """Common semi-angle bound (vertex 0) over the head; the tail reuses ``b_N``."""
        return max(self._tans)

    def form(self, n: int) -> SesqForm:
        if n < 1:
            raise ValueError("forms are indexed from 1")
        if n <= self.N:
            return self.head[n - 1]
        if isinstance(self.tail, ZeroTail):
            return zero_form(self.space.full(self.head[0].domain.tol))
        if isinstance(self.tail, ConstantTail):
            return self.head[-1]
        return SesqForm(self.head[-1].domain, self.tail.rho ** (n - self.N) * self.head[-1].matrix)

    @property
    def head_sum(self) -> SesqForm:
        a = self.head[0]
        for b in self.head[1:]:
            a = add(a, b)
        return a


def _partial_head(seq: FormSequence, n: int) -> SesqForm:
    a = seq.head[0]
    for b in seq.head[1:n]:
        a = add(a, b)
    return a


def partial_sum(seq: FormSequence, n: int) -> SesqForm:
    """``a_n = b_1 + ... + b_n`` in closed form."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if n <= seq.N:
        return _partial_head(seq, n)
    aN = seq.head_sum
    c = seq.tail.coefficient(n - seq.N)
    if c == 0.0:
        return aN
    bN = restrict(seq.head[-1], aN.domain)
    return SesqForm(aN.domain, aN.matrix + c * bN.matrix)


def partial_sum_graphs(seq: FormSequence, n: int) -> list[LinearRelation]:
    return [graph_of_closed_form(partial_sum(seq, k)) for k in range(1, n + 1)]


def constant_tail_domain(aN: SesqForm, bN: SesqForm) -> Subspace:
    """``{u ∈ D(a_N) : Re b_N(u) = 0}``."""
    R = hermitian_parts(restrict(bN, aN.domain).matrix)[0]
    if R.shape[0] == 0:
        return aN.domain
    w, Q = np.linalg.eigh(R)
    scale = max(np.abs(w).max(), 1e-300)
    Z = Q[:, w <= aN.domain.tol * scale] if np.abs(w).max() > 0 else Q
    return orthonormalize(aN.domain.basis @ Z, aN.space, aN.domain.tol, scale=1.0)


def limit_form(seq: FormSequence) -> SesqForm:
    aN = seq.head_sum
    if isinstance(seq.tail, ZeroTail):
        return aN
    if isinstance(seq.tail, GeometricTail):
        bN = restrict(seq.head[-1], aN.domain)
        return SesqForm(aN.domain, aN.matrix + seq.tail.limit_coefficient() * bN.matrix)
    a_inf = restrict(aN, constant_tail_domain(aN, seq.head[-1]))
    # on the kernel of Re b_N the restriction may be pure rounding; its own norm gives no scale
    ref = float(np.linalg.norm(aN.matrix, 2)) if aN.domain.dim else 0.0
    if a_inf.domain.dim and np.linalg.norm(a_inf.matrix, 2) <= aN.domain.tol * ref:
        return zero_form(a_inf.domain)
    return a_inf


def resolvent_at_minus_one(A: LinearRelation) -> np.ndarray:
    """``(A + I)^{-1}``."""
    return resolvent(A, -1.0)


def limit_graph_and_convergence(seq: FormSequence, schedule, probes: np.ndarray | None = None,
                                **metadata) -> tuple[LinearRelation, ConvergenceReport]:
    """``A_∞`` and the strong resolvent errors ``|(A_n+I)^{-1}f - (A_∞+I)^{-1}f|``.

    ``metadata['bound_slack']`` holds the smallest slack of the a-priori bounds
    ``|u_n| <= |f|`` and ``Re a_n(u_n) <= |f|^2`` for ``u_n = (A_n+I)^{-1} f``.
    """
    space = seq.space
    probes = probe_vectors(space.dim) if probes is None else probes
    A_inf = graph_of_closed_form(limit_form(seq))
    R_inf = resolvent_at_minus_one(A_inf)
    errs, slack = [], math.inf
    fnorm2 = np.real(np.einsum("ij,ij->j", probes.conj(), space.G @ probes))
    for n in schedule:
        a_n = partial_sum(seq, n)
        U = resolvent_at_minus_one(graph_of_closed_form(a_n)) @ probes
        errs.append(strong_error(U, R_inf @ probes, np.eye(probes.shape[1]), space))
        unorm2 = np.real(np.einsum("ij,ij->j", U.conj(), space.G @ U))
        C = a_n.domain.coords(U)
        re_a = np.real(np.einsum("ij,ij->j", C.conj(), a_n.matrix @ C))
        slack = min(slack, float(np.min(np.sqrt(fnorm2) - np.sqrt(unorm2))), float(np.min(fnorm2 - re_a)))
    report = ConvergenceReport.build(schedule, errs, track="resolvent", bound_slack=slack, **metadata)
    return A_inf, report


# --- the weighted tower ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Tower:
    seq: FormSequence
    domains: tuple[Subspace, ...]          # D(a_n), n = 0..N; D(a_0) = H
    grams: tuple[np.ndarray, ...]          # Gram of |.|_n in domain coordinates
    lifted: tuple[tuple[np.ndarray, ...], ...]  # lifted[n][k] = matrix of b~_{nk}, k = 0..n

    @property
    def N(self) -> int:
        return len(self.domains) - 1

    @property
    def space(self) -> HSpace:
        return self.seq.space

    def level_dim(self, n: int) -> int:
        return self.domains[n].dim

    @property
    def offsets(self) -> list[int]:
        out = [0]
        for D in self.domains:
            out.append(out[-1] + D.dim)
        return out

    @property
    def total_dim(self) -> int:
        return self.offsets[-1]

    def phi(self, n: int, m: int) -> np.ndarray:
        """``Φ_{nm}: V_n -> V_m`` (``m <= n``), the inclusion in coordinates."""
        if m > n:
            raise ValueError("Φ_{nm} needs m <= n")
        Dn, Dm = self.domains[n], self.domains[m]
        return Dm.basis.conj().T @ self.space.G @ Dn.basis

    def a_tilde(self, n: int) -> np.ndarray:
        """``ã_n = sum_{k=1}^n b~_{nk}`` on ``V_n``."""
        k = self.level_dim(n)
        return sum(self.lifted[n][1:], np.zeros((k, k), dtype=complex))

    @property
    def sum_gram(self) -> np.ndarray:
        return scipy.linalg.block_diag(*self.grams)

    def block(self, u: np.ndarray, n: int) -> np.ndarray:
        off = self.offsets
        return u[off[n]:off[n + 1]]

    def embed(self, n: int) -> np.ndarray:
        """``I_n: V_n -> W_n ⊆ V``."""
        off = self.offsets
        out = np.zeros((self.total_dim, self.level_dim(n)), dtype=complex)
        for l in range(n + 1):
            out[off[l]:off[l + 1]] = self.phi(n, l)
        return out

    def truncation(self, m: int) -> np.ndarray:
        off = self.offsets
        T = np.zeros((self.total_dim, self.total_dim))
        T[: off[m + 1], : off[m + 1]] = np.eye(off[m + 1])
        return T

    def hat_b(self, k: int) -> np.ndarray:
        """``b^_k(u, v) = b~_{kk}(π_k u, π_k v)`` as a matrix on V."""
        off = self.offsets
        out = np.zeros((self.total_dim, self.total_dim), dtype=complex)
        out[off[k]:off[k + 1], off[k]:off[k + 1]] = self.lifted[k][k]
        return out

    def hat_a(self, n: int) -> np.ndarray:
        return sum((self.hat_b(k) for k in range(1, n + 1)), np.zeros((self.total_dim,) * 2, dtype=complex))

    def j(self) -> np.ndarray:
        """``j = π_0`` followed by the coordinates of ``V_0 = H``."""
        out = np.zeros((self.space.dim, self.total_dim), dtype=complex)
        out[:, : self.level_dim(0)] = self.domains[0].basis
        return out

    def q(self, n: int, u) -> np.ndarray:
        """``q_n(u)`` for ``u ∈ D(a_n)``."""
        return self.domains[n].coords(u)

    # -- the infinite tail ---------------------------------------------------

    def _bN_top(self) -> np.ndarray:
        """Matrix of ``b_N`` on ``V_N``."""
        return self.lifted[self.N][self.N]

    def tail_space(self) -> np.ndarray:
        """Coordinates in ``V_N`` of tuples whose canonical tail lies in ``V``."""
        kN = self.level_dim(self.N)
        if not isinstance(self.seq.tail, ConstantTail):
            return np.eye(kN, dtype=complex)
        R = hermitian_parts(self._bN_top())[0]
        if kN == 0:
            return np.eye(0, dtype=complex)
        w, Q = np.linalg.eigh(R)
        scale = np.abs(w).max()
        if scale == 0:
            return Q
        return Q[:, w <= self.domains[self.N].tol * scale]

    def tail_norm2(self, uN: np.ndarray) -> float:
        """``sum_{n>N} |u_N|_{V_n}^2`` for the canonical tail ``u_n = u_N``."""
        base = float(np.real(uN.conj() @ self.grams[self.N] @ uN))
        rb = float(np.real(uN.conj() @ self._bN_top() @ uN))
        tail = self.seq.tail
        if isinstance(tail, ZeroTail):
            return base
        if isinstance(tail, GeometricTail):
            return base + 2.0 * tail.limit_coefficient() * rb
        scale = max(np.abs(self._bN_top()).max(initial=0.0), 1e-300)
        return base if abs(rb) <= self.domains[self.N].tol * scale * max(1.0, float(np.real(uN.conj() @ uN))) else math.inf

    def sup_re_a(self, element) -> float:
        """``sup_n Re ã_n(u_n)`` including the canonical tail."""
        vals = [float(np.real(element[n].conj() @ self.a_tilde(n) @ element[n])) for n in range(1, self.N + 1)]
        uN = element[self.N]
        rb = float(np.real(uN.conj() @ self._bN_top() @ uN))
        last = vals[-1] if vals else 0.0
        tail = self.seq.tail
        if isinstance(tail, GeometricTail):
            vals.append(last + tail.limit_coefficient() * max(rb, 0.0))
        elif isinstance(tail, ConstantTail) and rb > 0 and math.isinf(self.tail_norm2(uN)):
            vals.append(math.inf)
        return max(vals) if vals else 0.0

    def w_infinity(self) -> tuple[np.ndarray, np.ndarray]:
        """Basis of the truncated ``W_∞`` (as columns in V) and its Gram including the tail."""
        Z = self.tail_space()
        basis = self.embed(self.N) @ Z
        gram = basis.conj().T @ self.sum_gram @ basis
        tail = self.seq.tail
        GN = self.grams[self.N]
        tail_gram = Z.conj().T @ GN @ Z
        if isinstance(tail, GeometricTail):
            R = hermitian_parts(self._bN_top())[0]
            tail_gram = tail_gram + 2.0 * tail.limit_coefficient() * Z.conj().T @ R @ Z
        return basis, gram + tail_gram

    def a_hat_infinity(self) -> np.ndarray:
        """``â_∞`` on the truncated ``W_∞`` (coordinates of :meth:`w_infinity`)."""
        Z = self.tail_space()
        basis = self.embed(self.N) @ Z
        M = basis.conj().T @ self.hat_a(self.N) @ basis
        if isinstance(self.seq.tail, GeometricTail):
            M = M + self.seq.tail.limit_coefficient() * Z.conj().T @ self._bN_top() @ Z
        return M

    def limit_represented_form(self) -> RepresentedForm:
        basis, gram = self.w_infinity()
        dim = basis.shape[1]
        V = HSpace(dim, 0.5 * (gram + gram.conj().T)) if dim else HSpace(0)
        return RepresentedForm(self.space, V, self.j() @ basis, self.a_hat_infinity(), self.domains[0].tol)

    def limit_graph(self) -> LinearRelation:
        """Graph associated with ``(â_∞, j|_{W_∞})``."""
        return graph_of_represented_form(self.limit_represented_form())


def build_tower(seq: FormSequence, N: int | None = None) -> Tower:
    """Levels ``0..N`` of the weighted tower (``N`` defaults to the head length).

    Levels past the head are generated from the tail rule.
    """
    N = seq.N if N is None else N
    if N < seq.N:
        raise ValueError("the tower must contain the whole head")
    space = seq.space
    tol = seq.head[0].domain.tol
    full = space.full(tol)
    forms = [SesqForm(full, np.eye(space.dim, dtype=complex))] + [seq.form(n) for n in range(1, N + 1)]
    domains = [full]
    current = full
    for b in forms[1:]:
        current = add(SesqForm(current, np.zeros((current.dim,) * 2)), b).domain
        domains.append(current)
    grams, lifted = [], []
    for n, Dn in enumerate(domains):
        mats = tuple(restrict(forms[k], Dn).matrix for k in range(n + 1))
        G = sum((2.0 ** (-(n - k)) * hermitian_parts(mats[k])[0] for k in range(n + 1)),
                np.zeros((Dn.dim, Dn.dim), dtype=complex))
        grams.append(0.5 * (G + G.conj().T))
        lifted.append(mats)
    return Tower(seq, tuple(domains), tuple(grams), tuple(lifted))


@dataclass(frozen=True)
class TowerElementCheck:
    compatible: bool
    bounded: bool         # {Re ã_n(u_n)} bounded, tail included
    in_w_infinity: bool   # finite V-norm, tail included
    bound_holds: bool
    norm2: float
    bound_rhs: float

    @property
    def equivalence_holds(self) -> bool:
        return (self.compatible and self.bounded) == self.in_w_infinity


def lemma_3_3_check(tower: Tower, element, tol: float = 1e-9) -> TowerElementCheck:
    """Decide both sides of the ``W_∞`` characterisation for ``(u_0, ..., u_N)``."""
    element = [np.asarray(u, dtype=complex) for u in element]
    N = tower.N
    if len(element) != N + 1:
        raise ValueError(f"expected {N + 1} levels, got {len(element)}")
    scale = max(max((np.linalg.norm(u) for u in element), default=0.0), 1.0)
    compatible = all(
        np.linalg.norm(tower.phi(n, m) @ element[n] - element[m]) <= tol * scale
        for n in range(N + 1) for m in range(n)
    )
    head_norm2 = sum(float(np.real(u.conj() @ G @ u)) for u, G in zip(element, tower.grams))
    tail2 = tower.tail_norm2(element[N])
    sup_a = tower.sup_re_a(element)
    bounded = math.isfinite(sup_a)
    in_w = compatible and math.isfinite(tail2)
    norm2 = head_norm2 + tail2 if in_w else head_norm2
    u0n2 = float(np.real(element[0].conj() @ tower.grams[0] @ element[0]))
    rhs = 2.0 * (sup_a + u0n2)
    return TowerElementCheck(compatible, bounded, in_w, norm2 <= rhs + tol * max(rhs, 1.0), norm2, rhs)


def canonical_element(tower: Tower, u) -> list[np.ndarray]:
    """``(q_0(u), ..., q_N(u))`` for ``u ∈ D(a_N)``."""
    return [tower.q(n, u) for n in range(tower.N + 1)]


def prop_3_3_check(seq: FormSequence) -> bool:
    """``D(a_∞) ⊆ D(A_∞)``, and density of ``D(a_∞)`` forces a single-valued ``A_∞``."""
    a_inf = limit_form(seq)
    A_inf = build_tower(seq).limit_graph()
    DA = domain(A_inf)
    inclusion = all(DA.contains(a_inf.domain.basis[:, i], 1e-8) for i in range(a_inf.domain.dim))
    if a_inf.domain.dim == seq.space.dim:
        return inclusion and is_single_valued(A_inf)[0]
    return inclusion
