"""Linear relations (graphs) in a finite-dimensional Hilbert space.

A relation ``A ⊆ H × H`` is stored as an orthonormal basis of a subspace of
``C^{2d}`` whose columns stack a pair ``(x; y)``.  The Gram matrix on the
product is ``diag(G, G)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .forms import SectorParams, sector_of_matrix
from .hilbert import (
    DEFAULT_TOL,
    AmbientMismatch,
    HSpace,
    Subspace,
    null_space,
    ortho_complement,
    orthonormalize,
    subspace_distance,
)


class NotInResolventSet(ValueError):
    pass


class DecompositionFailure(ValueError):
    pass


@dataclass(frozen=True)
class NotMSectorial:
    reason: str = ""

    def __bool__(self):
        return False


def product_space(space: HSpace) -> HSpace:
    if space.gram is None:
        return HSpace(2 * space.dim)
    return HSpace(2 * space.dim, scipy.linalg.block_diag(space.G, space.G))


@dataclass(frozen=True, eq=False)
class LinearRelation:
    space: HSpace
    graph: Subspace

    @property
    def d(self) -> int:
        return self.space.dim

    @property
    def tol(self) -> float:
        return self.graph.tol

    @property
    def X(self) -> np.ndarray:
        return self.graph.basis[: self.d]

    @property
    def Y(self) -> np.ndarray:
        return self.graph.basis[self.d:]

    @property
    def dim(self) -> int:
        return self.graph.dim

    def contains(self, x, y, tol: float | None = None) -> bool:
        return self.graph.contains(np.concatenate([np.asarray(x, complex), np.asarray(y, complex)]), tol)

    @cached_property
    def _x_null(self) -> np.ndarray:
        # coefficient directions c with X c = 0, i.e. pairs (0, y)
        return null_space(self.space.whiten(self.X), self.tol, scale=1.0)


def from_pairs(space: HSpace, X: np.ndarray, Y: np.ndarray, tol: float = DEFAULT_TOL) -> LinearRelation:
    """Relation spanned by the pairs ``(X[:, i], Y[:, i])``."""
    P = product_space(space)
    X = np.asarray(X, dtype=complex).reshape(space.dim, -1)
    Y = np.asarray(Y, dtype=complex).reshape(space.dim, -1)
    return LinearRelation(space, orthonormalize(np.vstack([X, Y]), P, tol))


def from_operator(M: np.ndarray, space: HSpace | None = None, tol: float = DEFAULT_TOL) -> LinearRelation:
    M = np.asarray(M, dtype=complex)
    space = HSpace(M.shape[0]) if space is None else space
    return from_pairs(space, np.eye(space.dim), M, tol)


def multivalued_relation(space: HSpace, tol: float = DEFAULT_TOL) -> LinearRelation:
    """``{0} × H``."""
    return from_pairs(space, np.zeros((space.dim, space.dim)), np.eye(space.dim), tol)


def domain(A: LinearRelation) -> Subspace:
    return orthonormalize(A.X, A.space, A.tol, scale=1.0)


def range_(A: LinearRelation) -> Subspace:
    return orthonormalize(A.Y, A.space, A.tol, scale=1.0)


def multivalued_part(A: LinearRelation) -> Subspace:
    return orthonormalize(A.Y @ A._x_null, A.space, A.tol, scale=1.0)


def kernel(A: LinearRelation) -> Subspace:
    c = null_space(A.space.whiten(A.Y), A.tol, scale=1.0)
    return orthonormalize(A.X @ c, A.space, A.tol, scale=1.0)


def is_single_valued(A: LinearRelation) -> tuple[bool, Subspace]:
    mul = multivalued_part(A)
    return mul.dim == 0, mul


def shift(A: LinearRelation, lam: complex) -> LinearRelation:
    """``A + λI = {(x, y + λx)}``."""
    return from_pairs(A.space, A.X, A.Y + lam * A.X, A.tol)


def scale_relation(A: LinearRelation, s: complex) -> LinearRelation:
    """``sA = {(x, s y)}``."""
    return from_pairs(A.space, A.X, s * A.Y, A.tol)


def reflect(A: LinearRelation) -> LinearRelation:
    return from_pairs(A.space, A.Y, A.X, A.tol)


def invert(A: LinearRelation) -> tuple[bool, np.ndarray | LinearRelation]:
    """``(True, A^{-1})`` when ``A`` is invertible, else ``(False, reflected graph)``.

    Invertible means surjective with a single-valued reflection; closedness
    is automatic in finite dimension.
    """
    d = A.d
    Yw = A.space.whiten(A.Y)
    s = np.linalg.svd(Yw, compute_uv=False) if Yw.size else np.zeros(0)
    rank = int(np.sum(s > A.tol * max(s[0] if s.size else 0.0, 1.0)))
    surjective = rank == d
    injective_reflection = rank == A.dim
    if not (surjective and injective_reflection):
        return False, reflect(A)
    # A.dim == d and Y is invertible: A^{-1} y = X Y^{-1} y
    return True, np.linalg.solve(A.Y.T, A.X.T).T


def resolvent(A: LinearRelation, lam: complex) -> np.ndarray:
    """``(A - λI)^{-1}``."""
    ok, R = invert(shift(A, -lam))
    if not ok:
        raise NotInResolventSet(f"{lam} is not in the resolvent set")
    return R


def single_valued_part(A: LinearRelation) -> tuple[np.ndarray, Subspace, bool]:
    """``(A°, D(A), reconstructs)`` with ``A°`` in coordinates of the domain basis.

    ``reconstructs`` certifies ``A = graph(A°) ⊕ ({0} × D(A)^⊥)``; a failure
    raises :class:`DecompositionFailure`.
    """
    D = domain(A)
    Db = D.basis
    # pairs (d_i, y_i): least-squares coefficients reproduce each domain vector
    Xw = A.space.whiten(A.X)
    C = np.linalg.lstsq(Xw, A.space.whiten(Db), rcond=A.tol)[0]
    Yd = A.Y @ C
    Ao = Db.conj().T @ A.space.G @ Yd
    comp = ortho_complement(D)
    rebuilt = from_pairs(
        A.space,
        np.hstack([Db, np.zeros((A.d, comp.dim))]),
        np.hstack([Db @ Ao, comp.basis]),
        A.tol,
    )
    err = subspace_distance(rebuilt.graph, A.graph)
    if not err <= 1e-8:
        raise DecompositionFailure(f"A ≠ A° ⊕ ({{0}} × D(A)^⊥); projector mismatch {err:.3g}")
    return Ao, D, True


def operator_part(A: LinearRelation) -> tuple[np.ndarray, Subspace]:
    Ao, D, _ = single_valued_part(A)
    return Ao, D


def is_m_sectorial(A: LinearRelation) -> SectorParams | NotMSectorial:
    """Sector of ``(x, y) -> (y - γx, x)`` on ``A`` plus invertibility of ``A - (γ-1)I``.

    Uses the same canonical/fallback vertex rule as forms: the largest vertex
    when the imaginary part is dominated there, otherwise one unit below.
    """
    D = domain(A)
    mul = multivalued_part(A)
    if D.dim + mul.dim != A.dim:  # pragma: no cover - dimension identity of subspaces
        return NotMSectorial("dimension identity failed")
    # cross terms (y0, x) between multivalued and domain vectors must vanish
    cross = mul.basis.conj().T @ A.space.G @ D.basis
    if cross.size and np.abs(cross).max() > 1e-8:
        return NotMSectorial("multivalued part is not orthogonal to the domain")
    if A.dim != A.d:
        return NotMSectorial("graph is not maximal (A - λI cannot be surjective)")
    try:
        Ao, _, _ = single_valued_part(A)
    except DecompositionFailure as exc:
        return NotMSectorial(str(exc))
    s = sector_of_matrix(Ao, tol=A.tol)
    if not isinstance(s, SectorParams):
        gamma = float(np.linalg.eigvalsh(0.5 * (Ao + Ao.conj().T))[0])
        s = sector_of_matrix(Ao, vertex=gamma - 1.0, tol=A.tol)
        if not isinstance(s, SectorParams):  # pragma: no cover
            return NotMSectorial(s.reason)
    ok, _ = invert(shift(A, -(s.vertex - 1.0)))
    if not ok:
        return NotMSectorial("A - (γ-1)I is not invertible")
    return s


def same_relation(A: LinearRelation, B: LinearRelation, tol: float = 1e-8) -> bool:
    if not A.space.same_as(B.space):
        raise AmbientMismatch("relations act in different spaces")
    return subspace_distance(A.graph, B.graph) <= tol


def relation_distance(A: LinearRelation, B: LinearRelation) -> float:
    return subspace_distance(A.graph, B.graph)
