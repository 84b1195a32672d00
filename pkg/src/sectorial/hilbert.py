"""Finite-dimensional complex Hilbert spaces and their subspaces.

Inner products follow the convention ``(u, v) = v^* G u``: linear in the
first slot, conjugate-linear in the second.  ``G`` is the identity unless a
Gram matrix is attached to the space.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

DEFAULT_TOL = 1e-10


class AmbientMismatch(ValueError):
    """Raised when two objects live in different Hilbert spaces."""


@dataclass(frozen=True, eq=False)
class HSpace:
    """``C^dim`` with the inner product ``(u, v) = v^* G u``."""

    dim: int
    gram: np.ndarray | None = None

    def __post_init__(self):
        if self.dim < 0:
            raise ValueError("dimension must be non-negative")
        if self.gram is not None:
            G = np.asarray(self.gram, dtype=complex)
            if G.shape != (self.dim, self.dim):
                raise ValueError(f"Gram matrix has shape {G.shape}, expected ({self.dim}, {self.dim})")
            if not np.allclose(G, G.conj().T, atol=1e-12 * max(1.0, np.abs(G).max(initial=0.0))):
                raise ValueError("Gram matrix is not Hermitian")
            G = 0.5 * (G + G.conj().T)
            if self.dim and np.linalg.eigvalsh(G).min() <= 0:
                raise ValueError("Gram matrix is not positive definite")
            object.__setattr__(self, "gram", G)

    @property
    def G(self) -> np.ndarray:
        if self.gram is None:
            return np.eye(self.dim, dtype=complex)
        return self.gram

    @cached_property
    def _chol(self) -> np.ndarray:
        # G = L L^*; L^* maps to coordinates where the inner product is standard.
        return np.linalg.cholesky(self.G)

    def whiten(self, X: np.ndarray) -> np.ndarray:
        """Coordinates in which the inner product becomes the standard one."""
        if self.gram is None:
            return np.asarray(X, dtype=complex)
        return self._chol.conj().T @ X

    def unwhiten(self, Y: np.ndarray) -> np.ndarray:
        if self.gram is None:
            return np.asarray(Y, dtype=complex)
        return scipy.linalg.solve_triangular(self._chol.conj().T, Y, lower=False)

    def inner(self, u, v) -> complex:
        u = np.asarray(u, dtype=complex)
        v = np.asarray(v, dtype=complex)
        return complex(v.conj() @ (self.G @ u))

    def norm(self, u) -> float:
        return float(np.sqrt(max(self.inner(u, u).real, 0.0)))

    def adjoint(self, M: np.ndarray) -> np.ndarray:
        """Adjoint of ``M`` with respect to the inner product: ``G^{-1} M^* G``."""
        if self.gram is None:
            return M.conj().T
        return np.linalg.solve(self.G, M.conj().T @ self.G)

    def same_as(self, other: HSpace) -> bool:
        if self is other:
            return True
        return self.dim == other.dim and np.allclose(self.G, other.G)

    def full(self, tol: float = DEFAULT_TOL) -> Subspace:
        return Subspace(self, self.unwhiten(np.eye(self.dim, dtype=complex)), tol)

    def zero(self, tol: float = DEFAULT_TOL) -> Subspace:
        return Subspace(self, np.zeros((self.dim, 0), dtype=complex), tol)


@dataclass(frozen=True, eq=False)
class Subspace:
    """A subspace given by a ``G``-orthonormal basis (``d x k``)."""

    space: HSpace
    basis: np.ndarray
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=complex).reshape(self.space.dim, -1)
        object.__setattr__(self, "basis", B)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def ambient_dim(self) -> int:
        return self.space.dim

    def coords(self, u) -> np.ndarray:
        """Coordinates of the orthogonal projection of ``u`` in the basis."""
        return self.basis.conj().T @ (self.space.G @ np.asarray(u, dtype=complex))

    def contains(self, u, tol: float | None = None) -> bool:
        tol = self.tol if tol is None else tol
        u = np.asarray(u, dtype=complex)
        if u.ndim == 1:
            u = u[:, None]
        residual = u - self.basis @ self.coords(u)
        norms = np.sqrt(np.abs(np.einsum("ij,ij->j", residual.conj(), self.space.G @ residual)))
        scale = np.sqrt(np.abs(np.einsum("ij,ij->j", u.conj(), self.space.G @ u)))
        return bool(np.all(norms <= tol * scale))

    def gram_error(self) -> float:
        B = self.basis
        return float(np.abs(B.conj().T @ self.space.G @ B - np.eye(self.dim)).max(initial=0.0))


def orthonormalize(vectors, space: HSpace, tol: float = DEFAULT_TOL, *, scale: float | None = None) -> Subspace:
    """G-orthonormal basis of the span of ``vectors``.

    ``vectors`` is either a ``d x n`` matrix (columns) or a sequence of
    length-``d`` vectors.  Singular values below ``tol * s_max`` are dropped;
    with ``scale`` given the threshold is ``tol * max(s_max, scale)``, which
    keeps numerically-zero blocks from being promoted to full rank.
    """
    d = space.dim
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        V = vectors.astype(complex)
    else:
        vecs = [np.asarray(v, dtype=complex).ravel() for v in vectors]
        for v in vecs:
            if v.shape != (d,):
                raise ValueError(f"vector of length {v.shape[0]} in a space of dimension {d}")
        V = np.column_stack(vecs) if vecs else np.zeros((d, 0), dtype=complex)
    if V.shape[0] != d:
        raise ValueError(f"vectors have length {V.shape[0]}, expected {d}")
    if V.shape[1] == 0:
        return space.zero(tol)
    W = space.whiten(V)
    U, s, _ = np.linalg.svd(W, full_matrices=False)
    smax = s[0] if s.size else 0.0
    ref = smax if scale is None else max(smax, scale)
    keep = s > tol * ref if ref > 0 else np.zeros_like(s, dtype=bool)
    return Subspace(space, space.unwhiten(U[:, keep]), tol)


def projector(S: Subspace) -> np.ndarray:
    """G-orthogonal projector onto ``S``: ``P x = sum_i (x, b_i) b_i``."""
    B = S.basis
    return B @ (B.conj().T @ S.space.G)


def _check_same(S: Subspace, T: Subspace) -> None:
    if not S.space.same_as(T.space):
        raise AmbientMismatch("subspaces live in different spaces")


def ortho_complement(S: Subspace) -> Subspace:
    space = S.space
    if S.dim == 0:
        return space.full(S.tol)
    W = space.whiten(S.basis)
    U, _, _ = np.linalg.svd(W, full_matrices=True)
    return Subspace(space, space.unwhiten(U[:, S.dim:]), S.tol)


def subspace_sum(S: Subspace, T: Subspace) -> Subspace:
    _check_same(S, T)
    return orthonormalize(np.hstack([S.basis, T.basis]), S.space, S.tol, scale=1.0)


def intersect(S: Subspace, T: Subspace) -> Subspace:
    """``S ∩ T = (S^⊥ + T^⊥)^⊥``."""
    _check_same(S, T)
    return ortho_complement(subspace_sum(ortho_complement(S), ortho_complement(T)))


def same_subspace(S: Subspace, T: Subspace, tol: float = 1e-8) -> bool:
    _check_same(S, T)
    if S.dim != T.dim:
        return False
    return bool(np.abs(projector(S) - projector(T)).max(initial=0.0) <= tol)


def subspace_distance(S: Subspace, T: Subspace) -> float:
    """Largest entry of the projector difference (inf on a dimension mismatch)."""
    _check_same(S, T)
    if S.dim != T.dim:
        return np.inf
    return float(np.abs(projector(S) - projector(T)).max(initial=0.0))


def null_space(M: np.ndarray, tol: float = DEFAULT_TOL, scale: float = 0.0) -> np.ndarray:
    """Orthonormal (standard inner product) basis of ``ker M``."""
    M = np.asarray(M, dtype=complex)
    n = M.shape[1]
    if M.shape[0] == 0 or n == 0:
        return np.eye(n, dtype=complex)
    _, s, Vh = np.linalg.svd(M, full_matrices=True)
    smax = s[0] if s.size else 0.0
    thresh = tol * max(smax, scale)
    rank = int(np.sum(s > thresh)) if max(smax, scale) > 0 else 0
    return Vh[rank:].conj().T


def matrix_exp(M: np.ndarray) -> np.ndarray:
    """Matrix exponential (Padé scaling and squaring)."""
    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return M.copy()
    return scipy.linalg.expm(M)


def op_norm(M: np.ndarray, space: HSpace | None = None) -> float:
    """Operator norm of ``M: H -> H`` with respect to the ``G`` inner product."""
    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return 0.0
    if space is None or space.gram is None:
        return float(np.linalg.norm(M, 2))
    top = scipy.linalg.eigh(M.conj().T @ space.G @ M, space.G, eigvals_only=True)[-1]
    return float(np.sqrt(max(top, 0.0)))
