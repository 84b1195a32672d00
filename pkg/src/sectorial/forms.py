"""Sesquilinear forms on subspaces of a finite-dimensional Hilbert space.

A form is stored in the coordinates of a G-orthonormal basis of its
domain: for ``u = B x`` and ``v = B y`` one has ``a(u, v) = y^* M x``.

Sector parameters are canonicalised to the largest vertex ``gamma`` (the
bottom of the spectrum of the Hermitian part) and, for that vertex, the
smallest semi-angle.  In finite dimension every form is sectorial for any
vertex strictly below that bottom, but at the bottom itself the imaginary
part may fail to be dominated; :func:`sector_params` then reports
:class:`NotSectorial`.  :func:`working_sector` falls back to the vertex one
unit lower, which is what the constructions downstream use.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.optimize

from .hilbert import (
    DEFAULT_TOL,
    AmbientMismatch,
    HSpace,
    Subspace,
    intersect,
)

__all__ = [
    "DomainViolation",
    "NotSectorial",
    "NotSectorialError",
    "SectorParams",
    "SesqForm",
    "Unbounded",
    "VertexError",
    "add",
    "bound_constants",
    "bound_holds",
    "evaluate",
    "form_bound_constants",
    "form_from_operator",
    "graph_norm",
    "hermitian_parts",
    "restrict",
    "scale",
    "sector_cs_bound",
    "sector_of_matrix",
    "sector_params",
    "working_sector",
    "zero_form",
]


class DomainViolation(ValueError):
    pass


class NotSectorialError(ValueError):
    pass


class VertexError(ValueError):
    """The form does not admit the requested vertex."""


@dataclass(frozen=True)
class SectorParams:
    vertex: float
    tan_theta: float

    def __post_init__(self):
        if not self.tan_theta >= 0:
            raise ValueError("tan_theta must be non-negative")

    @property
    def theta(self) -> float:
        return math.atan(self.tan_theta)

    def contains(self, z: complex, tol: float = 0.0) -> bool:
        """Whether ``z`` lies in the closed sector (vertex not subtracted)."""
        return abs(z.imag) <= self.tan_theta * z.real + tol


@dataclass(frozen=True)
class NotSectorial:
    reason: str = ""

    def __bool__(self):
        return False


@dataclass(frozen=True)
class Unbounded:
    reason: str = ""

    def __bool__(self):
        return False


def hermitian_parts(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(R, S)`` with ``M = R + iS``, both Hermitian."""
    M = np.asarray(M, dtype=complex)
    return 0.5 * (M + M.conj().T), (M - M.conj().T) / 2j


def _matrix_scale(M: np.ndarray) -> float:
    return float(np.linalg.norm(M, 2)) if M.size else 0.0


def _tan_at_vertex(R: np.ndarray, S: np.ndarray, vertex: float, tol: float, scale: float) -> float | None:
    """Minimal ``tan(theta)`` at ``vertex``, or None when none exists."""
    k = R.shape[0]
    if k == 0:
        return 0.0
    w, Q = np.linalg.eigh(R - vertex * np.eye(k))
    eps = tol * max(scale, np.finfo(float).tiny)
    if w[0] < -eps:
        return None
    null = w <= eps
    N = Q[:, null]
    if N.shape[1] and np.linalg.norm(S @ N, 2) > eps:
        # the imaginary part couples to directions with no real part
        return None
    C = Q[:, ~null]
    if C.shape[1] == 0:
        return 0.0
    d = 1.0 / np.sqrt(w[~null])
    Sc = (C.conj().T @ S @ C) * np.outer(d, d)
    return float(np.abs(np.linalg.eigvalsh(0.5 * (Sc + Sc.conj().T))).max())


def sector_of_matrix(M: np.ndarray, vertex: float | None = None, tol: float = DEFAULT_TOL) -> SectorParams | NotSectorial:
    """Sector parameters of ``x -> x^* M x`` with respect to ``|x|^2``."""
    M = np.asarray(M, dtype=complex)
    if M.shape[0] == 0:
        return SectorParams(0.0 if vertex is None else float(vertex), 0.0)
    R, S = hermitian_parts(M)
    scale = _matrix_scale(M)
    gamma = float(np.linalg.eigvalsh(R)[0])
    if vertex is None:
        vertex = gamma
    elif vertex > gamma + tol * max(scale, 1.0):
        return NotSectorial(f"vertex {vertex} exceeds the bottom {gamma} of the real part")
    vertex = float(vertex)
    t = _tan_at_vertex(R, S, vertex, tol, max(scale, 1e-300))
    if t is None:
        return NotSectorial(f"imaginary part is not dominated at vertex {vertex}")
    return SectorParams(vertex, t)


@dataclass(frozen=True, eq=False)
class SesqForm:
    domain: Subspace
    matrix: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=complex)
        k = self.domain.dim
        if M.shape != (k, k):
            raise ValueError(f"form matrix has shape {M.shape}, domain has dimension {k}")
        object.__setattr__(self, "matrix", M)

    @property
    def space(self) -> HSpace:
        return self.domain.space

    @cached_property
    def sector(self) -> SectorParams | NotSectorial:
        return sector_of_matrix(self.matrix, tol=self.domain.tol)

    @cached_property
    def vertex_max(self) -> float:
        """Bottom of the real part: every valid vertex is at most this."""
        if self.domain.dim == 0:
            return 0.0
        return float(np.linalg.eigvalsh(hermitian_parts(self.matrix)[0])[0])

    def __call__(self, u, v=None) -> complex:
        return evaluate(self, u, u if v is None else v)

    def operator(self) -> np.ndarray:
        """Ambient ``d x d`` matrix of the associated operator ``B M B^* G``."""
        B = self.domain.basis
        return B @ self.matrix @ (B.conj().T @ self.space.G)


def form_from_operator(T: np.ndarray, domain: Subspace) -> SesqForm:
    """The form ``(u, v) -> (T u, v)_H`` restricted to ``domain``."""
    B = domain.basis
    return SesqForm(domain, B.conj().T @ domain.space.G @ np.asarray(T, dtype=complex) @ B)


def zero_form(domain: Subspace) -> SesqForm:
    return SesqForm(domain, np.zeros((domain.dim, domain.dim), dtype=complex))


def _domain_coords(a: SesqForm, u) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape[0] != a.space.dim:
        raise AmbientMismatch(f"vector of length {u.shape[0]} for a form on C^{a.space.dim}")
    if not a.domain.contains(u):
        raise DomainViolation("vector is not in the form domain")
    return a.domain.coords(u)


def evaluate(a: SesqForm, u, v) -> complex:
    x = _domain_coords(a, u)
    y = _domain_coords(a, v)
    return complex(y.conj() @ a.matrix @ x)


def sector_params(a: SesqForm, vertex: float | None = None) -> SectorParams | NotSectorial:
    if vertex is None:
        return a.sector
    return sector_of_matrix(a.matrix, vertex=vertex, tol=a.domain.tol)


def working_sector(a: SesqForm) -> SectorParams:
    """Canonical sector, or the one at ``vertex_max - 1`` when that fails."""
    s = a.sector
    if isinstance(s, SectorParams):
        return s
    s = sector_of_matrix(a.matrix, vertex=a.vertex_max - 1.0, tol=a.domain.tol)
    if not isinstance(s, SectorParams):  # pragma: no cover - strictly positive real part below the bottom
        raise NotSectorialError(s.reason)
    return s


def _transfer(src: Subspace, dst: Subspace) -> np.ndarray:
    """Coordinates in ``src``'s basis of ``dst``'s basis vectors (``dst ⊆ src``)."""
    return src.basis.conj().T @ src.space.G @ dst.basis


def restrict(a: SesqForm, S: Subspace) -> SesqForm:
    T = _transfer(a.domain, S)
    return SesqForm(S, T.conj().T @ a.matrix @ T)


def add(a: SesqForm, b: SesqForm) -> SesqForm:
    if not a.space.same_as(b.space):
        raise AmbientMismatch("forms act in different spaces")
    W = intersect(a.domain, b.domain)
    Ta = _transfer(a.domain, W)
    Tb = _transfer(b.domain, W)
    return SesqForm(W, Ta.conj().T @ a.matrix @ Ta + Tb.conj().T @ b.matrix @ Tb)


def scale(a: SesqForm, s: float) -> SesqForm:
    if s < 0:
        raise ValueError("scale factor must be non-negative")
    return SesqForm(a.domain, s * a.matrix)


def graph_norm(a: SesqForm, u) -> float:
    x = _domain_coords(a, u)
    gamma = working_sector(a).vertex
    val = (x.conj() @ a.matrix @ x).real + (1.0 - gamma) * float(np.vdot(x, x).real)
    return math.sqrt(max(val, 0.0))


def sector_cs_bound(b: SesqForm, u, v) -> tuple[float, float]:
    """``|b(u,v)|`` and ``(1 + tan θ) (Re b(u))^½ (Re b(v))^½`` for a vertex-0 form."""
    s = sector_params(b, vertex=0.0)
    if not isinstance(s, SectorParams):
        raise VertexError(f"form does not have vertex 0: {s.reason}")
    lhs = abs(evaluate(b, u, v))
    ru = max(evaluate(b, u, u).real, 0.0)
    rv = max(evaluate(b, v, v).real, 0.0)
    return lhs, (1.0 + s.tan_theta) * math.sqrt(ru) * math.sqrt(rv)


# --- relative form bounds |b(u)| <= c1 Re a(u) + c2 |u|^2 -------------------

def _phase_hermitian(Mb: np.ndarray, phi: float) -> np.ndarray:
    X = np.exp(-1j * phi) * Mb
    return 0.5 * (X + X.conj().T)


def _max_over_phase(f, n_grid: int = 72) -> float:
    grid = np.linspace(0.0, 2 * np.pi, n_grid, endpoint=False)
    vals = np.array([f(p) for p in grid])
    i = int(np.argmax(vals))
    h = grid[1] - grid[0]
    res = scipy.optimize.minimize_scalar(lambda p: -f(p), bounds=(grid[i] - h, grid[i] + h), method="bounded",
                                         options={"xatol": 1e-12})
    return float(max(vals[i], -res.fun))


def _min_c2(Mb, Ra, K, c1, tol) -> float:
    """Smallest ``c2`` with ``herm(e^{-iφ} Mb) <= c1 Ra + c2 K`` for all φ."""
    scale = max(_matrix_scale(Mb), _matrix_scale(Ra), _matrix_scale(K), 1e-300)
    wK, QK = np.linalg.eigh(K)
    pos = wK > tol * scale
    if pos.all():
        Li = QK / np.sqrt(wK)
        f = lambda p: np.linalg.eigvalsh(Li.conj().T @ (_phase_hermitian(Mb, p) - c1 * Ra) @ Li)[-1]
        return _max_over_phase(f) + 1e-12 * scale

    # K singular: bisection on the feasibility of c1 Ra + c2 K - H_phi >= 0.
    def margin(c2):
        return -_max_over_phase(lambda p: -np.linalg.eigvalsh(c1 * Ra + c2 * K - _phase_hermitian(Mb, p))[0])

    if margin(1e8 * scale) < -tol * scale:
        return math.inf
    lo, hi = -1e8 * scale, 1e8 * scale
    if margin(lo) >= -tol * scale:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if margin(mid) >= -tol * scale:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-12 * scale:
            break
    return hi


def bound_constants(Mb: np.ndarray, Ra: np.ndarray, K: np.ndarray, tol: float = DEFAULT_TOL):
    """Near-minimal ``(c1, c2)`` with ``|x^* Mb x| <= c1 x^* Ra x + c2 x^* K x``.

    ``c1`` is chosen by a line search minimising ``c1 + c2``; ``c2`` is the
    smallest feasible value for that ``c1``.
    """
    Mb, Ra, K = (np.asarray(X, dtype=complex) for X in (Mb, Ra, K))
    if Mb.shape[0] == 0 or _matrix_scale(Mb) == 0:
        return 0.0, 0.0
    ratio = _matrix_scale(Mb) / max(_matrix_scale(Ra), 1e-300)
    best = None
    for c1 in np.concatenate([[0.0], ratio * np.logspace(-4, 4, 33)]):
        c2 = _min_c2(Mb, Ra, K, c1, tol)
        if not math.isfinite(c2):
            continue
        c2 = max(c2, 0.0)
        if best is None or c1 + c2 < best[0] + best[1]:
            best = (float(c1), float(c2))
    if best is None:
        return Unbounded("real part of a and the norm share a null direction on which b does not vanish")
    return best


def bound_holds(Mb, Ra, K, c1: float, c2: float, tol: float = 1e-9) -> bool:
    Q = c1 * np.asarray(Ra) + c2 * np.asarray(K)
    scale = max(_matrix_scale(np.asarray(Mb)), _matrix_scale(Q), 1.0)
    margin = -_max_over_phase(lambda p: -np.linalg.eigvalsh(Q - _phase_hermitian(np.asarray(Mb), p))[0], 360)
    return margin >= -tol * scale


def form_bound_constants(a: SesqForm, b: SesqForm, tol: float = DEFAULT_TOL):
    """Constants with ``|b(u)| <= c1 Re a(u) + c2 |u|^2`` on ``D(a) = D(b)``."""
    if not a.space.same_as(b.space):
        raise AmbientMismatch("forms act in different spaces")
    if a.domain.dim != b.domain.dim or not all(a.domain.contains(b.domain.basis[:, [i]]) for i in range(b.domain.dim)):
        raise DomainViolation("D(a) and D(b) differ")
    Mb = restrict(b, a.domain).matrix
    Ra = hermitian_parts(a.matrix)[0]
    return bound_constants(Mb, Ra, np.eye(a.domain.dim), tol)
