"""Seeded random instances (numpy ``default_rng``, PCG64)."""
from __future__ import annotations

import numpy as np

from .absorption import AbsorptionProblem, from_forms
from .association import graph_of_closed_form
from .forms import SesqForm
from .hilbert import HSpace, Subspace, orthonormalize
from .relations import LinearRelation
from .series import ConstantTail, FormSequence, GeometricTail, ZeroTail


def rng_for(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def complex_normal(rng: np.random.Generator, *shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_unit(rng, d: int) -> np.ndarray:
    v = complex_normal(rng, d)
    return v / np.linalg.norm(v)


def random_gram(rng, d: int, spread: float = 1.0) -> np.ndarray:
    X = complex_normal(rng, d, d)
    return np.eye(d) + spread * X @ X.conj().T / d


def random_space(rng, d: int, weighted: bool = False) -> HSpace:
    return HSpace(d, random_gram(rng, d)) if weighted else HSpace(d)


def random_subspace(rng, space: HSpace, k: int) -> Subspace:
    return orthonormalize(complex_normal(rng, space.dim, k), space, scale=1.0)


def random_psd(rng, k: int, rank: int | None = None) -> np.ndarray:
    rank = k if rank is None else rank
    X = complex_normal(rng, k, rank)
    return X @ X.conj().T / max(rank, 1)


def random_vertex0_matrix(rng, k: int, tan_max: float = 1.0, rank: int | None = None) -> np.ndarray:
    """``R + i L S L^*`` with ``R = L L^*`` and ``|S| <= tan_max``: vertex 0, ``tan θ <= tan_max``."""
    rank = k if rank is None else rank
    L = complex_normal(rng, k, rank) / np.sqrt(max(rank, 1))
    Y = complex_normal(rng, rank, rank)
    S = 0.5 * (Y + Y.conj().T)
    top = np.abs(np.linalg.eigvalsh(S)).max() if rank else 1.0
    S = S * (tan_max * rng.uniform(0.0, 1.0) / max(top, 1e-300))
    return L @ L.conj().T + 1j * L @ S @ L.conj().T


def random_matrix_form(rng, space: HSpace, k: int) -> SesqForm:
    """Arbitrary form on a random ``k``-dimensional domain."""
    return SesqForm(random_subspace(rng, space, k), complex_normal(rng, k, k))


def random_vertex0_form(rng, space: HSpace, k: int | None = None, tan_max: float = 1.0,
                        rank: int | None = None, hermitian: bool = False) -> SesqForm:
    k = space.dim if k is None else k
    D = space.full() if k == space.dim else random_subspace(rng, space, k)
    M = random_psd(rng, k, rank) if hermitian else random_vertex0_matrix(rng, k, tan_max, rank)
    return SesqForm(D, M)


def random_m_sectorial(rng, d: int, weighted: bool = False, norm: float = 2.0) -> LinearRelation:
    """Graph of a random form on a random domain (possibly all of ``H``)."""
    space = random_space(rng, d, weighted)
    k = int(rng.integers(0, d + 1))
    D = space.full() if k == d else random_subspace(rng, space, k)
    M = complex_normal(rng, k, k)
    if k:
        M *= norm / max(np.linalg.norm(M, 2), 1e-300)
    return graph_of_closed_form(SesqForm(D, M))


def random_relation(rng, d: int, weighted: bool = False) -> LinearRelation:
    """Relation spanned by random pairs, with random multivalued and kernel parts."""
    from .relations import from_pairs

    space = random_space(rng, d, weighted)
    r = int(rng.integers(0, 2 * d + 1))
    X = complex_normal(rng, d, r)
    Y = complex_normal(rng, d, r)
    if r:
        kill = rng.random(r) < 0.25
        X[:, kill] = 0.0
        dead = rng.random(r) < 0.15
        Y[:, dead] = 0.0
    return from_pairs(space, X, Y)


TAILS = ("zero", "constant", "geometric")


def make_tail(name: str, rho: float = 0.5):
    return {"zero": ZeroTail(), "constant": ConstantTail(), "geometric": GeometricTail(rho)}[name]


def random_sequence(rng, d: int, N: int, tail, tan_max: float = np.sqrt(3.0),
                    hermitian: bool = False, weighted: bool = False) -> FormSequence:
    """``N`` head forms with random domains of dimension ``>= d - 1``, vertex 0, ``tan θ <= tan_max``."""
    space = random_space(rng, d, weighted)
    head = []
    for _ in range(N):
        k = int(rng.integers(max(d - 1, 1), d + 1))
        rank = int(rng.integers(0, k + 1))
        head.append(random_vertex0_form(rng, space, k, tan_max, rank, hermitian))
    return FormSequence(tuple(head), make_tail(tail) if isinstance(tail, str) else tail)


def random_bounded_absorption(rng, d: int, corank: int = 1, tan_max: float = 1.0,
                              weighted: bool = False) -> tuple[AbsorptionProblem, np.ndarray]:
    """``a`` an accretive operator form on ``H`` and ``b(u, v) = (B u, v)`` with ``B`` of corank ``>= corank``."""
    space = random_space(rng, d, weighted)
    full = space.full()
    Ma = random_vertex0_matrix(rng, d, tan_max) + 0.1 * np.eye(d)
    rank = int(rng.integers(1, d - corank + 1))
    Mb = random_vertex0_matrix(rng, d, tan_max, rank)
    a = SesqForm(full, Ma)
    b = SesqForm(full, Mb)
    Bf = full.basis
    # (B u, v)_H = v^* G B u equals the coordinate form Mb transported to H
    W = np.linalg.inv(Bf)
    B = np.linalg.solve(space.G, W.conj().T @ Mb @ W)
    return from_forms(a, b), B
