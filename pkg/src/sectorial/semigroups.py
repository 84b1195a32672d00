"""Semigroups generated by minus an m-sectorial graph, and product formulas."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hilbert import HSpace, matrix_exp
from .relations import (
    LinearRelation,
    NotInResolventSet,
    invert,
    is_m_sectorial,
    scale_relation,
    shift,
    single_valued_part,
)


class NotMSectorialError(ValueError):
    pass


class ProjectorViolation(ValueError):
    pass


def semigroup(A: LinearRelation, t: float, check: bool = False) -> np.ndarray:
    """``e^{-tA} = e^{-tA°} ⊕ 0`` on ``H = D(A) ⊕ D(A)^⊥``."""
    if t <= 0:
        raise ValueError("t must be positive")
    if check:
        s = is_m_sectorial(A)
        if not s:
            raise NotMSectorialError(s.reason)
    Ao, D, _ = single_valued_part(A)
    Db = D.basis
    return Db @ matrix_exp(-t * Ao) @ (Db.conj().T @ A.space.G)


def resolvent_power_approx(A: LinearRelation, t: float, n: int) -> np.ndarray:
    """``((I + (t/n) A)^{-1})^n`` computed on the graph itself."""
    if n < 1:
        raise ValueError("n must be at least 1")
    ok, R = invert(shift(scale_relation(A, t / n), 1.0))
    if not ok:
        raise NotInResolventSet("-n/t is not in the resolvent set")
    return np.linalg.matrix_power(R, n)


def check_projector(P: np.ndarray, space: HSpace, tol: float = 1e-8) -> None:
    P = np.asarray(P, dtype=complex)
    scale = max(1.0, np.abs(P).max(initial=0.0))
    if np.abs(P @ P - P).max(initial=0.0) > tol * scale:
        raise ProjectorViolation("P^2 != P")
    GP = space.G @ P
    if np.abs(GP - GP.conj().T).max(initial=0.0) > tol * scale:
        raise ProjectorViolation("P is not self-adjoint")


def trotter_product(A: LinearRelation, P: np.ndarray, t: float, n: int) -> np.ndarray:
    """``(e^{-(t/n)A} P)^n``."""
    check_projector(P, A.space)
    return np.linalg.matrix_power(semigroup(A, t / n) @ P, n)


def probe_vectors(d: int, seed: int = 0, n_random: int = 16) -> np.ndarray:
    """Canonical basis plus ``n_random`` seeded unit vectors, as columns."""
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((d, n_random)) + 1j * rng.standard_normal((d, n_random))
    Z /= np.linalg.norm(Z, axis=0)
    return np.hstack([np.eye(d, dtype=complex), Z])


def strong_error(M: np.ndarray, L: np.ndarray, probes: np.ndarray, space: HSpace | None = None) -> float:
    """``max_f |M f - L f|`` over probe columns (H-norm)."""
    D = (np.asarray(M) - np.asarray(L)) @ probes
    if space is None or space.gram is None:
        return float(np.sqrt(np.max(np.sum(np.abs(D) ** 2, axis=0), initial=0.0)))
    return float(np.sqrt(np.max(np.real(np.einsum("ij,ij->j", D.conj(), space.G @ D)), initial=0.0)))


def fit_rate(schedule, errors, floor: float = 1e-300) -> float:
    """Least-squares slope of ``log(error)`` against ``log(n)``."""
    n = np.asarray(schedule, dtype=float)
    e = np.asarray(errors, dtype=float)
    keep = e > floor
    if keep.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(n[keep]), np.log(e[keep]), 1)[0])


def _validated(schedule, errors) -> tuple[int, ...]:
    s = tuple(int(n) for n in schedule)
    if any(b <= a for a, b in zip(s, s[1:])):
        raise ValueError("schedule must be strictly increasing")
    if len(errors) != len(s):
        raise ValueError("errors and schedule differ in length")
    return s


@dataclass(frozen=True)
class ConvergenceReport:
    schedule: tuple[int, ...]
    errors: tuple[float, ...]
    fitted_rate: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        s = _validated(self.schedule, self.errors)
        object.__setattr__(self, "schedule", s)
        object.__setattr__(self, "errors", tuple(float(e) for e in self.errors))

    @classmethod
    def build(cls, schedule, errors, **metadata) -> ConvergenceReport:
        _validated(schedule, errors)
        return cls(tuple(schedule), tuple(errors), fit_rate(schedule, errors), metadata)

    @property
    def final_error(self) -> float:
        return self.errors[-1] if self.errors else math.nan


def product_formula_report(A: LinearRelation, P: np.ndarray, A_inf: LinearRelation, t: float, schedule,
                           probes: np.ndarray | None = None, **metadata) -> ConvergenceReport:
    probes = probe_vectors(A.d) if probes is None else probes
    target = semigroup(A_inf, t)
    errs = [strong_error(trotter_product(A, P, t, n), target, probes, A.space) for n in schedule]
    return ConvergenceReport.build(schedule, errs, t=t, track="product", **metadata)
