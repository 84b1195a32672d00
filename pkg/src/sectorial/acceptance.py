"""The acceptance battery shared by ``sectorial verify`` and the test-suite.

Every criterion returns a :class:`CriterionResult`; none of them raises.
Brute-force oracles here use plain numpy/scipy calls (``pinv``, ``orth``,
``null_space``) rather than the package's own subspace code.
"""
from __future__ import annotations

import math
import time
import traceback
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import absorption as ab
from . import generators as gen
from .forms import SectorParams, SesqForm, evaluate, sector_cs_bound, sector_params, working_sector
from .hilbert import HSpace, Subspace, op_norm
from .relations import (
    from_pairs,
    invert,
    resolvent,
    shift,
    single_valued_part,
)
from .semigroups import fit_rate, resolvent_power_approx, semigroup, strong_error, trotter_product
from .series import (
    build_tower,
    canonical_element,
    lemma_3_3_check,
    limit_form,
    limit_graph_and_convergence,
    partial_sum,
)
from .association import graph_of_closed_form


@dataclass(frozen=True)
class CriterionResult:
    cid: str
    title: str
    passed: bool
    detail: str
    seconds: float
    metrics: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} [{self.cid}] {self.title}: {self.detail} ({self.seconds:.2f}s)"


def _pow2(lo: int, hi: int) -> list[int]:
    return [2 ** k for k in range(lo, hi + 1)]


# --- 1, 2: the explicit non-closable example --------------------------------

def _example_phis(seed: int):
    rng = gen.rng_for(seed)
    return [(d, gen.random_unit(rng, d)) for d in (2, 5, 10)]


def example43(seed: int = 0, tol: float | None = None) -> tuple[bool, str, dict]:
    tol = 1e-10 if tol is None else tol
    t0 = time.perf_counter()
    worst = {}
    for d, phi in _example_phis(seed):
        for k, v in ab.example_4_3_scenario(d, phi).claims(ts=(0.1, 1.0, 10.0)).items():
            if k != "no_projection_gap":
                worst[k] = max(worst.get(k, 0.0), v)
    elapsed = time.perf_counter() - t0
    ok = all(v <= tol for v in worst.values()) and elapsed < 1.0
    detail = f"max deviation {max(worst.values()):.2e} (tol {tol:g}), runtime {elapsed:.3f}s (limit 1s)"
    return ok, detail, dict(worst, runtime=elapsed)


def no_projection(seed: int = 0, tol: float | None = None) -> tuple[bool, str, dict]:
    """For ``P ∈ {P1, I, 0}`` the product formula stays away from ``e^{-1} P1``."""
    floor = 0.1 * abs(math.exp(-1.0) - 1.0) if tol is None else tol
    smallest = math.inf
    for d, phi in _example_phis(seed):
        ex = ab.example_4_3_scenario(d, phi)
        A = ex.A()
        target = ex.expected_semigroup(1.0)
        probes = np.eye(d, dtype=complex)
        for P in (ex.P1, np.eye(d, dtype=complex), np.zeros((d, d), dtype=complex)):
            for n in _pow2(0, 12):
                smallest = min(smallest, strong_error(trotter_product(A, P, 1.0, n), target, probes, ex.problem.H))
    return smallest >= floor, f"smallest product-formula error {smallest:.4f} >= {floor:.4f}", {"min_error": smallest}


# --- 3, 4: series limits ----------------------------------------------------

def _series_instance(seed: int, hermitian: bool = False, tails=gen.TAILS):
    rng = gen.rng_for(seed)
    d = int(rng.integers(1, 9))
    N = int(rng.integers(1, 6))
    tail = tails[seed % len(tails)]
    return gen.random_sequence(rng, d, N, tail, tan_max=math.sqrt(3.0), hermitian=hermitian,
                               weighted=bool(seed % 2))


def series_limit(seed: int = 0, tol: float | None = None, count: int = 50) -> tuple[bool, str, dict]:
    tol = 1e-6 if tol is None else tol
    t0 = time.perf_counter()
    by_tail: dict[str, list[float]] = {}
    slack = math.inf
    for i in range(count):
        seq = _series_instance(seed * 1000 + i)
        schedule = sorted(set(range(1, seq.N + 1)) | set(_pow2(0, 10)))
        _, rep = limit_graph_and_convergence(seq, schedule)
        by_tail.setdefault(type(seq.tail).__name__, []).append(rep.final_error)
        slack = min(slack, rep.metadata["bound_slack"])
    elapsed = time.perf_counter() - t0
    fails = {k: sum(e > tol for e in v) for k, v in by_tail.items()}
    worst = {k: max(v) for k, v in by_tail.items()}
    ok = not any(fails.values()) and slack >= -1e-10 and elapsed < 30.0
    parts = ", ".join(f"{k} worst {worst[k]:.1e} ({fails[k]}/{len(by_tail[k])} over)" for k in sorted(by_tail))
    return ok, f"error at n=2^10: {parts}; bound slack {slack:.1e}; runtime {elapsed:.1f}s", {
        "worst": worst, "failures": fails, "slack": slack, "runtime": elapsed}


def kato_simon(seed: int = 0, tol: float | None = None, count: int = 50) -> tuple[bool, str, dict]:
    """Increasing symmetric sequences: operator-norm resolvent errors fall monotonically."""
    tol = 1e-8 if tol is None else tol
    jitter = 1e-9
    worst_rise, worst_final = 0.0, 0.0
    for i in range(count):
        seq = _series_instance(seed * 1000 + 500 + i, hermitian=True, tails=("zero", "geometric"))
        space = seq.space
        R_inf = resolvent(graph_of_closed_form(limit_form(seq)), -1.0)
        schedule = sorted(set(range(1, seq.N + 1)) | set(_pow2(0, 10)))
        errs = [op_norm(resolvent(graph_of_closed_form(partial_sum(seq, n)), -1.0) - R_inf, space)
                for n in schedule]
        worst_rise = max(worst_rise, max((b - a for a, b in zip(errs, errs[1:])), default=0.0))
        worst_final = max(worst_final, errs[-1])
    ok = worst_rise <= jitter and worst_final <= tol
    return ok, f"largest increase {worst_rise:.1e} (jitter {jitter:g}), final error {worst_final:.1e} (tol {tol:g})", {
        "rise": worst_rise, "final": worst_final}


# --- 5: semigroup oracle -----------------------------------------------------

def semigroup_oracle(seed: int = 0, tol: float | None = None, count: int = 100) -> tuple[bool, str, dict]:
    factor = 1e-3 if tol is None else tol
    worst_slope, worst_ratio = -math.inf, 0.0
    schedule = _pow2(0, 12)
    for i in range(count):
        rng = gen.rng_for(seed * 1000 + i)
        d = int(rng.integers(1, 9))
        A = gen.random_m_sectorial(rng, d, weighted=bool(i % 2))
        Ao = single_valued_part(A)[0]
        E = semigroup(A, 1.0)
        errs = [op_norm(resolvent_power_approx(A, 1.0, n) - E, A.space) for n in schedule]
        if errs[-1] > 1e-13:
            worst_slope = max(worst_slope, fit_rate(schedule, errs))
        worst_ratio = max(worst_ratio, errs[-1] / (factor * (1.0 + op_norm(Ao) ** 2)))
    ok = worst_slope <= -0.9 and worst_ratio <= 1.0
    return ok, f"worst fitted slope {worst_slope:.3f} (<= -0.9), worst error/bound {worst_ratio:.3f} (<= 1)", {
        "slope": worst_slope, "ratio": worst_ratio}


# --- 6: bounded-B product formula ---------------------------------------------

def product_formula(seed: int = 0, tol: float | None = None, count: int = 25,
                    schedule: list[int] | None = None) -> tuple[bool, str, dict]:
    tol = 1e-6 if tol is None else tol
    schedule = _pow2(0, 12) if schedule is None else schedule
    worst_res, worst_prod, worst_proj = 0.0, 0.0, 0.0
    rates = []
    for i in range(count):
        rng = gen.rng_for(seed * 1000 + i)
        d = int(rng.integers(2, 7))
        p, B = gen.random_bounded_absorption(rng, d, corank=1, weighted=bool(i % 2))
        P41 = ab.projection_thm_4_1(p)
        P42 = ab.projection_thm_4_2(B, p)
        worst_proj = max(worst_proj, float(np.abs(P41 - P42).max()))
        rep = ab.verify_absorption(p, P42, 1.0, schedule)
        er, ep = rep.final_errors
        worst_res, worst_prod = max(worst_res, er), max(worst_prod, ep)
        rates.append((rep.resolvent.fitted_rate, rep.product.fitted_rate))
    ok = worst_res <= tol and worst_prod <= tol and worst_proj <= 1e-8
    slope = max(max(r) for r in rates)
    return ok, (f"at n={schedule[-1]}: resolvent {worst_res:.1e}, product {worst_prod:.1e} (tol {tol:g}); "
                f"slowest fitted rate {slope:.2f}; projection mismatch {worst_proj:.1e}"), {
        "resolvent": worst_res, "product": worst_prod, "projection": worst_proj, "slowest_rate": slope}


# --- 7: tower elements ----------------------------------------------------------

def _explicit_tail(seq, uN_ambient: np.ndarray, levels: int = 64) -> tuple[bool, bool, float]:
    """Iterate levels ``N+1..N+levels`` with the explicit forms: (bounded, norm finite, norm tail)."""
    N = seq.N
    re_b = [float(np.real(evaluate(seq.form(k), uN_ambient, uN_ambient))) for k in range(1, N + levels + 1)]
    u2 = float(np.real(seq.space.inner(uN_ambient, uN_ambient)))
    scale = 1.0 + u2 + sum(abs(x) for x in re_b[:N])
    a_tail = np.cumsum(re_b)[N - 1:]
    bounded = a_tail[-1] - a_tail[levels // 2] <= 1e-8 * scale
    norms = []
    for n in range(N + 1, N + levels + 1):
        norms.append(2.0 ** (-n) * u2 + sum(2.0 ** (-(n - k)) * re_b[k - 1] for k in range(1, n + 1)))
    finite = norms[-1] <= 1e-8 * scale
    return bounded, finite, float(sum(norms))


def tower(seed: int = 0, tol: float | None = None, count: int = 100) -> tuple[bool, str, dict]:
    slack_tol = -1e-10 if tol is None else -tol
    disagreements, slack = 0, math.inf
    kinds = {"limit": 0, "domain": 0, "broken": 0, "random": 0}
    for i in range(count):
        rng = gen.rng_for(seed * 1000 + 700 + i)
        seq = gen.random_sequence(rng, int(rng.integers(2, 6)), int(rng.integers(1, 4)), gen.TAILS[i % 3],
                                  weighted=bool(i % 2))
        T = build_tower(seq)
        kind = ("limit", "domain", "broken", "random")[(i // 3) % 4]
        kinds[kind] += 1
        a_inf = limit_form(seq)
        if kind == "limit" or (kind == "broken" and a_inf.domain.dim):
            D = a_inf.domain if a_inf.domain.dim else T.domains[T.N]
        else:
            D = T.domains[T.N]
        u = D.basis @ gen.complex_normal(rng, D.dim) if D.dim else np.zeros(seq.space.dim, dtype=complex)
        u = u / max(seq.space.norm(u), 1e-300)
        el = canonical_element(T, u)
        if kind == "broken":
            lvl = min(2, T.N)
            el[lvl] = el[lvl] + gen.complex_normal(rng, el[lvl].shape[0])
        elif kind == "random":
            el = [gen.complex_normal(rng, T.level_dim(n)) for n in range(T.N + 1)]
        res = lemma_3_3_check(T, el)
        # brute force: compare the ambient vectors each level represents
        amb = [T.domains[n].basis @ el[n] for n in range(T.N + 1)]
        compat = all(np.linalg.norm(amb[n] - amb[0]) <= 1e-9 * max(1.0, np.linalg.norm(amb[0]))
                     for n in range(1, T.N + 1))
        bounded, finite, _ = _explicit_tail(seq, amb[T.N])
        brute_i, brute_ii = compat and finite, compat and bounded
        if (res.compatible, res.in_w_infinity, res.compatible and res.bounded) != (compat, brute_i, brute_ii) \
                or brute_i != brute_ii:
            disagreements += 1
        if res.in_w_infinity:
            slack = min(slack, res.bound_rhs - res.norm2)
    ok = disagreements == 0 and slack >= slack_tol
    return ok, f"{disagreements} disagreements with brute force over {count} elements {kinds}; bound slack {slack:.1e}", {
        "disagreements": disagreements, "slack": slack}


# --- 8: graph algebra ------------------------------------------------------------

def _graph_projector(space: HSpace, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto span{(x, y)} computed with ``scipy.linalg.orth`` in whitened coordinates."""
    L = np.linalg.cholesky(space.G)
    W = np.vstack([L.conj().T @ X, L.conj().T @ Y])
    Q = scipy.linalg.orth(W, rcond=1e-10) if W.shape[1] else np.zeros((W.shape[0], 0))
    return Q @ Q.conj().T


def _relation_projector(A) -> np.ndarray:
    return _graph_projector(A.space, A.X, A.Y)


def graph_algebra(seed: int = 0, tol: float | None = None, count: int = 500) -> tuple[bool, str, dict]:
    tol = 1e-9 if tol is None else tol
    worst = {"shift": 0.0, "invert": 0.0, "resolvent": 0.0, "identity": 0.0}
    flag_mismatch = 0
    for i in range(count):
        rng = gen.rng_for(seed * 100000 + i)
        d = int(rng.integers(1, 7))
        space = gen.random_space(rng, d, weighted=bool(i % 2))
        r = d if i % 3 == 0 else int(rng.integers(0, 2 * d + 1))
        Xp, Yp = gen.complex_normal(rng, d, r), gen.complex_normal(rng, d, r)
        if r and i % 3 == 2:
            Xp[:, rng.random(r) < 0.3] = 0.0
        A = from_pairs(space, Xp, Yp)
        lam = complex(*rng.standard_normal(2)) * 2.0
        S = shift(A, lam)
        worst["shift"] = max(worst["shift"], float(np.abs(_relation_projector(S) - _graph_projector(space, Xp, Yp + lam * Xp)).max(initial=0.0)))
        ok, R = invert(A)
        rank_y = np.linalg.matrix_rank(Yp) if r else 0
        rank_xy = np.linalg.matrix_rank(np.vstack([Xp, Yp])) if r else 0
        brute_ok = rank_y == d and rank_xy == d
        if ok != brute_ok:
            flag_mismatch += 1
        elif ok:
            Rb = Xp @ np.linalg.pinv(Yp)
            worst["invert"] = max(worst["invert"], float(np.abs(R - Rb).max() / max(1.0, np.abs(Rb).max())))
        # resolvents of an m-sectorial graph and the resolvent identity
        M = gen.random_m_sectorial(rng, d, weighted=bool(i % 2))
        Xm, Ym = M.X, M.Y
        lam, mu = -1.0 - 2.0 * rng.random() + 1j * rng.standard_normal(), -1.5 + 1j * rng.standard_normal()
        gamma = working_sector_of(M)
        lam, mu = lam + min(gamma, 0.0) - 1.0, mu + min(gamma, 0.0) - 1.0
        Rl, Rm = resolvent(M, lam), resolvent(M, mu)
        Rb = Xm @ np.linalg.pinv(Ym - lam * Xm)
        worst["resolvent"] = max(worst["resolvent"], float(np.abs(Rl - Rb).max() / max(1.0, np.abs(Rb).max())))
        lhs, rhs = Rl - Rm, (lam - mu) * Rl @ Rm
        worst["identity"] = max(worst["identity"], float(np.abs(lhs - rhs).max() / max(1.0, np.abs(rhs).max())))
    ok = (flag_mismatch == 0 and max(worst["shift"], worst["invert"], worst["resolvent"]) <= tol
          and worst["identity"] <= 1e-8)
    return ok, (f"shift {worst['shift']:.1e}, invert {worst['invert']:.1e}, resolvent {worst['resolvent']:.1e} "
                f"(tol {tol:g}); identity {worst['identity']:.1e} (tol 1e-8); invertibility mismatches {flag_mismatch}"), dict(
        worst, mismatches=flag_mismatch)


def working_sector_of(A) -> float:
    """Bottom of the real part of ``A°`` (0 for an empty domain)."""
    Ao = single_valued_part(A)[0]
    if Ao.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(0.5 * (Ao + Ao.conj().T))[0])


# --- 9: sector calculus ----------------------------------------------------------

def _same_sector(s, t, tol: float) -> bool:
    if isinstance(s, SectorParams) != isinstance(t, SectorParams):
        return False
    if not isinstance(s, SectorParams):
        return True
    return (abs(s.vertex - t.vertex) <= tol * max(1.0, abs(s.vertex))
            and abs(s.tan_theta - t.tan_theta) <= tol * max(1.0, s.tan_theta))


def sector_calculus(seed: int = 0, tol: float | None = None, count: int = 200) -> tuple[bool, str, dict]:
    tol = 1e-10 if tol is None else tol
    worst_cs, worst_range, variant = -math.inf, -math.inf, 0
    for i in range(count):
        rng = gen.rng_for(seed * 100000 + 50000 + i)
        d = int(rng.integers(1, 7))
        space = gen.random_space(rng, d, weighted=bool(i % 2))
        k = int(rng.integers(1, d + 1))
        b = gen.random_vertex0_form(rng, space, k, tan_max=float(rng.uniform(0.0, 3.0)),
                                    rank=int(rng.integers(0, k + 1)), hermitian=(i % 5 == 0))
        s0 = sector_params(b, vertex=0.0)
        if not isinstance(s0, SectorParams):
            worst_cs = math.inf
            continue
        scale = max(1.0, float(np.abs(b.matrix).max()))
        for _ in range(10):
            u = b.domain.basis @ gen.complex_normal(rng, k)
            v = b.domain.basis @ gen.complex_normal(rng, k)
            lhs, rhs = sector_cs_bound(b, u, v)
            worst_cs = max(worst_cs, (lhs - rhs) / (scale * space.norm(u) * space.norm(v)))
            z = evaluate(b, u, u)
            worst_range = max(worst_range, (abs(z.imag) - s0.tan_theta * z.real) / (scale * space.norm(u) ** 2))
        # basis invariance of the sector parameters of an arbitrary form
        a = gen.random_matrix_form(rng, space, k) if i % 2 else b
        Q = np.linalg.qr(gen.complex_normal(rng, k, k))[0]
        a2 = SesqForm(Subspace(space, a.domain.basis @ Q, a.domain.tol), Q.conj().T @ a.matrix @ Q)
        for f in (lambda x: sector_params(x), lambda x: working_sector(x), lambda x: sector_params(x, vertex=0.0)):
            if not _same_sector(f(a), f(a2), 1e-8):
                variant += 1
    ok = worst_cs <= tol and worst_range <= tol and variant == 0
    return ok, (f"worst bound excess {worst_cs:.1e}, worst numerical-range excess {worst_range:.1e} (tol {tol:g}); "
                f"basis-dependent sector parameters {variant}"), {
        "cs": worst_cs, "range": worst_range, "variant": variant}


# --- 10: CLI determinism ----------------------------------------------------------

def cli_determinism(seed: int = 0, tol: float | None = None) -> tuple[bool, str, dict]:
    import tempfile
    from pathlib import Path

    from .cli import ScenarioConfig, run_scenario

    outs = []
    for _ in range(2):
        with tempfile.TemporaryDirectory() as tmp:
            cfg = ScenarioConfig(kind="example43", d=3, seed=seed, output=str(Path(tmp) / "out"))
            paths = run_scenario(cfg)
            outs.append(Path(paths["csv"]).read_bytes())
    same = outs[0] == outs[1]
    return same, f"two runs {'byte-identical' if same else 'differ'} ({len(outs[0])} bytes)", {"bytes": len(outs[0])}


CRITERIA = {
    "example43": ("exact reproduction of the non-closable example", example43),
    "no_projection": ("no projection reproduces the example's semigroup", no_projection),
    "series_limit": ("strong resolvent limit of form series", series_limit),
    "kato_simon": ("monotone convergence for increasing symmetric forms", kato_simon),
    "semigroup": ("resolvent powers approximate the semigroup", semigroup_oracle),
    "product_formula": ("bounded-B absorption and its product formula", product_formula),
    "tower": ("tower elements: compatibility, boundedness and norm bound", tower),
    "graph_algebra": ("shift, inverse and resolvent of relations", graph_algebra),
    "sector": ("sector Cauchy-Schwarz bound and basis invariance", sector_calculus),
    "cli_determinism": ("byte-identical scenario output", cli_determinism),
}


def run_criterion(cid: str, seed: int = 0, tol: float | None = None) -> CriterionResult:
    title, fn = CRITERIA[cid]
    t0 = time.perf_counter()
    try:
        ok, detail, metrics = fn(seed=seed, tol=tol)
    except Exception as exc:  # a crash is a failure, reported with its cause
        ok, detail, metrics = False, f"raised {type(exc).__name__}: {exc}", {"traceback": traceback.format_exc()}
    return CriterionResult(cid, title, bool(ok), detail, time.perf_counter() - t0, metrics)


def run_all(filters=None, seed: int = 0, tol: float | None = None) -> list[CriterionResult]:
    ids = [c for c in CRITERIA if not filters or any(f in c for f in filters)]
    return [run_criterion(c, seed, tol) for c in ids]
