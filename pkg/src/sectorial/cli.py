"""Command-line scenario runner.

    sectorial run <config.json>
    sectorial verify [--filter ID] [--seed S] [--tol T]
    sectorial report <raw.json> --format csv|markdown

Outputs go to the config's ``output`` directory, else ``$SECTORIAL_OUTPUT_DIR``,
else ``./results``.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1
KINDS = ("series", "absorption", "example43", "kato_simon", "neumann_dirichlet")
OUTPUT_ENV = "SECTORIAL_OUTPUT_DIR"
CSV_HEADER = ("n", "t", "err_resolvent", "err_product")


class ConfigError(ValueError):
    def __init__(self, problems: dict[str, str]):
        super().__init__("; ".join(f"{k}: {v}" for k, v in problems.items()))
        self.problems = problems


class ScenarioFailure(RuntimeError):
    pass


def _default_schedule() -> list[int]:
    return [2 ** k for k in range(13)]


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    d: int = 4
    seed: int = 0
    schema: int = SCHEMA_VERSION
    name: str | None = None
    N: int = 3
    tail: str = "geometric"
    rho: float = 0.5
    weighted: bool = False
    schedule: list[int] = field(default_factory=_default_schedule)
    t_values: list[float] = field(default_factory=lambda: [1.0])
    rank_tol: float = 1e-10
    tol_conv: float = 1e-6
    output: str | None = None

    def __post_init__(self):
        problems = {}
        if self.schema != SCHEMA_VERSION:
            problems["schema"] = f"unsupported version {self.schema!r} (expected {SCHEMA_VERSION})"
        if self.kind not in KINDS:
            problems["kind"] = f"{self.kind!r} is not one of {', '.join(KINDS)}"
        if not isinstance(self.d, int) or self.d < 1:
            problems["d"] = "must be an integer >= 1"
        elif self.kind == "neumann_dirichlet" and self.d < 3:
            problems["d"] = "neumann_dirichlet needs d >= 3"
        elif self.kind == "absorption" and self.d < 2:
            problems["d"] = "absorption needs d >= 2"
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            problems["seed"] = "must be an integer in [0, 2^64)"
        if not isinstance(self.N, int) or self.N < 1:
            problems["N"] = "must be an integer >= 1"
        if self.tail not in ("zero", "constant", "geometric"):
            problems["tail"] = "must be zero, constant or geometric"
        if not 0.0 < self.rho < 1.0:
            problems["rho"] = "must lie in (0, 1)"
        s = list(self.schedule)
        if not s or any(not isinstance(n, int) or n < 1 for n in s) or any(b <= a for a, b in zip(s, s[1:])):
            problems["schedule"] = "must be a non-empty strictly increasing list of positive integers"
        if not self.t_values or any(not isinstance(t, (int, float)) or not t > 0 for t in self.t_values):
            problems["t_values"] = "must be a non-empty list of positive reals"
        for key in ("rank_tol", "tol_conv"):
            if not getattr(self, key) > 0:
                problems[key] = "must be positive"
        if problems:
            raise ConfigError(problems)

    @property
    def label(self) -> str:
        return self.name or f"{self.kind}-d{self.d}-s{self.seed}"

    @classmethod
    def from_dict(cls, data: dict) -> ScenarioConfig:
        if not isinstance(data, dict):
            raise ConfigError({"<root>": "configuration must be a JSON object"})
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError({k: "unknown key" for k in unknown})
        missing = [k for k in ("schema", "kind") if k not in data]
        if missing:
            raise ConfigError({k: "required" for k in missing})
        return cls(**data)

    @classmethod
    def load(cls, path) -> ScenarioConfig:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError({"<file>": f"invalid JSON: {exc}"}) from exc
        return cls.from_dict(data)


# --- scenarios ------------------------------------------------------------------

def _nan_rows(schedule, t_values, errors):
    return [(n, float(t), e, math.nan) for t in t_values for n, e in zip(schedule, errors)]


def _run_example43(cfg: ScenarioConfig):
    from . import generators as gen
    from .absorption import example_4_3_scenario, verify_absorption

    rng = gen.rng_for(cfg.seed)
    ex = example_4_3_scenario(cfg.d, gen.random_unit(rng, cfg.d))
    claims = ex.claims(ts=tuple(cfg.t_values))
    rows, gaps = [], []
    for t in cfg.t_values:
        rep = verify_absorption(ex.problem, ex.P1, t, cfg.schedule)
        rows.extend(rep.rows())
        gaps.append(min(rep.product.errors))
    deviations = {k: v for k, v in claims.items() if k != "no_projection_gap"}
    checks = {
        "max_deviation_from_exp_minus_t_P1": claims["semigroup"],
        "claims_hold": max(deviations.values()) <= 1e-10,
        "product_with_P1_stays_away": min(gaps) > 0.0,
        "smallest_product_error_with_P1": min(gaps),
    }
    return rows, {"claims": claims, "checks": checks, "passed": checks["claims_hold"] and checks["product_with_P1_stays_away"]}


def _absorption_checks(mismatch, rates, finals, cfg: ScenarioConfig) -> dict[str, bool]:
    return {
        "projections_agree": mismatch <= 1e-8,
        "rates_near_minus_one": all(abs(r[k] + 1.0) <= 0.25 for r in rates for k in ("resolvent", "product")),
        "final_error_within_tol_conv": max(finals) <= cfg.tol_conv,
    }


def _run_absorption(cfg: ScenarioConfig):
    from . import generators as gen
    from .absorption import projection_thm_4_1, projection_thm_4_2, verify_absorption

    rng = gen.rng_for(cfg.seed)
    p, B = gen.random_bounded_absorption(rng, cfg.d, corank=1, weighted=cfg.weighted)
    P = projection_thm_4_2(B, p)
    mismatch = float(np.abs(P - projection_thm_4_1(p)).max())
    rows, rates, finals = [], [], []
    for t in cfg.t_values:
        rep = verify_absorption(p, P, t, cfg.schedule)
        rows.extend(rep.rows())
        rates.append({"t": t, "resolvent": rep.resolvent.fitted_rate, "product": rep.product.fitted_rate})
        finals.append(max(rep.final_errors))
    checks = _absorption_checks(mismatch, rates, finals, cfg)
    return rows, {"fitted_rates": rates, "projection_mismatch": mismatch, "final_error": max(finals),
                  "bound_constants": list(p.bound_constants), "checks": checks, "passed": all(checks.values())}


def _run_neumann_dirichlet(cfg: ScenarioConfig):
    from . import generators as gen
    from .absorption import neumann_dirichlet_scenario, projection_thm_4_1, verify_absorption

    rng = gen.rng_for(cfg.seed)
    weights = rng.uniform(0.5, 2.0, cfg.d) if cfg.weighted else None
    sc = neumann_dirichlet_scenario(cfg.d, weights)
    P = sc.interior_projector
    mismatch = float(np.abs(P - projection_thm_4_1(sc.problem)).max())
    rows, rates, finals = [], [], []
    for t in cfg.t_values:
        rep = verify_absorption(sc.problem, P, t, cfg.schedule)
        rows.extend(rep.rows())
        rates.append({"t": t, "resolvent": rep.resolvent.fitted_rate, "product": rep.product.fitted_rate})
        finals.append(max(rep.final_errors))
    checks = _absorption_checks(mismatch, rates, finals, cfg)
    return rows, {"fitted_rates": rates, "interior_projector_mismatch": mismatch, "final_error": max(finals),
                  "checks": checks, "passed": all(checks.values())}


def _run_series(cfg: ScenarioConfig, hermitian: bool = False):
    from . import generators as gen
    from .series import limit_graph_and_convergence

    rng = gen.rng_for(cfg.seed)
    tail = gen.make_tail(cfg.tail, cfg.rho)
    seq = gen.random_sequence(rng, cfg.d, cfg.N, tail, hermitian=hermitian, weighted=cfg.weighted)
    _, rep = limit_graph_and_convergence(seq, cfg.schedule)
    summary = {"fitted_rate": rep.fitted_rate, "final_error": rep.final_error,
               "bound_slack": rep.metadata["bound_slack"], "tail": cfg.tail}
    if hermitian:
        rises = [b - a for a, b in zip(rep.errors, rep.errors[1:])]
        summary["largest_increase"] = max(rises, default=0.0)
    summary["passed"] = rep.final_error <= cfg.tol_conv and rep.metadata["bound_slack"] >= -1e-10
    return _nan_rows(cfg.schedule, cfg.t_values, rep.errors), summary


RUNNERS = {
    "example43": _run_example43,
    "absorption": _run_absorption,
    "neumann_dirichlet": _run_neumann_dirichlet,
    "series": _run_series,
    "kato_simon": lambda cfg: _run_series(cfg, hermitian=True),
}


# --- output --------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".16e")


def emit_report(rows, fmt: str = "csv") -> str:
    rows = list(rows)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for n, t, er, ep in rows:
            w.writerow([int(n), _fmt(t), _fmt(er), _fmt(ep)])
        return buf.getvalue()
    if fmt == "markdown":
        lines = ["| " + " | ".join(CSV_HEADER) + " |", "|" + "---|" * len(CSV_HEADER)]
        for n, t, er, ep in rows:
            lines.append(f"| {int(n)} | {_fmt(t)} | {_fmt(er)} | {_fmt(ep)} |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    return x


def output_dir(cfg: ScenarioConfig) -> Path:
    return Path(cfg.output or os.environ.get(OUTPUT_ENV) or "results")


def run_scenario(cfg: ScenarioConfig) -> dict[str, str]:
    """Run one scenario and write ``<label>.csv``, ``<label>.raw.json`` and ``<label>.summary.json``."""
    try:
        rows, summary = RUNNERS[cfg.kind](cfg)
    except ConfigError:
        raise
    except Exception as exc:
        raise ScenarioFailure(f"{cfg.kind} scenario failed: {type(exc).__name__}: {exc}") from exc
    out = output_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    paths = {k: str(out / f"{cfg.label}.{ext}") for k, ext in
             (("csv", "csv"), ("raw", "raw.json"), ("summary", "summary.json"))}
    config = dataclasses.asdict(cfg)
    config.pop("output")
    with open(paths["csv"], "w", newline="") as fh:
        fh.write(emit_report(rows, "csv"))
    raw = {"schema": SCHEMA_VERSION, "config": config, "rows": [[int(r[0]), *map(float, r[1:])] for r in rows]}
    Path(paths["raw"]).write_text(json.dumps(_jsonable(raw), sort_keys=True, indent=1) + "\n")
    Path(paths["summary"]).write_text(json.dumps(_jsonable({"config": config, **summary}), sort_keys=True, indent=1) + "\n")
    return paths


def load_raw(path) -> list[tuple]:
    data = json.loads(Path(path).read_text())
    return [(int(r[0]), *(float(x) for x in r[1:])) for r in data["rows"]]


# --- entry point ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sectorial", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario described by a JSON config")
    r.add_argument("config")
    v = sub.add_parser("verify", help="run the acceptance battery")
    v.add_argument("--filter", action="append", default=[], help="criterion id (substring match); repeatable")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--tol", type=float, default=None, help="override each criterion's primary tolerance")
    v.add_argument("--list", action="store_true", help="list criterion ids and exit")
    rep = sub.add_parser("report", help="render a raw result file")
    rep.add_argument("raw")
    rep.add_argument("--format", choices=("csv", "markdown"), default="csv")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        try:
            cfg = ScenarioConfig.load(args.config)
            paths = run_scenario(cfg)
        except ConfigError as exc:
            for k, v in exc.problems.items():
                print(f"config error: {k}: {v}", file=sys.stderr)
            return 2
        except ScenarioFailure as exc:
            print(str(exc), file=sys.stderr)
            return 1
        summary = json.loads(Path(paths["summary"]).read_text())
        for k in ("csv", "summary"):
            print(f"wrote {paths[k]}")
        print(f"passed: {summary['passed']}")
        return 0
    if args.command == "verify":
        from .acceptance import CRITERIA, run_all

        if args.list:
            for cid, (title, _) in CRITERIA.items():
                print(f"{cid:16s} {title}")
            return 0
        results = run_all(args.filter, args.seed, args.tol)
        if not results:
            print("no criterion matches the filter", file=sys.stderr)
            return 2
        width = max(len(r.cid) for r in results)
        for r in results:
            print(f"{r.cid:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.detail}")
        failed = [r.cid for r in results if not r.passed]
        if failed:
            print(f"failed: {', '.join(failed)}", file=sys.stderr)
            return 1
        return 0
    rows = load_raw(args.raw)
    sys.stdout.write(emit_report(rows, args.format))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
