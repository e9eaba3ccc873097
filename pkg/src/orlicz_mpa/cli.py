"""Command-line entry point.

    python -m orlicz_mpa check <config>
    python -m orlicz_mpa solve <config>
    python -m orlicz_mpa sweep <config>
    python -m orlicz_mpa verify <config> <solution> [<solution_v>]
    python -m orlicz_mpa cutoff-table <kind> <delta>
    python -m orlicz_mpa nfun-report <config>

Exit codes: 0 success, 1 hypothesis (or verification) failure, 2 solver
non-convergence, 3 configuration error. Sweep rows run in a process pool
whose size comes from ORLICZ_MPA_THREADS (default 1) and are written in
lambda order.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .config import ConfigError, RunConfig, load_config, resolve
from .cutoff import KINDS, CutoffFamily, cutoff_table, verify_cutoff
from .field import load, orlicz_sobolev_norm, save
from .moser import ExponentError, moser_ladder
from .mpa import NoValley, PathCollapse, SolverResult, run_mountain_pass
from .nfunction import HypothesisFailure, complement, sobolev_conjugate, verify_kernel_hypotheses
from .nonlinearity import check_h2, check_hypotheses

log = logging.getLogger("orlicz_mpa")

EXIT_OK, EXIT_HYPOTHESIS, EXIT_NONCONVERGED, EXIT_CONFIG = 0, 1, 2, 3
THREADS_ENV = "ORLICZ_MPA_THREADS"

# frozen column order of the sweep table
SWEEP_COLUMNS = ("lambda", "level", "norm_u", "norm_v", "sup_norm", "F_equals_Ftilde",
                 "ladder", "converged", "residual", "iterations", "error")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


@dataclass
class SolveOutcome:
    lam: float
    result: Optional[SolverResult]
    norm_u: Optional[float]
    norm_v: Optional[float]
    ladder: str
    f_equals_ftilde: Optional[bool]
    error: str = ""

    def row(self) -> dict:
        r = self.result
        return {
            "lambda": self.lam,
            "level": None if r is None else r.level,
            "norm_u": self.norm_u,
            "norm_v": self.norm_v,
            "sup_norm": None if r is None else r.sup_norm,
            "F_equals_Ftilde": self.f_equals_ftilde,
            "ladder": self.ladder,
            "converged": False if r is None else r.converged,
            "residual": None if r is None else r.residual_sup,
            "iterations": None if r is None else r.iterations,
            "error": self.error,
        }


def ladder_verdict(res, fields, r_values, lam, norms) -> str:
    """'sound' when every component's ladder bound covers its sup norm."""
    out = []
    for f, ip, r, nrm in zip(fields, res.indices, r_values, norms):
        try:
            led = moser_ladder(f, ip, r, lam, nrm)
        except ExponentError as exc:
            return f"n/a ({exc})"
        out.append(led.sound)
    return "sound" if all(out) else "violated"


def solve_instance(cfg: RunConfig, lam: float, keep_fields: bool = False) -> SolveOutcome:
    """Solve at one lambda and compute the per-row diagnostics."""
    res = resolve(cfg)
    grid = cfg.grid.build()
    try:
        p = res.problem(grid, lam)
        sol = run_mountain_pass(p, cfg.solver)
    except (NoValley, PathCollapse) as exc:
        return SolveOutcome(lam, None, None, None, "n/a", None, f"{type(exc).__name__}: {exc}")
    fields = [sol.u] + ([sol.v] if sol.v is not None else [])
    norms = [orlicz_sobolev_norm(f, nf) for f, nf in zip(fields, res.nfs)]
    r_values = [res.spec.r[0], res.spec.r[1] if not res.scalar else None][:len(fields)]
    verdict = ladder_verdict(res, fields, r_values, lam, norms)
    # recomputed from this solution's sup norm, never carried between rows
    flag = bool(sol.sup_norm < res.inner_radius)
    if not keep_fields:
        sol = SolverResult(u=None, v=None, **{k: getattr(sol, k) for k in (
            "level", "residual_sup", "iterations", "sup_norm", "converged", "lam",
            "valley_scale", "path_max_bound")})
    return SolveOutcome(lam, sol, norms[0], norms[1] if len(norms) > 1 else None, verdict, flag)


def _solve_row(args):
    cfg, lam = args
    return solve_instance(cfg, lam).row()


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def run_sweep(cfg: RunConfig, workers: Optional[int] = None) -> list:
    """Rows (dicts keyed by SWEEP_COLUMNS) in increasing lambda order."""
    lams = [float(x) for x in cfg.sweep.lambdas()]
    workers = thread_count() if workers is None else workers
    jobs = [(cfg, lam) for lam in lams]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as ex:
            rows = list(ex.map(_solve_row, jobs))
    else:
        rows = [_solve_row(j) for j in jobs]
    return rows


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in SWEEP_COLUMNS])
    return buf.getvalue()


def empirical_threshold(rows, inner_radius: float) -> Optional[float]:
    """Smallest swept lambda from which on every sup norm is below the radius."""
    lam_hat = None
    for row in reversed(rows):
        sup = row["sup_norm"]
        if sup is None or not sup < inner_radius:
            break
        lam_hat = row["lambda"]
    return lam_hat


def sweep_summary(rows, inner_radius: float) -> str:
    lam_hat = empirical_threshold(rows, inner_radius)
    conv = sum(1 for r in rows if r["converged"])
    lines = [f"rows: {len(rows)}", f"converged: {conv}/{len(rows)}",
             f"inner radius: {inner_radius:g}",
             "empirical threshold lambda_hat: " + ("none" if lam_hat is None else f"{lam_hat:.6g}"),
             "(lambda_hat is a sweep observation, not the theoretical threshold)"]
    norms = [r["norm_u"] for r in rows if r["norm_u"] is not None]
    if len(norms) > 1:
        dec = all(b < a for a, b in zip(norms, norms[1:]))
        lines.append(f"norm_u strictly decreasing: {dec}")
    return "\n".join(lines) + "\n"


# subcommands

def _out_dir(cfg: RunConfig) -> Path:
    d = Path(cfg.output_dir)
    if cfg.source and not d.is_absolute():
        d = Path(cfg.source).parent / d
    d.mkdir(parents=True, exist_ok=True)
    return d


def _echo(cfg: RunConfig):
    sys.stderr.write("# effective configuration\n" + cfg.echo())


def cmd_check(args) -> int:
    cfg = load_config(args.config)
    _echo(cfg)
    ok = True
    N = cfg.problem.N or (6 if cfg.problem.builtin == "worked-example" else cfg.grid.dim)
    try:
        res = resolve(cfg)
    except HypothesisFailure as exc:
        print(f"hypothesis failure: {exc}")
        return EXIT_HYPOTHESIS
    for i, k in enumerate(res.kernels):
        if k is None:
            print(f"component {i + 1}: N-function given directly; indices {res.indices[i]}")
            continue
        rep = verify_kernel_hypotheses(k, N)
        print(f"component {i + 1} kernel {k.name}:")
        for line in rep.lines():
            print("  " + line)
        ok &= rep.passed
    ips = res.declared_indices or res.indices
    if res.declared_indices:
        for i, (a, b) in enumerate(zip(res.indices, res.declared_indices)):
            print(f"component {i + 1}: estimated (l, m) = ({a.l:.6g}, {a.m:.6g}), "
                  f"declared ({float(b.l):g}, {float(b.m):g})")
    radius = res.delta if res.scalar else 4.0
    rep = check_hypotheses(res.spec, ips[0], None if res.scalar else ips[1],
                           seed=cfg.seed, radius=radius)
    for line in rep.lines():
        print(line)
    ok &= rep.passed
    if not res.scalar and res.spec.mu[0] is not None:
        h2 = check_h2(res.spec, res.spec.mu, seed=cfg.seed)
        print("(informational) " + h2.line())
    print("verdict: " + ("pass" if ok else "FAIL"))
    return EXIT_OK if ok else EXIT_HYPOTHESIS


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    _echo(cfg)
    out = solve_instance(cfg, cfg.lam, keep_fields=True)
    if out.result is None:
        print(f"lambda={cfg.lam:g} error: {out.error}")
        return EXIT_NONCONVERGED
    r = out.result
    print(r.summary())
    print(f"norm_u={_fmt(out.norm_u)} norm_v={_fmt(out.norm_v)} "
          f"F_equals_Ftilde={_fmt(out.f_equals_ftilde)} ladder={out.ladder}")
    d = _out_dir(cfg)
    save(r.u, str(d / "solution_u.csv"))
    if r.v is not None:
        save(r.v, str(d / "solution_v.csv"))
    return EXIT_OK if r.converged else EXIT_NONCONVERGED


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    _echo(cfg)
    res = resolve(cfg)
    rows = run_sweep(cfg)
    d = _out_dir(cfg)
    text = sweep_csv(rows)
    (d / "sweep.csv").write_text(text)
    summary = sweep_summary(rows, res.inner_radius)
    (d / "sweep_summary.txt").write_text(summary)
    sys.stdout.write(text)
    sys.stdout.write(summary)
    return EXIT_OK if all(r["converged"] for r in rows) else EXIT_NONCONVERGED


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    _echo(cfg)
    res = resolve(cfg)
    grid = cfg.grid.build()
    u = load(args.solution)
    if u.grid != grid:
        raise ConfigError(f"solution grid {u.grid} does not match the configured grid {grid}")
    fields = [u]
    if not res.scalar:
        vpath = args.solution_v or str(args.solution).replace("_u.", "_v.")
        fields.append(load(vpath))
    p = res.problem(grid, cfg.lam)
    state = p.state_from_fields(*fields)
    resid = p.scaled_residual(state)
    # at a critical point the directional derivative is ~0, so the audit runs
    # along the solution itself and is scaled by the forcing in that direction
    a, fd = p.gateaux_audit(state, state)
    forcing = p.lam * sum(float(np.sum(p.w * np.abs(d) * np.abs(u)))
                          for d, u in zip(p._nonlinear(p.unpack(state))[1:], p.unpack(state)))
    print(f"scaled residual: {resid:.3e} (tolerance {cfg.solver.residual_tol:g})")
    print(f"gateaux audit along the solution: analytic={a:.6e} finite-difference={fd:.6e} "
          f"scaled difference={abs(a - fd) / max(forcing, 1e-300):.3e}")
    d = _out_dir(cfg)
    sound = True
    r_values = [res.spec.r[0], res.spec.r[1]]
    for i, f in enumerate(fields):
        nrm = orlicz_sobolev_norm(f, res.nfs[i])
        try:
            led = moser_ladder(f, res.indices[i], r_values[i], cfg.lam, nrm)
        except ExponentError as exc:
            print(f"component {i + 1}: ladder not applicable ({exc})")
            continue
        (d / f"ladder_{'uv'[i]}.csv").write_text(led.to_csv())
        print(f"component {i + 1}: beta1={float(led.beta1):.6g} alpha*={float(led.alpha_star):.6g} "
              f"D(fitted, empirical)={led.D_fitted:.6g} bound={led.bound_product:.6g} "
              f"sup={led.sup_norm:.6g} -> {led.verdict()}")
        sound &= led.sound
    if resid > cfg.solver.residual_tol:
        return EXIT_NONCONVERGED
    return EXIT_OK if sound else EXIT_HYPOTHESIS


def cmd_cutoff_table(args) -> int:
    fam = CutoffFamily(args.kind, args.delta)
    rep = verify_cutoff(fam)
    sys.stderr.write(rep.line() + "\n")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "s", "rho", "rho_t", "rho_s"])
    for row in cutoff_table(fam, n=args.n):
        w.writerow([_fmt(float(v)) for v in row])
    sys.stdout.write(buf.getvalue())
    ok = rep.is_c1() and rep.sign_violation <= 1e-12
    return EXIT_OK if ok else EXIT_HYPOTHESIS


def cmd_nfun_report(args) -> int:
    cfg = load_config(args.config)
    _echo(cfg)
    N = cfg.problem.N or (6 if cfg.problem.builtin == "worked-example" else cfg.grid.dim)
    try:
        res = resolve(cfg)
    except HypothesisFailure as exc:
        print(f"hypothesis failure: {exc}")
        return EXIT_HYPOTHESIS
    ok = True
    ts = np.array([0.1, 0.5, 1.0, 2.0, 5.0])
    for i, nf in enumerate(res.nfs):
        ip = res.indices[i]
        print(f"component {i + 1}: {nf.name}")
        print(f"  l={ip.l:.9g} m={ip.m:.9g} l*={ip.l_star:.9g} m*={ip.m_star:.9g} "
              f"l~={ip.l_tilde:.9g} m~={ip.m_tilde:.9g}")
        if res.kernels[i] is not None:
            rep = verify_kernel_hypotheses(res.kernels[i], N)
            for line in rep.lines():
                print("  " + line)
            ok &= rep.passed
        comp = complement(nf)
        print("  t, Phi(t), complement(t)" + (", sobolev conjugate(t)" if ip.m < N else ""))
        conj = sobolev_conjugate(nf, N) if ip.m < N else None
        for t in ts:
            vals = [t, float(nf(t)), float(comp(t))] + ([float(conj(t))] if conj is not None else [])
            print("  " + ", ".join(f"{v:.10g}" for v in vals))
    return EXIT_OK if ok else EXIT_HYPOTHESIS


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="orlicz-mpa", description=__doc__.split("\n\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn in (("check", cmd_check), ("solve", cmd_solve), ("sweep", cmd_sweep),
                     ("nfun-report", cmd_nfun_report)):
        p = sub.add_parser(name)
        p.add_argument("config")
        p.set_defaults(func=fn)
    p = sub.add_parser("verify")
    p.add_argument("config")
    p.add_argument("solution")
    p.add_argument("solution_v", nargs="?")
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("cutoff-table")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("delta", type=float)
    p.add_argument("--n", type=int, default=41)
    p.set_defaults(func=cmd_cutoff_table)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HypothesisFailure as exc:
        print(f"hypothesis failure: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS


if __name__ == "__main__":
    sys.exit(main())
