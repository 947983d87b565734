"""Convergence experiments: aspect-ratio sweeps with co-evolved
finite-ratio and limit trajectories, log-log rate fitting, the
scaling-transformation exactness oracle, and the discrete energy-budget
check.

Per-ratio runs are independent jobs (optionally executed in a process
pool); each job co-evolves the two systems in lockstep from identical
seeded initial data with a shared dt, so the sampled difference metrics
measure the aspect-ratio gap rather than scheme differences.
"""

from __future__ import annotations

import concurrent.futures
import configparser
import csv
import os
import time
from dataclasses import asdict, dataclass, replace

import numpy as np

from pemhd import __version__
from pemhd.diagnostics import (DiagnosticsRecord, difference_metrics,
                               state_row)
from pemhd.fields import random_admissible_state, scale_down, scale_up
from pemhd.grid import GridSpec
from pemhd.pem import PemStepper
from pemhd.smhd import (BlowUpError, SmhdStepper, SolverConfig, ThinStepper,
                        default_dt, n_steps)

STATUSES = ("ok", "blowup", "error")


class NoFitError(RuntimeError):
    """Fewer than three usable rows; carries the partial result."""

    def __init__(self, result: "SweepResult"):
        super().__init__(
            f"need >= 3 ok rows to fit a rate, got {result.n_ok}"
        )
        self.result = result


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    residual: float


@dataclass
class SweepRow:
    eps: float
    sup_l2_diff: float
    sup_h1_diff: float
    grad_diss_integral: float
    wall_time_s: float
    status: str


@dataclass
class SweepResult:
    rows: list
    fit_l2: RateFit | None
    fit_h1: RateFit | None
    meta: dict

    @property
    def n_ok(self) -> int:
        return sum(1 for r in self.rows if r.status == "ok")


def fit_rate(points) -> RateFit:
    """Ordinary least squares on (log eps, log value), natural log."""
    points = list(points)
    if len(points) < 2:
        raise ValueError("fit_rate needs at least 2 points")
    eps = np.array([p[0] for p in points], dtype=float)
    val = np.array([p[1] for p in points], dtype=float)
    if np.any(eps <= 0.0) or np.any(val <= 0.0):
        raise ValueError("fit_rate needs positive abscissae and values")
    x = np.log(eps)
    y = np.log(val)
    a = np.vstack([x, np.ones_like(x)]).T
    sol, *_ = np.linalg.lstsq(a, y, rcond=None)
    resid = float(np.sqrt(np.mean((a @ sol - y) ** 2)))
    return RateFit(slope=float(sol[0]), intercept=float(sol[1]),
                   residual=resid)


def _coevolve(eps, init, config):
    """Run SMHD(eps) and the limit system in lockstep; returns the sweep
    row plus the finite-ratio diagnostics record (difference columns
    attached) and the limit-system record."""
    grid = init.grid
    s_eps = init.retag("SMHD", eps)
    s_lim = init.retag("PEM", 0.0)
    st_eps = SmhdStepper(grid, config, eps)
    st_lim = PemStepper(grid, config, 0.0)
    total = n_steps(config, config.dt)

    rec_eps = DiagnosticsRecord()
    rec_lim = DiagnosticsRecord()
    sup_l2 = sup_h1 = 0.0
    diss_integral = 0.0
    prev_t = prev_diss = None

    def sample(a, b):
        nonlocal sup_l2, sup_h1, diss_integral, prev_t, prev_diss
        m = difference_metrics(a, b)
        sup_l2 = max(sup_l2, m.l2_diff)
        sup_h1 = max(sup_h1, m.h1_diff)
        if prev_t is not None:
            diss_integral += 0.5 * (m.grad_diss + prev_diss) * (m.t - prev_t)
        prev_t, prev_diss = m.t, m.grad_diss
        row = state_row(a, eps)
        row["l2_diff"] = m.l2_diff
        row["h1_diff"] = m.h1_diff
        rec_eps.append(row)
        rec_lim.append(state_row(b, 0.0))

    wall0 = time.perf_counter()
    status = "ok"
    try:
        sample(s_eps, s_lim)
        for k in range(1, total + 1):
            s_eps = st_eps.step(s_eps)
            s_lim = st_lim.step(s_lim)
            if k % config.output_every == 0 or k == total:
                sample(s_eps, s_lim)
    except BlowUpError:
        status = "blowup"
    except (ValueError, ArithmeticError):
        status = "error"
    wall = time.perf_counter() - wall0
    row = SweepRow(eps=eps, sup_l2_diff=sup_l2, sup_h1_diff=sup_h1,
                   grad_diss_integral=diss_integral, wall_time_s=wall,
                   status=status)
    return row, rec_eps, rec_lim


def _sweep_job(args):
    eps, seed, grid, config, decay, amplitude = args
    init = random_admissible_state(grid, seed, decay, amplitude)
    return _coevolve(eps, init, config)


def sweep(init_seed: int, grid: GridSpec, eps_list, config: SolverConfig,
          *, decay: float = 3.0, amplitude: float = 0.5, jobs: int = 1,
          out_dir=None, env_overrides=None) -> SweepResult:
    """Co-evolve the finite-aspect-ratio and limit systems over a
    decreasing list of ratios and fit the convergence rate of the sampled
    sup-in-time difference norms.

    Shared initial data comes from ``init_seed``; a single dt (from the
    config, or the CFL estimate of the shared data) is used for every
    ratio.  Blow-ups are recorded per row, not fatal; fewer than three ok
    rows raises :class:`NoFitError` carrying the partial result.
    """
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 3:
        raise ValueError("sweep needs at least 3 eps values")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps values must be strictly decreasing")
    if any(e <= 0 for e in eps_list):
        raise ValueError("eps values must be positive")

    init = random_admissible_state(grid, init_seed, decay, amplitude)
    if config.dt is None:
        config = replace(config, dt=default_dt(init, config.cfl))

    job_args = [(eps, init_seed, grid, config, decay, amplitude)
                for eps in eps_list]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_sweep_job, job_args))
    else:
        outcomes = [_coevolve(eps, init, config) for eps in eps_list]

    rows = [o[0] for o in outcomes]
    meta = {
        "seed": init_seed,
        "decay": decay,
        "amplitude": amplitude,
        "dt": config.dt,
        "T": config.T,
        "integrator": config.integrator,
        "output_every": config.output_every,
        "sample_interval": config.output_every * config.dt,
        "jobs": jobs,
        "grid": grid,
        "version": __version__,
    }

    ok = [r for r in rows if r.status == "ok"]
    if len(ok) >= 3:
        fit_l2 = fit_rate([(r.eps, r.sup_l2_diff) for r in ok])
        fit_h1 = fit_rate([(r.eps, r.sup_h1_diff) for r in ok])
    else:
        fit_l2 = fit_h1 = None
    # sanity monitor, not an assertion: discretization noise at the
    # smallest ratios can break strict monotonicity
    warnings = []
    sups = [r.sup_l2_diff for r in ok]
    if any(b > a for a, b in zip(sups, sups[1:])):
        warnings.append("sup L2 difference is not monotone in the ratio")
    meta["warnings"] = warnings
    result = SweepResult(rows=rows, fit_l2=fit_l2, fit_h1=fit_h1, meta=meta)

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_sweep_csv(os.path.join(out_dir, "sweep.csv"), result)
        if fit_l2 is not None:
            write_fit_csv(os.path.join(out_dir, "fit.csv"), result)
        for (row, rec_eps, _), eps in zip(outcomes, eps_list):
            rec_eps.write_csv(os.path.join(out_dir, f"diag_eps{eps:g}.csv"))
        outcomes[0][2].write_csv(os.path.join(out_dir, "diag_limit.csv"))
        write_manifest(os.path.join(out_dir, "manifest"), grid=grid,
                       config=config, seed=init_seed, decay=decay,
                       amplitude=amplitude, eps_list=eps_list, jobs=jobs,
                       out_dir=str(out_dir), env_overrides=env_overrides)

    if fit_l2 is None:
        raise NoFitError(result)
    return result


# -- oracle-style verification runs ----------------------------------------

def scaling_equivalence_test(seed: int, grid: GridSpec, eps: float,
                             config: SolverConfig, n: int = 100,
                             decay: float = 3.0,
                             amplitude: float = 0.5) -> float:
    """Step the thin-domain system on rescaled data and the fixed-domain
    system on the original data with matched dt; return the max over steps
    of the relative state difference after mapping back.  The discrete
    systems are related by an exact change of variables, so the contract
    is < 1e-10."""
    if not (0.0 < eps <= 1.0):
        raise ValueError("eps must lie in (0, 1]")
    init = random_admissible_state(grid, seed, decay, amplitude)
    if config.dt is None:
        config = replace(config, dt=default_dt(init, config.cfl))
    s = init.retag("SMHD", eps)
    thin = scale_up(init, eps)
    st_s = SmhdStepper(grid, config, eps)
    st_t = ThinStepper(thin.grid, config, eps)
    worst = 0.0
    for _ in range(n):
        s = st_s.step(s)
        thin = st_t.step(thin)
        down = scale_down(thin)
        for name in ("u1", "u2", "u3", "b1", "b2", "b3"):
            a = getattr(s, name).spec()
            b = getattr(down, name).spec()
            scale = max(np.abs(a).max(), 1e-300)
            worst = max(worst, float(np.abs(a - b).max() / scale))
    return worst


def energy_budget_test(record: DiagnosticsRecord) -> float:
    """Max over sample times of |E(t) + 2 int_0^t D ds - E(0)| with the
    dissipation integral by trapezoid over the sampled rows."""
    for col in ("t", "E", "D"):
        if not all(col in r for r in record.rows):
            raise ValueError(f"diagnostics record lacks the {col!r} column")
    t = record.column("t")
    e = record.column("E")
    d = record.column("D")
    if len(t) < 2:
        return 0.0
    integral = np.concatenate(
        [[0.0], np.cumsum(0.5 * (d[1:] + d[:-1]) * np.diff(t))]
    )
    return float(np.abs(e + 2.0 * integral - e[0]).max())


# -- artifact files ----------------------------------------------------------

SWEEP_COLUMNS = ("eps", "sup_l2_diff", "sup_h1_diff", "grad_diss_integral",
                 "wall_time_s", "status")
FIT_COLUMNS = ("norm", "slope", "intercept", "residual")


def write_sweep_csv(path, result: SweepResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for r in result.rows:
            d = asdict(r)
            writer.writerow([d[c] if c == "status" else repr(float(d[c]))
                             for c in SWEEP_COLUMNS])


def read_sweep_csv(path) -> list[SweepRow]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != list(SWEEP_COLUMNS):
            raise ValueError(f"malformed sweep csv header: {reader.fieldnames}")
        for rec in reader:
            rows.append(SweepRow(
                eps=float(rec["eps"]),
                sup_l2_diff=float(rec["sup_l2_diff"]),
                sup_h1_diff=float(rec["sup_h1_diff"]),
                grad_diss_integral=float(rec["grad_diss_integral"]),
                wall_time_s=float(rec["wall_time_s"]),
                status=rec["status"],
            ))
    return rows


def write_fit_csv(path, result: SweepResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FIT_COLUMNS)
        for name, fit in (("l2", result.fit_l2), ("h1", result.fit_h1)):
            if fit is not None:
                writer.writerow([name, repr(fit.slope), repr(fit.intercept),
                                 repr(fit.residual)])


def read_fit_csv(path) -> dict[str, RateFit]:
    out = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != list(FIT_COLUMNS):
            raise ValueError(f"malformed fit csv header: {reader.fieldnames}")
        for rec in reader:
            out[rec["norm"]] = RateFit(
                slope=float(rec["slope"]),
                intercept=float(rec["intercept"]),
                residual=float(rec["residual"]),
            )
    return out


def write_manifest(path, *, grid: GridSpec, config: SolverConfig, seed: int,
                   decay: float, amplitude: float, eps_list=None, jobs=1,
                   out_dir="", env_overrides=None, system=None) -> None:
    """Record the effective configuration in the same key = value format
    the CLI reads, so a manifest re-parses into an identical setup."""
    cp = configparser.ConfigParser()
    cp["grid"] = {
        "L1": repr(grid.L1), "L2": repr(grid.L2), "Lz": repr(grid.Lz),
        "Nx": str(grid.Nx), "Ny": str(grid.Ny), "Nz": str(grid.Nz),
        "dealias": repr(grid.dealias_fraction),
    }
    cp["solver"] = {
        "dt": "auto" if config.dt is None else repr(config.dt),
        "T": repr(config.T),
        "integrator": config.integrator,
        "output_every": str(config.output_every),
        "re_symmetrize_every": str(config.re_symmetrize_every),
        "cfl": repr(config.cfl),
    }
    if system is not None:
        cp["solver"]["system"] = system
    cp["init"] = {"seed": str(seed), "decay": repr(decay),
                  "amplitude": repr(amplitude)}
    if eps_list is not None:
        cp["sweep"] = {"eps_list": ",".join(repr(e) for e in eps_list),
                       "jobs": str(jobs)}
    cp["provenance"] = {"version": __version__, "out_dir": out_dir}
    for key, val in (env_overrides or {}).items():
        cp["provenance"][f"env_{key}"] = val
    with open(path, "w") as fh:
        cp.write(fh)
