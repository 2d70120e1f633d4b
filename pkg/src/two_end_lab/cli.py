"""Command line entry point: ``two-end-lab <config> [--out DIR] [--quiet]``.

Exit status 0 when every enabled assertion passes, 1 when a pipeline fails
or an assertion does not hold, 2 for an invalid configuration or usage.
"""
import argparse
import dataclasses
import math
import os
import sys
import traceback
import warnings

import numpy as np

from . import profile, reduced
from .config import load_config
from .continuation import ContinuationControls, branch_report, classify_endpoint, trace_branch
from .errors import ConfigError, TwoEndLabError
from .geometry import CatenoidCurve, TodaCurve, nodal_curve_from_field
from .io import (write_branch_csv, write_curve_csv, write_field, write_json,
                 write_trajectory_csv)
from .pde import (AxiGrid, build_approximate_solution, newton_solve, residual)
from .pde.diagnostics import ConditioningWarning, find_apex, growth_rate_fit
from .continuation import point_diagnostics
from .verify import run_oracles

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class Run:
    def __init__(self, cfg, out, quiet):
        self.cfg = cfg
        self.out = out
        self.quiet = quiet
        self.assertions = []
        self.report = {}

    def log(self, msg):
        if not self.quiet:
            print(msg, file=sys.stderr)

    def path(self, name):
        return os.path.join(self.out, name)

    def claim(self, name, passed, **detail):
        self.assertions.append(dict(name=name, passed=bool(passed), **detail))
        self.log(f"[{'pass' if passed else 'FAIL'}] {name}")

    # -- pipelines --------------------------------------------------------
    def verify(self):
        checks = run_oracles(self.cfg.seed)
        self.report["checks"] = [c.to_dict() for c in checks]
        for c in checks:
            self.claim(c.name, c.passed, value=c.value, threshold=c.threshold)

    def probe(self):
        cfg = self.cfg
        variants = [("without remainder", 0.0)]
        if cfg.forcing > 0:
            variants.append(("with remainder bound", cfg.forcing))
        results = []
        for label, forcing in variants:
            rep = reduced.nonexistence_probe(cfg.k_target, cfg.trials, r0=cfg.r0,
                                             r_end=cfg.r_end, p0_range=(cfg.p0_min, cfg.p0_max),
                                             forcing=forcing)
            d = rep.to_dict()
            d["label"] = label
            results.append(d)
            self.claim(f"terminal flux exceeds sqrt2/2 ({label})",
                       rep.passed and rep.delta_obs > 0, delta_obs=rep.delta_obs)
        self.report["probe"] = results[0]
        self.report["verdict"] = results[0]["verdict"]
        self.report["delta_obs"] = results[0]["delta_obs"]
        if len(results) > 1:
            self.report["probe_with_remainder"] = results[1]
        write_json(self.path("probe.json"), dict(verdict=results[0]["verdict"],
                                                 delta_obs=results[0]["delta_obs"],
                                                 runs=results))

    def reduced(self):
        cfg = self.cfg
        traj = reduced.integrate_reduced(cfg.p0, cfg.slope0, cfg.r0, cfg.r_end,
                                         forcing=cfg.forcing)
        write_trajectory_csv(self.path("trajectory.csv"), traj)
        drop = float(max(0.0, -np.min(np.diff(traj.mu)))) if traj.mu.size > 1 else 0.0
        self.report["trajectory"] = dict(points=int(traj.r.size), mu_final=float(traj.mu[-1]),
                                         p_final=float(traj.p[-1]), meta=traj.meta)
        if cfg.forcing == 0:
            self.claim("flux mu nondecreasing", drop <= 1e-12, max_drop=drop)

    def _curve(self):
        cfg = self.cfg
        if cfg.ansatz == "catenoid":
            return CatenoidCurve(cfg.k, cfg.b)
        return TodaCurve(cfg.eps)

    def _solve(self):
        cfg = self.cfg
        grid = AxiGrid.from_spacing(cfg.R, cfg.Z, cfg.h)
        curve = self._curve()
        self.log(f"building ansatz on {grid.n_r} x {grid.n_z} nodes")
        start = build_approximate_solution(curve, grid=grid)
        sol = newton_solve(start, tol=cfg.tol, max_iter=cfg.max_iter, log=self.log)
        return curve, sol

    def _field_summary(self, sol, k_expected):
        cfg = self.cfg
        curve = nodal_curve_from_field(sol)
        window = (max(cfg.fit_fraction * cfg.R, 10.0, curve.r_min), cfg.R)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConditioningWarning)
            k, c, rms = growth_rate_fit(curve, window)
        diag = point_diagnostics(sol)
        apex = find_apex(sol)
        res = float(np.max(np.abs(residual(sol).values)))
        summary = dict(growth_rate=dict(k=k, c=c, rms=rms, window=window),
                       residual_norm=res, residual_history=list(sol.history),
                       max_abs_u=sol.max_abs(), apex=dataclasses.asdict(apex),
                       monotonicity=diag["monotonicity"], flux=diag["flux"])
        self.claim("Newton residual below tolerance", res < cfg.tol, residual=res)
        self.claim("maximum principle |u| <= 1 + 1e-6", sol.max_abs() <= 1 + 1e-6)
        self.claim("monotonicity u_r <= 0, u_z >= 0", diag["monotonicity"]["passed"])
        self.claim("balancing flux within 10 h^2 of zero",
                   all(f["passed"] for f in diag["flux"]))
        self.claim("growth rate within 10% of the ansatz", abs(k - k_expected) < 0.1 * k_expected,
                   k=k, expected=k_expected)
        return curve, summary

    def solve(self):
        cfg = self.cfg
        curve0, sol = self._solve()
        k_expected = cfg.k if cfg.ansatz == "catenoid" else math.sqrt(2.0)
        curve, summary = self._field_summary(sol, k_expected)
        self.report["solution"] = summary
        write_field(self.path("field.txt"), sol)
        write_curve_csv(self.path("nodal_curve.csv"), curve)

    def continue_(self):
        cfg = self.cfg
        if cfg.ansatz != "catenoid":
            raise ConfigError("continue mode starts from the catenoid ansatz")
        _, sol = self._solve()
        _, summary = self._field_summary(sol, cfg.k)
        self.report["start"] = summary
        ctl = ContinuationControls(ds0=cfg.ds0, ds_min=cfg.ds_min, ds_max=cfg.ds_max,
                                   k_floor=cfg.k_floor, k_ceiling=cfg.k_ceiling,
                                   max_points=cfg.max_points, newton_tol=cfg.tol,
                                   fit_fraction=cfg.fit_fraction)
        dirs = {"both": (-1, 1), "down": (-1,), "up": (1,)}[cfg.direction]
        branches = []
        for d in dirs:
            br = trace_branch(sol, d, ctl, log=self.log)
            name = "down" if d < 0 else "up"
            write_branch_csv(self.path(f"branch_{name}.csv"), br)
            if cfg.dump_fields:
                for i, p in enumerate(br.points):
                    write_field(self.path(f"branch_{name}_{i:03d}.txt"), p.field)
            rep = branch_report(br)
            rep["classification"] = [classify_endpoint(p)[0] for p in br.points]
            branches.append(rep)
            ks = [p.k for p in br.points]
            mono = all((b - a) * d > 0 for a, b in zip(ks, ks[1:]))
            self.claim(f"k strictly monotone along the {name} branch", mono)
            self.claim(f"every {name} branch point passes its diagnostics",
                       all(p.diagnostics.get("passed") for p in br.points))
        self.report["branches"] = branches

    def run(self):
        mode = self.cfg.mode
        c0, c1 = profile.constants()
        self.report.update(mode=mode, config=self.cfg.as_dict(), constants=dict(c0=c0, c1=c1))
        getattr(self, "continue_" if mode == "continue" else mode)()
        ok = all(a["passed"] for a in self.assertions)
        self.report.update(assertions=self.assertions, passed=ok)
        write_json(self.path("report.json"), self.report)
        return EXIT_OK if ok else EXIT_FAIL


def _threads():
    raw = os.environ.get("TWO_END_LAB_THREADS")
    if raw is None:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"TWO_END_LAB_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("TWO_END_LAB_THREADS must be at least 1")
    return n


def main(argv=None):
    parser = argparse.ArgumentParser(prog="two-end-lab",
                                     description="Axisymmetric two-end Allen-Cahn laboratory")
    parser.add_argument("config", help="flat key = value configuration file")
    parser.add_argument("--out", help="output directory (overrides the config's out key)")
    parser.add_argument("--quiet", action="store_true", help="suppress progress messages")
    args = parser.parse_args(argv)
    try:
        _threads()
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"two-end-lab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = args.out or cfg.out
    os.makedirs(out, exist_ok=True)
    run = Run(cfg, out, args.quiet)
    try:
        return run.run()
    except ConfigError as exc:
        print(f"two-end-lab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TwoEndLabError, ArithmeticError, ValueError) as exc:
        write_json(run.path("report.json"),
                   dict(mode=cfg.mode, passed=False,
                        error=dict(type=type(exc).__name__, message=str(exc),
                                   history=list(getattr(exc, "history", ()))),
                        assertions=run.assertions))
        if not args.quiet:
            traceback.print_exc()
        print(f"two-end-lab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
