"""Command line: ``kdeffect {solve,evolve,plan,check}``.

Every subcommand takes ``--config run_config.json`` (omitted: built-in
defaults), ``--out-dir`` (overrides the config's ``output_dir``) and
``--threads``. Failures exit with status 1 and a one-line diagnostic on
stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np
from scipy import constants as const

from . import __version__
from .checks import run_checks
from .config import RunConfig, config_from_dict, load_config, save_config
from .diffraction import amplitude_check, interaction_strength_from_potential, plan, sweep
from .eigensolver import fit_quadratic, square_well_coefficient, square_well_ratio
from .errors import KDError
from .io import (write_coefficients, write_density, write_eigenstates, write_eigenvalues,
                 write_json, write_manifest, write_pattern, write_sweep)
from .pipeline import run_evolution, solve

log = logging.getLogger("kdeffect")


class _Stages:
    """Wall-clock timings of the stages of one command."""

    def __init__(self):
        self.timings = {}

    def run(self, name, fn, *args, **kwargs):
        t0 = time.perf_counter()
        result = fn(*args, **kwargs)
        self.timings[name] = round(time.perf_counter() - t0, 3)
        log.info("%s finished in %.1f s", name, self.timings[name])
        return result


def _prepare(config: RunConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_config(config, out / "run_config.json")
    return out


def _finish(config, out, files, stages):
    files = [out / "run_config.json", *files]
    write_manifest(out / "manifest.json", config, files, stages.timings)


def _fit_report(basis) -> dict:
    system = basis.system
    report = {"n_states": len(basis)}
    if len(basis) >= 3:
        fit = fit_quadratic(basis)
        mean = float(np.mean(basis.E_eV))
        report.update(a0_eV=fit.a0, a1_eV=fit.a1, a2_eV=fit.a2, rms_residual_eV=fit.rms_residual,
                      rms_relative_to_mean=fit.rms_residual / mean,
                      square_well_a1_eV=square_well_coefficient(system),
                      square_well_ratio=square_well_ratio(fit, system))
    report.update(V0_eV=system.V0 / const.e, osc_const=system.osc_const,
                  alpha_per_m=system.alpha, box_width_m=system.physical_width,
                  paired_states=int(np.count_nonzero(basis.paired)))
    return report


def cmd_solve(config: RunConfig, threads: int = 1, eigenstates: bool = False) -> list[Path]:
    out = _prepare(config)
    stages = _Stages()
    basis = stages.run("solve", solve, config, threads, out / "cache")
    files = [write_eigenvalues(out / "eigenvalues.csv", basis)]
    if eigenstates:
        files.append(stages.run("eigenstates", write_eigenstates, out / "eigenstates.csv", basis))
    files.append(write_json(out / "fit.json", _fit_report(basis)))
    _finish(config, out, files, stages)
    return files


def cmd_evolve(config: RunConfig, threads: int = 1) -> list[Path]:
    out = _prepare(config)
    stages = _Stages()
    basis = stages.run("solve", solve, config, threads, out / "cache")
    run = stages.run("evolve", run_evolution, config, basis)
    files = [write_coefficients(out / "coefficients.csv", run.initial.coeffs)]
    for k, profile in enumerate(run.profiles):
        files.append(write_density(out / f"rho_t_{k:03d}.csv", profile))
    files.append(write_pattern(out / "pattern.csv", run.pattern))
    beta = interaction_strength_from_potential(config.laser, config.species)
    summary = {
        "times_s": config.resolved_times(),
        "norms": [p.norm for p in run.profiles],
        "coefficient_weight": run.initial.weight,
        "peaks": len(run.pattern),
        "orders": run.pattern.orders,
        "spacing": run.pattern.spacing,
        "gap_spread": run.pattern.gap_spread(),
        "beta_int": beta,
    }
    if len(run.pattern) >= 3:
        summary["amplitude_check"] = asdict(amplitude_check(run.pattern, beta))
    files.append(write_json(out / "evolution.json", summary))
    _finish(config, out, files, stages)
    return files


def cmd_plan(config: RunConfig, threads: int = 1) -> list[Path]:
    out = _prepare(config)
    stages = _Stages()
    convention = config.analysis.fringe_convention
    report = stages.run("plan", plan, config.laser, config.species, convention)
    w = config.sweep
    values = np.linspace(w.start, w.stop, w.num)
    table = stages.run("sweep", sweep, w.parameter, values, config.laser, config.species,
                       convention)
    files = [write_json(out / "plan.json", report.to_dict()),
             write_sweep(out / "sweep.csv", table)]
    _finish(config, out, files, stages)
    return files


def cmd_check(config: RunConfig, threads: int = 1, stream=None) -> bool:
    stream = stream or sys.stdout
    results = run_checks(config)
    for r in results:
        print(r.line(), file=stream)
    failed = [r for r in results if not r.ok]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed", file=stream)
    return not failed


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kdeffect",
        description="Kapitza-Dirac diffraction of charged particles by a ponderomotive "
                    "standing wave: eigenstates, wave-packet evolution and beam planning.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration (default: built-in)")
    common.add_argument("--out-dir", type=Path, help="output directory (overrides output_dir)")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads for brackets and refinement (1 = serial)")
    common.add_argument("-v", "--verbose", action="store_true", help="log stage progress")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("solve", parents=[common], help="eigenvalues, fit report (and eigenstates)")
    p.add_argument("--eigenstates", action="store_true", help="also write eigenstates.csv")
    sub.add_parser("evolve", parents=[common], help="wave-packet densities and diffraction peaks")
    sub.add_parser("plan", parents=[common], help="interaction strength, fringe width, sweep")
    sub.add_parser("check", parents=[common], help="reduced-scale invariant suite")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        if args.threads < 1:
            raise KDError("--threads must be >= 1")
        config = load_config(args.config) if args.config else config_from_dict({})
        if args.out_dir is not None:
            config = config.with_overrides(output_dir=str(args.out_dir))
        if args.command == "solve":
            files = cmd_solve(config, args.threads, args.eigenstates)
        elif args.command == "evolve":
            files = cmd_evolve(config, args.threads)
        elif args.command == "plan":
            files = cmd_plan(config, args.threads)
        else:
            return 0 if cmd_check(config, args.threads) else 1
    except (KDError, OSError, ValueError) as exc:
        print(f"kdeffect {args.command}: error: {exc}", file=sys.stderr)
        return 1
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
