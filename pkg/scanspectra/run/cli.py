#!/usr/bin/env python
# coding=utf-8
"""scanspectra command line.

Every subcommand builds one RunConfig from its flags, runs the analysis and emits a JSON
report: on stdout, or into --out with a short table on the console. The exit status is 0
when every verdict passed, 1 on a failed verdict, 2 on a usage or domain error and 3 when a
file could not be read or written.
"""
import argparse
import cmd
import inspect
import json
import logging
import os
import shlex
import sys
import warnings
from collections import Counter
from typing import Callable, Optional

from tabulate import tabulate

from scanspectra.common import forge, log as ss_log
from scanspectra.common.constants import CONCENTRATION_MIN_SITES
from scanspectra.common.exceptions import (ConfigException, DomainError, ModelFileError, SchemaVersionError,
                                           SimulationError, UnsupportedError, UsageError)
from scanspectra.lab import hardcore, projections
from scanspectra.markov import mixing, schedules, spectral
from scanspectra.markov.operators import build_site_kernels, glauber_kernel, scan_kernel, sequence_product_kernel
from scanspectra.odm.models.config import SUITES, UNITS, RunConfig, Tolerances
from scanspectra.odm.models.report import NamedResult
from scanspectra.reporting import (SEPARATION_COLUMNS, SWEEP_COLUMNS, build_report, named_result, read_model,
                                   report_text, write_curve_csv, write_report, write_table_csv)
from scanspectra.suites import run_suite, site_projection_results

warnings.filterwarnings("ignore")

config = forge.get_config()
config.logging.log_to_console = False
ss_log.init_logging('cli')

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_FILE = 3

DEFAULT_EPSILON = 0.25
DEFAULT_RECHT_RE_SITES = [4]
DEFAULT_RECHT_RE_DELTAS = [0.5]
DEFAULT_SEPARATION_SITES = [4, 8, 16, 32, 64]
DEFAULT_SIM_SITES = 32
DEFAULT_SIM_TRIALS = 1000
DEFAULT_SIM_EXCITATIONS = 10
DEFAULT_SIM_SWEEPS = 100
COMPACT_CHECK_SITES = 6
TAIL_HORIZON = 200

logger = logging.getLogger('scanspectra.cli')


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _tolerance_override(text: str) -> tuple[str, float]:
    name, sep, value = text.partition('=')
    if not sep or name not in Tolerances.fields():
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE with NAME one of {', '.join(Tolerances.fields())}")
    try:
        return name, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tolerance {name} is not a number: {value!r}")


def _build_parser(command: str) -> argparse.ArgumentParser:
    # One flat flag namespace shared by every subcommand
    parser = _ArgumentParser(prog=f"scanspectra {command}", add_help=False)
    parser.add_argument('--model', help="Builtin model string (hardcore:complete:n=4,lambda=1) or model file")
    parser.add_argument('--seed', type=int)
    parser.add_argument('--eps', type=float, dest='epsilon')
    parser.add_argument('--tmax', type=int, dest='t_max')
    parser.add_argument('--unit', choices=UNITS)
    parser.add_argument('--suite', choices=SUITES)
    parser.add_argument('--n', type=int, nargs='+')
    parser.add_argument('--delta', type=float, nargs='+')
    parser.add_argument('--trials', type=int)
    parser.add_argument('--s', type=int)
    parser.add_argument('--fugacity', type=float)
    parser.add_argument('--seq', dest='sequence', help="Update sequence, inline or the path of a sequence file")
    parser.add_argument('--state-cap', type=int, dest='state_cap')
    parser.add_argument('--tol', type=_tolerance_override, action='append', default=[], dest='tolerances')
    parser.add_argument('--config', help="JSON file with run settings, overridden by flags")
    parser.add_argument('--out')
    parser.add_argument('--csv')
    parser.add_argument('--log-level', choices=list(ss_log.log_level_map), dest='log_level')
    return parser


def _load_run_file(path: str) -> dict:
    with open(path) as config_fh:
        try:
            data = json.load(config_fh)
        except json.JSONDecodeError as e:
            raise ConfigException(f"{path} is not valid JSON: {e}")
    if not isinstance(data, dict):
        raise ConfigException(f"{path} must hold a JSON object")
    return data


def build_run_config(command: str, options: argparse.Namespace) -> RunConfig:
    data = _load_run_file(options.config) if options.config else {}
    data["command"] = command
    data.setdefault("seed", forge.get_config().seed)
    data.setdefault("state_cap", forge.get_config().engine.state_cap)

    for name in ("model", "seed", "epsilon", "t_max", "unit", "suite", "n", "delta", "trials", "s", "fugacity",
                 "sequence", "state_cap", "out", "csv"):
        value = getattr(options, name)
        if value is not None:
            data[name] = value
    if options.tolerances:
        data["tolerances"] = {**data.get("tolerances", {}), **dict(options.tolerances)}

    try:
        return RunConfig(data)
    except (ValueError, KeyError, TypeError) as e:
        raise UsageError(f"Invalid run settings: {e}")


def _require_model(run_config: RunConfig):
    if not run_config.model:
        raise UsageError(f"{run_config.command} needs --model")
    return read_model(run_config.model, state_cap=run_config.state_cap)


def _epsilon(run_config: RunConfig) -> float:
    return run_config.epsilon if run_config.epsilon is not None else DEFAULT_EPSILON


def _fugacity(run_config: RunConfig) -> float:
    return run_config.fugacity if run_config.fugacity is not None else 1.0


def _read_sequence(run_config: RunConfig, n: Optional[int]) -> schedules.UpdateSequence:
    if os.path.isfile(run_config.sequence):
        return schedules.read_sequence(run_config.sequence, n=n)
    return schedules.parse_sequence(run_config.sequence, n=n)


def _single_n(run_config: RunConfig, default: int = None) -> Optional[int]:
    if len(run_config.n) > 1:
        raise UsageError(f"{run_config.command} takes a single --n value")
    return run_config.n[0] if run_config.n else default


Summary = tuple[list[NamedResult], list[list], list[str]]


class ScanSpectraCommandLineInterface(cmd.Cmd):  # pylint:disable=R0904
    """Interactive shell and one-shot runner of the scanspectra subcommands."""

    def __init__(self, show_prompt: bool = True, logger_class=ss_log.PrintLogger):
        cmd.Cmd.__init__(self)
        self.logger = logger_class()
        self.prompt = ""
        self.intro = ""
        self.exit_code = EXIT_OK
        if show_prompt:
            self.prompt = "(scanspectra) $ "

    def _print_error(self, command: str, msg: Optional[str]):
        handler = getattr(self, f"do_{command.replace('-', '_')}", None)
        if msg:
            self.logger.error(msg)
        if handler is not None:
            self.logger.info(inspect.getdoc(handler))

    #
    # Dispatch
    #
    def precmd(self, line: str) -> str:
        if line.startswith("recht-re"):
            return "recht_re" + line[len("recht-re"):]
        return line

    def emptyline(self):
        pass

    def default(self, line: str):
        self.logger.error(f"Unknown subcommand: {line.split()[0]}")
        self.exit_code = EXIT_USAGE

    def execute(self, command: str, args: list[str]) -> int:
        """Run one subcommand and translate its outcome into an exit status."""
        handler: Callable[..., Summary] = self.COMMANDS.get(command)
        if handler is None:
            self.logger.error(f"Unknown subcommand: {command}. Expected one of {', '.join(self.COMMANDS)}")
            return EXIT_USAGE

        try:
            options = _build_parser(command).parse_args(args)
            if options.log_level:
                _console_logging(options.log_level)
            run_config = build_run_config(command, options)
            results, rows, headers = handler(self, run_config)
            report = build_report(run_config, results)
            self._emit(report, run_config, rows, headers)
            return EXIT_OK if report.passed else EXIT_FAILED
        except UsageError as e:
            self._print_error(command, str(e))
            return EXIT_USAGE
        except (DomainError, UnsupportedError, ConfigException) as e:
            self.logger.error(f"{type(e).__name__}: {e}")
            return EXIT_USAGE
        except (ModelFileError, SchemaVersionError, OSError) as e:
            self.logger.error(f"{type(e).__name__}: {e}")
            return EXIT_FILE
        except SimulationError as e:
            self.logger.error(f"{type(e).__name__}: {e}")
            return EXIT_FAILED

    def _run(self, command: str, arg: str):
        try:
            args = shlex.split(arg)
        except ValueError as e:
            self._print_error(command, str(e))
            self.exit_code = EXIT_USAGE
            return
        self.exit_code = self.execute(command, args)

    def _emit(self, report, run_config: RunConfig, rows: list[list], headers: list[str]):
        if run_config.out is None:
            sys.stdout.write(report_text(report))
            return
        write_report(report, run_config.out)
        if rows:
            self.logger.info(tabulate(rows, headers=headers))
        status = "PASS" if report.passed else "FAIL"
        self.logger.info(f"{status}: {len(report.results)} results written to {run_config.out}")

    #
    # Subcommands
    #
    def _spectra(self, run_config: RunConfig) -> Summary:
        kernels = build_site_kernels(_require_model(run_config))
        projection_tol = run_config.tolerance("projection", forge.get_config().engine.tolerances.projection)
        results = site_projection_results(kernels, run_config)

        summaries = [spectral.kernel_summary(glauber_kernel(kernels)), spectral.kernel_summary(scan_kernel(kernels))]
        if run_config.sequence:
            seq = _read_sequence(run_config, kernels.n)
            covered = schedules.first_appearances(seq).covered
            summaries.append(spectral.kernel_summary(sequence_product_kernel(kernels, seq),
                                                     check_irreducible=covered))
        results.extend(named_result(f"summary {report.label}", "spectral", report) for report in summaries)
        results.append(named_result("glauber-psd", "spectral", spectral.glauber_psd_check(kernels, projection_tol)))

        rows = [[report.label, report.operator_norm, report.gap, report.laplacian_sigma2] for report in summaries]
        return results, rows, ["kernel", "norm", "gap", "sigma2"]

    def _mix(self, run_config: RunConfig) -> Summary:
        kernels = build_site_kernels(_require_model(run_config))
        epsilon = _epsilon(run_config)
        t_max = run_config.t_max or forge.get_config().engine.horizon
        tolerance = run_config.tolerance("verification", forge.get_config().engine.tolerances.verification)

        chosen = []
        if run_config.unit in (None, "steps"):
            chosen.append(glauber_kernel(kernels))
        if run_config.unit in (None, "sweeps"):
            chosen.append(scan_kernel(kernels))

        results, rows, curves = [], [], []
        for kernel in chosen:
            report = mixing.analyze_mixing(kernel, epsilon, t_max, tolerance)
            results.append(named_result(f"mixing {kernel.label}", "mixing", report))
            rows.append([kernel.label, report.unit, report.t_mix, report.site_updates, report.reversible_lower,
                         report.spectral_upper, report.verdict])
            if run_config.csv:
                horizon = run_config.t_max or report.t_mix or t_max
                curves.append(mixing.distance_curve(kernel, horizon))
        if run_config.csv:
            write_curve_csv(curves, run_config.csv)
        return results, rows, ["kernel", "unit", "t_mix", "site updates", "lower", "upper", "verdict"]

    def _verify(self, run_config: RunConfig) -> Summary:
        kernels = build_site_kernels(_require_model(run_config))
        results = run_suite(run_config.suite or "all", kernels, run_config)

        counts: dict[str, Counter] = {}
        for result in results:
            counts.setdefault(result.name.split()[0], Counter())[result.verdict] += 1
        rows = [[check, tally["pass"], tally["fail"], tally["info"]] for check, tally in counts.items()]
        return results, rows, ["check", "pass", "fail", "info"]

    def _certify(self, run_config: RunConfig) -> Summary:
        kernels = build_site_kernels(_require_model(run_config)) if run_config.model else None
        n = _single_n(run_config, kernels.n if kernels else None)
        if kernels is not None and n != kernels.n:
            raise UsageError(f"--n {n} does not match the {kernels.n} sites of the model")

        if run_config.sequence is None:
            if n is None or run_config.trials is None:
                raise UsageError("certify needs --seq, or --n with --trials for the sampling experiment")
            verdicts = schedules.certificate_experiment(n, run_config.trials, run_config.seed)
            results = [named_result(verdict.check, "check", verdict) for verdict in verdicts]
            return results, [[v.check, v.verdict] for v in verdicts], ["check", "verdict"]

        seq = _read_sequence(run_config, n)
        delta = run_config.delta[0] if run_config.delta else None
        if delta is None and kernels is not None:
            delta = spectral.glauber_gap(kernels)
        cert = schedules.certify_sequence(seq, delta=delta)
        results = [named_result("certificate", "certificate", cert)]
        if kernels is not None:
            tolerance = run_config.tolerance("verification", forge.get_config().engine.tolerances.verification)
            results.append(named_result("certified-sequence", "spectral",
                                        spectral.certified_sequence_bound(kernels, seq, delta, tolerance)))
        rows = [[cert.n, cert.length, cert.cover_time, cert.cover_threshold, cert.sum_k, cert.sum_threshold,
                 cert.accepted]]
        return results, rows, ["n", "L", "cover time", "limit", "sum k", "limit", "accepted"]

    def _recht_re(self, run_config: RunConfig) -> Summary:
        n_values = run_config.n or DEFAULT_RECHT_RE_SITES
        deltas = run_config.delta or DEFAULT_RECHT_RE_DELTAS
        rows = projections.recht_re_sweep(n_values, deltas)
        results = [named_result("recht-re sweep", "table", rows)]
        results.extend(named_result(f"{verdict.check} n={verdict['values']['n']}", "check", verdict)
                       for verdict in projections.sweep_verdicts(rows))
        if run_config.csv:
            write_table_csv(rows, SWEEP_COLUMNS, run_config.csv)
        return results, [[row[column] for column in SWEEP_COLUMNS] for row in rows], SWEEP_COLUMNS

    def _hardcore(self, run_config: RunConfig) -> Summary:
        n_values = run_config.n or DEFAULT_SEPARATION_SITES
        epsilon = _epsilon(run_config)
        fugacity = _fugacity(run_config)
        table = hardcore.separation_experiment(n_values, epsilon, fugacity, t_max=run_config.t_max)

        results = [named_result("separation", "table", list(table.rows))]
        results.extend(named_result(verdict.check, "check", verdict)
                       for verdict in hardcore.separation_verdicts(table))
        for row in table.rows:
            if row.n <= COMPACT_CHECK_SITES:
                results.append(named_result(f"compact-equivalence n={row.n}", "check",
                                            hardcore.compact_equivalence_check(row.n, fugacity)))
            if fugacity == 1.0:
                results.append(named_result(f"glauber-tail n={row.n}", "check",
                                            hardcore.tail_bound_check(row.n, max(TAIL_HORIZON, 10 * row.n))))
        if run_config.csv:
            write_table_csv(table.rows, SEPARATION_COLUMNS, run_config.csv)
        return results, [[row[column] for column in SEPARATION_COLUMNS] for row in table.rows], SEPARATION_COLUMNS

    def _sim(self, run_config: RunConfig) -> Summary:
        n = _single_n(run_config, DEFAULT_SIM_SITES)
        s = run_config.s or DEFAULT_SIM_EXCITATIONS
        trials = run_config.trials if run_config.trials is not None else DEFAULT_SIM_TRIALS
        fugacity = _fugacity(run_config)
        seed = run_config.seed

        trajectory = hardcore.simulate_scan(n, run_config.t_max or DEFAULT_SIM_SWEEPS, seed, fugacity=fugacity)
        verdicts = [hardcore.nu_moment_check(n, s, trials, seed, fugacity),
                    hardcore.decomposition_check(n, s, trials, seed, fugacity=fugacity)]
        if n >= CONCENTRATION_MIN_SITES:
            verdicts.append(hardcore.concentration_check(n, trials, seed, fugacity=fugacity))

        results = [named_result("trajectory", "trajectory", trajectory,
                                verdict="pass" if trajectory.interleaved else "fail")]
        results.extend(named_result(verdict.check, "check", verdict) for verdict in verdicts)
        rows = [["trajectory", f"{len(trajectory.tau)} tau / {len(trajectory.nu)} nu", results[0].verdict]]
        rows.extend([verdict.check, "", verdict.verdict] for verdict in verdicts)
        return results, rows, ["check", "events", "verdict"]

    COMMANDS = {
        "spectra": _spectra,
        "mix": _mix,
        "verify": _verify,
        "certify": _certify,
        "recht-re": _recht_re,
        "hardcore": _hardcore,
        "sim": _sim,
    }

    #
    # Shell commands
    #
    def do_spectra(self, arg):
        """
        Usage:
            spectra --model MODEL [--seq SEQUENCE] [--out FILE]

        Operator norm, spectral gap and Laplacian singular value of the Glauber kernel, the
        identity scan and optionally one update sequence, with the projection checks of every
        site kernel.
        """
        self._run("spectra", arg)

    def do_mix(self, arg):
        """
        Usage:
            mix --model MODEL [--eps EPS] [--tmax T] [--unit steps|sweeps] [--csv FILE] [--out FILE]

        Exact mixing time of Glauber dynamics (site-steps) and the identity scan (sweeps)
        next to their spectral bounds. --csv writes the distance curves.
        """
        self._run("mix", arg)

    def do_verify(self, arg):
        """
        Usage:
            verify --model MODEL [--suite SUITE] [--trials N] [--seed SEED] [--tol NAME=VALUE] [--out FILE]

        Suites: scan-gap (cor32), sequence-gap (thm31), supersequence-gap (thm36), laplacian (lemma27),
        converse (thm35), mixing (thm25), all.
        """
        self._run("verify", arg)

    def do_certify(self, arg):
        """
        Usage:
            certify --n N --seq SEQUENCE [--delta DELTA] [--model MODEL] [--out FILE]
            certify --n N --trials TRIALS [--seed SEED] [--out FILE]

        Linear time certificate of an update sequence (inline or a file). With --model the
        certified norm bound is checked against the exact operator norm. Without --seq the
        acceptance rate is estimated over sampled sequences.
        """
        self._run("certify", arg)

    def do_recht_re(self, arg):
        """
        Usage:
            recht-re [--n N ...] [--delta DELTA ...] [--csv FILE] [--out FILE]

        Product norm of the rank-one equiangular family, direct and closed form.
        """
        self._run("recht-re", arg)

    def do_hardcore(self, arg):
        """
        Usage:
            hardcore [--n N ...] [--eps EPS] [--fugacity LAMBDA] [--tmax T] [--csv FILE] [--out FILE]

        Exact Glauber and scan mixing of the hardcore model on complete graphs.
        """
        self._run("hardcore", arg)

    def do_sim(self, arg):
        """
        Usage:
            sim [--n N] [--s S] [--trials TRIALS] [--tmax SWEEPS] [--seed SEED] [--out FILE]

        Stopping times of the simulated identity scan on the hardcore model of the complete
        graph, with the moment, residue and concentration checks.
        """
        self._run("sim", arg)

    def do_exit(self, _):
        """Exit the shell"""
        return True

    def do_quit(self, _):
        """Exit the shell"""
        return True


def _console_logging(level: str):
    config.logging.log_to_console = True
    ss_log.init_logging('cli', log_level=ss_log.log_level_map[level])
    logging.getLogger('scanspectra').setLevel(ss_log.log_level_map[level])


def run_subcommand(argv: list[str]) -> int:
    cli = ScanSpectraCommandLineInterface(show_prompt=False)
    if not argv:
        cli.logger.error(f"Missing subcommand. Expected one of {', '.join(cli.COMMANDS)}")
        return EXIT_USAGE
    return cli.execute(argv[0], list(argv[1:]))


def shell_main():
    if len(sys.argv) != 1:
        sys.exit(run_subcommand(sys.argv[1:]))

    cli = ScanSpectraCommandLineInterface(show_prompt=True)
    cli.cmdloop()


if __name__ == '__main__':
    try:
        shell_main()
    except KeyboardInterrupt:
        exit()
