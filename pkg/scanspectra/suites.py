"""Verification suites behind the `verify` subcommand.

Every suite takes the site kernels of one model and returns named results whose verdicts
decide the exit status. Permutations, sampled sequences and mixing checks run on the
analysis pool; results come back in input order so reports stay byte-identical for a
given seed.
"""
from __future__ import annotations

import logging
from typing import Callable

from scanspectra.common import forge
from scanspectra.common.constants import MAX_CONVERSE_SITES
from scanspectra.common.exceptions import DomainError, UnsupportedError
from scanspectra.common.threading import ordered_map
from scanspectra.markov import mixing, schedules, spectral
from scanspectra.markov.operators import SiteKernelSet, check_projection_properties, glauber_kernel, scan_kernel
from scanspectra.odm.models.config import SUITE_ALIASES, RunConfig, canonical_suite
from scanspectra.odm.models.report import NamedResult
from scanspectra.reporting import named_result

logger = logging.getLogger('scanspectra.suites')

DEFAULT_SEQUENCE_TRIALS = 200
DEFAULT_EPSILON = 0.25


def _tolerance(run_config: RunConfig) -> float:
    return run_config.tolerance("verification", forge.get_config().engine.tolerances.verification)


def _trials(run_config: RunConfig) -> int:
    return run_config.trials if run_config.trials is not None else DEFAULT_SEQUENCE_TRIALS


def site_projection_results(kernels: SiteKernelSet, run_config: RunConfig) -> list[NamedResult]:
    tolerance = run_config.tolerance("projection", forge.get_config().engine.tolerances.projection)
    return [named_result(f"projection {kernel.label}", "projection", check_projection_properties(kernel, tolerance))
            for kernel in kernels.kernels]


def scan_gap_suite(kernels: SiteKernelSet, run_config: RunConfig) -> list[NamedResult]:
    tolerance = _tolerance(run_config)
    delta = spectral.glauber_gap(kernels)
    orders = spectral.permutations(kernels.n, seed=run_config.seed)
    reports = ordered_map(lambda order: spectral.verify_scan_gap_bound(kernels, order, delta, tolerance), orders)
    return [named_result(f"scan-gap {report.label}", "spectral", report) for report in reports]


def sequence_gap_suite(kernels: SiteKernelSet, run_config: RunConfig) -> list[NamedResult]:
    tolerance = _tolerance(run_config)
    delta = spectral.glauber_gap(kernels)

    def _check(stream: int) -> list[NamedResult]:
        seq = schedules.sample_covering_sequence(kernels.n, run_config.seed, stream)
        return [
            named_result(f"sequence-gap trial {stream}", "spectral",
                         spectral.sequence_gap_bound(kernels, seq, delta, tolerance)),
            named_result(f"certified-sequence trial {stream}", "spectral",
                         spectral.certified_sequence_bound(kernels, seq, delta, tolerance)),
        ]

    return [result for pair in ordered_map(_check, range(_trials(run_config))) for result in pair]


def supersequence_gap_suite(kernels: SiteKernelSet, run_config: RunConfig) -> list[NamedResult]:
    tolerance = _tolerance(run_config)
    # Supersequences first visit the sites in identity order
    delta_scan = spectral.spectral_gap(scan_kernel(kernels))

    def _check(stream: int) -> NamedResult:
        seq = schedules.sample_supersequence(kernels.n, run_config.seed, stream)
        report = spectral.supersequence_gap_bound(kernels, seq, delta_scan, tolerance)
        return named_result(f"supersequence-gap trial {stream}", "spectral", report)

    return ordered_map(_check, range(_trials(run_config)))


def laplacian_suite(kernels: SiteKernelSet, run_config: RunConfig) -> list[NamedResult]:
    report = spectral.laplacian_comparison(kernels, tolerance=_tolerance(run_config))
    return [named_result(f"laplacian {report.label}", "spectral", report)]


def converse_suite(kernels: SiteKernelSet, run_config: RunConfig) -> list[NamedResult]:
    tolerance = _tolerance(run_config)
    results = []
    if kernels.n <= MAX_CONVERSE_SITES:
        results.append(named_result("converse all-permutations", "spectral",
                                    spectral.converse_power_check(kernels, tolerance=tolerance)))
    elif canonical_suite(run_config.suite or "all") == "converse":
        raise UnsupportedError(f"The converse suite enumerates all scan orders, only n <= {MAX_CONVERSE_SITES}")
    else:
        logger.warning(f"Skipping the all-permutations converse check for n={kernels.n}")
    results.append(named_result("converse single-permutation", "spectral",
                                spectral.converse_single_permutation_check(kernels, tolerance=tolerance)))
    return results


def mixing_suite(kernels: SiteKernelSet, run_config: RunConfig) -> list[NamedResult]:
    tolerance = _tolerance(run_config)
    epsilon = run_config.epsilon or DEFAULT_EPSILON
    t_max = run_config.t_max or forge.get_config().engine.horizon

    glauber = glauber_kernel(kernels)
    scan = scan_kernel(kernels)
    results = [
        named_result("mixing glauber", "mixing", mixing.analyze_mixing(glauber, epsilon, t_max, tolerance)),
        named_result(f"mixing {scan.label}", "mixing", mixing.analyze_mixing(scan, epsilon, t_max, tolerance)),
    ]

    orders = spectral.permutations(kernels.n, seed=run_config.seed)
    checks = ordered_map(lambda order: mixing.scan_mixing_bound_check(kernels, order, epsilon, t_max, tolerance),
                         orders)
    results.extend(named_result(f"scan-mixing {check['values']['label']}", "check", check) for check in checks)

    results.append(named_result("laplacian-mixing-constant", "check",
                                mixing.nonreversible_mixing_constant(scan, t_max)))
    results.append(named_result("scan-mixing-constants", "check", mixing.scan_mixing_constants(kernels, t_max=t_max)))
    if kernels.n <= MAX_CONVERSE_SITES:
        results.append(named_result("glauber-from-scan", "check",
                                    mixing.glauber_from_scan_comparison(kernels, epsilon, t_max)))
    return results


SUITES: dict[str, Callable[[SiteKernelSet, RunConfig], list[NamedResult]]] = {
    "scan-gap": scan_gap_suite,
    "sequence-gap": sequence_gap_suite,
    "supersequence-gap": supersequence_gap_suite,
    "laplacian": laplacian_suite,
    "converse": converse_suite,
    "mixing": mixing_suite,
}


def run_suite(name: str, kernels: SiteKernelSet, run_config: RunConfig) -> list[NamedResult]:
    name = canonical_suite(name)
    if name == "all":
        names = list(SUITES)
    elif name in SUITES:
        names = [name]
    else:
        expected = list(SUITES) + ["all"] + list(SUITE_ALIASES)
        raise DomainError(f"Unknown suite '{name}', expected one of {', '.join(expected)}")

    results = site_projection_results(kernels, run_config)
    for suite in names:
        logger.info(f"Running suite {suite} on {kernels.n} sites")
        results.extend(SUITES[suite](kernels, run_config))
    return results
