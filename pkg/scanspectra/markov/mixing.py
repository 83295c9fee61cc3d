"""Exact total variation mixing by dense evolution, next to the spectral mixing bounds.

One application of a kernel is one step of its own unit: a site-step for Glauber and
single site kernels, a sweep for scans and sequence products. A MixingReport carries the
unit and the equivalent number of single site updates.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from scanspectra.common import forge
from scanspectra.common.constants import MAX_CONVERSE_SITES
from scanspectra.common.exceptions import DomainError, UnsupportedError
from scanspectra.common.threading import ordered_map
from scanspectra.markov.operators import (MarkovKernel, SiteKernelSet, check_projection_properties,
                                          glauber_kernel, scan_kernel)
from scanspectra.markov.spectral import glauber_gap, laplacian_sigma2, spectral_gap
from scanspectra.odm.models.report import MixingReport, Verdict, judge

logger = logging.getLogger('scanspectra.mixing')

MONOTONE_TOL = 1e-12
REFERENCE_EPSILON = 0.1


@dataclass(frozen=True)
class MixingCurve:
    label: str
    unit: str
    d_values: tuple[float, ...]
    updates_per_step: int = 1

    @property
    def horizon(self) -> int:
        return len(self.d_values) - 1

    @property
    def monotone(self) -> bool:
        return all(later <= earlier + MONOTONE_TOL for earlier, later in zip(self.d_values, self.d_values[1:]))

    def first_below(self, epsilon: float) -> Optional[int]:
        for t, d in enumerate(self.d_values):
            if d <= epsilon:
                return t
        return None


def _check_horizon(t: int):
    horizon = forge.get_config().engine.horizon
    if t < 0:
        raise DomainError(f"Time must be non-negative, got {t}")
    if t > horizon:
        raise DomainError(f"t={t} is beyond the configured evolution horizon of {horizon} steps")


def _check_epsilon(epsilon: float):
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")


def _row_distances(power: np.ndarray, weights: np.ndarray) -> float:
    return float(0.5 * np.abs(power - weights[None, :]).sum(axis=1).max())


def _evolve(kernel: MarkovKernel, t_max: int, stop_at: float = None) -> list[float]:
    weights = kernel.weights
    power = np.eye(kernel.size)
    d_values = [_row_distances(power, weights)]
    for _ in range(t_max):
        if stop_at is not None and d_values[-1] <= stop_at:
            break
        power = power @ kernel.matrix
        d_values.append(_row_distances(power, weights))
    return d_values


def worst_case_distance(kernel: MarkovKernel, t: int) -> float:
    """max over starting states of the total variation distance to pi after t steps."""
    _check_horizon(t)
    return _row_distances(np.linalg.matrix_power(kernel.matrix, t), kernel.weights)


def distance_curve(kernel: MarkovKernel, t_max: int) -> MixingCurve:
    _check_horizon(t_max)
    curve = MixingCurve(kernel.label, kernel.unit, tuple(_evolve(kernel, t_max)), kernel.updates_per_step)
    if not curve.monotone:
        logger.warning(f"Distance curve of '{kernel.label}' is not non-increasing")
    return curve


def _doubling_search(kernel: MarkovKernel, epsilon: float, t_max: int) -> Optional[int]:
    # Greedy binary decomposition of the last t with d(t) > epsilon; d is non-increasing
    weights = kernel.weights
    if _row_distances(np.eye(kernel.size), weights) <= epsilon:
        return 0
    powers = [kernel.matrix]
    while 2 ** len(powers) <= t_max:
        powers.append(powers[-1] @ powers[-1])

    base = np.eye(kernel.size)
    t = 0
    for k in reversed(range(len(powers))):
        if t + 2 ** k > t_max:
            continue
        candidate = base @ powers[k]
        if _row_distances(candidate, weights) > epsilon:
            base = candidate
            t += 2 ** k
    return None if t == t_max else t + 1


def mixing_time(kernel: MarkovKernel, epsilon: float, t_max: int, method: str = "evolve") -> MixingReport:
    """Smallest t with d(t) <= epsilon, or exceeded when no t <= t_max qualifies.

    "evolve" multiplies one step at a time. "doubling" searches over repeated squares of the
    kernel, which takes a logarithmic number of products and is what makes chains with
    thousands of steps to mixing tractable.
    """
    _check_epsilon(epsilon)
    if t_max < 1:
        raise DomainError(f"t_max must be at least 1, got {t_max}")
    _check_horizon(t_max)

    if method == "evolve":
        d_values = _evolve(kernel, t_max, stop_at=epsilon)
        t_mix = len(d_values) - 1 if d_values[-1] <= epsilon else None
    elif method == "doubling":
        t_mix = _doubling_search(kernel, epsilon, t_max)
    else:
        raise DomainError(f"Unknown mixing time method '{method}'")
    logger.debug(f"{kernel.label}: t_mix({epsilon}) = {t_mix if t_mix is not None else 'exceeded'} {kernel.unit}")
    return MixingReport({
        "label": kernel.label,
        "unit": kernel.unit,
        "epsilon": epsilon,
        "t_max": t_max,
        "t_mix": t_mix,
        "exceeded": t_mix is None,
        "site_updates": None if t_mix is None else t_mix * kernel.updates_per_step,
    })


def spectral_mixing_bounds(kernel: MarkovKernel, epsilon: float) -> dict:
    """(1/gamma) log(1/(epsilon pi_min)) above; (1/gamma - 1) log(1/(2 epsilon)) below when reversible."""
    _check_epsilon(epsilon)
    gamma = spectral_gap(kernel)
    if not gamma > 0:
        raise DomainError(f"Kernel '{kernel.label}' has no spectral gap")

    reversible = check_projection_properties(kernel).reversible
    return {
        "gap": gamma,
        "reversible": reversible,
        "spectral_upper": math.log(1 / (epsilon * kernel.pi.pi_min)) / gamma,
        "reversible_lower": (1 / gamma - 1) * math.log(1 / (2 * epsilon)) if reversible else None,
    }


def analyze_mixing(kernel: MarkovKernel, epsilon: float, t_max: int, tolerance: float = None) -> MixingReport:
    """Exact mixing time checked against the spectral bounds on both sides."""
    if tolerance is None:
        tolerance = forge.get_config().engine.tolerances.verification
    report = mixing_time(kernel, epsilon, t_max)
    bounds = spectral_mixing_bounds(kernel, epsilon)
    for key, value in bounds.items():
        setattr(report, key, value)

    if report.exceeded:
        # Only a horizon past the upper bound says anything
        report.verdict = "fail" if t_max >= bounds["spectral_upper"] + tolerance else "info"
        return report

    verdicts = [judge(report.t_mix, bounds["spectral_upper"], tolerance)]
    if bounds["reversible_lower"] is not None:
        verdicts.append(judge(bounds["reversible_lower"], report.t_mix, tolerance))
    report.verdict = "fail" if "fail" in verdicts else "pass"
    return report


def scan_mixing_bound_check(kernels: SiteKernelSet, order: Sequence[int] = None, epsilon: float = 0.25,
                            t_max: int = None, tolerance: float = None) -> Verdict:
    """Scan mixing in sweeps against (8 (n + 1) / gamma_GD) log(1/(epsilon pi_min)) + 1."""
    if tolerance is None:
        tolerance = forge.get_config().engine.tolerances.verification
    n = kernels.n
    delta = glauber_gap(kernels)
    bound = 8 * (n + 1) / delta * math.log(1 / (epsilon * kernels.pi.pi_min)) + 1
    if t_max is None:
        t_max = min(math.ceil(bound), forge.get_config().engine.horizon)

    scan = scan_kernel(kernels, order)
    report = mixing_time(scan, epsilon, t_max)
    if report.exceeded:
        verdict = "fail" if t_max >= bound else "info"
    else:
        verdict = judge(report.t_mix, bound, tolerance)
    return Verdict({
        "check": "scan-mixing",
        "verdict": verdict,
        "values": {"label": scan.label, "n": n, "epsilon": epsilon, "glauber_gap": delta,
                   "t_mix_sweeps": report.t_mix, "site_updates": report.site_updates, "bound_sweeps": bound,
                   "t_max": t_max},
    })


def _reference_mixing_time(kernel: MarkovKernel, t_max: int) -> int:
    report = mixing_time(kernel, REFERENCE_EPSILON, t_max)
    if report.exceeded:
        raise DomainError(f"'{kernel.label}' did not reach d(t) <= {REFERENCE_EPSILON} within {t_max} steps")
    return report.t_mix


def nonreversible_mixing_constant(kernel: MarkovKernel, t_max: int = None) -> Verdict:
    """t_mix(1/10) times the Laplacian singular value: the constant of the non-reversible lower bound."""
    t_max = t_max or forge.get_config().engine.horizon
    t_mix = _reference_mixing_time(kernel, t_max)
    sigma2 = laplacian_sigma2(kernel)
    return Verdict({
        "check": "laplacian-mixing-constant",
        "verdict": "info",
        "values": {"label": kernel.label, "unit": kernel.unit, "t_mix": t_mix, "laplacian_sigma2": sigma2,
                   "constant": t_mix * sigma2},
    })


def scan_mixing_constants(kernels: SiteKernelSet, order: Sequence[int] = None, t_max: int = None) -> Verdict:
    """Implied constants of c / sqrt(n gamma) <= t_mix(1/10) <= (C / gamma) log(1/pi_min) for a scan."""
    t_max = t_max or forge.get_config().engine.horizon
    scan = scan_kernel(kernels, order)
    t_mix = _reference_mixing_time(scan, t_max)
    gamma = spectral_gap(scan)
    log_term = math.log(1 / kernels.pi.pi_min)
    return Verdict({
        "check": "scan-mixing-constants",
        "verdict": "info",
        "values": {"label": scan.label, "n": kernels.n, "t_mix_sweeps": t_mix, "gap": gamma,
                   "lower_constant": t_mix * math.sqrt(kernels.n * gamma),
                   "upper_constant": t_mix * gamma / log_term if log_term > 0 else None},
    })


def glauber_from_scan_comparison(kernels: SiteKernelSet, epsilon: float = 0.25, t_max: int = None,
                                 max_workers: int = None) -> Verdict:
    """Glauber mixing next to the polynomial-in-scan-mixing quantities that bound it up to logs."""
    n = kernels.n
    if n > MAX_CONVERSE_SITES:
        raise UnsupportedError(f"Comparing against every scan order needs n <= {MAX_CONVERSE_SITES}, got {n}")
    t_max = t_max or forge.get_config().engine.horizon

    glauber = mixing_time(glauber_kernel(kernels), epsilon, t_max)
    orders = list(itertools.permutations(range(n)))
    scan_times = ordered_map(lambda order: _reference_mixing_time(scan_kernel(kernels, order), t_max), orders,
                             max_workers=max_workers)
    log_term = math.log(1 / (epsilon * kernels.pi.pi_min))
    quartic = [n ** 4 * t ** 4 * log_term for t in scan_times]
    sextic = [n ** 6 * t ** 4 * log_term for t in scan_times]
    return Verdict({
        "check": "glauber-from-scan",
        "verdict": "info",
        "values": {"n": n, "epsilon": epsilon, "t_gd_steps": glauber.t_mix, "scan_t_mix_min": min(scan_times),
                   "scan_t_mix_max": max(scan_times), "max_quartic": max(quartic), "min_sextic": min(sextic)},
    })
