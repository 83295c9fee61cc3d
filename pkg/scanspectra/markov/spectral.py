"""pi-weighted operator norms, spectral gaps and the gap inequalities between samplers.

Every quantity is computed in the conjugated basis C = D^{1/2} M D^{-1/2} (D = diag(pi)),
where the pi-inner product becomes the Euclidean one. The trivial direction sqrt(pi) is
removed by restricting to an orthonormal basis of its complement, so the largest singular
value of the restriction is the norm of M on mean-zero functions.

All logarithms are natural.
"""
from __future__ import annotations

import functools
import itertools
import logging
import math
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from scanspectra.common import forge
from scanspectra.common.constants import (MAX_CONVERSE_SITES, MAX_EXHAUSTIVE_SITES, SAMPLED_PERMUTATIONS,
                                          SINGLE_PERMUTATION_CONSTANT)
from scanspectra.common.exceptions import DomainError, UnsupportedError
from scanspectra.common.random import stream_rng
from scanspectra.common.threading import ordered_map
from scanspectra.markov.operators import (MarkovKernel, SiteKernelSet, check_projection_properties,
                                          ensure_irreducible, glauber_kernel, scan_kernel,
                                          sequence_product_kernel)
from scanspectra.markov.schedules import UpdateSequence, certify_sequence, first_appearances
from scanspectra.markov.statespace import Distribution
from scanspectra.odm.models.report import SpectralReport, judge

logger = logging.getLogger('scanspectra.spectral')


class PiGeometry:
    """Change of basis turning the pi-inner product on the support into the Euclidean one."""

    def __init__(self, pi: Distribution):
        self.sqrt_pi = np.sqrt(pi.weights)
        # Columns: orthonormal basis of the functions orthogonal to constants
        self.basis = linalg.null_space(self.sqrt_pi[None, :])

    @property
    def dimension(self) -> int:
        return self.basis.shape[1]

    @property
    def mean_zero_projector(self) -> np.ndarray:
        return np.eye(self.sqrt_pi.size) - np.outer(self.sqrt_pi, self.sqrt_pi)

    def conjugated(self, matrix: np.ndarray) -> np.ndarray:
        return self.sqrt_pi[:, None] * matrix / self.sqrt_pi[None, :]

    def restrict(self, matrix: np.ndarray) -> np.ndarray:
        """The conjugated operator on the mean-zero subspace, in basis coordinates."""
        return self.basis.T @ self.conjugated(matrix) @ self.basis


@functools.lru_cache(maxsize=32)
def pi_geometry(pi: Distribution) -> PiGeometry:
    return PiGeometry(pi)


def _verification_tolerance(tolerance: Optional[float]) -> float:
    if tolerance is None:
        return forge.get_config().engine.tolerances.verification
    return tolerance


def _require_gap(value: float, what: str):
    if not value > forge.get_config().engine.tolerances.clamp:
        raise DomainError(f"{what} is {value:.3g}, a positive gap is required")


def pi_operator_norm(kernel: MarkovKernel, check_irreducible: bool = True) -> float:
    if check_irreducible:
        ensure_irreducible(kernel)
    geometry = pi_geometry(kernel.pi)
    if geometry.dimension == 0:
        return 0.0
    return float(linalg.svdvals(geometry.restrict(kernel.matrix))[0])


def spectral_gap(kernel: MarkovKernel, check_irreducible: bool = True) -> float:
    return 1.0 - pi_operator_norm(kernel, check_irreducible=check_irreducible)


def laplacian_sigma2(kernel: MarkovKernel, check_irreducible: bool = True) -> float:
    """Smallest singular value of I - M on mean-zero functions."""
    if check_irreducible:
        ensure_irreducible(kernel)
    geometry = pi_geometry(kernel.pi)
    if geometry.dimension == 0:
        return 1.0
    laplacian = np.eye(geometry.dimension) - geometry.restrict(kernel.matrix)
    return float(linalg.svdvals(laplacian)[-1])


def pi_spectrum(kernel: MarkovKernel, mean_zero: bool = False) -> np.ndarray:
    """Ascending eigenvalues of a pi-reversible kernel.

    With mean_zero the eigenvalue 1 of the constants is removed, so the largest absolute
    value of the result is the operator norm.
    """
    tolerance = forge.get_config().engine.tolerances.projection
    verdict = check_projection_properties(kernel, tolerance=tolerance)
    if not verdict.reversible:
        raise DomainError(f"Kernel '{kernel.label}' is not pi-reversible "
                          f"(detailed balance residual {verdict.detailed_balance_residual:.3g})")
    geometry = pi_geometry(kernel.pi)
    symmetric = geometry.restrict(kernel.matrix) if mean_zero else geometry.conjugated(kernel.matrix)
    return linalg.eigvalsh((symmetric + symmetric.T) / 2)


def glauber_gap(kernels: SiteKernelSet) -> float:
    delta = spectral_gap(glauber_kernel(kernels))
    _require_gap(delta, "The Glauber gap")
    return delta


def permutations(n: int, seed: int = None) -> list[tuple[int, ...]]:
    """Every permutation of the sites up to a handful of sites, a fixed sample beyond."""
    if n <= MAX_EXHAUSTIVE_SITES:
        return list(itertools.permutations(range(n)))
    if seed is None:
        seed = forge.get_config().seed
    orders = [tuple(range(n))]
    for stream in range(1, SAMPLED_PERMUTATIONS):
        orders.append(tuple(int(i) for i in stream_rng(seed, stream).permutation(n)))
    return orders


def scan_gaps(kernels: SiteKernelSet, orders: Sequence[Sequence[int]], max_workers: int = None) -> list[float]:
    return ordered_map(lambda order: spectral_gap(scan_kernel(kernels, order)), orders, max_workers=max_workers)


def _report(kernel: MarkovKernel, check: str, norm: float, attained: float, bound: float, tolerance: float,
            verdict: str = None, **extras) -> SpectralReport:
    return SpectralReport({
        "label": kernel.label,
        "check": check,
        "operator_norm": norm,
        "gap": 1.0 - norm,
        "attained": attained,
        "bound_value": bound,
        "residual": bound - attained,
        "verdict": verdict or judge(attained, bound, tolerance),
        "extras": {key: float(value) for key, value in extras.items() if value is not None},
    })


def verify_scan_gap_bound(kernels: SiteKernelSet, order: Sequence[int] = None, delta: float = None,
                          tolerance: float = None) -> SpectralReport:
    """The scan norm against 1 - delta / (8 (n + 1)), delta being the Glauber gap."""
    tolerance = _verification_tolerance(tolerance)
    if delta is None:
        delta = glauber_gap(kernels)
    _require_gap(delta, "The Glauber gap")

    n = kernels.n
    scan = scan_kernel(kernels, order)
    norm = pi_operator_norm(scan)
    bound = 1.0 - delta / (8 * (n + 1))
    logger.debug(f"{scan.label}: norm {norm:.6g}, bound {bound:.6g}")
    return _report(scan, "scan-gap", norm, norm, bound, tolerance, delta=delta, n=n)


def _covering_stats(seq: UpdateSequence):
    stats = first_appearances(seq)
    if not stats.covered:
        missing = sorted(set(range(seq.n)) - set(stats.order))
        raise DomainError(f"incomplete cover: sites {missing} never updated")
    return stats


def sequence_gap_bound(kernels: SiteKernelSet, seq: UpdateSequence, delta: float = None,
                       tolerance: float = None) -> SpectralReport:
    """Squared norm of a covering sequence against 1 - n delta / (8 sum_j k_j).

    The bound is stated for the prefix ending at the cover time; later updates can only
    shrink the norm, so both the prefix and the whole sequence are compared against it.
    """
    tolerance = _verification_tolerance(tolerance)
    if delta is None:
        delta = glauber_gap(kernels)
    _require_gap(delta, "The Glauber gap")
    stats = _covering_stats(seq)

    n = kernels.n
    product = sequence_product_kernel(kernels, seq)
    norm = pi_operator_norm(product)
    if stats.cover_time == len(seq):
        prefix_norm = norm
    else:
        prefix_norm = pi_operator_norm(sequence_product_kernel(kernels, seq.prefix(stats.cover_time)))

    bound = 1.0 - n * delta / (8 * stats.sum_k)
    attained = max(norm, prefix_norm) ** 2
    return _report(product, "sequence-gap", norm, attained, bound, tolerance, delta=delta, n=n,
                   sum_k=stats.sum_k, cover_time=stats.cover_time, length=len(seq), prefix_norm=prefix_norm)


def supersequence_gap_bound(kernels: SiteKernelSet, seq: UpdateSequence, delta_scan: float = None,
                            tolerance: float = None) -> SpectralReport:
    """Norm of a sequence containing a scan, against 1 - delta_scan^2 / (8 (L - n + 1)).

    L is the cover time and delta_scan the gap of the scan visiting the sites in their order
    of first appearance.
    """
    tolerance = _verification_tolerance(tolerance)
    stats = _covering_stats(seq)
    if delta_scan is None:
        delta_scan = spectral_gap(scan_kernel(kernels, stats.order))
    _require_gap(delta_scan, "The scan gap")

    n = kernels.n
    length = stats.cover_time
    product = sequence_product_kernel(kernels, seq)
    norm = pi_operator_norm(product)
    prefix_norm = norm if length == len(seq) else pi_operator_norm(
        sequence_product_kernel(kernels, seq.prefix(length)))

    bound = 1.0 - delta_scan ** 2 / (8 * (length - n + 1))
    return _report(product, "supersequence-gap", norm, max(norm, prefix_norm), bound, tolerance,
                   delta_scan=delta_scan, n=n, cover_time=length, length=len(seq), prefix_norm=prefix_norm)


def converse_power_check(kernels: SiteKernelSet, tolerance: float = None, max_workers: int = None) -> SpectralReport:
    """If every scan has gap at least delta, L Glauber steps contract like one good scan.

    delta is the smallest scan gap over all n! orders, L = ceil(5 n log(200 n / delta)) and the
    check is ||G||^L <= 1 - delta^2 / (100 n log(200 n / delta)).
    """
    tolerance = _verification_tolerance(tolerance)
    n = kernels.n
    if n > MAX_CONVERSE_SITES:
        raise UnsupportedError(f"The converse check enumerates all {n}! scan orders, "
                               f"only n <= {MAX_CONVERSE_SITES} is supported")

    gaps = scan_gaps(kernels, list(itertools.permutations(range(n))), max_workers=max_workers)
    delta = min(gaps)
    _require_gap(delta, "The smallest scan gap")

    log_term = math.log(200 * n / delta)
    power = math.ceil(5 * n * log_term)
    glauber = glauber_kernel(kernels)
    norm = pi_operator_norm(glauber)
    attained = norm ** power
    bound = 1.0 - delta ** 2 / (100 * n * log_term)
    return _report(glauber, "converse", norm, attained, bound, tolerance, delta=delta, n=n, L=power,
                   gap_lower_bound=1.0 - bound ** (1.0 / power), permutations=len(gaps))


def converse_single_permutation_check(kernels: SiteKernelSet, order: Sequence[int] = None,
                                      constant: float = SINGLE_PERMUTATION_CONSTANT,
                                      tolerance: float = None) -> SpectralReport:
    """The converse with a single good scan order.

    With delta the gap of that scan and L = ceil(C n^2 log(100 C n / delta)), checks
    ||G||^L <= 1 - delta^2 / (8 C n^2 log(100 C n / delta)) + delta^100 / (100 C n^100).
    """
    tolerance = _verification_tolerance(tolerance)
    if not constant > 0:
        raise DomainError(f"The constant must be positive, got {constant}")
    n = kernels.n
    scan = scan_kernel(kernels, order)
    delta = spectral_gap(scan)
    _require_gap(delta, f"The gap of {scan.label}")

    log_term = math.log(100 * constant * n / delta)
    power = math.ceil(constant * n * n * log_term)
    remainder = math.exp(100 * math.log(delta) - math.log(100 * constant) - 100 * math.log(n))
    bound = 1.0 - delta ** 2 / (8 * constant * n * n * log_term) + remainder

    glauber = glauber_kernel(kernels)
    norm = pi_operator_norm(glauber)
    report = _report(glauber, "converse-single-permutation", norm, norm ** power, bound, tolerance,
                     delta=delta, n=n, L=power, constant=constant, gap_lower_bound=1.0 - bound ** (1.0 / power))
    report.label = f"glauber vs {scan.label}"
    return report


def laplacian_sandwich(kernel: MarkovKernel, n: int, tolerance: float = None,
                       check_irreducible: bool = True) -> SpectralReport:
    """gamma <= sigma_2(I - M) <= sqrt(2 n gamma) for a product of site projections."""
    tolerance = _verification_tolerance(tolerance)
    norm = pi_operator_norm(kernel, check_irreducible=check_irreducible)
    gamma = 1.0 - norm
    sigma2 = laplacian_sigma2(kernel, check_irreducible=check_irreducible)
    upper = math.sqrt(2 * n * max(gamma, 0.0))
    lower_ok = gamma <= sigma2 + tolerance
    upper_ok = sigma2 <= upper + tolerance

    report = _report(kernel, "laplacian", norm, sigma2, upper, tolerance,
                     verdict="pass" if lower_ok and upper_ok else "fail", n=n, lower_bound=gamma)
    report.laplacian_sigma2 = sigma2
    return report


def laplacian_comparison(kernels: SiteKernelSet, order: Sequence[int] = None,
                         tolerance: float = None) -> SpectralReport:
    return laplacian_sandwich(scan_kernel(kernels, order), kernels.n, tolerance=tolerance)


def certified_sequence_bound(kernels: SiteKernelSet, seq: UpdateSequence, delta: float = None,
                             tolerance: float = None) -> SpectralReport:
    """Accepted sequences contract at least like 1 - delta / (32 n); rejected ones are reported only."""
    tolerance = _verification_tolerance(tolerance)
    if delta is None:
        delta = glauber_gap(kernels)
    cert = certify_sequence(seq, delta=delta)
    product = sequence_product_kernel(kernels, seq)
    norm = pi_operator_norm(product, check_irreducible=cert.covered)
    bound = cert.implied_norm_bound(delta)
    return _report(product, "certified-sequence", norm, norm, bound, tolerance,
                   verdict=None if cert.accepted else "info", delta=delta, n=kernels.n,
                   accepted=float(cert.accepted), sum_k=cert.sum_k, cover_time=cert.cover_time)


def kernel_summary(kernel: MarkovKernel, check_irreducible: bool = True) -> SpectralReport:
    norm = pi_operator_norm(kernel, check_irreducible=check_irreducible)
    return SpectralReport({
        "label": kernel.label,
        "check": "summary",
        "operator_norm": norm,
        "gap": 1.0 - norm,
        "laplacian_sigma2": laplacian_sigma2(kernel, check_irreducible=check_irreducible),
        "extras": {"states": float(kernel.size), "updates_per_step": float(kernel.updates_per_step)},
    })


def glauber_psd_check(kernels: SiteKernelSet, tolerance: float = None) -> SpectralReport:
    """An average of projections has no negative eigenvalue, and its norm is its second eigenvalue."""
    if tolerance is None:
        tolerance = forge.get_config().engine.tolerances.projection
    glauber = glauber_kernel(kernels)
    spectrum = pi_spectrum(glauber)
    norm = pi_operator_norm(glauber)
    mean_zero = pi_spectrum(glauber, mean_zero=True)
    eigen_norm = float(np.abs(mean_zero).max()) if mean_zero.size else 0.0
    psd = spectrum[0] >= -tolerance
    agrees = abs(eigen_norm - norm) <= _verification_tolerance(None)
    return SpectralReport({
        "label": glauber.label,
        "check": "glauber-psd",
        "operator_norm": norm,
        "gap": 1.0 - norm,
        "attained": -float(spectrum[0]),
        "bound_value": tolerance,
        "residual": tolerance + float(spectrum[0]),
        "verdict": "pass" if psd and agrees else "fail",
        "extras": {"smallest_eigenvalue": float(spectrum[0]), "eigen_norm": eigen_norm},
    })
