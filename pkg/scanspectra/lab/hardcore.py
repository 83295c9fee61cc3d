"""The hardcore model on the complete graph K_n, at scale.

On K_n the independent sets are the empty set and the n singletons, so the chains live on
n + 1 states: 0 is the empty set and i in 1..n is the singleton of site i - 1. The compact
kernels below are entrywise equal to the ones the operators module builds on the full
2^n space, restricted to the support.

Simulated scans update the sites 0, 1, ..., n - 1 cyclically: site update t (1-based)
touches site (t - 1) mod n. Stopping times count site updates:

    tau_1 = first t >= 1 with X^t = 0, nu_s = first t > tau_s with X^t != 0,
    tau_{s+1} = first t > nu_s with X^t = 0.

A trajectory started at 0 has tau_1 = 0.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np
from scipy import stats

from scanspectra.common import forge
from scanspectra.common.constants import CONCENTRATION_MIN_SITES, MIN_TRIALS
from scanspectra.common.exceptions import DomainError, SimulationError
from scanspectra.common.random import stream_rng
from scanspectra.common.threading import ordered_map
from scanspectra.markov.mixing import distance_curve, mixing_time
from scanspectra.markov.models import build_hardcore, complete_graph
from scanspectra.markov.operators import MarkovKernel, build_site_kernels, glauber_kernel, scan_kernel
from scanspectra.markov.spectral import spectral_gap
from scanspectra.markov.statespace import Distribution, ProductSpace, tv_distance
from scanspectra.odm.models.report import SeparationRow, TrajectoryStats, Verdict, judge

logger = logging.getLogger('scanspectra.hardcore')

EMPTY = 0
DECOMPOSITION_TV = 0.05
VARIANCE_SLACK = 0.1
CONCENTRATION_MASS = 0.75
SLOPE_MIN_SITES = 4
# Fewer fitted sizes than this leave the slope verdicts informational
SLOPE_MIN_POINTS = 3
GLAUBER_SLOPE_BAND = (0.8, 1.2)
SCAN_SLOPE_BAND = (1.7, 2.3)


def _probabilities(fugacity: float) -> tuple[float, float]:
    if not (fugacity > 0 and math.isfinite(fugacity)):
        raise DomainError(f"Fugacity must be positive and finite, got {fugacity}")
    return 1.0 / (1.0 + fugacity), fugacity / (1.0 + fugacity)


def _check_sites(n: int):
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n}")


def check_state(n: int, state: int) -> int:
    if not 0 <= state <= n:
        raise DomainError(f"Hardcore state {state} outside {{0..{n}}}")
    return int(state)


def compact_distribution(n: int, fugacity: float = 1.0) -> Distribution:
    _check_sites(n)
    _probabilities(fugacity)
    weights = np.full(n + 1, float(fugacity))
    weights[EMPTY] = 1.0
    return Distribution(ProductSpace([n + 1], state_cap=n + 1), weights / weights.sum())


def compact_site_kernel(n: int, site: int, fugacity: float = 1.0, pi: Distribution = None) -> MarkovKernel:
    if not 0 <= site < n:
        raise DomainError(f"Site {site} out of range for K_{n}")
    p_empty, p_occupied = _probabilities(fugacity)
    pi = pi or compact_distribution(n, fugacity)
    matrix = np.eye(n + 1)
    state = site + 1
    for row in (EMPTY, state):
        matrix[row, row] = 0.0
        matrix[row, EMPTY] = p_empty
        matrix[row, state] = p_occupied
    return MarkovKernel(matrix, pi, f"compact site {site}")


def compact_glauber_kernel(n: int, fugacity: float = 1.0) -> MarkovKernel:
    p_empty, p_occupied = _probabilities(fugacity)
    pi = compact_distribution(n, fugacity)
    matrix = np.diag(np.full(n + 1, 1.0 - p_empty / n))
    matrix[EMPTY, EMPTY] = p_empty
    matrix[EMPTY, 1:] = p_occupied / n
    matrix[1:, EMPTY] = p_empty / n
    return MarkovKernel(matrix, pi, f"compact glauber K_{n}")


def compact_scan_kernel(n: int, fugacity: float = 1.0, order: Sequence[int] = None) -> MarkovKernel:
    """Product of the compact site kernels, each right multiplication touching two columns."""
    p_empty, p_occupied = _probabilities(fugacity)
    pi = compact_distribution(n, fugacity)
    order = tuple(range(n)) if order is None else tuple(int(i) for i in order)
    if sorted(order) != list(range(n)):
        raise DomainError(f"Scan order is not a permutation of {n} sites")

    matrix = np.eye(n + 1)
    for site in order:
        state = site + 1
        merged = matrix[:, EMPTY] + matrix[:, state]
        matrix[:, EMPTY] = p_empty * merged
        matrix[:, state] = p_occupied * merged
    return MarkovKernel(matrix, pi, f"compact scan K_{n}", unit="sweeps", updates_per_step=n)


def compact_equivalence_check(n: int, fugacity: float = 1.0) -> Verdict:
    """Compact kernels against the general construction on 2^n states."""
    dist = build_hardcore(complete_graph(n), fugacity)
    kernels = build_site_kernels(dist)
    glauber_residual = float(np.abs(glauber_kernel(kernels).matrix - compact_glauber_kernel(n, fugacity).matrix).max())
    scan_residual = float(np.abs(scan_kernel(kernels).matrix - compact_scan_kernel(n, fugacity).matrix).max())
    tolerance = forge.get_config().engine.tolerances.stochastic_row
    return Verdict({
        "check": "compact-equivalence",
        "verdict": judge(max(glauber_residual, scan_residual), tolerance, 0.0),
        "values": {"n": n, "fugacity": fugacity, "glauber_residual": glauber_residual,
                   "scan_residual": scan_residual},
    })


def _next_update(state: int, time: int, n: int) -> int:
    # First update after `time` touching the occupied site state - 1
    return time + ((state - 1 - time) % n) + 1


def _events(n: int, rng: np.random.Generator, start: int, fugacity: float) -> Iterator[tuple[str, int, int]]:
    """Endless (kind, time, state) events of a scan trajectory, kind being "tau" or "nu"."""
    p_empty, p_occupied = _probabilities(fugacity)
    time = 0
    state = start
    while True:
        if state != EMPTY:
            time = _next_update(state, time, n) + (int(rng.geometric(p_empty)) - 1) * n
            state = EMPTY
            yield "tau", time, state
        time += int(rng.geometric(p_occupied))
        state = (time - 1) % n + 1
        yield "nu", time, state


def simulate_scan(n: int, sweeps: int, seed: int, start: Optional[int] = None, stream: int = 0,
                  fugacity: float = 1.0) -> TrajectoryStats:
    """Every stopping time within sweeps * n site updates of the identity scan, started at e_n by default.

    The simulation jumps from one state change to the next, drawing the number of updates in
    between from their geometric laws.
    """
    _check_sites(n)
    if sweeps < 0:
        raise DomainError(f"sweeps must be non-negative, got {sweeps}")
    start = n if start is None else check_state(n, start)
    horizon = sweeps * n
    max_events = forge.get_config().simulation.max_events

    tau = [0] if start == EMPTY else []
    nu = []
    state = start
    for kind, time, new_state in _events(n, stream_rng(seed, stream), start, fugacity):
        if time > horizon:
            break
        (tau if kind == "tau" else nu).append(time)
        state = new_state
        if len(tau) + len(nu) > max_events:
            raise SimulationError(f"More than {max_events} stopping times within {horizon} updates "
                                  f"(n={n}, seed={seed}, stream={stream})")

    return TrajectoryStats({
        "n": n,
        "total_updates": horizon,
        "start": start,
        "tau": tau,
        "nu": nu,
        "final_state": state,
        "seed": seed,
        "stream": stream,
    })


def _nu_s(n: int, s: int, seed: int, stream: int, fugacity: float, max_updates: int) -> Optional[int]:
    excitations = 0
    for kind, time, _ in _events(n, stream_rng(seed, stream), n, fugacity):
        if time > max_updates:
            return None
        if kind == "nu":
            excitations += 1
            if excitations == s:
                return time


def _sample_nu(n: int, s: int, trials: int, seed: int, fugacity: float) -> np.ndarray:
    _check_sites(n)
    if s < 1:
        raise DomainError(f"s must be at least 1, got {s}")
    if trials < MIN_TRIALS:
        raise DomainError(f"At least {MIN_TRIALS} trials are needed, got {trials}")
    max_updates = forge.get_config().simulation.max_updates

    values = ordered_map(lambda stream: _nu_s(n, s, seed, stream, fugacity, max_updates), range(trials))
    # No censoring: every trajectory must reach nu_s
    truncated = sum(value is None for value in values)
    if truncated:
        raise SimulationError(f"{truncated} of {trials} trajectories did not reach nu_{s} "
                              f"within {max_updates} updates")
    return np.array(values, dtype=float)


def nu_moment_check(n: int, s: int, trials: int, seed: int, fugacity: float = 1.0) -> Verdict:
    """Sample mean and variance of nu_s against their exact values, 2 (n + 1) s and 2 (n^2 + 1) s at fugacity 1."""
    p_empty, p_occupied = _probabilities(fugacity)
    samples = _sample_nu(n, s, trials, seed, fugacity)
    count = samples.size

    expected_mean = s * (n / p_empty + 1 / p_occupied)
    expected_variance = s * (n * n * (1 - p_empty) / p_empty ** 2 + (1 - p_occupied) / p_occupied ** 2)
    mean = float(samples.mean())
    variance = float(samples.var(ddof=1))
    mean_error = math.sqrt(variance / count)
    variance_error = variance * math.sqrt(2.0 / (count - 1))

    mean_ok = abs(mean - expected_mean) <= 3 * mean_error
    variance_ok = abs(variance - expected_variance) <= VARIANCE_SLACK * expected_variance + 3 * variance_error
    return Verdict({
        "check": "nu-moments",
        "verdict": "pass" if mean_ok and variance_ok else "fail",
        "values": {"n": n, "s": s, "trials": count, "seed": seed, "mean": mean, "expected_mean": expected_mean,
                   "mean_standard_error": mean_error, "variance": variance,
                   "expected_variance": expected_variance, "variance_standard_error": variance_error},
    })


def _histogram(residues: np.ndarray, n: int) -> np.ndarray:
    return np.bincount(residues.astype(np.int64) % n, minlength=n) / residues.size


def exact_residue_law(n: int, s: int, fugacity: float = 1.0) -> np.ndarray:
    """Law of (Y_1 + ... + Y_s) mod n for i.i.d. Y_i ~ Geom(lambda / (1 + lambda)) on {1, 2, ...}."""
    _check_sites(n)
    if s < 0:
        raise DomainError(f"s must be non-negative, got {s}")
    _, p = _probabilities(fugacity)
    q = 1.0 - p
    residues = np.arange(n)
    # r = 0 collects k = n, 2n, ...
    first = np.where(residues == 0, n, residues)
    single = p * q ** (first - 1) / (1 - q ** n)
    law = np.real(np.fft.ifft(np.fft.fft(single) ** s))
    law = np.clip(law, 0.0, None)
    return law / law.sum()


def decomposition_check(n: int, s: int, trials: int, seed: int, reference: str = "geometric",
                        fugacity: float = 1.0) -> Verdict:
    """nu_s mod n against the residues of a sum of s geometric excitation waits.

    reference "uniform" swaps in uniform residues, which the check must reject for small s.
    """
    samples = _sample_nu(n, s, trials, seed, fugacity)
    empirical = _histogram(samples, n)

    # Synthetic draws use the stream after the last trajectory
    rng = stream_rng(seed, trials)
    _, p_occupied = _probabilities(fugacity)
    if reference == "geometric":
        synthetic = rng.geometric(p_occupied, size=(trials, s)).sum(axis=1)
    elif reference == "uniform":
        synthetic = rng.integers(0, n, size=trials)
    else:
        raise DomainError(f"Unknown reference law '{reference}'")
    synthetic_law = _histogram(synthetic, n)

    distance = tv_distance(empirical, synthetic_law)
    return Verdict({
        "check": "residue-decomposition",
        "verdict": judge(distance, DECOMPOSITION_TV, 0.0),
        "values": {"n": n, "s": s, "trials": int(samples.size), "seed": seed, "reference": reference,
                   "tv_synthetic": distance,
                   "tv_exact": tv_distance(empirical, exact_residue_law(n, s, fugacity)),
                   "empirical": empirical.tolist(), "synthetic": synthetic_law.tolist()},
    })


def _last_excitation(n: int, horizon: int, seed: int, stream: int, fugacity: float) -> int:
    last = 0
    for kind, time, _ in _events(n, stream_rng(seed, stream), n, fugacity):
        if time > horizon:
            return last
        if kind == "nu":
            last = time


def concentration_check(n: int, trials: int, seed: int, c_prime: float = None, fugacity: float = 1.0) -> Verdict:
    """After c' n^3 site updates, the last excitation time mod n still sits on few residues.

    Three quarters of the mass must fit on at most n/4 - 1 residues. nu = 0 when nothing was
    excited yet.
    """
    if n < CONCENTRATION_MIN_SITES:
        raise DomainError(f"The concentration check needs n >= {CONCENTRATION_MIN_SITES}, got {n}")
    if trials < MIN_TRIALS:
        raise DomainError(f"At least {MIN_TRIALS} trials are needed, got {trials}")
    if c_prime is None:
        c_prime = forge.get_config().simulation.concentration_c_prime
    if not c_prime > 0:
        raise DomainError(f"c' must be positive, got {c_prime}")

    horizon = math.ceil(c_prime * n ** 3)
    residues = np.array(ordered_map(lambda stream: _last_excitation(n, horizon, seed, stream, fugacity),
                                    range(trials))) % n
    law = _histogram(residues, n)
    ranked = np.sort(law)[::-1]
    set_size = int(np.searchsorted(np.cumsum(ranked), CONCENTRATION_MASS - 1e-12) + 1)
    limit = n / 4 - 1
    return Verdict({
        "check": "residue-concentration",
        "verdict": judge(set_size, limit, 0.0),
        "values": {"n": n, "trials": trials, "seed": seed, "c_prime": c_prime, "horizon_updates": horizon,
                   "set_size": set_size, "limit": limit, "captured_mass": float(ranked[:set_size].sum())},
    })


@dataclass(frozen=True)
class SeparationTable:
    rows: tuple[SeparationRow, ...]
    epsilon: float
    slopes: dict


def _separation_row(n: int, epsilon: float, fugacity: float, t_max: int) -> SeparationRow:
    glauber = compact_glauber_kernel(n, fugacity)
    scan = compact_scan_kernel(n, fugacity)
    t_gd = mixing_time(glauber, epsilon, t_max, method="doubling").t_mix
    t_ss = mixing_time(scan, epsilon, t_max, method="doubling").t_mix

    gamma = spectral_gap(glauber)
    bound = 8 * (n + 1) / gamma * math.log(1 / (epsilon * glauber.pi.pi_min)) + 1
    if t_ss is None:
        bound_check = "fail" if t_max >= bound else "info"
    else:
        bound_check = judge(t_ss, bound, forge.get_config().engine.tolerances.verification)
    logger.info(f"K_{n}: t_GD = {t_gd} steps, t_SS = {t_ss} sweeps")
    return SeparationRow({
        "n": n,
        "t_gd_steps": t_gd,
        "t_ss_sweeps": t_ss,
        "ratio": t_ss / t_gd if t_ss and t_gd else None,
        "bound_check": bound_check,
    })


def _slope(rows: Sequence[SeparationRow], column: str) -> Optional[float]:
    points = [(row.n, row[column]) for row in rows if row[column]]
    large = [point for point in points if point[0] >= SLOPE_MIN_SITES]
    if len(large) >= 2:
        points = large
    if len(points) < 2:
        return None
    sites, values = zip(*points)
    slope, _ = np.polyfit(np.log(sites), np.log(values), 1)
    return float(slope)


def separation_experiment(n_values: Sequence[int], epsilon: float = 0.25, fugacity: float = 1.0,
                          t_max: int = None, max_workers: int = None) -> SeparationTable:
    """Exact Glauber steps and scan sweeps to mixing on K_n, with log-log slopes against n."""
    n_values = sorted(set(int(n) for n in n_values))
    for n in n_values:
        _check_sites(n)
    t_max = t_max or forge.get_config().engine.horizon
    rows = ordered_map(lambda n: _separation_row(n, epsilon, fugacity, t_max), n_values, max_workers=max_workers)
    slopes = {column: _slope(rows, column) for column in ("t_gd_steps", "t_ss_sweeps")}
    return SeparationTable(tuple(rows), epsilon, slopes)


def _fitted_rows(table: SeparationTable) -> list[SeparationRow]:
    return [row for row in table.rows if row.n >= SLOPE_MIN_SITES]


def _slope_verdict(table: SeparationTable, check: str, column: str, band: tuple[float, float]) -> Verdict:
    fitted = _fitted_rows(table)
    slope = table.slopes[column]
    low, high = band
    if len(fitted) < SLOPE_MIN_POINTS:
        verdict = "info"
    elif slope is None or any(row[column] is None for row in fitted):
        verdict = "fail"
    else:
        verdict = "pass" if low <= slope <= high else "fail"
    return Verdict({
        "check": check,
        "verdict": verdict,
        "values": {"column": column, "slope": slope, "low": low, "high": high, "epsilon": table.epsilon,
                   "n_values": [row.n for row in fitted]},
    })


def _ratio_verdict(table: SeparationTable) -> Verdict:
    fitted = _fitted_rows(table)
    ratios = [row.ratio for row in fitted]
    if len(fitted) < SLOPE_MIN_POINTS:
        verdict = "info"
    elif any(ratio is None for ratio in ratios):
        verdict = "fail"
    else:
        verdict = "pass" if all(a < b for a, b in zip(ratios, ratios[1:])) else "fail"
    return Verdict({
        "check": "ratio-growth",
        "verdict": verdict,
        "values": {"n_values": [row.n for row in fitted], "ratios": ratios, "epsilon": table.epsilon},
    })


def separation_verdicts(table: SeparationTable) -> list[Verdict]:
    """Glauber steps grow linearly in n, scan sweeps quadratically, and their ratio increases.

    Judged over the sizes n >= 4 of the table, informational with fewer than three of them.
    """
    return [
        _slope_verdict(table, "glauber-slope", "t_gd_steps", GLAUBER_SLOPE_BAND),
        _slope_verdict(table, "scan-slope", "t_ss_sweeps", SCAN_SLOPE_BAND),
        _ratio_verdict(table),
    ]


def glauber_tail_bound(n: int, t_max: int) -> np.ndarray:
    """Pr(U + V > T) for T = 0..t_max with independent U ~ Geom(1/(2n)) and V ~ Geom(1/2)."""
    _check_sites(n)
    support = np.arange(t_max + 1)
    u = stats.geom.pmf(support, 1.0 / (2 * n))
    v = stats.geom.pmf(support, 0.5)
    cdf = np.cumsum(np.convolve(u, v)[:t_max + 1])
    return np.clip(1.0 - cdf, 0.0, 1.0)


def tail_bound_check(n: int, t_max: int, tolerance: float = None) -> Verdict:
    """Exact Glauber distance on K_n at fugacity 1 never exceeds the tail of U + V."""
    if tolerance is None:
        tolerance = forge.get_config().engine.tolerances.verification
    curve = distance_curve(compact_glauber_kernel(n), t_max)
    tail = glauber_tail_bound(n, t_max)
    excess = np.array(curve.d_values) - tail
    worst = int(np.argmax(excess))
    return Verdict({
        "check": "glauber-tail",
        "verdict": judge(float(excess[worst]), 0.0, tolerance),
        "values": {"n": n, "t_max": t_max, "worst_t": worst, "distance": curve.d_values[worst],
                   "tail": float(tail[worst])},
    })
