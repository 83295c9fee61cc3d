"""Update sequences, first appearance statistics and the linear time certificate.

Positions are 1-based throughout: the first update of a sequence is at position 1, so
k_1 = 1 for every non-empty sequence.
"""
from __future__ import annotations

import logging
import math
import os
import re
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from scanspectra.common.constants import covering_cap
from scanspectra.common.exceptions import DomainError, SimulationError
from scanspectra.common.random import stream_rng
from scanspectra.common.threading import ordered_map
from scanspectra.odm.models.report import Certificate, Verdict, judge

logger = logging.getLogger('scanspectra.schedules')

SEPARATORS = re.compile(r'[\s,]+')


@dataclass(frozen=True)
class UpdateSequence:
    indices: tuple[int, ...]
    n: int

    def __post_init__(self):
        object.__setattr__(self, 'indices', tuple(int(i) for i in self.indices))
        if self.n < 1:
            raise DomainError(f"An update sequence needs at least one site, got n={self.n}")
        if not self.indices:
            raise DomainError("An update sequence needs at least one update")
        for position, i in enumerate(self.indices, start=1):
            if not 0 <= i < self.n:
                raise DomainError(f"Update {position} refers to site {i}, outside [0, {self.n})")

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def prefix(self, length: int) -> UpdateSequence:
        return UpdateSequence(self.indices[:length], self.n)


@dataclass(frozen=True)
class FirstAppearanceStats:
    n: int
    length: int
    k: tuple[int, ...]
    order: tuple[int, ...]
    covered: bool
    cover_time: Optional[int]
    sum_k: int


@dataclass(frozen=True)
class CouponMoments:
    n: int
    expected_sum_k: float
    variance_bound: float
    cubic_bound: float
    expected_cover: float


def identity_scan(n: int) -> UpdateSequence:
    return UpdateSequence(tuple(range(n)), n)


def first_appearances(seq: UpdateSequence) -> FirstAppearanceStats:
    seen = set()
    k = []
    order = []
    for position, site in enumerate(seq.indices, start=1):
        if site not in seen:
            seen.add(site)
            k.append(position)
            order.append(site)
            if len(seen) == seq.n:
                break

    covered = len(k) == seq.n
    return FirstAppearanceStats(
        n=seq.n,
        length=len(seq),
        k=tuple(k),
        order=tuple(order),
        covered=covered,
        cover_time=k[-1] if covered else None,
        sum_k=sum(k),
    )


def cover_threshold(n: int) -> float:
    return 2.0 * n * math.log(n)


def certify_sequence(seq: UpdateSequence, delta: float = None) -> Certificate:
    """Linear time check of the event that makes a random sequence as good as a scan.

    A sequence is accepted when it covers every site, its cover time is at most 2 n log n and
    the first appearance positions sum to at most 2 n^2. For a single site the cover threshold
    is 0, so nothing is accepted.
    """
    stats = first_appearances(seq)
    n = seq.n
    accepted = stats.covered and stats.cover_time <= cover_threshold(n) and stats.sum_k <= 2 * n * n
    cert = Certificate({
        "n": n,
        "length": stats.length,
        "covered": stats.covered,
        "cover_time": stats.cover_time,
        "sum_k": stats.sum_k,
        "cover_threshold": cover_threshold(n),
        "sum_threshold": float(2 * n * n),
        "accepted": accepted,
    })
    if accepted and delta is not None:
        cert.delta = delta
        cert.norm_bound = cert.implied_norm_bound(delta)
    return cert


def _chunk_size(n: int) -> int:
    # Twice the expected cover time n H_n, rounded up
    return 2 * math.ceil(n * (math.log(n) + 1))


def sample_covering_sequence(n: int, seed: int, stream: int = 0) -> UpdateSequence:
    """i.i.d. uniform site indices, cut at the first position where every site has appeared."""
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n}")
    rng = stream_rng(seed, stream)
    cap = covering_cap(n)
    chunk = _chunk_size(n)

    draws = np.empty(0, dtype=np.int64)
    while True:
        draws = np.concatenate([draws, rng.integers(0, n, size=chunk)])
        sites, first = np.unique(draws, return_index=True)
        if sites.size == n:
            cover_time = int(first.max()) + 1
            break
        if draws.size >= cap:
            raise SimulationError(f"No cover of {n} sites within {cap} draws (seed {seed}, stream {stream})")

    if cover_time > cap:
        raise SimulationError(f"Cover time {cover_time} of {n} sites exceeds the cap of {cap} "
                              f"(seed {seed}, stream {stream})")
    return UpdateSequence(tuple(draws[:cover_time].tolist()), n)


def sample_supersequence(n: int, seed: int, stream: int = 0) -> UpdateSequence:
    """A covering sequence relabelled so sites first appear in the order 0, 1, ..., n - 1."""
    seq = sample_covering_sequence(n, seed, stream)
    rank = {site: position for position, site in enumerate(first_appearances(seq).order)}
    return UpdateSequence(tuple(rank[i] for i in seq.indices), n)


def coupon_moments(n: int) -> CouponMoments:
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n}")
    # Success probability of the draw that brings the l-th new site, l = 1..n
    success = (n - np.arange(1, n + 1) + 1) / n
    harmonic = float(np.sum(1.0 / np.arange(1, n + 1)))
    return CouponMoments(
        n=n,
        expected_sum_k=float(n * n),
        variance_bound=float(n * n * np.sum(1.0 - success)),
        cubic_bound=float(n ** 3),
        expected_cover=n * harmonic,
    )


def certificate_experiment(n: int, trials: int, seed: int, max_workers: int = None) -> list[Verdict]:
    """Acceptance rate of the certificate and the moments of sum k_j over sampled sequences.

    Trial t draws from stream t. Returns the acceptance, mean and variance verdicts.
    """
    if trials < 2:
        raise DomainError(f"The certificate experiment needs at least 2 trials, got {trials}")

    def _trial(stream: int) -> tuple[bool, int, int]:
        seq = sample_covering_sequence(n, seed, stream)
        cert = certify_sequence(seq)
        return cert.accepted, cert.sum_k, cert.cover_time

    outcomes = ordered_map(_trial, range(trials), max_workers=max_workers)
    accepted = np.array([outcome[0] for outcome in outcomes], dtype=float)
    sums = np.array([outcome[1] for outcome in outcomes], dtype=float)
    covers = np.array([outcome[2] for outcome in outcomes], dtype=float)
    moments = coupon_moments(n)

    rate = float(accepted.mean())
    rate_error = math.sqrt(rate * (1 - rate) / trials)
    rate_floor = 1 - 2 / n - 3 * rate_error
    mean = float(sums.mean())
    mean_error = math.sqrt(moments.variance_bound / trials)
    variance = float(sums.var(ddof=1))
    variance_ceiling = moments.cubic_bound * (1 + 3 / math.sqrt(trials))

    logger.info(f"Certificate experiment n={n}: acceptance {rate:.4f}, mean sum_k {mean:.1f}")
    return [
        Verdict({
            "check": "certificate-acceptance",
            "verdict": judge(rate_floor, rate, 0.0),
            "values": {"n": n, "trials": trials, "acceptance_rate": rate, "floor": rate_floor,
                       "standard_error": rate_error, "mean_cover_time": float(covers.mean()),
                       "expected_cover_time": moments.expected_cover},
        }),
        Verdict({
            "check": "sum-k-mean",
            "verdict": judge(abs(mean - moments.expected_sum_k), 3 * mean_error, 0.0),
            "values": {"n": n, "trials": trials, "mean": mean, "expected": moments.expected_sum_k,
                       "standard_error": mean_error},
        }),
        Verdict({
            "check": "sum-k-variance",
            "verdict": judge(variance, variance_ceiling, 0.0),
            "values": {"n": n, "trials": trials, "variance": variance, "exact_variance": moments.variance_bound,
                       "ceiling": variance_ceiling},
        }),
    ]


def parse_sequence(text: str, n: Optional[int] = None) -> UpdateSequence:
    """Whitespace or comma separated site indices; n defaults to the largest index plus one."""
    tokens = [token for token in SEPARATORS.split(text.strip()) if token]
    try:
        indices = [int(token) for token in tokens]
    except ValueError as e:
        raise DomainError(f"Update sequences are integer site indices: {e}")
    if not indices:
        raise DomainError("An update sequence needs at least one update")
    if n is None:
        n = max(indices) + 1
    return UpdateSequence(tuple(indices), n)


def read_sequence(path: str, n: Optional[int] = None) -> UpdateSequence:
    with open(path) as seq_fh:
        return parse_sequence(seq_fh.read(), n=n)


def write_sequence(seq: Iterable[int], path: str):
    tmp_path = f"{path}.tmp"
    with open(tmp_path, 'w') as seq_fh:
        seq_fh.write(' '.join(str(int(i)) for i in seq) + '\n')
    os.replace(tmp_path, path)
