"""Products of symmetric matrices in plain Euclidean space.

Nothing here has a stationary vector, so norms are full-space spectral norms with no
mean-zero deflation. The rank-one family of recht_re_family shows how the scan gap bound
loses its factor of n, and how products blow up once the members stop being projections.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from scanspectra.common import forge
from scanspectra.common.constants import PROJECTION_TOL, SYMMETRY_TOL
from scanspectra.common.exceptions import DomainError
from scanspectra.common.random import stream_rng
from scanspectra.common.threading import ordered_map
from scanspectra.markov.schedules import UpdateSequence, first_appearances
from scanspectra.odm.models.report import SpectralReport, SweepRow, Verdict, judge

logger = logging.getLogger('scanspectra.projections')

ORTHOGONAL_PROJECTION = "orthogonal_projection"
PSD_GENERAL = "psd_general"


@dataclass(frozen=True, eq=False)
class ProjectionFamily:
    dimension: int
    matrices: tuple[np.ndarray, ...]
    family_kind: str
    label: str = "family"

    def __post_init__(self):
        if not self.matrices:
            raise DomainError("A projection family needs at least one member")
        for k, matrix in enumerate(self.matrices):
            if matrix.shape != (self.dimension, self.dimension):
                raise DomainError(f"Member {k} has shape {matrix.shape}, expected {self.dimension}x{self.dimension}")
            asymmetry = np.abs(matrix - matrix.T).max()
            if asymmetry > SYMMETRY_TOL:
                raise DomainError(f"Member {k} is not symmetric (residual {asymmetry:.3g})")
            if self.family_kind == ORTHOGONAL_PROJECTION and idempotence_residual(matrix) > PROJECTION_TOL:
                raise DomainError(f"Member {k} is not idempotent")
            matrix.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.matrices)


def idempotence_residual(matrix: np.ndarray) -> float:
    return float(np.abs(matrix @ matrix - matrix).max())


def _classify(matrices: Sequence[np.ndarray]) -> str:
    if all(idempotence_residual(matrix) <= PROJECTION_TOL for matrix in matrices):
        return ORTHOGONAL_PROJECTION
    return PSD_GENERAL


def recht_re_family(n: int, delta: float) -> ProjectionFamily:
    """Rank-one matrices a_k a_k^T, a_k = sqrt(2 (1 - delta)) (cos(k pi / n), sin(k pi / n)), k = 1..n.

    Their average is (1 - delta) I. They are orthogonal projections only at delta = 1/2.
    """
    if n < 2:
        raise DomainError(f"The family needs n >= 2, got {n}")
    if not 0 <= delta <= 1:
        raise DomainError(f"delta must lie in [0, 1], got {delta}")
    scale = math.sqrt(2 * (1 - delta))
    angles = np.arange(1, n + 1) * math.pi / n
    vectors = scale * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    matrices = tuple(np.outer(a, a) for a in vectors)
    kind = ORTHOGONAL_PROJECTION if delta == 0.5 else PSD_GENERAL
    return ProjectionFamily(2, matrices, kind, label=f"rank-one n={n} delta={delta:g}")


def closed_form_product_norm(n: int, delta: float) -> float:
    if n < 2:
        raise DomainError(f"The family needs n >= 2, got {n}")
    return (2 * (1 - delta)) ** n * math.cos(math.pi / n) ** (n - 1)


def _indices(seq) -> tuple[int, ...]:
    return tuple(int(i) for i in getattr(seq, 'indices', seq))


def family_product_norm(family: ProjectionFamily, seq: Union[UpdateSequence, Iterable[int]] = None) -> float:
    """Spectral norm of the product of members in update order, first update leftmost."""
    indices = tuple(range(family.n)) if seq is None else _indices(seq)
    product = np.eye(family.dimension)
    for i in indices:
        if not 0 <= i < family.n:
            raise DomainError(f"Sequence refers to member {i}, the family has {family.n}")
        product = product @ family.matrices[i]
    return float(np.linalg.norm(product, 2))


def family_average_norm(family: ProjectionFamily) -> float:
    return float(np.linalg.norm(np.mean(family.matrices, axis=0), 2))


def random_projection_family(d: int, n: int, ranks: Union[int, Sequence[int]], seed: int) -> ProjectionFamily:
    """Orthogonal projections onto the spans of Gaussian vectors; member k draws from stream k."""
    if d < 1 or n < 1:
        raise DomainError(f"Dimension and family size must be positive (d={d}, n={n})")
    if isinstance(ranks, int):
        ranks = [ranks] * n
    ranks = list(ranks)
    if len(ranks) != n:
        raise DomainError(f"{len(ranks)} ranks given for {n} members")

    matrices = []
    for k, rank in enumerate(ranks):
        if not 1 <= rank <= d:
            raise DomainError(f"Rank {rank} of member {k} is outside [1, {d}]")
        basis, _ = np.linalg.qr(stream_rng(seed, k).standard_normal((d, rank)))
        projection = basis @ basis.T
        matrices.append((projection + projection.T) / 2)
    return ProjectionFamily(d, tuple(matrices), _classify(matrices), label=f"random d={d} n={n} seed={seed}")


def _require_projections(family: ProjectionFamily):
    if family.family_kind != ORTHOGONAL_PROJECTION:
        raise DomainError(f"'{family.label}' is not a family of orthogonal projections")


def _covered(seq: UpdateSequence):
    stats = first_appearances(seq)
    if not stats.covered:
        raise DomainError(f"incomplete cover: only {len(stats.order)} of {seq.n} members appear")
    return stats


def _abstract_report(family: ProjectionFamily, check: str, norm: float, attained: float, bound: float,
                     tolerance: float, **extras) -> SpectralReport:
    return SpectralReport({
        "label": family.label,
        "check": check,
        "operator_norm": norm,
        "gap": 1.0 - norm,
        "attained": attained,
        "bound_value": bound,
        "residual": bound - attained,
        "verdict": judge(attained, bound, tolerance),
        "extras": {key: float(value) for key, value in extras.items()},
    })


def abstract_sequence_check(family: ProjectionFamily, seq: UpdateSequence, tolerance: float = None) -> SpectralReport:
    """Squared product norm against 1 - n delta / (8 sum_j k_j), delta = 1 - ||average||."""
    if tolerance is None:
        tolerance = forge.get_config().engine.tolerances.verification
    _require_projections(family)
    stats = _covered(seq)
    delta = 1.0 - family_average_norm(family)
    if not delta > 0:
        raise DomainError(f"The average of '{family.label}' has norm 1, no gap to propagate")

    norm = family_product_norm(family, seq.prefix(stats.cover_time))
    bound = 1.0 - family.n * delta / (8 * stats.sum_k)
    return _abstract_report(family, "abstract-sequence-gap", norm, norm ** 2, bound, tolerance,
                            delta=delta, n=family.n, sum_k=stats.sum_k)


def abstract_supersequence_check(family: ProjectionFamily, seq: UpdateSequence, delta_scan: float = None,
                                 tolerance: float = None) -> SpectralReport:
    """Product norm against 1 - delta_scan^2 / (8 (L - n + 1)), delta_scan measured on the first-appearance scan."""
    if tolerance is None:
        tolerance = forge.get_config().engine.tolerances.verification
    _require_projections(family)
    stats = _covered(seq)
    if delta_scan is None:
        delta_scan = 1.0 - family_product_norm(family, stats.order)
    if not delta_scan > 0:
        raise DomainError(f"The scan of '{family.label}' has norm 1, no gap to propagate")

    length = stats.cover_time
    norm = family_product_norm(family, seq.prefix(length))
    bound = 1.0 - delta_scan ** 2 / (8 * (length - family.n + 1))
    return _abstract_report(family, "abstract-supersequence-gap", norm, norm, bound, tolerance,
                            delta_scan=delta_scan, n=family.n, cover_time=length)


def recht_re_row(n: int, delta: float) -> SweepRow:
    direct = family_product_norm(recht_re_family(n, delta))
    scan_loss = delta / (8 * (n + 1))
    return SweepRow({
        "n": n,
        "delta": delta,
        "closed_form": closed_form_product_norm(n, delta),
        "direct_norm": direct,
        "bound": 1.0 - scan_loss,
        "ratio": (1.0 - direct) / scan_loss if delta > 0 else None,
    })


def recht_re_sweep(n_values: Iterable[int], deltas: Iterable[float], max_workers: int = None) -> list[SweepRow]:
    grid = [(n, delta) for n in n_values for delta in deltas]
    rows = ordered_map(lambda item: recht_re_row(*item), grid, max_workers=max_workers)
    logger.info(f"Swept {len(rows)} (n, delta) pairs of the rank-one family")
    return rows


TIGHTNESS_RANGE = (1.0, 100.0)
BLOWUP_DELTA = 0.25
BLOWUP_SITES = 22
BLOWUP_NORM = 1e3
CLOSED_FORM_RTOL = 1e-9


def sweep_verdicts(rows: Iterable[SweepRow]) -> list[Verdict]:
    """Tightness of the scan gap bound at delta = 1/2 and the blowup of non-projections at delta = 1/4.

    Every row also gets a closed-form-agreement verdict, appended after the others.
    """
    rows = list(rows)
    verdicts = []
    for row in rows:
        if row.delta == 0.5 and row.ratio is not None:
            low, high = TIGHTNESS_RANGE
            verdicts.append(Verdict({
                "check": "scan-gap-tightness",
                "verdict": "pass" if low <= row.ratio <= high else "fail",
                "values": {"n": row.n, "delta": row.delta, "ratio": row.ratio, "low": low, "high": high},
            }))
        elif row.delta == BLOWUP_DELTA and row.n >= BLOWUP_SITES:
            verdicts.append(Verdict({
                "check": "non-projection-blowup",
                "verdict": judge(BLOWUP_NORM, row.direct_norm, 0.0),
                "values": {"n": row.n, "delta": row.delta, "direct_norm": row.direct_norm,
                           "threshold": BLOWUP_NORM},
            }))
    verdicts.extend(closed_form_agreement(row) for row in rows)
    return verdicts


def closed_form_agreement(row: SweepRow, rtol: float = CLOSED_FORM_RTOL) -> Verdict:
    """Direct product norm against the closed form, relative to max(closed form, 1)."""
    difference = abs(row.direct_norm - row.closed_form)
    allowed = rtol * max(row.closed_form, 1.0)
    return Verdict({
        "check": "closed-form-agreement",
        "verdict": judge(difference, allowed, 0.0),
        "values": {"n": row.n, "delta": row.delta, "closed_form": row.closed_form, "direct_norm": row.direct_norm,
                   "difference": difference, "allowed": allowed},
    })
