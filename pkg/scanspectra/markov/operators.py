"""Site resampling kernels and the chains built from them.

Every kernel lives on the support of its reference distribution: row and column k of
a matrix belong to state index ``pi.support[k]``.

Update orders are chronological. For updates u_1, ..., u_L applied in that order the
kernel is M_{u_1} M_{u_2} ... M_{u_L} (first update leftmost) and a row distribution mu
evolves as mu @ matrix. Reversing the order gives the pi-adjoint, which has the same
pi-operator norm.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from scanspectra.common import forge
from scanspectra.common.exceptions import DomainError, ReducibleChainError
from scanspectra.markov.statespace import Distribution
from scanspectra.odm.models.report import ProjectionCheck

logger = logging.getLogger('scanspectra.operators')

SITE_STEPS = "site-steps"
SWEEPS = "sweeps"
LABEL_PREVIEW = 16


class MarkovKernel:
    __slots__ = ('matrix', 'pi', 'label', 'unit', 'updates_per_step')

    def __init__(self, matrix, pi: Distribution, label: str, unit: str = SITE_STEPS, updates_per_step: int = 1):
        tolerances = forge.get_config().engine.tolerances
        matrix = np.array(matrix, dtype=float)
        size = pi.support.size
        if matrix.shape != (size, size):
            raise DomainError(f"Kernel '{label}' has shape {matrix.shape}, its support has {size} states")

        if np.any(matrix < -tolerances.clamp):
            raise DomainError(f"Kernel '{label}' has negative entries (min {matrix.min()!r})")
        matrix[np.abs(matrix) < tolerances.clamp] = 0.0

        row_error = np.abs(matrix.sum(axis=1) - 1.0).max()
        if row_error > tolerances.stochastic_row:
            raise DomainError(f"Kernel '{label}' is not row stochastic (max row deviation {row_error:.3g})")

        weights = pi.weights
        drift = np.abs(weights @ matrix - weights).max()
        if drift > tolerances.stationarity:
            raise DomainError(f"Distribution is not stationary for kernel '{label}' (max drift {drift:.3g})")

        matrix.setflags(write=False)
        object.__setattr__(self, 'matrix', matrix)
        object.__setattr__(self, 'pi', pi)
        object.__setattr__(self, 'label', label)
        object.__setattr__(self, 'unit', unit)
        object.__setattr__(self, 'updates_per_step', updates_per_step)

    def __setattr__(self, name, value):
        raise AttributeError(f"{self.__class__.__name__} is immutable")

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return self.pi.weights

    def __repr__(self):
        return f"MarkovKernel('{self.label}', states={self.size}, unit={self.unit})"


@dataclass(frozen=True)
class SiteKernelSet:
    kernels: tuple[MarkovKernel, ...]
    pi: Distribution

    @property
    def n(self) -> int:
        return len(self.kernels)

    def __getitem__(self, site: int) -> MarkovKernel:
        return self.kernels[site]

    def __len__(self):
        return len(self.kernels)


def site_kernel(pi: Distribution, site: int) -> MarkovKernel:
    space = pi.space
    space.check_site(site)
    support = pi.support
    weights = pi.weights

    stride = space.strides[site]
    values = (support // stride) % space.alphabet_sizes[site]
    # States agreeing off the site share the index with the site zeroed out
    _, group = np.unique(support - values * stride, return_inverse=True)
    group = group.ravel()
    group_mass = np.bincount(group, weights=weights)

    same_group = group[:, None] == group[None, :]
    matrix = np.where(same_group, weights[None, :] / group_mass[group][:, None], 0.0)
    return MarkovKernel(matrix, pi, f"site {site}")


def build_site_kernels(pi: Distribution) -> SiteKernelSet:
    tolerance = forge.get_config().engine.tolerances.projection
    kernels = []
    for site in range(pi.space.n):
        kernel = site_kernel(pi, site)
        verdict = check_projection_properties(kernel, tolerance=tolerance)
        if not verdict.passed:
            raise DomainError(f"Site kernel {site} is not a pi-orthogonal projection "
                              f"(detailed balance {verdict.detailed_balance_residual:.3g}, "
                              f"idempotence {verdict.idempotence_residual:.3g})")
        kernels.append(kernel)
    logger.debug(f"Built {len(kernels)} site kernels on {pi.support.size} support states")
    return SiteKernelSet(tuple(kernels), pi)


def identity_kernel(pi: Distribution, label: str = "identity") -> MarkovKernel:
    return MarkovKernel(np.eye(pi.support.size), pi, label)


def glauber_kernel(kernels: SiteKernelSet) -> MarkovKernel:
    if not kernels.n:
        raise DomainError("Glauber dynamics needs at least one site kernel")
    matrix = np.mean([kernel.matrix for kernel in kernels.kernels], axis=0)
    return MarkovKernel(matrix, kernels.pi, "glauber")


def _indices(seq) -> tuple[int, ...]:
    return tuple(int(i) for i in getattr(seq, 'indices', seq))


def sequence_label(indices: Sequence[int], n: int) -> str:
    kind = "scan" if sorted(indices) == list(range(n)) else "sequence"
    if len(indices) <= LABEL_PREVIEW:
        shown = ','.join(str(i) for i in indices)
    else:
        shown = ','.join(str(i) for i in indices[:LABEL_PREVIEW]) + f",... L={len(indices)}"
    return f"{kind} [{shown}]"


def sequence_product_kernel(kernels: SiteKernelSet, seq: Union[Iterable[int], object]) -> MarkovKernel:
    indices = _indices(seq)
    for i in indices:
        if not 0 <= i < kernels.n:
            raise DomainError(f"Update sequence refers to site {i}, only {kernels.n} sites exist")

    if not indices:
        logger.warning("Empty update sequence, using the identity kernel")
        return identity_kernel(kernels.pi, label="identity (empty sequence)")

    matrix = kernels[indices[0]].matrix.copy()
    for i in indices[1:]:
        matrix = matrix @ kernels[i].matrix
    return MarkovKernel(matrix, kernels.pi, sequence_label(indices, kernels.n), unit=SWEEPS,
                        updates_per_step=len(indices))


def scan_kernel(kernels: SiteKernelSet, order: Sequence[int] = None) -> MarkovKernel:
    """Systematic scan over a permutation of the sites; the identity order by default."""
    if order is None:
        order = range(kernels.n)
    order = tuple(int(i) for i in order)
    if sorted(order) != list(range(kernels.n)):
        raise DomainError(f"Scan order {list(order)} is not a permutation of {kernels.n} sites")
    return sequence_product_kernel(kernels, order)


def check_projection_properties(kernel: MarkovKernel, tolerance: float = None) -> ProjectionCheck:
    if tolerance is None:
        tolerance = forge.get_config().engine.tolerances.projection
    flow = kernel.weights[:, None] * kernel.matrix
    balance = float(np.abs(flow - flow.T).max())
    idempotence = float(np.abs(kernel.matrix @ kernel.matrix - kernel.matrix).max())
    return ProjectionCheck({
        "label": kernel.label,
        "detailed_balance_residual": balance,
        "idempotence_residual": idempotence,
        "reversible": balance <= tolerance,
        "idempotent": idempotence <= tolerance,
    })


def is_irreducible(kernel: MarkovKernel) -> bool:
    if kernel.size == 1:
        return True
    count, _ = connected_components(csr_matrix(kernel.matrix > 0), directed=True, connection='strong')
    return count == 1


def ensure_irreducible(kernel: MarkovKernel):
    if not is_irreducible(kernel):
        raise ReducibleChainError(f"Kernel '{kernel.label}' is reducible on its support")
