"""Finite product spaces, state indexing and distributions over them.

States are indexed little-endian mixed radix: site 0 is the least significant digit,
so index = sum_i coords[i] * prod_{j<i} |X_j|.
"""
from __future__ import annotations

import logging
import math
from typing import Iterable, Sequence

import numpy as np

from scanspectra.common.constants import DEFAULT_STATE_CAP, PROBABILITY_SUM_TOL
from scanspectra.common.exceptions import DomainError, UnsupportedError

logger = logging.getLogger('scanspectra.statespace')


class ProductSpace:
    """X_1 x ... x X_n with X_i = {0, ..., alphabet_sizes[i] - 1}."""

    __slots__ = ('alphabet_sizes', 'total_states', 'strides')

    def __init__(self, alphabet_sizes: Iterable[int], state_cap: int = DEFAULT_STATE_CAP):
        sizes = tuple(int(size) for size in alphabet_sizes)
        if not sizes:
            raise DomainError("A product space needs at least one site")
        for site, size in enumerate(sizes):
            if size < 1:
                raise DomainError(f"Alphabet of site {site} is empty (size {size})")

        # Python integers, so the cap check cannot overflow
        total = math.prod(sizes)
        if total > state_cap:
            raise UnsupportedError(f"Product space has {total} states, above the cap of {state_cap}")

        strides = [1]
        for size in sizes[:-1]:
            strides.append(strides[-1] * size)

        object.__setattr__(self, 'alphabet_sizes', sizes)
        object.__setattr__(self, 'total_states', total)
        object.__setattr__(self, 'strides', tuple(strides))

    def __setattr__(self, name, value):
        raise AttributeError(f"{self.__class__.__name__} is immutable")

    @property
    def n(self) -> int:
        return len(self.alphabet_sizes)

    def __eq__(self, other):
        return isinstance(other, ProductSpace) and self.alphabet_sizes == other.alphabet_sizes

    def __hash__(self):
        return hash(self.alphabet_sizes)

    def __repr__(self):
        return f"ProductSpace({list(self.alphabet_sizes)})"

    def states(self) -> np.ndarray:
        """All states as rows of a (total_states, n) integer array, in index order."""
        return np.stack(np.unravel_index(np.arange(self.total_states), self.alphabet_sizes, order='F'), axis=1)

    def site_values(self, site: int) -> np.ndarray:
        """Value of one site for every state index."""
        self.check_site(site)
        return (np.arange(self.total_states) // self.strides[site]) % self.alphabet_sizes[site]

    def check_site(self, site: int):
        if not 0 <= site < self.n:
            raise DomainError(f"Site {site} out of range for a space with {self.n} sites")


def encode_state(space: ProductSpace, state: Sequence[int]) -> int:
    if len(state) != space.n:
        raise DomainError(f"State has {len(state)} coordinates, the space has {space.n} sites")
    index = 0
    for site, (value, size, stride) in enumerate(zip(state, space.alphabet_sizes, space.strides)):
        if not 0 <= value < size:
            raise DomainError(f"Coordinate {value} of site {site} is outside its alphabet {{0..{size - 1}}}")
        index += int(value) * stride
    return index


def decode_state(space: ProductSpace, index: int) -> tuple[int, ...]:
    if not 0 <= index < space.total_states:
        raise DomainError(f"State index {index} outside [0, {space.total_states})")
    return tuple(int(value) for value in np.unravel_index(index, space.alphabet_sizes, order='F'))


class Distribution:
    """A probability vector over the states of a product space with its support."""

    __slots__ = ('space', 'probs', 'support', 'pi_min')

    def __init__(self, space: ProductSpace, probs, tolerance: float = PROBABILITY_SUM_TOL):
        probs = np.array(probs, dtype=float)
        if probs.shape != (space.total_states,):
            raise DomainError(f"Probability vector of shape {probs.shape} does not match "
                              f"{space.total_states} states")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise DomainError("Probabilities must be finite and non-negative")
        total = probs.sum()
        if abs(total - 1.0) > tolerance:
            raise DomainError(f"Probabilities sum to {total!r}, not 1")

        support = np.flatnonzero(probs > 0)
        if support.size == 0:
            raise DomainError("Distribution has empty support")

        probs.setflags(write=False)
        support.setflags(write=False)
        object.__setattr__(self, 'space', space)
        object.__setattr__(self, 'probs', probs)
        object.__setattr__(self, 'support', support)
        object.__setattr__(self, 'pi_min', float(probs[support].min()))

    def __setattr__(self, name, value):
        raise AttributeError(f"{self.__class__.__name__} is immutable")

    @property
    def weights(self) -> np.ndarray:
        """Probabilities of the support states, in support order."""
        return self.probs[self.support]

    def __repr__(self):
        return f"Distribution({self.space!r}, support={self.support.size}, pi_min={self.pi_min:.6g})"


def normalize_weights(space: ProductSpace, raw) -> Distribution:
    raw = np.asarray(raw, dtype=float)
    if raw.shape != (space.total_states,):
        raise DomainError(f"Weight vector of shape {raw.shape} does not match {space.total_states} states")
    if not np.all(np.isfinite(raw)):
        raise DomainError("Weights must be finite")
    if np.any(raw < 0):
        raise DomainError(f"Negative weight at state index {int(np.flatnonzero(raw < 0)[0])}")
    total = raw.sum()
    if total <= 0:
        raise DomainError("All weights are zero")
    return Distribution(space, raw / total)


def _check_probability_vector(name: str, vector: np.ndarray, tolerance: float):
    if not np.all(np.isfinite(vector)) or np.any(vector < -tolerance):
        raise DomainError(f"{name} has negative or non-finite entries")
    total = vector.sum()
    if abs(total - 1.0) > tolerance:
        raise DomainError(f"{name} sums to {total!r}, not 1")


def tv_distance(mu, nu, tolerance: float = PROBABILITY_SUM_TOL) -> float:
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if mu.shape != nu.shape:
        raise DomainError(f"Cannot compare probability vectors of shapes {mu.shape} and {nu.shape}")
    _check_probability_vector("mu", mu, tolerance)
    _check_probability_vector("nu", nu, tolerance)
    return float(0.5 * np.abs(mu - nu).sum())
