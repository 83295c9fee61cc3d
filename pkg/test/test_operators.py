import logging

import numpy as np
import pytest

from scanspectra.common.exceptions import DomainError, ReducibleChainError
from scanspectra.markov.models import build_hardcore, build_ising, complete_graph, path_graph
from scanspectra.markov.operators import (SITE_STEPS, SWEEPS, MarkovKernel, build_site_kernels,
                                          check_projection_properties, ensure_irreducible, glauber_kernel,
                                          identity_kernel, is_irreducible, scan_kernel, sequence_label,
                                          sequence_product_kernel)
from scanspectra.markov.statespace import Distribution, ProductSpace


def test_site_kernels(hardcore_k2_kernels):
    assert hardcore_k2_kernels.n == 2
    assert np.allclose(hardcore_k2_kernels[0].matrix, [[.5, .5, 0], [.5, .5, 0], [0, 0, 1]])
    assert np.allclose(hardcore_k2_kernels[1].matrix, [[.5, 0, .5], [0, 1, 0], [.5, 0, .5]])
    assert hardcore_k2_kernels[1].label == "site 1"


def test_site_kernels_are_projections(ising_path3_kernels, ising_cycle4_kernels):
    for kernels in (ising_path3_kernels, ising_cycle4_kernels):
        for kernel in kernels.kernels:
            check = check_projection_properties(kernel)
            assert check.reversible
            assert check.idempotent
            assert check.passed


def test_glauber(hardcore_k2_kernels):
    glauber = glauber_kernel(hardcore_k2_kernels)
    assert np.allclose(glauber.matrix, [[.5, .25, .25], [.25, .75, 0], [.25, 0, .75]])
    assert glauber.unit == SITE_STEPS
    assert glauber.updates_per_step == 1


def test_scan(hardcore_k2_kernels):
    scan = scan_kernel(hardcore_k2_kernels)
    # Site 0 first, then site 1
    assert np.allclose(scan.matrix, [[.25, .5, .25], [.25, .5, .25], [.5, 0, .5]])
    assert scan.label == "scan [0,1]"
    assert scan.unit == SWEEPS
    assert scan.updates_per_step == 2

    reverse = scan_kernel(hardcore_k2_kernels, [1, 0])
    weights = hardcore_k2_kernels.pi.weights
    # The reversed scan is the pi-adjoint
    adjoint = (scan.matrix.T * weights[None, :]) / weights[:, None]
    assert np.allclose(reverse.matrix, adjoint)

    with pytest.raises(DomainError):
        scan_kernel(hardcore_k2_kernels, [0, 0])


def test_product_measure_scan(product2_kernels):
    scan = scan_kernel(product2_kernels)
    assert np.allclose(scan.matrix, 0.25)


def test_sequence_product(hardcore_k3_kernels):
    seq = sequence_product_kernel(hardcore_k3_kernels, [0, 1, 2, 0])
    expected = (hardcore_k3_kernels[0].matrix @ hardcore_k3_kernels[1].matrix
                @ hardcore_k3_kernels[2].matrix @ hardcore_k3_kernels[0].matrix)
    assert np.allclose(seq.matrix, expected)
    assert seq.label == "sequence [0,1,2,0]"
    assert seq.updates_per_step == 4

    with pytest.raises(DomainError):
        sequence_product_kernel(hardcore_k3_kernels, [0, 3])


def test_empty_sequence(hardcore_k2_kernels, caplog):
    with caplog.at_level(logging.WARNING, logger="scanspectra.operators"):
        kernel = sequence_product_kernel(hardcore_k2_kernels, [])
    assert np.array_equal(kernel.matrix, np.eye(3))
    assert "Empty update sequence" in caplog.text


def test_sequence_label():
    assert sequence_label([2, 0, 1], 3) == "scan [2,0,1]"
    assert sequence_label([0, 0], 2) == "sequence [0,0]"
    assert sequence_label(list(range(20)), 20).endswith(",... L=20")


def test_kernel_validation(hardcore_k2):
    with pytest.raises(DomainError):
        MarkovKernel(np.eye(2), hardcore_k2, "wrong shape")

    with pytest.raises(DomainError):
        MarkovKernel([[1.5, -.5, 0], [0, 1, 0], [0, 0, 1]], hardcore_k2, "negative")

    with pytest.raises(DomainError):
        MarkovKernel([[.5, .5, .5], [0, 1, 0], [0, 0, 1]], hardcore_k2, "not stochastic")

    # Stochastic, but it moves all the mass onto the empty set
    with pytest.raises(DomainError):
        MarkovKernel([[1, 0, 0], [1, 0, 0], [1, 0, 0]], hardcore_k2, "not stationary")


def test_immutability(hardcore_k2_kernels):
    kernel = hardcore_k2_kernels[0]
    with pytest.raises(AttributeError):
        kernel.label = "other"

    with pytest.raises(ValueError):
        kernel.matrix[0, 0] = 1.0


def test_irreducibility(hardcore_k2, hardcore_k2_kernels):
    assert is_irreducible(glauber_kernel(hardcore_k2_kernels))
    assert is_irreducible(scan_kernel(hardcore_k2_kernels))

    single = hardcore_k2_kernels[0]
    assert not is_irreducible(single)
    with pytest.raises(ReducibleChainError):
        ensure_irreducible(single)

    # Point mass: a single support state is trivially irreducible
    point = Distribution(ProductSpace([2]), [1.0, 0.0])
    assert is_irreducible(identity_kernel(point))


def test_small_fugacity_stays_irreducible():
    # Every independent set still connects through the empty set
    kernels = build_site_kernels(build_hardcore(path_graph(3), 1e-3))
    assert is_irreducible(glauber_kernel(kernels))


def test_reducible_support():
    # Only the two constant states: single-site moves cannot connect them
    space = ProductSpace([2, 2])
    pi = Distribution(space, [.5, 0, 0, .5])
    kernels = build_site_kernels(pi)
    assert not is_irreducible(glauber_kernel(kernels))
    with pytest.raises(ReducibleChainError):
        ensure_irreducible(scan_kernel(kernels))


def test_fixture_models_build():
    kernels = build_site_kernels(build_ising(complete_graph(3), 0.2, 0.1))
    assert kernels.n == 3
    assert kernels.pi.support.size == 8
