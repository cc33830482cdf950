import numpy as np
import pytest

import balnet as bn


def make_linear_isn_model():
    """Mean-field inhibition-stabilized network with linear gains: constant
    excitatory drive 1, unit e<->i couplings, i->i slope 1/2.  Balanced
    means are (0.5, 1.0) with Jacobian [[0, -1], [1, -0.5]]."""
    return bn.NetworkModel(
        basis=bn.SpatialBasis("point"),
        kernel=bn.ConnectivityKernel.from_blocks(1.0, 1.0, 1.0, 1.0),
        gains=bn.GainTable(ee=bn.GainSpec.constant(1.0), ei=bn.GainSpec.linear(1.0),
                           ie=bn.GainSpec.linear(1.0), ii=bn.GainSpec.linear(0.5)),
        dynamics=bn.IntrinsicDynamics.linear(1.0, 1.0, 1.0, 1.0))


def make_tanh_isn_model():
    """Mean-field network with saturating gains: constant drive 0.1 against
    unit tanh inhibition, tanh recurrence with i->i amplitude 1/2."""
    return bn.NetworkModel(
        basis=bn.SpatialBasis("point"),
        kernel=bn.ConnectivityKernel.from_blocks(1.0, 1.0, 1.0, 1.0),
        gains=bn.GainTable(ee=bn.GainSpec.constant(0.1), ei=bn.GainSpec.tanh(1.0),
                           ie=bn.GainSpec.tanh(1.0), ii=bn.GainSpec.tanh(0.5)),
        dynamics=bn.IntrinsicDynamics.linear(1.0, 1.0, 1.0, 1.0))


def make_ring_model():
    """Ring network with translation-invariant rank-3 kernel and unit tanh
    gains; admits only the marginal trivial balanced root."""
    return bn.NetworkModel(
        basis=bn.SpatialBasis("ring", ("constant", "cosine", "sine")),
        kernel=bn.ConnectivityKernel.diagonal([0.5, 2.0, 2.0], [4.0, 4.0, 4.0],
                                              [1.0, 2.0, 2.0], [1.0, 2.0, 2.0]),
        gains=bn.GainTable(ee=bn.GainSpec.tanh(1.0), ei=bn.GainSpec.tanh(1.0),
                           ie=bn.GainSpec.tanh(1.0), ii=bn.GainSpec.tanh(1.0)),
        dynamics=bn.IntrinsicDynamics.linear(0.5, 0.5, 0.5, 0.5))


@pytest.fixture(scope="session")
def linear_isn_model():
    return make_linear_isn_model()


@pytest.fixture(scope="session")
def tanh_isn_model():
    return make_tanh_isn_model()


@pytest.fixture(scope="session")
def ring_model():
    return make_ring_model()


def gauss_expect_trapezoid(g, mean, variance, span=12.0, npts=2_000_001):
    """Independent dense-trapezoid oracle for E_{N(mean, variance)}[g]."""
    y = np.linspace(mean - span * np.sqrt(variance),
                    mean + span * np.sqrt(variance), npts)
    rho = np.exp(-(y - mean) ** 2 / (2.0 * variance)) / np.sqrt(2.0 * np.pi * variance)
    return float(np.trapezoid(g(y) * rho, y))
