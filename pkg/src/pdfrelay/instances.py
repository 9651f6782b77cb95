"""Seeded random and hand-built instances used by ``verify`` and the tests."""
from __future__ import annotations

import math

import numpy as np

from . import kernels
from .gaussian import ALLOCATION_NAMES, GAIN_NAMES, GaussianTwoLevel, NODE_SLICES, PowerAllocation
from .network import (
    CodingDistribution,
    DmRelayNetwork,
    Permutation,
    build_distribution,
    default_auxiliary_alphabets,
)


def random_dm_network(rng: np.random.Generator, n: int = 2, alphabet: int = 2, concentration: float = 1.0):
    """Channel with every conditional row drawn from a symmetric Dirichlet."""
    ins = (alphabet,) * (n + 1)
    outs = (alphabet,) * (n + 1)
    rows = int(np.prod(ins))
    cols = int(np.prod(outs))
    channel = rng.dirichlet(np.full(cols, concentration), size=rows).reshape(ins + outs)
    return DmRelayNetwork(n, ins, outs, channel)


def random_distribution(
    rng: np.random.Generator,
    net: DmRelayNetwork,
    order: Permutation,
    auxiliary_alphabets=None,
    concentration: float = 1.0,
) -> CodingDistribution:
    aux = auxiliary_alphabets or default_auxiliary_alphabets(net.relay_count)

    def table_for(name, gshape, k):
        rows = int(np.prod(gshape)) if gshape else 1
        return rng.dirichlet(np.full(k, concentration), size=rows).reshape(gshape + (k,))

    return build_distribution(net, order, aux, table_for)


def random_dm_instance(rng: np.random.Generator, n: int = 2, concentration: float = 1.0):
    net = random_dm_network(rng, n, concentration=concentration)
    order = tuple(range(1, n + 1))
    return net, random_distribution(rng, net, order, concentration=concentration)


def random_df_instance(rng: np.random.Generator, w0_size: int = 3):
    """Single-relay instance where every part of the message reaches the relay.

    ``U1`` is constant, ``X1 = W1`` and ``X0`` is a random deterministic map
    of ``(W0, X1)`` onto a binary alphabet, so the coding distribution
    induces a general ``p(x0, x1)`` with nothing private to the destination.
    """
    net = random_dm_network(rng, 1)
    aux = {"W0": w0_size, "W1": 2, "U1": 1}
    fmap = rng.integers(0, 2, size=(w0_size, 2))

    def table_for(name, gshape, k):
        if name == "X1":
            return np.eye(2)
        if name == "U1":
            return np.ones(gshape + (1,))
        if name == "X0":
            # given: U1, W0, W1, X1
            t = np.zeros(gshape + (k,))
            for idx in np.ndindex(*gshape):
                t[idx + (fmap[idx[1], idx[3]],)] = 1.0
            return t
        rows = int(np.prod(gshape)) if gshape else 1
        return rng.dirichlet(np.ones(k), size=rows).reshape(gshape + (k,))

    return net, build_distribution(net, (1,), aux, table_for)


def closed_form_gap_instance(eps: float = 0.1):
    """Two-relay instance where the per-cut closed form exceeds the LP optimum.

    ``X0`` indexes the triple ``(U1, U2, W0)``; relay ``k`` sees ``U_k``
    noiselessly and the destination sees ``W0`` together with
    ``U1 xor U2`` through a BSC(eps). The relays' inputs are ignored. With
    ``a = 1 - h(eps)`` the closed form is ``1 + a`` and the LP gives
    ``1 + a/2``.
    """
    ins, outs = (8, 2, 2), (2, 2, 4)
    channel = np.zeros(ins + outs)
    for x0 in range(8):
        u1, u2, w0 = (x0 >> 2) & 1, (x0 >> 1) & 1, x0 & 1
        for flip, p in ((0, 1.0 - eps), (1, eps)):
            channel[x0, :, :, u1, u2, 2 * w0 + (u1 ^ u2 ^ flip)] += p
    net = DmRelayNetwork(2, ins, outs, channel)

    def table_for(name, gshape, k):
        if name == "X0":
            # given: U1, U2, W0, W1, W2, X1, X2
            t = np.zeros(gshape + (k,))
            for idx in np.ndindex(*gshape):
                t[idx + (4 * idx[0] + 2 * idx[1] + idx[2],)] = 1.0
            return t
        return np.full(gshape + (k,), 1.0 / k)

    dist = build_distribution(net, (1, 2), default_auxiliary_alphabets(2), table_for)
    h = -eps * math.log2(eps) - (1 - eps) * math.log2(1 - eps)
    a = 1.0 - h
    return net, dist, {"closed_form": 1.0 + a, "lp": 1.0 + a / 2.0}


def random_gaussian_instance(rng: np.random.Generator, gain_range: float = 2.0, powers=(1.0, 1.0, 1.0)):
    gains = rng.uniform(-gain_range, gain_range, size=len(GAIN_NAMES))
    net = GaussianTwoLevel(**dict(zip(GAIN_NAMES, gains.tolist())), P0=powers[0], P1=powers[1], P2=powers[2])
    while True:
        raw = rng.standard_normal(len(ALLOCATION_NAMES)).tolist()
        vec = kernels.project(raw, kernels.ALLOC_BLOCKS, list(powers))
        if vec is not None:
            return net, PowerAllocation.from_vector(vec)


def zero_private(alloc: PowerAllocation, powers) -> PowerAllocation:
    """Same allocation with every private amplitude removed, rescaled to full power."""
    vec = [v if name.startswith("alpha") else 0.0 for v, name in zip(alloc.as_vector(), ALLOCATION_NAMES)]
    for node in (0, 1, 2):
        block = vec[NODE_SLICES[node]]
        if powers[node] > 0 and not any(block):
            start = NODE_SLICES[node].start
            vec[start] = 1.0
    return PowerAllocation.from_vector(kernels.project(vec, kernels.ALLOC_BLOCKS, list(powers)))
