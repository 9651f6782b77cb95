import json

import numpy as np
import pytest

from pdfrelay import instances
from pdfrelay.errors import ResourceError, StructuralError, ValidationError
from pdfrelay.network import (
    CodingDistribution,
    DmRelayNetwork,
    assemble_joint,
    enumerate_cut_subsets,
    enumerate_permutations,
    expected_conditioning,
    factor_sequence,
    uniform_distribution,
    validate_distribution,
    validate_network,
)


def test_cut_subsets_order():
    assert enumerate_cut_subsets(2) == [frozenset(), frozenset({1}), frozenset({2})]
    assert len(enumerate_cut_subsets(3)) == 7
    assert enumerate_cut_subsets(2, proper_only=False)[-1] == frozenset({1, 2})


def test_permutations_guard():
    assert enumerate_permutations(2) == [(1, 2), (2, 1)]
    with pytest.raises(ResourceError):
        enumerate_permutations(7)
    with pytest.raises(StructuralError):
        enumerate_permutations(0)


def test_conditioning_follows_order():
    cond = expected_conditioning((2, 1), 2)
    assert cond["W2"] == ("W1",)
    assert cond["X2"] == ("W2", "W1")
    assert cond["W1"] == ()
    assert cond["X0"] == ("U1", "U2", "W0", "W1", "W2", "X1", "X2")
    assert factor_sequence((1, 2), 2)[0] == "W2"


def test_uniform_distribution_is_valid(dm_instance):
    net, _ = dm_instance
    for order in enumerate_permutations(2):
        dist = uniform_distribution(net, order)
        assert validate_distribution(dist, net) == []
        joint = assemble_joint(net, dist)
        assert joint.table.sum() == pytest.approx(1.0)


def test_network_validation_messages():
    net = DmRelayNetwork(1, (2, 2), (2, 2), np.full((2, 2, 2, 2), 0.3))
    problems = validate_network(net)
    assert problems and all("sum" in p or "slice" in p or "normal" in p for p in problems)
    short = DmRelayNetwork(1, (2,), (2, 2), np.full((2, 2, 2), 0.25))
    assert validate_network(short)


def test_distribution_validation(dm_instance):
    net, dist = dm_instance
    assert validate_distribution(dist, net) == []
    bad_order = CodingDistribution((1, 1), dist.auxiliary_alphabets, dist.factors)
    assert validate_distribution(bad_order, net)
    missing = dict(dist.factors)
    missing.pop("U1")
    assert any("U1" in p for p in validate_distribution(CodingDistribution((1, 2), dist.auxiliary_alphabets, missing), net))
    with pytest.raises(ValidationError):
        assemble_joint(net, CodingDistribution((1, 2), dist.auxiliary_alphabets, missing))


def test_json_round_trip(dm_instance):
    net, dist = dm_instance
    net2 = DmRelayNetwork.from_json(json.loads(json.dumps(net.to_json())))
    np.testing.assert_array_equal(net.channel, net2.channel)
    dist2 = CodingDistribution.from_json(json.loads(json.dumps(dist.to_json())))
    assert dist2.order == dist.order
    np.testing.assert_array_equal(assemble_joint(net, dist).table, assemble_joint(net2, dist2).table)


def test_joint_respects_channel(rng):
    net, dist = instances.random_dm_instance(rng, n=1)
    joint = assemble_joint(net, dist)
    keep = ["X0", "X1", "Y1", "Y2"]
    declared = [n for n in joint.names if n in keep]
    pxy = np.transpose(joint.marginal(keep), [declared.index(n) for n in keep])
    px = pxy.sum(axis=(2, 3))
    cond = pxy / px[..., None, None]
    mask = px > 1e-12
    np.testing.assert_allclose(cond[mask], net.channel[mask], atol=1e-12)
