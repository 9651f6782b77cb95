import json
import math

import numpy as np
import pytest

from pdfrelay import instances
from pdfrelay.errors import PreconditionError, StructuralError, ValidationError
from pdfrelay.gaussian import (
    TERM_NAMES,
    GaussianTwoLevel,
    PowerAllocation,
    build_linear_system,
    compare_terms,
    corollary_rate,
    corollary_terms,
    cut_values,
    cutset_upper_bound,
    gaussian_cond_mi,
    i4_residual,
    input_covariance,
    oracle_terms,
)
from pdfrelay.rates import theorem_rate


def test_direct_only_rate(direct_net):
    alloc = PowerAllocation(phi03=1.0, alpha11=1.0, alpha22=1.0)
    rate, _ = corollary_rate(corollary_terms(direct_net, alloc))
    assert rate == pytest.approx(0.5, abs=1e-12)


def test_power_violation_is_rejected(direct_net):
    with pytest.raises(PreconditionError, match="node 0"):
        corollary_terms(direct_net, PowerAllocation(phi03=1.1, alpha11=1.0, alpha22=1.0))
    with pytest.raises(ValidationError):
        GaussianTwoLevel(0, 0, 1, 0, 0, 0, -1.0, 1, 1)


def test_zero_power_zero_rate():
    net = GaussianTwoLevel(1, 1, 1, 1, 1, 1, 0, 0, 0)
    t = corollary_terms(net, PowerAllocation())
    assert corollary_rate(t)[0] == 0.0


def test_oracle_agreement(rng):
    worst = dict.fromkeys(TERM_NAMES, 0.0)
    for _ in range(200):
        net, alloc = instances.random_gaussian_instance(rng)
        for k, d in compare_terms(net, alloc).deltas.items():
            worst[k] = max(worst[k], abs(d))
    for k in ("I1", "I2", "I3", "I5", "I6", "I7", "I8"):
        assert worst[k] <= 1e-9, k
    assert worst["I4"] > 1e-3  # the published I4 is not the mutual information


def test_i4_residual_structure(rng):
    for _ in range(100):
        net, alloc = instances.random_gaussian_instance(rng)
        res = i4_residual(net, alloc)
        assert res["relative_error"] <= 1e-6


def test_i4_agrees_when_cross_term_vanishes(mixed_net):
    alloc = instances.zero_private(PowerAllocation(alpha00=1, alpha11=1, alpha22=1), mixed_net.powers)
    assert abs(compare_terms(mixed_net, alloc).deltas["I4"]) < 1e-12


def test_independent_layer_i4_matches_oracle(rng):
    for _ in range(50):
        net, alloc = instances.random_gaussian_instance(rng)
        fixed = corollary_terms(net, alloc, i4_mode=1)
        oracle = oracle_terms(build_linear_system(net, alloc))
        assert fixed.I4 == pytest.approx(oracle.I4, abs=1e-9)


def test_general_rate_on_gaussian_system(rng):
    for _ in range(50):
        net, alloc = instances.random_gaussian_instance(rng)
        sys = build_linear_system(net, alloc)
        general = theorem_rate(sys, (1, 2)).rate
        assert general == pytest.approx(corollary_rate(oracle_terms(sys))[0], abs=1e-9)


def test_scalar_awgn_mutual_information():
    net = GaussianTwoLevel(0.5, 0, 2.0, 0, 0, 0, 3.0, 0, 0)
    sys = build_linear_system(net, PowerAllocation(phi03=math.sqrt(3.0)))
    assert gaussian_cond_mi(sys, ["X0"], ["Y3"]) == pytest.approx(0.5 * math.log2(1 + 4 * 3))
    assert gaussian_cond_mi(sys, ["X0"], ["Y1"]) == pytest.approx(0.5 * math.log2(1 + 0.25 * 3))
    assert gaussian_cond_mi(sys, ["X0"], ["Y1", "Y3"]) == pytest.approx(0.5 * math.log2(1 + 4.25 * 3))
    assert gaussian_cond_mi(sys, ["Y1"], ["Y3"], ["X0"]) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(StructuralError):
        gaussian_cond_mi(sys, ["X0"], ["Y3"], ["X0"])


def test_covariance_and_cutset(mixed_net):
    alloc = instances.zero_private(PowerAllocation(alpha00=1, alpha01=1, alpha02=1, alpha11=1, alpha12=1, alpha22=1), mixed_net.powers)
    k = input_covariance(alloc)
    assert np.allclose(np.diag(k), mixed_net.powers)
    cuts = cut_values(mixed_net, k)
    assert set(cuts) == {"{0}", "{0,1}", "{0,2}", "{0,1,2}"}
    rate = corollary_rate(oracle_terms(build_linear_system(mixed_net, alloc)))[0]
    assert rate <= cutset_upper_bound(mixed_net, k) + 1e-9
    with pytest.raises(PreconditionError):
        cut_values(mixed_net, 2 * np.eye(3))


def test_json_round_trips(mixed_net):
    assert GaussianTwoLevel.from_json(json.loads(json.dumps(mixed_net.to_json()))) == mixed_net
    a = PowerAllocation(alpha00=0.5, phi02=-0.25)
    assert PowerAllocation.from_json(json.loads(json.dumps(a.to_json()))) == a


def test_base_conversion(rng):
    net, alloc = instances.random_gaussian_instance(rng)
    bits = corollary_terms(net, alloc).as_tuple()
    nats = corollary_terms(net, alloc, base=math.e).as_tuple()
    assert np.allclose(np.array(bits) * math.log(2), nats)
