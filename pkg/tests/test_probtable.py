import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdfrelay.errors import NumericalConsistencyError, ResourceError, StructuralError, ValidationError
from pdfrelay.probtable import (
    Factor,
    JointPmf,
    VariableId,
    cond_mutual_info,
    entropy,
    marginalize,
    product,
)

A, B, C = VariableId("A", 2), VariableId("B", 2), VariableId("C", 3)


def random_pmf(seed, sizes=(2, 2, 3)):
    rng = np.random.default_rng(seed)
    t = rng.dirichlet(np.ones(int(np.prod(sizes)))).reshape(sizes)
    return JointPmf((A, B, C)[: len(sizes)], t)


def test_uniform_bit_entropy():
    p = JointPmf((A,), [0.5, 0.5])
    assert entropy(p, "A") == pytest.approx(1.0, abs=1e-15)
    assert entropy(p, "A", base=math.e) == pytest.approx(math.log(2))


def test_copy_channel_mutual_information():
    p = JointPmf((A, B), [[0.5, 0.0], [0.0, 0.5]])
    assert cond_mutual_info(p, "A", "B") == pytest.approx(1.0)


def test_xor_needs_conditioning():
    t = np.zeros((2, 2, 2))
    for a in range(2):
        for b in range(2):
            t[a, b, a ^ b] = 0.25
    p = JointPmf((A, B, VariableId("X", 2)), t)
    assert cond_mutual_info(p, "A", "X") == pytest.approx(0.0, abs=1e-15)
    assert cond_mutual_info(p, "A", "X", "B") == pytest.approx(1.0)


def test_rejects_bad_tables():
    with pytest.raises(ValidationError):
        JointPmf((A,), [0.6, 0.6])
    with pytest.raises(ValidationError):
        JointPmf((A,), [1.5, -0.5])
    with pytest.raises(StructuralError):
        JointPmf((A, B), [0.5, 0.5])
    with pytest.raises(StructuralError):
        JointPmf((A, VariableId("A", 2)), np.full((2, 2), 0.25))


def test_from_array_normalizes():
    p = JointPmf.from_array((A,), [1, 3], normalize=True)
    assert p.table.tolist() == [0.25, 0.75]
    with pytest.raises(ValidationError):
        JointPmf.from_array((A,), [0, 0], normalize=True)


def test_table_is_read_only():
    p = random_pmf(1)
    with pytest.raises(ValueError):
        p.table[0, 0, 0] = 1.0


def test_size_guard():
    big = VariableId("Z", 10**4)
    with pytest.raises(ResourceError):
        Factor("f", (big,), (VariableId("Q", 10**4),), np.zeros((1,)))


def test_overlap_and_unknown_names():
    p = random_pmf(2)
    with pytest.raises(StructuralError):
        cond_mutual_info(p, "A", "A")
    with pytest.raises(StructuralError):
        entropy(p, "Q")


def test_negative_mi_raises():
    p = random_pmf(3)
    # force an inconsistent table past the constructor
    bad = p.table.copy()
    bad[0, 0, 0] = -0.5
    bad[1, 1, 2] += 0.5
    object.__setattr__(p, "table", bad)
    with pytest.raises(NumericalConsistencyError):
        for a, b, c in (("A", "B", "C"), ("A", "C", "B"), ("B", "C", "A"), ("A", "B", ())):
            cond_mutual_info(p, a, b, c)


def test_product_and_marginalize():
    pa = Factor("p(A)", (A,), (), [0.3, 0.7])
    pb = Factor("p(B|A)", (B,), (A,), [[0.9, 0.1], [0.2, 0.8]])
    joint = product([pa, pb])
    assert joint.names == ("A", "B")
    np.testing.assert_allclose(joint.table, [[0.27, 0.03], [0.14, 0.56]])
    np.testing.assert_allclose(marginalize(joint, ["B"]).table, [0.41, 0.59])


def test_product_order_and_consistency():
    pb = Factor("p(B|A)", (B,), (A,), [[0.9, 0.1], [0.2, 0.8]])
    with pytest.raises(StructuralError):
        product([pb])
    pa = Factor("p(A)", (A,), (), [0.3, 0.7])
    wrong = Factor("p(B|A)", (B,), (VariableId("A", 3),), np.full((3, 2), 0.5))
    with pytest.raises(StructuralError):
        product([pa, wrong])
    unnormal = Factor("p(B|A)", (B,), (A,), [[0.9, 0.2], [0.2, 0.8]])
    assert unnormal.violations()
    with pytest.raises(ValidationError):
        product([pa, unnormal])


def test_json_round_trip():
    p = random_pmf(4)
    q = JointPmf.from_json(json.loads(json.dumps(p.to_json())))
    assert q.names == p.names
    np.testing.assert_array_equal(q.table, p.table)
    f = Factor("p(B|A)", (B,), (A,), [[0.9, 0.1], [0.2, 0.8]])
    g = Factor.from_json(json.loads(json.dumps(f.to_json())))
    np.testing.assert_array_equal(f.table, g.table)
    assert g.given == f.given and g.outputs == f.outputs


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_information_identities(seed):
    p = random_pmf(seed)
    h = lambda *names, given=(): entropy(p, list(names), list(given))  # noqa: E731
    i_ab_c = cond_mutual_info(p, "A", "B", "C")
    assert i_ab_c >= 0.0
    assert cond_mutual_info(p, "A", "B") == pytest.approx(cond_mutual_info(p, "B", "A"), abs=1e-12)
    # chain rule I(A;B,C) = I(A;C) + I(A;B|C)
    assert cond_mutual_info(p, "A", ["B", "C"]) == pytest.approx(
        cond_mutual_info(p, "A", "C") + i_ab_c, abs=1e-12
    )
    assert h("A", "B", "C") == pytest.approx(h("A") + h("B", given=["A"]) + h("C", given=["A", "B"]), abs=1e-12)
    assert h("A", given=["B"]) <= h("A") + 1e-12
    assert h("A") <= math.log2(2) + 1e-12
