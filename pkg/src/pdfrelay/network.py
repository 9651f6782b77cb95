"""N-relay discrete-memoryless networks and their coding distributions.

Naming convention used throughout the package: ``X0`` is the source input,
``X1..XN`` the relay inputs, ``Y1..YN`` the relay observations and
``Y{N+1}`` the destination observation. Auxiliaries are ``W0..WN`` (common
message layers) and ``U1..UN`` (relay private messages). Relay labels are
fixed; a permutation only decides who decodes from whom.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ResourceError, StructuralError, ValidationError
from .probtable import NORMALIZATION_TOL, Factor, JointPmf, VariableId, _guard_size, product

MAX_PERMUTATION_RELAYS = 6

Permutation = tuple[int, ...]
CutSubset = frozenset


def x_name(i: int) -> str:
    return f"X{i}"


def y_name(i: int) -> str:
    return f"Y{i}"


def w_name(i: int) -> str:
    return f"W{i}"


def u_name(i: int) -> str:
    return f"U{i}"


@dataclass(frozen=True, eq=False)
class DmRelayNetwork:
    """Channel ``p(y1..y_{N+1} | x0..xN)``.

    ``channel`` has axes ``X0..XN`` followed by ``Y1..Y_{N+1}``.
    """

    relay_count: int
    input_alphabets: tuple[int, ...]
    output_alphabets: tuple[int, ...]
    channel: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "input_alphabets", tuple(int(a) for a in self.input_alphabets))
        object.__setattr__(self, "output_alphabets", tuple(int(a) for a in self.output_alphabets))
        channel = np.array(self.channel, dtype=float)
        channel.setflags(write=False)
        object.__setattr__(self, "channel", channel)

    @property
    def input_variables(self) -> tuple[VariableId, ...]:
        return tuple(VariableId(x_name(i), a) for i, a in enumerate(self.input_alphabets))

    @property
    def output_variables(self) -> tuple[VariableId, ...]:
        return tuple(VariableId(y_name(i + 1), a) for i, a in enumerate(self.output_alphabets))

    def channel_factor(self) -> Factor:
        shape = self.input_alphabets + self.output_alphabets
        return Factor("channel", self.output_variables, self.input_variables, self.channel.reshape(shape))

    def to_json(self) -> dict:
        return {
            "relay_count": self.relay_count,
            "input_alphabets": list(self.input_alphabets),
            "output_alphabets": list(self.output_alphabets),
            "channel": self.channel.tolist(),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "DmRelayNetwork":
        return cls(
            int(data["relay_count"]),
            tuple(data["input_alphabets"]),
            tuple(data["output_alphabets"]),
            np.asarray(data["channel"], dtype=float),
        )


def validate_network(net: DmRelayNetwork) -> list[str]:
    """All invariant violations of ``net``; an empty list means valid."""
    problems = []
    n = net.relay_count
    if not isinstance(n, int) or n < 1:
        problems.append(f"relay_count must be a positive integer, got {n!r}")
        return problems
    if len(net.input_alphabets) != n + 1:
        problems.append(f"expected {n + 1} input alphabets (X0..X{n}), got {len(net.input_alphabets)}")
    if len(net.output_alphabets) != n + 1:
        problems.append(f"expected {n + 1} output alphabets (Y1..Y{n + 1}), got {len(net.output_alphabets)}")
    for label, sizes, first in (("X", net.input_alphabets, 0), ("Y", net.output_alphabets, 1)):
        for i, a in enumerate(sizes):
            if a < 1:
                problems.append(f"alphabet of {label}{i + first} has size {a}; sizes must be >= 1")
    if problems:
        return problems
    shape = net.input_alphabets + net.output_alphabets
    if net.channel.size != math.prod(shape):
        problems.append(f"channel has {net.channel.size} entries, alphabets need {math.prod(shape)}")
        return problems
    table = net.channel.reshape(shape)
    if not np.all(np.isfinite(table)) or np.any(table < 0):
        problems.append("channel has negative or non-finite entries")
    sums = table.sum(axis=tuple(range(n + 1, 2 * n + 2)))
    for idx in np.argwhere(np.abs(sums - 1.0) > NORMALIZATION_TOL):
        idx = tuple(int(i) for i in idx)
        problems.append(f"channel slice (x0..x{n})={idx} sums to {float(sums[idx])!r}")
    return problems


def expected_conditioning(order: Permutation, n: int) -> dict[str, tuple[str, ...]]:
    """Conditioning set of every coding-distribution factor, keyed by output.

    For order ``pi``: ``W_{pi_k}`` depends on ``W_{pi_{k+1}}..W_{pi_N}``,
    ``W0`` on ``W1..WN``, ``X_{pi_k}`` on ``W_{pi_k}..W_{pi_N}``, ``U_k`` on
    ``W0..WN, X_k`` and ``X0`` on all ``U``, ``W`` and relay ``X``.
    """
    order = tuple(order)
    all_w = tuple(w_name(i) for i in range(n + 1))
    cond: dict[str, tuple[str, ...]] = {}
    for k, relay in enumerate(order):
        later = tuple(w_name(r) for r in order[k + 1:])
        cond[w_name(relay)] = later
        cond[x_name(relay)] = (w_name(relay),) + later
    cond[w_name(0)] = tuple(w_name(i) for i in range(1, n + 1))
    for relay in order:
        cond[u_name(relay)] = all_w + (x_name(relay),)
    cond[x_name(0)] = (
        tuple(u_name(i) for i in range(1, n + 1)) + all_w + tuple(x_name(i) for i in range(1, n + 1))
    )
    return cond


def factor_sequence(order: Permutation, n: int) -> list[str]:
    """Outputs of the coding-distribution factors in a valid product order."""
    order = tuple(order)
    seq = []
    for k in range(n - 1, -1, -1):
        seq.append(w_name(order[k]))
    seq.append(w_name(0))
    for k in range(n - 1, -1, -1):
        seq.append(x_name(order[k]))
    for relay in order:
        seq.append(u_name(relay))
    seq.append(x_name(0))
    return seq


@dataclass(frozen=True, eq=False)
class CodingDistribution:
    """Factor tables of the partial decode-forward coding distribution.

    ``factors`` maps an output variable name (``W*``, ``X*``, ``U*``) to the
    factor producing it. ``auxiliary_alphabets`` holds the sizes of every
    ``W`` and ``U`` variable.
    """

    order: Permutation
    auxiliary_alphabets: Mapping[str, int]
    factors: Mapping[str, Factor]

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(int(r) for r in self.order))
        object.__setattr__(self, "auxiliary_alphabets", dict(self.auxiliary_alphabets))
        object.__setattr__(self, "factors", dict(self.factors))

    @property
    def relay_count(self) -> int:
        return len(self.order)

    def ordered_factors(self) -> list[Factor]:
        return [self.factors[name] for name in factor_sequence(self.order, self.relay_count)]

    def to_json(self) -> dict:
        return {
            "order": list(self.order),
            "auxiliary_alphabets": dict(sorted(self.auxiliary_alphabets.items())),
            "factors": [self.factors[name].to_json() for name in factor_sequence(self.order, self.relay_count)],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "CodingDistribution":
        factors = {}
        for fd in data["factors"]:
            f = Factor.from_json(fd)
            if len(f.outputs) != 1:
                raise StructuralError(f"factor {f.name} must have exactly one output variable")
            factors[f.outputs[0].name] = f
        return cls(tuple(data["order"]), dict(data["auxiliary_alphabets"]), factors)


def validate_permutation(order: Sequence[int], n: int) -> list[str]:
    if sorted(order) != list(range(1, n + 1)):
        return [f"order {list(order)} is not a permutation of 1..{n}"]
    return []


def _sizes(net: DmRelayNetwork, dist: CodingDistribution) -> dict[str, int]:
    sizes = {v.name: v.alphabet_size for v in net.input_variables}
    sizes.update(dist.auxiliary_alphabets)
    return sizes


def validate_distribution(dist: CodingDistribution, net: DmRelayNetwork) -> list[str]:
    """Structural and normalization violations of ``dist`` against ``net``."""
    n = net.relay_count
    problems = validate_permutation(dist.order, n)
    if problems:
        return problems
    expected_aux = [w_name(i) for i in range(n + 1)] + [u_name(i) for i in range(1, n + 1)]
    for name in expected_aux:
        size = dist.auxiliary_alphabets.get(name)
        if size is None:
            problems.append(f"auxiliary alphabet for {name} is missing")
        elif size < 1:
            problems.append(f"auxiliary alphabet for {name} has size {size}; sizes must be >= 1")
    extra = set(dist.auxiliary_alphabets) - set(expected_aux)
    if extra:
        problems.append(f"unexpected auxiliary variables {sorted(extra)}")
    sizes = _sizes(net, dist)
    cond = expected_conditioning(dist.order, n)
    for name, given in cond.items():
        f = dist.factors.get(name)
        if f is None:
            problems.append(f"factor for {name} is missing")
            continue
        if [o.name for o in f.outputs] != [name]:
            problems.append(f"factor {f.name} must output exactly {name}")
            continue
        got = tuple(g.name for g in f.given)
        if set(got) != set(given) or len(got) != len(given):
            missing = sorted(set(given) - set(got))
            surplus = sorted(set(got) - set(given))
            problems.append(
                f"factor {f.name} for {name}: conditioning {list(got)} does not match the coding "
                f"distribution (missing {missing}, extra {surplus})"
            )
            continue
        for v in f.variables:
            if v.name in sizes and sizes[v.name] != v.alphabet_size:
                problems.append(
                    f"factor {f.name}: {v.name} has alphabet size {v.alphabet_size}, "
                    f"expected {sizes[v.name]}"
                )
        problems.extend(f.violations())
    extra = set(dist.factors) - set(cond)
    if extra:
        problems.append(f"unexpected factors for {sorted(extra)}")
    return problems


def assemble_joint(net: DmRelayNetwork, dist: CodingDistribution) -> JointPmf:
    """Joint pmf of every ``W, U, X, Y`` variable of the network."""
    problems = validate_network(net)
    if problems:
        raise ValidationError("invalid network: " + "; ".join(problems))
    problems = validate_distribution(dist, net)
    if problems:
        raise ValidationError("invalid coding distribution: " + "; ".join(problems))
    sizes = _sizes(net, dist)
    _guard_size(list(sizes.values()) + list(net.output_alphabets))
    return product(dist.ordered_factors() + [net.channel_factor()])


def _variable(name: str, sizes: Mapping[str, int]) -> VariableId:
    return VariableId(name, sizes[name])


def build_distribution(
    net: DmRelayNetwork,
    order: Permutation,
    auxiliary_alphabets: Mapping[str, int],
    table_for,
) -> CodingDistribution:
    """Assemble a distribution whose factor tables come from ``table_for``.

    ``table_for(output, given_shape, output_size)`` returns an array of shape
    ``given_shape + (output_size,)`` whose last axis sums to one.
    """
    n = net.relay_count
    sizes = _sizes(net, CodingDistribution(order, auxiliary_alphabets, {}))
    cond = expected_conditioning(order, n)
    factors = {}
    for name in factor_sequence(order, n):
        given = tuple(_variable(g, sizes) for g in cond[name])
        out = _variable(name, sizes)
        table = table_for(name, tuple(g.alphabet_size for g in given), out.alphabet_size)
        factors[name] = Factor(f"p({name}|{','.join(cond[name])})", (out,), given, table)
    return CodingDistribution(order, auxiliary_alphabets, factors)


def uniform_distribution(
    net: DmRelayNetwork, order: Permutation, auxiliary_alphabets: Mapping[str, int] | None = None
) -> CodingDistribution:
    """Every factor uniform and independent of its conditioning variables."""
    n = net.relay_count
    if auxiliary_alphabets is None:
        auxiliary_alphabets = default_auxiliary_alphabets(n)
    return build_distribution(
        net, order, auxiliary_alphabets, lambda name, gshape, k: np.full(gshape + (k,), 1.0 / k)
    )


def default_auxiliary_alphabets(n: int, size: int = 2) -> dict[str, int]:
    sizes = {w_name(i): size for i in range(n + 1)}
    sizes.update({u_name(i): size for i in range(1, n + 1)})
    return sizes


def enumerate_cut_subsets(n: int, proper_only: bool = True) -> list[CutSubset]:
    """Subsets of relays ``1..n`` ordered by size, then lexicographically."""
    if n < 1:
        raise StructuralError(f"relay count must be >= 1, got {n}")
    top = n - 1 if proper_only else n
    return [frozenset(c) for size in range(top + 1) for c in itertools.combinations(range(1, n + 1), size)]


def enumerate_permutations(n: int, guard: int = MAX_PERMUTATION_RELAYS) -> list[Permutation]:
    if n < 1:
        raise StructuralError(f"relay count must be >= 1, got {n}")
    if n > guard:
        raise ResourceError(
            f"{n}! relay orders exceed the guard of {guard} relays; pass an explicit list of orders"
        )
    return list(itertools.permutations(range(1, n + 1)))


def subset_key(subset) -> tuple:
    """Sort key matching :func:`enumerate_cut_subsets` order."""
    return (len(subset), tuple(sorted(subset)))
