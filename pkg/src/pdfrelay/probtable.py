"""Exact probability algebra over finite alphabets.

A :class:`JointPmf` is a dense numpy array with one axis per variable, in
declaration order (C order, so the flat index is the mixed-radix assignment).
Conditional tables are carried by :class:`Factor`, whose axes are the
conditioning variables followed by the output variables.

Entropies follow the ``0 log 0 = 0`` convention. Every function takes a
``base`` argument for the logarithm; the default is 2 (bits).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    NumericalConsistencyError,
    ResourceError,
    StructuralError,
    ValidationError,
)

NORMALIZATION_TOL = 1e-9
MI_CLAMP_TOL = 1e-9
MAX_TABLE_ENTRIES = 10**7
DEFAULT_BASE = 2.0


@dataclass(frozen=True, order=True)
class VariableId:
    name: str
    alphabet_size: int

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise StructuralError(f"variable name must be a non-empty string, got {self.name!r}")
        if int(self.alphabet_size) != self.alphabet_size or self.alphabet_size < 1:
            raise StructuralError(
                f"variable {self.name}: alphabet size must be a positive integer, "
                f"got {self.alphabet_size!r}"
            )
        object.__setattr__(self, "alphabet_size", int(self.alphabet_size))


def _check_unique(variables: Sequence[VariableId], what: str) -> None:
    seen = {}
    for v in variables:
        if v.name in seen:
            raise StructuralError(f"{what}: variable {v.name} appears twice")
        seen[v.name] = v


def _guard_size(shape: Sequence[int]) -> None:
    count = math.prod(shape)
    if count > MAX_TABLE_ENTRIES:
        raise ResourceError(
            f"table with {count} entries exceeds the guard of {MAX_TABLE_ENTRIES}; "
            "reduce alphabet sizes or the number of relays"
        )


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array, dtype=float)
    array.setflags(write=False)
    return array


def _log(x: np.ndarray, base: float) -> np.ndarray:
    return np.log(x) / math.log(base)


@dataclass(frozen=True, eq=False)
class JointPmf:
    """Joint probability table over labelled finite-alphabet variables.

    ``table`` has one axis per entry of ``variables``. Inputs must already sum
    to one within ``1e-9`` unless ``normalize=True`` is passed to
    :meth:`from_array`.
    """

    variables: tuple[VariableId, ...]
    table: np.ndarray = field(repr=False)

    def __post_init__(self):
        variables = tuple(self.variables)
        _check_unique(variables, "JointPmf")
        shape = tuple(v.alphabet_size for v in variables)
        _guard_size(shape)
        table = np.asarray(self.table, dtype=float)
        if table.size != math.prod(shape):
            raise StructuralError(
                f"table has {table.size} entries but the alphabets need {math.prod(shape)}"
            )
        table = table.reshape(shape)
        if not np.all(np.isfinite(table)) or np.any(table < 0):
            raise ValidationError("probability table has negative or non-finite entries")
        total = float(table.sum())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValidationError(f"probability table sums to {total!r}, not 1")
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "table", _frozen(table))

    @classmethod
    def from_array(cls, variables: Iterable[VariableId], table, normalize: bool = False) -> "JointPmf":
        table = np.asarray(table, dtype=float)
        if normalize:
            total = table.sum()
            if not total > 0:
                raise ValidationError("cannot normalize a table with zero mass")
            table = table / total
        return cls(tuple(variables), table)

    @classmethod
    def scalar(cls) -> "JointPmf":
        return cls((), np.array(1.0))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(v.alphabet_size for v in self.variables)

    def variable(self, name: str) -> VariableId:
        for v in self.variables:
            if v.name == name:
                return v
        raise StructuralError(f"unknown variable {name!r}; table has {list(self.names)}")

    def axes(self, names: Iterable[str]) -> tuple[int, ...]:
        index = {n: i for i, n in enumerate(self.names)}
        out = []
        for n in names:
            if n not in index:
                raise StructuralError(f"unknown variable {n!r}; table has {list(self.names)}")
            out.append(index[n])
        return tuple(out)

    def marginal(self, keep: Iterable[str]) -> np.ndarray:
        """Marginal array over ``keep``, axes in table declaration order."""
        keep_axes = set(self.axes(keep))
        drop = tuple(i for i in range(len(self.variables)) if i not in keep_axes)
        return self.table.sum(axis=drop)

    def entropy(self, targets: Iterable[str], given: Iterable[str] = (), base: float = DEFAULT_BASE) -> float:
        return entropy(self, targets, given, base=base)

    def mutual_information(
        self, a: Iterable[str], b: Iterable[str], c: Iterable[str] = (), base: float = DEFAULT_BASE
    ) -> float:
        return cond_mutual_info(self, a, b, c, base=base)

    def to_json(self) -> dict:
        return {
            "variables": [{"name": v.name, "size": v.alphabet_size} for v in self.variables],
            "table": self.table.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "JointPmf":
        variables = [VariableId(d["name"], d["size"]) for d in data["variables"]]
        return cls(tuple(variables), np.asarray(data["table"], dtype=float))


@dataclass(frozen=True, eq=False)
class Factor:
    """Conditional pmf ``p(outputs | given)``.

    The table axes are ``given`` followed by ``outputs``; every slice over the
    output axes must sum to one. A factor with no conditioning variables is an
    ordinary marginal pmf.
    """

    name: str
    outputs: tuple[VariableId, ...]
    given: tuple[VariableId, ...]
    table: np.ndarray = field(repr=False)

    def __post_init__(self):
        outputs, given = tuple(self.outputs), tuple(self.given)
        _check_unique(given + outputs, f"factor {self.name}")
        shape = tuple(v.alphabet_size for v in given + outputs)
        _guard_size(shape)
        table = np.asarray(self.table, dtype=float)
        if table.size != math.prod(shape):
            raise StructuralError(
                f"factor {self.name}: table has {table.size} entries, alphabets need {math.prod(shape)}"
            )
        object.__setattr__(self, "outputs", outputs)
        object.__setattr__(self, "given", given)
        object.__setattr__(self, "table", _frozen(table.reshape(shape)))

    @property
    def variables(self) -> tuple[VariableId, ...]:
        return self.given + self.outputs

    def violations(self) -> list[str]:
        """Every normalization problem, one message per offending slice."""
        problems = []
        t = self.table
        if not np.all(np.isfinite(t)) or np.any(t < 0):
            problems.append(f"factor {self.name}: negative or non-finite entries")
        n_out = len(self.outputs)
        sums = t.sum(axis=tuple(range(t.ndim - n_out, t.ndim))) if n_out else np.ones(t.shape)
        bad = np.argwhere(np.abs(np.asarray(sums) - 1.0) > NORMALIZATION_TOL)
        for idx in bad:
            idx = tuple(int(i) for i in idx)
            problems.append(
                f"factor {self.name}: slice {dict(zip([g.name for g in self.given], idx))} "
                f"sums to {float(np.asarray(sums)[idx])!r}"
            )
        return problems

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "outputs": [{"name": v.name, "size": v.alphabet_size} for v in self.outputs],
            "given": [{"name": v.name, "size": v.alphabet_size} for v in self.given],
            "table": self.table.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "Factor":
        return cls(
            data["name"],
            tuple(VariableId(d["name"], d["size"]) for d in data["outputs"]),
            tuple(VariableId(d["name"], d["size"]) for d in data["given"]),
            np.asarray(data["table"], dtype=float),
        )


def product(factors: Sequence[Factor]) -> JointPmf:
    """Multiply conditional factors into a joint table.

    Variable order of the result is the order of first appearance across
    ``factors`` (conditioning variables of a factor before its outputs).
    Conditioning variables must be produced by an earlier factor.
    """
    order: list[VariableId] = []
    by_name: dict[str, VariableId] = {}
    produced: set[str] = set()
    for f in factors:
        problems = f.violations()
        if problems:
            raise ValidationError("; ".join(problems))
        for v in f.variables:
            known = by_name.get(v.name)
            if known is None:
                by_name[v.name] = v
                order.append(v)
            elif known.alphabet_size != v.alphabet_size:
                raise StructuralError(
                    f"variable {v.name} declared with alphabet sizes "
                    f"{known.alphabet_size} and {v.alphabet_size}"
                )
        for g in f.given:
            if g.name not in produced:
                raise StructuralError(
                    f"factor {f.name} conditions on {g.name}, which no earlier factor produces"
                )
        for o in f.outputs:
            if o.name in produced:
                raise StructuralError(f"variable {o.name} is produced by two factors")
            produced.add(o.name)

    shape = tuple(v.alphabet_size for v in order)
    _guard_size(shape)
    position = {v.name: i for i, v in enumerate(order)}
    table = np.ones(shape)
    for f in factors:
        axes = [position[v.name] for v in f.variables]
        # Reorder the factor axes to the joint order, then broadcast.
        perm = np.argsort(axes)
        local = np.transpose(f.table, perm)
        bshape = [1] * len(order)
        for ax in sorted(axes):
            bshape[ax] = shape[ax]
        table = table * local.reshape(bshape)
    return JointPmf(tuple(order), table)


def marginalize(pmf: JointPmf, keep: Iterable[str]) -> JointPmf:
    keep = list(keep)
    keep_axes = sorted(set(pmf.axes(keep)))
    variables = tuple(pmf.variables[i] for i in keep_axes)
    return JointPmf(variables, pmf.marginal(v.name for v in variables))


def _names(arg) -> list[str]:
    if isinstance(arg, str):
        return [arg]
    return [v.name if isinstance(v, VariableId) else v for v in arg]


def _joint_entropy(pmf: JointPmf, names: Sequence[str], base: float) -> float:
    if not names:
        return 0.0
    p = pmf.marginal(names).ravel()
    p = p[p > 0]
    return float(-(p * _log(p, base)).sum())


def entropy(pmf: JointPmf, targets, given=(), base: float = DEFAULT_BASE) -> float:
    """``H(targets | given)``, never negative."""
    targets, given = _names(targets), _names(given)
    pmf.axes(targets + given)
    overlap = set(targets) & set(given)
    if overlap:
        raise StructuralError(f"targets and conditioning overlap on {sorted(overlap)}")
    h = _joint_entropy(pmf, targets + given, base) - _joint_entropy(pmf, given, base)
    return max(h, 0.0)


def cond_mutual_info(pmf: JointPmf, a, b, c=(), base: float = DEFAULT_BASE) -> float:
    """``I(a; b | c)`` from four joint entropies.

    Rounding residue down to ``-1e-9`` is clamped to zero; anything more
    negative signals a broken table and raises.
    """
    a, b, c = _names(a), _names(b), _names(c)
    pmf.axes(a + b + c)
    for x, y, label in ((a, b, "A/B"), (a, c, "A/C"), (b, c, "B/C")):
        if set(x) & set(y):
            raise StructuralError(f"{label} overlap on {sorted(set(x) & set(y))}")
    value = (
        _joint_entropy(pmf, a + c, base)
        + _joint_entropy(pmf, b + c, base)
        - _joint_entropy(pmf, a + b + c, base)
        - _joint_entropy(pmf, c, base)
    )
    if value < -MI_CLAMP_TOL:
        raise NumericalConsistencyError(f"I({a};{b}|{c}) evaluated to {value!r}")
    return max(value, 0.0)
