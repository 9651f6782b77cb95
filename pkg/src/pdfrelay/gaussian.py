"""Gaussian two-level relay network: closed-form rate terms and a log-det oracle.

Node 0 is the source, nodes 1 and 2 the relays, node 3 the destination::

    Y1 = g01 X0 + Z1
    Y2 = g02 X0 + g12 X1 + Z2
    Y3 = g03 X0 + g13 X1 + g23 X2 + Z3

The transmitted signals are linear in eleven independent unit-variance
components, so every variable of the rate expressions is a coefficient
vector over that basis and any conditional mutual information follows from
Gram matrices (:func:`gaussian_cond_mi`). The closed forms in
:func:`corollary_terms` are evaluated independently of that machinery.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import NumericalConsistencyError, PreconditionError, StructuralError, ValidationError
from .probtable import DEFAULT_BASE, MI_CLAMP_TOL

POWER_TOL = 1e-9
RANK_TOL = 1e-12

GAIN_NAMES = ("g01", "g02", "g03", "g12", "g13", "g23")
POWER_NAMES = ("P0", "P1", "P2")
ALLOCATION_NAMES = (
    "alpha22", "beta22",
    "alpha11", "alpha12", "beta11",
    "alpha00", "alpha01", "alpha02", "beta01", "beta02", "phi01", "phi02", "phi03",
)
NODE_SLICES = {2: slice(0, 2), 1: slice(2, 5), 0: slice(5, 13)}
TERM_NAMES = ("I1", "I2", "I3", "I4", "I5", "I6", "I7", "I8")
COMBINATIONS = kernels.COMBOS
LATENT_BASIS = ("W0", "W1", "W2", "V1", "V2", "U1", "U2", "U3", "Z1", "Z2", "Z3")


@dataclass(frozen=True)
class GaussianTwoLevel:
    g01: float
    g02: float
    g03: float
    g12: float
    g13: float
    g23: float
    P0: float
    P1: float
    P2: float

    def __post_init__(self):
        for name in GAIN_NAMES + POWER_NAMES:
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValidationError(f"{name} must be finite, got {value!r}")
        for name in POWER_NAMES:
            if getattr(self, name) < 0:
                raise ValidationError(f"power {name} must be >= 0, got {getattr(self, name)!r}")

    @property
    def gains(self) -> tuple[float, ...]:
        return tuple(getattr(self, n) for n in GAIN_NAMES)

    @property
    def powers(self) -> tuple[float, float, float]:
        return (self.P0, self.P1, self.P2)

    def replace(self, **changes) -> "GaussianTwoLevel":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return GaussianTwoLevel(**values)

    def to_json(self) -> dict:
        return {"gains": {n: getattr(self, n) for n in GAIN_NAMES}, "powers": {n: getattr(self, n) for n in POWER_NAMES}}

    @classmethod
    def from_json(cls, data: Mapping) -> "GaussianTwoLevel":
        return cls(**{n: float(data["gains"][n]) for n in GAIN_NAMES}, **{n: float(data["powers"][n]) for n in POWER_NAMES})


@dataclass(frozen=True)
class PowerAllocation:
    """Signed amplitudes of every signalling component.

    Relay 2 sends ``alpha22 W2 + beta22 V2``; relay 1 sends
    ``alpha11 W1 + alpha12 W2 + beta11 V1``; the source sends
    ``alpha00 W0 + alpha01 W1 + alpha02 W2 + beta01 V1 + beta02 V2 +
    phi01 U1 + phi02 U2 + phi03 U3``.
    """

    alpha22: float = 0.0
    beta22: float = 0.0
    alpha11: float = 0.0
    alpha12: float = 0.0
    beta11: float = 0.0
    alpha00: float = 0.0
    alpha01: float = 0.0
    alpha02: float = 0.0
    beta01: float = 0.0
    beta02: float = 0.0
    phi01: float = 0.0
    phi02: float = 0.0
    phi03: float = 0.0

    def as_vector(self) -> list[float]:
        return [float(getattr(self, n)) for n in ALLOCATION_NAMES]

    @classmethod
    def from_vector(cls, values: Sequence[float]) -> "PowerAllocation":
        if len(values) != len(ALLOCATION_NAMES):
            raise StructuralError(f"allocation needs {len(ALLOCATION_NAMES)} amplitudes, got {len(values)}")
        return cls(*(float(v) for v in values))

    def node_power(self, node: int) -> float:
        return math.fsum(v * v for v in self.as_vector()[NODE_SLICES[node]])

    def violations(self, powers: Sequence[float], tol: float = POWER_TOL) -> list[str]:
        out = []
        for node in (0, 1, 2):
            used = self.node_power(node)
            if abs(used - powers[node]) > tol:
                names = ALLOCATION_NAMES[NODE_SLICES[node]]
                out.append(
                    f"node {node}: sum of squares of {', '.join(names)} is {used!r}, power P{node} is {powers[node]!r}"
                )
        return out

    def to_json(self) -> dict:
        return {n: getattr(self, n) for n in ALLOCATION_NAMES}

    @classmethod
    def from_json(cls, data: Mapping) -> "PowerAllocation":
        unknown = set(data) - set(ALLOCATION_NAMES)
        if unknown:
            raise StructuralError(f"unknown allocation fields {sorted(unknown)}")
        return cls(**{n: float(v) for n, v in data.items()})


def check_allocation(net: GaussianTwoLevel, alloc: PowerAllocation) -> None:
    problems = alloc.violations(net.powers)
    if problems:
        raise PreconditionError("power constraint violated: " + "; ".join(problems))


def input_covariance(alloc: PowerAllocation) -> np.ndarray:
    """Covariance of (X0, X1, X2) induced by an allocation."""
    a = alloc
    k01 = a.alpha01 * a.alpha11 + a.alpha02 * a.alpha12 + a.beta01 * a.beta11
    k02 = a.alpha02 * a.alpha22 + a.beta02 * a.beta22
    k12 = a.alpha12 * a.alpha22
    return np.array(
        [
            [a.node_power(0), k01, k02],
            [k01, a.node_power(1), k12],
            [k02, k12, a.node_power(2)],
        ]
    )


@dataclass(frozen=True)
class CorollaryTerms:
    I1: float
    I2: float
    I3: float
    I4: float
    I5: float
    I6: float
    I7: float
    I8: float

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, n) for n in TERM_NAMES)

    def replace(self, **changes) -> "CorollaryTerms":
        values = dict(zip(TERM_NAMES, self.as_tuple()))
        values.update(changes)
        return CorollaryTerms(**values)

    def to_json(self) -> dict:
        return dict(zip(TERM_NAMES, self.as_tuple()))


def corollary_terms(
    net: GaussianTwoLevel, alloc: PowerAllocation, base: float = DEFAULT_BASE, i4_mode: int = 0
) -> CorollaryTerms:
    """The eight closed-form rate terms.

    ``i4_mode=0`` uses the published I4, whose numerator contains
    ``(alpha00 + phi02)**2``; ``i4_mode=1`` uses ``alpha00**2 + phi02**2``,
    which is what independent W0 and U2 layers give.
    """
    check_allocation(net, alloc)
    nats = kernels.corollary_terms(net.gains, alloc.as_vector(), net.powers, i4_mode)
    scale = 1.0 / math.log(base)
    return CorollaryTerms(*(max(v, 0.0) * scale for v in nats))


def corollary_rate(terms: CorollaryTerms) -> tuple[float, str]:
    """``min{I1+I4+I5, I2+I3+I5, I2+I7, I4+I6, I8}`` and the first minimizer."""
    value, which = kernels.combine(list(terms.as_tuple()))
    return value, COMBINATIONS[which]


@dataclass(frozen=True, eq=False)
class LinearGaussianSystem:
    """Named variables as coefficient vectors over independent N(0,1) components."""

    basis: tuple[str, ...]
    vectors: Mapping[str, np.ndarray]

    def __post_init__(self):
        vecs = {}
        for name, v in self.vectors.items():
            v = np.array(v, dtype=float)
            if v.shape != (len(self.basis),):
                raise StructuralError(f"{name}: coefficient vector has shape {v.shape}, basis has {len(self.basis)}")
            v.setflags(write=False)
            vecs[name] = v
        object.__setattr__(self, "basis", tuple(self.basis))
        object.__setattr__(self, "vectors", vecs)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.vectors)

    def matrix(self, names: Iterable[str]) -> np.ndarray:
        rows = []
        for n in names:
            if n not in self.vectors:
                raise StructuralError(f"unknown variable {n!r}; system has {list(self.vectors)}")
            rows.append(self.vectors[n])
        return np.array(rows, dtype=float).reshape(len(rows), len(self.basis))

    def covariance(self, names: Iterable[str]) -> np.ndarray:
        m = self.matrix(list(names))
        return m @ m.T

    def variance(self, name: str) -> float:
        v = self.vectors[name]
        return float(v @ v)

    def mutual_information(self, a, b, c=(), base: float = DEFAULT_BASE) -> float:
        return gaussian_cond_mi(self, a, b, c, base=base)


def _listify(arg) -> list[str]:
    return [arg] if isinstance(arg, str) else list(arg)


def build_linear_system(net: GaussianTwoLevel, alloc: PowerAllocation) -> LinearGaussianSystem:
    check_allocation(net, alloc)
    idx = {n: i for i, n in enumerate(LATENT_BASIS)}

    def vec(**coeffs):
        v = np.zeros(len(LATENT_BASIS))
        for k, c in coeffs.items():
            v[idx[k]] = c
        return v

    a = alloc
    x2 = vec(W2=a.alpha22, V2=a.beta22)
    x1 = vec(W1=a.alpha11, W2=a.alpha12, V1=a.beta11)
    x0 = vec(
        W0=a.alpha00, W1=a.alpha01, W2=a.alpha02, V1=a.beta01, V2=a.beta02,
        U1=a.phi01, U2=a.phi02, U3=a.phi03,
    )
    y1 = net.g01 * x0 + vec(Z1=1.0)
    y2 = net.g02 * x0 + net.g12 * x1 + vec(Z2=1.0)
    y3 = net.g03 * x0 + net.g13 * x1 + net.g23 * x2 + vec(Z3=1.0)
    vectors = {
        "W0": vec(W0=1.0), "W1": vec(W1=1.0), "W2": vec(W2=1.0),
        "U1": vec(U1=1.0), "U2": vec(U2=1.0),
        "X0": x0, "X1": x1, "X2": x2,
        "Y1": y1, "Y2": y2, "Y3": y3,
    }
    return LinearGaussianSystem(LATENT_BASIS, vectors)


def _row_space(m: np.ndarray) -> np.ndarray:
    """Orthonormal basis (as columns) of the row space of ``m``."""
    if m.shape[0] == 0:
        return np.zeros((m.shape[1], 0))
    _, s, vt = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((m.shape[1], 0))
    keep = s > RANK_TOL * max(1.0, s[0])
    return vt[keep].T


def _conditional(sys: LinearGaussianSystem, target: list[str], cond: list[str]) -> tuple[int, float]:
    """Rank and log pseudo-determinant of Cov(target | cond), natural log."""
    m = sys.matrix(target)
    q = _row_space(sys.matrix(cond))
    resid = m - (m @ q) @ q.T
    cov = resid @ resid.T
    eig = np.linalg.eigvalsh(cov)
    scale = max(1.0, float(np.max(np.einsum("ij,ij->i", m, m))) if m.size else 1.0)
    nonzero = eig[eig > RANK_TOL * scale]
    return int(nonzero.size), float(np.sum(np.log(nonzero)))


def gaussian_cond_mi(sys: LinearGaussianSystem, a, b, c=(), base: float = DEFAULT_BASE) -> float:
    """``I(A; B | C)`` for jointly Gaussian variables.

    Half the log ratio of conditional-covariance pseudo-determinants, taken on
    a side that keeps its rank when the other set joins the conditioning.
    Returns ``inf`` when neither does (a noiseless component is revealed).
    """
    a, b, c = _listify(a), _listify(b), _listify(c)
    for x, y, label in ((a, b, "A/B"), (a, c, "A/C"), (b, c, "B/C")):
        if set(x) & set(y):
            raise StructuralError(f"{label} overlap on {sorted(set(x) & set(y))}")
    value = None
    # The smaller side first: outputs carry unit noise, so their conditional
    # covariances stay well conditioned.
    sides = ((a, b), (b, a)) if len(a) <= len(b) else ((b, a), (a, b))
    for first, second in sides:
        r1, l1 = _conditional(sys, first, c)
        r2, l2 = _conditional(sys, first, second + c)
        if r1 == r2:
            value = 0.5 * (l1 - l2)
            break
    if value is None:
        return math.inf
    value /= math.log(base)
    if value < -MI_CLAMP_TOL:
        raise NumericalConsistencyError(f"I({a};{b}|{c}) evaluated to {value!r}")
    return max(value, 0.0)


ORACLE_MAP = {
    "I1": (["U1"], ["Y1"], ["W0", "W1", "W2", "X1"]),
    "I2": (["U1", "W0"], ["Y1"], ["X1", "W1", "W2"]),
    "I3": (["U2"], ["Y2"], ["W0", "W1", "W2", "X2"]),
    "I4": (["U2", "W0", "W1"], ["Y2"], ["X2", "W2"]),
    "I5": (["X0"], ["Y3"], ["U1", "U2", "X1", "X2", "W0", "W1", "W2"]),
    "I6": (["X0", "X1", "U1"], ["Y3"], ["X2", "U2", "W0", "W1", "W2"]),
    "I7": (["X0", "X2", "U2"], ["Y3"], ["X1", "U1", "W0", "W1", "W2"]),
    "I8": (["U1", "U2", "X0", "X1", "X2", "W0", "W1", "W2"], ["Y3"], []),
}


def oracle_terms(sys: LinearGaussianSystem, base: float = DEFAULT_BASE) -> CorollaryTerms:
    """The eight terms as conditional mutual informations of the system."""
    return CorollaryTerms(*(gaussian_cond_mi(sys, *ORACLE_MAP[n], base=base) for n in TERM_NAMES))


@dataclass(frozen=True)
class TermComparison:
    printed: CorollaryTerms
    oracle: CorollaryTerms

    @property
    def deltas(self) -> dict[str, float]:
        return {n: p - o for n, p, o in zip(TERM_NAMES, self.printed.as_tuple(), self.oracle.as_tuple())}

    def to_json(self) -> dict:
        return {"printed": self.printed.to_json(), "oracle": self.oracle.to_json(), "delta": self.deltas}


def compare_terms(net: GaussianTwoLevel, alloc: PowerAllocation, base: float = DEFAULT_BASE) -> TermComparison:
    return TermComparison(corollary_terms(net, alloc, base), oracle_terms(build_linear_system(net, alloc), base))


def i4_residual(net: GaussianTwoLevel, alloc: PowerAllocation, base: float = DEFAULT_BASE) -> dict:
    """Printed-minus-oracle I4, both in rate units and in SNR units.

    In SNR units the difference should be ``2 g02^2 alpha00 phi02`` over the
    relay-2 noise denominator.
    """
    cmp = compare_terms(net, alloc, base)
    a = alloc
    denom = (net.g02 * a.beta01 + net.g12 * a.beta11) ** 2 + net.g02**2 * (a.phi01**2 + a.phi03**2) + 1.0
    expected = 2.0 * net.g02**2 * a.alpha00 * a.phi02 / denom
    snr = lambda v: base ** (2.0 * v) - 1.0  # noqa: E731
    observed = snr(cmp.printed.I4) - snr(cmp.oracle.I4)
    return {
        "rate_residual": cmp.printed.I4 - cmp.oracle.I4,
        "snr_residual": observed,
        "expected_snr_residual": expected,
        "relative_error": abs(observed - expected) / max(abs(expected), 1e-300) if expected != 0 else abs(observed),
    }


def cut_system(net: GaussianTwoLevel, covariance) -> LinearGaussianSystem:
    """Jointly Gaussian (X0, X1, X2) with the given covariance plus outputs."""
    k = np.asarray(covariance, dtype=float)
    if k.shape != (3, 3) or not np.allclose(k, k.T, atol=1e-12):
        raise PreconditionError("input covariance must be a symmetric 3x3 matrix")
    eig, vecs = np.linalg.eigh(k)
    if eig.min() < -POWER_TOL * max(1.0, abs(eig).max()):
        raise PreconditionError(f"input covariance is not positive semidefinite (eigenvalue {eig.min()!r})")
    for i, cap in enumerate(net.powers):
        if k[i, i] > cap + POWER_TOL:
            raise PreconditionError(f"variance of X{i} is {k[i, i]!r}, above its power P{i}={cap!r}")
    factor = vecs * np.sqrt(np.clip(eig, 0.0, None))
    basis = ("S0", "S1", "S2", "Z1", "Z2", "Z3")
    x = [np.concatenate([factor[i], np.zeros(3)]) for i in range(3)]
    z = np.eye(6)[3:]
    vectors = {
        "X0": x[0], "X1": x[1], "X2": x[2],
        "Y1": net.g01 * x[0] + z[0],
        "Y2": net.g02 * x[0] + net.g12 * x[1] + z[1],
        "Y3": net.g03 * x[0] + net.g13 * x[1] + net.g23 * x[2] + z[2],
    }
    return LinearGaussianSystem(basis, vectors)


CUTS = {
    "{0}": (["X0"], ["Y1", "Y2", "Y3"], ["X1", "X2"]),
    "{0,1}": (["X0", "X1"], ["Y2", "Y3"], ["X2"]),
    "{0,2}": (["X0", "X2"], ["Y1", "Y3"], ["X1"]),
    "{0,1,2}": (["X0", "X1", "X2"], ["Y3"], []),
}


def cut_values(net: GaussianTwoLevel, covariance, base: float = DEFAULT_BASE) -> dict[str, float]:
    sys = cut_system(net, covariance)
    return {name: gaussian_cond_mi(sys, *spec, base=base) for name, spec in CUTS.items()}


def cutset_upper_bound(net: GaussianTwoLevel, covariance, base: float = DEFAULT_BASE) -> float:
    """Smallest cut value for one input covariance (source-side cuts)."""
    return min(cut_values(net, covariance, base).values())
