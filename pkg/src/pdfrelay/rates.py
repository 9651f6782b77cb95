"""Partial decode-forward rate of an N-relay network for a fixed distribution.

Two routes to the same number:

* :func:`theorem_rate` evaluates the closed min-over-cuts expression.
* :func:`constraint_set` lists the per-decoder rate constraints on the
  message split ``(R0, R1..RN, R_{N+1})`` and :func:`rate_split_lp`
  maximizes the total rate over that polytope by enumerating its vertices.

Rates are indexed by relay label: coordinate ``k`` of a split is the private
rate of relay ``k`` whatever the decoding order. ``model`` arguments are any
object with a ``mutual_information(a, b, c, base=...)`` method over the
package's variable names, i.e. a :class:`~pdfrelay.probtable.JointPmf` or a
:class:`~pdfrelay.gaussian.LinearGaussianSystem`.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import PreconditionError, StructuralError
from .network import (
    CodingDistribution,
    CutSubset,
    DmRelayNetwork,
    Permutation,
    assemble_joint,
    enumerate_cut_subsets,
    enumerate_permutations,
    subset_key,
    u_name,
    validate_permutation,
    w_name,
    x_name,
    y_name,
)
from .probtable import DEFAULT_BASE, JointPmf

FULL_DECODING = "full-decoding"
TIE_TOL = 1e-12


def subset_label(subset) -> str:
    return "S={" + ",".join(str(i) for i in sorted(subset)) + "}"


@dataclass(frozen=True)
class RateConstraint:
    coefficients: tuple[int, ...]
    bound: float
    tag: str


@dataclass(frozen=True)
class RateConstraintSet:
    """``sum(c_i R_i) <= bound`` rows over ``(R0, R1..RN, R_{N+1})``."""

    relay_count: int
    constraints: tuple[RateConstraint, ...]

    @property
    def matrix(self) -> np.ndarray:
        return np.array([c.coefficients for c in self.constraints], dtype=float).reshape(
            len(self.constraints), self.relay_count + 2
        )

    @property
    def bounds(self) -> np.ndarray:
        return np.array([c.bound for c in self.constraints], dtype=float)

    def with_bound(self, index: int, bound: float) -> "RateConstraintSet":
        rows = list(self.constraints)
        rows[index] = RateConstraint(rows[index].coefficients, bound, rows[index].tag)
        return RateConstraintSet(self.relay_count, tuple(rows))

    def to_json(self) -> dict:
        return {
            "relay_count": self.relay_count,
            "constraints": [
                {"coefficients": list(c.coefficients), "bound": c.bound, "tag": c.tag} for c in self.constraints
            ],
        }


@dataclass(frozen=True)
class RateSplit:
    rates: tuple[float, ...]

    @property
    def total(self) -> float:
        return math.fsum(self.rates)

    def to_json(self) -> dict:
        return {"rates": list(self.rates), "total": self.total}


@dataclass(frozen=True)
class RateBreakdown:
    """Evaluated min-over-cuts rate.

    ``term_values`` holds the full-decoding bound followed by one composite
    per proper cut subset, in enumeration order; ``components`` keeps the
    pieces of each composite (cut term, common-message term, private sum).
    """

    rate: float
    argmin: object
    term_values: Mapping[str, float]
    order: Permutation
    components: Mapping[str, Mapping[str, float]] = field(default_factory=dict)

    @property
    def argmin_label(self) -> str:
        return self.argmin if isinstance(self.argmin, str) else subset_label(self.argmin)

    def to_json(self) -> dict:
        return {
            "rate": self.rate,
            "argmin": self.argmin_label,
            "order": list(self.order),
            "terms": dict(self.term_values),
            "components": {k: dict(v) for k, v in self.components.items()},
        }


def _relays(model, n: int) -> None:
    names = set(_model_names(model))
    needed = (
        [w_name(i) for i in range(n + 1)]
        + [u_name(i) for i in range(1, n + 1)]
        + [x_name(i) for i in range(n + 1)]
        + [y_name(i) for i in range(1, n + 2)]
    )
    missing = [v for v in needed if v not in names]
    if missing:
        raise StructuralError(f"model lacks variables {missing} needed for {n} relays")


def _model_names(model) -> Sequence[str]:
    return model.names


def infer_relay_count(model) -> int:
    names = set(_model_names(model))
    n = 0
    while u_name(n + 1) in names:
        n += 1
    if n < 1:
        raise StructuralError("model has no relay private variables U1..UN")
    return n


class _Terms:
    """Mutual-information terms of one (model, order) pair, memoized."""

    def __init__(self, model, order: Permutation, base: float):
        self.n = len(order)
        problems = validate_permutation(order, self.n)
        if problems:
            raise StructuralError(problems[0])
        _relays(model, self.n)
        self.model = model
        self.order = tuple(order)
        self.base = base
        self.all_w = [w_name(i) for i in range(self.n + 1)]
        self.all_u = [u_name(i) for i in range(1, self.n + 1)]
        self.relay_x = [x_name(i) for i in range(1, self.n + 1)]
        self.dest = y_name(self.n + 1)
        self._cache: dict = {}

    def mi(self, a, b, c=()):
        key = (frozenset(a), frozenset(b), frozenset(c))
        if key not in self._cache:
            self._cache[key] = self.model.mutual_information(list(a), list(b), list(c), base=self.base)
        return self._cache[key]

    def _decoded_before(self, relay: int) -> tuple[list[str], list[str]]:
        k = self.order.index(relay)
        earlier = [w_name(0)] + [w_name(r) for r in self.order[:k]]
        known = [w_name(r) for r in self.order[k:]]
        return earlier, known

    def private(self, relay: int) -> float:
        """Private-message term of a relay: I(U_r; Y_r | all W, X_r)."""
        return self.mi([u_name(relay)], [y_name(relay)], self.all_w + [x_name(relay)])

    def common(self, relay: int) -> float:
        """Common-message term: I(W0, earlier W; Y_r | X_r, own and later W)."""
        earlier, known = self._decoded_before(relay)
        return self.mi(earlier, [y_name(relay)], [x_name(relay)] + known)

    def joint_relay(self, relay: int, include_w0: bool = True) -> float:
        earlier, known = self._decoded_before(relay)
        if not include_w0:
            earlier = earlier[1:]
        return self.mi([u_name(relay)] + earlier, [y_name(relay)], [x_name(relay)] + known)

    def cut(self, subset) -> float:
        """I(X0, X_S, U_S; Y_dest | X_Sc, U_Sc, all W)."""
        s = sorted(subset)
        sc = [r for r in range(1, self.n + 1) if r not in subset]
        a = [x_name(0)] + [x_name(r) for r in s] + [u_name(r) for r in s]
        c = [x_name(r) for r in sc] + [u_name(r) for r in sc] + self.all_w
        return self.mi(a, [self.dest], c)

    def full(self) -> float:
        return self.mi(self.all_u + [x_name(0)] + self.relay_x + self.all_w, [self.dest])

    def private_total(self) -> float:
        return self.mi(self.all_u + [x_name(0)] + self.relay_x, [self.dest], self.all_w)


def _coeffs(n: int, indices: Sequence[int]) -> tuple[int, ...]:
    # index 0 is R0, 1..n relay labels, n+1 the destination-only part
    vec = [0] * (n + 2)
    for i in indices:
        vec[i] = 1
    return tuple(vec)


def constraint_set(model, order: Permutation, base: float = DEFAULT_BASE) -> RateConstraintSet:
    """Decoding constraints at every relay and at the destination."""
    t = _Terms(model, order, base)
    n = t.n
    rows = []
    for relay in t.order:
        rows.append(RateConstraint(_coeffs(n, [relay]), t.private(relay), f"relay-private[{relay}]"))
        rows.append(RateConstraint(_coeffs(n, [0, relay]), t.joint_relay(relay), f"relay-common[{relay}]"))
    rows.append(RateConstraint(_coeffs(n, range(n + 2)), t.full(), "dest-total"))
    for subset in enumerate_cut_subsets(n, proper_only=False):
        rows.append(
            RateConstraint(_coeffs(n, sorted(subset) + [n + 1]), t.cut(subset), f"dest-cut[{subset_label(subset)}]")
        )
    rows.append(RateConstraint(_coeffs(n, range(1, n + 2)), t.private_total(), "dest-private-total"))
    return RateConstraintSet(n, tuple(rows))


def relay_bound_without_w0(model, order: Permutation, base: float = DEFAULT_BASE) -> dict[int, float]:
    """Joint relay bound computed without W0 among the decoded common layers.

    Reported next to :func:`constraint_set` only for comparison; the rate
    computations always include W0.
    """
    t = _Terms(model, order, base)
    return {relay: t.joint_relay(relay, include_w0=False) for relay in t.order}


def _first_min(values: Mapping) -> tuple[object, float]:
    best = min(values.values())
    for key, v in values.items():
        if v <= best + TIE_TOL:
            return key, best
    raise AssertionError("unreachable")


def theorem_rate(model, order: Permutation, base: float = DEFAULT_BASE) -> RateBreakdown:
    """Min over the full-decoding bound and one composite per proper cut.

    The composite for cut ``S`` is the destination cut term plus the weakest
    common-message term among relays outside ``S`` plus the private terms of
    those relays.
    """
    t = _Terms(model, order, base)
    n = t.n
    terms: dict[object, float] = {FULL_DECODING: t.full()}
    components = {FULL_DECODING: {"full": terms[FULL_DECODING]}}
    for subset in enumerate_cut_subsets(n, proper_only=True):
        outside = [r for r in t.order if r not in subset]
        cut = t.cut(subset)
        common = min(t.common(r) for r in outside)
        private = math.fsum(t.private(r) for r in outside)
        terms[subset] = cut + common + private
        components[subset_label(subset)] = {"cut": cut, "common_min": common, "private_sum": private}
    key, rate = _first_min(terms)
    labelled = {k if isinstance(k, str) else subset_label(k): v for k, v in terms.items()}
    return RateBreakdown(rate, key, labelled, t.order, components)


def _lex_best(points: np.ndarray, tol: float) -> np.ndarray:
    keep = points
    for col in range(points.shape[1]):
        top = keep[:, col].max()
        keep = keep[keep[:, col] >= top - tol]
    return keep[0]


def rate_split_lp(cs: RateConstraintSet, chunk: int = 20000) -> RateSplit:
    """Maximize the total rate over ``cs`` by vertex enumeration.

    Every square subsystem of the constraints plus ``R_i >= 0`` is solved; the
    feasible solutions are the polytope's vertices. Ties on the total are
    broken towards the lexicographically largest split.
    """
    if not cs.constraints:
        raise StructuralError("empty constraint set")
    n_var = cs.relay_count + 2
    rows = {}
    for coeff, bound in zip(map(tuple, cs.matrix.astype(int)), cs.bounds):
        rows[coeff] = min(bound, rows.get(coeff, math.inf))
    a = np.array(list(rows.keys()), dtype=float)
    b = np.array(list(rows.values()), dtype=float)
    full_a = np.vstack([a, -np.eye(n_var)])
    full_b = np.concatenate([b, np.zeros(n_var)])
    scale = max(1.0, float(np.abs(b).max()))
    feas_tol = 1e-12 * scale

    best_total = -math.inf
    candidates = []
    combos = itertools.combinations(range(full_a.shape[0]), n_var)
    while True:
        block = np.array(list(itertools.islice(combos, chunk)), dtype=int)
        if block.size == 0:
            break
        mats = full_a[block]
        rhs = full_b[block]
        # 0/+-1 matrices have integer determinants; anything below 0.5 is singular.
        det = np.linalg.det(mats)
        ok = np.abs(det) > 0.5
        if not ok.any():
            continue
        sol = np.linalg.solve(mats[ok], rhs[ok][..., None])[..., 0]
        feasible = np.all(sol @ full_a.T <= full_b + feas_tol, axis=1)
        sol = sol[feasible]
        if not len(sol):
            continue
        totals = sol.sum(axis=1)
        top = totals.max()
        if top > best_total + TIE_TOL:
            best_total = top
            candidates = [sol[totals >= top - TIE_TOL]]
        elif top >= best_total - TIE_TOL:
            best_total = max(best_total, top)
            candidates.append(sol[totals >= best_total - TIE_TOL])
    pool = np.vstack(candidates)
    pool = pool[pool.sum(axis=1) >= best_total - TIE_TOL]
    point = np.clip(_lex_best(pool, TIE_TOL * scale), 0.0, None)
    return RateSplit(tuple(float(v) for v in point))


def lp_rate(model, order: Permutation, base: float = DEFAULT_BASE) -> RateSplit:
    return rate_split_lp(constraint_set(model, order, base))


def best_over_permutations(
    net: DmRelayNetwork,
    dist_provider: Mapping[Permutation, CodingDistribution] | Callable[[Permutation], CodingDistribution],
    base: float = DEFAULT_BASE,
) -> tuple[Permutation, RateBreakdown]:
    """Best decoding order; ties go to the lexicographically first order."""
    best = None
    for order in enumerate_permutations(net.relay_count):
        if callable(dist_provider):
            dist = dist_provider(order)
        else:
            dist = dist_provider.get(tuple(order))
        if dist is None:
            raise StructuralError(f"no coding distribution supplied for order {list(order)}")
        if tuple(dist.order) != tuple(order):
            raise StructuralError(f"distribution for order {list(order)} declares order {list(dist.order)}")
        breakdown = theorem_rate(assemble_joint(net, dist), order, base)
        if best is None or breakdown.rate > best[1].rate + TIE_TOL:
            best = (tuple(order), breakdown)
    return best


def df_reduction_rate(model, order: Permutation, base: float = DEFAULT_BASE, tol: float = 1e-12) -> float:
    """Full decode-forward rate: min of every relay's common term and the
    full-decoding bound.

    Only meaningful when every ``U`` is a constant and the source input is a
    function of the auxiliaries and relay inputs (nothing left for the
    destination alone); both are checked.
    """
    t = _Terms(model, order, base)
    for relay in t.order:
        size = _alphabet_size(model, u_name(relay))
        if size is not None and size != 1:
            raise PreconditionError(f"{u_name(relay)} has alphabet size {size}; decode-forward needs 1")
    if isinstance(model, JointPmf):
        residual = model.entropy([x_name(0)], t.all_w + t.all_u + t.relay_x, base=base)
        if residual > tol:
            raise PreconditionError(
                f"X0 carries {residual:.3g} units beyond the auxiliaries; the destination-only part is not empty"
            )
    return min([t.common(r) for r in t.order] + [t.full()])


def _alphabet_size(model, name: str):
    if isinstance(model, JointPmf):
        return model.variable(name).alphabet_size
    return None
