"""Self-checks: closed forms against the LP and the log-det oracle, plus
chain-rule and reduction identities, on seeded random instances."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import instances
from .gaussian import (
    TERM_NAMES,
    build_linear_system,
    corollary_rate,
    corollary_terms,
    gaussian_cond_mi,
    i4_residual,
    oracle_terms,
)
from .network import assemble_joint
from .probtable import cond_mutual_info
from .rates import relay_bound_without_w0, constraint_set, df_reduction_rate, lp_rate, rate_split_lp, theorem_rate

TOL = 1e-9
I4_STRUCTURE_TOL = 1e-6
INFORMATIONAL_TERMS = ("I1", "I4")
FAMILIES = ("lp", "gaussian", "chain", "df")


@dataclass
class Check:
    name: str
    informational: bool = False
    tolerance: float = TOL
    count: int = 0
    max_abs_deviation: float = 0.0
    details: dict = field(default_factory=dict)

    def record(self, deviation: float) -> None:
        self.count += 1
        d = abs(deviation)
        if not d <= self.max_abs_deviation:  # also catches nan
            self.max_abs_deviation = d

    @property
    def status(self) -> str:
        if self.informational:
            return "info"
        return "pass" if self.max_abs_deviation <= self.tolerance else "fail"

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "status": self.status,
            "count": self.count,
            "max_abs_deviation": self.max_abs_deviation,
            "tolerance": self.tolerance,
        }
        if self.details:
            out["details"] = self.details
        return out


@dataclass
class VerificationReport:
    samples: int
    seed: int
    checks: list[Check]

    @property
    def failures(self) -> list[str]:
        return [c.name for c in self.checks if c.status == "fail"]

    @property
    def exit_code(self) -> int:
        return 3 if self.failures else 0

    def to_json(self) -> dict:
        return {
            "samples": self.samples,
            "seed": self.seed,
            "passed": not self.failures,
            "failures": self.failures,
            "checks": [c.to_json() for c in self.checks],
        }


def _rngs(seed: int):
    children = np.random.SeedSequence(seed).spawn(len(FAMILIES))
    return {name: np.random.default_rng(c) for name, c in zip(FAMILIES, children)}


def _dm_checks(rng, samples: int) -> list[Check]:
    lp = Check("lp-vs-closed-form")
    lp_bound = Check("lp-at-most-closed-form")
    split = Check("chain-rule[relay-common=common+private]")
    chain = Check("chain-rule[dm]")
    without_w0 = Check("relay-bound-without-W0", informational=True)
    order = (1, 2)
    for _ in range(samples):
        net, dist = instances.random_dm_instance(rng)
        joint = assemble_joint(net, dist)
        tr = theorem_rate(joint, order)
        cs = constraint_set(joint, order)
        total = rate_split_lp(cs).total
        lp.record(tr.rate - total)
        lp_bound.record(max(0.0, total - tr.rate))
        bounds = {c.tag: c.bound for c in cs.constraints}
        for r in order:
            # order (1, 2): relay r decodes W0..W{r-1} knowing its own and later W
            decoded = ["W%d" % k for k in range(r)]
            known = ["X%d" % r] + ["W%d" % k for k in range(r, 3)]
            common = joint.mutual_information(decoded, "Y%d" % r, known)
            split.record(bounds[f"relay-common[{r}]"] - bounds[f"relay-private[{r}]"] - common)
        whole = cond_mutual_info(joint, ["X0", "X1", "X2"], "Y3")
        parts = (
            cond_mutual_info(joint, "X0", "Y3")
            + cond_mutual_info(joint, "X1", "Y3", "X0")
            + cond_mutual_info(joint, "X2", "Y3", ["X0", "X1"])
        )
        chain.record(whole - parts)
        variant = relay_bound_without_w0(joint, order)
        without_w0.record(max(abs(bounds[f"relay-common[{r}]"] - variant[r]) for r in order))
    return [lp, lp_bound, split, chain, without_w0]


def _counterexample_check() -> Check:
    net, dist, expected = instances.closed_form_gap_instance()
    joint = assemble_joint(net, dist)
    closed = theorem_rate(joint, (1, 2)).rate
    lp = lp_rate(joint, (1, 2)).total
    c = Check("closed-form-vs-lp[structured instance]", informational=True)
    c.record(closed - lp)
    c.details = {"closed_form": closed, "lp": lp, "expected": expected}
    return c


def _df_checks(rng, samples: int) -> list[Check]:
    c = Check("reduction[decode-forward, single relay]")
    for _ in range(samples):
        net, dist = instances.random_df_instance(rng)
        joint = assemble_joint(net, dist)
        ref = min(cond_mutual_info(joint, "X0", "Y1", "X1"), cond_mutual_info(joint, ["X0", "X1"], "Y2"))
        c.record(theorem_rate(joint, (1,)).rate - ref)
        c.record(df_reduction_rate(joint, (1,)) - ref)
    return [c]


def _gaussian_checks(rng, samples: int, terms_fn) -> list[Check]:
    per_term = {
        n: Check(f"printed-vs-oracle[{n}]", informational=n in INFORMATIONAL_TERMS) for n in TERM_NAMES
    }
    structure = Check("I4-residual-structure", informational=True, tolerance=I4_STRUCTURE_TOL)
    identity = Check("closed-form-from-general-rate")
    chain = Check("chain-rule[gaussian]")
    xk = Check("reduction[zero-private allocations]")
    rel_errors = []
    for _ in range(samples):
        net, alloc = instances.random_gaussian_instance(rng)
        sys = build_linear_system(net, alloc)
        printed = terms_fn(net, alloc)
        oracle = oracle_terms(sys)
        for n, p, o in zip(TERM_NAMES, printed.as_tuple(), oracle.as_tuple()):
            per_term[n].record(p - o)
        res = i4_residual(net, alloc)
        if res["expected_snr_residual"] != 0.0:
            rel_errors.append(res["relative_error"])
        general = theorem_rate(sys, (1, 2)).rate
        identity.record(general - corollary_rate(oracle)[0])
        whole = gaussian_cond_mi(sys, ["X0", "X1", "X2"], ["Y3"])
        parts = (
            gaussian_cond_mi(sys, ["X0"], ["Y3"])
            + gaussian_cond_mi(sys, ["X1"], ["Y3"], ["X0"])
            + gaussian_cond_mi(sys, ["X2"], ["Y3"], ["X0", "X1"])
        )
        chain.record(whole - parts)
        zp = corollary_terms(net, instances.zero_private(alloc, net.powers))
        xk.record(corollary_rate(zp)[0] - min(zp.I2, zp.I4, zp.I8))
    structure.count = len(rel_errors)
    structure.max_abs_deviation = max(rel_errors, default=0.0)
    structure.details = {
        "max_relative_error": structure.max_abs_deviation,
        "confirmed": structure.max_abs_deviation <= I4_STRUCTURE_TOL,
        "expected_form": "2*g02^2*alpha00*phi02 / ((g02*beta01+g12*beta11)^2 + g02^2*(phi01^2+phi03^2) + 1)",
    }
    per_term["I4"].details = {"max_abs_residual_bits": per_term["I4"].max_abs_deviation}
    per_term["I1"].details = {"max_abs_residual_bits": per_term["I1"].max_abs_deviation}
    return list(per_term.values()) + [structure, identity, chain, xk]


def _default_terms(net, alloc):
    return corollary_terms(net, alloc)


def verify(samples: int, seed: int = 0, terms_fn=None) -> VerificationReport:
    """Run every self-check on ``samples`` random instances per family.

    ``terms_fn(net, alloc)`` supplies the closed-form terms in bits; it
    exists so tests can inject a corrupted formula. Deviations are in bits.
    """
    if samples < 0:
        raise ValueError(f"samples must be >= 0, got {samples}")
    if samples == 0:
        return VerificationReport(0, seed, [])
    terms_fn = terms_fn or _default_terms
    rng = _rngs(seed)
    checks = _dm_checks(rng["lp"], samples)
    checks.append(_counterexample_check())
    checks.extend(_df_checks(rng["df"], samples))
    checks.extend(_gaussian_checks(rng["gaussian"], samples, terms_fn))
    return VerificationReport(samples, seed, checks)
