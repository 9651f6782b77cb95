"""Acceptance criteria 1-7, one PASS/FAIL line each (see the terminal summary)."""
import json
import math
import time

import numpy as np
import pytest

from pdfrelay import instances
from pdfrelay.cli import run_job
from pdfrelay.config import parse_config
from pdfrelay.gaussian import GaussianTwoLevel, corollary_rate, corollary_terms, input_covariance
from pdfrelay.network import assemble_joint
from pdfrelay.optimizer import (
    OptimizerConfig,
    SweepSpec,
    df_seed,
    direct_seed,
    maximize_cutset,
    maximize_min_rate,
    sweep,
)
from pdfrelay.probtable import cond_mutual_info
from pdfrelay.rates import lp_rate, theorem_rate
from pdfrelay.verify import verify

from test_cli import GOLDEN, NET, doc, read_rows, sweep_doc

SEED = 20240611
SUITE = 100


@pytest.fixture(scope="module")
def verify_report():
    return verify(1000, SEED)


def check(report, name):
    return next(c for c in report.checks if c.name == name)


def test_criterion_1_lp_equivalence(acceptance):
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    worst = 0.0
    count = 200
    for _ in range(count):
        net, dist = instances.random_dm_instance(rng)
        joint = assemble_joint(net, dist)
        worst = max(worst, abs(theorem_rate(joint, (1, 2)).rate - lp_rate(joint, (1, 2)).total))
    elapsed = time.perf_counter() - start
    # informational: sparse Dirichlet draws occasionally expose the structural gap
    sparse_rng = np.random.default_rng(SEED)
    sparse_gaps = 0
    for _ in range(count):
        joint = assemble_joint(*instances.random_dm_instance(sparse_rng, concentration=0.1))
        sparse_gaps += theorem_rate(joint, (1, 2)).rate - lp_rate(joint, (1, 2)).total > 1e-9
    ok = acceptance(
        "1",
        worst <= 1e-9 and elapsed <= 60,
        f"{count} instances, max |closed form - LP| = {worst:.2e} bits, {elapsed:.1f} s; "
        f"sparse draws (concentration 0.1) with a gap: {sparse_gaps}/{count}",
    )
    assert ok


def test_criterion_2_oracle_agreement(acceptance, verify_report):
    strict = {k: check(verify_report, f"printed-vs-oracle[{k}]") for k in ("I2", "I3", "I5", "I6", "I7", "I8")}
    worst = max(c.max_abs_deviation for c in strict.values())
    i1 = check(verify_report, "printed-vs-oracle[I1]")
    i4 = check(verify_report, "printed-vs-oracle[I4]")
    structure = check(verify_report, "I4-residual-structure")
    stated = "max_abs_residual_bits" in i1.details and "max_abs_residual_bits" in i4.details
    confirmed = i4.max_abs_deviation == 0 or structure.details["confirmed"]
    ok = acceptance(
        "2",
        worst <= 1e-9 and stated and confirmed and all(c.count == 1000 for c in strict.values()),
        f"1000 instances, max dev I2,I3,I5-I8 = {worst:.2e}; I1 residual {i1.max_abs_deviation:.2e}; "
        f"I4 residual {i4.max_abs_deviation:.3f} bits, structure rel. err {structure.max_abs_deviation:.2e}",
    )
    assert ok


def test_criterion_3_closed_form_from_general_rate(acceptance, verify_report):
    c = check(verify_report, "closed-form-from-general-rate")
    ok = acceptance("3", c.count == 1000 and c.max_abs_deviation <= 1e-9, f"1000 instances, max dev {c.max_abs_deviation:.2e}")
    assert ok


def test_criterion_4_reductions(acceptance):
    rng = np.random.default_rng(SEED + 4)
    worst_df = 0.0
    for _ in range(60):
        net, dist = instances.random_df_instance(rng)
        j = assemble_joint(net, dist)
        ref = min(cond_mutual_info(j, "X0", "Y1", "X1"), cond_mutual_info(j, ["X0", "X1"], "Y2"))
        worst_df = max(worst_df, abs(theorem_rate(j, (1,)).rate - ref))
    worst_g = 0.0
    for _ in range(200):
        net, alloc = instances.random_gaussian_instance(rng)
        t = corollary_terms(net, instances.zero_private(alloc, net.powers))
        worst_g = max(worst_g, abs(corollary_rate(t)[0] - min(t.I2, t.I4, t.I8)))
    ok = acceptance(
        "4", worst_df <= 1e-9 and worst_g <= 1e-9,
        f"(a) 60 single-relay DF instances max dev {worst_df:.2e}; (b) 200 zero-private allocations max dev {worst_g:.2e}",
    )
    assert ok


def _suite():
    rng = np.random.default_rng(SEED + 5)
    nets = []
    for _ in range(SUITE):
        net, _ = instances.random_gaussian_instance(rng, powers=tuple(float(p) for p in rng.uniform(0.25, 4.0, 3)))
        nets.append(net)
    return nets


@pytest.fixture(scope="module")
def optimized_suite():
    out = {}
    for source, mode in (("printed", 0), ("oracle", 1)):
        rows = []
        for k, net in enumerate(_suite()):
            cfg = OptimizerConfig(master_seed=k, i4_mode=mode)
            res = maximize_min_rate(net, cfg)
            seeds = [corollary_rate(corollary_terms(net, s, i4_mode=mode))[0] for s in (direct_seed(net.powers), df_seed(net.powers))]
            cut, _, _ = maximize_cutset(net, [input_covariance(res.allocation)], 16, k, cfg)
            rows.append((net, res, seeds, cut))
        out[source] = rows
    return out


def test_criterion_5_optimizer_sanity(acceptance, optimized_suite):
    direct = GaussianTwoLevel(0, 0, 1, 0, 0, 0, 1, 1, 1)
    r = maximize_min_rate(direct).rate
    direct_ok = 0.5 - 1e-3 <= r <= 0.5 + 1e-9
    margin = min(res.rate - max(seeds) for rows in optimized_suite.values() for _, res, seeds, _ in rows)
    rows = sweep(SweepSpec(GaussianTwoLevel.from_json(NET), "P0", (0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0)))
    drops = [a.rate_pdf - b.rate_pdf for a, b in zip(rows, rows[1:])]
    monotone = max(drops) <= 1e-6
    ok = acceptance(
        "5", direct_ok and margin >= 0 and monotone,
        f"direct-only rate {r!r} bits; min seed margin {margin:.2e} over {SUITE} instances x 2 I4 sources; "
        f"smallest P0-sweep step {-max(drops):+.2e} bits (negative would be a drop)",
    )
    assert ok


@pytest.mark.parametrize("source", ["oracle", "printed"])
def test_criterion_6_cutset(acceptance, optimized_suite, source):
    rows = optimized_suite[source]
    excess = [res.rate - cut for _, res, _, cut in rows]
    bad = [e for e in excess if e > 1e-6]
    ok = acceptance(
        f"6 [I4 {source}]", not bad,
        f"{len(bad)}/{len(rows)} instances above the cut-set bound"
        + (f", worst by {max(bad):.4f} bits" if bad else f", max rate - bound {max(excess):.2e} bits"),
    )
    assert ok, "the published I4 lets the optimized rate exceed the cut-set bound; see the decisions ledger"


def test_criterion_7_determinism_and_golden(acceptance, tmp_path):
    jobs = {
        "verify": doc("verify", {"samples": 20}, seed=SEED),
        "optimize": doc("optimize", {"network": NET}, seed=SEED),
        "sweep": sweep_doc(),
    }
    identical = True
    for name, text in jobs.items():
        a, b = tmp_path / name / "a", tmp_path / name / "b"
        run_job(parse_config(text), a)
        run_job(parse_config(text), b)
        for f in sorted(p.name for p in a.iterdir()):
            identical &= (a / f).read_bytes() == (b / f).read_bytes()
    raw = (tmp_path / "sweep" / "a" / "sweep.csv").read_bytes()
    header_ok = raw.startswith((GOLDEN / "sweep_header.csv").read_bytes())
    got = read_rows(raw.decode())
    want = read_rows((GOLDEN / "sweep_p0.csv").read_text())
    golden_ok = got[0] == want[0] and len(got) == len(want) and all(
        g[0] == w[0] and g[6] == w[6] and np.allclose([float(v) for v in g[1:6]], [float(v) for v in w[1:6]], rtol=0, atol=1e-9)
        for g, w in zip(got[1:], want[1:])
    )
    ok = acceptance("7", identical and header_ok and golden_ok, f"byte-identical reruns: {identical}; golden header: {header_ok}; golden rows: {golden_ok}")
    assert ok
