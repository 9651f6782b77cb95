"""``relay-rate`` command: run one job described by a JSON config.

Exit codes: 0 success, 1 configuration error, 2 invalid pmf or power
allocation, 3 numerical-consistency failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

from .config import DEFAULT_OUTPUT, I4_SOURCES, SCHEMA_VERSION, JobConfig, Payload, build_payload, parse_config
from .errors import ConfigError, NumericalConsistencyError, RelayRateError, ResourceError, ValidationError
from .gaussian import (
    TERM_NAMES,
    build_linear_system,
    corollary_rate,
    corollary_terms,
    input_covariance,
    oracle_terms,
)
from .network import assemble_joint, enumerate_permutations, uniform_distribution
from .optimizer import (
    df_seed,
    direct_rate,
    direct_seed,
    maximize_cutset,
    maximize_min_rate,
    sample_dm_distributions,
    sweep,
)
from .rates import constraint_set, rate_split_lp, theorem_rate
from .verify import verify

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2, 3
CSV_HEADER = ("param", "value", "rate_pdf", "rate_df", "rate_direct", "cutset", "argmin")
ORACLE_TOL = 1e-9
CUTSET_TOL = 1e-6
LN2 = math.log(2.0)


def both(nats: float) -> dict:
    return {"bits": nats / LN2, "nats": nats}


def both_map(values: dict) -> dict:
    return {k: both(v) for k, v in values.items()}


def atomic_write(path: Path, text: str) -> None:
    """Write ``text`` to a temporary sibling, then rename it over ``path``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sweep_csv(rows, base: float) -> str:
    scale = math.log(2.0) / math.log(base)  # rows are in bits
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(
            [
                r.parameter,
                repr(r.value),
                repr(r.rate_pdf * scale),
                repr(r.rate_df * scale),
                repr(r.rate_direct * scale),
                repr(r.cutset * scale),
                r.argmin,
            ]
        )
    return buf.getvalue()


# ---------------------------------------------------------------- modes


def _dm_eval(job: JobConfig, p: Payload) -> tuple[dict, list[str]]:
    net = p.dm_network
    base = math.e
    problems = []
    candidates = []
    if p.distributions:
        for i, dist in enumerate(p.distributions):
            candidates.append((f"distributions[{i}]", dist))
    elif p.extra.get("sample_count"):
        for order in enumerate_permutations(net.relay_count):
            dist, _, k = sample_dm_distributions(net, p.extra["sample_count"], job.master_seed, order, base=base)
            candidates.append((f"sample[{list(order)}][{k}]", dist))
    else:
        for order in enumerate_permutations(net.relay_count):
            candidates.append((f"uniform[{list(order)}]", uniform_distribution(net, order)))
    evaluated = []
    for label, dist in candidates:
        joint = assemble_joint(net, dist)
        breakdown = theorem_rate(joint, dist.order, base)
        split = rate_split_lp(constraint_set(joint, dist.order, base))
        if split.total > breakdown.rate + ORACLE_TOL:
            problems.append(f"{label}: LP total {split.total!r} exceeds the closed form {breakdown.rate!r} nats")
        evaluated.append(
            {
                "source": label,
                "order": list(dist.order),
                "rate": both(breakdown.rate),
                "argmin": breakdown.argmin_label,
                "terms": both_map(dict(breakdown.term_values)),
                "lp_split": {"rates": [both(r) for r in split.rates], "total": both(split.total)},
                "closed_form_minus_lp": both(breakdown.rate - split.total),
            }
        )
    best = 0
    for i in range(1, len(evaluated)):
        if evaluated[i]["rate"]["nats"] > evaluated[best]["rate"]["nats"]:
            best = i
    result = {
        "rate": evaluated[best]["rate"],
        "argmin": evaluated[best]["argmin"],
        "best": best,
        "evaluations": evaluated,
    }
    return result, problems


def _terms_report(net, alloc, i4_source: str) -> tuple[dict, list[str], list[str]]:
    printed = corollary_terms(net, alloc, math.e)
    oracle = oracle_terms(build_linear_system(net, alloc), math.e)
    used = printed.replace(I4=oracle.I4) if i4_source == "oracle" else printed
    rate, tag = corollary_rate(used)
    problems, warnings = [], []
    deltas = {}
    for n, a, b in zip(TERM_NAMES, printed.as_tuple(), oracle.as_tuple()):
        deltas[n] = a - b
        if abs(a - b) > ORACLE_TOL:
            if n in ("I1", "I4"):
                warnings.append(f"printed {n} differs from the oracle by {(a - b) / LN2!r} bits")
            else:
                problems.append(f"printed {n} differs from the oracle by {(a - b) / LN2!r} bits")
    oracle_rate, oracle_tag = corollary_rate(oracle)
    report = {
        "rate": both(rate),
        "argmin": tag,
        "i4_source": i4_source,
        "terms": {
            "printed": both_map(printed.to_json()),
            "oracle": both_map(oracle.to_json()),
            "delta": both_map(deltas),
        },
        "oracle_rate": both(oracle_rate),
        "oracle_argmin": oracle_tag,
        "allocation": alloc.to_json(),
    }
    return report, problems, warnings


def _gaussian_eval(job: JobConfig, p: Payload):
    report, problems, warnings = _terms_report(p.gaussian, p.allocation, job.i4_source)
    report["network"] = p.gaussian.to_json()
    report["warnings"] = warnings
    return report, problems


def _optimized(net, cfg, restarts, df_only=False):
    res = maximize_min_rate(net, cfg, math.e, decode_forward_only=df_only)
    cov = input_covariance(res.allocation)
    cut, cut_cov, cut_label = maximize_cutset(net, [cov], restarts, cfg.master_seed, cfg, math.e)
    return res, cut, cut_cov, cut_label


def _cutset_problem(label, rate, cut):
    if rate > cut + CUTSET_TOL * LN2:
        return f"{label}: achievable rate {rate / LN2!r} bits exceeds the cut-set bound {cut / LN2!r} bits"
    return None


def _optimize(job: JobConfig, p: Payload):
    net, cfg = p.gaussian, p.optimizer
    res, cut, cut_cov, cut_label = _optimized(net, cfg, p.extra["cutset_restarts"], p.extra["decode_forward_only"])
    problems = [m for m in [_cutset_problem("optimum", res.rate, cut)] if m]
    problems += [f"allocation: {v}" for v in res.allocation.violations(net.powers)]
    terms, _, warnings = _terms_report(net, res.allocation, job.i4_source)
    diag = dict(res.diagnostics)
    diag["rate_spread"] = {k: both(v) for k, v in diag["rate_spread"].items()}
    report = {
        "network": net.to_json(),
        "decode_forward_only": p.extra["decode_forward_only"],
        "rate": both(res.rate),
        "argmin": res.argmin,
        "allocation": res.allocation.to_json(),
        "terms": terms["terms"],
        "oracle_rate": terms["oracle_rate"],
        "cutset": {"bound": both(cut), "binding_cut": cut_label, "covariance": cut_cov.tolist()},
        "diagnostics": diag,
        "warnings": warnings,
        "note": "best point found by a multistart local search; no global optimality is claimed",
    }
    return report, problems


def _compare(job: JobConfig, p: Payload):
    net, cfg = p.gaussian, p.optimizer
    restarts = p.extra["cutset_restarts"]
    pdf, cut, _, cut_label = _optimized(net, cfg, restarts)
    df = maximize_min_rate(net, cfg, math.e, decode_forward_only=True)
    seeds = {"direct": direct_seed(net.powers), "decode-forward": df_seed(net.powers)}
    seed_rates = {
        k: corollary_rate(corollary_terms(net, a, math.e, cfg.i4_mode))[0] for k, a in seeds.items()
    }
    report = {
        "network": net.to_json(),
        "partial_decode_forward": {"rate": both(pdf.rate), "argmin": pdf.argmin, "allocation": pdf.allocation.to_json()},
        "decode_forward": {"rate": both(df.rate), "argmin": df.argmin, "allocation": df.allocation.to_json()},
        "direct": both(direct_rate(net, math.e)),
        "canonical_seeds": both_map(seed_rates),
        "cutset": {"bound": both(cut), "binding_cut": cut_label},
    }
    problems = [m for m in [_cutset_problem("partial decode-forward", pdf.rate, cut)] if m]
    for k, v in seed_rates.items():
        if pdf.rate < v:
            problems.append(f"optimum {pdf.rate!r} nats is below the {k} seed {v!r} nats")
    if p.allocation is not None:
        given, bad, warnings = _terms_report(net, p.allocation, job.i4_source)
        report["given_allocation"] = given
        report["warnings"] = warnings
        problems.extend(bad)
    return report, problems


def _sweep(job: JobConfig, p: Payload):
    rows = sweep(p.sweep, p.optimizer, 2.0, p.extra["cutset_restarts"])
    problems = []
    for r in rows:
        m = _cutset_problem(f"{p.sweep.parameter}={r.value!r}", r.rate_pdf * LN2, r.cutset * LN2)
        if m:
            problems.append(m)
    report = {
        "network": p.sweep.network.to_json(),
        "parameter": p.sweep.parameter,
        "objective": p.sweep.objective,
        "rows": [
            {
                "value": r.value,
                "rate_pdf": both(r.rate_pdf * LN2),
                "rate_df": both(r.rate_df * LN2),
                "rate_direct": both(r.rate_direct * LN2),
                "cutset": both(r.cutset * LN2),
                "argmin": r.argmin,
                "allocation": r.allocation.to_json(),
            }
            for r in rows
        ],
    }
    return report, problems, sweep_csv(rows, job.base)


def run_job(job: JobConfig, out_dir: str | os.PathLike | None = None, terms_fn=None) -> tuple[int, dict]:
    """Run a parsed job, write its artifacts and return ``(exit_code, report)``."""
    directory = Path(out_dir if out_dir is not None else job.output.get("directory", "."))
    try:
        payload = build_payload(job)
    except ConfigError as exc:
        return exc.exit_code, {"errors": [{"path": p, "message": m} for p, m in exc.errors]}
    csv_text = None
    try:
        if job.mode == "dm-eval":
            result, problems = _dm_eval(job, payload)
        elif job.mode == "gaussian-eval":
            result, problems = _gaussian_eval(job, payload)
        elif job.mode == "optimize":
            result, problems = _optimize(job, payload)
        elif job.mode == "compare":
            result, problems = _compare(job, payload)
        elif job.mode == "sweep":
            result, problems, csv_text = _sweep(job, payload)
        else:
            rep = verify(payload.extra["samples"], job.master_seed, terms_fn)
            result = rep.to_json()
            problems = [f"check {name} failed" for name in rep.failures]
    except (ValidationError, ResourceError) as exc:
        return EXIT_VALIDATION, {"errors": [{"path": "$.payload", "message": str(exc)}]}
    except NumericalConsistencyError as exc:
        problems, result = [str(exc)], {}
    code = EXIT_NUMERICAL if problems else EXIT_OK
    report = {
        "schema_version": SCHEMA_VERSION,
        "mode": job.mode,
        "log_base": job.log_base,
        "i4_source": job.i4_source,
        "seed": job.seed,
        "status": "ok" if code == EXIT_OK else "numerical-consistency-failure",
        "problems": problems,
        "result": result,
    }
    atomic_write(directory / job.output.get("report", DEFAULT_OUTPUT["report"]), json.dumps(report, indent=2) + "\n")
    if csv_text is not None:
        atomic_write(directory / job.output.get("csv", DEFAULT_OUTPUT["csv"]), csv_text)
    return code, report


# ---------------------------------------------------------------- summary


def _unit(base: float) -> str:
    return "bits" if base == 2.0 else "nats"


def _fmt(rate: dict, base: float) -> str:
    return f"{rate[_unit(base)]:.9g} {_unit(base)}"


def summarize(job: JobConfig, code: int, report: dict) -> str:
    lines = []
    if "errors" in report:
        lines.append(f"relay-rate: {job.mode} job rejected (exit {code})")
        lines += [f"  {e['path']}: {e['message']}" for e in report["errors"]]
        return "\n".join(lines)
    res = report["result"]
    base = job.base
    if job.mode in ("dm-eval", "gaussian-eval", "optimize"):
        lines.append(f"rate {_fmt(res['rate'], base)}  (binding: {res['argmin']})")
        if job.mode == "optimize":
            lines.append(f"cut-set bound {_fmt(res['cutset']['bound'], base)}  (cut {res['cutset']['binding_cut']})")
    elif job.mode == "compare":
        lines.append(f"partial decode-forward {_fmt(res['partial_decode_forward']['rate'], base)}")
        lines.append(f"decode-forward         {_fmt(res['decode_forward']['rate'], base)}")
        lines.append(f"direct                 {_fmt(res['direct'], base)}")
        lines.append(f"cut-set bound          {_fmt(res['cutset']['bound'], base)}")
    elif job.mode == "sweep":
        for row in res["rows"]:
            lines.append(f"{res['parameter']}={row['value']!r}: {_fmt(row['rate_pdf'], base)}  ({row['argmin']})")
    else:
        for c in res.get("checks", []):
            lines.append(f"{c['status']:>4}  {c['name']}  max dev {c['max_abs_deviation']:.3g}")
        if not res.get("checks"):
            lines.append("no samples requested; nothing checked")
    for w in res.get("warnings", []) if isinstance(res, dict) else []:
        lines.append(f"warning: {w}")
    for prob in report["problems"]:
        lines.append(f"error: {prob}")
    return "\n".join(lines)


# ---------------------------------------------------------------- argv

ALIASES = {
    "eval-dm": "dm-eval",
    "eval-gaussian": "gaussian-eval",
    "optimize": "optimize",
    "sweep": "sweep",
    "verify": "verify",
    "compare": "compare",
}


def _json_arg(value: str):
    """Inline JSON object, or the path of a file holding one."""
    text = value if value.lstrip().startswith(("{", "[")) else Path(value).read_text(encoding="utf-8")
    return json.loads(text)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", metavar="DIR", help="output directory (overrides the config)")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--i4-source", choices=I4_SOURCES, help="which I4 expression the rate uses")
    p.add_argument("--log-base", choices=("2", "e"), help="unit for CSV and console output")


def _optimizer_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--restarts", type=int)
    p.add_argument("--cutset-restarts", type=int)


def build_parser() -> tuple[argparse.ArgumentParser, argparse.ArgumentParser]:
    main = argparse.ArgumentParser(
        prog="relay-rate",
        description="Run one relay-rate job from a JSON config.",
        epilog="Flag-driven shortcuts: relay-rate {%s} --help" % ",".join(ALIASES),
    )
    main.add_argument("config", help="job config (JSON, schema version 1)")
    _common(main)

    alias = argparse.ArgumentParser(prog="relay-rate", description="Build a job from flags and run it.")
    sub = alias.add_subparsers(dest="command", required=True)
    p = sub.add_parser("eval-dm", help="evaluate a discrete memoryless network")
    p.add_argument("--network", required=True, type=_json_arg)
    p.add_argument("--distribution", action="append", type=_json_arg, default=[])
    p.add_argument("--sample-count", type=int)
    p = sub.add_parser("eval-gaussian", help="evaluate one power allocation")
    p.add_argument("--network", required=True, type=_json_arg)
    p.add_argument("--allocation", required=True, type=_json_arg)
    p = sub.add_parser("optimize", help="optimize the power allocation")
    p.add_argument("--network", required=True, type=_json_arg)
    p.add_argument("--df-only", action="store_true")
    _optimizer_flags(p)
    p = sub.add_parser("sweep", help="optimize over a parameter grid and write CSV")
    p.add_argument("--network", required=True, type=_json_arg)
    p.add_argument("--param", required=True)
    p.add_argument("--grid", required=True, help="comma-separated values")
    p.add_argument("--objective", default=None)
    _optimizer_flags(p)
    p = sub.add_parser("verify", help="run the self-checks")
    p.add_argument("--samples", type=int, default=100)
    p = sub.add_parser("compare", help="partial decode-forward against decode-forward, direct and cut-set")
    p.add_argument("--network", required=True, type=_json_arg)
    p.add_argument("--allocation", type=_json_arg)
    _optimizer_flags(p)
    for action in sub.choices.values():
        _common(action)
        action.add_argument("--print-config", action="store_true", help="print the synthesized config and exit")
    return main, alias


def _synthesize(ns: argparse.Namespace) -> dict:
    mode = ALIASES[ns.command]
    payload: dict = {}
    if mode == "verify":
        payload["samples"] = ns.samples
    else:
        payload["network"] = ns.network
    if mode == "dm-eval":
        if ns.distribution:
            payload["distributions"] = ns.distribution
        if ns.sample_count is not None:
            payload["sample_count"] = ns.sample_count
    if getattr(ns, "allocation", None) is not None:
        payload["allocation"] = ns.allocation
    if mode == "optimize" and ns.df_only:
        payload["decode_forward_only"] = True
    if mode == "sweep":
        payload["parameter"] = ns.param
        payload["grid"] = [float(v) for v in ns.grid.split(",") if v.strip()]
        if ns.objective:
            payload["objective"] = ns.objective
    if getattr(ns, "restarts", None) is not None:
        payload["optimizer"] = {"restarts": ns.restarts}
    if getattr(ns, "cutset_restarts", None) is not None:
        payload["cutset_restarts"] = ns.cutset_restarts
    return {"schema_version": SCHEMA_VERSION, "mode": mode, "payload": payload}


def _apply_overrides(doc: dict, ns: argparse.Namespace) -> dict:
    if ns.seed is not None:
        doc["seed"] = ns.seed
    if ns.i4_source is not None:
        doc["i4_source"] = ns.i4_source
    if ns.log_base is not None:
        doc["log_base"] = 2 if ns.log_base == "2" else "e"
    return doc


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    main_parser, alias_parser = build_parser()
    try:
        if argv and argv[0] in ALIASES:
            ns = alias_parser.parse_args(argv)
            text = json.dumps(_apply_overrides(_synthesize(ns), ns))
        else:
            ns = main_parser.parse_args(argv)
            text = Path(ns.config).read_text(encoding="utf-8")
            if any(v is not None for v in (ns.seed, ns.i4_source, ns.log_base)):
                try:
                    text = json.dumps(_apply_overrides(json.loads(text), ns))
                except (json.JSONDecodeError, TypeError):
                    pass  # parse_config reports it
    except (OSError, json.JSONDecodeError) as exc:
        print(f"relay-rate: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        job = parse_config(text)
    except ConfigError as exc:
        print("relay-rate: invalid job config", file=sys.stderr)
        for path, msg in exc.errors:
            print(f"  {path}: {msg}", file=sys.stderr)
        return exc.exit_code
    if getattr(ns, "print_config", False):
        print(job.dumps())
        return EXIT_OK
    try:
        code, report = run_job(job, ns.out)
    except RelayRateError as exc:
        print(f"relay-rate: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL if isinstance(exc, NumericalConsistencyError) else EXIT_VALIDATION
    print(summarize(job, code, report))
    return code


if __name__ == "__main__":
    sys.exit(main())
