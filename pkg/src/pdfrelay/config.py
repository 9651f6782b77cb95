"""Job configuration: strict JSON schema (version 1), parsing and payload building.

Validation happens in two passes. The schema pass rejects unknown fields,
wrong types and missing fields, each error carrying its JSON path. The
semantic pass builds the domain objects and reports pmf and power problems,
which map to a different exit code.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from typing import Any

import jsonschema

from .errors import ConfigError, RelayRateError
from .gaussian import ALLOCATION_NAMES, GAIN_NAMES, POWER_NAMES, GaussianTwoLevel, PowerAllocation
from .network import CodingDistribution, DmRelayNetwork, validate_distribution, validate_network
from .optimizer import OBJECTIVES, SWEEP_PARAMETERS, OptimizerConfig, SweepSpec

SCHEMA_VERSION = 1
MODES = ("dm-eval", "gaussian-eval", "optimize", "sweep", "verify", "compare")
I4_SOURCES = ("printed", "oracle")
DEFAULT_OUTPUT = {"directory": ".", "report": "report.json", "csv": "sweep.csv"}

_number = {"type": "number"}
_nonneg = {"type": "number", "minimum": 0}


def _closed(properties: dict, required=()) -> dict:
    return {"type": "object", "properties": properties, "required": list(required), "additionalProperties": False}


_variable = _closed({"name": {"type": "string"}, "size": {"type": "integer", "minimum": 1}}, ["name", "size"])
_nested = {"type": ["array", "number"]}
_allocation = _closed({n: _number for n in ALLOCATION_NAMES})
_gaussian = _closed(
    {
        "gains": _closed({n: _number for n in GAIN_NAMES}, GAIN_NAMES),
        "powers": _closed({n: _nonneg for n in POWER_NAMES}, POWER_NAMES),
    },
    ["gains", "powers"],
)
_dm_network = _closed(
    {
        "relay_count": {"type": "integer", "minimum": 1},
        "input_alphabets": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "output_alphabets": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "channel": _nested,
    },
    ["relay_count", "input_alphabets", "output_alphabets", "channel"],
)
_factor = _closed(
    {
        "name": {"type": "string"},
        "outputs": {"type": "array", "items": _variable},
        "given": {"type": "array", "items": _variable},
        "table": _nested,
    },
    ["name", "outputs", "given", "table"],
)
_distribution = _closed(
    {
        "order": {"type": "array", "items": {"type": "integer"}},
        "auxiliary_alphabets": {"type": "object", "additionalProperties": {"type": "integer"}},
        "factors": {"type": "array", "items": _factor},
    },
    ["order", "auxiliary_alphabets", "factors"],
)
_optimizer = _closed(
    {
        "restarts": {"type": "integer", "minimum": 0},
        "initial_step": {"type": "number", "exclusiveMinimum": 0},
        "shrink": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "stop_step": {"type": "number", "exclusiveMinimum": 0},
        "max_evals": {"type": "integer", "minimum": 1},
        "seed_points": {"type": "array", "items": _allocation},
    }
)
_cut_restarts = {"type": "integer", "minimum": 0}

PAYLOAD_SCHEMAS = {
    "dm-eval": _closed(
        {
            "network": _dm_network,
            "distributions": {"type": "array", "items": _distribution, "minItems": 1},
            "sample_count": {"type": "integer", "minimum": 1},
        },
        ["network"],
    ),
    "gaussian-eval": _closed({"network": _gaussian, "allocation": _allocation}, ["network", "allocation"]),
    "optimize": _closed(
        {
            "network": _gaussian,
            "optimizer": _optimizer,
            "decode_forward_only": {"type": "boolean"},
            "cutset_restarts": _cut_restarts,
        },
        ["network"],
    ),
    "sweep": _closed(
        {
            "network": _gaussian,
            "parameter": {"enum": list(SWEEP_PARAMETERS)},
            "grid": {"type": "array", "items": _number, "minItems": 1},
            "objective": {"enum": list(OBJECTIVES)},
            "optimizer": _optimizer,
            "cutset_restarts": _cut_restarts,
        },
        ["network", "parameter", "grid"],
    ),
    "verify": _closed({"samples": {"type": "integer", "minimum": 0}}, ["samples"]),
    "compare": _closed(
        {
            "network": _gaussian,
            "allocation": _allocation,
            "optimizer": _optimizer,
            "cutset_restarts": _cut_restarts,
        },
        ["network"],
    ),
}

JOB_SCHEMA = _closed(
    {
        "schema_version": {"type": "integer"},
        "mode": {"enum": list(MODES)},
        "payload": {"type": "object"},
        "log_base": {"enum": [2, "e"]},
        "i4_source": {"enum": list(I4_SOURCES)},
        "seed": {"type": ["integer", "null"]},
        "output": _closed(
            {
                "directory": {"type": "string"},
                "report": {"type": "string"},
                "csv": {"type": "string"},
            }
        ),
    },
    ["schema_version", "mode", "payload"],
)


@dataclass(frozen=True)
class JobConfig:
    mode: str
    payload: dict
    schema_version: int = SCHEMA_VERSION
    log_base: Any = 2
    i4_source: str = "printed"
    seed: int | None = None
    output: dict = field(default_factory=lambda: dict(DEFAULT_OUTPUT))

    @property
    def base(self) -> float:
        return math.e if self.log_base == "e" else 2.0

    @property
    def master_seed(self) -> int:
        return 0 if self.seed is None else int(self.seed)

    def to_json(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "mode": self.mode,
            "log_base": self.log_base,
            "i4_source": self.i4_source,
            "seed": self.seed,
            "output": dict(self.output),
            "payload": copy.deepcopy(self.payload),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def _path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def _schema_errors(schema: dict, doc, prefix=()) -> list[tuple[str, str]]:
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    return [(_path(list(prefix) + list(e.absolute_path)), e.message) for e in errors]


def parse_config(text: str) -> JobConfig:
    """Parse and fully validate a job document.

    Raises :class:`ConfigError` listing every problem found with its JSON
    path; schema problems have exit code 1, pmf and power problems 2.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("$", f"not valid JSON: {exc}")]) from None
    if not isinstance(doc, dict):
        raise ConfigError([("$", "the job document must be a JSON object")])
    version = doc.get("schema_version")
    if version is not None and version != SCHEMA_VERSION:
        raise ConfigError(
            [
                (
                    "$.schema_version",
                    f"schema_version {version!r} is not supported; this release reads version "
                    f"{SCHEMA_VERSION} only. Rewrite the job for version {SCHEMA_VERSION} or use a release "
                    f"that supports version {version!r}.",
                )
            ]
        )
    errors = _schema_errors(JOB_SCHEMA, doc)
    if errors:
        raise ConfigError(errors)
    mode = doc["mode"]
    errors = _schema_errors(PAYLOAD_SCHEMAS[mode], doc["payload"], ("payload",))
    if errors:
        raise ConfigError(errors)
    output = dict(DEFAULT_OUTPUT)
    output.update(doc.get("output", {}))
    job = JobConfig(
        mode=mode,
        payload=copy.deepcopy(doc["payload"]),
        schema_version=version,
        log_base=doc.get("log_base", 2),
        i4_source=doc.get("i4_source", "printed"),
        seed=doc.get("seed"),
        output=output,
    )
    build_payload(job)
    return job


@dataclass
class Payload:
    """Domain objects built from a job's payload; absent parts stay None."""

    gaussian: GaussianTwoLevel | None = None
    allocation: PowerAllocation | None = None
    optimizer: OptimizerConfig | None = None
    sweep: SweepSpec | None = None
    dm_network: DmRelayNetwork | None = None
    distributions: list | None = None
    extra: dict = field(default_factory=dict)


def _optimizer_config(data: dict | None, job: JobConfig) -> OptimizerConfig:
    data = dict(data or {})
    seeds = tuple(PowerAllocation.from_json(s) for s in data.pop("seed_points", []))
    return OptimizerConfig(
        master_seed=job.master_seed,
        seed_points=seeds,
        i4_mode=1 if job.i4_source == "oracle" else 0,
        **data,
    )


def build_payload(job: JobConfig) -> Payload:
    """Construct and check the payload's domain objects.

    Assumes the schema already passed. Raises :class:`ConfigError`.
    """
    p = job.payload
    out = Payload()
    schema_errors: list[tuple[str, str]] = []
    invalid: list[tuple[str, str]] = []

    def attempt(path, fn):
        try:
            return fn()
        except RelayRateError as exc:
            schema_errors.append((path, str(exc)))
        except (TypeError, ValueError) as exc:
            schema_errors.append((path, str(exc)))
        return None

    if "network" in p and job.mode != "dm-eval":
        out.gaussian = attempt("$.payload.network", lambda: GaussianTwoLevel.from_json(p["network"]))
    if "allocation" in p:
        out.allocation = attempt("$.payload.allocation", lambda: PowerAllocation.from_json(p["allocation"]))
        if out.gaussian is not None and out.allocation is not None:
            for msg in out.allocation.violations(out.gaussian.powers):
                invalid.append(("$.payload.allocation", msg))
    if job.mode in ("optimize", "sweep", "compare"):
        out.optimizer = attempt("$.payload.optimizer", lambda: _optimizer_config(p.get("optimizer"), job))
        out.extra["cutset_restarts"] = p.get("cutset_restarts", 8)
        out.extra["decode_forward_only"] = p.get("decode_forward_only", False)
    if job.mode == "sweep" and out.gaussian is not None:
        out.sweep = attempt(
            "$.payload.grid",
            lambda: SweepSpec(out.gaussian, p["parameter"], tuple(p["grid"]), p.get("objective", "pdf")),
        )
    if job.mode == "dm-eval":
        net = attempt("$.payload.network", lambda: DmRelayNetwork.from_json(p["network"]))
        if net is not None:
            problems = attempt("$.payload.network", lambda: validate_network(net)) or []
            invalid.extend(("$.payload.network", m) for m in problems)
            out.dm_network = net
        dists = []
        for i, d in enumerate(p.get("distributions", [])):
            path = f"$.payload.distributions[{i}]"
            dist = attempt(path, lambda d=d: CodingDistribution.from_json(d))
            if dist is not None and net is not None and not invalid:
                problems = attempt(path, lambda: validate_distribution(dist, net)) or []
                invalid.extend((path, m) for m in problems)
            dists.append(dist)
        out.distributions = dists or None
        out.extra["sample_count"] = p.get("sample_count")
    if job.mode == "verify":
        out.extra["samples"] = p["samples"]
    if schema_errors:
        raise ConfigError(schema_errors + invalid, exit_code=1)
    if invalid:
        raise ConfigError(invalid, exit_code=2)
    return out
