"""Scenario file loading, validation and serialization.

The format is a flat, human-readable sectioned text format:

    [scenario]            name, time_unit (ms|hours), horizon, seed
    [advanced]            user_grouping, request_grouping, instruction_length
    [datacenter.<ID>]     vms, rate, memory, bandwidth, bandwidth_unit
    [userbase.<ID>]       requests_per_user_per_hour, data_size_per_request,
                          datacenter, and optional per-base overrides
    [policy]              scheduler, migration, admission and knobs
    [jobs]                optional explicit trace: job = id arrival burst [data]

Durations in a file are expressed in the declared time_unit; the
simulator converts everything to milliseconds internally. Parsing is
strict: unknown keys and sections are fatal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import MS_PER_HOUR

TIME_UNITS = ("ms", "hours")
BANDWIDTH_UNITS = ("units_per_ms", "mbps")
SCHEDULERS = ("rr", "sjf")
ADMISSION_MODES = ("deadline", "queue_cap")

_MBPS_TO_UNITS_PER_MS = 125.0  # 1 Mbit/s = 125 bytes/ms


class ScenarioError(Exception):
    pass


class ParseError(ScenarioError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnknownKey(ParseError):
    pass


class ValidationError(ScenarioError):
    pass


@dataclass
class DatacenterSpec:
    id: str
    vm_count: int
    rate: float  # instructions per ms (unit-independent)
    memory: float  # MB per VM
    bandwidth: float
    bandwidth_unit: str

    @property
    def bandwidth_per_ms(self) -> float:
        if self.bandwidth_unit == "mbps":
            return self.bandwidth * _MBPS_TO_UNITS_PER_MS
        return self.bandwidth


@dataclass
class UserBaseSpec:
    id: str
    requests_per_user_per_hour: float
    data_size_per_request: float
    target_dc: str
    user_grouping: int
    request_grouping: int
    instruction_length: float


@dataclass
class AdvancedConfig:
    user_grouping: int = 1000
    request_grouping: int = 100
    instruction_length: float = 250.0


@dataclass
class PolicyConfig:
    scheduler: str = "rr"
    migration: bool = False
    admission_mode: str = "deadline"
    deadline: float | None = None  # declared time unit
    queue_capacity: int | None = None
    hop_time: float = 0.0  # declared time unit
    migration_cadence: float | None = None  # None -> engine default 10 ms
    migration_cap: int = 3
    starvation_threshold: float | None = None  # None -> deadline


@dataclass
class ExplicitJob:
    id: int
    arrival: float  # declared time unit
    burst: float  # declared time unit
    data_size: float = 0.0


@dataclass
class ScenarioConfig:
    name: str
    time_unit: str
    horizon: float  # declared time unit
    seed: int
    user_bases: list[UserBaseSpec] = field(default_factory=list)
    datacenters: list[DatacenterSpec] = field(default_factory=list)
    advanced: AdvancedConfig = field(default_factory=AdvancedConfig)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    jobs: list[ExplicitJob] = field(default_factory=list)

    @property
    def unit_ms(self) -> float:
        """Milliseconds per declared time unit."""
        return MS_PER_HOUR if self.time_unit == "hours" else 1.0

    @property
    def horizon_ms(self) -> float:
        return self.horizon * self.unit_ms


# ---------------------------------------------------------------------------
# parsing

_SCENARIO_KEYS = {"name", "time_unit", "horizon", "seed"}
_ADVANCED_KEYS = {"user_grouping", "request_grouping", "instruction_length"}
_DATACENTER_KEYS = {"vms", "rate", "memory", "bandwidth", "bandwidth_unit"}
_USERBASE_KEYS = {
    "requests_per_user_per_hour",
    "data_size_per_request",
    "datacenter",
    "user_grouping",
    "request_grouping",
    "instruction_length",
}
_POLICY_KEYS = {
    "scheduler",
    "migration",
    "admission",
    "deadline",
    "queue_capacity",
    "hop_time",
    "migration_cadence",
    "migration_cap",
    "starvation_threshold",
}


def _split_sections(source: str):
    """Split raw text into {section_name: [(key, value, line)]}, keeping
    declaration order and rejecting duplicates and stray lines."""
    sections: dict[str, list] = {}
    current = None
    for lineno, raw in enumerate(source.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(f"unterminated section header {line!r}", lineno)
            name = line[1:-1].strip()
            if not name:
                raise ParseError("empty section name", lineno)
            if name in sections:
                raise ParseError(f"duplicate section [{name}]", lineno)
            sections[name] = []
            current = name
            continue
        if current is None:
            raise ParseError(f"content outside any section: {line!r}", lineno)
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno)
        key, value = line.split("=", 1)
        sections[current].append((key.strip(), value.strip(), lineno))
    return sections


def _as_kv(entries, section, allowed, repeatable=()):
    out = {}
    for key, value, lineno in entries:
        if key not in allowed:
            raise UnknownKey(f"unknown key {key!r} in section [{section}]", lineno)
        if key in repeatable:
            out.setdefault(key, []).append((value, lineno))
        elif key in out:
            raise ParseError(f"duplicate key {key!r} in section [{section}]", lineno)
        else:
            out[key] = (value, lineno)
    return out


def _num(value, lineno, kind=float):
    try:
        return kind(value)
    except ValueError:
        raise ParseError(f"expected {kind.__name__}, got {value!r}", lineno) from None


def _require(kv, section, key):
    if key not in kv:
        raise ParseError(f"section [{section}] is missing required key {key!r}")
    return kv[key]


def _enum(value, lineno, choices, what):
    if value not in choices:
        raise ParseError(f"{what} must be one of {choices}, got {value!r}", lineno)
    return value


def load_scenario(source: str) -> ScenarioConfig:
    """Parse and fully validate a scenario from text."""
    sections = _split_sections(source)

    if "scenario" not in sections:
        raise ParseError("missing [scenario] section")
    kv = _as_kv(sections.pop("scenario"), "scenario", _SCENARIO_KEYS)
    name = _require(kv, "scenario", "name")[0]
    unit_v, unit_l = _require(kv, "scenario", "time_unit")
    time_unit = _enum(unit_v, unit_l, TIME_UNITS, "time_unit")
    horizon = _num(*_require(kv, "scenario", "horizon"))
    seed = _num(*_require(kv, "scenario", "seed"), kind=int)

    advanced = AdvancedConfig()
    if "advanced" in sections:
        kv = _as_kv(sections.pop("advanced"), "advanced", _ADVANCED_KEYS)
        if "user_grouping" in kv:
            advanced.user_grouping = _num(*kv["user_grouping"], kind=int)
        if "request_grouping" in kv:
            advanced.request_grouping = _num(*kv["request_grouping"], kind=int)
        if "instruction_length" in kv:
            advanced.instruction_length = _num(*kv["instruction_length"])

    datacenters: list[DatacenterSpec] = []
    user_bases: list[UserBaseSpec] = []
    jobs: list[ExplicitJob] = []
    policy = PolicyConfig()

    for section in list(sections):
        entries = sections.pop(section)
        if section.startswith("datacenter."):
            dc_id = section.split(".", 1)[1]
            kv = _as_kv(entries, section, _DATACENTER_KEYS)
            bw_unit_v, bw_unit_l = _require(kv, section, "bandwidth_unit")
            datacenters.append(
                DatacenterSpec(
                    id=dc_id,
                    vm_count=_num(*_require(kv, section, "vms"), kind=int),
                    rate=_num(*_require(kv, section, "rate")),
                    memory=_num(*_require(kv, section, "memory")),
                    bandwidth=_num(*_require(kv, section, "bandwidth")),
                    bandwidth_unit=_enum(
                        bw_unit_v, bw_unit_l, BANDWIDTH_UNITS, "bandwidth_unit"
                    ),
                )
            )
        elif section.startswith("userbase."):
            ub_id = section.split(".", 1)[1]
            kv = _as_kv(entries, section, _USERBASE_KEYS)
            user_bases.append(
                UserBaseSpec(
                    id=ub_id,
                    requests_per_user_per_hour=_num(
                        *_require(kv, section, "requests_per_user_per_hour")
                    ),
                    data_size_per_request=_num(
                        *_require(kv, section, "data_size_per_request")
                    ),
                    target_dc=_require(kv, section, "datacenter")[0],
                    user_grouping=(
                        _num(*kv["user_grouping"], kind=int)
                        if "user_grouping" in kv
                        else advanced.user_grouping
                    ),
                    request_grouping=(
                        _num(*kv["request_grouping"], kind=int)
                        if "request_grouping" in kv
                        else advanced.request_grouping
                    ),
                    instruction_length=(
                        _num(*kv["instruction_length"])
                        if "instruction_length" in kv
                        else advanced.instruction_length
                    ),
                )
            )
        elif section == "policy":
            kv = _as_kv(entries, section, _POLICY_KEYS)
            if "scheduler" in kv:
                policy.scheduler = _enum(*kv["scheduler"], SCHEDULERS, "scheduler")
            if "migration" in kv:
                v, lineno = kv["migration"]
                policy.migration = _enum(v, lineno, ("on", "off"), "migration") == "on"
            if "admission" in kv:
                policy.admission_mode = _enum(
                    *kv["admission"], ADMISSION_MODES, "admission"
                )
            if "deadline" in kv:
                policy.deadline = _num(*kv["deadline"])
            if "queue_capacity" in kv:
                policy.queue_capacity = _num(*kv["queue_capacity"], kind=int)
            if "hop_time" in kv:
                policy.hop_time = _num(*kv["hop_time"])
            if "migration_cadence" in kv:
                policy.migration_cadence = _num(*kv["migration_cadence"])
            if "migration_cap" in kv:
                policy.migration_cap = _num(*kv["migration_cap"], kind=int)
            if "starvation_threshold" in kv:
                policy.starvation_threshold = _num(*kv["starvation_threshold"])
        elif section == "jobs":
            kv = _as_kv(entries, section, {"job"}, repeatable=("job",))
            for value, lineno in kv.get("job", []):
                parts = value.split()
                if len(parts) not in (3, 4):
                    raise ParseError(
                        f"job entry needs 'id arrival burst [data_size]', got {value!r}",
                        lineno,
                    )
                jobs.append(
                    ExplicitJob(
                        id=_num(parts[0], lineno, kind=int),
                        arrival=_num(parts[1], lineno),
                        burst=_num(parts[2], lineno),
                        data_size=_num(parts[3], lineno) if len(parts) == 4 else 0.0,
                    )
                )
        else:
            raise UnknownKey(f"unknown section [{section}]")

    config = ScenarioConfig(
        name=name,
        time_unit=time_unit,
        horizon=horizon,
        seed=seed,
        user_bases=user_bases,
        datacenters=datacenters,
        advanced=advanced,
        policy=policy,
        jobs=jobs,
    )
    validate(config)
    return config


def load_scenario_file(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return load_scenario(fh.read())


def validate(config: ScenarioConfig) -> None:
    """Cross-field checks; raises ValidationError on the first problem."""
    if config.horizon < 0:
        raise ValidationError(f"horizon must be non-negative, got {config.horizon}")
    dc_ids = [dc.id for dc in config.datacenters]
    if len(set(dc_ids)) != len(dc_ids):
        raise ValidationError(f"duplicate datacenter ids: {dc_ids}")
    ub_ids = [ub.id for ub in config.user_bases]
    if len(set(ub_ids)) != len(ub_ids):
        raise ValidationError(f"duplicate user base ids: {ub_ids}")
    for dc in config.datacenters:
        if dc.vm_count < 1:
            raise ValidationError(f"datacenter {dc.id}: vms must be >= 1")
        for attr in ("rate", "memory", "bandwidth"):
            if getattr(dc, attr) <= 0:
                raise ValidationError(f"datacenter {dc.id}: {attr} must be positive")
    for ub in config.user_bases:
        if ub.target_dc not in dc_ids:
            raise ValidationError(
                f"user base {ub.id} targets unknown datacenter {ub.target_dc!r}"
            )
        for attr in (
            "requests_per_user_per_hour",
            "data_size_per_request",
            "user_grouping",
            "request_grouping",
            "instruction_length",
        ):
            if getattr(ub, attr) <= 0:
                raise ValidationError(f"user base {ub.id}: {attr} must be positive")
    pol = config.policy
    if pol.admission_mode == "deadline":
        if pol.deadline is None or pol.deadline <= 0:
            raise ValidationError("deadline admission requires a positive deadline")
    else:
        if pol.queue_capacity is None or pol.queue_capacity < 1:
            raise ValidationError("queue_cap admission requires queue_capacity >= 1")
    if pol.hop_time < 0:
        raise ValidationError("hop_time must be non-negative")
    if pol.migration_cadence is not None and pol.migration_cadence <= 0:
        raise ValidationError("migration_cadence must be positive")
    if pol.migration_cap < 0:
        raise ValidationError("migration_cap must be non-negative")
    if pol.starvation_threshold is not None and pol.starvation_threshold <= 0:
        raise ValidationError("starvation_threshold must be positive")
    if config.jobs:
        if not config.datacenters:
            raise ValidationError("explicit jobs require at least one datacenter")
        job_ids = [j.id for j in config.jobs]
        if len(set(job_ids)) != len(job_ids):
            raise ValidationError(f"duplicate explicit job ids: {job_ids}")
        for j in config.jobs:
            if j.arrival < 0 or j.burst <= 0 or j.data_size < 0:
                raise ValidationError(f"explicit job {j.id}: bad arrival/burst/data")
    if (config.user_bases or config.jobs) and not config.datacenters:
        raise ValidationError("scenario has traffic but no datacenters")


# ---------------------------------------------------------------------------
# serialization

def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def serialize(config: ScenarioConfig) -> str:
    """Canonical text form; load_scenario(serialize(c)) == c."""
    lines = [
        "[scenario]",
        f"name = {config.name}",
        f"time_unit = {config.time_unit}",
        f"horizon = {_fmt(config.horizon)}",
        f"seed = {config.seed}",
        "",
        "[advanced]",
        f"user_grouping = {config.advanced.user_grouping}",
        f"request_grouping = {config.advanced.request_grouping}",
        f"instruction_length = {_fmt(config.advanced.instruction_length)}",
    ]
    for dc in config.datacenters:
        lines += [
            "",
            f"[datacenter.{dc.id}]",
            f"vms = {dc.vm_count}",
            f"rate = {_fmt(dc.rate)}",
            f"memory = {_fmt(dc.memory)}",
            f"bandwidth = {_fmt(dc.bandwidth)}",
            f"bandwidth_unit = {dc.bandwidth_unit}",
        ]
    for ub in config.user_bases:
        lines += [
            "",
            f"[userbase.{ub.id}]",
            f"requests_per_user_per_hour = {_fmt(ub.requests_per_user_per_hour)}",
            f"data_size_per_request = {_fmt(ub.data_size_per_request)}",
            f"datacenter = {ub.target_dc}",
            f"user_grouping = {ub.user_grouping}",
            f"request_grouping = {ub.request_grouping}",
            f"instruction_length = {_fmt(ub.instruction_length)}",
        ]
    pol = config.policy
    lines += [
        "",
        "[policy]",
        f"scheduler = {pol.scheduler}",
        f"migration = {'on' if pol.migration else 'off'}",
        f"admission = {pol.admission_mode}",
    ]
    if pol.deadline is not None:
        lines.append(f"deadline = {_fmt(pol.deadline)}")
    if pol.queue_capacity is not None:
        lines.append(f"queue_capacity = {pol.queue_capacity}")
    lines.append(f"hop_time = {_fmt(pol.hop_time)}")
    if pol.migration_cadence is not None:
        lines.append(f"migration_cadence = {_fmt(pol.migration_cadence)}")
    lines.append(f"migration_cap = {pol.migration_cap}")
    if pol.starvation_threshold is not None:
        lines.append(f"starvation_threshold = {_fmt(pol.starvation_threshold)}")
    if config.jobs:
        lines += ["", "[jobs]"]
        for j in config.jobs:
            entry = f"job = {j.id} {_fmt(j.arrival)} {_fmt(j.burst)}"
            if j.data_size:
                entry += f" {_fmt(j.data_size)}"
            lines.append(entry)
    return "\n".join(lines) + "\n"


def normalized_dict(config: ScenarioConfig) -> dict:
    """Config view with all durations converted to milliseconds; used
    by `validate` CLI output."""
    u = config.unit_ms
    pol = config.policy
    return {
        "name": config.name,
        "time_unit": config.time_unit,
        "horizon_ms": config.horizon * u,
        "seed": config.seed,
        "datacenters": [
            {
                "id": dc.id,
                "vms": dc.vm_count,
                "rate_instructions_per_ms": dc.rate,
                "memory_mb": dc.memory,
                "bandwidth_units_per_ms": dc.bandwidth_per_ms,
            }
            for dc in config.datacenters
        ],
        "user_bases": [
            {
                "id": ub.id,
                "requests_per_user_per_hour": ub.requests_per_user_per_hour,
                "data_size_per_request": ub.data_size_per_request,
                "datacenter": ub.target_dc,
                "user_grouping": ub.user_grouping,
                "request_grouping": ub.request_grouping,
                "instruction_length": ub.instruction_length,
            }
            for ub in config.user_bases
        ],
        "policy": {
            "scheduler": pol.scheduler,
            "migration": pol.migration,
            "admission": pol.admission_mode,
            "deadline_ms": None if pol.deadline is None else pol.deadline * u,
            "queue_capacity": pol.queue_capacity,
            "hop_time_ms": pol.hop_time * u,
            "migration_cadence_ms": (
                None if pol.migration_cadence is None else pol.migration_cadence * u
            ),
            "migration_cap": pol.migration_cap,
            "starvation_threshold_ms": (
                None
                if pol.starvation_threshold is None
                else pol.starvation_threshold * u
            ),
        },
        "jobs": [
            {
                "id": j.id,
                "arrival_ms": j.arrival * u,
                "burst_ms": j.burst * u,
                "data_size": j.data_size,
            }
            for j in config.jobs
        ],
    }
