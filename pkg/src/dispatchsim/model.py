"""Domain entities (jobs, VMs, datacenters, user bases) and the
service-time / transfer-time arithmetic that turns configuration into
durations.

All internal durations are abstract milliseconds; VM rates are
instructions per millisecond.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

MS_PER_HOUR = 3_600_000.0

# Job lifecycle states
QUEUED = "queued"
RUNNING = "running"
COMPLETED = "completed"
REJECTED = "rejected"

TERMINAL_STATES = (COMPLETED, REJECTED)


class ModelError(Exception):
    pass


class ZeroRate(ModelError):
    pass


class ZeroBandwidth(ModelError):
    pass


@dataclass
class Job:
    """A unit of work. Either carries an explicit burst duration (demo
    traces) or an instruction length that a VM's rate converts into a
    processing duration. Generated jobs represent one request batch."""

    id: int
    arrival: float  # ms
    origin_ub: str | None = None
    burst: float | None = None  # ms, explicit service demand
    instruction_length: float = 0.0  # instructions, generated traffic
    data_size: float = 0.0  # bytes
    batch_size: int = 1
    state: str = QUEUED
    start_time: float | None = None
    finish_time: float | None = None
    vm_history: list[int] = field(default_factory=list)
    migrations: int = 0
    reject_reason: str | None = None
    rejected_at: float | None = None
    service_time: float | None = None  # set when the job runs
    transfer: float = 0.0

    def service_demand(self, rate: float) -> float:
        """Service duration this job needs on a VM of the given rate."""
        if self.burst is not None:
            return self.burst
        return processing_time(self.instruction_length, rate)


@dataclass
class VmInstance:
    """A server with a FIFO run queue and a busy-until horizon."""

    id: int
    rate: float  # instructions per ms
    memory: float  # MB; carried, does not affect timing
    bandwidth: float  # capacity units per ms
    queue: list[Job] = field(default_factory=list)
    busy_until: float = 0.0
    running: Job | None = None
    incoming: list[Job] = field(default_factory=list)  # migrations in transit


@dataclass
class AdmissionPolicy:
    """When jobs are turned away. Deadline mode rejects a job that has
    not started within `deadline` of arrival; QueueCap rejects on
    arrival when every VM queue in the datacenter is full."""

    mode: str  # "deadline" | "queue_cap"
    deadline: float | None = None  # ms
    capacity: int | None = None  # queued jobs per VM


@dataclass
class Datacenter:
    id: str
    vms: list[VmInstance]
    admission: AdmissionPolicy
    rr_pointer: int = 0


@dataclass
class UserBase:
    """A group of users at one location emitting requests at a fixed
    per-user hourly rate, all routed to one datacenter."""

    id: str
    requests_per_user_per_hour: float
    data_size_per_request: float  # bytes
    target_dc: str
    user_grouping: int
    request_grouping: int
    instruction_length: float  # instructions per request


@dataclass
class AdmissionResult:
    admitted: bool
    reason: str | None = None


def processing_time(instruction_length: float, rate: float) -> float:
    """Duration to execute `instruction_length` instructions at `rate`
    instructions/ms."""
    if rate <= 0:
        raise ZeroRate(f"vm rate must be positive, got {rate}")
    return instruction_length / rate


def transfer_time(data_size: float, bandwidth: float) -> float:
    """Duration to move `data_size` bytes at `bandwidth` units/ms."""
    if bandwidth <= 0:
        raise ZeroBandwidth(f"bandwidth must be positive, got {bandwidth}")
    return data_size / bandwidth


def _arrival_rng(seed, ub_id: str, tag: str = "") -> random.Random:
    # String seeding keeps streams independent per user base and stable
    # across runs.
    return random.Random(f"{seed}:{tag}{ub_id}")


def _batch_job(ub: UserBase, arrival: float, batch: int) -> Job:
    return Job(
        id=0,  # assigned after merging across user bases
        arrival=arrival,
        origin_ub=ub.id,
        instruction_length=ub.instruction_length * batch,
        data_size=ub.data_size_per_request * batch,
        batch_size=batch,
    )


def generate_arrivals(ub: UserBase, horizon_ms: float, rng_seed) -> list[Job]:
    """Batched request traffic for one user base over the horizon.

    Total requests = users x rate x hours, grouped into batches of
    `request_grouping` (the last batch may be short). Each batch is one
    job; arrival times are uniform over the horizon from the seeded
    generator. Output is sorted by arrival.
    """
    if horizon_ms <= 0:
        return []
    hours = horizon_ms / MS_PER_HOUR
    total_requests = int(ub.user_grouping * ub.requests_per_user_per_hour * hours)
    if total_requests <= 0:
        return []
    rng = _arrival_rng(rng_seed, ub.id)
    jobs = []
    remaining = total_requests
    while remaining > 0:
        batch = min(ub.request_grouping, remaining)
        remaining -= batch
        jobs.append(_batch_job(ub, rng.uniform(0.0, horizon_ms), batch))
    jobs.sort(key=lambda j: j.arrival)
    return jobs


def generate_sweep_arrivals(
    user_bases: list[UserBase], horizon_ms: float, rng_seed, total_jobs: int
) -> list[Job]:
    """Arrival list for one load-sweep level: exactly `total_jobs`
    full-batch jobs over the horizon, split across user bases in
    proportion to their nominal traffic volume (largest-remainder
    rounding)."""
    if total_jobs <= 0 or not user_bases or horizon_ms <= 0:
        return []
    hours = horizon_ms / MS_PER_HOUR
    weights = [
        max(ub.user_grouping * ub.requests_per_user_per_hour * hours, 1.0)
        for ub in user_bases
    ]
    total_w = sum(weights)
    exact = [total_jobs * w / total_w for w in weights]
    counts = [int(x) for x in exact]
    remainders = sorted(
        range(len(user_bases)), key=lambda i: (exact[i] - counts[i], -i), reverse=True
    )
    for i in remainders[: total_jobs - sum(counts)]:
        counts[i] += 1
    jobs = []
    for ub, n in zip(user_bases, counts):
        rng = _arrival_rng(rng_seed, ub.id, tag=f"sweep:{total_jobs}:")
        for _ in range(n):
            jobs.append(_batch_job(ub, rng.uniform(0.0, horizon_ms), ub.request_grouping))
    jobs.sort(key=lambda j: j.arrival)
    return jobs


def admit(job: Job, dc: Datacenter, now: float) -> AdmissionResult:
    """Admission check at arrival. QueueCap rejects when every VM queue
    is at capacity; Deadline always admits here (the engine schedules
    the expiry that may later reject the job)."""
    policy = dc.admission
    if policy.mode == "queue_cap":
        if all(len(vm.queue) >= policy.capacity for vm in dc.vms):
            return AdmissionResult(False, "QueueFull")
    return AdmissionResult(True)
