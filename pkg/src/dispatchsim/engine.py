"""Deterministic discrete-event core: virtual clock, event calendar,
and the run loop all dispatch/balancing policies plug into.

Simultaneous events pop in insertion order, so a run is a pure
function of (scenario, seed).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from . import model
from .metrics import JobTrace, RunMetrics
from .model import (
    COMPLETED,
    QUEUED,
    REJECTED,
    RUNNING,
    AdmissionPolicy,
    Datacenter,
    Job,
    VmInstance,
    admit,
    generate_arrivals,
    generate_sweep_arrivals,
    transfer_time,
)
from .policies import HopTable, migration_decision, rr_next_vm
from .scenario import ScenarioConfig

JOB_ARRIVAL = "JobArrival"
JOB_START = "JobStart"
JOB_FINISH = "JobFinish"
MIGRATION_CHECK = "MigrationCheck"
DEADLINE_EXPIRY = "DeadlineExpiry"

DEFAULT_EVENT_CAP = 10_000_000
DEFAULT_MIGRATION_CADENCE_MS = 10.0


class EngineError(Exception):
    pass


class PastEvent(EngineError):
    pass


class HorizonExceeded(EngineError):
    pass


@dataclass
class Event:
    fire_at: float
    kind: str
    payload: dict = field(default_factory=dict)
    seq: int | None = None


class EventCalendar:
    """Priority queue keyed on (fire_at, insertion seq). The clock is
    the fire time of the last popped event and never decreases."""

    def __init__(self):
        self._heap: list = []
        self._seq = 0
        self.clock = 0.0

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(self, ev: Event):
        if ev.fire_at < self.clock:
            raise PastEvent(
                f"cannot schedule {ev.kind} at t={ev.fire_at} before clock {self.clock}"
            )
        ev.seq = self._seq
        self._seq += 1
        heapq.heappush(self._heap, (ev.fire_at, ev.seq, ev))
        return (ev.fire_at, ev.seq)

    def pop(self) -> Event:
        fire_at, _, ev = heapq.heappop(self._heap)
        self.clock = fire_at
        return ev

    def peek_time(self) -> float:
        return self._heap[0][0]


def schedule_event(calendar: EventCalendar, ev: Event):
    return calendar.schedule(ev)


class Simulation:
    """One deterministic run of a scenario. Build, then call run()."""

    def __init__(
        self,
        config: ScenarioConfig,
        event_cap: int = DEFAULT_EVENT_CAP,
        total_jobs: int | None = None,
    ):
        self.config = config
        self.event_cap = event_cap
        u = config.unit_ms
        pol = config.policy

        self.scheduler = pol.scheduler
        self.migration_on = pol.migration
        self.migration_cap = pol.migration_cap
        self.cadence_ms = (
            pol.migration_cadence * u
            if pol.migration_cadence is not None
            else DEFAULT_MIGRATION_CADENCE_MS
        )
        self.hops = HopTable(default=pol.hop_time * u)
        self.admission = AdmissionPolicy(
            mode=pol.admission_mode,
            deadline=None if pol.deadline is None else pol.deadline * u,
            capacity=pol.queue_capacity,
        )
        self.starvation_threshold_ms = (
            pol.starvation_threshold * u
            if pol.starvation_threshold is not None
            else self.admission.deadline
        )

        self.datacenters: dict[str, Datacenter] = {}
        for spec in config.datacenters:
            vms = [
                VmInstance(
                    id=i,
                    rate=spec.rate,
                    memory=spec.memory,
                    bandwidth=spec.bandwidth_per_ms,
                )
                for i in range(spec.vm_count)
            ]
            self.datacenters[spec.id] = Datacenter(
                id=spec.id, vms=vms, admission=self.admission
            )

        user_bases = [
            model.UserBase(
                id=ub.id,
                requests_per_user_per_hour=ub.requests_per_user_per_hour,
                data_size_per_request=ub.data_size_per_request,
                target_dc=ub.target_dc,
                user_grouping=ub.user_grouping,
                request_grouping=ub.request_grouping,
                instruction_length=ub.instruction_length,
            )
            for ub in config.user_bases
        ]
        self._ub_target = {ub.id: ub.target_dc for ub in user_bases}

        explicit = [
            Job(id=j.id, arrival=j.arrival * u, burst=j.burst * u, data_size=j.data_size)
            for j in config.jobs
        ]
        if total_jobs is not None:
            generated = generate_sweep_arrivals(
                user_bases, config.horizon_ms, config.seed, total_jobs
            )
        else:
            generated = []
            for ub in user_bases:
                generated.extend(generate_arrivals(ub, config.horizon_ms, config.seed))
            generated.sort(key=lambda j: j.arrival)
        next_id = max((j.id for j in explicit), default=0) + 1
        for j in generated:
            j.id = next_id
            next_id += 1

        self.jobs: dict[int, Job] = {j.id: j for j in explicit + generated}
        self._job_vm: dict[int, VmInstance | None] = {}
        self._start_pending: set[tuple[str, int]] = set()
        self._active = len(self.jobs)
        self.migration_log: list[tuple] = []
        self.event_count = 0
        self.calendar = EventCalendar()

    # -- helpers -----------------------------------------------------------

    def _dc_of_job(self, job: Job) -> Datacenter:
        if job.origin_ub is not None:
            return self.datacenters[self._ub_target[job.origin_ub]]
        # explicit trace jobs run on the first declared datacenter
        return next(iter(self.datacenters.values()))

    def _sjf_key(self, job: Job, rate: float):
        return (job.service_demand(rate), job.arrival, job.id)

    def _pick_next(self, vm: VmInstance) -> Job:
        if self.scheduler == "sjf":
            return min(vm.queue, key=lambda j: self._sjf_key(j, vm.rate))
        return vm.queue[0]

    def _residual(self, vm: VmInstance, now: float) -> float:
        return max(0.0, vm.busy_until - now) if vm.running is not None else 0.0

    def _wait_ahead_of(self, vm: VmInstance, job: Job, now: float) -> float:
        """Expected remaining wait for a queued job: residual of the
        running job plus service demands of queue members served
        before it under the active scheduler."""
        w = self._residual(vm, now)
        if self.scheduler == "sjf":
            key = self._sjf_key(job, vm.rate)
            ahead = [j for j in vm.queue if j is not job and self._sjf_key(j, vm.rate) < key]
        else:
            idx = vm.queue.index(job)
            ahead = vm.queue[:idx]
        return w + sum(j.service_demand(vm.rate) for j in ahead)

    def _wait_if_added(self, vm: VmInstance, job: Job, now: float) -> float:
        """Expected wait for `job` were it enqueued on `vm` now; counts
        migrations already in transit toward `vm`."""
        w = self._residual(vm, now)
        if self.scheduler == "sjf":
            key = self._sjf_key(job, vm.rate)
            w += sum(
                j.service_demand(vm.rate)
                for j in vm.queue
                if self._sjf_key(j, vm.rate) < key
            )
        else:
            w += sum(j.service_demand(vm.rate) for j in vm.queue)
        w += sum(j.service_demand(vm.rate) for j in vm.incoming)
        return w

    def _maybe_start(self, dc: Datacenter, vm: VmInstance, now: float):
        key = (dc.id, vm.id)
        if vm.running is None and vm.queue and key not in self._start_pending:
            self._start_pending.add(key)
            self.calendar.schedule(
                Event(now, JOB_START, {"dc": dc.id, "vm": vm.id})
            )

    def _reject(self, job: Job, reason: str, now: float):
        job.state = REJECTED
        job.reject_reason = reason
        job.rejected_at = now
        self._job_vm[job.id] = None
        self._active -= 1

    # -- event handlers ----------------------------------------------------

    def _on_arrival(self, ev: Event, now: float):
        job = self.jobs[ev.payload["job"]]
        if "vm" in ev.payload:  # migration transit completed
            dc = self.datacenters[ev.payload["dc"]]
            vm = dc.vms[ev.payload["vm"]]
            if job in vm.incoming:
                vm.incoming.remove(job)
            if job.state != QUEUED:
                return
            vm.queue.append(job)
            job.vm_history.append(vm.id)
            self._job_vm[job.id] = vm
            self._maybe_start(dc, vm, now)
            return

        dc = self._dc_of_job(job)
        result = admit(job, dc, now)
        if not result.admitted:
            self._reject(job, result.reason, now)
            return
        if self.admission.mode == "deadline":
            self.calendar.schedule(
                Event(now + self.admission.deadline, DEADLINE_EXPIRY, {"job": job.id})
            )
        vm = self._dispatch_vm(dc)
        vm.queue.append(job)
        job.vm_history.append(vm.id)
        self._job_vm[job.id] = vm
        self._maybe_start(dc, vm, now)

    def _dispatch_vm(self, dc: Datacenter) -> VmInstance:
        vm = rr_next_vm(dc)
        if self.admission.mode == "queue_cap":
            # admission guaranteed a free slot somewhere; skip full VMs
            for _ in range(len(dc.vms)):
                if len(vm.queue) < self.admission.capacity:
                    break
                vm = rr_next_vm(dc)
        return vm

    def _on_start(self, ev: Event, now: float):
        dc = self.datacenters[ev.payload["dc"]]
        vm = dc.vms[ev.payload["vm"]]
        self._start_pending.discard((dc.id, vm.id))
        if vm.running is not None or not vm.queue:
            return
        job = self._pick_next(vm)
        vm.queue.remove(job)
        job.state = RUNNING
        job.start_time = now
        service = job.service_demand(vm.rate)
        job.service_time = service
        vm.running = job
        vm.busy_until = now + service
        self.calendar.schedule(
            Event(now + service, JOB_FINISH, {"dc": dc.id, "vm": vm.id, "job": job.id})
        )

    def _on_finish(self, ev: Event, now: float):
        dc = self.datacenters[ev.payload["dc"]]
        vm = dc.vms[ev.payload["vm"]]
        job = self.jobs[ev.payload["job"]]
        vm.running = None
        job.state = COMPLETED
        job.transfer = transfer_time(job.data_size, vm.bandwidth) if job.data_size else 0.0
        job.finish_time = now + job.transfer
        self._active -= 1
        self._maybe_start(dc, vm, now)
        if self.migration_on:
            self._migration_check(dc, now)

    def _on_deadline(self, ev: Event, now: float):
        job = self.jobs[ev.payload["job"]]
        if job.state != QUEUED:
            return
        vm = self._job_vm.get(job.id)
        if vm is not None:
            if job in vm.queue:
                vm.queue.remove(job)
            elif job in vm.incoming:
                vm.incoming.remove(job)
        else:
            # in transit: drop it from whichever incoming list holds it
            for dc in self.datacenters.values():
                for v in dc.vms:
                    if job in v.incoming:
                        v.incoming.remove(job)
        self._reject(job, "DeadlineExpired", now)

    def _on_migration_tick(self, ev: Event, now: float):
        if self._active <= 0:
            return
        for dc in self.datacenters.values():
            self._migration_check(dc, now)
        if len(self.calendar):
            # skip idle gaps so ticks never dominate the event budget
            fire_at = max(now + self.cadence_ms, self.calendar.peek_time())
            self.calendar.schedule(Event(fire_at, MIGRATION_CHECK, {}))

    def _migration_check(self, dc: Datacenter, now: float):
        """Move queued jobs off overloaded VMs when the wait-vs-hop rule
        says a below-mean-queue-length VM is strictly cheaper."""
        if len(dc.vms) < 2:
            return
        for vm in dc.vms:
            for job in list(vm.queue):
                if job.migrations >= self.migration_cap:
                    continue
                mean_qlen = sum(len(v.queue) for v in dc.vms) / len(dc.vms)
                candidates = {
                    v.id: self._wait_if_added(v, job, now)
                    for v in dc.vms
                    if v is not vm and len(v.queue) < mean_qlen
                }
                if not candidates:
                    continue
                current_wait = self._wait_ahead_of(vm, job, now)
                target_id = migration_decision(vm.id, current_wait, candidates, self.hops)
                if target_id is None:
                    continue
                target = dc.vms[target_id]
                vm.queue.remove(job)
                job.migrations += 1
                target.incoming.append(job)
                self._job_vm[job.id] = None
                hop = self.hops.hop_time(vm.id, target_id)
                self.migration_log.append(
                    (job.id, vm.id, target_id, now, current_wait,
                     candidates[target_id] + hop)
                )
                self.calendar.schedule(
                    Event(
                        now + hop,
                        JOB_ARRIVAL,
                        {"job": job.id, "dc": dc.id, "vm": target_id},
                    )
                )

    # -- run loop ----------------------------------------------------------

    _HANDLERS = {
        JOB_ARRIVAL: _on_arrival,
        JOB_START: _on_start,
        JOB_FINISH: _on_finish,
        DEADLINE_EXPIRY: _on_deadline,
        MIGRATION_CHECK: _on_migration_tick,
    }

    def run(self) -> RunMetrics:
        cal = self.calendar
        for job in self.jobs.values():
            cal.schedule(Event(job.arrival, JOB_ARRIVAL, {"job": job.id}))
        if self.migration_on and self.jobs:
            cal.schedule(Event(self.cadence_ms, MIGRATION_CHECK, {}))
        while len(cal):
            ev = cal.pop()
            self.event_count += 1
            if self.event_count > self.event_cap:
                raise HorizonExceeded(
                    f"event count exceeded safety cap {self.event_cap}"
                )
            self._HANDLERS[ev.kind](self, ev, cal.clock)
        return self._collect()

    def _collect(self) -> RunMetrics:
        traces = []
        completed = rejected = 0
        for job in sorted(self.jobs.values(), key=lambda j: j.id):
            if job.state == COMPLETED:
                completed += 1
            elif job.state == REJECTED:
                rejected += 1
            traces.append(
                JobTrace(
                    job_id=job.id,
                    origin_ub=job.origin_ub,
                    arrival=job.arrival,
                    start=job.start_time,
                    finish=job.finish_time,
                    state=job.state,
                    vm_history=list(job.vm_history),
                    batch_size=job.batch_size,
                    processing=job.service_time,
                    transfer=job.transfer,
                    migrations=job.migrations,
                    reject_reason=job.reject_reason,
                    rejected_at=job.rejected_at,
                )
            )
        return RunMetrics(
            scenario_name=self.config.name,
            time_unit=self.config.time_unit,
            seed=self.config.seed,
            horizon_ms=self.config.horizon_ms,
            submitted=len(self.jobs),
            completed=completed,
            rejected=rejected,
            traces=traces,
            event_count=self.event_count,
            migration_log=self.migration_log,
        )


def run(scenario: ScenarioConfig, **kwargs) -> RunMetrics:
    """Execute one deterministic run of a validated scenario."""
    return Simulation(scenario, **kwargs).run()
