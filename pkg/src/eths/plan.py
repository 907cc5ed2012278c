"""Production plans for identical jobs on a flow shop.

A plan is one sorted array of operation start ticks per machine. Because all
jobs are identical the job permutation is irrelevant; feasibility is spacing
(one operation at a time per machine), upstream precedence, machine release
times and the completion deadline. ``BoundaryState`` carries mid-run progress
so the same machinery plans from any tick of the day.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleError, UsageError
from .params import PlantParameters


@dataclass
class BoundaryState:
    """Production status at the window start.

    ``busy_remaining[i] > 0`` means machine i is mid-operation and will be
    busy for that many more ticks (its input was already consumed);
    ``down[i]`` forbids any activity on the first window tick.
    """

    completed: np.ndarray
    busy_remaining: np.ndarray
    down: np.ndarray

    @classmethod
    def fresh(cls, n_machines: int) -> "BoundaryState":
        return cls(np.zeros(n_machines, dtype=int), np.zeros(n_machines, dtype=int),
                   np.zeros(n_machines, dtype=bool))

    def busy_end(self, k0: int) -> np.ndarray:
        """Tick at which each in-progress operation completes (k0 if idle)."""
        rem = self.busy_remaining.astype(int)
        # a down machine resumes its paused operation one tick later
        delay = (self.down & (rem > 0)).astype(int)
        return k0 + rem + delay

    def release(self, k0: int) -> np.ndarray:
        """Earliest tick each machine may begin a new operation."""
        return np.maximum(self.busy_end(k0), k0 + self.down.astype(int))


@dataclass
class Plan:
    """Start ticks of future operations, one sorted array per machine."""

    starts: list[np.ndarray]
    k0: int
    boundary: BoundaryState

    def copy(self) -> "Plan":
        return Plan([s.copy() for s in self.starts], self.k0,
                    BoundaryState(self.boundary.completed.copy(),
                                  self.boundary.busy_remaining.copy(),
                                  self.boundary.down.copy()))

    def n_future(self) -> np.ndarray:
        return np.array([len(s) for s in self.starts], dtype=int)


def future_op_counts(p: PlantParameters, boundary: BoundaryState) -> np.ndarray:
    """Operations still to be started per machine."""
    busy = (boundary.busy_remaining > 0).astype(int)
    counts = p.n_jobs - boundary.completed - busy
    if np.any(counts < 0):
        raise UsageError("boundary records more work than the job count")
    return counts


def _output_times(p: PlantParameters, boundary: BoundaryState, k0: int,
                  machine: int, starts: np.ndarray) -> np.ndarray:
    """Ticks at which machine ``machine`` makes its outputs available."""
    parts = [np.full(boundary.completed[machine], k0, dtype=int)]
    if boundary.busy_remaining[machine] > 0:
        parts.append(np.array([boundary.busy_end(k0)[machine]], dtype=int))
    parts.append(np.asarray(starts, dtype=int) + p.op_time[machine])
    return np.concatenate(parts)


def asap_plan(p: PlantParameters, k0: int, boundary: BoundaryState | None = None) -> Plan:
    """Earliest-possible start ticks for all remaining operations."""
    m = p.n_machines
    boundary = boundary or BoundaryState.fresh(m)
    counts = future_op_counts(p, boundary)
    release = boundary.release(k0)
    starts: list[np.ndarray] = []
    consumed = boundary.completed + (boundary.busy_remaining > 0).astype(int)
    for i in range(m):
        t = np.empty(counts[i], dtype=int)
        if i == 0:
            avail = np.full(counts[i] + consumed[0], k0, dtype=int)
        else:
            avail = _output_times(p, boundary, k0, i - 1, starts[i - 1])
        prev_end = release[i]
        for j in range(counts[i]):
            idx = consumed[i] + j
            if idx >= len(avail):
                raise InfeasibleError(
                    f"machine {i + 1} needs input {idx + 1} but upstream only "
                    f"produces {len(avail)}")
            t[j] = max(prev_end, int(avail[idx]))
            prev_end = t[j] + p.op_time[i]
        starts.append(t)
    return Plan(starts, k0, boundary)


def completion_tick(p: PlantParameters, plan: Plan) -> int:
    """Tick by which the final machine has finished all its operations."""
    last = p.n_machines - 1
    if len(plan.starts[last]) == 0:
        return plan.k0 if plan.boundary.busy_remaining[last] == 0 \
            else int(plan.boundary.busy_end(plan.k0)[last])
    return int(plan.starts[last][-1] + p.op_time[last])


def alap_limits(p: PlantParameters, plan: Plan, deadline: int) -> list[np.ndarray]:
    """Latest admissible start per operation for the given deadline."""
    m = p.n_machines
    boundary = plan.boundary
    consumed = boundary.completed + (boundary.busy_remaining > 0).astype(int)
    limits: list[np.ndarray] = [None] * m
    for i in range(m - 1, -1, -1):
        n = len(plan.starts[i])
        lim = np.empty(n, dtype=int)
        for j in range(n - 1, -1, -1):
            latest = deadline - p.op_time[i] if i == m - 1 else np.iinfo(np.int32).max
            if j + 1 < n:
                latest = min(latest, lim[j + 1] - p.op_time[i])
            if i + 1 < m:
                # downstream op that consumes this op's output
                out_idx = consumed[i] + j
                jd = out_idx - consumed[i + 1]
                if 0 <= jd < len(limits[i + 1]):
                    latest = min(latest, limits[i + 1][jd] - p.op_time[i])
            lim[j] = latest
        limits[i] = lim
    return limits


def alap_plan(p: PlantParameters, k0: int, deadline: int,
              boundary: BoundaryState | None = None) -> Plan:
    """Latest-possible plan meeting the deadline; raises if none exists."""
    base = asap_plan(p, k0, boundary)
    limits = alap_limits(p, base, deadline)
    starts = []
    for i in range(p.n_machines):
        if len(base.starts[i]) and np.any(limits[i] < base.starts[i]):
            j = int(np.argmax(limits[i] < base.starts[i]))
            raise InfeasibleError(
                f"operation {j + 1} on machine {i + 1} cannot meet deadline "
                f"{deadline}: earliest start {base.starts[i][j]}, latest {limits[i][j]}")
        starts.append(limits[i].copy())
    # pulling every start to its limit keeps spacing valid (limits are spaced)
    return Plan(starts, k0, base.boundary)


def repair_plan(p: PlantParameters, plan: Plan) -> Plan:
    """Push starts right until spacing, precedence and releases all hold."""
    m = p.n_machines
    boundary = plan.boundary
    release = boundary.release(plan.k0)
    consumed = boundary.completed + (boundary.busy_remaining > 0).astype(int)
    out = plan.copy()
    for i in range(m):
        avail = (np.full(len(out.starts[0]) + consumed[0], plan.k0, dtype=int)
                 if i == 0 else _output_times(p, boundary, plan.k0, i - 1, out.starts[i - 1]))
        prev_end = release[i]
        t = out.starts[i]
        for j in range(len(t)):
            t[j] = max(int(t[j]), prev_end, int(avail[consumed[i] + j]))
            prev_end = t[j] + p.op_time[i]
    return out


def plan_is_valid(p: PlantParameters, plan: Plan, deadline: int) -> bool:
    rep = repair_plan(p, plan)
    if completion_tick(p, rep) > deadline:
        return False
    return all(np.array_equal(a, b) for a, b in zip(rep.starts, plan.starts))


def load_profile(p: PlantParameters, plan: Plan, k1: int) -> np.ndarray:
    """Electric load in kW per tick over [plan.k0, k1) implied by the plan."""
    k0 = plan.k0
    T = k1 - k0
    diff = np.zeros(T + 1)
    busy_end = plan.boundary.busy_end(k0)
    for i in range(p.n_machines):
        power = p.machine_power[i]
        if plan.boundary.busy_remaining[i] > 0:
            a = k0 + (1 if plan.boundary.down[i] else 0)
            b = min(busy_end[i], k1)
            if b > a:
                diff[a - k0] += power
                diff[b - k0] -= power
        for s in plan.starts[i]:
            a, b = max(s, k0), min(s + p.op_time[i], k1)
            if b > a:
                diff[a - k0] += power
                diff[b - k0] -= power
    return np.cumsum(diff[:-1])


@dataclass
class Trajectory:
    """All ten state families over a window of ticks [k0, k0+T)."""

    k0: int
    pv: np.ndarray                 # (T,)
    machine_on: np.ndarray         # (m, T) 0/1
    op_start: np.ndarray           # (m, T) 0/1
    ops_finished: np.ndarray       # (m, T+1), counts at tick boundaries
    turbine: np.ndarray            # (T,)
    charge: np.ndarray
    discharge: np.ndarray
    soc: np.ndarray                # (T+1,)
    grid_buy: np.ndarray
    grid_sell: np.ndarray

    @property
    def T(self) -> int:
        return len(self.pv)

    @property
    def n_machines(self) -> int:
        return self.machine_on.shape[0]


def expand_plan(p: PlantParameters, plan: Plan, k1: int, pv: np.ndarray,
                dispatch) -> Trajectory:
    """Materialize the plan plus a dispatch result into a full trajectory."""
    k0 = plan.k0
    T = k1 - k0
    m = p.n_machines
    machine_on = np.zeros((m, T), dtype=np.int8)
    op_start = np.zeros((m, T), dtype=np.int8)
    ops_finished = np.zeros((m, T + 1), dtype=int)
    busy_end = plan.boundary.busy_end(k0)
    for i in range(m):
        base = plan.boundary.completed[i]
        ends = []
        if plan.boundary.busy_remaining[i] > 0:
            a = k0 + (1 if plan.boundary.down[i] else 0)
            machine_on[i, a - k0:min(busy_end[i], k1) - k0] = 1
            ends.append(busy_end[i])
        for s in plan.starts[i]:
            if k0 <= s < k1:
                op_start[i, s - k0] = 1
            machine_on[i, max(s, k0) - k0:min(s + p.op_time[i], k1) - k0] = 1
            ends.append(s + p.op_time[i])
        ends = np.asarray(ends, dtype=int)
        for t in range(T + 1):
            ops_finished[i, t] = base + int(np.sum(ends <= k0 + t))
    return Trajectory(k0=k0, pv=np.asarray(pv, dtype=float),
                      machine_on=machine_on, op_start=op_start,
                      ops_finished=ops_finished,
                      turbine=dispatch.turbine, charge=dispatch.charge,
                      discharge=dispatch.discharge, soc=dispatch.soc,
                      grid_buy=dispatch.grid_buy, grid_sell=dispatch.grid_sell)
