"""Ground-truth discrete-time plant.

State families per tick:
  x1 pv power | x2 machine on/off (10) | x3 operation start (10)
  x4 operations finished (10) | x5 turbine kW | x6/x7 ESS charge/discharge kW
  x8 SOC kWh | x9 grid purchase kW | x10 grid feed-in kW

The plant applies stochastic breakdowns to commanded machine states, executes
operation starts subject to machine availability and upstream precedence, and
accounts energy cost per tick.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundViolationError, UsageError, ValidationError
from .params import PlantParameters
from .pv import PvTrace


@dataclass
class PlantState:
    """All ten state families at one tick."""

    pv_power: float = 0.0
    machine_on: np.ndarray = None          # bool per machine
    op_start: np.ndarray = None            # bool per machine
    ops_finished: np.ndarray = None        # int per machine
    turbine_power: float = 0.0
    ess_charge: float = 0.0
    ess_discharge: float = 0.0
    soc: float = 0.0
    grid_buy: float = 0.0
    grid_sell: float = 0.0

    @classmethod
    def zero(cls, n_machines: int, soc: float = 0.0) -> "PlantState":
        return cls(machine_on=np.zeros(n_machines, dtype=bool),
                   op_start=np.zeros(n_machines, dtype=bool),
                   ops_finished=np.zeros(n_machines, dtype=int),
                   soc=soc)


@dataclass
class MachineHealth:
    """Breakdown bookkeeping per machine.

    ``t_on`` is accumulated operating ticks since the last breakdown,
    ``t_bd`` accumulated ticks of the current outage (0 while up).
    """

    up: np.ndarray
    t_on: np.ndarray
    t_bd: np.ndarray

    @classmethod
    def fresh(cls, n_machines: int) -> "MachineHealth":
        return cls(up=np.ones(n_machines, dtype=bool),
                   t_on=np.zeros(n_machines, dtype=int),
                   t_bd=np.zeros(n_machines, dtype=int))

    def copy(self) -> "MachineHealth":
        return MachineHealth(self.up.copy(), self.t_on.copy(), self.t_bd.copy())


# ---------------------------------------------------------------------------
# Pure per-tick operations
# ---------------------------------------------------------------------------

def soc_step(soc: float, charge: float, discharge: float, p: PlantParameters,
             tick: int | None = None) -> float:
    """Next SOC after one tick of charging/discharging.

    soc' = soc + eff * charge * dt - discharge * dt / eff. Raises when the
    result leaves the DoD band.
    """
    if charge < 0 or discharge < 0:
        raise ValidationError("charge and discharge must be >= 0")
    nxt = (soc + p.ess_efficiency * charge * p.dt_hours
           - discharge * p.dt_hours / p.ess_efficiency)
    tol = 1e-9
    if nxt < p.soc_min - tol:
        raise BoundViolationError(
            f"soc {nxt:.6f} kWh below lower bound {p.soc_min:.6f} kWh", tick)
    if nxt > p.soc_max + tol:
        raise BoundViolationError(
            f"soc {nxt:.6f} kWh above upper bound {p.soc_max:.6f} kWh", tick)
    return min(max(nxt, p.soc_min), p.soc_max)


def breakdown_probability(t_on: np.ndarray | float, p: PlantParameters):
    """Per-tick failure probability of a running machine, 1 - exp(-rate * t_on)."""
    return 1.0 - np.exp(-p.breakdown_rate * np.asarray(t_on, dtype=float))


def recovery_probability(t_bd: np.ndarray | float, p: PlantParameters):
    """Per-tick recovery probability of a broken machine, 1 - exp(-rate * t_bd)."""
    return 1.0 - np.exp(-p.repair_rate * np.asarray(t_bd, dtype=float))


def breakdown_step(health: MachineHealth, rng_draw: np.ndarray, p: PlantParameters,
                   running: np.ndarray | None = None) -> MachineHealth:
    """Advance health one tick given one uniform(0,1) draw per machine.

    Broken machines recover with probability 1-exp(-repair_rate*t_bd); running
    machines fail with probability 1-exp(-breakdown_rate*t_on) evaluated on
    the uptime accumulated so far, so a freshly repaired machine cannot fail
    on its first tick. ``running`` masks which up machines operate this tick
    (all of them by default); idle machines accumulate no uptime.
    """
    rng_draw = np.asarray(rng_draw, dtype=float)
    h = health.copy()
    was_down = ~h.up
    recovered = was_down & (rng_draw < recovery_probability(h.t_bd, p))
    h.up[recovered] = True
    h.t_bd[recovered] = 0

    if running is None:
        running = h.up.copy()
    else:
        running = np.asarray(running, dtype=bool) & h.up
    failed = running & (rng_draw < breakdown_probability(h.t_on, p))
    h.up[failed] = False
    h.t_on[failed] = 0
    ran = running & ~failed
    h.t_on[ran] += 1
    h.t_bd[~h.up] += 1
    return h


def power_balance_residual(s: PlantState, p: PlantParameters) -> float:
    """Supply minus demand in kW; a feasible tick has residual zero.

    Supply: pv + grid purchase + ESS discharge + turbine.
    Demand: machine load + grid feed-in + ESS charge.
    """
    load = float(np.dot(np.asarray(s.machine_on, dtype=float),
                        np.asarray(p.machine_power)))
    supply = s.pv_power + s.grid_buy + s.ess_discharge + s.turbine_power
    demand = load + s.grid_sell + s.ess_charge
    return supply - demand


def step_cost(s: PlantState, k: int, p: PlantParameters) -> float:
    """Operating cost of one tick, $.

    Grid purchases at the tick price and turbine output at the gas price are
    converted from kW to kWh via dt; feed-in earns the tariff; the ESS incurs
    its fixed per-tick cost plus throughput degradation.
    """
    if not 0 <= k < p.horizon:
        raise UsageError(f"tick {k} outside horizon [0, {p.horizon})")
    dt = p.dt_hours
    return (s.grid_buy * p.buy_price[k] * dt
            - s.grid_sell * p.feed_in_tariff * dt
            + p.ess_fixed_cost
            + (s.ess_charge + s.ess_discharge) * p.ess_degradation_cost * dt
            + s.turbine_power * p.gas_price * dt)


# ---------------------------------------------------------------------------
# Execution engine
# ---------------------------------------------------------------------------

@dataclass
class MachineSnapshot:
    """Production progress at the start of a tick, used to build problems."""

    completed: np.ndarray        # ops finished per machine
    started: np.ndarray          # ops started (incl. in progress) per machine
    busy_remaining: np.ndarray   # remaining ticks of the running op (0 = idle)
    up: np.ndarray
    t_on: np.ndarray
    t_bd: np.ndarray
    cumulative_downtime: int


class Plant:
    """Executes machine commands against stochastic breakdowns.

    ``defer_blocked_starts`` selects the closed-loop behaviour where a start
    command that cannot fire on its tick (machine down, busy or starved)
    stays queued and fires as soon as possible. Open-loop execution drops it.
    ``breakdown_policy`` is "resume" (an interrupted operation keeps its
    progress and continues after repair) or "restart" (progress is lost and
    the operation re-runs from scratch).
    """

    def __init__(self, params: PlantParameters, pv: PvTrace, draws: np.ndarray,
                 defer_blocked_starts: bool, breakdown_policy: str = "resume"):
        if breakdown_policy not in ("resume", "restart"):
            raise ValidationError(f"unknown breakdown policy {breakdown_policy!r}")
        if draws.shape != (params.horizon, params.n_machines):
            raise UsageError("draw matrix must be horizon x n_machines")
        self.p = params
        self.pv = pv
        self.draws = draws
        self.defer = defer_blocked_starts
        self.policy = breakdown_policy
        m = params.n_machines
        self.health = MachineHealth.fresh(m)
        self.completed = np.zeros(m, dtype=int)
        self.started = np.zeros(m, dtype=int)
        self.busy_remaining = np.zeros(m, dtype=int)
        self.pending = np.zeros(m, dtype=int)   # queued start commands
        self.cumulative_downtime = 0
        self.soc = params.soc_half
        self.k = 0

    # -- machine side -----------------------------------------------------

    def snapshot(self) -> MachineSnapshot:
        return MachineSnapshot(self.completed.copy(), self.started.copy(),
                               self.busy_remaining.copy(), self.health.up.copy(),
                               self.health.t_on.copy(), self.health.t_bd.copy(),
                               self.cumulative_downtime)

    def _input_available(self, i: int) -> bool:
        if i == 0:
            return self.started[0] < self.p.n_jobs
        return self.completed[i - 1] > self.started[i]

    def resolve_machines(self, start_cmds: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Realize machine states for tick ``k`` given start commands.

        Returns (running mask, fired-start mask). Mutates health, progress and
        the pending queue; energy flows are committed separately.
        """
        p = self.p
        m = p.n_machines
        k = self.k
        op_time = np.asarray(p.op_time, dtype=int)
        draws = self.draws[k]
        h = self.health

        # Recovery draws for machines that are down entering this tick.
        was_down = ~h.up
        recovered = was_down & (draws < recovery_probability(h.t_bd, p))
        h.up[recovered] = True
        h.t_bd[recovered] = 0

        if self.defer:
            self.pending += np.asarray(start_cmds, dtype=bool).astype(int)

        fired = np.zeros(m, dtype=bool)
        # Fire starts in machine order so upstream completions from previous
        # ticks are visible downstream within the same pass.
        for i in range(m):
            idle = self.busy_remaining[i] == 0
            wants = self.pending[i] > 0 if self.defer else bool(start_cmds[i])
            if not (idle and wants and h.up[i] and self._input_available(i)):
                continue
            fired[i] = True
            self.started[i] += 1
            self.busy_remaining[i] = op_time[i]
            if self.defer:
                self.pending[i] -= 1

        would_run = h.up & (self.busy_remaining > 0)
        failed = would_run & (draws < breakdown_probability(h.t_on, p))
        h.up[failed] = False
        h.t_on[failed] = 0
        if self.policy == "restart":
            self.busy_remaining[failed] = op_time[failed]

        running = would_run & ~failed
        h.t_on[running] += 1
        self.busy_remaining[running] -= 1
        finished = running & (self.busy_remaining == 0)
        self.completed[finished] += 1

        down_now = ~h.up
        h.t_bd[down_now] += 1
        self.cumulative_downtime += int(down_now.sum())
        return running, fired

    # -- energy side --------------------------------------------------------

    def realized_load(self, running: np.ndarray) -> float:
        return float(np.dot(running.astype(float), np.asarray(self.p.machine_power)))

    def commit_energy(self, running: np.ndarray, fired: np.ndarray,
                      turbine: float, charge: float, discharge: float,
                      grid_buy: float, grid_sell: float,
                      close_with_grid: bool = False) -> PlantState:
        """Apply the tick's energy flows; returns the realized state.

        With ``close_with_grid`` the grid acts as the physical slack bus: the
        given buy/sell values are discarded and the meter absorbs whatever
        imbalance the remaining flows leave (open-loop execution).
        """
        p = self.p
        k = self.k
        pv_obs = self.pv.observed[k]
        if close_with_grid:
            load = self.realized_load(running)
            net = load + charge - pv_obs - discharge - turbine
            grid_buy, grid_sell = (net, 0.0) if net >= 0 else (0.0, -net)
        state = PlantState(pv_power=pv_obs, machine_on=running.copy(),
                           op_start=fired.copy(), ops_finished=self.completed.copy(),
                           turbine_power=turbine, ess_charge=charge,
                           ess_discharge=discharge, soc=self.soc,
                           grid_buy=grid_buy, grid_sell=grid_sell)
        residual = power_balance_residual(state, p)
        if abs(residual) > 1e-6:
            raise UsageError(f"tick {k}: committed flows violate power balance "
                             f"by {residual:.3e} kW")
        self.soc = soc_step(self.soc, charge, discharge, p, tick=k)
        self.k += 1
        return state
